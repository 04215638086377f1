//! Density and distribution function by FFT inversion of a characteristic exponent.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::charfn::{mixedts_log_cf, CfGridSpec, ComplexValue};
use crate::error::{Error, Result};
use crate::moments::mixedts_moments;
use crate::params::{MixedTsParams, Validate};

/// Tabulated density on `x_k = x0 + k dx`, `k = 0..n`.
#[derive(Debug, Clone)]
pub struct DensityGrid {
    pub x0: f64,
    pub dx: f64,
    /// Density ordinates after clipping negative ripple to zero.
    pub values: Vec<f64>,
    /// Density derivative at each ordinate, zero where the density was clipped.
    pub slopes: Vec<f64>,
    /// Distribution function at each ordinate, normalized to end at 1.
    pub cumulative: Vec<f64>,
    /// Integral of the clipped negative ripple.
    pub clipped_mass: f64,
    /// Integral of `values` before normalization.
    pub mass: f64,
}

const HERMITIAN_PROBES: [f64; 8] = [0.003, 0.01, 0.03, 0.07, 0.15, 0.3, 0.6, 0.95];

fn check_hermitian<F>(log_cf: &F, u_max: f64) -> Result<()>
where
    F: Fn(f64) -> Result<ComplexValue>,
{
    for f in HERMITIAN_PROBES {
        let u = f * u_max;
        let (p, m) = (log_cf(u)?, log_cf(-u)?);
        let (p, m) = (p.exp(), m.exp());
        if (m - p.conj()).norm() > 1e-9 * (1.0 + p.norm()) {
            return Err(Error::NonHermitianCf(u));
        }
    }
    Ok(())
}

/// Invert `exp(log_cf)` on the grid `spec`.
///
/// The cf is evaluated on `u >= 0` only and reflected by conjugation, after
/// checking Hermitian symmetry at a few probe frequencies. Fails with
/// [`Error::GridTooCoarse`] when the tabulated density integrates to a value
/// more than `1e-2` away from one.
pub fn invert_cf<F>(log_cf: F, spec: &CfGridSpec) -> Result<DensityGrid>
where
    F: Fn(f64) -> Result<ComplexValue> + Sync,
{
    let spec = spec.checked()?;
    check_hermitian(&log_cf, spec.u_max)?;
    let n = spec.n;
    let half = n / 2;
    let du = spec.du();
    let dx = spec.dx();
    let x0 = spec.center - half as f64 * dx;

    // phi(k du) for k = 0..=n/2
    let phi: Vec<Complex64> = (0..=half)
        .into_par_iter()
        .map(|k| log_cf(k as f64 * du).map(Complex64::exp))
        .collect::<Result<_>>()?;

    let mut buf: Vec<Complex64> = Vec::with_capacity(n);
    let mut dbuf: Vec<Complex64> = Vec::with_capacity(n);
    for j in 0..n {
        let shift = j as isize - half as isize;
        let v = if shift >= 0 { phi[shift as usize] } else { phi[(-shift) as usize].conj() };
        let u = shift as f64 * du;
        let z = v * Complex64::from_polar(1.0, -u * x0);
        buf.push(z);
        dbuf.push(z * Complex64::new(0.0, -u));
    }
    let fft = FftPlanner::new().plan_fft_forward(n);
    fft.process(&mut buf);
    fft.process(&mut dbuf);

    let scale = du / (2.0 * PI);
    let mut values = Vec::with_capacity(n);
    let mut slopes = Vec::with_capacity(n);
    let mut clipped = 0.0;
    let mut worst: f64 = 0.0;
    for (k, (z, dz)) in buf.iter().zip(&dbuf).enumerate() {
        let sign = if k % 2 == 0 { scale } else { -scale };
        let (v, d) = (sign * z.re, sign * dz.re);
        if !(v.is_finite() && d.is_finite()) {
            return Err(Error::Evaluation("inverted density"));
        }
        if v < 0.0 {
            clipped -= v * dx;
            worst = worst.min(v);
            values.push(0.0);
            slopes.push(0.0);
        } else {
            values.push(v);
            slopes.push(d);
        }
    }
    if worst < -1e-6 {
        log::warn!("density ripple down to {worst:.3e} clipped (mass {clipped:.3e})");
    }

    // cubic Hermite cells: trapezoid plus the endpoint-slope correction
    let mut cumulative = Vec::with_capacity(n);
    let mut acc = 0.0;
    cumulative.push(0.0);
    for k in 1..n {
        let cell = 0.5 * dx * (values[k - 1] + values[k]) + dx * dx / 12.0 * (slopes[k - 1] - slopes[k]);
        acc += cell.max(0.0);
        cumulative.push(acc);
    }
    let mass = acc;
    if !((mass - 1.0).abs() <= 1e-2) {
        return Err(Error::GridTooCoarse { mass });
    }
    for c in &mut cumulative {
        *c /= mass;
    }
    Ok(DensityGrid { x0, dx, values, slopes, cumulative, clipped_mass: clipped, mass })
}

/// Grid sized from the closed-form moments of `p`, with at least `n_min` points.
pub fn mixedts_grid_spec(p: &MixedTsParams, n_min: usize) -> Result<CfGridSpec> {
    let p = p.validate()?;
    let m = mixedts_moments(&p);
    CfGridSpec::for_moments(|u| mixedts_log_cf(u, &p), &m, n_min)
}

/// MixedTS density on an automatically sized grid.
pub fn mixedts_density(p: &MixedTsParams) -> Result<DensityGrid> {
    let spec = mixedts_grid_spec(p, CfGridSpec::DEFAULT_N)?;
    mixedts_density_on(p, &spec)
}

pub fn mixedts_density_on(p: &MixedTsParams, spec: &CfGridSpec) -> Result<DensityGrid> {
    let p = p.validate()?;
    invert_cf(|u| mixedts_log_cf(u, &p), spec)
}

impl DensityGrid {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn x(&self, k: usize) -> f64 {
        self.x0 + k as f64 * self.dx
    }

    pub fn xs(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|k| self.x(k))
    }

    pub fn x_max(&self) -> f64 {
        self.x(self.len() - 1)
    }

    fn locate(&self, x: f64) -> Option<(usize, f64)> {
        let t = (x - self.x0) / self.dx;
        if !(t >= 0.0) || t > (self.len() - 1) as f64 {
            return None;
        }
        let k = (t.floor() as usize).min(self.len() - 2);
        Some((k, t - k as f64))
    }

    /// Linearly interpolated density, zero off the grid.
    pub fn pdf(&self, x: f64) -> f64 {
        match self.locate(x) {
            Some((k, w)) => self.values[k] * (1.0 - w) + self.values[k + 1] * w,
            None => 0.0,
        }
    }

    /// Integral over the first `w` (in cell units) of cell `k`, unnormalized.
    fn cell_partial(&self, k: usize, w: f64) -> f64 {
        let (f0, f1) = (self.values[k], self.values[k + 1]);
        let (d0, d1) = (self.slopes[k] * self.dx, self.slopes[k + 1] * self.dx);
        // antiderivatives of the cubic Hermite basis on [0, w]
        let w2 = w * w;
        let w3 = w2 * w;
        let w4 = w3 * w;
        let h00 = w - w3 + 0.5 * w4;
        let h10 = 0.5 * w2 - 2.0 / 3.0 * w3 + 0.25 * w4;
        let h01 = w3 - 0.5 * w4;
        let h11 = -w3 / 3.0 + 0.25 * w4;
        self.dx * (f0 * h00 + d0 * h10 + f1 * h01 + d1 * h11)
    }

    /// Distribution function, exact for the cubic Hermite interpolant that
    /// built `cumulative`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        match self.locate(x) {
            Some((k, w)) => {
                let part = self.cell_partial(k, w).max(0.0) / self.mass;
                (self.cumulative[k] + part).min(self.cumulative[k + 1])
            }
            None if x < self.x0 => 0.0,
            None => 1.0,
        }
    }

    /// Inverse of [`DensityGrid::cdf`] for `q` in `(0, 1)`.
    pub fn quantile(&self, q: f64) -> Result<f64> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::OutOfRange(q, "0 < q < 1"));
        }
        let k = self.cumulative.partition_point(|&c| c < q).clamp(1, self.len() - 1) - 1;
        let target = (q - self.cumulative[k]) * self.mass;
        // bisection on the monotone within-cell integral
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.cell_partial(k, mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(self.x(k) + 0.5 * (lo + hi) * self.dx)
    }

    /// Probability of each interval `[edges[j], edges[j+1])`.
    pub fn interval_probabilities(&self, edges: &[f64]) -> Vec<f64> {
        let c: Vec<f64> = edges.iter().map(|&e| self.cdf(e)).collect();
        c.windows(2).map(|w| (w[1] - w[0]).max(0.0)).collect()
    }

    /// Mean, variance, skewness and kurtosis of the tabulated density.
    pub fn moments(&self) -> crate::moments::MomentSet {
        let w: Vec<f64> = self.values.iter().map(|v| v * self.dx / self.mass).collect();
        let mean: f64 = self.xs().zip(&w).map(|(x, w)| x * w).sum();
        let mut m = [0.0; 3];
        for (x, w) in self.xs().zip(&w) {
            let d = x - mean;
            m[0] += w * d * d;
            m[1] += w * d * d * d;
            m[2] += w * d * d * d * d;
        }
        crate::moments::MomentSet {
            mean,
            variance: m[0],
            skewness: m[1] / m[0].powf(1.5),
            kurtosis: m[2] / (m[0] * m[0]),
        }
    }

    /// Drop the leading and trailing points whose distribution function is
    /// within `eps` of 0 or 1, keeping one point of margin on each side.
    pub fn trimmed(&self, eps: f64) -> DensityGrid {
        let n = self.len();
        let lo = self.cumulative.partition_point(|&c| c <= eps).saturating_sub(1);
        let hi = (self.cumulative.partition_point(|&c| c < 1.0 - eps) + 1).min(n - 1);
        if hi <= lo + 1 {
            return self.clone();
        }
        DensityGrid {
            x0: self.x(lo),
            dx: self.dx,
            values: self.values[lo..=hi].to_vec(),
            slopes: self.slopes[lo..=hi].to_vec(),
            cumulative: self.cumulative[lo..=hi].to_vec(),
            clipped_mass: self.clipped_mass,
            mass: self.mass,
        }
    }

    /// Write `x,pdf,cdf` rows, keeping only points with `lo <= x <= hi`.
    pub fn write_csv<W: Write>(&self, mut out: W, lo: f64, hi: f64) -> Result<()> {
        writeln!(out, "x,pdf,cdf")?;
        for (k, x) in self.xs().enumerate() {
            if x >= lo && x <= hi {
                writeln!(out, "{x},{},{}", self.values[k], self.cumulative[k])?;
            }
        }
        Ok(())
    }
}
