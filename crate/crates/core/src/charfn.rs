//! Characteristic exponents `ln E[exp(iuX)]` for CTS, stdCTS, the scaled stdCTS
//! family and the MixedTS law.
//!
//! Every tempered term `(lambda ∓ iu)^alpha - lambda^alpha` is evaluated together
//! with its linear drift compensator through [`tempered_kernel`], which is an
//! exact rearrangement of the closed forms that avoids cancellation near the
//! origin. Complex powers use the principal branch; `lambda ∓ iu` has positive
//! real part so the branch is never ambiguous.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::moments::MomentSet;
use crate::params::{CtsParams, GammaMixParams, MixedTsParams, StdCtsParams};
use crate::special::{gamma, log1p, tempered_kernel};

pub type ComplexValue = Complex64;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn finite(z: Complex64, what: &'static str) -> Result<Complex64> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(z)
    } else {
        Err(Error::Evaluation(what))
    }
}

/// Frequency grid for Fourier inversion: `n` points spanning `[-u_max, u_max)`,
/// with the abscissa grid centred on `center`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CfGridSpec {
    pub u_max: f64,
    pub n: usize,
    pub center: f64,
}

impl CfGridSpec {
    pub const DEFAULT_N: usize = 1 << 14;

    pub fn new(u_max: f64, n: usize) -> Result<Self> {
        Self { u_max, n, center: 0.0 }.checked()
    }

    pub fn centered(mut self, center: f64) -> Self {
        self.center = center;
        self
    }

    pub fn checked(self) -> Result<Self> {
        if self.n < 2 || !self.n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!("n = {} is not a power of two >= 2", self.n)));
        }
        if !(self.u_max > 0.0 && self.u_max.is_finite()) {
            return Err(Error::InvalidGrid(format!("u_max = {} must be positive", self.u_max)));
        }
        if !self.center.is_finite() {
            return Err(Error::InvalidGrid("center must be finite".into()));
        }
        Ok(self)
    }

    pub fn du(&self) -> f64 {
        2.0 * self.u_max / self.n as f64
    }

    /// Abscissa spacing implied by the frequency grid, `pi / u_max`.
    pub fn dx(&self) -> f64 {
        PI / self.u_max
    }

    pub fn half_width(&self) -> f64 {
        0.5 * self.n as f64 * self.dx()
    }

    /// Pick `u_max` for a law centred at `center` with spread `scale` whose
    /// mass lies (to double precision) within `center ± half_width`.
    ///
    /// `u_max` doubles from 20 until `|cf(u_max)| < 1e-12`, is raised so the
    /// abscissa spacing resolves `scale / 32`, and is finally capped so that the
    /// `n`-point grid still covers `± half_width`.
    pub fn auto<F>(log_cf: F, center: f64, scale: f64, half_width: f64, n: usize) -> Result<Self>
    where
        F: Fn(f64) -> Result<Complex64>,
    {
        const CAP: f64 = 20.0 * 4096.0;
        let mut u = 20.0;
        while u < CAP {
            let v = log_cf(u)?;
            if v.re < (1e-12f64).ln() {
                break;
            }
            u *= 2.0;
        }
        let resolution = 32.0 * PI / scale;
        let coverage = n as f64 * PI / (2.0 * half_width);
        let u_max = u.max(resolution).min(coverage);
        Self { u_max, n, center }.checked()
    }

    /// Grid for a law with known moments. The half-width is the Markov bound
    /// `(m4 / 1e-6)^(1/4)` on the fourth central moment, `n` is the smallest
    /// power of two (at least `n_min`, at most 2^18) that resolves `std / 32`
    /// across it, and `u_max` follows [`CfGridSpec::auto`].
    pub fn for_moments<F>(log_cf: F, m: &MomentSet, n_min: usize) -> Result<Self>
    where
        F: Fn(f64) -> Result<Complex64>,
    {
        const MAX_N: usize = 1 << 18;
        let std = m.std_dev();
        if !(std > 0.0 && std.is_finite() && m.kurtosis.is_finite()) {
            return Err(Error::InvalidGrid(format!("cannot size a grid from moments {m:?}")));
        }
        let m4 = m.kurtosis * m.variance * m.variance;
        let half_width = (m4 / 1e-6).powf(0.25).max(8.0 * std);
        let needed = (64.0 * half_width / std).ceil() as usize;
        let n = needed.next_power_of_two().clamp(n_min.max(2).next_power_of_two(), MAX_N);
        Self::auto(log_cf, m.mean, std, half_width, n)
    }
}

/// CTS exponent
/// `iu mu + C+ Gamma(-a)((l+ - iu)^a - l+^a) + C- Gamma(-a)((l- + iu)^a - l-^a)
///  - iu Gamma(1-a)(C+ l+^(a-1) - C- l-^(a-1))`.
pub fn cts_log_cf(u: f64, p: &CtsParams) -> Result<ComplexValue> {
    let a = p.alpha;
    // Gamma(-a) a (a-1) = Gamma(2-a)
    let g = gamma(2.0 - a);
    let plus = tempered_kernel(Complex64::new(0.0, -u / p.lambda_plus), a) * (p.c_plus * p.lambda_plus.powf(a));
    let minus = tempered_kernel(Complex64::new(0.0, u / p.lambda_minus), a) * (p.c_minus * p.lambda_minus.powf(a));
    finite(I * (u * p.mu) + (plus + minus) * g, "CTS exponent")
}

/// stdCTS exponent `L_stdCTS(u; alpha, lambda_plus, lambda_minus)`.
pub fn stdcts_log_cf(u: f64, p: &StdCtsParams) -> Result<ComplexValue> {
    let a = p.alpha;
    let plus = tempered_kernel(Complex64::new(0.0, -u / p.lambda_plus), a) * p.lambda_plus.powf(a);
    let minus = tempered_kernel(Complex64::new(0.0, u / p.lambda_minus), a) * p.lambda_minus.powf(a);
    finite((plus + minus) / p.tempering_norm(), "stdCTS exponent")
}

/// Exponent of `Y = sqrt(h) X` with `X ~ stdCTS(alpha, lambda_plus sqrt(h), lambda_minus sqrt(h))`,
/// which equals `h * L_stdCTS(u; alpha, lambda_plus, lambda_minus)`.
pub fn scaled_stdcts_log_cf(u: f64, p: &StdCtsParams, h: f64) -> Result<ComplexValue> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::OutOfRange(h, "h > 0"));
    }
    Ok(stdcts_log_cf(u, p)? * h)
}

/// The scaled exponent with the drift term written without its `1/(alpha - 1)`
/// factor. Kept only to compare against [`scaled_stdcts_log_cf`]; it is not
/// the exponent of any standardized variate unless `alpha = 2`.
pub fn scaled_stdcts_log_cf_unnormalized_drift(u: f64, p: &StdCtsParams, h: f64) -> Result<ComplexValue> {
    let a = p.alpha;
    let norm = p.tempering_norm();
    let lp = Complex64::new(p.lambda_plus, -u);
    let lm = Complex64::new(p.lambda_minus, u);
    let bracket = (lp.powf(a) - p.lambda_plus.powf(a) + lm.powf(a) - p.lambda_minus.powf(a))
        / (a * (a - 1.0) * norm);
    let drift = I * u * (p.lambda_plus.powf(a - 1.0) - p.lambda_minus.powf(a - 1.0)) / norm;
    finite((bracket + drift) * h, "scaled stdCTS exponent")
}

/// Gamma log-mgf `-a ln(1 - sigma2 s)` on the principal branch.
pub fn gamma_log_mgf(s: ComplexValue, g: &GammaMixParams) -> Result<ComplexValue> {
    let w = s * g.sigma2;
    let margin = 1.0 - w.re;
    if !(margin > 0.0) {
        return Err(Error::OutsideMgfDomain(margin));
    }
    finite(-log1p(-w) * g.a, "Gamma log-mgf")
}

/// Per-unit-V exponent of the stdCTS core, `-u^2/2` at the Variance-Gamma boundary.
pub fn core_log_cf(u: f64, p: &MixedTsParams) -> Result<ComplexValue> {
    match p.std_core() {
        Some(core) => stdcts_log_cf(u, &core),
        None => Ok(Complex64::new(-0.5 * u * u, 0.0)),
    }
}

/// MixedTS exponent `iu mu0 - a ln(1 - iu mu - sigma^2 L_stdCTS(u; alpha, lambda_plus, lambda_minus))`.
pub fn mixedts_log_cf(u: f64, p: &MixedTsParams) -> Result<ComplexValue> {
    let inner = I * (u * p.mu) + core_log_cf(u, p)? * (p.sigma * p.sigma);
    let mix = gamma_log_mgf(inner, &GammaMixParams { a: p.a, sigma2: 1.0 })?;
    finite(I * (u * p.mu0) + mix, "MixedTS exponent")
}

/// `sigma` coupling under which the symmetric MixedTS with `a = 1`,
/// `lambda_plus = lambda_minus = lambda` tends to the Geometric Stable law as
/// `lambda -> 0`:
/// `sigma = lambda^((alpha-2)/2) gamma^(alpha/2) sqrt(|alpha (alpha-1) / cos(alpha pi / 2)|)`.
pub fn geostable_sigma(alpha: f64, lambda: f64, gamma_scale: f64) -> f64 {
    let k = (alpha * (alpha - 1.0) / (alpha * PI / 2.0).cos()).abs();
    lambda.powf((alpha - 2.0) / 2.0) * gamma_scale.powf(alpha / 2.0) * k.sqrt()
}

fn check_geo(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 2.0) || alpha == 1.0 {
        return Err(Error::OutOfRange(alpha, "0 < alpha < 2, alpha ≠ 1"));
    }
    Ok(())
}

/// Limit exponent `-ln(1 - k |u|^alpha cos(alpha pi/2) / (alpha (alpha - 1)))` reached
/// under the [`geostable_sigma`] coupling, where `k = sigma^2 lambda^(2-alpha)
/// = gamma^alpha |alpha (alpha-1) / cos(alpha pi/2)|`. It simplifies to
/// `-ln(1 + gamma^alpha |u|^alpha)`.
pub fn geostable_limit_log_cf(u: f64, alpha: f64, gamma_scale: f64) -> Result<ComplexValue> {
    check_geo(alpha)?;
    if !(gamma_scale > 0.0) {
        return Err(Error::OutOfRange(gamma_scale, "gamma > 0"));
    }
    let t = (gamma_scale * u.abs()).powf(alpha);
    Ok(Complex64::new(-t.ln_1p(), 0.0))
}

/// The limit with unit coupling constant, `-ln(1 - |u|^alpha cos(alpha pi/2) / (alpha (alpha - 1)))`.
/// This is the value reached when `sigma^2 = lambda^(alpha-2)`, not under [`geostable_sigma`].
pub fn geostable_limit_log_cf_unit_coupling(u: f64, alpha: f64) -> Result<ComplexValue> {
    check_geo(alpha)?;
    let t = u.abs().powf(alpha) * (alpha * PI / 2.0).cos() / (alpha * (alpha - 1.0));
    Ok(Complex64::new(-(-t).ln_1p(), 0.0))
}
