//! Closed-form cumulants and standardized moments.
//!
//! MixedTS cumulants come from composing the Gamma cumulant generating function
//! with the stdCTS one: with `V̂ ~ Gamma(a, 1)`, `K(t) = mu0 t + K_V̂(mu t + sigma^2 K_X(t))`,
//! expanded to fourth order with Faà di Bruno's formula.

use num_complex::Complex64;

use crate::charfn::ComplexValue;
use crate::error::Result;
use crate::params::{CtsParams, MixedTsParams, StdCtsParams};
use crate::special::gamma;

/// Mean, variance, skewness `gamma1` and (non-excess) kurtosis `gamma2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSet {
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub kurtosis: f64,
}

impl MomentSet {
    pub fn from_cumulants(c: [f64; 4]) -> Self {
        Self {
            mean: c[0],
            variance: c[1],
            skewness: c[2] / c[1].powf(1.5),
            kurtosis: 3.0 + c[3] / (c[1] * c[1]),
        }
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }

    /// `variance > 0` and Pearson's bound `gamma2 >= gamma1^2 + 1`.
    pub fn is_admissible(&self) -> bool {
        self.variance > 0.0 && self.kurtosis >= self.skewness * self.skewness + 1.0 - 1e-12
    }
}

/// `n`-th cumulant of a CTS law: `mu` for `n = 1`,
/// `Gamma(n - alpha)(C+ l+^(alpha-n) + (-1)^n C- l-^(alpha-n))` otherwise.
pub fn cts_cumulant(n: u32, p: &CtsParams) -> f64 {
    assert!(n >= 1, "cumulant order starts at 1");
    if n == 1 {
        return p.mu;
    }
    let a = p.alpha;
    let k = n as f64;
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    gamma(k - a) * (p.c_plus * p.lambda_plus.powf(a - k) + sign * p.c_minus * p.lambda_minus.powf(a - k))
}

pub fn cts_moments(p: &CtsParams) -> MomentSet {
    MomentSet::from_cumulants([1, 2, 3, 4].map(|n| cts_cumulant(n, p)))
}

/// Third and fourth cumulants of `stdCTS(alpha, lambda_plus, lambda_minus)`:
/// `(2-alpha)(l+^(alpha-3) - l-^(alpha-3)) / norm` and
/// `(3-alpha)(2-alpha)(l+^(alpha-4) + l-^(alpha-4)) / norm`.
pub fn stdcts_higher_cumulants(p: &StdCtsParams) -> (f64, f64) {
    let a = p.alpha;
    let norm = p.tempering_norm();
    let c3 = (2.0 - a) * (p.lambda_plus.powf(a - 3.0) - p.lambda_minus.powf(a - 3.0)) / norm;
    let c4 = (3.0 - a) * (2.0 - a) * (p.lambda_plus.powf(a - 4.0) + p.lambda_minus.powf(a - 4.0)) / norm;
    (c3, c4)
}

fn core_higher_cumulants(p: &MixedTsParams) -> (f64, f64) {
    p.std_core().map_or((0.0, 0.0), |c| stdcts_higher_cumulants(&c))
}

/// First four cumulants of the general MixedTS variate.
pub fn mixedts_cumulants(p: &MixedTsParams) -> [f64; 4] {
    let (c3, c4) = core_higher_cumulants(p);
    let (a, mu) = (p.a, p.mu);
    let s2 = p.sigma * p.sigma;
    // derivatives at 0 of g(t) = mu t + sigma^2 K_X(t)
    let (g1, g2, g3, g4) = (mu, s2, s2 * c3, s2 * c4);
    // derivatives at 0 of -a ln(1 - s): a (n-1)!
    let (f1, f2, f3, f4) = (a, a, 2.0 * a, 6.0 * a);
    [
        p.mu0 + f1 * g1,
        f1 * g2 + f2 * g1 * g1,
        f1 * g3 + 3.0 * f2 * g1 * g2 + f3 * g1.powi(3),
        f1 * g4 + f2 * (4.0 * g1 * g3 + 3.0 * g2 * g2) + 6.0 * f3 * g1 * g1 * g2 + f4 * g1.powi(4),
    ]
}

pub fn mixedts_moments(p: &MixedTsParams) -> MomentSet {
    MomentSet::from_cumulants(mixedts_cumulants(p))
}

/// Kurtosis of the centred core `sigma sqrt(V̂) X` written as the product
/// `[3 + c4(X)] E[V^2] / E[V]^2`.
///
/// Cumulant composition gives `3 E[V^2]/E[V]^2 + c4(X)/E[V]` instead (what
/// [`mixedts_moments`] returns); the two agree only when `c4(X) = 0`. This form
/// is kept for comparison.
pub fn mixedts_kurtosis_product_form(p: &MixedTsParams) -> f64 {
    let (_, c4) = core_higher_cumulants(p);
    let g = p.mixing();
    let ev = g.mean();
    let ev2 = g.variance() + ev * ev;
    (3.0 + c4) * ev2 / (ev * ev)
}

/// First four cumulants `i^(-n) d^n/du^n log_cf(0)` by central differences with
/// step `h`, Richardson-extrapolated against step `h/2`.
pub fn numerical_cumulants<F>(log_cf: F, h: f64) -> Result<[f64; 4]>
where
    F: Fn(f64) -> Result<ComplexValue>,
{
    let stencil = |h: f64| -> Result<[Complex64; 4]> {
        let f0 = log_cf(0.0)?;
        let (p1, m1) = (log_cf(h)?, log_cf(-h)?);
        let (p2, m2) = (log_cf(2.0 * h)?, log_cf(-2.0 * h)?);
        Ok([
            (p1 - m1) / (2.0 * h),
            (p1 - f0 * 2.0 + m1) / (h * h),
            (p2 - p1 * 2.0 + m1 * 2.0 - m2) / (2.0 * h.powi(3)),
            (p2 - p1 * 4.0 + f0 * 6.0 - m1 * 4.0 + m2) / h.powi(4),
        ])
    };
    let coarse = stencil(h)?;
    let fine = stencil(0.5 * h)?;
    let ipow = [
        Complex64::new(0.0, 1.0),
        Complex64::new(-1.0, 0.0),
        Complex64::new(0.0, -1.0),
        Complex64::new(1.0, 0.0),
    ];
    let mut out = [0.0; 4];
    for k in 0..4 {
        let d = (fine[k] * 4.0 - coarse[k]) / 3.0;
        out[k] = (d / ipow[k]).re;
    }
    Ok(out)
}
