//! Parameter containers for the tempered stable families and the MixedTS law.
//!
//! All containers are plain `Copy` values. [`Validate::validate`] returns the
//! value unchanged when every invariant holds and otherwise reports every
//! violated constraint at once.
//!
//! Parameter sets round-trip through a flat `name=value` text format, one
//! entry per line (see [`KeyValue`]).

use std::collections::HashMap;

use crate::error::{Error, InvalidParameter, Result};
use crate::special::gamma;

pub trait Validate: Sized {
    fn violations(&self) -> Vec<InvalidParameter>;

    fn validate(self) -> Result<Self> {
        let v = self.violations();
        if v.is_empty() {
            Ok(self)
        } else {
            Err(Error::InvalidParameters(v))
        }
    }

    fn is_valid(&self) -> bool {
        self.violations().is_empty()
    }
}

fn check(out: &mut Vec<InvalidParameter>, ok: bool, name: &'static str, value: f64, constraint: &'static str) {
    if !ok || value.is_nan() {
        out.push(InvalidParameter { name, value, constraint });
    }
}

fn check_stability(out: &mut Vec<InvalidParameter>, alpha: f64, allow_two: bool) {
    let upper_ok = if allow_two { alpha <= 2.0 } else { alpha < 2.0 };
    if allow_two {
        check(out, alpha > 0.0 && upper_ok, "alpha", alpha, "0 < alpha <= 2");
    } else {
        check(out, alpha > 0.0 && upper_ok, "alpha", alpha, "0 < alpha < 2");
    }
    if alpha == 1.0 {
        out.push(InvalidParameter { name: "alpha", value: alpha, constraint: "alpha ≠ 1" });
    }
}

fn check_positive(out: &mut Vec<InvalidParameter>, name: &'static str, value: f64) {
    check(out, value > 0.0 && value.is_finite(), name, value, "strictly positive and finite");
}

/// Classical Tempered Stable `CTS(alpha, lambda_plus, lambda_minus, c_plus, c_minus, mu)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CtsParams {
    pub alpha: f64,
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    pub c_plus: f64,
    pub c_minus: f64,
    pub mu: f64,
}

impl Validate for CtsParams {
    fn violations(&self) -> Vec<InvalidParameter> {
        let mut out = Vec::new();
        check_stability(&mut out, self.alpha, false);
        check_positive(&mut out, "lambda_plus", self.lambda_plus);
        check_positive(&mut out, "lambda_minus", self.lambda_minus);
        check_positive(&mut out, "c_plus", self.c_plus);
        check_positive(&mut out, "c_minus", self.c_minus);
        check(&mut out, self.mu.is_finite(), "mu", self.mu, "finite");
        out
    }
}

/// Standardized CTS: zero mean, unit variance, scale fixed by the tempering.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StdCtsParams {
    pub alpha: f64,
    pub lambda_plus: f64,
    pub lambda_minus: f64,
}

impl StdCtsParams {
    pub fn new(alpha: f64, lambda_plus: f64, lambda_minus: f64) -> Result<Self> {
        Self { alpha, lambda_plus, lambda_minus }.validate()
    }

    /// `lambda_plus^(alpha-2) + lambda_minus^(alpha-2)`, the common denominator
    /// of every standardized expression.
    pub(crate) fn tempering_norm(&self) -> f64 {
        self.lambda_plus.powf(self.alpha - 2.0) + self.lambda_minus.powf(self.alpha - 2.0)
    }

    /// The equivalent [`CtsParams`] with `c_plus = c_minus = std_scale_c(self)` and `mu = 0`.
    pub fn to_cts(&self) -> CtsParams {
        let c = std_scale_c(self);
        CtsParams {
            alpha: self.alpha,
            lambda_plus: self.lambda_plus,
            lambda_minus: self.lambda_minus,
            c_plus: c,
            c_minus: c,
            mu: 0.0,
        }
    }

    /// Tempering rates multiplied by `factor`.
    pub fn rescaled(&self, factor: f64) -> Self {
        Self {
            alpha: self.alpha,
            lambda_plus: self.lambda_plus * factor,
            lambda_minus: self.lambda_minus * factor,
        }
    }
}

impl Validate for StdCtsParams {
    fn violations(&self) -> Vec<InvalidParameter> {
        let mut out = Vec::new();
        check_stability(&mut out, self.alpha, false);
        check_positive(&mut out, "lambda_plus", self.lambda_plus);
        check_positive(&mut out, "lambda_minus", self.lambda_minus);
        if out.is_empty() {
            let c = std_scale_c(self);
            check(&mut out, c > 0.0 && c.is_finite(), "c", c, "implied scale strictly positive");
        }
        out
    }
}

/// The scale `C = 1 / (Gamma(2 - alpha) (lambda_plus^(alpha-2) + lambda_minus^(alpha-2)))`
/// that gives a CTS law zero mean and unit variance.
pub fn std_scale_c(p: &StdCtsParams) -> f64 {
    1.0 / (gamma(2.0 - p.alpha) * p.tempering_norm())
}

/// Gamma mixing law in shape/scale form: `E[V] = a * sigma2`, `Var[V] = a * sigma2^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaMixParams {
    pub a: f64,
    pub sigma2: f64,
}

impl GammaMixParams {
    pub fn mean(&self) -> f64 {
        self.a * self.sigma2
    }

    pub fn variance(&self) -> f64 {
        self.a * self.sigma2 * self.sigma2
    }
}

impl Validate for GammaMixParams {
    fn violations(&self) -> Vec<InvalidParameter> {
        let mut out = Vec::new();
        check_positive(&mut out, "a", self.a);
        check_positive(&mut out, "sigma2", self.sigma2);
        out
    }
}

/// The general MixedTS variate `mu0 + mu V + sigma sqrt(V) X` with `V ~ Gamma(a, 1)`
/// and `X | V ~ stdCTS(alpha, sigma lambda_plus sqrt(V), sigma lambda_minus sqrt(V))`.
///
/// `alpha = 2` is the Variance-Gamma boundary, where the conditional law is Gaussian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixedTsParams {
    pub mu0: f64,
    pub mu: f64,
    pub sigma: f64,
    pub a: f64,
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    pub alpha: f64,
}

impl MixedTsParams {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        mu0: f64,
        mu: f64,
        sigma: f64,
        a: f64,
        lambda_plus: f64,
        lambda_minus: f64,
        alpha: f64,
    ) -> Result<Self> {
        Self { mu0, mu, sigma, a, lambda_plus, lambda_minus, alpha }.validate()
    }

    /// Variance-Gamma member (`alpha = 2`); the tempering rates are irrelevant there.
    pub fn vg(mu0: f64, mu: f64, sigma: f64, a: f64) -> Result<Self> {
        Self::new(mu0, mu, sigma, a, 1.0, 1.0, 2.0)
    }

    pub fn is_vg(&self) -> bool {
        self.alpha == 2.0
    }

    /// The unscaled stdCTS core `stdCTS(alpha, lambda_plus, lambda_minus)`;
    /// `None` at the Variance-Gamma boundary.
    pub fn std_core(&self) -> Option<StdCtsParams> {
        (!self.is_vg()).then_some(StdCtsParams {
            alpha: self.alpha,
            lambda_plus: self.lambda_plus,
            lambda_minus: self.lambda_minus,
        })
    }

    /// Law of the mixing variable `V = sigma^2 V̂` in the unscaled construction.
    pub fn mixing(&self) -> GammaMixParams {
        GammaMixParams { a: self.a, sigma2: self.sigma * self.sigma }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }
}

impl Validate for MixedTsParams {
    fn violations(&self) -> Vec<InvalidParameter> {
        let mut out = Vec::new();
        check(&mut out, self.mu0.is_finite(), "mu0", self.mu0, "finite");
        check(&mut out, self.mu.is_finite(), "mu", self.mu, "finite");
        check_positive(&mut out, "sigma", self.sigma);
        check_positive(&mut out, "a", self.a);
        check_positive(&mut out, "lambda_plus", self.lambda_plus);
        check_positive(&mut out, "lambda_minus", self.lambda_minus);
        check_stability(&mut out, self.alpha, true);
        if out.is_empty() {
            if let Some(core) = self.std_core() {
                out.extend(core.violations());
            }
        }
        out
    }
}

/// Flat `name=value` text serialization.
///
/// Blank lines and lines starting with `#` are ignored. Every field must appear
/// exactly once; parsing validates the result.
pub trait KeyValue: Validate + Sized {
    const FIELDS: &'static [&'static str];

    fn values(&self) -> Vec<f64>;
    fn from_values(v: &[f64]) -> Self;

    fn to_kv_string(&self) -> String {
        Self::FIELDS
            .iter()
            .zip(self.values())
            .map(|(k, v)| format!("{k}={v:?}\n"))
            .collect()
    }

    fn parse_kv(text: &str) -> Result<Self> {
        let mut found: HashMap<&str, f64> = HashMap::new();
        let mut last_line = 0;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            last_line = line;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, value) = trimmed.split_once('=').ok_or_else(|| Error::Parse {
                line,
                msg: format!("expected `name=value`, got `{trimmed}`"),
            })?;
            let key = key.trim();
            let field = Self::FIELDS.iter().find(|f| **f == key).ok_or_else(|| Error::Parse {
                line,
                msg: format!("unknown parameter `{key}`"),
            })?;
            let value: f64 = value.trim().parse().map_err(|_| Error::Parse {
                line,
                msg: format!("cannot parse `{}` as a number", value.trim()),
            })?;
            if found.insert(field, value).is_some() {
                return Err(Error::Parse { line, msg: format!("duplicate parameter `{key}`") });
            }
        }
        let mut values = Vec::with_capacity(Self::FIELDS.len());
        for f in Self::FIELDS {
            match found.get(f) {
                Some(v) => values.push(*v),
                None => {
                    return Err(Error::Parse {
                        line: last_line,
                        msg: format!("missing parameter `{f}`"),
                    })
                }
            }
        }
        Self::from_values(&values).validate()
    }
}

impl KeyValue for CtsParams {
    const FIELDS: &'static [&'static str] =
        &["alpha", "lambda_plus", "lambda_minus", "c_plus", "c_minus", "mu"];

    fn values(&self) -> Vec<f64> {
        vec![self.alpha, self.lambda_plus, self.lambda_minus, self.c_plus, self.c_minus, self.mu]
    }

    fn from_values(v: &[f64]) -> Self {
        Self { alpha: v[0], lambda_plus: v[1], lambda_minus: v[2], c_plus: v[3], c_minus: v[4], mu: v[5] }
    }
}

impl KeyValue for StdCtsParams {
    const FIELDS: &'static [&'static str] = &["alpha", "lambda_plus", "lambda_minus"];

    fn values(&self) -> Vec<f64> {
        vec![self.alpha, self.lambda_plus, self.lambda_minus]
    }

    fn from_values(v: &[f64]) -> Self {
        Self { alpha: v[0], lambda_plus: v[1], lambda_minus: v[2] }
    }
}

impl KeyValue for GammaMixParams {
    const FIELDS: &'static [&'static str] = &["a", "sigma2"];

    fn values(&self) -> Vec<f64> {
        vec![self.a, self.sigma2]
    }

    fn from_values(v: &[f64]) -> Self {
        Self { a: v[0], sigma2: v[1] }
    }
}

impl KeyValue for MixedTsParams {
    const FIELDS: &'static [&'static str] =
        &["mu0", "mu", "sigma", "a", "lambda_plus", "lambda_minus", "alpha"];

    fn values(&self) -> Vec<f64> {
        vec![self.mu0, self.mu, self.sigma, self.a, self.lambda_plus, self.lambda_minus, self.alpha]
    }

    fn from_values(v: &[f64]) -> Self {
        Self {
            mu0: v[0],
            mu: v[1],
            sigma: v[2],
            a: v[3],
            lambda_plus: v[4],
            lambda_minus: v[5],
            alpha: v[6],
        }
    }
}
