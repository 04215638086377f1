//! GARCH(1,1) filtering and Gaussian quasi-maximum likelihood,
//! `r_t = sigma_t chi_t`, `sigma_t^2 = alpha0 + alpha1 r_{t-1}^2 + beta1 sigma_{t-1}^2`.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, InvalidParameter, Result};
use crate::estimation::{default_init, fit_mixedts, fit_vg, FitOptions, FitResult, HistogramSpec};
use crate::optim::{nelder_mead, NmOptions};
use crate::params::Validate;
use crate::stats::{mean, sample_moments};

pub const MIN_FILTER_LEN: usize = 10;
pub const MIN_QMLE_LEN: usize = 250;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GarchParams {
    pub alpha0: f64,
    pub alpha1: f64,
    pub beta1: f64,
}

impl GarchParams {
    pub fn new(alpha0: f64, alpha1: f64, beta1: f64) -> Result<Self> {
        Self { alpha0, alpha1, beta1 }.validate()
    }

    pub fn persistence(&self) -> f64 {
        self.alpha1 + self.beta1
    }

    /// `alpha0 / (1 - alpha1 - beta1)`.
    pub fn unconditional_variance(&self) -> f64 {
        self.alpha0 / (1.0 - self.persistence())
    }
}

impl Validate for GarchParams {
    fn violations(&self) -> Vec<InvalidParameter> {
        let mut out = Vec::new();
        let mut need = |ok: bool, name, value, constraint| {
            if !ok {
                out.push(InvalidParameter { name, value, constraint });
            }
        };
        need(self.alpha0 > 0.0 && self.alpha0.is_finite(), "alpha0", self.alpha0, "alpha0 > 0");
        need(self.alpha1 >= 0.0, "alpha1", self.alpha1, "alpha1 >= 0");
        need(self.beta1 >= 0.0, "beta1", self.beta1, "beta1 >= 0");
        let s = self.persistence();
        need(s < 1.0, "alpha1 + beta1", s, "alpha1 + beta1 < 1");
        out
    }
}

#[derive(Debug, Clone)]
pub struct Filtered {
    pub sigmas: Vec<f64>,
    pub residuals: Vec<f64>,
    pub loglik: f64,
}

#[derive(Debug, Clone)]
pub struct GarchFit {
    pub params: GarchParams,
    pub sigmas: Vec<f64>,
    pub residuals: Vec<f64>,
    pub loglik: f64,
    pub evals: usize,
    pub converged: bool,
}

impl GarchFit {
    pub fn report(&self) -> String {
        let p = &self.params;
        format!(
            "{:<13}{:.6e}\n{:<13}{:.6}\n{:<13}{:.6}\n{:<13}{:.6}\n{:<13}{}\n",
            "alpha0", p.alpha0, "alpha1", p.alpha1, "beta1", p.beta1, "loglik", self.loglik, "converged", self.converged
        )
    }
}

fn filter_unchecked(returns: &[f64], p: &GarchParams, sigma0_sq: f64) -> Filtered {
    let mut sigmas = Vec::with_capacity(returns.len());
    let mut residuals = Vec::with_capacity(returns.len());
    let mut loglik = 0.0;
    // the pre-sample squared return is taken equal to the pre-sample variance
    let (mut prev_r2, mut prev_s2) = (sigma0_sq, sigma0_sq);
    for &r in returns {
        let s2 = p.alpha0 + p.alpha1 * prev_r2 + p.beta1 * prev_s2;
        debug_assert!(s2 > 0.0);
        let s = s2.sqrt();
        sigmas.push(s);
        residuals.push(r / s);
        loglik -= 0.5 * ((2.0 * PI * s2).ln() + r * r / s2);
        prev_r2 = r * r;
        prev_s2 = s2;
    }
    Filtered { sigmas, residuals, loglik }
}

/// Conditional volatilities, standardized residuals and the Gaussian
/// quasi-log-likelihood `-1/2 sum (ln(2 pi sigma_t^2) + r_t^2 / sigma_t^2)`.
/// `sigma0_sq` is the variance (and squared return) before the first observation.
pub fn garch_filter(returns: &[f64], p: &GarchParams, sigma0_sq: f64) -> Result<Filtered> {
    if returns.len() < MIN_FILTER_LEN {
        return Err(Error::SeriesTooShort { len: returns.len(), min: MIN_FILTER_LEN });
    }
    let p = p.validate()?;
    if !(sigma0_sq > 0.0 && sigma0_sq.is_finite()) {
        return Err(Error::OutOfRange(sigma0_sq, "sigma0_sq > 0"));
    }
    Ok(filter_unchecked(returns, &p, sigma0_sq))
}

const STATIONARITY_MARGIN: f64 = 1e-6;

/// Maximize the quasi-likelihood over `alpha0 > 0`, `alpha1, beta1 >= 0`,
/// `alpha1 + beta1 < 1 - 1e-6`, starting from `init` and a few standard
/// persistence levels. The pre-sample variance is the sample variance.
pub fn garch_qmle(returns: &[f64], init: &GarchParams) -> Result<GarchFit> {
    if returns.len() < MIN_QMLE_LEN {
        return Err(Error::SeriesTooShort { len: returns.len(), min: MIN_QMLE_LEN });
    }
    let init = init.validate()?;
    let v = sample_moments(returns)?.variance;
    if !(v > 0.0) {
        return Err(Error::OutOfRange(v, "sample variance > 0"));
    }
    // coordinates: (ln(alpha0 / v), alpha1, beta1)
    let decode = |t: &[f64]| GarchParams { alpha0: v * t[0].exp(), alpha1: t[1], beta1: t[2] };
    let objective = |t: &[f64]| {
        let p = decode(t);
        let excess = (-p.alpha1).max(0.0) + (-p.beta1).max(0.0) + (p.persistence() - 1.0 + STATIONARITY_MARGIN).max(0.0);
        if excess > 0.0 || !p.alpha0.is_finite() {
            return 1e12 * (1.0 + excess);
        }
        -filter_unchecked(returns, &p, v).loglik
    };
    let mut starts = vec![[(init.alpha0 / v).ln(), init.alpha1, init.beta1]];
    for (a1, b1) in [(0.05f64, 0.90f64), (0.10, 0.80), (0.03, 0.95), (0.15, 0.60)] {
        starts.push([(1.0 - a1 - b1).ln(), a1, b1]);
    }
    let nm = NmOptions { max_evals: 3000, f_tol: 1e-12, x_tol: 1e-8 };
    let step = [0.5, 0.02, 0.03];
    let runs: Vec<_> = starts.par_iter().map(|s| nelder_mead(objective, s, &step, &nm)).collect();
    let mut evals: usize = runs.iter().map(|r| r.evals).sum();
    let best = runs
        .into_iter()
        .min_by(|a, b| a.value.total_cmp(&b.value))
        .expect("at least one start");
    let polish = nelder_mead(objective, &best.x, &step, &nm);
    evals += polish.evals;
    let (x, converged) = if polish.value <= best.value { (polish.x, polish.converged) } else { (best.x, best.converged) };
    let params = decode(&x).validate()?;
    let f = filter_unchecked(returns, &params, v);
    if !converged {
        log::warn!("GARCH quasi-likelihood search stopped at the evaluation budget");
    }
    Ok(GarchFit { params, sigmas: f.sigmas, residuals: f.residuals, loglik: f.loglik, evals, converged })
}

/// Returns `r_t = sigma_t z_t` driven by the given unit-variance innovations,
/// started at the unconditional variance.
pub fn simulate(p: &GarchParams, innovations: &[f64]) -> Result<Vec<f64>> {
    let p = p.validate()?;
    let mut prev_s2 = p.unconditional_variance();
    let mut prev_r2 = prev_s2;
    Ok(innovations
        .iter()
        .map(|z| {
            let s2 = p.alpha0 + p.alpha1 * prev_r2 + p.beta1 * prev_s2;
            let r = s2.sqrt() * z;
            prev_r2 = r * r;
            prev_s2 = s2;
            r
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Innovations {
    MixedTs,
    Vg,
}

#[derive(Debug, Clone)]
pub struct PipelineOptions {
    pub innovations: Innovations,
    /// Rescale residuals to zero mean and unit variance before the second stage.
    pub standardize: bool,
    /// Subtract the sample mean of the returns before filtering.
    pub demean: bool,
    pub bins: Option<usize>,
    pub init: Option<GarchParams>,
    pub fit: FitOptions,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            innovations: Innovations::MixedTs,
            standardize: true,
            demean: false,
            bins: None,
            init: None,
            fit: FitOptions::default(),
        }
    }
}

/// QMLE of the variance equation, then a histogram fit of the innovation law
/// on the filtered residuals.
pub fn garch_mixedts_pipeline(returns: &[f64], opts: &PipelineOptions) -> Result<(GarchFit, FitResult)> {
    if returns.is_empty() {
        return Err(Error::EmptyInput);
    }
    let series: Vec<f64> = if opts.demean {
        let m = mean(returns);
        returns.iter().map(|r| r - m).collect()
    } else {
        returns.to_vec()
    };
    let init = match opts.init {
        Some(p) => p,
        None => {
            let v = sample_moments(&series)?.variance;
            GarchParams { alpha0: 0.05 * v, alpha1: 0.05, beta1: 0.90 }
        }
    };
    let g = garch_qmle(&series, &init)?;
    let resid: Vec<f64> = if opts.standardize {
        let m = sample_moments(&g.residuals)?;
        let sd = m.std_dev();
        g.residuals.iter().map(|x| (x - m.mean) / sd).collect()
    } else {
        g.residuals.clone()
    };
    let hist = match opts.bins {
        Some(k) => HistogramSpec::with_classes(&resid, k)?,
        None => HistogramSpec::for_sample(&resid)?,
    };
    let start = default_init(&resid)?;
    let fit = match opts.innovations {
        Innovations::MixedTs => fit_mixedts(&resid, &hist, &start, &opts.fit)?,
        Innovations::Vg => fit_vg(&resid, &hist, &start, &opts.fit)?,
    };
    Ok((g, fit))
}
