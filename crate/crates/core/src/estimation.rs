//! Histogram mean-squared-error fitting of MixedTS and Variance-Gamma laws,
//! and the Mortara, quadratic Pearson and root-MSE fit measures.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::charfn::CfGridSpec;
use crate::density::mixedts_density_on;
use crate::error::{Error, Result};
use crate::optim::{nelder_mead, NmOptions};
use crate::params::{MixedTsParams, Validate};
use crate::stats::sample_moments;

pub const MIN_SAMPLE: usize = 100;

/// Class boundaries for a histogram with `k = edges.len() - 1` classes.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramSpec {
    pub k: usize,
    pub edges: Vec<f64>,
}

impl HistogramSpec {
    pub fn new(edges: Vec<f64>) -> Result<Self> {
        if edges.len() < 3 {
            return Err(Error::InvalidGrid(format!("{} edges give fewer than 2 classes", edges.len())));
        }
        if !edges.iter().all(|e| e.is_finite()) || edges.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid("class edges must be finite and strictly increasing".into()));
        }
        Ok(Self { k: edges.len() - 1, edges })
    }

    /// `ceil(sqrt(n))` classes (at least 3) of equal width: `k - 2` span the
    /// sample range and one empty class pads each side.
    pub fn for_sample(data: &[f64]) -> Result<Self> {
        let k = ((data.len() as f64).sqrt().ceil() as usize).max(3);
        Self::with_classes(data, k)
    }

    pub fn with_classes(data: &[f64], k: usize) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::EmptyInput);
        }
        if k < 3 {
            return Err(Error::InvalidGrid(format!("k = {k}, need at least 3 padded classes")));
        }
        let (lo, hi) = data.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &x| (l.min(x), h.max(x)));
        let span = if hi > lo { hi - lo } else { 1.0 };
        let w = span / (k - 2) as f64;
        let start = lo - w;
        Self::new((0..=k).map(|j| start + j as f64 * w).collect())
    }

    /// Class of `x`: classes are closed on the left, except that the last
    /// inner class also takes its right edge. Points outside the edges go to
    /// the end classes.
    pub fn class_of(&self, x: f64) -> usize {
        let j = self.edges[1..self.k].partition_point(|&e| e <= x);
        if j == self.k - 1 && x <= self.edges[self.k - 1] { j - 1 } else { j }
    }

    pub fn counts(&self, data: &[f64]) -> Vec<f64> {
        let mut c = vec![0.0; self.k];
        for &x in data {
            c[self.class_of(x)] += 1.0;
        }
        c
    }

    fn span(&self) -> (f64, f64) {
        (self.edges[0], self.edges[self.k])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitMeasures {
    pub a1: f64,
    pub a2: f64,
    pub x2: f64,
}

/// `A1 = (1/n) sum |n_j - m_j|`, `A2 = sqrt((1/n) sum (n_j - m_j)^2 / m_j)`,
/// `X2 = sqrt((1/n) sum (n_j - m_j)^2)` for observed `n_j` and expected `m_j`.
pub fn fit_measures(observed: &[f64], theoretical: &[f64], n: f64) -> Result<FitMeasures> {
    if observed.len() != theoretical.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} observed vs {} expected classes",
            observed.len(),
            theoretical.len()
        )));
    }
    if let Some(j) = theoretical.iter().position(|&m| m <= 0.0) {
        return Err(Error::ZeroExpectedFrequency(j));
    }
    let (mut abs, mut sq, mut pearson) = (0.0, 0.0, 0.0);
    for (o, m) in observed.iter().zip(theoretical) {
        let d = o - m;
        abs += d.abs();
        sq += d * d;
        pearson += d * d / m;
    }
    Ok(FitMeasures { a1: abs / n, a2: (pearson / n).sqrt(), x2: (sq / n).sqrt() })
}

#[derive(Debug, Clone)]
pub struct FitOptions {
    /// Open search interval for `alpha`; the upper end may be 2.
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub lambda_floor: f64,
    pub lambda_cap: f64,
    /// Perturbed restarts in addition to the initial point.
    pub restarts: usize,
    pub seed: u64,
    pub max_evals: usize,
    /// Points in the fitting grid; `u_max` follows from the grid half-width
    /// unless overridden.
    pub grid_n: usize,
    pub grid_u_max: Option<f64>,
    /// Additional starting points tried alongside `init`.
    pub extra_starts: Vec<MixedTsParams>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            alpha_min: 1.0,
            alpha_max: 2.0,
            lambda_floor: 0.1,
            lambda_cap: 50.0,
            restarts: 3,
            seed: 0,
            max_evals: 3000,
            grid_n: 1 << 13,
            grid_u_max: None,
            extra_starts: Vec::new(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub params: MixedTsParams,
    pub a1: f64,
    pub a2: f64,
    pub x2: f64,
    /// Objective evaluations summed over all starts.
    pub iterations: usize,
    pub converged: bool,
}

impl FitResult {
    /// One `name value` line per parameter and fit measure.
    pub fn report(&self) -> String {
        let p = &self.params;
        let rows = [
            ("mu0", p.mu0),
            ("mu", p.mu),
            ("sigma", p.sigma),
            ("a", p.a),
            ("lambda_plus", p.lambda_plus),
            ("lambda_minus", p.lambda_minus),
            ("alpha", p.alpha),
            ("A2", self.a2),
            ("X2", self.x2),
            ("A1", self.a1),
        ];
        let mut s = String::new();
        for (name, v) in rows {
            let _ = writeln!(s, "{name:<13}{v:.6}");
        }
        let _ = writeln!(s, "{:<13}{}", "iterations", self.iterations);
        let _ = writeln!(s, "{:<13}{}", "converged", self.converged);
        s
    }
}

/// Default starting point from the sample mean and standard deviation.
pub fn default_init(data: &[f64]) -> Result<MixedTsParams> {
    let m = sample_moments(data)?;
    let sd = m.std_dev().max(1e-12);
    Ok(MixedTsParams {
        mu0: m.mean,
        mu: 0.0,
        sigma: sd / 2f64.sqrt(),
        a: 2.0,
        lambda_plus: 1.0 / sd,
        lambda_minus: 1.0 / sd,
        alpha: 1.5,
    })
}

fn sigmoid(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Unconstrained coordinates for the free parameters.
struct Transform<'a> {
    opts: &'a FitOptions,
    vg: bool,
}

impl Transform<'_> {
    fn to_params(&self, t: &[f64]) -> MixedTsParams {
        let o = self.opts;
        let mut p = MixedTsParams {
            mu0: t[0],
            mu: t[1],
            sigma: t[2].exp(),
            a: t[3].exp(),
            lambda_plus: 1.0,
            lambda_minus: 1.0,
            alpha: 2.0,
        };
        if !self.vg {
            let rate = |s: f64| o.lambda_floor * (o.lambda_cap / o.lambda_floor).powf(sigmoid(s));
            p.lambda_plus = rate(t[4]);
            p.lambda_minus = rate(t[5]);
            p.alpha = o.alpha_min + (o.alpha_max - o.alpha_min) * sigmoid(t[6]);
        }
        p
    }

    fn encode(&self, p: &MixedTsParams) -> Vec<f64> {
        let o = self.opts;
        let mut t = vec![p.mu0, p.mu, p.sigma.ln(), p.a.ln()];
        if !self.vg {
            let inner = |x: f64, lo: f64, hi: f64| {
                let eps = 1e-6;
                logit(((x - lo) / (hi - lo)).clamp(eps, 1.0 - eps))
            };
            let ln = |x: f64| x.clamp(o.lambda_floor, o.lambda_cap).ln();
            let (lf, lc) = (o.lambda_floor.ln(), o.lambda_cap.ln());
            t.push(inner(ln(p.lambda_plus), lf, lc));
            t.push(inner(ln(p.lambda_minus), lf, lc));
            t.push(inner(p.alpha, o.alpha_min, o.alpha_max));
        }
        t
    }
}

struct Problem<'a> {
    counts: Vec<f64>,
    n: f64,
    hist: &'a HistogramSpec,
    grid: CfGridSpec,
}

impl Problem<'_> {
    fn expected(&self, p: &MixedTsParams) -> Result<Vec<f64>> {
        let g = mixedts_density_on(p, &self.grid)?;
        Ok(g.interval_probabilities(&self.hist.edges).into_iter().map(|q| q * self.n).collect())
    }

    /// `X2^2`, infinite where the law cannot be tabulated.
    fn objective(&self, p: &MixedTsParams) -> f64 {
        match self.expected(p) {
            Ok(m) => self.counts.iter().zip(&m).map(|(o, e)| (o - e).powi(2)).sum::<f64>() / self.n,
            Err(_) => f64::INFINITY,
        }
    }

    fn measures(&self, p: &MixedTsParams) -> Result<FitMeasures> {
        fit_measures(&self.counts, &self.expected(p)?, self.n)
    }
}

fn check_options(o: &FitOptions) -> Result<()> {
    if !(0.0 <= o.alpha_min && o.alpha_min < o.alpha_max && o.alpha_max <= 2.0) {
        return Err(Error::OutOfRange(o.alpha_min, "0 <= alpha_min < alpha_max <= 2"));
    }
    if !(0.0 < o.lambda_floor && o.lambda_floor < o.lambda_cap) {
        return Err(Error::OutOfRange(o.lambda_floor, "0 < lambda_floor < lambda_cap"));
    }
    Ok(())
}

fn fit(data: &[f64], hist: &HistogramSpec, init: &MixedTsParams, opts: &FitOptions, vg: bool) -> Result<FitResult> {
    if data.len() < MIN_SAMPLE {
        return Err(Error::SeriesTooShort { len: data.len(), min: MIN_SAMPLE });
    }
    check_options(opts)?;
    let init = init.validate()?;
    let (lo, hi) = hist.span();
    let half_width = 2.0 * (hi - lo);
    let u_max = opts.grid_u_max.unwrap_or(opts.grid_n as f64 * PI / (2.0 * half_width));
    let problem = Problem {
        counts: hist.counts(data),
        n: data.len() as f64,
        hist,
        grid: CfGridSpec::new(u_max, opts.grid_n)?.centered(0.5 * (lo + hi)),
    };
    let tr = Transform { opts, vg };

    let base = tr.encode(&init);
    let mut starts = vec![base.clone()];
    starts.extend(opts.extra_starts.iter().map(|p| tr.encode(p)));
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let jitter = Normal::new(0.0, 0.5).expect("valid normal");
    let sd = init.sigma * init.a.sqrt();
    for _ in 0..opts.restarts {
        let mut t = base.clone();
        for (i, ti) in t.iter_mut().enumerate() {
            let scale = if i < 2 { sd } else { 1.0 };
            *ti += scale * jitter.sample(&mut rng);
        }
        starts.push(t);
    }

    let nm = NmOptions { max_evals: opts.max_evals, f_tol: 1e-9, x_tol: 1e-6 };
    let step: Vec<f64> = (0..base.len()).map(|i| if i < 2 { 0.2 * sd } else { 0.3 }).collect();
    let f = |t: &[f64]| problem.objective(&tr.to_params(t));
    let runs: Vec<_> = starts.par_iter().map(|s| nelder_mead(f, s, &step, &nm)).collect();
    let mut evals: usize = runs.iter().map(|r| r.evals).sum();
    // lowest objective wins; ties go to the earliest start
    let best = runs
        .into_iter()
        .enumerate()
        .min_by(|(i, a), (j, b)| a.value.total_cmp(&b.value).then(i.cmp(j)))
        .map(|(_, r)| r)
        .expect("at least one start");
    // one restart from the optimum guards against a collapsed simplex
    let polish = nelder_mead(f, &best.x, &step, &nm);
    evals += polish.evals;
    let (x, converged) = if polish.value <= best.value { (polish.x, polish.converged) } else { (best.x, best.converged) };

    let params = tr.to_params(&x).validate()?;
    let m = problem.measures(&params)?;
    if !converged {
        log::warn!("simplex search stopped at the evaluation budget");
    }
    Ok(FitResult { params, a1: m.a1, a2: m.a2, x2: m.x2, iterations: evals, converged })
}

/// Minimize `X2^2` over the MixedTS parameters.
pub fn fit_mixedts(data: &[f64], hist: &HistogramSpec, init: &MixedTsParams, opts: &FitOptions) -> Result<FitResult> {
    fit(data, hist, init, opts, false)
}

/// Minimize `X2^2` over the Variance-Gamma family (`alpha = 2`).
pub fn fit_vg(data: &[f64], hist: &HistogramSpec, init: &MixedTsParams, opts: &FitOptions) -> Result<FitResult> {
    let init = MixedTsParams { lambda_plus: 1.0, lambda_minus: 1.0, alpha: 2.0, ..*init };
    fit(data, hist, &init, opts, true)
}

/// Fit the Variance-Gamma law first, then the MixedTS law with the VG optimum
/// as an extra start.
pub fn fit_vg_then_mixedts(
    data: &[f64],
    hist: &HistogramSpec,
    init: &MixedTsParams,
    opts: &FitOptions,
) -> Result<(FitResult, FitResult)> {
    let vg = fit_vg(data, hist, init, opts)?;
    let from_vg = MixedTsParams {
        alpha: opts.alpha_max.min(2.0) - 0.05 * (opts.alpha_max - opts.alpha_min),
        lambda_plus: init.lambda_plus,
        lambda_minus: init.lambda_minus,
        ..vg.params
    };
    let mut o = opts.clone();
    o.extra_starts.push(from_vg);
    let mixed = fit_mixedts(data, hist, init, &o)?;
    Ok((vg, mixed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_computed_measures() {
        let m = fit_measures(&[6.0, 4.0], &[5.0, 5.0], 10.0).unwrap();
        assert_eq!(m.a1, 0.2);
        assert_eq!(m.a2, 0.2);
        assert_eq!(m.x2, 0.2f64.sqrt());
        let d = fit_measures(&[12.0, 8.0], &[10.0, 10.0], 20.0).unwrap();
        assert_eq!(d.a1, 0.2);
        assert!((d.x2 - (8.0f64 / 20.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn perfect_fit_and_errors() {
        let m = fit_measures(&[3.0, 7.0, 1.0], &[3.0, 7.0, 1.0], 11.0).unwrap();
        assert_eq!((m.a1, m.a2, m.x2), (0.0, 0.0, 0.0));
        assert!(matches!(fit_measures(&[1.0, 2.0], &[3.0, 0.0], 3.0), Err(Error::ZeroExpectedFrequency(1))));
        assert!(matches!(fit_measures(&[1.0], &[1.0, 2.0], 3.0), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn measures_are_permutation_equivariant() {
        let a = fit_measures(&[6.0, 4.0, 10.0], &[5.0, 6.0, 9.0], 20.0).unwrap();
        let b = fit_measures(&[10.0, 6.0, 4.0], &[9.0, 5.0, 6.0], 20.0).unwrap();
        assert!((a.a1 - b.a1).abs() < 1e-15 && (a.a2 - b.a2).abs() < 1e-15 && (a.x2 - b.x2).abs() < 1e-15);
    }

    fn c_first_last_empty(h: &HistogramSpec, data: &[f64]) -> bool {
        let c = h.counts(data);
        c[0] == 0.0 && c[h.k - 1] == 0.0
    }

    #[test]
    fn default_histogram_is_padded() {
        let data: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let h = HistogramSpec::for_sample(&data).unwrap();
        assert_eq!(h.k, 10);
        assert!(h.edges[1] == 0.0 && h.edges[h.k - 1] >= 99.0 && c_first_last_empty(&h, &data));
        let c = h.counts(&data);
        assert_eq!(c.iter().sum::<f64>(), 100.0);
        assert_eq!(h.class_of(-1e9), 0);
        assert_eq!(h.class_of(1e9), h.k - 1);
    }

    #[test]
    fn invalid_edges_rejected() {
        assert!(HistogramSpec::new(vec![0.0, 1.0]).is_err());
        assert!(HistogramSpec::new(vec![0.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn transform_round_trip() {
        let o = FitOptions::default();
        let tr = Transform { opts: &o, vg: false };
        let p = MixedTsParams::new(0.1, -0.2, 0.9, 1.7, 1.2, 8.0, 1.4).unwrap();
        let q = tr.to_params(&tr.encode(&p));
        for (x, y) in [(p.mu0, q.mu0), (p.sigma, q.sigma), (p.lambda_minus, q.lambda_minus), (p.alpha, q.alpha)] {
            assert!((x - y).abs() < 1e-9 * x.abs().max(1.0));
        }
    }

    #[test]
    fn short_sample_rejected() {
        let data = vec![0.0; 50];
        let h = HistogramSpec::new(vec![-1.0, 0.0, 1.0]).unwrap();
        let init = MixedTsParams::vg(0.0, 0.0, 1.0, 1.0).unwrap();
        assert!(matches!(
            fit_mixedts(&data, &h, &init, &FitOptions::default()),
            Err(Error::SeriesTooShort { len: 50, min: 100 })
        ));
    }
}
