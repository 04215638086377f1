//! Statistical factors by FastICA, OLS exposures, Jarque–Bera ranking and the
//! portfolio density rebuilt from independent factor laws.
//!
//! Matrices hold one series per row and one observation per column.

use std::io::Write;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::charfn::{mixedts_log_cf, CfGridSpec};
use crate::density::{invert_cf, DensityGrid};
use crate::error::{Error, Result};
use crate::moments::{mixedts_cumulants, MomentSet};
use crate::params::{MixedTsParams, Validate};
use crate::stats::sample_moments;

/// `E[log cosh Z]` for a standard normal `Z`.
const GAUSSIAN_LOGCOSH: f64 = 0.374_567_207_491_437_97;
const MAX_ITER: usize = 1000;
const TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JarqueBera {
    pub statistic: f64,
    pub skewness: f64,
    pub kurtosis: f64,
}

/// `JB = t/6 (S^2 + (K - 3)^2 / 4)` from the population skewness and kurtosis.
pub fn jarque_bera(series: &[f64]) -> Result<JarqueBera> {
    if series.len() < 8 {
        return Err(Error::SeriesTooShort { len: series.len(), min: 8 });
    }
    let m = sample_moments(series)?;
    Ok(jarque_bera_from(series.len(), m.skewness, m.kurtosis))
}

pub fn jarque_bera_from(t: usize, skewness: f64, kurtosis: f64) -> JarqueBera {
    let statistic = t as f64 / 6.0 * (skewness * skewness + 0.25 * (kurtosis - 3.0).powi(2));
    JarqueBera { statistic, skewness, kurtosis }
}

/// Least-squares regression of a series on the rows of `factors` plus an intercept.
#[derive(Debug, Clone)]
pub struct OlsFit {
    pub intercept: f64,
    pub beta: DVector<f64>,
    pub r_squared: f64,
    pub residuals: Vec<f64>,
}

pub fn ols_exposures(portfolio: &[f64], factors: &DMatrix<f64>) -> Result<OlsFit> {
    let (n, t) = factors.shape();
    if portfolio.len() != t {
        return Err(Error::DimensionMismatch(format!("{} portfolio observations vs {t} factor columns", portfolio.len())));
    }
    if t <= n + 1 {
        return Err(Error::SeriesTooShort { len: t, min: n + 2 });
    }
    let mut x = DMatrix::from_element(t, n + 1, 1.0);
    x.view_mut((0, 1), (t, n)).copy_from(&factors.transpose());
    let y = DVector::from_column_slice(portfolio);
    let qr = x.clone().qr();
    let r = qr.r();
    let scale = r.diagonal().iter().fold(0.0f64, |m, d| m.max(d.abs()));
    if r.diagonal().iter().any(|d| d.abs() <= 1e-12 * scale) {
        return Err(Error::RankDeficient);
    }
    let qty = qr.q().transpose() * &y;
    let coef = r.solve_upper_triangular(&qty).ok_or(Error::RankDeficient)?;
    let fitted = &x * &coef;
    let residuals: Vec<f64> = y.iter().zip(fitted.iter()).map(|(a, b)| a - b).collect();
    let ybar = y.mean();
    let sst: f64 = y.iter().map(|v| (v - ybar).powi(2)).sum();
    let ssr: f64 = residuals.iter().map(|e| e * e).sum();
    let r_squared = if sst > 0.0 { 1.0 - ssr / sst } else { 1.0 };
    Ok(OlsFit { intercept: coef[0], beta: coef.rows(1, n).into_owned(), r_squared, residuals })
}

/// Fitted FastICA model with `X - mean = mixing * sources`.
#[derive(Debug, Clone)]
pub struct IcaModel {
    pub mean: DVector<f64>,
    /// `k x n` map from centred data to white data.
    pub whitening: DMatrix<f64>,
    /// `n x k` matrix `A`.
    pub mixing: DMatrix<f64>,
    /// `k x n` matrix taking centred data to sources.
    pub unmixing: DMatrix<f64>,
    /// `k x t`, unit-variance rows ordered by descending Jarque–Bera statistic.
    pub sources: DMatrix<f64>,
    /// Iteration after which each component's direction stopped moving.
    pub convergence_iters: Vec<usize>,
    pub converged: bool,
    pub jarque_bera: Vec<JarqueBera>,
    /// `(E[log cosh y] - E[log cosh Z])^2` per component.
    pub negentropy: Vec<f64>,
}

fn row_means(x: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(x.nrows(), x.row_iter().map(|r| r.mean()))
}

fn centred(x: &DMatrix<f64>, mean: &DVector<f64>) -> DMatrix<f64> {
    let mut c = x.clone();
    for (i, mut row) in c.row_iter_mut().enumerate() {
        row.add_scalar_mut(-mean[i]);
    }
    c
}

/// Eigenpairs sorted by descending eigenvalue.
fn sorted_eigen(m: DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let e = SymmetricEigen::new(m);
    let mut idx: Vec<usize> = (0..e.eigenvalues.len()).collect();
    idx.sort_by(|&a, &b| e.eigenvalues[b].total_cmp(&e.eigenvalues[a]));
    let vals = DVector::from_iterator(idx.len(), idx.iter().map(|&i| e.eigenvalues[i]));
    let vecs = DMatrix::from_columns(&idx.iter().map(|&i| e.eigenvectors.column(i).into_owned()).collect::<Vec<_>>());
    (vals, vecs)
}

/// `(W W^T)^(-1/2) W`.
fn decorrelate(w: &DMatrix<f64>) -> DMatrix<f64> {
    let e = SymmetricEigen::new(w * w.transpose());
    let inv_sqrt = DMatrix::from_diagonal(&e.eigenvalues.map(|l| 1.0 / l.sqrt()));
    &e.eigenvectors * inv_sqrt * e.eigenvectors.transpose() * w
}

/// Whitening and dewhitening matrices for centred data. With all components
/// kept the whitening is the symmetric inverse square root of the covariance,
/// so already white data is left unchanged.
pub fn whitening(centred: &DMatrix<f64>, k: usize) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let (n, t) = centred.shape();
    let cov = centred * centred.transpose() / t as f64;
    let (vals, vecs) = sorted_eigen(cov);
    if vals[k - 1] <= 1e-12 * vals[0].max(f64::MIN_POSITIVE) {
        return Err(Error::RankDeficient);
    }
    let ek = vecs.columns(0, k).into_owned();
    let d = vals.rows(0, k);
    let mut k_mat = DMatrix::from_diagonal(&d.map(|l| 1.0 / l.sqrt())) * ek.transpose();
    let mut dewhite = &ek * DMatrix::from_diagonal(&d.map(f64::sqrt));
    if k == n {
        k_mat = &ek * k_mat;
        dewhite *= ek.transpose();
    }
    Ok((k_mat, dewhite))
}

/// Symmetric fixed-point FastICA with the log-cosh contrast.
pub fn fastica(data: &DMatrix<f64>, n_components: usize, seed: u64) -> Result<IcaModel> {
    let (n, t) = data.shape();
    if n == 0 || t == 0 {
        return Err(Error::EmptyInput);
    }
    if !(1..=n).contains(&n_components) {
        return Err(Error::DimensionMismatch(format!("{n_components} components from {n} series")));
    }
    if t <= 10 * n {
        return Err(Error::SeriesTooShort { len: t, min: 10 * n + 1 });
    }
    let k = n_components;
    let mean = row_means(data);
    let xc = centred(data, &mean);
    let (white, dewhite) = whitening(&xc, k)?;
    let z = &white * &xc;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = decorrelate(&DMatrix::from_fn(k, k, |_, _| StandardNormal.sample(&mut rng)));
    let mut iters = vec![0usize; k];
    let mut converged = false;
    let tf = t as f64;
    for it in 1..=MAX_ITER {
        let y = &w * &z;
        let g = y.map(f64::tanh);
        let dg: Vec<f64> = g.row_iter().map(|r| r.iter().map(|v| 1.0 - v * v).sum::<f64>() / tf).collect();
        let mut next = &g * z.transpose() / tf;
        for i in 0..k {
            let wi = w.row(i).into_owned();
            let mut row = next.row_mut(i);
            row -= wi * dg[i];
        }
        let next = decorrelate(&next);
        let mut worst: f64 = 0.0;
        for i in 0..k {
            let change = 1.0 - next.row(i).dot(&w.row(i)).abs();
            if change > TOL {
                iters[i] = it;
            }
            worst = worst.max(change);
        }
        w = next;
        if worst <= TOL {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("FastICA did not converge in {MAX_ITER} iterations");
    }

    let mut s = &w * &z;
    let mut unmixing = &w * &white;
    let mut mixing = &dewhite * w.transpose();
    let rows: Vec<Vec<f64>> = s.row_iter().map(|r| r.iter().copied().collect()).collect();
    let jb: Vec<JarqueBera> = rows.iter().map(|r| jarque_bera(r)).collect::<Result<_>>()?;
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| jb[b].statistic.total_cmp(&jb[a].statistic));
    let sign: Vec<f64> = jb.iter().map(|j| if j.skewness > 0.0 { -1.0 } else { 1.0 }).collect();

    s = DMatrix::from_rows(&order.iter().map(|&i| s.row(i) * sign[i]).collect::<Vec<_>>());
    unmixing = DMatrix::from_rows(&order.iter().map(|&i| unmixing.row(i) * sign[i]).collect::<Vec<_>>());
    mixing = DMatrix::from_columns(&order.iter().map(|&i| mixing.column(i) * sign[i]).collect::<Vec<_>>());
    let jarque_bera: Vec<JarqueBera> = order
        .iter()
        .map(|&i| JarqueBera { skewness: sign[i] * jb[i].skewness, ..jb[i] })
        .collect();
    let negentropy = s
        .row_iter()
        .map(|r| (r.iter().map(|v| v.cosh().ln()).sum::<f64>() / tf - GAUSSIAN_LOGCOSH).powi(2))
        .collect();
    let convergence_iters = order.iter().map(|&i| iters[i]).collect();
    Ok(IcaModel { mean, whitening: white, mixing, unmixing, sources: s, convergence_iters, converged, jarque_bera, negentropy })
}

/// Portfolio decomposition `r = offset + beta_f F + beta_n N + eps`.
#[derive(Debug, Clone)]
pub struct FactorSplit {
    pub factors: DMatrix<f64>,
    pub noise: DMatrix<f64>,
    pub beta_f: DVector<f64>,
    pub beta_n: DVector<f64>,
    /// Regression intercept plus the exposure to the data means.
    pub offset: f64,
    pub residuals: Vec<f64>,
}

/// Take the first `l` sources (the highest Jarque–Bera statistics) as factors.
/// Loadings on the sources are the series exposures times the mixing matrix.
pub fn split_factors(model: &IcaModel, ols: &OlsFit, l: usize) -> Result<FactorSplit> {
    let k = model.sources.nrows();
    if !(1..=k).contains(&l) {
        return Err(Error::OutOfRange(l as f64, "1 <= l <= number of components"));
    }
    if ols.beta.len() != model.mixing.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "{} exposures vs {} series",
            ols.beta.len(),
            model.mixing.nrows()
        )));
    }
    let loadings = model.mixing.transpose() * &ols.beta;
    Ok(FactorSplit {
        factors: model.sources.rows(0, l).into_owned(),
        noise: model.sources.rows(l, k - l).into_owned(),
        beta_f: loadings.rows(0, l).into_owned(),
        beta_n: loadings.rows(l, k - l).into_owned(),
        offset: ols.intercept + ols.beta.dot(&model.mean),
        residuals: ols.residuals.clone(),
    })
}

impl FactorSplit {
    /// `beta_n N + eps + offset`, the part modelled as normal noise.
    pub fn noise_series(&self) -> Vec<f64> {
        let bn = self.beta_n.transpose() * &self.noise;
        self.residuals
            .iter()
            .enumerate()
            .map(|(j, e)| self.offset + e + if self.noise.nrows() > 0 { bn[j] } else { 0.0 })
            .collect()
    }

    /// `offset + beta_f F + beta_n N + eps`.
    pub fn reconstruct(&self) -> Vec<f64> {
        let bf = self.beta_f.transpose() * &self.factors;
        self.noise_series().iter().enumerate().map(|(j, v)| v + bf[j]).collect()
    }

    pub fn factor_rows(&self) -> Vec<Vec<f64>> {
        self.factors.row_iter().map(|r| r.iter().copied().collect()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalNoise {
    pub mean: f64,
    pub variance: f64,
}

impl NormalNoise {
    pub fn from_series(x: &[f64]) -> Result<Self> {
        let m = sample_moments(x)?;
        Ok(Self { mean: m.mean, variance: m.variance })
    }
}

fn portfolio_log_cf(u: f64, beta_f: &DVector<f64>, fits: &[MixedTsParams], noise: &NormalNoise) -> Result<Complex64> {
    let mut acc = Complex64::new(-0.5 * noise.variance * u * u, noise.mean * u);
    for (b, p) in beta_f.iter().zip(fits) {
        acc += mixedts_log_cf(b * u, p)?;
    }
    Ok(acc)
}

/// Grid sized from the cumulants of the factor laws and the noise.
pub fn portfolio_grid_spec(split: &FactorSplit, fits: &[MixedTsParams], noise: &NormalNoise, n_min: usize) -> Result<CfGridSpec> {
    let mut c = [noise.mean, noise.variance, 0.0, 0.0];
    for (b, p) in split.beta_f.iter().zip(fits) {
        let k = mixedts_cumulants(p);
        for (i, ci) in c.iter_mut().enumerate() {
            *ci += b.powi(i as i32 + 1) * k[i];
        }
    }
    let m = MomentSet::from_cumulants(c);
    CfGridSpec::for_moments(|u| portfolio_log_cf(u, &split.beta_f, fits, noise), &m, n_min)
}

/// Density of `sum_i beta_f_i F_i + noise` for independent MixedTS factors and
/// normal noise.
pub fn reconstruct_portfolio_density(
    split: &FactorSplit,
    factor_fits: &[MixedTsParams],
    noise: &NormalNoise,
    grid: &CfGridSpec,
) -> Result<DensityGrid> {
    if factor_fits.len() != split.beta_f.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} factor fits for {} factors",
            factor_fits.len(),
            split.beta_f.len()
        )));
    }
    if !(noise.variance >= 0.0) {
        return Err(Error::OutOfRange(noise.variance, "noise variance >= 0"));
    }
    let fits: Vec<MixedTsParams> = factor_fits.iter().map(|p| p.validate()).collect::<Result<_>>()?;
    invert_cf(|u| portfolio_log_cf(u, &split.beta_f, &fits, noise), grid)
}

/// Row-major CSV with a header row of labels.
pub fn write_matrix_csv<W: Write>(mut out: W, m: &DMatrix<f64>, labels: &[String]) -> Result<()> {
    if labels.len() != m.ncols() {
        return Err(Error::DimensionMismatch(format!("{} labels for {} columns", labels.len(), m.ncols())));
    }
    writeln!(out, "{}", labels.join(","))?;
    for row in m.row_iter() {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(())
}

/// Roman-numeral component labels `I, II, ...`.
pub fn component_labels(k: usize) -> Vec<String> {
    const NUMERALS: [(usize, &str); 9] =
        [(100, "C"), (90, "XC"), (50, "L"), (40, "XL"), (10, "X"), (9, "IX"), (5, "V"), (4, "IV"), (1, "I")];
    (1..=k)
        .map(|mut v| {
            let mut s = String::new();
            for (n, r) in NUMERALS {
                while v >= n {
                    s.push_str(r);
                    v -= n;
                }
            }
            s
        })
        .collect()
}
