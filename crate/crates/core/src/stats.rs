//! Sample statistics and Kolmogorov–Smirnov distances.

use crate::error::{Error, Result};
use crate::moments::MomentSet;

/// Population (divide-by-`n`) mean, variance, skewness and kurtosis.
pub fn sample_moments(x: &[f64]) -> Result<MomentSet> {
    if x.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &v in x {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let (m2, m3, m4) = (m2 / n, m3 / n, m4 / n);
    Ok(MomentSet { mean, variance: m2, skewness: m3 / m2.powf(1.5), kurtosis: m4 / (m2 * m2) })
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased (divide-by-`n - 1`) variance.
pub fn sample_variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0)
}

fn sorted(x: &[f64]) -> Vec<f64> {
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// `sup |F_n(x) - F(x)|` for a sample against a continuous distribution function.
pub fn ks_statistic<F: Fn(f64) -> f64>(x: &[f64], cdf: F) -> f64 {
    let v = sorted(x);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &xi)| {
            let f = cdf(xi);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Two-sample statistic `sup |F_n(x) - G_m(x)|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let (a, b) = (sorted(a), sorted(b));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic p-value `P(sqrt(n) D > sqrt(n) d)` of the Kolmogorov distribution,
/// with the small-sample correction `sqrt(n) + 0.12 + 0.11/sqrt(n)`.
/// For two samples pass `n = n1 n2 / (n1 + n2)`.
pub fn ks_pvalue(d: f64, n: f64) -> f64 {
    let sn = n.sqrt();
    let t = (sn + 0.12 + 0.11 / sn) * d;
    if t < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = 2.0 * (-1f64).powf(k - 1.0) * (-2.0 * k * k * t * t).exp();
        sum += term;
        if term.abs() < 1e-16 {
            break;
        }
    }
    sum.clamp(0.0, 1.0)
}
