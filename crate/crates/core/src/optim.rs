//! Derivative-free minimization.

/// Stopping rules for [`nelder_mead`].
#[derive(Debug, Clone, Copy)]
pub struct NmOptions {
    pub max_evals: usize,
    /// Stop when the spread of simplex values falls below `f_tol (|f_best| + f_tol)`.
    pub f_tol: f64,
    /// ... and the simplex diameter falls below `x_tol`.
    pub x_tol: f64,
}

impl Default for NmOptions {
    fn default() -> Self {
        Self { max_evals: 4000, f_tol: 1e-10, x_tol: 1e-8 }
    }
}

#[derive(Debug, Clone)]
pub struct NmResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    pub converged: bool,
}

/// Nelder–Mead simplex with adaptive coefficients (Gao & Han), started from
/// `x0` with axis steps `step`. Non-finite objective values count as `+inf`.
pub fn nelder_mead<F>(f: F, x0: &[f64], step: &[f64], opts: &NmOptions) -> NmResult
where
    F: Fn(&[f64]) -> f64,
{
    let d = x0.len();
    let dim = d as f64;
    let (alpha, gamma) = (1.0, 1.0 + 2.0 / dim);
    let (rho, shrink) = (0.75 - 1.0 / (2.0 * dim), 1.0 - 1.0 / dim);
    let evals = std::cell::Cell::new(0usize);
    let eval = |x: &[f64]| {
        evals.set(evals.get() + 1);
        let v = f(x);
        if v.is_nan() { f64::INFINITY } else { v }
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
    simplex.push((x0.to_vec(), eval(x0)));
    for i in 0..d {
        let mut x = x0.to_vec();
        x[i] += step[i];
        let v = eval(&x);
        simplex.push((x, v));
    }

    let mut converged = false;
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[d].1;
        let diameter = simplex[1..]
            .iter()
            .map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if (worst - best).abs() <= opts.f_tol * (best.abs() + opts.f_tol) && diameter <= opts.x_tol {
            converged = true;
            break;
        }
        if evals.get() >= opts.max_evals {
            break;
        }

        let mut centroid = vec![0.0; d];
        for (x, _) in &simplex[..d] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / dim;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid.iter().zip(&simplex[d].0).map(|(c, w)| c + t * (c - w)).collect()
        };

        let xr = along(alpha);
        let fr = eval(&xr);
        if fr < simplex[0].1 {
            let xe = along(alpha * gamma);
            let fe = eval(&xe);
            simplex[d] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[d - 1].1 {
            simplex[d] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < worst {
            let xc = along(alpha * rho);
            let fc = eval(&xc);
            (xc, fc)
        } else {
            let xc = along(-rho);
            let fc = eval(&xc);
            (xc, fc)
        };
        if fc < fr.min(worst) {
            simplex[d] = (xc, fc);
            continue;
        }
        let x_best = simplex[0].0.clone();
        for (x, v) in simplex.iter_mut().skip(1) {
            for (xi, bi) in x.iter_mut().zip(&x_best) {
                *xi = bi + shrink * (*xi - bi);
            }
            *v = eval(x);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, value) = simplex.swap_remove(0);
    NmResult { x, value, evals: evals.get(), converged }
}
