//! Independent reference values: adaptive quadrature and closed-form densities.
#![allow(dead_code)]

use std::f64::consts::PI;

use mixedts::params::CtsParams;
use num_complex::Complex64;

const GK_X: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const GK_WG: [f64; 4] = [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

fn gk15<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> (Complex64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * GK_WK[7];
    let mut gauss = fc * GK_WG[3];
    for i in 0..7 {
        let dx = h * GK_X[i];
        let pair = f(c - dx) + f(c + dx);
        kron += pair * GK_WK[i];
        if i % 2 == 1 {
            gauss += pair * GK_WG[i / 2];
        }
    }
    (kron * h, ((kron - gauss) * h).norm())
}

/// Adaptive Gauss–Kronrod 7/15 over `[a, b]` split initially into `pieces`.
pub fn integrate<F: Fn(f64) -> Complex64>(f: F, a: f64, b: f64, pieces: usize, rel_tol: f64) -> Complex64 {
    let mut stack: Vec<(f64, f64, Complex64, f64)> = (0..pieces)
        .map(|i| {
            let lo = a + (b - a) * i as f64 / pieces as f64;
            let hi = a + (b - a) * (i + 1) as f64 / pieces as f64;
            let (v, e) = gk15(&f, lo, hi);
            (lo, hi, v, e)
        })
        .collect();
    let mut done = Complex64::new(0.0, 0.0);
    let mut budget = 200_000;
    while let Some((lo, hi, v, e)) = stack.pop() {
        let total: Complex64 = done + stack.iter().map(|s| s.2).sum::<Complex64>() + v;
        budget -= 1;
        if e <= rel_tol * total.norm().max(1e-300) / (1.0 + stack.len() as f64).sqrt() || budget == 0 || hi - lo < 1e-14 * (b - a) {
            done += v;
            continue;
        }
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        stack.push((lo, mid, v1, e1));
        stack.push((mid, hi, v2, e2));
    }
    done
}

pub fn integrate_real<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, pieces: usize, rel_tol: f64) -> f64 {
    integrate(|x| Complex64::new(f(x), 0.0), a, b, pieces, rel_tol).re
}

/// `(e^{iy} - 1 - iy) / y^2` without cancellation.
fn compensated_over_sq(y: f64) -> Complex64 {
    if y.abs() < 1e-2 {
        let (y2, y3) = (y * y, y * y * y);
        Complex64::new(-0.5 + y2 / 24.0 - y2 * y2 / 720.0, -y / 6.0 + y3 / 120.0)
    } else {
        (Complex64::new(0.0, y).exp() - 1.0 - Complex64::new(0.0, y)) / (y * y)
    }
}

/// `i u mu + int (e^{iux} - 1 - iux) nu(dx)` for the CTS Lévy measure
/// `nu(dx) = C+ e^{-l+ x} x^{-1-a} dx` on `x > 0` and `C- e^{-l-|x|} |x|^{-1-a} dx` on `x < 0`,
/// by adaptive quadrature.
pub fn levy_khintchine_cts(u: f64, p: &CtsParams) -> Complex64 {
    let a = p.alpha;
    let m = 2.0 / (2.0 - a);
    let side = |sign: f64, c: f64, lambda: f64| -> Complex64 {
        let us = sign * u;
        // x = t^m on [0, 1]: (h(ux)/x^2) x^{1-a} m t^{m-1} dx = m t h(ux)/x^2
        let near = integrate(
            |t| {
                let x = t.powf(m);
                compensated_over_sq(us * x) * (us * us) * (m * t * (-lambda * x).exp())
            },
            0.0,
            1.0,
            8,
            1e-12,
        );
        let x_max = 1.0 + 80.0 / lambda;
        let pieces = ((x_max * u.abs() / PI).ceil() as usize).clamp(8, 4000);
        let far = integrate(
            |x| {
                let y = us * x;
                (Complex64::new(0.0, y).exp() - 1.0 - Complex64::new(0.0, y)) * ((-lambda * x).exp() * x.powf(-1.0 - a))
            },
            1.0,
            x_max,
            pieces,
            1e-12,
        );
        (near + far) * c
    };
    Complex64::new(0.0, u * p.mu) + side(1.0, p.c_plus, p.lambda_plus) + side(-1.0, p.c_minus, p.lambda_minus)
}

/// Modified Bessel function of the second kind, `int_0^inf exp(-z cosh t) cosh(nu t) dt`.
pub fn bessel_k(nu: f64, z: f64) -> f64 {
    let t_max = (800.0 / z + 1.0).acosh() + 1.0;
    integrate_real(|t| (-z * t.cosh()).exp() * (nu * t).cosh(), 0.0, t_max, 16, 1e-13)
}

/// Density of `sigma sqrt(V) Z`, `V ~ Gamma(a, 1)`:
/// `2 / (Gamma(a) sigma sqrt(2 pi)) (x^2 / (2 sigma^2))^{(a - 1/2)/2} K_{a-1/2}(sqrt(2) |x| / sigma)`.
pub fn symmetric_vg_density(x: f64, sigma: f64, a: f64) -> f64 {
    let g = statrs::function::gamma::gamma;
    if x == 0.0 {
        return g(a - 0.5) / (g(a) * sigma * (2.0 * PI).sqrt());
    }
    let nu = a - 0.5;
    let beta = x * x / (2.0 * sigma * sigma);
    2.0 / (g(a) * sigma * (2.0 * PI).sqrt()) * beta.powf(0.5 * nu) * bessel_k(nu, 2.0 * beta.sqrt())
}

/// Density with characteristic function `1 / (1 + gamma^alpha |u|^alpha)`,
/// `sin(pi a/2)/pi int_0^inf y^a e^{-y|x|} / (1 + y^{2a} + 2 y^a cos(pi a/2)) dy` scaled by `gamma`.
pub fn linnik_density(x: f64, alpha: f64, gamma: f64) -> f64 {
    let x = (x / gamma).abs();
    let c = (PI * alpha / 2.0).cos();
    let f = |y: f64| y.powf(alpha) * (-y * x).exp() / (1.0 + y.powf(2.0 * alpha) + 2.0 * y.powf(alpha) * c);
    let upper = 1.0 + 60.0 / x;
    let body = integrate_real(f, 0.0, 1.0, 8, 1e-12) + integrate_real(f, 1.0, upper, 64, 1e-12);
    (PI * alpha / 2.0).sin() / PI * body / gamma
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
}
