//! Special functions used by the characteristic exponents.

use std::f64::consts::PI;

use num_complex::Complex64;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function on the real line, Lanczos approximation with the
/// reflection formula below 1/2. Poles return NaN.
pub fn gamma(x: f64) -> f64 {
    if x <= 0.0 && x.fract() == 0.0 {
        return f64::NAN;
    }
    if x < 0.5 {
        PI / ((PI * x).sin() * gamma(1.0 - x))
    } else {
        let x = x - 1.0;
        let mut acc = LANCZOS_COEF[0];
        for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
            acc += c / (x + i as f64);
        }
        let t = x + LANCZOS_G + 0.5;
        (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
    }
}

/// `ln(1 + z)` accurate for small `|z|`.
pub fn log1p(z: Complex64) -> Complex64 {
    let (x, y) = (z.re, z.im);
    // |1+z|^2 - 1 without cancellation
    let re = 0.5 * (x * (2.0 + x) + y * y).ln_1p();
    Complex64::new(re, y.atan2(1.0 + x))
}

/// `exp(z) - 1` accurate for small `|z|`.
pub fn expm1(z: Complex64) -> Complex64 {
    let (x, y) = (z.re, z.im);
    let half = (0.5 * y).sin();
    let re = x.exp_m1() * y.cos() - 2.0 * half * half;
    Complex64::new(re, x.exp() * y.sin())
}

/// `[(1 + z)^alpha - 1 - alpha z] / (alpha (alpha - 1))` on the principal branch.
///
/// This is the building block of every tempered-stable exponent. The power
/// series path removes the `alpha (alpha - 1)` factor analytically, so small
/// `|z|` (the neighbourhood of the origin in frequency) is evaluated without
/// cancellation.
pub fn tempered_kernel(z: Complex64, alpha: f64) -> Complex64 {
    if z.norm() < 0.25 {
        // sum_{k>=2} (alpha-2)...(alpha-k+1)/k! z^k
        let mut coef = 0.5;
        let mut zk = z * z;
        let mut sum = zk * coef;
        for k in 3..64 {
            coef *= (alpha - (k as f64 - 1.0)) / k as f64;
            zk *= z;
            let term = zk * coef;
            sum += term;
            if term.norm() <= 1e-18 * sum.norm() {
                break;
            }
        }
        sum
    } else {
        (expm1(log1p(z) * alpha) - z * alpha) / (alpha * (alpha - 1.0))
    }
}
