mod common;

use std::f64::consts::PI;

use mixedts::charfn::{cts_log_cf, mixedts_log_cf, scaled_stdcts_log_cf, stdcts_log_cf, CfGridSpec};
use mixedts::density::{invert_cf, mixedts_density, mixedts_density_on, mixedts_grid_spec};
use mixedts::moments::mixedts_moments;
use mixedts::params::{CtsParams, MixedTsParams, StdCtsParams};
use num_complex::Complex64;
use proptest::prelude::*;

fn vfiax() -> MixedTsParams {
    MixedTsParams::new(-0.0681, 0.0601, 1.0530, 1.1670, 1.0280, 1.0311, 1.4717).unwrap()
}

#[test]
fn bessel_oracle_matches_half_order_closed_form() {
    for &z in &[0.1, 1.0, 3.0, 10.0] {
        let exact = (PI / (2.0 * z)).sqrt() * (-z).exp();
        assert!((common::bessel_k(0.5, z) - exact).abs() < 1e-12 * exact.max(1e-300) + 1e-15);
        let k32 = exact * (1.0 + 1.0 / z);
        assert!((common::bessel_k(1.5, z) - k32).abs() < 1e-11 * k32);
    }
}

#[test]
fn vg_oracle_is_a_density() {
    let mass = common::integrate_real(|x| 2.0 * common::symmetric_vg_density(x, 1.0, 2.0), 0.0, 60.0, 60, 1e-12);
    assert!((mass - 1.0).abs() < 1e-9, "{mass}");
}

#[test]
fn vg_density_matches_bessel_form() {
    let p = MixedTsParams::vg(0.0, 0.0, 1.0, 2.0).unwrap();
    let g = mixedts_density_on(&p, &mixedts_grid_spec(&p, 1 << 15).unwrap()).unwrap();
    let sup = g
        .xs()
        .zip(&g.values)
        .filter(|(x, _)| x.abs() < 20.0)
        .map(|(x, v)| (v - common::symmetric_vg_density(x, 1.0, 2.0)).abs())
        .fold(0.0, f64::max);
    assert!(sup < 1e-6, "{sup}");
}

#[test]
fn linnik_oracle_matches_inverted_limit() {
    // The limit law itself, inverted on a wide grid, agrees with the Stieltjes-form density.
    let alpha = 1.5;
    let spec = CfGridSpec::new((1 << 18) as f64 * PI / 1000.0, 1 << 18).unwrap();
    let g = invert_cf(|u| Ok(Complex64::new(-(u.abs().powf(alpha)).ln_1p(), 0.0)), &spec).unwrap();
    for &x in &[0.3, 1.0, 2.5, 7.0] {
        let (a, b) = (g.pdf(x), common::linnik_density(x, alpha, 1.0));
        assert!((a - b).abs() < 1e-3 * b, "x={x}: {a} vs {b}");
    }
}

#[test]
fn vfiax_density_is_unimodal_with_closed_form_skew() {
    let g = mixedts_density_on(&vfiax(), &mixedts_grid_spec(&vfiax(), 1 << 18).unwrap()).unwrap();
    let closed = mixedts_moments(&vfiax()).skewness;
    assert!((g.moments().skewness - closed).abs() < 0.01 * closed.abs(), "{} vs {closed}", g.moments().skewness);
    let peak = g.values.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
    // Truncation ripple from the slowly decaying cf.
    let tol = 1e-6 * g.values[peak];
    assert!(g.values[..peak].windows(2).all(|w| w[1] >= w[0] - tol));
    assert!(g.values[peak..].windows(2).all(|w| w[1] <= w[0] + tol));
}

#[test]
fn symmetric_median_is_zero() {
    let p = MixedTsParams::new(0.0, 0.0, 1.0, 1.5, 1.0, 1.0, 1.6).unwrap();
    let g = mixedts_density(&p).unwrap();
    assert!(g.quantile(0.5).unwrap().abs() <= g.dx);
    for &x in &[-2.0, -0.3, 0.7, 3.1] {
        assert!((g.quantile(g.cdf(x)).unwrap() - x).abs() <= g.dx);
    }
}

#[test]
fn cts_example_matches_quadrature() {
    let p = CtsParams { alpha: 0.5, lambda_plus: 2.0, lambda_minus: 3.0, c_plus: 1.0, c_minus: 1.0, mu: 0.0 };
    let (a, b) = (cts_log_cf(1.0, &p).unwrap(), common::levy_khintchine_cts(1.0, &p));
    assert!((a - b).norm() < 1e-10 * b.norm());
}

fn mixed() -> impl Strategy<Value = MixedTsParams> {
    (-1.0..1.0, -1.0..1.0, 0.2..3.0, 0.3..5.0, 0.2..6.0, 0.2..6.0, 0.1..1.95f64)
        .prop_filter("alpha away from one", |t| (t.6 - 1.0).abs() > 1e-3)
        .prop_map(|(m0, m, s, a, lp, lm, al)| MixedTsParams::new(m0, m, s, a, lp, lm, al).unwrap())
}

proptest! {
    #[test]
    fn mixed_cf_modulus_and_symmetry(p in mixed(), u in -30.0..30.0f64) {
        let v = mixedts_log_cf(u, &p).unwrap();
        prop_assert!(v.re <= 1e-12);
        let w = mixedts_log_cf(-u, &p).unwrap();
        prop_assert!((v.conj() - w).norm() <= 1e-10 * (1.0 + v.norm()));
    }

    #[test]
    fn stdcts_real_part_nonpositive(p in mixed(), u in -50.0..50.0f64) {
        let core = StdCtsParams::new(p.alpha, p.lambda_plus, p.lambda_minus).unwrap();
        prop_assert!(stdcts_log_cf(u, &core).unwrap().re <= 1e-12);
    }

    #[test]
    fn scaled_exponent_is_linear_in_h(p in mixed(), u in -10.0..10.0f64, h in 1u32..5) {
        let core = StdCtsParams::new(p.alpha, p.lambda_plus, p.lambda_minus).unwrap();
        let one = scaled_stdcts_log_cf(u, &core, 1.0).unwrap();
        let many = scaled_stdcts_log_cf(u, &core, h as f64).unwrap();
        prop_assert!((many - one * h as f64).norm() <= 1e-12 * (1.0 + many.norm()));
    }
}
