use std::f64::consts::TAU;

use cyclos::hopf::{detect_limit_cycle, integrate, mu_sweep, HopfParams};
use proptest::prelude::*;

/// Closed-form radius of the normal form with `a = 1`: `r²` follows the
/// logistic equation `u̇ = 2μu − 2u²`.
fn radius_oracle(mu: f64, r0: f64, t: f64) -> f64 {
    let u0 = r0 * r0;
    (mu * u0 / (u0 + (mu - u0) * (-2.0 * mu * t).exp())).sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn rotated_start_gives_rotated_run(angle in 0.0f64..TAU, r0 in 0.05f64..0.6, mu in -0.2f64..0.3) {
        let p = HopfParams::new(mu, 3.0, 1.0).unwrap();
        let a = integrate(&p, [r0, 0.0], 20.0, 1e-2).unwrap();
        let b = integrate(&p, [r0 * angle.cos(), r0 * angle.sin()], 20.0, 1e-2).unwrap();
        for (x, y) in a.norms().iter().zip(b.norms()) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn norm_follows_closed_form(mu in 0.01f64..0.3, r0 in 0.05f64..0.8) {
        let p = HopfParams::new(mu, TAU, 1.0).unwrap();
        let t = integrate(&p, [r0, 0.0], 30.0, 1e-3).unwrap();
        for (k, n) in t.norms().iter().enumerate().step_by(1000) {
            prop_assert!((n - radius_oracle(mu, r0, t.time(k))).abs() < 1e-8);
        }
    }
}

#[test]
fn radius_scales_as_sqrt_mu() {
    let base = HopfParams::new(0.0, TAU, 1.0).unwrap();
    for (mu, report) in mu_sweep(&base, &[0.01, 0.04, 0.09, 0.16], [0.3, 0.0], 600.0, 1e-3) {
        let r = report.unwrap();
        assert!(r.detected, "mu = {mu}: {r:?}");
        assert!((r.radius / mu.sqrt() - 1.0).abs() < 0.01, "mu = {mu}: {r:?}");
    }
}

#[test]
fn period_approaches_two_pi_over_omega() {
    for omega0 in [2.0, TAU, 9.0] {
        let p = HopfParams::new(0.02, omega0, 1.0).unwrap();
        let r = detect_limit_cycle(&integrate(&p, [0.2, 0.0], 400.0, 1e-3).unwrap()).unwrap();
        assert!((r.period * omega0 / TAU - 1.0).abs() < 0.01, "{r:?}");
    }
}
