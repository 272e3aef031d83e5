//! Planar Hopf normal form, a fixed-step integrator, and a Poincaré-section
//! limit-cycle detector.
//!
//! ```
//! use cyclos::hopf::{detect_limit_cycle, integrate, HopfParams};
//!
//! let p = HopfParams::new(0.04, std::f64::consts::TAU, 1.0).unwrap();
//! let traj = integrate(&p, [0.3, 0.0], 300.0, 1e-3).unwrap();
//! let report = detect_limit_cycle(&traj).unwrap();
//! assert!(report.detected);
//! assert!((report.radius - 0.2).abs() < 0.002);
//! ```

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_STEP: f64 = 1e-3;

/// Relative spread of section radii below which a cycle counts as settled.
pub const SPREAD_TOL: f64 = 0.01;

/// Crossings needed in the second half of a run.
pub const MIN_CROSSINGS: usize = 5;

#[derive(Debug, Error)]
pub enum HopfError {
    #[error("omega0 must be positive and finite, got {0}")]
    BadOmega(f64),
    #[error("parameter {name} must be finite, got {value}")]
    NonFinite { name: &'static str, value: f64 },
    #[error("step must be positive and no longer than the horizon (step {step}, horizon {horizon})")]
    BadStep { step: f64, horizon: f64 },
    #[error("state diverged at t = {time}")]
    Divergence { time: f64 },
    #[error("only {got} section crossings in the second half, need {MIN_CROSSINGS}")]
    InsufficientData { got: usize },
}

/// `ẋ = μx − ω0·y − a·x(x²+y²)`, `ẏ = ω0·x + μy − a·y(x²+y²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HopfParams {
    pub mu: f64,
    pub omega0: f64,
    pub a: f64,
}

impl HopfParams {
    pub fn new(mu: f64, omega0: f64, a: f64) -> Result<Self, HopfError> {
        let p = HopfParams { mu, omega0, a };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), HopfError> {
        if !self.mu.is_finite() {
            return Err(HopfError::NonFinite { name: "mu", value: self.mu });
        }
        if !self.a.is_finite() {
            return Err(HopfError::NonFinite { name: "a", value: self.a });
        }
        if !(self.omega0 > 0.0 && self.omega0.is_finite()) {
            return Err(HopfError::BadOmega(self.omega0));
        }
        Ok(())
    }

    pub fn field(&self, [x, y]: [f64; 2]) -> [f64; 2] {
        let r2 = x * x + y * y;
        [self.mu * x - self.omega0 * y - self.a * x * r2, self.omega0 * x + self.mu * y - self.a * y * r2]
    }
}

/// States sampled every `step` seconds from `t = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub step: f64,
    pub states: Vec<[f64; 2]>,
}

impl Trajectory {
    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.step
    }

    pub fn norms(&self) -> Vec<f64> {
        self.states.iter().map(|s| s[0].hypot(s[1])).collect()
    }

    /// `t,x,y` rows, every `stride`-th sample.
    pub fn to_csv(&self, stride: usize) -> String {
        let mut out = String::from("t,x,y\n");
        for (k, s) in self.states.iter().enumerate().step_by(stride.max(1)) {
            out.push_str(&format!("{},{},{}\n", self.time(k), s[0], s[1]));
        }
        out
    }
}

fn axpy(x: [f64; 2], h: f64, k: [f64; 2]) -> [f64; 2] {
    [x[0] + h * k[0], x[1] + h * k[1]]
}

/// Classical fourth-order Runge–Kutta with a fixed step; the number of
/// steps is `horizon / step` rounded to the nearest integer.
pub fn integrate(p: &HopfParams, x0: [f64; 2], horizon: f64, step: f64) -> Result<Trajectory, HopfError> {
    p.validate()?;
    if !(step > 0.0 && step.is_finite() && horizon.is_finite() && step <= horizon) {
        return Err(HopfError::BadStep { step, horizon });
    }
    if !(x0[0].is_finite() && x0[1].is_finite()) {
        return Err(HopfError::Divergence { time: 0.0 });
    }
    let n = (horizon / step).round() as usize;
    let mut states = Vec::with_capacity(n + 1);
    let mut x = x0;
    states.push(x);
    for k in 1..=n {
        let k1 = p.field(x);
        let k2 = p.field(axpy(x, step / 2.0, k1));
        let k3 = p.field(axpy(x, step / 2.0, k2));
        let k4 = p.field(axpy(x, step, k3));
        x = [
            x[0] + step / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            x[1] + step / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        ];
        if !(x[0].is_finite() && x[1].is_finite()) {
            return Err(HopfError::Divergence { time: k as f64 * step });
        }
        states.push(x);
    }
    Ok(Trajectory { step, states })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitCycleReport {
    pub detected: bool,
    /// Mean section radius.
    pub radius: f64,
    /// Mean interval between crossings.
    pub period: f64,
    pub crossings: usize,
    /// `(max − min) / mean` of the section radii.
    pub spread: f64,
    pub step: f64,
}

/// Crossings of the positive x-axis with `y` going from negative to
/// non-negative, linearly interpolated between samples. Only the second
/// half of the run is examined.
pub fn section_crossings(traj: &Trajectory) -> Vec<(f64, f64)> {
    let start = traj.states.len() / 2;
    let mut out = Vec::new();
    for k in start.max(1)..traj.states.len() {
        let [x0, y0] = traj.states[k - 1];
        let [x1, y1] = traj.states[k];
        if y0 < 0.0 && y1 >= 0.0 {
            let f = -y0 / (y1 - y0);
            let x = x0 + f * (x1 - x0);
            if x > 0.0 {
                out.push((traj.time(k - 1) + f * traj.step, x));
            }
        }
    }
    out
}

/// A limit cycle is detected when the section radii of the second half agree
/// to within [`SPREAD_TOL`] of their mean.
pub fn detect_limit_cycle(traj: &Trajectory) -> Result<LimitCycleReport, HopfError> {
    let crossings = section_crossings(traj);
    if crossings.len() < MIN_CROSSINGS {
        return Err(HopfError::InsufficientData { got: crossings.len() });
    }
    let n = crossings.len() as f64;
    let radius = crossings.iter().map(|c| c.1).sum::<f64>() / n;
    let (lo, hi) = crossings.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| (lo.min(c.1), hi.max(c.1)));
    let spread = if radius > 0.0 { (hi - lo) / radius } else { f64::INFINITY };
    let period = (crossings[crossings.len() - 1].0 - crossings[0].0) / (n - 1.0);
    Ok(LimitCycleReport {
        detected: radius > 0.0 && spread < SPREAD_TOL,
        radius,
        period,
        crossings: crossings.len(),
        spread,
        step: traj.step,
    })
}

/// Eigenvalues of the linearization at the origin for one `μ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenRow {
    pub mu: f64,
    pub re: f64,
    pub im: f64,
}

/// `λ = tr/2 ± i·sqrt(det − (tr/2)²)` of the Jacobian `[[μ, −ω0], [ω0, μ]]`.
pub fn eigenvalue_crossing(omega0: f64, mus: &[f64]) -> Vec<EigenRow> {
    mus.iter()
        .map(|&mu| {
            let (a, b, c, d) = (mu, -omega0, omega0, mu);
            let half_trace = (a + d) / 2.0;
            let det = a * d - b * c;
            EigenRow { mu, re: half_trace, im: (det - half_trace * half_trace).max(0.0).sqrt() }
        })
        .collect()
}

/// Smallest and largest finite-difference slope of `Re λ` over the grid.
pub fn transversality(rows: &[EigenRow]) -> Option<(f64, f64)> {
    let slopes: Vec<f64> = rows.windows(2).map(|w| (w[1].re - w[0].re) / (w[1].mu - w[0].mu)).collect();
    if slopes.is_empty() {
        return None;
    }
    Some(slopes.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &s| (lo.min(s), hi.max(s))))
}

/// Integrates and analyses each `μ` in parallel; results keep input order.
pub fn mu_sweep(
    base: &HopfParams,
    mus: &[f64],
    x0: [f64; 2],
    horizon: f64,
    step: f64,
) -> Vec<(f64, Result<LimitCycleReport, HopfError>)> {
    mus.par_iter()
        .map(|&mu| {
            let p = HopfParams { mu, ..*base };
            (mu, integrate(&p, x0, horizon, step).and_then(|t| detect_limit_cycle(&t)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    #[test]
    fn stable_focus_spirals_in() {
        let p = HopfParams::new(-0.1, TAU, 1.0).unwrap();
        let t = integrate(&p, [0.5, -0.2], 50.0, 1e-3).unwrap();
        let norms = t.norms();
        assert!(norms.windows(2).skip(100).all(|w| w[1] <= w[0]));
        assert!(norms.last().unwrap() < &0.01);
    }

    #[test]
    fn origin_is_an_equilibrium() {
        let p = HopfParams::new(0.04, TAU, 1.0).unwrap();
        let t = integrate(&p, [0.0, 0.0], 10.0, 1e-2).unwrap();
        assert!(t.states.iter().all(|s| *s == [0.0, 0.0]));
        assert!(matches!(detect_limit_cycle(&t), Err(HopfError::InsufficientData { got: 0 })));
    }

    #[test]
    fn settles_on_sqrt_mu() {
        let p = HopfParams::new(0.04, TAU, 1.0).unwrap();
        let r = detect_limit_cycle(&integrate(&p, [0.3, 0.0], 300.0, 1e-3).unwrap()).unwrap();
        assert!(r.detected);
        assert!((r.radius / 0.2 - 1.0).abs() < 0.01);
        assert!((r.period - 1.0).abs() < 0.01);
    }

    #[test]
    fn decaying_run_is_not_a_cycle() {
        let p = HopfParams::new(-0.1, TAU, 1.0).unwrap();
        let r = detect_limit_cycle(&integrate(&p, [0.3, 0.0], 200.0, 1e-3).unwrap()).unwrap();
        assert!(!r.detected);
    }

    #[test]
    fn eigenvalues_cross_with_unit_slope() {
        let rows = eigenvalue_crossing(TAU, &[-0.2, -0.1, 0.0, 0.1, 0.3]);
        assert_eq!(rows[2].re, 0.0);
        assert_eq!(rows[2].im, TAU);
        assert_eq!(rows[4].re, 0.3);
        assert_eq!(transversality(&rows), Some((1.0, 1.0)));
    }

    #[test]
    fn blow_up_is_reported() {
        // subcritical sign with a large start escapes to infinity
        let p = HopfParams::new(0.1, 1.0, -1.0).unwrap();
        assert!(matches!(integrate(&p, [3.0, 0.0], 10.0, 1e-2), Err(HopfError::Divergence { .. })));
    }

    #[test]
    fn bad_parameters() {
        assert!(HopfParams::new(0.1, 0.0, 1.0).is_err());
        let p = HopfParams::new(0.1, 1.0, 1.0).unwrap();
        assert!(integrate(&p, [0.1, 0.0], 1.0, 0.0).is_err());
    }
}
