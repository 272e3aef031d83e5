//! Oscillator phases on the circle, phase bins, the phase-ring 1-cycle and
//! winding numbers on `S¹` and on the θ×γ torus.
//!
//! ```
//! use cyclos::phasecode::{winding_number, Oscillator, DEFAULT_PHASE_TOL};
//!
//! let theta = Oscillator::new(8.0, 0.0).unwrap();
//! let lap: Vec<f64> = (0..=16).map(|k| theta.wrap_time(k as f64 / 128.0)).collect();
//! assert_eq!(winding_number(&lap, true, DEFAULT_PHASE_TOL).unwrap(), 1);
//! ```

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::{Chain1, ChainComplex, ChainError};

/// Closure tolerance in radians when none is given.
pub const DEFAULT_PHASE_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhaseError {
    #[error("frequency must be positive and finite, got {0}")]
    BadFrequency(f64),
    #[error("need at least 2 phase bins, got {0}")]
    TooFewBins(usize),
    #[error("ambiguous unwrap: gap of {gap} rad between samples {index} and {next}", next = index + 1)]
    AmbiguousGap { index: usize, gap: f64 },
    #[error("closure violation: path ends {gap} rad away from its start")]
    NotClosed { gap: f64 },
    #[error("non-finite phase at sample {0}")]
    NonFinite(usize),
    #[error(transparent)]
    Chain(#[from] ChainError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Oscillator {
    pub frequency_hz: f64,
    pub phase_offset: f64,
}

impl Oscillator {
    pub fn new(frequency_hz: f64, phase_offset: f64) -> Result<Self, PhaseError> {
        if !(frequency_hz.is_finite() && frequency_hz > 0.0) {
            return Err(PhaseError::BadFrequency(frequency_hz));
        }
        Ok(Oscillator { frequency_hz, phase_offset })
    }

    pub fn period(&self) -> f64 {
        1.0 / self.frequency_hz
    }

    /// `2π·f·t + offset` reduced into `[0, 2π)`.
    pub fn wrap_time(&self, t: f64) -> f64 {
        wrap_cycles(self.frequency_hz * t + self.phase_offset / TAU)
    }
}

/// Fractional part of a cycle count, as an angle in `[0, 2π)`.
fn wrap_cycles(cycles: f64) -> f64 {
    let frac = cycles - cycles.floor();
    let phase = TAU * frac;
    if phase >= TAU {
        0.0
    } else {
        phase
    }
}

/// Reduces any angle into `[0, 2π)`.
pub fn wrap_angle(a: f64) -> f64 {
    wrap_cycles(a / TAU)
}

/// `min(|a−b|, 2π−|a−b|)` after reduction.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (wrap_angle(a) - wrap_angle(b)).abs();
    d.min(TAU - d)
}

/// Signed difference `b − a` on the nearest branch, in `[−π, π)`.
pub fn nearest_branch(a: f64, b: f64) -> f64 {
    (b - a + PI).rem_euclid(TAU) - PI
}

/// `L` equal bins partitioning `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseBinning {
    bins: usize,
}

impl PhaseBinning {
    pub fn new(bins: usize) -> Result<Self, PhaseError> {
        if bins < 2 {
            return Err(PhaseError::TooFewBins(bins));
        }
        Ok(PhaseBinning { bins })
    }

    pub fn bin_count(&self) -> usize {
        self.bins
    }

    pub fn width(&self) -> f64 {
        TAU / self.bins as f64
    }

    /// Lower boundary of each bin, ascending from 0.
    pub fn boundaries(&self) -> Vec<f64> {
        (0..self.bins).map(|l| l as f64 * self.width()).collect()
    }

    pub fn bin_of(&self, phase: f64) -> usize {
        ((wrap_angle(phase) / self.width()).floor() as usize).min(self.bins - 1)
    }
}

/// Ring complex with one vertex per bin and edges `v_ℓ → v_{ℓ+1 mod L}`,
/// plus the full-sweep chain `Σ e_ℓ`.
pub fn phase_ring_chain(bins: &PhaseBinning) -> Result<(ChainComplex, Chain1), PhaseError> {
    let l = bins.bin_count() as u32;
    let edges = (0..l).map(|i| (i, (i + 1) % l)).collect();
    let x = ChainComplex::new((0..l).collect(), edges, vec![])?;
    let c = Chain1::from_ints((0..l as usize).map(|e| (e, 1)));
    Ok((x, c))
}

/// Phases visited by jumping `k` bins at a time for `L` steps, starting and
/// ending at bin 0 (bin lower boundaries).
pub fn modular_jump_phases(bins: &PhaseBinning, k: usize) -> Vec<f64> {
    let l = bins.bin_count();
    (0..=l).map(|step| ((k * step) % l) as f64 * bins.width()).collect()
}

/// Net number of turns of a sampled phase path.
///
/// Consecutive samples are joined along the shorter arc; a gap within `tol`
/// of π is ambiguous and rejected. With `closed`, the endpoints must agree
/// modulo 2π within `tol`.
pub fn winding_number(phases: &[f64], closed: bool, tol: f64) -> Result<i64, PhaseError> {
    if let Some(i) = phases.iter().position(|p| !p.is_finite()) {
        return Err(PhaseError::NonFinite(i));
    }
    let total = unwrapped_change(phases, tol)?;
    if closed {
        if let (Some(&first), Some(&last)) = (phases.first(), phases.last()) {
            let gap = circular_distance(first, last);
            if gap > tol {
                return Err(PhaseError::NotClosed { gap });
            }
        }
    }
    Ok((total / TAU).round() as i64)
}

/// Sum of nearest-branch steps.
pub fn unwrapped_change(phases: &[f64], tol: f64) -> Result<f64, PhaseError> {
    let mut total = 0.0;
    for (i, w) in phases.windows(2).enumerate() {
        let d = nearest_branch(w[0], w[1]);
        if d.abs() >= PI - tol {
            return Err(PhaseError::AmbiguousGap { index: i, gap: d.abs() });
        }
        total += d;
    }
    Ok(total)
}

/// Samples `(θ, γ)` of a path on the two-phase torus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TorusPath {
    pub samples: Vec<(f64, f64)>,
}

impl TorusPath {
    pub fn new(samples: Vec<(f64, f64)>) -> Self {
        TorusPath { samples }
    }

    /// Samples two oscillators at `n + 1` evenly spaced times over `[0, duration]`.
    pub fn from_oscillators(theta: &Oscillator, gamma: &Oscillator, duration: f64, n: usize) -> Self {
        let samples = (0..=n)
            .map(|k| {
                let t = duration * k as f64 / n as f64;
                (theta.wrap_time(t), gamma.wrap_time(t))
            })
            .collect();
        TorusPath { samples }
    }
}

/// Winding pair `(k_γ, k_θ)` of a closed torus path.
pub fn torus_winding(path: &TorusPath, tol: f64) -> Result<(i64, i64), PhaseError> {
    let theta: Vec<f64> = path.samples.iter().map(|s| s.0).collect();
    let gamma: Vec<f64> = path.samples.iter().map(|s| s.1).collect();
    let k_theta = winding_number(&theta, true, tol)?;
    let k_gamma = winding_number(&gamma, true, tol)?;
    Ok((k_gamma, k_theta))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_examples() {
        let o = Oscillator::new(8.0, 0.0).unwrap();
        assert_eq!(o.wrap_time(0.0), 0.0);
        assert_eq!(o.wrap_time(0.125), 0.0);
        assert!((o.wrap_time(0.03125) - PI / 2.0).abs() < 1e-15);
        assert!(Oscillator::new(0.0, 0.0).is_err());
        assert!(Oscillator::new(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn ring_chains() {
        let (x, c) = phase_ring_chain(&PhaseBinning::new(3).unwrap()).unwrap();
        assert!(x.boundary1(&c).unwrap().is_zero());
        let (x, c) = phase_ring_chain(&PhaseBinning::new(12).unwrap()).unwrap();
        assert_eq!(x.betti(1).unwrap(), 1);
        assert!(!x.homology_class(&c).unwrap().is_zero());
        let mut open = c.clone();
        open.add_term(5, crate::linalg::q(-1));
        assert!(!x.boundary1(&open).unwrap().is_zero());
        assert_eq!(PhaseBinning::new(1).unwrap_err(), PhaseError::TooFewBins(1));
    }

    #[test]
    fn laps() {
        let ccw: Vec<f64> = (0..=8).map(|k| k as f64 * TAU / 8.0).collect();
        assert_eq!(winding_number(&ccw, true, DEFAULT_PHASE_TOL).unwrap(), 1);
        let cw: Vec<f64> = ccw.iter().rev().copied().collect();
        assert_eq!(winding_number(&cw, true, DEFAULT_PHASE_TOL).unwrap(), -1);
        let jumps = modular_jump_phases(&PhaseBinning::new(5).unwrap(), 2);
        assert_eq!(winding_number(&jumps, true, DEFAULT_PHASE_TOL).unwrap(), 2);
    }

    #[test]
    fn unwrap_errors() {
        assert!(matches!(
            winding_number(&[0.0, PI], false, DEFAULT_PHASE_TOL),
            Err(PhaseError::AmbiguousGap { index: 0, .. })
        ));
        assert!(matches!(winding_number(&[0.0, 1.0], true, DEFAULT_PHASE_TOL), Err(PhaseError::NotClosed { .. })));
        assert_eq!(winding_number(&[0.0, 1.0], false, DEFAULT_PHASE_TOL).unwrap(), 0);
    }

    #[test]
    fn nested_gamma_in_theta() {
        let theta = Oscillator::new(8.0, 0.0).unwrap();
        let gamma = Oscillator::new(40.0, 0.0).unwrap();
        let path = TorusPath::from_oscillators(&theta, &gamma, 0.125, 400);
        assert_eq!(torus_winding(&path, 1e-9).unwrap(), (5, 1));
        let still = TorusPath::new(vec![(1.0, 2.0); 4]);
        assert_eq!(torus_winding(&still, 1e-9).unwrap(), (0, 0));
        let theta_only = TorusPath::new((0..=8).map(|k| (k as f64 * TAU / 8.0, 0.5)).collect());
        assert_eq!(torus_winding(&theta_only, 1e-9).unwrap(), (0, 1));
    }

    #[test]
    fn binning() {
        let b = PhaseBinning::new(4).unwrap();
        assert_eq!(b.bin_of(0.0), 0);
        assert_eq!(b.bin_of(PI), 2);
        assert_eq!(b.bin_of(-0.1), 3);
        assert_eq!(b.boundaries().len(), 4);
    }
}
