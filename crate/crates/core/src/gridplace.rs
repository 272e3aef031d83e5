//! Grid-cell phase lattices read out by a place cell through a coincidence
//! kernel against theta.
//!
//! ```
//! use std::f64::consts::{PI, TAU};
//! use cyclos::gridplace::{grid_phase, GridCell};
//!
//! let cell = GridCell::new([TAU, 0.0], 0.0).unwrap();
//! assert!((grid_phase(&cell, [0.25, 0.0]) - PI / 2.0).abs() < 1e-12);
//! ```

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::phasecode::{circular_distance, unwrapped_change, wrap_angle, Oscillator, PhaseError};
use crate::raster::Raster;

/// Quadrature intervals per theta period.
pub const STEPS_PER_PERIOD: usize = 256;

/// Start/end agreement required of a closed tour, in meters.
pub const CLOSURE_TOL_M: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("wavevector must be finite and non-zero")]
    BadWavevector,
    #[error("kernel half-width must lie in (0, π/4], got {0}")]
    BadKernelWidth(f64),
    #[error("expected {expected} weights, got {got}")]
    WeightCount { expected: usize, got: usize },
    #[error("weight {0} is negative or non-finite")]
    BadWeight(usize),
    #[error("trajectory times must be finite and strictly increasing (sample {0})")]
    TimesNotIncreasing(usize),
    #[error("trajectory does not cover [{from}, {to}]")]
    Coverage { from: f64, to: f64 },
    #[error("closure violation: tour ends {gap} m from its start and is not phase-closed")]
    NotClosed { gap: f64 },
    #[error("resolution must be at least 8×8, got {0}×{1}")]
    BadResolution(usize, usize),
    #[error("region must have positive finite extent")]
    BadRegion,
    #[error(transparent)]
    Phase(#[from] PhaseError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub wavevector: [f64; 2],
    pub offset: f64,
}

impl GridCell {
    pub fn new(wavevector: [f64; 2], offset: f64) -> Result<Self, GridError> {
        let c = GridCell { wavevector, offset };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), GridError> {
        let [a, b] = self.wavevector;
        if !(a.is_finite() && b.is_finite() && self.offset.is_finite()) || (a == 0.0 && b == 0.0) {
            return Err(GridError::BadWavevector);
        }
        Ok(())
    }

    /// Unwrapped `⟨k, x⟩ + φ`.
    fn raw_phase(&self, x: [f64; 2]) -> f64 {
        self.wavevector[0] * x[0] + self.wavevector[1] * x[1] + self.offset
    }

    fn norm(&self) -> f64 {
        self.wavevector[0].hypot(self.wavevector[1])
    }
}

/// `⟨k, x⟩ + φ` reduced into `[0, 2π)`.
pub fn grid_phase(cell: &GridCell, x: [f64; 2]) -> f64 {
    wrap_angle(cell.raw_phase(x))
}

/// Coincidence kernel on the circle with peak value 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Kernel {
    /// 1 within `half_width` of zero (inclusive), 0 elsewhere.
    Boxcar { half_width: f64 },
    /// `exp(κ(cos x − 1))` with κ chosen so the full width at half maximum is `2·half_width`.
    VonMises { half_width: f64 },
}

impl Kernel {
    pub fn half_width(&self) -> f64 {
        match *self {
            Kernel::Boxcar { half_width } | Kernel::VonMises { half_width } => half_width,
        }
    }

    pub fn eval(&self, d: f64) -> f64 {
        match *self {
            Kernel::Boxcar { half_width } => {
                if circular_distance(d, 0.0) <= half_width {
                    1.0
                } else {
                    0.0
                }
            }
            Kernel::VonMises { half_width } => {
                let kappa = std::f64::consts::LN_2 / (1.0 - half_width.cos());
                (kappa * (d.cos() - 1.0)).exp()
            }
        }
    }
}

/// Place-cell readout parameters. The threshold has no canonical value; the
/// examples use 80% of the fully aligned response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaceCellConfig {
    pub weights: Vec<f64>,
    pub threshold: f64,
    pub kernel: Kernel,
}

impl PlaceCellConfig {
    pub fn validate(&self, cells: &[GridCell]) -> Result<(), GridError> {
        let hw = self.kernel.half_width();
        if !(hw > 0.0 && hw <= PI / 4.0) {
            return Err(GridError::BadKernelWidth(hw));
        }
        if self.weights.len() != cells.len() {
            return Err(GridError::WeightCount { expected: cells.len(), got: self.weights.len() });
        }
        if let Some(i) = self.weights.iter().position(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(GridError::BadWeight(i));
        }
        cells.iter().try_for_each(GridCell::validate)
    }

    /// `Σ_j w_j κ(θ − φ_j(x))`.
    pub fn input(&self, cells: &[GridCell], theta: f64, x: [f64; 2]) -> f64 {
        cells.iter().zip(&self.weights).map(|(c, w)| w * self.kernel.eval(theta - c.raw_phase(x))).sum()
    }
}

/// Piecewise-linear path sampled at strictly increasing times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Trajectory2D {
    samples: Vec<(f64, [f64; 2])>,
}

/// Straight move by `displacement` taking `duration` seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Move {
    pub displacement: [f64; 2],
    pub duration: f64,
}

impl Trajectory2D {
    pub fn new(samples: Vec<(f64, [f64; 2])>) -> Result<Self, GridError> {
        for (i, s) in samples.iter().enumerate() {
            let finite = s.0.is_finite() && s.1[0].is_finite() && s.1[1].is_finite();
            if !finite || (i > 0 && s.0 <= samples[i - 1].0) {
                return Err(GridError::TimesNotIncreasing(i));
            }
        }
        Ok(Trajectory2D { samples })
    }

    /// Chains moves starting at `start` at time `t0`.
    pub fn from_moves(t0: f64, start: [f64; 2], moves: &[Move]) -> Result<Self, GridError> {
        let mut samples = vec![(t0, start)];
        let (mut t, mut x) = (t0, start);
        for m in moves {
            t += m.duration;
            x = [x[0] + m.displacement[0], x[1] + m.displacement[1]];
            samples.push((t, x));
        }
        Self::new(samples)
    }

    /// Stays at `x` over `[t0, t0 + duration]`.
    pub fn stationary(x: [f64; 2], t0: f64, duration: f64) -> Result<Self, GridError> {
        Self::new(vec![(t0, x), (t0 + duration, x)])
    }

    pub fn samples(&self) -> &[(f64, [f64; 2])] {
        &self.samples
    }

    pub fn start_time(&self) -> f64 {
        self.samples.first().map_or(0.0, |s| s.0)
    }

    pub fn end_time(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.0)
    }

    /// Linearly interpolated position, or `None` outside the sampled span.
    pub fn position_at(&self, t: f64) -> Option<[f64; 2]> {
        let first = self.samples.first()?;
        if t < first.0 || t > self.end_time() {
            return None;
        }
        let i = self.samples.partition_point(|s| s.0 <= t);
        if i >= self.samples.len() {
            return Some(self.samples[self.samples.len() - 1].1);
        }
        let (ta, xa) = self.samples[i - 1];
        let (tb, xb) = self.samples[i];
        let u = (t - ta) / (tb - ta);
        Some([xa[0] + u * (xb[0] - xa[0]), xa[1] + u * (xb[1] - xa[1])])
    }
}

fn trapezoid(values: &[f64], h: f64) -> f64 {
    match values {
        [] | [_] => 0.0,
        [first, inner @ .., last] => h * ((first + last) / 2.0 + inner.iter().sum::<f64>()),
    }
}

/// Average input over one theta period `[t0, t0 + T]`, by the trapezoid rule
/// with `STEPS_PER_PERIOD` intervals.
pub fn coincidence_functional(
    cfg: &PlaceCellConfig,
    cells: &[GridCell],
    traj: &Trajectory2D,
    osc: &Oscillator,
    t0: f64,
) -> Result<f64, GridError> {
    cfg.validate(cells)?;
    let period = osc.period();
    let t1 = t0 + period;
    let slack = 1e-9 * period;
    if traj.samples.is_empty() || t0 < traj.start_time() - slack || t1 > traj.end_time() + slack {
        return Err(GridError::Coverage { from: t0, to: t1 });
    }
    let h = period / STEPS_PER_PERIOD as f64;
    let values: Vec<f64> = (0..=STEPS_PER_PERIOD)
        .map(|i| {
            let t = t0 + i as f64 * h;
            let x = traj.position_at(t.clamp(traj.start_time(), traj.end_time())).expect("clamped into span");
            cfg.input(cells, osc.wrap_time(t), x)
        })
        .collect();
    Ok(trapezoid(&values, h) / period)
}

/// `∫ I_p dt` over the whole trajectory, integrating each sample interval
/// separately with steps of at most `T / STEPS_PER_PERIOD`.
pub fn path_integral(
    cfg: &PlaceCellConfig,
    cells: &[GridCell],
    traj: &Trajectory2D,
    osc: &Oscillator,
) -> Result<f64, GridError> {
    cfg.validate(cells)?;
    let max_step = osc.period() / STEPS_PER_PERIOD as f64;
    let mut total = 0.0;
    for w in traj.samples.windows(2) {
        let ((ta, xa), (tb, xb)) = (w[0], w[1]);
        let n = ((tb - ta) / max_step).ceil().max(1.0) as usize;
        let h = (tb - ta) / n as f64;
        let values: Vec<f64> = (0..=n)
            .map(|i| {
                let u = i as f64 / n as f64;
                let t = if i == n { tb } else { ta + i as f64 * h };
                let x = [xa[0] + u * (xb[0] - xa[0]), xa[1] + u * (xb[1] - xa[1])];
                cfg.input(cells, osc.wrap_time(t), x)
            })
            .collect();
        total += trapezoid(&values, h);
    }
    Ok(total)
}

/// Mean input at a stationary position over the part of the theta cycle
/// within one kernel half-width of θ = 0. For a boxcar kernel this is close
/// to `Σ w_j · max(0, 1 − d_j / 2Δ)`, with `d_j` the phase distance of cell
/// `j` from zero.
pub fn gated_functional(cfg: &PlaceCellConfig, cells: &[GridCell], x: [f64; 2], osc: &Oscillator) -> f64 {
    let hw = cfg.kernel.half_width();
    let omega = TAU * osc.frequency_hz;
    let centre = (-osc.phase_offset / TAU).rem_euclid(1.0) / osc.frequency_hz;
    let (ta, tb) = (centre - hw / omega, centre + hw / omega);
    let h = (tb - ta) / STEPS_PER_PERIOD as f64;
    let values: Vec<f64> = (0..=STEPS_PER_PERIOD)
        .map(|i| {
            let t = ta + i as f64 * h;
            cfg.input(cells, osc.wrap_time(t), x)
        })
        .collect();
    trapezoid(&values, h) / (tb - ta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x: [f64; 2],
    pub y: [f64; 2],
}

impl Rect {
    fn validate(&self) -> Result<(), GridError> {
        let ok = |[a, b]: [f64; 2]| a.is_finite() && b.is_finite() && b > a;
        if ok(self.x) && ok(self.y) {
            Ok(())
        } else {
            Err(GridError::BadRegion)
        }
    }
}

/// Gated functional sampled at cell centres; row 0 is the lowest `y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaceField {
    pub region: Rect,
    pub raster: Raster,
    pub threshold: f64,
}

impl PlaceField {
    pub fn cell_size(&self) -> [f64; 2] {
        [
            (self.region.x[1] - self.region.x[0]) / self.raster.width as f64,
            (self.region.y[1] - self.region.y[0]) / self.raster.height as f64,
        ]
    }

    pub fn centre(&self, row: usize, col: usize) -> [f64; 2] {
        let [dx, dy] = self.cell_size();
        [self.region.x[0] + (col as f64 + 0.5) * dx, self.region.y[0] + (row as f64 + 0.5) * dy]
    }

    /// Grid cell containing `x`, if inside the region.
    pub fn cell_of(&self, x: [f64; 2]) -> Option<(usize, usize)> {
        let [dx, dy] = self.cell_size();
        let col = ((x[0] - self.region.x[0]) / dx).floor();
        let row = ((x[1] - self.region.y[0]) / dy).floor();
        let inside = col >= 0.0 && row >= 0.0 && (col as usize) < self.raster.width && (row as usize) < self.raster.height;
        inside.then_some((row as usize, col as usize))
    }

    pub fn mask(&self) -> Vec<bool> {
        self.raster.mask(self.threshold)
    }

    /// Local maxima at or above the threshold.
    pub fn peaks(&self) -> Vec<(usize, usize)> {
        self.raster.local_maxima(self.threshold)
    }
}

/// Evaluates the gated functional on an `nx × ny` grid over `region`.
pub fn place_field_map(
    cfg: &PlaceCellConfig,
    cells: &[GridCell],
    osc: &Oscillator,
    region: Rect,
    resolution: (usize, usize),
) -> Result<PlaceField, GridError> {
    cfg.validate(cells)?;
    region.validate()?;
    let (nx, ny) = resolution;
    if nx < 8 || ny < 8 {
        return Err(GridError::BadResolution(nx, ny));
    }
    let mut field = PlaceField { region, raster: Raster::zeros(nx, ny), threshold: cfg.threshold };
    let values: Vec<f64> = (0..nx * ny)
        .into_par_iter()
        .map(|i| gated_functional(cfg, cells, field.centre(i / nx, i % nx), osc))
        .collect();
    field.raster.values = values;
    Ok(field)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TourReport {
    pub passed: bool,
    pub totals: [f64; 2],
    /// Winding of each grid phase along each tour.
    pub windings: [Vec<i64>; 2],
}

/// Winding number of every grid phase along a tour that is closed either in
/// the plane or on the phase torus.
pub fn tour_windings(cells: &[GridCell], traj: &Trajectory2D) -> Result<Vec<i64>, GridError> {
    let (Some(first), Some(last)) = (traj.samples.first(), traj.samples.last()) else {
        return Ok(vec![0; cells.len()]);
    };
    let gap = (last.1[0] - first.1[0]).hypot(last.1[1] - first.1[1]);
    let phase_closed = cells
        .iter()
        .all(|c| circular_distance(c.raw_phase(first.1), c.raw_phase(last.1)) <= CLOSURE_TOL_M * c.norm());
    if gap > CLOSURE_TOL_M && !phase_closed {
        return Err(GridError::NotClosed { gap });
    }
    cells
        .iter()
        .map(|c| {
            let mut phases = vec![c.raw_phase(first.1)];
            for w in traj.samples.windows(2) {
                let (xa, xb) = (w[0].1, w[1].1);
                let sweep = (c.raw_phase(xb) - c.raw_phase(xa)).abs();
                let n = (sweep / (PI / 2.0)).ceil().max(1.0) as usize;
                phases.extend((1..=n).map(|i| {
                    let u = i as f64 / n as f64;
                    c.raw_phase([xa[0] + u * (xb[0] - xa[0]), xa[1] + u * (xb[1] - xa[1])])
                }));
            }
            let total = unwrapped_change(&phases, 1e-9)?;
            Ok((total / TAU).round() as i64)
        })
        .collect()
}

/// Compares two closed tours declared to visit the same alignment sites:
/// passes iff their integrated inputs agree within `1e-6` relative and every
/// grid-phase winding matches.
pub fn tour_invariance(
    cfg: &PlaceCellConfig,
    cells: &[GridCell],
    osc: &Oscillator,
    tour_a: &Trajectory2D,
    tour_b: &Trajectory2D,
) -> Result<TourReport, GridError> {
    let wa = tour_windings(cells, tour_a)?;
    let wb = tour_windings(cells, tour_b)?;
    let ta = path_integral(cfg, cells, tour_a, osc)?;
    let tb = path_integral(cfg, cells, tour_b, osc)?;
    let scale = ta.abs().max(tb.abs());
    let totals_agree = (ta - tb).abs() <= 1e-6 * scale;
    Ok(TourReport { passed: totals_agree && wa == wb, totals: [ta, tb], windings: [wa, wb] })
}
