//! Generalised Hough transform accumulated over a sequence of glimpses, with
//! gaze re-registration and superlevel persistence of the accumulator.
//!
//! ```
//! use cyclos::ght::{accumulate, argmax_peak, AccConfig, Feature, GazeTransform, Glimpse, ModelTable};
//!
//! let table = ModelTable::from_pairs([(7, [2.0, 0.0])]);
//! let cfg = AccConfig::delta([0.0, 0.0], 1.0, 10, 10);
//! let f = Feature { position: [3.2, 4.7], orientation: 0.0, descriptor: 7 };
//! let acc = accumulate(&[Glimpse::new(GazeTransform::identity(), vec![f])], &table, &cfg).unwrap();
//! assert_eq!(argmax_peak(&acc).unwrap().cell, (4, 5));
//! ```

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::persist::{sort_bars, Bar, Barcode, Direction};
use crate::raster::Raster;
use crate::unionfind::UnionFind;

/// Composition error allowed when testing a gaze path for closure.
pub const GAZE_CLOSURE_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GhtError {
    #[error("descriptor {0} is not in the model table")]
    UnknownDescriptor(u32),
    #[error("accumulator grid must be non-empty with a positive cell size")]
    BadGrid,
    #[error("kernel bandwidth must be positive")]
    BadKernel,
    #[error("accumulator holds no votes")]
    NoPeak,
    #[error("thresholds must be finite and strictly descending")]
    Thresholds,
    #[error("non-finite feature or gaze coordinate")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Feature {
    pub position: [f64; 2],
    pub orientation: f64,
    pub descriptor: u32,
}

/// Rigid motion `x ↦ R(rotation)·x + translation`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GazeTransform {
    pub rotation: f64,
    pub translation: [f64; 2],
}

fn rotate(a: f64, v: [f64; 2]) -> [f64; 2] {
    if a == 0.0 {
        return v;
    }
    let (s, c) = a.sin_cos();
    [c * v[0] - s * v[1], s * v[0] + c * v[1]]
}

impl GazeTransform {
    pub fn identity() -> Self {
        GazeTransform { rotation: 0.0, translation: [0.0, 0.0] }
    }

    pub fn translation(dx: f64, dy: f64) -> Self {
        GazeTransform { rotation: 0.0, translation: [dx, dy] }
    }

    pub fn apply(&self, x: [f64; 2]) -> [f64; 2] {
        let r = rotate(self.rotation, x);
        [r[0] + self.translation[0], r[1] + self.translation[1]]
    }

    pub fn apply_feature(&self, f: &Feature) -> Feature {
        Feature { position: self.apply(f.position), orientation: f.orientation + self.rotation, ..*f }
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &GazeTransform) -> GazeTransform {
        GazeTransform { rotation: self.rotation + other.rotation, translation: self.apply(other.translation) }
    }

    pub fn inverse(&self) -> GazeTransform {
        let t = rotate(-self.rotation, self.translation);
        GazeTransform { rotation: -self.rotation, translation: [-t[0], -t[1]] }
    }

    /// Identity up to `tol` in translation and in rotation modulo 2π.
    pub fn is_identity(&self, tol: f64) -> bool {
        let r = self.rotation.rem_euclid(TAU);
        r.min(TAU - r) <= tol && self.translation[0].abs() <= tol && self.translation[1].abs() <= tol
    }
}

/// Offset from a feature to the reference point, in the feature's own frame.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ModelTable {
    pub offsets: BTreeMap<u32, [f64; 2]>,
}

impl ModelTable {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (u32, [f64; 2])>) -> Self {
        ModelTable { offsets: pairs.into_iter().collect() }
    }

    /// Reference point voted for by `f`: its position plus its rotated offset.
    pub fn vote(&self, f: &Feature) -> Result<[f64; 2], GhtError> {
        let off = self.offsets.get(&f.descriptor).ok_or(GhtError::UnknownDescriptor(f.descriptor))?;
        let r = rotate(f.orientation, *off);
        Ok([f.position[0] + r[0], f.position[1] + r[1]])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Glimpse {
    pub gaze: GazeTransform,
    /// Features as seen under `gaze`.
    pub features: Vec<Feature>,
}

impl Glimpse {
    pub fn new(gaze: GazeTransform, features: Vec<Feature>) -> Self {
        Glimpse { gaze, features }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GhtKernel {
    /// Whole vote into the containing cell.
    Delta,
    /// Gaussian over cell centres within 3σ, normalised to unit mass.
    Gaussian { sigma: f64 },
}

/// Translation grid: cell `(row, col)` covers
/// `[origin + col·cell, origin + (col+1)·cell) × [origin + row·cell, …)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccConfig {
    pub origin: [f64; 2],
    pub cell: f64,
    pub width: usize,
    pub height: usize,
    pub kernel: GhtKernel,
}

impl AccConfig {
    pub fn delta(origin: [f64; 2], cell: f64, width: usize, height: usize) -> Self {
        AccConfig { origin, cell, width, height, kernel: GhtKernel::Delta }
    }

    fn validate(&self) -> Result<(), GhtError> {
        if !(self.cell.is_finite() && self.cell > 0.0 && self.width > 0 && self.height > 0)
            || !self.origin.iter().all(|o| o.is_finite())
        {
            return Err(GhtError::BadGrid);
        }
        if let GhtKernel::Gaussian { sigma } = self.kernel {
            if !(sigma.is_finite() && sigma > 0.0) {
                return Err(GhtError::BadKernel);
            }
        }
        Ok(())
    }

    /// Signed cell coordinates `(row, col)` containing `p`.
    pub fn cell_index(&self, p: [f64; 2]) -> (i64, i64) {
        (
            ((p[1] - self.origin[1]) / self.cell).floor() as i64,
            ((p[0] - self.origin[0]) / self.cell).floor() as i64,
        )
    }

    pub fn cell_centre(&self, row: i64, col: i64) -> [f64; 2] {
        [self.origin[0] + (col as f64 + 0.5) * self.cell, self.origin[1] + (row as f64 + 0.5) * self.cell]
    }

    fn inside(&self, row: i64, col: i64) -> bool {
        row >= 0 && col >= 0 && (row as usize) < self.height && (col as usize) < self.width
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Accumulator {
    pub config: AccConfig,
    pub grid: Raster,
    /// Vote mass that fell outside the grid.
    pub overflow: f64,
    /// Votes whose point lies outside the grid.
    pub overflow_votes: usize,
}

#[derive(Debug, Clone, Copy)]
struct Vote {
    descriptor: u32,
    cell: (i64, i64),
    point: [f64; 2],
}

impl Vote {
    fn key(&self) -> (u32, i64, i64, u64, u64) {
        (self.descriptor, self.cell.0, self.cell.1, self.point[0].to_bits(), self.point[1].to_bits())
    }
}

/// Sums kernel votes of every re-registered feature, `g⁻¹·f`, in a canonical
/// order so the grid is bit-identical under any ordering of glimpses or of
/// features within a glimpse.
pub fn accumulate(glimpses: &[Glimpse], table: &ModelTable, cfg: &AccConfig) -> Result<Accumulator, GhtError> {
    cfg.validate()?;
    let per_glimpse: Vec<Vec<Vote>> = glimpses
        .par_iter()
        .map(|g| {
            if !(g.gaze.rotation.is_finite() && g.gaze.translation.iter().all(|t| t.is_finite())) {
                return Err(GhtError::NonFinite);
            }
            let back = g.gaze.inverse();
            g.features
                .iter()
                .map(|f| {
                    let point = table.vote(&back.apply_feature(f))?;
                    if !point.iter().all(|p| p.is_finite()) {
                        return Err(GhtError::NonFinite);
                    }
                    Ok(Vote { descriptor: f.descriptor, cell: cfg.cell_index(point), point })
                })
                .collect()
        })
        .collect::<Result<_, _>>()?;
    let mut votes: Vec<Vote> = per_glimpse.into_iter().flatten().collect();
    votes.sort_unstable_by_key(Vote::key);

    let mut acc = Accumulator { config: cfg.clone(), grid: Raster::zeros(cfg.width, cfg.height), overflow: 0.0, overflow_votes: 0 };
    for v in &votes {
        if !cfg.inside(v.cell.0, v.cell.1) {
            acc.overflow_votes += 1;
        }
        match cfg.kernel {
            GhtKernel::Delta => deposit(&mut acc, v.cell.0, v.cell.1, 1.0),
            GhtKernel::Gaussian { sigma } => {
                let reach = (3.0 * sigma / cfg.cell).ceil() as i64;
                let mut footprint = Vec::new();
                for r in v.cell.0 - reach..=v.cell.0 + reach {
                    for c in v.cell.1 - reach..=v.cell.1 + reach {
                        let ctr = cfg.cell_centre(r, c);
                        let d2 = (ctr[0] - v.point[0]).powi(2) + (ctr[1] - v.point[1]).powi(2);
                        if d2 <= 9.0 * sigma * sigma {
                            footprint.push((r, c, (-d2 / (2.0 * sigma * sigma)).exp()));
                        }
                    }
                }
                let mass: f64 = footprint.iter().map(|f| f.2).sum();
                for (r, c, w) in footprint {
                    deposit(&mut acc, r, c, w / mass);
                }
            }
        }
    }
    Ok(acc)
}

fn deposit(acc: &mut Accumulator, row: i64, col: i64, w: f64) {
    if acc.config.inside(row, col) {
        acc.grid.values[row as usize * acc.config.width + col as usize] += w;
    } else {
        acc.overflow += w;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    /// `(row, col)` of the maximum.
    pub cell: (usize, usize),
    pub centre: [f64; 2],
    pub value: f64,
    /// Another cell holds the same maximum; the lowest linear index wins.
    pub tie: bool,
}

pub fn argmax_peak(acc: &Accumulator) -> Result<Peak, GhtError> {
    let (row, col) = acc.grid.argmax().ok_or(GhtError::NoPeak)?;
    let value = acc.grid.get(row, col);
    if !(value > 0.0) {
        return Err(GhtError::NoPeak);
    }
    let tie = acc.grid.values.iter().filter(|&&v| v == value).count() > 1;
    let centre = acc.config.cell_centre(row as i64, col as i64);
    Ok(Peak { cell: (row, col), centre, value, tie })
}

/// A sequence of saccades; gaze after step `t` is `s_1 ∘ … ∘ s_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GazePath {
    pub saccades: Vec<GazeTransform>,
}

impl GazePath {
    pub fn gazes(&self) -> Vec<GazeTransform> {
        let mut g = GazeTransform::identity();
        self.saccades
            .iter()
            .map(|s| {
                g = g.compose(s);
                g
            })
            .collect()
    }

    pub fn net(&self) -> GazeTransform {
        self.gazes().last().copied().unwrap_or_else(GazeTransform::identity)
    }

    pub fn is_closed(&self) -> bool {
        self.net().is_identity(GAZE_CLOSURE_TOL)
    }
}

/// World-frame features of a scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub features: Vec<Feature>,
}

impl Scene {
    /// Glimpses of the whole scene along `path`, each seen under its gaze.
    pub fn glimpses(&self, path: &GazePath) -> Vec<Glimpse> {
        path.gazes()
            .into_iter()
            .map(|g| Glimpse::new(g, self.features.iter().map(|f| g.apply_feature(f)).collect()))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathAudit {
    pub closed: bool,
    pub reregistered: bool,
    pub peak: Option<(usize, usize)>,
    pub value: f64,
    pub tie: bool,
    /// Peak of each glimpse on its own, in glimpse order.
    pub track: Vec<Option<(usize, usize)>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    /// Every path has a peak and all peaks lie within one cell of each other.
    pub passed: bool,
    pub paths: Vec<PathAudit>,
}

/// Accumulates the scene along each gaze path and compares the peaks. Without
/// re-registration, glimpses are accumulated as seen, so an open path keeps
/// its gaze offset and usually shows up as a mismatch.
pub fn saccade_invariance_audit(
    scene: &Scene,
    paths: &[GazePath],
    table: &ModelTable,
    cfg: &AccConfig,
    reregister: bool,
) -> Result<AuditReport, GhtError> {
    let mut audits = Vec::with_capacity(paths.len());
    for path in paths {
        let mut glimpses = scene.glimpses(path);
        if !reregister {
            for g in &mut glimpses {
                g.gaze = GazeTransform::identity();
            }
        }
        let acc = accumulate(&glimpses, table, cfg)?;
        let peak = argmax_peak(&acc).ok();
        let track = glimpses
            .iter()
            .map(|g| {
                accumulate(std::slice::from_ref(g), table, cfg).map(|a| argmax_peak(&a).ok().map(|p| p.cell))
            })
            .collect::<Result<_, _>>()?;
        audits.push(PathAudit {
            closed: path.is_closed(),
            reregistered: reregister,
            peak: peak.as_ref().map(|p| p.cell),
            value: peak.as_ref().map_or(0.0, |p| p.value),
            tie: peak.as_ref().is_some_and(|p| p.tie),
            track,
        });
    }
    let cells: Option<Vec<(usize, usize)>> = audits.iter().map(|a| a.peak).collect();
    let passed = match cells {
        Some(c) if !c.is_empty() => c.iter().all(|a| c.iter().all(|b| a.0.abs_diff(b.0) <= 1 && a.1.abs_diff(b.1) <= 1)),
        _ => false,
    };
    Ok(AuditReport { passed, paths: audits })
}

/// H0 barcode of the superlevel sets `{Ā ≥ t}` over the given descending
/// thresholds, with 4-connectivity. A positive cell enters at the first
/// threshold not above its value; zero cells never enter. When components
/// meet, the one that entered later dies (ties: lower peak value, then
/// higher linear index). Bars that die at their birth threshold are omitted.
pub fn peak_persistence(acc: &Accumulator, thresholds: &[f64]) -> Result<Barcode, GhtError> {
    if thresholds.iter().any(|t| !t.is_finite()) || thresholds.windows(2).any(|w| w[1] >= w[0]) {
        return Err(GhtError::Thresholds);
    }
    let g = &acc.grid;
    let entry = |v: f64| if v > 0.0 { thresholds.iter().position(|&t| v >= t) } else { None };
    let mut cells: Vec<(usize, usize)> = g.values.iter().enumerate().filter_map(|(i, &v)| entry(v).map(|s| (s, i))).collect();
    // by entry step, then higher value, then index
    cells.sort_by(|a, b| a.0.cmp(&b.0).then(g.values[b.1].total_cmp(&g.values[a.1])).then(a.1.cmp(&b.1)));
    let mut rank = vec![usize::MAX; g.values.len()];
    for (r, &(_, i)) in cells.iter().enumerate() {
        rank[i] = r;
    }
    let mut uf = UnionFind::new(g.values.len());
    let mut bars = Vec::new();
    for &(step, i) in &cells {
        let (row, col) = (i / g.width, i % g.width);
        let mut neighbours = Vec::with_capacity(4);
        if row > 0 {
            neighbours.push(i - g.width);
        }
        if row + 1 < g.height {
            neighbours.push(i + g.width);
        }
        if col > 0 {
            neighbours.push(i - 1);
        }
        if col + 1 < g.width {
            neighbours.push(i + 1);
        }
        for n in neighbours {
            if rank[n] > rank[i] {
                continue;
            }
            let (ra, rb) = (uf.find(i), uf.find(n));
            if ra == rb {
                continue;
            }
            // roots are kept as the earliest-ranked cell of their component
            let (elder, younger) = if rank[ra] < rank[rb] { (ra, rb) } else { (rb, ra) };
            let birth = thresholds[cells[rank[younger]].0];
            let death = thresholds[step];
            if birth != death {
                bars.push(Bar::new(0, birth, Some(death)));
            }
            uf.union_into(elder, younger);
        }
    }
    for &(s, i) in &cells {
        if uf.find(i) == i {
            bars.push(Bar::new(0, thresholds[s], None));
        }
    }
    sort_bars(&mut bars);
    bars.reverse();
    let mut code = Barcode::new(bars, Direction::Superlevel);
    code.horizon = thresholds.last().copied();
    Ok(code)
}

/// Object features arranged so every one votes for `centre`, plus uniformly
/// placed clutter with random descriptors, all inside `[0, extent)²`.
pub fn synthetic_scene<R: Rng>(rng: &mut R, table: &ModelTable, centre: [f64; 2], clutter: usize, extent: f64) -> Scene {
    let mut features = Vec::new();
    for (&descriptor, off) in &table.offsets {
        let orientation = rng.gen_range(0.0..TAU);
        let r = rotate(orientation, *off);
        features.push(Feature { position: [centre[0] - r[0], centre[1] - r[1]], orientation, descriptor });
    }
    let ids: Vec<u32> = table.offsets.keys().copied().collect();
    for _ in 0..clutter {
        features.push(Feature {
            position: [rng.gen_range(0.0..extent), rng.gen_range(0.0..extent)],
            orientation: rng.gen_range(0.0..TAU),
            descriptor: ids[rng.gen_range(0..ids.len())],
        });
    }
    Scene { features }
}

/// `len − 1` random saccades followed by the one that returns gaze to the identity.
pub fn random_closed_path<R: Rng>(rng: &mut R, len: usize, max_shift: f64, max_turn: f64) -> GazePath {
    let mut saccades: Vec<GazeTransform> = (0..len.saturating_sub(1))
        .map(|_| GazeTransform {
            rotation: rng.gen_range(-max_turn..=max_turn),
            translation: [rng.gen_range(-max_shift..=max_shift), rng.gen_range(-max_shift..=max_shift)],
        })
        .collect();
    let net = GazePath { saccades: saccades.clone() }.net();
    saccades.push(net.inverse());
    GazePath { saccades }
}
