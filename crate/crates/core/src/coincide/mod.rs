//! Coincidence multigraphs of spike trains, their closed part, and
//! cross-trial invariance of the resulting homology class.
//!
//! Two spikes `(i, t)` and `(j, t′)` with `t < t′`, `i ≠ j` and circular phase
//! distance at most Δ produce one oriented edge `i → j`. The aggregate chain
//! sums every such edge; projecting it onto the cycle space cancels the
//! unmatched endpoints and keeps the closed flow.
//!
//! ```
//! use cyclos::coincide::{closed_part, CoincidenceWindow, SpikeTrain};
//! use cyclos::phasecode::Oscillator;
//!
//! // one theta cycle at 1 Hz: phase = 2π·t
//! let osc = Oscillator::new(1.0, 0.0).unwrap();
//! let step = 0.25 / std::f64::consts::TAU; // 0.25 rad apart
//! let train = SpikeTrain::new(3, vec![(0, 0.0), (1, step), (2, 2.0 * step), (0, 3.0 * step)]).unwrap();
//! let result = closed_part(&train, &osc, &CoincidenceWindow::new(0.3).unwrap()).unwrap();
//! assert!(!result.class.is_zero());
//! ```

pub mod synth;

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::{Chain1, ChainComplex, ChainError, HomologyClass1, TriangleSpec, VertexId};
use crate::persist::{compute_barcode, window_filtration, Barcode, PersistError};
use crate::phasecode::{circular_distance, Oscillator};

/// Default bound on parallel edges per ordered neuron pair.
pub const DEFAULT_MULTIPLICITY_CAP: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoincideError {
    #[error("coincidence window must lie in (0, π), got {0}")]
    BadWindow(f64),
    #[error("spike {index} has non-finite time")]
    NonFiniteTime { index: usize },
    #[error("spike {index} names neuron {neuron} but the train has {neurons} units")]
    UnknownNeuron { index: usize, neuron: VertexId, neurons: usize },
    #[error("pair {from}->{to} has {count} coincidences, above the cap of {cap}")]
    MultiplicityExceeded { from: VertexId, to: VertexId, count: usize, cap: usize },
    #[error("precondition failed: jitter bound {epsilon} must be below the window {delta}")]
    JitterTooLarge { epsilon: f64, delta: f64 },
    #[error("precondition failed: trial {trial} fires a different neuron set than trial 0")]
    UnmatchedTrials { trial: usize },
    #[error("window values must be strictly increasing and inside (0, π)")]
    BadWindowGrid,
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Persist(#[from] PersistError),
}

/// Spikes as `(neuron, time in seconds)`, sorted by time then neuron.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpikeTrain {
    pub neurons: usize,
    pub spikes: Vec<(VertexId, f64)>,
}

impl SpikeTrain {
    pub fn new(neurons: usize, spikes: Vec<(VertexId, f64)>) -> Result<Self, CoincideError> {
        SpikeTrain { neurons, spikes }.normalized()
    }

    /// Validates and sorts the spikes.
    pub fn normalized(mut self) -> Result<Self, CoincideError> {
        for (index, &(neuron, t)) in self.spikes.iter().enumerate() {
            if !t.is_finite() {
                return Err(CoincideError::NonFiniteTime { index });
            }
            if neuron as usize >= self.neurons {
                return Err(CoincideError::UnknownNeuron { index, neuron, neurons: self.neurons });
            }
        }
        self.spikes.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        Ok(self)
    }

    /// Neurons that fire at least once, ascending.
    pub fn active_neurons(&self) -> Vec<VertexId> {
        self.spikes.iter().map(|s| s.0).collect::<BTreeSet<_>>().into_iter().collect()
    }

    pub fn is_empty(&self) -> bool {
        self.spikes.is_empty()
    }
}

/// Coincidence window Δ in radians, `0 < Δ < π`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoincidenceWindow {
    pub delta: f64,
}

impl CoincidenceWindow {
    pub fn new(delta: f64) -> Result<Self, CoincideError> {
        if !(delta > 0.0 && delta < std::f64::consts::PI) {
            return Err(CoincideError::BadWindow(delta));
        }
        Ok(CoincidenceWindow { delta })
    }
}

/// Coincident spike pairs `(earlier index, later index)` in the sorted train.
fn coincident_pairs(s: &SpikeTrain, osc: &Oscillator, delta: f64) -> Vec<(usize, usize)> {
    let phases: Vec<f64> = s.spikes.iter().map(|&(_, t)| osc.wrap_time(t)).collect();
    let mut pairs = Vec::new();
    for p in 0..s.spikes.len() {
        for q in p + 1..s.spikes.len() {
            let ((i, t), (j, u)) = (s.spikes[p], s.spikes[q]);
            if i != j && t < u && circular_distance(phases[p], phases[q]) <= delta {
                pairs.push((p, q));
            }
        }
    }
    pairs
}

fn check_multiplicity(s: &SpikeTrain, pairs: &[(usize, usize)], cap: usize) -> Result<(), CoincideError> {
    let mut counts: BTreeMap<(VertexId, VertexId), usize> = BTreeMap::new();
    for &(p, q) in pairs {
        *counts.entry((s.spikes[p].0, s.spikes[q].0)).or_insert(0) += 1;
    }
    match counts.into_iter().find(|&(_, c)| c > cap) {
        Some(((from, to), count)) => Err(CoincideError::MultiplicityExceeded { from, to, count, cap }),
        None => Ok(()),
    }
}

/// The coincidence multigraph `G_Δ` on the neurons that fire.
pub fn build_coincidence_graph(
    s: &SpikeTrain,
    osc: &Oscillator,
    w: &CoincidenceWindow,
    cap: usize,
) -> Result<ChainComplex, CoincideError> {
    let pairs = coincident_pairs(s, osc, w.delta);
    check_multiplicity(s, &pairs, cap)?;
    let edges = pairs.iter().map(|&(p, q)| (s.spikes[p].0, s.spikes[q].0)).collect();
    Ok(ChainComplex::new(s.active_neurons(), edges, vec![])?)
}

#[derive(Debug, Clone)]
pub struct CoincidenceResult {
    pub graph: ChainComplex,
    /// Sum of every coincidence edge.
    pub aggregate: Chain1,
    /// Projection of the aggregate onto the cycle space.
    pub closed_part: Chain1,
    /// `aggregate − closed_part`: the part cancelled as boundary terms.
    pub removed: Chain1,
    pub class: HomologyClass1,
}

pub fn closed_part(s: &SpikeTrain, osc: &Oscillator, w: &CoincidenceWindow) -> Result<CoincidenceResult, CoincideError> {
    closed_part_with_cap(s, osc, w, DEFAULT_MULTIPLICITY_CAP)
}

pub fn closed_part_with_cap(
    s: &SpikeTrain,
    osc: &Oscillator,
    w: &CoincidenceWindow,
    cap: usize,
) -> Result<CoincidenceResult, CoincideError> {
    let graph = build_coincidence_graph(s, osc, w, cap)?;
    let aggregate = Chain1::from_ints((0..graph.edges().len()).map(|e| (e, 1)));
    let z = graph.project_to_cycles(&aggregate)?;
    let class = graph.homology_class(&z)?;
    let removed = aggregate.sub(&z);
    Ok(CoincidenceResult { graph, aggregate, closed_part: z, removed, class })
}

/// Complete graph on `ids` with one edge `i → j` per pair `i < j`, in
/// lexicographic order. Serves as the common labelling for trials.
pub fn complete_graph(ids: &[VertexId]) -> ChainComplex {
    let mut sorted = ids.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let mut edges = Vec::new();
    for (a, &i) in sorted.iter().enumerate() {
        for &j in &sorted[a + 1..] {
            edges.push((i, j));
        }
    }
    ChainComplex::new(sorted, edges, vec![]).expect("complete graph is valid")
}

/// Pushes a chain on `graph` forward to [`complete_graph`] on `ids`:
/// `i → j` lands on `+e_ij` when `i < j` and on `−e_ji` otherwise.
pub fn push_to_complete(graph: &ChainComplex, z: &Chain1, ids: &[VertexId]) -> Chain1 {
    let mut sorted = ids.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let index: BTreeMap<VertexId, usize> = sorted.iter().enumerate().map(|(k, &v)| (v, k)).collect();
    let n = sorted.len();
    let pair_index = |a: usize, b: usize| a * n - a * (a + 1) / 2 + (b - a - 1);
    let mut out = Chain1::zero();
    for (e, coeff) in z.iter() {
        let (i, j) = graph.edges()[e];
        let (a, b) = (index[&i], index[&j]);
        match a.cmp(&b) {
            std::cmp::Ordering::Less => out.add_term(pair_index(a, b), coeff.clone()),
            std::cmp::Ordering::Greater => out.add_term(pair_index(b, a), -coeff.clone()),
            std::cmp::Ordering::Equal => {}
        }
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialReport {
    pub invariant: bool,
    /// Neuron ids labelling the shared complete graph.
    pub neurons: Vec<VertexId>,
    /// Per-trial class coordinates in the shared labelling, by trial index.
    pub classes: Vec<HomologyClass1>,
    /// Trials whose graph has parallel edges, so that more than one edge
    /// correspondence to the other trials exists; matching used neuron ids.
    pub ambiguous_trials: Vec<usize>,
    /// Trials whose class differs from trial 0.
    pub mismatched_trials: Vec<usize>,
}

/// Checks that every trial's closed part has the same class once all
/// trials are relabelled onto one complete graph by neuron id.
pub fn trial_invariance(
    trials: &[SpikeTrain],
    osc: &Oscillator,
    w: &CoincidenceWindow,
    epsilon: f64,
) -> Result<TrialReport, CoincideError> {
    if !(epsilon >= 0.0 && epsilon < w.delta) {
        return Err(CoincideError::JitterTooLarge { epsilon, delta: w.delta });
    }
    let neurons = trials.first().map(SpikeTrain::active_neurons).unwrap_or_default();
    if let Some(trial) = trials.iter().position(|t| t.active_neurons() != neurons) {
        return Err(CoincideError::UnmatchedTrials { trial });
    }
    let shared = complete_graph(&neurons);
    let results: Vec<Result<(HomologyClass1, bool), CoincideError>> = trials
        .par_iter()
        .map(|t| {
            let r = closed_part(t, osc, w)?;
            let pushed = push_to_complete(&r.graph, &r.closed_part, &neurons);
            let class = shared.homology_class(&pushed)?;
            let mut seen = BTreeSet::new();
            let parallel = r.graph.edges().iter().any(|&(a, b)| !seen.insert((a.min(b), a.max(b))));
            Ok((class, parallel))
        })
        .collect();
    let mut classes = Vec::with_capacity(trials.len());
    let mut ambiguous_trials = Vec::new();
    for (k, r) in results.into_iter().enumerate() {
        let (class, parallel) = r?;
        if parallel {
            ambiguous_trials.push(k);
        }
        classes.push(class);
    }
    let mismatched_trials: Vec<usize> =
        classes.iter().enumerate().skip(1).filter(|(_, c)| **c != classes[0]).map(|(k, _)| k).collect();
    Ok(TrialReport { invariant: mismatched_trials.is_empty(), neurons, classes, ambiguous_trials, mismatched_trials })
}

/// Coincidence complex at window `delta`: the coincidence multigraph plus a
/// triangle for every spike triple of distinct neurons whose three pairs all
/// coincide, attached to the three corresponding edges.
pub fn coincidence_complex(s: &SpikeTrain, osc: &Oscillator, delta: f64, cap: usize) -> Result<ChainComplex, CoincideError> {
    let mut pairs = coincident_pairs(s, osc, delta);
    check_multiplicity(s, &pairs, cap)?;
    // Edges and triangles are listed by the window at which they appear, so
    // that the k-th copy of a neuron pair is the same copy in every window.
    let phases: Vec<f64> = s.spikes.iter().map(|&(_, t)| osc.wrap_time(t)).collect();
    let dist = |p: usize, q: usize| circular_distance(phases[p], phases[q]);
    pairs.sort_by(|&(a, b), &(c, d)| dist(a, b).total_cmp(&dist(c, d)).then((a, b).cmp(&(c, d))));
    let edge_of: BTreeMap<(usize, usize), usize> = pairs.iter().enumerate().map(|(e, &p)| (p, e)).collect();
    let edges: Vec<(VertexId, VertexId)> = pairs.iter().map(|&(p, q)| (s.spikes[p].0, s.spikes[q].0)).collect();
    let mut triangles = Vec::new();
    for (&(a, b), &ab) in &edge_of {
        for (&(_, c), &bc) in edge_of.range((b, 0)..(b + 1, 0)) {
            let Some(&ac) = edge_of.get(&(a, c)) else { continue };
            let (na, nb, nc) = (s.spikes[a].0, s.spikes[b].0, s.spikes[c].0);
            if na != nc {
                let entry = dist(a, b).max(dist(b, c)).max(dist(a, c));
                triangles.push((entry, TriangleSpec { vertices: [na, nb, nc], edges: [ab, bc, ac] }));
            }
        }
    }
    triangles.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.edges.cmp(&y.1.edges)));
    let triangles = triangles.into_iter().map(|(_, t)| t).collect();
    Ok(ChainComplex::with_triangle_edges(s.active_neurons(), edges, triangles)?)
}

/// Barcode of the coincidence complexes over an ascending window grid.
/// Infinite bars are capped at the last window for length purposes.
pub fn coincidence_persistence(s: &SpikeTrain, osc: &Oscillator, deltas: &[f64]) -> Result<Barcode, CoincideError> {
    let ascending = deltas.windows(2).all(|w| w[0] < w[1]);
    let in_range = deltas.iter().all(|&d| d > 0.0 && d < std::f64::consts::PI);
    if !ascending || !in_range {
        return Err(CoincideError::BadWindowGrid);
    }
    if s.is_empty() || deltas.is_empty() {
        return Ok(Barcode::empty());
    }
    let graphs = deltas
        .iter()
        .map(|&d| Ok((d, coincidence_complex(s, osc, d, usize::MAX)?)))
        .collect::<Result<Vec<_>, CoincideError>>()?;
    Ok(compute_barcode(&window_filtration(&graphs)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::q;
    use std::f64::consts::TAU;

    /// 1 Hz oscillator, so time `t` has phase `2πt`.
    fn osc() -> Oscillator {
        Oscillator::new(1.0, 0.0).unwrap()
    }

    fn at(phase: f64) -> f64 {
        phase / TAU
    }

    fn train(spikes: &[(VertexId, f64)]) -> SpikeTrain {
        let n = spikes.iter().map(|s| s.0 as usize + 1).max().unwrap_or(0);
        SpikeTrain::new(n, spikes.iter().map(|&(i, p)| (i, at(p))).collect()).unwrap()
    }

    #[test]
    fn pair_edges() {
        let w = CoincidenceWindow::new(0.4).unwrap();
        let g = build_coincidence_graph(&train(&[(0, 0.0), (1, 0.2)]), &osc(), &w, 16).unwrap();
        assert_eq!(g.edges(), &[(0, 1)]);
        let g = build_coincidence_graph(&train(&[(0, 0.0), (1, 0.8)]), &osc(), &w, 16).unwrap();
        assert!(g.edges().is_empty());
        let g = build_coincidence_graph(&train(&[]), &osc(), &w, 16).unwrap();
        assert!(g.vertices().is_empty());
    }

    #[test]
    fn simultaneous_and_same_neuron_spikes_make_no_edge() {
        let w = CoincidenceWindow::new(0.4).unwrap();
        let s = SpikeTrain::new(2, vec![(0, 0.1), (1, 0.1), (0, 0.11)]).unwrap();
        let g = build_coincidence_graph(&s, &osc(), &w, 16).unwrap();
        assert_eq!(g.edges(), &[(1, 0)]);
    }

    #[test]
    fn three_cycle_pattern() {
        // phases 0, 0.3, 0.6 then neuron 0 again at 0.9; chords are 0.6 apart
        let s = train(&[(0, 0.0), (1, 0.3), (2, 0.6), (0, 0.9)]);
        let w = CoincidenceWindow::new(0.4).unwrap();
        let r = closed_part(&s, &osc(), &w).unwrap();
        assert_eq!(r.graph.edges(), &[(0, 1), (1, 2), (2, 0)]);
        assert_eq!(r.closed_part, Chain1::from_ints([(0, 1), (1, 1), (2, 1)]));
        assert!(!r.class.is_zero());
        assert!(r.removed.is_zero());
    }

    #[test]
    fn open_path_cancels() {
        let s = train(&[(0, 0.0), (1, 0.3), (2, 0.6)]);
        let r = closed_part(&s, &osc(), &CoincidenceWindow::new(0.4).unwrap()).unwrap();
        assert_eq!(r.graph.edges().len(), 2);
        assert!(r.closed_part.is_zero());
        assert_eq!(r.removed, r.aggregate);
    }

    #[test]
    fn dangling_edge_is_removed() {
        // cycle 0 -> 1 -> 2 -> 0 plus neuron 3 hanging off neuron 2
        let s = train(&[(0, 0.0), (1, 0.3), (2, 0.6), (0, 0.9), (3, 1.2)]);
        let r = closed_part(&s, &osc(), &CoincidenceWindow::new(0.4).unwrap()).unwrap();
        let dangling = r.graph.edges().iter().position(|&e| e == (0, 3)).unwrap();
        assert_eq!(r.closed_part.coeff(dangling), q(0));
        assert_eq!(r.closed_part.l1_norm(), q(3));
    }

    #[test]
    fn multiplicity_cap_is_reported() {
        let spikes: Vec<(VertexId, f64)> = (0..3).flat_map(|k| [(0, k as f64), (1, k as f64 + 0.01)]).collect();
        let s = SpikeTrain::new(2, spikes).unwrap();
        let w = CoincidenceWindow::new(0.4).unwrap();
        assert!(matches!(
            build_coincidence_graph(&s, &osc(), &w, 2),
            Err(CoincideError::MultiplicityExceeded { from: 0, to: 1, .. })
        ));
    }

    #[test]
    fn window_validation() {
        assert!(CoincidenceWindow::new(0.0).is_err());
        assert!(CoincidenceWindow::new(std::f64::consts::PI).is_err());
        let w = CoincidenceWindow::new(0.4).unwrap();
        assert!(matches!(trial_invariance(&[], &osc(), &w, 0.4), Err(CoincideError::JitterTooLarge { .. })));
    }

    #[test]
    fn deleted_edge_breaks_invariance() {
        let base = train(&[(0, 0.0), (1, 0.3), (2, 0.6), (0, 0.9)]);
        let broken = train(&[(0, 0.0), (1, 0.3), (2, 0.8), (0, 0.9)]);
        let w = CoincidenceWindow::new(0.4).unwrap();
        assert!(trial_invariance(&[base.clone(), base.clone()], &osc(), &w, 0.1).unwrap().invariant);
        let report = trial_invariance(&[base, broken], &osc(), &w, 0.1).unwrap();
        assert!(!report.invariant);
        assert_eq!(report.mismatched_trials, vec![1]);
    }

    #[test]
    fn empty_persistence() {
        assert!(coincidence_persistence(&train(&[]), &osc(), &[0.1, 0.2]).unwrap().bars.is_empty());
        assert!(matches!(
            coincidence_persistence(&train(&[]), &osc(), &[0.2, 0.1]),
            Err(CoincideError::BadWindowGrid)
        ));
    }

    #[test]
    fn json_shape() {
        let s: SpikeTrain = serde_json::from_str(r#"{"neurons":2,"spikes":[[1,0.5],[0,0.25]]}"#).unwrap();
        let s = s.normalized().unwrap();
        assert_eq!(s.spikes, vec![(0, 0.25), (1, 0.5)]);
    }
}
