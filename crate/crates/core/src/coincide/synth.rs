//! Synthetic spike trains with a planted phase cycle, and jittered trials
//! that keep every coincidence.

use std::f64::consts::TAU;

use rand::Rng;

use super::{build_coincidence_graph, CoincideError, CoincidenceWindow, SpikeTrain};
use crate::chain::{Chain1, ChainComplex, VertexId};
use crate::linalg::q;
use crate::phasecode::{circular_distance, Oscillator};

/// Shape of a planted cycle: neurons `0..len` fire at phases
/// `start, start + gap, …` and neuron 0 fires again one gap after the last.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedCycle {
    pub len: usize,
    pub gap: f64,
    pub start_phase: f64,
    /// Theta period (0-based) in which the cycle is played.
    pub period: u32,
}

#[derive(Debug, Clone)]
pub struct PlantedTrain {
    pub train: SpikeTrain,
    /// Oriented neuron pairs of the planted loop, in firing order.
    pub loop_edges: Vec<(VertexId, VertexId)>,
}

impl PlantedTrain {
    /// The planted loop as a chain on `graph`, using the first edge that
    /// realises each planted pair.
    pub fn loop_chain(&self, graph: &ChainComplex) -> Option<Chain1> {
        let mut c = Chain1::zero();
        for pair in &self.loop_edges {
            let e = graph.edges().iter().position(|p| p == pair)?;
            c.add_term(e, q(1));
        }
        Some(c)
    }
}

/// Phase of spike time `t` under `osc` is `2π(f·t) + offset`; this inverts it
/// for a given theta period index.
fn time_of(osc: &Oscillator, period: u32, phase: f64) -> f64 {
    (period as f64 + (phase - osc.phase_offset) / TAU) / osc.frequency_hz
}

/// Builds a train holding the planted cycle plus `distractors` neurons that
/// each fire once, at phases that coincide with at most one planted spike
/// and with no other distractor.
pub fn planted_train<R: Rng>(
    rng: &mut R,
    cycle: &PlantedCycle,
    distractors: usize,
    osc: &Oscillator,
    w: &CoincidenceWindow,
) -> PlantedTrain {
    let m = cycle.len;
    let mut spikes: Vec<(VertexId, f64)> = Vec::new();
    let mut phases = Vec::new();
    for k in 0..=m {
        let neuron = (k % m) as VertexId;
        let phase = cycle.start_phase + k as f64 * cycle.gap;
        phases.push(phase);
        spikes.push((neuron, time_of(osc, cycle.period, phase)));
    }
    let loop_edges = (0..m).map(|k| (k as VertexId, ((k + 1) % m) as VertexId)).collect();
    let mut placed: Vec<f64> = Vec::new();
    let margin = 0.05 * w.delta;
    for d in 0..distractors {
        for _ in 0..1000 {
            let phase = rng.gen_range(0.0..TAU);
            let near: Vec<f64> = phases.iter().map(|&p| circular_distance(p, phase)).collect();
            let hits = near.iter().filter(|&&x| x <= w.delta).count();
            let clear = near.iter().all(|&x| (x - w.delta).abs() > margin);
            let apart = placed.iter().all(|&p| circular_distance(p, phase) > w.delta + margin);
            if hits <= 1 && clear && apart {
                placed.push(phase);
                let period = rng.gen_range(0..4);
                spikes.push(((m + d) as VertexId, time_of(osc, period, phase)));
                break;
            }
        }
    }
    let neurons = m + distractors;
    PlantedTrain { train: SpikeTrain::new(neurons, spikes).expect("finite times"), loop_edges }
}

/// Shifts every spike phase by an independent uniform draw in `(−ε, ε)`.
pub fn jitter<R: Rng>(rng: &mut R, train: &SpikeTrain, epsilon: f64, osc: &Oscillator) -> SpikeTrain {
    let spikes = train
        .spikes
        .iter()
        .map(|&(i, t)| {
            let shift = if epsilon > 0.0 { rng.gen_range(-epsilon..epsilon) } else { 0.0 };
            (i, t + shift / (TAU * osc.frequency_hz))
        })
        .collect();
    SpikeTrain::new(train.neurons, spikes).expect("finite times")
}

/// Draws jittered copies until one has exactly the same coincidence edges
/// (as an ordered multiset of neuron pairs) as `train`.
pub fn matched_jitter<R: Rng>(
    rng: &mut R,
    train: &SpikeTrain,
    epsilon: f64,
    osc: &Oscillator,
    w: &CoincidenceWindow,
    max_tries: usize,
) -> Result<Option<SpikeTrain>, CoincideError> {
    let mut target = build_coincidence_graph(train, osc, w, usize::MAX)?.edges().to_vec();
    target.sort_unstable();
    for _ in 0..max_tries {
        let candidate = jitter(rng, train, epsilon, osc);
        let mut edges = build_coincidence_graph(&candidate, osc, w, usize::MAX)?.edges().to_vec();
        edges.sort_unstable();
        if edges == target {
            return Ok(Some(candidate));
        }
    }
    Ok(None)
}
