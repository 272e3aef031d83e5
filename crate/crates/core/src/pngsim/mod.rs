//! Event-driven delay networks of coincidence-detector neurons with STDP.
//!
//! A neuron fires when at least `k` unconsumed presynaptic arrivals, whose
//! weights sum to at least the firing threshold, lie in the closed window
//! `[t − Δ, t]` ending at the current arrival. Firing consumes the buffered
//! arrivals and schedules one arrival per outgoing synapse after its delay.
//! Events are processed in `(time, neuron, kind, synapse)` order, so runs are
//! reproducible bit for bit.
//!
//! ```
//! use cyclos::pngsim::{simulate, DelayNetwork, SimOptions, Synapse};
//!
//! let net = DelayNetwork::new(2, vec![Synapse::new(0, 1, 1.0, 4.0)], 2.0, 1, 1.0).unwrap();
//! let run = simulate(&net, &[(0, 0.0)], &SimOptions::new(20.0)).unwrap();
//! let times: Vec<f64> = run.log.iter().map(|e| e.time_ms).collect();
//! assert_eq!(times, vec![0.0, 4.0]);
//! ```

mod mining;

pub use mining::{
    find_resonant_cycles, order_invariant_readout, replay_consolidate, test_reentry, CycleCandidate, ReadoutReport,
    ReentryReport, Route, MAX_CYCLE_LEN,
};

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type NeuronId = u32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PngError {
    #[error("invalid network: {0}")]
    Config(String),
    #[error("horizon must be positive, got {0}")]
    BadHorizon(f64),
    #[error("max_len {got} outside [2, {cap}]")]
    MaxLen { got: usize, cap: usize },
    #[error("replay factors must satisfy gain > 1 > decay > 0 (gain {gain}, decay {decay})")]
    ReplayFactors { gain: f64, decay: f64 },
}

/// Directed synapse `pre → post`; JSON form `[pre, post, weight, delay_ms]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "(NeuronId, NeuronId, f64, f64)", into = "(NeuronId, NeuronId, f64, f64)")]
pub struct Synapse {
    pub pre: NeuronId,
    pub post: NeuronId,
    pub weight: f64,
    pub delay_ms: f64,
}

impl Synapse {
    pub fn new(pre: NeuronId, post: NeuronId, weight: f64, delay_ms: f64) -> Self {
        Synapse { pre, post, weight, delay_ms }
    }
}

impl From<(NeuronId, NeuronId, f64, f64)> for Synapse {
    fn from((pre, post, weight, delay_ms): (NeuronId, NeuronId, f64, f64)) -> Self {
        Synapse { pre, post, weight, delay_ms }
    }
}

impl From<Synapse> for (NeuronId, NeuronId, f64, f64) {
    fn from(s: Synapse) -> Self {
        (s.pre, s.post, s.weight, s.delay_ms)
    }
}

/// Per-neuron replacement for the network-wide `k` and threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeuronOverride {
    pub neuron: NeuronId,
    pub k: usize,
    pub threshold: f64,
}

fn default_threshold() -> f64 {
    0.5
}

fn default_w_max() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayNetwork {
    pub neurons: usize,
    pub synapses: Vec<Synapse>,
    pub delta_ms: f64,
    pub k: usize,
    pub refractory_ms: f64,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "default_w_max")]
    pub w_max: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub overrides: Vec<NeuronOverride>,
}

impl DelayNetwork {
    /// Network with threshold 0.5 and `w_max` 1.
    pub fn new(
        neurons: usize,
        synapses: Vec<Synapse>,
        delta_ms: f64,
        k: usize,
        refractory_ms: f64,
    ) -> Result<Self, PngError> {
        let net = DelayNetwork {
            neurons,
            synapses,
            delta_ms,
            k,
            refractory_ms,
            threshold: default_threshold(),
            w_max: default_w_max(),
            overrides: Vec::new(),
        };
        net.validate()?;
        Ok(net)
    }

    pub fn with_threshold(mut self, threshold: f64) -> Result<Self, PngError> {
        self.threshold = threshold;
        self.validate()?;
        Ok(self)
    }

    pub fn with_override(mut self, o: NeuronOverride) -> Result<Self, PngError> {
        self.overrides.retain(|x| x.neuron != o.neuron);
        self.overrides.push(o);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), PngError> {
        let bad = |m: String| Err(PngError::Config(m));
        if !(self.delta_ms.is_finite() && self.delta_ms >= 0.0) {
            return bad(format!("delta_ms must be a non-negative number, got {}", self.delta_ms));
        }
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        if !(self.refractory_ms.is_finite() && self.refractory_ms >= 0.0) {
            return bad(format!("refractory_ms must be non-negative, got {}", self.refractory_ms));
        }
        if !(self.threshold.is_finite() && self.threshold >= 0.0) {
            return bad(format!("threshold must be non-negative, got {}", self.threshold));
        }
        if !(self.w_max.is_finite() && self.w_max > 0.0) {
            return bad(format!("w_max must be positive, got {}", self.w_max));
        }
        for (i, s) in self.synapses.iter().enumerate() {
            if s.pre as usize >= self.neurons || s.post as usize >= self.neurons {
                return bad(format!("synapse {i} references a neuron outside 0..{}", self.neurons));
            }
            if !(s.delay_ms.is_finite() && s.delay_ms > 0.0) {
                return bad(format!("synapse {i} has non-positive delay {}", s.delay_ms));
            }
            if !(s.weight >= 0.0 && s.weight <= self.w_max) {
                return bad(format!("synapse {i} weight {} outside [0, {}]", s.weight, self.w_max));
            }
        }
        for o in &self.overrides {
            if o.neuron as usize >= self.neurons || o.k == 0 || !(o.threshold >= 0.0) {
                return bad(format!("invalid override for neuron {}", o.neuron));
            }
        }
        Ok(())
    }

    fn rule_for(&self, n: NeuronId) -> (usize, f64) {
        self.overrides.iter().find(|o| o.neuron == n).map_or((self.k, self.threshold), |o| (o.k, o.threshold))
    }

    pub(crate) fn outgoing(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.neurons];
        for (i, s) in self.synapses.iter().enumerate() {
            out[s.pre as usize].push(i);
        }
        out
    }

    fn incoming(&self) -> Vec<Vec<usize>> {
        let mut inc = vec![Vec::new(); self.neurons];
        for (i, s) in self.synapses.iter().enumerate() {
            inc[s.post as usize].push(i);
        }
        inc
    }
}

/// Exponential STDP window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StdpParams {
    pub a_plus: f64,
    pub a_minus: f64,
    pub tau_plus: f64,
    pub tau_minus: f64,
}

impl StdpParams {
    pub fn new(a_plus: f64, a_minus: f64, tau_plus: f64, tau_minus: f64) -> Result<Self, PngError> {
        if !(a_plus >= 0.0 && a_minus >= 0.0 && tau_plus > 0.0 && tau_minus > 0.0) {
            return Err(PngError::Config("STDP amplitudes must be ≥ 0 and time constants > 0".into()));
        }
        Ok(StdpParams { a_plus, a_minus, tau_plus, tau_minus })
    }
}

/// Weight change for a presynaptic spike at `pre_t` and a postsynaptic one at `post_t`.
pub fn stdp_delta(pre_t: f64, post_t: f64, p: &StdpParams) -> f64 {
    let dt = post_t - pre_t;
    match dt.partial_cmp(&0.0) {
        Some(Ordering::Greater) => p.a_plus * (-dt / p.tau_plus).exp(),
        Some(Ordering::Less) => -p.a_minus * (dt / p.tau_minus).exp(),
        _ => 0.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Stimulus,
    Spike,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time_ms: f64,
    pub neuron: NeuronId,
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    pub horizon_ms: f64,
    #[serde(default)]
    pub stdp: Option<StdpParams>,
    /// Half-width of uniform jitter added to every arrival, drawn from `seed`.
    #[serde(default)]
    pub jitter_ms: f64,
    #[serde(default)]
    pub seed: u64,
}

impl SimOptions {
    pub fn new(horizon_ms: f64) -> Self {
        SimOptions { horizon_ms, stdp: None, jitter_ms: 0.0, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub log: Vec<Event>,
    /// Synapse weights at the end of the run (unchanged without STDP).
    pub weights: Vec<f64>,
}

impl SimResult {
    pub fn spikes_of(&self, n: NeuronId) -> Vec<f64> {
        self.log.iter().filter(|e| e.neuron == n).map(|e| e.time_ms).collect()
    }

    /// `time_ms,neuron,kind` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("time_ms,neuron,kind\n");
        for e in &self.log {
            let kind = match e.kind {
                EventKind::Stimulus => "stimulus",
                EventKind::Spike => "spike",
            };
            let _ = writeln!(out, "{},{},{}", e.time_ms, e.neuron, kind);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Queued {
    time: f64,
    neuron: NeuronId,
    /// 0 for stimuli, 1 for arrivals, so a forced spike precedes same-time input.
    rank: u8,
    synapse: usize,
}

impl Eq for Queued {}

impl Ord for Queued {
    fn cmp(&self, other: &Self) -> Ordering {
        // reversed: BinaryHeap is a max-heap
        other
            .time
            .total_cmp(&self.time)
            .then(other.neuron.cmp(&self.neuron))
            .then(other.rank.cmp(&self.rank))
            .then(other.synapse.cmp(&self.synapse))
    }
}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Runs the network from the given stimuli (forced spikes) up to `horizon_ms`.
pub fn simulate(net: &DelayNetwork, stimuli: &[(NeuronId, f64)], opts: &SimOptions) -> Result<SimResult, PngError> {
    net.validate()?;
    if !(opts.horizon_ms.is_finite() && opts.horizon_ms > 0.0) {
        return Err(PngError::BadHorizon(opts.horizon_ms));
    }
    if let Some(&(n, t)) = stimuli.iter().find(|&&(n, t)| n as usize >= net.neurons || !t.is_finite()) {
        return Err(PngError::Config(format!("stimulus ({n}, {t}) is invalid")));
    }
    let outgoing = net.outgoing();
    let incoming = net.incoming();
    let mut weights: Vec<f64> = net.synapses.iter().map(|s| s.weight).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut queue = BinaryHeap::new();
    for &(neuron, time) in stimuli {
        queue.push(Queued { time, neuron, rank: 0, synapse: 0 });
    }
    let mut buffers: Vec<VecDeque<(f64, usize)>> = vec![VecDeque::new(); net.neurons];
    let mut last_spike: Vec<Option<f64>> = vec![None; net.neurons];
    let mut log = Vec::new();

    while let Some(ev) = queue.pop() {
        if ev.time > opts.horizon_ms {
            break;
        }
        let n = ev.neuron as usize;
        let fires = if ev.rank == 0 {
            log.push(Event { time_ms: ev.time, neuron: ev.neuron, kind: EventKind::Stimulus });
            true
        } else {
            let buf = &mut buffers[n];
            buf.push_back((ev.time, ev.synapse));
            while buf.front().is_some_and(|&(t, _)| t < ev.time - net.delta_ms) {
                buf.pop_front();
            }
            let refractory = last_spike[n].is_some_and(|t| ev.time - t < net.refractory_ms);
            let (k, threshold) = net.rule_for(ev.neuron);
            let drive: f64 = buf.iter().map(|&(_, s)| weights[s]).sum();
            let fire = !refractory && buf.len() >= k && drive >= threshold;
            if fire {
                log.push(Event { time_ms: ev.time, neuron: ev.neuron, kind: EventKind::Spike });
            }
            fire
        };
        if !fires {
            continue;
        }
        buffers[n].clear();
        last_spike[n] = Some(ev.time);
        if let Some(p) = &opts.stdp {
            // post side: potentiate each input against its latest presynaptic spike
            for &s in &incoming[n] {
                if let Some(tp) = last_spike[net.synapses[s].pre as usize] {
                    if tp < ev.time || net.synapses[s].pre as usize != n {
                        weights[s] = (weights[s] + stdp_delta(tp, ev.time, p)).clamp(0.0, net.w_max);
                    }
                }
            }
            // pre side: depress each output against its target's latest spike
            for &s in &outgoing[n] {
                let post = net.synapses[s].post as usize;
                if post == n {
                    continue;
                }
                if let Some(tq) = last_spike[post] {
                    weights[s] = (weights[s] + stdp_delta(ev.time, tq, p)).clamp(0.0, net.w_max);
                }
            }
        }
        for &s in &outgoing[n] {
            let syn = &net.synapses[s];
            let jitter = if opts.jitter_ms > 0.0 { rng.gen_range(-opts.jitter_ms..=opts.jitter_ms) } else { 0.0 };
            let time = ev.time + syn.delay_ms + jitter;
            queue.push(Queued { time: time.max(ev.time), neuron: syn.post, rank: 1, synapse: s });
        }
    }
    Ok(SimResult { log, weights })
}
