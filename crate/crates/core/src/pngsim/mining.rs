//! Resonant cycle mining, reentry checks, order-invariant readout and replay.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{simulate, DelayNetwork, EventKind, NeuronId, PngError, SimOptions};

/// Longest cycle the miner will enumerate.
pub const MAX_CYCLE_LEN: usize = 8;

/// Most routes a readout check will permute (8! runs).
const MAX_ROUTES: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleCandidate {
    /// Closed vertex sequence `i1, …, im, i1`.
    pub vertices: Vec<NeuronId>,
    /// Synapse indices along the cycle, in order.
    pub synapses: Vec<usize>,
    pub delay_sum: f64,
    pub weight_product: f64,
    pub resonance_n: u32,
    pub carrier_period_ms: f64,
}

impl CycleCandidate {
    pub fn head(&self) -> NeuronId {
        self.vertices[0]
    }

    pub fn len(&self) -> usize {
        self.synapses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.synapses.is_empty()
    }

    /// Target reentry interval `n·T`.
    pub fn period_ms(&self) -> f64 {
        self.resonance_n as f64 * self.carrier_period_ms
    }
}

/// All simple directed cycles of at most `max_len` synapses whose delay sum is
/// within `delta` of a positive multiple of `t_theta` and whose weight product
/// is at least `tau_gain`, strongest first.
pub fn find_resonant_cycles(
    net: &DelayNetwork,
    t_theta: f64,
    delta: f64,
    tau_gain: f64,
    max_len: usize,
) -> Result<Vec<CycleCandidate>, PngError> {
    net.validate()?;
    if !(2..=MAX_CYCLE_LEN).contains(&max_len) {
        return Err(PngError::MaxLen { got: max_len, cap: MAX_CYCLE_LEN });
    }
    if !(t_theta.is_finite() && t_theta > 0.0) {
        return Err(PngError::Config(format!("carrier period must be positive, got {t_theta}")));
    }
    if !(delta.is_finite() && delta >= 0.0) {
        return Err(PngError::Config(format!("resonance tolerance must be non-negative, got {delta}")));
    }
    let outgoing = net.outgoing();
    let mut found = Vec::new();
    for start in 0..net.neurons as NeuronId {
        let mut path = Vec::new();
        let mut on_path = vec![false; net.neurons];
        on_path[start as usize] = true;
        extend(net, &outgoing, start, start, max_len, &mut path, &mut on_path, &mut found);
    }
    let mut out: Vec<CycleCandidate> = found
        .into_iter()
        .filter_map(|syns| {
            let delay_sum: f64 = syns.iter().map(|&s| net.synapses[s].delay_ms).sum();
            let weight_product: f64 = syns.iter().map(|&s| net.synapses[s].weight).product();
            let n = ((delay_sum / t_theta).round() as u32).max(1);
            let resonant = (delay_sum - n as f64 * t_theta).abs() <= delta;
            (resonant && weight_product >= tau_gain).then(|| {
                let mut vertices: Vec<NeuronId> = syns.iter().map(|&s| net.synapses[s].pre).collect();
                vertices.push(vertices[0]);
                CycleCandidate {
                    vertices,
                    synapses: syns,
                    delay_sum,
                    weight_product,
                    resonance_n: n,
                    carrier_period_ms: t_theta,
                }
            })
        })
        .collect();
    out.sort_by(|a, b| {
        b.weight_product
            .total_cmp(&a.weight_product)
            .then_with(|| a.vertices.cmp(&b.vertices))
            .then_with(|| a.synapses.cmp(&b.synapses))
    });
    Ok(out)
}

/// Depth-first extension of a path rooted at `start`; only vertices above
/// `start` may be visited so each cycle is reported once, from its smallest vertex.
#[allow(clippy::too_many_arguments)]
fn extend(
    net: &DelayNetwork,
    outgoing: &[Vec<usize>],
    start: NeuronId,
    at: NeuronId,
    max_len: usize,
    path: &mut Vec<usize>,
    on_path: &mut [bool],
    found: &mut Vec<Vec<usize>>,
) {
    for &s in &outgoing[at as usize] {
        let next = net.synapses[s].post;
        if next == start {
            path.push(s);
            found.push(path.clone());
            path.pop();
        } else if next > start && !on_path[next as usize] && path.len() + 1 < max_len {
            on_path[next as usize] = true;
            path.push(s);
            extend(net, outgoing, start, next, max_len, path, on_path, found);
            path.pop();
            on_path[next as usize] = false;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReentryReport {
    pub passed: bool,
    pub period_ms: f64,
    /// Times the head fired again after the initial stimulus.
    pub refires: Vec<f64>,
    /// Each inter-spike interval minus `n·T`, for the checked periods.
    pub latency_errors: Vec<f64>,
}

/// Stimulates the cycle head once at time 0 and checks that it refires on
/// each of the next `periods` cycles, every interval within Δ of `n·T`.
pub fn test_reentry(net: &DelayNetwork, cycle: &CycleCandidate, periods: usize) -> Result<ReentryReport, PngError> {
    if periods == 0 || cycle.is_empty() {
        return Err(PngError::Config("reentry needs a non-empty cycle and at least one period".into()));
    }
    let head = cycle.head();
    if head as usize >= net.neurons {
        return Err(PngError::Config(format!("cycle head {head} is not in the network")));
    }
    let period_ms = cycle.period_ms();
    let horizon = (periods as f64 + 1.0) * (period_ms + net.delta_ms);
    let run = simulate(net, &[(head, 0.0)], &SimOptions::new(horizon))?;
    let refires: Vec<f64> = run
        .log
        .iter()
        .filter(|e| e.neuron == head && e.kind == EventKind::Spike)
        .map(|e| e.time_ms)
        .collect();
    let mut prev = 0.0;
    let latency_errors: Vec<f64> = refires
        .iter()
        .take(periods)
        .map(|&t| {
            let err = (t - prev) - period_ms;
            prev = t;
            err
        })
        .collect();
    let passed = latency_errors.len() == periods && latency_errors.iter().all(|e| e.abs() <= net.delta_ms);
    Ok(ReentryReport { passed, period_ms, refires, latency_errors })
}

/// A micro-path of synapses ending on the readout neuron, with an extra
/// arrival offset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Route {
    pub synapses: Vec<usize>,
    #[serde(default)]
    pub offset_ms: f64,
}

impl Route {
    pub fn new(synapses: Vec<usize>) -> Self {
        Route { synapses, offset_ms: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadoutReport {
    pub passed: bool,
    pub target: NeuronId,
    /// Arrival orders tried, as route indices from first to last.
    pub orders: Vec<Vec<usize>>,
    /// First readout spike for each order, if any.
    pub outputs: Vec<Option<f64>>,
    /// End of the arrival window shared by all orders.
    pub window_close_ms: f64,
}

/// Drives the routes so that their arrivals at the readout fill one window of
/// width `within` in every possible order, and checks that the readout spike
/// time is bit-identical across orders.
///
/// Arrival slots are spaced by a dyadic step, so with dyadic delays every
/// arrival time is computed exactly.
pub fn order_invariant_readout(
    net: &DelayNetwork,
    routes: &[Route],
    within: f64,
) -> Result<ReadoutReport, PngError> {
    net.validate()?;
    if routes.is_empty() || routes.len() > MAX_ROUTES {
        return Err(PngError::Config(format!("need 1..={MAX_ROUTES} routes, got {}", routes.len())));
    }
    if !(within >= 0.0 && within <= net.delta_ms) {
        return Err(PngError::Config(format!("window {within} must lie in [0, Δ = {}]", net.delta_ms)));
    }
    let mut target = None;
    let mut path_delays = Vec::with_capacity(routes.len());
    let mut sources = Vec::with_capacity(routes.len());
    for (i, r) in routes.iter().enumerate() {
        let syns = r
            .synapses
            .iter()
            .map(|&s| net.synapses.get(s).ok_or_else(|| PngError::Config(format!("route {i}: no synapse {s}"))))
            .collect::<Result<Vec<_>, _>>()?;
        let (first, last) = match (syns.first(), syns.last()) {
            (Some(f), Some(l)) => (f, l),
            _ => return Err(PngError::Config(format!("route {i} is empty"))),
        };
        if syns.windows(2).any(|w| w[0].post != w[1].pre) {
            return Err(PngError::Config(format!("route {i} is not a connected path")));
        }
        if *target.get_or_insert(last.post) != last.post {
            return Err(PngError::Config("routes do not converge on one neuron".into()));
        }
        if !r.offset_ms.is_finite() {
            return Err(PngError::Config(format!("route {i} has a non-finite offset")));
        }
        sources.push(first.pre);
        path_delays.push(syns.iter().map(|s| s.delay_ms).sum::<f64>());
    }
    let target = target.expect("at least one route");
    let r = routes.len();
    let step = if r > 1 { (within / (r - 1) as f64 * 1024.0).floor() / 1024.0 } else { 0.0 };
    let lead = path_delays.iter().fold(0.0f64, |a, &d| a.max(d));
    let min_offset = routes.iter().fold(0.0f64, |a, rt| a.min(rt.offset_ms));
    let max_offset = routes.iter().fold(0.0f64, |a, rt| a.max(rt.offset_ms));
    let base = (lead - min_offset).ceil() + 1.0;
    let window_close_ms = base + within;
    let horizon = window_close_ms + max_offset + net.delta_ms + 1.0;

    let orders = permutations(r);
    let outputs: Vec<Option<f64>> = orders
        .iter()
        .map(|order| {
            let stimuli: Vec<(NeuronId, f64)> = order
                .iter()
                .enumerate()
                .map(|(slot, &ri)| {
                    let arrive = base + slot as f64 * step + routes[ri].offset_ms;
                    (sources[ri], arrive - path_delays[ri])
                })
                .collect();
            simulate(net, &stimuli, &SimOptions::new(horizon)).map(|run| {
                run.log.iter().find(|e| e.neuron == target && e.kind == EventKind::Spike).map(|e| e.time_ms)
            })
        })
        .collect::<Result<_, _>>()?;
    let passed = match outputs.first() {
        Some(Some(t0)) => outputs.iter().all(|o| o.is_some_and(|t| t.to_bits() == t0.to_bits())),
        _ => false,
    };
    Ok(ReadoutReport { passed, target, orders, outputs, window_close_ms })
}

/// All orderings of `0..n` in lexicographic order.
fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut cur: Vec<usize> = (0..n).collect();
    let mut out = vec![cur.clone()];
    loop {
        let Some(i) = (1..n).rev().find(|&i| cur[i - 1] < cur[i]) else {
            return out;
        };
        let j = (i..n).rev().find(|&j| cur[j] > cur[i - 1]).expect("successor exists");
        cur.swap(i - 1, j);
        cur[i..].reverse();
        out.push(cur.clone());
    }
}

/// Multiplies synapses on any of `cycles` by `gain` (capped at `w_max`) and
/// every other synapse by `decay`, once per round.
pub fn replay_consolidate(
    net: &DelayNetwork,
    cycles: &[CycleCandidate],
    rounds: usize,
    gain: f64,
    decay: f64,
) -> Result<DelayNetwork, PngError> {
    if !(gain > 1.0 && decay < 1.0 && decay > 0.0 && gain.is_finite()) {
        return Err(PngError::ReplayFactors { gain, decay });
    }
    let on_cycle: BTreeSet<usize> = cycles.iter().flat_map(|c| c.synapses.iter().copied()).collect();
    if let Some(&s) = on_cycle.iter().find(|&&s| s >= net.synapses.len()) {
        return Err(PngError::Config(format!("cycle references missing synapse {s}")));
    }
    let mut out = net.clone();
    for _ in 0..rounds {
        for (i, s) in out.synapses.iter_mut().enumerate() {
            s.weight = if on_cycle.contains(&i) { (s.weight * gain).min(net.w_max) } else { s.weight * decay };
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::super::Synapse;
    use super::*;

    fn ring(delays: &[f64], weights: &[f64]) -> DelayNetwork {
        let n = delays.len();
        let syns = (0..n).map(|i| Synapse::new(i as u32, ((i + 1) % n) as u32, weights[i], delays[i])).collect();
        DelayNetwork::new(n, syns, 5.0, 1, 2.0).unwrap()
    }

    #[test]
    fn resonant_ring() {
        let net = ring(&[40.0, 40.0, 45.0], &[0.9, 0.9, 0.9]);
        let c = find_resonant_cycles(&net, 125.0, 5.0, 0.5, 8).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].vertices, vec![0, 1, 2, 0]);
        assert_eq!(c[0].resonance_n, 1);
        assert_eq!(c[0].delay_sum, 125.0);
        assert!((c[0].weight_product - 0.729).abs() < 1e-12);
        let short = ring(&[30.0, 30.0, 40.0], &[0.9, 0.9, 0.9]);
        assert!(find_resonant_cycles(&short, 125.0, 5.0, 0.5, 8).unwrap().is_empty());
        let weak = ring(&[40.0, 40.0, 45.0], &[0.7, 0.7, 0.7]);
        assert!(find_resonant_cycles(&weak, 125.0, 5.0, 0.5, 8).unwrap().is_empty());
        assert!(matches!(find_resonant_cycles(&net, 125.0, 5.0, 0.5, 9), Err(PngError::MaxLen { .. })));
    }

    #[test]
    fn reentry_cases() {
        let net = ring(&[40.0, 40.0, 45.0], &[0.9, 0.9, 0.9]);
        let c = find_resonant_cycles(&net, 125.0, 5.0, 0.5, 8).unwrap().remove(0);
        let rep = test_reentry(&net, &c, 10).unwrap();
        assert!(rep.passed);
        assert_eq!(rep.latency_errors, vec![0.0; 10]);

        let mut broken = net.clone();
        broken.synapses[1].weight = 0.0;
        let rep = test_reentry(&broken, &c, 10).unwrap();
        assert!(!rep.passed && rep.refires.is_empty());

        let mut slow = net.clone();
        slow.synapses[2].delay_ms += 10.0;
        assert!(!test_reentry(&slow, &c, 10).unwrap().passed);
    }

    fn fan_in(r: usize) -> DelayNetwork {
        // route i: source i → relay r+i → target 2r
        let mut syns = Vec::new();
        for i in 0..r as u32 {
            syns.push(Synapse::new(i, r as u32 + i, 1.0, 3.0 + i as f64));
            syns.push(Synapse::new(r as u32 + i, 2 * r as u32, 0.5, 2.5 * (i + 1) as f64));
        }
        let k = r;
        DelayNetwork::new(2 * r + 1, syns, 5.0, 1, 1.0)
            .unwrap()
            .with_override(super::super::NeuronOverride { neuron: 2 * r as u32, k, threshold: 0.5 * r as f64 })
            .unwrap()
    }

    fn routes(r: usize) -> Vec<Route> {
        (0..r).map(|i| Route::new(vec![2 * i, 2 * i + 1])).collect()
    }

    #[test]
    fn readout_permutations() {
        let rep = order_invariant_readout(&fan_in(3), &routes(3), 5.0).unwrap();
        assert_eq!(rep.orders.len(), 6);
        assert!(rep.passed, "{:?}", rep.outputs);

        let mut late = routes(3);
        late[1].offset_ms = 12.0;
        assert!(!order_invariant_readout(&fan_in(3), &late, 5.0).unwrap().passed);

        let edge = order_invariant_readout(&fan_in(2), &routes(2), 5.0).unwrap();
        assert!(edge.passed);
        assert_eq!(edge.outputs[0], Some(edge.window_close_ms));
    }

    #[test]
    fn readout_rejects_divergent_routes() {
        let net = fan_in(2);
        let bad = vec![Route::new(vec![0, 1]), Route::new(vec![2])];
        assert!(matches!(order_invariant_readout(&net, &bad, 5.0), Err(PngError::Config(_))));
    }

    #[test]
    fn replay_arithmetic() {
        let mut net = ring(&[40.0, 40.0, 45.0], &[0.5, 0.5, 0.5]);
        net.synapses.push(Synapse::new(0, 2, 0.5, 10.0));
        let c = find_resonant_cycles(&net, 125.0, 5.0, 0.1, 8).unwrap();
        assert_eq!(c.len(), 1);
        let out = replay_consolidate(&net, &c, 1, 1.1, 0.9).unwrap();
        assert!((out.synapses[0].weight - 0.55).abs() < 1e-12);
        assert!((out.synapses[3].weight - 0.45).abs() < 1e-12);
        let pure = replay_consolidate(&net, &[], 2, 1.1, 0.9).unwrap();
        assert!(pure.synapses.iter().all(|s| (s.weight - 0.405).abs() < 1e-12));
        assert!(replay_consolidate(&net, &c, 1, 1.0, 0.9).is_err());
    }

    #[test]
    fn lexicographic_permutations() {
        assert_eq!(permutations(3), vec![
            vec![0, 1, 2],
            vec![0, 2, 1],
            vec![1, 0, 2],
            vec![1, 2, 0],
            vec![2, 0, 1],
            vec![2, 1, 0]
        ]);
        assert_eq!(permutations(1), vec![vec![0]]);
    }
}
