//! Filtrations of 2-complexes and their `H0`/`H1` persistence barcodes.
//!
//! `H0` is computed by union-find with the elder rule; `H1` deaths come from
//! the standard column reduction of triangle boundaries over the rationals.
//!
//! ```
//! use cyclos::persist::{compute_barcode, Filtration, FiltrationStep, Simplex};
//!
//! let steps = vec![
//!     FiltrationStep::new(0.0, Simplex::Vertex { id: 0 }),
//!     FiltrationStep::new(0.0, Simplex::Vertex { id: 1 }),
//!     FiltrationStep::new(0.0, Simplex::Vertex { id: 2 }),
//!     FiltrationStep::new(1.0, Simplex::Edge { tail: 0, head: 1 }),
//!     FiltrationStep::new(2.0, Simplex::Edge { tail: 1, head: 2 }),
//!     FiltrationStep::new(3.0, Simplex::Edge { tail: 2, head: 0 }),
//! ];
//! let barcode = compute_barcode(&Filtration::from_steps(&steps).unwrap());
//! assert_eq!(barcode.bars_in_dim(1).len(), 1);
//! assert_eq!(barcode.bars_in_dim(1)[0].death, None);
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::chain::{ChainComplex, ChainError, VertexId};
use crate::unionfind::UnionFind;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PersistError {
    #[error("invalid filtration: step {step} has a face that appears later")]
    FaceOrder { step: usize },
    #[error("invalid filtration: value at step {step} decreases")]
    NonMonotone { step: usize },
    #[error("invalid filtration: value {0} is not finite")]
    NonFinite(f64),
    #[error("threshold must be non-negative, got {0}")]
    NegativeThreshold(f64),
    #[error("window values must be strictly increasing")]
    UnsortedWindows,
    #[error("monotonicity violated: graph at window {delta} does not contain the previous one")]
    NotNested { delta: f64 },
    #[error("value vector has length {got}, expected {expected}")]
    ValueLength { got: usize, expected: usize },
    #[error(transparent)]
    Chain(#[from] ChainError),
}

/// One simplex of a filtration step, named by vertex ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Simplex {
    Vertex { id: VertexId },
    Edge { tail: VertexId, head: VertexId },
    Triangle { vertices: [VertexId; 3] },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiltrationStep {
    pub value: f64,
    #[serde(flatten)]
    pub simplex: Simplex,
}

impl FiltrationStep {
    pub fn new(value: f64, simplex: Simplex) -> Self {
        FiltrationStep { value, simplex }
    }
}

/// Sublevel filtrations grow with the value; superlevel ones shrink.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    #[default]
    Sublevel,
    Superlevel,
}

/// A final complex with an entry value for each simplex.
#[derive(Debug, Clone)]
pub struct Filtration {
    complex: ChainComplex,
    vertex_values: Vec<f64>,
    edge_values: Vec<f64>,
    triangle_values: Vec<f64>,
    horizon: Option<f64>,
}

impl Filtration {
    /// Builds from an ordered step list. Triangles attach to the earliest
    /// edge joining each pair of their vertices.
    pub fn from_steps(steps: &[FiltrationStep]) -> Result<Self, PersistError> {
        let mut vertices = Vec::new();
        let mut vertex_values = Vec::new();
        let mut edges = Vec::new();
        let mut edge_values = Vec::new();
        let mut triangles = Vec::new();
        let mut triangle_values = Vec::new();
        let mut seen: BTreeMap<VertexId, ()> = BTreeMap::new();
        let mut pairs: BTreeMap<(VertexId, VertexId), ()> = BTreeMap::new();
        let mut last = f64::NEG_INFINITY;
        for (i, step) in steps.iter().enumerate() {
            if !step.value.is_finite() {
                return Err(PersistError::NonFinite(step.value));
            }
            if step.value < last {
                return Err(PersistError::NonMonotone { step: i });
            }
            last = step.value;
            match step.simplex {
                Simplex::Vertex { id } => {
                    if seen.insert(id, ()).is_some() {
                        return Err(ChainError::DuplicateVertex(id).into());
                    }
                    vertices.push(id);
                    vertex_values.push(step.value);
                }
                Simplex::Edge { tail, head } => {
                    if !seen.contains_key(&tail) || !seen.contains_key(&head) {
                        return Err(PersistError::FaceOrder { step: i });
                    }
                    pairs.insert((tail.min(head), tail.max(head)), ());
                    edges.push((tail, head));
                    edge_values.push(step.value);
                }
                Simplex::Triangle { vertices: [a, b, c] } => {
                    let has = |x: VertexId, y: VertexId| pairs.contains_key(&(x.min(y), x.max(y)));
                    if !(has(a, b) && has(b, c) && has(a, c)) {
                        return Err(PersistError::FaceOrder { step: i });
                    }
                    triangles.push([a, b, c]);
                    triangle_values.push(step.value);
                }
            }
        }
        let complex = ChainComplex::new(vertices, edges, triangles)?;
        Self::from_values(complex, vertex_values, edge_values, triangle_values)
    }

    /// Attaches entry values to the simplices of `complex`, checking that
    /// every face enters no later than its cofaces.
    pub fn from_values(
        complex: ChainComplex,
        vertex_values: Vec<f64>,
        edge_values: Vec<f64>,
        triangle_values: Vec<f64>,
    ) -> Result<Self, PersistError> {
        for (got, expected) in [
            (vertex_values.len(), complex.vertices().len()),
            (edge_values.len(), complex.edges().len()),
            (triangle_values.len(), complex.triangles().len()),
        ] {
            if got != expected {
                return Err(PersistError::ValueLength { got, expected });
            }
        }
        if let Some(&v) = vertex_values.iter().chain(&edge_values).chain(&triangle_values).find(|v| !v.is_finite()) {
            return Err(PersistError::NonFinite(v));
        }
        let nv = complex.vertices().len();
        for (e, &(a, b)) in complex.edges().iter().enumerate() {
            let va = vertex_values[complex.vertex_position(a).expect("validated")];
            let vb = vertex_values[complex.vertex_position(b).expect("validated")];
            if va > edge_values[e] || vb > edge_values[e] {
                return Err(PersistError::FaceOrder { step: nv + e });
            }
        }
        for (t, spec) in complex.triangles().iter().enumerate() {
            if spec.edges.iter().any(|&e| edge_values[e] > triangle_values[t]) {
                return Err(PersistError::FaceOrder { step: nv + complex.edges().len() + t });
            }
        }
        Ok(Filtration { complex, vertex_values, edge_values, triangle_values, horizon: None })
    }

    pub fn complex(&self) -> &ChainComplex {
        &self.complex
    }

    pub fn vertex_values(&self) -> &[f64] {
        &self.vertex_values
    }

    pub fn edge_values(&self) -> &[f64] {
        &self.edge_values
    }

    pub fn triangle_values(&self) -> &[f64] {
        &self.triangle_values
    }

    /// Largest parameter the filtration was sampled at, if declared.
    pub fn horizon(&self) -> Option<f64> {
        self.horizon
    }

    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = Some(horizon);
        self
    }

    /// Every distinct entry value, ascending.
    pub fn values(&self) -> Vec<f64> {
        let mut v: Vec<f64> =
            self.vertex_values.iter().chain(&self.edge_values).chain(&self.triangle_values).copied().collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }

    /// Subcomplex of simplices with value ≤ `t`.
    pub fn complex_at(&self, t: f64) -> ChainComplex {
        let x = &self.complex;
        let vertices: Vec<VertexId> =
            x.vertices().iter().zip(&self.vertex_values).filter(|(_, &v)| v <= t).map(|(&id, _)| id).collect();
        let mut edge_map = BTreeMap::new();
        let mut edges = Vec::new();
        for (e, (&pair, &v)) in x.edges().iter().zip(&self.edge_values).enumerate() {
            if v <= t {
                edge_map.insert(e, edges.len());
                edges.push(pair);
            }
        }
        let triangles = x
            .triangles()
            .iter()
            .zip(&self.triangle_values)
            .filter(|(_, &v)| v <= t)
            .map(|(spec, _)| crate::chain::TriangleSpec {
                vertices: spec.vertices,
                edges: spec.edges.map(|e| edge_map[&e]),
            })
            .collect();
        ChainComplex::with_triangle_edges(vertices, edges, triangles).expect("faces precede cofaces")
    }
}

/// A persistence interval. `death == None` means the class never dies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bar {
    pub dim: usize,
    pub birth: f64,
    #[serde(serialize_with = "ser_death", deserialize_with = "de_death")]
    pub death: Option<f64>,
}

fn ser_death<S: Serializer>(d: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match d {
        Some(v) => s.serialize_f64(*v),
        None => s.serialize_str("inf"),
    }
}

fn de_death<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Death {
        Num(f64),
        Text(String),
    }
    match Death::deserialize(d)? {
        Death::Num(v) => Ok(Some(v)),
        Death::Text(s) if s == "inf" => Ok(None),
        Death::Text(s) => Err(serde::de::Error::custom(format!("bad death value {s:?}"))),
    }
}

impl Bar {
    pub fn new(dim: usize, birth: f64, death: Option<f64>) -> Self {
        Bar { dim, birth, death }
    }

    pub fn is_infinite(&self) -> bool {
        self.death.is_none()
    }

    /// `|death − birth|` with an infinite death clamped to `cap`.
    pub fn length(&self, cap: f64) -> f64 {
        (self.death.unwrap_or(cap) - self.birth).abs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Barcode {
    pub bars: Vec<Bar>,
    #[serde(default)]
    pub direction: Direction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
}

impl Barcode {
    pub fn new(bars: Vec<Bar>, direction: Direction) -> Self {
        Barcode { bars, direction, horizon: None }
    }

    pub fn empty() -> Self {
        Self::new(Vec::new(), Direction::Sublevel)
    }

    pub fn bars_in_dim(&self, dim: usize) -> Vec<&Bar> {
        self.bars.iter().filter(|b| b.dim == dim).collect()
    }

    /// Bars of dimension `dim` alive at `t` (birth ≤ t < death for sublevel).
    pub fn alive_at(&self, dim: usize, t: f64) -> usize {
        self.bars
            .iter()
            .filter(|b| b.dim == dim)
            .filter(|b| match self.direction {
                Direction::Sublevel => b.birth <= t && b.death.is_none_or(|d| t < d),
                Direction::Superlevel => b.birth >= t && b.death.is_none_or(|d| t > d),
            })
            .count()
    }

    /// Cap used for infinite bars when none is given: the declared horizon,
    /// else one unit past the most extreme finite value.
    pub fn default_cap(&self) -> f64 {
        if let Some(h) = self.horizon {
            return h;
        }
        let finite = self.bars.iter().flat_map(|b| std::iter::once(b.birth).chain(b.death));
        match self.direction {
            Direction::Sublevel => finite.fold(f64::NEG_INFINITY, f64::max) + 1.0,
            Direction::Superlevel => finite.fold(f64::INFINITY, f64::min) - 1.0,
        }
    }

    /// `dim,birth,death` rows with a header; infinite deaths print as `inf`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("dim,birth,death\n");
        for b in &self.bars {
            let death = b.death.map_or_else(|| "inf".to_string(), |d| d.to_string());
            let _ = writeln!(out, "{},{},{}", b.dim, b.birth, death);
        }
        out
    }
}

/// Φ surrogate: how many bars are at least `threshold` long and their total length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersistenceIndex {
    pub threshold: f64,
    pub cap: f64,
    pub long_bar_count: usize,
    pub total_persistence: f64,
}

/// Counts and sums bar lengths ≥ `threshold`; infinite bars are clamped to
/// `cap` (default [`Barcode::default_cap`]).
pub fn persistence_index(b: &Barcode, threshold: f64, cap: Option<f64>) -> Result<PersistenceIndex, PersistError> {
    if threshold < 0.0 || threshold.is_nan() {
        return Err(PersistError::NegativeThreshold(threshold));
    }
    let cap = cap.unwrap_or_else(|| b.default_cap());
    let lengths: Vec<f64> = b.bars.iter().map(|bar| bar.length(cap)).filter(|&l| l >= threshold).collect();
    Ok(PersistenceIndex {
        threshold,
        cap,
        long_bar_count: lengths.len(),
        total_persistence: lengths.iter().sum(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Cell {
    Vertex(usize),
    Edge(usize),
    Triangle(usize),
}

impl Cell {
    fn dim(self) -> u8 {
        match self {
            Cell::Vertex(_) => 0,
            Cell::Edge(_) => 1,
            Cell::Triangle(_) => 2,
        }
    }
}

/// Processing order: value, then dimension, then id (vertex id, edge or
/// triangle index).
fn ordered_cells(f: &Filtration) -> Vec<(f64, Cell)> {
    let x = &f.complex;
    let mut cells: Vec<(f64, Cell)> = Vec::new();
    cells.extend(f.vertex_values.iter().enumerate().map(|(i, &v)| (v, Cell::Vertex(i))));
    cells.extend(f.edge_values.iter().enumerate().map(|(i, &v)| (v, Cell::Edge(i))));
    cells.extend(f.triangle_values.iter().enumerate().map(|(i, &v)| (v, Cell::Triangle(i))));
    let id = |c: Cell| match c {
        Cell::Vertex(i) => x.vertices()[i] as usize,
        Cell::Edge(i) | Cell::Triangle(i) => i,
    };
    cells.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.dim().cmp(&b.1.dim())).then(id(a.1).cmp(&id(b.1))));
    cells
}

/// Barcode of a sublevel filtration.
pub fn compute_barcode(f: &Filtration) -> Barcode {
    let x = &f.complex;
    let cells = ordered_cells(f);
    let mut uf = UnionFind::new(x.vertices().len());
    let mut bars = Vec::new();
    let mut positive_edges = Vec::new();
    let mut triangles_in_order = Vec::new();
    let elder_key = |i: usize| (f.vertex_values[i], x.vertices()[i]);

    for &(value, cell) in &cells {
        match cell {
            Cell::Vertex(_) => {}
            Cell::Edge(e) => {
                let (a, b) = x.edges()[e];
                let (ia, ib) = (x.vertex_position(a).unwrap(), x.vertex_position(b).unwrap());
                let (ra, rb) = (uf.find(ia), uf.find(ib));
                if ra == rb {
                    positive_edges.push(e);
                } else {
                    // roots are always the elder vertex of their component
                    let (elder, younger) =
                        if elder_key(ra).partial_cmp(&elder_key(rb)) != Some(std::cmp::Ordering::Greater) {
                            (ra, rb)
                        } else {
                            (rb, ra)
                        };
                    bars.push(Bar::new(0, f.vertex_values[younger], Some(value)));
                    uf.union_into(elder, younger);
                }
            }
            Cell::Triangle(t) => triangles_in_order.push((value, t)),
        }
    }
    for i in 0..x.vertices().len() {
        if uf.find(i) == i {
            bars.push(Bar::new(0, f.vertex_values[i], None));
        }
    }

    // Edge rows in processing order for the reduction.
    let mut order = vec![0usize; x.edges().len()];
    for (pos, e) in cells.iter().filter_map(|&(_, c)| if let Cell::Edge(e) = c { Some(e) } else { None }).enumerate() {
        order[e] = pos;
    }
    let b2 = x.boundary2_matrix();
    let mut reduced: Vec<BTreeMap<usize, BigRational>> = Vec::new();
    let mut low_owner: BTreeMap<usize, usize> = BTreeMap::new();
    let mut killed: BTreeMap<usize, f64> = BTreeMap::new();
    for &(value, t) in &triangles_in_order {
        let mut col: BTreeMap<usize, BigRational> = BTreeMap::new();
        for e in 0..x.edges().len() {
            let v = b2.get(e, t);
            if v != 0 {
                *col.entry(order[e]).or_insert_with(BigRational::zero) += crate::linalg::q(v);
            }
        }
        col.retain(|_, v| !v.is_zero());
        while let Some((&low, lv)) = col.iter().next_back() {
            let Some(&owner) = low_owner.get(&low) else { break };
            let factor = lv / &reduced[owner][&low];
            for (&r, v) in &reduced[owner] {
                let entry = col.entry(r).or_insert_with(BigRational::zero);
                *entry -= &factor * v;
            }
            col.retain(|_, v| !v.is_zero());
        }
        if let Some((&low, _)) = col.iter().next_back() {
            low_owner.insert(low, reduced.len());
            killed.insert(low, value);
        }
        reduced.push(col);
    }
    for &e in &positive_edges {
        let birth = f.edge_values[e];
        bars.push(Bar::new(1, birth, killed.get(&order[e]).copied()));
    }
    sort_bars(&mut bars);
    Barcode { bars, direction: Direction::Sublevel, horizon: f.horizon }
}

/// Canonical bar order: dimension, birth, then death (infinite last).
pub fn sort_bars(bars: &mut [Bar]) {
    bars.sort_by(|a, b| {
        a.dim
            .cmp(&b.dim)
            .then(a.birth.total_cmp(&b.birth))
            .then(a.death.unwrap_or(f64::INFINITY).total_cmp(&b.death.unwrap_or(f64::INFINITY)))
    });
}

/// Filtration indexed by window width from a family of nested complexes.
/// Each simplex enters at the first window containing it; the last window
/// is recorded as the horizon used to cap infinite bars.
pub fn window_filtration(graphs: &[(f64, ChainComplex)]) -> Result<Filtration, PersistError> {
    if graphs.windows(2).any(|w| w[0].0.partial_cmp(&w[1].0) != Some(std::cmp::Ordering::Less)) {
        return Err(PersistError::UnsortedWindows);
    }
    let Some((last_delta, last)) = graphs.last() else {
        return Ok(Filtration::from_values(ChainComplex::empty(), vec![], vec![], vec![])?);
    };
    type Counts<K> = BTreeMap<K, usize>;
    fn counts<K: Ord + Clone>(items: impl Iterator<Item = K>) -> Counts<K> {
        let mut m = BTreeMap::new();
        for k in items {
            *m.entry(k).or_insert(0) += 1;
        }
        m
    }
    fn contains<K: Ord>(big: &Counts<K>, small: &Counts<K>) -> bool {
        small.iter().all(|(k, &n)| big.get(k).is_some_and(|&m| m >= n))
    }
    let per_window: Vec<_> = graphs
        .iter()
        .map(|(d, g)| {
            (
                *d,
                counts(g.vertices().iter().copied()),
                counts(g.edges().iter().copied()),
                counts(g.triangles().iter().map(|t| t.vertices)),
            )
        })
        .collect();
    for w in per_window.windows(2) {
        let (prev, next) = (&w[0], &w[1]);
        if !(contains(&next.1, &prev.1) && contains(&next.2, &prev.2) && contains(&next.3, &prev.3)) {
            return Err(PersistError::NotNested { delta: next.0 });
        }
    }
    let entry = |k: usize, pick: &dyn Fn(&(f64, Counts<VertexId>, Counts<(VertexId, VertexId)>, Counts<[VertexId; 3]>)) -> usize| {
        per_window.iter().find(|w| pick(w) >= k).map(|w| w.0).expect("present in the last window")
    };
    let vertex_values = last.vertices().iter().map(|v| entry(1, &|w| w.1.get(v).copied().unwrap_or(0))).collect();
    let mut seen_edges: Counts<(VertexId, VertexId)> = BTreeMap::new();
    let edge_values = last
        .edges()
        .iter()
        .map(|p| {
            let k = seen_edges.entry(*p).or_insert(0);
            *k += 1;
            let k = *k;
            entry(k, &|w| w.2.get(p).copied().unwrap_or(0))
        })
        .collect();
    let mut seen_tris: Counts<[VertexId; 3]> = BTreeMap::new();
    let triangle_values = last
        .triangles()
        .iter()
        .map(|t| {
            let k = seen_tris.entry(t.vertices).or_insert(0);
            *k += 1;
            let k = *k;
            entry(k, &|w| w.3.get(&t.vertices).copied().unwrap_or(0))
        })
        .collect();
    Ok(Filtration::from_values(last.clone(), vertex_values, edge_values, triangle_values)?.with_horizon(*last_delta))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(value: f64, id: VertexId) -> FiltrationStep {
        FiltrationStep::new(value, Simplex::Vertex { id })
    }
    fn e(value: f64, tail: VertexId, head: VertexId) -> FiltrationStep {
        FiltrationStep::new(value, Simplex::Edge { tail, head })
    }
    fn t(value: f64, vertices: [VertexId; 3]) -> FiltrationStep {
        FiltrationStep::new(value, Simplex::Triangle { vertices })
    }

    fn triangle_steps(fill: Option<f64>) -> Vec<FiltrationStep> {
        let mut s = vec![v(0.0, 0), v(0.0, 1), v(0.0, 2), e(1.0, 0, 1), e(2.0, 1, 2), e(3.0, 2, 0)];
        if let Some(f) = fill {
            s.push(t(f, [0, 1, 2]));
        }
        s
    }

    #[test]
    fn unfilled_triangle_barcode() {
        let b = compute_barcode(&Filtration::from_steps(&triangle_steps(None)).unwrap());
        assert_eq!(
            b.bars,
            vec![
                Bar::new(0, 0.0, Some(1.0)),
                Bar::new(0, 0.0, Some(2.0)),
                Bar::new(0, 0.0, None),
                Bar::new(1, 3.0, None)
            ]
        );
    }

    #[test]
    fn filled_triangle_kills_cycle() {
        let b = compute_barcode(&Filtration::from_steps(&triangle_steps(Some(4.0))).unwrap());
        assert_eq!(b.bars_in_dim(1), vec![&Bar::new(1, 3.0, Some(4.0))]);
    }

    #[test]
    fn single_vertex() {
        let b = compute_barcode(&Filtration::from_steps(&[v(0.0, 7)]).unwrap());
        assert_eq!(b.bars, vec![Bar::new(0, 0.0, None)]);
    }

    #[test]
    fn elder_rule_prefers_lower_id_on_ties() {
        // 5 and 3 born together; the merge kills the component rooted at 5.
        let b = compute_barcode(&Filtration::from_steps(&[v(0.0, 5), v(0.0, 3), v(1.0, 9), e(2.0, 5, 3), e(2.0, 9, 3)]).unwrap());
        assert_eq!(b.bars, vec![Bar::new(0, 0.0, Some(2.0)), Bar::new(0, 0.0, None), Bar::new(0, 1.0, Some(2.0))]);
    }

    #[test]
    fn face_order_is_enforced() {
        assert_eq!(Filtration::from_steps(&[v(0.0, 0), e(1.0, 0, 1)]).unwrap_err(), PersistError::FaceOrder { step: 1 });
        assert_eq!(
            Filtration::from_steps(&[v(0.0, 0), v(0.0, 1), e(1.0, 0, 1), t(2.0, [0, 1, 2])]).unwrap_err(),
            PersistError::FaceOrder { step: 3 }
        );
        assert_eq!(Filtration::from_steps(&[v(1.0, 0), v(0.0, 1)]).unwrap_err(), PersistError::NonMonotone { step: 1 });
    }

    #[test]
    fn index_arithmetic() {
        let empty = persistence_index(&Barcode::empty(), 0.0, None).unwrap();
        assert_eq!((empty.long_bar_count, empty.total_persistence), (0, 0.0));
        let b = Barcode::new(
            vec![Bar::new(1, 0.0, Some(5.0)), Bar::new(1, 1.0, Some(5.0)), Bar::new(1, 2.0, Some(2.5))],
            Direction::Sublevel,
        );
        let p = persistence_index(&b, 1.0, None).unwrap();
        assert_eq!((p.long_bar_count, p.total_persistence), (2, 9.0));
        assert_eq!(persistence_index(&b, -1.0, None).unwrap_err(), PersistError::NegativeThreshold(-1.0));
    }

    #[test]
    fn default_cap_is_one_past_max() {
        let b = Barcode::new(vec![Bar::new(0, 0.0, Some(2.0)), Bar::new(0, 0.0, None)], Direction::Sublevel);
        assert_eq!(b.default_cap(), 3.0);
        assert_eq!(persistence_index(&b, 0.0, None).unwrap().total_persistence, 5.0);
    }

    #[test]
    fn json_and_csv_infinite_bars() {
        let b = Barcode::new(vec![Bar::new(1, 3.0, None)], Direction::Sublevel);
        let s = serde_json::to_string(&b).unwrap();
        assert_eq!(s, r#"{"bars":[{"dim":1,"birth":3.0,"death":"inf"}],"direction":"sublevel"}"#);
        assert_eq!(serde_json::from_str::<Barcode>(&s).unwrap(), b);
        assert_eq!(b.to_csv(), "dim,birth,death\n1,3,inf\n");
    }

    #[test]
    fn step_json_shape() {
        let s: Vec<FiltrationStep> =
            serde_json::from_str(r#"[{"value":0,"kind":"vertex","id":1},{"value":1,"kind":"edge","tail":1,"head":1}]"#)
                .unwrap();
        assert_eq!(s[1], e(1.0, 1, 1));
    }

    fn square(extra_diagonal: bool) -> ChainComplex {
        let mut edges = vec![(0, 1), (1, 2), (2, 3)];
        if extra_diagonal {
            edges.push((3, 0));
        }
        ChainComplex::new(vec![0, 1, 2, 3], edges, vec![]).unwrap()
    }

    #[test]
    fn window_filtration_births() {
        let f = window_filtration(&[(1.0, square(false)), (2.0, square(true))]).unwrap();
        let b = compute_barcode(&f);
        assert_eq!(b.bars_in_dim(1), vec![&Bar::new(1, 2.0, None)]);
        let same = window_filtration(&[(1.0, square(true)), (2.0, square(true)), (3.0, square(true))]).unwrap();
        let b = compute_barcode(&same);
        assert!(b.bars.iter().all(|bar| bar.birth == 1.0));
        assert_eq!(b.default_cap(), 3.0);
        assert_eq!(b.bars_in_dim(1)[0].length(b.default_cap()), 2.0);
    }

    #[test]
    fn window_filtration_rejects_shrinking() {
        let err = window_filtration(&[(1.0, square(true)), (2.0, square(false))]).unwrap_err();
        assert_eq!(err, PersistError::NotNested { delta: 2.0 });
        assert_eq!(
            window_filtration(&[(2.0, square(true)), (1.0, square(true))]).unwrap_err(),
            PersistError::UnsortedWindows
        );
    }
}
