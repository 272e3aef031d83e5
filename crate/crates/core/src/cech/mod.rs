//! Finite covers, their nerves, and linear sheaf/cosheaf data over them.
//!
//! A cell is a sorted list of open indices: `[i]` is an open, `[i, j]` a
//! pairwise overlap, `[i, j, k]` a triple overlap. Sheaf restrictions run
//! from a cell to a cell with more indices (a smaller set), cosheaf
//! extensions the other way. Matrices are row-major and act on column
//! vectors.
//!
//! ```
//! use cyclos::cech::{build_nerve, Cover};
//!
//! // three arcs of a circle, pairwise overlapping, no common point
//! let cover = Cover::new(vec![0, 1, 2, 3, 4, 5], vec![vec![0, 1, 2], vec![2, 3, 4], vec![4, 5, 0]]).unwrap();
//! let nerve = build_nerve(&cover);
//! assert_eq!(nerve.edges.len(), 3);
//! assert!(nerve.triangles.is_empty());
//! assert_eq!(nerve.complex.betti(1).unwrap(), 1);
//! ```

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::{Chain1, ChainComplex, HomologyClass1};
use crate::linalg::{round_to_grid, Matrix, QuotientReducer};
use crate::unionfind::UnionFind;

pub mod synth;

/// Tolerance for every real-valued agreement check in this module.
pub const CECH_TOL: f64 = 1e-9;

/// Denominator of the grid a cochain is rounded onto before its class is
/// computed in exact arithmetic.
pub const CLASS_GRID: i64 = 1 << 20;

/// Sorted open indices naming an intersection of opens.
pub type Cell = Vec<usize>;

#[derive(Debug, Error)]
pub enum CechError {
    #[error("malformed data: {0}")]
    Malformed(String),
    #[error("missing stalk on cell {0:?}")]
    MissingStalk(Cell),
    #[error("missing map {from:?} -> {to:?}")]
    MissingMap { from: Cell, to: Cell },
    #[error("pairing is not natural for {small:?} inside {large:?} (residual {residual:e})")]
    Naturality { small: Cell, large: Cell, residual: f64 },
    #[error("co-section of open {open} does not come from overlap {edge:?} (residual {residual:e})")]
    NotExtendable { edge: [usize; 2], open: usize, residual: f64 },
    #[error("cochain is not closed on triangle {triangle:?} (residual {residual:e})")]
    NotClosed { triangle: [usize; 3], residual: f64 },
    #[error("cochain has {got} entries but the nerve has {expected} edges")]
    CochainLength { got: usize, expected: usize },
    #[error("bad refinement: {0}")]
    Refinement(String),
}

/// Finite ground set with indexed subsets covering it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cover {
    pub points: Vec<u32>,
    pub opens: Vec<Vec<u32>>,
}

impl Cover {
    pub fn new(points: Vec<u32>, opens: Vec<Vec<u32>>) -> Result<Self, CechError> {
        let c = Cover { points, opens };
        c.validate()?;
        Ok(c)
    }

    /// Every open lies in the ground set and together they cover it.
    pub fn validate(&self) -> Result<(), CechError> {
        let ground: BTreeSet<u32> = self.points.iter().copied().collect();
        let mut covered = BTreeSet::new();
        for (i, open) in self.opens.iter().enumerate() {
            for p in open {
                if !ground.contains(p) {
                    return Err(CechError::Malformed(format!("open {i} contains point {p} outside the ground set")));
                }
                covered.insert(*p);
            }
        }
        if covered != ground {
            let missing: Vec<u32> = ground.difference(&covered).copied().collect();
            return Err(CechError::Malformed(format!("points {missing:?} are not covered")));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.opens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.opens.is_empty()
    }

    /// Intersection of the opens named by `cell`.
    pub fn intersection(&self, cell: &[usize]) -> BTreeSet<u32> {
        let mut it = cell.iter();
        let Some(&first) = it.next() else {
            return self.points.iter().copied().collect();
        };
        let mut acc: BTreeSet<u32> = self.opens[first].iter().copied().collect();
        for &i in it {
            let other: BTreeSet<u32> = self.opens[i].iter().copied().collect();
            acc = acc.intersection(&other).copied().collect();
        }
        acc
    }
}

/// Nerve of a cover, truncated at dimension 2.
///
/// Vertex `i` of the complex is open `i`; edges are `i → j` with `i < j`,
/// in lexicographic order, and triangles likewise.
#[derive(Debug, Clone)]
pub struct Nerve {
    pub complex: ChainComplex,
    pub vertex_count: usize,
    pub edges: Vec<[usize; 2]>,
    pub triangles: Vec<[usize; 3]>,
    edge_index: BTreeMap<[usize; 2], usize>,
}

impl Nerve {
    pub fn edge_index(&self, i: usize, j: usize) -> Option<usize> {
        self.edge_index.get(&[i.min(j), i.max(j)]).copied()
    }

    /// Value of an antisymmetric cochain on the oriented pair `i → j`.
    fn oriented(&self, omega: &[f64], i: usize, j: usize) -> f64 {
        let e = self.edge_index(i, j).expect("edge of a nerve triangle");
        if i < j {
            omega[e]
        } else {
            -omega[e]
        }
    }

    /// `(δω)[a,b,c] = ω[b,c] − ω[a,c] + ω[a,b]` for every triangle.
    pub fn coboundary(&self, omega: &[f64]) -> Result<Vec<f64>, CechError> {
        self.check_cochain(omega)?;
        Ok(self
            .triangles
            .par_iter()
            .map(|&[a, b, c]| self.oriented(omega, b, c) - self.oriented(omega, a, c) + self.oriented(omega, a, b))
            .collect())
    }

    fn check_cochain(&self, omega: &[f64]) -> Result<(), CechError> {
        if omega.len() != self.edges.len() {
            return Err(CechError::CochainLength { got: omega.len(), expected: self.edges.len() });
        }
        Ok(())
    }

    /// Opens grouped by connected component of the nerve, each sorted.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut uf = UnionFind::new(self.vertex_count);
        for &[i, j] in &self.edges {
            uf.union(i, j);
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for v in 0..self.vertex_count {
            groups.entry(uf.find(v)).or_default().push(v);
        }
        let mut out: Vec<Vec<usize>> = groups.into_values().collect();
        out.sort();
        out
    }
}

/// Nerve with a simplex for every nonempty intersection of up to three opens.
pub fn build_nerve(c: &Cover) -> Nerve {
    let n = c.len();
    let sets: Vec<BTreeSet<u32>> = c.opens.iter().map(|o| o.iter().copied().collect()).collect();
    let mut edges = Vec::new();
    let mut triangles = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let ij: BTreeSet<u32> = sets[i].intersection(&sets[j]).copied().collect();
            if ij.is_empty() {
                continue;
            }
            edges.push([i, j]);
            for (k, set_k) in sets.iter().enumerate().skip(j + 1) {
                if ij.intersection(set_k).next().is_some() {
                    triangles.push([i, j, k]);
                }
            }
        }
    }
    triangles.sort();
    let edge_index = edges.iter().enumerate().map(|(e, &pair)| (pair, e)).collect();
    let complex = ChainComplex::new(
        (0..n as u32).collect(),
        edges.iter().map(|&[i, j]| (i as u32, j as u32)).collect(),
        triangles.iter().map(|&[a, b, c]| [a as u32, b as u32, c as u32]).collect(),
    )
    .expect("nerve triangles have all their sides");
    debug_assert!(complex.verify_dd_zero());
    Nerve { complex, vertex_count: n, edges, triangles, edge_index }
}

/// Dimension of the vector space attached to a cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stalk {
    pub cell: Cell,
    pub dim: usize,
}

/// Linear map between the spaces of two cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellMap {
    pub from: Cell,
    pub to: Cell,
    pub matrix: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SheafData {
    pub stalks: Vec<Stalk>,
    pub restrictions: Vec<CellMap>,
    /// One section per open.
    pub sections: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CosheafData {
    pub costalks: Vec<Stalk>,
    pub extensions: Vec<CellMap>,
    /// One co-section per open.
    pub cosections: Vec<Vec<f64>>,
}

/// Bilinear form on a cell: rows index the stalk, columns the co-stalk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Form {
    pub cell: Cell,
    pub matrix: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pairing {
    pub forms: Vec<Form>,
}

/// Everything the CLI reads from a single JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CechSystem {
    pub cover: Cover,
    pub sheaf: SheafData,
    pub cosheaf: CosheafData,
    pub pairing: Pairing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Direction {
    /// `from` is a sub-list of `to`.
    Restrict,
    /// `to` is a sub-list of `from`.
    Extend,
}

/// Validated dimensions and matrices keyed by cells.
#[derive(Debug, Clone)]
struct CellMaps {
    dims: BTreeMap<Cell, usize>,
    maps: BTreeMap<(Cell, Cell), Matrix<f64>>,
}

impl CellMaps {
    fn build(stalks: &[Stalk], entries: &[CellMap], opens: usize, dir: Direction) -> Result<Self, CechError> {
        let mut dims = BTreeMap::new();
        for s in stalks {
            check_cell(&s.cell, opens)?;
            if s.dim == 0 {
                return Err(CechError::Malformed(format!("zero-dimensional stalk on {:?}", s.cell)));
            }
            if dims.insert(s.cell.clone(), s.dim).is_some() {
                return Err(CechError::Malformed(format!("stalk on {:?} given twice", s.cell)));
            }
        }
        let mut maps = BTreeMap::new();
        for m in entries {
            check_cell(&m.from, opens)?;
            check_cell(&m.to, opens)?;
            let nested = match dir {
                Direction::Restrict => is_sublist(&m.from, &m.to),
                Direction::Extend => is_sublist(&m.to, &m.from),
            };
            if !nested {
                return Err(CechError::Malformed(format!("map {:?} -> {:?} goes the wrong way", m.from, m.to)));
            }
            let rows = *dims.get(&m.to).ok_or_else(|| CechError::MissingStalk(m.to.clone()))?;
            let cols = *dims.get(&m.from).ok_or_else(|| CechError::MissingStalk(m.from.clone()))?;
            let matrix = to_matrix(&m.matrix, rows, cols)
                .ok_or_else(|| CechError::Malformed(format!("map {:?} -> {:?} must be {rows}x{cols}", m.from, m.to)))?;
            if m.from == m.to && max_abs_diff(&matrix, &Matrix::identity(rows)) > CECH_TOL {
                return Err(CechError::Malformed(format!("map {:?} -> itself is not the identity", m.from)));
            }
            if maps.insert((m.from.clone(), m.to.clone()), matrix).is_some() {
                return Err(CechError::Malformed(format!("map {:?} -> {:?} given twice", m.from, m.to)));
            }
        }
        let out = CellMaps { dims, maps };
        out.check_composition()?;
        Ok(out)
    }

    /// `M_{a→c} = M_{b→c} M_{a→b}` wherever all three maps are given.
    fn check_composition(&self) -> Result<(), CechError> {
        for ((a, b), ab) in &self.maps {
            for ((b2, c), bc) in self.maps.range((b.clone(), Vec::new())..) {
                if b2 != b {
                    break;
                }
                if a == b || b == c {
                    continue;
                }
                if let Some(ac) = self.maps.get(&(a.clone(), c.clone())) {
                    let composed = bc.mul(ab).expect("validated shapes");
                    let r = max_abs_diff(&composed, ac);
                    if r > CECH_TOL {
                        return Err(CechError::Malformed(format!(
                            "maps through {b:?} do not compose to {a:?} -> {c:?} (residual {r:e})"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    fn dim(&self, cell: &[usize]) -> Result<usize, CechError> {
        self.dims.get(cell).copied().ok_or_else(|| CechError::MissingStalk(cell.to_vec()))
    }

    fn map(&self, from: &[usize], to: &[usize]) -> Result<&Matrix<f64>, CechError> {
        self.maps
            .get(&(from.to_vec(), to.to_vec()))
            .ok_or_else(|| CechError::MissingMap { from: from.to_vec(), to: to.to_vec() })
    }

    fn check_vectors(&self, what: &str, vectors: &[Vec<f64>], opens: usize) -> Result<(), CechError> {
        if vectors.len() != opens {
            return Err(CechError::Malformed(format!("{} {what}s for {opens} opens", vectors.len())));
        }
        for (i, v) in vectors.iter().enumerate() {
            let d = self.dim(&[i])?;
            if v.len() != d {
                return Err(CechError::Malformed(format!("{what} {i} has length {} but its stalk has dim {d}", v.len())));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(CechError::Malformed(format!("{what} {i} is not finite")));
            }
        }
        Ok(())
    }
}

fn check_cell(cell: &[usize], opens: usize) -> Result<(), CechError> {
    if cell.is_empty() || cell.windows(2).any(|w| w[0] >= w[1]) || cell.iter().any(|&i| i >= opens) {
        return Err(CechError::Malformed(format!("cell {cell:?} is not a sorted list of open indices")));
    }
    Ok(())
}

fn is_sublist(small: &[usize], large: &[usize]) -> bool {
    small.iter().all(|i| large.contains(i))
}

fn to_matrix(rows: &[Vec<f64>], r: usize, c: usize) -> Option<Matrix<f64>> {
    if rows.len() != r || rows.iter().any(|row| row.len() != c || row.iter().any(|x| !x.is_finite())) {
        return None;
    }
    Matrix::from_rows(rows.to_vec())
}

fn max_abs_diff(a: &Matrix<f64>, b: &Matrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for r in 0..a.rows() {
        for (x, y) in a.row(r).iter().zip(b.row(r)) {
            worst = worst.max((x - y).abs());
        }
    }
    worst
}

fn vec_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn dot_form(a: &[f64], form: &Matrix<f64>, b: &[f64]) -> f64 {
    let fb = form.mul_vec(b).expect("validated shapes");
    a.iter().zip(&fb).map(|(x, y)| x * y).sum()
}

/// Least-squares solution of `m h = g` and its max-norm residual.
fn least_squares(m: &Matrix<f64>, g: &[f64]) -> (Vec<f64>, f64) {
    let mt = m.transpose();
    let normal = mt.mul(m).expect("shapes");
    let rhs = mt.mul_vec(g).expect("shapes");
    let h = normal.solve(&rhs).unwrap_or_else(|| vec![0.0; m.cols()]);
    let back = m.mul_vec(&h).expect("shapes");
    let residual = vec_diff(&back, g);
    (h, residual)
}

fn edge_cells(i: usize, j: usize) -> (Cell, Cell, Cell) {
    (vec![i], vec![j], vec![i, j])
}

/// Disagreement of two restricted local data on one overlap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapResidual {
    pub edge: [usize; 2],
    pub residual: f64,
}

/// A compatible family of sections, one per open.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalSection {
    pub sections: Vec<Vec<f64>>,
    /// Common restriction on each nerve edge.
    pub overlaps: Vec<(Cell, Vec<f64>)>,
}

impl GlobalSection {
    pub fn restrict(&self, open: usize) -> &[f64] {
        &self.sections[open]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum GlueOutcome {
    Glued { section: GlobalSection, residuals: Vec<OverlapResidual> },
    Obstructed { violations: Vec<OverlapResidual>, residuals: Vec<OverlapResidual> },
}

impl GlueOutcome {
    pub fn section(&self) -> Option<&GlobalSection> {
        match self {
            GlueOutcome::Glued { section, .. } => Some(section),
            GlueOutcome::Obstructed { .. } => None,
        }
    }

    /// Residual on every nerve edge, in edge order.
    pub fn residuals(&self) -> &[OverlapResidual] {
        match self {
            GlueOutcome::Glued { residuals, .. } | GlueOutcome::Obstructed { residuals, .. } => residuals,
        }
    }
}

/// Restricts every section to every overlap and glues them when they agree.
pub fn glue_sections(sh: &SheafData, c: &Cover) -> Result<GlueOutcome, CechError> {
    let n = c.len();
    let maps = CellMaps::build(&sh.stalks, &sh.restrictions, n, Direction::Restrict)?;
    maps.check_vectors("section", &sh.sections, n)?;
    let nerve = build_nerve(c);
    let mut residuals = Vec::with_capacity(nerve.edges.len());
    let mut overlaps = Vec::with_capacity(nerve.edges.len());
    for &[i, j] in &nerve.edges {
        let (ci, cj, cij) = edge_cells(i, j);
        maps.dim(&cij)?;
        let a = maps.map(&ci, &cij)?.mul_vec(&sh.sections[i]).expect("validated shapes");
        let b = maps.map(&cj, &cij)?.mul_vec(&sh.sections[j]).expect("validated shapes");
        residuals.push(OverlapResidual { edge: [i, j], residual: vec_diff(&a, &b) });
        overlaps.push((cij, a));
    }
    let violations: Vec<OverlapResidual> = residuals.iter().filter(|r| !(r.residual < CECH_TOL)).cloned().collect();
    Ok(if violations.is_empty() {
        GlueOutcome::Glued { section: GlobalSection { sections: sh.sections.clone(), overlaps }, residuals }
    } else {
        GlueOutcome::Obstructed { violations, residuals }
    })
}

/// Colimit class of the co-sections in one connected component of the nerve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanComponent {
    pub opens: Vec<usize>,
    /// Coordinates in the quotient of the direct sum by the relations.
    pub class: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalPlan {
    /// Dimension of the direct sum of co-stalks over all opens.
    pub direct_sum_dim: usize,
    /// Dimension of the colimit.
    pub colimit_dim: usize,
    pub components: Vec<PlanComponent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum ColimitOutcome {
    Plan { plan: GlobalPlan, residuals: Vec<OverlapResidual> },
    Deadlock { violations: Vec<OverlapResidual>, residuals: Vec<OverlapResidual> },
}

impl ColimitOutcome {
    pub fn plan(&self) -> Option<&GlobalPlan> {
        match self {
            ColimitOutcome::Plan { plan, .. } => Some(plan),
            ColimitOutcome::Deadlock { .. } => None,
        }
    }
}

/// Quotient of `⊕ G(U_i)` by `ι_{ij→i}(h) ~ ι_{ij→j}(h)` over all overlaps.
///
/// Co-sections `g_i, g_j` on an overlap agree when their embeddings differ
/// by an element of the relation span, so they name the same class; the
/// residual is the distance of that difference from the span.
pub fn cosheaf_colimit(co: &CosheafData, c: &Cover) -> Result<ColimitOutcome, CechError> {
    let n = c.len();
    let maps = CellMaps::build(&co.costalks, &co.extensions, n, Direction::Extend)?;
    maps.check_vectors("co-section", &co.cosections, n)?;
    let nerve = build_nerve(c);
    let mut offsets = Vec::with_capacity(n + 1);
    offsets.push(0);
    for i in 0..n {
        offsets.push(offsets[i] + maps.dim(&[i])?);
    }
    let total = offsets[n];
    let mut relations = Vec::new();
    for &[i, j] in &nerve.edges {
        let (ci, cj, cij) = edge_cells(i, j);
        let d = maps.dim(&cij)?;
        let ei = maps.map(&cij, &ci)?;
        let ej = maps.map(&cij, &cj)?;
        for k in 0..d {
            let mut v = vec![0.0; total];
            for r in 0..ei.rows() {
                v[offsets[i] + r] += ei.get(r, k);
            }
            for r in 0..ej.rows() {
                v[offsets[j] + r] -= ej.get(r, k);
            }
            relations.push(v);
        }
    }
    let span = Matrix::from_fn(total, relations.len(), |r, k| relations[k][r]);
    let embed = |i: usize| {
        let mut v = vec![0.0; total];
        v[offsets[i]..offsets[i + 1]].copy_from_slice(&co.cosections[i]);
        v
    };
    let residuals: Vec<OverlapResidual> = nerve
        .edges
        .iter()
        .map(|&[i, j]| {
            let diff: Vec<f64> = embed(i).iter().zip(embed(j)).map(|(a, b)| a - b).collect();
            OverlapResidual { edge: [i, j], residual: least_squares(&span, &diff).1 }
        })
        .collect();
    let violations: Vec<OverlapResidual> = residuals.iter().filter(|r| !(r.residual < CECH_TOL)).cloned().collect();
    if !violations.is_empty() {
        return Ok(ColimitOutcome::Deadlock { violations, residuals });
    }
    let reducer = QuotientReducer::new(total, &relations);
    let components = nerve
        .components()
        .into_iter()
        .map(|opens| {
            PlanComponent { class: reducer.quotient_coordinates(&embed(opens[0])), opens }
        })
        .collect();
    let plan = GlobalPlan { direct_sum_dim: total, colimit_dim: total - reducer.subspace_dim(), components };
    Ok(ColimitOutcome::Plan { plan, residuals })
}

/// Validated sheaf, cosheaf and pairing over one cover.
struct Bundle {
    sheaf: CellMaps,
    cosheaf: CellMaps,
    forms: BTreeMap<Cell, Matrix<f64>>,
}

impl Bundle {
    fn build(sh: &SheafData, co: &CosheafData, pr: &Pairing, opens: usize) -> Result<Self, CechError> {
        let sheaf = CellMaps::build(&sh.stalks, &sh.restrictions, opens, Direction::Restrict)?;
        let cosheaf = CellMaps::build(&co.costalks, &co.extensions, opens, Direction::Extend)?;
        sheaf.check_vectors("section", &sh.sections, opens)?;
        cosheaf.check_vectors("co-section", &co.cosections, opens)?;
        let mut forms = BTreeMap::new();
        for f in &pr.forms {
            check_cell(&f.cell, opens)?;
            let (r, c) = (sheaf.dim(&f.cell)?, cosheaf.dim(&f.cell)?);
            let m = to_matrix(&f.matrix, r, c)
                .ok_or_else(|| CechError::Malformed(format!("form on {:?} must be {r}x{c}", f.cell)))?;
            if forms.insert(f.cell.clone(), m).is_some() {
                return Err(CechError::Malformed(format!("form on {:?} given twice", f.cell)));
            }
        }
        Ok(Bundle { sheaf, cosheaf, forms })
    }

    fn form(&self, cell: &[usize]) -> Result<&Matrix<f64>, CechError> {
        self.forms.get(cell).ok_or_else(|| CechError::Malformed(format!("no form on cell {cell:?}")))
    }

    /// `max |ρᵀ P_small − P_large ι|` for every restriction with a matching
    /// extension and forms on both ends.
    fn naturality(&self) -> Vec<NaturalityResidual> {
        let mut out = Vec::new();
        for ((large, small), rho) in &self.sheaf.maps {
            if large == small {
                continue;
            }
            let Some(iota) = self.cosheaf.maps.get(&(small.clone(), large.clone())) else { continue };
            let (Some(p_small), Some(p_large)) = (self.forms.get(small), self.forms.get(large)) else { continue };
            let lhs = rho.transpose().mul(p_small).expect("validated shapes");
            let rhs = p_large.mul(iota).expect("validated shapes");
            out.push(NaturalityResidual { small: small.clone(), large: large.clone(), residual: max_abs_diff(&lhs, &rhs) });
        }
        out
    }
}

/// Naturality residual for one nested pair of cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaturalityResidual {
    pub small: Cell,
    pub large: Cell,
    pub residual: f64,
}

/// Residuals of `⟨ρ(s), g⟩_small = ⟨s, ι(g)⟩_large` for every nested pair
/// that carries a restriction, an extension, and two forms.
pub fn check_naturality(
    sh: &SheafData,
    co: &CosheafData,
    pr: &Pairing,
    opens: usize,
) -> Result<Vec<NaturalityResidual>, CechError> {
    Ok(Bundle::build(sh, co, pr, opens)?.naturality())
}

/// Edge cochain `ω` and its coboundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cocycle {
    /// One value per nerve edge, oriented `i → j` with `i < j`.
    pub omega: Vec<f64>,
    /// One value per nerve triangle.
    pub coboundary: Vec<f64>,
}

impl Cocycle {
    pub fn max_coboundary(&self) -> f64 {
        self.coboundary.iter().map(|x| x.abs()).fold(0.0, f64::max)
    }
}

/// `ω_ij = ⟨ρ_{ij←i} s_i, ĝ_j⟩_{ij} − ⟨ρ_{ij←j} s_j, ĝ_i⟩_{ij}`, where `ĝ_j`
/// is the element of the overlap co-stalk that `ι_{ij→j}` sends to `g_j`.
///
/// Fails with [`CechError::Naturality`] on the first nested pair whose
/// naturality residual exceeds [`CECH_TOL`].
pub fn pairing_cocycle(
    sh: &SheafData,
    co: &CosheafData,
    pr: &Pairing,
    nerve: &Nerve,
) -> Result<Cocycle, CechError> {
    let bundle = Bundle::build(sh, co, pr, nerve.vertex_count)?;
    if let Some(bad) = bundle.naturality().into_iter().find(|r| !(r.residual <= CECH_TOL)) {
        return Err(CechError::Naturality { small: bad.small, large: bad.large, residual: bad.residual });
    }
    cocycle_of(&bundle, sh, co, nerve)
}

/// [`pairing_cocycle`] without the naturality precondition, for studying
/// what happens when it fails.
pub fn pairing_cocycle_unchecked(
    sh: &SheafData,
    co: &CosheafData,
    pr: &Pairing,
    nerve: &Nerve,
) -> Result<Cocycle, CechError> {
    let bundle = Bundle::build(sh, co, pr, nerve.vertex_count)?;
    cocycle_of(&bundle, sh, co, nerve)
}

fn cocycle_of(bundle: &Bundle, sh: &SheafData, co: &CosheafData, nerve: &Nerve) -> Result<Cocycle, CechError> {
    let omega = nerve
        .edges
        .par_iter()
        .map(|&[i, j]| {
            let (ci, cj, cij) = edge_cells(i, j);
            let form = bundle.form(&cij)?;
            let si = bundle.sheaf.map(&ci, &cij)?.mul_vec(&sh.sections[i]).expect("validated shapes");
            let sj = bundle.sheaf.map(&cj, &cij)?.mul_vec(&sh.sections[j]).expect("validated shapes");
            let lift = |open: usize, cell: &Cell| -> Result<Vec<f64>, CechError> {
                let g = &co.cosections[open];
                let (h, residual) = least_squares(bundle.cosheaf.map(&cij, cell)?, g);
                let scale = 1.0 + g.iter().map(|x| x.abs()).fold(0.0, f64::max);
                if !(residual <= CECH_TOL * scale) {
                    return Err(CechError::NotExtendable { edge: [i, j], open, residual });
                }
                Ok(h)
            };
            let gi = lift(i, &ci)?;
            let gj = lift(j, &cj)?;
            Ok(dot_form(&si, form, &gj) - dot_form(&sj, form, &gi))
        })
        .collect::<Result<Vec<f64>, CechError>>()?;
    let coboundary = nerve.coboundary(&omega)?;
    Ok(Cocycle { omega, coboundary })
}

/// Values of `ω` on the nerve's `H1` basis cycles, in floating point and
/// without a closedness check.
pub fn cycle_values(omega: &[f64], nerve: &Nerve) -> Result<Vec<f64>, CechError> {
    nerve.check_cochain(omega)?;
    Ok(nerve
        .complex
        .homology_basis()
        .iter()
        .map(|z| {
            use num_traits::ToPrimitive;
            z.iter().map(|(e, c)| c.to_f64().unwrap_or(f64::NAN) * omega[e]).sum()
        })
        .collect())
}

/// Cohomology class of a closed edge cochain.
///
/// Coordinate `k` is the value of `ω` on the `k`-th cycle of
/// [`ChainComplex::homology_basis`], rounded onto the `1/CLASS_GRID` grid.
/// A closed cochain vanishes on boundaries, so this depends only on the
/// class. Rounding the cycle values rather than the entries of `ω` keeps a
/// floating-point coboundary at exactly zero.
pub fn cocycle_class(omega: &[f64], nerve: &Nerve) -> Result<HomologyClass1, CechError> {
    let d = nerve.coboundary(omega)?;
    if let Some((t, r)) = d.iter().enumerate().find(|(_, r)| !(r.abs() <= CECH_TOL)) {
        return Err(CechError::NotClosed { triangle: nerve.triangles[t], residual: *r });
    }
    let values = cycle_values(omega, nerve)?;
    Ok(HomologyClass1 { coordinates: values.iter().map(|&v| round_to_grid(v, CLASS_GRID)).collect() })
}

/// A finer cover together with the coarse open containing each fine open.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Refinement {
    pub cover: Cover,
    pub parent: Vec<usize>,
}

/// Splits open `open` into `first` (kept at index `open`) and `second`
/// (appended as the last open).
pub fn refine_cover(c: &Cover, open: usize, first: Vec<u32>, second: Vec<u32>) -> Result<Refinement, CechError> {
    let target: BTreeSet<u32> = c.opens.get(open).ok_or_else(|| CechError::Refinement(format!("no open {open}")))?.iter().copied().collect();
    let a: BTreeSet<u32> = first.iter().copied().collect();
    let b: BTreeSet<u32> = second.iter().copied().collect();
    if a.is_empty() || b.is_empty() {
        return Err(CechError::Refinement("both parts must be nonempty".into()));
    }
    if !a.is_subset(&target) || !b.is_subset(&target) || a.union(&b).copied().collect::<BTreeSet<_>>() != target {
        return Err(CechError::Refinement(format!("parts must cover exactly open {open}")));
    }
    let mut opens = c.opens.clone();
    opens[open] = first;
    opens.push(second);
    let mut parent: Vec<usize> = (0..c.len()).collect();
    parent.push(open);
    Ok(Refinement { cover: Cover::new(c.points.clone(), opens)?, parent })
}

fn check_parent(coarse: &Nerve, fine: &Nerve, parent: &[usize]) -> Result<(), CechError> {
    if parent.len() != fine.vertex_count || parent.iter().any(|&p| p >= coarse.vertex_count) {
        return Err(CechError::Refinement("parent map does not match the nerves".into()));
    }
    Ok(())
}

/// Image of the fine edge `i → j` in the coarse nerve: `None` when both ends
/// share a parent, else the coarse edge index and orientation sign.
fn coarse_edge(coarse: &Nerve, parent: &[usize], i: usize, j: usize) -> Result<Option<(usize, i64)>, CechError> {
    let (a, b) = (parent[i], parent[j]);
    if a == b {
        return Ok(None);
    }
    let e = coarse
        .edge_index(a, b)
        .ok_or_else(|| CechError::Refinement(format!("overlap {i},{j} has no coarse overlap {a},{b}")))?;
    Ok(Some((e, if a < b { 1 } else { -1 })))
}

/// Pulls an edge cochain back along the refinement map.
pub fn pull_back_cochain(omega: &[f64], coarse: &Nerve, fine: &Nerve, parent: &[usize]) -> Result<Vec<f64>, CechError> {
    coarse.check_cochain(omega)?;
    check_parent(coarse, fine, parent)?;
    fine.edges
        .iter()
        .map(|&[i, j]| Ok(coarse_edge(coarse, parent, i, j)?.map_or(0.0, |(e, s)| s as f64 * omega[e])))
        .collect()
}

/// Pushes a fine edge chain forward along the refinement map.
pub fn push_forward_chain(z: &Chain1, coarse: &Nerve, fine: &Nerve, parent: &[usize]) -> Result<Chain1, CechError> {
    check_parent(coarse, fine, parent)?;
    let mut out = Chain1::zero();
    for (e, c) in z.iter() {
        let [i, j] = *fine.edges.get(e).ok_or_else(|| CechError::Refinement(format!("chain uses unknown edge {e}")))?;
        if let Some((ce, s)) = coarse_edge(coarse, parent, i, j)? {
            out.add_term(ce, if s > 0 { c.clone() } else { -c.clone() });
        }
    }
    Ok(out)
}

/// Class of `ω` on the coarse nerve against the class of its pullback.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementCheck {
    pub coarse: HomologyClass1,
    pub fine: HomologyClass1,
    /// Coarse class transported to the fine basis: entry `l` is the coarse
    /// class evaluated on the pushforward of fine basis cycle `l`.
    pub transported: HomologyClass1,
    pub preserved: bool,
}

/// Checks that refining the cover and pulling `ω` back yields the same
/// class.
///
/// Each fine basis cycle is pushed forward and expressed in the coarse
/// `H1` basis (exactly); the fine coordinate must equal that combination of
/// coarse cycle values, both rounded onto the class grid.
pub fn refinement_check(omega: &[f64], coarse: &Nerve, fine: &Nerve, parent: &[usize]) -> Result<RefinementCheck, CechError> {
    use num_traits::ToPrimitive;
    let coarse_class = cocycle_class(omega, coarse)?;
    let coarse_values = cycle_values(omega, coarse)?;
    let pulled = pull_back_cochain(omega, coarse, fine, parent)?;
    let fine_class = cocycle_class(&pulled, fine)?;
    let transported = fine
        .complex
        .homology_basis()
        .iter()
        .map(|z| {
            let image = push_forward_chain(z, coarse, fine, parent)?;
            let m = coarse.complex.homology_class(&image).map_err(|e| CechError::Refinement(e.to_string()))?;
            let v: f64 = m.coordinates.iter().zip(&coarse_values).map(|(a, b)| a.to_f64().unwrap_or(f64::NAN) * b).sum();
            Ok(round_to_grid(v, CLASS_GRID))
        })
        .collect::<Result<Vec<_>, CechError>>()?;
    let transported = HomologyClass1 { coordinates: transported };
    let preserved = transported == fine_class;
    Ok(RefinementCheck { coarse: coarse_class, fine: fine_class, transported, preserved })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::q;
    use num_traits::Zero;

    fn identity_maps(c: &Cover, dim: usize) -> (Vec<Stalk>, Vec<CellMap>, Vec<CellMap>) {
        let nerve = build_nerve(c);
        let eye: Vec<Vec<f64>> = (0..dim).map(|r| (0..dim).map(|k| if r == k { 1.0 } else { 0.0 }).collect()).collect();
        let mut stalks: Vec<Stalk> = (0..c.len()).map(|i| Stalk { cell: vec![i], dim }).collect();
        let mut rho = Vec::new();
        let mut iota = Vec::new();
        for &[i, j] in &nerve.edges {
            stalks.push(Stalk { cell: vec![i, j], dim });
            for o in [i, j] {
                rho.push(CellMap { from: vec![o], to: vec![i, j], matrix: eye.clone() });
                iota.push(CellMap { from: vec![i, j], to: vec![o], matrix: eye.clone() });
            }
        }
        (stalks, rho, iota)
    }

    fn hollow() -> Cover {
        Cover::new(vec![0, 1, 2], vec![vec![0, 1], vec![1, 2], vec![2, 0]]).unwrap()
    }

    #[test]
    fn disjoint_opens_have_no_edge() {
        let nerve = build_nerve(&Cover::new(vec![0, 1], vec![vec![0], vec![1]]).unwrap());
        assert_eq!(nerve.vertex_count, 2);
        assert!(nerve.edges.is_empty());
    }

    #[test]
    fn common_point_fills_the_triangle() {
        let c = Cover::new(vec![0, 1, 2, 3], vec![vec![0, 1, 3], vec![1, 2, 3], vec![2, 0, 3]]).unwrap();
        let nerve = build_nerve(&c);
        assert_eq!(nerve.triangles, vec![[0, 1, 2]]);
        assert_eq!(nerve.complex.betti(1).unwrap(), 0);
        assert_eq!(build_nerve(&hollow()).complex.betti(1).unwrap(), 1);
    }

    #[test]
    fn cover_must_cover() {
        assert!(Cover::new(vec![0, 1, 2], vec![vec![0, 1]]).is_err());
        assert!(Cover::new(vec![0, 1], vec![vec![0, 1, 7]]).is_err());
    }

    #[test]
    fn glue_and_obstruct() {
        let c = Cover::new(vec![0, 1, 2], vec![vec![0, 1], vec![1, 2]]).unwrap();
        let (stalks, restrictions, _) = identity_maps(&c, 2);
        let mut sh = SheafData { stalks, restrictions, sections: vec![vec![1.0, 2.0], vec![1.0, 2.0]] };
        let glued = glue_sections(&sh, &c).unwrap();
        let s = glued.section().unwrap();
        assert_eq!(s.restrict(0), &[1.0, 2.0]);
        assert_eq!(s.restrict(1), &[1.0, 2.0]);
        sh.sections[1][0] = 1.5;
        match glue_sections(&sh, &c).unwrap() {
            GlueOutcome::Obstructed { violations, .. } => {
                assert_eq!(violations, vec![OverlapResidual { edge: [0, 1], residual: 0.5 }]);
            }
            other => panic!("expected an obstruction, got {other:?}"),
        }
        sh.sections[1].push(0.0);
        assert!(matches!(glue_sections(&sh, &c), Err(CechError::Malformed(_))));
    }

    #[test]
    fn single_open_colimit_is_its_cosection() {
        let c = Cover::new(vec![0], vec![vec![0]]).unwrap();
        let co = CosheafData {
            costalks: vec![Stalk { cell: vec![0], dim: 3 }],
            extensions: vec![],
            cosections: vec![vec![0.5, -1.0, 2.0]],
        };
        let plan = cosheaf_colimit(&co, &c).unwrap();
        let plan = plan.plan().unwrap();
        assert_eq!(plan.colimit_dim, 3);
        assert_eq!(plan.components[0].class, vec![0.5, -1.0, 2.0]);
    }

    #[test]
    fn incompatible_extensions_deadlock() {
        let c = Cover::new(vec![0, 1, 2], vec![vec![0, 1], vec![1, 2]]).unwrap();
        let (costalks, _, extensions) = identity_maps(&c, 1);
        let co = CosheafData { costalks, extensions, cosections: vec![vec![1.0], vec![2.0]] };
        match cosheaf_colimit(&co, &c).unwrap() {
            ColimitOutcome::Deadlock { violations, .. } => assert_eq!(violations[0].edge, [0, 1]),
            other => panic!("expected a deadlock, got {other:?}"),
        }
    }

    #[test]
    fn equal_data_on_an_overlap_gives_zero() {
        let c = Cover::new(vec![0, 1, 2], vec![vec![0, 1], vec![1, 2]]).unwrap();
        let (stalks, restrictions, extensions) = identity_maps(&c, 2);
        let sh = SheafData { stalks: stalks.clone(), restrictions, sections: vec![vec![1.0, 3.0]; 2] };
        let co = CosheafData { costalks: stalks.clone(), extensions, cosections: vec![vec![-2.0, 0.5]; 2] };
        let eye = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let pr = Pairing { forms: stalks.iter().map(|s| Form { cell: s.cell.clone(), matrix: eye.clone() }).collect() };
        let cocycle = pairing_cocycle(&sh, &co, &pr, &build_nerve(&c)).unwrap();
        assert_eq!(cocycle.omega, vec![0.0]);
    }

    #[test]
    fn hollow_triangle_class_is_the_circulation() {
        let nerve = build_nerve(&hollow());
        // edges [0,1], [0,2], [1,2]; circulation 0→1→2→0
        let omega = [0.25, -1.0, 0.5];
        let class = cocycle_class(&omega, &nerve).unwrap();
        assert_eq!(class.coordinates, vec![q(7) / q(4)]);
    }

    #[test]
    fn filled_triangle_class_is_zero_and_open_cochain_is_rejected() {
        let c = Cover::new(vec![0, 1, 2, 3], vec![vec![0, 1, 3], vec![1, 2, 3], vec![2, 0, 3]]).unwrap();
        let nerve = build_nerve(&c);
        let class = cocycle_class(&[1.0, 3.0, 2.0], &nerve).unwrap();
        assert!(class.coordinates.is_empty());
        assert!(matches!(cocycle_class(&[1.0, 0.0, 0.0], &nerve), Err(CechError::NotClosed { .. })));
    }

    #[test]
    fn splitting_an_open_of_the_hollow_triangle() {
        let c = hollow();
        let r = refine_cover(&c, 0, vec![0, 1], vec![1]).unwrap();
        let coarse = build_nerve(&c);
        let fine = build_nerve(&r.cover);
        let check = refinement_check(&[0.25, -1.0, 0.5], &coarse, &fine, &r.parent).unwrap();
        assert!(check.preserved);
        assert_eq!(check.fine.coordinates.iter().filter(|x| !x.is_zero()).count(), 1);
        assert!(refine_cover(&c, 0, vec![0], vec![2]).is_err());
    }
}
