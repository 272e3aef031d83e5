use std::collections::{BTreeMap, VecDeque};
use std::sync::OnceLock;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use super::homology::CycleBasis;
use super::{Chain0, Chain1, ChainError};
use crate::linalg::{integer_rank, q};
use crate::unionfind::UnionFind;

pub type VertexId = u32;

/// Dense integer matrix, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<i64>,
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix { rows, cols, data: vec![0; rows * cols] }
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Option<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return None;
        }
        Some(IntMatrix { rows: r, cols: c, data: rows.concat() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> i64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: i64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn entries(&self) -> &[i64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<i64>> {
        self.data.chunks(self.cols.max(1)).take(self.rows).map(<[i64]>::to_vec).collect()
    }

    /// Product `self · other`; `None` on shape mismatch.
    pub fn mul(&self, other: &IntMatrix) -> Option<IntMatrix> {
        if self.cols != other.rows {
            return None;
        }
        let mut out = IntMatrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a == 0 {
                    continue;
                }
                for c in 0..other.cols {
                    out.data[r * other.cols + c] += a * other.get(k, c);
                }
            }
        }
        Some(out)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0)
    }

    pub fn rank(&self) -> usize {
        integer_rank(self.rows, self.cols, &self.data)
    }
}

/// A triangle given by its vertices `[v0, v1, v2]` and the edge indices
/// joining `v0–v1`, `v1–v2` and `v0–v2`, in that order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TriangleSpec {
    pub vertices: [VertexId; 3],
    pub edges: [usize; 3],
}

/// JSON form: `{"vertices":[..], "edges":[[tail,head],..], "triangles":[[a,b,c],..]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexFile {
    pub vertices: Vec<VertexId>,
    pub edges: Vec<(VertexId, VertexId)>,
    #[serde(default)]
    pub triangles: Vec<[VertexId; 3]>,
}

/// Vertices, oriented multiedges and oriented triangles with their boundary
/// matrices. Immutable once built.
#[derive(Debug, Clone)]
pub struct ChainComplex {
    vertices: Vec<VertexId>,
    vertex_index: BTreeMap<VertexId, usize>,
    edges: Vec<(VertexId, VertexId)>,
    triangles: Vec<TriangleSpec>,
    boundary1: IntMatrix,
    boundary2: IntMatrix,
    basis: OnceLock<CycleBasis>,
}

impl PartialEq for ChainComplex {
    fn eq(&self, other: &Self) -> bool {
        self.vertices == other.vertices
            && self.edges == other.edges
            && self.triangles == other.triangles
            && self.boundary2 == other.boundary2
    }
}

impl ChainComplex {
    /// Builds a complex, resolving each triangle's sides to the lowest-index
    /// edge between the corresponding vertex pair (in either direction).
    pub fn new(
        vertices: Vec<VertexId>,
        edges: Vec<(VertexId, VertexId)>,
        triangles: Vec<[VertexId; 3]>,
    ) -> Result<Self, ChainError> {
        let mut lookup: BTreeMap<(VertexId, VertexId), usize> = BTreeMap::new();
        for (i, &(a, b)) in edges.iter().enumerate() {
            let key = (a.min(b), a.max(b));
            lookup.entry(key).or_insert(i);
        }
        let specs = triangles
            .iter()
            .enumerate()
            .map(|(t, &[a, b, c])| {
                let find = |x: VertexId, y: VertexId| {
                    lookup
                        .get(&(x.min(y), x.max(y)))
                        .copied()
                        .ok_or(ChainError::UnresolvedTriangle { triangle: t, a: x, b: y })
                };
                Ok(TriangleSpec { vertices: [a, b, c], edges: [find(a, b)?, find(b, c)?, find(a, c)?] })
            })
            .collect::<Result<Vec<_>, ChainError>>()?;
        Self::with_triangle_edges(vertices, edges, specs)
    }

    /// Builds a complex whose triangles name their side edges explicitly,
    /// which matters when parallel edges exist.
    pub fn with_triangle_edges(
        vertices: Vec<VertexId>,
        edges: Vec<(VertexId, VertexId)>,
        triangles: Vec<TriangleSpec>,
    ) -> Result<Self, ChainError> {
        let mut vertex_index = BTreeMap::new();
        for (i, &v) in vertices.iter().enumerate() {
            if vertex_index.insert(v, i).is_some() {
                return Err(ChainError::DuplicateVertex(v));
            }
        }
        let mut boundary1 = IntMatrix::zeros(vertices.len(), edges.len());
        for (e, &(tail, head)) in edges.iter().enumerate() {
            let t = *vertex_index.get(&tail).ok_or(ChainError::UnknownVertex { edge: e, vertex: tail })?;
            let h = *vertex_index.get(&head).ok_or(ChainError::UnknownVertex { edge: e, vertex: head })?;
            // a self-loop has zero boundary
            boundary1.set(h, e, boundary1.get(h, e) + 1);
            boundary1.set(t, e, boundary1.get(t, e) - 1);
        }
        let mut boundary2 = IntMatrix::zeros(edges.len(), triangles.len());
        for (t, spec) in triangles.iter().enumerate() {
            let [a, b, c] = spec.vertices;
            // ∂[a,b,c] = [b,c] - [a,c] + [a,b]
            let sides = [(a, b, 1i64), (b, c, 1), (a, c, -1)];
            for (slot, &(x, y, sign)) in sides.iter().enumerate() {
                let e = spec.edges[slot];
                let &(tail, head) = edges.get(e).ok_or(ChainError::MismatchedTriangleEdge { triangle: t, edge: e })?;
                let orient = if (tail, head) == (x, y) {
                    1
                } else if (tail, head) == (y, x) {
                    -1
                } else {
                    return Err(ChainError::MismatchedTriangleEdge { triangle: t, edge: e });
                };
                boundary2.set(e, t, boundary2.get(e, t) + sign * orient);
            }
        }
        Ok(ChainComplex {
            vertices,
            vertex_index,
            edges,
            triangles,
            boundary1,
            boundary2,
            basis: OnceLock::new(),
        })
    }

    pub fn from_file(file: &ComplexFile) -> Result<Self, ChainError> {
        Self::new(file.vertices.clone(), file.edges.clone(), file.triangles.clone())
    }

    pub fn to_file(&self) -> ComplexFile {
        ComplexFile {
            vertices: self.vertices.clone(),
            edges: self.edges.clone(),
            triangles: self.triangles.iter().map(|t| t.vertices).collect(),
        }
    }

    pub fn empty() -> Self {
        Self::new(Vec::new(), Vec::new(), Vec::new()).expect("empty complex is valid")
    }

    /// Replaces `∂2` without checking `∂1∂2 = 0`. Exists to study malformed
    /// complexes; every constructor above produces a valid one.
    pub fn with_raw_boundary2(mut self, boundary2: IntMatrix) -> Result<Self, ChainError> {
        let expected = (self.edges.len(), self.triangles.len());
        if (boundary2.rows(), boundary2.cols()) != expected {
            return Err(ChainError::BoundaryShape { got: (boundary2.rows(), boundary2.cols()), expected });
        }
        self.boundary2 = boundary2;
        self.basis = OnceLock::new();
        Ok(self)
    }

    pub fn vertices(&self) -> &[VertexId] {
        &self.vertices
    }

    pub fn edges(&self) -> &[(VertexId, VertexId)] {
        &self.edges
    }

    pub fn triangles(&self) -> &[TriangleSpec] {
        &self.triangles
    }

    pub fn vertex_position(&self, v: VertexId) -> Option<usize> {
        self.vertex_index.get(&v).copied()
    }

    pub fn boundary1_matrix(&self) -> &IntMatrix {
        &self.boundary1
    }

    pub fn boundary2_matrix(&self) -> &IntMatrix {
        &self.boundary2
    }

    /// `Σ coeff·(head − tail)`.
    pub fn boundary1(&self, c: &Chain1) -> Result<Chain0, ChainError> {
        self.check_chain(c)?;
        let mut out = Chain0::zero();
        for (e, coeff) in c.iter() {
            let (tail, head) = self.edges[e];
            out.add_term(head, coeff.clone());
            out.add_term(tail, -coeff.clone());
        }
        Ok(out)
    }

    /// Boundary of a 2-chain given as triangle index → coefficient.
    pub fn boundary2(&self, coeffs: &[(usize, BigRational)]) -> Chain1 {
        let mut out = Chain1::zero();
        for (t, coeff) in coeffs {
            for e in 0..self.edges.len() {
                let v = self.boundary2.get(e, *t);
                if v != 0 {
                    out.add_term(e, coeff * q(v));
                }
            }
        }
        out
    }

    /// True iff `∂1 · ∂2` is the zero matrix.
    pub fn verify_dd_zero(&self) -> bool {
        self.boundary1.mul(&self.boundary2).is_some_and(|m| m.is_zero())
    }

    pub fn is_cycle(&self, c: &Chain1) -> Result<bool, ChainError> {
        Ok(self.boundary1(c)?.is_zero())
    }

    pub(crate) fn check_chain(&self, c: &Chain1) -> Result<(), ChainError> {
        match c.max_index() {
            Some(i) if i >= self.edges.len() => Err(ChainError::EdgeIndexOutOfRange { index: i, len: self.edges.len() }),
            _ => Ok(()),
        }
    }

    /// Number of connected components (isolated vertices count).
    pub fn component_count(&self) -> usize {
        let mut uf = UnionFind::new(self.vertices.len());
        for &(a, b) in &self.edges {
            uf.union(self.vertex_index[&a], self.vertex_index[&b]);
        }
        uf.count_sets()
    }

    /// `β0` = components, `β1 = dim ker ∂1 − rank ∂2`.
    pub fn betti(&self, dim: usize) -> Result<usize, ChainError> {
        match dim {
            0 => Ok(self.component_count()),
            1 => {
                let kernel = self.edges.len() - self.boundary1.rank();
                Ok(kernel - self.boundary2.rank())
            }
            d => Err(ChainError::UnsupportedDimension(d)),
        }
    }

    pub(crate) fn cycle_basis_cache(&self) -> &CycleBasis {
        self.basis.get_or_init(|| CycleBasis::compute(self))
    }

    /// Spanning-forest edges chosen greedily in edge-index order, plus the
    /// forest adjacency used to trace fundamental cycles.
    pub(crate) fn spanning_forest(&self) -> (Vec<bool>, Vec<Vec<(usize, usize, i64)>>) {
        let n = self.vertices.len();
        let mut uf = UnionFind::new(n);
        let mut in_tree = vec![false; self.edges.len()];
        let mut adj: Vec<Vec<(usize, usize, i64)>> = vec![Vec::new(); n];
        for (e, &(a, b)) in self.edges.iter().enumerate() {
            let (ia, ib) = (self.vertex_index[&a], self.vertex_index[&b]);
            if uf.union(ia, ib) {
                in_tree[e] = true;
                adj[ia].push((ib, e, 1));
                adj[ib].push((ia, e, -1));
            }
        }
        (in_tree, adj)
    }

    /// Tree path from vertex position `from` to `to` as a chain with
    /// `∂ = to − from`.
    pub(crate) fn tree_path(adj: &[Vec<(usize, usize, i64)>], from: usize, to: usize) -> Chain1 {
        let mut prev: Vec<Option<(usize, usize, i64)>> = vec![None; adj.len()];
        let mut seen = vec![false; adj.len()];
        let mut queue = VecDeque::from([from]);
        seen[from] = true;
        while let Some(v) = queue.pop_front() {
            if v == to {
                break;
            }
            for &(w, e, sign) in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    prev[w] = Some((v, e, sign));
                    queue.push_back(w);
                }
            }
        }
        let mut path = Chain1::zero();
        let mut cur = to;
        while cur != from {
            let (p, e, sign) = prev[cur].expect("vertices lie in one tree");
            path.add_term(e, q(sign));
            cur = p;
        }
        path
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn filled_triangle() -> ChainComplex {
        ChainComplex::new(vec![1, 2, 3], vec![(1, 2), (2, 3), (3, 1)], vec![[1, 2, 3]]).unwrap()
    }

    #[test]
    fn boundary_of_single_edge() {
        let x = filled_triangle();
        let d = x.boundary1(&Chain1::from_ints([(0, 1)])).unwrap();
        assert_eq!(d.coeff(2), q(1));
        assert_eq!(d.coeff(1), q(-1));
        assert_eq!(d.len(), 2);
    }

    #[test]
    fn boundary_of_loop_and_path() {
        let x = filled_triangle();
        assert!(x.boundary1(&Chain1::from_ints([(0, 1), (1, 1), (2, 1)])).unwrap().is_zero());
        let d = x.boundary1(&Chain1::from_ints([(0, 1), (1, 1)])).unwrap();
        assert_eq!(d.coeff(3), q(1));
        assert_eq!(d.coeff(1), q(-1));
        assert_eq!(d.coeff(2), q(0));
    }

    #[test]
    fn out_of_range_chain_is_rejected() {
        let x = filled_triangle();
        let err = x.boundary1(&Chain1::from_ints([(7, 1)])).unwrap_err();
        assert_eq!(err, ChainError::EdgeIndexOutOfRange { index: 7, len: 3 });
    }

    #[test]
    fn dd_zero_cases() {
        assert!(filled_triangle().verify_dd_zero());
        assert!(ChainComplex::empty().verify_dd_zero());
        // Mis-signed row for edge (3,1): hand product gives entries ±2 ≠ 0.
        let bad = IntMatrix::from_rows(&[vec![1], vec![1], vec![-1]]).unwrap();
        let x = filled_triangle().with_raw_boundary2(bad).unwrap();
        let prod = x.boundary1_matrix().mul(x.boundary2_matrix()).unwrap();
        assert_eq!(prod.to_rows(), vec![vec![-2], vec![0], vec![2]]);
        assert!(!x.verify_dd_zero());
    }

    #[test]
    fn triangle_orientation_signs() {
        let x = filled_triangle();
        // ∂[1,2,3] = [2,3] - [1,3] + [1,2]; edge 2 is listed as (3,1) so it enters with +1
        assert_eq!(x.boundary2_matrix().to_rows(), vec![vec![1], vec![1], vec![1]]);
    }

    #[test]
    fn construction_errors() {
        assert_eq!(
            ChainComplex::new(vec![1, 1], vec![], vec![]).unwrap_err(),
            ChainError::DuplicateVertex(1)
        );
        assert!(matches!(
            ChainComplex::new(vec![1], vec![(1, 2)], vec![]).unwrap_err(),
            ChainError::UnknownVertex { edge: 0, vertex: 2 }
        ));
        assert!(matches!(
            ChainComplex::new(vec![1, 2, 3], vec![(1, 2)], vec![[1, 2, 3]]).unwrap_err(),
            ChainError::UnresolvedTriangle { .. }
        ));
    }

    #[test]
    fn betti_numbers() {
        let circle = ChainComplex::new(vec![0, 1, 2, 3], vec![(0, 1), (1, 2), (2, 3), (3, 0)], vec![]).unwrap();
        assert_eq!(circle.betti(0).unwrap(), 1);
        assert_eq!(circle.betti(1).unwrap(), 1);
        let trees = ChainComplex::new(vec![0, 1, 2, 3, 4], vec![(0, 1), (1, 2), (3, 4)], vec![]).unwrap();
        assert_eq!(trees.betti(0).unwrap(), 2);
        assert_eq!(trees.betti(1).unwrap(), 0);
        let theta = ChainComplex::new(vec![0, 1], vec![(0, 1), (0, 1), (1, 0)], vec![]).unwrap();
        assert_eq!(theta.betti(1).unwrap(), 2);
        assert_eq!(filled_triangle().betti(1).unwrap(), 0);
        assert_eq!(theta.betti(2).unwrap_err(), ChainError::UnsupportedDimension(2));
    }

    #[test]
    fn file_round_trip() {
        let x = filled_triangle();
        let json = serde_json::to_string(&x.to_file()).unwrap();
        assert_eq!(json, r#"{"vertices":[1,2,3],"edges":[[1,2],[2,3],[3,1]],"triangles":[[1,2,3]]}"#);
        let back = ChainComplex::from_file(&serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back, x);
    }
}
