use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use super::{Chain1, ChainComplex, ChainError};
use crate::linalg::{format_rational, parse_rational, q, Matrix, QuotientReducer};

/// Coordinates of a 1-cycle in the fundamental cycle basis, reduced modulo
/// the image of `∂2`. Two cycles are homologous iff their classes are equal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HomologyClass1 {
    pub coordinates: Vec<BigRational>,
}

impl HomologyClass1 {
    pub fn is_zero(&self) -> bool {
        self.coordinates.iter().all(Zero::is_zero)
    }

    pub fn neg(&self) -> Self {
        HomologyClass1 { coordinates: self.coordinates.iter().map(|c| -c).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        HomologyClass1 { coordinates: self.coordinates.iter().zip(&other.coordinates).map(|(a, b)| a + b).collect() }
    }

    pub fn dim(&self) -> usize {
        self.coordinates.len()
    }

    /// Coordinates as `f64`, for reporting.
    pub fn to_f64(&self) -> Vec<f64> {
        use num_traits::ToPrimitive;
        self.coordinates.iter().map(|c| c.to_f64().unwrap_or(f64::NAN)).collect()
    }
}

impl Serialize for HomologyClass1 {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let v: Vec<String> = self.coordinates.iter().map(format_rational).collect();
        v.serialize(s)
    }
}

impl<'de> Deserialize<'de> for HomologyClass1 {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Vec::<String>::deserialize(d)?;
        let coordinates = v
            .iter()
            .map(|s| parse_rational(s).ok_or_else(|| serde::de::Error::custom(format!("bad rational {s:?}"))))
            .collect::<Result<_, _>>()?;
        Ok(HomologyClass1 { coordinates })
    }
}

/// Fundamental cycles of the greedy spanning forest, with the reducer that
/// quotients their coordinates by the boundaries of triangles.
#[derive(Debug, Clone)]
pub(crate) struct CycleBasis {
    pub non_tree: Vec<usize>,
    pub cycles: Vec<Chain1>,
    pub reducer: QuotientReducer<BigRational>,
}

impl CycleBasis {
    pub(crate) fn compute(x: &ChainComplex) -> Self {
        let (in_tree, adj) = x.spanning_forest();
        let non_tree: Vec<usize> = (0..x.edges().len()).filter(|&e| !in_tree[e]).collect();
        let cycles = non_tree
            .iter()
            .map(|&e| {
                let (tail, head) = x.edges()[e];
                let (t, h) = (x.vertex_position(tail).unwrap(), x.vertex_position(head).unwrap());
                // e runs tail → head; close it with the tree path head → tail
                let mut c = ChainComplex::tree_path(&adj, h, t);
                c.add_term(e, q(1));
                c
            })
            .collect();
        let b2 = x.boundary2_matrix();
        let spanning: Vec<Vec<BigRational>> = (0..b2.cols())
            .map(|t| non_tree.iter().map(|&e| q(b2.get(e, t))).collect())
            .filter(|v: &Vec<BigRational>| v.iter().any(|c| !c.is_zero()))
            .collect();
        let reducer = QuotientReducer::new(non_tree.len(), &spanning);
        CycleBasis { non_tree, cycles, reducer }
    }

    fn raw_coordinates(&self, z: &Chain1) -> Vec<BigRational> {
        self.non_tree.iter().map(|&e| z.coeff(e)).collect()
    }
}

impl ChainComplex {
    /// Basis of `ker ∂1`: one fundamental cycle per edge outside the greedy
    /// spanning forest (edges scanned in index order).
    pub fn cycle_space_basis(&self) -> Vec<Chain1> {
        self.cycle_basis_cache().cycles.clone()
    }

    /// Orthogonal projection onto `ker ∂1` in exact arithmetic:
    /// `z = c − ∂1ᵀ y` where `∂1 ∂1ᵀ y = ∂1 c`.
    pub fn project_to_cycles(&self, c: &Chain1) -> Result<Chain1, ChainError> {
        self.check_chain(c)?;
        let d = self.boundary1_matrix();
        let dq = Matrix::from_fn(d.rows(), d.cols(), |r, col| q(d.get(r, col)));
        let laplacian = dq.mul(&dq.transpose()).expect("square shapes");
        let dense = c.to_dense(self.edges().len());
        let rhs = dq.mul_vec(&dense).expect("shape");
        let y = laplacian.solve(&rhs).expect("graph Laplacian system is consistent");
        let correction = dq.transpose().mul_vec(&y).expect("shape");
        let z: Vec<BigRational> = dense.iter().zip(&correction).map(|(a, b)| a - b).collect();
        Ok(Chain1::from_dense(&z))
    }

    /// Class of a cycle in `H1`; errors if `∂1 z ≠ 0`.
    pub fn homology_class(&self, z: &Chain1) -> Result<HomologyClass1, ChainError> {
        if !self.is_cycle(z)? {
            return Err(ChainError::ClosureViolation);
        }
        let basis = self.cycle_basis_cache();
        Ok(HomologyClass1 { coordinates: basis.reducer.quotient_coordinates(&basis.raw_coordinates(z)) })
    }

    pub fn homologous(&self, z1: &Chain1, z2: &Chain1) -> Result<bool, ChainError> {
        Ok(self.homology_class(z1)? == self.homology_class(z2)?)
    }

    /// Fundamental cycles whose coordinates survive the quotient; a basis of `H1`.
    pub fn homology_basis(&self) -> Vec<Chain1> {
        let basis = self.cycle_basis_cache();
        basis.reducer.free_coordinates().into_iter().map(|i| basis.cycles[i].clone()).collect()
    }

    /// Cycle with the given class coordinates, built from [`Self::homology_basis`].
    pub fn cycle_from_class(&self, class: &HomologyClass1) -> Chain1 {
        self.homology_basis()
            .iter()
            .zip(&class.coordinates)
            .fold(Chain1::zero(), |acc, (cyc, k)| acc.add(&cyc.scale(k)))
    }
}
