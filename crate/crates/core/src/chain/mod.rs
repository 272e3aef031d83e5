//! Integer chain complexes in dimensions 0 to 2.
//!
//! A [`ChainComplex`] holds vertices, oriented (multi)edges and oriented
//! triangles together with the boundary matrices `∂1: C1 → C0` and
//! `∂2: C2 → C1`. Chains are sparse maps with exact rational coefficients,
//! which lets projections onto the cycle space stay exact while integer
//! chains remain integers.
//!
//! ```
//! use cyclos::chain::{Chain1, ChainComplex};
//!
//! let hollow = ChainComplex::new(vec![1, 2, 3], vec![(1, 2), (2, 3), (3, 1)], vec![]).unwrap();
//! let loop_chain = Chain1::from_ints([(0, 1), (1, 1), (2, 1)]);
//! assert!(hollow.boundary1(&loop_chain).unwrap().is_zero());
//! assert!(!hollow.homology_class(&loop_chain).unwrap().is_zero());
//! assert_eq!(hollow.betti(1).unwrap(), 1);
//! ```

mod chains;
mod complex;
mod homology;

pub use chains::{Chain0, Chain1, ChainFile};
pub use complex::{ChainComplex, ComplexFile, IntMatrix, TriangleSpec, VertexId};
pub use homology::HomologyClass1;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChainError {
    #[error("duplicate vertex id {0}")]
    DuplicateVertex(VertexId),
    #[error("edge {edge} references unknown vertex {vertex}")]
    UnknownVertex { edge: usize, vertex: VertexId },
    #[error("triangle {triangle}: no edge joins {a} and {b}")]
    UnresolvedTriangle { triangle: usize, a: VertexId, b: VertexId },
    #[error("triangle {triangle}: edge {edge} does not join the expected vertices")]
    MismatchedTriangleEdge { triangle: usize, edge: usize },
    #[error("malformed chain: edge index {index} out of range (complex has {len} edges)")]
    EdgeIndexOutOfRange { index: usize, len: usize },
    #[error("closure violation: chain has nonzero boundary")]
    ClosureViolation,
    #[error("unsupported homology dimension {0} (only 0 and 1)")]
    UnsupportedDimension(usize),
    #[error("boundary matrix has shape {got:?}, expected {expected:?}")]
    BoundaryShape { got: (usize, usize), expected: (usize, usize) },
    #[error("invalid coefficient {0:?}")]
    BadCoefficient(String),
}
