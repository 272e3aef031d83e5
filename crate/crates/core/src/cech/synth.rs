//! Random covers and random natural systems over them.

use std::collections::BTreeSet;

use num_traits::ToPrimitive;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{
    build_nerve, cycle_values, pairing_cocycle_unchecked, CechError, CechSystem, Cell, CellMap, CosheafData,
    Cover, Form, Nerve, Pairing, SheafData, Stalk,
};
use crate::linalg::{q, Matrix};

/// Cover of `points` ids by `opens` random subsets of 2 to 5 points, patched
/// so every point is covered.
pub fn random_cover<R: Rng>(rng: &mut R, points: usize, opens: usize) -> Cover {
    let ground: Vec<u32> = (0..points as u32).collect();
    let mut sets: Vec<BTreeSet<u32>> = (0..opens)
        .map(|_| {
            let size = rng.gen_range(2..=5.min(points.max(2)));
            ground.choose_multiple(rng, size.min(points)).copied().collect()
        })
        .collect();
    for &p in &ground {
        if !sets.iter().any(|s| s.contains(&p)) {
            let k = rng.gen_range(0..opens);
            sets[k].insert(p);
        }
    }
    Cover::new(ground, sets.into_iter().map(|s| s.into_iter().collect()).collect()).expect("patched cover")
}

fn random_invertible<R: Rng>(rng: &mut R, d: usize) -> Matrix<f64> {
    Matrix::from_fn(d, d, |r, c| if r == c { 1.0 } else { 0.0 } + rng.gen_range(-0.3..0.3))
}

fn inverse(m: &Matrix<f64>) -> Matrix<f64> {
    let n = m.rows();
    let cols: Vec<Vec<f64>> = (0..n)
        .map(|c| {
            let e: Vec<f64> = (0..n).map(|r| if r == c { 1.0 } else { 0.0 }).collect();
            m.solve(&e).expect("diagonally dominant matrix is invertible")
        })
        .collect();
    Matrix::from_fn(n, n, |r, c| cols[c][r])
}

fn cells_of(nerve: &Nerve) -> Vec<Cell> {
    let mut cells: Vec<Cell> = (0..nerve.vertex_count).map(|i| vec![i]).collect();
    cells.extend(nerve.edges.iter().map(|e| e.to_vec()));
    cells.extend(nerve.triangles.iter().map(|t| t.to_vec()));
    cells
}

/// Random natural sheaf–cosheaf–pairing system with all stalks `R^dim`.
///
/// Each cell `σ` gets an invertible `A_σ` and form `P_σ`. Restrictions are
/// `ρ_{σ←τ} = A_σ A_τ⁻¹`, so they compose, and sections `s_i = A_i x` share
/// one hidden `x`, so they agree on overlaps. Extensions are the adjoints
/// `ι_{σ→τ} = P_τ⁻¹ ρ_{σ←τ}ᵀ P_σ`, which makes the pairing natural.
/// Co-sections are arbitrary.
pub fn random_natural_system<R: Rng>(rng: &mut R, cover: &Cover, dim: usize) -> CechSystem {
    let nerve = build_nerve(cover);
    let cells = cells_of(&nerve);
    let a: Vec<Matrix<f64>> = cells.iter().map(|_| random_invertible(rng, dim)).collect();
    let p: Vec<Matrix<f64>> = cells.iter().map(|_| random_invertible(rng, dim)).collect();
    let a_inv: Vec<Matrix<f64>> = a.iter().map(inverse).collect();
    let p_inv: Vec<Matrix<f64>> = p.iter().map(inverse).collect();
    let x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut restrictions = Vec::new();
    let mut extensions = Vec::new();
    for (t, large) in cells.iter().enumerate() {
        for (s, small) in cells.iter().enumerate() {
            if small.len() <= large.len() || !large.iter().all(|i| small.contains(i)) {
                continue;
            }
            let rho = a[s].mul(&a_inv[t]).expect("square");
            let iota = p_inv[t].mul(&rho.transpose()).and_then(|m| m.mul(&p[s])).expect("square");
            restrictions.push(CellMap { from: large.clone(), to: small.clone(), matrix: rho.to_rows() });
            extensions.push(CellMap { from: small.clone(), to: large.clone(), matrix: iota.to_rows() });
        }
    }
    let stalks: Vec<Stalk> = cells.iter().map(|c| Stalk { cell: c.clone(), dim }).collect();
    let sections = (0..cover.len()).map(|i| a[i].mul_vec(&x).expect("shape")).collect();
    let cosections = (0..cover.len()).map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let forms = cells.iter().zip(&p).map(|(c, m)| Form { cell: c.clone(), matrix: m.to_rows() }).collect();
    CechSystem {
        cover: cover.clone(),
        sheaf: SheafData { stalks: stalks.clone(), restrictions, sections },
        cosheaf: CosheafData { costalks: stalks, extensions, cosections },
        pairing: Pairing { forms },
    }
}

/// Random closed edge cochain on the nerve with values on the `1/8` grid.
pub fn random_closed_cochain<R: Rng>(rng: &mut R, nerve: &Nerve) -> Vec<f64> {
    let b2 = nerve.complex.boundary2_matrix();
    let edges = nerve.edges.len();
    // closed cochains form the null space of ∂2ᵀ
    let basis = if b2.cols() == 0 {
        (0..edges).map(|e| (0..edges).map(|k| q(i64::from(k == e))).collect()).collect()
    } else {
        Matrix::from_fn(b2.cols(), edges, |t, e| q(b2.get(e, t))).nullspace()
    };
    let mut omega = vec![q(0); edges];
    for v in &basis {
        let k = q(rng.gen_range(-4..=4));
        for (o, x) in omega.iter_mut().zip(v) {
            *o += &k * x;
        }
    }
    omega.iter().map(|w| w.to_f64().unwrap_or(0.0) / 8.0).collect()
}

/// Copy of `sys` with every non-identity restriction and extension entry
/// shifted by a uniform draw from `[-magnitude, magnitude]`.
pub fn perturb_maps<R: Rng>(rng: &mut R, sys: &CechSystem, magnitude: f64) -> CechSystem {
    let mut out = sys.clone();
    let mut jiggle = |maps: &mut Vec<CellMap>| {
        for m in maps.iter_mut().filter(|m| m.from != m.to) {
            for x in m.matrix.iter_mut().flatten() {
                *x += rng.gen_range(-magnitude..=magnitude);
            }
        }
    };
    jiggle(&mut out.sheaf.restrictions);
    jiggle(&mut out.cosheaf.extensions);
    out
}

/// Worst change seen over several perturbations of one magnitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub magnitude: f64,
    /// Largest `|δω|` on any triangle.
    pub max_coboundary: f64,
    /// Largest change of `ω` on any `H1` basis cycle.
    pub max_shift: f64,
}

/// Measures how far `ω` and its cycle values move when the maps are
/// perturbed; no bound is asserted.
///
/// Perturbed systems usually break naturality, so `ω` is recomputed
/// without that check. Systems whose overlaps stop admitting a preimage are
/// reported as an error.
pub fn class_drift<R: Rng>(
    rng: &mut R,
    sys: &CechSystem,
    magnitudes: &[f64],
    trials: usize,
) -> Result<Vec<DriftReport>, CechError> {
    let nerve = build_nerve(&sys.cover);
    let base = pairing_cocycle_unchecked(&sys.sheaf, &sys.cosheaf, &sys.pairing, &nerve)?;
    let base_values = cycle_values(&base.omega, &nerve)?;
    magnitudes
        .iter()
        .map(|&magnitude| {
            let mut report = DriftReport { magnitude, max_coboundary: 0.0, max_shift: 0.0 };
            for _ in 0..trials {
                let p = perturb_maps(rng, sys, magnitude);
                let c = pairing_cocycle_unchecked(&p.sheaf, &p.cosheaf, &p.pairing, &nerve)?;
                let values = cycle_values(&c.omega, &nerve)?;
                report.max_coboundary = report.max_coboundary.max(c.max_coboundary());
                let shift = values.iter().zip(&base_values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                report.max_shift = report.max_shift.max(shift);
            }
            Ok(report)
        })
        .collect()
}
