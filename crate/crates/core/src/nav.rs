//! Homing loops in a plane punctured by disk obstacles, classified by their
//! winding numbers around each obstacle.
//!
//! ```
//! use cyclos::nav::{winding_vector, Disk, Workspace, DEFAULT_TOL};
//!
//! let ws = Workspace::new(vec![Disk::new([0.0, 0.0], 0.5), Disk::new([3.0, 0.0], 0.5)], [1.0, 0.0]).unwrap();
//! let square = [[1.0, 0.0], [1.0, 1.0], [-1.0, 1.0], [-1.0, -1.0], [1.0, -1.0], [1.0, 0.0]];
//! assert_eq!(winding_vector(&square, &ws, DEFAULT_TOL).unwrap().0, vec![1, 0]);
//! ```

use std::f64::consts::TAU;
use std::ops::{Add, Neg};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Endpoint agreement in meters.
pub const DEFAULT_TOL: f64 = 1e-6;

/// Largest allowed distance of a turn count from an integer.
pub const MAX_RESIDUAL: f64 = 0.01;

pub type Point = [f64; 2];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NavError {
    #[error("obstacle {0} has a non-positive or non-finite radius")]
    BadRadius(usize),
    #[error("obstacles {0} and {1} overlap")]
    Overlap(usize, usize),
    #[error("base point lies inside obstacle {0}")]
    BaseInObstacle(usize),
    #[error("path is empty")]
    EmptyPath,
    #[error("closure violation: loop ends {gap} m from its start")]
    NotClosed { gap: f64 },
    #[error("segment {segment} enters obstacle {obstacle}")]
    Infeasible { segment: usize, obstacle: usize },
    #[error("turn count around obstacle {obstacle} is {residual} from an integer")]
    Sampling { obstacle: usize, residual: f64 },
    #[error("move {index} starts {gap} m from where the previous one ended")]
    Discontinuity { index: usize, gap: f64 },
    #[error("composition does not start and end at the base point (off by {gap} m)")]
    NotALoop { gap: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disk {
    pub center: Point,
    pub radius: f64,
}

impl Disk {
    pub fn new(center: Point, radius: f64) -> Self {
        Disk { center, radius }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Workspace {
    pub obstacles: Vec<Disk>,
    pub base: Point,
}

impl Workspace {
    pub fn new(obstacles: Vec<Disk>, base: Point) -> Result<Self, NavError> {
        let ws = Workspace { obstacles, base };
        ws.validate()?;
        Ok(ws)
    }

    pub fn validate(&self) -> Result<(), NavError> {
        for (i, d) in self.obstacles.iter().enumerate() {
            if !(d.radius.is_finite() && d.radius > 0.0 && d.center.iter().all(|c| c.is_finite())) {
                return Err(NavError::BadRadius(i));
            }
            if dist(d.center, self.base) <= d.radius {
                return Err(NavError::BaseInObstacle(i));
            }
            for (j, e) in self.obstacles.iter().enumerate().skip(i + 1) {
                if dist(d.center, e.center) <= d.radius + e.radius {
                    return Err(NavError::Overlap(i, j));
                }
            }
        }
        Ok(())
    }
}

/// A polyline primitive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Move {
    pub path: Vec<Point>,
}

impl Move {
    pub fn new(path: Vec<Point>) -> Self {
        Move { path }
    }

    pub fn start(&self) -> Option<Point> {
        self.path.first().copied()
    }

    pub fn end(&self) -> Option<Point> {
        self.path.last().copied()
    }

    pub fn reversed(&self) -> Move {
        Move { path: self.path.iter().rev().copied().collect() }
    }
}

/// Signed turn counts, one per obstacle.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WindingVector(pub Vec<i64>);

impl WindingVector {
    pub fn zero(m: usize) -> Self {
        WindingVector(vec![0; m])
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&k| k == 0)
    }
}

impl Add for &WindingVector {
    type Output = WindingVector;

    fn add(self, rhs: &WindingVector) -> WindingVector {
        assert_eq!(self.0.len(), rhs.0.len(), "winding vectors of different rank");
        WindingVector(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Neg for &WindingVector {
    type Output = WindingVector;

    fn neg(self) -> WindingVector {
        WindingVector(self.0.iter().map(|k| -k).collect())
    }
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Distance from `c` to the segment `a b`.
fn segment_distance(a: Point, b: Point, c: Point) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let u = if len2 > 0.0 { (((c[0] - a[0]) * dx + (c[1] - a[1]) * dy) / len2).clamp(0.0, 1.0) } else { 0.0 };
    dist([a[0] + u * dx, a[1] + u * dy], c)
}

/// Signed angle subtended at `c` by the segment `a b`.
fn subtended(a: Point, b: Point, c: Point) -> f64 {
    let (ux, uy) = (a[0] - c[0], a[1] - c[1]);
    let (vx, vy) = (b[0] - c[0], b[1] - c[1]);
    (ux * vy - uy * vx).atan2(ux * vx + uy * vy)
}

fn check_feasible(path: &[Point], ws: &Workspace) -> Result<(), NavError> {
    for (s, w) in path.windows(2).enumerate() {
        for (o, d) in ws.obstacles.iter().enumerate() {
            if segment_distance(w[0], w[1], d.center) < d.radius {
                return Err(NavError::Infeasible { segment: s, obstacle: o });
            }
        }
    }
    if let (1, Some(&p)) = (path.len(), path.first()) {
        if let Some(o) = ws.obstacles.iter().position(|d| dist(p, d.center) < d.radius) {
            return Err(NavError::Infeasible { segment: 0, obstacle: o });
        }
    }
    Ok(())
}

/// Turns made around each obstacle by a polyline, as real numbers.
pub fn turn_counts(path: &[Point], ws: &Workspace) -> Result<Vec<f64>, NavError> {
    check_feasible(path, ws)?;
    Ok(ws
        .obstacles
        .iter()
        .map(|d| path.windows(2).map(|w| subtended(w[0], w[1], d.center)).sum::<f64>() / TAU)
        .collect())
}

/// Winding vector of a closed polyline.
pub fn winding_vector(path: &[Point], ws: &Workspace, tol: f64) -> Result<WindingVector, NavError> {
    let (Some(&first), Some(&last)) = (path.first(), path.last()) else {
        return Err(NavError::EmptyPath);
    };
    let gap = dist(first, last);
    if gap > tol {
        return Err(NavError::NotClosed { gap });
    }
    // close exactly so a tolerated gap adds no partial turn
    let mut closed = path.to_vec();
    if gap > 0.0 {
        closed.push(first);
    }
    let turns = turn_counts(&closed, ws)?;
    turns
        .iter()
        .enumerate()
        .map(|(o, &t)| {
            let k = t.round();
            let residual = (t - k).abs();
            if residual >= MAX_RESIDUAL {
                Err(NavError::Sampling { obstacle: o, residual })
            } else {
                Ok(k as i64)
            }
        })
        .collect::<Result<_, _>>()
        .map(WindingVector)
}

/// Concatenates moves into a loop based at the workspace base point.
pub fn compose_moves(sequence: &[Move], ws: &Workspace, tol: f64) -> Result<Vec<Point>, NavError> {
    let mut out: Vec<Point> = Vec::new();
    for (i, m) in sequence.iter().enumerate() {
        let (Some(start), Some(_)) = (m.start(), m.end()) else {
            return Err(NavError::EmptyPath);
        };
        check_feasible(&m.path, ws)?;
        match out.last() {
            None => out.extend_from_slice(&m.path),
            Some(&prev) => {
                let gap = dist(prev, start);
                if gap > tol {
                    return Err(NavError::Discontinuity { index: i, gap });
                }
                out.extend_from_slice(&m.path[1..]);
            }
        }
    }
    let (Some(&first), Some(&last)) = (out.first(), out.last()) else {
        return Err(NavError::EmptyPath);
    };
    let gap = dist(first, ws.base).max(dist(last, ws.base));
    if gap > tol {
        return Err(NavError::NotALoop { gap });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderingOutcome {
    pub ordering: Vec<usize>,
    pub winding: Option<WindingVector>,
    /// Why the ordering was skipped, if it was.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderReport {
    /// At least one ordering closed, and all that closed agree.
    pub passed: bool,
    pub outcomes: Vec<OrderingOutcome>,
}

/// Composes the moves in each given ordering and compares the winding
/// vectors of those that form valid homing loops.
pub fn order_invariance_check(moves: &[Move], orderings: &[Vec<usize>], ws: &Workspace, tol: f64) -> OrderReport {
    let outcomes: Vec<OrderingOutcome> = orderings
        .iter()
        .map(|ord| {
            let result = ord
                .iter()
                .map(|&i| moves.get(i).cloned().ok_or(NavError::EmptyPath))
                .collect::<Result<Vec<_>, _>>()
                .and_then(|seq| compose_moves(&seq, ws, tol))
                .and_then(|path| winding_vector(&path, ws, tol));
            match result {
                Ok(w) => OrderingOutcome { ordering: ord.clone(), winding: Some(w), error: None },
                Err(e) => OrderingOutcome { ordering: ord.clone(), winding: None, error: Some(e.to_string()) },
            }
        })
        .collect();
    let mut valid = outcomes.iter().filter_map(|o| o.winding.as_ref());
    let passed = match valid.next() {
        Some(first) => valid.all(|w| w == first),
        None => false,
    };
    OrderReport { passed, outcomes }
}

/// Direct sum of a perception class and an action class.
pub fn product_class(perception: &WindingVector, action: &WindingVector) -> WindingVector {
    WindingVector(perception.0.iter().chain(&action.0).copied().collect())
}

/// Class of a loop in the product of two workspaces, from its two projections.
pub fn product_loop_class(
    path: &[(Point, Point)],
    perception: &Workspace,
    action: &Workspace,
    tol: f64,
) -> Result<WindingVector, NavError> {
    let p: Vec<Point> = path.iter().map(|s| s.0).collect();
    let a: Vec<Point> = path.iter().map(|s| s.1).collect();
    Ok(product_class(&winding_vector(&p, perception, tol)?, &winding_vector(&a, action, tol)?))
}
