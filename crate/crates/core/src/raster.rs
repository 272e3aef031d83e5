//! Dense row-major scalar grids with CSV and PGM output and peak finding.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    /// Row-major values, `values[row * width + col]`.
    pub values: Vec<f64>,
}

impl Raster {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), width * height, "raster size mismatch");
        Raster { width, height, values }
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Raster { width, height, values: vec![0.0; width * height] }
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Index of the largest value; ties go to the lowest index.
    pub fn argmax(&self) -> Option<(usize, usize)> {
        let mut best: Option<(usize, f64)> = None;
        for (i, &v) in self.values.iter().enumerate() {
            if best.map_or(true, |(_, b)| v > b) {
                best = Some((i, v));
            }
        }
        best.map(|(i, _)| (i / self.width, i % self.width))
    }

    /// Cells whose value is at least `threshold`.
    pub fn mask(&self, threshold: f64) -> Vec<bool> {
        self.values.iter().map(|&v| v >= threshold).collect()
    }

    /// Cells at or above `threshold` that are not exceeded by any of their
    /// eight neighbours, as `(row, col)`.
    pub fn local_maxima(&self, threshold: f64) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for r in 0..self.height {
            for c in 0..self.width {
                let v = self.get(r, c);
                if v < threshold {
                    continue;
                }
                let top = self.neighbours8(r, c).all(|(nr, nc)| self.get(nr, nc) <= v);
                if top {
                    out.push((r, c));
                }
            }
        }
        out
    }

    pub(crate) fn neighbours8(&self, r: usize, c: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        let (h, w) = (self.height as isize, self.width as isize);
        (-1isize..=1)
            .flat_map(move |dr| (-1isize..=1).map(move |dc| (dr, dc)))
            .filter(|&(dr, dc)| dr != 0 || dc != 0)
            .map(move |(dr, dc)| (r as isize + dr, c as isize + dc))
            .filter(move |&(nr, nc)| nr >= 0 && nc >= 0 && nr < h && nc < w)
            .map(|(nr, nc)| (nr as usize, nc as usize))
    }

    /// One line per row, comma-separated, shortest round-trip formatting.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in self.values.chunks(self.width.max(1)) {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, "{}", line.join(","));
        }
        out
    }

    /// Binary 8-bit PGM, linearly scaled from the minimum (black) to the
    /// maximum (white). A constant raster is all black.
    pub fn to_pgm(&self) -> Vec<u8> {
        let lo = self.values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.max();
        let span = hi - lo;
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.values.iter().map(|&v| {
            if span > 0.0 && span.is_finite() {
                ((v - lo) / span * 255.0).round().clamp(0.0, 255.0) as u8
            } else {
                0
            }
        }));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn peaks_and_output() {
        let r = Raster::new(3, 2, vec![0.0, 2.0, 1.0, 0.5, 0.0, 3.0]);
        assert_eq!(r.argmax(), Some((1, 2)));
        assert_eq!(r.local_maxima(0.0), vec![(1, 2)]);
        assert_eq!(r.to_csv(), "0,2,1\n0.5,0,3\n");
        let pgm = r.to_pgm();
        assert!(pgm.starts_with(b"P5\n3 2\n255\n"));
        assert_eq!(&pgm[pgm.len() - 6..], &[0, 170, 85, 43, 0, 255]);
        assert_eq!(Raster::zeros(2, 2).to_pgm()[11..], [0, 0, 0, 0]);
    }

    #[test]
    fn plateau_maxima_all_reported() {
        let r = Raster::new(2, 1, vec![1.0, 1.0]);
        assert_eq!(r.local_maxima(0.5), vec![(0, 0), (0, 1)]);
    }
}
