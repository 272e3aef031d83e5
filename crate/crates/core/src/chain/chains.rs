use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use super::{ChainError, VertexId};
use crate::linalg::{format_rational, parse_rational, q};

/// Sparse 1-chain: edge index → coefficient. Zero entries are never stored.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Chain1 {
    coeffs: BTreeMap<usize, BigRational>,
}

/// Sparse 0-chain keyed by vertex id.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Chain0 {
    coeffs: BTreeMap<VertexId, BigRational>,
}

/// JSON form of a chain: `{"edge_index": "p/q"}`.
pub type ChainFile = BTreeMap<String, String>;

impl Chain1 {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, BigRational)>) -> Self {
        let mut c = Self::zero();
        for (i, v) in pairs {
            c.add_term(i, v);
        }
        c
    }

    pub fn from_ints(pairs: impl IntoIterator<Item = (usize, i64)>) -> Self {
        Self::from_pairs(pairs.into_iter().map(|(i, v)| (i, q(v))))
    }

    /// Dense vector of length `len` (indices beyond `len` are dropped).
    pub fn to_dense(&self, len: usize) -> Vec<BigRational> {
        let mut v = vec![BigRational::zero(); len];
        for (&i, c) in &self.coeffs {
            if i < len {
                v[i] = c.clone();
            }
        }
        v
    }

    pub fn from_dense(v: &[BigRational]) -> Self {
        Self::from_pairs(v.iter().cloned().enumerate())
    }

    pub fn add_term(&mut self, index: usize, value: BigRational) {
        let entry = self.coeffs.entry(index).or_insert_with(BigRational::zero);
        *entry += value;
        if entry.is_zero() {
            self.coeffs.remove(&index);
        }
    }

    pub fn coeff(&self, index: usize) -> BigRational {
        self.coeffs.get(&index).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &BigRational)> {
        self.coeffs.iter().map(|(&i, v)| (i, v))
    }

    pub fn support(&self) -> Vec<usize> {
        self.coeffs.keys().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn max_index(&self) -> Option<usize> {
        self.coeffs.keys().next_back().copied()
    }

    pub fn is_integral(&self) -> bool {
        self.coeffs.values().all(|v| v.is_integer())
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (i, v) in other.iter() {
            out.add_term(i, v.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        Chain1 { coeffs: self.coeffs.iter().map(|(&i, v)| (i, -v)).collect() }
    }

    pub fn scale(&self, s: &BigRational) -> Self {
        Self::from_pairs(self.coeffs.iter().map(|(&i, v)| (i, v * s)))
    }

    /// Standard inner product on edge space.
    pub fn dot(&self, other: &Self) -> BigRational {
        self.coeffs
            .iter()
            .filter_map(|(i, a)| other.coeffs.get(i).map(|b| a * b))
            .fold(BigRational::zero(), |acc, x| acc + x)
    }

    /// Sum of absolute coefficients.
    pub fn l1_norm(&self) -> BigRational {
        self.coeffs.values().fold(BigRational::zero(), |acc, v| acc + v.abs())
    }

    pub fn to_file(&self) -> ChainFile {
        self.coeffs.iter().map(|(i, v)| (i.to_string(), format_rational(v))).collect()
    }

    pub fn from_file(file: &ChainFile) -> Result<Self, ChainError> {
        let mut c = Self::zero();
        for (k, v) in file {
            let idx: usize = k.trim().parse().map_err(|_| ChainError::BadCoefficient(k.clone()))?;
            let coeff = parse_rational(v).ok_or_else(|| ChainError::BadCoefficient(v.clone()))?;
            c.add_term(idx, coeff);
        }
        Ok(c)
    }
}

impl Chain0 {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn add_term(&mut self, v: VertexId, value: BigRational) {
        let entry = self.coeffs.entry(v).or_insert_with(BigRational::zero);
        *entry += value;
        if entry.is_zero() {
            self.coeffs.remove(&v);
        }
    }

    pub fn coeff(&self, v: VertexId) -> BigRational {
        self.coeffs.get(&v).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (VertexId, &BigRational)> {
        self.coeffs.iter().map(|(&i, v)| (i, v))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn to_file(&self) -> BTreeMap<String, String> {
        self.coeffs.iter().map(|(i, v)| (i.to_string(), format_rational(v))).collect()
    }
}

impl Serialize for Chain1 {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_file().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Chain1 {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let file = ChainFile::deserialize(d)?;
        Chain1::from_file(&file).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::qr;

    #[test]
    fn canonical_form_drops_zeros() {
        let mut c = Chain1::from_ints([(0, 1), (3, 2)]);
        c.add_term(0, q(-1));
        assert_eq!(c.support(), vec![3]);
        assert!(c.sub(&c).is_zero());
    }

    #[test]
    fn json_uses_rational_strings() {
        let c = Chain1::from_pairs([(2, qr(1, 3)), (0, q(-2))]);
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(s, r#"{"0":"-2","2":"1/3"}"#);
        let back: Chain1 = serde_json::from_str(&s).unwrap();
        assert_eq!(back, c);
        assert!(serde_json::from_str::<Chain1>(r#"{"x":"1"}"#).is_err());
    }
}
