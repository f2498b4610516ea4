//! Finite spaces, probability vectors on them and the two divergences the
//! rest of the crate is built on.
//!
//! All logarithms are natural. `0 · ln 0` is taken as zero, and a KL term
//! with `p_i > 0` and `q_i = 0` yields an explicit infinite
//! [`DivergenceValue`], never a NaN.

use std::collections::HashSet;
use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Entry-wise tolerance for treating two probability tables as equal.
pub const MATRIX_TOLERANCE: f64 = 1e-12;

/// An ordered set of distinct names. Indices `0..size` are the identity of
/// the elements; names are only for humans and config files.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FiniteSpace {
    names: Vec<String>,
}

impl FiniteSpace {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Self> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.is_empty() {
            return Err(Error::EmptyGrid("finite space needs at least one element".into()));
        }
        let mut seen = HashSet::with_capacity(names.len());
        for n in &names {
            if !seen.insert(n.as_str()) {
                return Err(Error::DuplicateName(n.clone()));
            }
        }
        Ok(Self { names })
    }

    /// `prefix0, prefix1, ...`
    pub fn indexed(prefix: &str, size: usize) -> Result<Self> {
        Self::new((0..size).map(|k| format!("{prefix}{k}")))
    }

    pub fn size(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, index: usize) -> &str {
        &self.names[index]
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownName(name.to_string()))
    }
}

/// A probability vector over a finite space. Entries are non-negative and
/// were divided by their sum at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    /// Normalizes `weights`. Rejects negative or non-finite entries and
    /// vectors without mass.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::ZeroMass);
        }
        for (index, &w) in weights.iter().enumerate() {
            if w < 0.0 || !w.is_finite() {
                return Err(Error::NegativeWeight { index, value: w });
            }
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::ZeroMass);
        }
        Ok(Self {
            probs: weights.iter().map(|w| w / total).collect(),
        })
    }

    /// Point mass on `index`.
    pub fn point_mass(size: usize, index: usize) -> Self {
        let mut probs = vec![0.0; size];
        probs[index] = 1.0;
        Self { probs }
    }

    pub fn uniform(size: usize) -> Self {
        Self {
            probs: vec![1.0 / size as f64; size],
        }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, index: usize) -> f64 {
        self.probs[index]
    }

    /// Mass of the outcomes flagged in `mask`.
    pub fn mass_of(&self, mask: &[bool]) -> f64 {
        self.probs
            .iter()
            .zip(mask)
            .filter(|(_, &m)| m)
            .map(|(p, _)| p)
            .sum()
    }

    pub fn dot(&self, u: &[f64]) -> f64 {
        self.probs.iter().zip(u).map(|(p, v)| p * v).sum()
    }

    /// Smallest strictly positive entry.
    pub fn positive_floor(&self) -> f64 {
        self.probs
            .iter()
            .copied()
            .filter(|&p| p > 0.0)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs_diff(&self, other: &Distribution) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Shannon entropy in nats.
    pub fn entropy(&self) -> f64 {
        -self
            .probs
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| p * p.ln())
            .sum::<f64>()
    }

    /// Inverse-CDF lookup: the first index whose cumulative mass exceeds `u`.
    /// `u` is expected in `[0, 1)`.
    pub fn quantile(&self, u: f64) -> usize {
        let mut acc = 0.0;
        let mut last_positive = 0;
        for (k, &p) in self.probs.iter().enumerate() {
            if p <= 0.0 {
                continue;
            }
            acc += p;
            last_positive = k;
            if u < acc {
                return k;
            }
        }
        // u landed in the rounding slack above the final cumulative sum
        last_positive
    }
}

/// `make_distribution` with a length check against a space.
pub fn make_distribution(space: &FiniteSpace, weights: &[f64]) -> Result<Distribution> {
    if weights.len() != space.size() {
        return Err(Error::LengthMismatch {
            expected: space.size(),
            got: weights.len(),
        });
    }
    Distribution::from_weights(weights)
}

/// A divergence in nats; either a finite non-negative number or `+inf`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct DivergenceValue(f64);

impl DivergenceValue {
    pub const INFINITE: DivergenceValue = DivergenceValue(f64::INFINITY);
    pub const ZERO: DivergenceValue = DivergenceValue(0.0);

    pub fn finite(value: f64) -> Self {
        debug_assert!(value.is_finite() && value >= 0.0);
        DivergenceValue(value)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }
}

impl fmt::Display for DivergenceValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl Serialize for DivergenceValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        serialize_extended(&self.0, s)
    }
}

/// Serializes a real that may be `±inf` as the strings `"inf"` / `"-inf"`
/// instead of JSON `null`.
pub fn serialize_extended<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_infinite() {
        s.serialize_str(if *v > 0.0 { "inf" } else { "-inf" })
    } else {
        s.serialize_f64(*v)
    }
}

/// Text form used in CSV cells.
pub fn format_extended(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v}")
    }
}

fn check_same(p: &Distribution, q: &Distribution) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::SpaceMismatch(format!(
            "distributions of size {} and {}",
            p.len(),
            q.len()
        )));
    }
    Ok(())
}

/// `KL(p ‖ q)` in nats.
pub fn kl(p: &Distribution, q: &Distribution) -> Result<DivergenceValue> {
    check_same(p, q)?;
    let mut total = 0.0;
    for (&pi, &qi) in p.probs.iter().zip(&q.probs) {
        if pi <= 0.0 {
            continue;
        }
        if qi <= 0.0 {
            return Ok(DivergenceValue::INFINITE);
        }
        total += pi * (pi / qi).ln();
    }
    // rounding can leave a tiny negative residue for p ≈ q
    Ok(DivergenceValue::finite(total.max(0.0)))
}

/// Half the L1 distance.
pub fn total_variation(p: &Distribution, q: &Distribution) -> Result<f64> {
    check_same(p, q)?;
    let l1: f64 = p
        .probs
        .iter()
        .zip(&q.probs)
        .map(|(a, b)| (a - b).abs())
        .sum();
    Ok((0.5 * l1).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(w: &[f64]) -> Distribution {
        Distribution::from_weights(w).unwrap()
    }

    #[test]
    fn make_distribution_examples() {
        let two = FiniteSpace::indexed("o", 2).unwrap();
        assert_eq!(make_distribution(&two, &[0.5, 0.5]).unwrap().probs(), &[0.5, 0.5]);
        assert_eq!(make_distribution(&two, &[0.1, 0.9]).unwrap().probs(), &[0.1, 0.9]);
        assert!(matches!(
            make_distribution(&two, &[1.0, -1.0]),
            Err(Error::NegativeWeight { index: 1, .. })
        ));
        assert_eq!(make_distribution(&two, &[0.0, 0.0]), Err(Error::ZeroMass));
        assert!(matches!(
            make_distribution(&two, &[1.0]),
            Err(Error::LengthMismatch { expected: 2, got: 1 })
        ));
        assert_eq!(d(&[1.0, 3.0]).probs(), &[0.25, 0.75]);
    }

    #[test]
    fn space_rejects_duplicates() {
        assert!(matches!(FiniteSpace::new(["a", "b", "a"]), Err(Error::DuplicateName(_))));
        let s = FiniteSpace::new(["a", "b"]).unwrap();
        assert_eq!(s.index_of("b").unwrap(), 1);
        assert!(s.index_of("c").is_err());
    }

    #[test]
    fn kl_examples() {
        let p = d(&[0.1, 0.9]);
        assert_eq!(kl(&p, &p).unwrap().value(), 0.0);
        let v = kl(&p, &d(&[0.9, 0.1])).unwrap().value();
        assert!((v - 0.8 * 9f64.ln()).abs() < 1e-12);
        assert!((v - 1.757780).abs() < 1e-6);
        assert!(kl(&d(&[1.0, 0.0]), &d(&[0.0, 1.0])).unwrap().is_infinite());
        assert!(kl(&p, &d(&[1.0, 1.0, 1.0])).is_err());
    }

    #[test]
    fn tv_examples() {
        let p = d(&[0.3, 0.7]);
        assert_eq!(total_variation(&p, &p).unwrap(), 0.0);
        assert_eq!(total_variation(&d(&[1.0, 0.0]), &d(&[0.0, 1.0])).unwrap(), 1.0);
        let v = total_variation(&d(&[0.1, 0.9]), &d(&[0.5, 0.5])).unwrap();
        assert!((v - 0.4).abs() < 1e-12);
    }

    #[test]
    fn quantile_skips_zero_mass() {
        let p = d(&[0.0, 0.5, 0.0, 0.5]);
        assert_eq!(p.quantile(0.0), 1);
        assert_eq!(p.quantile(0.49), 1);
        assert_eq!(p.quantile(0.5), 3);
        assert_eq!(p.quantile(0.999_999_999_999), 3);
    }

    #[test]
    fn entropy_of_example_row() {
        let h = d(&[0.1, 0.9]).entropy();
        assert!((h - 0.325083).abs() < 1e-6);
    }
}
