//! Validated finite probability distributions.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Normalization slack accepted at construction.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;

/// A probability distribution over `0..len()`.
///
/// Probabilities are stored directly (not as logits) and validated once at
/// construction: entries are finite and non-negative, and the row sums to
/// one within [`NORMALIZATION_TOLERANCE`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("empty support".into()));
        }
        for (i, &p) in probs.iter().enumerate() {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::InvalidDistribution(format!(
                    "entry {i} is {p}, expected a finite non-negative probability"
                )));
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "row sums to {sum}, deviates from 1 by more than {NORMALIZATION_TOLERANCE}"
            )));
        }
        Ok(Self { probs })
    }

    /// All mass on `index`.
    pub fn point_mass(len: usize, index: usize) -> Result<Self> {
        if index >= len {
            return Err(Error::InvalidDistribution(format!(
                "point mass index {index} out of range for support {len}"
            )));
        }
        let mut probs = vec![0.0; len];
        probs[index] = 1.0;
        Self::new(probs)
    }

    pub fn uniform(len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::InvalidDistribution("empty support".into()));
        }
        Self::new(vec![1.0 / len as f64; len])
    }

    /// Flat Dirichlet draw: independent Exp(1) variates, normalized.
    pub fn random_flat_dirichlet<R: Rng>(rng: &mut R, len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::InvalidDistribution("empty support".into()));
        }
        let mut raw: Vec<f64> = (0..len)
            .map(|_| {
                let u: f64 = rng.random();
                // Guard the open interval so ln() stays finite.
                -(1.0 - u).max(f64::MIN_POSITIVE).ln()
            })
            .collect();
        let sum: f64 = raw.iter().sum();
        for p in &mut raw {
            *p /= sum;
        }
        Self::new(raw)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn prob(&self, index: usize) -> f64 {
        self.probs[index]
    }

    /// Inverse-CDF sample.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, &p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        self.probs.len() - 1
    }

    /// Total variation distance, `0.5 * sum |p - q|`.
    ///
    /// Symmetric, zero iff equal, at most one. Errors when supports differ.
    pub fn tv_distance(&self, other: &Self) -> Result<f64> {
        if self.len() != other.len() {
            return Err(Error::SupportMismatch(format!(
                "tv_distance over supports of size {} and {}",
                self.len(),
                other.len()
            )));
        }
        let sum: f64 = self
            .probs
            .iter()
            .zip(other.probs.iter())
            .map(|(p, q)| (p - q).abs())
            .sum();
        Ok(0.5 * sum)
    }
}

impl TryFrom<Vec<f64>> for Distribution {
    type Error = Error;

    fn try_from(probs: Vec<f64>) -> Result<Self> {
        Self::new(probs)
    }
}

impl From<Distribution> for Vec<f64> {
    fn from(d: Distribution) -> Self {
        d.probs
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use proptest::prelude::*;

    #[test]
    fn rejects_negative_and_unnormalized() {
        assert!(Distribution::new(vec![0.5, -0.5, 1.0]).is_err());
        assert!(Distribution::new(vec![0.5, 0.6]).is_err());
        assert!(Distribution::new(vec![]).is_err());
        assert!(Distribution::new(vec![f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn tv_hand_cases() {
        let p = Distribution::new(vec![0.7, 0.3]).unwrap();
        let q = Distribution::new(vec![0.4, 0.6]).unwrap();
        assert!((p.tv_distance(&q).unwrap() - 0.3).abs() < 1e-15);
        assert_eq!(p.tv_distance(&p).unwrap(), 0.0);

        let a = Distribution::point_mass(3, 0).unwrap();
        let b = Distribution::point_mass(3, 2).unwrap();
        assert_eq!(a.tv_distance(&b).unwrap(), 1.0);

        let c = Distribution::new(vec![1.0]).unwrap();
        assert!(p.tv_distance(&c).is_err());
    }

    #[test]
    fn sampling_is_deterministic_under_seed() {
        let d = Distribution::new(vec![0.2, 0.5, 0.3]).unwrap();
        let draw = |seed| {
            let mut rng = rng_from_seed(seed);
            (0..32).map(|_| d.sample(&mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(9), draw(9));
        assert_ne!(draw(9), draw(10));
    }

    proptest! {
        #[test]
        fn dirichlet_rows_are_valid(seed in any::<u64>(), len in 1usize..12) {
            let mut rng = rng_from_seed(seed);
            let d = Distribution::random_flat_dirichlet(&mut rng, len).unwrap();
            prop_assert_eq!(d.len(), len);
        }

        #[test]
        fn tv_is_symmetric_and_bounded(seed in any::<u64>(), len in 1usize..12) {
            let mut rng = rng_from_seed(seed);
            let p = Distribution::random_flat_dirichlet(&mut rng, len).unwrap();
            let q = Distribution::random_flat_dirichlet(&mut rng, len).unwrap();
            let pq = p.tv_distance(&q).unwrap();
            let qp = q.tv_distance(&p).unwrap();
            prop_assert!((pq - qp).abs() < 1e-15);
            prop_assert!((0.0..=1.0).contains(&pq));
        }
    }
}
