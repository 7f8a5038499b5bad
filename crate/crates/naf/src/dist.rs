//! Probability vectors over a fixed vocabulary.

use crate::error::{NafError, Result};
use crate::rng::RandomSource;
use crate::vocab::TokenId;

/// Absolute tolerance on the sum of a probability vector.
pub const SUM_TOLERANCE: f64 = 1e-9;

/// A probability distribution over token ids `0..K`.
///
/// Entries are non-negative, finite, and sum to one within [`SUM_TOLERANCE`].
#[derive(Debug, Clone, PartialEq)]
pub struct TokenDistribution {
    probs: Vec<f64>,
}

impl TokenDistribution {
    /// Validates and wraps an explicit probability vector.
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(NafError::InvalidDistribution("empty vector".into()));
        }
        for (i, &p) in probs.iter().enumerate() {
            if !p.is_finite() || p < 0.0 {
                return Err(NafError::InvalidDistribution(format!(
                    "entry {i} is {p}, expected a finite non-negative value"
                )));
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(NafError::InvalidDistribution(format!(
                "entries sum to {sum}, expected 1 within {SUM_TOLERANCE:e}"
            )));
        }
        Ok(TokenDistribution { probs })
    }

    /// Normalizes non-negative weights into a distribution.
    ///
    /// Used wherever a partition function appears: the output is the input
    /// divided by its sum.
    pub fn normalize(weights: &[f64]) -> Result<Self> {
        if weights.is_empty() {
            return Err(NafError::InvalidDistribution("empty vector".into()));
        }
        for (i, &w) in weights.iter().enumerate() {
            if !w.is_finite() || w < 0.0 {
                return Err(NafError::InvalidDistribution(format!(
                    "weight {i} is {w}, expected a finite non-negative value"
                )));
            }
        }
        let sum: f64 = weights.iter().sum();
        if sum <= 0.0 {
            return Err(NafError::AllZeroWeights);
        }
        Ok(TokenDistribution {
            probs: weights.iter().map(|w| w / sum).collect(),
        })
    }

    /// Uniform distribution over `k` tokens.
    pub fn uniform(k: usize) -> Self {
        assert!(k > 0, "uniform distribution needs at least one token");
        TokenDistribution {
            probs: vec![1.0 / k as f64; k],
        }
    }

    /// Point mass on one token.
    pub fn delta(k: usize, index: usize) -> Self {
        assert!(index < k, "point-mass index out of range");
        let mut probs = vec![0.0; k];
        probs[index] = 1.0;
        TokenDistribution { probs }
    }

    /// Number of tokens (K).
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Probability of one token.
    pub fn prob(&self, id: TokenId) -> f64 {
        self.probs[id.index()]
    }

    /// Natural-log probability; `-inf` for zero-probability tokens.
    pub fn log_prob(&self, id: TokenId) -> f64 {
        let p = self.probs[id.index()];
        if p > 0.0 {
            p.ln()
        } else {
            f64::NEG_INFINITY
        }
    }

    /// Token ids with positive probability.
    pub fn support(&self) -> impl Iterator<Item = TokenId> + '_ {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(i, _)| TokenId(i as u32))
    }

    /// Draws one token; consumes exactly one uniform draw.
    ///
    /// Inverse-CDF sampling over the cumulative sum in id order; the last
    /// positive-probability token absorbs any floating-point remainder.
    pub fn sample(&self, r: &mut RandomSource) -> TokenId {
        let u = r.next_uniform();
        let mut cum = 0.0;
        let mut last_positive = 0usize;
        for (i, &p) in self.probs.iter().enumerate() {
            if p > 0.0 {
                last_positive = i;
                cum += p;
                if u < cum {
                    return TokenId(i as u32);
                }
            }
        }
        TokenId(last_positive as u32)
    }

    /// Most probable token; ties resolve to the smallest id.
    pub fn argmax(&self) -> TokenId {
        let mut best = 0usize;
        for (i, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = i;
            }
        }
        TokenId(best as u32)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_symmetric_weights() {
        let d = TokenDistribution::normalize(&[2.0, 2.0]).unwrap();
        assert_eq!(d.probs(), &[0.5, 0.5]);
    }

    #[test]
    fn normalize_hand_example() {
        let d = TokenDistribution::normalize(&[0.25, 0.5]).unwrap();
        assert!((d.probs()[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((d.probs()[1] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn normalize_rejects_all_zero() {
        assert!(matches!(
            TokenDistribution::normalize(&[0.0, 0.0]),
            Err(NafError::AllZeroWeights)
        ));
    }

    #[test]
    fn normalize_is_idempotent() {
        let d = TokenDistribution::normalize(&[0.3, 0.9, 1.1]).unwrap();
        let again = TokenDistribution::normalize(d.probs()).unwrap();
        for (a, b) in d.probs().iter().zip(again.probs()) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn from_probs_validates_sum() {
        assert!(TokenDistribution::from_probs(vec![0.5, 0.4]).is_err());
        assert!(TokenDistribution::from_probs(vec![0.5, 0.5]).is_ok());
        assert!(TokenDistribution::from_probs(vec![-0.1, 1.1]).is_err());
    }

    #[test]
    fn sample_one_hot_is_deterministic() {
        let d = TokenDistribution::from_probs(vec![0.0, 1.0, 0.0]).unwrap();
        for seed in 0..20 {
            let mut r = RandomSource::new(seed);
            assert_eq!(d.sample(&mut r), TokenId(1));
        }
    }

    #[test]
    fn sample_frequency_matches_probability() {
        let d = TokenDistribution::from_probs(vec![0.5, 0.5]).unwrap();
        let mut r = RandomSource::new(123);
        let n = 100_000;
        let zeros = (0..n).filter(|_| d.sample(&mut r) == TokenId(0)).count();
        let freq = zeros as f64 / n as f64;
        // 99% binomial interval around 0.5 is well inside ±0.02.
        assert!((freq - 0.5).abs() < 0.02, "freq {freq}");
    }

    #[test]
    fn sample_is_reproducible() {
        let d = TokenDistribution::normalize(&[1.0, 2.0, 3.0]).unwrap();
        let mut a = RandomSource::new(9);
        let mut b = RandomSource::new(9);
        let xs: Vec<_> = (0..50).map(|_| d.sample(&mut a)).collect();
        let ys: Vec<_> = (0..50).map(|_| d.sample(&mut b)).collect();
        assert_eq!(xs, ys);
    }

    #[test]
    fn sample_never_returns_zero_probability_token() {
        let d = TokenDistribution::from_probs(vec![0.5, 0.0, 0.5]).unwrap();
        let mut r = RandomSource::new(5);
        for _ in 0..10_000 {
            assert_ne!(d.sample(&mut r), TokenId(1));
        }
    }

    #[test]
    fn empirical_law_converges() {
        let d = TokenDistribution::normalize(&[0.1, 0.2, 0.3, 0.4]).unwrap();
        let mut r = RandomSource::new(77);
        let n = 1_000_000usize;
        let mut counts = [0u64; 4];
        for _ in 0..n {
            counts[d.sample(&mut r).index()] += 1;
        }
        for (i, &c) in counts.iter().enumerate() {
            let p = d.probs()[i];
            let se = (p * (1.0 - p) / n as f64).sqrt();
            let err = (c as f64 / n as f64 - p).abs();
            assert!(err <= 5.0 * se, "token {i}: err {err}, se {se}");
        }
    }

    #[test]
    fn argmax_breaks_ties_by_smallest_id() {
        let d = TokenDistribution::from_probs(vec![0.25, 0.25, 0.5]).unwrap();
        assert_eq!(d.argmax(), TokenId(2));
        let tie = TokenDistribution::from_probs(vec![0.4, 0.4, 0.2]).unwrap();
        assert_eq!(tie.argmax(), TokenId(0));
    }

    #[test]
    fn log_prob_of_zero_is_negative_infinity() {
        let d = TokenDistribution::from_probs(vec![1.0, 0.0]).unwrap();
        assert_eq!(d.log_prob(TokenId(1)), f64::NEG_INFINITY);
        assert_eq!(d.log_prob(TokenId(0)), 0.0);
    }
}
