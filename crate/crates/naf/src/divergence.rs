//! Exact divergences at token and sequence level, and the closed-form NAF
//! bounds for the two-model combiners.
//!
//! All sums run in a fixed (token- or sequence-lexicographic) order, so
//! repeated runs produce bit-identical values. `+inf` is an ordinary result
//! (mass outside the other model's support), never an error.

use crate::dist::TokenDistribution;
use crate::error::{NafError, Result};
use crate::models::{check_same_vocab, GenerativeModel};
use crate::protect::SafeModelSet;
use crate::vocab::{TokenId, TokenSequence};

/// The divergences the toolkit computes.
///
/// `Max` is one-sided: the maximum of `log(p(y)/q(y))` over p's support.
/// `Kl` uses natural logs with the `0·log 0 = 0` convention. `Tv` is total
/// variation, `HellingerSq` the squared Hellinger distance `1 − Σ√(p·q)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DivergenceKind {
    Max,
    Kl,
    Tv,
    HellingerSq,
}

impl DivergenceKind {
    pub const ALL: [DivergenceKind; 4] = [
        DivergenceKind::Max,
        DivergenceKind::Kl,
        DivergenceKind::Tv,
        DivergenceKind::HellingerSq,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DivergenceKind::Max => "max",
            DivergenceKind::Kl => "kl",
            DivergenceKind::Tv => "tv",
            DivergenceKind::HellingerSq => "h2",
        }
    }
}

impl std::str::FromStr for DivergenceKind {
    type Err = NafError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max" => Ok(DivergenceKind::Max),
            "kl" => Ok(DivergenceKind::Kl),
            "tv" => Ok(DivergenceKind::Tv),
            "h2" => Ok(DivergenceKind::HellingerSq),
            other => Err(NafError::InvalidParameter(format!(
                "unknown divergence {other:?}, expected max|kl|tv|h2"
            ))),
        }
    }
}

impl std::fmt::Display for DivergenceKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Divergence between two probability vectors of equal length.
pub fn vector_divergence(p: &[f64], q: &[f64], kind: DivergenceKind) -> f64 {
    debug_assert_eq!(p.len(), q.len());
    match kind {
        DivergenceKind::Max => {
            let mut best = f64::NEG_INFINITY;
            for (&pi, &qi) in p.iter().zip(q) {
                if pi > 0.0 {
                    if qi <= 0.0 {
                        return f64::INFINITY;
                    }
                    let r = (pi / qi).ln();
                    if r > best {
                        best = r;
                    }
                }
            }
            best
        }
        DivergenceKind::Kl => {
            let mut sum = 0.0;
            for (&pi, &qi) in p.iter().zip(q) {
                if pi > 0.0 {
                    if qi <= 0.0 {
                        return f64::INFINITY;
                    }
                    sum += pi * (pi / qi).ln();
                }
            }
            sum
        }
        DivergenceKind::Tv => 0.5 * p.iter().zip(q).map(|(&pi, &qi)| (pi - qi).abs()).sum::<f64>(),
        DivergenceKind::HellingerSq => {
            1.0 - p
                .iter()
                .zip(q)
                .map(|(&pi, &qi)| (pi * qi).sqrt())
                .sum::<f64>()
        }
    }
}

/// Divergence between two token distributions.
pub fn token_divergence(
    p: &TokenDistribution,
    q: &TokenDistribution,
    kind: DivergenceKind,
) -> Result<f64> {
    if p.len() != q.len() {
        return Err(NafError::VocabularyMismatch(format!(
            "distributions have {} and {} tokens",
            p.len(),
            q.len()
        )));
    }
    Ok(vector_divergence(p.probs(), q.probs(), kind))
}

/// Divergence computed from two aligned log-probability laws.
///
/// More precise than exponentiating first when the laws come from chain-rule
/// enumeration: log-ratios subtract exactly.
pub fn log_law_divergence(lp: &[f64], lq: &[f64], kind: DivergenceKind) -> f64 {
    debug_assert_eq!(lp.len(), lq.len());
    match kind {
        DivergenceKind::Max => {
            let mut best = f64::NEG_INFINITY;
            for (&a, &b) in lp.iter().zip(lq) {
                if a > f64::NEG_INFINITY {
                    if b == f64::NEG_INFINITY {
                        return f64::INFINITY;
                    }
                    let r = a - b;
                    if r > best {
                        best = r;
                    }
                }
            }
            best
        }
        DivergenceKind::Kl => {
            let mut sum = 0.0;
            for (&a, &b) in lp.iter().zip(lq) {
                if a > f64::NEG_INFINITY {
                    if b == f64::NEG_INFINITY {
                        return f64::INFINITY;
                    }
                    sum += a.exp() * (a - b);
                }
            }
            sum
        }
        DivergenceKind::Tv => {
            0.5 * lp
                .iter()
                .zip(lq)
                .map(|(&a, &b)| (a.exp() - b.exp()).abs())
                .sum::<f64>()
        }
        DivergenceKind::HellingerSq => {
            // √(p·q) = exp((log p + log q)/2); -inf on either side gives 0.
            1.0 - lp
                .iter()
                .zip(lq)
                .map(|(&a, &b)| (0.5 * (a + b)).exp())
                .sum::<f64>()
        }
    }
}

/// Number of length-`length` sequences over `k` tokens, checked against the
/// enumeration cap.
pub fn enumeration_size(k: usize, length: usize, cap: u64) -> Result<u64> {
    let support = (k as u128)
        .checked_pow(length as u32)
        .unwrap_or(u128::MAX);
    if support > cap as u128 {
        return Err(NafError::EnumerationTooLarge { support, cap });
    }
    Ok(support as u64)
}

/// The sequence with the given lexicographic index (first position most
/// significant).
pub fn sequence_at(k: usize, length: usize, mut index: u64) -> TokenSequence {
    let mut seq = vec![TokenId(0); length];
    for pos in (0..length).rev() {
        seq[pos] = TokenId((index % k as u64) as u32);
        index /= k as u64;
    }
    seq
}

/// Exact log-probabilities of every length-`length` continuation of `prompt`
/// under `m`, in lexicographic sequence order.
///
/// Chain-rule depth-first walk; zero-probability subtrees are filled with
/// `-inf` without querying the model, so models that are undefined on
/// unreachable contexts (for example a min-combiner with locally disjoint
/// supports) enumerate cleanly.
pub fn sequence_log_law(
    m: &dyn GenerativeModel,
    prompt: &[TokenId],
    length: usize,
    cap: u64,
) -> Result<Vec<f64>> {
    let k = m.vocab_size();
    let support = enumeration_size(k, length, cap)?;
    let mut out = Vec::with_capacity(support as usize);
    let mut context = prompt.to_vec();
    walk(m, &mut context, length, 0.0, &mut out)?;
    Ok(out)
}

fn walk(
    m: &dyn GenerativeModel,
    context: &mut TokenSequence,
    remaining: usize,
    acc: f64,
    out: &mut Vec<f64>,
) -> Result<()> {
    if remaining == 0 {
        out.push(acc);
        return Ok(());
    }
    if acc == f64::NEG_INFINITY {
        let leaves = (m.vocab_size() as u64).pow(remaining as u32);
        out.extend(std::iter::repeat_n(f64::NEG_INFINITY, leaves as usize));
        return Ok(());
    }
    let d = m.next_distribution(context)?;
    for t in 0..m.vocab_size() {
        let id = TokenId(t as u32);
        context.push(id);
        walk(m, context, remaining - 1, acc + d.log_prob(id), out)?;
        context.pop();
    }
    Ok(())
}

/// Exact divergence between the sequence laws of two models over all
/// `K^length` continuations of `prompt`.
pub fn sequence_divergence_exact(
    pm: &dyn GenerativeModel,
    qm: &dyn GenerativeModel,
    prompt: &[TokenId],
    length: usize,
    kind: DivergenceKind,
    cap: u64,
) -> Result<f64> {
    check_same_vocab(pm, qm)?;
    let lp = sequence_log_law(pm, prompt, length, cap)?;
    let lq = sequence_log_law(qm, prompt, length, cap)?;
    Ok(log_law_divergence(&lp, &lq, kind))
}

/// Closed-form NAF bound for the two-model combiners.
///
/// For the min combiner under max divergence the bound is `−log Z` with
/// `Z = Σ min(q1, q2) = 1 − TV(q1, q2)`; for the geometric combiner under KL
/// it is `−2·log Z` with `Z = Σ √(q1·q2) = 1 − H²(q1, q2)`. Computing the
/// partition function directly avoids cancellation in `1 − (1 − Z)`.
pub fn cp_delta_bound(
    q1: &TokenDistribution,
    q2: &TokenDistribution,
    kind: DivergenceKind,
) -> Result<f64> {
    if q1.len() != q2.len() {
        return Err(NafError::VocabularyMismatch(format!(
            "distributions have {} and {} tokens",
            q1.len(),
            q2.len()
        )));
    }
    let z: f64 = match kind {
        DivergenceKind::Max => q1
            .probs()
            .iter()
            .zip(q2.probs())
            .map(|(&a, &b)| a.min(b))
            .sum(),
        DivergenceKind::Kl => q1
            .probs()
            .iter()
            .zip(q2.probs())
            .map(|(&a, &b)| (a * b).sqrt())
            .sum(),
        other => {
            return Err(NafError::InvalidParameter(format!(
                "no closed-form combiner bound under {other}; use max or kl"
            )))
        }
    };
    if z <= 0.0 {
        return Err(NafError::BoundInfinite);
    }
    match kind {
        DivergenceKind::Max => Ok(-z.ln()),
        DivergenceKind::Kl => Ok(-2.0 * z.ln()),
        _ => unreachable!(),
    }
}

/// Exact NAF level of `p` against a safe set: the largest sequence-level
/// divergence `Δ(p ‖ q_j)` over the set, by full enumeration.
pub fn naf_check_exact(
    p: &dyn GenerativeModel,
    safe: &SafeModelSet,
    prompt: &[TokenId],
    length: usize,
    kind: DivergenceKind,
    cap: u64,
) -> Result<f64> {
    let lp = sequence_log_law(p, prompt, length, cap)?;
    let mut worst = f64::NEG_INFINITY;
    for (_, q) in safe.members() {
        check_same_vocab(p, q.as_ref())?;
        let lq = sequence_log_law(q.as_ref(), prompt, length, cap)?;
        let d = log_law_divergence(&lp, &lq, kind);
        if d > worst {
            worst = d;
        }
    }
    Ok(worst)
}
