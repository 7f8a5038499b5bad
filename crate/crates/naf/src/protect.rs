//! Protected decoding: two-model combiners with closed-form NAF bounds,
//! rejection sampling against a safe set with a certified bound, and a
//! rejection-sampling form of the combiners for sequence generation.

use std::sync::Arc;

use statrs::distribution::{Beta, ContinuousCDF};

use crate::dist::TokenDistribution;
use crate::divergence::{log_law_divergence, sequence_log_law, DivergenceKind};
use crate::error::{NafError, Result};
use crate::models::{
    check_same_vocab, sample_sequence, sequence_logprob, GenerativeModel, ModelRef,
};
use crate::rng::RandomSource;
use crate::vocab::{TokenId, TokenSequence};

/// An ordered, identified collection of safe models sharing one vocabulary.
#[derive(Clone)]
pub struct SafeModelSet {
    members: Vec<(String, ModelRef)>,
}

impl SafeModelSet {
    pub fn new(members: Vec<(String, ModelRef)>) -> Result<Self> {
        if members.is_empty() {
            return Err(NafError::InvalidParameter(
                "a safe set needs at least one model".into(),
            ));
        }
        for i in 1..members.len() {
            if members[..i].iter().any(|(id, _)| id == &members[i].0) {
                return Err(NafError::InvalidParameter(format!(
                    "duplicate safe-model id {:?}",
                    members[i].0
                )));
            }
            check_same_vocab(members[0].1.as_ref(), members[i].1.as_ref()).map_err(|_| {
                NafError::VocabularyMismatch(format!(
                    "safe model {:?} does not share the set's vocabulary",
                    members[i].0
                ))
            })?;
        }
        Ok(SafeModelSet { members })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction requires at least one member
    }

    pub fn members(&self) -> &[(String, ModelRef)] {
        &self.members
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.members.iter().map(|(id, _)| id.as_str())
    }

    pub fn vocab_size(&self) -> usize {
        self.members[0].1.vocab_size()
    }
}

/// Combines two safe next-token distributions into a protected one.
///
/// Under max divergence the combiner is the pointwise minimum, renormalized;
/// the result is NAF against both inputs at level `−log Z` where `Z` is the
/// minimum's mass. Under KL it is the pointwise geometric mean, renormalized,
/// NAF at level `−2·log Z`.
pub fn cp_delta_combine(
    q1: &TokenDistribution,
    q2: &TokenDistribution,
    kind: DivergenceKind,
) -> Result<TokenDistribution> {
    if q1.len() != q2.len() {
        return Err(NafError::VocabularyMismatch(format!(
            "distributions have {} and {} tokens",
            q1.len(),
            q2.len()
        )));
    }
    let weights: Vec<f64> = match kind {
        DivergenceKind::Max => q1
            .probs()
            .iter()
            .zip(q2.probs())
            .map(|(&a, &b)| a.min(b))
            .collect(),
        DivergenceKind::Kl => q1
            .probs()
            .iter()
            .zip(q2.probs())
            .map(|(&a, &b)| (a * b).sqrt())
            .collect(),
        other => {
            return Err(NafError::InvalidParameter(format!(
                "no combiner under {other}; use max or kl"
            )))
        }
    };
    TokenDistribution::normalize(&weights)
}

struct CombinedModel {
    q1: ModelRef,
    q2: ModelRef,
    kind: DivergenceKind,
}

impl GenerativeModel for CombinedModel {
    fn vocab_size(&self) -> usize {
        self.q1.vocab_size()
    }

    fn context_order(&self) -> usize {
        self.q1.context_order().max(self.q2.context_order())
    }

    fn next_distribution(&self, context: &[TokenId]) -> Result<TokenDistribution> {
        let d1 = self.q1.next_distribution(context)?;
        let d2 = self.q2.next_distribution(context)?;
        cp_delta_combine(&d1, &d2, self.kind)
    }
}

/// A model that applies [`cp_delta_combine`] at every decoding step.
///
/// Disjoint supports at a reachable step surface as `AllZeroWeights` there.
pub fn cp_delta_model(q1: ModelRef, q2: ModelRef, kind: DivergenceKind) -> Result<ModelRef> {
    check_same_vocab(q1.as_ref(), q2.as_ref())?;
    if !matches!(kind, DivergenceKind::Max | DivergenceKind::Kl) {
        return Err(NafError::InvalidParameter(format!(
            "no combiner under {kind}; use max or kl"
        )));
    }
    Ok(Arc::new(CombinedModel { q1, q2, kind }))
}

fn check_acceptance_inputs(
    p: &dyn GenerativeModel,
    safe: &SafeModelSet,
    kappa: f64,
) -> Result<()> {
    if !kappa.is_finite() {
        return Err(NafError::InvalidParameter(format!(
            "threshold must be finite, got {kappa}"
        )));
    }
    for (id, q) in safe.members() {
        check_same_vocab(p, q.as_ref()).map_err(|_| {
            NafError::VocabularyMismatch(format!(
                "safe model {id:?} does not share the base model's vocabulary"
            ))
        })?;
    }
    Ok(())
}

/// Whether sequence `y` (with log-probability `lp` under `p`) passes the
/// log-ratio acceptance test against every safe model. Boundary ratios equal
/// to the threshold are accepted.
fn accepts(
    p_logprob: f64,
    safe: &SafeModelSet,
    kappa: f64,
    prompt: &[TokenId],
    y: &[TokenId],
) -> Result<bool> {
    for (_, q) in safe.members() {
        let lq = sequence_logprob(q.as_ref(), prompt, y)?;
        if p_logprob - lq > kappa {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Rejection sampling at threshold `κ`: draws from `p` until a sequence
/// satisfies `log(p(y|x)/q(y|x)) ≤ κ` for every safe model `q`.
///
/// Returns the accepted sequence and the number of attempts consumed. The
/// accepted sequence is distributed as `p` conditioned on the acceptance
/// region, which is NAF at any level exceeding `κ + log(1/ν)` under max
/// divergence, `ν` being the per-attempt acceptance probability.
pub fn cp_kappa_sample(
    p: &dyn GenerativeModel,
    safe: &SafeModelSet,
    kappa: f64,
    prompt: &[TokenId],
    length: usize,
    r: &mut RandomSource,
    max_attempts: u64,
) -> Result<(TokenSequence, u64)> {
    check_acceptance_inputs(p, safe, kappa)?;
    if max_attempts == 0 {
        return Err(NafError::InvalidParameter(
            "max_attempts must be at least 1".into(),
        ));
    }
    for attempt in 1..=max_attempts {
        let (y, lp) = sample_sequence(p, prompt, length, r)?;
        if accepts(lp, safe, kappa, prompt, &y)? {
            return Ok((y, attempt));
        }
    }
    Err(NafError::RejectionExhausted {
        attempts: max_attempts,
    })
}

/// The exact law induced by rejection sampling at threshold `κ`.
#[derive(Debug, Clone)]
pub struct InducedLaw {
    /// Base-model log-probability of every sequence, lexicographic order.
    log_p: Vec<f64>,
    /// Acceptance indicator per sequence (always false off p's support).
    pub accepted: Vec<bool>,
    /// Exact acceptance probability `ν = Σ_accepted p(y)`.
    pub nu: f64,
}

impl InducedLaw {
    /// The conditional law given acceptance, as probabilities.
    pub fn probs(&self) -> Vec<f64> {
        self.log_p
            .iter()
            .zip(&self.accepted)
            .map(|(&lp, &a)| if a { lp.exp() / self.nu } else { 0.0 })
            .collect()
    }

    /// Log-law of the conditional distribution (`-inf` off the acceptance
    /// region).
    pub fn log_law(&self) -> Vec<f64> {
        let log_nu = self.nu.ln();
        self.log_p
            .iter()
            .zip(&self.accepted)
            .map(|(&lp, &a)| if a { lp - log_nu } else { f64::NEG_INFINITY })
            .collect()
    }

    /// Exact divergence of the induced law against a sequence log-law.
    pub fn divergence_against(&self, q_log_law: &[f64], kind: DivergenceKind) -> f64 {
        log_law_divergence(&self.log_law(), q_log_law, kind)
    }
}

/// Enumerates the exact conditional distribution of rejection sampling at
/// threshold `κ`, with the exact acceptance probability.
pub fn cp_kappa_induced_exact(
    p: &dyn GenerativeModel,
    safe: &SafeModelSet,
    kappa: f64,
    prompt: &[TokenId],
    length: usize,
    cap: u64,
) -> Result<InducedLaw> {
    check_acceptance_inputs(p, safe, kappa)?;
    let log_p = sequence_log_law(p, prompt, length, cap)?;
    let mut accepted = vec![true; log_p.len()];
    for (i, &lp) in log_p.iter().enumerate() {
        if lp == f64::NEG_INFINITY {
            accepted[i] = false;
        }
    }
    for (_, q) in safe.members() {
        let lq = sequence_log_law(q.as_ref(), prompt, length, cap)?;
        for i in 0..log_p.len() {
            if accepted[i] && log_p[i] - lq[i] > kappa {
                accepted[i] = false;
            }
        }
    }
    let nu: f64 = log_p
        .iter()
        .zip(&accepted)
        .map(|(&lp, &a)| if a { lp.exp() } else { 0.0 })
        .sum();
    if nu <= 0.0 {
        return Err(NafError::EmptyAcceptanceRegion);
    }
    Ok(InducedLaw {
        log_p,
        accepted,
        nu,
    })
}

/// Record of a certified protected-decoding run.
#[derive(Debug, Clone)]
pub struct ProtectionCertificate {
    /// Scheme tag, e.g. `"cp-kappa"`.
    pub scheme: String,
    /// Acceptance threshold.
    pub kappa: f64,
    /// Point estimate of the acceptance probability.
    pub nu_hat: f64,
    /// Confidence level of the interval.
    pub level: f64,
    /// Exact (Clopper–Pearson) binomial interval for ν.
    pub nu_lo: f64,
    pub nu_hi: f64,
    /// Independent attempts performed and how many were accepted.
    pub trials: u64,
    pub accepted: u64,
    /// Implied NAF bound `κ + log(1/ν_lo)`; infinite when `ν_lo = 0`.
    pub bound: f64,
}

impl ProtectionCertificate {
    pub fn bound_is_finite(&self) -> bool {
        self.bound.is_finite()
    }
}

/// Exact two-sided binomial confidence interval (Clopper–Pearson) for `k`
/// successes in `n` trials.
pub fn clopper_pearson(successes: u64, trials: u64, level: f64) -> Result<(f64, f64)> {
    if trials == 0 || successes > trials {
        return Err(NafError::InvalidParameter(format!(
            "invalid binomial counts: {successes}/{trials}"
        )));
    }
    if !(0.0..1.0).contains(&level) || level <= 0.0 {
        return Err(NafError::InvalidParameter(format!(
            "confidence level must lie in (0, 1), got {level}"
        )));
    }
    let alpha = 1.0 - level;
    let (k, n) = (successes as f64, trials as f64);
    let lo = if successes == 0 {
        0.0
    } else {
        Beta::new(k, n - k + 1.0)
            .expect("valid beta parameters")
            .inverse_cdf(alpha / 2.0)
    };
    let hi = if successes == trials {
        1.0
    } else {
        Beta::new(k + 1.0, n - k)
            .expect("valid beta parameters")
            .inverse_cdf(1.0 - alpha / 2.0)
    };
    Ok((lo, hi))
}

/// Estimates the acceptance probability ν by `trials` independent attempts
/// and certifies the implied NAF bound from the interval's lower endpoint.
///
/// Attempt `i` draws from the stream labeled `trial-{i}` below `r`, so the
/// certificate is reproducible and independent of call position.
#[allow(clippy::too_many_arguments)]
pub fn estimate_nu(
    p: &dyn GenerativeModel,
    safe: &SafeModelSet,
    kappa: f64,
    prompt: &[TokenId],
    length: usize,
    trials: u64,
    level: f64,
    r: &RandomSource,
) -> Result<ProtectionCertificate> {
    check_acceptance_inputs(p, safe, kappa)?;
    if trials == 0 {
        return Err(NafError::InvalidParameter(
            "trials must be at least 1".into(),
        ));
    }
    let mut accepted = 0u64;
    for i in 0..trials {
        let mut stream = r.derive(&format!("trial-{i}"));
        let (y, lp) = sample_sequence(p, prompt, length, &mut stream)?;
        if accepts(lp, safe, kappa, prompt, &y)? {
            accepted += 1;
        }
    }
    let nu_hat = accepted as f64 / trials as f64;
    let (nu_lo, nu_hi) = clopper_pearson(accepted, trials, level)?;
    let bound = if nu_lo > 0.0 {
        kappa + (1.0 / nu_lo).ln()
    } else {
        f64::INFINITY
    };
    Ok(ProtectionCertificate {
        scheme: "cp-kappa".into(),
        kappa,
        nu_hat,
        level,
        nu_lo,
        nu_hi,
        trials,
        accepted,
        bound,
    })
}

/// How the rejection-sampling ensembler picks its proposal model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IndexPolicy {
    /// Re-draw the proposal index uniformly on every iteration (default).
    /// At κ = 0 the induced law is exactly the corresponding combiner.
    #[default]
    FreshPerIteration,
    /// Draw the proposal index once per call. Kept for comparison: the
    /// induced law then mixes the two conditioned proposals instead of
    /// recovering the combiner.
    FixedPerCall,
}

fn log_sum_exp2(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Generates a sequence from the two-model ensemble by rejection sampling
/// instead of per-token combination.
///
/// Each iteration proposes a whole sequence from one of the safe models.
/// Under max divergence the proposal from `q_i` is accepted iff
/// `log(q_i(y)/q_{i'}(y)) ≤ κ`; at κ = 0 with fresh indices the output law is
/// exactly the min combiner. Under KL the proposal is accepted with
/// probability `min(1, e^{κ/2}·2·√(Q1(y)·Q2(y))/(Q1(y)+Q2(y)))` — a
/// symmetric rule that is a valid probability for every sequence and at
/// κ = 0 (fresh indices) induces exactly the geometric-mean combiner, since
/// the proposal mixture `(Q1+Q2)/2` times the acceptance ratio leaves
/// `√(Q1·Q2)`. Larger κ accepts more and drifts the law toward the plain
/// mixture.
#[allow(clippy::too_many_arguments)]
pub fn cp_delta_rejection_sample(
    q1: &dyn GenerativeModel,
    q2: &dyn GenerativeModel,
    kind: DivergenceKind,
    kappa: f64,
    prompt: &[TokenId],
    length: usize,
    r: &mut RandomSource,
    max_attempts: u64,
    policy: IndexPolicy,
) -> Result<(TokenSequence, u64)> {
    check_same_vocab(q1, q2)?;
    if !matches!(kind, DivergenceKind::Max | DivergenceKind::Kl) {
        return Err(NafError::InvalidParameter(format!(
            "no rejection ensembler under {kind}; use max or kl"
        )));
    }
    if !kappa.is_finite() || kappa < 0.0 {
        return Err(NafError::InvalidParameter(format!(
            "threshold must be finite and non-negative, got {kappa}"
        )));
    }
    if max_attempts == 0 {
        return Err(NafError::InvalidParameter(
            "max_attempts must be at least 1".into(),
        ));
    }

    let mut fixed_first = false;
    if policy == IndexPolicy::FixedPerCall {
        fixed_first = r.next_uniform() < 0.5;
    }
    for attempt in 1..=max_attempts {
        let first = match policy {
            IndexPolicy::FreshPerIteration => r.next_uniform() < 0.5,
            IndexPolicy::FixedPerCall => fixed_first,
        };
        let (proposal, other) = if first { (q1, q2) } else { (q2, q1) };
        let (y, lq_prop) = sample_sequence(proposal, prompt, length, r)?;
        let accepted = match kind {
            DivergenceKind::Max => {
                let lq_other = sequence_logprob(other, prompt, &y)?;
                lq_prop - lq_other <= kappa
            }
            DivergenceKind::Kl => {
                let lq_other = sequence_logprob(other, prompt, &y)?;
                // log acceptance = κ/2 + log 2 + (log Q1 + log Q2)/2
                //                  − log(Q1 + Q2), clamped at 0.
                let log_a = 0.5 * kappa + std::f64::consts::LN_2
                    + 0.5 * (lq_prop + lq_other)
                    - log_sum_exp2(lq_prop, lq_other);
                let u = r.next_uniform();
                u < log_a.min(0.0).exp()
            }
            _ => unreachable!(),
        };
        if accepted {
            return Ok((y, attempt));
        }
    }
    Err(NafError::RejectionExhausted {
        attempts: max_attempts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divergence::{sequence_divergence_exact, token_divergence};
    use crate::models::IidModel;
    use crate::DEFAULT_ENUMERATION_CAP;

    fn worked_pair() -> (TokenDistribution, TokenDistribution) {
        (
            TokenDistribution::from_probs(vec![0.5, 0.5]).unwrap(),
            TokenDistribution::from_probs(vec![0.25, 0.75]).unwrap(),
        )
    }

    #[test]
    fn combine_is_idempotent_on_identical_inputs() {
        let q = TokenDistribution::from_probs(vec![0.25, 0.75]).unwrap();
        for kind in [DivergenceKind::Max, DivergenceKind::Kl] {
            let c = cp_delta_combine(&q, &q, kind).unwrap();
            assert_eq!(c.probs(), q.probs(), "{kind}");
        }
    }

    #[test]
    fn combine_worked_pair() {
        let (q1, q2) = worked_pair();
        let min = cp_delta_combine(&q1, &q2, DivergenceKind::Max).unwrap();
        assert!((min.probs()[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((min.probs()[1] - 2.0 / 3.0).abs() < 1e-15);
        let geo = cp_delta_combine(&q1, &q2, DivergenceKind::Kl).unwrap();
        assert!((geo.probs()[0] - 0.3660254037844386).abs() < 1e-12);
        assert!((geo.probs()[1] - 0.6339745962155614).abs() < 1e-12);
    }

    #[test]
    fn combine_rejects_disjoint_supports() {
        let a = TokenDistribution::from_probs(vec![1.0, 0.0]).unwrap();
        let b = TokenDistribution::from_probs(vec![0.0, 1.0]).unwrap();
        for kind in [DivergenceKind::Max, DivergenceKind::Kl] {
            assert!(matches!(
                cp_delta_combine(&a, &b, kind),
                Err(NafError::AllZeroWeights)
            ));
        }
    }

    #[test]
    fn combined_model_steps_match_combiner() {
        let (q1, q2) = worked_pair();
        let m = cp_delta_model(
            IidModel::shared(q1.clone()),
            IidModel::shared(q2.clone()),
            DivergenceKind::Max,
        )
        .unwrap();
        let step = m.next_distribution(&[]).unwrap();
        let direct = cp_delta_combine(&q1, &q2, DivergenceKind::Max).unwrap();
        assert_eq!(step.probs(), direct.probs());
    }

    #[test]
    fn combined_model_sequence_divergence_compounds_per_step() {
        // i.i.d. steps: the min-combiner's exact max divergence against q1
        // over 3 steps is 3·log(4/3).
        let (q1, q2) = worked_pair();
        let qm1 = IidModel::shared(q1);
        let qm2 = IidModel::shared(q2);
        let combined =
            cp_delta_model(Arc::clone(&qm1), Arc::clone(&qm2), DivergenceKind::Max).unwrap();
        let d = sequence_divergence_exact(
            combined.as_ref(),
            qm1.as_ref(),
            &[],
            3,
            DivergenceKind::Max,
            DEFAULT_ENUMERATION_CAP,
        )
        .unwrap();
        assert!((d - 0.8630462173553426).abs() <= 1e-9, "{d}");
    }

    #[test]
    fn combiner_outputs_respect_closed_form_bounds() {
        use crate::divergence::cp_delta_bound;
        let mut r = RandomSource::new(31);
        for _ in 0..1000 {
            let k = 2 + (r.next_uniform() * 3.0) as usize;
            let q1 = random_full_support(k, &mut r);
            let q2 = random_full_support(k, &mut r);
            let min = cp_delta_combine(&q1, &q2, DivergenceKind::Max).unwrap();
            let bound = cp_delta_bound(&q1, &q2, DivergenceKind::Max).unwrap();
            for q in [&q1, &q2] {
                let d = token_divergence(&min, q, DivergenceKind::Max).unwrap();
                assert!(d <= bound + 1e-9, "max: {d} > {bound}");
            }
            let geo = cp_delta_combine(&q1, &q2, DivergenceKind::Kl).unwrap();
            let bound = cp_delta_bound(&q1, &q2, DivergenceKind::Kl).unwrap();
            for q in [&q1, &q2] {
                let d = token_divergence(&geo, q, DivergenceKind::Kl).unwrap();
                assert!(d <= bound + 1e-9, "kl: {d} > {bound}");
            }
        }
    }

    fn random_full_support(k: usize, r: &mut RandomSource) -> TokenDistribution {
        let w: Vec<f64> = (0..k).map(|_| r.next_uniform() + 1e-3).collect();
        TokenDistribution::normalize(&w).unwrap()
    }

    #[test]
    fn kappa_sampling_accepts_immediately_against_self() {
        let (p, _) = worked_pair();
        let pm = IidModel::new(p.clone());
        let safe = SafeModelSet::new(vec![("self".into(), IidModel::shared(p))]).unwrap();
        let mut r = RandomSource::new(1);
        let (_, attempts) = cp_kappa_sample(&pm, &safe, 0.0, &[], 3, &mut r, 10).unwrap();
        assert_eq!(attempts, 1);
    }

    #[test]
    fn kappa_zero_on_worked_pair_only_emits_token_one() {
        let (p, q) = worked_pair();
        let pm = IidModel::new(p);
        let safe = SafeModelSet::new(vec![("q".into(), IidModel::shared(q))]).unwrap();
        let mut r = RandomSource::new(5);
        for _ in 0..200 {
            let (y, _) = cp_kappa_sample(&pm, &safe, 0.0, &[], 1, &mut r, 1000).unwrap();
            assert_eq!(y, vec![TokenId(1)]);
        }
    }

    #[test]
    fn kappa_below_every_ratio_exhausts() {
        let (p, q) = worked_pair();
        let pm = IidModel::new(p);
        let safe = SafeModelSet::new(vec![("q".into(), IidModel::shared(q))]).unwrap();
        let mut r = RandomSource::new(5);
        let err = cp_kappa_sample(&pm, &safe, -1.0, &[], 1, &mut r, 50).unwrap_err();
        assert!(matches!(err, NafError::RejectionExhausted { attempts: 50 }));
    }

    #[test]
    fn induced_law_on_worked_pair() {
        let (p, q) = worked_pair();
        let pm = IidModel::new(p);
        let safe = SafeModelSet::new(vec![("q".into(), IidModel::shared(q.clone()))]).unwrap();
        let law = cp_kappa_induced_exact(&pm, &safe, 0.0, &[], 1, 100).unwrap();
        assert!((law.nu - 0.5).abs() < 1e-15);
        assert_eq!(law.probs(), vec![0.0, 1.0]);
        // Exact max divergence of the induced law against q is log(1/0.75),
        // within the certified κ + log(1/ν) = log 2.
        let lq: Vec<f64> = q.probs().iter().map(|&x| x.ln()).collect();
        let d = law.divergence_against(&lq, DivergenceKind::Max);
        assert!((d - 0.2876820724517809).abs() < 1e-12, "{d}");
        assert!(d <= 0.0 + (1.0f64 / law.nu).ln() + 1e-12);
    }

    #[test]
    fn induced_law_against_self_is_base_model() {
        let (p, _) = worked_pair();
        let pm = IidModel::new(p.clone());
        let safe = SafeModelSet::new(vec![("self".into(), IidModel::shared(p.clone()))]).unwrap();
        let law = cp_kappa_induced_exact(&pm, &safe, 0.0, &[], 2, 100).unwrap();
        assert!((law.nu - 1.0).abs() < 1e-12);
        let probs = law.probs();
        let expect = [0.25, 0.25, 0.25, 0.25];
        for (a, b) in probs.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_acceptance_region_is_an_error() {
        // p is uniform; the safe pair point in opposite directions, so at
        // κ = 0 no token satisfies both ratio constraints.
        let p = TokenDistribution::from_probs(vec![0.5, 0.5]).unwrap();
        let q1 = TokenDistribution::from_probs(vec![0.8, 0.2]).unwrap();
        let q2 = TokenDistribution::from_probs(vec![0.2, 0.8]).unwrap();
        let pm = IidModel::new(p);
        let safe = SafeModelSet::new(vec![
            ("q1".into(), IidModel::shared(q1)),
            ("q2".into(), IidModel::shared(q2)),
        ])
        .unwrap();
        assert!(matches!(
            cp_kappa_induced_exact(&pm, &safe, 0.0, &[], 1, 100),
            Err(NafError::EmptyAcceptanceRegion)
        ));
    }

    #[test]
    fn acceptance_probability_is_monotone_in_kappa() {
        let (p, q) = worked_pair();
        let pm = IidModel::new(p);
        let safe = SafeModelSet::new(vec![("q".into(), IidModel::shared(q))]).unwrap();
        let mut prev = 0.0;
        for kappa in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let law = cp_kappa_induced_exact(&pm, &safe, kappa, &[], 2, 100).unwrap();
            assert!(law.nu >= prev - 1e-15, "ν decreased at κ = {kappa}");
            prev = law.nu;
        }
    }

    #[test]
    fn sampler_law_matches_induced_law() {
        let (p, q) = worked_pair();
        let pm = IidModel::new(p);
        let safe = SafeModelSet::new(vec![("q".into(), IidModel::shared(q))]).unwrap();
        let kappa = 0.5;
        let law = cp_kappa_induced_exact(&pm, &safe, kappa, &[], 2, 100).unwrap();
        let probs = law.probs();
        let mut r = RandomSource::new(17);
        let n = 100_000;
        let mut counts = vec![0u32; probs.len()];
        for _ in 0..n {
            let (y, _) = cp_kappa_sample(&pm, &safe, kappa, &[], 2, &mut r, 10_000).unwrap();
            let idx = y.iter().fold(0usize, |acc, &t| acc * 2 + t.index());
            counts[idx] += 1;
        }
        for (i, &c) in counts.iter().enumerate() {
            let f = c as f64 / n as f64;
            let se = (probs[i] * (1.0 - probs[i]) / n as f64).sqrt().max(1e-4);
            assert!(
                (f - probs[i]).abs() <= 3.0 * se,
                "sequence {i}: {f} vs {} (se {se})",
                probs[i]
            );
        }
    }

    #[test]
    fn certificate_for_self_safe_set_has_bound_kappa() {
        let (p, _) = worked_pair();
        let pm = IidModel::new(p.clone());
        let safe = SafeModelSet::new(vec![("self".into(), IidModel::shared(p))]).unwrap();
        let r = RandomSource::new(3);
        let cert = estimate_nu(&pm, &safe, 0.7, &[], 2, 500, 0.95, &r).unwrap();
        assert_eq!(cert.accepted, 500);
        assert_eq!(cert.nu_hat, 1.0);
        assert_eq!(cert.nu_hi, 1.0);
        // With ν̂ = 1 the lower endpoint is (α/2)^(1/n) < 1, so the bound
        // sits just above κ.
        assert!(cert.bound >= 0.7 && cert.bound < 0.72, "{}", cert.bound);
    }

    #[test]
    fn certificate_interval_covers_true_nu() {
        let (p, q) = worked_pair();
        let pm = IidModel::new(p);
        let safe = SafeModelSet::new(vec![("q".into(), IidModel::shared(q))]).unwrap();
        let r = RandomSource::new(11);
        // κ = 0 on the worked pair has exact ν = 0.5.
        let cert = estimate_nu(&pm, &safe, 0.0, &[], 1, 10_000, 0.99, &r).unwrap();
        assert!((cert.nu_hat - 0.5).abs() < 0.02, "{}", cert.nu_hat);
        assert!(cert.nu_lo < 0.5 && 0.5 < cert.nu_hi);
        assert!(cert.bound >= (2.0f64).ln());
    }

    #[test]
    fn certificate_with_zero_acceptances_is_unbounded() {
        let (p, q) = worked_pair();
        let pm = IidModel::new(p);
        let safe = SafeModelSet::new(vec![("q".into(), IidModel::shared(q))]).unwrap();
        let r = RandomSource::new(2);
        let cert = estimate_nu(&pm, &safe, -1.0, &[], 1, 100, 0.95, &r).unwrap();
        assert_eq!(cert.accepted, 0);
        assert_eq!(cert.nu_lo, 0.0);
        assert!(!cert.bound_is_finite());
    }

    #[test]
    fn clopper_pearson_known_values() {
        // Closed forms at the extremes: lo = (α/2)^(1/n) for k = n and
        // hi = 1 − (α/2)^(1/n) for k = 0.
        let (lo, hi) = clopper_pearson(0, 10, 0.95).unwrap();
        assert_eq!(lo, 0.0);
        assert!((hi - 0.3084971038198742).abs() < 1e-6, "{hi}");
        let (lo, hi) = clopper_pearson(10, 10, 0.95).unwrap();
        assert!((lo - 0.6915028961801257).abs() < 1e-6, "{lo}");
        assert_eq!(hi, 1.0);
        // Interior case against the textbook value for 5/10 at 95%.
        let (lo, hi) = clopper_pearson(5, 10, 0.95).unwrap();
        assert!((lo - 0.18708603).abs() < 1e-4, "{lo}");
        assert!((hi - 0.81291397).abs() < 1e-4, "{hi}");
    }

    #[test]
    fn rejection_ensembler_accepts_identical_models_immediately() {
        let (q, _) = worked_pair();
        let m = IidModel::new(q);
        let mut r = RandomSource::new(1);
        for kind in [DivergenceKind::Max, DivergenceKind::Kl] {
            let (_, attempts) =
                cp_delta_rejection_sample(&m, &m, kind, 0.0, &[], 2, &mut r, 100, IndexPolicy::default())
                    .unwrap();
            assert_eq!(attempts, 1, "{kind}");
        }
    }

    #[test]
    fn rejection_ensembler_recovers_min_combiner() {
        let (q1, q2) = worked_pair();
        let m1 = IidModel::new(q1.clone());
        let m2 = IidModel::new(q2.clone());
        let target = cp_delta_combine(&q1, &q2, DivergenceKind::Max).unwrap();
        let mut r = RandomSource::new(23);
        let n = 100_000;
        let mut count0 = 0u32;
        for _ in 0..n {
            let (y, _) = cp_delta_rejection_sample(
                &m1,
                &m2,
                DivergenceKind::Max,
                0.0,
                &[],
                1,
                &mut r,
                1000,
                IndexPolicy::FreshPerIteration,
            )
            .unwrap();
            if y[0] == TokenId(0) {
                count0 += 1;
            }
        }
        let f = count0 as f64 / n as f64;
        let p0 = target.probs()[0];
        let se = (p0 * (1.0 - p0) / n as f64).sqrt();
        assert!((f - p0).abs() <= 3.0 * se, "{f} vs {p0} (se {se})");
    }

    #[test]
    fn rejection_ensembler_recovers_geo_combiner() {
        let (q1, q2) = worked_pair();
        let m1 = IidModel::new(q1.clone());
        let m2 = IidModel::new(q2.clone());
        let target = cp_delta_combine(&q1, &q2, DivergenceKind::Kl).unwrap();
        let mut r = RandomSource::new(29);
        let n = 100_000;
        let mut count0 = 0u32;
        for _ in 0..n {
            let (y, _) = cp_delta_rejection_sample(
                &m1,
                &m2,
                DivergenceKind::Kl,
                0.0,
                &[],
                1,
                &mut r,
                1000,
                IndexPolicy::FreshPerIteration,
            )
            .unwrap();
            if y[0] == TokenId(0) {
                count0 += 1;
            }
        }
        let f = count0 as f64 / n as f64;
        let p0 = target.probs()[0];
        let se = (p0 * (1.0 - p0) / n as f64).sqrt();
        assert!((f - p0).abs() <= 3.0 * se, "{f} vs {p0} (se {se})");
    }

    #[test]
    fn fixed_index_policy_deviates_from_combiner() {
        // With the index drawn once per call, each call conditions a single
        // proposal model on its own acceptance region; on the worked pair at
        // κ = 0 that makes the output law [1/2, 1/2] instead of [1/3, 2/3].
        let (q1, q2) = worked_pair();
        let m1 = IidModel::new(q1);
        let m2 = IidModel::new(q2);
        let mut r = RandomSource::new(37);
        let n = 100_000;
        let mut count0 = 0u32;
        for _ in 0..n {
            let (y, _) = cp_delta_rejection_sample(
                &m1,
                &m2,
                DivergenceKind::Max,
                0.0,
                &[],
                1,
                &mut r,
                1000,
                IndexPolicy::FixedPerCall,
            )
            .unwrap();
            if y[0] == TokenId(0) {
                count0 += 1;
            }
        }
        let f = count0 as f64 / n as f64;
        let se = (1.0f64 / 3.0 * (2.0 / 3.0) / n as f64).sqrt();
        assert!(
            (f - 1.0 / 3.0).abs() > 5.0 * se,
            "fixed-index law {f} should deviate from 1/3"
        );
        assert!((f - 0.5).abs() <= 5.0 * se, "{f} should be near 1/2");
    }

    #[test]
    fn kappa_certified_bound_holds_over_random_instances() {
        let mut r = RandomSource::new(101);
        for trial in 0..200 {
            let k = 2 + (r.next_uniform() * 3.0) as usize; // K ≤ 4
            let length = 1 + (r.next_uniform() * 2.0) as usize; // ≤ 2
            let m = 1 + (r.next_uniform() * 3.0) as usize; // ≤ 3
            let kappa = [0.0, 0.5, 1.0][trial % 3];
            let pm = IidModel::new(random_full_support(k, &mut r));
            let members: Vec<(String, ModelRef)> = (0..m)
                .map(|j| {
                    (
                        format!("q{j}"),
                        IidModel::shared(random_full_support(k, &mut r)),
                    )
                })
                .collect();
            let safe = SafeModelSet::new(members).unwrap();
            let law = match cp_kappa_induced_exact(&pm, &safe, kappa, &[], length, 10_000) {
                Ok(law) => law,
                Err(NafError::EmptyAcceptanceRegion) => continue,
                Err(e) => panic!("{e}"),
            };
            let bound = kappa + (1.0 / law.nu).ln();
            for (_, q) in safe.members() {
                let lq = sequence_log_law(q.as_ref(), &[], length, 10_000).unwrap();
                let d = law.divergence_against(&lq, DivergenceKind::Max);
                assert!(d <= bound + 1e-9, "trial {trial}: {d} > {bound}");
            }
        }
    }
}
