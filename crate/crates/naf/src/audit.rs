//! Monte Carlo NAF auditing: the sampled divergence estimator, its
//! variance-reduced form, the empirical-Bernstein confidence half-width with
//! probability floors, the exact symmetric (DPG) check, and parameter sweeps.

use std::str::FromStr;

use crate::divergence::{sequence_divergence_exact, DivergenceKind};
use crate::error::{NafError, Result};
use crate::models::{check_same_vocab, sample_sequence, sequence_logprob, GenerativeModel};
use crate::protect::SafeModelSet;
use crate::rng::RandomSource;
use crate::vocab::TokenId;

/// Which per-sample term the Monte Carlo estimator averages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EstimatorVariant {
    /// `log(p(y)/q(y))` — unbiased for KL, but each term can be negative.
    Basic,
    /// `log(p(y)/q(y)) + (q(y)/p(y) − 1)` — still unbiased for KL (the
    /// correction has mean zero under `p`) and pointwise non-negative, since
    /// `e^t − 1 ≥ t`. Lower variance whenever the ratios spread.
    #[default]
    VarianceReduced,
}

impl EstimatorVariant {
    pub fn name(self) -> &'static str {
        match self {
            EstimatorVariant::Basic => "basic",
            EstimatorVariant::VarianceReduced => "variance-reduced",
        }
    }
}

impl FromStr for EstimatorVariant {
    type Err = NafError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "basic" => Ok(EstimatorVariant::Basic),
            "variance-reduced" => Ok(EstimatorVariant::VarianceReduced),
            other => Err(NafError::InvalidParameter(format!(
                "unknown estimator variant {other:?} (expected basic or variance-reduced)"
            ))),
        }
    }
}

/// How the probability floor α entering the Bernstein bound was obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaSpec {
    /// Supplied directly; `0` disclaims any floor and makes the half-width
    /// infinite.
    Explicit(f64),
    /// Derived from nucleus truncation: every kept token has probability at
    /// least `(1−p)/K`, so a length-`T` sequence has probability at least
    /// `((1−p)/K)^T`.
    TopP(f64),
    /// Derived from randomized response with uniform mixing weight λ: every
    /// token has probability at least `λ/K`, so α = `(λ/K)^T`.
    RandomizedResponse(f64),
}

impl AlphaSpec {
    /// The floor value for vocabulary size `k` and generation length `t`.
    pub fn resolve(&self, k: usize, t: usize) -> Result<f64> {
        match *self {
            AlphaSpec::Explicit(a) => {
                if !(0.0..1.0).contains(&a) {
                    return Err(NafError::InvalidParameter(format!(
                        "explicit floor must lie in [0, 1), got {a}"
                    )));
                }
                Ok(a)
            }
            AlphaSpec::TopP(p) => alpha_floor_top_p(k, t, p),
            AlphaSpec::RandomizedResponse(lambda) => alpha_floor_rr(k, t, lambda),
        }
    }

    /// Form recorded in reports, mirroring the CLI syntax.
    pub fn describe(&self) -> String {
        match *self {
            AlphaSpec::Explicit(a) => format!("explicit:{a}"),
            AlphaSpec::TopP(p) => format!("top-p:{p}"),
            AlphaSpec::RandomizedResponse(l) => format!("rr:{l}"),
        }
    }
}

impl FromStr for AlphaSpec {
    type Err = NafError;

    fn from_str(s: &str) -> Result<Self> {
        let (form, value) = s.split_once(':').ok_or_else(|| {
            NafError::InvalidParameter(format!(
                "floor spec {s:?} must look like explicit:<v>, top-p:<p>, or rr:<lambda>"
            ))
        })?;
        let v: f64 = value.parse().map_err(|_| {
            NafError::InvalidParameter(format!("floor spec {s:?} has a non-numeric value"))
        })?;
        match form {
            "explicit" => Ok(AlphaSpec::Explicit(v)),
            "top-p" => Ok(AlphaSpec::TopP(v)),
            "rr" => Ok(AlphaSpec::RandomizedResponse(v)),
            other => Err(NafError::InvalidParameter(format!(
                "unknown floor form {other:?} (expected explicit, top-p, or rr)"
            ))),
        }
    }
}

/// Probability floor implied by nucleus (top-p) truncation.
///
/// A kept token's original probability is at least `(1−p)/K` — otherwise the
/// tokens outside the kept prefix would sum to more than `1−p`, contradicting
/// the cut — and renormalization only raises it. Over `T` steps the sequence
/// probability is therefore at least `((1−p)/K)^T`.
pub fn alpha_floor_top_p(k: usize, t: usize, p: f64) -> Result<f64> {
    if !(0.0 < p && p <= 1.0) {
        return Err(NafError::InvalidParameter(format!(
            "nucleus mass must lie in (0, 1], got {p}"
        )));
    }
    if k < 2 || t < 1 {
        return Err(NafError::InvalidParameter(format!(
            "floor needs K ≥ 2 and T ≥ 1, got K={k}, T={t}"
        )));
    }
    Ok(((1.0 - p) / k as f64).powi(t as i32))
}

/// Probability floor implied by randomized response with mixing weight λ.
pub fn alpha_floor_rr(k: usize, t: usize, lambda: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(NafError::InvalidParameter(format!(
            "mixing weight must lie in [0, 1], got {lambda}"
        )));
    }
    if k < 2 || t < 1 {
        return Err(NafError::InvalidParameter(format!(
            "floor needs K ≥ 2 and T ≥ 1, got K={k}, T={t}"
        )));
    }
    Ok((lambda / k as f64).powi(t as i32))
}

/// Empirical-Bernstein half-width for the NAF estimate.
///
/// With `V_n` the largest unbiased sample variance of the per-model ratio
/// samples `r_ij = p(y_i)/q_j(y_i)` and `m` the number of safe models:
///
/// ```text
/// √(8 · V_n · log(1/δ) · log²(m/α) / n)  +  14 · log(2/δ) · log(m/α) / (3(n−1))
/// ```
///
/// The floor α must genuinely bound every observed sequence probability;
/// `min_observed_prob` is checked against it.
pub fn bernstein_half_width(
    ratio_samples: &[Vec<f64>],
    min_observed_prob: f64,
    delta: f64,
    alpha: f64,
) -> Result<f64> {
    let m = ratio_samples.len();
    if m == 0 {
        return Err(NafError::InvalidParameter(
            "at least one ratio sample vector is required".into(),
        ));
    }
    let n = ratio_samples[0].len();
    if n < 2 || ratio_samples.iter().any(|r| r.len() != n) {
        return Err(NafError::InvalidParameter(
            "ratio vectors must share one length n ≥ 2".into(),
        ));
    }
    if !(0.0 < delta && delta < 1.0) {
        return Err(NafError::InvalidParameter(format!(
            "failure probability must lie in (0, 1), got {delta}"
        )));
    }
    if !(0.0 < alpha && alpha < 1.0) {
        return Err(NafError::InvalidParameter(format!(
            "probability floor must lie in (0, 1) for a finite width, got {alpha}"
        )));
    }
    if min_observed_prob < alpha {
        return Err(NafError::FloorViolated {
            observed: min_observed_prob,
            alpha,
        });
    }
    let max_variance = ratio_samples
        .iter()
        .map(|r| unbiased_variance(r))
        .fold(0.0f64, f64::max);
    let nf = n as f64;
    let log_floor = (m as f64 / alpha).ln();
    let first = (8.0 * max_variance * (1.0 / delta).ln() * log_floor * log_floor / nf).sqrt();
    let second = 14.0 * (2.0 / delta).ln() * log_floor / (3.0 * (nf - 1.0));
    Ok(first + second)
}

fn unbiased_variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

/// One safe model's estimated divergence.
#[derive(Debug, Clone)]
pub struct ModelDelta {
    pub id: String,
    pub delta_hat: f64,
}

/// Result of a Monte Carlo NAF audit.
#[derive(Debug, Clone)]
pub struct NafEstimate {
    /// Estimated NAF level: the largest per-model divergence estimate.
    pub k_hat: f64,
    /// Per-safe-model estimates, in safe-set order.
    pub per_model: Vec<ModelDelta>,
    pub variant: EstimatorVariant,
    /// Number of Monte Carlo samples.
    pub n: u64,
    /// Failure probability of the confidence bound.
    pub delta: f64,
    /// Resolved probability floor (0 disclaims one).
    pub alpha: f64,
    /// How the floor was specified.
    pub alpha_source: String,
    /// Number of safe models.
    pub m: usize,
    /// Bernstein half-width; infinite when α = 0 or a ratio is unbounded.
    pub half_width: f64,
    /// Seed of the random source the audit drew from.
    pub seed: u64,
    /// True when some safe model assigned probability zero to a sampled
    /// sequence (the affected estimates are +∞).
    pub zero_density: bool,
}

/// Tuning for [`mc_naf_estimate`].
#[derive(Debug, Clone)]
pub struct AuditOptions {
    pub n: u64,
    pub variant: EstimatorVariant,
    pub delta: f64,
    pub alpha: AlphaSpec,
    /// Worker threads for sample generation. The estimate is bit-identical
    /// for every worker count: sample `i` always draws from the stream
    /// `sample-{i}` and reduction runs in sample order.
    pub workers: usize,
}

impl Default for AuditOptions {
    fn default() -> Self {
        AuditOptions {
            n: 1000,
            variant: EstimatorVariant::default(),
            delta: 0.05,
            alpha: AlphaSpec::Explicit(0.0),
            workers: 1,
        }
    }
}

/// Per-sample audit record: log-probability under `p` and under each safe
/// model, for one drawn sequence.
struct SampleRow {
    lp: f64,
    lqs: Vec<f64>,
}

fn audit_sample(
    p: &dyn GenerativeModel,
    safe: &SafeModelSet,
    prompt: &[TokenId],
    length: usize,
    base: &RandomSource,
    index: u64,
) -> Result<SampleRow> {
    let mut stream = base.derive(&format!("sample-{index}"));
    let (y, lp) = sample_sequence(p, prompt, length, &mut stream)?;
    let mut lqs = Vec::with_capacity(safe.len());
    for (_, q) in safe.members() {
        lqs.push(sequence_logprob(q.as_ref(), prompt, &y)?);
    }
    Ok(SampleRow { lp, lqs })
}

/// Monte Carlo NAF estimate of `p` against a safe set at prompt `x`.
///
/// Draws `n` sequences from `p(·|x)` and averages, per safe model, either
/// the log-ratio (basic) or the non-negative corrected term
/// (variance-reduced). The estimate of the NAF level is the per-model
/// maximum. When the floor α is positive, the empirical-Bernstein
/// half-width is attached; a sampled sequence whose probability under any
/// involved model falls below α fails the audit with `FloorViolated`.
pub fn mc_naf_estimate(
    p: &dyn GenerativeModel,
    safe: &SafeModelSet,
    prompt: &[TokenId],
    length: usize,
    opts: &AuditOptions,
    r: &RandomSource,
) -> Result<NafEstimate> {
    if opts.n < 2 {
        return Err(NafError::InvalidParameter(format!(
            "sample count must be at least 2, got {}",
            opts.n
        )));
    }
    if opts.workers == 0 {
        return Err(NafError::InvalidParameter(
            "worker count must be at least 1".into(),
        ));
    }
    for (id, q) in safe.members() {
        check_same_vocab(p, q.as_ref()).map_err(|_| {
            NafError::VocabularyMismatch(format!(
                "safe model {id:?} does not share the audited model's vocabulary"
            ))
        })?;
    }
    let alpha = opts.alpha.resolve(p.vocab_size(), length)?;

    let n = opts.n;
    let rows: Vec<SampleRow> = if opts.workers == 1 {
        let mut rows = Vec::with_capacity(n as usize);
        for i in 0..n {
            rows.push(audit_sample(p, safe, prompt, length, r, i)?);
        }
        rows
    } else {
        let workers = opts.workers.min(n as usize);
        let mut chunks: Vec<Result<Vec<SampleRow>>> = Vec::new();
        std::thread::scope(|scope| {
            let mut handles = Vec::with_capacity(workers);
            for w in 0..workers as u64 {
                let lo = w * n / workers as u64;
                let hi = (w + 1) * n / workers as u64;
                handles.push(scope.spawn(move || {
                    (lo..hi)
                        .map(|i| audit_sample(p, safe, prompt, length, r, i))
                        .collect::<Result<Vec<_>>>()
                }));
            }
            for h in handles {
                chunks.push(h.join().expect("audit worker panicked"));
            }
        });
        let mut rows = Vec::with_capacity(n as usize);
        for chunk in chunks {
            rows.extend(chunk?);
        }
        rows
    };

    let m = safe.len();
    let mut sums = vec![0.0f64; m];
    let mut ratios: Vec<Vec<f64>> = vec![Vec::with_capacity(rows.len()); m];
    let mut min_prob = f64::INFINITY;
    let mut zero_density = false;
    for row in &rows {
        min_prob = min_prob.min(row.lp.exp());
        for (j, &lq) in row.lqs.iter().enumerate() {
            if lq == f64::NEG_INFINITY {
                zero_density = true;
            }
            min_prob = min_prob.min(lq.exp());
            let log_ratio = row.lp - lq;
            let term = match opts.variant {
                EstimatorVariant::Basic => log_ratio,
                EstimatorVariant::VarianceReduced => log_ratio + ((lq - row.lp).exp() - 1.0),
            };
            sums[j] += term;
            ratios[j].push(log_ratio.exp());
        }
    }

    let per_model: Vec<ModelDelta> = safe
        .members()
        .iter()
        .zip(&sums)
        .map(|((id, _), &s)| ModelDelta {
            id: id.clone(),
            delta_hat: s / n as f64,
        })
        .collect();
    let k_hat = per_model
        .iter()
        .map(|d| d.delta_hat)
        .fold(f64::NEG_INFINITY, f64::max);

    let half_width = if alpha > 0.0 {
        bernstein_half_width(&ratios, min_prob, opts.delta, alpha)?
    } else {
        f64::INFINITY
    };

    Ok(NafEstimate {
        k_hat,
        per_model,
        variant: opts.variant,
        n,
        delta: opts.delta,
        alpha,
        alpha_source: opts.alpha.describe(),
        m,
        half_width,
        seed: r.seed(),
        zero_density,
    })
}

/// Exact symmetric divergence between two models' sequence laws: the larger
/// of the two directed values. Finite in both directions whenever both
/// models have full support.
pub fn dpg_check(
    m_a: &dyn GenerativeModel,
    m_b: &dyn GenerativeModel,
    prompt: &[TokenId],
    length: usize,
    kind: DivergenceKind,
    cap: u64,
) -> Result<f64> {
    let forward = sequence_divergence_exact(m_a, m_b, prompt, length, kind, cap)?;
    let backward = sequence_divergence_exact(m_b, m_a, prompt, length, kind, cap)?;
    Ok(forward.max(backward))
}

/// One grid point of a sweep.
#[derive(Debug, Clone)]
pub struct SweepPoint<P> {
    pub parameter: P,
    pub estimate: NafEstimate,
}

/// Runs one audit per grid point, using common random numbers: every point
/// draws from the same per-sample streams of `r`, so differences between
/// points reflect the parameter, not sampling noise.
pub fn sweep<P, F>(
    grid: &[P],
    mut instance: F,
    prompt: &[TokenId],
    length: usize,
    opts: &AuditOptions,
    r: &RandomSource,
) -> Result<Vec<SweepPoint<P>>>
where
    P: Clone,
    F: FnMut(&P) -> Result<(crate::models::ModelRef, SafeModelSet)>,
{
    if grid.is_empty() {
        return Err(NafError::InvalidParameter("sweep grid is empty".into()));
    }
    let mut points = Vec::with_capacity(grid.len());
    for param in grid {
        let (p, safe) = instance(param)?;
        let estimate = mc_naf_estimate(p.as_ref(), &safe, prompt, length, opts, r)?;
        points.push(SweepPoint {
            parameter: param.clone(),
            estimate,
        });
    }
    Ok(points)
}

/// One point of an exact threshold sweep.
#[derive(Debug, Clone)]
pub struct KappaPoint {
    pub kappa: f64,
    /// Exact acceptance probability at this threshold.
    pub nu: f64,
    /// Exact max-divergence NAF level of the induced law against the safe
    /// set (enumeration, not the `κ + log(1/ν)` bound).
    pub k_exact: f64,
}

/// Enumerates the rejection sampler's induced law at each threshold and
/// reports its exact NAF level. Lowering the threshold tightens the
/// acceptance region but does not necessarily lower the exact level.
pub fn sweep_kappa_exact(
    p: &dyn GenerativeModel,
    safe: &SafeModelSet,
    grid: &[f64],
    prompt: &[TokenId],
    length: usize,
    cap: u64,
) -> Result<Vec<KappaPoint>> {
    use crate::divergence::sequence_log_law;
    use crate::protect::cp_kappa_induced_exact;

    if grid.is_empty() {
        return Err(NafError::InvalidParameter("sweep grid is empty".into()));
    }
    let mut points = Vec::with_capacity(grid.len());
    for &kappa in grid {
        let law = cp_kappa_induced_exact(p, safe, kappa, prompt, length, cap)?;
        let mut k_exact = f64::NEG_INFINITY;
        for (_, q) in safe.members() {
            let lq = sequence_log_law(q.as_ref(), prompt, length, cap)?;
            k_exact = k_exact.max(law.divergence_against(&lq, DivergenceKind::Max));
        }
        points.push(KappaPoint {
            kappa,
            nu: law.nu,
            k_exact,
        });
    }
    Ok(points)
}
