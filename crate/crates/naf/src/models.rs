//! Generative models: the model interface, n-gram table models, decoding
//! wrappers (temperature, top-p, randomized response), and sequence sampling.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::dist::TokenDistribution;
use crate::error::{NafError, Result};
use crate::rng::RandomSource;
use crate::vocab::{TokenId, TokenSequence, Vocabulary};
use crate::MAX_SEQUENCE_LEN;

/// An autoregressive generative model over a fixed vocabulary.
///
/// `context` is the prompt followed by everything generated so far; models
/// that condition on a bounded window truncate it themselves. Implementations
/// must be pure: identical context, identical distribution.
pub trait GenerativeModel: Send + Sync {
    /// Vocabulary size K. Every emitted distribution has this length.
    fn vocab_size(&self) -> usize;

    /// Number of trailing context tokens the model actually reads.
    fn context_order(&self) -> usize;

    /// Next-token distribution given the full context.
    fn next_distribution(&self, context: &[TokenId]) -> Result<TokenDistribution>;
}

/// Shared handle to a model.
pub type ModelRef = Arc<dyn GenerativeModel>;

/// Checks that two models can be compared or combined.
pub fn check_same_vocab(a: &dyn GenerativeModel, b: &dyn GenerativeModel) -> Result<()> {
    if a.vocab_size() != b.vocab_size() {
        return Err(NafError::VocabularyMismatch(format!(
            "vocabulary sizes {} and {} differ",
            a.vocab_size(),
            b.vocab_size()
        )));
    }
    Ok(())
}

/// A model that emits the same distribution at every step.
///
/// The workhorse for small exact fixtures: it needs no vocabulary object, so
/// two-token instances can be written directly as probability vectors.
#[derive(Debug, Clone)]
pub struct IidModel {
    step: TokenDistribution,
}

impl IidModel {
    pub fn new(step: TokenDistribution) -> Self {
        IidModel { step }
    }

    pub fn shared(step: TokenDistribution) -> ModelRef {
        Arc::new(IidModel::new(step))
    }
}

impl GenerativeModel for IidModel {
    fn vocab_size(&self) -> usize {
        self.step.len()
    }

    fn context_order(&self) -> usize {
        0
    }

    fn next_distribution(&self, _context: &[TokenId]) -> Result<TokenDistribution> {
        Ok(self.step.clone())
    }
}

/// A document with its source id (position in the original corpus).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub source_id: usize,
    pub tokens: TokenSequence,
}

/// A tokenized training corpus with a shared vocabulary.
#[derive(Debug, Clone)]
pub struct Corpus {
    vocab: Arc<Vocabulary>,
    documents: Vec<Document>,
}

impl Corpus {
    pub fn new(vocab: Arc<Vocabulary>, documents: Vec<Document>) -> Result<Self> {
        if documents.is_empty() {
            return Err(NafError::EmptyCorpus);
        }
        for doc in &documents {
            for &id in &doc.tokens {
                if id.index() >= vocab.len() {
                    return Err(NafError::InvalidParameter(format!(
                        "document {} contains out-of-vocabulary id {id}",
                        doc.source_id
                    )));
                }
                if !vocab.is_predictable(id) {
                    return Err(NafError::InvalidParameter(format!(
                        "document {} contains marker token id {id}",
                        doc.source_id
                    )));
                }
            }
        }
        Ok(Corpus { vocab, documents })
    }

    /// Builds a corpus from raw lines: whitespace tokenization, one document
    /// per line, vocabulary = all distinct words in sorted order.
    ///
    /// A leading `<bos>` or trailing `<eos>` on a line is accepted and
    /// dropped (training adds the padding itself); markers anywhere else are
    /// rejected.
    pub fn from_lines<S: AsRef<str>>(lines: &[S]) -> Result<Self> {
        use crate::vocab::{BOS_TOKEN, EOS_TOKEN, UNK_TOKEN};
        if lines.is_empty() {
            return Err(NafError::EmptyCorpus);
        }
        let mut stripped: Vec<Vec<&str>> = Vec::with_capacity(lines.len());
        let mut words: Vec<&str> = Vec::new();
        for (lineno, line) in lines.iter().enumerate() {
            let mut tokens: Vec<&str> = line.as_ref().split_whitespace().collect();
            while tokens.first() == Some(&BOS_TOKEN) {
                tokens.remove(0);
            }
            while tokens.last() == Some(&EOS_TOKEN) {
                tokens.pop();
            }
            for &t in &tokens {
                if t == BOS_TOKEN || t == EOS_TOKEN || t == UNK_TOKEN {
                    return Err(NafError::FormatError {
                        line: lineno + 1,
                        message: format!("marker token {t:?} in document body"),
                    });
                }
                words.push(t);
            }
            stripped.push(tokens);
        }
        words.sort_unstable();
        words.dedup();
        let vocab = Arc::new(Vocabulary::from_tokens(words)?);
        let documents = stripped
            .into_iter()
            .enumerate()
            .map(|(i, tokens)| Document {
                source_id: i,
                tokens: tokens
                    .into_iter()
                    .map(|t| vocab.id(t).expect("word was added to the vocabulary"))
                    .collect(),
            })
            .collect();
        Ok(Corpus { vocab, documents })
    }

    pub fn vocab(&self) -> &Arc<Vocabulary> {
        &self.vocab
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    /// Sub-corpus of the documents matching a predicate, sharing the
    /// vocabulary.
    pub fn subset<F: Fn(&Document) -> bool>(&self, keep: F) -> Result<Corpus> {
        Corpus::new(
            Arc::clone(&self.vocab),
            self.documents.iter().filter(|d| keep(d)).cloned().collect(),
        )
    }

    /// Splits into the documents with even and odd source ids. Copies of a
    /// document share its source id, so they all land in the same half.
    pub fn split_by_parity(&self) -> Result<(Corpus, Corpus)> {
        Ok((
            self.subset(|d| d.source_id % 2 == 0)?,
            self.subset(|d| d.source_id % 2 == 1)?,
        ))
    }
}

/// An n-gram model backed by an explicit context table.
///
/// Contexts are the most recent `order` tokens (left-padded with the begin
/// marker); unseen contexts fall back to a stored unigram distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct TableModel {
    vocab: Arc<Vocabulary>,
    order: usize,
    table: BTreeMap<Vec<TokenId>, TokenDistribution>,
    backoff: TokenDistribution,
}

impl TableModel {
    /// Assembles a model from parts, validating shapes.
    pub fn from_parts(
        vocab: Arc<Vocabulary>,
        order: usize,
        backoff: TokenDistribution,
        table: BTreeMap<Vec<TokenId>, TokenDistribution>,
    ) -> Result<Self> {
        let k = vocab.len();
        if backoff.len() != k {
            return Err(NafError::InvalidParameter(format!(
                "backoff has {} entries, vocabulary has {k}",
                backoff.len()
            )));
        }
        for (ctx, dist) in &table {
            if ctx.len() != order {
                return Err(NafError::InvalidParameter(format!(
                    "context key length {} does not match order {order}",
                    ctx.len()
                )));
            }
            if ctx.iter().any(|id| id.index() >= k) {
                return Err(NafError::InvalidParameter(
                    "context key contains out-of-vocabulary id".into(),
                ));
            }
            if dist.len() != k {
                return Err(NafError::InvalidParameter(format!(
                    "table row has {} entries, vocabulary has {k}",
                    dist.len()
                )));
            }
        }
        Ok(TableModel {
            vocab,
            order,
            table,
            backoff,
        })
    }

    pub fn vocab(&self) -> &Arc<Vocabulary> {
        &self.vocab
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn backoff(&self) -> &TokenDistribution {
        &self.backoff
    }

    pub fn contexts(&self) -> impl Iterator<Item = (&Vec<TokenId>, &TokenDistribution)> {
        self.table.iter()
    }

    pub fn context_count(&self) -> usize {
        self.table.len()
    }

    /// The stored key for a raw context: last `order` ids, left-padded with
    /// the begin marker.
    fn key_for(&self, context: &[TokenId]) -> Vec<TokenId> {
        let mut key = Vec::with_capacity(self.order);
        if context.len() >= self.order {
            key.extend_from_slice(&context[context.len() - self.order..]);
        } else {
            key.extend(std::iter::repeat_n(TokenId::BOS, self.order - context.len()));
            key.extend_from_slice(context);
        }
        key
    }

    pub fn shared(self) -> ModelRef {
        Arc::new(self)
    }
}

impl GenerativeModel for TableModel {
    fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    fn context_order(&self) -> usize {
        self.order
    }

    fn next_distribution(&self, context: &[TokenId]) -> Result<TokenDistribution> {
        let key = self.key_for(context);
        Ok(self
            .table
            .get(&key)
            .cloned()
            .unwrap_or_else(|| self.backoff.clone()))
    }
}

/// Trains an n-gram table model with additive smoothing.
///
/// Each document is padded with `order` begin markers and one end marker.
/// For every observed context, `P(t | ctx) = (count(ctx, t) + smoothing) /
/// (total(ctx) + smoothing · K_pred)` over the predictable tokens (everything
/// except the begin and unknown markers). The backoff distribution is the
/// smoothed unigram over all padded-target occurrences.
pub fn train_ngram(corpus: &Corpus, order: usize, smoothing: f64) -> Result<TableModel> {
    if order < 1 {
        return Err(NafError::InvalidParameter(
            "n-gram order must be at least 1".into(),
        ));
    }
    if !smoothing.is_finite() || smoothing < 0.0 {
        return Err(NafError::InvalidParameter(format!(
            "smoothing must be finite and non-negative, got {smoothing}"
        )));
    }
    if corpus.is_empty() {
        return Err(NafError::EmptyCorpus);
    }

    let vocab = Arc::clone(corpus.vocab());
    let k = vocab.len();
    let predictable: Vec<usize> = (0..k)
        .filter(|&i| vocab.is_predictable(TokenId(i as u32)))
        .collect();
    let k_pred = predictable.len() as f64;

    let mut counts: BTreeMap<Vec<TokenId>, Vec<u64>> = BTreeMap::new();
    let mut unigram = vec![0u64; k];
    for doc in corpus.documents() {
        let mut padded = Vec::with_capacity(order + doc.tokens.len() + 1);
        padded.extend(std::iter::repeat_n(TokenId::BOS, order));
        padded.extend_from_slice(&doc.tokens);
        padded.push(TokenId::EOS);
        for i in order..padded.len() {
            let ctx = padded[i - order..i].to_vec();
            let target = padded[i].index();
            counts.entry(ctx).or_insert_with(|| vec![0u64; k])[target] += 1;
            unigram[target] += 1;
        }
    }

    let smooth = |row: &[u64]| -> TokenDistribution {
        let total: u64 = row.iter().sum();
        let denom = total as f64 + smoothing * k_pred;
        let mut probs = vec![0.0; k];
        for &i in &predictable {
            probs[i] = (row[i] as f64 + smoothing) / denom;
        }
        TokenDistribution::normalize(&probs).expect("counts plus smoothing are positive")
    };

    let backoff = smooth(&unigram);
    let table: BTreeMap<Vec<TokenId>, TokenDistribution> = counts
        .iter()
        .map(|(ctx, row)| (ctx.clone(), smooth(row)))
        .collect();
    TableModel::from_parts(vocab, order, backoff, table)
}

struct TemperatureModel {
    inner: ModelRef,
    tau: f64,
}

impl GenerativeModel for TemperatureModel {
    fn vocab_size(&self) -> usize {
        self.inner.vocab_size()
    }

    fn context_order(&self) -> usize {
        self.inner.context_order()
    }

    fn next_distribution(&self, context: &[TokenId]) -> Result<TokenDistribution> {
        let base = self.inner.next_distribution(context)?;
        if self.tau == 1.0 {
            return Ok(base);
        }
        let weights: Vec<f64> = base
            .probs()
            .iter()
            .map(|&p| if p > 0.0 { (p.ln() / self.tau).exp() } else { 0.0 })
            .collect();
        TokenDistribution::normalize(&weights)
    }
}

/// Rescales every step's probabilities to `p^(1/τ)`, renormalized.
///
/// τ > 1 flattens toward uniform over the support; τ < 1 sharpens. Zero
/// entries stay zero, and τ = 1 passes distributions through unchanged.
pub fn temperature_wrap(m: ModelRef, tau: f64) -> Result<ModelRef> {
    if !tau.is_finite() || tau <= 0.0 {
        return Err(NafError::InvalidParameter(format!(
            "temperature must be finite and positive, got {tau}"
        )));
    }
    Ok(Arc::new(TemperatureModel { inner: m, tau }))
}

struct TopPModel {
    inner: ModelRef,
    p: f64,
}

impl GenerativeModel for TopPModel {
    fn vocab_size(&self) -> usize {
        self.inner.vocab_size()
    }

    fn context_order(&self) -> usize {
        self.inner.context_order()
    }

    fn next_distribution(&self, context: &[TokenId]) -> Result<TokenDistribution> {
        let base = self.inner.next_distribution(context)?;
        let mut order: Vec<usize> = (0..base.len()).collect();
        // Descending by probability, ties broken by ascending token id.
        order.sort_by(|&a, &b| {
            base.probs()[b]
                .partial_cmp(&base.probs()[a])
                .expect("probabilities are finite")
                .then(a.cmp(&b))
        });
        let mut weights = vec![0.0; base.len()];
        let mut cum = 0.0;
        for &i in &order {
            weights[i] = base.probs()[i];
            cum += base.probs()[i];
            if cum >= self.p - 1e-12 {
                break;
            }
        }
        TokenDistribution::normalize(&weights)
    }
}

/// Nucleus (top-p) truncation: keeps the smallest high-probability prefix
/// with cumulative mass ≥ p, zeroes the rest, renormalizes.
///
/// Sorting ties break by ascending token id, so the kept set is exact and
/// reproducible; every kept token has original probability ≥ (1−p)/K, which
/// is what makes the top-p sequence-probability floor valid.
pub fn top_p_wrap(m: ModelRef, p: f64) -> Result<ModelRef> {
    if !p.is_finite() || p <= 0.0 || p > 1.0 {
        return Err(NafError::InvalidParameter(format!(
            "top-p mass must lie in (0, 1], got {p}"
        )));
    }
    Ok(Arc::new(TopPModel { inner: m, p }))
}

struct RandomizedResponseModel {
    inner: ModelRef,
    lambda: f64,
}

impl GenerativeModel for RandomizedResponseModel {
    fn vocab_size(&self) -> usize {
        self.inner.vocab_size()
    }

    fn context_order(&self) -> usize {
        self.inner.context_order()
    }

    fn next_distribution(&self, context: &[TokenId]) -> Result<TokenDistribution> {
        let base = self.inner.next_distribution(context)?;
        let k = base.len() as f64;
        let floor = self.lambda / k;
        let probs: Vec<f64> = base
            .probs()
            .iter()
            .map(|&p| (1.0 - self.lambda) * p + floor)
            .collect();
        TokenDistribution::from_probs(probs)
    }
}

/// Randomized response: mixes every step with the uniform distribution,
/// `(1−λ)·p + λ·uniform(K)`, so each token keeps probability ≥ λ/K and every
/// length-T sequence has probability ≥ (λ/K)^T.
pub fn randomized_response_wrap(m: ModelRef, lambda: f64) -> Result<ModelRef> {
    if !lambda.is_finite() || !(0.0..=1.0).contains(&lambda) {
        return Err(NafError::InvalidParameter(format!(
            "randomized-response weight must lie in [0, 1], got {lambda}"
        )));
    }
    Ok(Arc::new(RandomizedResponseModel { inner: m, lambda }))
}

fn check_length(length: usize) -> Result<()> {
    if length > MAX_SEQUENCE_LEN {
        return Err(NafError::InvalidParameter(format!(
            "sequence length {length} exceeds the cap {MAX_SEQUENCE_LEN}"
        )));
    }
    Ok(())
}

/// Log-probability (natural log) the model assigns to continuation `y` after
/// `prompt`. Returns `-inf` if any step has probability zero.
pub fn sequence_logprob(
    m: &dyn GenerativeModel,
    prompt: &[TokenId],
    y: &[TokenId],
) -> Result<f64> {
    let mut context = prompt.to_vec();
    let mut total = 0.0;
    for &t in y {
        let d = m.next_distribution(&context)?;
        total += d.log_prob(t);
        context.push(t);
        if total == f64::NEG_INFINITY {
            // The remaining factors cannot lift a zero; stop touching the
            // model so zero-probability prefixes never trigger step errors.
            return Ok(f64::NEG_INFINITY);
        }
    }
    Ok(total)
}

/// Samples exactly `length` tokens autoregressively (the end marker does not
/// truncate). Returns the continuation and its log-probability, which equals
/// `sequence_logprob` of the result.
pub fn sample_sequence(
    m: &dyn GenerativeModel,
    prompt: &[TokenId],
    length: usize,
    r: &mut RandomSource,
) -> Result<(TokenSequence, f64)> {
    check_length(length)?;
    let mut context = prompt.to_vec();
    let mut logprob = 0.0;
    for _ in 0..length {
        let d = m.next_distribution(&context)?;
        let t = d.sample(r);
        logprob += d.log_prob(t);
        context.push(t);
    }
    Ok((context[prompt.len()..].to_vec(), logprob))
}

/// Greedy (argmax) decoding of exactly `length` tokens; ties resolve to the
/// smallest token id. Deterministic.
pub fn greedy_sequence(
    m: &dyn GenerativeModel,
    prompt: &[TokenId],
    length: usize,
) -> Result<(TokenSequence, f64)> {
    check_length(length)?;
    let mut context = prompt.to_vec();
    let mut logprob = 0.0;
    for _ in 0..length {
        let d = m.next_distribution(&context)?;
        let t = d.argmax();
        logprob += d.log_prob(t);
        context.push(t);
    }
    Ok((context[prompt.len()..].to_vec(), logprob))
}
