//! Desk-scale memorization experiment: duplicate training units, train a
//! base model on everything and two safe models on disjoint halves, generate
//! continuations of the duplicated units under several decoding schemes, and
//! score them by normalized edit distance to the true continuations.

use std::str::FromStr;
use std::sync::Arc;

use crate::divergence::DivergenceKind;
use crate::error::{NafError, Result};
use crate::models::{
    greedy_sequence, sample_sequence, train_ngram, Corpus, Document, ModelRef,
};
use crate::protect::{cp_delta_model, cp_kappa_sample, SafeModelSet};
use crate::rng::RandomSource;
use crate::vocab::TokenSequence;

/// Number of histogram bins over [0, 1] at 0.05 increments.
pub const HISTOGRAM_BINS: usize = 20;

/// Minimum edit (Levenshtein) distance between two sequences: insertions,
/// deletions, and substitutions all cost one.
pub fn edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0usize; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let substitute = prev[j] + usize::from(x != y);
            cur[j + 1] = substitute.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Edit distance scaled by the longer length, so the score lies in [0, 1]:
/// 0 for identical sequences, 1 for completely disjoint ones.
pub fn normalized_edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> Result<f64> {
    let denom = a.len().max(b.len());
    if denom == 0 {
        return Err(NafError::BothEmpty);
    }
    Ok(edit_distance(a, b) as f64 / denom as f64)
}

/// Appends `times − 1` extra copies of each selected document. Copies keep
/// the original document's source id, so later lookups can group a unit's
/// copies.
pub fn duplicate_corpus(corpus: &Corpus, doc_ids: &[usize], times: usize) -> Result<Corpus> {
    if times < 1 {
        return Err(NafError::InvalidParameter(
            "duplication count must be at least 1".into(),
        ));
    }
    for (i, &id) in doc_ids.iter().enumerate() {
        if id >= corpus.len() {
            return Err(NafError::UnknownDocId(id));
        }
        if doc_ids[..i].contains(&id) {
            return Err(NafError::InvalidParameter(format!(
                "document id {id} selected twice for duplication"
            )));
        }
    }
    let mut documents: Vec<Document> = corpus.documents().to_vec();
    for &id in doc_ids {
        let original = corpus.documents()[id].clone();
        for _ in 1..times {
            documents.push(original.clone());
        }
    }
    Corpus::new(Arc::clone(corpus.vocab()), documents)
}

/// Decoding schemes scored by the experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeKind {
    /// The base model trained on the full duplicated corpus.
    Base,
    /// Min combiner of the two half-trained safe models.
    CpDeltaMin,
    /// Geometric-mean combiner of the two half-trained safe models.
    CpDeltaGeo,
    /// Rejection sampling from the base model against both safe models.
    CpKappa,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 4] = [
        SchemeKind::Base,
        SchemeKind::CpDeltaMin,
        SchemeKind::CpDeltaGeo,
        SchemeKind::CpKappa,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Base => "base",
            SchemeKind::CpDeltaMin => "cp-delta-min",
            SchemeKind::CpDeltaGeo => "cp-delta-geo",
            SchemeKind::CpKappa => "cp-kappa",
        }
    }
}

impl std::fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeKind {
    type Err = NafError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "base" => Ok(SchemeKind::Base),
            "cp-delta-min" => Ok(SchemeKind::CpDeltaMin),
            "cp-delta-geo" => Ok(SchemeKind::CpDeltaGeo),
            "cp-kappa" => Ok(SchemeKind::CpKappa),
            other => Err(NafError::InvalidParameter(format!(
                "unknown scheme {other:?} (expected base, cp-delta-min, cp-delta-geo, or cp-kappa)"
            ))),
        }
    }
}

/// Which documents to duplicate.
#[derive(Debug, Clone)]
pub enum UnitSelection {
    /// Duplicate exactly these document ids.
    Explicit(Vec<usize>),
    /// Draw this many distinct document ids from the random source's
    /// `select-units` stream.
    Random(usize),
}

/// Experiment configuration.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub units: UnitSelection,
    /// Total copies of each duplicated unit in the training corpus.
    pub copies: usize,
    /// Model context order for all three trained models.
    pub order: usize,
    /// Additive smoothing for all three trained models.
    pub smoothing: f64,
    /// Tokens of each duplicated unit used as the prompt.
    pub prompt_len: usize,
    /// Tokens generated and scored against the true continuation.
    pub gen_len: usize,
    pub schemes: Vec<SchemeKind>,
    /// Acceptance threshold for the cp-kappa scheme.
    pub kappa: f64,
    /// Attempt budget per cp-kappa generation.
    pub max_attempts: u64,
    /// Sample the single-model schemes instead of greedy decoding.
    /// The cp-kappa scheme always samples.
    pub sampled: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            units: UnitSelection::Random(20),
            copies: 40,
            order: 2,
            smoothing: 0.1,
            prompt_len: 10,
            gen_len: 20,
            schemes: SchemeKind::ALL.to_vec(),
            kappa: 5.0,
            max_attempts: 1000,
            sampled: false,
        }
    }
}

/// One duplicated unit's outcome under one scheme.
#[derive(Debug, Clone)]
pub struct UnitOutcome {
    pub unit_id: usize,
    pub prompt: TokenSequence,
    pub reference: TokenSequence,
    pub generated: TokenSequence,
    pub distance: f64,
}

/// All outcomes for one scheme, with distribution summaries.
#[derive(Debug, Clone)]
pub struct SchemeOutcome {
    pub scheme: SchemeKind,
    pub units: Vec<UnitOutcome>,
    /// Counts over [0, 1] in 0.05-wide bins; the final bin is closed.
    pub histogram: [u32; HISTOGRAM_BINS],
    pub mean_distance: f64,
}

/// Full experiment result.
#[derive(Debug, Clone)]
pub struct MemorizationReport {
    pub duplicated_units: Vec<usize>,
    pub copies: usize,
    pub order: usize,
    pub smoothing: f64,
    pub prompt_len: usize,
    pub gen_len: usize,
    pub seed: u64,
    pub schemes: Vec<SchemeOutcome>,
}

fn histogram_bin(distance: f64) -> usize {
    // 0.05-wide bins; 1.0 lands in the final bin.
    ((distance / 0.05) as usize).min(HISTOGRAM_BINS - 1)
}

fn select_units(corpus: &Corpus, selection: &UnitSelection, r: &RandomSource) -> Result<Vec<usize>> {
    match selection {
        UnitSelection::Explicit(ids) => {
            for &id in ids {
                if id >= corpus.len() {
                    return Err(NafError::UnknownDocId(id));
                }
            }
            Ok(ids.clone())
        }
        UnitSelection::Random(count) => {
            if *count == 0 || *count > corpus.len() {
                return Err(NafError::InvalidParameter(format!(
                    "cannot duplicate {count} of {} documents",
                    corpus.len()
                )));
            }
            // Partial Fisher–Yates over the document ids.
            let mut stream = r.derive("select-units");
            let mut ids: Vec<usize> = (0..corpus.len()).collect();
            for i in 0..*count {
                let remaining = ids.len() - i;
                let j = i + (stream.next_uniform() * remaining as f64) as usize;
                let j = j.min(ids.len() - 1);
                ids.swap(i, j);
            }
            ids.truncate(*count);
            Ok(ids)
        }
    }
}

/// Runs the duplication experiment.
///
/// The duplicated corpus is split into halves by source-document parity, so
/// every copy of a duplicated unit lands in exactly one half: the model
/// trained on the other half never saw that unit and is safe with respect to
/// it. The base model trains on the whole duplicated corpus. Each scheme is
/// prompted with the first `prompt_len` tokens of every duplicated unit and
/// its continuation is scored against the unit's true next `gen_len` tokens.
pub fn run_memorization_experiment(
    corpus: &Corpus,
    config: &ExperimentConfig,
    r: &RandomSource,
) -> Result<MemorizationReport> {
    if config.gen_len == 0 {
        return Err(NafError::DocumentTooShort(
            "generation length 0 leaves nothing to score".into(),
        ));
    }
    if config.schemes.is_empty() {
        return Err(NafError::InvalidParameter(
            "at least one scheme is required".into(),
        ));
    }
    let unit_ids = select_units(corpus, &config.units, r)?;
    let need = config.prompt_len + config.gen_len;
    for &id in &unit_ids {
        let len = corpus.documents()[id].tokens.len();
        if len < need {
            return Err(NafError::DocumentTooShort(format!(
                "document {id} has {len} tokens but prompting needs {need}"
            )));
        }
    }

    let duplicated = duplicate_corpus(corpus, &unit_ids, config.copies)?;
    let (even_half, odd_half) = duplicated.split_by_parity()?;
    let base = train_ngram(&duplicated, config.order, config.smoothing)?.shared();
    let q1 = train_ngram(&even_half, config.order, config.smoothing)?.shared();
    let q2 = train_ngram(&odd_half, config.order, config.smoothing)?.shared();

    let min_model = cp_delta_model(Arc::clone(&q1), Arc::clone(&q2), DivergenceKind::Max)?;
    let geo_model = cp_delta_model(Arc::clone(&q1), Arc::clone(&q2), DivergenceKind::Kl)?;
    let safe = SafeModelSet::new(vec![
        ("half-even".into(), Arc::clone(&q1)),
        ("half-odd".into(), Arc::clone(&q2)),
    ])?;

    let mut schemes = Vec::with_capacity(config.schemes.len());
    for &scheme in &config.schemes {
        let mut units = Vec::with_capacity(unit_ids.len());
        let mut histogram = [0u32; HISTOGRAM_BINS];
        let mut total = 0.0f64;
        for &id in &unit_ids {
            let tokens = &corpus.documents()[id].tokens;
            let prompt = tokens[..config.prompt_len].to_vec();
            let reference = tokens[config.prompt_len..need].to_vec();
            let mut stream = r.derive(&format!("unit-{id}/{}", scheme.name()));
            let generated = match scheme {
                SchemeKind::CpKappa => {
                    let (y, _) = cp_kappa_sample(
                        base.as_ref(),
                        &safe,
                        config.kappa,
                        &prompt,
                        config.gen_len,
                        &mut stream,
                        config.max_attempts,
                    )?;
                    y
                }
                _ => {
                    let model: &ModelRef = match scheme {
                        SchemeKind::Base => &base,
                        SchemeKind::CpDeltaMin => &min_model,
                        SchemeKind::CpDeltaGeo => &geo_model,
                        SchemeKind::CpKappa => unreachable!(),
                    };
                    if config.sampled {
                        sample_sequence(model.as_ref(), &prompt, config.gen_len, &mut stream)?.0
                    } else {
                        greedy_sequence(model.as_ref(), &prompt, config.gen_len)?.0
                    }
                }
            };
            let distance = normalized_edit_distance(&generated, &reference)?;
            histogram[histogram_bin(distance)] += 1;
            total += distance;
            units.push(UnitOutcome {
                unit_id: id,
                prompt,
                reference,
                generated,
                distance,
            });
        }
        schemes.push(SchemeOutcome {
            scheme,
            mean_distance: total / units.len() as f64,
            histogram,
            units,
        });
    }

    Ok(MemorizationReport {
        duplicated_units: unit_ids,
        copies: config.copies,
        order: config.order,
        smoothing: config.smoothing,
        prompt_len: config.prompt_len,
        gen_len: config.gen_len,
        seed: r.seed(),
        schemes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chars(s: &str) -> Vec<char> {
        s.chars().collect()
    }

    #[test]
    fn edit_distance_classic_fixture() {
        assert_eq!(edit_distance(&chars("kitten"), &chars("sitting")), 3);
        assert_eq!(edit_distance(&chars("abc"), &chars("abc")), 0);
        assert_eq!(edit_distance(&chars(""), &chars("abcd")), 4);
        assert_eq!(edit_distance(&chars("abcd"), &chars("")), 4);
    }

    #[test]
    fn normalized_distance_fixture() {
        let d = normalized_edit_distance(&chars("kitten"), &chars("sitting")).unwrap();
        assert!((d - 3.0 / 7.0).abs() < 1e-15);
        assert_eq!(normalized_edit_distance(&chars("xy"), &chars("xy")).unwrap(), 0.0);
        assert_eq!(normalized_edit_distance(&chars("ab"), &chars("cd")).unwrap(), 1.0);
        assert!(matches!(
            normalized_edit_distance::<char>(&[], &[]),
            Err(NafError::BothEmpty)
        ));
    }

    #[test]
    fn edit_distance_is_a_metric() {
        let mut r = RandomSource::new(3);
        let rand_seq = |r: &mut RandomSource| -> Vec<u8> {
            let len = (r.next_uniform() * 8.0) as usize;
            (0..len).map(|_| (r.next_uniform() * 3.0) as u8).collect()
        };
        for _ in 0..1000 {
            let (a, b, c) = (rand_seq(&mut r), rand_seq(&mut r), rand_seq(&mut r));
            let ab = edit_distance(&a, &b);
            let ba = edit_distance(&b, &a);
            assert_eq!(ab, ba, "symmetry on {a:?} {b:?}");
            let ac = edit_distance(&a, &c);
            let cb = edit_distance(&c, &b);
            assert!(ab <= ac + cb, "triangle on {a:?} {b:?} {c:?}");
            assert_eq!(edit_distance(&a, &a), 0);
        }
    }

    fn toy_corpus(docs: usize, len: usize) -> Corpus {
        // Each document cycles through its own permutation of six words, so
        // within a document every bigram has a unique successor (the cycle
        // period exceeds the model order); different documents disagree
        // about successors, which makes the two training halves diverge.
        let words = ["red", "blue", "green", "stone", "river", "moon"];
        let mut lines = Vec::with_capacity(docs);
        for d in 0..docs {
            let mut perm: Vec<&str> = words.to_vec();
            let mut state = 0x9e3779b97f4a7c15u64 ^ (d as u64).wrapping_mul(0xbf58476d1ce4e5b9);
            for i in (1..perm.len()).rev() {
                state = state
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                let j = ((state >> 33) as usize) % (i + 1);
                perm.swap(i, j);
            }
            let toks: Vec<&str> = (0..len).map(|i| perm[i % perm.len()]).collect();
            lines.push(toks.join(" "));
        }
        Corpus::from_lines(&lines).unwrap()
    }

    #[test]
    fn duplication_appends_copies_with_source_ids() {
        let corpus = toy_corpus(5, 8);
        let dup = duplicate_corpus(&corpus, &[1, 3], 4).unwrap();
        assert_eq!(dup.len(), 5 + 2 * 3);
        let copies: Vec<usize> = dup.documents()[5..].iter().map(|d| d.source_id).collect();
        assert_eq!(copies, vec![1, 1, 1, 3, 3, 3]);
        assert_eq!(dup.documents()[5].tokens, dup.documents()[1].tokens);
    }

    #[test]
    fn duplication_times_one_is_identity() {
        let corpus = toy_corpus(4, 6);
        let dup = duplicate_corpus(&corpus, &[0, 2], 1).unwrap();
        assert_eq!(dup.len(), corpus.len());
    }

    #[test]
    fn duplication_validates_ids() {
        let corpus = toy_corpus(4, 6);
        assert!(matches!(
            duplicate_corpus(&corpus, &[9], 2),
            Err(NafError::UnknownDocId(9))
        ));
        assert!(duplicate_corpus(&corpus, &[1, 1], 2).is_err());
    }

    #[test]
    fn halves_are_disjoint_by_unit() {
        let corpus = toy_corpus(6, 8);
        let dup = duplicate_corpus(&corpus, &[2, 3], 5).unwrap();
        let (even, odd) = dup.split_by_parity().unwrap();
        assert!(even.documents().iter().all(|d| d.source_id % 2 == 0));
        assert!(odd.documents().iter().all(|d| d.source_id % 2 == 1));
        assert_eq!(even.len() + odd.len(), dup.len());
        // All copies of unit 2 are in the even half, unit 3 in the odd half.
        assert_eq!(even.documents().iter().filter(|d| d.source_id == 2).count(), 5);
        assert_eq!(odd.documents().iter().filter(|d| d.source_id == 3).count(), 5);
    }

    #[test]
    fn zero_generation_length_is_rejected_up_front() {
        let corpus = toy_corpus(6, 12);
        let config = ExperimentConfig {
            gen_len: 0,
            ..ExperimentConfig::default()
        };
        let r = RandomSource::new(1);
        assert!(matches!(
            run_memorization_experiment(&corpus, &config, &r),
            Err(NafError::DocumentTooShort(_))
        ));
    }

    #[test]
    fn short_documents_are_rejected_with_the_unit_named() {
        let corpus = toy_corpus(6, 12);
        let config = ExperimentConfig {
            units: UnitSelection::Explicit(vec![1]),
            prompt_len: 10,
            gen_len: 20,
            ..ExperimentConfig::default()
        };
        let r = RandomSource::new(1);
        let err = run_memorization_experiment(&corpus, &config, &r).unwrap_err();
        match err {
            NafError::DocumentTooShort(msg) => assert!(msg.contains("document 1")),
            other => panic!("unexpected error {other:?}"),
        }
    }

    fn small_config(units: Vec<usize>) -> ExperimentConfig {
        ExperimentConfig {
            units: UnitSelection::Explicit(units),
            copies: 30,
            order: 2,
            smoothing: 0.05,
            prompt_len: 4,
            gen_len: 6,
            schemes: SchemeKind::ALL.to_vec(),
            kappa: 8.0,
            max_attempts: 2000,
            sampled: false,
        }
    }

    #[test]
    fn base_scheme_memorizes_heavily_duplicated_units_without_smoothing() {
        let corpus = toy_corpus(8, 16);
        let mut config = small_config(vec![2]);
        config.smoothing = 0.0;
        config.schemes = vec![SchemeKind::Base];
        let r = RandomSource::new(5);
        let report = run_memorization_experiment(&corpus, &config, &r).unwrap();
        let base = &report.schemes[0];
        assert_eq!(base.scheme, SchemeKind::Base);
        assert_eq!(base.units[0].distance, 0.0, "duplicated unit not regurgitated");
        assert_eq!(base.mean_distance, 0.0);
        assert_eq!(base.histogram[0], 1);
    }

    #[test]
    fn protected_schemes_raise_distance_on_duplicated_units() {
        let corpus = toy_corpus(10, 16);
        let config = small_config(vec![2, 5]);
        let r = RandomSource::new(7);
        let report = run_memorization_experiment(&corpus, &config, &r).unwrap();
        let mean = |kind: SchemeKind| {
            report
                .schemes
                .iter()
                .find(|s| s.scheme == kind)
                .map(|s| s.mean_distance)
                .unwrap()
        };
        let base = mean(SchemeKind::Base);
        for kind in [SchemeKind::CpDeltaMin, SchemeKind::CpDeltaGeo, SchemeKind::CpKappa] {
            assert!(
                mean(kind) >= base,
                "{kind} mean {} below base {base}",
                mean(kind)
            );
        }
    }

    #[test]
    fn distances_are_normalized_and_binned() {
        let corpus = toy_corpus(10, 16);
        let config = small_config(vec![1, 4, 7]);
        let r = RandomSource::new(11);
        let report = run_memorization_experiment(&corpus, &config, &r).unwrap();
        for scheme in &report.schemes {
            let mut binned = 0u32;
            for unit in &scheme.units {
                assert!((0.0..=1.0).contains(&unit.distance));
                assert_eq!(unit.generated.len(), config.gen_len);
                assert_eq!(unit.reference.len(), config.gen_len);
            }
            for &count in &scheme.histogram {
                binned += count;
            }
            assert_eq!(binned as usize, scheme.units.len());
        }
    }

    #[test]
    fn histogram_bins_are_five_percent_wide() {
        assert_eq!(histogram_bin(0.0), 0);
        assert_eq!(histogram_bin(0.049), 0);
        assert_eq!(histogram_bin(0.05), 1);
        assert_eq!(histogram_bin(0.51), 10);
        assert_eq!(histogram_bin(0.999), 19);
        assert_eq!(histogram_bin(1.0), 19);
    }

    #[test]
    fn random_unit_selection_is_reproducible_and_distinct() {
        let corpus = toy_corpus(30, 4);
        let r = RandomSource::new(17);
        let a = select_units(&corpus, &UnitSelection::Random(10), &r).unwrap();
        let b = select_units(&corpus, &UnitSelection::Random(10), &r).unwrap();
        assert_eq!(a, b);
        let mut sorted = a.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 10, "selected ids must be distinct");
        assert!(sorted.iter().all(|&id| id < 30));
    }
}
