//! Randomized invariants over the public API, with shrinking on failure:
//! combiner validity, divergence ordering, the edit-distance metric axioms,
//! wrapper composition, binomial interval bracketing, and the model text
//! round trip.

use proptest::prelude::*;

use naf::dist::TokenDistribution;
use naf::divergence::{cp_delta_bound, vector_divergence, DivergenceKind};
use naf::format::{model_from_text, model_to_text};
use naf::memorization::{edit_distance, normalized_edit_distance};
use naf::models::{
    randomized_response_wrap, sequence_logprob, temperature_wrap, top_p_wrap, train_ngram, Corpus,
    IidModel,
};
use naf::protect::{clopper_pearson, cp_delta_combine};
use naf::vocab::TokenId;

fn normalized(raw: Vec<f64>) -> Vec<f64> {
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// Full-support probability vectors of a given width.
fn probs(k: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01..1.0f64, k).prop_map(normalized)
}

/// Same-width pairs across widths 2..=8.
fn prob_pairs() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2usize..=8).prop_flat_map(|k| (probs(k), probs(k)))
}

/// Short token strings over a tiny alphabet, empty allowed.
fn words(max_len: usize) -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(0u8..4, 0..=max_len)
}

proptest! {
    #[test]
    fn combiners_emit_valid_laws_below_their_bounds(
        (q1, q2) in prob_pairs(),
        kind in prop::sample::select(vec![DivergenceKind::Max, DivergenceKind::Kl]),
    ) {
        let d1 = TokenDistribution::from_probs(q1.clone()).unwrap();
        let d2 = TokenDistribution::from_probs(q2.clone()).unwrap();
        let combined = cp_delta_combine(&d1, &d2, kind).unwrap();

        let total: f64 = combined.probs().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-9, "combined law sums to {total}");
        prop_assert!(combined.probs().iter().all(|&p| p >= 0.0));

        let bound = cp_delta_bound(&d1, &d2, kind).unwrap();
        prop_assert!(bound >= -1e-12, "bound {bound} negative");
        let measure = match kind {
            DivergenceKind::Max => DivergenceKind::Max,
            _ => DivergenceKind::Kl,
        };
        for q in [&q1, &q2] {
            let d = vector_divergence(combined.probs(), q, measure);
            prop_assert!(d <= bound + 1e-9, "divergence {d} above bound {bound}");
        }
    }

    #[test]
    fn divergences_are_nonnegative_ordered_and_bounded((p, q) in prob_pairs()) {
        for kind in [
            DivergenceKind::Max,
            DivergenceKind::Kl,
            DivergenceKind::Tv,
            DivergenceKind::HellingerSq,
        ] {
            let same = vector_divergence(&p, &p, kind);
            prop_assert!(same.abs() < 1e-12, "self-divergence {same} under {kind:?}");
            prop_assert!(vector_divergence(&p, &q, kind) >= -1e-12);
        }
        let kl = vector_divergence(&p, &q, DivergenceKind::Kl);
        let max = vector_divergence(&p, &q, DivergenceKind::Max);
        prop_assert!(kl <= max + 1e-12, "KL {kl} exceeds max divergence {max}");

        let tv = vector_divergence(&p, &q, DivergenceKind::Tv);
        let h2 = vector_divergence(&p, &q, DivergenceKind::HellingerSq);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&tv));
        prop_assert!((0.0..=1.0 + 1e-12).contains(&h2));
    }

    #[test]
    fn edit_distance_satisfies_the_metric_axioms(
        a in words(10),
        b in words(10),
        c in words(10),
    ) {
        prop_assert_eq!(edit_distance(&a, &a), 0);
        prop_assert_eq!(edit_distance(&a, &b), edit_distance(&b, &a));
        prop_assert!(
            edit_distance(&a, &c) <= edit_distance(&a, &b) + edit_distance(&b, &c),
            "triangle inequality failed"
        );
        let d = edit_distance(&a, &b);
        prop_assert!(d >= a.len().abs_diff(b.len()));
        prop_assert!(d <= a.len().max(b.len()));

        if !a.is_empty() || !b.is_empty() {
            let norm = normalized_edit_distance(&a, &b).unwrap();
            prop_assert!((0.0..=1.0).contains(&norm));
        }
    }

    #[test]
    fn wrapped_models_stay_valid_and_preserve_structure(
        step in (2usize..=8).prop_flat_map(probs),
        tau in 0.25..8.0f64,
        top in 0.05..1.0f64,
        lambda in 0.0..1.0f64,
    ) {
        let k = step.len();
        let base = IidModel::shared(TokenDistribution::from_probs(step.clone()).unwrap());
        let base_argmax = base.next_distribution(&[]).unwrap().argmax();

        let heated = temperature_wrap(base.clone(), tau).unwrap();
        let heated_step = heated.next_distribution(&[]).unwrap();
        let total: f64 = heated_step.probs().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
        // Rescaling is monotone, so the mode survives heating.
        let peak = heated_step.probs().iter().cloned().fold(f64::MIN, f64::max);
        prop_assert!(heated_step.prob(base_argmax) >= peak * (1.0 - 1e-12));

        let truncated = top_p_wrap(base.clone(), top).unwrap();
        let truncated_step = truncated.next_distribution(&[]).unwrap();
        let total: f64 = truncated_step.probs().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
        // The nucleus always contains the mode.
        prop_assert!(truncated_step.prob(base_argmax) > 0.0);

        let mixed = randomized_response_wrap(base.clone(), lambda).unwrap();
        let mixed_step = mixed.next_distribution(&[]).unwrap();
        let floor = lambda / k as f64;
        for &p in mixed_step.probs() {
            prop_assert!(p >= floor - 1e-12, "probability {p} under the floor {floor}");
        }

        // Wrappers compose without invalidating the law.
        let stacked = top_p_wrap(
            temperature_wrap(randomized_response_wrap(base, lambda).unwrap(), tau).unwrap(),
            top,
        )
        .unwrap();
        let stacked_step = stacked.next_distribution(&[]).unwrap();
        let total: f64 = stacked_step.probs().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn binomial_interval_brackets_the_point_estimate(
        trials in 1u64..400,
        ratio in 0.0..=1.0f64,
        level in 0.5..0.999f64,
    ) {
        let successes = (ratio * trials as f64).round() as u64;
        let (lo, hi) = clopper_pearson(successes, trials, level).unwrap();
        let point = successes as f64 / trials as f64;
        prop_assert!((0.0..=1.0).contains(&lo));
        prop_assert!((0.0..=1.0).contains(&hi));
        prop_assert!(lo <= point + 1e-12, "lower end {lo} above the estimate {point}");
        prop_assert!(hi >= point - 1e-12, "upper end {hi} below the estimate {point}");
        if successes == 0 {
            prop_assert!(lo == 0.0);
        }
        if successes == trials {
            prop_assert!(hi == 1.0);
        }
    }

    #[test]
    fn model_text_round_trip_is_exact(
        lines in prop::collection::vec(
            prop::collection::vec(0usize..3, 1..6),
            2..6,
        ),
        order in 1usize..=2,
        smoothing in 0.05..1.0f64,
    ) {
        let alphabet = ["ash", "bay", "elm"];
        let rendered: Vec<String> = lines
            .iter()
            .map(|line| {
                line.iter()
                    .map(|&w| alphabet[w])
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .collect();
        let corpus = Corpus::from_lines(&rendered).unwrap();
        let model = train_ngram(&corpus, order, smoothing).unwrap();

        let text = model_to_text(&model);
        let reloaded = model_from_text(&text).unwrap();
        prop_assert_eq!(model_to_text(&reloaded), text, "second render differs");

        let probe: Vec<TokenId> = vec![TokenId::EOS];
        let a = sequence_logprob(&model, &[], &probe).unwrap();
        let b = sequence_logprob(&reloaded, &[], &probe).unwrap();
        prop_assert_eq!(a.to_bits(), b.to_bits(), "probe law changed across the round trip");
    }
}
