//! Protected decoding with token-level combiners.
//!
//! Two safe models are merged token by token: the min combiner takes the
//! pointwise minimum of the two laws (bounding max divergence), the geo
//! combiner their geometric mean (bounding KL). Sampling from the combined
//! model is NAF-safe by construction — no rejection loop required.
//!
//!     cargo run --example protected_decoding

use naf::divergence::{cp_delta_bound, naf_check_exact, DivergenceKind};
use naf::models::{sample_sequence, train_ngram, Corpus};
use naf::protect::{cp_delta_model, SafeModelSet};
use naf::rng::RandomSource;
use naf::DEFAULT_ENUMERATION_CAP;

const LINES: [&str; 8] = [
    "the river runs to the sea",
    "a stone sits by the moon",
    "a bird flies over the sea",
    "the moon turns under the stone",
    "the stone turns by the river",
    "a bird sits under the moon",
    "the sea runs over the stone",
    "a moon flies to the sea",
];

fn main() -> naf::error::Result<()> {
    let corpus = Corpus::from_lines(&LINES)?;
    let vocab = corpus.vocab().clone();
    let (even, odd) = corpus.split_by_parity()?;
    let q1 = train_ngram(&even, 2, 0.1)?.shared();
    let q2 = train_ngram(&odd, 2, 0.1)?.shared();
    let safe = SafeModelSet::new(vec![("even".into(), q1.clone()), ("odd".into(), q2.clone())])?;

    // Token-level bounds at the sequence start: -log Z for the min combiner,
    // -2 log Z for the geometric one.
    let d1 = q1.next_distribution(&[])?;
    let d2 = q2.next_distribution(&[])?;
    println!(
        "first-step combiner bounds: min {:.6} (max divergence), geo {:.6} (kl)\n",
        cp_delta_bound(&d1, &d2, DivergenceKind::Max)?,
        cp_delta_bound(&d1, &d2, DivergenceKind::Kl)?,
    );

    for (name, kind, measure) in [
        ("min", DivergenceKind::Max, "max divergence"),
        ("geo", DivergenceKind::Kl, "kl divergence"),
    ] {
        let combined = cp_delta_model(q1.clone(), q2.clone(), kind)?;
        let exact = naf_check_exact(
            combined.as_ref(),
            &safe,
            &[],
            3,
            kind,
            DEFAULT_ENUMERATION_CAP,
        )?;
        println!("{name} combiner — exact {measure} vs both safe models at length 3: {exact:.6}");

        let mut r = RandomSource::new(7).derive(name);
        println!("  three samples:");
        for _ in 0..3 {
            let (tokens, logprob) = sample_sequence(combined.as_ref(), &[], 6, &mut r)?;
            println!("    {:<42} (log-prob {logprob:.3})", vocab.decode(&tokens));
        }
        println!();
    }

    println!("either combined model can be sampled or saved like any other model;");
    println!("its guarantee holds for every prompt and every continuation length.");
    Ok(())
}
