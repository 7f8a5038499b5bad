//! Measuring regurgitation — and how protected decoding curbs it.
//!
//! A handful of documents are duplicated many times in a training corpus, so
//! an unprotected model learns to reproduce them verbatim. Each decoding
//! scheme is then prompted with the first tokens of every duplicated unit
//! and scored by the normalized edit distance between its continuation and
//! the true one: 0 means perfect regurgitation, 1 means nothing in common.
//!
//! The safe models are trained on the even- and odd-numbered halves, so any
//! single document is entirely absent from one of them.
//!
//!     cargo run --example memorization_experiment

use naf::memorization::{
    run_memorization_experiment, ExperimentConfig, SchemeKind, UnitSelection, HISTOGRAM_BINS,
};
use naf::models::Corpus;
use naf::rng::RandomSource;

/// Forty synthetic documents: each cycles through its own shuffled word
/// order, so bigram statistics differ per document and regurgitation is
/// detectable.
fn build_corpus() -> naf::error::Result<Corpus> {
    let words = ["amber", "basalt", "cedar", "delta", "ember", "fjord", "grove", "harbor"];
    let mut r = RandomSource::new(9).derive("corpus");
    let mut lines = Vec::new();
    for _ in 0..40 {
        let mut perm: Vec<&str> = words.to_vec();
        // Fisher-Yates with the library's own deterministic source.
        for i in (1..perm.len()).rev() {
            let j = (r.next_uniform() * (i + 1) as f64) as usize;
            perm.swap(i, j.min(i));
        }
        let line: Vec<&str> = (0..24).map(|i| perm[i % perm.len()]).collect();
        lines.push(line.join(" "));
    }
    Corpus::from_lines(&lines)
}

fn bar(count: u32) -> String {
    "#".repeat(count as usize)
}

fn main() -> naf::error::Result<()> {
    let corpus = build_corpus()?;
    let config = ExperimentConfig {
        units: UnitSelection::Random(3),
        copies: 45,
        order: 2,
        smoothing: 0.05,
        prompt_len: 8,
        gen_len: 10,
        schemes: SchemeKind::ALL.to_vec(),
        kappa: 5.0,
        max_attempts: 2000,
        sampled: false,
    };
    let report = run_memorization_experiment(&corpus, &config, &RandomSource::new(3))?;

    println!(
        "duplicated units {:?} ({} copies each), prompt {} tokens, scored over {}\n",
        report.duplicated_units, report.copies, report.prompt_len, report.gen_len
    );
    println!("mean normalized edit distance (higher = less regurgitation):");
    for outcome in &report.schemes {
        println!("  {:<14} {:.3}", outcome.scheme.name(), outcome.mean_distance);
    }

    println!("\ndistance histograms (bins of 0.05):");
    for outcome in &report.schemes {
        println!("  {}", outcome.scheme.name());
        for (i, &count) in outcome.histogram.iter().enumerate() {
            if count > 0 {
                let lo = i as f64 * 0.05;
                let hi = if i == HISTOGRAM_BINS - 1 { 1.0 } else { lo + 0.05 };
                println!("    [{lo:.2}, {hi:.2}) {}", bar(count));
            }
        }
    }

    println!("\nthe base scheme lands far closer to the originals than any");
    println!("protected scheme: duplication taught it the continuations, and");
    println!("the leave-half-out models veto them.");
    Ok(())
}
