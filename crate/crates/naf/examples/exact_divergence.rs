//! Exact NAF levels by enumeration.
//!
//! Trains a model on a small corpus, trains two "safe" models on the even-
//! and odd-numbered halves (so each half never saw the other half's
//! documents), then enumerates every possible continuation to compute the
//! exact divergence between the full model and each safe model.
//!
//!     cargo run --example exact_divergence

use naf::divergence::{naf_check_exact, sequence_divergence_exact, DivergenceKind};
use naf::models::{train_ngram, Corpus};
use naf::protect::SafeModelSet;
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
    let (even, odd) = corpus.split_by_parity()?;

    let p = train_ngram(&corpus, 2, 0.1)?.shared();
    let q_even = train_ngram(&even, 2, 0.1)?.shared();
    let q_odd = train_ngram(&odd, 2, 0.1)?.shared();
    let safe = SafeModelSet::new(vec![
        ("leave-odd-out".into(), q_even.clone()),
        ("leave-even-out".into(), q_odd.clone()),
    ])?;

    println!(
        "corpus: {} documents, vocabulary {} tokens\n",
        corpus.len(),
        corpus.vocab().len()
    );
    println!("exact NAF level k_x = max_j divergence(p || q_j), empty prompt:");
    println!("{:>8} {:>14} {:>14}", "length", "max", "kl");
    for length in 1..=4 {
        let k_max = naf_check_exact(
            p.as_ref(),
            &safe,
            &[],
            length,
            DivergenceKind::Max,
            DEFAULT_ENUMERATION_CAP,
        )?;
        let k_kl = naf_check_exact(
            p.as_ref(),
            &safe,
            &[],
            length,
            DivergenceKind::Kl,
            DEFAULT_ENUMERATION_CAP,
        )?;
        println!("{length:>8} {k_max:>14.6} {k_kl:>14.6}");
    }

    println!("\nper-safe-model max divergence at length 3:");
    for (id, q) in safe.members() {
        let d = sequence_divergence_exact(
            p.as_ref(),
            q.as_ref(),
            &[],
            3,
            DivergenceKind::Max,
            DEFAULT_ENUMERATION_CAP,
        )?;
        println!("  {id:<16} {d:.6}");
    }

    println!("\nthe full model leans toward whichever half a sequence came from,");
    println!("so its distance to the *other* half's model sets the NAF level.");
    Ok(())
}
