//! Privacy-style guarantees from neighboring corpora.
//!
//! Differentially-private generation asks how much a model's output law can
//! move when one training document changes. That is a symmetric, worst-case
//! statement over both directions, measured here exactly: train on a corpus
//! and on the same corpus minus one document, then take the larger of the
//! two directed divergences between the sequence laws.
//!
//! Randomized response mixes every step with the uniform law, which caps the
//! per-token ratio and visibly shrinks the gap between neighbors.
//!
//!     cargo run --example neighboring_corpora

use naf::audit::dpg_check;
use naf::divergence::DivergenceKind;
use naf::models::{randomized_response_wrap, train_ngram, Corpus};
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
    let full = Corpus::from_lines(&LINES)?;
    // The neighbor drops one document; both corpora share a vocabulary, so
    // the models stay directly comparable.
    let neighbor = full.subset(|doc| doc.source_id != 3)?;

    let m_full = train_ngram(&full, 2, 0.1)?.shared();
    let m_neighbor = train_ngram(&neighbor, 2, 0.1)?.shared();

    println!("symmetric divergence between neighbors (one document removed):");
    println!("{:>8} {:>12} {:>12}", "length", "max", "kl");
    for length in 1..=4 {
        let d_max = dpg_check(
            m_full.as_ref(),
            m_neighbor.as_ref(),
            &[],
            length,
            DivergenceKind::Max,
            DEFAULT_ENUMERATION_CAP,
        )?;
        let d_kl = dpg_check(
            m_full.as_ref(),
            m_neighbor.as_ref(),
            &[],
            length,
            DivergenceKind::Kl,
            DEFAULT_ENUMERATION_CAP,
        )?;
        println!("{length:>8} {d_max:>12.6} {d_kl:>12.6}");
    }

    println!("\nwith randomized response (lambda = 0.3) on both models:");
    let r_full = randomized_response_wrap(m_full, 0.3)?;
    let r_neighbor = randomized_response_wrap(m_neighbor, 0.3)?;
    println!("{:>8} {:>12} {:>12}", "length", "max", "kl");
    for length in 1..=4 {
        let d_max = dpg_check(
            r_full.as_ref(),
            r_neighbor.as_ref(),
            &[],
            length,
            DivergenceKind::Max,
            DEFAULT_ENUMERATION_CAP,
        )?;
        let d_kl = dpg_check(
            r_full.as_ref(),
            r_neighbor.as_ref(),
            &[],
            length,
            DivergenceKind::Kl,
            DEFAULT_ENUMERATION_CAP,
        )?;
        println!("{length:>8} {d_max:>12.6} {d_kl:>12.6}");
    }
    Ok(())
}
