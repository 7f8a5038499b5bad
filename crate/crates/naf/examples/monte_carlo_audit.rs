//! Monte Carlo NAF audits with a certified error bar.
//!
//! When the sequence space is too large to enumerate, the level is estimated
//! by sampling from the audited model. The variance-reduced estimator stays
//! nonnegative; an empirical Bernstein bound turns the samples into a
//! half-width — but only when every sequence probability involved is known
//! to sit above a floor alpha. Randomized response supplies such a floor for
//! free: mixing every step with the uniform law keeps each of the models in
//! the audit above lambda/K per token.
//!
//!     cargo run --example monte_carlo_audit

use naf::audit::{mc_naf_estimate, AlphaSpec, AuditOptions, EstimatorVariant};
use naf::divergence::{naf_check_exact, DivergenceKind};
use naf::models::{randomized_response_wrap, train_ngram, Corpus};
use naf::protect::SafeModelSet;
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
    let (even, odd) = corpus.split_by_parity()?;
    let p = train_ngram(&corpus, 2, 0.1)?.shared();
    let safe = SafeModelSet::new(vec![
        ("even".into(), train_ngram(&even, 2, 0.1)?.shared()),
        ("odd".into(), train_ngram(&odd, 2, 0.1)?.shared()),
    ])?;
    let length = 4;

    // Small enough to enumerate, so the estimate can be judged.
    let exact = naf_check_exact(
        p.as_ref(),
        &safe,
        &[],
        length,
        DivergenceKind::Kl,
        DEFAULT_ENUMERATION_CAP,
    )?;
    println!("exact KL level at length {length}: {exact:.5}\n");

    // Without a floor the point estimate is fine but carries no error bar.
    let opts = AuditOptions {
        n: 20_000,
        variant: EstimatorVariant::VarianceReduced,
        delta: 0.05,
        alpha: AlphaSpec::Explicit(0.0),
        workers: 1,
    };
    let est = mc_naf_estimate(p.as_ref(), &safe, &[], length, &opts, &RandomSource::new(1))?;
    println!("raw model, no floor claimed:");
    println!("  k_hat      {:.5}   (error {:+.5})", est.k_hat, est.k_hat - exact);
    println!("  half-width {}      (alpha = 0 disclaims one)\n", est.half_width);

    // Randomized response on every model in the audit guarantees each token
    // probability is at least lambda/K, hence a sequence floor of
    // (lambda/K)^T — a certified half-width with no extra assumptions. The
    // floor must hold for the safe models too: the bound controls the
    // probability *ratios*, so a thin safe model is just as disqualifying as
    // a thin audited one.
    // The half-width's ln^2(m/alpha) factor grows quickly with length, so
    // certified audits favor shorter horizons; length 2 keeps the bar tight.
    let certified_length = 2;
    let lambda = 0.5;
    let mixed = randomized_response_wrap(p.clone(), lambda)?;
    let mixed_safe = SafeModelSet::new(
        safe.members()
            .iter()
            .map(|(id, q)| Ok((id.clone(), randomized_response_wrap(q.clone(), lambda)?)))
            .collect::<naf::error::Result<Vec<_>>>()?,
    )?;
    let opts = AuditOptions {
        n: 40_000,
        alpha: AlphaSpec::RandomizedResponse(lambda),
        ..opts
    };
    let est = mc_naf_estimate(
        mixed.as_ref(),
        &mixed_safe,
        &[],
        certified_length,
        &opts,
        &RandomSource::new(1),
    )?;
    let exact_mixed = naf_check_exact(
        mixed.as_ref(),
        &mixed_safe,
        &[],
        certified_length,
        DivergenceKind::Kl,
        DEFAULT_ENUMERATION_CAP,
    )?;
    println!(
        "randomized response lambda = {lambda} at length {certified_length}, floor {:.3e} ({}):",
        est.alpha, est.alpha_source
    );
    println!("  exact      {exact_mixed:.5}");
    println!("  k_hat      {:.5}   (error {:+.5})", est.k_hat, est.k_hat - exact_mixed);
    println!("  half-width {:.5}", est.half_width);
    println!(
        "  certified  k <= {:.5} with probability {:.0}%\n",
        est.k_hat + est.half_width,
        100.0 * (1.0 - est.delta)
    );

    // The two estimator variants agree in expectation; the reduced one has
    // less spread at equal sample count.
    for variant in [EstimatorVariant::Basic, EstimatorVariant::VarianceReduced] {
        let opts = AuditOptions {
            n: 400,
            variant,
            alpha: AlphaSpec::Explicit(0.0),
            ..opts
        };
        let mut values = Vec::new();
        for seed in 0..20 {
            let est =
                mc_naf_estimate(p.as_ref(), &safe, &[], length, &opts, &RandomSource::new(seed))?;
            values.push(est.k_hat);
        }
        let mean: f64 = values.iter().sum::<f64>() / values.len() as f64;
        let var: f64 =
            values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (values.len() - 1) as f64;
        println!(
            "{:<18} 20 audits of n=400: mean {mean:.5}, spread {:.6}",
            variant.name(),
            var.sqrt()
        );
    }
    Ok(())
}
