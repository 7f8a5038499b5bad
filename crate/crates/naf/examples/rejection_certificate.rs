//! Certifying a rejection sampler.
//!
//! The kappa scheme samples from the model under scrutiny and accepts only
//! when every safe model agrees the draw is unsurprising — the log ratio
//! stays at or below kappa. Its NAF level is bounded by kappa + log(1/nu),
//! where nu is the acceptance probability, and nu can be *estimated* from
//! independent trials with an exact binomial interval — giving a certificate
//! that needs no enumeration.
//!
//! Here the instance is small enough to enumerate, so the certificate is
//! compared against ground truth. Note the exact level exceeds kappa itself:
//! conditioning on acceptance concentrates mass where a safe model is thin.
//!
//!     cargo run --example rejection_certificate

use naf::dist::TokenDistribution;
use naf::divergence::{sequence_log_law, DivergenceKind};
use naf::models::{IidModel, ModelRef};
use naf::protect::{cp_kappa_induced_exact, cp_kappa_sample, estimate_nu, SafeModelSet};
use naf::rng::RandomSource;
use naf::DEFAULT_ENUMERATION_CAP;

fn iid(probs: &[f64]) -> ModelRef {
    IidModel::shared(TokenDistribution::from_probs(probs.to_vec()).expect("valid law"))
}

fn main() -> naf::error::Result<()> {
    // One step over three outcomes; the third is where both safe models
    // place little mass but the scrutinized model does not.
    let p = iid(&[0.4, 0.4, 0.2]);
    let safe = SafeModelSet::new(vec![
        ("q1".into(), iid(&[0.8, 0.15, 0.05])),
        ("q2".into(), iid(&[0.15, 0.8, 0.05])),
    ])?;
    let kappa = 1.0;
    let length = 1;

    // Ground truth by enumeration.
    let law = cp_kappa_induced_exact(p.as_ref(), &safe, kappa, &[], length, DEFAULT_ENUMERATION_CAP)?;
    let mut exact_level = f64::NEG_INFINITY;
    for (_, q) in safe.members() {
        let q_law = sequence_log_law(q.as_ref(), &[], length, DEFAULT_ENUMERATION_CAP)?;
        exact_level = exact_level.max(law.divergence_against(&q_law, DivergenceKind::Max));
    }
    println!("exact acceptance probability nu = {:.4}", law.nu);
    println!("exact NAF level of the induced law = {exact_level:.4}");
    println!("note: the level exceeds kappa = {kappa} — acceptance conditioning is not free\n");

    // The certificate: estimate nu from independent trials, lower-bound it
    // with a Clopper-Pearson interval, and report kappa + log(1/nu_lo).
    let r = RandomSource::new(42);
    let cert = estimate_nu(p.as_ref(), &safe, kappa, &[], length, 2000, 0.95, &r)?;
    println!("certificate from {} trials at level {}:", cert.trials, cert.level);
    println!("  accepted   {}", cert.accepted);
    println!("  nu_hat     {:.4}", cert.nu_hat);
    println!("  nu in      [{:.4}, {:.4}]", cert.nu_lo, cert.nu_hi);
    println!("  NAF bound  {:.4}  (= kappa + log(1/nu_lo))", cert.bound);
    assert!(cert.bound >= exact_level, "a valid certificate covers the truth");

    // Drawing protected samples records how many attempts each one took.
    let mut r = RandomSource::new(7).derive("samples");
    println!("\nfive protected draws (outcome index, attempts):");
    for _ in 0..5 {
        let (tokens, attempts) =
            cp_kappa_sample(p.as_ref(), &safe, kappa, &[], length, &mut r, 1000)?;
        println!("  outcome {:?}, attempts {attempts}", tokens[0].index());
    }
    Ok(())
}
