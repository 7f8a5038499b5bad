//! Near access-freeness (NAF) auditing and protected decoding for
//! autoregressive generative models.
//!
//! A model `p` is k_x-NAF on prompt `x` with respect to a set of safe models
//! `{q_1, …, q_m}` when `Δ(p(·|x) ‖ q_j(·|x)) ≤ k_x` for every `j`, where `Δ`
//! is a divergence over the sequence distributions. This crate provides:
//!
//! - exact divergence oracles (max, KL, total variation, squared Hellinger)
//!   at token and sequence level via full enumeration;
//! - protected decoding: per-token ensembling of two safe models (min or
//!   geometric-mean combiner) with closed-form NAF bounds, and rejection
//!   sampling against a whole safe set with a certified `κ + log(1/ν)` bound;
//! - Monte Carlo NAF estimation with a variance-reduced estimator and an
//!   empirical-Bernstein confidence half-width;
//! - a desk-scale memorization harness over n-gram models: duplicate
//!   documents, train leave-half-out safe models, and score normalized edit
//!   distance of completions.
//!
//! Everything randomized draws from seeded, labeled [`rng::RandomSource`]
//! streams, so every audit and report is reproducible bit-for-bit.

pub mod audit;
pub mod cli;
pub mod dist;
pub mod divergence;
pub mod error;
pub mod format;
pub mod memorization;
pub mod models;
pub mod protect;
pub mod report;
pub mod rng;
pub mod vocab;

/// Hard cap on generated or scored sequence lengths.
pub const MAX_SEQUENCE_LEN: usize = 1024;

/// Default cap on the number of sequences an exact enumeration may visit.
pub const DEFAULT_ENUMERATION_CAP: u64 = 1_000_000;
