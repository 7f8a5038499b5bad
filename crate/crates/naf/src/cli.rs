//! Command-line surface. Every subcommand validates its inputs, runs one
//! library operation, and writes a single `naf-report/1` JSON document to
//! standard output. Wall-clock time goes to standard error so repeated runs
//! stay byte-identical on standard output.
//!
//! Exit codes: 0 success, 1 validation or usage error, 2 runtime error
//! (exhausted rejection sampling, enumeration over the cap, a violated
//! probability floor, and the other conditions the error type marks as
//! runtime).

use std::sync::Arc;
use std::time::Instant;

use clap::error::ErrorKind as ClapErrorKind;
use clap::{Args, Parser, Subcommand};

use crate::audit::{
    mc_naf_estimate, sweep, sweep_kappa_exact, AlphaSpec, AuditOptions, EstimatorVariant,
};
use crate::divergence::{log_law_divergence, sequence_log_law, DivergenceKind};
use crate::error::{NafError, Result};
use crate::format::{load_corpus, model_to_text, save_model};
use crate::memorization::{
    run_memorization_experiment, ExperimentConfig, SchemeKind, UnitSelection,
};
use crate::models::{sample_sequence, train_ngram, ModelRef, TableModel};
use crate::protect::{
    cp_delta_model, cp_delta_rejection_sample, cp_kappa_sample, estimate_nu, IndexPolicy,
    SafeModelSet,
};
use crate::report::{
    memorization_body, sha256_hex, EstimateBody, ExtReal, InputDigest, Invocation, ModelLevel,
    Report, ReportBody,
};
use crate::rng::RandomSource;
use crate::vocab::TokenSequence;
use crate::DEFAULT_ENUMERATION_CAP;

#[derive(Parser)]
#[command(
    name = "naf",
    version,
    about = "Implement, certify, and audit near access-freeness for token models",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a table model on a token corpus and write it to a file.
    Train(TrainArgs),
    /// Enumerate the exact NAF level of a model against safe models.
    Exact(ExactArgs),
    /// Monte Carlo NAF estimate with a Bernstein confidence half-width.
    Audit(AuditArgs),
    /// Protected decoding: sample from or certify a protection scheme.
    Protect(ProtectArgs),
    /// Audit a grid of temperatures or thresholds.
    Sweep(SweepArgs),
    /// Duplication memorization experiment with protected schemes.
    Memorize(MemorizeArgs),
    /// Exact symmetric divergence between two models' sequence laws.
    Dpg(DpgArgs),
}

#[derive(Args)]
struct TrainArgs {
    /// Corpus file: one document per line, whitespace-separated tokens.
    #[arg(long)]
    corpus: String,
    /// Context length of the trained model.
    #[arg(long, default_value_t = 2)]
    order: usize,
    /// Additive smoothing mass per predictable token.
    #[arg(long, default_value_t = 0.1)]
    smoothing: f64,
    /// Where to write the trained model.
    #[arg(long)]
    output: String,
}

#[derive(Args)]
struct ModelAndSafeArgs {
    /// Model under scrutiny.
    #[arg(long)]
    model: String,
    /// Safe model file; repeat for several.
    #[arg(long, required = true)]
    safe: Vec<String>,
    /// Prompt as whitespace-separated tokens (empty for none).
    #[arg(long, default_value = "")]
    prompt: String,
    /// Number of tokens generated after the prompt.
    #[arg(long)]
    length: usize,
}

#[derive(Args)]
struct ExactArgs {
    #[command(flatten)]
    common: ModelAndSafeArgs,
    /// Divergence: max, kl, tv, or h2.
    #[arg(long)]
    divergence: DivergenceKind,
    /// Largest sequence count the enumeration may visit.
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
    cap: u64,
}

#[derive(Args)]
struct AuditArgs {
    #[command(flatten)]
    common: ModelAndSafeArgs,
    /// Monte Carlo sample count.
    #[arg(long)]
    samples: u64,
    /// Failure probability of the confidence bound.
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    /// Probability floor: explicit:<v>, top-p:<p>, or rr:<lambda>.
    #[arg(long, default_value = "explicit:0")]
    alpha: AlphaSpec,
    /// Estimator: basic or variance-reduced.
    #[arg(long, default_value = "variance-reduced")]
    variant: EstimatorVariant,
    /// Worker threads (results are identical for every worker count).
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ProtectArgs {
    #[command(subcommand)]
    action: ProtectAction,
}

#[derive(Subcommand)]
enum ProtectAction {
    /// Generate one protected sequence.
    Sample(ProtectSampleArgs),
    /// Certify a rejection-sampling run: estimate the acceptance
    /// probability and the implied NAF bound.
    Certify(CertifyArgs),
}

#[derive(Args)]
struct ProtectSampleArgs {
    /// Scheme: cp-delta-min, cp-delta-geo, cp-kappa, rejection-min, or
    /// rejection-geo.
    #[arg(long)]
    mode: String,
    /// Model under scrutiny (cp-kappa only).
    #[arg(long)]
    model: Option<String>,
    /// Safe model file; repeat for several.
    #[arg(long, required = true)]
    safe: Vec<String>,
    #[arg(long, default_value = "")]
    prompt: String,
    #[arg(long)]
    length: usize,
    /// Acceptance threshold (rejection schemes).
    #[arg(long)]
    kappa: Option<f64>,
    /// Attempt budget before giving up.
    #[arg(long, default_value_t = 1000)]
    max_attempts: u64,
    /// Proposal index policy for rejection ensembling: fresh or fixed.
    #[arg(long, default_value = "fresh")]
    index_policy: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct CertifyArgs {
    #[command(flatten)]
    common: ModelAndSafeArgs,
    /// Acceptance threshold.
    #[arg(long)]
    kappa: f64,
    /// Independent acceptance trials.
    #[arg(long, default_value_t = 1000)]
    trials: u64,
    /// Confidence level of the acceptance-probability interval.
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: ModelAndSafeArgs,
    /// Swept parameter: temperature (Monte Carlo) or kappa (exact).
    #[arg(long)]
    parameter: String,
    /// Comma-separated grid values.
    #[arg(long)]
    grid: String,
    /// Monte Carlo sample count per point (temperature sweeps).
    #[arg(long, default_value_t = 1000)]
    samples: u64,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    #[arg(long, default_value = "explicit:0")]
    alpha: AlphaSpec,
    #[arg(long, default_value = "variance-reduced")]
    variant: EstimatorVariant,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Heat only the audited model, leaving safe models at temperature 1.
    #[arg(long, default_value_t = false)]
    fixed_safe: bool,
    /// Enumeration cap (kappa sweeps).
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
    cap: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct MemorizeArgs {
    /// Corpus file: one document per line.
    #[arg(long)]
    corpus: String,
    /// How many randomly chosen documents to duplicate.
    #[arg(long, default_value_t = 20)]
    duplicates: usize,
    /// Duplicate exactly these comma-separated document ids instead.
    #[arg(long)]
    units: Option<String>,
    /// Total copies of each duplicated document.
    #[arg(long, default_value_t = 40)]
    copies: usize,
    #[arg(long, default_value_t = 2)]
    order: usize,
    #[arg(long, default_value_t = 0.1)]
    smoothing: f64,
    /// Prompt tokens taken from each duplicated document.
    #[arg(long, default_value_t = 10)]
    prompt_len: usize,
    /// Tokens generated and scored.
    #[arg(long, default_value_t = 20)]
    gen_len: usize,
    /// Comma-separated schemes to score.
    #[arg(long, default_value = "base,cp-delta-min,cp-delta-geo,cp-kappa")]
    schemes: String,
    /// Acceptance threshold for the cp-kappa scheme.
    #[arg(long, default_value_t = 5.0)]
    kappa: f64,
    #[arg(long, default_value_t = 1000)]
    max_attempts: u64,
    /// Sample instead of greedy decoding for the single-model schemes.
    #[arg(long, default_value_t = false)]
    sampled: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct DpgArgs {
    /// First model of the neighboring pair.
    #[arg(long)]
    model_a: String,
    /// Second model of the neighboring pair.
    #[arg(long)]
    model_b: String,
    #[arg(long, default_value = "")]
    prompt: String,
    #[arg(long)]
    length: usize,
    /// Divergence: max, kl, tv, or h2.
    #[arg(long)]
    divergence: DivergenceKind,
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
    cap: u64,
}

/// Entry point for the binary: parses process arguments and runs.
pub fn run() -> i32 {
    let args: Vec<String> = std::env::args().skip(1).collect();
    run_with_args(&args)
}

/// Runs one invocation. `args` excludes the program name. Returns the
/// process exit code; the report (success or failure) goes to standard
/// output and timing to standard error.
pub fn run_with_args(args: &[String]) -> i32 {
    let mut argv = vec!["naf".to_string()];
    argv.extend_from_slice(args);
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ClapErrorKind::DisplayHelp | ClapErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };

    let started = Instant::now();
    let command_name = command_name(&cli.command);
    let mut loader = InputLoader::new(args.to_vec());
    let outcome = dispatch(cli.command, &mut loader);
    let invocation = loader.into_invocation();
    let report = match &outcome {
        Ok(body) => Report::success(command_name, invocation, body.clone()),
        Err(err) => Report::failure(command_name, invocation, err),
    };
    print!("{}", report.render());
    eprintln!(
        "wall-clock: {} ms",
        started.elapsed().as_millis()
    );
    match outcome {
        Ok(_) => 0,
        Err(err) => err.exit_code(),
    }
}

fn command_name(command: &Command) -> &'static str {
    match command {
        Command::Train(_) => "train",
        Command::Exact(_) => "exact",
        Command::Audit(_) => "audit",
        Command::Protect(p) => match p.action {
            ProtectAction::Sample(_) => "protect sample",
            ProtectAction::Certify(_) => "protect certify",
        },
        Command::Sweep(_) => "sweep",
        Command::Memorize(_) => "memorize",
        Command::Dpg(_) => "dpg",
    }
}

/// Loads input files, recording a digest of every byte read so the report
/// can prove which inputs the run saw.
struct InputLoader {
    argv: Vec<String>,
    seed: Option<u64>,
    inputs: Vec<InputDigest>,
}

impl InputLoader {
    fn new(argv: Vec<String>) -> Self {
        InputLoader {
            argv,
            seed: None,
            inputs: Vec::new(),
        }
    }

    fn record_seed(&mut self, seed: u64) {
        self.seed = Some(seed);
    }

    fn model(&mut self, role: &str, path: &str) -> Result<TableModel> {
        let bytes = std::fs::read(path)?;
        self.inputs.push(InputDigest {
            role: role.to_string(),
            path: path.to_string(),
            sha256: sha256_hex(&bytes),
        });
        let text = String::from_utf8(bytes).map_err(|_| NafError::FormatError {
            line: 0,
            message: format!("{path} is not UTF-8 text"),
        })?;
        crate::format::model_from_text(&text)
    }

    fn corpus(&mut self, path: &str) -> Result<crate::models::Corpus> {
        let bytes = std::fs::read(path)?;
        self.inputs.push(InputDigest {
            role: "corpus".to_string(),
            path: path.to_string(),
            sha256: sha256_hex(&bytes),
        });
        drop(bytes);
        load_corpus(path)
    }

    fn into_invocation(self) -> Invocation {
        Invocation {
            argv: self.argv,
            seed: self.seed,
            inputs: self.inputs,
        }
    }
}

fn dispatch(command: Command, loader: &mut InputLoader) -> Result<ReportBody> {
    match command {
        Command::Train(args) => run_train(args, loader),
        Command::Exact(args) => run_exact(args, loader),
        Command::Audit(args) => run_audit(args, loader),
        Command::Protect(args) => match args.action {
            ProtectAction::Sample(args) => run_protect_sample(args, loader),
            ProtectAction::Certify(args) => run_certify(args, loader),
        },
        Command::Sweep(args) => run_sweep(args, loader),
        Command::Memorize(args) => run_memorize(args, loader),
        Command::Dpg(args) => run_dpg(args, loader),
    }
}

/// The audited model plus its safe set, loaded and vocabulary-checked.
struct LoadedInstance {
    model: TableModel,
    safe: SafeModelSet,
    prompt: TokenSequence,
}

fn load_instance(loader: &mut InputLoader, common: &ModelAndSafeArgs) -> Result<LoadedInstance> {
    let model = loader.model("model", &common.model)?;
    let mut members = Vec::with_capacity(common.safe.len());
    for path in &common.safe {
        let safe_model = loader.model("safe", path)?;
        if safe_model.vocab() != model.vocab() {
            return Err(NafError::VocabularyMismatch(format!(
                "safe model {path} was trained on a different vocabulary"
            )));
        }
        members.push((path.clone(), safe_model.shared()));
    }
    let safe = SafeModelSet::new(members)?;
    let prompt = model.vocab().encode_line(&common.prompt);
    Ok(LoadedInstance {
        model,
        safe,
        prompt,
    })
}

fn run_train(args: TrainArgs, loader: &mut InputLoader) -> Result<ReportBody> {
    let corpus = loader.corpus(&args.corpus)?;
    let model = train_ngram(&corpus, args.order, args.smoothing)?;
    let text = model_to_text(&model);
    save_model(&model, &args.output)?;
    Ok(ReportBody::Train {
        output: args.output,
        documents: corpus.len(),
        vocab: corpus.vocab().len(),
        order: args.order,
        smoothing: args.smoothing,
        contexts: model.context_count(),
        sha256: sha256_hex(text.as_bytes()),
    })
}

fn run_exact(args: ExactArgs, loader: &mut InputLoader) -> Result<ReportBody> {
    let inst = load_instance(loader, &args.common)?;
    let lp = sequence_log_law(&inst.model, &inst.prompt, args.common.length, args.cap)?;
    let mut per_model = Vec::with_capacity(inst.safe.len());
    let mut k_x = f64::NEG_INFINITY;
    for (id, q) in inst.safe.members() {
        let lq = sequence_log_law(q.as_ref(), &inst.prompt, args.common.length, args.cap)?;
        let value = log_law_divergence(&lp, &lq, args.divergence);
        k_x = k_x.max(value);
        per_model.push(ModelLevel {
            id: id.clone(),
            value: value.into(),
        });
    }
    Ok(ReportBody::Exact {
        divergence: args.divergence.name(),
        length: args.common.length,
        k_x: k_x.into(),
        per_model,
    })
}

fn run_audit(args: AuditArgs, loader: &mut InputLoader) -> Result<ReportBody> {
    loader.record_seed(args.seed);
    let inst = load_instance(loader, &args.common)?;
    let opts = AuditOptions {
        n: args.samples,
        variant: args.variant,
        delta: args.delta,
        alpha: args.alpha,
        workers: args.workers,
    };
    let r = RandomSource::new(args.seed);
    let estimate = mc_naf_estimate(
        &inst.model,
        &inst.safe,
        &inst.prompt,
        args.common.length,
        &opts,
        &r,
    )?;
    Ok(ReportBody::Estimate(EstimateBody::from(&estimate)))
}

fn parse_index_policy(name: &str) -> Result<IndexPolicy> {
    match name {
        "fresh" => Ok(IndexPolicy::FreshPerIteration),
        "fixed" => Ok(IndexPolicy::FixedPerCall),
        other => Err(NafError::InvalidParameter(format!(
            "unknown index policy {other:?} (expected fresh or fixed)"
        ))),
    }
}

const SAMPLE_MODES: [&str; 5] = [
    "cp-delta-min",
    "cp-delta-geo",
    "cp-kappa",
    "rejection-min",
    "rejection-geo",
];

fn run_protect_sample(args: ProtectSampleArgs, loader: &mut InputLoader) -> Result<ReportBody> {
    loader.record_seed(args.seed);
    let mut r = RandomSource::new(args.seed);

    if !SAMPLE_MODES.contains(&args.mode.as_str()) {
        return Err(NafError::InvalidParameter(format!(
            "unknown mode {:?} (expected one of {})",
            args.mode,
            SAMPLE_MODES.join(", ")
        )));
    }
    let needs_model = args.mode == "cp-kappa";
    if needs_model && args.model.is_none() {
        return Err(NafError::InvalidParameter(
            "mode cp-kappa requires --model".into(),
        ));
    }
    if !needs_model && args.model.is_some() {
        return Err(NafError::InvalidParameter(format!(
            "mode {} combines the safe models; it does not take --model",
            args.mode
        )));
    }
    if matches!(args.mode.as_str(), "cp-delta-min" | "cp-delta-geo") && args.kappa.is_some() {
        return Err(NafError::InvalidParameter(format!(
            "mode {} has no threshold; drop --kappa",
            args.mode
        )));
    }

    let mut members = Vec::with_capacity(args.safe.len());
    let mut vocab: Option<Arc<crate::vocab::Vocabulary>> = None;
    for path in &args.safe {
        let m = loader.model("safe", path)?;
        match &vocab {
            Some(v) if m.vocab() != v => {
                return Err(NafError::VocabularyMismatch(format!(
                    "safe model {path} was trained on a different vocabulary"
                )));
            }
            Some(_) => {}
            None => vocab = Some(Arc::clone(m.vocab())),
        }
        members.push((path.clone(), m.shared()));
    }
    let vocab = vocab.expect("at least one safe model is required");
    let safe = SafeModelSet::new(members)?;
    let prompt = vocab.encode_line(&args.prompt);

    let (scheme, kappa, tokens, attempts) = match args.mode.as_str() {
        "cp-delta-min" | "cp-delta-geo" => {
            if args.safe.len() != 2 {
                return Err(NafError::InvalidParameter(format!(
                    "mode {} needs exactly two --safe models, got {}",
                    args.mode,
                    args.safe.len()
                )));
            }
            let kind = if args.mode == "cp-delta-min" {
                DivergenceKind::Max
            } else {
                DivergenceKind::Kl
            };
            let q1 = Arc::clone(&safe.members()[0].1);
            let q2 = Arc::clone(&safe.members()[1].1);
            let combined = cp_delta_model(q1, q2, kind)?;
            let (y, _) = sample_sequence(combined.as_ref(), &prompt, args.length, &mut r)?;
            (args.mode.clone(), None, y, 1)
        }
        "cp-kappa" => {
            let kappa = args.kappa.ok_or_else(|| {
                NafError::InvalidParameter("mode cp-kappa requires --kappa".into())
            })?;
            let model = loader.model("model", args.model.as_deref().unwrap())?;
            if model.vocab() != &vocab {
                return Err(NafError::VocabularyMismatch(
                    "--model was trained on a different vocabulary than the safe set".into(),
                ));
            }
            let (y, attempts) = cp_kappa_sample(
                &model,
                &safe,
                kappa,
                &prompt,
                args.length,
                &mut r,
                args.max_attempts,
            )?;
            (args.mode.clone(), Some(kappa), y, attempts)
        }
        "rejection-min" | "rejection-geo" => {
            if args.safe.len() != 2 {
                return Err(NafError::InvalidParameter(format!(
                    "mode {} needs exactly two --safe models, got {}",
                    args.mode,
                    args.safe.len()
                )));
            }
            let kappa = args.kappa.unwrap_or(0.0);
            let policy = parse_index_policy(&args.index_policy)?;
            let kind = if args.mode == "rejection-min" {
                DivergenceKind::Max
            } else {
                DivergenceKind::Kl
            };
            let (y, attempts) = cp_delta_rejection_sample(
                safe.members()[0].1.as_ref(),
                safe.members()[1].1.as_ref(),
                kind,
                kappa,
                &prompt,
                args.length,
                &mut r,
                args.max_attempts,
                policy,
            )?;
            (args.mode.clone(), Some(kappa), y, attempts)
        }
        _ => unreachable!("mode validated above"),
    };

    let token_strings: Vec<String> = tokens
        .iter()
        .map(|&t| vocab.token(t).unwrap_or(crate::vocab::UNK_TOKEN).to_string())
        .collect();
    let text = vocab.decode(&tokens);
    Ok(ReportBody::Sample {
        scheme,
        kappa,
        attempts,
        tokens: token_strings,
        text,
    })
}

fn run_certify(args: CertifyArgs, loader: &mut InputLoader) -> Result<ReportBody> {
    loader.record_seed(args.seed);
    let inst = load_instance(loader, &args.common)?;
    let r = RandomSource::new(args.seed);
    let cert = estimate_nu(
        &inst.model,
        &inst.safe,
        args.kappa,
        &inst.prompt,
        args.common.length,
        args.trials,
        args.level,
        &r,
    )?;
    Ok(ReportBody::from(&cert))
}

fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let values: std::result::Result<Vec<f64>, _> =
        text.split(',').map(|v| v.trim().parse::<f64>()).collect();
    let values = values.map_err(|_| {
        NafError::InvalidParameter(format!("grid {text:?} is not a comma-separated number list"))
    })?;
    if values.is_empty() {
        return Err(NafError::InvalidParameter("sweep grid is empty".into()));
    }
    Ok(values)
}

fn run_sweep(args: SweepArgs, loader: &mut InputLoader) -> Result<ReportBody> {
    loader.record_seed(args.seed);
    let inst = load_instance(loader, &args.common)?;
    let grid = parse_grid(&args.grid)?;
    let r = RandomSource::new(args.seed);
    match args.parameter.as_str() {
        "temperature" => {
            let opts = AuditOptions {
                n: args.samples,
                variant: args.variant,
                delta: args.delta,
                alpha: args.alpha,
                workers: args.workers,
            };
            let base: ModelRef = inst.model.shared();
            let points = sweep(
                &grid,
                |&tau| {
                    let heated = crate::models::temperature_wrap(Arc::clone(&base), tau)?;
                    let members = inst
                        .safe
                        .members()
                        .iter()
                        .map(|(id, q)| {
                            let member = if args.fixed_safe {
                                Arc::clone(q)
                            } else {
                                crate::models::temperature_wrap(Arc::clone(q), tau)?
                            };
                            Ok((id.clone(), member))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    Ok((heated, SafeModelSet::new(members)?))
                },
                &inst.prompt,
                args.common.length,
                &opts,
                &r,
            )?;
            Ok(ReportBody::Sweep {
                parameter: "temperature",
                points: points.iter().map(Into::into).collect(),
            })
        }
        "kappa" => {
            let points = sweep_kappa_exact(
                &inst.model,
                &inst.safe,
                &grid,
                &inst.prompt,
                args.common.length,
                args.cap,
            )?;
            Ok(ReportBody::KappaSweep {
                parameter: "kappa",
                points: points.iter().map(Into::into).collect(),
            })
        }
        other => Err(NafError::InvalidParameter(format!(
            "unknown sweep parameter {other:?} (expected temperature or kappa)"
        ))),
    }
}

fn run_memorize(args: MemorizeArgs, loader: &mut InputLoader) -> Result<ReportBody> {
    loader.record_seed(args.seed);
    let corpus = loader.corpus(&args.corpus)?;
    let schemes: Result<Vec<SchemeKind>> = args
        .schemes
        .split(',')
        .map(|s| s.trim().parse::<SchemeKind>())
        .collect();
    let units = match &args.units {
        Some(list) => {
            let ids: std::result::Result<Vec<usize>, _> =
                list.split(',').map(|v| v.trim().parse::<usize>()).collect();
            UnitSelection::Explicit(ids.map_err(|_| {
                NafError::InvalidParameter(format!(
                    "unit list {list:?} is not a comma-separated id list"
                ))
            })?)
        }
        None => UnitSelection::Random(args.duplicates),
    };
    let config = ExperimentConfig {
        units,
        copies: args.copies,
        order: args.order,
        smoothing: args.smoothing,
        prompt_len: args.prompt_len,
        gen_len: args.gen_len,
        schemes: schemes?,
        kappa: args.kappa,
        max_attempts: args.max_attempts,
        sampled: args.sampled,
    };
    let r = RandomSource::new(args.seed);
    let report = run_memorization_experiment(&corpus, &config, &r)?;
    let vocab = Arc::clone(corpus.vocab());
    Ok(ReportBody::Memorization(memorization_body(
        &report,
        |tokens| vocab.decode(tokens),
    )))
}

fn run_dpg(args: DpgArgs, loader: &mut InputLoader) -> Result<ReportBody> {
    let a = loader.model("model-a", &args.model_a)?;
    let b = loader.model("model-b", &args.model_b)?;
    if a.vocab() != b.vocab() {
        return Err(NafError::VocabularyMismatch(
            "the two models were trained on different vocabularies".into(),
        ));
    }
    let prompt = a.vocab().encode_line(&args.prompt);
    let value = crate::audit::dpg_check(&a, &b, &prompt, args.length, args.divergence, args.cap)?;
    Ok(ReportBody::Dpg {
        divergence: args.divergence.name(),
        length: args.length,
        value: ExtReal(value),
    })
}
