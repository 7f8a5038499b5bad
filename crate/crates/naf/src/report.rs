//! Machine-readable run reports: a single JSON document per invocation,
//! format tag `naf-report/1`. Reports echo the full invocation (arguments,
//! seed, input digests) so any run can be reproduced, and serialize
//! deterministically: the same invocation yields byte-identical output.

use serde::{Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::audit::{KappaPoint, NafEstimate, SweepPoint};
use crate::error::NafError;
use crate::memorization::MemorizationReport;
use crate::protect::ProtectionCertificate;

/// Format tag of every report.
pub const REPORT_FORMAT: &str = "naf-report/1";

/// A real number that may be infinite. Serializes finite values as JSON
/// numbers and infinities as the strings `"inf"` / `"-inf"`, which plain
/// JSON cannot express as numbers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtReal(pub f64);

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0 == f64::INFINITY {
            serializer.serialize_str("inf")
        } else if self.0 == f64::NEG_INFINITY {
            serializer.serialize_str("-inf")
        } else {
            serializer.serialize_f64(self.0)
        }
    }
}

impl From<f64> for ExtReal {
    fn from(v: f64) -> Self {
        ExtReal(v)
    }
}

/// Hex-encoded SHA-256 digest of a byte string.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        use std::fmt::Write;
        write!(out, "{b:02x}").expect("writing to a string cannot fail");
    }
    out
}

/// One input file's identity, for reproducibility.
#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    /// What the file was used as: `model`, `safe`, or `corpus`.
    pub role: String,
    pub path: String,
    pub sha256: String,
}

/// Echo of how the run was invoked.
#[derive(Debug, Clone, Serialize, Default)]
pub struct Invocation {
    pub argv: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub inputs: Vec<InputDigest>,
}

/// Why a run failed, in machine-readable form.
#[derive(Debug, Clone, Serialize)]
pub struct ErrorBody {
    pub kind: &'static str,
    pub message: String,
}

impl From<&NafError> for ErrorBody {
    fn from(err: &NafError) -> Self {
        ErrorBody {
            kind: err.kind(),
            message: err.to_string(),
        }
    }
}

/// One safe model's divergence in an exact check or audit.
#[derive(Debug, Clone, Serialize)]
pub struct ModelLevel {
    pub id: String,
    pub value: ExtReal,
}

/// The result payload of a successful run.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ReportBody {
    Train {
        output: String,
        documents: usize,
        vocab: usize,
        order: usize,
        smoothing: f64,
        contexts: usize,
        sha256: String,
    },
    Exact {
        divergence: &'static str,
        length: usize,
        k_x: ExtReal,
        per_model: Vec<ModelLevel>,
    },
    Estimate(EstimateBody),
    Sample {
        scheme: String,
        #[serde(skip_serializing_if = "Option::is_none")]
        kappa: Option<f64>,
        attempts: u64,
        tokens: Vec<String>,
        text: String,
    },
    Certificate {
        scheme: String,
        kappa: f64,
        nu_hat: f64,
        level: f64,
        nu_lo: f64,
        nu_hi: f64,
        trials: u64,
        accepted: u64,
        bound: ExtReal,
    },
    Sweep {
        parameter: &'static str,
        points: Vec<SweepRow>,
    },
    KappaSweep {
        parameter: &'static str,
        points: Vec<KappaRow>,
    },
    Memorization(MemorizationBody),
    Dpg {
        divergence: &'static str,
        length: usize,
        value: ExtReal,
    },
}

/// Serialized form of a Monte Carlo audit result.
#[derive(Debug, Clone, Serialize)]
pub struct EstimateBody {
    pub k_hat: ExtReal,
    pub per_model: Vec<ModelLevel>,
    pub variant: &'static str,
    pub n: u64,
    pub delta: f64,
    pub alpha: f64,
    pub alpha_source: String,
    pub m: usize,
    pub half_width: ExtReal,
    pub seed: u64,
    pub zero_density: bool,
}

impl From<&NafEstimate> for EstimateBody {
    fn from(e: &NafEstimate) -> Self {
        EstimateBody {
            k_hat: e.k_hat.into(),
            per_model: e
                .per_model
                .iter()
                .map(|d| ModelLevel {
                    id: d.id.clone(),
                    value: d.delta_hat.into(),
                })
                .collect(),
            variant: e.variant.name(),
            n: e.n,
            delta: e.delta,
            alpha: e.alpha,
            alpha_source: e.alpha_source.clone(),
            m: e.m,
            half_width: e.half_width.into(),
            seed: e.seed,
            zero_density: e.zero_density,
        }
    }
}

impl From<&ProtectionCertificate> for ReportBody {
    fn from(c: &ProtectionCertificate) -> Self {
        ReportBody::Certificate {
            scheme: c.scheme.clone(),
            kappa: c.kappa,
            nu_hat: c.nu_hat,
            level: c.level,
            nu_lo: c.nu_lo,
            nu_hi: c.nu_hi,
            trials: c.trials,
            accepted: c.accepted,
            bound: c.bound.into(),
        }
    }
}

/// One parameter point of an estimated sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub estimate: EstimateBody,
}

impl From<&SweepPoint<f64>> for SweepRow {
    fn from(p: &SweepPoint<f64>) -> Self {
        SweepRow {
            value: p.parameter,
            estimate: (&p.estimate).into(),
        }
    }
}

/// One threshold point of an exact sweep.
#[derive(Debug, Clone, Serialize)]
pub struct KappaRow {
    pub kappa: f64,
    pub nu: f64,
    pub k_exact: ExtReal,
}

impl From<&KappaPoint> for KappaRow {
    fn from(p: &KappaPoint) -> Self {
        KappaRow {
            kappa: p.kappa,
            nu: p.nu,
            k_exact: p.k_exact.into(),
        }
    }
}

/// Serialized form of a memorization experiment.
#[derive(Debug, Clone, Serialize)]
pub struct MemorizationBody {
    pub duplicated_units: Vec<usize>,
    pub copies: usize,
    pub order: usize,
    pub smoothing: f64,
    pub prompt_len: usize,
    pub gen_len: usize,
    pub seed: u64,
    pub schemes: Vec<SchemeBody>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SchemeBody {
    pub scheme: &'static str,
    pub mean_distance: f64,
    /// Counts over [0, 1] in 0.05-wide bins.
    pub histogram: Vec<u32>,
    pub units: Vec<UnitBody>,
}

#[derive(Debug, Clone, Serialize)]
pub struct UnitBody {
    pub unit_id: usize,
    pub prompt: String,
    pub reference: String,
    pub generated: String,
    pub distance: f64,
}

/// Builds the memorization payload, rendering token sequences as text via
/// the decoding closure.
pub fn memorization_body<F>(report: &MemorizationReport, decode: F) -> MemorizationBody
where
    F: Fn(&[crate::vocab::TokenId]) -> String,
{
    MemorizationBody {
        duplicated_units: report.duplicated_units.clone(),
        copies: report.copies,
        order: report.order,
        smoothing: report.smoothing,
        prompt_len: report.prompt_len,
        gen_len: report.gen_len,
        seed: report.seed,
        schemes: report
            .schemes
            .iter()
            .map(|s| SchemeBody {
                scheme: s.scheme.name(),
                mean_distance: s.mean_distance,
                histogram: s.histogram.to_vec(),
                units: s
                    .units
                    .iter()
                    .map(|u| UnitBody {
                        unit_id: u.unit_id,
                        prompt: decode(&u.prompt),
                        reference: decode(&u.reference),
                        generated: decode(&u.generated),
                        distance: u.distance,
                    })
                    .collect(),
            })
            .collect(),
    }
}

/// The complete report document.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub format: &'static str,
    pub version: &'static str,
    pub command: String,
    pub invocation: Invocation,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<ReportBody>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorBody>,
}

impl Report {
    pub fn success(command: &str, invocation: Invocation, body: ReportBody) -> Self {
        Report {
            format: REPORT_FORMAT,
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            invocation,
            result: Some(body),
            error: None,
        }
    }

    pub fn failure(command: &str, invocation: Invocation, err: &NafError) -> Self {
        Report {
            format: REPORT_FORMAT,
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            invocation,
            result: None,
            error: Some(err.into()),
        }
    }

    /// Deterministic pretty-printed JSON, newline-terminated.
    pub fn render(&self) -> String {
        let mut text =
            serde_json::to_string_pretty(self).expect("report serialization cannot fail");
        text.push('\n');
        text
    }
}
