//! On-disk formats: the `naf-table-model/1` model file and plain-text
//! corpora.
//!
//! # Model file
//!
//! Line-oriented UTF-8 text, whitespace-separated fields:
//!
//! ```text
//! format naf-table-model/1
//! order 1
//! vocab 5 <bos> <eos> <unk> a b
//! backoff 0e0 2e-1 0e0 4e-1 4e-1
//! table 2
//! <bos> 0e0 ... (order context tokens, then K probabilities)
//! a     0e0 ...
//! ```
//!
//! Context keys are the most recent `order` tokens; every probability row has
//! exactly K entries. Probabilities are written with 17 significant digits,
//! so `load(save(m))` reproduces `m` exactly, field for field.
//!
//! # Corpus file
//!
//! One document per line, whitespace tokenization. A leading `<bos>` or
//! trailing `<eos>` is accepted and ignored; markers elsewhere are errors.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use crate::dist::TokenDistribution;
use crate::error::{NafError, Result};
use crate::models::{Corpus, TableModel};
use crate::vocab::{TokenId, Vocabulary, BOS_TOKEN, EOS_TOKEN, UNK_TOKEN};

/// Format identifier expected on the first line of a model file.
pub const MODEL_FORMAT: &str = "naf-table-model/1";

fn fmt_err(line: usize, message: impl Into<String>) -> NafError {
    NafError::FormatError {
        line,
        message: message.into(),
    }
}

/// Renders a model into the `naf-table-model/1` text format.
pub fn model_to_text(m: &TableModel) -> String {
    let mut out = String::new();
    out.push_str(&format!("format {MODEL_FORMAT}\n"));
    out.push_str(&format!("order {}\n", m.order()));
    out.push_str(&format!("vocab {}", m.vocab().len()));
    for t in m.vocab().all_tokens() {
        out.push(' ');
        out.push_str(t);
    }
    out.push('\n');
    out.push_str("backoff");
    for &p in m.backoff().probs() {
        out.push_str(&format!(" {p:.16e}"));
    }
    out.push('\n');
    out.push_str(&format!("table {}\n", m.context_count()));
    for (ctx, dist) in m.contexts() {
        let key: Vec<&str> = ctx
            .iter()
            .map(|&id| m.vocab().token(id).expect("context ids are in-vocabulary"))
            .collect();
        out.push_str(&key.join(" "));
        for &p in dist.probs() {
            out.push_str(&format!(" {p:.16e}"));
        }
        out.push('\n');
    }
    out
}

/// Parses the `naf-table-model/1` text format.
pub fn model_from_text(text: &str) -> Result<TableModel> {
    let total = text.lines().count();
    let mut lines = text.lines().enumerate();
    let mut next_line = |what: &str| -> Result<(usize, &str)> {
        match lines.next() {
            Some((i, l)) => Ok((i + 1, l)),
            None => Err(fmt_err(total, format!("missing {what}: file ended early"))),
        }
    };

    // Header: format identifier.
    let (lineno, line) = next_line("format line")?;
    let mut fields = line.split_whitespace();
    if fields.next() != Some("format") {
        return Err(fmt_err(lineno, "expected `format <id>`"));
    }
    match fields.next() {
        Some(MODEL_FORMAT) => {}
        Some(other) => {
            return Err(fmt_err(
                lineno,
                format!("unsupported format {other:?}, expected {MODEL_FORMAT:?}"),
            ))
        }
        None => return Err(fmt_err(lineno, "missing format identifier")),
    }

    // Order.
    let (lineno, line) = next_line("order line")?;
    let mut fields = line.split_whitespace();
    if fields.next() != Some("order") {
        return Err(fmt_err(lineno, "expected `order <n>`"));
    }
    let order: usize = fields
        .next()
        .ok_or_else(|| fmt_err(lineno, "missing order value"))?
        .parse()
        .map_err(|e| fmt_err(lineno, format!("bad order: {e}")))?;

    // Vocabulary.
    let (lineno, line) = next_line("vocab line")?;
    let mut fields = line.split_whitespace();
    if fields.next() != Some("vocab") {
        return Err(fmt_err(lineno, "expected `vocab <K> <tokens…>`"));
    }
    let k: usize = fields
        .next()
        .ok_or_else(|| fmt_err(lineno, "missing vocabulary size"))?
        .parse()
        .map_err(|e| fmt_err(lineno, format!("bad vocabulary size: {e}")))?;
    let tokens: Vec<&str> = fields.collect();
    if tokens.len() != k {
        return Err(fmt_err(
            lineno,
            format!("vocab declares {k} tokens but lists {}", tokens.len()),
        ));
    }
    if tokens.len() < 3 || tokens[0] != BOS_TOKEN || tokens[1] != EOS_TOKEN || tokens[2] != UNK_TOKEN
    {
        return Err(fmt_err(
            lineno,
            format!("vocabulary must start with {BOS_TOKEN} {EOS_TOKEN} {UNK_TOKEN}"),
        ));
    }
    let mut vocab = Vocabulary::new();
    for &t in &tokens[3..] {
        vocab
            .add(t.to_string())
            .map_err(|e| fmt_err(lineno, e.to_string()))?;
    }
    let vocab = Arc::new(vocab);

    let parse_probs = |lineno: usize, raw: &[&str]| -> Result<TokenDistribution> {
        if raw.len() != k {
            return Err(fmt_err(
                lineno,
                format!("expected {k} probabilities, found {}", raw.len()),
            ));
        }
        let mut probs = Vec::with_capacity(k);
        for f in raw {
            probs.push(
                f.parse::<f64>()
                    .map_err(|e| fmt_err(lineno, format!("bad probability {f:?}: {e}")))?,
            );
        }
        TokenDistribution::from_probs(probs).map_err(|e| fmt_err(lineno, e.to_string()))
    };

    // Backoff distribution.
    let (lineno, line) = next_line("backoff line")?;
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.first() != Some(&"backoff") {
        return Err(fmt_err(lineno, "expected `backoff <K probabilities>`"));
    }
    let backoff = parse_probs(lineno, &fields[1..])?;

    // Table.
    let (lineno, line) = next_line("table line")?;
    let mut fields = line.split_whitespace();
    if fields.next() != Some("table") {
        return Err(fmt_err(lineno, "expected `table <count>`"));
    }
    let count: usize = fields
        .next()
        .ok_or_else(|| fmt_err(lineno, "missing table row count"))?
        .parse()
        .map_err(|e| fmt_err(lineno, format!("bad table row count: {e}")))?;

    let mut table: BTreeMap<Vec<TokenId>, TokenDistribution> = BTreeMap::new();
    for _ in 0..count {
        let (lineno, line) = next_line("table row")?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != order + k {
            return Err(fmt_err(
                lineno,
                format!(
                    "table row has {} fields, expected {order} context tokens + {k} probabilities",
                    fields.len()
                ),
            ));
        }
        let mut key = Vec::with_capacity(order);
        for &t in &fields[..order] {
            key.push(
                vocab
                    .id(t)
                    .ok_or_else(|| fmt_err(lineno, format!("unknown context token {t:?}")))?,
            );
        }
        let dist = parse_probs(lineno, &fields[order..])?;
        if table.insert(key, dist).is_some() {
            return Err(fmt_err(lineno, "duplicate context key"));
        }
    }
    if let Some((i, l)) = lines.find(|(_, l)| !l.trim().is_empty()) {
        return Err(fmt_err(
            i + 1,
            format!("unexpected trailing content: {:?}", l.trim()),
        ));
    }

    TableModel::from_parts(vocab, order, backoff, table)
        .map_err(|e| fmt_err(0, format!("inconsistent model: {e}")))
}

/// Writes a model file.
pub fn save_model(m: &TableModel, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, model_to_text(m))?;
    Ok(())
}

/// Reads and validates a model file.
pub fn load_model(path: impl AsRef<Path>) -> Result<TableModel> {
    let text = std::fs::read_to_string(path)?;
    model_from_text(&text)
}

/// Reads a corpus file: one document per line.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    let text = std::fs::read_to_string(path)?;
    let lines: Vec<&str> = text.lines().map(|l| l.trim_end_matches('\r')).collect();
    Corpus::from_lines(&lines)
}
