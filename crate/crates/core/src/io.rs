//! Corpus and report serialization.
//!
//! Formats (UTF-8, LF newlines throughout):
//! - bundles: JSONL, one object per line with fields `id`, `ref`, `samples`,
//!   optional `truth`;
//! - accepted-PL manifest: JSONL of `{"id", "pl"}`, ordered by (uncertainty,
//!   id);
//! - sweep table: CSV with columns `tau_or_fraction, mode, accepted_count,
//!   accepted_fraction, wer_aggregate, wer_mean, cer_aggregate, cer_mean`;
//! - calibration report: a summary CSV row (m, n, ece, mce, rce, cnf, acc)
//!   followed by one row per bin (bin, lo, hi, count, mass, mean_conf,
//!   mean_acc).
//!
//! Rationals are written with six fractional digits. Cells that are undefined
//! (rates of an empty accepted set, means of an empty bin) are left empty.

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::calibration::CalibrationReport;
use crate::filter::{FilterOutcome, HypothesisBundle, SweepPoint};
use crate::{Error, Result};

/// How to treat malformed bundle lines.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseMode {
    /// Abort on the first malformed line.
    Strict,
    /// Skip malformed lines, keeping their errors for reporting.
    Lenient,
}

/// Bundles plus what was skipped in lenient mode.
#[derive(Debug, Clone)]
pub struct ReadReport {
    pub bundles: Vec<HypothesisBundle>,
    pub skipped: usize,
    /// One `line N: message` entry per skipped line.
    pub errors: Vec<String>,
}

fn validate_bundle(bundle: &HypothesisBundle) -> std::result::Result<(), String> {
    if bundle.id.is_empty() {
        return Err("bundle id is empty".into());
    }
    if bundle.samples.is_empty() {
        return Err(format!("bundle {:?} has no samples", bundle.id));
    }
    Ok(())
}

/// Parses bundle JSONL, preserving file order. Errors carry 1-based line
/// numbers; an input with no valid bundles is an error in either mode.
pub fn read_bundles<R: BufRead>(reader: R, mode: ParseMode) -> Result<ReadReport> {
    let mut bundles = Vec::new();
    let mut errors = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: std::result::Result<HypothesisBundle, String> =
            serde_json::from_str(&line).map_err(|e| e.to_string());
        let checked = parsed.and_then(|bundle| {
            validate_bundle(&bundle)?;
            if !seen.insert(bundle.id.clone()) {
                return Err(format!("duplicate bundle id {:?}", bundle.id));
            }
            Ok(bundle)
        });
        match (checked, mode) {
            (Ok(bundle), _) => bundles.push(bundle),
            (Err(message), ParseMode::Strict) => {
                return Err(Error::Parse {
                    line: line_no,
                    message,
                })
            }
            (Err(message), ParseMode::Lenient) => {
                errors.push(format!("line {line_no}: {message}"));
            }
        }
    }
    if bundles.is_empty() {
        return Err(Error::EmptyInput("no bundles in input"));
    }
    Ok(ReadReport {
        skipped: errors.len(),
        bundles,
        errors,
    })
}

/// Writes bundles as JSONL; `read_bundles` reproduces them exactly.
pub fn write_bundles<W: Write>(bundles: &[HypothesisBundle], mut writer: W) -> Result<()> {
    for bundle in bundles {
        serde_json::to_writer(&mut writer, bundle)
            .map_err(|e| Error::InvalidParameter(format!("serialize bundle: {e}")))?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads a plain-text transcript file, one transcript per line, skipping
/// blank lines.
pub fn read_truths<R: BufRead>(reader: R) -> Result<Vec<String>> {
    let mut truths = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            truths.push(line);
        }
    }
    Ok(truths)
}

fn decimal(value: f64) -> String {
    format!("{value:.6}")
}

fn rate_cells(rate: &Option<crate::CorpusErrorRate>) -> (String, String) {
    match rate {
        Some(r) => (decimal(r.rate()), decimal(r.per_utterance_mean)),
        None => (String::new(), String::new()),
    }
}

pub const SWEEP_HEADER: &str =
    "tau_or_fraction,mode,accepted_count,accepted_fraction,wer_aggregate,wer_mean,cer_aggregate,cer_mean";

/// Writes one CSV row per sweep point.
pub fn write_sweep<W: Write>(points: &[SweepPoint], mut writer: W) -> Result<()> {
    writeln!(writer, "{SWEEP_HEADER}")?;
    for p in points {
        let (wer, wer_mean) = rate_cells(&p.wer);
        let (cer, cer_mean) = rate_cells(&p.cer);
        writeln!(
            writer,
            "{},{},{},{},{},{},{},{}",
            decimal(p.cutoff),
            p.kind.as_str(),
            p.accepted_count,
            decimal(p.accepted_fraction),
            wer,
            wer_mean,
            cer,
            cer_mean,
        )?;
    }
    Ok(())
}

pub const CALIBRATION_SUMMARY_HEADER: &str = "m,n,ece,mce,rce,cnf,acc";
pub const CALIBRATION_BIN_HEADER: &str = "bin,lo,hi,count,mass,mean_conf,mean_acc";

/// Writes the calibration summary row followed by one row per bin.
pub fn write_calibration<W: Write>(report: &CalibrationReport, mut writer: W) -> Result<()> {
    writeln!(writer, "{CALIBRATION_SUMMARY_HEADER}")?;
    writeln!(
        writer,
        "{},{},{},{},{},{},{}",
        report.m,
        report.n,
        decimal(report.ece),
        decimal(report.mce),
        decimal(report.rce),
        decimal(report.mean_confidence),
        decimal(report.mean_accuracy),
    )?;
    writeln!(writer, "{CALIBRATION_BIN_HEADER}")?;
    for bin in &report.bins {
        let mean = |v: Option<f64>| v.map(decimal).unwrap_or_default();
        writeln!(
            writer,
            "{},{},{},{},{},{},{}",
            bin.index,
            decimal(bin.lo),
            decimal(bin.hi),
            bin.count,
            decimal(bin.mass),
            mean(bin.mean_confidence()),
            mean(bin.mean_accuracy()),
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct ManifestEntry<'a> {
    id: &'a str,
    pl: &'a str,
}

/// Writes the accepted pseudo-labels as JSONL `{"id", "pl"}`, in the
/// outcome's accepted order (uncertainty ascending, id ascending).
pub fn write_accepted_manifest<W: Write>(
    outcome: &FilterOutcome,
    bundles: &[HypothesisBundle],
    mut writer: W,
) -> Result<()> {
    let by_id: HashMap<&str, &HypothesisBundle> =
        bundles.iter().map(|b| (b.id.as_str(), b)).collect();
    for id in &outcome.accepted {
        let bundle = by_id.get(id.as_str()).ok_or_else(|| {
            Error::InvalidParameter(format!("accepted id {id:?} missing from bundle list"))
        })?;
        let entry = ManifestEntry {
            id,
            pl: &bundle.ref_hyp,
        };
        serde_json::to_writer(&mut writer, &entry)
            .map_err(|e| Error::InvalidParameter(format!("serialize manifest: {e}")))?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}
