//! Confidence/accuracy binning and calibration error metrics.
//!
//! Each utterance contributes a (confidence, accuracy) pair: confidence is
//! one minus the predictive uncertainty, accuracy is one minus the true error
//! rate of the reference hypothesis, both lower-bounded at zero. Samples are
//! binned by confidence into M equal-width bins ([lo, hi), last bin closed);
//! ECE is the mass-weighted mean absolute gap between per-bin accuracy and
//! confidence, MCE the worst gap over nonempty bins, and RCE the
//! mass-weighted root-mean-square gap.

use crate::distance::utterance_error_rate;
use crate::filter::{predictive_uncertainty, HypothesisBundle};
use crate::text::{tokenize, NormalizationOptions, TokenUnit};
use crate::{par, Error, Result};

/// One utterance's clamped (confidence, accuracy) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationSample {
    pub id: String,
    pub confidence: f64,
    pub accuracy: f64,
}

/// One confidence bin: interval, occupancy, and per-bin sums.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationBin {
    /// 1-based bin index.
    pub index: usize,
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    /// `count / n`.
    pub mass: f64,
    conf_sum: f64,
    acc_sum: f64,
}

impl CalibrationBin {
    /// Mean confidence of the bin's samples; empty bins have no mean.
    pub fn mean_confidence(&self) -> Option<f64> {
        (self.count > 0).then(|| self.conf_sum / self.count as f64)
    }

    pub fn mean_accuracy(&self) -> Option<f64> {
        (self.count > 0).then(|| self.acc_sum / self.count as f64)
    }

    /// |acc - conf| for a nonempty bin.
    pub fn gap(&self) -> Option<f64> {
        match (self.mean_accuracy(), self.mean_confidence()) {
            (Some(acc), Some(conf)) => Some((acc - conf).abs()),
            _ => None,
        }
    }
}

/// Scores every bundle in `unit` and pairs its confidence with the reference
/// hypothesis's accuracy against ground truth in the same unit.
pub fn calibration_samples(
    corpus: &[HypothesisBundle],
    unit: TokenUnit,
    opts: &NormalizationOptions,
) -> Result<Vec<CalibrationSample>> {
    if corpus.is_empty() {
        return Err(Error::EmptyInput("calibration over empty corpus"));
    }
    if let Some(missing) = corpus.iter().find(|b| b.truth.is_none()) {
        return Err(Error::MissingTruth(missing.id.clone()));
    }
    Ok(par::map(corpus, |bundle| {
        let record = predictive_uncertainty(bundle, unit, opts);
        let truth = tokenize(bundle.truth.as_deref().expect("checked above"), unit, opts);
        let hyp = tokenize(&bundle.ref_hyp, unit, opts);
        let err = utterance_error_rate(&truth, &hyp)
            .expect("same unit by construction")
            .normalized();
        CalibrationSample {
            id: bundle.id.clone(),
            confidence: record.confidence(),
            accuracy: err.confidence(),
        }
    }))
}

/// Bins samples by confidence into M equal-width bins, reported in ascending
/// confidence order. Confidence 1.0 lands in bin M.
pub fn reliability_bins(samples: &[CalibrationSample], m: usize) -> Result<Vec<CalibrationBin>> {
    if m == 0 {
        return Err(Error::InvalidParameter(
            "bin count must be at least 1".into(),
        ));
    }
    if samples.is_empty() {
        return Err(Error::EmptyInput("binning over no samples"));
    }
    let n = samples.len();
    let mut bins: Vec<CalibrationBin> = (0..m)
        .map(|i| CalibrationBin {
            index: i + 1,
            lo: i as f64 / m as f64,
            hi: (i + 1) as f64 / m as f64,
            count: 0,
            mass: 0.0,
            conf_sum: 0.0,
            acc_sum: 0.0,
        })
        .collect();
    for s in samples {
        debug_assert!((0.0..=1.0).contains(&s.confidence) && (0.0..=1.0).contains(&s.accuracy));
        let idx = ((s.confidence * m as f64).floor() as usize).min(m - 1);
        let bin = &mut bins[idx];
        bin.count += 1;
        bin.conf_sum += s.confidence;
        bin.acc_sum += s.accuracy;
    }
    for bin in &mut bins {
        bin.mass = bin.count as f64 / n as f64;
    }
    Ok(bins)
}

/// Expected calibration error: mass-weighted mean gap over the bins.
pub fn ece(bins: &[CalibrationBin], n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::EmptyInput("ECE over zero samples"));
    }
    Ok(bins
        .iter()
        .filter_map(|b| b.gap().map(|gap| b.count as f64 / n as f64 * gap))
        .sum())
}

/// Maximum calibration error: the worst gap over nonempty bins.
pub fn mce(bins: &[CalibrationBin]) -> f64 {
    bins.iter()
        .filter_map(CalibrationBin::gap)
        .fold(0.0, f64::max)
}

/// Root-mean-square calibration error: like ECE with squared gaps.
pub fn rce(bins: &[CalibrationBin], n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::EmptyInput("RCE over zero samples"));
    }
    let sum: f64 = bins
        .iter()
        .filter_map(|b| b.gap().map(|gap| b.count as f64 / n as f64 * gap * gap))
        .sum();
    Ok(sum.sqrt())
}

/// Corpus-level calibration summary: the bins plus ECE, MCE, RCE, and the
/// unweighted mean confidence (CNF) and accuracy (ACC).
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationReport {
    pub m: usize,
    pub n: usize,
    pub bins: Vec<CalibrationBin>,
    pub ece: f64,
    pub mce: f64,
    pub rce: f64,
    pub mean_confidence: f64,
    pub mean_accuracy: f64,
}

/// Builds the full calibration report for a ground-truthed corpus.
pub fn calibration_report(
    corpus: &[HypothesisBundle],
    m: usize,
    unit: TokenUnit,
    opts: &NormalizationOptions,
) -> Result<CalibrationReport> {
    let samples = calibration_samples(corpus, unit, opts)?;
    report_from_samples(&samples, m)
}

/// Builds a report from precomputed samples.
pub fn report_from_samples(samples: &[CalibrationSample], m: usize) -> Result<CalibrationReport> {
    let bins = reliability_bins(samples, m)?;
    let n = samples.len();
    Ok(CalibrationReport {
        m,
        n,
        ece: ece(&bins, n)?,
        mce: mce(&bins),
        rce: rce(&bins, n)?,
        mean_confidence: samples.iter().map(|s| s.confidence).sum::<f64>() / n as f64,
        mean_accuracy: samples.iter().map(|s| s.accuracy).sum::<f64>() / n as f64,
        bins,
    })
}
