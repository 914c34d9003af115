//! Predictive uncertainty scoring and pseudo-label filtering.
//!
//! Per utterance, the uncertainty is the maximum over the dropout samples of
//! the reference-normalized edit distance (word or character unit). An
//! utterance is accepted at threshold tau iff its uncertainty is at most tau;
//! the empty-reference sentinel is never accepted. Sweeps evaluate the
//! accepted sets against ground truth along a threshold grid or along
//! percentage-of-corpus prefixes.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::distance::{normalized_eds, CorpusErrorRate, EditScore, Uncertainty};
use crate::text::{tokenize, NormalizationOptions, TokenUnit};
use crate::{par, Error, Result};

/// One unlabeled utterance: the no-dropout reference decode, `T` dropout
/// decodes, and optionally the ground-truth transcript.
///
/// Filtering never reads `truth`; it exists only for evaluation and
/// calibration. The serialized form is one JSON object per line with fields
/// `id`, `ref`, `samples`, and optional `truth`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HypothesisBundle {
    pub id: String,
    #[serde(rename = "ref")]
    pub ref_hyp: String,
    pub samples: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truth: Option<String>,
}

/// Per-utterance uncertainty: the per-sample normalized edit scores and
/// their maximum.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertaintyRecord {
    pub id: String,
    /// Number of dropout samples the maximum ranges over.
    pub t: usize,
    pub unit: TokenUnit,
    pub per_sample_eds: Vec<EditScore>,
    pub pred_uncert: Uncertainty,
}

impl UncertaintyRecord {
    /// One minus the uncertainty, clamped to [0, 1].
    pub fn confidence(&self) -> f64 {
        self.pred_uncert.confidence()
    }
}

/// Accept/reject verdict for one utterance at a threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterDecision {
    pub id: String,
    pub tau: f64,
    pub accepted: bool,
}

/// Scores one bundle in the given unit.
///
/// A bundle with no samples carries no consensus evidence and scores
/// `MaxUncertain`, so it can never be accepted.
pub fn predictive_uncertainty(
    bundle: &HypothesisBundle,
    unit: TokenUnit,
    opts: &NormalizationOptions,
) -> UncertaintyRecord {
    let reference = tokenize(&bundle.ref_hyp, unit, opts);
    let per_sample_eds: Vec<EditScore> = bundle
        .samples
        .iter()
        .map(|sample| {
            let hyp = tokenize(sample, unit, opts);
            normalized_eds(&reference, &hyp).expect("same unit by construction")
        })
        .collect();
    let pred_uncert = per_sample_eds
        .iter()
        .map(EditScore::normalized)
        .max_by(|a, b| a.total_cmp(b))
        .unwrap_or(Uncertainty::MaxUncertain);
    UncertaintyRecord {
        id: bundle.id.clone(),
        t: bundle.samples.len(),
        unit,
        per_sample_eds,
        pred_uncert,
    }
}

/// Applies the exclusion rule: accepted iff `pred_uncert <= tau`. Ties at the
/// threshold are accepted; the sentinel never is.
pub fn filter_decision(record: &UncertaintyRecord, tau: f64) -> FilterDecision {
    let accepted = match record.pred_uncert {
        Uncertainty::Finite(u) => u <= tau,
        Uncertainty::MaxUncertain => false,
    };
    FilterDecision {
        id: record.id.clone(),
        tau,
        accepted,
    }
}

/// Result of filtering a corpus at one threshold.
///
/// `records` and `decisions` follow corpus order; the id partitions are
/// ordered by (uncertainty ascending, id ascending).
#[derive(Debug, Clone)]
pub struct FilterOutcome {
    pub tau: f64,
    pub records: Vec<UncertaintyRecord>,
    pub decisions: Vec<FilterDecision>,
    pub accepted: Vec<String>,
    pub rejected: Vec<String>,
}

fn check_unique_ids(corpus: &[HypothesisBundle]) -> Result<()> {
    let mut seen = HashSet::with_capacity(corpus.len());
    for bundle in corpus {
        if !seen.insert(bundle.id.as_str()) {
            return Err(Error::DuplicateId(bundle.id.clone()));
        }
    }
    Ok(())
}

/// Scores every bundle and partitions the corpus at `tau`.
pub fn filter_corpus(
    corpus: &[HypothesisBundle],
    tau: f64,
    unit: TokenUnit,
    opts: &NormalizationOptions,
) -> Result<FilterOutcome> {
    if corpus.is_empty() {
        return Err(Error::EmptyInput("filter over empty corpus"));
    }
    check_unique_ids(corpus)?;
    let records = par::map(corpus, |bundle| predictive_uncertainty(bundle, unit, opts));
    let decisions: Vec<FilterDecision> = records
        .iter()
        .map(|record| filter_decision(record, tau))
        .collect();

    let mut order: Vec<usize> = (0..records.len()).collect();
    order.sort_unstable_by(|&a, &b| {
        records[a]
            .pred_uncert
            .total_cmp(&records[b].pred_uncert)
            .then_with(|| records[a].id.cmp(&records[b].id))
    });
    let mut accepted = Vec::new();
    let mut rejected = Vec::new();
    for idx in order {
        if decisions[idx].accepted {
            accepted.push(records[idx].id.clone());
        } else {
            rejected.push(records[idx].id.clone());
        }
    }
    Ok(FilterOutcome {
        tau,
        records,
        decisions,
        accepted,
        rejected,
    })
}

/// Whether a sweep point's cutoff is an uncertainty threshold or a fraction
/// of the corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    Threshold,
    Percentage,
}

impl SweepKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepKind::Threshold => "threshold",
            SweepKind::Percentage => "percentage",
        }
    }
}

/// Error rates of one accepted set along a sweep. The rates are `None` when
/// the accepted set is empty (or contains no usable reference tokens).
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub cutoff: f64,
    pub kind: SweepKind,
    pub accepted_count: usize,
    pub accepted_fraction: f64,
    pub wer: Option<CorpusErrorRate>,
    pub cer: Option<CorpusErrorRate>,
}

/// Per-utterance evaluation scores, sorted by (uncertainty, id).
struct ScoredEval {
    uncert: Uncertainty,
    word: EditScore,
    chars: EditScore,
}

fn score_for_eval(
    corpus: &[HypothesisBundle],
    unit: TokenUnit,
    opts: &NormalizationOptions,
) -> Result<Vec<ScoredEval>> {
    if corpus.is_empty() {
        return Err(Error::EmptyInput("sweep over empty corpus"));
    }
    check_unique_ids(corpus)?;
    if let Some(missing) = corpus.iter().find(|b| b.truth.is_none()) {
        return Err(Error::MissingTruth(missing.id.clone()));
    }
    let mut scored: Vec<(usize, ScoredEval)> = par::map_indexed(corpus, |idx, bundle| {
        let truth = bundle.truth.as_deref().expect("checked above");
        let record = predictive_uncertainty(bundle, unit, opts);
        let score = |u: TokenUnit| -> EditScore {
            let t = tokenize(truth, u, opts);
            let h = tokenize(&bundle.ref_hyp, u, opts);
            normalized_eds(&t, &h).expect("same unit by construction")
        };
        (
            idx,
            ScoredEval {
                uncert: record.pred_uncert,
                word: score(TokenUnit::Word),
                chars: score(TokenUnit::Char),
            },
        )
    });
    scored.sort_unstable_by(|(a, sa), (b, sb)| {
        sa.uncert
            .total_cmp(&sb.uncert)
            .then_with(|| corpus[*a].id.cmp(&corpus[*b].id))
    });
    Ok(scored.into_iter().map(|(_, s)| s).collect())
}

/// Cumulative error-rate sums along the sorted order, so each sweep prefix
/// aggregates in O(1).
struct PrefixSums {
    word_edits: Vec<usize>,
    word_len: Vec<usize>,
    word_mean: Vec<f64>,
    word_included: Vec<usize>,
    char_edits: Vec<usize>,
    char_len: Vec<usize>,
    char_mean: Vec<f64>,
    char_included: Vec<usize>,
}

impl PrefixSums {
    fn build(scored: &[ScoredEval]) -> Self {
        let n = scored.len();
        let mut sums = PrefixSums {
            word_edits: Vec::with_capacity(n + 1),
            word_len: Vec::with_capacity(n + 1),
            word_mean: Vec::with_capacity(n + 1),
            word_included: Vec::with_capacity(n + 1),
            char_edits: Vec::with_capacity(n + 1),
            char_len: Vec::with_capacity(n + 1),
            char_mean: Vec::with_capacity(n + 1),
            char_included: Vec::with_capacity(n + 1),
        };
        sums.word_edits.push(0);
        sums.word_len.push(0);
        sums.word_mean.push(0.0);
        sums.word_included.push(0);
        sums.char_edits.push(0);
        sums.char_len.push(0);
        sums.char_mean.push(0.0);
        sums.char_included.push(0);
        for s in scored {
            let push = |edits: &mut Vec<usize>,
                        len: &mut Vec<usize>,
                        mean: &mut Vec<f64>,
                        included: &mut Vec<usize>,
                        score: &EditScore| {
                let last = edits.len() - 1;
                if score.ref_len == 0 {
                    edits.push(edits[last]);
                    len.push(len[last]);
                    mean.push(mean[last]);
                    included.push(included[last]);
                } else {
                    edits.push(edits[last] + score.raw_edits);
                    len.push(len[last] + score.ref_len);
                    mean.push(mean[last] + score.raw_edits as f64 / score.ref_len as f64);
                    included.push(included[last] + 1);
                }
            };
            push(
                &mut sums.word_edits,
                &mut sums.word_len,
                &mut sums.word_mean,
                &mut sums.word_included,
                &s.word,
            );
            push(
                &mut sums.char_edits,
                &mut sums.char_len,
                &mut sums.char_mean,
                &mut sums.char_included,
                &s.chars,
            );
        }
        sums
    }

    fn rates(&self, k: usize) -> (Option<CorpusErrorRate>, Option<CorpusErrorRate>) {
        let make = |edits: &[usize], len: &[usize], mean: &[f64], included: &[usize]| {
            if len[k] == 0 {
                return None;
            }
            Some(CorpusErrorRate {
                total_edits: edits[k],
                total_ref_tokens: len[k],
                included: included[k],
                skipped_empty_refs: k - included[k],
                per_utterance_mean: mean[k] / included[k] as f64,
            })
        };
        (
            make(
                &self.word_edits,
                &self.word_len,
                &self.word_mean,
                &self.word_included,
            ),
            make(
                &self.char_edits,
                &self.char_len,
                &self.char_mean,
                &self.char_included,
            ),
        )
    }
}

fn sweep_point(sums: &PrefixSums, n: usize, k: usize, cutoff: f64, kind: SweepKind) -> SweepPoint {
    let (wer, cer) = sums.rates(k);
    SweepPoint {
        cutoff,
        kind,
        accepted_count: k,
        accepted_fraction: k as f64 / n as f64,
        wer,
        cer,
    }
}

/// The CLI/report default threshold grid: 0.00 to 1.00 in steps of 0.05.
pub fn default_tau_grid() -> Vec<f64> {
    (0..=20).map(|i| i as f64 * 0.05).collect()
}

fn validate_ascending(grid: &[f64], name: &'static str, max: f64) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::EmptyInput(name));
    }
    for w in grid.windows(2) {
        if w[0] >= w[1] {
            return Err(Error::InvalidParameter(format!(
                "{name} must be strictly ascending"
            )));
        }
    }
    if grid[0] < 0.0 || *grid.last().unwrap() > max {
        return Err(Error::InvalidParameter(format!(
            "{name} values must lie in [0, {max}]"
        )));
    }
    Ok(())
}

/// Evaluates accepted-set WER/CER at each threshold of an ascending grid in
/// [0, 1], appending an accept-all-finite terminal point when the grid does
/// not already reach it. Requires ground truth on every bundle.
pub fn threshold_sweep(
    corpus: &[HypothesisBundle],
    tau_grid: &[f64],
    unit: TokenUnit,
    opts: &NormalizationOptions,
) -> Result<Vec<SweepPoint>> {
    validate_ascending(tau_grid, "tau grid", 1.0)?;
    let scored = score_for_eval(corpus, unit, opts)?;
    let sums = PrefixSums::build(&scored);
    let n = scored.len();

    let mut points = Vec::with_capacity(tau_grid.len() + 1);
    for &tau in tau_grid {
        let k = scored.partition_point(|s| match s.uncert {
            Uncertainty::Finite(u) => u <= tau,
            Uncertainty::MaxUncertain => false,
        });
        points.push(sweep_point(&sums, n, k, tau, SweepKind::Threshold));
    }
    // Terminal point: accept every bundle with finite uncertainty.
    let finite = scored.partition_point(|s| !s.uncert.is_max_uncertain());
    if points.last().map(|p| p.accepted_count) != Some(finite) {
        let max_finite = scored[..finite]
            .last()
            .and_then(|s| s.uncert.finite())
            .unwrap_or(0.0);
        points.push(sweep_point(
            &sums,
            n,
            finite,
            max_finite,
            SweepKind::Threshold,
        ));
    }
    Ok(points)
}

/// Evaluates the lowest-uncertainty prefix of each requested corpus fraction
/// in (0, 1]; the prefix holds `ceil(fraction * n)` utterances, ties at the
/// cut broken by id. Requires ground truth on every bundle.
pub fn percentage_sweep(
    corpus: &[HypothesisBundle],
    fractions: &[f64],
    unit: TokenUnit,
    opts: &NormalizationOptions,
) -> Result<Vec<SweepPoint>> {
    validate_ascending(fractions, "fraction grid", 1.0)?;
    if fractions[0] <= 0.0 {
        return Err(Error::InvalidParameter(
            "fraction grid values must lie in (0, 1]".into(),
        ));
    }
    let scored = score_for_eval(corpus, unit, opts)?;
    let sums = PrefixSums::build(&scored);
    let n = scored.len();
    Ok(fractions
        .iter()
        .map(|&f| {
            let k = ((f * n as f64).ceil() as usize).min(n);
            sweep_point(&sums, n, k, f, SweepKind::Percentage)
        })
        .collect())
}
