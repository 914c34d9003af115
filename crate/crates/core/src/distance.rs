//! Levenshtein edit distance over token sequences and the error-rate
//! aggregates built on it.
//!
//! All distances use unit costs for insertion, deletion, and substitution.
//! Normalized scores divide the raw edit count by the reference length; an
//! empty reference with a nonempty hypothesis yields the [`Uncertainty::MaxUncertain`]
//! sentinel, which compares greater than every finite score so such
//! utterances can never be accepted by a threshold.

use std::cmp::Ordering;

use crate::text::TokenSequence;
use crate::{Error, Result};

/// A reference-normalized edit score, or the sentinel for the empty-reference
/// case. Finite values are nonnegative and may exceed 1 when insertions
/// outnumber reference tokens.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Uncertainty {
    Finite(f64),
    MaxUncertain,
}

impl Uncertainty {
    pub fn is_max_uncertain(&self) -> bool {
        matches!(self, Uncertainty::MaxUncertain)
    }

    /// Finite value, or `None` for the sentinel.
    pub fn finite(&self) -> Option<f64> {
        match self {
            Uncertainty::Finite(v) => Some(*v),
            Uncertainty::MaxUncertain => None,
        }
    }

    /// Finite value, with the sentinel mapped to +inf.
    pub fn as_f64(&self) -> f64 {
        match self {
            Uncertainty::Finite(v) => *v,
            Uncertainty::MaxUncertain => f64::INFINITY,
        }
    }

    /// Confidence is one minus the uncertainty, lower-bounded at zero. The
    /// sentinel maps to zero confidence.
    pub fn confidence(&self) -> f64 {
        match self {
            Uncertainty::Finite(v) => (1.0 - v).max(0.0),
            Uncertainty::MaxUncertain => 0.0,
        }
    }

    /// Total order: finite scores by value, the sentinel greatest. Finite
    /// scores are never NaN (they are ratios of counts with nonzero
    /// denominators), so this is consistent with `PartialEq`.
    pub fn total_cmp(&self, other: &Uncertainty) -> Ordering {
        match (self, other) {
            (Uncertainty::Finite(a), Uncertainty::Finite(b)) => a.total_cmp(b),
            (Uncertainty::Finite(_), Uncertainty::MaxUncertain) => Ordering::Less,
            (Uncertainty::MaxUncertain, Uncertainty::Finite(_)) => Ordering::Greater,
            (Uncertainty::MaxUncertain, Uncertainty::MaxUncertain) => Ordering::Equal,
        }
    }
}

impl PartialOrd for Uncertainty {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.total_cmp(other))
    }
}

/// Raw edit count against a reference, carrying the exact rational
/// `raw_edits / ref_len` as integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EditScore {
    pub raw_edits: usize,
    pub ref_len: usize,
}

impl EditScore {
    /// The normalized score. Zero edits against an empty reference is a
    /// perfect match (0); any edits against an empty reference are maximally
    /// uncertain.
    pub fn normalized(&self) -> Uncertainty {
        match (self.ref_len, self.raw_edits) {
            (0, 0) => Uncertainty::Finite(0.0),
            (0, _) => Uncertainty::MaxUncertain,
            (len, edits) => Uncertainty::Finite(edits as f64 / len as f64),
        }
    }
}

/// Two-row Levenshtein over any comparable slice; O(min(m, n)) memory.
pub(crate) fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    if short.is_empty() {
        return long.len();
    }
    let mut prev: Vec<usize> = (0..=short.len()).collect();
    let mut curr = vec![0usize; short.len() + 1];
    for (i, lt) in long.iter().enumerate() {
        curr[0] = i + 1;
        for (j, st) in short.iter().enumerate() {
            let cost = usize::from(lt != st);
            curr[j + 1] = (prev[j + 1] + 1).min(curr[j] + 1).min(prev[j] + cost);
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[short.len()]
}

/// Minimum number of single-token insertions, deletions, and substitutions
/// transforming `a` into `b`. Errors if the sequences use different units.
pub fn edit_distance(a: &TokenSequence, b: &TokenSequence) -> Result<usize> {
    if a.unit() != b.unit() {
        return Err(Error::UnitMismatch {
            left: a.unit(),
            right: b.unit(),
        });
    }
    Ok(levenshtein(a.tokens(), b.tokens()))
}

/// Edit distance from `reference` to `hypothesis`, normalized by the
/// reference length.
pub fn normalized_eds(reference: &TokenSequence, hypothesis: &TokenSequence) -> Result<EditScore> {
    let raw_edits = edit_distance(reference, hypothesis)?;
    Ok(EditScore {
        raw_edits,
        ref_len: reference.len(),
    })
}

/// True error rate of a hypothesis against the ground-truth transcript; the
/// truth owns the denominator. Word unit gives WER, char unit gives CER.
pub fn utterance_error_rate(
    truth: &TokenSequence,
    hypothesis: &TokenSequence,
) -> Result<EditScore> {
    normalized_eds(truth, hypothesis)
}

/// Corpus-level error rate.
///
/// The headline `rate` is the edit-sum over the reference-length-sum (the
/// standard corpus WER convention); the mean of per-utterance normalized
/// scores is reported alongside it. Pairs with an empty truth carry no usable
/// reference and are excluded, counted in `skipped_empty_refs`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorpusErrorRate {
    pub total_edits: usize,
    pub total_ref_tokens: usize,
    /// Pairs that contributed to the sums.
    pub included: usize,
    pub skipped_empty_refs: usize,
    pub per_utterance_mean: f64,
}

impl CorpusErrorRate {
    pub fn rate(&self) -> f64 {
        self.total_edits as f64 / self.total_ref_tokens as f64
    }
}

/// Aggregates error rates over (truth, hypothesis) pairs sharing one unit.
pub fn corpus_error_rate(pairs: &[(TokenSequence, TokenSequence)]) -> Result<CorpusErrorRate> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput("corpus error rate over no pairs"));
    }
    let mut total_edits = 0usize;
    let mut total_ref_tokens = 0usize;
    let mut included = 0usize;
    let mut skipped = 0usize;
    let mut mean_sum = 0.0f64;
    for (truth, hyp) in pairs {
        if truth.is_empty() {
            skipped += 1;
            continue;
        }
        let score = utterance_error_rate(truth, hyp)?;
        total_edits += score.raw_edits;
        total_ref_tokens += score.ref_len;
        included += 1;
        match score.normalized() {
            Uncertainty::Finite(v) => mean_sum += v,
            Uncertainty::MaxUncertain => unreachable!("nonempty reference"),
        }
    }
    if total_ref_tokens == 0 {
        return Err(Error::UndefinedRate);
    }
    Ok(CorpusErrorRate {
        total_edits,
        total_ref_tokens,
        included,
        skipped_empty_refs: skipped,
        per_utterance_mean: mean_sum / included as f64,
    })
}
