//! Dropout-consensus pseudo-label curation.
//!
//! A teacher model decodes each unlabeled utterance once without dropout (the
//! reference hypothesis) and `T` more times with dropout noise. The maximum
//! reference-normalized edit distance over the samples is the utterance's
//! predictive uncertainty; utterances above a threshold are excluded from the
//! pseudo-labeled training set. Distances are computed over words (DUST) or
//! characters (C-DUST).
//!
//! The crate provides:
//! - [`text`]: word/character tokenization with explicit normalization;
//! - [`distance`]: Levenshtein distances, normalized scores, WER/CER;
//! - [`filter`]: uncertainty scoring, threshold filtering, and
//!   threshold/percentage sweeps;
//! - [`calibration`]: reliability bins and the ECE/MCE/RCE metrics;
//! - [`sim`]: a seeded noise-channel teacher simulator for stress-testing the
//!   filter under severe domain mismatch;
//! - [`io`]: the bundle JSONL and report CSV formats.
//!
//! Per-utterance work is data-parallel (rayon) when the default `parallel`
//! feature is enabled; outputs are bit-identical to the sequential build.

pub mod calibration;
pub mod distance;
mod error;
pub mod filter;
pub mod io;
mod par;
pub mod sim;
pub mod text;

pub use distance::{CorpusErrorRate, EditScore, Uncertainty};
pub use error::{Error, Result};
pub use filter::{FilterDecision, FilterOutcome, HypothesisBundle, SweepPoint, UncertaintyRecord};
pub use text::{tokenize, NormalizationOptions, TokenSequence, TokenUnit};

/// Sizes the global thread pool used by the parallel build. A no-op in the
/// sequential build. Call at most once, before any parallel work.
#[cfg(feature = "parallel")]
pub fn configure_threads(threads: usize) -> Result<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))
}

#[cfg(not(feature = "parallel"))]
pub fn configure_threads(_threads: usize) -> Result<()> {
    Ok(())
}
