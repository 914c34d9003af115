//! Seeded noise-channel teacher simulator.
//!
//! Fabricates hypothesis bundles from clean transcripts with two independent
//! knobs: `base_corruption_rate` corrupts the truth once into a shared
//! "decoded base" (how wrong the teacher is), and `sample_perturbation_rate`
//! further perturbs that base independently per dropout sample (how unsure it
//! is). Keeping the knobs separate makes the confident-but-wrong regime
//! constructible exactly: a zero perturbation rate forces zero predictive
//! uncertainty no matter how corrupt the base is.
//!
//! Every random draw comes from a ChaCha stream keyed by (seed, utterance
//! index, role), so corpora are pure functions of their spec and parallel
//! generation equals sequential generation bit for bit.
//!
//! Corruption scheme, per token hit at the given rate:
//! - substitute: with probability `char_noise` mutate one character of the
//!   token (a plausible near-miss), otherwise draw a different word from the
//!   corpus vocabulary;
//! - delete: drop the token;
//! - insert: place a vocabulary word immediately before the token.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::filter::HypothesisBundle;
use crate::text::{tokenize, NormalizationOptions, TokenSequence, TokenUnit};
use crate::{par, Error, Result};

/// Probabilities over the three edit operations applied on a corruption hit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpMix {
    pub substitute: f64,
    pub delete: f64,
    pub insert: f64,
}

impl OpMix {
    /// Normalizes nonnegative weights into probabilities.
    pub fn new(substitute: f64, delete: f64, insert: f64) -> Result<Self> {
        if substitute < 0.0 || delete < 0.0 || insert < 0.0 {
            return Err(Error::InvalidParameter(
                "op mix weights must be nonnegative".into(),
            ));
        }
        let total = substitute + delete + insert;
        if !total.is_finite() || total <= 0.0 {
            return Err(Error::InvalidParameter(
                "op mix weights must sum to a positive value".into(),
            ));
        }
        Ok(Self {
            substitute: substitute / total,
            delete: delete / total,
            insert: insert / total,
        })
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> Op {
        let u: f64 = rng.gen();
        if u < self.substitute {
            Op::Substitute
        } else if u < self.substitute + self.delete {
            Op::Delete
        } else {
            Op::Insert
        }
    }
}

impl Default for OpMix {
    fn default() -> Self {
        Self {
            substitute: 0.7,
            delete: 0.15,
            insert: 0.15,
        }
    }
}

enum Op {
    Substitute,
    Delete,
    Insert,
}

/// Simulator parameters for one utterance population.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseChannel {
    /// Probability each truth token is corrupted in the shared decoded base.
    pub base_corruption_rate: f64,
    /// Probability each base token is further perturbed, independently per
    /// dropout sample.
    pub sample_perturbation_rate: f64,
    pub op_mix: OpMix,
    /// Share of substitutions realized as single-character mutations rather
    /// than vocabulary draws.
    pub char_noise: f64,
    /// Dropout samples per bundle.
    pub t: usize,
    pub seed: u64,
}

impl NoiseChannel {
    pub fn new(
        base_corruption_rate: f64,
        sample_perturbation_rate: f64,
        t: usize,
        seed: u64,
    ) -> Self {
        Self {
            base_corruption_rate,
            sample_perturbation_rate,
            op_mix: OpMix::default(),
            char_noise: 0.5,
            t,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, rate) in [
            ("base_corruption_rate", self.base_corruption_rate),
            ("sample_perturbation_rate", self.sample_perturbation_rate),
            ("char_noise", self.char_noise),
        ] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must lie in [0, 1], got {rate}"
                )));
            }
        }
        let mix_total = self.op_mix.substitute + self.op_mix.delete + self.op_mix.insert;
        if (mix_total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(
                "op mix must be normalized; use OpMix::new".into(),
            ));
        }
        if self.t == 0 {
            return Err(Error::InvalidParameter(
                "sample count T must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Routes a fraction of utterances through harsher corruption rates, for
/// mixed-severity corpora. The component shares the primary channel's op mix,
/// char noise, T, and seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mixture {
    /// Probability an utterance uses the component rates.
    pub fraction: f64,
    pub base_corruption_rate: f64,
    pub sample_perturbation_rate: f64,
}

/// A full corpus recipe: transcripts plus channel.
#[derive(Debug, Clone, PartialEq)]
pub struct SimCorpusSpec {
    pub truths: Vec<String>,
    pub channel: NoiseChannel,
    pub mixture: Option<Mixture>,
}

const ROLE_SELECT: u64 = 0;
const ROLE_BASE: u64 = 1;
const ROLE_TRUTH: u64 = 2;
const ROLE_SAMPLE: u64 = 8;

fn substream(seed: u64, utterance: u64, role: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&utterance.to_le_bytes());
    key[16..24].copy_from_slice(&role.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

const ALPHABET: &[u8] = b"abcdefghijklmnopqrstuvwxyz";

/// Replaces one character of the token with a different lowercase letter.
fn mutate_char(token: &str, rng: &mut ChaCha8Rng) -> String {
    let chars: Vec<char> = token.chars().collect();
    let pos = rng.gen_range(0..chars.len());
    let orig = chars[pos];
    let mut pick = ALPHABET[rng.gen_range(0..ALPHABET.len())] as char;
    if pick == orig.to_ascii_lowercase() {
        let shifted = (pick as u8 - b'a' + 1) % 26 + b'a';
        pick = shifted as char;
    }
    let mut out = String::with_capacity(token.len());
    for (i, c) in chars.iter().enumerate() {
        out.push(if i == pos { pick } else { *c });
    }
    out
}

fn draw_vocab(vocab: &[String], avoid: &str, rng: &mut ChaCha8Rng) -> Option<String> {
    if vocab.is_empty() {
        return None;
    }
    let mut idx = rng.gen_range(0..vocab.len());
    if vocab[idx] == avoid {
        if vocab.len() == 1 {
            return None;
        }
        idx = (idx + 1) % vocab.len();
    }
    Some(vocab[idx].clone())
}

/// Corrupts a word sequence: each position is hit independently with
/// probability `rate`; a hit applies one operation drawn from `op_mix`.
/// Deterministic given the rng state.
pub fn corrupt(
    tokens: &TokenSequence,
    rate: f64,
    op_mix: &OpMix,
    char_noise: f64,
    vocab: &[String],
    rng: &mut ChaCha8Rng,
) -> TokenSequence {
    let mut out: Vec<String> = Vec::with_capacity(tokens.len());
    for tok in tokens.tokens() {
        if !rng.gen_bool(rate) {
            out.push(tok.clone());
            continue;
        }
        match op_mix.draw(rng) {
            Op::Substitute => {
                let sub = if rng.gen_bool(char_noise) {
                    mutate_char(tok, rng)
                } else {
                    draw_vocab(vocab, tok, rng).unwrap_or_else(|| mutate_char(tok, rng))
                };
                out.push(sub);
            }
            Op::Delete => {}
            Op::Insert => {
                let ins = draw_vocab(vocab, "", rng).unwrap_or_else(|| mutate_char(tok, rng));
                out.push(ins);
                out.push(tok.clone());
            }
        }
    }
    TokenSequence::new(out, TokenUnit::Word).expect("corruption preserves word-token invariants")
}

/// Unique, sorted word vocabulary of a transcript list.
pub fn vocabulary(truths: &[String]) -> Vec<String> {
    let mut words: Vec<String> = truths
        .iter()
        .flat_map(|t| {
            tokenize(t, TokenUnit::Word, &NormalizationOptions::default())
                .tokens()
                .to_vec()
        })
        .collect();
    words.sort_unstable();
    words.dedup();
    words
}

/// Fabricates one bundle: base = corrupt(truth, p_base), reference = base,
/// each sample = corrupt(base, p_samp) on its own stream. A pure function of
/// (truth, channel, vocab, utterance_index).
pub fn simulate_bundle(
    truth: &str,
    channel: &NoiseChannel,
    vocab: &[String],
    utterance_index: u64,
) -> HypothesisBundle {
    let truth_tokens = tokenize(truth, TokenUnit::Word, &NormalizationOptions::default());
    let mut base_rng = substream(channel.seed, utterance_index, ROLE_BASE);
    let base = corrupt(
        &truth_tokens,
        channel.base_corruption_rate,
        &channel.op_mix,
        channel.char_noise,
        vocab,
        &mut base_rng,
    );
    let samples = (0..channel.t)
        .map(|t| {
            let mut rng = substream(channel.seed, utterance_index, ROLE_SAMPLE + t as u64);
            corrupt(
                &base,
                channel.sample_perturbation_rate,
                &channel.op_mix,
                channel.char_noise,
                vocab,
                &mut rng,
            )
            .join_spaced()
        })
        .collect();
    HypothesisBundle {
        id: format!("u{utterance_index:06}"),
        ref_hyp: base.join_spaced(),
        samples,
        truth: Some(truth_tokens.join_spaced()),
    }
}

/// Generates one bundle per transcript. Per-utterance streams are derived
/// from (seed, index), so generation order does not matter and identical
/// specs produce bit-identical corpora.
pub fn simulate_corpus(spec: &SimCorpusSpec) -> Result<Vec<HypothesisBundle>> {
    spec.channel.validate()?;
    if spec.truths.is_empty() {
        return Err(Error::EmptyInput("simulation over no transcripts"));
    }
    for truth in &spec.truths {
        if tokenize(truth, TokenUnit::Word, &NormalizationOptions::default()).is_empty() {
            return Err(Error::InvalidParameter(format!(
                "transcript {truth:?} is empty after normalization"
            )));
        }
    }
    if let Some(mix) = &spec.mixture {
        if !(0.0..=1.0).contains(&mix.fraction) {
            return Err(Error::InvalidParameter(
                "mixture fraction must lie in [0, 1]".into(),
            ));
        }
        let component = NoiseChannel {
            base_corruption_rate: mix.base_corruption_rate,
            sample_perturbation_rate: mix.sample_perturbation_rate,
            ..spec.channel
        };
        component.validate()?;
    }
    let vocab = vocabulary(&spec.truths);
    Ok(par::map_indexed(&spec.truths, |idx, truth| {
        let mut channel = spec.channel;
        if let Some(mix) = &spec.mixture {
            let mut select = substream(spec.channel.seed, idx as u64, ROLE_SELECT);
            if select.gen_bool(mix.fraction) {
                channel.base_corruption_rate = mix.base_corruption_rate;
                channel.sample_perturbation_rate = mix.sample_perturbation_rate;
            }
        }
        simulate_bundle(truth, &channel, &vocab, idx as u64)
    }))
}

/// Built-in transcript generator: `count` sentences of roughly `mean_words`
/// words drawn from a fixed everyday-English vocabulary. Deterministic in the
/// seed; sentence `i` depends only on (seed, i).
pub fn sample_truths(count: usize, mean_words: usize, seed: u64) -> Vec<String> {
    let mean = mean_words.max(1);
    let lo = mean.saturating_sub(mean / 3).max(1);
    let hi = mean + mean / 3;
    (0..count)
        .map(|i| {
            let mut rng = substream(seed, i as u64, ROLE_TRUTH);
            let len = rng.gen_range(lo..=hi);
            let words: Vec<&str> = (0..len)
                .map(|_| BUILTIN_WORDS[rng.gen_range(0..BUILTIN_WORDS.len())])
                .collect();
            words.join(" ")
        })
        .collect()
}

/// Everyday-English word stock for generated transcripts.
pub const BUILTIN_WORDS: &[&str] = &[
    "the",
    "a",
    "an",
    "and",
    "or",
    "but",
    "so",
    "because",
    "while",
    "after",
    "before",
    "when",
    "where",
    "with",
    "without",
    "under",
    "over",
    "between",
    "through",
    "around",
    "against",
    "toward",
    "near",
    "far",
    "inside",
    "outside",
    "people",
    "person",
    "family",
    "friend",
    "teacher",
    "student",
    "doctor",
    "driver",
    "farmer",
    "worker",
    "player",
    "singer",
    "writer",
    "speaker",
    "morning",
    "evening",
    "night",
    "today",
    "tomorrow",
    "week",
    "month",
    "year",
    "season",
    "minute",
    "house",
    "room",
    "kitchen",
    "garden",
    "street",
    "road",
    "city",
    "village",
    "market",
    "station",
    "water",
    "food",
    "bread",
    "coffee",
    "rice",
    "fruit",
    "dinner",
    "breakfast",
    "river",
    "mountain",
    "forest",
    "field",
    "weather",
    "summer",
    "winter",
    "spring",
    "autumn",
    "rain",
    "snow",
    "wind",
    "storm",
    "sunshine",
    "music",
    "story",
    "letter",
    "paper",
    "book",
    "picture",
    "question",
    "answer",
    "number",
    "word",
    "voice",
    "sound",
    "language",
    "meeting",
    "journey",
    "holiday",
    "school",
    "office",
    "hospital",
    "library",
    "museum",
    "theater",
    "bridge",
    "window",
    "door",
    "table",
    "chair",
    "garden",
    "machine",
    "engine",
    "wheel",
    "train",
    "plane",
    "boat",
    "bicycle",
    "horse",
    "sheep",
    "cattle",
    "chicken",
    "garden",
    "flower",
    "tree",
    "grass",
    "leaf",
    "branch",
    "stone",
    "mountain",
    "valley",
    "island",
    "coast",
    "harbor",
    "walk",
    "run",
    "drive",
    "ride",
    "travel",
    "arrive",
    "leave",
    "return",
    "carry",
    "bring",
    "take",
    "give",
    "send",
    "receive",
    "open",
    "close",
    "start",
    "finish",
    "build",
    "repair",
    "clean",
    "wash",
    "cook",
    "serve",
    "teach",
    "learn",
    "read",
    "write",
    "speak",
    "listen",
    "watch",
    "remember",
    "forget",
    "think",
    "believe",
    "understand",
    "explain",
    "describe",
    "discuss",
    "decide",
    "choose",
    "change",
    "grow",
    "plant",
    "harvest",
    "gather",
    "collect",
    "count",
    "measure",
    "weigh",
    "early",
    "late",
    "quick",
    "slow",
    "quiet",
    "loud",
    "bright",
    "dark",
    "warm",
    "cold",
    "fresh",
    "clean",
    "heavy",
    "light",
    "strong",
    "gentle",
    "simple",
    "common",
    "special",
    "whole",
    "small",
    "large",
    "long",
    "short",
    "high",
    "deep",
    "wide",
    "narrow",
    "old",
    "young",
    "new",
    "good",
    "fine",
    "ready",
    "busy",
    "free",
    "open",
    "full",
    "empty",
    "together",
    "again",
    "always",
    "often",
    "sometimes",
    "never",
    "almost",
    "nearly",
    "quite",
    "very",
    "really",
    "certainly",
];
