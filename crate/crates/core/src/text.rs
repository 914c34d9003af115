//! Transcript tokenization.
//!
//! Hypotheses are compared either as word sequences or as character
//! sequences; every [`TokenSequence`] records which unit produced it so that
//! distances are never computed across units. Normalization is explicit and
//! off by default: ingested hypotheses are compared verbatim unless the
//! caller opts in.

use serde::{Deserialize, Serialize};

/// Granularity of a token sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TokenUnit {
    /// Whitespace-delimited words.
    Word,
    /// Unicode scalar values (whitespace excluded unless requested).
    Char,
}

/// Text normalization applied before splitting into tokens.
///
/// Defaults to no normalization. `collapse_whitespace` only matters for the
/// `Char` unit with `include_spaces_in_chars` set; the `Word` unit always
/// splits on whitespace runs, which collapses them implicitly.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NormalizationOptions {
    pub lowercase: bool,
    /// Drop characters that are neither alphanumeric, whitespace, nor an
    /// apostrophe.
    pub strip_punctuation: bool,
    pub collapse_whitespace: bool,
    /// Keep whitespace characters as tokens in `Char` mode. Off by default:
    /// the character-level distance denominator counts non-space characters.
    pub include_spaces_in_chars: bool,
}

/// An ordered list of tokens tagged with the unit that produced it.
///
/// Invariants: no token is empty; `Word` tokens contain no whitespace; `Char`
/// tokens are single Unicode scalars.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSequence {
    tokens: Vec<String>,
    unit: TokenUnit,
}

impl TokenSequence {
    /// Builds a sequence from pre-split tokens, checking the unit invariants.
    pub fn new(tokens: Vec<String>, unit: TokenUnit) -> crate::Result<Self> {
        for tok in &tokens {
            if tok.is_empty() {
                return Err(crate::Error::InvalidParameter(
                    "empty token in sequence".into(),
                ));
            }
            match unit {
                TokenUnit::Word => {
                    if tok.chars().any(char::is_whitespace) {
                        return Err(crate::Error::InvalidParameter(format!(
                            "word token {tok:?} contains whitespace"
                        )));
                    }
                }
                TokenUnit::Char => {
                    if tok.chars().count() != 1 {
                        return Err(crate::Error::InvalidParameter(format!(
                            "char token {tok:?} is not a single scalar"
                        )));
                    }
                }
            }
        }
        Ok(Self { tokens, unit })
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn unit(&self) -> TokenUnit {
        self.unit
    }

    /// Number of tokens; the denominator of reference-normalized distances.
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Space-joined token text. The canonical transcript form for `Word`
    /// sequences; retokenizing it reproduces the sequence.
    pub fn join_spaced(&self) -> String {
        self.tokens.join(" ")
    }
}

fn normalize(text: &str, opts: &NormalizationOptions) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        if opts.strip_punctuation && !c.is_alphanumeric() && !c.is_whitespace() && c != '\'' {
            continue;
        }
        if opts.lowercase {
            out.extend(c.to_lowercase());
        } else {
            out.push(c);
        }
    }
    out
}

/// Splits `text` into a token sequence of the requested unit.
///
/// Total function: empty or whitespace-only input yields an empty sequence.
/// Deterministic: the same text and options always produce the same tokens.
pub fn tokenize(text: &str, unit: TokenUnit, opts: &NormalizationOptions) -> TokenSequence {
    let normalized = normalize(text, opts);
    let tokens = match unit {
        TokenUnit::Word => normalized
            .split_whitespace()
            .map(str::to_owned)
            .collect::<Vec<_>>(),
        TokenUnit::Char => {
            let mut tokens = Vec::with_capacity(normalized.len());
            let mut prev_space = false;
            for c in normalized.chars() {
                if c.is_whitespace() {
                    if opts.include_spaces_in_chars {
                        if !(opts.collapse_whitespace && prev_space) {
                            tokens.push(' '.to_string());
                        }
                        prev_space = true;
                    }
                    continue;
                }
                prev_space = false;
                tokens.push(c.to_string());
            }
            // Trim leading/trailing space tokens so padded input matches its
            // trimmed form.
            if opts.include_spaces_in_chars {
                while tokens.last().is_some_and(|t| t == " ") {
                    tokens.pop();
                }
                while tokens.first().is_some_and(|t| t == " ") {
                    tokens.remove(0);
                }
            }
            tokens
        }
    };
    TokenSequence { tokens, unit }
}
