//! Seeded message perturbations simulating common log noise.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::signature::variable_span;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PerturbationKind {
    ParamChange,
    Typo,
    Whitespace,
    WordReorder,
    Punctuation,
    MissingWords,
    ExtraWords,
}

impl PerturbationKind {
    pub const ALL: [PerturbationKind; 7] = [
        PerturbationKind::ParamChange,
        PerturbationKind::Typo,
        PerturbationKind::Whitespace,
        PerturbationKind::WordReorder,
        PerturbationKind::Punctuation,
        PerturbationKind::MissingWords,
        PerturbationKind::ExtraWords,
    ];

    /// Report label.
    pub fn label(self) -> &'static str {
        match self {
            PerturbationKind::ParamChange => "Param Change",
            PerturbationKind::Typo => "Typo",
            PerturbationKind::Whitespace => "Whitespace",
            PerturbationKind::WordReorder => "Word Reorder",
            PerturbationKind::Punctuation => "Punctuation",
            PerturbationKind::MissingWords => "Missing Words",
            PerturbationKind::ExtraWords => "Extra Words",
        }
    }

    fn salt(self) -> u64 {
        0x5eed_0000 + self as u64
    }
}

impl fmt::Display for PerturbationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown perturbation kind {0:?}")]
pub struct UnknownKind(pub String);

impl FromStr for PerturbationKind {
    type Err = UnknownKind;

    /// Accepts labels in any case, with or without spaces, `-` or `_`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let squash = |x: &str| {
            x.chars()
                .filter(|c| c.is_ascii_alphanumeric())
                .collect::<String>()
                .to_lowercase()
        };
        let want = squash(s);
        PerturbationKind::ALL
            .into_iter()
            .find(|k| squash(k.label()) == want)
            .ok_or_else(|| UnknownKind(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind} does not apply: {reason}")]
pub struct Inapplicable {
    pub kind: PerturbationKind,
    pub reason: &'static str,
}

/// Words inserted by [`PerturbationKind::ExtraWords`].
pub const EXTRA_WORDS: [&str; 3] = ["warning:", "note:", "debug:"];

/// Delimiter pairs swapped by [`PerturbationKind::Punctuation`].
pub const DELIMITER_PAIRS: [(char, char); 3] = [('(', ')'), ('[', ']'), ('{', '}')];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Perturbation {
    pub kind: PerturbationKind,
    pub seed: u64,
}

impl Perturbation {
    pub fn new(kind: PerturbationKind, seed: u64) -> Self {
        Perturbation { kind, seed }
    }

    pub fn apply(&self, message: &str) -> Result<String, Inapplicable> {
        perturb(message, *self)
    }
}

fn token_spans(s: &str) -> Vec<Range<usize>> {
    let mut spans = Vec::new();
    let mut start = None;
    for (i, c) in s.char_indices() {
        match (c.is_whitespace(), start) {
            (true, Some(st)) => {
                spans.push(st..i);
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(st) = start {
        spans.push(st..s.len());
    }
    spans
}

/// Replaces the character at `char_index` with `replacement`.
pub fn substitute_char(message: &str, char_index: usize, replacement: char) -> String {
    message
        .chars()
        .enumerate()
        .map(|(i, c)| if i == char_index { replacement } else { c })
        .collect()
}

/// Swaps every occurrence of the `from` pair for the `to` pair.
pub fn substitute_delimiters(message: &str, from: (char, char), to: (char, char)) -> String {
    message
        .chars()
        .map(|c| {
            if c == from.0 {
                to.0
            } else if c == from.1 {
                to.1
            } else {
                c
            }
        })
        .collect()
}

/// Adds `word` as a new first or last token.
pub fn add_word(message: &str, word: &str, prefix: bool) -> String {
    if prefix {
        format!("{word} {message}")
    } else {
        format!("{message} {word}")
    }
}

fn inapplicable(kind: PerturbationKind, reason: &'static str) -> Inapplicable {
    Inapplicable { kind, reason }
}

/// Applies one perturbation. Same message, kind and seed give the same output.
pub fn perturb(message: &str, p: Perturbation) -> Result<String, Inapplicable> {
    let kind = p.kind;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed ^ kind.salt().rotate_left(32));
    if message.trim().is_empty() {
        return Err(inapplicable(kind, "empty message"));
    }
    let spans = token_spans(message);
    match kind {
        PerturbationKind::ParamChange => {
            let vars: Vec<(Range<usize>, _)> = spans
                .iter()
                .filter_map(|sp| {
                    variable_span(&message[sp.clone()])
                        .map(|(r, class)| (sp.start + r.start..sp.start + r.end, class))
                })
                .collect();
            let (range, class) = vars
                .choose(&mut rng)
                .cloned()
                .ok_or(inapplicable(kind, "no variable token"))?;
            let old = &message[range.clone()];
            let mut fresh = class.sample(&mut rng);
            for _ in 0..16 {
                if fresh != old {
                    break;
                }
                fresh = class.sample(&mut rng);
            }
            Ok(format!("{}{}{}", &message[..range.start], fresh, &message[range.end..]))
        }
        PerturbationKind::Typo => {
            let letters: Vec<(usize, char)> = message
                .chars()
                .enumerate()
                .filter(|(_, c)| c.is_ascii_alphabetic())
                .collect();
            let &(idx, old) = letters
                .choose(&mut rng)
                .ok_or(inapplicable(kind, "no alphabetic character"))?;
            let mut off = rng.random_range(1..26u8);
            let base = if old.is_ascii_uppercase() { b'A' } else { b'a' };
            off = ((old as u8 - base) + off) % 26;
            Ok(substitute_char(message, idx, (base + off) as char))
        }
        PerturbationKind::Whitespace => {
            let spaces: Vec<usize> = message.match_indices(' ').map(|(i, _)| i).collect();
            let &at = spaces
                .choose(&mut rng)
                .ok_or(inapplicable(kind, "no space to edit"))?;
            let replacement = match rng.random_range(0..3u8) {
                0 => "",
                1 => "  ",
                _ => "\t",
            };
            Ok(format!("{}{}{}", &message[..at], replacement, &message[at + 1..]))
        }
        PerturbationKind::WordReorder => {
            if spans.len() < 2 {
                return Err(inapplicable(kind, "fewer than two tokens"));
            }
            let pick = rng.random_range(1..spans.len());
            let mut words: Vec<&str> = spans.iter().map(|sp| &message[sp.clone()]).collect();
            let moved = words.remove(pick);
            words.insert(0, moved);
            Ok(words.join(" "))
        }
        PerturbationKind::Punctuation => {
            let present: Vec<(char, char)> = DELIMITER_PAIRS
                .into_iter()
                .filter(|(o, c)| message.contains(*o) || message.contains(*c))
                .collect();
            let &from = present
                .choose(&mut rng)
                .ok_or(inapplicable(kind, "no bracket delimiters"))?;
            let others: Vec<(char, char)> =
                DELIMITER_PAIRS.into_iter().filter(|p| *p != from).collect();
            let &to = others.choose(&mut rng).expect("two other pairs");
            Ok(substitute_delimiters(message, from, to))
        }
        PerturbationKind::MissingWords => {
            if spans.len() < 2 {
                return Err(inapplicable(kind, "fewer than two tokens"));
            }
            let drop = rng.random_range(0..spans.len());
            let words: Vec<&str> = spans
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != drop)
                .map(|(_, sp)| &message[sp.clone()])
                .collect();
            Ok(words.join(" "))
        }
        PerturbationKind::ExtraWords => {
            let word = EXTRA_WORDS.choose(&mut rng).expect("non-empty");
            Ok(add_word(message, word, rng.random_bool(0.5)))
        }
    }
}
