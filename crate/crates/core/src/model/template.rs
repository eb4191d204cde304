//! Log templates: literal words mixed with `<name>` placeholders.
//!
//! A template is kept as a list of whitespace-delimited words, each word a
//! sequence of [`Token`]s. Punctuation stays glued to the word it appears in,
//! so `nic (<id>) pid` is three words and the middle one is
//! `Literal("(") Placeholder("id") Literal(")")`.
//!
//! A literal `<` is written `\<` and a literal backslash `\\`.

use std::collections::BTreeMap;
use std::fmt;
use std::hash::Hasher;
use std::str::FromStr;

use fnv::FnvHasher;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemplateError {
    #[error("empty template")]
    Empty,
    #[error("malformed placeholder at byte {offset}: {reason}")]
    MalformedPlaceholder { offset: usize, reason: &'static str },
    #[error("adjacent placeholders <{first}><{second}> without a literal between them")]
    AdjacentPlaceholders { first: String, second: String },
    #[error("placeholder <{0}> used more than once")]
    DuplicatePlaceholder(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Token {
    Literal(String),
    Placeholder(String),
}

impl Token {
    pub fn is_literal(&self) -> bool {
        matches!(self, Token::Literal(_))
    }
}

/// Stable 64-bit content hash of a template's canonical form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TemplateId(pub u64);

impl TemplateId {
    pub fn of(raw: &str) -> Self {
        TemplateId(fnv1a(raw.as_bytes()))
    }
}

pub(crate) fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = FnvHasher::default();
    h.write(bytes);
    h.finish()
}

impl fmt::Display for TemplateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

impl FromStr for TemplateId {
    type Err = std::num::ParseIntError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        u64::from_str_radix(s, 16).map(TemplateId)
    }
}

impl Serialize for TemplateId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TemplateId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LogTemplate {
    words: Vec<Vec<Token>>,
    raw: String,
    id: TemplateId,
}

pub fn is_placeholder_name(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some('a'..='z'))
        && chars.all(|c| matches!(c, 'a'..='z' | '0'..='9' | '_'))
}

impl LogTemplate {
    /// Parses the textual form. Runs of whitespace between words collapse to
    /// a single space in the canonical form.
    pub fn parse(raw: &str) -> Result<Self, TemplateError> {
        let mut words = Vec::new();
        let mut offset = 0;
        for word in raw.split(|c: char| c.is_whitespace()) {
            if !word.is_empty() {
                words.push(parse_word(word, offset)?);
            }
            offset += word.len() + 1;
        }
        Self::from_words(words)
    }

    /// Builds a template from already tokenized words. Consecutive literals in
    /// a word are merged so the result is canonical.
    pub fn from_words(words: Vec<Vec<Token>>) -> Result<Self, TemplateError> {
        let mut canon: Vec<Vec<Token>> = Vec::with_capacity(words.len());
        let mut seen = std::collections::HashSet::new();
        for word in words {
            let mut out: Vec<Token> = Vec::with_capacity(word.len());
            for tok in word {
                match (out.last_mut(), tok) {
                    (_, Token::Literal(s)) if s.is_empty() => {}
                    (Some(Token::Literal(prev)), Token::Literal(s)) => prev.push_str(&s),
                    (Some(Token::Placeholder(prev)), Token::Placeholder(s)) => {
                        return Err(TemplateError::AdjacentPlaceholders {
                            first: prev.clone(),
                            second: s,
                        })
                    }
                    (_, Token::Placeholder(s)) => {
                        if !is_placeholder_name(&s) {
                            return Err(TemplateError::MalformedPlaceholder {
                                offset: 0,
                                reason: "illegal placeholder name",
                            });
                        }
                        if !seen.insert(s.clone()) {
                            return Err(TemplateError::DuplicatePlaceholder(s));
                        }
                        out.push(Token::Placeholder(s));
                    }
                    (_, lit) => out.push(lit),
                }
            }
            if !out.is_empty() {
                canon.push(out);
            }
        }
        if canon.is_empty() {
            return Err(TemplateError::Empty);
        }
        let raw = render_words(&canon);
        let id = TemplateId::of(&raw);
        Ok(LogTemplate {
            words: canon,
            raw,
            id,
        })
    }

    pub fn raw(&self) -> &str {
        &self.raw
    }

    pub fn id(&self) -> TemplateId {
        self.id
    }

    pub fn words(&self) -> &[Vec<Token>] {
        &self.words
    }

    pub fn word_count(&self) -> usize {
        self.words.len()
    }

    pub fn tokens(&self) -> impl Iterator<Item = &Token> {
        self.words.iter().flatten()
    }

    pub fn placeholder_names(&self) -> impl Iterator<Item = &str> {
        self.tokens().filter_map(|t| match t {
            Token::Placeholder(n) => Some(n.as_str()),
            Token::Literal(_) => None,
        })
    }

    pub fn placeholder_count(&self) -> usize {
        self.placeholder_names().count()
    }

    /// Number of literal tokens; the matcher prefers higher values.
    pub fn specificity(&self) -> usize {
        self.tokens().filter(|t| t.is_literal()).count()
    }

    /// Substitutes variable values, producing a plain message. Missing
    /// variables are rendered as their placeholder.
    pub fn substitute(&self, vars: &BTreeMap<String, String>) -> String {
        let mut out = String::new();
        for (i, word) in self.words.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            for tok in word {
                match tok {
                    Token::Literal(s) => out.push_str(s),
                    Token::Placeholder(n) => match vars.get(n) {
                        Some(v) => out.push_str(v),
                        None => {
                            out.push('<');
                            out.push_str(n);
                            out.push('>');
                        }
                    },
                }
            }
        }
        out
    }
}

impl fmt::Display for LogTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.raw)
    }
}

impl FromStr for LogTemplate {
    type Err = TemplateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        LogTemplate::parse(s)
    }
}

fn parse_word(word: &str, base: usize) -> Result<Vec<Token>, TemplateError> {
    let mut toks: Vec<Token> = Vec::new();
    let mut lit = String::new();
    let mut iter = word.char_indices().peekable();
    while let Some((i, c)) = iter.next() {
        match c {
            '\\' if matches!(iter.peek(), Some((_, '<' | '\\'))) => {
                let (_, next) = iter.next().expect("peeked");
                lit.push(next);
            }
            '<' => {
                let rest = &word[i + 1..];
                let Some(end) = rest.find('>') else {
                    return Err(TemplateError::MalformedPlaceholder {
                        offset: base + i,
                        reason: "unclosed '<'",
                    });
                };
                let name = &rest[..end];
                if !is_placeholder_name(name) {
                    return Err(TemplateError::MalformedPlaceholder {
                        offset: base + i,
                        reason: "placeholder names must match [a-z][a-z0-9_]*",
                    });
                }
                if !lit.is_empty() {
                    toks.push(Token::Literal(std::mem::take(&mut lit)));
                }
                toks.push(Token::Placeholder(name.to_string()));
                // skip name and '>'
                for _ in 0..=name.chars().count() {
                    iter.next();
                }
            }
            _ => lit.push(c),
        }
    }
    if !lit.is_empty() {
        toks.push(Token::Literal(lit));
    }
    Ok(toks)
}

fn render_words(words: &[Vec<Token>]) -> String {
    let mut out = String::new();
    for (i, word) in words.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        for tok in word {
            match tok {
                Token::Literal(s) => {
                    for c in s.chars() {
                        if c == '<' || c == '\\' {
                            out.push('\\');
                        }
                        out.push(c);
                    }
                }
                Token::Placeholder(n) => {
                    out.push('<');
                    out.push_str(n);
                    out.push('>');
                }
            }
        }
    }
    out
}

/// A word made only of literal text.
pub fn literal_word(text: &str) -> Vec<Token> {
    vec![Token::Literal(text.to_string())]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lit(s: &str) -> Token {
        Token::Literal(s.into())
    }

    fn ph(s: &str) -> Token {
        Token::Placeholder(s.into())
    }

    #[test]
    fn parses_trailing_placeholder() {
        let t = LogTemplate::parse("out of memory: killed process <pid>").unwrap();
        let toks: Vec<_> = t.tokens().cloned().collect();
        assert_eq!(
            toks,
            vec![
                lit("out"),
                lit("of"),
                lit("memory:"),
                lit("killed"),
                lit("process"),
                ph("pid")
            ]
        );
        assert_eq!(t.specificity(), 5);
    }

    #[test]
    fn placeholder_inside_brackets() {
        let t = LogTemplate::parse("tx nic (<id>) pid").unwrap();
        assert_eq!(t.words()[2], vec![lit("("), ph("id"), lit(")")]);
        assert_eq!(t.raw(), "tx nic (<id>) pid");
    }

    #[test]
    fn adjacent_placeholders_rejected() {
        assert!(matches!(
            LogTemplate::parse("<a><b>"),
            Err(TemplateError::AdjacentPlaceholders { .. })
        ));
        // a space in between is a literal boundary
        assert!(LogTemplate::parse("<a> <b>").is_ok());
    }

    #[test]
    fn malformed_placeholders() {
        for bad in ["x <pid", "x <Pid>", "<1a>", "a <> b", "<a-b>"] {
            assert!(
                matches!(
                    LogTemplate::parse(bad),
                    Err(TemplateError::MalformedPlaceholder { .. })
                ),
                "{bad}"
            );
        }
    }

    #[test]
    fn duplicate_names_rejected() {
        assert_eq!(
            LogTemplate::parse("<v> x <v>"),
            Err(TemplateError::DuplicatePlaceholder("v".into()))
        );
    }

    #[test]
    fn escapes_round_trip() {
        let t = LogTemplate::from_words(vec![literal_word("a<b"), literal_word("c\\d")]).unwrap();
        assert_eq!(t.raw(), "a\\<b c\\\\d");
        assert_eq!(LogTemplate::parse(t.raw()).unwrap(), t);
    }

    #[test]
    fn whitespace_collapses_and_id_is_stable() {
        let a = LogTemplate::parse("a   b\t<x>").unwrap();
        let b = LogTemplate::parse("a b <x>").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.id(), TemplateId::of("a b <x>"));
        assert_eq!(a.id().to_string().len(), 16);
    }

    #[test]
    fn empty_is_error() {
        assert_eq!(LogTemplate::parse("   "), Err(TemplateError::Empty));
    }

    #[test]
    fn descriptive_placeholders_are_legal() {
        for name in ["ts", "host_h", "m", "f", "l", "v", "id"] {
            assert!(is_placeholder_name(name));
        }
        assert!(LogTemplate::parse("<m>-<f>:<l>: tx nic").is_ok());
    }
}
