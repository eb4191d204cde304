//! Offline template oracle: position-wise voting over a group's samples.

use crate::model::{literal_word, LogTemplate, Token};
use crate::signature::{variable_span, SignatureGroup};

/// Positions where every sample agrees stay literal; the rest become
/// `<v1>`, `<v2>`, ... left to right, keeping any `key=` prefix or brackets
/// shared by all samples. Groups with fewer than two samples, or
/// samples of different lengths, yield their samples verbatim.
pub fn heuristic_templates(group: &SignatureGroup) -> Vec<LogTemplate> {
    let samples: Vec<Vec<&str>> = group
        .representatives
        .iter()
        .map(|r| r.message.split_whitespace().collect())
        .collect();
    vote(&samples)
}

/// Literal text around the variable span, when every word has a span and
/// they all share the same prefix and suffix (`pid=`, brackets, ...).
fn shared_frame<'a>(mut words: impl Iterator<Item = &'a str>) -> Option<(&'a str, &'a str)> {
    let frame = |w: &'a str| variable_span(w).map(|(r, _)| (&w[..r.start], &w[r.end..]));
    let first = frame(words.next()?)?;
    words.all(|w| frame(w) == Some(first)).then_some(first)
}

pub fn vote(samples: &[Vec<&str>]) -> Vec<LogTemplate> {
    let Some(first) = samples.first() else {
        return Vec::new();
    };
    if samples.len() < 2 || samples.iter().any(|s| s.len() != first.len()) {
        let mut out: Vec<LogTemplate> = Vec::new();
        for s in samples {
            let words = s.iter().map(|w| literal_word(w)).collect();
            if let Ok(t) = LogTemplate::from_words(words) {
                if !out.contains(&t) {
                    out.push(t);
                }
            }
        }
        return out;
    }
    let mut next = 0;
    let words = (0..first.len())
        .map(|pos| {
            if samples.iter().all(|s| s[pos] == first[pos]) {
                literal_word(first[pos])
            } else {
                next += 1;
                let name = format!("v{next}");
                match shared_frame(samples.iter().map(|s| s[pos])) {
                    Some((pre, suf)) => vec![
                        Token::Literal(pre.to_string()),
                        Token::Placeholder(name),
                        Token::Literal(suf.to_string()),
                    ],
                    None => vec![Token::Placeholder(name)],
                }
            }
        })
        .collect();
    LogTemplate::from_words(words).into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(samples: &[&str]) -> Vec<String> {
        let toks: Vec<Vec<&str>> = samples.iter().map(|s| s.split_whitespace().collect()).collect();
        vote(&toks).iter().map(|t| t.raw().to_string()).collect()
    }

    #[test]
    fn worked_examples() {
        assert_eq!(v(&["killed process 12", "killed process 99"]), ["killed process <v1>"]);
        assert_eq!(v(&["a b", "a b"]), ["a b"]);
        assert_eq!(v(&["x 1 y 2", "x 3 y 4"]), ["x <v1> y <v2>"]);
    }

    #[test]
    fn shared_frames_stay_literal() {
        assert_eq!(v(&["pid=12 (0x1f)", "pid=9 (0xa0)"]), ["pid=<v1> (<v2>)"]);
        // differing keys: whole word varies
        assert_eq!(v(&["pid=12", "uid=9"]), ["<v1>"]);
        assert_eq!(v(&["state up", "state down"]), ["state <v1>"]);
    }

    #[test]
    fn fallbacks_are_verbatim() {
        assert_eq!(v(&["only one here"]), ["only one here"]);
        assert_eq!(v(&["a b", "a b c"]), ["a b", "a b c"]);
        assert_eq!(v(&["x<y 1", "x<y 2"]), ["x\\<y <v1>"]);
        assert!(v(&[]).is_empty());
    }
}
