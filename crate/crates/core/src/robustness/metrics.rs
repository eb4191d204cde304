//! String similarity metrics for comparing extracted patterns.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("reference has no words after normalization")]
    EmptyReference,
}

/// Length of the longest common subsequence, by characters.
pub fn lcs_len(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for ca in &a {
        for (j, cb) in b.iter().enumerate() {
            cur[j + 1] = if ca == cb {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// `2·M / (|a| + |b|)` where `M` is the character LCS length. Two empty
/// strings count as identical.
pub fn avg_similarity(a: &str, b: &str) -> f64 {
    let total = a.chars().count() + b.chars().count();
    if total == 0 {
        return 1.0;
    }
    2.0 * lcs_len(a, b) as f64 / total as f64
}

/// Mean of [`avg_similarity`] over pairs; 0 for no pairs.
pub fn mean_similarity<'a, I>(pairs: I) -> f64
where
    I: IntoIterator<Item = (&'a str, &'a str)>,
{
    let (sum, n) = pairs
        .into_iter()
        .fold((0.0, 0usize), |(s, n), (a, b)| (s + avg_similarity(a, b), n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

fn edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0usize; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Unit-cost character edit distance.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    edit_distance(&a, &b)
}

/// Edit distance divided by the longer length; 0 when both are empty.
pub fn levenshtein_norm(a: &str, b: &str) -> f64 {
    let longest = a.chars().count().max(b.chars().count());
    if longest == 0 {
        return 0.0;
    }
    levenshtein(a, b) as f64 / longest as f64
}

fn is_punct(c: char) -> bool {
    c.is_ascii_punctuation() || (!c.is_ascii() && !c.is_alphanumeric())
}

/// Whitespace tokens with surrounding punctuation stripped, lowercased.
/// Tokens that are pure punctuation disappear.
pub fn wer_words(s: &str) -> Vec<String> {
    s.split_whitespace()
        .map(|t| t.trim_matches(is_punct))
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Word error rate `(S + D + I) / N_ref` as a fraction.
pub fn word_error_rate(reference: &str, hypothesis: &str) -> Result<f64, MetricError> {
    let r = wer_words(reference);
    if r.is_empty() {
        return Err(MetricError::EmptyReference);
    }
    let h = wer_words(hypothesis);
    Ok(edit_distance(&r, &h) as f64 / r.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn similarity_examples() {
        assert_eq!(avg_similarity("same", "same"), 1.0);
        assert!((avg_similarity("abc", "abd") - 4.0 / 6.0).abs() < 1e-12);
        assert_eq!(avg_similarity("a", "b"), 0.0);
        assert_eq!(mean_similarity([("a", "a"), ("a", "b")]), 0.5);
    }

    #[test]
    fn levenshtein_examples() {
        assert_eq!(levenshtein("out of memory", "ovt of memory"), 1);
        assert!((levenshtein_norm("out of memory", "ovt of memory") - 1.0 / 13.0).abs() < 1e-12);
        assert_eq!(levenshtein_norm("x", "x"), 0.0);
        assert_eq!(levenshtein_norm("", "ab"), 1.0);
        assert_eq!(levenshtein_norm("", ""), 0.0);
        assert_eq!(levenshtein("kitten", "sitting"), 3);
    }

    #[test]
    fn wer_examples() {
        assert_eq!(word_error_rate("out of memory: killed", "of memory: killed").unwrap(), 0.25);
        assert_eq!(word_error_rate("tx nic (<id>) pid", "tx nic [<id>] pid").unwrap(), 0.0);
        assert_eq!(word_error_rate("a b", "a b").unwrap(), 0.0);
        assert_eq!(word_error_rate("out of memory", "ovt of memory").unwrap(), 1.0 / 3.0);
        assert_eq!(word_error_rate("-- ::", "x"), Err(MetricError::EmptyReference));
    }

    #[test]
    fn unicode_is_counted_in_chars() {
        assert_eq!(levenshtein("né", "ne"), 1);
        assert_eq!(lcs_len("§NUM", "NUM"), 3);
    }
}
