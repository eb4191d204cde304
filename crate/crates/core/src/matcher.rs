//! Binding raw lines to templates and measuring coverage.
//!
//! A placeholder consumes exactly one whitespace-delimited token (or the part
//! of it between the surrounding literal pieces). When several templates
//! match, the one with the most literal tokens wins; ties go to the smallest
//! template id.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Exec;
use crate::model::{LogTemplate, ParsedEvent, RawLogRecord, SeverityRules, TemplateError, TemplateId, Token};

pub const MAX_UNMATCHED_EXAMPLES: usize = 100;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatchError {
    #[error("template set is empty")]
    EmptyTemplateSet,
    #[error("templates line {line}: {source}")]
    BadTemplate {
        line: usize,
        #[source]
        source: TemplateError,
    },
}

/// Parses a templates file: one template per line, `#` starts a comment line.
pub fn parse_templates_file(text: &str) -> Result<Vec<LogTemplate>, MatchError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        out.push(
            LogTemplate::parse(t).map_err(|source| MatchError::BadTemplate { line: i + 1, source })?,
        );
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum FirstWord {
    Literal(String),
    Wildcard,
}

#[derive(Debug, Clone)]
pub struct CompiledTemplateSet {
    templates: Vec<LogTemplate>,
    specificity: Vec<usize>,
    index: HashMap<(FirstWord, usize), Vec<usize>>,
}

/// A successful match: template index into the set plus extracted values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineMatch<'a> {
    pub template: &'a LogTemplate,
    pub variables: BTreeMap<String, String>,
}

impl CompiledTemplateSet {
    pub fn compile<I: IntoIterator<Item = LogTemplate>>(templates: I) -> Result<Self, MatchError> {
        let mut templates: Vec<LogTemplate> = templates.into_iter().collect();
        if templates.is_empty() {
            return Err(MatchError::EmptyTemplateSet);
        }
        templates.sort_by(|a, b| a.id().cmp(&b.id()).then_with(|| a.raw().cmp(b.raw())));
        templates.dedup_by(|a, b| a.id() == b.id());
        let specificity = templates.iter().map(LogTemplate::specificity).collect();
        let mut index: HashMap<(FirstWord, usize), Vec<usize>> = HashMap::new();
        for (i, t) in templates.iter().enumerate() {
            index.entry(bucket_of(t)).or_default().push(i);
        }
        Ok(CompiledTemplateSet {
            templates,
            specificity,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.templates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }

    pub fn templates(&self) -> &[LogTemplate] {
        &self.templates
    }

    pub fn get(&self, id: TemplateId) -> Option<&LogTemplate> {
        self.templates
            .binary_search_by(|t| t.id().cmp(&id))
            .ok()
            .map(|i| &self.templates[i])
    }

    /// Candidate templates for a line with this first word and word count.
    fn candidates<'s>(&'s self, first: &str, words: usize) -> impl Iterator<Item = usize> + 's {
        let exact = self.index.get(&(FirstWord::Literal(first.to_string()), words));
        let wild = self.index.get(&(FirstWord::Wildcard, words));
        exact.into_iter().chain(wild).flatten().copied()
    }

    pub fn match_line(&self, message: &str) -> Option<LineMatch<'_>> {
        let words: Vec<&str> = message.split_whitespace().collect();
        let first = words.first()?;
        let mut best: Option<(usize, BTreeMap<String, String>)> = None;
        for i in self.candidates(first, words.len()) {
            if let Some((b, _)) = &best {
                let better = self.specificity[i] > self.specificity[*b]
                    || (self.specificity[i] == self.specificity[*b]
                        && self.templates[i].id() < self.templates[*b].id());
                if !better {
                    continue;
                }
            }
            if let Some(vars) = match_words(&self.templates[i], &words) {
                best = Some((i, vars));
            }
        }
        best.map(|(i, variables)| LineMatch {
            template: &self.templates[i],
            variables,
        })
    }

    pub fn parse_record(&self, record: &RawLogRecord, rules: &SeverityRules) -> Option<ParsedEvent> {
        let m = self.match_line(&record.message)?;
        Some(ParsedEvent {
            line_no: record.line_no,
            timestamp: record.timestamp,
            host: record.host.clone(),
            template_id: m.template.id(),
            variables: m.variables,
            severity: rules.classify(&record.message),
        })
    }

    /// Parses a batch, preserving input order.
    pub fn parse_batch(
        &self,
        records: &[RawLogRecord],
        rules: &SeverityRules,
        exec: Exec,
    ) -> Vec<Option<ParsedEvent>> {
        exec.map(records, |r| self.parse_record(r, rules))
    }
}

fn bucket_of(t: &LogTemplate) -> (FirstWord, usize) {
    let first = match t.words()[0].as_slice() {
        [Token::Literal(s)] => FirstWord::Literal(s.clone()),
        _ => FirstWord::Wildcard,
    };
    (first, t.word_count())
}

fn match_words(t: &LogTemplate, words: &[&str]) -> Option<BTreeMap<String, String>> {
    if t.word_count() != words.len() {
        return None;
    }
    let mut vars = BTreeMap::new();
    for (pieces, word) in t.words().iter().zip(words) {
        match_word(pieces, word, &mut vars)?;
    }
    Some(vars)
}

fn match_word(pieces: &[Token], word: &str, vars: &mut BTreeMap<String, String>) -> Option<()> {
    let mut pos = 0;
    let mut i = 0;
    while i < pieces.len() {
        match &pieces[i] {
            Token::Literal(lit) => {
                if !word[pos..].starts_with(lit.as_str()) {
                    return None;
                }
                pos += lit.len();
            }
            Token::Placeholder(name) => {
                let rest = &word[pos..];
                let len = match pieces.get(i + 1) {
                    None => rest.len(),
                    // final literal anchors at the end of the word
                    Some(Token::Literal(lit)) if i + 2 == pieces.len() => {
                        if !rest.ends_with(lit.as_str()) || rest.len() <= lit.len() {
                            return None;
                        }
                        rest.len() - lit.len()
                    }
                    Some(Token::Literal(lit)) => {
                        let skip = rest.chars().next()?.len_utf8();
                        skip + rest[skip..].find(lit.as_str())?
                    }
                    Some(Token::Placeholder(_)) => unreachable!("adjacent placeholders are rejected at parse"),
                };
                if len == 0 {
                    return None;
                }
                vars.insert(name.clone(), rest[..len].to_string());
                pos += len;
            }
        }
        i += 1;
    }
    (pos == word.len()).then_some(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub total: u64,
    pub parsed: u64,
    pub coverage_pct: f64,
    pub unmatched_examples: Vec<String>,
    /// Set when the percentage is not meaningful (no records).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub warning: Option<String>,
}

/// Mergeable partial coverage counts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CoverageCounts {
    pub total: u64,
    pub parsed: u64,
    pub unmatched: Vec<String>,
}

impl CoverageCounts {
    /// Associative; keeps the earliest unmatched examples when `self`
    /// precedes `other` in input order.
    pub fn merge(mut self, other: CoverageCounts) -> CoverageCounts {
        self.total += other.total;
        self.parsed += other.parsed;
        let room = MAX_UNMATCHED_EXAMPLES.saturating_sub(self.unmatched.len());
        self.unmatched.extend(other.unmatched.into_iter().take(room));
        self
    }

    pub fn observe(&mut self, message: &str, matched: bool) {
        self.total += 1;
        if matched {
            self.parsed += 1;
        } else if self.unmatched.len() < MAX_UNMATCHED_EXAMPLES {
            self.unmatched.push(message.to_string());
        }
    }

    pub fn report(self) -> CoverageReport {
        let (pct, warning) = if self.total == 0 {
            (0.0, Some("no records: coverage undefined, reported as 0".to_string()))
        } else {
            (coverage_pct(self.parsed, self.total), None)
        };
        CoverageReport {
            total: self.total,
            parsed: self.parsed,
            coverage_pct: pct,
            unmatched_examples: self.unmatched,
            warning,
        }
    }
}

/// Percentage of successfully parsed logs.
pub fn coverage_pct(parsed: u64, total: u64) -> f64 {
    100.0 * parsed as f64 / total as f64
}

pub fn count_batch(set: &CompiledTemplateSet, records: &[RawLogRecord], exec: Exec) -> CoverageCounts {
    exec.chunked_fold(
        records,
        4096,
        CoverageCounts::default(),
        |chunk| {
            let mut c = CoverageCounts::default();
            for r in chunk {
                c.observe(&r.message, set.match_line(&r.message).is_some());
            }
            c
        },
        CoverageCounts::merge,
    )
}

/// Coverage of a template set over a record stream.
pub fn coverage<I>(set: &CompiledTemplateSet, records: I, exec: Exec) -> CoverageReport
where
    I: IntoIterator<Item = RawLogRecord>,
{
    const BATCH: usize = 65_536;
    let mut acc = CoverageCounts::default();
    let mut batch = Vec::with_capacity(BATCH);
    for r in records {
        batch.push(r);
        if batch.len() == BATCH {
            acc = acc.merge(count_batch(set, &batch, exec));
            batch.clear();
        }
    }
    acc.merge(count_batch(set, &batch, exec)).report()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> LogTemplate {
        LogTemplate::parse(s).unwrap()
    }

    fn set(ts: &[&str]) -> CompiledTemplateSet {
        CompiledTemplateSet::compile(ts.iter().map(|s| t(s))).unwrap()
    }

    #[test]
    fn extracts_trailing_variable() {
        let s = set(&["out of memory: killed process <pid>"]);
        let m = s.match_line("out of memory: killed process 1234").unwrap();
        assert_eq!(m.variables["pid"], "1234");
        assert!(s.match_line("out of memory oom").is_none());
    }

    #[test]
    fn most_specific_wins() {
        let s = set(&["a <x> c", "a b c"]);
        assert_eq!(s.match_line("a b c").unwrap().template.raw(), "a b c");
        assert_eq!(s.match_line("a z c").unwrap().template.raw(), "a <x> c");
    }

    #[test]
    fn dedup_and_empty() {
        assert_eq!(set(&["x <a>", "y", "z <b> q"]).len(), 3);
        assert_eq!(set(&["x <a>", "x <a>"]).len(), 1);
        assert_eq!(
            CompiledTemplateSet::compile(Vec::new()).unwrap_err(),
            MatchError::EmptyTemplateSet
        );
    }

    #[test]
    fn leading_placeholder_uses_wildcard_bucket() {
        let s = set(&["<host> sshd started", "sshd started now"]);
        let tpl = s.templates().iter().find(|t| t.raw().starts_with('<')).unwrap();
        assert_eq!(bucket_of(tpl), (FirstWord::Wildcard, 3));
        assert_eq!(s.match_line("node7 sshd started").unwrap().variables["host"], "node7");
    }

    #[test]
    fn inline_pieces() {
        let s = set(&["tx nic (<id>) pid", "<m>-<f>:<l>: tx nic"]);
        assert_eq!(s.match_line("tx nic (77) pid").unwrap().variables["id"], "77");
        assert!(s.match_line("tx nic [77] pid").is_none());
        assert!(s.match_line("tx nic () pid").is_none());
        let m = s.match_line("cxi-core.c:1207: tx nic").unwrap();
        assert_eq!(m.variables["m"], "cxi");
        assert_eq!(m.variables["f"], "core.c");
        assert_eq!(m.variables["l"], "1207");
        // the final literal anchors at the end of the word
        let s = set(&["v=<x>)"]);
        assert_eq!(s.match_line("v=a)b)").unwrap().variables["x"], "a)b");
    }

    #[test]
    fn whitespace_runs_collapse() {
        let s = set(&["a <x> c"]);
        assert!(s.match_line("  a \t 1    c ").is_some());
    }

    #[test]
    fn coverage_arithmetic() {
        let s = set(&["ok <n>"]);
        let recs: Vec<RawLogRecord> = (0..2000)
            .map(|i| {
                let msg = if i < 1900 { format!("ok {i}") } else { format!("bad {i}") };
                RawLogRecord::new(i + 1, msg)
            })
            .collect();
        let r = coverage(&s, recs, Exec::Parallel);
        assert_eq!((r.total, r.parsed), (2000, 1900));
        assert_eq!(r.coverage_pct, 95.0);
        assert_eq!(r.unmatched_examples.len(), 100);
        assert_eq!(r.unmatched_examples[0], "bad 1900");
        let empty = coverage(&s, Vec::new(), Exec::Sequential);
        assert_eq!(empty.coverage_pct, 0.0);
        assert!(empty.warning.is_some());
    }

    #[test]
    fn templates_file() {
        let ts = parse_templates_file("# gold\n\nfoo <x>\n  bar\n").unwrap();
        assert_eq!(ts.len(), 2);
        assert!(matches!(
            parse_templates_file("ok\nbad <X>\n"),
            Err(MatchError::BadTemplate { line: 2, .. })
        ));
    }
}
