//! Robustness experiment: perturb messages, re-extract their patterns and
//! compare against the gold pattern.

use serde::Serialize;
use thiserror::Error;

use super::metrics::{avg_similarity, levenshtein_norm, word_error_rate};
use super::perturb::{perturb, Perturbation, PerturbationKind};
use crate::exec::Exec;
use crate::generation::{build_prompt, extract_templates, LlmClient, PromptSpec};
use crate::matcher::CompiledTemplateSet;
use crate::model::{LogTemplate, RawLogRecord, Token};
use crate::signature::{variable_span, SignatureGroup, SignatureKey};

/// Maps one (possibly perturbed) message to a pattern string.
pub trait PatternExtractor: Sync {
    fn extract(&self, message: &str) -> Result<String, String>;
}

impl<F> PatternExtractor for F
where
    F: Fn(&str) -> Result<String, String> + Sync,
{
    fn extract(&self, message: &str) -> Result<String, String> {
        self(message)
    }
}

/// Returns the gold template a message matches exactly.
pub struct GoldMatchExtractor<'a>(pub &'a CompiledTemplateSet);

impl PatternExtractor for GoldMatchExtractor<'_> {
    fn extract(&self, message: &str) -> Result<String, String> {
        self.0
            .match_line(message)
            .map(|m| m.template.raw().to_string())
            .ok_or_else(|| "no gold template matches".to_string())
    }
}

/// Generalizes a single message by turning every maskable value into a
/// placeholder named after its class (`<num1>`, `<hex1>`, `<num2>`, ...).
#[derive(Debug, Clone, Copy, Default)]
pub struct MaskingExtractor;

/// Builds the class-named template for one message.
pub fn class_template(message: &str) -> Result<LogTemplate, String> {
    let mut counters = std::collections::HashMap::new();
    let words = message
        .split_whitespace()
        .map(|tok| match variable_span(tok) {
            Some((span, class)) => {
                let n = counters.entry(class).or_insert(0u32);
                *n += 1;
                vec![
                    Token::Literal(tok[..span.start].to_string()),
                    Token::Placeholder(format!("{}{}", class.stem(), n)),
                    Token::Literal(tok[span.end..].to_string()),
                ]
            }
            None => vec![Token::Literal(tok.to_string())],
        })
        .collect();
    LogTemplate::from_words(words).map_err(|e| e.to_string())
}

impl PatternExtractor for MaskingExtractor {
    fn extract(&self, message: &str) -> Result<String, String> {
        class_template(message).map(|t| t.raw().to_string())
    }
}

/// Asks the endpoint for a template of a single message.
pub struct LlmExtractor<'a> {
    pub client: &'a LlmClient,
    pub spec: PromptSpec,
}

impl PatternExtractor for LlmExtractor<'_> {
    fn extract(&self, message: &str) -> Result<String, String> {
        let group = SignatureGroup {
            signature: SignatureKey(0),
            masked_form: String::new(),
            token_count: message.split_whitespace().count(),
            member_count: 1,
            representatives: vec![RawLogRecord::new(1, message)],
            reservoir_seed: 0,
        };
        let prompt = build_prompt(&group, &self.spec).map_err(|e| e.to_string())?;
        let reply = self.client.request_templates(&prompt).map_err(|e| e.to_string())?;
        let x = extract_templates(&reply).map_err(|e| e.to_string())?;
        x.templates
            .into_iter()
            .next()
            .map(|t| t.raw().to_string())
            .ok_or_else(|| "reply contained no valid template".to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("message {index} matches no gold template: {message:?}")]
    NoGoldPattern { index: usize, message: String },
}

pub const MAX_FAILURE_EXAMPLES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MetricLevel {
    /// Compare gold pattern with extracted pattern.
    #[default]
    Pattern,
    /// Compare original message with perturbed message.
    Message,
}

#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub seed: u64,
    pub level: MetricLevel,
    pub exec: Exec,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            seed: 42,
            level: MetricLevel::Pattern,
            exec: Exec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FailureExample {
    pub kind: PerturbationKind,
    pub original_message: String,
    pub perturbed_message: String,
    pub original_pattern: String,
    pub transformed_pattern: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Aggregated results for one perturbation kind.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobustnessRow {
    pub kind: PerturbationKind,
    pub accuracy_pct: f64,
    pub avg_similarity: f64,
    pub levenshtein_norm: f64,
    pub wer_pct: f64,
    pub sample_count: u64,
    pub exact_matches: u64,
    pub inapplicable: u64,
    pub extractor_errors: u64,
    pub failure_examples: Vec<FailureExample>,
}

#[derive(Debug, Clone, Default)]
struct KindAcc {
    samples: u64,
    exact: u64,
    inapplicable: u64,
    errors: u64,
    sim: f64,
    lev: f64,
    wer: f64,
    wer_n: u64,
    failures: Vec<FailureExample>,
}

enum Outcome {
    Skipped,
    Scored {
        exact: bool,
        sim: f64,
        lev: f64,
        wer: Option<f64>,
        failure: Option<FailureExample>,
    },
}

impl KindAcc {
    fn add(&mut self, o: Outcome) {
        match o {
            Outcome::Skipped => self.inapplicable += 1,
            Outcome::Scored {
                exact,
                sim,
                lev,
                wer,
                failure,
            } => {
                self.samples += 1;
                self.exact += u64::from(exact);
                self.sim += sim;
                self.lev += lev;
                if let Some(w) = wer {
                    self.wer += w;
                    self.wer_n += 1;
                }
                if let Some(f) = failure {
                    self.errors += u64::from(f.error.is_some());
                    if self.failures.len() < MAX_FAILURE_EXAMPLES {
                        self.failures.push(f);
                    }
                }
            }
        }
    }

    fn row(self, kind: PerturbationKind) -> RobustnessRow {
        let mean = |x: f64, n: u64| if n == 0 { 0.0 } else { x / n as f64 };
        RobustnessRow {
            kind,
            accuracy_pct: 100.0 * mean(self.exact as f64, self.samples),
            avg_similarity: mean(self.sim, self.samples),
            levenshtein_norm: mean(self.lev, self.samples),
            wer_pct: 100.0 * mean(self.wer, self.wer_n),
            sample_count: self.samples,
            exact_matches: self.exact,
            inapplicable: self.inapplicable,
            extractor_errors: self.errors,
            failure_examples: self.failures,
        }
    }
}

fn sample_seed(seed: u64, kind: PerturbationKind, index: usize) -> u64 {
    let mut z = seed ^ ((kind as u64) << 56) ^ (index as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 33)).wrapping_mul(0xff51_afd7_ed55_8ccd);
    z ^ (z >> 33)
}

/// Runs every kind over every message and aggregates one row per kind, in
/// the order of `kinds`.
pub fn evaluate(
    gold: &CompiledTemplateSet,
    messages: &[String],
    kinds: &[PerturbationKind],
    extractor: &dyn PatternExtractor,
    opts: &EvalOptions,
) -> Result<Vec<RobustnessRow>, EvalError> {
    let mut patterns = Vec::with_capacity(messages.len());
    for (index, m) in messages.iter().enumerate() {
        let p = gold.match_line(m).ok_or_else(|| EvalError::NoGoldPattern {
            index,
            message: m.clone(),
        })?;
        patterns.push(p.template.raw().to_string());
    }
    let n = messages.len();
    let outcomes = opts.exec.map_range(0..kinds.len() * n, |job| {
        let kind = kinds[job / n];
        let i = job % n;
        score(
            kind,
            &messages[i],
            &patterns[i],
            sample_seed(opts.seed, kind, i),
            extractor,
            opts.level,
        )
    });
    let mut accs = vec![KindAcc::default(); kinds.len()];
    for (job, o) in outcomes.into_iter().enumerate() {
        accs[job / n.max(1)].add(o);
    }
    Ok(accs
        .into_iter()
        .zip(kinds)
        .map(|(acc, &k)| acc.row(k))
        .collect())
}

fn score(
    kind: PerturbationKind,
    message: &str,
    gold_pattern: &str,
    seed: u64,
    extractor: &dyn PatternExtractor,
    level: MetricLevel,
) -> Outcome {
    let Ok(perturbed) = perturb(message, Perturbation::new(kind, seed)) else {
        return Outcome::Skipped;
    };
    let (extracted, error) = match extractor.extract(&perturbed) {
        Ok(p) => (p, None),
        Err(e) => (String::new(), Some(e)),
    };
    let exact = error.is_none() && extracted == gold_pattern;
    let (a, b) = match level {
        MetricLevel::Pattern => (gold_pattern, extracted.as_str()),
        MetricLevel::Message => (message, perturbed.as_str()),
    };
    let failure = (!exact).then(|| FailureExample {
        kind,
        original_message: message.to_string(),
        perturbed_message: perturbed.clone(),
        original_pattern: gold_pattern.to_string(),
        transformed_pattern: extracted.clone(),
        error: error.clone(),
    });
    Outcome::Scored {
        exact,
        sim: avg_similarity(a, b),
        lev: levenshtein_norm(a, b),
        wer: word_error_rate(a, b).ok(),
        failure,
    }
}

/// Table with the columns Type, Acc., Avg. Sim., Lev., WER, Samples.
pub fn rows_to_csv(rows: &[RobustnessRow]) -> String {
    let mut out = String::from("Type,Acc.,Avg. Sim.,Lev.,WER,Samples,Inapplicable\n");
    for r in rows {
        out.push_str(&format!(
            "{},{:.1}%,{:.3},{:.3},{:.1}%,{},{}\n",
            r.kind.label(),
            r.accuracy_pct,
            r.avg_similarity,
            r.levenshtein_norm,
            r.wer_pct,
            r.sample_count,
            r.inapplicable
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::robustness::perturb::substitute_delimiters;

    fn gold(ts: &[&str]) -> CompiledTemplateSet {
        CompiledTemplateSet::compile(ts.iter().map(|t| LogTemplate::parse(t).unwrap())).unwrap()
    }

    #[test]
    fn perfect_extractor_scores_one() {
        let g = gold(&["tx nic (<id>) pid <p>", "out of memory: killed process <pid>"]);
        let msgs: Vec<String> = (0..20)
            .map(|i| {
                if i % 2 == 0 {
                    format!("tx nic ({i}) pid {}", i * 3)
                } else {
                    format!("out of memory: killed process {i}")
                }
            })
            .collect();
        let always = |m: &str| -> Result<String, String> {
            Ok(if m.contains("nic") {
                "tx nic (<id>) pid <p>".to_string()
            } else {
                "out of memory: killed process <pid>".to_string()
            })
        };
        let rows = evaluate(&g, &msgs, &[PerturbationKind::Typo], &always, &EvalOptions::default()).unwrap();
        // a typo in "nic" sends the sample to the other pattern
        let r = &rows[0];
        assert_eq!(r.sample_count, 20);
        assert!(r.accuracy_pct > 0.0);
        let rows = evaluate(
            &g,
            &msgs,
            &[PerturbationKind::ExtraWords],
            &always,
            &EvalOptions::default(),
        )
        .unwrap();
        assert_eq!(rows[0].accuracy_pct, 100.0);
        assert_eq!(rows[0].avg_similarity, 1.0);
        assert_eq!(rows[0].wer_pct, 0.0);
    }

    #[test]
    fn row_per_kind_and_missing_gold() {
        let g = gold(&["a <x> b"]);
        let msgs = vec!["a 1 b".to_string(), "a (2) b".to_string()];
        let rows = evaluate(&g, &msgs, &PerturbationKind::ALL, &MaskingExtractor, &EvalOptions::default()).unwrap();
        assert_eq!(rows.len(), 7);
        for r in &rows {
            assert_eq!(r.sample_count + r.inapplicable, 2);
        }
        let bad = evaluate(&g, &["zzz".to_string()], &PerturbationKind::ALL, &MaskingExtractor, &EvalOptions::default());
        assert!(matches!(bad, Err(EvalError::NoGoldPattern { index: 0, .. })));
    }

    #[test]
    fn punctuation_mirror_has_zero_wer() {
        let g = gold(&["tx nic (<id>) pid"]);
        let msgs: Vec<String> = (0..10).map(|i| format!("tx nic ({}) pid", 100 + i)).collect();
        let mirror = |m: &str| -> Result<String, String> {
            // the message only carries () or a substituted pair; mirror it onto the gold pattern
            let pair = [('[', ']'), ('{', '}')]
                .into_iter()
                .find(|(o, _)| m.contains(*o))
                .unwrap_or(('(', ')'));
            Ok(substitute_delimiters("tx nic (<id>) pid", ('(', ')'), pair))
        };
        let rows = evaluate(&g, &msgs, &[PerturbationKind::Punctuation], &mirror, &EvalOptions::default()).unwrap();
        assert_eq!(rows[0].sample_count, 10);
        assert!(rows[0].accuracy_pct < 100.0);
        assert_eq!(rows[0].wer_pct, 0.0);
        assert!(rows[0].avg_similarity < 1.0);
    }

    #[test]
    fn masking_extractor_names_by_class() {
        assert_eq!(
            class_template("pid=42 at 0xdeadbeef (7) 10.0.0.1").unwrap().raw(),
            "pid=<num1> at <hex1> (<num2>) <ip1>"
        );
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let g = gold(&["job <num1> on <ip1> wrote <path1>"]);
        let msgs: Vec<String> = (0..200)
            .map(|i| format!("job {i} on 10.0.{}.{} wrote /scratch/run{i}/x", i % 7, i % 250 + 1))
            .collect();
        let seq = EvalOptions {
            exec: Exec::Sequential,
            ..EvalOptions::default()
        };
        let par = EvalOptions {
            exec: Exec::Parallel,
            ..EvalOptions::default()
        };
        let a = evaluate(&g, &msgs, &PerturbationKind::ALL, &MaskingExtractor, &seq).unwrap();
        let b = evaluate(&g, &msgs, &PerturbationKind::ALL, &MaskingExtractor, &par).unwrap();
        assert_eq!(a, b);
        let param = a.iter().find(|r| r.kind == PerturbationKind::ParamChange).unwrap();
        assert_eq!(param.accuracy_pct, 100.0);
    }
}
