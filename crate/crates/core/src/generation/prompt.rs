use thiserror::Error;

use crate::signature::SignatureGroup;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PromptError {
    #[error("invalid prompt spec: {0}")]
    InvalidPromptSpec(&'static str),
}

/// Default instruction text. Our own wording; it asks for `<snake_case>`
/// placeholders so the reply parses with the template grammar.
pub const DEFAULT_INSTRUCTIONS: &str = "\
The example log messages above were produced by the same logging statement or by a few \
closely related statements. Construct the log template(s) that generate them. Keep every \
constant word and punctuation character exactly as it appears. Replace each variable part \
(numbers, identifiers, hostnames, addresses, paths, timestamps, durations) with a short \
placeholder of the form <name>, where name is lowercase letters, digits or underscores \
and starts with a letter. A placeholder stands for exactly one whitespace-free value. Never \
put two placeholders directly next to each other without a constant character between them, \
and never reuse a placeholder name within one template.";

pub const DEFAULT_COT_DIRECTIVE: &str = "\
Think step by step: compare the examples token by token, decide which positions are \
constant and which vary, and explain your reasoning briefly before answering.";

/// Appended to every prompt; the extractor relies on it.
pub const OUTPUT_CONTRACT: &str = "\
After your reasoning, finish with a single fenced code block (```) that contains exactly one \
template per line and nothing else.";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptSpec {
    pub example_logs: Vec<String>,
    pub instructions: String,
    pub cot_directive: String,
    pub max_examples: usize,
}

impl Default for PromptSpec {
    fn default() -> Self {
        PromptSpec {
            example_logs: Vec::new(),
            instructions: DEFAULT_INSTRUCTIONS.to_string(),
            cot_directive: DEFAULT_COT_DIRECTIVE.to_string(),
            max_examples: 5,
        }
    }
}

impl PromptSpec {
    fn validate(&self) -> Result<(), PromptError> {
        if self.instructions.trim().is_empty() {
            return Err(PromptError::InvalidPromptSpec("instructions are empty"));
        }
        if self.cot_directive.trim().is_empty() {
            return Err(PromptError::InvalidPromptSpec("reasoning directive is empty"));
        }
        if self.max_examples == 0 {
            return Err(PromptError::InvalidPromptSpec("max_examples must be at least 1"));
        }
        Ok(())
    }

    /// Renders examples, instructions and the reasoning directive, in that
    /// order. At most `max_examples` examples are listed.
    pub fn render(&self) -> Result<String, PromptError> {
        self.validate()?;
        if self.example_logs.is_empty() {
            return Err(PromptError::InvalidPromptSpec("no example logs"));
        }
        let mut out = String::from("### Example Logs\n");
        for (i, ex) in self.example_logs.iter().take(self.max_examples).enumerate() {
            out.push_str(&format!("{}. {}\n", i + 1, ex.replace(['\n', '\r'], " ")));
        }
        out.push_str("\n### Instructions\n");
        out.push_str(self.instructions.trim());
        out.push_str("\n\n### Reasoning Directive\n");
        out.push_str(self.cot_directive.trim());
        out.push('\n');
        out.push_str(OUTPUT_CONTRACT);
        out.push('\n');
        Ok(out)
    }
}

/// Prompt for one signature group.
pub fn build_prompt(group: &SignatureGroup, spec: &PromptSpec) -> Result<String, PromptError> {
    let spec = PromptSpec {
        example_logs: group
            .representatives
            .iter()
            .take(spec.max_examples)
            .map(|r| r.message.clone())
            .collect(),
        ..spec.clone()
    };
    spec.render()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::RawLogRecord;
    use crate::signature::{group, SignatureGroup};
    use crate::Exec;

    fn group_of(n: usize) -> SignatureGroup {
        let recs = (0..n).map(|i| RawLogRecord::new(i as u64 + 1, format!("job {i} done")));
        group(recs, n, 1, Exec::Sequential).unwrap().remove(0)
    }

    fn example_lines(p: &str) -> usize {
        p.lines().filter(|l| l.starts_with(|c: char| c.is_ascii_digit())).count()
    }

    #[test]
    fn sections_in_order() {
        let p = build_prompt(&group_of(3), &PromptSpec::default()).unwrap();
        let ex = p.find("### Example Logs").unwrap();
        let ins = p.find("### Instructions").unwrap();
        let cot = p.find("### Reasoning Directive").unwrap();
        assert!(ex < ins && ins < cot);
        assert_eq!(example_lines(&p), 3);
        assert!(p.trim_end().ends_with(OUTPUT_CONTRACT));
    }

    #[test]
    fn truncates_examples() {
        let p = build_prompt(&group_of(10), &PromptSpec::default()).unwrap();
        assert_eq!(example_lines(&p), 5);
    }

    #[test]
    fn empty_instructions_rejected() {
        let spec = PromptSpec {
            instructions: "  ".into(),
            ..PromptSpec::default()
        };
        assert!(matches!(
            build_prompt(&group_of(2), &spec),
            Err(PromptError::InvalidPromptSpec(_))
        ));
    }

    #[test]
    fn deterministic() {
        let g = group_of(4);
        let s = PromptSpec::default();
        assert_eq!(build_prompt(&g, &s), build_prompt(&g, &s));
    }
}
