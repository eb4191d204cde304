use thiserror::Error;

use crate::model::{LogTemplate, TemplateError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExtractError {
    #[error("response has no closed fenced template block")]
    NoTemplateBlock,
}

/// A rejected line from the template block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineError {
    /// 1-based line number within the response.
    pub line: usize,
    pub text: String,
    pub error: TemplateError,
}

/// Templates parsed from a model reply. Valid lines are kept even when
/// others fail.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Extraction {
    pub templates: Vec<LogTemplate>,
    pub errors: Vec<LineError>,
}

/// Parses the last closed ``` block of `response`; everything before it is
/// treated as reasoning and dropped.
pub fn extract_templates(response: &str) -> Result<Extraction, ExtractError> {
    let lines: Vec<&str> = response.lines().collect();
    let mut open: Option<usize> = None;
    let mut last_block: Option<(usize, usize)> = None;
    for (i, line) in lines.iter().enumerate() {
        if line.trim_start().starts_with("```") {
            match open.take() {
                Some(start) => last_block = Some((start + 1, i)),
                None => open = Some(i),
            }
        }
    }
    let (start, end) = last_block.ok_or(ExtractError::NoTemplateBlock)?;
    let mut out = Extraction::default();
    for (i, line) in lines[start..end].iter().enumerate() {
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        match LogTemplate::parse(text) {
            Ok(t) => {
                if !out.templates.contains(&t) {
                    out.templates.push(t);
                }
            }
            Err(error) => out.errors.push(LineError {
                line: start + i + 1,
                text: text.to_string(),
                error,
            }),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Token;

    #[test]
    fn single_template_after_reasoning() {
        let x = extract_templates("reasoning…\n```\nkilled process <pid>\n```").unwrap();
        assert_eq!(x.templates.len(), 1);
        assert_eq!(x.templates[0].raw(), "killed process <pid>");
        assert!(x.errors.is_empty());
    }

    #[test]
    fn no_block() {
        assert_eq!(
            extract_templates("I think it is killed process <pid>"),
            Err(ExtractError::NoTemplateBlock)
        );
        assert_eq!(
            extract_templates("```\nunterminated <x>"),
            Err(ExtractError::NoTemplateBlock)
        );
    }

    #[test]
    fn annotated_template_line() {
        let x = extract_templates("```text\ntx nic (<id>) pid\n```\n").unwrap();
        assert!(x.templates[0]
            .tokens()
            .any(|t| *t == Token::Placeholder("id".into())));
    }

    #[test]
    fn last_block_wins_and_partial_success() {
        let resp = "Step 1 compare:\n```\nold <x>\n```\nFinal:\n```\ngood <a>\n<B> bad\n\nalso <c><d>\n```";
        let x = extract_templates(resp).unwrap();
        assert_eq!(x.templates.len(), 1);
        assert_eq!(x.templates[0].raw(), "good <a>");
        assert_eq!(x.errors.len(), 2);
        assert_eq!(x.errors[0].line, 8);
        assert_eq!(x.errors[1].line, 10);
    }
}
