//! Template generation for signature groups: prompt construction, the
//! chat-completion client, reply parsing and the offline voting oracle.

mod extract;
mod heuristic;
mod llm;
mod prompt;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::Serialize;

pub use extract::{extract_templates, ExtractError, Extraction, LineError};
pub use heuristic::{heuristic_templates, vote};
pub use llm::{
    parse_response, request_body, request_templates, LlmClient, LlmEndpointConfig, LlmError,
    ENV_API_TOKEN, ENV_BASE_URL,
};
pub use prompt::{
    build_prompt, PromptError, PromptSpec, DEFAULT_COT_DIRECTIVE, DEFAULT_INSTRUCTIONS,
    OUTPUT_CONTRACT,
};

use crate::exec::Exec;
use crate::model::LogTemplate;
use crate::signature::{SignatureGroup, SignatureKey};

/// Templates produced for one group, or why none were.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GroupTemplates {
    pub signature: SignatureKey,
    pub member_count: u64,
    #[serde(serialize_with = "raw_list")]
    pub templates: Vec<LogTemplate>,
    /// Per-line parse failures and request failures, human readable.
    pub errors: Vec<String>,
    /// The request itself failed (transport, timeout or HTTP status).
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub endpoint_failed: bool,
}

fn raw_list<S: serde::Serializer>(ts: &[LogTemplate], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(ts.iter().map(LogTemplate::raw))
}

pub fn heuristic_all(groups: &[SignatureGroup], exec: Exec) -> Vec<GroupTemplates> {
    exec.map(groups, |g| GroupTemplates {
        signature: g.signature,
        member_count: g.member_count,
        templates: heuristic_templates(g),
        errors: Vec::new(),
        endpoint_failed: false,
    })
}

/// Runs prompt → request → extraction for one group. Never panics on bad
/// replies; failures land in `errors`.
pub fn llm_one(client: &LlmClient, group: &SignatureGroup, spec: &PromptSpec) -> GroupTemplates {
    let mut out = GroupTemplates {
        signature: group.signature,
        member_count: group.member_count,
        templates: Vec::new(),
        errors: Vec::new(),
        endpoint_failed: false,
    };
    let prompt = match build_prompt(group, spec) {
        Ok(p) => p,
        Err(e) => {
            out.errors.push(e.to_string());
            return out;
        }
    };
    match client.request_templates(&prompt) {
        Err(e) => {
            out.endpoint_failed = !matches!(e, LlmError::MalformedResponse(_));
            out.errors.push(e.to_string());
        }
        Ok(text) => match extract_templates(&text) {
            Err(e) => out.errors.push(e.to_string()),
            Ok(x) => {
                out.templates = x.templates;
                out.errors = x
                    .errors
                    .into_iter()
                    .map(|e| format!("reply line {}: {:?}: {}", e.line, e.text, e.error))
                    .collect();
            }
        },
    }
    out
}

/// Queries the endpoint for every group with at most
/// `max_concurrent_requests` calls in flight. Output is in group order.
pub fn llm_all(client: &LlmClient, groups: &[SignatureGroup], spec: &PromptSpec) -> Vec<GroupTemplates> {
    let workers = client.config().max_concurrent_requests.min(groups.len()).max(1);
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<GroupTemplates>>> = groups.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(g) = groups.get(i) else { break };
                let r = llm_one(client, g, spec);
                *slots[i].lock().expect("slot lock") = Some(r);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().expect("slot lock").expect("every group processed"))
        .collect()
}

/// Renders results as a templates file, one commented header per group.
pub fn to_templates_file(results: &[GroupTemplates]) -> String {
    let mut out = String::new();
    let mut seen = std::collections::HashSet::new();
    for r in results {
        out.push_str(&format!(
            "# group {} ({} lines)\n",
            r.signature,
            r.member_count
        ));
        for e in &r.errors {
            out.push_str(&format!("# error: {}\n", e.replace('\n', " ")));
        }
        for t in &r.templates {
            if seen.insert(t.id()) {
                out.push_str(t.raw());
                out.push('\n');
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcher::{parse_templates_file, CompiledTemplateSet};
    use crate::model::RawLogRecord;
    use crate::signature::group;

    #[test]
    fn heuristic_file_round_trips_and_covers_samples() {
        let recs: Vec<RawLogRecord> = (0..40)
            .map(|i| {
                let msg = if i % 2 == 0 {
                    format!("killed process {}", 1000 + i)
                } else {
                    format!("link <{i}> reset at 0x{:04x}", i * 7 + 4096)
                };
                RawLogRecord::new(i + 1, msg)
            })
            .collect();
        let groups = group(recs, 5, 3, Exec::Sequential).unwrap();
        let results = heuristic_all(&groups, Exec::Parallel);
        let file = to_templates_file(&results);
        let templates = parse_templates_file(&file).unwrap();
        assert_eq!(templates.len(), 2);
        let set = CompiledTemplateSet::compile(templates).unwrap();
        for g in &groups {
            for r in &g.representatives {
                assert!(set.match_line(&r.message).is_some(), "{}", r.message);
            }
        }
    }
}
