//! Shared data types: records, templates, parsed events and severities.

mod record;
mod severity;
mod template;

pub use record::{BadTimestamp, ParsedEvent, RawLogRecord, RecordError, Timestamp};
pub use severity::{
    classify_severity, RuleFileError, Severity, SeverityRules, UnknownSeverity,
    DEFAULT_SEVERITY_RULES,
};
pub use template::{is_placeholder_name, literal_word, LogTemplate, TemplateError, TemplateId, Token};

pub(crate) use template::fnv1a;
