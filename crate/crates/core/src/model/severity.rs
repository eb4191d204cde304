use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Severity categories used for reporting, least to most severe, with
/// `Unknown` last.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Severity {
    Info,
    Warning,
    Error,
    DiskError,
    HardwareError,
    CriticalFatal,
    KernelPanicCrash,
    Unknown,
}

impl Severity {
    pub const ALL: [Severity; 8] = [
        Severity::Info,
        Severity::Warning,
        Severity::Error,
        Severity::DiskError,
        Severity::HardwareError,
        Severity::CriticalFatal,
        Severity::KernelPanicCrash,
        Severity::Unknown,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Severity::Info => "INFO",
            Severity::Warning => "WARNING",
            Severity::Error => "ERROR",
            Severity::DiskError => "DISK_ERROR",
            Severity::HardwareError => "HARDWARE_ERROR",
            Severity::CriticalFatal => "CRITICAL_FATAL",
            Severity::KernelPanicCrash => "KERNEL_PANIC_CRASH",
            Severity::Unknown => "UNKNOWN",
        }
    }

    /// Rule priority: lower wins.
    fn priority(self) -> u8 {
        match self {
            Severity::KernelPanicCrash => 0,
            Severity::CriticalFatal => 1,
            Severity::HardwareError => 2,
            Severity::DiskError => 3,
            Severity::Error => 4,
            Severity::Warning => 5,
            Severity::Info => 6,
            Severity::Unknown => 7,
        }
    }
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown severity {0:?}")]
pub struct UnknownSeverity(pub String);

impl FromStr for Severity {
    type Err = UnknownSeverity;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Severity::ALL
            .into_iter()
            .find(|v| v.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| UnknownSeverity(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuleFileError {
    #[error("line {line}: expected SEVERITY<TAB>substring")]
    MissingTab { line: usize },
    #[error("line {line}: {source}")]
    BadSeverity {
        line: usize,
        #[source]
        source: UnknownSeverity,
    },
    #[error("line {line}: empty substring")]
    EmptyPattern { line: usize },
}

/// Ordered keyword rules mapping a message to a [`Severity`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeverityRules {
    // sorted by severity priority, file order within a severity
    rules: Vec<(Severity, String)>,
}

pub const DEFAULT_SEVERITY_RULES: &str = include_str!("../../data/severity_rules.tsv");

impl Default for SeverityRules {
    fn default() -> Self {
        SeverityRules::parse(DEFAULT_SEVERITY_RULES).expect("bundled severity rules are valid")
    }
}

impl SeverityRules {
    pub fn parse(text: &str) -> Result<Self, RuleFileError> {
        let mut rules = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let trimmed = line.trim_end_matches('\r');
            if trimmed.trim().is_empty() || trimmed.trim_start().starts_with('#') {
                continue;
            }
            let (sev, pat) = trimmed
                .split_once('\t')
                .ok_or(RuleFileError::MissingTab { line: line_no })?;
            let sev: Severity = sev.parse().map_err(|source| RuleFileError::BadSeverity {
                line: line_no,
                source,
            })?;
            if pat.is_empty() {
                return Err(RuleFileError::EmptyPattern { line: line_no });
            }
            rules.push((sev, pat.to_lowercase()));
        }
        rules.sort_by_key(|(s, _)| s.priority());
        Ok(SeverityRules { rules })
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn classify(&self, message: &str) -> Severity {
        if message.is_empty() {
            return Severity::Unknown;
        }
        let lower = message.to_lowercase();
        self.rules
            .iter()
            .find(|(_, pat)| lower.contains(pat.as_str()))
            .map_or(Severity::Unknown, |(s, _)| *s)
    }
}

/// Classifies with the bundled default rules.
pub fn classify_severity(message: &str) -> Severity {
    thread_local! {
        static RULES: SeverityRules = SeverityRules::default();
    }
    RULES.with(|r| r.classify(message))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_examples() {
        assert_eq!(
            classify_severity("kernel panic - not syncing"),
            Severity::KernelPanicCrash
        );
        assert_eq!(
            classify_severity("out of memory: killed process 42"),
            Severity::Error
        );
        assert_eq!(classify_severity(""), Severity::Unknown);
    }

    #[test]
    fn priority_beats_file_order() {
        let rules = SeverityRules::parse("WARNING\twarn\nKERNEL_PANIC_CRASH\tpanic\n").unwrap();
        assert_eq!(rules.classify("warn: panic"), Severity::KernelPanicCrash);
    }

    #[test]
    fn case_insensitive() {
        assert_eq!(
            classify_severity("EDAC MC0: 1 CE ECC error"),
            Severity::HardwareError
        );
        assert_eq!(
            classify_severity("blk_update_request: I/O error, dev sda"),
            Severity::DiskError
        );
        assert_eq!(classify_severity("Warning: link flap"), Severity::Warning);
        assert_eq!(classify_severity("xyzzy"), Severity::Unknown);
    }

    #[test]
    fn rule_file_errors() {
        assert_eq!(
            SeverityRules::parse("# c\nINFO hello"),
            Err(RuleFileError::MissingTab { line: 2 })
        );
        assert!(matches!(
            SeverityRules::parse("LOUD\tx"),
            Err(RuleFileError::BadSeverity { line: 1, .. })
        ));
    }

    #[test]
    fn order_is_total_with_unknown_last() {
        let mut all = Severity::ALL.to_vec();
        all.reverse();
        all.sort();
        assert_eq!(all, Severity::ALL.to_vec());
        assert_eq!(*all.last().unwrap(), Severity::Unknown);
        assert_eq!("disk_error".parse::<Severity>().unwrap(), Severity::DiskError);
    }
}
