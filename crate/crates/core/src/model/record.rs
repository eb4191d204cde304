use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::severity::Severity;
use super::template::TemplateId;

/// UTC instant as nanoseconds since the Unix epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Timestamp(pub i64);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid epoch timestamp {0:?}")]
pub struct BadTimestamp(pub String);

impl Timestamp {
    pub const NANOS_PER_SEC: i64 = 1_000_000_000;

    pub fn from_secs(secs: i64) -> Self {
        Timestamp(secs * Self::NANOS_PER_SEC)
    }

    /// Returns `None` for non-finite or out-of-range values.
    pub fn from_secs_f64(secs: f64) -> Option<Self> {
        let ns = secs * 1e9;
        (ns.is_finite() && ns.abs() < i64::MAX as f64).then(|| Timestamp(ns.round() as i64))
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / 1e9
    }

    pub fn as_nanos(self) -> i64 {
        self.0
    }
}

impl FromStr for Timestamp {
    type Err = BadTimestamp;

    /// Parses decimal epoch seconds exactly, e.g. `1700000000.25`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || BadTimestamp(s.to_string());
        let t = s.trim();
        let (neg, body) = match t.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, t),
        };
        let (int, frac) = body.split_once('.').unwrap_or((body, ""));
        if int.is_empty() && frac.is_empty() {
            return Err(bad());
        }
        if !int.bytes().all(|b| b.is_ascii_digit()) || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let secs: i64 = if int.is_empty() {
            0
        } else {
            int.parse().map_err(|_| bad())?
        };
        let mut nanos: i64 = 0;
        for (i, b) in frac.bytes().take(9).enumerate() {
            nanos += i64::from(b - b'0') * 10i64.pow(8 - i as u32);
        }
        let total = secs
            .checked_mul(Self::NANOS_PER_SEC)
            .and_then(|v| v.checked_add(nanos))
            .ok_or_else(bad)?;
        Ok(Timestamp(if neg { -total } else { total }))
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let secs = self.0.div_euclid(Self::NANOS_PER_SEC);
        let nanos = self.0.rem_euclid(Self::NANOS_PER_SEC);
        if nanos == 0 {
            write!(f, "{secs}")
        } else {
            let frac = format!("{nanos:09}");
            write!(f, "{secs}.{}", frac.trim_end_matches('0'))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawLogRecord {
    pub line_no: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub timestamp: Option<Timestamp>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub host: Option<String>,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub source_file: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RecordError {
    #[error("line {0}: empty message")]
    EmptyMessage(u64),
}

impl RawLogRecord {
    pub fn new(line_no: u64, message: impl Into<String>) -> Self {
        RawLogRecord {
            line_no,
            timestamp: None,
            host: None,
            message: message.into(),
            source_file: None,
        }
    }

    pub fn with_meta(mut self, timestamp: Option<Timestamp>, host: Option<String>) -> Self {
        self.timestamp = timestamp;
        self.host = host;
        self
    }

    /// Parses one input line. An optional `epoch_seconds<TAB>host<TAB>` prefix
    /// fills the timestamp and host; otherwise the whole line is the message.
    pub fn from_line(line_no: u64, line: &str) -> Result<Self, RecordError> {
        let line = line.trim_end_matches(['\r', '\n']);
        let mut parts = line.splitn(3, '\t');
        if let (Some(ts), Some(host), Some(msg)) = (parts.next(), parts.next(), parts.next()) {
            if let Ok(ts) = ts.parse::<Timestamp>() {
                let msg = msg.replace(['\r', '\n'], " ");
                if msg.trim().is_empty() {
                    return Err(RecordError::EmptyMessage(line_no));
                }
                let host = (!host.is_empty()).then(|| host.to_string());
                return Ok(RawLogRecord::new(line_no, msg).with_meta(Some(ts), host));
            }
        }
        if line.trim().is_empty() {
            return Err(RecordError::EmptyMessage(line_no));
        }
        Ok(RawLogRecord::new(line_no, line))
    }

    /// Inverse of [`RawLogRecord::from_line`].
    pub fn to_line(&self) -> String {
        match &self.timestamp {
            Some(ts) => format!(
                "{ts}\t{}\t{}",
                self.host.as_deref().unwrap_or(""),
                self.message
            ),
            None => self.message.clone(),
        }
    }
}

/// A record bound to the template it matched.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedEvent {
    pub line_no: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub timestamp: Option<Timestamp>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub host: Option<String>,
    pub template_id: TemplateId,
    pub variables: BTreeMap<String, String>,
    pub severity: Severity,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prefixed_line() {
        let r = RawLogRecord::from_line(3, "1700000000.5\tfrontier00012\tkernel: oops").unwrap();
        assert_eq!(r.timestamp, Some(Timestamp(1_700_000_000_500_000_000)));
        assert_eq!(r.host.as_deref(), Some("frontier00012"));
        assert_eq!(r.message, "kernel: oops");
        assert_eq!(r.to_line(), "1700000000.5\tfrontier00012\tkernel: oops");
    }

    #[test]
    fn bare_line_keeps_tabs() {
        let r = RawLogRecord::from_line(1, "abc\tdef\tghi").unwrap();
        assert_eq!(r.timestamp, None);
        assert_eq!(r.message, "abc\tdef\tghi");
        assert!(RawLogRecord::from_line(2, "  ").is_err());
    }

    #[test]
    fn timestamp_parse_and_display() {
        assert_eq!("12".parse::<Timestamp>().unwrap(), Timestamp::from_secs(12));
        assert_eq!("0.000000001".parse::<Timestamp>().unwrap(), Timestamp(1));
        assert_eq!("-1.5".parse::<Timestamp>().unwrap(), Timestamp(-1_500_000_000));
        assert!("1e9".parse::<Timestamp>().is_err());
        assert!("99999999999999999999".parse::<Timestamp>().is_err());
        assert_eq!(Timestamp(1_500_000_000).to_string(), "1.5");
        assert_eq!(Timestamp::from_secs_f64(f64::NAN), None);
    }
}
