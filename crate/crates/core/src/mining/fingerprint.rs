use std::collections::{HashMap, HashSet};

use serde::Serialize;

use crate::model::{ParsedEvent, Severity, TemplateId, Timestamp};

/// Aggregate statistics for one template.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FingerprintRow {
    pub template_id: TemplateId,
    pub pattern: String,
    pub count: u64,
    pub first_seen: Option<Timestamp>,
    pub last_seen: Option<Timestamp>,
    pub severity: Severity,
    pub distinct_hosts: usize,
}

#[derive(Debug, Clone, Default)]
struct RowAcc {
    count: u64,
    first: Option<Timestamp>,
    last: Option<Timestamp>,
    hosts: HashSet<String>,
    severity: Option<Severity>,
}

/// Most severe known category; `Unknown` only when nothing else was seen.
fn worse(a: Option<Severity>, b: Severity) -> Severity {
    match a {
        None => b,
        Some(Severity::Unknown) => b,
        Some(a) if b == Severity::Unknown => a,
        Some(a) => a.max(b),
    }
}

impl RowAcc {
    fn merge(&mut self, o: RowAcc) {
        self.count += o.count;
        self.first = opt_min(self.first, o.first);
        self.last = opt_max(self.last, o.last);
        self.hosts.extend(o.hosts);
        if let Some(s) = o.severity {
            self.severity = Some(worse(self.severity, s));
        }
    }
}

fn opt_min(a: Option<Timestamp>, b: Option<Timestamp>) -> Option<Timestamp> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

fn opt_max(a: Option<Timestamp>, b: Option<Timestamp>) -> Option<Timestamp> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.max(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

/// Mergeable fingerprint accumulator; exact distinct-host counts.
#[derive(Debug, Clone, Default)]
pub struct FingerprintTable {
    rows: HashMap<TemplateId, RowAcc>,
    total: u64,
}

impl FingerprintTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn observe(&mut self, e: &ParsedEvent) {
        self.total += 1;
        let row = self.rows.entry(e.template_id).or_default();
        row.count += 1;
        row.first = opt_min(row.first, e.timestamp);
        row.last = opt_max(row.last, e.timestamp);
        if let Some(h) = &e.host {
            if !row.hosts.contains(h) {
                row.hosts.insert(h.clone());
            }
        }
        row.severity = Some(worse(row.severity, e.severity));
    }

    pub fn merge(mut self, other: FingerprintTable) -> Self {
        self.total += other.total;
        for (id, acc) in other.rows {
            self.rows.entry(id).or_default().merge(acc);
        }
        self
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Rows sorted by descending count, then id. `pattern_of` supplies the
    /// template text for each id.
    pub fn rows<F>(self, pattern_of: F) -> Vec<FingerprintRow>
    where
        F: Fn(TemplateId) -> Option<String>,
    {
        let mut out: Vec<FingerprintRow> = self
            .rows
            .into_iter()
            .map(|(id, acc)| FingerprintRow {
                template_id: id,
                pattern: pattern_of(id).unwrap_or_default(),
                count: acc.count,
                first_seen: acc.first,
                last_seen: acc.last,
                severity: acc.severity.unwrap_or(Severity::Unknown),
                distinct_hosts: acc.hosts.len(),
            })
            .collect();
        out.sort_by(|a, b| b.count.cmp(&a.count).then(a.template_id.cmp(&b.template_id)));
        out
    }
}

pub fn fingerprint<'a, I, F>(events: I, pattern_of: F) -> Vec<FingerprintRow>
where
    I: IntoIterator<Item = &'a ParsedEvent>,
    F: Fn(TemplateId) -> Option<String>,
{
    let mut t = FingerprintTable::new();
    for e in events {
        t.observe(e);
    }
    t.rows(pattern_of)
}

pub fn fingerprint_tsv(rows: &[FingerprintRow]) -> String {
    let mut out =
        String::from("template_id\tcount\tfirst_seen\tlast_seen\tseverity\tdistinct_hosts\tpattern\n");
    let ts = |t: Option<Timestamp>| t.map(|t| t.to_string()).unwrap_or_default();
    for r in rows {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            r.template_id,
            r.count,
            ts(r.first_seen),
            ts(r.last_seen),
            r.severity,
            r.distinct_hosts,
            r.pattern
        ));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeverityShare {
    pub severity: Severity,
    pub count: u64,
    pub percent: f64,
}

/// Count and percentage per severity, largest first.
pub fn severity_distribution<I: IntoIterator<Item = Severity>>(severities: I) -> Vec<SeverityShare> {
    let mut counts: HashMap<Severity, u64> = HashMap::new();
    for s in severities {
        *counts.entry(s).or_default() += 1;
    }
    severity_shares(counts)
}

/// Same table from pre-aggregated counts; zero counts are dropped.
pub fn severity_shares<I: IntoIterator<Item = (Severity, u64)>>(counts: I) -> Vec<SeverityShare> {
    let mut merged: HashMap<Severity, u64> = HashMap::new();
    for (s, c) in counts {
        if c > 0 {
            *merged.entry(s).or_default() += c;
        }
    }
    let counts = merged;
    let total: u64 = counts.values().sum();
    let mut out: Vec<SeverityShare> = counts
        .into_iter()
        .map(|(severity, count)| SeverityShare {
            severity,
            count,
            percent: 100.0 * count as f64 / total as f64,
        })
        .collect();
    out.sort_by(|a, b| b.count.cmp(&a.count).then(a.severity.cmp(&b.severity)));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn ev(id: u64, t: i64, host: &str, sev: Severity) -> ParsedEvent {
        ParsedEvent {
            line_no: 1,
            timestamp: Some(Timestamp::from_secs(t)),
            host: Some(host.into()),
            template_id: TemplateId(id),
            variables: BTreeMap::new(),
            severity: sev,
        }
    }

    #[test]
    fn one_template_three_events() {
        let evs = vec![
            ev(1, 10, "a", Severity::Info),
            ev(1, 5, "b", Severity::Error),
            ev(1, 7, "a", Severity::Unknown),
        ];
        let rows = fingerprint(&evs, |_| Some("p".into()));
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].count, 3);
        assert_eq!(rows[0].first_seen, Some(Timestamp::from_secs(5)));
        assert_eq!(rows[0].last_seen, Some(Timestamp::from_secs(10)));
        assert_eq!(rows[0].distinct_hosts, 2);
        assert_eq!(rows[0].severity, Severity::Error);
    }

    #[test]
    fn partition_and_merge() {
        let evs: Vec<ParsedEvent> = (0..100).map(|i| ev(i % 2, i as i64, "h", Severity::Info)).collect();
        let rows = fingerprint(&evs, |_| None);
        assert_eq!(rows.len(), 2);
        assert_eq!(rows.iter().map(|r| r.count).sum::<u64>(), 100);
        let (a, b) = evs.split_at(37);
        let mut ta = FingerprintTable::new();
        a.iter().for_each(|e| ta.observe(e));
        let mut tb = FingerprintTable::new();
        b.iter().for_each(|e| tb.observe(e));
        assert_eq!(ta.merge(tb).rows(|_| None), rows);
    }

    #[test]
    fn severity_shares() {
        let d = severity_distribution([Severity::Info, Severity::Error, Severity::Error, Severity::Info]);
        assert_eq!(d.len(), 2);
        assert!(d.iter().all(|s| s.percent == 50.0));
        let d = severity_distribution([Severity::Warning; 3]);
        assert_eq!(d[0].percent, 100.0);
        assert!(severity_distribution(Vec::new()).is_empty());
    }
}
