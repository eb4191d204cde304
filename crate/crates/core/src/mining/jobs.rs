//! Joining events to scheduler jobs under exclusive node allocation.

use std::collections::{BTreeSet, HashMap};
use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ParsedEvent, Timestamp};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JobRecord {
    pub job_id: String,
    pub account: String,
    pub nodes: BTreeSet<String>,
    pub start: Timestamp,
    pub end: Timestamp,
}

/// Two jobs sharing a node over an overlapping interval.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Overlap {
    pub node: String,
    pub first: String,
    pub second: String,
}

#[derive(Debug, Error)]
pub enum JobError {
    #[error("{} overlapping allocations, first: job {} and {} on {}", .0.len(), .0[0].first, .0[0].second, .0[0].node)]
    OverlappingAllocations(Vec<Overlap>),
    #[error("job {0}: start must precede end")]
    EmptyInterval(String),
    #[error("bad node list {0:?}")]
    BadNodeList(String),
    #[error("jobs csv record {record}: {reason}")]
    BadRecord { record: u64, reason: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn split_top_level(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '[' => depth += 1,
            ']' => depth -= 1,
            ',' if depth == 0 => {
                out.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&s[start..]);
    out
}

/// Expands Slurm-style host lists: `frontier[0001-0003,0007],login1`.
pub fn expand_nodelist(spec: &str) -> Result<Vec<String>, JobError> {
    let bad = || JobError::BadNodeList(spec.to_string());
    let mut out = Vec::new();
    for item in split_top_level(spec.trim()) {
        let item = item.trim();
        if item.is_empty() {
            continue;
        }
        let Some(open) = item.find('[') else {
            if item.contains(']') {
                return Err(bad());
            }
            out.push(item.to_string());
            continue;
        };
        let close = item.rfind(']').filter(|&c| c > open).ok_or_else(bad)?;
        let (prefix, body, suffix) = (&item[..open], &item[open + 1..close], &item[close + 1..]);
        for part in body.split(',') {
            let part = part.trim();
            match part.split_once('-') {
                Some((a, b)) => {
                    let lo: u64 = a.parse().map_err(|_| bad())?;
                    let hi: u64 = b.parse().map_err(|_| bad())?;
                    if lo > hi {
                        return Err(bad());
                    }
                    let width = a.len();
                    for n in lo..=hi {
                        out.push(format!("{prefix}{n:0width$}{suffix}"));
                    }
                }
                None => {
                    if part.is_empty() || !part.bytes().all(|b| b.is_ascii_digit()) {
                        return Err(bad());
                    }
                    out.push(format!("{prefix}{part}{suffix}"));
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Deserialize)]
struct JobCsvRow {
    job_id: String,
    account: String,
    start_epoch: String,
    end_epoch: String,
    node_list: String,
}

/// Reads `job_id,account,start_epoch,end_epoch,node_list` CSV.
pub fn read_jobs_csv<R: Read>(reader: R) -> Result<Vec<JobRecord>, JobError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut jobs = Vec::new();
    for (i, row) in rdr.deserialize::<JobCsvRow>().enumerate() {
        let row = row?;
        let record = i as u64 + 1;
        let parse_ts = |s: &str| {
            s.parse::<Timestamp>().map_err(|e| JobError::BadRecord {
                record,
                reason: e.to_string(),
            })
        };
        jobs.push(JobRecord {
            start: parse_ts(&row.start_epoch)?,
            end: parse_ts(&row.end_epoch)?,
            nodes: expand_nodelist(&row.node_list)?.into_iter().collect(),
            job_id: row.job_id,
            account: row.account,
        });
    }
    Ok(jobs)
}

/// Per-node interval index, validated for exclusive allocation.
#[derive(Debug, Clone)]
pub struct JobIndex {
    jobs: Vec<JobRecord>,
    // node -> (start, end, job index) sorted by start
    by_node: HashMap<String, Vec<(Timestamp, Timestamp, usize)>>,
}

impl JobIndex {
    pub fn build(jobs: Vec<JobRecord>) -> Result<Self, JobError> {
        let mut by_node: HashMap<String, Vec<(Timestamp, Timestamp, usize)>> = HashMap::new();
        for (i, j) in jobs.iter().enumerate() {
            if j.start >= j.end {
                return Err(JobError::EmptyInterval(j.job_id.clone()));
            }
            for n in &j.nodes {
                by_node.entry(n.clone()).or_default().push((j.start, j.end, i));
            }
        }
        let mut overlaps = Vec::new();
        let mut nodes: Vec<String> = by_node.keys().cloned().collect();
        nodes.sort();
        for node in nodes {
            let list = by_node.get_mut(&node).expect("key exists");
            list.sort();
            // track the interval reaching furthest right so nested overlaps are caught
            let mut reach: Option<(Timestamp, usize)> = None;
            for &(s, e, j) in list.iter() {
                if let Some((end, prev)) = reach {
                    if s < end {
                        overlaps.push(Overlap {
                            node: node.clone(),
                            first: jobs[prev].job_id.clone(),
                            second: jobs[j].job_id.clone(),
                        });
                    }
                }
                if reach.is_none_or(|(end, _)| e > end) {
                    reach = Some((e, j));
                }
            }
        }
        if !overlaps.is_empty() {
            return Err(JobError::OverlappingAllocations(overlaps));
        }
        Ok(JobIndex { jobs, by_node })
    }

    pub fn jobs(&self) -> &[JobRecord] {
        &self.jobs
    }

    /// The job holding `host` at `t` (start ≤ t < end).
    pub fn lookup(&self, host: &str, t: Timestamp) -> Option<&JobRecord> {
        let list = self.by_node.get(host)?;
        let idx = list.partition_point(|(s, _, _)| *s <= t);
        let &(_, end, j) = list.get(idx.checked_sub(1)?)?;
        (t < end).then(|| &self.jobs[j])
    }
}

/// An event with its job, if any.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct JoinedEvent {
    #[serde(flatten)]
    pub event: ParsedEvent,
    pub job_id: Option<String>,
    pub account: Option<String>,
    pub matched: bool,
}

pub fn join_jobs<I>(events: I, index: &JobIndex) -> Vec<JoinedEvent>
where
    I: IntoIterator<Item = ParsedEvent>,
{
    events
        .into_iter()
        .map(|event| {
            let job = match (&event.host, event.timestamp) {
                (Some(h), Some(t)) => index.lookup(h, t),
                _ => None,
            };
            JoinedEvent {
                job_id: job.map(|j| j.job_id.clone()),
                account: job.map(|j| j.account.clone()),
                matched: job.is_some(),
                event,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn job(id: &str, nodes: &[&str], s: i64, e: i64) -> JobRecord {
        JobRecord {
            job_id: id.into(),
            account: format!("acct_{id}"),
            nodes: nodes.iter().map(|n| n.to_string()).collect(),
            start: Timestamp::from_secs(s),
            end: Timestamp::from_secs(e),
        }
    }

    #[test]
    fn nodelist_expansion() {
        assert_eq!(
            expand_nodelist("frontier[0001-0004]").unwrap(),
            ["frontier0001", "frontier0002", "frontier0003", "frontier0004"]
        );
        assert_eq!(
            expand_nodelist("n[08-10,15],login1").unwrap(),
            ["n08", "n09", "n10", "n15", "login1"]
        );
        assert!(expand_nodelist("n[3-1]").is_err());
        assert!(expand_nodelist("n[1-").is_err());
    }

    #[test]
    fn lookup_inside_and_between() {
        let idx = JobIndex::build(vec![job("1", &["a"], 0, 100), job("2", &["a"], 200, 300)]).unwrap();
        assert_eq!(idx.lookup("a", Timestamp::from_secs(50)).unwrap().job_id, "1");
        assert!(idx.lookup("a", Timestamp::from_secs(150)).is_none());
        assert!(idx.lookup("a", Timestamp::from_secs(100)).is_none());
        assert_eq!(idx.lookup("a", Timestamp::from_secs(200)).unwrap().job_id, "2");
        assert!(idx.lookup("b", Timestamp::from_secs(50)).is_none());
    }

    #[test]
    fn overlap_rejected() {
        let err = JobIndex::build(vec![job("1", &["a", "b"], 0, 100), job("2", &["b"], 50, 60)]).unwrap_err();
        match err {
            JobError::OverlappingAllocations(v) => {
                assert_eq!(v, vec![Overlap { node: "b".into(), first: "1".into(), second: "2".into() }]);
            }
            e => panic!("{e}"),
        }
        // touching intervals are fine
        assert!(JobIndex::build(vec![job("1", &["a"], 0, 100), job("2", &["a"], 100, 160)]).is_ok());
        assert!(matches!(
            JobIndex::build(vec![job("x", &["a"], 5, 5)]),
            Err(JobError::EmptyInterval(_))
        ));
    }

    #[test]
    fn csv_input() {
        let text = "job_id,account,start_epoch,end_epoch,node_list\n\
                    7,CHM101,100,200,\"frontier[0001-0002]\"\n";
        let jobs = read_jobs_csv(text.as_bytes()).unwrap();
        assert_eq!(jobs.len(), 1);
        assert_eq!(jobs[0].nodes.len(), 2);
        assert_eq!(jobs[0].start, Timestamp::from_secs(100));
    }
}
