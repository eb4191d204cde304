use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::model::Timestamp;

pub const DEFAULT_WINDOW_SECS: i64 = 300;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemporalError {
    #[error("no timestamped events")]
    NoTimestamps,
    #[error("window must be positive")]
    BadWindow,
}

/// Per-category counts in consecutive half-open windows `[k·w, (k+1)·w)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Histogram {
    pub window_secs: i64,
    pub categories: Vec<String>,
    /// Window start and one count per category, no gaps.
    pub windows: Vec<(Timestamp, Vec<u64>)>,
}

impl Histogram {
    pub fn total(&self) -> u64 {
        self.windows.iter().flat_map(|(_, c)| c).sum()
    }

    pub fn category_totals(&self) -> Vec<u64> {
        let mut t = vec![0; self.categories.len()];
        for (_, counts) in &self.windows {
            for (acc, c) in t.iter_mut().zip(counts) {
                *acc += c;
            }
        }
        t
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("window_start");
        for c in &self.categories {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for (start, counts) in &self.windows {
            out.push_str(&start.to_string());
            for c in counts {
                out.push_str(&format!(",{c}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Buckets `(time, category)` pairs into fixed windows. Categories are sorted.
pub fn temporal_histogram<I, S>(events: I, window_secs: i64) -> Result<Histogram, TemporalError>
where
    I: IntoIterator<Item = (Timestamp, S)>,
    S: Into<String>,
{
    if window_secs <= 0 {
        return Err(TemporalError::BadWindow);
    }
    let w = window_secs * Timestamp::NANOS_PER_SEC;
    let mut cells: BTreeMap<(i64, String), u64> = BTreeMap::new();
    let mut cats = std::collections::BTreeSet::new();
    let (mut lo, mut hi) = (i64::MAX, i64::MIN);
    for (t, cat) in events {
        let k = t.as_nanos().div_euclid(w);
        lo = lo.min(k);
        hi = hi.max(k);
        let cat = cat.into();
        cats.insert(cat.clone());
        *cells.entry((k, cat)).or_default() += 1;
    }
    if lo > hi {
        return Err(TemporalError::NoTimestamps);
    }
    let categories: Vec<String> = cats.into_iter().collect();
    let windows = (lo..=hi)
        .map(|k| {
            let counts = categories
                .iter()
                .map(|c| cells.get(&(k, c.clone())).copied().unwrap_or(0))
                .collect();
            (Timestamp(k * w), counts)
        })
        .collect();
    Ok(Histogram {
        window_secs,
        categories,
        windows,
    })
}

/// Cumulative fraction per category at the end of each window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CategoryCdf {
    pub categories: Vec<String>,
    pub window_ends: Vec<Timestamp>,
    /// `curves[c][k]`: fraction of category `c` seen by the end of window `k`.
    pub curves: Vec<Vec<f64>>,
}

impl CategoryCdf {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("window_end");
        for c in &self.categories {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for (k, end) in self.window_ends.iter().enumerate() {
            out.push_str(&end.to_string());
            for curve in &self.curves {
                out.push_str(&format!(",{:.6}", curve[k]));
            }
            out.push('\n');
        }
        out
    }

    /// Curve value at time `t` (step function, 0 before the first window).
    pub fn at(&self, category: usize, t: Timestamp) -> f64 {
        let idx = self.window_ends.partition_point(|e| *e <= t);
        if idx == 0 {
            0.0
        } else {
            self.curves[category][idx - 1]
        }
    }
}

pub fn category_cdf(h: &Histogram) -> CategoryCdf {
    let w = h.window_secs * Timestamp::NANOS_PER_SEC;
    let totals = h.category_totals();
    let curves = totals
        .iter()
        .enumerate()
        .map(|(c, &total)| {
            let mut run = 0u64;
            h.windows
                .iter()
                .map(|(_, counts)| {
                    run += counts[c];
                    // integer prefix sums make the last point exactly 1
                    if total == 0 {
                        0.0
                    } else {
                        run as f64 / total as f64
                    }
                })
                .collect()
        })
        .collect();
    CategoryCdf {
        categories: h.categories.clone(),
        window_ends: h.windows.iter().map(|(s, _)| Timestamp(s.as_nanos() + w)).collect(),
        curves,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(secs: i64) -> (Timestamp, &'static str) {
        (Timestamp::from_secs(secs), "x")
    }

    #[test]
    fn window_boundaries() {
        let h = temporal_histogram([at(0), at(299)], 300).unwrap();
        assert_eq!(h.windows.len(), 1);
        let h = temporal_histogram([at(0), at(300)], 300).unwrap();
        assert_eq!(h.windows.len(), 2);
        assert_eq!(h.windows[1].0, Timestamp::from_secs(300));
        let h = temporal_histogram([at(-1)], 300).unwrap();
        assert_eq!(h.windows[0].0, Timestamp::from_secs(-300));
    }

    #[test]
    fn one_event_per_second_for_an_hour() {
        let h = temporal_histogram((0..3600).map(at), 300).unwrap();
        assert_eq!(h.windows.len(), 12);
        assert!(h.windows.iter().all(|(_, c)| c == &vec![300]));
    }

    #[test]
    fn gaps_are_zero_filled() {
        let h = temporal_histogram([at(0), at(1000)], 300).unwrap();
        assert_eq!(h.windows.len(), 4);
        assert_eq!(h.total(), 2);
        assert_eq!(h.windows[1].1, vec![0]);
    }

    #[test]
    fn errors() {
        let none: Vec<(Timestamp, String)> = Vec::new();
        assert_eq!(temporal_histogram(none, 300), Err(TemporalError::NoTimestamps));
        assert_eq!(temporal_histogram([at(1)], 0), Err(TemporalError::BadWindow));
    }

    #[test]
    fn cdf_shapes() {
        let h = temporal_histogram((0..3000).map(at), 300).unwrap();
        let cdf = category_cdf(&h);
        let c = &cdf.curves[0];
        for (k, v) in c.iter().enumerate() {
            assert!((v - (k + 1) as f64 / 10.0).abs() < 1e-12);
        }
        assert_eq!(*c.last().unwrap(), 1.0);

        let mut evs: Vec<(Timestamp, &str)> = vec![(Timestamp::from_secs(10), "a"); 5];
        evs.push((Timestamp::from_secs(3000), "b"));
        let cdf = category_cdf(&temporal_histogram(evs, 300).unwrap());
        assert!(cdf.curves[0].iter().all(|&v| v == 1.0));
        assert_eq!(cdf.at(0, Timestamp::from_secs(0)), 0.0);
        assert_eq!(cdf.at(1, Timestamp::from_secs(3300)), 1.0);
    }
}
