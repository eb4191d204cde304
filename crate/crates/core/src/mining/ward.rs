//! Ward-linkage agglomerative clustering of category × domain matrices.
//!
//! Distances are squared Euclidean and updated with the Lance–Williams
//! recurrence for Ward's method. Ties (within a relative 1e-12) go to the
//! pair whose smallest member labels sort first, so results depend only on
//! the labelled data and not on input order.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClusterError {
    #[error("matrix has no rows or no columns")]
    EmptyMatrix,
    #[error("row {0} has the wrong number of cells")]
    Ragged(usize),
    #[error("matrix CSV: {0}")]
    Parse(String),
    #[error("duplicate label {0:?}")]
    DuplicateLabel(String),
}

/// Counts of log categories (rows) per science domain (columns).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CategoryDomainMatrix {
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    pub cells: Vec<Vec<f64>>,
}

impl CategoryDomainMatrix {
    pub fn new(rows: Vec<String>, cols: Vec<String>, cells: Vec<Vec<f64>>) -> Result<Self, ClusterError> {
        if rows.is_empty() || cols.is_empty() {
            return Err(ClusterError::EmptyMatrix);
        }
        for labels in [&rows, &cols] {
            let mut seen = BTreeSet::new();
            for l in labels {
                if !seen.insert(l) {
                    return Err(ClusterError::DuplicateLabel(l.clone()));
                }
            }
        }
        if cells.len() != rows.len() {
            return Err(ClusterError::Ragged(cells.len()));
        }
        if let Some(i) = cells.iter().position(|r| r.len() != cols.len()) {
            return Err(ClusterError::Ragged(i));
        }
        Ok(CategoryDomainMatrix { rows, cols, cells })
    }

    /// Tallies `(category, domain)` observations.
    pub fn from_pairs<'a, I>(pairs: I) -> Result<Self, ClusterError>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut counts: BTreeMap<(String, String), f64> = BTreeMap::new();
        for (r, c) in pairs {
            *counts.entry((r.to_string(), c.to_string())).or_default() += 1.0;
        }
        Self::from_counts(counts)
    }

    /// Rows and columns are the sorted distinct labels; missing cells are 0.
    pub fn from_counts(counts: BTreeMap<(String, String), f64>) -> Result<Self, ClusterError> {
        let rows: Vec<String> = counts.keys().map(|(r, _)| r.clone()).collect::<BTreeSet<_>>().into_iter().collect();
        let cols: Vec<String> = counts.keys().map(|(_, c)| c.clone()).collect::<BTreeSet<_>>().into_iter().collect();
        let mut cells = vec![vec![0.0; cols.len()]; rows.len()];
        for ((r, c), v) in &counts {
            let i = rows.binary_search(r).expect("row present");
            let j = cols.binary_search(c).expect("col present");
            cells[i][j] += v;
        }
        Self::new(rows, cols, cells)
    }

    pub fn total(&self) -> f64 {
        self.cells.iter().flatten().sum()
    }

    /// `log10(1 + x)` applied cell-wise.
    pub fn log_scaled(&self) -> Vec<Vec<f64>> {
        self.cells
            .iter()
            .map(|r| r.iter().map(|&x| (1.0 + x).log10()).collect())
            .collect()
    }

    pub fn transposed_log_scaled(&self) -> Vec<Vec<f64>> {
        let m = self.log_scaled();
        (0..self.cols.len())
            .map(|j| m.iter().map(|r| r[j]).collect())
            .collect()
    }

    pub fn reordered(&self, row_order: &[usize], col_order: &[usize]) -> CategoryDomainMatrix {
        CategoryDomainMatrix {
            rows: row_order.iter().map(|&i| self.rows[i].clone()).collect(),
            cols: col_order.iter().map(|&j| self.cols[j].clone()).collect(),
            cells: row_order
                .iter()
                .map(|&i| col_order.iter().map(|&j| self.cells[i][j]).collect())
                .collect(),
        }
    }

    /// `category,<domain>,...` header, one row per category.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("category");
        for c in &self.cols {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for (r, cells) in self.rows.iter().zip(&self.cells) {
            out.push_str(r);
            for v in cells {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, ClusterError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or(ClusterError::EmptyMatrix)?;
        let cols: Vec<String> = header.split(',').skip(1).map(|s| s.trim().to_string()).collect();
        let mut rows = Vec::new();
        let mut cells = Vec::new();
        for line in lines {
            let mut parts = line.split(',');
            rows.push(parts.next().unwrap_or_default().trim().to_string());
            let vals: Result<Vec<f64>, _> = parts.map(|p| p.trim().parse::<f64>()).collect();
            let vals = vals.map_err(|e| ClusterError::Parse(e.to_string()))?;
            if vals.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(ClusterError::Parse("cells must be finite non-negative counts".into()));
            }
            cells.push(vals);
        }
        Self::new(rows, cols, cells)
    }
}

/// One agglomeration step. Leaves are `0..n`; step `k` creates cluster `n + k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    /// `sqrt` of the Lance–Williams Ward distance, as in common tooling.
    pub height: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dendrogram {
    pub merges: Vec<Merge>,
    pub leaf_order: Vec<usize>,
    /// All items identical: order comes from labels alone.
    pub degenerate: bool,
}

impl Dendrogram {
    /// Leaf sets created by each merge, in merge order.
    pub fn merged_sets(&self, n: usize) -> Vec<BTreeSet<usize>> {
        let mut members: Vec<BTreeSet<usize>> = (0..n).map(|i| BTreeSet::from([i])).collect();
        let mut out = Vec::new();
        for m in &self.merges {
            let s: BTreeSet<usize> = members[m.left].union(&members[m.right]).copied().collect();
            out.push(s.clone());
            members.push(s);
        }
        out
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn ties(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Ward linkage over `points`, labelled by `labels` for tie-breaking.
pub fn ward_linkage(points: &[Vec<f64>], labels: &[String]) -> Result<Dendrogram, ClusterError> {
    let n = points.len();
    if n == 0 {
        return Err(ClusterError::EmptyMatrix);
    }
    assert_eq!(labels.len(), n, "one label per point");
    // active cluster slots: (cluster id, size, smallest label)
    let mut active: Vec<Option<(usize, usize, String)>> =
        (0..n).map(|i| Some((i, 1, labels[i].clone()))).collect();
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let v = sq_dist(&points[i], &points[j]);
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    let degenerate = n > 1 && (0..n).all(|i| (i + 1..n).all(|j| d[i][j] == 0.0));
    let mut merges = Vec::with_capacity(n.saturating_sub(1));
    let mut children: Vec<(usize, usize)> = Vec::new();
    let mut sizes: Vec<usize> = vec![1; n];
    let mut min_label: Vec<String> = labels.to_vec();
    for step in 0..n.saturating_sub(1) {
        let mut best: Option<(usize, usize, f64)> = None;
        for i in 0..n {
            let Some((_, _, li)) = &active[i] else { continue };
            for j in i + 1..n {
                let Some((_, _, lj)) = &active[j] else { continue };
                let dij = d[i][j];
                let better = match best {
                    None => true,
                    Some((bi, bj, bd)) => {
                        if ties(dij, bd) {
                            pair_key(li, lj) < pair_key(label_of(&active, bi), label_of(&active, bj))
                        } else {
                            dij < bd
                        }
                    }
                };
                if better {
                    best = Some((i, j, dij));
                }
            }
        }
        let (i, j, dij) = best.expect("at least two active clusters");
        let (ci, ni, li) = active[i].take().expect("active");
        let (cj, nj, lj) = active[j].take().expect("active");
        for k in 0..n {
            if let Some((_, nk, _)) = &active[k] {
                let nk = *nk as f64;
                let (fi, fj) = (ni as f64, nj as f64);
                let ti = (fi + nk) * d[k][i];
                let tj = (fj + nk) * d[k][j];
                // summed in label order so a permuted input rounds identically
                let (t1, t2, s1, s2) = if li <= lj { (ti, tj, fi, fj) } else { (tj, ti, fj, fi) };
                let v = (t1 + t2 - nk * dij) / (s1 + s2 + nk);
                d[k][i] = v;
                d[i][k] = v;
            }
        }
        // smaller cluster first, then smaller label
        let (left, right) = if (ni, &li) <= (nj, &lj) { (ci, cj) } else { (cj, ci) };
        let id = n + step;
        merges.push(Merge {
            left,
            right,
            height: dij.max(0.0).sqrt(),
            size: ni + nj,
        });
        children.push((left, right));
        sizes.push(ni + nj);
        let label = li.min(lj);
        min_label.push(label.clone());
        active[i] = Some((id, ni + nj, label));
    }
    let leaf_order = if n == 1 {
        vec![0]
    } else {
        let mut order = Vec::with_capacity(n);
        let mut stack = vec![2 * n - 2];
        while let Some(c) = stack.pop() {
            if c < n {
                order.push(c);
            } else {
                let (l, r) = children[c - n];
                stack.push(r);
                stack.push(l);
            }
        }
        order
    };
    Ok(Dendrogram {
        merges,
        leaf_order,
        degenerate,
    })
}

fn label_of(active: &[Option<(usize, usize, String)>], slot: usize) -> &str {
    active[slot].as_ref().map(|(_, _, l)| l.as_str()).unwrap_or("")
}

fn pair_key<'a>(a: &'a str, b: &'a str) -> (&'a str, &'a str) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusteredMatrix {
    pub row_order: Vec<usize>,
    pub col_order: Vec<usize>,
    pub row_dendrogram: Dendrogram,
    pub col_dendrogram: Dendrogram,
}

/// Clusters rows and columns independently on the log-scaled counts.
pub fn ward_cluster(m: &CategoryDomainMatrix) -> Result<ClusteredMatrix, ClusterError> {
    let row_dendrogram = ward_linkage(&m.log_scaled(), &m.rows)?;
    let col_dendrogram = ward_linkage(&m.transposed_log_scaled(), &m.cols)?;
    Ok(ClusteredMatrix {
        row_order: row_dendrogram.leaf_order.clone(),
        col_order: col_dendrogram.leaf_order.clone(),
        row_dendrogram,
        col_dendrogram,
    })
}
