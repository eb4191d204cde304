//! Low-rank adapter arithmetic: `W' = W0 + (alpha / r) * A * B`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PeftError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("rank must satisfy 1 <= r <= min(d, k), got r={r} for {d}x{k}")]
    BadRank { r: usize, d: usize, k: usize },
    #[error("alpha must be finite and positive, got {0}")]
    BadAlpha(f64),
    #[error("non-finite entry")]
    NonFinite,
}

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, PeftError> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(PeftError::ShapeMismatch("ragged rows".into()));
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Matrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.data[i * cols + j] = f(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.cols.max(1)).map(<[f64]>::to_vec).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix, PeftError> {
        if self.cols != other.rows {
            return Err(PeftError::ShapeMismatch(format!(
                "{}x{} * {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        Ok(out)
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix, PeftError> {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(PeftError::ShapeMismatch(format!(
                "{}x{} + {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Numerical rank by Gaussian elimination with partial pivoting; pivots
    /// at or below `tol * max(1, max|entry|)` count as zero.
    pub fn rank(&self, tol: f64) -> usize {
        let mut m = self.to_rows();
        let scale = self.data.iter().fold(1.0f64, |a, x| a.max(x.abs()));
        let eps = tol * scale;
        let (rows, cols) = (self.rows, self.cols);
        let mut rank = 0;
        for c in 0..cols {
            if rank == rows {
                break;
            }
            let p = (rank..rows)
                .max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs()))
                .expect("non-empty range");
            if m[p][c].abs() <= eps {
                continue;
            }
            m.swap(rank, p);
            let (head, tail) = m.split_at_mut(rank + 1);
            let pivot = &head[rank];
            for row in tail.iter_mut() {
                let f = row[c] / pivot[c];
                for (x, &y) in row[c..cols].iter_mut().zip(&pivot[c..cols]) {
                    *x -= f * y;
                }
            }
            rank += 1;
        }
        rank
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoraAdapter {
    pub a: Matrix,
    pub b: Matrix,
    pub rank: usize,
    pub alpha: f64,
}

impl LoraAdapter {
    /// `a` is `d × r`, `b` is `r × k`.
    pub fn new(a: Matrix, b: Matrix, alpha: f64) -> Result<Self, PeftError> {
        if a.cols != b.rows {
            return Err(PeftError::ShapeMismatch(format!(
                "A is {}x{}, B is {}x{}",
                a.rows, a.cols, b.rows, b.cols
            )));
        }
        let (d, r, k) = (a.rows, a.cols, b.cols);
        if r == 0 || r > d.min(k) {
            return Err(PeftError::BadRank { r, d, k });
        }
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(PeftError::BadAlpha(alpha));
        }
        if !a.is_finite() || !b.is_finite() {
            return Err(PeftError::NonFinite);
        }
        Ok(LoraAdapter { a, b, rank: r, alpha })
    }

    /// Adapter with entries uniform in [-1, 1), keyed by `seed`.
    pub fn random(d: usize, k: usize, r: usize, alpha: f64, seed: u64) -> Result<Self, PeftError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = Matrix::from_fn(d, r, |_, _| rng.random_range(-1.0..1.0));
        let b = Matrix::from_fn(r, k, |_, _| rng.random_range(-1.0..1.0));
        LoraAdapter::new(a, b, alpha)
    }

    pub fn scaling(&self) -> f64 {
        self.alpha / self.rank as f64
    }
}

/// `(alpha / r) * A * B`.
pub fn lora_delta(adapter: &LoraAdapter) -> Result<Matrix, PeftError> {
    Ok(adapter.a.matmul(&adapter.b)?.scale(adapter.scaling()))
}

/// `W0 + delta`; `w0` is borrowed and left untouched.
pub fn lora_apply(w0: &Matrix, adapter: &LoraAdapter) -> Result<Matrix, PeftError> {
    w0.add(&lora_delta(adapter)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn worked_example() {
        let ad = LoraAdapter::new(m(&[&[1.0], &[2.0]]), m(&[&[3.0, 4.0]]), 2.0).unwrap();
        assert_eq!(lora_delta(&ad).unwrap(), m(&[&[6.0, 8.0], &[12.0, 16.0]]));
        assert_eq!(lora_delta(&ad).unwrap().rank(1e-9), 1);
    }

    #[test]
    fn alpha_equal_rank_is_plain_product() {
        let a = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let b = m(&[&[5.0, 6.0], &[7.0, 8.0]]);
        let ad = LoraAdapter::new(a.clone(), b.clone(), 2.0).unwrap();
        assert_eq!(lora_delta(&ad).unwrap(), a.matmul(&b).unwrap());
    }

    #[test]
    fn zero_cases() {
        let ad = LoraAdapter::new(Matrix::zeros(3, 1), m(&[&[1.0, 2.0, 3.0]]), 4.0).unwrap();
        assert_eq!(lora_delta(&ad).unwrap(), Matrix::zeros(3, 3));
        let w0 = Matrix::from_fn(3, 3, |i, j| (i * 3 + j) as f64);
        assert_eq!(lora_apply(&w0, &ad).unwrap(), w0);
        let ad = LoraAdapter::new(m(&[&[1.0], &[1.0], &[1.0]]), m(&[&[1.0, 2.0, 3.0]]), 1.0).unwrap();
        assert_eq!(lora_apply(&Matrix::zeros(3, 3), &ad).unwrap(), lora_delta(&ad).unwrap());
    }

    #[test]
    fn errors() {
        assert!(matches!(
            LoraAdapter::new(Matrix::zeros(2, 1), Matrix::zeros(2, 2), 1.0),
            Err(PeftError::ShapeMismatch(_))
        ));
        assert!(matches!(
            LoraAdapter::new(Matrix::zeros(2, 3), Matrix::zeros(3, 2), 1.0),
            Err(PeftError::BadRank { .. })
        ));
        assert!(matches!(
            LoraAdapter::new(Matrix::zeros(2, 1), Matrix::zeros(1, 2), 0.0),
            Err(PeftError::BadAlpha(_))
        ));
        let ad = LoraAdapter::new(Matrix::zeros(2, 1), Matrix::zeros(1, 2), 1.0).unwrap();
        assert!(matches!(lora_apply(&Matrix::zeros(3, 2), &ad), Err(PeftError::ShapeMismatch(_))));
    }

    #[test]
    fn rank_of_known_matrices() {
        assert_eq!(Matrix::zeros(3, 3).rank(1e-9), 0);
        assert_eq!(Matrix::from_fn(4, 4, |i, j| (i == j) as u8 as f64).rank(1e-9), 4);
        assert_eq!(m(&[&[1.0, 2.0], &[2.0, 4.0]]).rank(1e-9), 1);
    }
}
