//! Weighted 2-D Gaussian product-kernel density on a regular grid.

use serde::Serialize;
use thiserror::Error;

use crate::Exec;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KdeError {
    #[error("no points with positive weight")]
    EmptyInput,
    #[error("grid needs at least 2 nodes per axis, got {nx}x{ny}")]
    BadGrid { nx: usize, ny: usize },
    #[error("bandwidths must be finite and positive, got ({0}, {1})")]
    BadBandwidth(f64, f64),
    #[error("point {0} has a non-finite coordinate or negative weight")]
    BadPoint(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightedPoint {
    pub x: f64,
    pub y: f64,
    pub weight: f64,
}

impl WeightedPoint {
    pub fn new(x: f64, y: f64, weight: f64) -> Self {
        WeightedPoint { x, y, weight }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityGrid {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// `density[iy][ix]`, normalised so that `sum * dx * dy == 1`.
    pub density: Vec<Vec<f64>>,
    pub bandwidth: (f64, f64),
    /// Riemann mass before normalisation.
    pub raw_mass: f64,
}

impl DensityGrid {
    pub fn dx(&self) -> f64 {
        self.xs[1] - self.xs[0]
    }

    pub fn dy(&self) -> f64 {
        self.ys[1] - self.ys[0]
    }

    pub fn mass(&self) -> f64 {
        self.density.iter().flatten().sum::<f64>() * self.dx() * self.dy()
    }

    /// `(ix, iy)` of the largest cell; first in row-major order on ties.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = (0, 0);
        let mut v = f64::NEG_INFINITY;
        for (iy, row) in self.density.iter().enumerate() {
            for (ix, &d) in row.iter().enumerate() {
                if d > v {
                    v = d;
                    best = (ix, iy);
                }
            }
        }
        best
    }

    /// Long format: `x,y,density`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,density\n");
        for (iy, row) in self.density.iter().enumerate() {
            for (ix, d) in row.iter().enumerate() {
                out.push_str(&format!("{},{},{}\n", self.xs[ix], self.ys[iy], d));
            }
        }
        out
    }
}

struct Moments {
    mean_x: f64,
    mean_y: f64,
    sd_x: f64,
    sd_y: f64,
    n_eff: f64,
}

fn moments(points: &[WeightedPoint]) -> Moments {
    let w: f64 = points.iter().map(|p| p.weight).sum();
    let w2: f64 = points.iter().map(|p| p.weight * p.weight).sum();
    let mean_x = points.iter().map(|p| p.weight * p.x).sum::<f64>() / w;
    let mean_y = points.iter().map(|p| p.weight * p.y).sum::<f64>() / w;
    let var_x = points.iter().map(|p| p.weight * (p.x - mean_x).powi(2)).sum::<f64>() / w;
    let var_y = points.iter().map(|p| p.weight * (p.y - mean_y).powi(2)).sum::<f64>() / w;
    Moments {
        mean_x,
        mean_y,
        sd_x: var_x.sqrt(),
        sd_y: var_y.sqrt(),
        n_eff: w * w / w2,
    }
}

/// Silverman's rule for two dimensions: `h = sd * n_eff^(-1/6)` per axis,
/// with `n_eff = (Σw)² / Σw²`. An axis with no spread gets 1.
pub fn silverman_bandwidth(points: &[WeightedPoint]) -> Result<(f64, f64), KdeError> {
    let points = usable(points)?;
    let m = moments(&points);
    let f = m.n_eff.powf(-1.0 / 6.0);
    // spreads at rounding-noise level count as zero
    let h = |sd: f64, mean: f64| if sd > 1e-9 * mean.abs().max(1.0) { sd * f } else { 1.0 };
    Ok((h(m.sd_x, m.mean_x), h(m.sd_y, m.mean_y)))
}

fn usable(points: &[WeightedPoint]) -> Result<Vec<WeightedPoint>, KdeError> {
    for (i, p) in points.iter().enumerate() {
        if !p.x.is_finite() || !p.y.is_finite() || !p.weight.is_finite() || p.weight < 0.0 {
            return Err(KdeError::BadPoint(i));
        }
    }
    let kept: Vec<WeightedPoint> = points.iter().copied().filter(|p| p.weight > 0.0).collect();
    if kept.is_empty() {
        return Err(KdeError::EmptyInput);
    }
    Ok(kept)
}

/// Evaluates the density on an `nx × ny` grid spanning the data ±4 bandwidths.
/// `bandwidth = None` uses [`silverman_bandwidth`].
pub fn kde_density(
    points: &[WeightedPoint],
    grid: (usize, usize),
    bandwidth: Option<(f64, f64)>,
    exec: Exec,
) -> Result<DensityGrid, KdeError> {
    let (nx, ny) = grid;
    if nx < 2 || ny < 2 {
        return Err(KdeError::BadGrid { nx, ny });
    }
    let pts = usable(points)?;
    let (hx, hy) = match bandwidth {
        Some(b) => b,
        None => silverman_bandwidth(&pts)?,
    };
    if !(hx.is_finite() && hy.is_finite() && hx > 0.0 && hy > 0.0) {
        return Err(KdeError::BadBandwidth(hx, hy));
    }
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in &pts {
        x0 = x0.min(p.x);
        x1 = x1.max(p.x);
        y0 = y0.min(p.y);
        y1 = y1.max(p.y);
    }
    let axis = |lo: f64, hi: f64, h: f64, n: usize| -> Vec<f64> {
        let (a, b) = (lo - 4.0 * h, hi + 4.0 * h);
        let step = (b - a) / (n - 1) as f64;
        (0..n).map(|i| a + step * i as f64).collect()
    };
    let xs = axis(x0, x1, hx, nx);
    let ys = axis(y0, y1, hy, ny);
    let total_w: f64 = pts.iter().map(|p| p.weight).sum();
    let norm = 1.0 / (2.0 * std::f64::consts::PI * hx * hy * total_w);

    let rows = exec.map_range(0..ny, |iy| {
        let y = ys[iy];
        // per-point y factor is shared across the row
        let ky: Vec<f64> = pts
            .iter()
            .map(|p| p.weight * (-0.5 * ((y - p.y) / hy).powi(2)).exp())
            .collect();
        xs.iter()
            .map(|&x| {
                let s: f64 = pts
                    .iter()
                    .zip(&ky)
                    .map(|(p, k)| k * (-0.5 * ((x - p.x) / hx).powi(2)).exp())
                    .sum();
                s * norm
            })
            .collect::<Vec<f64>>()
    });
    let cell = (xs[1] - xs[0]) * (ys[1] - ys[0]);
    let raw_mass = rows.iter().flatten().sum::<f64>() * cell;
    let density = if raw_mass > 0.0 {
        rows.into_iter()
            .map(|r| r.into_iter().map(|d| d / raw_mass).collect())
            .collect()
    } else {
        rows
    };
    Ok(DensityGrid {
        xs,
        ys,
        density,
        bandwidth: (hx, hy),
        raw_mass,
    })
}
