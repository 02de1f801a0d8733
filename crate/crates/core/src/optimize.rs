//! Bounded maximization by coarse grid search followed by coordinate descent.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SearchOptions {
    /// Coarse grid points per dimension (≥ 2).
    pub coarse_points: usize,
    /// Coordinate-descent rounds after the coarse search.
    pub rounds: usize,
    /// Factor applied to every step length after each round.
    pub shrink: f64,
    /// Trial points on each side of the incumbent per line search.
    pub line_points: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self { coarse_points: 25, rounds: 3, shrink: 0.2, line_points: 8 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub x: Vec<f64>,
    pub value: f64,
    /// Best value seen on the coarse grid. Never exceeds `value`.
    pub coarse_value: f64,
}

/// Maximizes `f` over the box `bounds`. Non-finite objective values count as
/// `−∞`, so `f` may signal infeasible points with NaN.
pub fn maximize(f: impl Fn(&[f64]) -> f64, bounds: &[(f64, f64)], opts: &SearchOptions) -> Result<SearchResult> {
    if opts.coarse_points < 2 || !(opts.shrink > 0.0 && opts.shrink < 1.0) {
        return Err(Error::InvalidGrid("coarse_points must be >= 2 and shrink in (0, 1)"));
    }
    if bounds.iter().any(|&(lo, hi)| !(lo.is_finite() && hi.is_finite() && lo <= hi)) {
        return Err(Error::InvalidGrid("bounds must be finite with lo <= hi"));
    }
    let eval = |x: &[f64]| {
        let v = f(x);
        if v.is_finite() { v } else { f64::NEG_INFINITY }
    };
    let dims = bounds.len();
    let n = opts.coarse_points;
    let mut best_x: Vec<f64> = bounds.iter().map(|b| b.0).collect();
    let mut best = f64::NEG_INFINITY;

    let mut idx = vec![0usize; dims];
    let mut x = best_x.clone();
    loop {
        for d in 0..dims {
            let (lo, hi) = bounds[d];
            x[d] = lo + (hi - lo) * idx[d] as f64 / (n - 1) as f64;
        }
        let v = eval(&x);
        if v > best {
            best = v;
            best_x.copy_from_slice(&x);
        }
        // Odometer increment over the grid.
        let mut d = 0;
        while d < dims {
            idx[d] += 1;
            if idx[d] < n {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
        if d == dims {
            break;
        }
    }
    let coarse_value = best;

    let mut step: Vec<f64> = bounds.iter().map(|&(lo, hi)| (hi - lo) / (n - 1) as f64).collect();
    let m = opts.line_points.max(1) as i64;
    for _ in 0..opts.rounds {
        for d in 0..dims {
            if step[d] == 0.0 {
                continue;
            }
            let (lo, hi) = bounds[d];
            let centre = best_x[d];
            let mut trial = best_x.clone();
            for k in -m..=m {
                if k == 0 {
                    continue;
                }
                trial[d] = (centre + step[d] * k as f64 / m as f64).clamp(lo, hi);
                let v = eval(&trial);
                if v > best {
                    best = v;
                    best_x[d] = trial[d];
                }
            }
        }
        for s in &mut step {
            *s *= opts.shrink;
        }
    }
    Ok(SearchResult { x: best_x, value: best, coarse_value })
}
