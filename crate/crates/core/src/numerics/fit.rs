//! Least-squares fit of the pole model `n(α) = a + b / (α_c − α)`.
//!
//! The model is linear in `(a, b)` once `α_c` is fixed, so the search runs over
//! `α_c` alone on the profiled residual: a log-spaced scan of the window
//! beyond the largest sampled `α`, then golden-section refinement.

use serde::{Deserialize, Serialize};

use super::Tolerances;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivergenceFit {
    pub a: f64,
    pub b: f64,
    pub alpha_c: f64,
    pub rss: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Width of the search window `(max α, max α + window]`.
    pub window: f64,
    /// Number of log-spaced scan points.
    pub scan_points: usize,
    /// Closest approach of `α_c` to the largest sample, as a fraction of the window.
    pub min_gap_fraction: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        let tol = Tolerances::default();
        FitOptions {
            window: tol.fit_window,
            scan_points: 600,
            min_gap_fraction: 1e-7,
        }
    }
}

/// Fits with [`FitOptions::default`].
pub fn fit_divergence(points: &[(f64, f64)]) -> Result<DivergenceFit> {
    fit_divergence_with(points, FitOptions::default())
}

pub fn fit_divergence_with(points: &[(f64, f64)], opts: FitOptions) -> Result<DivergenceFit> {
    if points.len() < 4 {
        return Err(Error::FitFailure(format!(
            "need at least 4 points, got {}",
            points.len()
        )));
    }
    if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::FitFailure("non-finite input".into()));
    }
    let mut alphas: Vec<f64> = points.iter().map(|p| p.0).collect();
    alphas.sort_by(f64::total_cmp);
    if alphas.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::FitFailure("alpha values must be distinct".into()));
    }
    if !(opts.window > 0.0) || opts.scan_points < 3 {
        return Err(Error::FitFailure("invalid search options".into()));
    }
    let alpha_max = *alphas.last().unwrap();

    // Work in t = ln(α_c − α_max).
    let t_lo = (opts.window * opts.min_gap_fraction).ln();
    let t_hi = opts.window.ln();
    let profile = |t: f64| profiled(points, alpha_max + t.exp());
    let step = (t_hi - t_lo) / (opts.scan_points - 1) as f64;
    let mut best = (0usize, f64::INFINITY);
    for i in 0..opts.scan_points {
        let t = t_lo + step * i as f64;
        let rss = profile(t).map(|f| f.rss).unwrap_or(f64::INFINITY);
        if rss < best.1 {
            best = (i, rss);
        }
    }
    if !best.1.is_finite() {
        return Err(Error::FitFailure("degenerate design for every candidate pole".into()));
    }
    if best.0 == opts.scan_points - 1 {
        return Err(Error::FitFailure(format!(
            "residual keeps decreasing toward the window edge α_c = {}; pole not bracketed",
            alpha_max + opts.window
        )));
    }

    let mut lo = t_lo + step * best.0.saturating_sub(1) as f64;
    let mut hi = t_lo + step * (best.0 + 1) as f64;
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let score = |t: f64| profile(t).map(|f| f.rss).unwrap_or(f64::INFINITY);
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut f1, mut f2) = (score(x1), score(x2));
    let golden_tol = Tolerances::default().fit_golden_tol;
    while hi - lo > golden_tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = score(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = score(x2);
        }
    }
    let fit = profile(0.5 * (lo + hi))?;
    if !(fit.b > 0.0) {
        return Err(Error::FitFailure(format!(
            "non-positive amplitude b = {}; data does not diverge",
            fit.b
        )));
    }
    Ok(fit)
}

/// Linear least squares for `(a, b)` at a fixed pole.
fn profiled(points: &[(f64, f64)], alpha_c: f64) -> Result<DivergenceFit> {
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|(a, _)| 1.0 / (alpha_c - a)).collect();
    let xbar = xs.iter().sum::<f64>() / n;
    let ybar = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (x, (_, y)) in xs.iter().zip(points) {
        sxx += (x - xbar) * (x - xbar);
        sxy += (x - xbar) * (y - ybar);
    }
    if !(sxx > 1e-300) || !sxx.is_finite() {
        return Err(Error::FitFailure("collinear design".into()));
    }
    let b = sxy / sxx;
    let a = ybar - b * xbar;
    let rss = xs
        .iter()
        .zip(points)
        .map(|(x, (_, y))| {
            let r = y - a - b * x;
            r * r
        })
        .sum();
    Ok(DivergenceFit { a, b, alpha_c, rss })
}
