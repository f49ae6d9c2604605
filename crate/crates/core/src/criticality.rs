//! Crossover iteration N*, extrapolation of the critical coupling, and phase
//! labels from δP.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nrg::NrgFlow;
use crate::numerics::{fit_divergence, DivergenceFit};

pub const DEFAULT_THRESHOLD: f64 = 0.3;
pub const DEFAULT_PHASE_BANDS: (f64, f64) = (0.05, 0.45);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossoverPoint {
    pub alpha: f64,
    pub n_star: f64,
    pub threshold: f64,
}

/// Interpolated iteration at which level 1 of `flow` first reaches
/// `threshold` from below; 0 if it starts at or above it.
pub fn extract_nstar(flow: &NrgFlow, threshold: f64) -> Result<f64> {
    let level = flow.level(1);
    if level.len() < 2 {
        return Err(Error::invalid(
            "flow",
            format!("need level 1 at two or more iterations, got {}", level.len()),
        ));
    }
    if level[0].1 >= threshold {
        return Ok(0.0);
    }
    for w in level.windows(2) {
        let ((n0, v0), (n1, v1)) = (w[0], w[1]);
        if v0 < threshold && v1 >= threshold {
            let frac = (threshold - v0) / (v1 - v0);
            return Ok(n0 as f64 + frac * (n1 - n0) as f64);
        }
    }
    Err(Error::NoCrossing {
        threshold,
        max_value: level.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max),
    })
}

/// Number of upward crossings of `threshold` by level 1.
pub fn count_crossings(flow: &NrgFlow, threshold: f64) -> usize {
    flow.level(1)
        .windows(2)
        .filter(|w| w[0].1 < threshold && w[1].1 >= threshold)
        .count()
}

pub fn crossover_point(alpha: f64, flow: &NrgFlow, threshold: f64) -> Result<CrossoverPoint> {
    Ok(CrossoverPoint {
        alpha,
        n_star: extract_nstar(flow, threshold)?,
        threshold,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalFit {
    pub points: Vec<CrossoverPoint>,
    pub a: f64,
    pub b: f64,
    pub alpha_c: f64,
    pub rss: f64,
}

impl CriticalFit {
    pub fn divergence(&self) -> DivergenceFit {
        DivergenceFit {
            a: self.a,
            b: self.b,
            alpha_c: self.alpha_c,
            rss: self.rss,
        }
    }
}

/// Fits N*(α) = a + b/(α_c − α).
pub fn fit_alpha_c(points: &[CrossoverPoint]) -> Result<CriticalFit> {
    if points.iter().any(|p| !(p.n_star >= 0.0)) {
        return Err(Error::FitFailure("crossover iterations must be >= 0".into()));
    }
    let data: Vec<(f64, f64)> = points.iter().map(|p| (p.alpha, p.n_star)).collect();
    let fit = fit_divergence(&data)?;
    Ok(CriticalFit {
        points: points.to_vec(),
        a: fit.a,
        b: fit.b,
        alpha_c: fit.alpha_c,
        rss: fit.rss,
    })
}

/// Fixed-α check: ln T* ∝ ln Δ / (α_c − α) makes N* linear in ln Δ with
/// slope −1/((α_c − α) ln Λ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaScaling {
    pub alpha: f64,
    pub slope: f64,
    pub intercept: f64,
    pub alpha_c: f64,
}

pub fn delta_scaling(alpha: f64, lambda: f64, points: &[(f64, f64)]) -> Result<DeltaScaling> {
    if points.len() < 2 {
        return Err(Error::FitFailure("need at least two (delta, n_star) points".into()));
    }
    if points.iter().any(|&(d, n)| !(d > 0.0) || !n.is_finite()) {
        return Err(Error::FitFailure("delta must be > 0 and n_star finite".into()));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let xbar = xs.iter().sum::<f64>() / n;
    let ybar = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (x, p) in xs.iter().zip(points) {
        sxx += (x - xbar) * (x - xbar);
        sxy += (x - xbar) * (p.1 - ybar);
    }
    if !(sxx > 0.0) {
        return Err(Error::FitFailure("delta values must differ".into()));
    }
    let slope = sxy / sxx;
    if !(slope < 0.0) {
        return Err(Error::FitFailure(format!(
            "N* must grow as delta shrinks, slope = {slope}"
        )));
    }
    Ok(DeltaScaling {
        alpha,
        slope,
        intercept: ybar - slope * xbar,
        alpha_c: alpha - 1.0 / (slope * lambda.ln()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Delocalized,
    Localized,
    Undetermined,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Delocalized => "delocalized",
            Phase::Localized => "localized",
            Phase::Undetermined => "undetermined",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseDiagnosis {
    pub delta_p: f64,
    pub label: Phase,
}

pub fn classify_phase(delta_p: f64, lo: f64, hi: f64) -> Result<PhaseDiagnosis> {
    if !(0.0..=0.5).contains(&delta_p) {
        return Err(Error::invalid("delta_p", format!("must lie in [0, 0.5], got {delta_p}")));
    }
    if !(0.0 <= lo && lo <= hi && hi <= 0.5) {
        return Err(Error::invalid("bands", format!("need 0 <= lo <= hi <= 0.5, got {lo}, {hi}")));
    }
    let label = if delta_p < lo {
        Phase::Delocalized
    } else if delta_p > hi {
        Phase::Localized
    } else {
        Phase::Undetermined
    };
    Ok(PhaseDiagnosis { delta_p, label })
}
