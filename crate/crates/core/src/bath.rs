//! Ohmic/sub-Ohmic bath: spectral density, logarithmic discretization into a
//! star of modes, and the tridiagonal (Wilson chain) representation.
//!
//! Frequencies are in units of the cutoff, J(ω) = 2πα ω^s for 0 < ω ≤ 1.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::circuit::SpinBosonParams;
use crate::error::{Error, Result};
use crate::numerics::{integrate, DDouble, Tolerances};

pub fn spectral_density(p: &SpinBosonParams, omega: f64) -> Result<f64> {
    if omega < 0.0 || omega.is_nan() {
        return Err(Error::invalid("omega", format!("must be >= 0, got {omega}")));
    }
    if omega == 0.0 || omega > 1.0 {
        return Ok(0.0);
    }
    Ok(2.0 * PI * p.alpha * omega.powf(p.s))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StarMode {
    /// Representative frequency of the interval.
    pub xi: f64,
    /// Spin coupling of the mode.
    pub gamma: f64,
}

/// Modes of the logarithmically discretized bath, highest frequency first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StarBath {
    pub lambda: f64,
    pub alpha: f64,
    pub s: f64,
    pub modes: Vec<StarMode>,
}

impl StarBath {
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.modes.iter().map(|m| m.gamma * m.gamma).sum()
    }
}

/// Splits (0, 1] into [Λ^-(n+1), Λ^-n] for n < `n_star` and collapses each
/// interval onto one mode.
pub fn discretize(p: &SpinBosonParams, lambda: f64, n_star: usize) -> Result<StarBath> {
    p.validate()?;
    if !(lambda > 1.0) || !lambda.is_finite() {
        return Err(Error::invalid("lambda", format!("must be > 1, got {lambda}")));
    }
    if n_star == 0 {
        return Err(Error::invalid("n_star", "need at least one interval"));
    }
    let mut modes = Vec::with_capacity(n_star);
    if p.s == 1.0 {
        let l2 = lambda.powi(-2);
        let l3 = lambda.powi(-3);
        let xi0 = 2.0 / 3.0 * (1.0 - l3) / (1.0 - l2);
        let g0 = p.alpha * (1.0 - l2);
        for n in 0..n_star {
            let scale = lambda.powi(-(n as i32));
            modes.push(StarMode {
                xi: xi0 * scale,
                gamma: (g0 * scale * scale).sqrt(),
            });
        }
    } else {
        let tol = Tolerances::default().quad_rel_tol;
        let s = p.s;
        for n in 0..n_star {
            let hi = lambda.powi(-(n as i32));
            let lo = hi / lambda;
            // α is factored out so the mode frequencies survive α = 0
            let w0 = integrate(|w| w.powf(s), lo, hi, tol)?;
            let w1 = integrate(|w| w.powf(s + 1.0), lo, hi, tol)?;
            modes.push(StarMode {
                xi: w1 / w0,
                gamma: (2.0 * p.alpha * w0).sqrt(),
            });
        }
    }
    Ok(StarBath {
        lambda,
        alpha: p.alpha,
        s: p.s,
        modes,
    })
}

/// Semi-infinite chain H = Σ eps_n b_n†b_n + Σ t_n (b_n†b_{n+1} + h.c.),
/// with the spin coupled to site 0 through c0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WilsonChain {
    pub c0: f64,
    pub eps: Vec<f64>,
    pub t: Vec<f64>,
}

impl WilsonChain {
    pub fn len(&self) -> usize {
        self.eps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eps.is_empty()
    }

    /// Same chain with the spin coupling multiplied by `factor`.
    pub fn with_coupling_scaled(&self, factor: f64) -> Self {
        WilsonChain {
            c0: self.c0 * factor,
            ..self.clone()
        }
    }

    /// FNV-1a over the bit patterns of every entry.
    pub fn digest(&self) -> String {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut feed = |x: f64| {
            for b in x.to_bits().to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        feed(self.c0);
        self.eps.iter().for_each(|&x| feed(x));
        self.t.iter().for_each(|&x| feed(x));
        format!("{h:016x}")
    }
}

/// Lanczos tridiagonalization of the star, in double-double arithmetic with
/// full reorthogonalization.
///
/// Modes with zero coupling are invisible to the spin and are dropped, so an
/// uncoupled bath maps to an empty chain.
pub fn chain_map(star: &StarBath) -> Result<WilsonChain> {
    let active: Vec<&StarMode> = star.modes.iter().filter(|m| m.gamma != 0.0).collect();
    for m in &active {
        if !m.xi.is_finite() || !m.gamma.is_finite() {
            return Err(Error::invalid("star", "non-finite mode"));
        }
    }
    if active.is_empty() {
        return Ok(WilsonChain {
            c0: 0.0,
            eps: Vec::new(),
            t: Vec::new(),
        });
    }
    let m = active.len();
    let xi: Vec<DDouble> = active.iter().map(|s| DDouble::from_f64(s.xi)).collect();
    let norm = active
        .iter()
        .fold(DDouble::ZERO, |acc, s| {
            let g = DDouble::from_f64(s.gamma);
            acc + g * g
        })
        .sqrt();
    let c0 = norm.to_f64();

    let tol = Tolerances::default().chain_orthogonality;
    let mut basis: Vec<Vec<DDouble>> = Vec::with_capacity(m);
    basis.push(active.iter().map(|s| DDouble::from_f64(s.gamma) / norm).collect());
    let mut eps = Vec::with_capacity(m);
    let mut t = Vec::with_capacity(m);

    for k in 0..m {
        let v = &basis[k];
        let mut w: Vec<DDouble> = v.iter().zip(&xi).map(|(&a, &x)| a * x).collect();
        let a_k = dot(v, &w);
        eps.push(a_k.to_f64());
        if k + 1 == m {
            break;
        }
        axpy(&mut w, -a_k, v);
        if k > 0 {
            axpy(&mut w, -DDouble::from_f64(t[k - 1]), &basis[k - 1]);
        }
        for _ in 0..2 {
            for q in &basis {
                let c = dot(q, &w);
                axpy(&mut w, -c, q);
            }
        }
        let b_k = dot(&w, &w).sqrt();
        // A breakdown means the star has fewer distinct frequencies than modes.
        let scale = if a_k.abs() > b_k { a_k.abs() } else { b_k };
        if b_k.to_f64() <= 1e-26 * scale.to_f64().max(t.last().copied().unwrap_or(0.0)) {
            break;
        }
        let inv = DDouble::ONE / b_k;
        let next: Vec<DDouble> = w.iter().map(|&x| x * inv).collect();
        let overlap = basis
            .iter()
            .map(|q| dot(q, &next).abs().to_f64())
            .fold(0.0, f64::max);
        if overlap > tol {
            return Err(Error::PrecisionLoss {
                step: k + 1,
                overlap,
            });
        }
        t.push(b_k.to_f64());
        basis.push(next);
    }
    Ok(WilsonChain { c0, eps, t })
}

fn dot(a: &[DDouble], b: &[DDouble]) -> DDouble {
    a.iter().zip(b).fold(DDouble::ZERO, |acc, (&x, &y)| acc + x * y)
}

fn axpy(y: &mut [DDouble], a: DDouble, x: &[DDouble]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi = *yi + a * xi;
    }
}
