//! Brute-force exact diagonalization of a spin coupled to a handful of
//! oscillator modes, in the full product occupation basis.
//!
//! H = −(Δ/2)σx + (ε/2)σz + Σ ω_j a_j†a_j + (σz/2) Σ γ_j (a_j + a_j†)

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{extremal_expectation, sym_eig_selected, SymMatrix};

/// Largest number of modes accepted.
pub const MAX_MODES: usize = 6;
/// Largest dense dimension 2·(n_max+1)^modes that will be built.
pub const MAX_DIMENSION: usize = 16_384;
/// Enlarged-cutoff problems above this size skip the convergence check.
pub const CONVERGENCE_CHECK_LIMIT: usize = 4_096;
/// Cutoff increase used by the convergence check.
pub const CONVERGENCE_STEP: usize = 5;
/// Ground-energy change that still counts as converged.
pub const CONVERGENCE_TOL: f64 = 1e-10;
/// Levels closer than this to the ground energy form the ground multiplet.
pub const DEGENERACY_TOL: f64 = 1e-10;
/// Number of low-lying levels reported.
pub const REPORTED_LEVELS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub frequency: f64,
    pub coupling: f64,
}

impl From<(f64, f64)> for Mode {
    fn from((frequency, coupling): (f64, f64)) -> Self {
        Mode {
            frequency,
            coupling,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdProblem {
    pub delta: f64,
    pub epsilon: f64,
    pub modes: Vec<Mode>,
    /// Largest occupation kept for every mode.
    pub n_max: usize,
}

impl EdProblem {
    pub fn new(delta: f64, epsilon: f64, modes: impl IntoIterator<Item = (f64, f64)>, n_max: usize) -> Self {
        EdProblem {
            delta,
            epsilon,
            modes: modes.into_iter().map(Mode::from).collect(),
            n_max,
        }
    }

    /// 2·(n_max+1)^modes, or `None` on overflow.
    pub fn dimension(&self) -> Option<usize> {
        let base = self.n_max.checked_add(1)?;
        let mut d: usize = 2;
        for _ in &self.modes {
            d = d.checked_mul(base)?;
        }
        Some(d)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.delta.is_finite() || !self.epsilon.is_finite() {
            return Err(Error::invalid("delta", "delta and epsilon must be finite"));
        }
        if self.modes.len() > MAX_MODES {
            return Err(Error::invalid(
                "modes",
                format!("at most {MAX_MODES} modes, got {}", self.modes.len()),
            ));
        }
        for m in &self.modes {
            if !(m.frequency > 0.0) || !m.frequency.is_finite() || !m.coupling.is_finite() {
                return Err(Error::invalid(
                    "modes",
                    format!("frequency must be > 0 and coupling finite, got {m:?}"),
                ));
            }
        }
        match self.dimension() {
            Some(d) if d <= MAX_DIMENSION => Ok(()),
            d => Err(Error::DimensionGuard {
                dim: d.unwrap_or(usize::MAX),
                limit: MAX_DIMENSION,
            }),
        }
    }

    /// Dense Hamiltonian in the σz ⊗ occupation basis, spin-up block first.
    pub fn hamiltonian(&self) -> Result<SymMatrix> {
        self.validate()?;
        let dim = self.dimension().unwrap_or(0);
        let half = dim / 2;
        let base = self.n_max + 1;
        let mut h = SymMatrix::zeros(dim);
        for s in 0..2 {
            let sz = if s == 0 { 1.0 } else { -1.0 };
            for idx in 0..half {
                let row = s * half + idx;
                let mut rest = idx;
                let mut stride = 1;
                let mut diag = 0.5 * self.epsilon * sz;
                for m in &self.modes {
                    let n = rest % base;
                    rest /= base;
                    diag += m.frequency * n as f64;
                    if n < self.n_max {
                        let v = 0.5 * sz * m.coupling * ((n + 1) as f64).sqrt();
                        h.set(row, row + stride, v);
                    }
                    stride *= base;
                }
                h.set(row, row, diag);
            }
        }
        for idx in 0..half {
            h.set(idx, half + idx, -0.5 * self.delta);
        }
        Ok(h)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdResult {
    pub dimension: usize,
    pub ground_energy: f64,
    pub gap: f64,
    pub sigma_z: f64,
    pub sigma_x: f64,
    /// Size of the ground multiplet.
    pub degeneracy: usize,
    /// Lowest eigenvalues, ascending.
    pub levels: Vec<f64>,
    /// Whether the ground energy moved by less than the tolerance when every
    /// cutoff was raised; `None` when the enlarged problem is too large.
    pub converged: Option<bool>,
}

/// −Σ γ²/(4ω): the exact ground energy at Δ = 0.
pub fn polaron_energy(modes: &[Mode]) -> f64 {
    modes
        .iter()
        .map(|m| -m.coupling * m.coupling / (4.0 * m.frequency))
        .sum()
}

pub fn exact_diag(p: &EdProblem) -> Result<EdResult> {
    let mut r = solve(p)?;
    let mut bigger = p.clone();
    bigger.n_max += CONVERGENCE_STEP;
    r.converged = match bigger.dimension() {
        Some(d) if d <= CONVERGENCE_CHECK_LIMIT => {
            let e = solve(&bigger)?.ground_energy;
            Some((e - r.ground_energy).abs() < CONVERGENCE_TOL)
        }
        _ => None,
    };
    Ok(r)
}

/// [`exact_diag`] without the convergence check.
pub fn exact_diag_unchecked(p: &EdProblem) -> Result<EdResult> {
    solve(p)
}

fn solve(p: &EdProblem) -> Result<EdResult> {
    p.validate()?;
    if p.epsilon == 0.0 {
        return solve_by_parity(p);
    }
    let h = p.hamiltonian()?;
    let dim = h.dim();
    let eig = sym_eig_selected(&h, |vals| {
        Ok(vals.iter().take_while(|&&v| v - vals[0] <= DEGENERACY_TOL).count())
    })?;
    let vectors: Vec<&[f64]> = (0..eig.vector_count()).map(|k| eig.vector(k)).collect();
    let half = dim / 2;
    // spin-up block first
    let sz = |a: &[f64], b: &[f64]| -> f64 {
        (0..half).map(|i| a[i] * b[i] - a[half + i] * b[half + i]).sum()
    };
    let sx = |a: &[f64], b: &[f64]| -> f64 {
        (0..half).map(|i| a[i] * b[half + i] + a[half + i] * b[i]).sum()
    };
    let (sigma_z, sigma_x) = extremal_pair(&vectors, sz, sx)?;
    Ok(EdResult {
        dimension: dim,
        ground_energy: eig.values[0],
        gap: if dim > 1 { eig.values[1] - eig.values[0] } else { 0.0 },
        sigma_z,
        sigma_x,
        degeneracy: vectors.len(),
        levels: eig.values.iter().take(REPORTED_LEVELS).copied().collect(),
        converged: None,
    })
}

/// At ε = 0 the parity σx·(−1)^N commutes with H. In the σx basis each
/// parity sector is indexed by the occupations alone, with the σx
/// eigenvalue fixed by the sector and the total boson number.
fn solve_by_parity(p: &EdProblem) -> Result<EdResult> {
    let half = p.dimension().unwrap_or(0) / 2;
    let base = p.n_max + 1;
    let occupations: Vec<Vec<usize>> = (0..half)
        .map(|idx| {
            let mut rest = idx;
            p.modes
                .iter()
                .map(|_| {
                    let n = rest % base;
                    rest /= base;
                    n
                })
                .collect()
        })
        .collect();
    let tau = |sector: f64, occ: &[usize]| {
        if occ.iter().sum::<usize>() % 2 == 0 {
            sector
        } else {
            -sector
        }
    };

    // (energy, sector, full-basis vector) for the ground candidates
    let mut levels = Vec::with_capacity(2 * half);
    let mut candidates: Vec<(f64, Vec<f64>)> = Vec::new();
    for sector in [1.0, -1.0] {
        let mut h = SymMatrix::zeros(half);
        for (idx, occ) in occupations.iter().enumerate() {
            let mut diag = -0.5 * p.delta * tau(sector, occ);
            let mut stride = 1;
            for (m, &n) in p.modes.iter().zip(occ) {
                diag += m.frequency * n as f64;
                if n < p.n_max {
                    h.set(idx, idx + stride, 0.5 * m.coupling * ((n + 1) as f64).sqrt());
                }
                stride *= base;
            }
            h.set(idx, idx, diag);
        }
        let eig = sym_eig_selected(&h, |vals| {
            Ok(vals.iter().take_while(|&&v| v - vals[0] <= DEGENERACY_TOL).count())
        })?;
        levels.extend_from_slice(&eig.values);
        for k in 0..eig.vector_count() {
            // σx = +1 block first
            let mut full = vec![0.0; 2 * half];
            for (idx, occ) in occupations.iter().enumerate() {
                let slot = if tau(sector, occ) > 0.0 { idx } else { half + idx };
                full[slot] = eig.vector(k)[idx];
            }
            candidates.push((eig.values[k], full));
        }
    }
    levels.sort_by(f64::total_cmp);
    let ground = levels[0];
    let vectors: Vec<&[f64]> = candidates
        .iter()
        .filter(|(e, _)| e - ground <= DEGENERACY_TOL)
        .map(|(_, v)| v.as_slice())
        .collect();
    let sx = |a: &[f64], b: &[f64]| -> f64 {
        (0..half).map(|i| a[i] * b[i] - a[half + i] * b[half + i]).sum()
    };
    let sz = |a: &[f64], b: &[f64]| -> f64 {
        (0..half).map(|i| a[i] * b[half + i] + a[half + i] * b[i]).sum()
    };
    let (sigma_z, sigma_x) = extremal_pair(&vectors, sz, sx)?;
    Ok(EdResult {
        dimension: 2 * half,
        ground_energy: ground,
        gap: levels[1] - levels[0],
        sigma_z,
        sigma_x,
        degeneracy: vectors.len(),
        levels: levels.iter().take(REPORTED_LEVELS).copied().collect(),
        converged: None,
    })
}

/// Observable pair over a ground multiplet spanned by `vectors`.
fn extremal_pair(
    vectors: &[&[f64]],
    sz: impl Fn(&[f64], &[f64]) -> f64,
    sx: impl Fn(&[f64], &[f64]) -> f64,
) -> Result<(f64, f64)> {
    let g = vectors.len();
    if g == 1 {
        return Ok((sz(vectors[0], vectors[0]), sx(vectors[0], vectors[0])));
    }
    let z = SymMatrix::from_lower_fn(g, |i, j| sz(vectors[i], vectors[j]));
    let x = SymMatrix::from_lower_fn(g, |i, j| sx(vectors[i], vectors[j]));
    extremal_expectation(&z, &x)
}
