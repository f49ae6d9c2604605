//! Iterative diagonalization of the spin coupled to the Wilson chain.
//!
//! At iteration N the stored Hamiltonian is Λ^N (H_N − E_0), so the kept
//! energies are the rescaled excitation energies plotted in flow diagrams.
//! H_{N+1} = Λ H_N + Λ^{N+1} [ε_{N+1} n_{N+1} + t_N (b_N† b_{N+1} + h.c.)].

use log::warn;
use serde::{Deserialize, Serialize};

use crate::bath::{chain_map, discretize, WilsonChain};
use crate::circuit::SpinBosonParams;
use crate::error::{Error, Result};
use crate::numerics::{extremal_expectation, sym_eig_selected, SymMatrix};

/// Chain hoppings below this stop the iteration.
pub const HOPPING_FLOOR: f64 = 1e-30;

/// How `n_b` maps to the per-site boson basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BosonCutoff {
    /// `n_b` states per site, occupations 0..n_b−1.
    #[default]
    Dimension,
    /// Occupations 0..=n_b, i.e. n_b + 1 states per site.
    MaxOccupation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NrgConfig {
    pub lambda: f64,
    /// Number of states kept after each iteration.
    pub n_s: usize,
    pub n_b: usize,
    pub n_iter: usize,
    /// Relative width of the degenerate window at the truncation edge, and
    /// the (rescaled) width of the ground multiplet.
    pub degeneracy_tol: f64,
    /// Extra bias added to ε, to select one member of a degenerate doublet.
    pub epsilon_break: f64,
    /// Number of levels recorded per iteration.
    pub flow_levels: usize,
    pub boson_cutoff: BosonCutoff,
    /// Number of star modes; `None` means twice `n_iter`.
    pub n_star: Option<usize>,
}

impl Default for NrgConfig {
    fn default() -> Self {
        NrgConfig {
            lambda: 2.0,
            n_s: 100,
            n_b: 6,
            n_iter: 80,
            degeneracy_tol: 1e-6,
            epsilon_break: 0.0,
            flow_levels: 16,
            boson_cutoff: BosonCutoff::Dimension,
            n_star: None,
        }
    }
}

impl NrgConfig {
    pub fn site_dim(&self) -> usize {
        match self.boson_cutoff {
            BosonCutoff::Dimension => self.n_b,
            BosonCutoff::MaxOccupation => self.n_b + 1,
        }
    }

    pub fn star_modes(&self) -> usize {
        self.n_star.unwrap_or(2 * self.n_iter)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 1.0) || !self.lambda.is_finite() {
            return Err(Error::invalid("lambda", format!("must be > 1, got {}", self.lambda)));
        }
        if self.n_s < 2 {
            return Err(Error::invalid("n_s", format!("must be >= 2, got {}", self.n_s)));
        }
        if self.n_b < 2 {
            return Err(Error::invalid("n_b", format!("must be >= 2, got {}", self.n_b)));
        }
        if self.n_iter < 1 {
            return Err(Error::invalid("n_iter", "must be >= 1"));
        }
        if !(self.degeneracy_tol > 0.0 && self.degeneracy_tol < 1e-3) {
            return Err(Error::invalid(
                "degeneracy_tol",
                format!("must lie in (0, 1e-3), got {}", self.degeneracy_tol),
            ));
        }
        if !(self.epsilon_break >= 0.0) || !self.epsilon_break.is_finite() {
            return Err(Error::invalid("epsilon_break", "must be finite and >= 0"));
        }
        if self.flow_levels == 0 {
            return Err(Error::invalid("flow_levels", "must be >= 1"));
        }
        if let Some(n) = self.n_star {
            if n < self.n_iter + 5 {
                return Err(Error::invalid(
                    "n_star",
                    format!("must be at least n_iter + 5 = {}, got {n}", self.n_iter + 5),
                ));
            }
        }
        Ok(())
    }
}

/// Dense row-major square matrix of an operator in the kept basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    dim: usize,
    data: Vec<f64>,
}

impl Operator {
    fn zeros(dim: usize) -> Self {
        Operator {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// ⟨i|O|j⟩
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    fn block(&self, n: usize) -> SymMatrix {
        SymMatrix::from_lower_fn(n, |i, j| 0.5 * (self.get(i, j) + self.get(j, i)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NrgState {
    pub iteration: usize,
    /// Kept rescaled energies, ascending, the first exactly 0.
    pub energies: Vec<f64>,
    /// Annihilator of the last added chain site.
    pub b_site: Operator,
    pub sigma_z: Operator,
    pub sigma_x: Operator,
    /// Absolute ground energy in units of ω_c.
    pub ground_energy: f64,
    /// Λ^N
    pub scale: f64,
    degeneracy_tol: f64,
    /// Parity σx·(−1)^N of each kept state, tracked only at zero total bias.
    parity: Option<Vec<i8>>,
}

impl NrgState {
    pub fn kept(&self) -> usize {
        self.energies.len()
    }

    /// Kept energies in units of ω_c, without the ground-state shift removed.
    pub fn absolute_energies(&self) -> Vec<f64> {
        self.energies
            .iter()
            .map(|e| self.ground_energy + e / self.scale)
            .collect()
    }

    /// Number of levels within the degeneracy window of the ground state.
    pub fn ground_multiplet(&self) -> usize {
        self.energies
            .iter()
            .take_while(|&&e| e <= self.degeneracy_tol)
            .count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    SigmaZ,
    SigmaX,
}

/// Ground-state expectation of σz or σx.
///
/// For a degenerate ground multiplet at exactly zero bias the multiplet
/// average is returned, which keeps the σz → −σz symmetry. With any bias
/// the member with the largest |⟨σz⟩| is used, and σx is evaluated in that
/// same state.
pub fn ground_observable(state: &NrgState, which: Observable) -> f64 {
    let g = state.ground_multiplet().max(1);
    let op = match which {
        Observable::SigmaZ => &state.sigma_z,
        Observable::SigmaX => &state.sigma_x,
    };
    if g == 1 {
        return op.get(0, 0);
    }
    if state.parity.is_some() {
        return (0..g).map(|i| op.get(i, i)).sum::<f64>() / g as f64;
    }
    match extremal_expectation(&state.sigma_z.block(g), &state.sigma_x.block(g)) {
        Ok((z, x)) => match which {
            Observable::SigmaZ => z,
            Observable::SigmaX => x,
        },
        Err(_) => op.get(0, 0),
    }
}

/// δP = |⟨σz⟩| / 2.
pub fn delta_p(sigma_z: f64) -> Result<f64> {
    if !(sigma_z.abs() <= 1.0 + 1e-9) {
        return Err(Error::invalid("sigma_z", format!("|<sigma_z>| must be <= 1, got {sigma_z}")));
    }
    Ok((0.5 * sigma_z.abs()).min(0.5))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowRecord {
    pub iteration: usize,
    pub kept: usize,
    /// Lowest rescaled energies Λ^N E_N, ascending from 0.
    pub energies: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct NrgFlow {
    pub records: Vec<FlowRecord>,
}

impl NrgFlow {
    /// `(iteration, energy)` of level `index` wherever it was recorded.
    pub fn level(&self, index: usize) -> Vec<(usize, f64)> {
        self.records
            .iter()
            .filter_map(|r| r.energies.get(index).map(|&e| (r.iteration, e)))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NrgResult {
    pub flow: NrgFlow,
    pub sigma_z_gs: f64,
    pub sigma_x_gs: f64,
    pub delta_p: f64,
    /// Absolute ground energy after the last iteration (ω_c units).
    pub ground_energy: f64,
    /// Every kept level after the last iteration, in ω_c units.
    pub final_energies: Vec<f64>,
    /// Whether the run ended on the hopping floor before `n_iter`.
    pub stopped_early: bool,
    pub params: SpinBosonParams,
    pub config: NrgConfig,
    pub chain_digest: String,
}

/// Number of states kept from the ascending spectrum `vals`: the lowest
/// `n_s`, widened to close any degenerate multiplet straddling the cut.
fn keep_count(vals: &[f64], cfg: &NrgConfig) -> Result<usize> {
    let n_s = cfg.n_s;
    if vals.len() <= n_s {
        return Ok(vals.len());
    }
    let cut = vals[n_s - 1] - vals[0];
    let window = cfg.degeneracy_tol * cut.abs().max(1.0);
    let mut kept = n_s;
    while kept < vals.len() && vals[kept] - vals[0] - cut <= window {
        kept += 1;
    }
    if kept > 2 * n_s {
        return Err(Error::PathologicalDegeneracy { kept, target: n_s });
    }
    Ok(kept)
}

struct Truncated {
    /// Kept energies relative to the ground state.
    energies: Vec<f64>,
    /// Kept eigenvectors over the full product basis.
    vectors: Vec<Vec<f64>>,
    ground: f64,
    parity: Option<Vec<i8>>,
}

/// Diagonalizes `h` and truncates. With `parity` labels the two sectors are
/// solved separately, so every kept state is a parity eigenstate.
fn diagonalize(h: &SymMatrix, parity: Option<&[i8]>, cfg: &NrgConfig) -> Result<Truncated> {
    let Some(parity) = parity else {
        let eig = sym_eig_selected(h, |vals| keep_count(vals, cfg))?;
        let ground = eig.values[0];
        let kept = eig.vector_count();
        return Ok(Truncated {
            energies: eig.values[..kept].iter().map(|v| v - ground).collect(),
            vectors: (0..kept).map(|k| eig.vector(k).to_vec()).collect(),
            ground,
            parity: None,
        });
    };
    let dim = h.dim();
    let mut blocks = Vec::with_capacity(2);
    // (value, sector, rank)
    let mut merged: Vec<(f64, usize, usize)> = Vec::with_capacity(dim);
    for (sector, label) in [1i8, -1].into_iter().enumerate() {
        let idx: Vec<usize> = (0..dim).filter(|&i| parity[i] == label).collect();
        if idx.is_empty() {
            blocks.push((idx, None));
            continue;
        }
        let sub = SymMatrix::from_lower_fn(idx.len(), |i, j| h.get(idx[i], idx[j]));
        let eig = sym_eig_selected(&sub, |vals| Ok(vals.len().min(2 * cfg.n_s)))?;
        merged.extend(eig.values.iter().enumerate().map(|(r, &v)| (v, sector, r)));
        blocks.push((idx, Some(eig)));
    }
    merged.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let values: Vec<f64> = merged.iter().map(|m| m.0).collect();
    let kept = keep_count(&values, cfg)?;
    let ground = values[0];
    let mut vectors = Vec::with_capacity(kept);
    let mut labels = Vec::with_capacity(kept);
    for &(_, sector, rank) in &merged[..kept] {
        let (idx, eig) = &blocks[sector];
        let eig = eig.as_ref().expect("merged entries come from solved blocks");
        let mut v = vec![0.0; dim];
        for (&i, &x) in idx.iter().zip(eig.vector(rank)) {
            v[i] = x;
        }
        vectors.push(v);
        labels.push(if sector == 0 { 1 } else { -1 });
    }
    Ok(Truncated {
        energies: values[..kept].iter().map(|v| v - ground).collect(),
        vectors,
        ground,
        parity: Some(labels),
    })
}

/// `Uᵀ A U` where `apply(u)` computes `A u` and `U` holds the kept vectors.
fn project(vectors: &[Vec<f64>], mut apply: impl FnMut(&[f64]) -> Vec<f64>) -> Operator {
    let k = vectors.len();
    let mut op = Operator::zeros(k);
    for (j, v) in vectors.iter().enumerate() {
        let av = apply(v);
        for (i, u) in vectors.iter().enumerate() {
            op.set(i, j, u.iter().zip(&av).map(|(a, b)| a * b).sum());
        }
    }
    op
}

/// `(1 ⊗ b) v` on a product basis whose fastest index is a `d`-state boson.
fn apply_site_annihilator(v: &[f64], d: usize) -> Vec<f64> {
    (0..v.len())
        .map(|i| if i % d + 1 < d { ((i % d + 1) as f64).sqrt() * v[i + 1] } else { 0.0 })
        .collect()
}

pub fn build_initial(p: &SpinBosonParams, chain: &WilsonChain, cfg: &NrgConfig) -> Result<NrgState> {
    p.validate()?;
    cfg.validate()?;
    let bias = p.epsilon + cfg.epsilon_break;
    let symmetric = bias == 0.0;
    let (c0, eps0) = match chain.eps.first() {
        Some(&e) => (chain.c0, e),
        None if p.alpha == 0.0 => (0.0, 0.0),
        None => return Err(Error::invalid("chain", "empty chain with nonzero coupling")),
    };
    let d = if chain.is_empty() { 1 } else { cfg.site_dim() };
    if eps0 > 0.0 && c0 / eps0 > (cfg.n_b as f64).sqrt() {
        warn!(
            "c0/eps0 = {:.3} exceeds sqrt(n_b); the site-0 boson basis may be too small",
            c0 / eps0
        );
    }
    // σx eigenbasis: index = τ·d + n with τ = 0 for σx = +1; σz flips τ
    let dim = 2 * d;
    let mut h = SymMatrix::zeros(dim);
    for tau in 0..2 {
        let sx = if tau == 0 { 1.0 } else { -1.0 };
        for n in 0..d {
            let i = tau * d + n;
            h.set(i, i, -0.5 * p.delta * sx + eps0 * n as f64);
            if n + 1 < d {
                h.set(i, (1 - tau) * d + n + 1, 0.5 * c0 * ((n + 1) as f64).sqrt());
            }
        }
    }
    for n in 0..d {
        h.set(n, d + n, 0.5 * bias);
    }
    let parity: Option<Vec<i8>> = symmetric.then(|| {
        (0..dim)
            .map(|i| {
                let sx = if i < d { 1 } else { -1 };
                if (i % d) % 2 == 0 { sx } else { -sx }
            })
            .collect()
    });
    let t = diagonalize(&h, parity.as_deref(), cfg)?;
    let sigma_z = project(&t.vectors, |v| {
        (0..dim).map(|i| if i < d { v[d + i] } else { v[i - d] }).collect()
    });
    let sigma_x = project(&t.vectors, |v| {
        (0..dim).map(|i| if i < d { v[i] } else { -v[i] }).collect()
    });
    let b_site = project(&t.vectors, |v| apply_site_annihilator(v, d));
    Ok(NrgState {
        iteration: 0,
        energies: t.energies,
        b_site,
        sigma_z,
        sigma_x,
        ground_energy: t.ground,
        scale: 1.0,
        degeneracy_tol: cfg.degeneracy_tol,
        parity: t.parity,
    })
}

pub fn iterate(state: &NrgState, chain: &WilsonChain, cfg: &NrgConfig) -> Result<NrgState> {
    let n = state.iteration;
    let next = n + 1;
    if next >= chain.len() {
        return Err(Error::invalid(
            "chain",
            format!("no site {next}; the chain has {} sites", chain.len()),
        ));
    }
    let lambda = cfg.lambda;
    let scale = state.scale * lambda;
    let (eps, hop) = (scale * chain.eps[next], scale * chain.t[n]);
    let k = state.kept();
    let d = cfg.site_dim();
    let dim = k * d;
    let b = &state.b_site;

    // index = r·d + m for kept state r and occupation m of the new site
    let mut h = SymMatrix::zeros(dim);
    for r in 0..k {
        for m in 0..d {
            h.set(r * d + m, r * d + m, lambda * state.energies[r] + eps * m as f64);
        }
    }
    // ⟨r, m| b_N† b_{N+1} |r', m+1⟩ = ⟨r'|b_N|r⟩ √(m+1)
    for r in 0..k {
        for rp in 0..k {
            let brr = b.get(rp, r);
            if brr == 0.0 {
                continue;
            }
            for m in 0..d - 1 {
                h.set(r * d + m, rp * d + m + 1, hop * brr * ((m + 1) as f64).sqrt());
            }
        }
    }
    let parity: Option<Vec<i8>> = state.parity.as_ref().map(|labels| {
        (0..dim)
            .map(|i| if (i % d) % 2 == 0 { labels[i / d] } else { -labels[i / d] })
            .collect()
    });
    let t = diagonalize(&h, parity.as_deref(), cfg)?;
    let sigma_z = project(&t.vectors, |v| apply_on_kept(&state.sigma_z, v, d));
    let sigma_x = project(&t.vectors, |v| apply_on_kept(&state.sigma_x, v, d));
    let b_site = project(&t.vectors, |v| apply_site_annihilator(v, d));
    Ok(NrgState {
        iteration: next,
        energies: t.energies,
        b_site,
        sigma_z,
        sigma_x,
        ground_energy: state.ground_energy + t.ground / scale,
        scale,
        degeneracy_tol: state.degeneracy_tol,
        parity: t.parity,
    })
}

/// (O ⊗ 1) v for an operator on the previous kept basis.
fn apply_on_kept(op: &Operator, v: &[f64], d: usize) -> Vec<f64> {
    let k = op.dim();
    let mut out = vec![0.0; k * d];
    for r in 0..k {
        let dst = &mut out[r * d..(r + 1) * d];
        for rp in 0..k {
            let o = op.get(r, rp);
            if o == 0.0 {
                continue;
            }
            for (x, &y) in dst.iter_mut().zip(&v[rp * d..(rp + 1) * d]) {
                *x += o * y;
            }
        }
    }
    out
}

/// Wilson chain for `p` under `cfg`.
///
/// The chain shape does not depend on α, so it is built for α = 1 and the
/// spin coupling rescaled by √α; α = 0 thus still has a chain to iterate on.
pub fn build_chain(p: &SpinBosonParams, cfg: &NrgConfig) -> Result<WilsonChain> {
    let unit = SpinBosonParams { alpha: 1.0, ..*p };
    let star = discretize(&unit, cfg.lambda, cfg.star_modes())?;
    Ok(chain_map(&star)?.with_coupling_scaled(p.alpha.sqrt()))
}

pub fn run(p: &SpinBosonParams, cfg: &NrgConfig) -> Result<NrgResult> {
    p.validate()?;
    cfg.validate()?;
    let chain = build_chain(p, cfg)?;
    run_with_chain(p, &chain, cfg)
}

/// Full pipeline on a given chain. Stops after `n_iter` sites, at the end of
/// the chain, or when the next hopping falls below [`HOPPING_FLOOR`].
pub fn run_with_chain(p: &SpinBosonParams, chain: &WilsonChain, cfg: &NrgConfig) -> Result<NrgResult> {
    let mut state = build_initial(p, chain, cfg).map_err(|e| e.at_iteration(0))?;
    let mut flow = NrgFlow::default();
    let record = |s: &NrgState| FlowRecord {
        iteration: s.iteration,
        kept: s.kept(),
        energies: s.energies.iter().take(cfg.flow_levels).copied().collect(),
    };
    flow.records.push(record(&state));
    let mut stopped_early = false;
    while state.iteration + 1 < cfg.n_iter && state.iteration + 1 < chain.len() {
        if chain.t[state.iteration] < HOPPING_FLOOR {
            stopped_early = true;
            break;
        }
        state = iterate(&state, chain, cfg).map_err(|e| e.at_iteration(state.iteration + 1))?;
        flow.records.push(record(&state));
    }
    let sigma_z_gs = ground_observable(&state, Observable::SigmaZ);
    let sigma_x_gs = ground_observable(&state, Observable::SigmaX);
    Ok(NrgResult {
        flow,
        sigma_z_gs,
        sigma_x_gs,
        delta_p: delta_p(sigma_z_gs).map_err(|e| e.at_iteration(state.iteration))?,
        ground_energy: state.ground_energy,
        final_energies: state.absolute_energies(),
        stopped_early,
        params: *p,
        config: *cfg,
        chain_digest: chain.digest(),
    })
}
