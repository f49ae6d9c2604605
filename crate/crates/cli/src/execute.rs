//! Mode dispatch.

use std::fs;
use std::path::PathBuf;

use chrono::{SecondsFormat, Utc};
use log::info;
use rayon::prelude::*;
use sbnrg::bath::discretize;
use sbnrg::circuit::{finite_line_modes, map_to_spin_boson, microwave_bias, CircuitMapping, LineModes, CONSTANTS};
use sbnrg::criticality::{classify_phase, count_crossings, extract_nstar, fit_alpha_c, CrossoverPoint};
use sbnrg::nrg::{build_chain, run, NrgResult};
use sbnrg::oracle::exact_diag;
use sbnrg::SpinBosonParams;
use serde::Serialize;

use crate::config::{Mode, RunConfig};
use crate::error::{CliError, CliResult};
use crate::output::{self, Emitter, Failure, Manifest, SweepRow, MANIFEST};

#[derive(Debug, Clone)]
pub struct Invocation {
    pub mode: Mode,
    pub config: RunConfig,
    pub out: PathBuf,
    pub workers: usize,
    pub strict: bool,
}

/// Core errors that blame the inputs are configuration errors.
fn core(context: impl Into<String>, e: sbnrg::Error) -> CliError {
    match e {
        sbnrg::Error::InvalidParameter { .. } => {
            CliError::config(format!("{}: {e}", context.into()))
        }
        e => CliError::numerical(context, e),
    }
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

#[derive(Serialize)]
struct Echo<'a> {
    mode: &'static str,
    out: &'a PathBuf,
    workers: usize,
    strict: bool,
    grid: Option<Vec<f64>>,
    #[serde(flatten)]
    config: &'a RunConfig,
}

/// Runs the invocation and writes the manifest, also on failure. The
/// returned error is the one recorded there.
pub fn execute(inv: &Invocation) -> CliResult<Manifest> {
    let started = now();
    inv.config.validate(inv.mode)?;
    let mut em = Emitter::open(&inv.out)?;
    let result = dispatch(inv, &mut em);
    let grid = inv.config.sweep.as_ref().and_then(|s| s.grid().ok());
    let echo = Echo {
        mode: inv.mode.as_str(),
        out: &inv.out,
        workers: inv.workers,
        strict: inv.strict,
        grid,
        config: &inv.config,
    };
    let failure = result.as_ref().err().map(|e| Failure {
        kind: e.kind().to_string(),
        stage: match e {
            CliError::Numerical { context, .. } => context.clone(),
            _ => inv.mode.as_str().to_string(),
        },
        message: e.to_string(),
    });
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        mode: inv.mode.as_str().to_string(),
        started,
        finished: now(),
        workers: inv.workers,
        status: if failure.is_some() { "failed" } else { "ok" }.to_string(),
        failure,
        config: serde_json::to_value(&echo).expect("config echo"),
        files: em.into_files(),
    };
    let path = inv.out.join(MANIFEST);
    fs::write(&path, output::json(&manifest)).map_err(|e| CliError::io(&path, e))?;
    result.map(|()| manifest)
}

fn dispatch(inv: &Invocation, em: &mut Emitter) -> CliResult<()> {
    match inv.mode {
        Mode::MapCircuit => map_circuit(&inv.config, em),
        Mode::Chain => chain(&inv.config, em),
        Mode::Run => single(&inv.config, em),
        Mode::Sweep => sweep(&inv.config, inv.workers, em),
        Mode::Critical => critical(&inv.config, inv.workers, em),
        Mode::Oracle => oracle(&inv.config, em),
    }
}

#[derive(Serialize)]
struct MappingReport {
    #[serde(flatten)]
    mapping: CircuitMapping,
    /// Microwave bias in units of ħω_c, when a drive is given.
    epsilon: Option<f64>,
    line_modes: Option<LineModes>,
    /// `[frequency, coupling]` of the line modes in units of ω_c.
    reduced_modes: Option<Vec<[f64; 2]>>,
}

fn map_circuit(cfg: &RunConfig, em: &mut Emitter) -> CliResult<()> {
    let c = cfg.circuit.as_ref().expect("validated");
    let p = c.params();
    let mut mapping =
        map_to_spin_boson(&p, c.omega_c, c.convention).map_err(|e| core("circuit", e))?;
    let epsilon = match c.i_uw {
        Some(i) => {
            let eps = microwave_bias(&p, i).map_err(|e| core("circuit.i_uw", e))?
                / (CONSTANTS.h_bar * c.omega_c);
            mapping.model.epsilon = eps;
            Some(eps)
        }
        None => None,
    };
    let line_modes = match (c.line_length, c.n_modes) {
        (Some(len), Some(n)) => {
            Some(finite_line_modes(&p, len, n, c.convention).map_err(|e| core("circuit", e))?)
        }
        (None, None) => None,
        _ => return Err(CliError::config("circuit: give both `line_length` and `n_modes`")),
    };
    let reduced_modes = line_modes
        .as_ref()
        .map(|m| m.reduced(c.omega_c).into_iter().map(|(w, g)| [w, g]).collect());
    for w in &mapping.warnings {
        info!("{w}");
    }
    let report = MappingReport {
        mapping,
        epsilon,
        line_modes,
        reduced_modes,
    };
    em.write("mapping.json", &output::json(&report))
}

fn model(cfg: &RunConfig) -> SpinBosonParams {
    cfg.model.as_ref().expect("validated").params()
}

fn chain(cfg: &RunConfig, em: &mut Emitter) -> CliResult<()> {
    let p = model(cfg);
    let star = discretize(&p, cfg.nrg.lambda, cfg.nrg.star_modes()).map_err(|e| core("discretize", e))?;
    let chain = build_chain(&p, &cfg.nrg).map_err(|e| core("chain", e))?;
    em.write("chain.csv", &output::chain_csv(&star, &chain))
}

#[derive(Serialize)]
struct Observables {
    sigma_z: f64,
    sigma_x: f64,
    delta_p: f64,
    phase: &'static str,
    ground_energy: f64,
    iterations: usize,
    stopped_early: bool,
    n_star: Option<f64>,
    chain_digest: String,
}

fn single(cfg: &RunConfig, em: &mut Emitter) -> CliResult<()> {
    let p = model(cfg);
    let r = run(&p, &cfg.nrg).map_err(|e| core("nrg", e))?;
    em.write("flow.csv", &output::flow_csv(&r.flow))?;
    let crit = &cfg.criticality;
    let phase = classify_phase(r.delta_p, crit.phase_lo, crit.phase_hi)
        .map_err(|e| core("classify", e))?
        .label;
    let obs = Observables {
        sigma_z: r.sigma_z_gs,
        sigma_x: r.sigma_x_gs,
        delta_p: r.delta_p,
        phase: phase.as_str(),
        ground_energy: r.ground_energy,
        iterations: r.flow.len(),
        stopped_early: r.stopped_early,
        n_star: extract_nstar(&r.flow, crit.threshold).ok(),
        chain_digest: r.chain_digest.clone(),
    };
    em.write("observables.json", &output::json(&obs))
}

struct Point {
    index: usize,
    value: f64,
    params: SpinBosonParams,
    result: sbnrg::Result<NrgResult>,
}

impl Point {
    fn stage(&self, name: &str) -> String {
        format!("point {} ({name} = {})", self.index, self.value)
    }
}

/// Runs every grid point on `workers` threads; results come back in grid
/// order.
fn run_grid(cfg: &RunConfig, workers: usize) -> CliResult<(Vec<Point>, &'static str)> {
    let sweep = cfg.sweep.as_ref().expect("validated");
    let grid = sweep.grid()?;
    let base = model(cfg);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::config(format!("workers: {e}")))?;
    let nrg = cfg.nrg;
    let points = pool.install(|| {
        grid.par_iter()
            .enumerate()
            .map(|(index, &value)| {
                let params = sweep.parameter.apply(&base, value);
                info!("point {index}: {value}");
                Point {
                    index,
                    value,
                    params,
                    result: run(&params, &nrg),
                }
            })
            .collect::<Vec<_>>()
    });
    Ok((points, sweep.parameter.as_str()))
}

fn flow_name(index: usize) -> String {
    format!("flows/flow_{index:03}.csv")
}

fn sweep(cfg: &RunConfig, workers: usize, em: &mut Emitter) -> CliResult<()> {
    let (points, name) = run_grid(cfg, workers)?;
    let crit = &cfg.criticality;
    let mut rows = Vec::new();
    let mut first_error = None;
    for pt in points {
        let stage = pt.stage(name);
        let r = match pt.result {
            Ok(r) => r,
            Err(e) => {
                first_error.get_or_insert(core(stage, e));
                continue;
            }
        };
        em.write(&flow_name(pt.index), &output::flow_csv(&r.flow))?;
        let phase = classify_phase(r.delta_p, crit.phase_lo, crit.phase_hi)
            .map_err(|e| core(stage.as_str(), e))?;
        rows.push(SweepRow {
            alpha: pt.params.alpha,
            delta: pt.params.delta,
            epsilon: pt.params.epsilon,
            n_star: extract_nstar(&r.flow, crit.threshold).ok(),
            delta_p: r.delta_p,
            phase: phase.label.as_str().to_string(),
        });
    }
    em.write("sweep.csv", &output::sweep_csv(&rows))?;
    first_error.map_or(Ok(()), Err)
}

#[derive(Serialize)]
struct FitReport {
    a: f64,
    b: f64,
    alpha_c: f64,
    rss: f64,
}

fn critical(cfg: &RunConfig, workers: usize, em: &mut Emitter) -> CliResult<()> {
    let (points, name) = run_grid(cfg, workers)?;
    let threshold = cfg.criticality.threshold;
    let mut crossings = Vec::new();
    let mut first_error = None;
    for pt in points {
        let stage = pt.stage(name);
        let r = match pt.result {
            Ok(r) => r,
            Err(e) => {
                first_error.get_or_insert(core(stage, e));
                continue;
            }
        };
        em.write(&flow_name(pt.index), &output::flow_csv(&r.flow))?;
        match extract_nstar(&r.flow, threshold) {
            Ok(n_star) => {
                if count_crossings(&r.flow, threshold) > 1 {
                    log::warn!("{stage}: level 1 crosses {threshold} more than once");
                }
                crossings.push(CrossoverPoint {
                    alpha: pt.value,
                    n_star,
                    threshold,
                });
            }
            Err(e) => {
                first_error.get_or_insert(CliError::numerical(stage, e));
            }
        }
    }
    let pairs: Vec<(f64, f64)> = crossings.iter().map(|c| (c.alpha, c.n_star)).collect();
    em.write("points.csv", &output::points_csv(&pairs))?;
    if let Some(e) = first_error {
        return Err(e);
    }
    let fit = fit_alpha_c(&crossings).map_err(|e| CliError::numerical("fit", e))?;
    let report = FitReport {
        a: fit.a,
        b: fit.b,
        alpha_c: fit.alpha_c,
        rss: fit.rss,
    };
    em.write("fit.json", &output::json(&report))
}

fn oracle(cfg: &RunConfig, em: &mut Emitter) -> CliResult<()> {
    let problem = cfg.oracle_problem()?;
    let result = exact_diag(&problem).map_err(|e| core("oracle", e))?;
    em.write("oracle.json", &output::json(&result))
}
