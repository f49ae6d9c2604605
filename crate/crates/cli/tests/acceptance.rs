//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::Instant;

use sbnrg::bath::{chain_map, discretize, StarBath, StarMode};
use sbnrg::circuit::{map_to_spin_boson, CircuitParams, DeltaConvention};
use sbnrg::criticality::count_crossings;
use sbnrg::nrg::{
    build_chain, build_initial, delta_p, ground_observable, iterate, run, run_with_chain, FlowRecord,
    NrgConfig, NrgFlow, Observable,
};
use sbnrg::numerics::{sym_eigenvalues, SymMatrix};
use sbnrg::oracle::{exact_diag, EdProblem};
use sbnrg::SpinBosonParams;

const BIN: &str = env!("CARGO_BIN_EXE_sbnrg");

// 1
const GAP_REL_TOL: f64 = 1e-8;
const DECOUPLED_DP_TOL: f64 = 1e-10;
const C1_SECONDS: f64 = 10.0;
// 2
const ORACLE_ENERGY_TOL: f64 = 1e-9;
const ORACLE_SZ_TOL: f64 = 1e-6;
const C2_SECONDS: f64 = 30.0;
// 3
const CHAIN_SPECTRUM_TOL: f64 = 1e-9;
const CHAIN_WEIGHT_TOL: f64 = 1e-10;
const DECAY_RATE_REL_TOL: f64 = 0.02;
const C3_SECONDS: f64 = 5.0;
// 4, 5
const FIG3_DELTA: f64 = 3.0e-5;
const FIG3_ALPHAS: [f64; 6] = [0.50, 0.55, 0.60, 0.65, 0.70, 0.75];
const FIG3_EXTENSION: [f64; 2] = [0.80, 0.85];
const THRESHOLD: f64 = 0.3;
const ALPHA_C_BAND: (f64, f64) = (0.95, 1.25);
const C4_SECONDS: f64 = 15.0 * 60.0;
const C5_SECONDS: f64 = 30.0 * 60.0;
// 6
const FIG2_DELTA: f64 = 1e-4;
const FIG2_EPSILONS: [f64; 3] = [1e-7, 1e-6, 1e-5];
const DELOCALIZED_MAX: f64 = 0.05;
const LOCALIZED_MIN: f64 = 0.45;
const FIG2_ITERATIONS: usize = 50;
const C6_SECONDS: f64 = 20.0 * 60.0;
// 7
const ALPHA_AT_0P9: f64 = 0.650_604_919_498_017;
const ALPHA_FLOOR: f64 = 0.2;
const C7_SECONDS: f64 = 1.0;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn report(id: u32, name: &str, seconds: f64, budget: f64, v: Verdict) -> bool {
    let pass = v.pass && seconds < budget;
    let limit = if budget.is_finite() { format!(" / {budget:.0} s") } else { String::new() };
    println!(
        "{} {id} {name} [{seconds:.1} s{limit}]: {}",
        if pass { "PASS" } else { "FAIL" },
        v.detail
    );
    pass
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let t = Instant::now();
    let v = f();
    (v, t.elapsed().as_secs_f64())
}

fn decoupled_limit() -> Verdict {
    let mut worst_gap = 0.0f64;
    let mut worst_dp = 0.0f64;
    let mut missing = Vec::new();
    for delta in [1e-5, 1e-4, 1e-3, 1e-2] {
        let p = SpinBosonParams::ohmic(delta, 0.0);
        // beyond log_Λ(1/Δ) the rescaled gap exceeds the kept window
        let cfg = NrgConfig {
            n_iter: (1.0 / delta).log2().floor() as usize,
            flow_levels: 1000,
            ..Default::default()
        };
        let chain = build_chain(&p, &cfg).unwrap();
        let mut s = build_initial(&p, &chain, &cfg).unwrap();
        loop {
            let target = delta * s.scale;
            let best = s
                .energies
                .iter()
                .map(|e| (e - target).abs() / target)
                .fold(f64::INFINITY, f64::min);
            worst_gap = worst_gap.max(best);
            if best > GAP_REL_TOL {
                missing.push(format!("Δ={delta:e} N={}", s.iteration));
            }
            if s.iteration + 1 >= cfg.n_iter {
                break;
            }
            s = iterate(&s, &chain, &cfg).unwrap();
        }
        let sz = ground_observable(&s, Observable::SigmaZ);
        worst_dp = worst_dp.max(delta_p(sz).unwrap());
    }
    verdict(
        missing.is_empty() && worst_dp <= DECOUPLED_DP_TOL,
        format!("max gap rel. error {worst_gap:.2e}, max δP {worst_dp:.1e}, missing {missing:?}"),
    )
}

fn oracle_equivalence() -> Verdict {
    let (delta, epsilon) = (0.2, 0.05);
    let cases: [(&[(f64, f64)], usize); 2] = [
        (&[(1.0, 0.3), (0.4, 0.15)], 14),
        (&[(1.0, 0.3), (0.5, 0.2), (0.25, 0.1)], 9),
    ];
    // the two truncated bases agree only where both cutoffs are converged
    let compared = 8;
    let mut worst_e = 0.0f64;
    let mut worst_sz = 0.0f64;
    for (modes, d) in cases {
        let star = StarBath {
            lambda: 2.0,
            alpha: 1.0,
            s: 1.0,
            modes: modes.iter().map(|&(xi, gamma)| StarMode { xi, gamma }).collect(),
        };
        let chain = chain_map(&star).unwrap();
        let dim = 2 * d.pow(modes.len() as u32);
        let cfg = NrgConfig {
            n_s: dim,
            n_b: d,
            n_iter: modes.len(),
            ..Default::default()
        };
        let p = SpinBosonParams::ohmic(delta, 0.0).with_epsilon(epsilon);
        let nrg = run_with_chain(&p, &chain, &cfg).unwrap();
        let ed = exact_diag(&EdProblem::new(delta, epsilon, modes.iter().copied(), d - 1)).unwrap();
        for (a, b) in nrg.final_energies.iter().zip(&ed.levels).take(compared) {
            worst_e = worst_e.max((a - b).abs());
        }
        worst_sz = worst_sz.max((nrg.sigma_z_gs - ed.sigma_z).abs());
    }
    verdict(
        worst_e <= ORACLE_ENERGY_TOL && worst_sz <= ORACLE_SZ_TOL,
        format!("lowest {compared} levels max |ΔE| {worst_e:.2e}, max |Δσz| {worst_sz:.2e}"),
    )
}

fn chain_fidelity() -> Verdict {
    let p = SpinBosonParams::ohmic(0.1, 0.6);
    let star = discretize(&p, 2.0, 40).unwrap();
    let chain = chain_map(&star).unwrap();
    let n = chain.len();
    let mut a = SymMatrix::zeros(n);
    for i in 0..n {
        a.set(i, i, chain.eps[i]);
        if i + 1 < n {
            a.set(i, i + 1, chain.t[i]);
        }
    }
    let vals = sym_eigenvalues(&a).unwrap();
    let mut xi: Vec<f64> = star.modes.iter().map(|m| m.xi).collect();
    xi.sort_by(f64::total_cmp);
    let spec_err = vals
        .iter()
        .zip(&xi)
        .map(|(v, x)| (v - x).abs())
        .fold(0.0, f64::max);
    let weight_err = (chain.c0 * chain.c0 - star.total_weight()).abs();
    let pts: Vec<(f64, f64)> = (10..=35).map(|k| (k as f64, chain.t[k].ln())).collect();
    let m = pts.len() as f64;
    let xbar = pts.iter().map(|q| q.0).sum::<f64>() / m;
    let ybar = pts.iter().map(|q| q.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|q| (q.0 - xbar) * (q.1 - ybar)).sum();
    let sxx: f64 = pts.iter().map(|q| (q.0 - xbar).powi(2)).sum();
    let rate_err = (-sxy / sxx / 2f64.ln() - 1.0).abs();
    verdict(
        n == 40
            && spec_err <= CHAIN_SPECTRUM_TOL
            && weight_err <= CHAIN_WEIGHT_TOL
            && rate_err <= DECAY_RATE_REL_TOL,
        format!(
            "spectrum err {spec_err:.2e}, c0² err {weight_err:.2e}, decay rate rel. err {:.2}%",
            100.0 * rate_err
        ),
    )
}

fn circuit_properties() -> Verdict {
    let device = |f: f64| CircuitParams {
        c_j: 0.85e-12,
        c_0: 5.0 * 0.85e-12,
        i_0: 2e-6,
        i_b: f * 2e-6,
        l: 2500.0 * 1.6e-10,
        c: 1.6e-10,
    };
    let alpha = |f: f64| {
        map_to_spin_boson(&device(f), 1e14, DeltaConvention::HalfOmegaP)
            .unwrap()
            .model
            .alpha
    };
    let n = 4000;
    let grid: Vec<f64> = (0..=n).map(|i| 0.5 + 0.5 * i as f64 / n as f64 * (1.0 - 1e-12)).collect();
    let values: Vec<f64> = grid.iter().map(|&f| alpha(f)).collect();
    let decreasing = values.windows(2).all(|w| w[1] < w[0]);
    // a tenfold smaller step shrinks the largest jump at least fivefold
    let jump = |h: f64| {
        (0..200)
            .map(|i| {
                let f = 0.5 + 0.49 * i as f64 / 200.0;
                (alpha(f + h) - alpha(f)).abs()
            })
            .fold(0.0, f64::max)
    };
    let continuous = jump(1e-6) < 1e-5 && jump(1e-7) < 0.2 * jump(1e-6);
    let tail = [1e-4, 1e-8, 1e-12].map(|d| alpha(1.0 - d));
    let vanishes = tail.windows(2).all(|w| w[1] < w[0]) && tail[2] < 1e-2;
    let at_0p9 = alpha(0.9);
    let regression = (at_0p9 - ALPHA_AT_0P9).abs() < 1e-9;
    verdict(
        decreasing && continuous && vanishes && at_0p9 > ALPHA_FLOOR && regression,
        format!(
            "decreasing {decreasing}, continuous {continuous}, α(1−1e-12) = {:.2e}, α(0.9 I₀) = {at_0p9:.6}",
            tail[2]
        ),
    )
}

fn sbnrg(mode: &str, config: &str, out: &Path, workers: usize) -> Result<(), String> {
    let cfg = out.with_extension("toml");
    fs::write(&cfg, config).map_err(|e| e.to_string())?;
    let o = Command::new(BIN)
        .arg(mode)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(out)
        .arg("--workers")
        .arg(workers.to_string())
        .output()
        .map_err(|e| e.to_string())?;
    if o.status.success() {
        Ok(())
    } else {
        Err(format!(
            "{mode} exited with {:?}: {}",
            o.status.code(),
            String::from_utf8_lossy(&o.stderr).trim()
        ))
    }
}

fn data_files(root: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, acc: &mut BTreeMap<String, Vec<u8>>) {
        for e in fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(root, &p, acc);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().replace('\\', "/");
                if rel != "manifest.json" {
                    acc.insert(rel, fs::read(&p).unwrap());
                }
            }
        }
    }
    let mut acc = BTreeMap::new();
    walk(root, root, &mut acc);
    acc
}

fn read_rows(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path)
        .unwrap()
        .records()
        .map(|r| r.unwrap())
        .collect()
}

fn read_flow(path: &Path) -> NrgFlow {
    let mut records: Vec<FlowRecord> = Vec::new();
    for r in read_rows(path) {
        let it: usize = r[0].parse().unwrap();
        let e: f64 = r[2].parse().unwrap();
        match records.last_mut() {
            Some(last) if last.iteration == it => last.energies.push(e),
            _ => records.push(FlowRecord {
                iteration: it,
                kept: 0,
                energies: vec![e],
            }),
        }
    }
    NrgFlow { records }
}

fn critical_config(alphas: &[f64]) -> String {
    format!(
        "mode = \"critical\"\n[model]\ndelta = {FIG3_DELTA:e}\nalpha = {}\n[nrg]\nlambda = 2.0\nn_s = 100\nn_b = 6\n[criticality]\nthreshold = {THRESHOLD}\n[sweep]\nparameter = \"alpha\"\nvalues = {alphas:?}\n",
        alphas[0]
    )
}

struct Fig3 {
    n_star: Vec<(f64, f64)>,
    crossings: Vec<usize>,
    alpha_c: Option<f64>,
    error: Option<String>,
}

fn fig3(out: &Path, alphas: &[f64], workers: usize) -> Fig3 {
    let run = sbnrg("critical", &critical_config(alphas), out, workers);
    let n_star = if out.join("points.csv").exists() {
        read_rows(&out.join("points.csv"))
            .iter()
            .map(|r| (r[0].parse().unwrap(), r[1].parse().unwrap()))
            .collect()
    } else {
        Vec::new()
    };
    let crossings = (0..alphas.len())
        .map(|i| {
            let p = out.join(format!("flows/flow_{i:03}.csv"));
            if p.exists() {
                count_crossings(&read_flow(&p), THRESHOLD)
            } else {
                0
            }
        })
        .collect();
    let alpha_c = fs::read(out.join("fit.json"))
        .ok()
        .and_then(|b| serde_json::from_slice::<serde_json::Value>(&b).ok())
        .and_then(|v| v["alpha_c"].as_f64());
    Fig3 {
        n_star,
        crossings,
        alpha_c,
        error: run.err(),
    }
}

fn fig2_config(epsilon: f64, alphas: &[f64]) -> String {
    format!(
        "mode = \"sweep\"\n[model]\ndelta = {FIG2_DELTA:e}\nepsilon = {epsilon:e}\nalpha = 0.0\n[nrg]\nn_iter = {FIG2_ITERATIONS}\n[sweep]\nparameter = \"alpha\"\nvalues = {alphas:?}\n"
    )
}

/// δP per α from a sweep CSV.
fn read_delta_p(out: &Path) -> Vec<(f64, f64)> {
    read_rows(&out.join("sweep.csv"))
        .iter()
        .map(|r| (r[0].parse().unwrap(), r[4].parse().unwrap()))
        .collect()
}

fn population_step(work: &Path, alpha_c: f64) -> Verdict {
    let mut alphas: Vec<f64> = (0..)
        .map(|k| k as f64 / 10.0)
        .take_while(|&a| a <= 0.5 * alpha_c)
        .collect();
    for a in [0.75 * alpha_c, 0.9 * alpha_c] {
        alphas.push((a * 1e3).round() / 1e3);
    }
    for a in [1.5 * alpha_c, 1.75 * alpha_c, 2.0 * alpha_c] {
        alphas.push((a * 1e3).ceil() / 1e3);
    }
    let mut table: Vec<Vec<(f64, f64)>> = Vec::new();
    for (i, &eps) in FIG2_EPSILONS.iter().enumerate() {
        let out = work.join(format!("fig2-{i}"));
        if let Err(e) = sbnrg("sweep", &fig2_config(eps, &alphas), &out, 1) {
            return verdict(false, e);
        }
        table.push(read_delta_p(&out));
    }
    let mut bad_low = Vec::new();
    let mut bad_high = Vec::new();
    let mut bad_order = Vec::new();
    for (j, &a) in alphas.iter().enumerate() {
        for (i, row) in table.iter().enumerate() {
            let dp = row[j].1;
            if a <= 0.5 * alpha_c && !(dp < DELOCALIZED_MAX) {
                bad_low.push(format!("α={a} ε={:e}: {dp:.4}", FIG2_EPSILONS[i]));
            }
            if a >= 1.5 * alpha_c && !(dp > LOCALIZED_MIN) {
                bad_high.push(format!("α={a} ε={:e}: {dp:.4}", FIG2_EPSILONS[i]));
            }
        }
        if a < alpha_c && !table.windows(2).all(|w| w[1][j].1 >= w[0][j].1) {
            bad_order.push(format!("α={a}"));
        }
    }
    let grid: Vec<String> = table
        .iter()
        .zip(FIG2_EPSILONS)
        .map(|(row, eps)| {
            let cells: Vec<String> = row.iter().map(|(a, dp)| format!("{a}:{dp:.4}")).collect();
            format!("ε={eps:e} [{}]", cells.join(" "))
        })
        .collect();
    verdict(
        bad_low.is_empty() && bad_high.is_empty() && bad_order.is_empty(),
        format!(
            "α_c = {alpha_c:.4}; δP ≥ {DELOCALIZED_MAX} at {bad_low:?}; δP ≤ {LOCALIZED_MIN} at {bad_high:?}; ε-order broken at {bad_order:?}; {}",
            grid.join("; ")
        ),
    )
}

fn main() -> ExitCode {
    let work: PathBuf = std::env::temp_dir().join(format!("sbnrg-acceptance-{}", std::process::id()));
    fs::create_dir_all(&work).unwrap();
    let mut all = true;

    let (v, s) = timed(decoupled_limit);
    all &= report(1, "decoupled-limit exactness", s, C1_SECONDS, v);

    let (v, s) = timed(oracle_equivalence);
    all &= report(2, "oracle equivalence", s, C2_SECONDS, v);

    let (v, s) = timed(chain_fidelity);
    all &= report(3, "chain-mapping fidelity", s, C3_SECONDS, v);

    let (f, s4) = timed(|| fig3(&work.join("fig3"), &FIG3_ALPHAS, 1));
    let increasing = f.n_star.len() == FIG3_ALPHAS.len() && f.n_star.windows(2).all(|w| w[1].1 > w[0].1);
    let single = f.crossings.iter().all(|&c| c == 1);
    let v = verdict(
        f.error.is_none() && increasing && single,
        format!(
            "N* = {:?}, crossings {:?}{}",
            f.n_star.iter().map(|p| (p.1 * 100.0).round() / 100.0).collect::<Vec<_>>(),
            f.crossings,
            f.error.as_deref().map(|e| format!(", {e}")).unwrap_or_default()
        ),
    );
    all &= report(4, "flow-diagram ordering", s4, C4_SECONDS, v);

    let (mut alpha_c, mut s5, mut used) = (f.alpha_c, s4, FIG3_ALPHAS.len());
    if alpha_c.is_none() {
        let extended: Vec<f64> = FIG3_ALPHAS.iter().chain(&FIG3_EXTENSION).copied().collect();
        let (g, s) = timed(|| fig3(&work.join("fig3-extended"), &extended, 1));
        alpha_c = g.alpha_c;
        s5 += s;
        used = extended.len();
    }
    let v = match alpha_c {
        Some(a) => verdict(
            (ALPHA_C_BAND.0..=ALPHA_C_BAND.1).contains(&a),
            format!("α_c = {a:.4} from {used} points, band {ALPHA_C_BAND:?}"),
        ),
        None => verdict(false, "fit failed"),
    };
    all &= report(5, "critical-coupling extrapolation", s5, C5_SECONDS, v);

    let (v, s) = timed(|| match alpha_c {
        Some(a) => population_step(&work, a),
        None => verdict(false, "no α_c available"),
    });
    all &= report(6, "population step", s, C6_SECONDS, v);

    let (v, s) = timed(circuit_properties);
    all &= report(7, "circuit-mapping properties", s, C7_SECONDS, v);

    let (v, s) = timed(|| determinism(&work, alpha_c.unwrap_or(1.0)));
    all &= report(8, "determinism", s, f64::INFINITY, v);

    let _ = fs::remove_dir_all(&work);
    println!("acceptance: {}", if all { "all criteria PASS" } else { "some criteria FAIL" });
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

/// Reruns the file-producing pipelines with other worker counts and compares
/// bytes, and the in-process ones for bit equality.
fn determinism(work: &Path, alpha_c: f64) -> Verdict {
    let mut differing = Vec::new();
    let mut compare = |label: &str, a: &Path, b: &Path| {
        if !b.exists() || data_files(a) != data_files(b) {
            differing.push(label.to_string());
        }
    };
    let fig3_again = work.join("fig3-w4");
    let _ = fig3(&fig3_again, &FIG3_ALPHAS, 4);
    compare("critical", &work.join("fig3"), &fig3_again);

    let alphas = [0.0, 0.3, (1.5 * alpha_c * 1e3).ceil() / 1e3];
    let (a, b) = (work.join("fig2-a"), work.join("fig2-b"));
    let _ = sbnrg("sweep", &fig2_config(1e-6, &alphas), &a, 1);
    let _ = sbnrg("sweep", &fig2_config(1e-6, &alphas), &b, 3);
    compare("sweep", &a, &b);

    let chain_cfg = "[model]\ndelta = 0.1\nalpha = 0.6\n[nrg]\nn_iter = 20\nn_star = 40\n";
    let (a, b) = (work.join("chain-a"), work.join("chain-b"));
    let _ = sbnrg("chain", chain_cfg, &a, 1);
    let _ = sbnrg("chain", chain_cfg, &b, 2);
    compare("chain", &a, &b);

    let oracle_cfg = "[oracle]\ndelta = 0.2\nepsilon = 0.05\nn_max = 15\nmodes = [[1.0, 0.3], [0.4, 0.15]]\n";
    let (a, b) = (work.join("oracle-a"), work.join("oracle-b"));
    let _ = sbnrg("oracle", oracle_cfg, &a, 1);
    let _ = sbnrg("oracle", oracle_cfg, &b, 4);
    compare("oracle", &a, &b);

    let circuit_cfg = "[circuit]\nc_j = 0.85e-12\nc_0 = 4.25e-12\ni_0 = 2e-6\ni_b = 1.8e-6\nl = 4e-7\nc = 1.6e-10\nconvention = \"half_omega_p\"\n";
    let (a, b) = (work.join("map-a"), work.join("map-b"));
    let _ = sbnrg("map-circuit", circuit_cfg, &a, 1);
    let _ = sbnrg("map-circuit", circuit_cfg, &b, 2);
    compare("map-circuit", &a, &b);

    let p = SpinBosonParams::ohmic(1e-3, 0.0);
    let cfg = NrgConfig {
        n_iter: 9,
        ..Default::default()
    };
    if run(&p, &cfg).unwrap() != run(&p, &cfg).unwrap() {
        differing.push("decoupled run".into());
    }
    verdict(
        differing.is_empty(),
        format!("pipelines with differing outputs: {differing:?}"),
    )
}
