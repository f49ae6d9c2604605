//! TOML run configuration.

use std::path::PathBuf;

use log::warn;
use sbnrg::circuit::{CircuitParams, DeltaConvention};
use sbnrg::criticality::{DEFAULT_PHASE_BANDS, DEFAULT_THRESHOLD};
use sbnrg::nrg::NrgConfig;
use sbnrg::oracle::EdProblem;
use sbnrg::SpinBosonParams;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    MapCircuit,
    Chain,
    Run,
    Sweep,
    Critical,
    Oracle,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::MapCircuit => "map-circuit",
            Mode::Chain => "chain",
            Mode::Run => "run",
            Mode::Sweep => "sweep",
            Mode::Critical => "critical",
            Mode::Oracle => "oracle",
        }
    }
}

fn default_omega_c() -> f64 {
    1e14
}

fn default_s() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitBlock {
    /// Junction capacitance (F).
    pub c_j: f64,
    /// Coupling capacitance (F).
    pub c_0: f64,
    /// Critical current (A).
    pub i_0: f64,
    /// Bias current (A).
    pub i_b: f64,
    /// Line inductance per unit length (H/m).
    pub l: f64,
    /// Line capacitance per unit length (F/m).
    pub c: f64,
    #[serde(default = "default_omega_c")]
    pub omega_c: f64,
    #[serde(default)]
    pub convention: DeltaConvention,
    /// Microwave drive amplitude (A), mapped to a static bias.
    #[serde(default)]
    pub i_uw: Option<f64>,
    /// Finite line length (m) for the discrete mode list.
    #[serde(default)]
    pub line_length: Option<f64>,
    #[serde(default)]
    pub n_modes: Option<usize>,
}

impl CircuitBlock {
    pub fn params(&self) -> CircuitParams {
        CircuitParams {
            c_j: self.c_j,
            c_0: self.c_0,
            i_0: self.i_0,
            i_b: self.i_b,
            l: self.l,
            c: self.c,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBlock {
    pub delta: f64,
    #[serde(default)]
    pub epsilon: f64,
    pub alpha: f64,
    #[serde(default = "default_s")]
    pub s: f64,
    #[serde(default = "default_omega_c")]
    pub omega_c: f64,
}

impl ModelBlock {
    pub fn params(&self) -> SpinBosonParams {
        SpinBosonParams {
            delta: self.delta,
            epsilon: self.epsilon,
            alpha: self.alpha,
            s: self.s,
            omega_c: self.omega_c,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Alpha,
    Delta,
    Epsilon,
}

impl SweepParameter {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParameter::Alpha => "alpha",
            SweepParameter::Delta => "delta",
            SweepParameter::Epsilon => "epsilon",
        }
    }

    pub fn apply(self, base: &SpinBosonParams, value: f64) -> SpinBosonParams {
        let mut p = *base;
        match self {
            SweepParameter::Alpha => p.alpha = value,
            SweepParameter::Delta => p.delta = value,
            SweepParameter::Epsilon => p.epsilon = value,
        }
        p
    }
}

/// Either `from`/`to`/`step` or an explicit `values` list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepBlock {
    pub parameter: SweepParameter,
    #[serde(default)]
    pub from: Option<f64>,
    #[serde(default)]
    pub to: Option<f64>,
    #[serde(default)]
    pub step: Option<f64>,
    #[serde(default)]
    pub values: Option<Vec<f64>>,
}

impl SweepBlock {
    pub fn grid(&self) -> CliResult<Vec<f64>> {
        let values = match (self.from, self.to, self.step, &self.values) {
            (None, None, None, Some(v)) => v.clone(),
            (Some(from), Some(to), Some(step), None) => range_grid(from, to, step)?,
            _ => {
                return Err(CliError::config(
                    "sweep: give either `values` or all of `from`, `to`, `step`",
                ))
            }
        };
        if values.is_empty() {
            return Err(CliError::config("sweep: grid is empty"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(CliError::config("sweep: grid values must be finite"));
        }
        let up = values.windows(2).all(|w| w[1] > w[0]);
        let down = values.windows(2).all(|w| w[1] < w[0]);
        if !(up || down) {
            return Err(CliError::config("sweep: grid must be strictly monotone"));
        }
        Ok(values)
    }
}

/// Points `from + i·step` up to `to`, which must be hit within 1e-9 steps.
fn range_grid(from: f64, to: f64, step: f64) -> CliResult<Vec<f64>> {
    if !(from.is_finite() && to.is_finite() && step.is_finite()) || step == 0.0 {
        return Err(CliError::config("sweep: from, to, step must be finite and step nonzero"));
    }
    let span = (to - from) / step;
    if span < -1e-9 {
        return Err(CliError::config("sweep: step points away from `to`"));
    }
    let n = span.round();
    if (span - n).abs() > 1e-9 {
        return Err(CliError::config(format!(
            "sweep: (to - from)/step = {span} is not an integer"
        )));
    }
    if n > 1e6 {
        return Err(CliError::config("sweep: more than 1e6 points"));
    }
    let n = n as usize;
    Ok((0..=n)
        .map(|i| if i == n { to } else { from + i as f64 * step })
        .collect())
}

fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}

fn default_phase_lo() -> f64 {
    DEFAULT_PHASE_BANDS.0
}

fn default_phase_hi() -> f64 {
    DEFAULT_PHASE_BANDS.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalityBlock {
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "default_phase_lo")]
    pub phase_lo: f64,
    #[serde(default = "default_phase_hi")]
    pub phase_hi: f64,
}

impl Default for CriticalityBlock {
    fn default() -> Self {
        CriticalityBlock {
            threshold: DEFAULT_THRESHOLD,
            phase_lo: DEFAULT_PHASE_BANDS.0,
            phase_hi: DEFAULT_PHASE_BANDS.1,
        }
    }
}

fn default_n_max() -> usize {
    20
}

/// Modes are `[frequency, coupling]` pairs in units of ω_c. Without
/// `modes` the finite-line modes of the circuit block are used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleBlock {
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default)]
    pub modes: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default)]
    pub mode: Option<Mode>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub circuit: Option<CircuitBlock>,
    #[serde(default)]
    pub model: Option<ModelBlock>,
    #[serde(default)]
    pub nrg: NrgConfig,
    #[serde(default)]
    pub sweep: Option<SweepBlock>,
    #[serde(default)]
    pub criticality: CriticalityBlock,
    #[serde(default)]
    pub oracle: Option<OracleBlock>,
}

/// Parses `text`. Unknown keys are errors when `strict`, warnings otherwise.
pub fn parse_config(text: &str, strict: bool) -> CliResult<RunConfig> {
    let de = toml::Deserializer::parse(text).map_err(|e| CliError::config(e.to_string()))?;
    let mut unknown = Vec::new();
    let mut record = |path: serde_ignored::Path<'_>| unknown.push(path.to_string());
    let ignoring = serde_ignored::Deserializer::new(de, &mut record);
    let cfg: RunConfig = serde_path_to_error::deserialize(ignoring).map_err(|e| {
        let path = e.path().to_string();
        CliError::config(format!("key `{path}`: {}", e.into_inner().message().trim()))
    })?;
    if !unknown.is_empty() {
        let list = unknown
            .iter()
            .map(|k| format!("`{k}`"))
            .collect::<Vec<_>>()
            .join(", ");
        if strict {
            return Err(CliError::config(format!("unknown key {list}")));
        }
        warn!("ignoring unknown key {list}");
    }
    Ok(cfg)
}

impl RunConfig {
    /// Checks that `mode` has what it needs and that every present block is
    /// valid.
    pub fn validate(&self, mode: Mode) -> CliResult<()> {
        if let Some(m) = self.mode {
            if m != mode {
                return Err(CliError::config(format!(
                    "config mode `{}` does not match subcommand `{}`",
                    m.as_str(),
                    mode.as_str()
                )));
            }
        }
        if self.workers == Some(0) {
            return Err(CliError::config("workers must be >= 1"));
        }
        self.nrg.validate().map_err(|e| CliError::config(format!("nrg: {e}")))?;
        if let Some(m) = &self.model {
            m.params()
                .validate()
                .map_err(|e| CliError::config(format!("model: {e}")))?;
        }
        if let Some(c) = &self.circuit {
            c.params()
                .validate()
                .map_err(|e| CliError::config(format!("circuit: {e}")))?;
        }
        let crit = &self.criticality;
        if !(crit.threshold > 0.0) || !crit.threshold.is_finite() {
            return Err(CliError::config("criticality.threshold must be > 0"));
        }
        if !(0.0 <= crit.phase_lo && crit.phase_lo <= crit.phase_hi && crit.phase_hi <= 0.5) {
            return Err(CliError::config(
                "criticality: need 0 <= phase_lo <= phase_hi <= 0.5",
            ));
        }
        let need = |present: bool, block: &str| {
            if present {
                Ok(())
            } else {
                Err(CliError::config(format!(
                    "mode `{}` needs a [{block}] block",
                    mode.as_str()
                )))
            }
        };
        match mode {
            Mode::MapCircuit => need(self.circuit.is_some(), "circuit")?,
            Mode::Chain | Mode::Run => need(self.model.is_some(), "model")?,
            Mode::Sweep | Mode::Critical => {
                need(self.model.is_some(), "model")?;
                need(self.sweep.is_some(), "sweep")?;
                let sweep = self.sweep.as_ref().unwrap();
                let grid = sweep.grid()?;
                if mode == Mode::Critical {
                    if sweep.parameter != SweepParameter::Alpha {
                        return Err(CliError::config("critical: sweep.parameter must be `alpha`"));
                    }
                    if grid.len() < 4 {
                        return Err(CliError::config("critical: need at least 4 alpha values"));
                    }
                }
                let base = self.model.as_ref().unwrap().params();
                for v in grid {
                    sweep
                        .parameter
                        .apply(&base, v)
                        .validate()
                        .map_err(|e| CliError::config(format!("sweep point {v}: {e}")))?;
                }
            }
            Mode::Oracle => {
                need(self.oracle.is_some(), "oracle")?;
                self.oracle_problem()?;
            }
        }
        Ok(())
    }

    /// The exact-diagonalization problem of the oracle block, with modes and
    /// Δ taken from the circuit block where the oracle block omits them.
    pub fn oracle_problem(&self) -> CliResult<EdProblem> {
        let o = self
            .oracle
            .as_ref()
            .ok_or_else(|| CliError::config("missing [oracle] block"))?;
        let mapping = |what: &str| -> CliResult<_> {
            let c = self.circuit.as_ref().ok_or_else(|| {
                CliError::config(format!("oracle: no {what} given and no [circuit] block"))
            })?;
            let m = sbnrg::circuit::map_to_spin_boson(&c.params(), c.omega_c, c.convention)
                .map_err(|e| CliError::config(format!("circuit: {e}")))?;
            Ok((c, m))
        };
        let modes: Vec<(f64, f64)> = match &o.modes {
            Some(m) => m.iter().map(|&[w, g]| (w, g)).collect(),
            None => {
                let (c, _) = mapping("modes")?;
                let (Some(length), Some(n)) = (c.line_length, c.n_modes) else {
                    return Err(CliError::config(
                        "oracle: without `modes`, circuit needs `line_length` and `n_modes`",
                    ));
                };
                sbnrg::circuit::finite_line_modes(&c.params(), length, n, c.convention)
                    .map_err(|e| CliError::config(format!("circuit: {e}")))?
                    .reduced(c.omega_c)
            }
        };
        let delta = match o.delta {
            Some(d) => d,
            None => mapping("delta")?.1.model.delta,
        };
        let problem = EdProblem::new(delta, o.epsilon, modes, o.n_max);
        problem
            .validate()
            .map_err(|e| CliError::config(format!("oracle: {e}")))?;
        Ok(problem)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_run_gets_defaults() {
        let cfg = parse_config("mode = \"run\"\n[model]\ndelta = 3e-5\nalpha = 0.6\n", true).unwrap();
        assert_eq!(cfg.nrg.lambda, 2.0);
        assert_eq!(cfg.nrg.n_s, 100);
        assert_eq!(cfg.nrg.n_b, 6);
        let m = cfg.model.as_ref().unwrap();
        assert_eq!((m.epsilon, m.s), (0.0, 1.0));
        cfg.validate(Mode::Run).unwrap();
    }

    #[test]
    fn range_grid_has_six_points() {
        let cfg = parse_config(
            "[model]\ndelta = 3e-5\nalpha = 0.5\n[sweep]\nparameter = \"alpha\"\nfrom = 0.5\nto = 0.75\nstep = 0.05\n",
            true,
        )
        .unwrap();
        let grid = cfg.sweep.unwrap().grid().unwrap();
        assert_eq!(grid.len(), 6);
        assert_eq!(grid[5], 0.75);
    }

    #[test]
    fn unknown_key_is_named() {
        let text = "[model]\ndelta = 3e-5\nalpha = 0.6\n[nrg]\nlamda = 2.0\n";
        let err = parse_config(text, true).unwrap_err().to_string();
        assert!(err.contains("nrg.lamda"), "{err}");
        let cfg = parse_config(text, false).unwrap();
        assert_eq!(cfg.nrg.lambda, 2.0);
    }

    #[test]
    fn type_mismatch_has_path() {
        let err = parse_config("[nrg]\nn_s = \"many\"\n", true).unwrap_err().to_string();
        assert!(err.contains("nrg.n_s"), "{err}");
    }

    #[test]
    fn grids_are_checked() {
        let bad = |body: &str| {
            let text = format!("[sweep]\nparameter = \"alpha\"\n{body}\n");
            parse_config(&text, true).unwrap().sweep.unwrap().grid().is_err()
        };
        assert!(bad("values = []"));
        assert!(bad("values = [0.1, 0.3, 0.2]"));
        assert!(bad("from = 0.5\nto = 0.75\nstep = 0.07"));
        assert!(bad("from = 0.5\nto = 0.75\nstep = -0.05"));
        assert!(bad("from = 0.5\nto = 0.75\nstep = 0.05\nvalues = [1.0]"));
        assert!(!bad("values = [0.9, 0.5]"));
    }

    #[test]
    fn missing_blocks_are_config_errors() {
        let cfg = parse_config("[model]\ndelta = 3e-5\nalpha = 0.6\n", true).unwrap();
        assert!(cfg.validate(Mode::Sweep).is_err());
        assert!(cfg.validate(Mode::MapCircuit).is_err());
        let cfg = parse_config("mode = \"chain\"\n[model]\ndelta = 3e-5\nalpha = 0.6\n", true).unwrap();
        assert!(cfg.validate(Mode::Run).is_err());
    }

    #[test]
    fn critical_needs_alpha_sweep() {
        let cfg = parse_config(
            "[model]\ndelta = 3e-5\nalpha = 0.5\n[sweep]\nparameter = \"delta\"\nvalues = [1e-5, 2e-5, 3e-5, 4e-5]\n",
            true,
        )
        .unwrap();
        assert!(cfg.validate(Mode::Critical).is_err());
        cfg.validate(Mode::Sweep).unwrap();
    }

    #[test]
    fn inline_oracle_modes() {
        let cfg = parse_config(
            "[oracle]\ndelta = 0.3\nn_max = 10\nmodes = [[1.0, 0.4], [0.5, 0.2]]\n",
            true,
        )
        .unwrap();
        let p = cfg.oracle_problem().unwrap();
        assert_eq!(p.modes.len(), 2);
        assert_eq!(p.modes[1].coupling, 0.2);
    }
}
