//! Current-biased phase qubit capacitively coupled to a transmission line.
//!
//! Everything here is in SI units. The output [`SpinBosonParams`] is the only
//! place where energies are converted to reduced units (ħ = 1, energies in
//! units of the cutoff ħω_c).

use std::f64::consts::PI;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// CODATA 2018 exact values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    pub planck: f64,
    pub h_bar: f64,
    pub e_charge: f64,
    pub flux_quantum: f64,
}

pub const CONSTANTS: PhysicalConstants = PhysicalConstants {
    planck: 6.626_070_15e-34,
    h_bar: 6.626_070_15e-34 / (2.0 * PI),
    e_charge: 1.602_176_634e-19,
    flux_quantum: 6.626_070_15e-34 / (2.0 * 1.602_176_634e-19),
};

/// Circuit description in SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircuitParams {
    /// Junction capacitance (F).
    pub c_j: f64,
    /// Coupling capacitance (F).
    pub c_0: f64,
    /// Junction critical current (A).
    pub i_0: f64,
    /// DC bias current (A).
    pub i_b: f64,
    /// Line inductance per unit length (H/m).
    pub l: f64,
    /// Line capacitance per unit length (F/m).
    pub c: f64,
}

impl CircuitParams {
    pub fn total_capacitance(&self) -> f64 {
        self.c_j + self.c_0
    }

    /// Characteristic impedance √(l/c) of the line (Ω).
    pub fn impedance(&self) -> f64 {
        (self.l / self.c).sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("c_j", self.c_j),
            ("i_0", self.i_0),
            ("i_b", self.i_b),
            ("l", self.l),
            ("c", self.c),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(name, format!("must be finite and > 0, got {v}")));
            }
        }
        if !(self.c_0 >= 0.0) || !self.c_0.is_finite() {
            return Err(Error::invalid("c_0", format!("must be finite and >= 0, got {}", self.c_0)));
        }
        if self.i_b >= self.i_0 {
            return Err(Error::invalid(
                "i_b",
                format!("bias {} must stay below the critical current {}", self.i_b, self.i_0),
            ));
        }
        Ok(())
    }
}

/// Which energy plays the role of the qubit splitting Δ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaConvention {
    /// Δ = ħω₁₀ = 0.95 ħω_p.
    #[default]
    Omega10,
    /// Δ = ħω_p / 2, used for the experimental α estimate.
    HalfOmegaP,
}

/// Junction spectrum derived from the cubic-well approximation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitSpectrum {
    /// Plasma frequency (rad/s).
    pub omega_p: f64,
    /// Qubit transition frequency (rad/s).
    pub omega_10: f64,
    /// Barrier height ΔU (J).
    pub barrier: f64,
    /// ħω₁₀ (J).
    pub delta: f64,
    pub e_j: f64,
    pub e_c: f64,
    /// ΔU / ħω_p.
    pub barrier_ratio: f64,
    /// Whether E_J / E_C exceeds the configured threshold.
    pub phase_regime: bool,
}

/// Ratio of ω₁₀ to ω_p in the cubic well.
pub const OMEGA10_OVER_OMEGA_P: f64 = 0.95;
/// Default E_J / E_C threshold for the phase-regime flag.
pub const DEFAULT_EJ_EC_RATIO: f64 = 100.0;
/// Experimentally reachable α window; values outside only warn.
pub const ALPHA_WINDOW: (f64, f64) = (0.2, 3.0);

pub fn qubit_spectrum(p: &CircuitParams) -> Result<QubitSpectrum> {
    qubit_spectrum_with(p, DEFAULT_EJ_EC_RATIO)
}

pub fn qubit_spectrum_with(p: &CircuitParams, ej_ec_threshold: f64) -> Result<QubitSpectrum> {
    p.validate()?;
    let k = CONSTANTS;
    let cap = p.total_capacitance();
    let reduced = 1.0 - p.i_b / p.i_0;
    let barrier = 2.0 * 2f64.sqrt() * p.i_0 * k.flux_quantum / (3.0 * PI) * reduced.powf(1.5);
    let omega_p =
        2f64.powf(0.25) * (2.0 * PI * p.i_0 / (k.flux_quantum * cap)).sqrt() * reduced.powf(0.25);
    let omega_10 = OMEGA10_OVER_OMEGA_P * omega_p;
    let e_j = k.flux_quantum * p.i_0 / (2.0 * PI);
    let e_c = k.e_charge * k.e_charge / (2.0 * cap);
    let phase_regime = e_j / e_c > ej_ec_threshold;
    if !phase_regime {
        warn!(
            "E_J/E_C = {:.3e} is below {ej_ec_threshold}; the phase-qubit reduction may not apply",
            e_j / e_c
        );
    }
    Ok(QubitSpectrum {
        omega_p,
        omega_10,
        barrier,
        delta: k.h_bar * omega_10,
        e_j,
        e_c,
        barrier_ratio: if omega_p > 0.0 { barrier / (k.h_bar * omega_p) } else { 0.0 },
        phase_regime,
    })
}

/// Spin-boson parameters in reduced units (ħ = 1, energies in units of ħω_c).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinBosonParams {
    pub delta: f64,
    pub epsilon: f64,
    pub alpha: f64,
    pub s: f64,
    /// Cutoff in rad/s, kept for reporting only.
    pub omega_c: f64,
}

impl Default for SpinBosonParams {
    fn default() -> Self {
        SpinBosonParams {
            delta: 0.0,
            epsilon: 0.0,
            alpha: 0.0,
            s: 1.0,
            omega_c: 1e14,
        }
    }
}

impl SpinBosonParams {
    pub fn ohmic(delta: f64, alpha: f64) -> Self {
        SpinBosonParams {
            delta,
            alpha,
            ..Default::default()
        }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta >= 0.0) || !self.delta.is_finite() {
            return Err(Error::invalid("delta", format!("must be >= 0, got {}", self.delta)));
        }
        if !self.epsilon.is_finite() {
            return Err(Error::invalid("epsilon", "must be finite"));
        }
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return Err(Error::invalid("alpha", format!("must be >= 0, got {}", self.alpha)));
        }
        if !(self.s > 0.0 && self.s <= 1.0) {
            return Err(Error::invalid("s", format!("must lie in (0, 1], got {}", self.s)));
        }
        if !(self.omega_c > 0.0) {
            return Err(Error::invalid("omega_c", "must be > 0"));
        }
        Ok(())
    }
}

/// Result of [`map_to_spin_boson`], with any soft warnings attached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitMapping {
    pub spectrum: QubitSpectrum,
    pub model: SpinBosonParams,
    pub convention: DeltaConvention,
    pub warnings: Vec<String>,
}

/// Δ (J) under the chosen convention.
pub fn delta_energy(spec: &QubitSpectrum, convention: DeltaConvention) -> f64 {
    match convention {
        DeltaConvention::Omega10 => spec.delta,
        DeltaConvention::HalfOmegaP => 0.5 * CONSTANTS.h_bar * spec.omega_p,
    }
}

/// α = (Δ/ħπ)(C₀²/C)√(l/c).
pub fn dissipation_strength(p: &CircuitParams, delta: f64) -> f64 {
    delta / (CONSTANTS.h_bar * PI) * p.c_0 * p.c_0 / p.total_capacitance() * p.impedance()
}

pub fn map_to_spin_boson(
    p: &CircuitParams,
    omega_c: f64,
    convention: DeltaConvention,
) -> Result<CircuitMapping> {
    let spectrum = qubit_spectrum(p)?;
    if !(omega_c > spectrum.omega_10) {
        return Err(Error::invalid(
            "omega_c",
            format!(
                "cutoff {omega_c:e} rad/s must exceed the qubit frequency {:e} rad/s",
                spectrum.omega_10
            ),
        ));
    }
    let delta_j = delta_energy(&spectrum, convention);
    let alpha = dissipation_strength(p, delta_j);
    let mut warnings = Vec::new();
    if !spectrum.phase_regime {
        warnings.push(format!(
            "E_J/E_C = {:.3e} below {DEFAULT_EJ_EC_RATIO}",
            spectrum.e_j / spectrum.e_c
        ));
    }
    if alpha < ALPHA_WINDOW.0 || alpha > ALPHA_WINDOW.1 {
        let msg = format!(
            "alpha = {alpha:.4} outside the reachable window [{}, {}]",
            ALPHA_WINDOW.0, ALPHA_WINDOW.1
        );
        warn!("{msg}");
        warnings.push(msg);
    }
    let model = SpinBosonParams {
        delta: delta_j / (CONSTANTS.h_bar * omega_c),
        epsilon: 0.0,
        alpha,
        s: 1.0,
        omega_c,
    };
    Ok(CircuitMapping {
        spectrum,
        model,
        convention,
        warnings,
    })
}

/// Static microwave bias ε = √(ħ / 2ω₁₀C) · I_μw, in joules.
pub fn microwave_bias(p: &CircuitParams, i_uw: f64) -> Result<f64> {
    let spectrum = qubit_spectrum(p)?;
    Ok(bias_from_frequency(spectrum.omega_10, p.total_capacitance(), i_uw))
}

pub(crate) fn bias_from_frequency(omega_10: f64, cap: f64, i_uw: f64) -> f64 {
    (CONSTANTS.h_bar / (2.0 * omega_10 * cap)).sqrt() * i_uw
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineMode {
    /// rad/s
    pub omega: f64,
    /// Spin–mode coupling λ_n (J).
    pub lambda: f64,
}

/// Discrete modes of a finite line of length `length`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineModes {
    pub modes: Vec<LineMode>,
    pub length: f64,
    /// Mode spacing π/(L√(lc)) in rad/s.
    pub spacing: f64,
}

impl LineModes {
    /// `(frequency, coupling)` pairs in units of ħω_c.
    pub fn reduced(&self, omega_c: f64) -> Vec<(f64, f64)> {
        self.modes
            .iter()
            .map(|m| (m.omega / omega_c, m.lambda / (CONSTANTS.h_bar * omega_c)))
            .collect()
    }
}

/// ω_n = nπ/(L√(lc)), λ_n = C₀√(2Δħω_n/(CLc)) for n = 1..=n_c.
pub fn finite_line_modes(
    p: &CircuitParams,
    length: f64,
    n_c: usize,
    convention: DeltaConvention,
) -> Result<LineModes> {
    if !(length > 0.0) || !length.is_finite() {
        return Err(Error::invalid("length", format!("must be > 0, got {length}")));
    }
    if n_c == 0 {
        return Err(Error::invalid("n_c", "need at least one mode"));
    }
    let spectrum = qubit_spectrum(p)?;
    let delta = delta_energy(&spectrum, convention);
    let spacing = PI / (length * (p.l * p.c).sqrt());
    let cap = p.total_capacitance();
    let modes = (1..=n_c)
        .map(|n| {
            let omega = n as f64 * spacing;
            let lambda = p.c_0 * (2.0 * delta * CONSTANTS.h_bar * omega / (cap * length * p.c)).sqrt();
            LineMode { omega, lambda }
        })
        .collect();
    Ok(LineModes {
        modes,
        length,
        spacing,
    })
}
