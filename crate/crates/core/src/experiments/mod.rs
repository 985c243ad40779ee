//! In-silico versions of the adiabatic, composite-pulse, fidelity and Ramsey experiments,
//! plus the algebraic checks. Every runner returns a [`ScenarioReport`]; the named
//! scenarios used by the command line live in [`SCENARIOS`].

mod channel;
mod checks;
mod fidelity;
mod report;
mod transfer;

use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::dynamics::IntegratorConfig;
use crate::error::{Error, Result};
use crate::measurement::MeasurementModel;
use crate::waveforms::{AdiabaticParams, Direction, DrivePerturbation};

pub use channel::OpChannel;
pub use checks::{eigen_scan_report, rotation_cycle_check, verify_reversal};
pub use fidelity::{
    fringe_after_one_op, injected_epsilon, measure_fidelity_vs_n, run_ramsey_dressed_qubit, tune_zeeman_sigma,
    FidelityVsN, Method, RamseyResult,
};
pub use report::{write_atomic, write_report, ScenarioReport, Table};
pub use transfer::{run_adiabatic_transfer, run_tbb1, static_error_infidelity, sweep_pulse_area, AreaMethod};

/// Error sources. Frequencies in rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseParams {
    /// `|Ω₁ - Ω₂| / (Ω₁ + Ω₂)`; the field to `|-1>` gets `Ω(1+ε)`, the one to `|+1>` gets `Ω(1-ε)`.
    pub rabi_mismatch: f64,
    /// `ΔΩ = Ω - Ω0`, common to both fields.
    pub common_rabi_error: f64,
    /// Detuning offset of each field.
    pub static_detuning: f64,
    /// Standard deviation of a quasi-static shift `s` applied as `±s` on `|±1>`,
    /// drawn independently for every operation.
    pub zeeman_sigma: f64,
}

impl NoiseParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("rabi_mismatch", self.rabi_mismatch),
            ("δ_err", self.static_detuning),
            ("zeeman_sigma", self.zeeman_sigma),
        ] {
            if !(v >= 0.0) {
                return Err(Error::param(name, "must be >= 0"));
            }
        }
        if !self.common_rabi_error.is_finite() {
            return Err(Error::param("ΔΩ", "must be finite"));
        }
        Ok(())
    }

    /// Qutrit perturbation for a Zeeman draw `zeeman` and detuning-offset signs `(s₋, s₊)`
    /// of the fields to `|-1>` and `|+1>`. A field detuning `e` shifts its `|±1>` level
    /// by `e/2`, the same convention in which the ideal drive has detunings `∓δ`.
    pub fn perturbation(&self, zeeman: f64, signs: (f64, f64)) -> DrivePerturbation<f64> {
        let e = self.static_detuning / 2.0;
        DrivePerturbation {
            rabi_scale: vec![1.0 + self.rabi_mismatch, 1.0 - self.rabi_mismatch],
            level_shift: vec![signs.0 * e - zeeman, 0.0, signs.1 * e + zeeman],
        }
    }
}

/// Full parameter record of a scenario run, in SI units (rad/s, s).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub rabi0: f64,
    pub detuning0: f64,
    pub ramp_time: f64,
    pub chirp_time: f64,
    pub hold_time: f64,
    /// Composite-pulse Rabi offset `ΔΩ` for the TBB1 scenario.
    pub tbb1_rabi_error: f64,
    pub noise: NoiseParams,
    pub dim: usize,
    pub ns: Vec<u32>,
    pub ramsey_ns: Vec<u32>,
    pub shots: u64,
    pub p_b_given_1: f64,
    pub p_b_given_0: f64,
    pub chi_points: usize,
    pub areas: Vec<f64>,
    pub trajectory_points: usize,
    /// Per-op infidelity the fidelity-vs-N scenario tunes the Zeeman noise to; 0 uses `noise` as given.
    pub target_epsilon: f64,
    pub quadrature_nodes: usize,
    pub max_step: Option<f64>,
    pub tolerance: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let p = AdiabaticParams::reference();
        Self {
            rabi0: p.rabi0,
            detuning0: p.detuning0,
            ramp_time: p.ramp_time,
            chirp_time: p.chirp_time,
            hold_time: p.hold_time,
            tbb1_rabi_error: -TAU * 10e3,
            noise: NoiseParams::default(),
            dim: 5,
            ns: vec![8, 16, 32, 64],
            ramsey_ns: vec![0, 4, 8, 16, 32],
            shots: 200,
            p_b_given_1: 0.985,
            p_b_given_0: 0.015,
            chi_points: 20,
            areas: (0..=100).map(|i| 0.5 + i as f64 * 0.01).collect(),
            trajectory_points: 500,
            target_epsilon: 1.4e-4,
            quadrature_nodes: 16,
            max_step: None,
            tolerance: 1e-9,
        }
    }
}

impl ScenarioConfig {
    pub fn adiabatic(&self, direction: Direction) -> AdiabaticParams<f64> {
        AdiabaticParams {
            rabi0: self.rabi0,
            detuning0: self.detuning0,
            ramp_time: self.ramp_time,
            chirp_time: self.chirp_time,
            hold_time: self.hold_time,
            direction,
        }
    }

    pub fn integrator(&self) -> IntegratorConfig<f64> {
        IntegratorConfig { max_step: self.max_step, tolerance: self.tolerance, ..Default::default() }
    }

    pub fn measurement(&self, seed: u64) -> MeasurementModel {
        MeasurementModel { p_b_given_1: self.p_b_given_1, p_b_given_0: self.p_b_given_0, shots: self.shots, seed }
    }

    pub fn validate(&self) -> Result<()> {
        self.adiabatic(Direction::RoundTrip).validate()?;
        self.noise.validate()?;
        self.measurement(0).validate()?;
        self.integrator().validate()?;
        if !(self.tbb1_rabi_error.abs() < self.rabi0) {
            return Err(Error::param("ΔΩ", "need |ΔΩ| < Ω0"));
        }
        if !(2..=8).contains(&self.dim) {
            return Err(Error::param("d", "need 2 <= d <= 8"));
        }
        if let Some(n) = self.ns.iter().find(|n| **n % 2 != 0) {
            return Err(Error::param("N", format!("{n} is odd; forward/reverse pairs need even N")));
        }
        if let Some(n) = self.ramsey_ns.iter().find(|n| **n % 4 != 0) {
            return Err(Error::param(
                "ramsey_N",
                format!("{n}: each half of the echo needs an even number of transfers"),
            ));
        }
        if self.chi_points < 4 {
            return Err(Error::param("chi_points", "need >= 4"));
        }
        if let Some(a) = self.areas.iter().find(|a| !(**a > 0.0)) {
            return Err(Error::param("areas", format!("{a} is not > 0")));
        }
        if self.trajectory_points < 1 {
            return Err(Error::param("trajectory_points", "need >= 1"));
        }
        if !(self.target_epsilon >= 0.0) {
            return Err(Error::param("target_epsilon", "must be >= 0"));
        }
        if self.quadrature_nodes < 1 {
            return Err(Error::param("quadrature_nodes", "need >= 1"));
        }
        Ok(())
    }
}

/// Named scenario with the figure or claim it reproduces.
#[derive(Debug, Clone, Copy)]
pub struct ScenarioInfo {
    pub name: &'static str,
    pub anchor: &'static str,
}

pub const SCENARIOS: &[ScenarioInfo] = &[
    ScenarioInfo { name: "fig2ab", anchor: "eigenvalues and eigenstates of H_1/2 versus δ/Ω" },
    ScenarioInfo { name: "fig2e", anchor: "P(F=1) during the adiabatic round trip" },
    ScenarioInfo { name: "fig3c", anchor: "P(F=1) during TBB1 with ΔΩ = -2π×10 kHz" },
    ScenarioInfo { name: "fig3d", anchor: "P(F=1) versus normalised pulse area, single pulse and TBB1" },
    ScenarioInfo { name: "fig4b", anchor: "fringe after one adiabatic transfer and its ML fit" },
    ScenarioInfo { name: "fig4c", anchor: "F_D versus number of operations and ε_m" },
    ScenarioInfo { name: "ramsey", anchor: "Dressed-qubit Ramsey with spin echo: contrast versus N" },
    ScenarioInfo { name: "static-error", anchor: "Rabi mismatch and detuning offsets: preparation infidelity" },
    ScenarioInfo { name: "verify-reversal", anchor: "d-level amplitude reversal from the lifted π rotation" },
    ScenarioInfo { name: "rotation-cycle", anchor: "m=0 and ±1 cycles under repeated π/2 rotations about y" },
];

pub fn run_scenario(name: &str, cfg: &ScenarioConfig, seed: u64) -> Result<ScenarioReport> {
    cfg.validate()?;
    let mut report = match name {
        "fig2ab" => eigen_scan_report(cfg)?,
        "fig2e" => run_adiabatic_transfer(
            &cfg.adiabatic(Direction::RoundTrip),
            &cfg.noise,
            &cfg.integrator(),
            cfg.trajectory_points,
        )?,
        "fig3c" => run_tbb1(cfg.rabi0, cfg.tbb1_rabi_error, &cfg.integrator(), cfg.trajectory_points)?,
        "fig3d" => transfer::area_sweep_report(cfg)?,
        "fig4b" => fidelity::fig4b_report(cfg, seed)?,
        "fig4c" => fidelity::fig4c_report(cfg, seed)?,
        "ramsey" => fidelity::ramsey_report(cfg, seed)?,
        "static-error" => transfer::static_error_report(cfg)?,
        "verify-reversal" => verify_reversal(cfg.dim)?,
        "rotation-cycle" => rotation_cycle_check()?,
        other => {
            return Err(Error::param(
                "scenario",
                format!(
                    "unknown scenario '{other}'; known: {}",
                    SCENARIOS.iter().map(|s| s.name).collect::<Vec<_>>().join(", ")
                ),
            ))
        }
    };
    report.name = name.to_string();
    report.seed = seed;
    report.pass = report.passed();
    report.config = Some(serde_json::to_value(cfg)?);
    Ok(report)
}
