//! User-facing run configuration. Frequencies are given in Hz (the `Ω/2π` of the
//! physics notation) and times in µs; [`UserConfig::to_scenario`] converts to rad/s and s.

use std::f64::consts::TAU;
use std::path::Path;

use multilevel_control::experiments::{NoiseParams, ScenarioConfig};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserConfig {
    pub rabi0_hz: f64,
    pub detuning0_hz: f64,
    pub ramp_time_us: f64,
    pub chirp_time_us: f64,
    pub hold_time_us: f64,
    pub tbb1_rabi_error_hz: f64,
    pub common_rabi_error_hz: f64,
    pub rabi_mismatch: f64,
    pub detuning_error_hz: f64,
    pub zeeman_sigma_hz: f64,
    pub d: usize,
    pub ns: Vec<u32>,
    pub ramsey_ns: Vec<u32>,
    pub shots: u64,
    pub p_b_given_1: f64,
    pub p_b_given_0: f64,
    pub chi_points: usize,
    pub areas: Vec<f64>,
    pub trajectory_points: usize,
    pub target_epsilon: f64,
    pub quadrature_nodes: usize,
    pub max_step_us: Option<f64>,
    pub tolerance: f64,
}

impl Default for UserConfig {
    fn default() -> Self {
        let s = ScenarioConfig::default();
        Self {
            rabi0_hz: 40e3,
            detuning0_hz: 60e3,
            ramp_time_us: 200.0,
            chirp_time_us: 300.0,
            hold_time_us: 400.0,
            tbb1_rabi_error_hz: -10e3,
            common_rabi_error_hz: 0.0,
            rabi_mismatch: 0.0,
            detuning_error_hz: 0.0,
            zeeman_sigma_hz: 0.0,
            d: s.dim,
            ns: s.ns,
            ramsey_ns: s.ramsey_ns,
            shots: s.shots,
            p_b_given_1: s.p_b_given_1,
            p_b_given_0: s.p_b_given_0,
            chi_points: s.chi_points,
            areas: s.areas,
            trajectory_points: s.trajectory_points,
            target_epsilon: s.target_epsilon,
            quadrature_nodes: s.quadrature_nodes,
            max_step_us: None,
            tolerance: s.tolerance,
        }
    }
}

/// Canonical key and the alternative spellings accepted for it.
pub const KEYS: &[(&str, &[&str])] = &[
    ("rabi0_hz", &["Ω0", "Omega0", "rabi0"]),
    ("detuning0_hz", &["δ0", "delta0", "detuning0"]),
    ("ramp_time_us", &["t_Ω", "t_Omega", "ramp_time"]),
    ("chirp_time_us", &["t_δ", "t_delta", "chirp_time"]),
    ("hold_time_us", &["t_h", "hold_time"]),
    ("tbb1_rabi_error_hz", &["ΔΩ", "delta_Omega"]),
    ("common_rabi_error_hz", &["ΔΩ_common", "common_rabi_error"]),
    ("rabi_mismatch", &["ε_Ω", "epsilon_rabi"]),
    ("detuning_error_hz", &["δ_err", "delta_err"]),
    ("zeeman_sigma_hz", &["σ_Z", "sigma_z"]),
    ("d", &["dim"]),
    ("ns", &["N"]),
    ("ramsey_ns", &["ramsey_N"]),
    ("shots", &["n"]),
    ("p_b_given_1", &[]),
    ("p_b_given_0", &[]),
    ("chi_points", &[]),
    ("areas", &[]),
    ("trajectory_points", &[]),
    ("target_epsilon", &["ε_target"]),
    ("quadrature_nodes", &[]),
    ("max_step_us", &["max_step"]),
    ("tolerance", &[]),
];

pub fn canonical_key(key: &str) -> Option<&'static str> {
    KEYS.iter().find(|(name, aliases)| *name == key || aliases.contains(&key)).map(|(name, _)| *name)
}

fn number(key: &str, v: &Value) -> Result<f64, CliError> {
    let x = match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => s.trim().parse::<f64>().ok(),
        _ => None,
    };
    match x {
        Some(x) if x.is_finite() => Ok(x),
        _ => Err(CliError::config(key, format!("expected a finite number, got {v}"))),
    }
}

fn integer(key: &str, v: &Value) -> Result<u64, CliError> {
    let x = number(key, v)?;
    if x < 0.0 || x.fract() != 0.0 || x > u32::MAX as f64 {
        return Err(CliError::config(key, format!("expected a non-negative integer, got {v}")));
    }
    Ok(x as u64)
}

fn list(key: &str, v: &Value) -> Result<Vec<Value>, CliError> {
    match v {
        Value::Array(items) => Ok(items.clone()),
        Value::String(s) => Ok(s.split(',').map(|p| Value::String(p.trim().to_string())).collect()),
        Value::Number(_) => Ok(vec![v.clone()]),
        _ => Err(CliError::config(key, format!("expected a list, got {v}"))),
    }
}

fn check(key: &str, ok: bool, rule: &str) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::config(key, rule.to_string()))
    }
}

impl UserConfig {
    /// Sets one key given as written by the user (any accepted spelling). The error names
    /// `key` exactly as given.
    pub fn set(&mut self, key: &str, v: &Value) -> Result<(), CliError> {
        let name = canonical_key(key).ok_or_else(|| CliError::config(key, "unknown key".to_string()))?;
        let positive = |x: f64| check(key, x > 0.0, "must be > 0").map(|_| x);
        let non_negative = |x: f64| check(key, x >= 0.0, "must be >= 0").map(|_| x);
        let probability = |x: f64| check(key, (0.0..=1.0).contains(&x), "must lie in [0, 1]").map(|_| x);
        match name {
            "rabi0_hz" => self.rabi0_hz = positive(number(key, v)?)?,
            "detuning0_hz" => self.detuning0_hz = positive(number(key, v)?)?,
            "ramp_time_us" => self.ramp_time_us = positive(number(key, v)?)?,
            "chirp_time_us" => self.chirp_time_us = positive(number(key, v)?)?,
            "hold_time_us" => self.hold_time_us = non_negative(number(key, v)?)?,
            "tbb1_rabi_error_hz" => self.tbb1_rabi_error_hz = number(key, v)?,
            "common_rabi_error_hz" => self.common_rabi_error_hz = number(key, v)?,
            "rabi_mismatch" => {
                let x = number(key, v)?;
                check(key, (0.0..1.0).contains(&x), "must lie in [0, 1)")?;
                self.rabi_mismatch = x;
            }
            "detuning_error_hz" => self.detuning_error_hz = non_negative(number(key, v)?)?,
            "zeeman_sigma_hz" => self.zeeman_sigma_hz = non_negative(number(key, v)?)?,
            "d" => {
                let d = integer(key, v)?;
                check(key, (2..=8).contains(&d), "must be an integer in 2..=8")?;
                self.d = d as usize;
            }
            "ns" | "ramsey_ns" => {
                let step = if name == "ns" { 2 } else { 4 };
                let values =
                    list(key, v)?.iter().map(|x| integer(key, x).map(|n| n as u32)).collect::<Result<Vec<_>, _>>()?;
                check(key, !values.is_empty(), "must not be empty")?;
                if let Some(n) = values.iter().find(|n| **n % step != 0) {
                    return Err(CliError::config(key, format!("{n} is not a multiple of {step}")));
                }
                if name == "ns" {
                    self.ns = values;
                } else {
                    self.ramsey_ns = values;
                }
            }
            "shots" => {
                let n = integer(key, v)?;
                check(key, n >= 1, "must be >= 1")?;
                self.shots = n;
            }
            "p_b_given_1" => self.p_b_given_1 = probability(number(key, v)?)?,
            "p_b_given_0" => self.p_b_given_0 = probability(number(key, v)?)?,
            "chi_points" => {
                let n = integer(key, v)?;
                check(key, n >= 4, "must be >= 4")?;
                self.chi_points = n as usize;
            }
            "areas" => {
                let values = list(key, v)?.iter().map(|x| number(key, x)).collect::<Result<Vec<_>, _>>()?;
                check(
                    key,
                    !values.is_empty() && values.iter().all(|a| *a > 0.0),
                    "must be a non-empty list of values > 0",
                )?;
                self.areas = values;
            }
            "trajectory_points" => {
                let n = integer(key, v)?;
                check(key, n >= 1, "must be >= 1")?;
                self.trajectory_points = n as usize;
            }
            "target_epsilon" => self.target_epsilon = non_negative(number(key, v)?)?,
            "quadrature_nodes" => {
                let n = integer(key, v)?;
                check(key, (1..=64).contains(&n), "must be an integer in 1..=64")?;
                self.quadrature_nodes = n as usize;
            }
            "max_step_us" => {
                self.max_step_us = match v {
                    Value::Null => None,
                    Value::String(s) if s == "none" || s == "null" => None,
                    _ => Some(positive(number(key, v)?)?),
                }
            }
            "tolerance" => self.tolerance = positive(number(key, v)?)?,
            _ => unreachable!("every canonical key is handled"),
        }
        Ok(())
    }

    /// `key=value` from the command line. Lists are comma-separated.
    pub fn set_flag(&mut self, assignment: &str) -> Result<(), CliError> {
        let (key, value) =
            assignment.split_once('=').ok_or_else(|| CliError::config(assignment, "expected key=value".to_string()))?;
        self.set(key.trim(), &Value::String(value.trim().to_string()))
    }

    /// Applies every entry of a flat JSON object on top of the current values.
    pub fn apply_json(&mut self, text: &str) -> Result<(), CliError> {
        let map: Map<String, Value> = serde_json::from_str(text)
            .map_err(|e| CliError::new("config-parse", None, format!("config is not a JSON object: {e}")))?;
        for (k, v) in &map {
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::new("io", None, format!("cannot read {}: {e}", path.display())))?;
        self.apply_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }

    pub fn to_scenario(&self) -> ScenarioConfig {
        ScenarioConfig {
            rabi0: TAU * self.rabi0_hz,
            detuning0: TAU * self.detuning0_hz,
            ramp_time: self.ramp_time_us / 1e6,
            chirp_time: self.chirp_time_us / 1e6,
            hold_time: self.hold_time_us / 1e6,
            tbb1_rabi_error: TAU * self.tbb1_rabi_error_hz,
            noise: NoiseParams {
                rabi_mismatch: self.rabi_mismatch,
                common_rabi_error: TAU * self.common_rabi_error_hz,
                static_detuning: TAU * self.detuning_error_hz,
                zeeman_sigma: TAU * self.zeeman_sigma_hz,
            },
            dim: self.d,
            ns: self.ns.clone(),
            ramsey_ns: self.ramsey_ns.clone(),
            shots: self.shots,
            p_b_given_1: self.p_b_given_1,
            p_b_given_0: self.p_b_given_0,
            chi_points: self.chi_points,
            areas: self.areas.clone(),
            trajectory_points: self.trajectory_points,
            target_epsilon: self.target_epsilon,
            quadrature_nodes: self.quadrature_nodes,
            max_step: self.max_step_us.map(|s| s / 1e6),
            tolerance: self.tolerance,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_the_library() {
        assert_eq!(UserConfig::default().to_scenario(), ScenarioConfig::default());
    }

    #[test]
    fn aliases_resolve() {
        let mut c = UserConfig::default();
        c.set_flag("Ω0=20000").unwrap();
        c.set_flag("t_h=0").unwrap();
        c.set_flag("N=2,4").unwrap();
        assert_eq!(c.rabi0_hz, 20e3);
        assert_eq!(c.hold_time_us, 0.0);
        assert_eq!(c.ns, vec![2, 4]);
    }

    #[test]
    fn errors_name_the_key() {
        let mut c = UserConfig::default();
        let e = c.set_flag("Ω0=-1").unwrap_err();
        assert_eq!(e.key.as_deref(), Some("Ω0"));
        let e = c.set_flag("bogus=1").unwrap_err();
        assert_eq!(e.key.as_deref(), Some("bogus"));
        let e = c.set_flag("N=3").unwrap_err();
        assert_eq!(e.key.as_deref(), Some("N"));
        let e = c.set_flag("d=abc").unwrap_err();
        assert_eq!(e.key.as_deref(), Some("d"));
    }

    #[test]
    fn json_round_trip() {
        let mut c = UserConfig::default();
        c.set_flag("σ_Z=123.456").unwrap();
        c.set_flag("max_step=0.5").unwrap();
        let mut back = UserConfig::default();
        back.apply_json(&c.to_json()).unwrap();
        assert_eq!(back, c);
    }
}
