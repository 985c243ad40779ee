use std::f64::consts::{FRAC_PI_2, TAU};

use rayon::prelude::*;

use crate::dynamics::{propagate, propagator, uniform_times, IntegratorConfig};
use crate::error::{Error, Result};
use crate::measurement::GaussHermite;
use crate::spin::{named_state, state_fidelity, StateVector};
use crate::waveforms::{
    adiabatic_method, composite_method, lift_schedule, AdiabaticParams, CompositeSequence, ControlSchedule, Direction,
    MultiLevelDrive,
};

use super::{NoiseParams, ScenarioConfig, ScenarioReport, Table};

pub(super) fn qutrit_drive(
    schedule: &ControlSchedule<f64>,
    noise: &NoiseParams,
    rabi0: f64,
    zeeman: f64,
    signs: (f64, f64),
) -> Result<MultiLevelDrive<f64>> {
    let scaled = if noise.common_rabi_error != 0.0 {
        schedule.scale_rabi((rabi0 + noise.common_rabi_error) / rabi0)
    } else {
        schedule.clone()
    };
    let drive = lift_schedule(&scaled, 3)?;
    let p = noise.perturbation(zeeman, signs);
    if p.is_trivial() {
        Ok(drive)
    } else {
        drive.with_perturbation(p)
    }
}

/// Population-weighted average of trajectories over the quasi-static Zeeman draw.
fn averaged_populations(
    schedule: &ControlSchedule<f64>,
    noise: &NoiseParams,
    rabi0: f64,
    cfg: &IntegratorConfig<f64>,
    psi0: &StateVector<f64>,
    times: &[f64],
    targets: &[(usize, &StateVector<f64>)],
) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let (nodes, weights) = if noise.zeeman_sigma > 0.0 {
        let q = GaussHermite::new(12);
        (q.nodes.iter().map(|x| x * noise.zeeman_sigma).collect(), q.weights)
    } else {
        (vec![0.0], vec![1.0])
    };
    let runs = nodes
        .par_iter()
        .map(|&z| {
            let drive = qutrit_drive(schedule, noise, rabi0, z, (1.0, 1.0))?;
            let tr = propagate(&drive, psi0, cfg, times)?;
            let fids =
                targets.iter().map(|(i, target)| state_fidelity(&tr.states[*i], target)).collect::<Result<Vec<_>>>()?;
            Ok((tr.populations, fids))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut pops = vec![vec![0.0; 3]; times.len()];
    let mut fids = vec![0.0; targets.len()];
    for ((p, f), w) in runs.iter().zip(&weights) {
        for (acc, row) in pops.iter_mut().zip(p) {
            for (a, v) in acc.iter_mut().zip(row) {
                *a += w * v;
            }
        }
        for (a, v) in fids.iter_mut().zip(f) {
            *a += w * v;
        }
    }
    Ok((pops, fids))
}

fn trajectory_table(times: &[f64], pops: &[Vec<f64>]) -> Table {
    let mut t = Table::new(&["time_us", "p_-1", "p_0", "p_+1", "p_F1"]);
    for (time, p) in times.iter().zip(pops) {
        t.push(vec![time * 1e6, p[0], p[1], p[2], 1.0 - p[1]]);
    }
    t
}

/// Round trip `|0> -> |D> -> |0>` (forward sweep, hold, reverse sweep) from `|0>`.
///
/// Outputs the fidelity to `|D>` at the centre of the hold, to `|0>` at the end, and the
/// round-trip infidelity per operation `(1 - F_end)/2`; the table is the `P(F=1)` trajectory.
pub fn run_adiabatic_transfer(
    p: &AdiabaticParams<f64>,
    noise: &NoiseParams,
    cfg: &IntegratorConfig<f64>,
    points: usize,
) -> Result<ScenarioReport> {
    noise.validate()?;
    let p = p.with_direction(Direction::RoundTrip);
    let schedule = adiabatic_method(&p)?;
    let total = schedule.total_duration();
    let mid = p.chirp_time + 0.5 * p.hold_time;
    let zero = named_state(3, "0")?;
    let dark = named_state(3, "D")?;
    let mut times = uniform_times(total, points);
    let grid_len = times.len();
    times.push(mid);
    times.push(total);
    // the trajectory grid and the two probe times are integrated in one ordered pass
    let mut order: Vec<usize> = (0..times.len()).collect();
    order.sort_by(|&a, &b| times[a].total_cmp(&times[b]));
    let sorted: Vec<f64> = order.iter().map(|&i| times[i]).collect();
    let pos = |orig: usize| order.iter().position(|&i| i == orig).expect("present");
    let targets = [(pos(grid_len), &dark), (pos(grid_len + 1), &zero)];
    let (pops_sorted, fids) = averaged_populations(&schedule, noise, p.rabi0, cfg, &zero, &sorted, &targets)?;
    let mut pops = vec![Vec::new(); times.len()];
    for (k, &i) in order.iter().enumerate() {
        pops[i] = pops_sorted[k].clone();
    }

    let mut r = ScenarioReport::new("adiabatic-transfer");
    r.input(
        "params",
        serde_json::json!({
            "rabi0": p.rabi0, "detuning0": p.detuning0, "ramp_time": p.ramp_time,
            "chirp_time": p.chirp_time, "hold_time": p.hold_time,
        }),
    );
    r.input("noise", noise);
    r.output("duration_us", total * 1e6)
        .output("mid_time_us", mid * 1e6)
        .output("mid_fidelity_D", fids[0])
        .output("end_fidelity_0", fids[1])
        .output("mid_infidelity", 1.0 - fids[0])
        .output("round_trip_infidelity_per_op", (1.0 - fids[1]) / 2.0)
        .output("max_p_F1", pops[..grid_len].iter().map(|p| 1.0 - p[1]).fold(0.0, f64::max));
    r.table = Some(trajectory_table(&times[..grid_len], &pops[..grid_len]));
    Ok(r)
}

/// TBB1 (`|0> -> |D>`) with every Rabi frequency offset by `ΔΩ`, from `|0>`.
pub fn run_tbb1(rabi0: f64, rabi_error: f64, cfg: &IntegratorConfig<f64>, points: usize) -> Result<ScenarioReport> {
    if !(rabi_error.abs() < rabi0) {
        return Err(Error::param("ΔΩ", "need |ΔΩ| < Ω0"));
    }
    let schedule = composite_method(&CompositeSequence::tbb1(), rabi0, true)?.scale_rabi((rabi0 + rabi_error) / rabi0);
    let drive = lift_schedule(&schedule, 3)?;
    let total = schedule.total_duration();
    let tr = propagate(&drive, &named_state(3, "0")?, cfg, &uniform_times(total, points))?;
    let last = tr.final_state().expect("at least one sample");
    let fidelity = state_fidelity(last, &named_state(3, "D")?)?;
    let mut r = ScenarioReport::new("tbb1");
    r.input("rabi0", rabi0).input("rabi_error", rabi_error);
    r.output("duration_us", total * 1e6)
        .output("final_fidelity_D", fidelity)
        .output("final_infidelity", 1.0 - fidelity)
        .output("final_p_F1", 1.0 - last.populations()[1])
        .output("relative_rabi_error", rabi_error / rabi0);
    r.table = Some(trajectory_table(&tr.times, &tr.populations));
    Ok(r)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AreaMethod {
    SinglePulse,
    Tbb1,
}

/// `(area, P(F=1), fidelity to |D>)` with every pulse duration scaled by `area`.
pub fn sweep_pulse_area(
    method: AreaMethod,
    areas: &[f64],
    rabi0: f64,
    cfg: &IntegratorConfig<f64>,
) -> Result<Vec<(f64, f64, f64)>> {
    let seq = match method {
        AreaMethod::SinglePulse => {
            CompositeSequence::new(vec![crate::waveforms::Rotation { angle: FRAC_PI_2, phase: FRAC_PI_2 }])?
        }
        AreaMethod::Tbb1 => CompositeSequence::tbb1(),
    };
    let nominal = composite_method(&seq, rabi0, false)?;
    let zero = named_state(3, "0")?;
    let dark = named_state(3, "D")?;
    areas
        .par_iter()
        .map(|&a| {
            if !(a > 0.0) {
                return Err(Error::param("area", format!("{a} is not > 0")));
            }
            let u = propagator(&lift_schedule(&nominal.scale_durations(a), 3)?, cfg)?;
            let out = u.apply(&zero)?;
            Ok((a, 1.0 - out.populations()[1], state_fidelity(&out, &dark)?))
        })
        .collect()
}

pub(super) fn area_sweep_report(cfg: &ScenarioConfig) -> Result<ScenarioReport> {
    let ic = cfg.integrator();
    let single = sweep_pulse_area(AreaMethod::SinglePulse, &cfg.areas, cfg.rabi0, &ic)?;
    let tbb1 = sweep_pulse_area(AreaMethod::Tbb1, &cfg.areas, cfg.rabi0, &ic)?;
    let mut t = Table::new(&["area", "p_F1_single", "p_F1_tbb1", "infidelity_single", "infidelity_tbb1"]);
    for (s, b) in single.iter().zip(&tbb1) {
        t.push(vec![s.0, s.1, b.1, 1.0 - s.2, 1.0 - b.2]);
    }
    let window = [0.92, 0.96, 1.0, 1.04, 1.08];
    let ws = sweep_pulse_area(AreaMethod::SinglePulse, &window, cfg.rabi0, &ic)?;
    let wb = sweep_pulse_area(AreaMethod::Tbb1, &window, cfg.rabi0, &ic)?;
    let max_single = ws.iter().map(|x| 1.0 - x.2).fold(0.0, f64::max);
    let max_tbb1 = wb.iter().map(|x| 1.0 - x.2).fold(0.0, f64::max);
    let mut r = ScenarioReport::new("fig3d");
    r.input("flatness_window", window);
    r.output("max_infidelity_single_window", max_single)
        .output("max_infidelity_tbb1_window", max_tbb1)
        .output("flatness_ratio", max_tbb1 / max_single);
    r.check("tbb1_flat", max_tbb1 <= 1e-2 * max_single);
    r.table = Some(t);
    Ok(r)
}

/// Preparation infidelity `1 - |<D|ψ>|²` after one forward adiabatic transfer (`t_h = 0`)
/// with field Rabi frequencies `Ω(1 ± ε)` and per-field detuning offsets of size `δ_err`.
/// The worse of equal `(+,+)` and opposite `(+,-)` offset signs is returned.
pub fn static_error_infidelity(
    p: &AdiabaticParams<f64>,
    rabi_mismatch: f64,
    detuning_error: f64,
    cfg: &IntegratorConfig<f64>,
) -> Result<f64> {
    let noise = NoiseParams { rabi_mismatch, static_detuning: detuning_error, ..Default::default() };
    noise.validate()?;
    let schedule = adiabatic_method(&p.with_direction(Direction::Forward).with_hold(0.0))?;
    let zero = named_state(3, "0")?;
    let dark = named_state(3, "D")?;
    let signs: &[(f64, f64)] = if detuning_error == 0.0 { &[(1.0, 1.0)] } else { &[(1.0, 1.0), (1.0, -1.0)] };
    let worst = signs
        .par_iter()
        .map(|&s| {
            let drive = qutrit_drive(&schedule, &noise, p.rabi0, 0.0, s)?;
            let out = propagator(&drive, cfg)?.apply(&zero)?;
            Ok(1.0 - state_fidelity(&out, &dark)?)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(worst.into_iter().fold(0.0, f64::max))
}

pub(super) fn static_error_report(cfg: &ScenarioConfig) -> Result<ScenarioReport> {
    let p = cfg.adiabatic(Direction::Forward);
    let ic = cfg.integrator();
    let mismatches = [0.0, 0.0015, 0.005, 0.01, 0.015];
    let detunings_hz = [0.0, 3.0, 10.0, 20.0, 30.0];
    let cells: Vec<(f64, f64)> = mismatches.iter().flat_map(|&m| detunings_hz.iter().map(move |&d| (m, d))).collect();
    let values =
        cells.par_iter().map(|&(m, d)| static_error_infidelity(&p, m, TAU * d, &ic)).collect::<Result<Vec<_>>>()?;
    let mut t = Table::new(&["rabi_mismatch", "detuning_error_hz", "infidelity"]);
    for ((m, d), v) in cells.iter().zip(&values) {
        t.push(vec![*m, *d, *v]);
    }
    let at = |m: f64, d: f64| values[cells.iter().position(|c| *c == (m, d)).expect("grid point")];
    let measured = at(0.0015, 3.0);
    let mut r = ScenarioReport::new("static-error");
    r.output("infidelity_floor", at(0.0, 0.0))
        .output("infidelity_measured_bounds", measured)
        .output("infidelity_10x_bounds", at(0.015, 30.0));
    if cfg.noise.rabi_mismatch > 0.0 || cfg.noise.static_detuning > 0.0 {
        let v = static_error_infidelity(&p, cfg.noise.rabi_mismatch, cfg.noise.static_detuning, &ic)?;
        r.output("infidelity_configured", v);
    }
    r.check("measured_bounds_below_1e-4", measured < 1e-4);
    r.table = Some(t);
    Ok(r)
}
