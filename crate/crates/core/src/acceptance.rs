//! Executable acceptance criteria. Each criterion runs the library end to end and
//! reports a pass flag with the measured numbers.

use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};
use std::fmt;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dynamics::{propagator, IntegratorConfig};
use crate::error::Result;
use crate::experiments::{
    eigen_scan_report, measure_fidelity_vs_n, rotation_cycle_check, run_adiabatic_transfer, run_ramsey_dressed_qubit,
    run_scenario, run_tbb1, static_error_infidelity, sweep_pulse_area, tune_zeeman_sigma, verify_reversal, AreaMethod,
    Method, NoiseParams, ScenarioConfig, SCENARIOS,
};
use crate::linalg::{max_abs, CMatrix};
use crate::measurement::{
    detection_map, fringe_prediction_state, ml_fit_exact, ml_fit_fringe, sample_counts, FringeData, FringePoint,
    MeasurementModel,
};
use crate::spin::{lift_unitary, named_state};
use crate::waveforms::{
    blackman_detuning, lab_frame_chirp, lift_schedule, AdiabaticParams, ControlSchedule, Controls, Direction, Segment,
    SegmentKind,
};

/// `(1 - F_end)/2` of the zero-noise adiabatic round trip with the reference parameters,
/// recorded from the first run and held fixed since.
pub const ROUND_TRIP_INFIDELITY_PER_OP: f64 = 8.388385636048934e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub id: u32,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {:>2} {:<44} {} ({:.2} s)", self.id, self.title, self.detail, self.seconds)
    }
}

pub const CRITERIA: &[(u32, &str)] = &[
    (1, "Majorana equivalence, random schedules"),
    (2, "lift homomorphism and qutrit matrix"),
    (3, "amplitude reversal for d = 2..6"),
    (4, "adiabatic transfer, reference parameters"),
    (5, "TBB1 transfer with and without Rabi error"),
    (6, "TBB1 flatness against pulse area"),
    (7, "static Rabi and detuning error budget"),
    (8, "lab-frame chirp derivative identity"),
    (9, "fringe inference and Monte-Carlo coverage"),
    (10, "closed-loop per-operation infidelity"),
    (11, "rotation cycles and avoided-crossing gap"),
    (12, "dressed-qubit Ramsey contrast, zero noise"),
    (13, "bit-identical reruns for every scenario"),
];

/// Runs one criterion. Library errors count as failures with the error in the detail.
pub fn run_criterion(id: u32) -> Outcome {
    let title = CRITERIA.iter().find(|c| c.0 == id).map_or("unknown criterion", |c| c.1);
    let start = Instant::now();
    let result = match id {
        1 => majorana(),
        2 => homomorphism(),
        3 => reversal(),
        4 => adiabatic(),
        5 => tbb1(),
        6 => flatness(),
        7 => static_error(),
        8 => chirp_identity(),
        9 => inference(),
        10 => closed_loop(),
        11 => cycles_and_gap(),
        12 => ramsey(),
        13 => determinism(),
        _ => Ok((false, "no such criterion".to_string())),
    };
    let (passed, detail) = result.unwrap_or_else(|e| (false, format!("error: {e}")));
    Outcome { id, title, passed, detail, seconds: start.elapsed().as_secs_f64() }
}

pub fn run_all() -> Vec<Outcome> {
    CRITERIA.iter().map(|c| run_criterion(c.0)).collect()
}

type Check = Result<(bool, String)>;

/// Random schedule of one to eight segments: detuned square pulses with `Ω_1/2` and
/// `|δ_1/2|` up to `2π·100 kHz`, holds, and short Blackman sweeps in either direction.
pub fn random_schedule<R: Rng>(rng: &mut R) -> ControlSchedule<f64> {
    let khz = TAU * 1e3;
    let count = rng.random_range(1..=8);
    let segments = (0..count)
        .map(|_| match rng.random_range(0..3) {
            0 => Segment::square(
                rng.random_range(1e-6..40e-6),
                Controls {
                    rabi_half: rng.random_range(0.0..100.0 * khz),
                    phase: rng.random_range(0.0..TAU),
                    detuning_half: rng.random_range(-100.0 * khz..100.0 * khz),
                },
            ),
            1 => Segment::hold(
                rng.random_range(1e-6..30e-6),
                rng.random_range(0.0..100.0 * khz),
                rng.random_range(0.0..TAU),
            ),
            _ => {
                let duration = rng.random_range(20e-6..60e-6);
                Segment {
                    duration,
                    kind: SegmentKind::BlackmanSweep {
                        peak_rabi: rng.random_range(10.0 * khz..40.0 * khz),
                        initial_detuning: rng.random_range(-60.0 * khz..60.0 * khz),
                        ramp_time: rng.random_range(0.2..1.0) * duration,
                        reversed: rng.random_bool(0.5),
                    },
                }
            }
        })
        .collect();
    ControlSchedule::new(segments).expect("durations are positive")
}

fn majorana() -> Check {
    let cfg = IntegratorConfig::default();
    let worst = (0..100u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(i);
            let s = random_schedule(&mut rng);
            let (a, b) = propagator(&lift_schedule(&s, 2)?, &cfg)?.su2_pair()?;
            let mut worst: f64 = 0.0;
            for d in 2..=5 {
                let ud = propagator(&lift_schedule(&s, d)?, &cfg)?;
                worst = worst.max(ud.phase_distance(&lift_unitary(a, b, d)?));
            }
            Ok(worst)
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok((worst < 1e-8, format!("max phase-insensitive deviation {worst:.2e} (< 1e-8)")))
}

fn random_pair(rng: &mut ChaCha8Rng) -> (Complex64, Complex64) {
    let v: [f64; 4] = std::array::from_fn(|_| rng.sample(rand_distr::StandardNormal));
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    (Complex64::new(v[0] / n, v[1] / n), Complex64::new(v[2] / n, v[3] / n))
}

fn homomorphism() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (a1, b1) = random_pair(&mut rng);
        let (a2, b2) = random_pair(&mut rng);
        // first column of [[a1, -b1*], [b1, a1*]] [[a2, -b2*], [b2, a2*]]
        let (a, b) = (a1 * a2 - b1.conj() * b2, b1 * a2 + a1.conj() * b2);
        for d in 2..=6 {
            let lhs = lift_unitary(a, b, d)?;
            let rhs = lift_unitary(a1, b1, d)?.compose(&lift_unitary(a2, b2, d)?)?;
            worst = worst.max(max_abs(&(lhs.matrix() - rhs.matrix())));
        }
    }
    let (a, b) = (Complex64::new(FRAC_1_SQRT_2, 0.0), Complex64::new(FRAC_1_SQRT_2, 0.0));
    let s2 = 2f64.sqrt();
    let qutrit = CMatrix::from_row_slice(
        3,
        3,
        &[
            a * a,
            -a * b.conj() * s2,
            b.conj() * b.conj(),
            a * b * s2,
            Complex64::new(a.norm_sqr() - b.norm_sqr(), 0.0),
            -a.conj() * b.conj() * s2,
            b * b,
            a.conj() * b * s2,
            a.conj() * a.conj(),
        ],
    );
    let entry = max_abs(&(lift_unitary(a, b, 3)?.matrix() - qutrit));
    Ok((
        worst < 1e-10 && entry < 1e-12,
        format!("homomorphism deviation {worst:.2e} (< 1e-10), qutrit entries {entry:.2e} (< 1e-12)"),
    ))
}

fn reversal() -> Check {
    let mut worst: f64 = 0.0;
    let mut all = true;
    for d in 2..=6 {
        let r = verify_reversal(d)?;
        all &= r.passed();
        worst = worst.max(r.outputs["max_dev"]);
        if let Some(x) = r.outputs.get("dev_x_a") {
            worst = worst.max(*x);
        }
    }
    Ok((all && worst < 1e-10, format!("max deviation {worst:.2e} (< 1e-10)")))
}

fn adiabatic() -> Check {
    let start = Instant::now();
    let cfg = ScenarioConfig::default();
    let r =
        run_adiabatic_transfer(&cfg.adiabatic(Direction::RoundTrip), &NoiseParams::default(), &cfg.integrator(), 200)?;
    let secs = start.elapsed().as_secs_f64();
    let mid = r.outputs["mid_fidelity_D"];
    let per_op = r.outputs["round_trip_infidelity_per_op"];
    let frozen = (per_op - ROUND_TRIP_INFIDELITY_PER_OP).abs() < 1e-9;
    let reference = cfg.adiabatic(Direction::RoundTrip);
    let fast =
        AdiabaticParams { ramp_time: reference.ramp_time / 20.0, chirp_time: reference.chirp_time / 20.0, ..reference };
    let diabatic =
        run_adiabatic_transfer(&fast, &NoiseParams::default(), &cfg.integrator(), 200)?.outputs["mid_fidelity_D"];
    Ok((
        mid >= 0.999 && per_op < 1e-3 && frozen && secs < 10.0 && diabatic < 0.99,
        format!(
            "mid F_D {mid:.8}, round-trip per-op {per_op:.6e} (frozen {ROUND_TRIP_INFIDELITY_PER_OP:.6e}), {secs:.2} s; \
             ramps / 20: mid F_D {diabatic:.4} (< 0.99)"
        ),
    ))
}

fn tbb1() -> Check {
    let ic = IntegratorConfig::default();
    let rabi0 = AdiabaticParams::<f64>::reference().rabi0;
    let ideal = 1.0 - run_tbb1(rabi0, 0.0, &ic, 2)?.outputs["final_infidelity"];
    let errored = 1.0 - run_tbb1(rabi0, -TAU * 10e3, &ic, 2)?.outputs["final_infidelity"];
    Ok((
        ideal >= 1.0 - 1e-8 && errored >= 0.99,
        format!("F_D {:.3e} from 1 at ΔΩ = 0, F_D {errored:.6} at ΔΩ/2π = -10 kHz", 1.0 - ideal),
    ))
}

fn flatness() -> Check {
    let ic = IntegratorConfig::default();
    let rabi0 = AdiabaticParams::<f64>::reference().rabi0;
    let areas: Vec<f64> = (0..=16).map(|i| 0.92 + 0.01 * i as f64).collect();
    let worst = |m| -> Result<f64> {
        Ok(sweep_pulse_area(m, &areas, rabi0, &ic)?.iter().map(|x| 1.0 - x.2).fold(0.0, f64::max))
    };
    let (single, tbb1) = (worst(AreaMethod::SinglePulse)?, worst(AreaMethod::Tbb1)?);
    Ok((
        tbb1 <= 1e-2 * single,
        format!("max infidelity TBB1 {tbb1:.2e} vs single pulse {single:.2e} (ratio {:.2e})", tbb1 / single),
    ))
}

fn static_error() -> Check {
    let p = AdiabaticParams::reference();
    let v = static_error_infidelity(&p, 0.0015, TAU * 3.0, &IntegratorConfig::default())?;
    Ok((v < 1e-4, format!("preparation infidelity {v:.3e} (< 1e-4)")))
}

fn chirp_identity() -> Check {
    let p = AdiabaticParams::<f64>::reference();
    let (d0, td) = (p.detuning0, p.chirp_time);
    let g = |t: f64| lab_frame_chirp(d0, td, t).map(|x| x * t);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let t = rng.random_range(0.01 * td..0.99 * td);
        // Richardson-extrapolated central difference
        let h = 1e-3 * td;
        let d1 = (g(t + h)? - g(t - h)?) / (2.0 * h);
        let d2 = (g(t + h / 2.0)? - g(t - h / 2.0)?) / h;
        let derivative = (4.0 * d2 - d1) / 3.0;
        let exact = blackman_detuning(d0, td, t)?;
        worst = worst.max((derivative - exact).abs() / exact.abs().max(1e-3 * d0.abs()));
    }
    Ok((worst < 1e-6, format!("max relative error {worst:.2e} (< 1e-6)")))
}

fn inference() -> Check {
    let dark = named_state::<f64>(3, "D")?;
    let chis: Vec<f64> = (0..20).map(|i| PI * i as f64 / 20.0).collect();
    let p0 = chis.iter().map(|&c| fringe_prediction_state(&dark, c)).collect::<Result<Vec<_>>>()?;
    let exact = ml_fit_exact(&chis, &p0, 2)?;
    let dev = (exact.a0 - 0.5).abs().max((exact.a - 0.5).abs()).max((exact.phi0 - PI).abs());
    let fid_dev = (exact.fidelity_raw - 1.0).abs();

    let covered = (0..500u64)
        .into_par_iter()
        .map(|seed| {
            let m = MeasurementModel { seed, ..MeasurementModel::default() };
            let mut rng = m.rng(0);
            let points = chis
                .iter()
                .zip(&p0)
                .map(|(&chi, &p)| {
                    Ok(FringePoint { chi, k: sample_counts(detection_map(1.0 - p, &m)?, &m, &mut rng)?, n: m.shots })
                })
                .collect::<Result<Vec<_>>>()?;
            let fit = ml_fit_fringe(&FringeData { points }, &m)?;
            let Some(se) = fit.std_errors else { return Ok(false) };
            let dphi = (fit.phi0 - PI + PI).rem_euclid(TAU) - PI;
            Ok((fit.a0 - 0.5).abs() <= 3.0 * se.a0 && (fit.a - 0.5).abs() <= 3.0 * se.a && dphi.abs() <= 3.0 * se.phi0)
        })
        .collect::<Result<Vec<bool>>>()?
        .into_iter()
        .filter(|&ok| ok)
        .count();
    let coverage = covered as f64 / 500.0;
    Ok((
        dev < 1e-6 && fid_dev < 1e-6 && coverage >= 0.99,
        format!("exact fit deviation {dev:.2e}, |F_D - 1| {fid_dev:.2e}, 3σ coverage {covered}/500"),
    ))
}

fn closed_loop() -> Check {
    let cfg = ScenarioConfig::default();
    let (sigma, tuned) = tune_zeeman_sigma(Method::Adiabatic, &cfg, 1.4e-4)?;
    let noise = NoiseParams { zeeman_sigma: sigma, ..cfg.noise };
    let res = measure_fidelity_vs_n(Method::Adiabatic, &[8, 16, 32, 64], Some(&cfg.measurement(10)), &noise, &cfg)?;
    let z = (res.fit.epsilon - res.injected) / res.fit.sigma;
    Ok((
        z.abs() <= 3.0,
        format!(
            "injected {:.3e} (σ_Z/2π = {:.0} Hz, tuned {tuned:.3e}), recovered {:.3e} ± {:.1e}, z = {z:.2}",
            res.injected,
            sigma / TAU,
            res.fit.epsilon,
            res.fit.sigma
        ),
    ))
}

fn cycles_and_gap() -> Check {
    let cycles = rotation_cycle_check()?;
    let scan = eigen_scan_report(&ScenarioConfig::default())?;
    let gap_error = scan.outputs["gap_error"];
    Ok((
        cycles.passed() && gap_error <= 1e-10,
        format!("cycle deviation {:.2e}, gap error {gap_error:.2e} Ω", cycles.outputs["max_dev"]),
    ))
}

fn ramsey() -> Check {
    let cfg = ScenarioConfig::default();
    let phases: Vec<f64> = (0..20).map(|i| TAU * i as f64 / 20.0).collect();
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for n in [0, 4, 8, 16, 32] {
        let r = run_ramsey_dressed_qubit(n, &phases, None, &NoiseParams::default(), &cfg, 0)?;
        let deficit = (1.0 - r.contrast).abs();
        worst = worst.max(deficit);
        parts.push(format!("N={n}: {deficit:.1e}"));
    }
    Ok((worst <= 1e-6, format!("1 - C {} (<= 1e-6)", parts.join(", "))))
}

fn determinism() -> Check {
    let cfg = ScenarioConfig::default();
    let mut differing = Vec::new();
    for s in SCENARIOS {
        let a = serde_json::to_string(&run_scenario(s.name, &cfg, 13)?)?;
        let b = serde_json::to_string(&run_scenario(s.name, &cfg, 13)?)?;
        if a != b {
            differing.push(s.name);
        }
    }
    Ok((
        differing.is_empty(),
        if differing.is_empty() {
            format!("{} scenarios identical", SCENARIOS.len())
        } else {
            format!("differing: {}", differing.join(", "))
        },
    ))
}
