use std::f64::consts::{PI, TAU};

use multilevel_control::acceptance::random_schedule;
use multilevel_control::dynamics::{eigen_scan, propagate, propagator, uniform_times, IntegratorConfig};
use multilevel_control::linalg::{max_abs, CMatrix};
use multilevel_control::spin::{lift_unitary, StateVector};
use multilevel_control::waveforms::{
    adiabatic_method, lift_schedule, AdiabaticParams, ControlSchedule, Controls, Direction, Segment, SegmentKind,
};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const KHZ: f64 = TAU * 1e3;

fn square_schedule(max_segments: usize) -> impl Strategy<Value = ControlSchedule<f64>> {
    prop::collection::vec((1e-6..30e-6f64, 0.0..100.0 * KHZ, 0.0..TAU, -100.0 * KHZ..100.0 * KHZ), 1..=max_segments)
        .prop_map(|v| {
            ControlSchedule::new(
                v.into_iter()
                    .map(|(duration, rabi_half, phase, detuning_half)| {
                        Segment::square(duration, Controls { rabi_half, phase, detuning_half })
                    })
                    .collect(),
            )
            .unwrap()
        })
}

/// Same schedule with every segment's phase set to zero (real symmetric generators).
fn real_schedule(seed: u64) -> ControlSchedule<f64> {
    let mut s = random_schedule(&mut ChaCha8Rng::seed_from_u64(seed));
    for seg in &mut s.segments {
        match &mut seg.kind {
            SegmentKind::Square(c) => c.phase = 0.0,
            SegmentKind::Hold { phase, .. } => *phase = 0.0,
            SegmentKind::BlackmanSweep { .. } => {}
        }
    }
    s
}

fn random_state(d: usize) -> impl Strategy<Value = StateVector<f64>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), d).prop_filter_map("non-zero", move |v| {
        StateVector::normalized(nalgebra::DVector::from_iterator(d, v.into_iter().map(|(r, i)| Complex64::new(r, i))))
            .ok()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn majorana_equivalence_for_square_schedules(s in square_schedule(8), d in 2usize..=5) {
        let cfg = IntegratorConfig::default();
        let (a, b) = propagator(&lift_schedule(&s, 2).unwrap(), &cfg).unwrap().su2_pair().unwrap();
        let ud = propagator(&lift_schedule(&s, d).unwrap(), &cfg).unwrap();
        prop_assert!(ud.phase_distance(&lift_unitary(a, b, d).unwrap()) < 1e-8);
    }

    #[test]
    fn majorana_equivalence_with_sweeps(seed in 0u64..10_000, d in 3usize..=5) {
        let s = random_schedule(&mut ChaCha8Rng::seed_from_u64(seed));
        let cfg = IntegratorConfig::default();
        let (a, b) = propagator(&lift_schedule(&s, 2).unwrap(), &cfg).unwrap().su2_pair().unwrap();
        let ud = propagator(&lift_schedule(&s, d).unwrap(), &cfg).unwrap();
        prop_assert!(ud.phase_distance(&lift_unitary(a, b, d).unwrap()) < 1e-8);
    }

    #[test]
    fn trajectories_conserve_norm(seed in 0u64..10_000, psi in random_state(3)) {
        let s = random_schedule(&mut ChaCha8Rng::seed_from_u64(seed));
        let tr = propagate(&lift_schedule(&s, 3).unwrap(), &psi, &IntegratorConfig::default(), &uniform_times(s.total_duration(), 40)).unwrap();
        for state in &tr.states {
            prop_assert!((state.amps().norm() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn time_reversed_real_schedule_gives_the_transpose(seed in 0u64..10_000, d in 2usize..=4) {
        let s = real_schedule(seed);
        let cfg = IntegratorConfig::default();
        let fwd = propagator(&lift_schedule(&s, d).unwrap(), &cfg).unwrap();
        let rev = propagator(&lift_schedule(&s.time_reversed(), d).unwrap(), &cfg).unwrap();
        prop_assert!(max_abs(&(rev.matrix() - fwd.matrix().transpose())) < 1e-8);
    }

    #[test]
    fn negated_controls_in_reverse_undo_the_schedule(s in square_schedule(6), d in 2usize..=4) {
        let inverse = ControlSchedule::new(
            s.segments.iter().rev().map(|seg| match seg.kind {
                SegmentKind::Square(c) => Segment::square(seg.duration, Controls { rabi_half: c.rabi_half, phase: c.phase + PI, detuning_half: -c.detuning_half }),
                _ => unreachable!(),
            }).collect(),
        ).unwrap();
        let cfg = IntegratorConfig::default();
        let u = propagator(&lift_schedule(&s, d).unwrap(), &cfg).unwrap();
        let v = propagator(&lift_schedule(&inverse, d).unwrap(), &cfg).unwrap();
        prop_assert!(max_abs(&(v.matrix() * u.matrix() - CMatrix::<f64>::identity(d, d))) < 1e-8);
    }
}

#[test]
fn adiabatic_round_trip_legs_are_transposes() {
    let p = AdiabaticParams::reference().with_hold(0.0);
    let cfg = IntegratorConfig::default();
    let fwd =
        propagator(&lift_schedule(&adiabatic_method(&p.with_direction(Direction::Forward)).unwrap(), 3).unwrap(), &cfg)
            .unwrap();
    let rev =
        propagator(&lift_schedule(&adiabatic_method(&p.with_direction(Direction::Reverse)).unwrap(), 3).unwrap(), &cfg)
            .unwrap();
    assert!(max_abs(&(rev.matrix() - fwd.matrix().transpose())) < 1e-8);
    // the product returns |0> to itself up to non-adiabatic leakage, but is not the identity:
    // the other basis states pick up dynamic phases
    let product = rev.matrix() * fwd.matrix();
    let leakage = 1.0 - product[(1, 1)].norm_sqr();
    assert!(leakage > 0.0 && leakage < 1e-4, "{leakage}");
    assert!(max_abs(&(product - CMatrix::<f64>::identity(3, 3))) > 1e-2);
}

#[test]
fn step_halving_changes_amplitudes_below_tolerance() {
    let p = AdiabaticParams::reference();
    let drive = lift_schedule(&adiabatic_method(&p).unwrap(), 3).unwrap();
    let coarse = IntegratorConfig::default();
    let default_step = 0.05 / (p.rabi0.max(p.detuning0));
    let fine = IntegratorConfig { max_step: Some(default_step / 2.0), ..coarse };
    let a = propagator(&drive, &coarse).unwrap();
    let b = propagator(&drive, &fine).unwrap();
    assert!(max_abs(&(a.matrix() - b.matrix())) < 1e-9);
}

#[test]
fn eigenvectors_are_continuous_along_the_scan() {
    let grid: Vec<f64> = (-400..=400).map(|i| i as f64 / 100.0).collect();
    let scan = eigen_scan(TAU * 40e3, &grid, 2).unwrap();
    for w in scan.windows(2) {
        for k in 0..2 {
            let overlap = w[0].vectors.column(k).dot(&w[1].vectors.column(k)).abs();
            assert!(overlap > 0.99, "at {}: {overlap}", w[1].delta_over_rabi);
        }
    }
}
