use std::f64::consts::TAU;

use multilevel_control::dynamics::uniform_times;
use multilevel_control::linalg::max_abs;
use multilevel_control::waveforms::{
    adiabatic_method, blackman_detuning, composite_method, lab_frame_chirp, lift_schedule, AdiabaticParams,
    CompositeSequence, ControlSchedule, Direction, Rotation,
};
use num_complex::Complex64;
use proptest::prelude::*;

fn chirp_derivative(d0: f64, td: f64, t: f64) -> f64 {
    let g = |t: f64| lab_frame_chirp(d0, td, t).unwrap() * t;
    let h = 1e-3 * td;
    let d1 = (g(t + h) - g(t - h)) / (2.0 * h);
    let d2 = (g(t + h / 2.0) - g(t - h / 2.0)) / h;
    (4.0 * d2 - d1) / 3.0
}

fn sequence() -> impl Strategy<Value = CompositeSequence<f64>> {
    prop::collection::vec((0.01..7.0f64, 0.0..TAU), 1..6).prop_map(|v| {
        CompositeSequence::new(v.into_iter().map(|(angle, phase)| Rotation { angle, phase }).collect()).unwrap()
    })
}

proptest! {
    #[test]
    fn lab_frame_chirp_differentiates_to_the_detuning(d0 in 1e3f64..1e6, td in 10e-6f64..1e-3, x in 0.01f64..0.99) {
        let t = x * td;
        let exact = blackman_detuning(d0, td, t).unwrap();
        let rel = (chirp_derivative(d0, td, t) - exact).abs() / exact.abs().max(1e-3 * d0);
        prop_assert!(rel < 1e-6, "relative error {rel}");
    }

    #[test]
    fn two_level_lift_is_the_rotating_frame_hamiltonian(seq in sequence(), rabi0 in 1e4f64..1e6, x in 0.0f64..1.0) {
        let s = composite_method(&seq, rabi0, false).unwrap();
        let drive = lift_schedule(&s, 2).unwrap();
        let t = x * s.total_duration();
        let c = s.sample(t).unwrap();
        let (om, chi, de) = (c.rabi_half, c.phase, c.detuning_half);
        let expected = multilevel_control::linalg::CMatrix::from_row_slice(2, 2, &[
            Complex64::new(-de / 2.0, 0.0),
            Complex64::from_polar(om / 2.0, chi),
            Complex64::from_polar(om / 2.0, -chi),
            Complex64::new(de / 2.0, 0.0),
        ]);
        prop_assert!(max_abs(&(drive.hamiltonian(t).unwrap() - expected)) <= 1e-12 * rabi0);
    }

    #[test]
    fn doubling_the_rabi_frequency_halves_durations(seq in sequence(), rabi0 in 1e4f64..1e6) {
        let slow = composite_method(&seq, rabi0, false).unwrap();
        let fast = composite_method(&seq, 2.0 * rabi0, false).unwrap();
        for (a, b) in slow.segments.iter().zip(&fast.segments) {
            prop_assert_eq!(a.duration, 2.0 * b.duration);
        }
    }

    #[test]
    fn round_trip_without_hold_is_time_symmetric(x in 0.0f64..1.0, rabi_khz in 10.0f64..80.0, ramp in 0.3f64..1.0) {
        let p = AdiabaticParams { rabi0: TAU * rabi_khz * 1e3, ramp_time: ramp * 300e-6, ..AdiabaticParams::reference() }
            .with_hold(0.0)
            .with_direction(Direction::RoundTrip);
        let s = adiabatic_method(&p).unwrap();
        let total = s.total_duration();
        let t = x * total;
        let a = s.sample(t).unwrap().lambda();
        let b = s.sample(total - t).unwrap().lambda();
        for k in 0..3 {
            prop_assert!((a[k] - b[k]).abs() <= 1e-12 * p.detuning0);
        }
    }

    #[test]
    fn schedule_json_round_trip(seq in sequence(), rabi0 in 1e4f64..1e6, protect: bool) {
        let s = composite_method(&seq, rabi0, protect).unwrap();
        let p = AdiabaticParams::reference();
        let full = adiabatic_method(&p.with_direction(Direction::Forward)).unwrap().then(&s);
        let back = ControlSchedule::from_json(&full.to_json().unwrap()).unwrap();
        prop_assert_eq!(back.segments.len(), full.segments.len());
        prop_assert_eq!(back.tail.is_some(), full.tail.is_some());
        // stored in Hz, so frequencies come back within a few ulps of the rad/s values
        let scale = rabi0.max(p.detuning0);
        for t in uniform_times(full.total_duration(), 200) {
            let (a, b) = (full.sample(t).unwrap().lambda(), back.sample(t).unwrap().lambda());
            for k in 0..3 {
                prop_assert!((a[k] - b[k]).abs() <= 1e-14 * scale, "{} vs {}", a[k], b[k]);
            }
        }
    }
}
