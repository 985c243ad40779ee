//! Blackman-window amplitude ramp and detuning chirp, and the lab-frame
//! detuning that realizes a given instantaneous detuning.

use crate::error::{Error, Result};
use crate::real::Real;

fn window_terms<T: Real>(t: T, span: T) -> (T, T) {
    let x = T::pi() * t / span;
    (x.cos(), (x + x).cos())
}

/// Instantaneous detuning of a Blackman chirp from `detuning0` at `t = 0` to zero at `t = chirp_time`.
pub fn blackman_detuning<T: Real>(detuning0: T, chirp_time: T, t: T) -> Result<T> {
    if t < T::zero() || t > chirp_time {
        return Err(Error::Domain { what: "t", value: t.f64(), domain: format!("[0, {}]", chirp_time.f64()) });
    }
    Ok(blackman_detuning_unchecked(detuning0, chirp_time, t))
}

pub(crate) fn blackman_detuning_unchecked<T: Real>(detuning0: T, chirp_time: T, t: T) -> T {
    let (c1, c2) = window_terms(t, chirp_time);
    detuning0 / T::lit(50.0) * (T::lit(21.0) + T::lit(25.0) * c1 + T::lit(4.0) * c2)
}

/// Blackman amplitude ramp from zero to `rabi0` over `ramp_time`, constant afterwards.
pub fn blackman_rabi<T: Real>(rabi0: T, ramp_time: T, t: T) -> Result<T> {
    if t < T::zero() {
        return Err(Error::Domain { what: "t", value: t.f64(), domain: "[0, inf)".into() });
    }
    Ok(blackman_rabi_unchecked(rabi0, ramp_time, t))
}

pub(crate) fn blackman_rabi_unchecked<T: Real>(rabi0: T, ramp_time: T, t: T) -> T {
    if t >= ramp_time {
        return rabi0;
    }
    let (c1, c2) = window_terms(t, ramp_time);
    rabi0 / T::lit(50.0) * (T::lit(29.0) - T::lit(25.0) * c1 - T::lit(4.0) * c2)
}

/// Lab-frame detuning `Δ(t) = (1/t) ∫₀ᵗ δ(τ) dτ` for the Blackman chirp, defined for `0 < t <= chirp_time`.
///
/// The `t → 0⁺` limit is [`lab_frame_chirp_at_zero`].
pub fn lab_frame_chirp<T: Real>(detuning0: T, chirp_time: T, t: T) -> Result<T> {
    if t <= T::zero() || t > chirp_time {
        return Err(Error::Domain { what: "t", value: t.f64(), domain: format!("(0, {}]", chirp_time.f64()) });
    }
    let x = T::pi() * t / chirp_time;
    let bracket = T::lit(21.0) * t + chirp_time / T::pi() * (T::lit(25.0) * x.sin() + T::lit(2.0) * (x + x).sin());
    Ok(detuning0 / (T::lit(50.0) * t) * bracket)
}

/// `lim_{t→0⁺} Δ(t) = δ(0) = detuning0`.
pub fn lab_frame_chirp_at_zero<T: Real>(detuning0: T) -> T {
    detuning0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn detuning_endpoints() {
        assert_eq!(blackman_detuning(3.0, 2.0, 0.0).unwrap(), 3.0);
        assert!(blackman_detuning(3.0f64, 2.0, 2.0).unwrap().abs() < 1e-15);
        // cos terms (0, -1): (21 - 4)/50 = 0.34
        assert!((blackman_detuning(1.0f64, 2.0, 1.0).unwrap() - 0.34).abs() < 1e-15);
        assert!(matches!(blackman_detuning(1.0, 2.0, 2.5), Err(Error::Domain { .. })));
        assert!(matches!(blackman_detuning(1.0, 2.0, -0.1), Err(Error::Domain { .. })));
    }

    #[test]
    fn rabi_endpoints() {
        assert!(blackman_rabi(5.0f64, 2.0, 0.0).unwrap().abs() < 1e-15);
        assert_eq!(blackman_rabi(5.0, 2.0, 2.0).unwrap(), 5.0);
        // (29 + 4)/50 = 0.66
        assert!((blackman_rabi(1.0f64, 2.0, 1.0).unwrap() - 0.66).abs() < 1e-15);
        assert_eq!(blackman_rabi(5.0, 2.0, 7.0).unwrap(), 5.0);
        assert!(matches!(blackman_rabi(1.0, 2.0, -1e-9), Err(Error::Domain { .. })));
    }

    #[test]
    fn lab_frame_values() {
        let d0 = 2.0 * std::f64::consts::PI * 60e3;
        let td = 300e-6;
        let end = lab_frame_chirp(d0, td, td).unwrap();
        assert!((end - 21.0 * d0 / 50.0).abs() < 1e-9 * d0);
        let near_zero = lab_frame_chirp(d0, td, td * 1e-7).unwrap();
        assert!((near_zero - lab_frame_chirp_at_zero(d0)).abs() < 1e-9 * d0);
        assert!(matches!(lab_frame_chirp(d0, td, 0.0), Err(Error::Domain { .. })));
    }

    #[test]
    fn lab_frame_derivative_identity() {
        let d0 = 1.7e5;
        let td = 250e-6;
        let t = td / 3.0;
        let h = 1e-4 * td;
        let phase = |t: f64| lab_frame_chirp(d0, td, t).unwrap() * t;
        let fd = (phase(t + h) - phase(t - h)) / (2.0 * h);
        let exact = blackman_detuning(d0, td, t).unwrap();
        assert!(((fd - exact) / exact).abs() < 1e-8);
    }
}
