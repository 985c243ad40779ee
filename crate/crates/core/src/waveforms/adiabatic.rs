use crate::error::{Error, Result};
use crate::real::Real;

use super::schedule::{ControlSchedule, Segment, SegmentKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Sweep `|0> -> |D>`, then hold the dressing field for `hold_time`.
    Forward,
    /// Time mirror of `Forward`: hold, then sweep `|D> -> |0>`.
    Reverse,
    /// Sweep, hold, reverse sweep.
    RoundTrip,
}

/// Blackman adiabatic-transfer parameters. Frequencies in rad/s, times in seconds;
/// `rabi0` and `detuning0` are the three-level per-field values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdiabaticParams<T: Real> {
    pub rabi0: T,
    pub detuning0: T,
    pub ramp_time: T,
    pub chirp_time: T,
    pub hold_time: T,
    pub direction: Direction,
}

impl AdiabaticParams<f64> {
    /// `Ω0/2π = 40 kHz`, `δ0/2π = 60 kHz`, `t_Ω = 200 µs`, `t_δ = 300 µs`, `t_h = 400 µs`, round trip.
    pub fn reference() -> Self {
        let tau = std::f64::consts::TAU;
        Self {
            rabi0: tau * 40e3,
            detuning0: tau * 60e3,
            ramp_time: 200e-6,
            chirp_time: 300e-6,
            hold_time: 400e-6,
            direction: Direction::RoundTrip,
        }
    }
}

impl<T: Real> AdiabaticParams<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.rabi0 > T::zero()) {
            return Err(Error::param("Ω0", "must be > 0"));
        }
        if !(self.detuning0 > T::zero()) {
            return Err(Error::param("δ0", "must be > 0"));
        }
        if !(self.ramp_time > T::zero()) {
            return Err(Error::param("t_Ω", "must be > 0"));
        }
        if !(self.chirp_time >= self.ramp_time) {
            return Err(Error::param("t_δ", "must be >= t_Ω"));
        }
        if !(self.hold_time >= T::zero()) {
            return Err(Error::param("t_h", "must be >= 0"));
        }
        Ok(())
    }

    pub fn with_direction(self, direction: Direction) -> Self {
        Self { direction, ..self }
    }

    pub fn with_hold(self, hold_time: T) -> Self {
        Self { hold_time, ..self }
    }
}

/// Amplitude-shaped, frequency-chirped transfer schedule.
pub fn adiabatic_method<T: Real>(p: &AdiabaticParams<T>) -> Result<ControlSchedule<T>> {
    p.validate()?;
    let sweep = |reversed| Segment {
        duration: p.chirp_time,
        kind: SegmentKind::BlackmanSweep {
            peak_rabi: p.rabi0,
            initial_detuning: p.detuning0,
            ramp_time: p.ramp_time,
            reversed,
        },
    };
    let hold = Segment::hold(p.hold_time, p.rabi0 / T::lit(2.0).sqrt(), T::zero());
    let with_hold = p.hold_time > T::zero();
    let mut segments = Vec::new();
    match p.direction {
        Direction::Forward => {
            segments.push(sweep(false));
            if with_hold {
                segments.push(hold);
            }
        }
        Direction::Reverse => {
            if with_hold {
                segments.push(hold);
            }
            segments.push(sweep(true));
        }
        Direction::RoundTrip => {
            segments.push(sweep(false));
            if with_hold {
                segments.push(hold);
            }
            segments.push(sweep(true));
        }
    }
    ControlSchedule::new(segments)
}
