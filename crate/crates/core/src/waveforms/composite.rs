use crate::error::{Error, Result};
use crate::real::Real;

use super::schedule::{ControlSchedule, Controls, Segment};

/// Resonant rotation `R(θ, φ) = exp(-iθ(cos φ S_x + sin φ S_y))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation<T: Real> {
    pub angle: T,
    pub phase: T,
}

/// Resonant rotations stored in time order: `rotations[0]` is applied first.
///
/// Operator products read right-to-left, so `R(π/2,π/2)·R(π,φ₁)·R(2π,φ₂)·R(π,φ₁)`
/// is stored as `[(π,φ₁), (2π,φ₂), (π,φ₁), (π/2,π/2)]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CompositeSequence<T: Real> {
    pub rotations: Vec<Rotation<T>>,
}

impl<T: Real> CompositeSequence<T> {
    pub fn new(rotations: Vec<Rotation<T>>) -> Result<Self> {
        for (i, r) in rotations.iter().enumerate() {
            if !(r.angle >= T::zero()) {
                return Err(Error::param(format!("rotations[{i}].angle"), "must be >= 0"));
            }
        }
        Ok(Self { rotations })
    }

    /// Wimperis BB1 for a target rotation `(angle, phase)`: correction pulses
    /// `π(φ₁) 2π(3φ₁) π(φ₁)` with `φ₁ = phase + acos(-angle/4π)`, then the target.
    pub fn bb1(angle: T, phase: T) -> Result<Self> {
        let pi = T::pi();
        let phi1 = (-angle / (T::lit(4.0) * pi)).acos();
        let wrap = |x: T| {
            let two_pi = T::two_pi();
            x - two_pi * (x / two_pi).floor()
        };
        let p1 = wrap(phase + phi1);
        let p3 = wrap(phase + T::lit(3.0) * phi1);
        Self::new(vec![
            Rotation { angle: pi, phase: p1 },
            Rotation { angle: T::two_pi(), phase: p3 },
            Rotation { angle: pi, phase: p1 },
            Rotation { angle, phase },
        ])
    }

    /// BB1 for `R(π/2, π/2)`, the two-level equivalent of `|0> -> |D>`.
    pub fn tbb1() -> Self {
        Self::bb1(T::frac_pi_2(), T::frac_pi_2()).expect("valid BB1 angles")
    }

    /// Sequence implementing the inverse operation: reversed order, each phase advanced by π.
    pub fn inverse(&self) -> Self {
        let pi = T::pi();
        Self {
            rotations: self.rotations.iter().rev().map(|r| Rotation { angle: r.angle, phase: r.phase + pi }).collect(),
        }
    }
}

/// Resonant schedule for a composite sequence at per-field three-level Rabi frequency
/// `rabi0` (`Ω_1/2 = Ω0/√2`, pulse length `√2 θ/Ω0`, `χ = φ`, `δ = 0`).
///
/// With `protect`, the field stays on afterwards at `χ = 0` as an open-ended tail.
pub fn composite_method<T: Real>(seq: &CompositeSequence<T>, rabi0: T, protect: bool) -> Result<ControlSchedule<T>> {
    if !(rabi0 > T::zero()) {
        return Err(Error::param("Ω0", "must be > 0"));
    }
    let s2 = T::lit(2.0).sqrt();
    let rabi_half = rabi0 / s2;
    let segments = seq
        .rotations
        .iter()
        .map(|r| {
            Segment::square(s2 * r.angle / rabi0, Controls { rabi_half, phase: r.phase, detuning_half: T::zero() })
        })
        .collect();
    let tail = protect.then(|| Controls { rabi_half, phase: T::zero(), detuning_half: T::zero() });
    Ok(ControlSchedule::new(segments)?.with_tail(tail))
}

/// Single resonant pulse `R(angle, phase)`.
pub fn square_pulse<T: Real>(angle: T, phase: T, rabi0: T) -> Result<ControlSchedule<T>> {
    composite_method(&CompositeSequence::new(vec![Rotation { angle, phase }])?, rabi0, false)
}
