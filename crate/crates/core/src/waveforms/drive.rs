use std::fmt;
use std::sync::Arc;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg::{cabs, cr, CMatrix};
use crate::real::Real;
use crate::spin::{angular_momentum_ops, SpinOperators};

use super::schedule::{ControlSchedule, Controls};

/// Monotone map applied to the Rabi frequency before it reaches the system
/// (amplifier compression). Off unless injected.
pub type GainCurve<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

/// Departures from the SU(2)-symmetric drive: per-transition Rabi scale factors
/// (`d - 1` entries, transition `k` couples levels `k` and `k+1`) and per-level
/// energy offsets in rad/s.
#[derive(Debug, Clone, PartialEq)]
pub struct DrivePerturbation<T: Real> {
    pub rabi_scale: Vec<T>,
    pub level_shift: Vec<T>,
}

impl<T: Real> DrivePerturbation<T> {
    pub fn none(dim: usize) -> Self {
        Self { rabi_scale: vec![T::one(); dim - 1], level_shift: vec![T::zero(); dim] }
    }

    pub fn is_trivial(&self) -> bool {
        self.rabi_scale.iter().all(|&s| s == T::one()) && self.level_shift.iter().all(|&s| s == T::zero())
    }
}

/// Field on one adjacent-level transition, ladder convention: `H[k][k+1] = (rabi/2) e^{i phase}`,
/// `detuning = 2 (H[k+1][k+1] - H[k][k])`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition<T: Real> {
    pub lower: usize,
    pub upper: usize,
    pub rabi: T,
    pub phase: T,
    pub detuning: T,
}

/// A two-level schedule lifted to `d` levels, `H(t) = Ω_1/2 cos χ J_x + Ω_1/2 sin χ J_y + δ_1/2 J_z`,
/// optionally perturbed.
#[derive(Clone)]
pub struct MultiLevelDrive<T: Real> {
    ops: SpinOperators<T>,
    schedule: ControlSchedule<T>,
    perturbation: Option<DrivePerturbation<T>>,
    gain: Option<GainCurve<T>>,
}

impl<T: Real> fmt::Debug for MultiLevelDrive<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MultiLevelDrive")
            .field("dim", &self.ops.dim)
            .field("schedule", &self.schedule)
            .field("perturbation", &self.perturbation)
            .field("gain", &self.gain.as_ref().map(|_| "<fn>"))
            .finish()
    }
}

/// Lift a two-level schedule to `d` levels with the same control vector.
pub fn lift_schedule<T: Real>(schedule: &ControlSchedule<T>, d: usize) -> Result<MultiLevelDrive<T>> {
    Ok(MultiLevelDrive { ops: angular_momentum_ops(d)?, schedule: schedule.clone(), perturbation: None, gain: None })
}

impl<T: Real> MultiLevelDrive<T> {
    pub fn dim(&self) -> usize {
        self.ops.dim
    }

    pub fn ops(&self) -> &SpinOperators<T> {
        &self.ops
    }

    pub fn schedule(&self) -> &ControlSchedule<T> {
        &self.schedule
    }

    pub fn perturbation(&self) -> Option<&DrivePerturbation<T>> {
        self.perturbation.as_ref()
    }

    /// True when `H(t)` is exactly `Λ(t)·J` (no perturbation).
    pub fn is_su2(&self) -> bool {
        self.perturbation.as_ref().is_none_or(DrivePerturbation::is_trivial)
    }

    pub fn with_perturbation(mut self, p: DrivePerturbation<T>) -> Result<Self> {
        let d = self.dim();
        if p.rabi_scale.len() != d - 1 {
            return Err(Error::DimensionMismatch { left: p.rabi_scale.len(), right: d - 1 });
        }
        if p.level_shift.len() != d {
            return Err(Error::DimensionMismatch { left: p.level_shift.len(), right: d });
        }
        self.perturbation = Some(p);
        Ok(self)
    }

    pub fn with_gain_curve(mut self, gain: GainCurve<T>) -> Self {
        self.gain = Some(gain);
        self
    }

    /// Same drive, different schedule.
    pub fn with_schedule(&self, schedule: ControlSchedule<T>) -> Self {
        Self { schedule, ..self.clone() }
    }

    fn apply_gain(&self, mut c: Controls<T>) -> Controls<T> {
        if let Some(g) = &self.gain {
            let s2 = T::lit(2.0).sqrt();
            c.rabi_half = g(c.rabi_half * s2) / s2;
        }
        c
    }

    pub fn controls_at(&self, t: T) -> Result<Controls<T>> {
        Ok(self.apply_gain(self.schedule.sample(t)?))
    }

    pub(crate) fn controls_in_segment(&self, segment: usize, tau: T) -> Controls<T> {
        self.apply_gain(self.schedule.segments[segment].sample(tau))
    }

    pub(crate) fn tail_controls(&self) -> Option<Controls<T>> {
        self.schedule.tail.map(|c| self.apply_gain(c))
    }

    /// Rotating-frame Hamiltonian for a given control vector.
    pub fn hamiltonian_for(&self, controls: &Controls<T>) -> CMatrix<T> {
        let mut h = self.ops.dot(controls.lambda());
        if let Some(p) = &self.perturbation {
            for (k, &s) in p.rabi_scale.iter().enumerate() {
                h[(k, k + 1)] *= cr(s);
                h[(k + 1, k)] *= cr(s);
            }
            for (k, &shift) in p.level_shift.iter().enumerate() {
                h[(k, k)] += cr(shift);
            }
        }
        h
    }

    pub fn hamiltonian(&self, t: T) -> Result<CMatrix<T>> {
        Ok(self.hamiltonian_for(&self.controls_at(t)?))
    }

    /// Per-transition fields in the ladder convention.
    pub fn transitions(&self, t: T) -> Result<Vec<Transition<T>>> {
        let h = self.hamiltonian(t)?;
        let two = T::lit(2.0);
        Ok((0..self.dim() - 1)
            .map(|k| {
                let z = h[(k, k + 1)];
                Transition {
                    lower: k,
                    upper: k + 1,
                    rabi: two * cabs(z),
                    phase: z.im.atan2(z.re),
                    detuning: two * (h[(k + 1, k + 1)].re - h[(k, k)].re),
                }
            })
            .collect())
    }

    /// The two fields of the `d = 3` V-system referenced to the common level `|0>`:
    /// `(to |-1>, to |+1>)`, each with `rabi = 2|H[m][0]|`, `phase = arg H[m][0]`,
    /// `detuning = 2(H[m][m] - H[0][0])`. For an unperturbed drive these are
    /// `(Ω, +χ, -δ)` and `(Ω, -χ, +δ)` with `Ω = √2 Ω_1/2`, `δ = 2 δ_1/2`.
    pub fn v_system_fields(&self, t: T) -> Result<[Transition<T>; 2]> {
        if self.dim() != 3 {
            return Err(Error::InvalidDimension { dim: self.dim(), reason: "V-system needs d = 3".into() });
        }
        let h = self.hamiltonian(t)?;
        let two = T::lit(2.0);
        let field = |m: usize| {
            let z: Complex<T> = h[(m, 1)];
            Transition {
                lower: 1,
                upper: m,
                rabi: two * cabs(z),
                phase: z.im.atan2(z.re),
                detuning: two * (h[(m, m)].re - h[(1, 1)].re),
            }
        };
        Ok([field(0), field(2)])
    }
}
