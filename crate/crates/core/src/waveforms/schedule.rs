use crate::error::{Error, Result};
use crate::real::Real;

use super::blackman::{blackman_detuning_unchecked, blackman_rabi_unchecked};

/// Two-level control vector at one instant: `Ω_1/2` (rad/s), `χ` (rad), `δ_1/2` (rad/s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Controls<T: Real> {
    pub rabi_half: T,
    pub phase: T,
    pub detuning_half: T,
}

impl<T: Real> Controls<T> {
    pub fn zero() -> Self {
        Self { rabi_half: T::zero(), phase: T::zero(), detuning_half: T::zero() }
    }

    /// `Λ` such that `H = Λ · J`.
    pub fn lambda(&self) -> [T; 3] {
        [self.rabi_half * self.phase.cos(), self.rabi_half * self.phase.sin(), self.detuning_half]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SegmentKind<T: Real> {
    /// Constant resonant or detuned pulse.
    Square(Controls<T>),
    /// Constant resonant field left on (dressing/protection), `δ = 0`.
    Hold { rabi_half: T, phase: T },
    /// Blackman amplitude ramp plus Blackman detuning chirp, `χ = 0`. The segment duration
    /// is the chirp time. `peak_rabi` and `initial_detuning` are the three-level per-field
    /// values `Ω0`, `δ0`; `reversed` plays the sweep backwards in time.
    BlackmanSweep { peak_rabi: T, initial_detuning: T, ramp_time: T, reversed: bool },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segment<T: Real> {
    pub duration: T,
    pub kind: SegmentKind<T>,
}

impl<T: Real> Segment<T> {
    pub fn square(duration: T, controls: Controls<T>) -> Self {
        Self { duration, kind: SegmentKind::Square(controls) }
    }

    pub fn hold(duration: T, rabi_half: T, phase: T) -> Self {
        Self { duration, kind: SegmentKind::Hold { rabi_half, phase } }
    }

    pub fn is_constant(&self) -> bool {
        !matches!(self.kind, SegmentKind::BlackmanSweep { .. })
    }

    /// Controls at local time `tau`, clamped into `[0, duration]`.
    pub fn sample(&self, tau: T) -> Controls<T> {
        match self.kind {
            SegmentKind::Square(c) => c,
            SegmentKind::Hold { rabi_half, phase } => Controls { rabi_half, phase, detuning_half: T::zero() },
            SegmentKind::BlackmanSweep { peak_rabi, initial_detuning, ramp_time, reversed } => {
                let tau = tau.max(T::zero()).min(self.duration);
                let t = if reversed { self.duration - tau } else { tau };
                let rabi = blackman_rabi_unchecked(peak_rabi, ramp_time, t);
                let detuning = blackman_detuning_unchecked(initial_detuning, self.duration, t);
                Controls {
                    rabi_half: rabi / T::lit(2.0).sqrt(),
                    phase: T::zero(),
                    detuning_half: detuning / T::lit(2.0),
                }
            }
        }
    }

    /// Largest three-level Rabi frequency and `|δ|` reached in the segment.
    pub fn peak_rates(&self) -> (T, T) {
        let s2 = T::lit(2.0).sqrt();
        match self.kind {
            SegmentKind::Square(c) => (c.rabi_half.abs() * s2, c.detuning_half.abs() * T::lit(2.0)),
            SegmentKind::Hold { rabi_half, .. } => (rabi_half.abs() * s2, T::zero()),
            SegmentKind::BlackmanSweep { peak_rabi, initial_detuning, .. } => (peak_rabi.abs(), initial_detuning.abs()),
        }
    }

    fn time_mirrored(&self) -> Self {
        let kind = match self.kind.clone() {
            SegmentKind::BlackmanSweep { peak_rabi, initial_detuning, ramp_time, reversed } => {
                SegmentKind::BlackmanSweep { peak_rabi, initial_detuning, ramp_time, reversed: !reversed }
            }
            other => other,
        };
        Self { duration: self.duration, kind }
    }

    fn map_rabi(&self, f: &impl Fn(T) -> T) -> Self {
        let kind = match self.kind.clone() {
            SegmentKind::Square(c) => SegmentKind::Square(Controls { rabi_half: f(c.rabi_half), ..c }),
            SegmentKind::Hold { rabi_half, phase } => SegmentKind::Hold { rabi_half: f(rabi_half), phase },
            SegmentKind::BlackmanSweep { peak_rabi, initial_detuning, ramp_time, reversed } => {
                SegmentKind::BlackmanSweep { peak_rabi: f(peak_rabi), initial_detuning, ramp_time, reversed }
            }
        };
        Self { duration: self.duration, kind }
    }
}

/// Piecewise two-level control record, segments in time order (first applied first).
///
/// `tail` is an optional open-ended field that stays on after the last segment, such as
/// the protection field that keeps `|D>` dressed after a composite sequence.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ControlSchedule<T: Real> {
    pub segments: Vec<Segment<T>>,
    pub tail: Option<Controls<T>>,
}

impl<T: Real> ControlSchedule<T> {
    pub fn new(segments: Vec<Segment<T>>) -> Result<Self> {
        for (i, s) in segments.iter().enumerate() {
            if !(s.duration >= T::zero()) {
                return Err(Error::param(format!("segments[{i}].duration"), "must be >= 0"));
            }
        }
        Ok(Self { segments, tail: None })
    }

    pub fn empty() -> Self {
        Self { segments: Vec::new(), tail: None }
    }

    pub fn with_tail(mut self, tail: Option<Controls<T>>) -> Self {
        self.tail = tail;
        self
    }

    pub fn total_duration(&self) -> T {
        self.segments.iter().fold(T::zero(), |acc, s| acc + s.duration)
    }

    /// Segment start times followed by the total duration.
    pub fn boundaries(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.segments.len() + 1);
        let mut t = T::zero();
        out.push(t);
        for s in &self.segments {
            t += s.duration;
            out.push(t);
        }
        out
    }

    /// Controls at absolute time `t`. Inside the schedule a boundary instant belongs to the
    /// later segment; past the end the tail applies if present.
    pub fn sample(&self, t: T) -> Result<Controls<T>> {
        let total = self.total_duration();
        if t < T::zero() || (t > total && self.tail.is_none()) {
            return Err(Error::Domain { what: "t", value: t.f64(), domain: format!("[0, {}]", total.f64()) });
        }
        if t > total {
            return Ok(self.tail.expect("checked above"));
        }
        let mut start = T::zero();
        for (i, s) in self.segments.iter().enumerate() {
            let end = start + s.duration;
            if t < end || i + 1 == self.segments.len() {
                return Ok(s.sample(t - start));
            }
            start = end;
        }
        Ok(self.tail.unwrap_or_else(Controls::zero))
    }

    pub fn peak_rates(&self) -> (T, T) {
        let mut rabi = T::zero();
        let mut detuning = T::zero();
        for s in &self.segments {
            let (r, d) = s.peak_rates();
            rabi = rabi.max(r);
            detuning = detuning.max(d);
        }
        if let Some(t) = self.tail {
            rabi = rabi.max(t.rabi_half.abs() * T::lit(2.0).sqrt());
            detuning = detuning.max(t.detuning_half.abs() * T::lit(2.0));
        }
        (rabi, detuning)
    }

    /// `self` followed by `next`; the tail of `next` is kept.
    pub fn then(&self, next: &Self) -> Self {
        let mut segments = self.segments.clone();
        segments.extend(next.segments.iter().cloned());
        Self { segments, tail: next.tail }
    }

    /// Time mirror: segments in reverse order, sweeps played backwards.
    pub fn time_reversed(&self) -> Self {
        Self { segments: self.segments.iter().rev().map(Segment::time_mirrored).collect(), tail: self.tail }
    }

    /// Every segment duration multiplied by `factor` (pulse-area scaling for constant segments).
    pub fn scale_durations(&self, factor: T) -> Self {
        Self {
            segments: self
                .segments
                .iter()
                .map(|s| Segment { duration: s.duration * factor, kind: s.kind.clone() })
                .collect(),
            tail: self.tail,
        }
    }

    /// Every Rabi frequency (segments and tail) multiplied by `factor`.
    pub fn scale_rabi(&self, factor: T) -> Self {
        let f = |r: T| r * factor;
        Self {
            segments: self.segments.iter().map(|s| s.map_rabi(&f)).collect(),
            tail: self.tail.map(|c| Controls { rabi_half: c.rabi_half * factor, ..c }),
        }
    }
}
