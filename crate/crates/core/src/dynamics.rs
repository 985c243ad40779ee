//! Time evolution under lifted drives.
//!
//! Each step applies an exact unitary `exp(-iG)`, where `G` is either the fourth-order
//! Magnus generator built from two Gauss–Legendre samples of `H` or the midpoint
//! sample times the step. Segments with constant controls are exponentiated in one
//! piece. Step boundaries always fall on segment boundaries and sample times, and a
//! run is accepted only once halving the step changes no sampled amplitude by more
//! than the tolerance.

use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg::{commutator, cr, expm_minus_i, hermitian_eigen, max_abs, CMatrix};
use crate::real::Real;
use crate::spin::{angular_momentum_ops, StateVector, Unitary};
use crate::waveforms::{Controls, MultiLevelDrive};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepMethod {
    Magnus4,
    Midpoint,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig<T: Real> {
    /// Largest step inside a time-dependent segment. `None` picks
    /// `0.05 / max(Ω, |δ|)` from the drive's peak rates.
    pub max_step: Option<T>,
    /// Largest change of any sampled amplitude allowed between a run and its halved-step rerun.
    pub tolerance: T,
    pub max_halvings: u32,
    pub method: StepMethod,
}

impl<T: Real> Default for IntegratorConfig<T> {
    fn default() -> Self {
        Self {
            max_step: None,
            tolerance: T::lit(if T::NORM_TOL < 1e-6 { 1e-9 } else { 1e-4 }),
            max_halvings: 8,
            method: StepMethod::Magnus4,
        }
    }
}

impl<T: Real> IntegratorConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if let Some(h) = self.max_step {
            if !(h > T::zero()) {
                return Err(Error::param("max_step", "must be > 0"));
            }
        }
        if !(self.tolerance > T::zero()) {
            return Err(Error::param("tolerance", "must be > 0"));
        }
        Ok(())
    }

    fn step_for(&self, drive: &MultiLevelDrive<T>) -> T {
        if let Some(h) = self.max_step {
            return h;
        }
        let (rabi, detuning) = drive.schedule().peak_rates();
        let shift = drive
            .perturbation()
            .map(|p| p.level_shift.iter().fold(T::zero(), |m, s| m.max(s.abs())))
            .unwrap_or_else(T::zero);
        let scale = drive
            .perturbation()
            .map(|p| p.rabi_scale.iter().fold(T::one(), |m, s| m.max(s.abs())))
            .unwrap_or_else(T::one);
        let rate = (rabi * scale).max(detuning).max(T::lit(2.0) * shift);
        if rate > T::zero() {
            T::lit(0.05) / rate
        } else {
            T::max_value().unwrap_or_else(|| T::lit(1e30))
        }
    }
}

/// `H(t)` of a lifted drive.
pub fn hamiltonian<T: Real>(drive: &MultiLevelDrive<T>, t: T) -> Result<CMatrix<T>> {
    drive.hamiltonian(t)
}

/// Sampled evolution: `states[i]` is the state at `times[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T: Real> {
    pub times: Vec<T>,
    pub states: Vec<StateVector<T>>,
    pub populations: Vec<Vec<T>>,
}

impl<T: Real> Trajectory<T> {
    pub fn dim(&self) -> usize {
        self.states.first().map_or(0, StateVector::dim)
    }

    pub fn final_state(&self) -> Option<&StateVector<T>> {
        self.states.last()
    }

    /// `P(F=1) = 1 - P(m=0)` per sample, defined for `d = 3`.
    pub fn p_f1(&self) -> Option<Vec<T>> {
        (self.dim() == 3).then(|| self.populations.iter().map(|p| T::one() - p[1]).collect())
    }

    /// CSV header: `time_us`, one `p_<m>` column per level in basis order, then `p_F1` for `d = 3`.
    pub fn csv_header(&self) -> Vec<String> {
        let d = self.dim();
        let mut cols = vec!["time_us".to_string()];
        cols.extend((0..d).map(|i| format!("p_{}", m_label(d, i))));
        if d == 3 {
            cols.push("p_F1".into());
        }
        cols
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(self.csv_header()).map_err(csv_err)?;
        let f1 = self.p_f1();
        for (i, t) in self.times.iter().enumerate() {
            let mut row = vec![(t.f64() * 1e6).to_string()];
            row.extend(self.populations[i].iter().map(|p| p.f64().to_string()));
            if let Some(f1) = &f1 {
                row.push(f1[i].f64().to_string());
            }
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// `m` of basis index `i` as text: `-1`, `0`, `+1`, `-3/2`, ...
pub fn m_label(d: usize, i: usize) -> String {
    let twice = 2 * i as i64 - (d as i64 - 1);
    let sign = if twice > 0 {
        "+"
    } else if twice < 0 {
        "-"
    } else {
        ""
    };
    let a = twice.abs();
    if a % 2 == 0 {
        format!("{sign}{}", a / 2)
    } else {
        format!("{sign}{a}/2")
    }
}

enum Piece<T> {
    Segment { index: usize, start: T, end: T, constant: bool },
    Tail,
}

fn pieces<T: Real>(drive: &MultiLevelDrive<T>) -> Vec<Piece<T>> {
    let s = drive.schedule();
    let mut out = Vec::with_capacity(s.segments.len() + 1);
    let mut t = T::zero();
    for (index, seg) in s.segments.iter().enumerate() {
        let end = t + seg.duration;
        out.push(Piece::Segment { index, start: t, end, constant: seg.is_constant() });
        t = end;
    }
    out.push(Piece::Tail);
    out
}

/// One integration pass at a fixed maximum step. `x` (d×k) is evolved in place and
/// copied at each requested time.
struct Pass<'a, T: Real> {
    drive: &'a MultiLevelDrive<T>,
    method: StepMethod,
    h: T,
    used_variable_step: bool,
}

impl<T: Real> Pass<'_, T> {
    fn run(&mut self, mut x: CMatrix<T>, times: &[T]) -> Result<Vec<CMatrix<T>>> {
        let pieces = pieces(self.drive);
        let total = self.drive.schedule().total_duration();
        let mut out = Vec::with_capacity(times.len());
        let mut now = T::zero();
        let mut piece = 0;
        for &target in times {
            while now < target {
                let (seg_end, kind) = match pieces[piece] {
                    Piece::Segment { end, index, constant, start } => (end, Some((index, start, constant))),
                    Piece::Tail => (target, None),
                };
                let stop = if piece + 1 < pieces.len() && seg_end <= target { seg_end } else { target };
                if stop > now {
                    match kind {
                        Some((index, start, true)) => {
                            let c = self.drive.controls_in_segment(index, now - start);
                            let g = self.drive.hamiltonian_for(&c) * cr(stop - now);
                            x = expm_minus_i(&g) * x;
                        }
                        Some((index, start, false)) => {
                            x = self.variable(x, index, now - start, stop - start)?;
                        }
                        None => {
                            let c = self.drive.tail_controls().ok_or_else(|| Error::Domain {
                                what: "t",
                                value: target.f64(),
                                domain: format!("[0, {}]", total.f64()),
                            })?;
                            let g = self.drive.hamiltonian_for(&c) * cr(stop - now);
                            x = expm_minus_i(&g) * x;
                        }
                    }
                    now = stop;
                }
                if piece + 1 < pieces.len() && now >= seg_end {
                    piece += 1;
                }
            }
            out.push(x.clone());
        }
        Ok(out)
    }

    /// Evolve through local times `[a, b]` of a time-dependent segment.
    fn variable(&mut self, mut x: CMatrix<T>, index: usize, a: T, b: T) -> Result<CMatrix<T>> {
        self.used_variable_step = true;
        let span = b - a;
        let n = (span / self.h).ceil().to_usize().unwrap_or(1).max(1);
        let h = span / T::from_usize(n).expect("step count representable");
        let half = T::lit(0.5);
        let off = T::lit(3f64.sqrt() / 6.0);
        let k = T::lit(3f64.sqrt() / 12.0);
        let ham = |tau: T| self.drive.hamiltonian_for(&self.drive.controls_in_segment(index, tau));
        for i in 0..n {
            let t0 = a + h * T::from_usize(i).expect("index representable");
            let g = match self.method {
                StepMethod::Midpoint => ham(t0 + half * h) * cr(h),
                StepMethod::Magnus4 => {
                    let h1 = ham(t0 + h * (half - off));
                    let h2 = ham(t0 + h * (half + off));
                    let comm = commutator(&h2, &h1);
                    (&h1 + &h2) * cr(half * h) - comm * Complex::new(T::zero(), k * h * h)
                }
            };
            x = expm_minus_i(&g) * x;
        }
        Ok(x)
    }
}

fn check_times<T: Real>(drive: &MultiLevelDrive<T>, times: &[T]) -> Result<()> {
    let total = drive.schedule().total_duration();
    let open = drive.tail_controls().is_some();
    let mut prev = T::zero();
    for &t in times {
        if !(t >= prev) {
            return Err(Error::param("sample_times", "must be non-negative and non-decreasing"));
        }
        if t > total && !open {
            return Err(Error::Domain { what: "t", value: t.f64(), domain: format!("[0, {}]", total.f64()) });
        }
        prev = t;
    }
    Ok(())
}

fn integrate<T: Real>(
    drive: &MultiLevelDrive<T>,
    x0: CMatrix<T>,
    cfg: &IntegratorConfig<T>,
    times: &[T],
) -> Result<Vec<CMatrix<T>>> {
    cfg.validate()?;
    check_times(drive, times)?;
    let h0 = cfg.step_for(drive);
    let mut pass = Pass { drive, method: cfg.method, h: h0, used_variable_step: false };
    let mut prev = pass.run(x0.clone(), times)?;
    if !pass.used_variable_step {
        return Ok(prev);
    }
    let mut residual = T::zero();
    for halving in 1..=cfg.max_halvings {
        pass.h = h0 / T::lit(2f64.powi(halving as i32));
        let cur = pass.run(x0.clone(), times)?;
        residual = prev.iter().zip(&cur).fold(T::zero(), |m, (p, c)| m.max(max_abs(&(p - c))));
        if residual < cfg.tolerance {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::NonConvergence { halvings: cfg.max_halvings, residual: residual.f64() })
}

/// Evolve `psi0` and record it at each of `sample_times` (seconds, non-decreasing).
/// Times past the schedule end are allowed when it has an open-ended tail.
pub fn propagate<T: Real>(
    drive: &MultiLevelDrive<T>,
    psi0: &StateVector<T>,
    cfg: &IntegratorConfig<T>,
    sample_times: &[T],
) -> Result<Trajectory<T>> {
    if psi0.dim() != drive.dim() {
        return Err(Error::DimensionMismatch { left: psi0.dim(), right: drive.dim() });
    }
    let x0 = DMatrix::from_column_slice(psi0.dim(), 1, psi0.amps().as_slice());
    let xs = integrate(drive, x0, cfg, sample_times)?;
    let mut states = Vec::with_capacity(xs.len());
    for x in xs {
        let s = StateVector::new(x.column(0).into_owned())?;
        states.push(s);
    }
    let populations = states.iter().map(StateVector::populations).collect();
    Ok(Trajectory { times: sample_times.to_vec(), states, populations })
}

/// `n + 1` evenly spaced sample times covering `[0, end]`.
pub fn uniform_times<T: Real>(end: T, n: usize) -> Vec<T> {
    let n = n.max(1);
    // the last point is `end` itself; `end * n / n` can round past it
    (0..=n)
        .map(|i| if i == n { end } else { end * T::from_usize(i).expect("index") / T::from_usize(n).expect("count") })
        .collect()
}

/// Propagator over the finite part of the schedule.
pub fn propagator<T: Real>(drive: &MultiLevelDrive<T>, cfg: &IntegratorConfig<T>) -> Result<Unitary<T>> {
    let d = drive.dim();
    let total = drive.schedule().total_duration();
    let mut xs = integrate(drive, CMatrix::identity(d, d), cfg, &[total])?;
    Unitary::new(xs.pop().expect("one sample"))
}

/// Static eigenstructure at one detuning.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPoint<T: Real> {
    pub delta_over_rabi: T,
    /// Ascending along the first point; later points keep track identity.
    pub energies: Vec<T>,
    /// Real eigenvectors as columns, in the same order as `energies`.
    pub vectors: DMatrix<T>,
}

/// Eigenvalues and real-gauge eigenvectors of `H` at `χ = 0` for each `δ/Ω`, with
/// `Ω` the three-level per-field Rabi frequency (`Ω_1/2 = Ω/√2`, `δ_1/2 = δ/2`).
///
/// Columns are matched to the previous point by maximum overlap and their sign fixed
/// so that the overlap is positive, giving continuous curves.
pub fn eigen_scan<T: Real>(rabi: T, delta_over_rabi: &[T], d: usize) -> Result<Vec<EigenPoint<T>>> {
    if !(rabi > T::zero()) {
        return Err(Error::param("Ω", "must be > 0"));
    }
    let ops = angular_momentum_ops::<T>(d)?;
    let mut out: Vec<EigenPoint<T>> = Vec::with_capacity(delta_over_rabi.len());
    for &x in delta_over_rabi {
        let c =
            Controls { rabi_half: rabi / T::lit(2.0).sqrt(), phase: T::zero(), detuning_half: x * rabi / T::lit(2.0) };
        let (values, vecs) = hermitian_eigen(&ops.dot(c.lambda()));
        let mut real = DMatrix::from_fn(d, d, |r, k| vecs[(r, k)].re);
        for k in 0..d {
            // the generator is real symmetric, so each column is real up to one phase
            let pivot =
                (0..d).max_by(|&a, &b| vecs[(a, k)].norm_sqr().partial_cmp(&vecs[(b, k)].norm_sqr()).unwrap()).unwrap();
            let p = vecs[(pivot, k)];
            let unphase = p.conj() / p.norm_sqr().sqrt();
            for r in 0..d {
                real[(r, k)] = (vecs[(r, k)] * unphase).re;
            }
            let n = real.column(k).norm();
            real.column_mut(k).unscale_mut(n);
        }
        let (energies, vectors) = match out.last() {
            None => (values, real),
            Some(prev) => track(&prev.vectors, values, real),
        };
        out.push(EigenPoint { delta_over_rabi: x, energies, vectors });
    }
    Ok(out)
}

fn track<T: Real>(prev: &DMatrix<T>, values: Vec<T>, vecs: DMatrix<T>) -> (Vec<T>, DMatrix<T>) {
    let d = values.len();
    let overlaps = prev.transpose() * &vecs;
    let mut taken = vec![false; d];
    let mut energies = vec![T::zero(); d];
    let mut out = DMatrix::zeros(d, d);
    for k in 0..d {
        let best = (0..d)
            .filter(|&j| !taken[j])
            .max_by(|&a, &b| overlaps[(k, a)].abs().partial_cmp(&overlaps[(k, b)].abs()).unwrap())
            .expect("free column");
        taken[best] = true;
        energies[k] = values[best];
        let sign = if overlaps[(k, best)] < T::zero() { -T::one() } else { T::one() };
        out.set_column(k, &(vecs.column(best) * sign));
    }
    (energies, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::{lift_unitary, named_state, state_fidelity};
    use crate::waveforms::{
        adiabatic_method, composite_method, lift_schedule, square_pulse, AdiabaticParams, CompositeSequence,
        ControlSchedule, Direction, Segment,
    };
    use std::f64::consts::{FRAC_PI_2, PI, TAU};

    const RABI0: f64 = TAU * 40e3;

    #[test]
    fn zero_drive_is_constant() {
        let s = ControlSchedule::new(vec![Segment::square(1e-3, Controls::zero())]).unwrap();
        let drive = lift_schedule(&s, 3).unwrap();
        let psi = named_state::<f64>(3, "u").unwrap();
        let tr = propagate(&drive, &psi, &IntegratorConfig::default(), &uniform_times(1e-3, 10)).unwrap();
        for st in &tr.states {
            assert!(st.phase_distance(&psi) < 1e-14);
        }
    }

    #[test]
    fn pi_half_pulse_makes_dark_state() {
        let drive = lift_schedule(&square_pulse(FRAC_PI_2, FRAC_PI_2, RABI0).unwrap(), 3).unwrap();
        let u = propagator(&drive, &IntegratorConfig::default()).unwrap();
        let out = u.apply(&named_state(3, "0").unwrap()).unwrap();
        assert!(state_fidelity(&out, &named_state(3, "D").unwrap()).unwrap() > 1.0 - 1e-12);
    }

    #[test]
    fn empty_schedule_propagator_is_identity() {
        let drive = lift_schedule(&ControlSchedule::<f64>::empty(), 4).unwrap();
        let u = propagator(&drive, &IntegratorConfig::default()).unwrap();
        assert!(u.phase_distance(&Unitary::identity(4)) < 1e-15);
    }

    #[test]
    fn tbb1_maps_zero_to_dark() {
        let s = composite_method(&CompositeSequence::tbb1(), RABI0, false).unwrap();
        let u = propagator(&lift_schedule(&s, 3).unwrap(), &IntegratorConfig::default()).unwrap();
        let out = u.apply(&named_state(3, "0").unwrap()).unwrap();
        assert!(state_fidelity(&out, &named_state(3, "D").unwrap()).unwrap() >= 1.0 - 1e-12);
    }

    #[test]
    fn adiabatic_forward_transfer() {
        let p = AdiabaticParams::reference().with_direction(Direction::Forward).with_hold(0.0);
        let drive = lift_schedule(&adiabatic_method(&p).unwrap(), 3).unwrap();
        let u = propagator(&drive, &IntegratorConfig::default()).unwrap();
        assert!(u.unitarity_deviation() < 1e-10);
        let out = u.apply(&named_state(3, "0").unwrap()).unwrap();
        assert!(state_fidelity(&out, &named_state(3, "D").unwrap()).unwrap() > 0.999);
    }

    #[test]
    fn magnus_and_midpoint_agree() {
        let p = AdiabaticParams::reference().with_direction(Direction::Forward).with_hold(0.0);
        let drive = lift_schedule(&adiabatic_method(&p).unwrap(), 3).unwrap();
        let a = propagator(&drive, &IntegratorConfig::default()).unwrap();
        let cfg = IntegratorConfig { method: StepMethod::Midpoint, max_halvings: 12, ..Default::default() };
        let b = propagator(&drive, &cfg).unwrap();
        assert!(max_abs(&(a.matrix() - b.matrix())) < 1e-8);
    }

    #[test]
    fn nonconvergence_reports_residual() {
        let p = AdiabaticParams::reference();
        let drive = lift_schedule(&adiabatic_method(&p).unwrap(), 3).unwrap();
        let cfg =
            IntegratorConfig { max_step: Some(1e-4), max_halvings: 1, tolerance: 1e-15, method: StepMethod::Midpoint };
        assert!(matches!(propagator(&drive, &cfg), Err(Error::NonConvergence { halvings: 1, .. })));
    }

    #[test]
    fn majorana_equivalence_for_a_sweep() {
        let p = AdiabaticParams::reference();
        let s = adiabatic_method(&p).unwrap();
        let u2 = propagator(&lift_schedule(&s, 2).unwrap(), &IntegratorConfig::default()).unwrap();
        let (a, b) = u2.su2_pair().unwrap();
        for d in 3..=5 {
            let ud = propagator(&lift_schedule(&s, d).unwrap(), &IntegratorConfig::default()).unwrap();
            assert!(ud.phase_distance(&lift_unitary(a, b, d).unwrap()) < 1e-8, "d={d}");
        }
    }

    #[test]
    fn samples_past_end_need_a_tail() {
        let s = square_pulse(FRAC_PI_2, 0.0, RABI0).unwrap();
        let drive = lift_schedule(&s, 3).unwrap();
        let psi = named_state::<f64>(3, "0").unwrap();
        let end = s.total_duration();
        assert!(propagate(&drive, &psi, &IntegratorConfig::default(), &[end * 2.0]).is_err());
        assert!(propagate(&drive, &psi, &IntegratorConfig::default(), &[end, end * 0.5]).is_err());
        let protected = composite_method(&CompositeSequence::tbb1(), RABI0, true).unwrap();
        let drive = lift_schedule(&protected, 3).unwrap();
        let t = protected.total_duration();
        let tr = propagate(&drive, &psi, &IntegratorConfig::default(), &[t, t + 1e-3]).unwrap();
        // |D> is dark under the χ = 0 dressing field
        let dark = named_state(3, "D").unwrap();
        assert!(state_fidelity(&tr.states[1], &dark).unwrap() > 1.0 - 1e-10);
    }

    #[test]
    fn csv_columns() {
        let s = square_pulse(PI, 0.0, RABI0).unwrap();
        let psi = named_state::<f64>(3, "0").unwrap();
        let tr = propagate(
            &lift_schedule(&s, 3).unwrap(),
            &psi,
            &IntegratorConfig::default(),
            &uniform_times(s.total_duration(), 4),
        )
        .unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "time_us,p_-1,p_0,p_+1,p_F1");
        assert_eq!(text.lines().count(), 6);
        assert!(!text.contains('\r'));
        assert_eq!(m_label(4, 0), "-3/2");
        assert_eq!(m_label(2, 1), "+1/2");
    }

    #[test]
    fn gap_at_resonance() {
        for d in 2..=5 {
            let scan = eigen_scan(RABI0, &[0.0], d).unwrap();
            let e = &scan[0].energies;
            for k in 1..d {
                assert!(((e[k] - e[k - 1]) - RABI0 / 2f64.sqrt()).abs() < 1e-10 * RABI0);
            }
        }
    }

    #[test]
    fn two_level_eigenvalues_closed_form() {
        let xs = [-3.0, -0.4, 0.0, 1.7];
        for p in eigen_scan(RABI0, &xs, 2).unwrap() {
            let rh = RABI0 / 2f64.sqrt();
            let dh = p.delta_over_rabi * RABI0 / 2.0;
            let e = 0.5 * (rh * rh + dh * dh).sqrt();
            assert!((p.energies[0] + e).abs() < 1e-9 * RABI0 && (p.energies[1] - e).abs() < 1e-9 * RABI0);
        }
    }

    #[test]
    fn far_detuned_eigenvectors_are_bare_states() {
        let p = &eigen_scan(RABI0, &[1e5], 3).unwrap()[0];
        for k in 0..3 {
            assert!(p.vectors[(k, k)].abs() > 1.0 - 1e-8);
        }
    }
}
