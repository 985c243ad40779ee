use std::f64::consts::{PI, TAU};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{FringeData, MeasurementModel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamErrors {
    pub a0: f64,
    pub a: f64,
    pub phi0: f64,
}

/// Best fit of `P0(χ) = A0 + A cos(hχ + φ0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub a0: f64,
    pub a: f64,
    /// In `[0, 2π)`.
    pub phi0: f64,
    pub harmonic: u32,
    /// `None` when the observed information is singular (e.g. `A = 0` leaves `φ0` free).
    pub std_errors: Option<ParamErrors>,
    pub covariance: Option<[[f64; 3]; 3]>,
    pub neg_log_likelihood: f64,
    /// `A0 - A cos φ0` clipped to `[0, 1]`.
    pub fidelity: f64,
    pub fidelity_raw: f64,
    pub fidelity_se: Option<f64>,
}

/// One binomial observation on the bright channel; `trials` need not be an integer so
/// that exact probabilities can be fitted with `trials = 1`.
#[derive(Debug, Clone, Copy)]
struct Obs {
    chi: f64,
    bright: f64,
    trials: f64,
}

struct Problem {
    obs: Vec<Obs>,
    harmonic: f64,
    p1: f64,
    p0: f64,
}

const FEASIBLE_SLACK: f64 = 1e-12;

fn project(x: Vector3<f64>) -> Vector3<f64> {
    let a0 = x[0].clamp(0.0, 1.0);
    let a = x[1].clamp(0.0, a0.min(1.0 - a0));
    Vector3::new(a0, a, x[2])
}

fn feasible(x: &Vector3<f64>) -> bool {
    x[1] >= -FEASIBLE_SLACK && x[0] - x[1] >= -FEASIBLE_SLACK && x[0] + x[1] <= 1.0 + FEASIBLE_SLACK
}

/// `x ln(x/y)` with `0 ln 0 = 0`.
fn xlog(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * (x / y).ln()
    }
}

impl Problem {
    fn model(&self, x: &Vector3<f64>, chi: f64) -> (f64, f64, f64) {
        let arg = self.harmonic * chi + x[2];
        (x[0] + x[1] * arg.cos(), arg.cos(), arg.sin())
    }

    /// Bright probability for `P0`, and its derivative `dq/dP0`.
    fn bright(&self, p0_pop: f64) -> (f64, f64) {
        let delta = self.p1 - self.p0;
        (self.p0 + delta * (1.0 - p0_pop), -delta)
    }

    /// Half the deviance: zero for a perfect fit.
    fn half_deviance(&self, x: &Vector3<f64>) -> f64 {
        let mut sum = 0.0;
        for o in &self.obs {
            let (q, _) = self.bright(self.model(x, o.chi).0);
            let q = q.clamp(0.0, 1.0);
            let fail = o.trials - o.bright;
            let a = xlog(o.bright, o.trials * q);
            let b = xlog(fail, o.trials * (1.0 - q));
            sum += a + b;
        }
        sum
    }

    fn objective(&self, x: &Vector3<f64>) -> f64 {
        let p = project(*x);
        let dist = (p - x).norm_squared();
        let penalty = dist * 1e3 * (1.0 + self.obs.iter().map(|o| o.trials).sum::<f64>());
        self.half_deviance(&p) + penalty
    }

    fn neg_log_likelihood(&self, x: &Vector3<f64>) -> f64 {
        self.obs
            .iter()
            .map(|o| {
                let q = self.bright(self.model(x, o.chi).0).0.clamp(0.0, 1.0);
                let t1 = if o.bright > 0.0 { -o.bright * q.ln() } else { 0.0 };
                let t2 = if o.trials - o.bright > 0.0 { -(o.trials - o.bright) * (1.0 - q).ln() } else { 0.0 };
                t1 + t2
            })
            .sum()
    }

    /// Gradient and Hessian of the negative log-likelihood.
    fn derivatives(&self, x: &Vector3<f64>) -> Option<(Vector3<f64>, Matrix3<f64>)> {
        let mut g = Vector3::zeros();
        let mut h = Matrix3::zeros();
        for o in &self.obs {
            let (p, c, s) = self.model(x, o.chi);
            let (q, dq) = self.bright(p);
            let fail = o.trials - o.bright;
            if (o.bright > 0.0 && q <= 0.0) || (fail > 0.0 && q >= 1.0) {
                return None;
            }
            let inv = |n: f64, v: f64| if n > 0.0 { n / v } else { 0.0 };
            let lq = -inv(o.bright, q) + inv(fail, 1.0 - q);
            let lqq = inv(o.bright, q * q) + inv(fail, (1.0 - q) * (1.0 - q));
            let dp = Vector3::new(1.0, c, -x[1] * s);
            let mut d2p = Matrix3::zeros();
            d2p[(1, 2)] = -s;
            d2p[(2, 1)] = -s;
            d2p[(2, 2)] = -x[1] * c;
            g += dp * (lq * dq);
            h += dp * dp.transpose() * (lqq * dq * dq) + d2p * (lq * dq);
        }
        Some((g, h))
    }
}

fn nelder_mead(f: impl Fn(&Vector3<f64>) -> f64, start: Vector3<f64>, scale: Vector3<f64>) -> (Vector3<f64>, f64) {
    let mut simplex: Vec<(Vector3<f64>, f64)> = Vec::with_capacity(4);
    simplex.push((start, f(&start)));
    for i in 0..3 {
        let mut v = start;
        v[i] += scale[i];
        simplex.push((v, f(&v)));
    }
    for _ in 0..20_000 {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let size = simplex[1..].iter().map(|(v, _)| (v - simplex[0].0).amax()).fold(0.0, f64::max);
        if size < 1e-11 {
            break;
        }
        let centroid = (simplex[0].0 + simplex[1].0 + simplex[2].0) / 3.0;
        let worst = simplex[3];
        let reflect = centroid + (centroid - worst.0);
        let fr = f(&reflect);
        if fr < simplex[0].1 {
            let expand = centroid + (centroid - worst.0) * 2.0;
            let fe = f(&expand);
            simplex[3] = if fe < fr { (expand, fe) } else { (reflect, fr) };
        } else if fr < simplex[2].1 {
            simplex[3] = (reflect, fr);
        } else {
            let (contract, fc) = if fr < worst.1 {
                let c = centroid + (reflect - centroid) * 0.5;
                (c, f(&c))
            } else {
                let c = centroid + (worst.0 - centroid) * 0.5;
                (c, f(&c))
            };
            if fc < worst.1.min(fr) {
                simplex[3] = (contract, fc);
            } else {
                let best = simplex[0].0;
                for item in simplex.iter_mut().skip(1) {
                    let v = best + (item.0 - best) * 0.5;
                    *item = (v, f(&v));
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex[0]
}

fn wrap(phi: f64) -> f64 {
    let w = phi.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

fn solve(problem: &Problem) -> Result<FitResult> {
    let obs = &problem.obs;
    if obs.len() < 4 {
        return Err(Error::SingularFit(format!("need >= 4 points, got {}", obs.len())));
    }
    let (lo, hi) = obs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), o| (l.min(o.chi), h.max(o.chi)));
    if hi - lo < 1e-12 {
        return Err(Error::SingularFit("all points share one phase".into()));
    }
    if hi - lo < PI / problem.harmonic - 1e-9 {
        return Err(Error::SingularFit("points span less than half a fringe period".into()));
    }

    // starting offset and amplitude from per-point estimates of P0
    let est: Vec<f64> = obs
        .iter()
        .map(|o| 1.0 - ((o.bright / o.trials - problem.p0) / (problem.p1 - problem.p0)).clamp(0.0, 1.0))
        .collect();
    let mean = est.iter().sum::<f64>() / est.len() as f64;
    let spread = est.iter().fold(0.0f64, |m, e| m.max((e - mean).abs()));
    let a0 = mean.clamp(0.05, 0.95);
    let amp = spread.min(a0.min(1.0 - a0)) * 0.9;

    let f = |x: &Vector3<f64>| problem.objective(x);
    let mut best: Option<(Vector3<f64>, f64)> = None;
    for k in 0..4 {
        let start = Vector3::new(a0, amp, k as f64 * PI / 2.0);
        let (mut x, _) = nelder_mead(f, start, Vector3::new(0.05, 0.05, 0.4));
        // restart once from the optimum to escape a collapsed simplex
        x = nelder_mead(f, x, Vector3::new(0.01, 0.01, 0.05)).0;
        let x = project(x);
        let fx = problem.half_deviance(&x);
        if best.as_ref().is_none_or(|b| fx < b.1) {
            best = Some((x, fx));
        }
    }
    let (mut x, _) = best.expect("four starts");

    // Newton polish on the likelihood, rejecting steps that leave the feasible set
    for _ in 0..50 {
        let Some((g, h)) = problem.derivatives(&x) else { break };
        let Some(step) = h.lu().solve(&(-g)) else { break };
        let current = problem.neg_log_likelihood(&x);
        let mut t = 1.0;
        let mut moved = false;
        while t > 1e-6 {
            let trial = x + step * t;
            if feasible(&trial) && problem.neg_log_likelihood(&trial) <= current {
                x = trial;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if !moved || step.amax() * t < 1e-14 {
            break;
        }
    }
    x = project(x);
    let (covariance, std_errors) = match problem.derivatives(&x).and_then(|(_, h)| {
        let inv = h.try_inverse()?;
        let ok = (0..3).all(|i| inv[(i, i)].is_finite() && inv[(i, i)] > 0.0);
        ok.then_some(inv)
    }) {
        Some(c) => (
            Some([
                [c[(0, 0)], c[(0, 1)], c[(0, 2)]],
                [c[(1, 0)], c[(1, 1)], c[(1, 2)]],
                [c[(2, 0)], c[(2, 1)], c[(2, 2)]],
            ]),
            Some(ParamErrors { a0: c[(0, 0)].sqrt(), a: c[(1, 1)].sqrt(), phi0: c[(2, 2)].sqrt() }),
        ),
        None => (None, None),
    };
    let phi0 = wrap(x[2]);
    let raw = x[0] - x[1] * phi0.cos();
    let fidelity_se = covariance.map(|c| {
        let g = [1.0, -phi0.cos(), x[1] * phi0.sin()];
        let mut v = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                v += g[i] * c[i][j] * g[j];
            }
        }
        v.max(0.0).sqrt()
    });
    Ok(FitResult {
        a0: x[0],
        a: x[1],
        phi0,
        harmonic: problem.harmonic as u32,
        std_errors,
        covariance,
        neg_log_likelihood: problem.neg_log_likelihood(&x),
        fidelity: raw.clamp(0.0, 1.0),
        fidelity_raw: raw,
        fidelity_se,
    })
}

/// Maximum-likelihood fit of `A0 + A cos(hχ + φ0)` to bright counts.
///
/// Constrained to `A >= 0`, `A0 - A >= 0`, `A0 + A <= 1`; starts at `φ0 ∈ {0, π/2, π, 3π/2}`.
pub fn ml_fit_harmonic(data: &FringeData, m: &MeasurementModel, harmonic: u32) -> Result<FitResult> {
    m.validate()?;
    data.validate()?;
    if harmonic == 0 {
        return Err(Error::param("harmonic", "must be >= 1"));
    }
    let obs = data.points.iter().map(|p| Obs { chi: p.chi, bright: p.k as f64, trials: p.n as f64 }).collect();
    solve(&Problem { obs, harmonic: harmonic as f64, p1: m.p_b_given_1, p0: m.p_b_given_0 })
}

/// Fringe fit with `h = 2`.
pub fn ml_fit_fringe(data: &FringeData, m: &MeasurementModel) -> Result<FitResult> {
    ml_fit_harmonic(data, m, 2)
}

/// Fit to exact `P0` values (the infinite-shot limit). Standard errors are those of a
/// single shot per point and only meaningful relative to one another.
pub fn ml_fit_exact(chis: &[f64], p0: &[f64], harmonic: u32) -> Result<FitResult> {
    if chis.len() != p0.len() {
        return Err(Error::DimensionMismatch { left: chis.len(), right: p0.len() });
    }
    if let Some(bad) = p0.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::Domain { what: "P0", value: *bad, domain: "[0, 1]".into() });
    }
    let obs = chis.iter().zip(p0).map(|(&chi, &p)| Obs { chi, bright: 1.0 - p, trials: 1.0 }).collect();
    solve(&Problem { obs, harmonic: harmonic as f64, p1: 1.0, p0: 0.0 })
}

/// `(clipped, raw, standard error)` of `F_D = A0 - A cos φ0`.
pub fn dark_state_fidelity(f: &FitResult) -> (f64, f64, Option<f64>) {
    let raw = f.a0 - f.a * f.phi0.cos();
    (raw.clamp(0.0, 1.0), raw, f.fidelity_se)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpPoint {
    pub ops: u32,
    pub fidelity: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfidelityFit {
    pub epsilon: f64,
    pub sigma: f64,
}

/// Weighted least squares of `F = 1 - x ε` (intercept fixed at 1).
pub fn infidelity_per_op(points: &[OpPoint]) -> Result<InfidelityFit> {
    let mut distinct: Vec<u32> = points.iter().map(|p| p.ops).collect();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::SingularFit("need at least two distinct operation counts".into()));
    }
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for p in points {
        if !(p.sigma > 0.0) {
            return Err(Error::param("sigma", format!("must be > 0, got {}", p.sigma)));
        }
        let w = 1.0 / (p.sigma * p.sigma);
        let x = p.ops as f64;
        sxy += w * x * (1.0 - p.fidelity);
        sxx += w * x * x;
    }
    Ok(InfidelityFit { epsilon: sxy / sxx, sigma: 1.0 / sxx.sqrt() })
}

#[cfg(test)]
mod tests {
    use super::super::{detection_map, sample_counts, FringePoint};
    use super::*;

    fn grid(n: usize) -> Vec<f64> {
        (0..n).map(|i| PI * i as f64 / n as f64).collect()
    }

    fn synth(a0: f64, a: f64, phi: f64, m: &MeasurementModel, stream: u64) -> FringeData {
        let mut rng = m.rng(stream);
        let points = grid(20)
            .into_iter()
            .map(|chi| {
                let p0 = a0 + a * (2.0 * chi + phi).cos();
                let k = sample_counts(detection_map(1.0 - p0, m).unwrap(), m, &mut rng).unwrap();
                FringePoint { chi, k, n: m.shots }
            })
            .collect();
        FringeData { points }
    }

    #[test]
    fn exact_dark_fringe() {
        let chis = grid(24);
        let p0: Vec<f64> = chis.iter().map(|c| 0.5 - 0.5 * (2.0 * c).cos()).collect();
        let f = ml_fit_exact(&chis, &p0, 2).unwrap();
        assert!((f.a0 - 0.5).abs() < 1e-8 && (f.a - 0.5).abs() < 1e-8 && (f.phi0 - PI).abs() < 1e-7, "{f:?}");
        assert!((f.fidelity - 1.0).abs() < 1e-8);
    }

    #[test]
    fn flat_data() {
        let m = MeasurementModel::default();
        let k = (detection_map(0.5, &m).unwrap() * m.shots as f64).round() as u64;
        let data = FringeData { points: grid(12).into_iter().map(|chi| FringePoint { chi, k, n: m.shots }).collect() };
        let f = ml_fit_fringe(&data, &m).unwrap();
        assert!(f.a < 1e-4 && (f.a0 - 0.5).abs() < 1e-3, "{f:?}");
    }

    #[test]
    fn degenerate_input() {
        let m = MeasurementModel::default();
        let data = FringeData { points: vec![FringePoint { chi: 0.3, k: 10, n: 200 }; 6] };
        assert!(matches!(ml_fit_fringe(&data, &m), Err(Error::SingularFit(_))));
        let few = FringeData { points: grid(3).into_iter().map(|chi| FringePoint { chi, k: 1, n: 200 }).collect() };
        assert!(ml_fit_fringe(&few, &m).is_err());
    }

    #[test]
    fn recovers_parameters_from_counts() {
        let m = MeasurementModel { shots: 20_000, seed: 11, ..Default::default() };
        let f = ml_fit_fringe(&synth(0.5, 0.45, 2.5, &m, 0), &m).unwrap();
        let e = f.std_errors.unwrap();
        assert!((f.a0 - 0.5).abs() < 4.0 * e.a0);
        assert!((f.a - 0.45).abs() < 4.0 * e.a);
        assert!((f.phi0 - 2.5).abs() < 4.0 * e.phi0);
        assert!(e.a0 < 0.01);
    }

    #[test]
    fn fidelity_formula() {
        let base = FitResult {
            a0: 0.5,
            a: 0.5,
            phi0: PI,
            harmonic: 2,
            std_errors: None,
            covariance: None,
            neg_log_likelihood: 0.0,
            fidelity: 0.0,
            fidelity_raw: 0.0,
            fidelity_se: None,
        };
        assert!((dark_state_fidelity(&base).0 - 1.0).abs() < 1e-15);
        assert!(dark_state_fidelity(&FitResult { phi0: 0.0, ..base.clone() }).0.abs() < 1e-15);
        assert_eq!(dark_state_fidelity(&FitResult { a: 0.0, phi0: 1.234, ..base }).0, 0.5);
    }

    #[test]
    fn infidelity_slope() {
        let pts: Vec<OpPoint> =
            [8, 16, 32, 64].iter().map(|&n| OpPoint { ops: n, fidelity: 1.0 - n as f64 * 1e-4, sigma: 1e-3 }).collect();
        let fit = infidelity_per_op(&pts).unwrap();
        assert!((fit.epsilon - 1e-4).abs() < 1e-16);
        let mut with_zero = pts.clone();
        with_zero.push(OpPoint { ops: 0, fidelity: 1.0, sigma: 1e-3 });
        assert!((infidelity_per_op(&with_zero).unwrap().epsilon - 1e-4).abs() < 1e-16);
        assert!(infidelity_per_op(&pts[..1]).is_err());
        assert!(infidelity_per_op(&[pts[0], pts[0]]).is_err());
    }
}
