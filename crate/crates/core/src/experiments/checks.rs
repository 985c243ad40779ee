use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use crate::dynamics::{eigen_scan, propagator, IntegratorConfig};
use crate::error::{Error, Result};
use crate::linalg::{phase_insensitive_distance, vector_phase_distance, CMatrix};
use crate::spin::{lift_unitary, named_state, rotation_unitary};
use crate::waveforms::{lift_schedule, square_pulse};

use super::{ScenarioConfig, ScenarioReport, Table};

/// `i^(d+1)` on the anti-diagonal `r + s = d + 1` (1-based).
fn reversal_target(d: usize) -> CMatrix<f64> {
    let phase = Complex64::i().powu(d as u32 + 1);
    CMatrix::from_fn(d, d, |r, s| if r + s == d - 1 { phase } else { Complex64::new(0.0, 0.0) })
}

/// The lifted `π` rotation about `x`, built from the SU(2) pair `(0, i)`, from
/// `exp(-iπ J_x)` and by integrating a lifted resonant `π` pulse. Each must reverse the
/// order of the amplitudes up to a global phase.
pub fn verify_reversal(d: usize) -> Result<ScenarioReport> {
    if !(2..=8).contains(&d) {
        return Err(Error::InvalidDimension { dim: d, reason: "need 2 <= d <= 8".into() });
    }
    let target = reversal_target(d);
    let lifted = lift_unitary(Complex64::new(0.0, 0.0), Complex64::i(), d)?;
    let rotated = rotation_unitary(d, [1.0, 0.0, 0.0], PI)?;
    let pulse = square_pulse(PI, 0.0, std::f64::consts::TAU * 40e3)?;
    let integrated = propagator(&lift_schedule(&pulse, d)?, &IntegratorConfig::default())?;

    let dev_lift = phase_insensitive_distance(lifted.matrix(), &target);
    let dev_rot = phase_insensitive_distance(rotated.matrix(), &target);
    let dev_prop = phase_insensitive_distance(integrated.matrix(), &target);
    let max_dev = dev_lift.max(dev_rot).max(dev_prop);

    let mut r = ScenarioReport::new("verify-reversal");
    r.input("d", d);
    r.output("dev_lift", dev_lift).output("dev_rotation", dev_rot).output("dev_propagator", dev_prop);
    if d == 3 {
        let xa = CMatrix::from_fn(3, 3, |r, s| Complex64::new(if r + s == 2 { 1.0 } else { 0.0 }, 0.0));
        let dev_xa = phase_insensitive_distance(lifted.matrix(), &xa);
        r.output("dev_x_a", dev_xa);
        r.check("matches_x_a", dev_xa < 1e-10);
    }
    r.output("max_dev", max_dev);
    r.check("reverses_amplitudes", max_dev < 1e-10);
    Ok(r)
}

/// Four `π/2` rotations about `y` on a qutrit: `|0>` alternates with `|D>` and `|+1>`
/// runs through `|u>`, `|-1>`, `|d>` and back.
pub fn rotation_cycle_check() -> Result<ScenarioReport> {
    let u = rotation_unitary(3, [0.0, 1.0, 0.0], FRAC_PI_2)?;
    let cycles = [("0", ["D", "0", "D", "0"]), ("+1", ["u", "-1", "d", "+1"])];
    let mut r = ScenarioReport::new("rotation-cycle");
    let mut worst: f64 = 0.0;
    for (start, expected) in cycles {
        let mut psi = named_state::<f64>(3, start)?;
        for (step, label) in expected.iter().enumerate() {
            psi = u.apply(&psi)?;
            let dev = vector_phase_distance(psi.amps(), named_state::<f64>(3, label)?.amps());
            r.output(&format!("dev_{start}_step{}", step + 1), dev);
            worst = worst.max(dev);
        }
    }
    r.output("max_dev", worst);
    r.check("cycles", worst < 1e-10);
    Ok(r)
}

/// Eigenvalues (in units of `Ω`) and real eigenvectors of the two-level Hamiltonian over
/// `δ/Ω ∈ [-4, 4]` in steps of 0.01.
pub fn eigen_scan_report(cfg: &ScenarioConfig) -> Result<ScenarioReport> {
    let grid: Vec<f64> = (-400..=400).map(|i| i as f64 / 100.0).collect();
    let scan = eigen_scan(cfg.rabi0, &grid, 2)?;
    let mut t =
        Table::new(&["delta_over_rabi", "E0_over_rabi", "E1_over_rabi", "v0_down", "v0_up", "v1_down", "v1_up"]);
    let mut max_jump: f64 = 0.0;
    for (i, p) in scan.iter().enumerate() {
        let v = &p.vectors;
        t.push(vec![
            p.delta_over_rabi,
            p.energies[0] / cfg.rabi0,
            p.energies[1] / cfg.rabi0,
            v[(0, 0)],
            v[(1, 0)],
            v[(0, 1)],
            v[(1, 1)],
        ]);
        if i > 0 {
            max_jump = max_jump.max((v - &scan[i - 1].vectors).amax());
        }
    }
    let zero = &scan[400];
    let gap = (zero.energies[1] - zero.energies[0]).abs();
    let mut r = ScenarioReport::new("fig2ab");
    r.output("gap_at_zero_over_rabi", gap / cfg.rabi0)
        .output("gap_error", (gap - cfg.rabi0 / 2f64.sqrt()).abs() / cfg.rabi0)
        .output("max_vector_step", max_jump);
    r.check("gap_is_rabi_over_sqrt2", (gap - cfg.rabi0 / 2f64.sqrt()).abs() <= 1e-10 * cfg.rabi0);
    r.check("continuous", max_jump < 0.05);
    r.table = Some(t);
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reversal_for_small_dimensions() {
        for d in 2..=8 {
            let r = verify_reversal(d).unwrap();
            assert!(r.passed(), "d = {d}: {:?}", r.outputs);
        }
        assert!(verify_reversal(9).is_err());
    }

    #[test]
    fn cycles_pass() {
        assert!(rotation_cycle_check().unwrap().passed());
    }

    #[test]
    fn eigen_scan_gap() {
        let r = eigen_scan_report(&ScenarioConfig::default()).unwrap();
        assert!(r.passed(), "{:?}", r.outputs);
        assert_eq!(r.table.as_ref().unwrap().rows.len(), 801);
    }
}
