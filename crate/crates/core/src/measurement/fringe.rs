use std::f64::consts::{FRAC_PI_2, TAU};
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{propagator, IntegratorConfig};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, CMatrix};
use crate::spin::{StateVector, Unitary};
use crate::waveforms::{lift_schedule, square_pulse};

use super::{ml_estimate_single, MeasurementModel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FringePoint {
    pub chi: f64,
    pub k: u64,
    pub n: u64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FringeData {
    pub points: Vec<FringePoint>,
}

impl FringeData {
    pub fn validate(&self) -> Result<()> {
        for (i, p) in self.points.iter().enumerate() {
            if p.n == 0 || p.k > p.n {
                return Err(Error::param(
                    format!("points[{i}]"),
                    format!("need 0 <= k <= n, n >= 1 (k={}, n={})", p.k, p.n),
                ));
            }
        }
        Ok(())
    }

    /// Columns `chi_rad,k,n,p0_corrected`, where the last is `1 - p̂` from the single-point estimate.
    pub fn write_csv<W: Write>(&self, out: W, m: &MeasurementModel) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(["chi_rad", "k", "n", "p0_corrected"]).map_err(io)?;
        for p in &self.points {
            let per_point = MeasurementModel { shots: p.n, ..*m };
            let p0 = 1.0 - ml_estimate_single(p.k, &per_point)?;
            w.write_record([p.chi.to_string(), p.k.to_string(), p.n.to_string(), p0.to_string()]).map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Checks that `rho` is Hermitian, unit-trace and positive semidefinite within 1e-9.
pub fn validate_density(rho: &CMatrix<f64>) -> Result<()> {
    if !rho.is_square() {
        return Err(Error::InvalidDensityMatrix(format!("{}x{} is not square", rho.nrows(), rho.ncols())));
    }
    let herm = (rho - rho.adjoint()).iter().fold(0.0f64, |m, z| m.max(z.norm()));
    if herm > 1e-9 {
        return Err(Error::InvalidDensityMatrix(format!("not Hermitian (deviation {herm:e})")));
    }
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > 1e-9 || tr.im.abs() > 1e-9 {
        return Err(Error::InvalidDensityMatrix(format!("trace {tr} != 1")));
    }
    let (values, _) = hermitian_eigen(rho);
    if values[0] < -1e-9 {
        return Err(Error::InvalidDensityMatrix(format!("negative eigenvalue {:e}", values[0])));
    }
    Ok(())
}

fn analysis_pulse(chi: f64) -> Result<Unitary<f64>> {
    // the rotation angle alone fixes the map; any Rabi frequency gives the same propagator
    let s = square_pulse(FRAC_PI_2, chi.rem_euclid(TAU), TAU * 40e3)?;
    propagator(&lift_schedule(&s, 3)?, &IntegratorConfig::default())
}

/// `P0` after the resonant analysis pulse `R(π/2, χ)` acting on the qutrit state `rho`.
pub fn fringe_prediction(rho: &CMatrix<f64>, chi: f64) -> Result<f64> {
    if rho.nrows() != 3 {
        return Err(Error::DimensionMismatch { left: rho.nrows(), right: 3 });
    }
    validate_density(rho)?;
    Ok(analysis_pulse(chi)?.conjugate(rho)[(1, 1)].re.clamp(0.0, 1.0))
}

/// Pure-state form of [`fringe_prediction`].
pub fn fringe_prediction_state(psi: &StateVector<f64>, chi: f64) -> Result<f64> {
    if psi.dim() != 3 {
        return Err(Error::DimensionMismatch { left: psi.dim(), right: 3 });
    }
    Ok(analysis_pulse(chi)?.apply(psi)?.populations()[1].clamp(0.0, 1.0))
}

/// `(½(P₊₁ + P₋₁), ρ₊₁,₋₁)` of a qutrit density matrix.
pub fn fringe_offset_and_coherence(rho: &CMatrix<f64>) -> (f64, Complex64) {
    (0.5 * (rho[(0, 0)].re + rho[(2, 2)].re), rho[(2, 0)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::named_state;
    use std::f64::consts::PI;

    #[test]
    fn dark_state_fringe() {
        let rho = named_state::<f64>(3, "D").unwrap().density();
        for i in 0..16 {
            let chi = PI * i as f64 / 16.0;
            let p = fringe_prediction(&rho, chi).unwrap();
            assert!((p - (0.5 - 0.5 * (2.0 * chi).cos())).abs() < 1e-12, "χ={chi}: {p}");
        }
    }

    #[test]
    fn ground_state_has_no_second_harmonic() {
        let rho = named_state::<f64>(3, "0").unwrap().density();
        let vals: Vec<f64> = (0..16).map(|i| fringe_prediction(&rho, TAU * i as f64 / 16.0).unwrap()).collect();
        let first = vals[0];
        assert!(vals.iter().all(|v| (v - first).abs() < 1e-12));
    }

    #[test]
    fn rejects_invalid_density() {
        let mut rho = named_state::<f64>(3, "D").unwrap().density();
        rho[(0, 0)] += Complex64::new(0.1, 0.0);
        assert!(matches!(fringe_prediction(&rho, 0.0), Err(Error::InvalidDensityMatrix(_))));
        let neg = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            Complex64::new(1.2, 0.0),
            Complex64::new(-0.2, 0.0),
            Complex64::new(0.0, 0.0),
        ]));
        assert!(fringe_prediction(&neg, 0.0).is_err());
    }

    #[test]
    fn csv_layout() {
        let data = FringeData {
            points: vec![FringePoint { chi: 0.0, k: 197, n: 200 }, FringePoint { chi: 0.5, k: 3, n: 200 }],
        };
        let mut buf = Vec::new();
        data.write_csv(&mut buf, &MeasurementModel::default()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "chi_rad,k,n,p0_corrected");
        assert_eq!(lines[1], "0,197,200,0");
        assert_eq!(lines[2], "0.5,3,200,1");
    }
}
