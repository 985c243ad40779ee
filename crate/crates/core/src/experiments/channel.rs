use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::Result;
use crate::linalg::CMatrix;
use crate::measurement::GaussHermite;

/// Random-unitary channel `ρ -> Σ w_k U_k ρ U_k†`.
#[derive(Debug, Clone)]
pub struct OpChannel {
    pub unitaries: Vec<CMatrix<f64>>,
    pub weights: Vec<f64>,
}

impl OpChannel {
    pub fn unitary(u: CMatrix<f64>) -> Self {
        Self { unitaries: vec![u], weights: vec![1.0] }
    }

    /// Average of `build(s)` over `s ~ N(0, σ²)` with an `nodes`-point Gauss–Hermite rule.
    /// Collapses to a single unitary when `σ = 0`.
    pub fn gaussian<F>(sigma: f64, nodes: usize, build: F) -> Result<Self>
    where
        F: Fn(f64) -> Result<CMatrix<f64>> + Sync,
    {
        if sigma == 0.0 {
            return Ok(Self::unitary(build(0.0)?));
        }
        let rule = GaussHermite::new(nodes);
        let unitaries = rule.nodes.par_iter().map(|&x| build(sigma * x)).collect::<Result<Vec<_>>>()?;
        Ok(Self { unitaries, weights: rule.weights })
    }

    pub fn dim(&self) -> usize {
        self.unitaries[0].nrows()
    }

    pub fn apply(&self, rho: &CMatrix<f64>) -> CMatrix<f64> {
        let mut out = DMatrix::zeros(rho.nrows(), rho.ncols());
        for (u, &w) in self.unitaries.iter().zip(&self.weights) {
            out += (u * rho * u.adjoint()) * Complex64::new(w, 0.0);
        }
        out
    }

    /// Same channel acting on a larger space, with the extra levels left untouched.
    pub fn embed(&self, dim: usize) -> Self {
        let d = self.dim();
        let unitaries = self
            .unitaries
            .iter()
            .map(|u| {
                let mut big = CMatrix::identity(dim, dim);
                big.view_mut((0, 0), (d, d)).copy_from(u);
                big
            })
            .collect();
        Self { unitaries, weights: self.weights.clone() }
    }
}
