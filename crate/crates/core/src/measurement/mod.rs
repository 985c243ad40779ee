//! Fluorescence readout with detection errors, binomial shot data, maximum-likelihood
//! fringe fitting and fidelity extraction.
//!
//! Bright events come from `F = 1` (`|±1>`), so the bright probability of a shot is
//! `detection_map(1 - P0)`; all fitted curves model `P0`, the population of `|0>`.

mod fit;
mod fringe;
mod quadrature;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use fit::{
    dark_state_fidelity, infidelity_per_op, ml_fit_exact, ml_fit_fringe, ml_fit_harmonic, FitResult, InfidelityFit,
    OpPoint, ParamErrors,
};
pub use fringe::{
    fringe_offset_and_coherence, fringe_prediction, fringe_prediction_state, validate_density, FringeData, FringePoint,
};
pub use quadrature::GaussHermite;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementModel {
    pub p_b_given_1: f64,
    pub p_b_given_0: f64,
    pub shots: u64,
    pub seed: u64,
}

impl Default for MeasurementModel {
    fn default() -> Self {
        Self { p_b_given_1: 0.985, p_b_given_0: 0.015, shots: 200, seed: 0 }
    }
}

impl MeasurementModel {
    pub fn ideal(shots: u64, seed: u64) -> Self {
        Self { p_b_given_1: 1.0, p_b_given_0: 0.0, shots, seed }
    }

    pub fn validate(&self) -> Result<()> {
        let (p1, p0) = (self.p_b_given_1, self.p_b_given_0);
        if !(0.0 <= p0 && p0 < p1 && p1 <= 1.0) {
            return Err(Error::param("P(b|1), P(b|0)", "need 0 <= P(b|0) < P(b|1) <= 1"));
        }
        if self.shots == 0 {
            return Err(Error::param("shots", "must be >= 1"));
        }
        Ok(())
    }

    /// Independent generator for `(seed, stream)`.
    pub fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }
}

/// `p_b(p) = P(b|1) p + P(b|0) (1 - p)`.
pub fn detection_map(p: f64, m: &MeasurementModel) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain { what: "p", value: p, domain: "[0, 1]".into() });
    }
    Ok(m.p_b_given_1 * p + m.p_b_given_0 * (1.0 - p))
}

/// Bright count out of `m.shots` shots.
pub fn sample_counts(p_b: f64, m: &MeasurementModel, rng: &mut ChaCha8Rng) -> Result<u64> {
    let dist =
        Binomial::new(m.shots, p_b).map_err(|_| Error::Domain { what: "p_b", value: p_b, domain: "[0, 1]".into() })?;
    Ok(dist.sample(rng))
}

/// Single-point maximum-likelihood estimate of the bright-state probability.
pub fn ml_estimate_single(k: u64, m: &MeasurementModel) -> Result<f64> {
    if k > m.shots {
        return Err(Error::param("k", format!("{k} exceeds shots {}", m.shots)));
    }
    let f = k as f64 / m.shots as f64;
    Ok(((f - m.p_b_given_0) / (m.p_b_given_1 - m.p_b_given_0)).clamp(0.0, 1.0))
}
