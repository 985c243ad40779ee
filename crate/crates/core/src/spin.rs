//! Angular-momentum algebra for arbitrary dimension, canonical states, rotation
//! unitaries, and the lift of two-level unitaries to spin-j.
//!
//! Basis convention: index `i` of a `d`-level vector is the `J_z` eigenstate with
//! `m = -j + i`, i.e. increasing `m`. For `d = 3` the order is `|-1>, |0>, |+1>`,
//! and for `d = 2` it is `|↓>, |↑>`. Every matrix in the crate uses this order.

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg::{self, c, cr, CMatrix, CVector};
use crate::real::Real;

/// Unit-norm complex amplitude vector over `d` levels.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector<T: Real> {
    amps: CVector<T>,
}

impl<T: Real> StateVector<T> {
    /// Validates the norm, then renormalizes away rounding residue.
    pub fn new(amps: CVector<T>) -> Result<Self> {
        if amps.len() < 2 {
            return Err(Error::InvalidDimension { dim: amps.len(), reason: "need d >= 2".into() });
        }
        let norm_sqr = amps.norm_squared();
        let deviation = (norm_sqr - T::one()).abs().f64();
        if deviation > T::NORM_TOL {
            return Err(Error::NotNormalized { what: "state vector", deviation });
        }
        Ok(Self::normalized_unchecked(amps))
    }

    /// Normalizes any nonzero vector.
    pub fn normalized(amps: CVector<T>) -> Result<Self> {
        if amps.len() < 2 {
            return Err(Error::InvalidDimension { dim: amps.len(), reason: "need d >= 2".into() });
        }
        if amps.norm_squared() == T::zero() {
            return Err(Error::NotNormalized { what: "state vector", deviation: 1.0 });
        }
        Ok(Self::normalized_unchecked(amps))
    }

    pub(crate) fn normalized_unchecked(amps: CVector<T>) -> Self {
        let norm = amps.norm();
        Self { amps: amps.unscale(norm) }
    }

    pub fn from_slice(amps: &[Complex<T>]) -> Result<Self> {
        Self::new(CVector::from_column_slice(amps))
    }

    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        check_dim(dim)?;
        if index >= dim {
            return Err(Error::DimensionMismatch { left: index, right: dim });
        }
        let mut amps = CVector::zeros(dim);
        amps[index] = cr(T::one());
        Ok(Self { amps })
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amps(&self) -> &CVector<T> {
        &self.amps
    }

    pub fn into_amps(self) -> CVector<T> {
        self.amps
    }

    pub fn populations(&self) -> Vec<T> {
        self.amps.iter().map(|z| z.norm_sqr()).collect()
    }

    /// `<other|self>`.
    pub fn inner(&self, other: &Self) -> Result<Complex<T>> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { left: self.dim(), right: other.dim() });
        }
        Ok(other.amps.dotc(&self.amps))
    }

    /// `|ψ><ψ|`.
    pub fn density(&self) -> CMatrix<T> {
        &self.amps * self.amps.adjoint()
    }

    /// Max-abs amplitude difference after removing the best global phase.
    pub fn phase_distance(&self, other: &Self) -> T {
        linalg::vector_phase_distance(&self.amps, &other.amps)
    }
}

/// `J_x, J_y, J_z` for spin `j = (d-1)/2`, with `ħ = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinOperators<T: Real> {
    pub dim: usize,
    pub jx: CMatrix<T>,
    pub jy: CMatrix<T>,
    pub jz: CMatrix<T>,
}

impl<T: Real> SpinOperators<T> {
    pub fn j(&self) -> T {
        T::lit((self.dim as f64 - 1.0) / 2.0)
    }

    /// `m` value of basis index `i`.
    pub fn m(&self, index: usize) -> T {
        T::lit(index as f64) - self.j()
    }

    /// `Λ · J` for a real control vector.
    pub fn dot(&self, lambda: [T; 3]) -> CMatrix<T> {
        &self.jx * cr(lambda[0]) + &self.jy * cr(lambda[1]) + &self.jz * cr(lambda[2])
    }
}

/// Dense unitary matrix in the crate's basis convention.
#[derive(Debug, Clone, PartialEq)]
pub struct Unitary<T: Real> {
    mat: CMatrix<T>,
}

impl<T: Real> Unitary<T> {
    pub fn new(mat: CMatrix<T>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::DimensionMismatch { left: mat.nrows(), right: mat.ncols() });
        }
        let deviation = linalg::unitarity_deviation(&mat).f64();
        if deviation > T::NORM_TOL {
            return Err(Error::NotNormalized { what: "unitary", deviation });
        }
        Ok(Self { mat })
    }

    pub fn identity(dim: usize) -> Self {
        Self { mat: CMatrix::identity(dim, dim) }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix<T> {
        self.mat
    }

    pub fn adjoint(&self) -> Self {
        Self { mat: self.mat.adjoint() }
    }

    /// `self · rhs` (rhs acts first).
    pub fn compose(&self, rhs: &Self) -> Result<Self> {
        if self.dim() != rhs.dim() {
            return Err(Error::DimensionMismatch { left: self.dim(), right: rhs.dim() });
        }
        Ok(Self { mat: &self.mat * &rhs.mat })
    }

    pub fn apply(&self, psi: &StateVector<T>) -> Result<StateVector<T>> {
        if self.dim() != psi.dim() {
            return Err(Error::DimensionMismatch { left: self.dim(), right: psi.dim() });
        }
        Ok(StateVector::normalized_unchecked(&self.mat * psi.amps()))
    }

    /// `U ρ U†`.
    pub fn conjugate(&self, rho: &CMatrix<T>) -> CMatrix<T> {
        &self.mat * rho * self.mat.adjoint()
    }

    pub fn unitarity_deviation(&self) -> T {
        linalg::unitarity_deviation(&self.mat)
    }

    pub fn phase_distance(&self, other: &Self) -> T {
        linalg::phase_insensitive_distance(&self.mat, &other.mat)
    }

    /// The (a, b) pair of a 2x2 SU(2)-form matrix `[[a, -b*], [b, a*]]` (first column).
    pub fn su2_pair(&self) -> Result<(Complex<T>, Complex<T>)> {
        if self.dim() != 2 {
            return Err(Error::InvalidDimension { dim: self.dim(), reason: "SU(2) pair needs d = 2".into() });
        }
        Ok((self.mat[(0, 0)], self.mat[(1, 0)]))
    }
}

fn check_dim(d: usize) -> Result<()> {
    if d < 2 {
        Err(Error::InvalidDimension { dim: d, reason: "need d >= 2".into() })
    } else {
        Ok(())
    }
}

/// Ladder-operator construction of the spin-j matrices.
pub fn angular_momentum_ops<T: Real>(d: usize) -> Result<SpinOperators<T>> {
    check_dim(d)?;
    let j = (d as f64 - 1.0) / 2.0;
    let mut jx = CMatrix::zeros(d, d);
    let mut jy = CMatrix::zeros(d, d);
    let mut jz = CMatrix::zeros(d, d);
    for i in 0..d {
        let m = -j + i as f64;
        jz[(i, i)] = cr(T::lit(m));
        if i + 1 < d {
            // <m+1| J+ |m>
            let raise = T::lit((j * (j + 1.0) - m * (m + 1.0)).sqrt() / 2.0);
            jx[(i + 1, i)] = cr(raise);
            jx[(i, i + 1)] = cr(raise);
            jy[(i + 1, i)] = c(T::zero(), -raise);
            jy[(i, i + 1)] = c(T::zero(), raise);
        }
    }
    Ok(SpinOperators { dim: d, jx, jy, jz })
}

/// `exp(-i angle (axis · J))`.
pub fn rotation_unitary<T: Real>(d: usize, axis: [T; 3], angle: T) -> Result<Unitary<T>> {
    let ops = angular_momentum_ops::<T>(d)?;
    let norm = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    let deviation = (norm - T::one()).abs().f64();
    if deviation > T::INPUT_TOL {
        return Err(Error::NotNormalized { what: "rotation axis", deviation });
    }
    let g = ops.dot([axis[0] * angle, axis[1] * angle, axis[2] * angle]);
    Ok(Unitary { mat: linalg::expm_minus_i(&g) })
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Spin-j representation of the two-level unitary `[[a, -b*], [b, a*]]`.
///
/// Entry `(r, s)` (0-based, both ordered by increasing `m`) is a sum over `q` of
/// `sqrt(C(r,q) C(s,q) C(n-r, s-q) C(n-s, r-q)) a^(n-r-s+q) a*^q b^(r-q) (-b*)^(s-q)`
/// with `n = d - 1`, `q` running from `max(0, r+s-n)` to `min(r, s)`. Column `s` is the
/// symmetrized image of `n - s` down spins and `s` up spins, so `d = 2` returns the
/// input matrix exactly and the map is a group homomorphism.
pub fn lift_unitary<T: Real>(a: Complex<T>, b: Complex<T>, d: usize) -> Result<Unitary<T>> {
    check_dim(d)?;
    let deviation = (a.norm_sqr() + b.norm_sqr() - T::one()).abs().f64();
    if deviation > T::INPUT_TOL {
        return Err(Error::NotNormalized { what: "SU(2) pair (a, b)", deviation });
    }
    let n = d - 1;
    let ac = a.conj();
    let mbc = -b.conj();
    let mat = DMatrix::from_fn(d, d, |r, s| {
        let q_min = (r + s).saturating_sub(n);
        let q_max = r.min(s);
        let mut sum = Complex::new(T::zero(), T::zero());
        for q in q_min..=q_max {
            let coeff = (binomial(r, q) * binomial(s, q) * binomial(n - r, s - q) * binomial(n - s, r - q)).sqrt();
            let term =
                a.powu((n + q - r - s) as u32) * ac.powu(q as u32) * b.powu((r - q) as u32) * mbc.powu((s - q) as u32);
            sum += term * cr(T::lit(coeff));
        }
        sum
    });
    Ok(Unitary { mat })
}

/// Analytic named states. Labels: `D`, `u`, `d` (only for d = 3), or an `m` value such as
/// `0`, `+1`, `-1`, `+1/2`, `-3/2`.
pub fn named_state<T: Real>(d: usize, name: &str) -> Result<StateVector<T>> {
    check_dim(d)?;
    let unknown = || Error::UnknownState { label: name.to_string(), dim: d };
    let h = T::lit(0.5);
    let r = T::lit(std::f64::consts::FRAC_1_SQRT_2);
    let amps: [T; 3] = match name {
        // (|-1>, |0>, |+1>)
        "D" => [-r, T::zero(), r],
        "u" => [h, r, h],
        "d" => [h, -r, h],
        _ => {
            let m = parse_m(name).ok_or_else(unknown)?;
            let j = (d as f64 - 1.0) / 2.0;
            let index = m + j;
            if index < -1e-9 || index > 2.0 * j + 1e-9 || (index - index.round()).abs() > 1e-9 {
                return Err(unknown());
            }
            return StateVector::basis(d, index.round() as usize);
        }
    };
    if d != 3 {
        return Err(unknown());
    }
    StateVector::new(CVector::from_iterator(3, amps.into_iter().map(cr)))
}

fn parse_m(label: &str) -> Option<f64> {
    let body = label.trim().trim_start_matches("m=");
    let (sign, rest) = match body.as_bytes().first()? {
        b'+' => (1.0, &body[1..]),
        b'-' => (-1.0, &body[1..]),
        _ => (1.0, body),
    };
    let value = match rest.split_once('/') {
        Some((num, den)) => num.parse::<f64>().ok()? / den.parse::<f64>().ok()?,
        None => rest.parse::<f64>().ok()?,
    };
    value.is_finite().then_some(sign * value)
}

/// `|<φ|ψ>|²`.
pub fn state_fidelity<T: Real>(psi: &StateVector<T>, phi: &StateVector<T>) -> Result<T> {
    Ok(psi.inner(phi)?.norm_sqr().min(T::one()))
}
