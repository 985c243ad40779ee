//! Small dense complex linear algebra used throughout: Hermitian spectral
//! decomposition, exact exponentials of Hermitian generators, and
//! global-phase-insensitive comparisons.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex;

use crate::real::Real;

pub type CMatrix<T> = DMatrix<Complex<T>>;
pub type CVector<T> = DVector<Complex<T>>;

#[inline]
pub fn c<T: Real>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}

/// Modulus of a complex scalar (`Complex::norm` needs `num_traits::Float`).
#[inline]
pub fn cabs<T: Real>(z: Complex<T>) -> T {
    z.norm_sqr().sqrt()
}

#[inline]
pub fn cr<T: Real>(re: T) -> Complex<T> {
    Complex::new(re, T::zero())
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
///
/// Only the lower triangle is trusted by the solver, so the input is symmetrized first.
pub fn hermitian_eigen<T: Real>(h: &CMatrix<T>) -> (Vec<T>, CMatrix<T>) {
    let sym = (h + h.adjoint()) * cr(T::lit(0.5));
    let eig = SymmetricEigen::new(sym);
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, col| eig.eigenvectors[(r, order[col])]);
    (values, vectors)
}

/// `exp(-i G)` for Hermitian `G`, by spectral decomposition.
pub fn expm_minus_i<T: Real>(g: &CMatrix<T>) -> CMatrix<T> {
    let n = g.nrows();
    if n == 2 {
        return expm_minus_i_2x2(g);
    }
    let (values, v) = hermitian_eigen(g);
    let mut scaled = v.clone();
    for (k, lambda) in values.iter().enumerate() {
        let phase = Complex::new(lambda.cos(), -lambda.sin());
        for r in 0..n {
            scaled[(r, k)] *= phase;
        }
    }
    scaled * v.adjoint()
}

// Closed form for 2x2: G = g0 I + g.sigma, exp(-iG) = e^{-i g0}(cos|g| I - i sin|g| g^.sigma).
fn expm_minus_i_2x2<T: Real>(g: &CMatrix<T>) -> CMatrix<T> {
    let half = T::lit(0.5);
    let g00 = g[(0, 0)].re;
    let g11 = g[(1, 1)].re;
    let off = (g[(0, 1)] + g[(1, 0)].conj()) * cr(half);
    let g0 = (g00 + g11) * half;
    let gz = (g00 - g11) * half;
    let gx = off.re;
    let gy = -off.im;
    let norm = (gx * gx + gy * gy + gz * gz).sqrt();
    let (cosn, sinc) = if norm > T::zero() { (norm.cos(), norm.sin() / norm) } else { (T::one(), T::one()) };
    let global = Complex::new(g0.cos(), -g0.sin());
    let m00 = Complex::new(cosn, -sinc * gz);
    let m11 = Complex::new(cosn, sinc * gz);
    // -i sinc (gx sx + gy sy): sx+... off-diagonal (0,1) = gx - i gy
    let m01 = Complex::new(-sinc * gy, -sinc * gx);
    let m10 = Complex::new(sinc * gy, -sinc * gx);
    CMatrix::from_row_slice(2, 2, &[m00 * global, m01 * global, m10 * global, m11 * global])
}

pub fn commutator<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> CMatrix<T> {
    a * b - b * a
}

pub fn max_abs<T: Real>(m: &CMatrix<T>) -> T {
    m.iter().fold(T::zero(), |acc, z| acc.max(cabs(*z)))
}

/// Largest entry of `U†U - I`.
pub fn unitarity_deviation<T: Real>(u: &CMatrix<T>) -> T {
    let n = u.nrows();
    max_abs(&(u.adjoint() * u - CMatrix::<T>::identity(n, n)))
}

/// Best-aligned phase `e^{iφ}` such that `a ≈ e^{iφ} b`, from `tr(b† a)`.
pub fn relative_phase<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> Complex<T> {
    let overlap = (b.adjoint() * a).trace();
    let mag = cabs(overlap);
    if mag > T::zero() {
        overlap / cr(mag)
    } else {
        cr(T::one())
    }
}

/// Max-abs entry of `a - e^{iφ} b` with the phase chosen to maximize `|tr(a† b)|`.
pub fn phase_insensitive_distance<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> T {
    let phase = relative_phase(a, b);
    max_abs(&(a - b * phase))
}

pub fn vector_phase_distance<T: Real>(a: &CVector<T>, b: &CVector<T>) -> T {
    let overlap = b.dotc(a);
    let mag = cabs(overlap);
    let phase = if mag > T::zero() { overlap / cr(mag) } else { cr(T::one()) };
    (a - b * phase).iter().fold(T::zero(), |acc, z| acc.max(cabs(*z)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn truncated_series(g: &CMatrix<f64>) -> CMatrix<f64> {
        let n = g.nrows();
        let a = g * Complex::new(0.0, -1.0);
        let mut term = CMatrix::<f64>::identity(n, n);
        let mut sum = term.clone();
        for k in 1..60 {
            term = &term * &a * Complex::new(1.0 / k as f64, 0.0);
            sum += &term;
        }
        sum
    }

    #[test]
    fn spectral_exponential_matches_series() {
        let g = CMatrix::from_row_slice(
            3,
            3,
            &[
                cr(0.3),
                c(0.2, -0.7),
                c(0.1, 0.05),
                c(0.2, 0.7),
                cr(-0.4),
                c(-0.3, 0.2),
                c(0.1, -0.05),
                c(-0.3, -0.2),
                cr(1.1),
            ],
        );
        let d = max_abs(&(expm_minus_i(&g) - truncated_series(&g)));
        assert!(d < 1e-13, "{d}");
    }

    #[test]
    fn two_by_two_closed_form_matches_series() {
        let g = CMatrix::from_row_slice(2, 2, &[cr(0.7), c(-0.4, 1.3), c(-0.4, -1.3), cr(-0.2)]);
        let d = max_abs(&(expm_minus_i(&g) - truncated_series(&g)));
        assert!(d < 1e-13, "{d}");
        let zero = CMatrix::<f64>::zeros(2, 2);
        assert!(max_abs(&(expm_minus_i(&zero) - CMatrix::identity(2, 2))) == 0.0);
    }

    #[test]
    fn phase_distance_ignores_global_phase() {
        let u = expm_minus_i(&CMatrix::from_row_slice(2, 2, &[cr(0.1), cr(0.5), cr(0.5), cr(0.0)]));
        let v = &u * Complex::from_polar(1.0, 2.1);
        assert!(phase_insensitive_distance(&u, &v) < 1e-15);
        assert!(max_abs(&(&u - &v)) > 0.1);
    }
}
