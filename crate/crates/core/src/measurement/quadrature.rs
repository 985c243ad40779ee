use nalgebra::{DMatrix, SymmetricEigen};

/// Gauss–Hermite rule for the standard normal weight: `E[f(Z)] ≈ Σ w_k f(x_k)`,
/// exact for polynomials of degree `< 2n`. Nodes from the Golub–Welsch eigenproblem.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    pub fn new(n: usize) -> Self {
        let n = n.max(1);
        let jacobi = DMatrix::from_fn(n, n, |i, j| if i.abs_diff(j) == 1 { (i.max(j) as f64).sqrt() } else { 0.0 });
        let eig = SymmetricEigen::new(jacobi);
        let mut pairs: Vec<(f64, f64)> =
            (0..n).map(|k| (eig.eigenvalues[k], eig.eigenvectors[(0, k)] * eig.eigenvectors[(0, k)])).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        Self { nodes: pairs.iter().map(|p| p.0).collect(), weights: pairs.iter().map(|p| p.1 / total).collect() }
    }

    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}
