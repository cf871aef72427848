//! Dense symmetric positive-definite kernels.
//!
//! Everything that needs `Σ⁻¹` goes through a Cholesky factor and triangular
//! solves; nothing in this crate forms an explicit inverse.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use thiserror::Error;

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Relative diagonal jitter used when a factorization fails.
pub const REGULARIZATION: f64 = 1e-9;

const EIGEN_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum LinalgError {
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("symmetric eigensolver did not converge")]
    NoConvergence,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

/// A lower-triangular Cholesky factor `L` with `L·Lᵀ = A`.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    l: Matrix,
}

impl CholeskyFactor {
    pub fn l(&self) -> &Matrix {
        &self.l
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    /// Solves `L·y = b`.
    pub fn solve_lower(&self, b: &Vector) -> Vector {
        self.l
            .solve_lower_triangular(b)
            .expect("cholesky factor has a positive diagonal")
    }

    /// Solves `L·Y = B` column by column.
    pub fn solve_lower_mat(&self, b: &Matrix) -> Matrix {
        self.l
            .solve_lower_triangular(b)
            .expect("cholesky factor has a positive diagonal")
    }

    /// `vᵀ A⁻¹ v` as the squared norm of `L⁻¹ v`.
    pub fn quad_form_inv(&self, v: &Vector) -> f64 {
        self.solve_lower(v).norm_squared()
    }
}

fn check_square(a: &Matrix) -> Result<(), LinalgError> {
    if a.nrows() != a.ncols() {
        return Err(LinalgError::DimensionMismatch {
            expected: a.nrows(),
            found: a.ncols(),
        });
    }
    Ok(())
}

/// Plain Cholesky factorization, no regularization.
pub fn cholesky(a: &Matrix) -> Result<CholeskyFactor, LinalgError> {
    check_square(a)?;
    if a.iter().any(|v| !v.is_finite()) {
        return Err(LinalgError::NotPositiveDefinite);
    }
    let chol = Cholesky::<f64, Dyn>::new(a.clone()).ok_or(LinalgError::NotPositiveDefinite)?;
    let l = chol.unpack();
    if l.diagonal().iter().any(|&d| d <= 0.0 || !d.is_finite()) {
        return Err(LinalgError::NotPositiveDefinite);
    }
    Ok(CholeskyFactor { l })
}

/// The diagonal jitter `λ·(trace(A)/dim + 1e-30)` applied on a failed
/// factorization.
pub fn jitter(a: &Matrix) -> f64 {
    let dim = a.nrows().max(1) as f64;
    REGULARIZATION * (a.trace().abs() / dim + 1e-30)
}

/// Cholesky with a single regularized retry.
///
/// Well-conditioned inputs are factored exactly as given; only a failed
/// attempt gets `jitter(a)` added to the diagonal.
pub fn regularized_cholesky(a: &Matrix) -> Result<CholeskyFactor, LinalgError> {
    match cholesky(a) {
        Ok(f) => Ok(f),
        Err(LinalgError::NotPositiveDefinite) => {
            let mut b = a.clone();
            let rho = jitter(a);
            for i in 0..b.nrows() {
                b[(i, i)] += rho;
            }
            cholesky(&b)
        }
        Err(e) => Err(e),
    }
}

/// Symmetric eigendecomposition with eigenvalues in descending order.
///
/// Returns `(Q, Λ)` with orthonormal eigenvectors in the columns of `Q`.
pub fn sym_eigen(a: &Matrix) -> Result<(Matrix, Vector), LinalgError> {
    check_square(a)?;
    let n = a.nrows();
    if n == 0 {
        return Ok((Matrix::zeros(0, 0), Vector::zeros(0)));
    }
    let sym = symmetrized(a);
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, EIGEN_MAX_ITER)
        .ok_or(LinalgError::NoConvergence)?;
    let mut order: Vec<usize> = (0..n).collect();
    // stable: equal eigenvalues keep the solver's order
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .partial_cmp(&eig.eigenvalues[i])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = Vector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut q = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        q.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok((q, values))
}

/// `(x − μ)ᵀ Σ⁻¹ (x − μ)` through a Cholesky solve.
pub fn mahalanobis_sq(x: &Vector, mu: &Vector, sigma: &Matrix) -> Result<f64, LinalgError> {
    if x.len() != mu.len() {
        return Err(LinalgError::DimensionMismatch {
            expected: mu.len(),
            found: x.len(),
        });
    }
    if sigma.nrows() != mu.len() {
        return Err(LinalgError::DimensionMismatch {
            expected: mu.len(),
            found: sigma.nrows(),
        });
    }
    let factor = regularized_cholesky(sigma)?;
    Ok(factor.quad_form_inv(&(x - mu)))
}

/// True iff the smallest eigenvalue of `a` is at least `-tol`.
pub fn is_psd(a: &Matrix, tol: f64) -> bool {
    match sym_eigen(a) {
        Ok((_, values)) => values.iter().all(|&v| v >= -tol),
        Err(_) => false,
    }
}

/// `(A + Aᵀ)/2`.
pub fn symmetrized(a: &Matrix) -> Matrix {
    (a + a.transpose()) * 0.5
}

/// Largest absolute asymmetry relative to the largest entry.
pub fn asymmetry(a: &Matrix) -> f64 {
    let scale = a.amax().max(f64::MIN_POSITIVE);
    (a - a.transpose()).amax() / scale
}

/// `‖A − B‖_F / ‖B‖_F`, falling back to the absolute error when `B = 0`.
pub fn rel_frobenius(a: &Matrix, b: &Matrix) -> f64 {
    let denom = b.norm();
    let diff = (a - b).norm();
    if denom > 0.0 {
        diff / denom
    } else {
        diff
    }
}
