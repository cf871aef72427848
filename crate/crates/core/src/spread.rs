//! Structure covariances stored as an isotropic background plus a
//! correction confined to a subspace:
//!
//! ```text
//! Σ = iso·I + B·K·Bᵀ
//! ```
//!
//! `B` is `d×k` with orthonormal columns and `K` is a symmetric `k×k` core.
//! Streaming structures start from the identity and every merge only touches
//! the span of a few mean offsets, so `k` stays far below `d` on
//! high-dimensional streams. All products, solves and unions run on the
//! `k×k` core. In low dimension the basis simply fills up to `k = d`.

use crate::linalg::{self, CholeskyFactor, LinalgError, Matrix, Vector};

/// Columns whose residual after orthogonalization falls below this are
/// treated as already spanned.
const SPAN_TOL: f64 = 1e-10;

/// Core eigenvalues below this fraction of the matrix scale are dropped.
const COMPRESS_TOL: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq)]
pub struct Spread {
    iso: f64,
    basis: Matrix,
    core: Matrix,
}

impl Spread {
    pub fn identity(dim: usize) -> Self {
        Self::isotropic(dim, 1.0)
    }

    pub fn isotropic(dim: usize, iso: f64) -> Self {
        Spread {
            iso,
            basis: Matrix::zeros(dim, 0),
            core: Matrix::zeros(0, 0),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self::isotropic(dim, 0.0)
    }

    /// Wraps a dense symmetric matrix. The result uses the standard basis
    /// and no isotropic part.
    pub fn from_dense(sigma: &Matrix) -> Self {
        let d = sigma.nrows();
        Spread {
            iso: 0.0,
            basis: Matrix::identity(d, d),
            core: linalg::symmetrized(sigma),
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    /// Number of basis directions carrying a correction.
    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    pub fn iso(&self) -> f64 {
        self.iso
    }

    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    pub fn core(&self) -> &Matrix {
        &self.core
    }

    pub fn to_dense(&self) -> Matrix {
        let d = self.dim();
        let mut out = Matrix::identity(d, d) * self.iso;
        if self.rank() > 0 {
            out += &self.basis * &self.core * self.basis.transpose();
        }
        linalg::symmetrized(&out)
    }

    pub fn trace(&self) -> f64 {
        self.iso * self.dim() as f64 + self.core.trace()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Spread {
            iso: self.iso * c,
            basis: self.basis.clone(),
            core: &self.core * c,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.iso.is_finite() && self.core.iter().all(|v| v.is_finite())
    }

    /// `Σ + c·vvᵀ`.
    pub fn add_outer(&self, v: &Vector, c: f64) -> Self {
        assert_eq!(v.len(), self.dim(), "outer product dimension");
        if v.iter().all(|&x| x == 0.0) || c == 0.0 {
            return self.clone();
        }
        let basis = union_basis(&[&self.basis], &[v]);
        let mut core = lift_core(&self.core, &self.basis, &basis);
        let coords = basis.transpose() * v;
        core += &coords * coords.transpose() * c;
        Spread {
            iso: self.iso,
            basis,
            core: linalg::symmetrized(&core),
        }
    }

    /// `a·Σ₁ + b·Σ₂`.
    pub fn lin_comb(a: f64, s1: &Spread, b: f64, s2: &Spread) -> Spread {
        assert_eq!(s1.dim(), s2.dim(), "spread dimension");
        let basis = union_basis(&[&s1.basis, &s2.basis], &[]);
        let core = lift_core(&s1.core, &s1.basis, &basis) * a
            + lift_core(&s2.core, &s2.basis, &basis) * b;
        Spread {
            iso: a * s1.iso + b * s2.iso,
            basis,
            core: linalg::symmetrized(&core),
        }
        .compressed()
    }

    /// The restriction `Wᵀ Σ W` onto an orthonormal `W` whose span contains
    /// this spread's basis.
    pub fn restrict(&self, w: &Matrix) -> Matrix {
        let k = w.ncols();
        let mut out = Matrix::identity(k, k) * self.iso;
        if self.rank() > 0 {
            out += lift_core(&self.core, &self.basis, w);
        }
        linalg::symmetrized(&out)
    }

    /// Builds `iso·I + W·(R − iso·I)·Wᵀ` from a full restriction `R` onto `W`.
    pub fn from_restriction(iso: f64, w: &Matrix, restricted: &Matrix) -> Spread {
        let k = w.ncols();
        let core = restricted - Matrix::identity(k, k) * iso;
        Spread {
            iso,
            basis: w.clone(),
            core: linalg::symmetrized(&core),
        }
        .compressed()
    }

    /// Drops core directions that carry no correction.
    pub fn compressed(self) -> Spread {
        let k = self.rank();
        if k == 0 {
            return self;
        }
        let Ok((q, values)) = linalg::sym_eigen(&self.core) else {
            return self;
        };
        let scale = values
            .iter()
            .fold(self.iso.abs(), |acc, v| acc.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        let keep: Vec<usize> = (0..k)
            .filter(|&i| values[i].abs() > COMPRESS_TOL * scale)
            .collect();
        if keep.len() == k && k < self.dim() {
            return self;
        }
        let rotated = &self.basis * &q;
        let basis = Matrix::from_fn(self.dim(), keep.len(), |r, c| rotated[(r, keep[c])]);
        let core = Matrix::from_diagonal(&Vector::from_iterator(
            keep.len(),
            keep.iter().map(|&i| values[i]),
        ));
        Spread {
            iso: self.iso,
            basis,
            core,
        }
    }

    /// Factors `Σ` for repeated Mahalanobis evaluation. Retries once with the
    /// diagonal jitter of [`linalg::jitter`] on failure.
    pub fn factor(&self) -> Result<SpreadFactor, LinalgError> {
        match self.factor_with(0.0) {
            Ok(f) => Ok(f),
            Err(LinalgError::NotPositiveDefinite) => {
                let rho = linalg::REGULARIZATION
                    * (self.trace().abs() / self.dim().max(1) as f64 + 1e-30);
                self.factor_with(rho)
            }
            Err(e) => Err(e),
        }
    }

    fn factor_with(&self, rho: f64) -> Result<SpreadFactor, LinalgError> {
        let d = self.dim();
        let k = self.rank();
        let iso = self.iso + rho;
        let full = k >= d;
        if !full && !(iso > 0.0 && iso.is_finite()) {
            return Err(LinalgError::NotPositiveDefinite);
        }
        let block = &self.core + Matrix::identity(k, k) * iso;
        let chol = linalg::cholesky(&block)?;
        Ok(SpreadFactor {
            basis: self.basis.clone(),
            chol,
            iso,
            full,
        })
    }
}

/// Cholesky factor of the core block plus the isotropic complement.
#[derive(Debug, Clone)]
pub struct SpreadFactor {
    basis: Matrix,
    chol: CholeskyFactor,
    iso: f64,
    full: bool,
}

impl SpreadFactor {
    /// `vᵀ Σ⁻¹ v`.
    pub fn quad_form_inv(&self, v: &Vector) -> f64 {
        let a = self.basis.tr_mul(v);
        let inside = self.chol.quad_form_inv(&a);
        if self.full {
            return inside;
        }
        let residual = v - &self.basis * &a;
        inside + residual.norm_squared() / self.iso
    }
}

/// Embeds a core expressed in `from` coordinates into `to` coordinates,
/// `M·K·Mᵀ` with `M = toᵀ·from`.
fn lift_core(core: &Matrix, from: &Matrix, to: &Matrix) -> Matrix {
    let k = to.ncols();
    if from.ncols() == 0 {
        return Matrix::zeros(k, k);
    }
    let m = to.tr_mul(from);
    &m * core * m.transpose()
}

/// Orthonormal basis spanning the given orthonormal blocks and extra
/// vectors. The first block is kept verbatim; later columns are added by
/// two-pass Gram–Schmidt and dropped when already spanned.
pub fn union_basis(blocks: &[&Matrix], extra: &[&Vector]) -> Matrix {
    let d = blocks
        .first()
        .map(|b| b.nrows())
        .or_else(|| extra.first().map(|v| v.len()))
        .unwrap_or(0);
    let mut cols: Vec<Vector> = Vec::new();
    let mut first = true;
    for block in blocks {
        for c in 0..block.ncols() {
            let col = block.column(c).into_owned();
            if first {
                cols.push(col);
            } else {
                push_orthogonal(&mut cols, col, d);
            }
        }
        first = false;
    }
    for v in extra {
        let norm = v.norm();
        if norm > 0.0 {
            push_orthogonal(&mut cols, (*v).clone() / norm, d);
        }
    }
    let mut out = Matrix::zeros(d, cols.len());
    for (i, c) in cols.iter().enumerate() {
        out.set_column(i, c);
    }
    out
}

fn push_orthogonal(cols: &mut Vec<Vector>, mut v: Vector, d: usize) {
    if cols.len() >= d {
        return;
    }
    let start = v.norm();
    if start == 0.0 {
        return;
    }
    for _ in 0..2 {
        for c in cols.iter() {
            let p = c.dot(&v);
            v.axpy(-p, c, 1.0);
        }
    }
    let n = v.norm();
    if n > SPAN_TOL * start {
        cols.push(v / n);
    }
}
