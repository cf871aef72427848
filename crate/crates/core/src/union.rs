//! Covariance union: a conservative covariance for two structures with
//! different means.
//!
//! Both covariances are first padded by the outer product of their mean's
//! offset from the fused mean. With `U₂ = L·Lᵀ` and the whitened
//! `L⁻¹·U₁·L⁻ᵀ = Q·Λ·Qᵀ`, the union is
//!
//! ```text
//! Σ = L·Q·max(Λ, I)·Qᵀ·Lᵀ
//! ```
//!
//! which dominates both padded inputs in the Loewner order. When `U₁ = U₂`
//! the whitened matrix is the identity and the union returns the input.

use crate::footprint::{decay_norm, merge_footprints, DecayRates, Footprint, FootprintError};
use crate::linalg::{self, LinalgError, Matrix, Vector};
use crate::spread::{union_basis, Spread};

/// `Σ + (μ_c − μ)(μ_c − μ)ᵀ`.
pub fn pad_covariance(sigma: &Matrix, mu: &Vector, mu_candidate: &Vector) -> Matrix {
    let delta = mu_candidate - mu;
    linalg::symmetrized(&(sigma + &delta * delta.transpose()))
}

/// Dense covariance union. `u2` is the side that gets factored.
pub fn covariance_union(u1: &Matrix, u2: &Matrix) -> Result<Matrix, LinalgError> {
    if u1.shape() != u2.shape() {
        return Err(LinalgError::DimensionMismatch {
            expected: u2.nrows(),
            found: u1.nrows(),
        });
    }
    let factor = linalg::regularized_cholesky(u2)?;
    // L⁻¹·U₁·L⁻ᵀ as two triangular solves
    let left = factor.solve_lower_mat(u1);
    let whitened = linalg::symmetrized(&factor.solve_lower_mat(&left.transpose()));
    let (q, values) = linalg::sym_eigen(&whitened)?;
    let lq = factor.l() * &q;
    let mut scaled = lq.clone();
    for (j, &lambda) in values.iter().enumerate() {
        scaled.column_mut(j).scale_mut(lambda.max(1.0));
    }
    Ok(linalg::symmetrized(&(scaled * lq.transpose())))
}

/// Covariance union on spreads.
///
/// Both inputs are block diagonal with respect to the span of their bases
/// and its complement, so the union splits into a dense union on that span
/// and `max(iso₁, iso₂)·I` on the complement.
pub fn spread_union(u1: &Spread, u2: &Spread) -> Result<Spread, LinalgError> {
    if u1.dim() != u2.dim() {
        return Err(LinalgError::DimensionMismatch {
            expected: u2.dim(),
            found: u1.dim(),
        });
    }
    let d = u2.dim();
    let w = union_basis(&[u2.basis(), u1.basis()], &[]);
    let k = w.ncols();
    let iso = if k < d {
        if u2.iso().is_nan() || u2.iso() <= 0.0 {
            return Err(LinalgError::NotPositiveDefinite);
        }
        u1.iso().max(u2.iso())
    } else {
        0.0
    };
    if k == 0 {
        return Ok(Spread::isotropic(d, iso));
    }
    let fused = covariance_union(&u1.restrict(&w), &u2.restrict(&w))?;
    Ok(Spread::from_restriction(iso, &w, &fused))
}

/// A fused mean and covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct FusedEstimate {
    pub mean: Vector,
    pub spread: Spread,
}

/// The merged footprint along with how its spread was obtained.
#[derive(Debug, Clone)]
pub struct Fusion {
    pub footprint: Footprint,
    pub estimate: FusedEstimate,
    /// Covariance union failed numerically and the pooled spread was kept.
    pub fell_back: bool,
}

/// Merges `older` and `newer`, replacing the pooled spread with the
/// covariance union of the padded spreads when `use_cu` is set. The older
/// structure's padded spread is the factored side.
pub fn fuse(
    older: &Footprint,
    newer: &Footprint,
    rates: DecayRates,
    use_cu: bool,
) -> Result<Fusion, FootprintError> {
    let pooled = merge_footprints(older, newer, rates)?;
    let gamma_total = decay_norm(pooled.age(), rates.gamma());
    let mean = pooled.mean(rates);
    let pooled_spread = pooled.scatter_acc().scaled(1.0 / gamma_total);
    if !use_cu {
        return Ok(Fusion {
            estimate: FusedEstimate {
                mean,
                spread: pooled_spread,
            },
            footprint: pooled,
            fell_back: false,
        });
    }

    let s_old = older.normalize(rates);
    let s_new = newer.normalize(rates);
    let u_old = s_old.spread().add_outer(&(&mean - s_old.mean()), 1.0);
    let u_new = s_new.spread().add_outer(&(&mean - s_new.mean()), 1.0);
    let (spread, fell_back) = match spread_union(&u_new, &u_old) {
        Ok(s) if s.is_finite() => (s, false),
        _ => (pooled_spread, true),
    };
    let footprint = Footprint::from_parts(
        pooled.mean_acc().clone(),
        spread.scaled(gamma_total),
        pooled.weight_acc(),
        pooled.age(),
        pooled.weight_age(),
    );
    Ok(Fusion {
        footprint,
        estimate: FusedEstimate { mean, spread },
        fell_back,
    })
}
