//! Possibilistic typicality under a Mahalanobis distance, its negative log,
//! and the two distances built on it.
//!
//! For a fuzzifier `m > 1` and squared distance `d²`,
//!
//! ```text
//! u = 1 / (1 + (d²)^(1/(m−1)))
//! ```
//!
//! Small `m` gives a sharp falloff, large `m` a gentle one. All logs are
//! natural logs.

use std::fmt;
use std::sync::OnceLock;

use thiserror::Error;

use crate::linalg::{self, LinalgError, Matrix, Vector};
use crate::spread::{Spread, SpreadFactor};

/// Exponentiated distance terms above this are treated as infinite.
pub const OVERFLOW_TERM: f64 = 1e300;

/// Stand-in for an infinite negative log typicality, roughly `−ln` of the
/// smallest normal double.
pub const NLT_CEILING: f64 = 709.0;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("fuzzifier must be finite and greater than 1, got {0}")]
pub struct InvalidFuzzifier(pub f64);

/// The fuzzifier `m`, always `> 1`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Fuzzifier(f64);

impl Fuzzifier {
    pub fn new(m: f64) -> Result<Self, InvalidFuzzifier> {
        if m.is_finite() && m > 1.0 {
            Ok(Fuzzifier(m))
        } else {
            Err(InvalidFuzzifier(m))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `(d²)^(1/(m−1))`, evaluated in log space. `None` on overflow.
    fn term(self, d_sq: f64) -> Option<f64> {
        let t = (d_sq.ln() / (self.0 - 1.0)).exp();
        (t <= OVERFLOW_TERM).then_some(t)
    }
}

impl fmt::Display for Fuzzifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Typicality for a squared (Mahalanobis) distance.
pub fn typicality_from_sq(d_sq: f64, m: Fuzzifier) -> f64 {
    if d_sq <= 0.0 {
        return 1.0;
    }
    match m.term(d_sq) {
        Some(t) => 1.0 / (1.0 + t),
        None => 0.0,
    }
}

/// Negative log typicality for a squared distance, `ln(1 + (d²)^(1/(m−1)))`.
pub fn nlt_from_sq(d_sq: f64, m: Fuzzifier) -> f64 {
    if d_sq <= 0.0 {
        return 0.0;
    }
    match m.term(d_sq) {
        Some(t) => t.ln_1p(),
        None => NLT_CEILING,
    }
}

/// `−ln u`, with `u = 0` mapped to [`NLT_CEILING`].
pub fn nlt_from_typicality(u: f64) -> f64 {
    if u <= 0.0 {
        NLT_CEILING
    } else {
        (-u.ln()).max(0.0)
    }
}

/// Euclidean typicality with scale `η`: the squared distance at which
/// typicality reaches one half.
pub fn typicality_spherical(d_sq: f64, eta: f64, m: Fuzzifier) -> f64 {
    typicality_from_sq(d_sq / eta, m)
}

pub fn typicality(
    x: &Vector,
    mu: &Vector,
    sigma: &Matrix,
    m: Fuzzifier,
) -> Result<f64, LinalgError> {
    Ok(typicality_from_sq(linalg::mahalanobis_sq(x, mu, sigma)?, m))
}

pub fn nlt(x: &Vector, mu: &Vector, sigma: &Matrix, m: Fuzzifier) -> Result<f64, LinalgError> {
    Ok(nlt_from_sq(linalg::mahalanobis_sq(x, mu, sigma)?, m))
}

/// A normalized structure: mean, spread, average typicality weight and age.
///
/// The Cholesky factor of the spread is computed on first use and cached.
#[derive(Debug, Clone)]
pub struct Structure {
    mean: Vector,
    spread: Spread,
    weight: f64,
    age: u64,
    factor: OnceLock<Result<SpreadFactor, LinalgError>>,
}

impl Structure {
    pub fn new(mean: Vector, spread: Spread, weight: f64, age: u64) -> Self {
        assert_eq!(mean.len(), spread.dim(), "mean/spread dimension");
        Structure {
            mean,
            spread,
            weight,
            age,
            factor: OnceLock::new(),
        }
    }

    pub fn from_dense(mean: Vector, sigma: &Matrix, weight: f64, age: u64) -> Self {
        Self::new(mean, Spread::from_dense(sigma), weight, age)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &Vector {
        &self.mean
    }

    pub fn spread(&self) -> &Spread {
        &self.spread
    }

    /// Dense covariance. Allocates `d×d`.
    pub fn sigma(&self) -> Matrix {
        self.spread.to_dense()
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub(crate) fn set_weight(&mut self, w: f64) {
        self.weight = w;
    }

    pub fn age(&self) -> u64 {
        self.age
    }

    fn factor(&self) -> Result<&SpreadFactor, LinalgError> {
        self.factor
            .get_or_init(|| self.spread.factor())
            .as_ref()
            .map_err(|e| *e)
    }

    pub fn mahalanobis_sq(&self, x: &Vector) -> Result<f64, LinalgError> {
        if x.len() != self.dim() {
            return Err(LinalgError::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(self.factor()?.quad_form_inv(&(x - &self.mean)))
    }

    pub fn typicality(&self, x: &Vector, m: Fuzzifier) -> Result<f64, LinalgError> {
        Ok(typicality_from_sq(self.mahalanobis_sq(x)?, m))
    }

    pub fn nlt(&self, x: &Vector, m: Fuzzifier) -> Result<f64, LinalgError> {
        Ok(nlt_from_sq(self.mahalanobis_sq(x)?, m))
    }
}

impl PartialEq for Structure {
    fn eq(&self, other: &Self) -> bool {
        self.mean == other.mean
            && self.spread == other.spread
            && self.weight == other.weight
            && self.age == other.age
    }
}

/// Symmetric structure distance `1 − u(μ₂ | s₁)·u(μ₁ | s₂)`.
pub fn structure_distance(s1: &Structure, s2: &Structure, m: Fuzzifier) -> Result<f64, LinalgError> {
    let a = s1.typicality(s2.mean(), m)?;
    let b = s2.typicality(s1.mean(), m)?;
    Ok(distance_from_typicalities(a, b))
}

/// `1 − a·b`; the product commutes, so the distance is exactly symmetric.
pub fn distance_from_typicalities(a: f64, b: f64) -> f64 {
    1.0 - a * b
}

/// Decision-region distance `1 − u(x | s)²`.
pub fn decision_distance(s: &Structure, x: &Vector, m: Fuzzifier) -> Result<f64, LinalgError> {
    let u = s.typicality(x, m)?;
    Ok(1.0 - u * u)
}
