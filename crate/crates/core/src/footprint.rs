//! Damped-window sufficient statistics for a single structure.
//!
//! A point that arrived `a` steps before the newest one carries weight
//! `e^(−γ·a)` in the mean and spread and `e^(−β·a)` in the weight. The
//! footprint keeps the un-normalized sums and divides by the normalizers
//! `Γ` and `B` only when a [`Structure`] view is requested.

use thiserror::Error;

use crate::linalg::{self, Matrix, Vector};
use crate::spread::Spread;
use crate::typicality::{self, Fuzzifier, Structure};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum FootprintError {
    #[error("footprint dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("cannot build a footprint from an empty point list")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("decay rates must be finite and nonnegative (gamma = {gamma}, beta = {beta})")]
pub struct InvalidDecay {
    pub gamma: f64,
    pub beta: f64,
}

/// Per-step decay of the mean/spread (`gamma`) and of the weight (`beta`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayRates {
    gamma: f64,
    beta: f64,
}

impl DecayRates {
    pub fn new(gamma: f64, beta: f64) -> Result<Self, InvalidDecay> {
        let ok = |r: f64| r.is_finite() && r >= 0.0;
        if ok(gamma) && ok(beta) {
            Ok(DecayRates { gamma, beta })
        } else {
            Err(InvalidDecay { gamma, beta })
        }
    }

    /// No forgetting at all.
    pub fn none() -> Self {
        DecayRates {
            gamma: 0.0,
            beta: 0.0,
        }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// `Σ_{t=1..T} e^(−rate·(T−t))` in closed form.
///
/// Uses `(1 − e^(−rT)) / (1 − e^(−r))`, the same quantity as
/// `(e^r − e^(r(1−T))) / (e^r − 1)` but free of cancellation for tiny rates.
pub fn decay_norm(t: u64, rate: f64) -> f64 {
    if t == 0 {
        return 0.0;
    }
    if rate == 0.0 {
        return t as f64;
    }
    (-rate * t as f64).exp_m1() / (-rate).exp_m1()
}

/// Un-normalized damped sums for one structure.
#[derive(Debug, Clone, PartialEq)]
pub struct Footprint {
    mean_acc: Vector,
    scatter_acc: Spread,
    weight_acc: f64,
    age: u64,
    weight_age: u64,
}

impl Footprint {
    /// A brand-new structure for one point: mean `x`, identity spread,
    /// weight 1, age 1.
    pub fn singleton(x: &Vector) -> Self {
        Footprint {
            mean_acc: x.clone(),
            scatter_acc: Spread::identity(x.len()),
            weight_acc: 1.0,
            age: 1,
            weight_age: 1,
        }
    }

    /// Re-accumulates a normalized structure, treating its age as both the
    /// mean and the weight clock.
    pub fn from_structure(s: &Structure, rates: DecayRates) -> Self {
        let g = decay_norm(s.age(), rates.gamma);
        let b = decay_norm(s.age(), rates.beta);
        Footprint {
            mean_acc: s.mean() * g,
            scatter_acc: s.spread().scaled(g),
            weight_acc: s.weight() * b,
            age: s.age(),
            weight_age: s.age(),
        }
    }

    pub(crate) fn from_parts(
        mean_acc: Vector,
        scatter_acc: Spread,
        weight_acc: f64,
        age: u64,
        weight_age: u64,
    ) -> Self {
        Footprint {
            mean_acc,
            scatter_acc,
            weight_acc,
            age,
            weight_age,
        }
    }

    pub fn dim(&self) -> usize {
        self.mean_acc.len()
    }

    /// Number of stream points summarized (`T`).
    pub fn age(&self) -> u64 {
        self.age
    }

    /// Number of weight updates absorbed, the clock for `B`.
    pub fn weight_age(&self) -> u64 {
        self.weight_age
    }

    pub fn mean_acc(&self) -> &Vector {
        &self.mean_acc
    }

    pub fn scatter_acc(&self) -> &Spread {
        &self.scatter_acc
    }

    pub fn weight_acc(&self) -> f64 {
        self.weight_acc
    }

    pub fn mean(&self, rates: DecayRates) -> Vector {
        &self.mean_acc / decay_norm(self.age, rates.gamma)
    }

    pub fn weight(&self, rates: DecayRates) -> f64 {
        self.weight_acc / decay_norm(self.weight_age, rates.beta)
    }

    pub fn normalize(&self, rates: DecayRates) -> Structure {
        let g = decay_norm(self.age, rates.gamma);
        Structure::new(
            &self.mean_acc / g,
            self.scatter_acc.scaled(1.0 / g),
            self.weight(rates),
            self.age,
        )
    }

    /// Folds one typicality observation into the weight:
    /// `B·w ← e^(−β)·B·w + u`, advancing the weight clock by one.
    pub fn update_weight(&mut self, u: f64, rates: DecayRates) {
        let u = u.clamp(0.0, 1.0);
        self.weight_acc = (-rates.beta).exp() * self.weight_acc + u;
        self.weight_age += 1;
    }

    pub fn is_finite(&self) -> bool {
        self.mean_acc.iter().all(|v| v.is_finite())
            && self.scatter_acc.is_finite()
            && self.weight_acc.is_finite()
    }
}

/// Merges two footprints, `f1` playing the role of the earlier structure.
///
/// The spread is pooled (`e^(−γT₂)·S₁ + S₂`), which is only meaningful when
/// the two means agree; the streaming merge swaps in covariance union.
pub fn merge_footprints(
    f1: &Footprint,
    f2: &Footprint,
    rates: DecayRates,
) -> Result<Footprint, FootprintError> {
    if f1.dim() != f2.dim() {
        return Err(FootprintError::DimensionMismatch {
            left: f1.dim(),
            right: f2.dim(),
        });
    }
    let shift_mean = (-rates.gamma * f2.age as f64).exp();
    let shift_weight = (-rates.beta * f2.weight_age as f64).exp();
    Ok(Footprint {
        mean_acc: &f1.mean_acc * shift_mean + &f2.mean_acc,
        scatter_acc: Spread::lin_comb(shift_mean, &f1.scatter_acc, 1.0, &f2.scatter_acc),
        weight_acc: shift_weight * f1.weight_acc + f2.weight_acc,
        age: f1.age + f2.age,
        weight_age: f1.weight_age + f2.weight_age,
    })
}

/// Direct evaluation of the damped mean, spread and weight over an ordered
/// point list.
///
/// The spread uses the running mean at each step, and the weight averages
/// typicalities against the final mean and spread. Sums are evaluated term
/// by term in `O(T²·d)`, which makes this a reference for the incremental
/// paths rather than something to call on long streams.
pub fn batch_footprint(
    points: &[Vector],
    rates: DecayRates,
    m: Fuzzifier,
) -> Result<Structure, FootprintError> {
    let first = points.first().ok_or(FootprintError::Empty)?;
    let d = first.len();
    if let Some(bad) = points.iter().find(|p| p.len() != d) {
        return Err(FootprintError::DimensionMismatch {
            left: d,
            right: bad.len(),
        });
    }
    let big_t = points.len();
    let damped_mean = |upto: usize| -> Vector {
        let mut num = Vector::zeros(d);
        let mut den = 0.0;
        for (s, x) in points[..upto].iter().enumerate() {
            let w = (-rates.gamma * (upto - 1 - s) as f64).exp();
            num += x * w;
            den += w;
        }
        num / den
    };
    let mut gamma_sum = 0.0;
    let mut scatter = Matrix::zeros(d, d);
    for (t, x) in points.iter().enumerate() {
        let w = (-rates.gamma * (big_t - 1 - t) as f64).exp();
        let dev = x - damped_mean(t + 1);
        scatter += &dev * dev.transpose() * w;
        gamma_sum += w;
    }
    let mu = damped_mean(big_t);
    let sigma = linalg::symmetrized(&(scatter / gamma_sum));

    let mut beta_sum = 0.0;
    let mut weight = 0.0;
    for (t, x) in points.iter().enumerate() {
        let w = (-rates.beta * (big_t - 1 - t) as f64).exp();
        let u = typicality::typicality(x, &mu, &sigma, m).unwrap_or(0.0);
        weight += w * u;
        beta_sum += w;
    }
    Ok(Structure::from_dense(mu, &sigma, weight / beta_sum, big_t as u64))
}
