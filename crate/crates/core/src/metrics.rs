//! External clustering quality: purity and normalized mutual information.

use std::collections::HashMap;
use std::hash::Hash;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    #[error("prediction has {pred} entries but truth has {truth}")]
    LengthMismatch { pred: usize, truth: usize },
    #[error("no points to score")]
    Empty,
}

/// Counts of points per (predicted cluster, true class) pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Contingency {
    counts: Vec<Vec<u64>>,
    n: u64,
}

fn intern<T: Hash + Eq + Copy>(xs: &[T]) -> (Vec<usize>, usize) {
    let mut ids = HashMap::new();
    let dense = xs
        .iter()
        .map(|x| {
            let next = ids.len();
            *ids.entry(*x).or_insert(next)
        })
        .collect();
    (dense, ids.len())
}

impl Contingency {
    pub fn new<P, T>(pred: &[P], truth: &[T]) -> Result<Self, MetricsError>
    where
        P: Hash + Eq + Copy,
        T: Hash + Eq + Copy,
    {
        if pred.len() != truth.len() {
            return Err(MetricsError::LengthMismatch {
                pred: pred.len(),
                truth: truth.len(),
            });
        }
        if pred.is_empty() {
            return Err(MetricsError::Empty);
        }
        let (p, rows) = intern(pred);
        let (t, cols) = intern(truth);
        let mut counts = vec![vec![0; cols]; rows];
        for (i, j) in p.into_iter().zip(t) {
            counts[i][j] += 1;
        }
        Ok(Contingency {
            counts,
            n: pred.len() as u64,
        })
    }

    /// Rows are predicted clusters, columns true classes.
    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn purity(&self) -> f64 {
        let hits: u64 = self
            .counts
            .iter()
            .map(|row| row.iter().copied().max().unwrap_or(0))
            .sum();
        hits as f64 / self.n as f64
    }

    pub fn nmi(&self) -> f64 {
        let n = self.n as f64;
        let rows: Vec<f64> = self.counts.iter().map(|r| r.iter().sum::<u64>() as f64).collect();
        let cols: Vec<f64> = (0..self.counts[0].len())
            .map(|j| self.counts.iter().map(|r| r[j]).sum::<u64>() as f64)
            .collect();
        let entropy = |marg: &[f64]| -> f64 {
            marg.iter()
                .filter(|&&c| c > 0.0)
                .map(|&c| -(c / n) * (c / n).ln())
                .sum()
        };
        let (h_pred, h_truth) = (entropy(&rows), entropy(&cols));
        if h_pred == 0.0 || h_truth == 0.0 {
            // a single-cluster side only matches a single-cluster other side
            return if rows.len() == 1 && cols.len() == 1 { 1.0 } else { 0.0 };
        }
        let mut mi = 0.0;
        for (i, row) in self.counts.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                if c > 0 {
                    let c = c as f64;
                    mi += (c / n) * (c * n / (rows[i] * cols[j])).ln();
                }
            }
        }
        (mi / (h_pred * h_truth).sqrt()).clamp(0.0, 1.0)
    }
}

/// Fraction of points whose cluster's majority class is their own.
pub fn purity<P, T>(pred: &[P], truth: &[T]) -> Result<f64, MetricsError>
where
    P: Hash + Eq + Copy,
    T: Hash + Eq + Copy,
{
    Ok(Contingency::new(pred, truth)?.purity())
}

/// Mutual information normalized by the geometric mean of the entropies.
pub fn nmi<P, T>(pred: &[P], truth: &[T]) -> Result<f64, MetricsError>
where
    P: Hash + Eq + Copy,
    T: Hash + Eq + Copy,
{
    Ok(Contingency::new(pred, truth)?.nmi())
}
