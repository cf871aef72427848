//! The online update: one singleton per point, then pruning and merging
//! to stay within the structure budget.

use std::fmt;

use thiserror::Error;

use crate::footprint::{DecayRates, Footprint, InvalidDecay};
use crate::linalg::Vector;
use crate::typicality::{
    distance_from_typicalities, nlt_from_typicality, Fuzzifier, InvalidFuzzifier, Structure,
};
use crate::union::fuse;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpcError {
    #[error("point has dimension {found}, model expects {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("point contains a non-finite coordinate")]
    NonFinite,
    #[error("point has no coordinates")]
    EmptyPoint,
    #[error("unknown structure {0}")]
    UnknownIdentifier(StructureId),
    #[error("cannot merge structure {0} with itself")]
    SelfMerge(StructureId),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

impl From<InvalidFuzzifier> for SpcError {
    fn from(e: InvalidFuzzifier) -> Self {
        SpcError::InvalidParams(e.to_string())
    }
}

impl From<InvalidDecay> for SpcError {
    fn from(e: InvalidDecay) -> Self {
        SpcError::InvalidParams(e.to_string())
    }
}

/// Algorithm parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpcParams {
    /// Structure budget `N`.
    pub max_structures: usize,
    pub rates: DecayRates,
    pub fuzzifier: Fuzzifier,
    /// Structures whose weight drops below this are pruned.
    pub w_min: f64,
    /// A pruned structure is merged into its best host only when its mean's
    /// negative log typicality there is below this; otherwise it is deleted.
    pub nlt_max: f64,
    /// DBSCAN radius on the structure distance.
    pub epsilon: f64,
    /// DBSCAN density threshold, counting the item itself.
    pub min_pts: usize,
}

impl SpcParams {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        max_structures: usize,
        gamma: f64,
        beta: f64,
        m: f64,
        w_min: f64,
        nlt_max: f64,
        epsilon: f64,
        min_pts: usize,
    ) -> Result<Self, SpcError> {
        let p = SpcParams {
            max_structures,
            rates: DecayRates::new(gamma, beta)?,
            fuzzifier: Fuzzifier::new(m)?,
            w_min,
            nlt_max,
            epsilon,
            min_pts,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), SpcError> {
        let bad = |msg: String| Err(SpcError::InvalidParams(msg));
        if self.max_structures < 2 {
            return bad(format!("structure budget must be at least 2, got {}", self.max_structures));
        }
        if !(self.w_min > 0.0 && self.w_min < 1.0) {
            return bad(format!("w_min must lie in (0, 1), got {}", self.w_min));
        }
        if !(self.nlt_max > 0.0 && self.nlt_max.is_finite()) {
            return bad(format!("nlt_max must be positive, got {}", self.nlt_max));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad(format!("epsilon must lie in (0, 1), got {}", self.epsilon));
        }
        if self.min_pts == 0 {
            return bad("min_pts must be at least 1".to_string());
        }
        Ok(())
    }

    fn preset(n: usize, gamma: f64, beta: f64, m: f64) -> Self {
        SpcParams::new(n, gamma, beta, m, 0.01, 3.0, 0.95, 2).expect("preset parameters are valid")
    }

    /// Stationary 2-D benchmark settings: `N = 30`, no decay, `m = 1.5`.
    pub fn aggregation() -> Self {
        Self::preset(30, 0.0, 0.0, 1.5)
    }

    /// Drifting-stream settings: `N = 30`, `γ = 0.1`, `β = 0.05`, `m = 1.4`.
    pub fn sine() -> Self {
        Self::preset(30, 0.1, 0.05, 1.4)
    }

    /// High-dimensional settings: `N = 50`, no decay, `m = 1.5`.
    pub fn high_dim() -> Self {
        Self::preset(50, 0.0, 0.0, 1.5)
    }

    /// Overlapping-cluster settings, identical to [`SpcParams::aggregation`].
    pub fn overlapping() -> Self {
        Self::preset(30, 0.0, 0.0, 1.5)
    }
}

impl Default for SpcParams {
    fn default() -> Self {
        Self::aggregation()
    }
}

/// Stable identifier of a structure. Merges produce a fresh identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StructureId(pub u64);

impl fmt::Display for StructureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Diagnostics {
    /// Every merge, whether triggered by pruning or by the budget.
    pub merges: u64,
    /// Low-weight structures removed, by merging or deletion.
    pub prunes: u64,
    /// Prunes that were merged into a host instead of deleted.
    pub prune_merges: u64,
    pub deletions: u64,
    /// Merges whose covariance union failed and kept the pooled spread.
    pub cu_fallbacks: u64,
    /// Typicality evaluations that failed numerically and counted as zero.
    pub typicality_failures: u64,
    /// Total age of deleted structures.
    pub deleted_age: u64,
}

#[derive(Debug, Clone)]
struct Entry {
    id: StructureId,
    footprint: Footprint,
    view: Structure,
}

/// The bounded structure store plus the stream clock.
///
/// Entries are kept in ascending identifier order. `affinity[i][j]` caches
/// the typicality of entry `j`'s mean in entry `i`.
#[derive(Debug, Clone)]
pub struct SpcModel {
    params: SpcParams,
    dim: Option<usize>,
    entries: Vec<Entry>,
    affinity: Vec<Vec<f64>>,
    next_id: u64,
    clock: u64,
    diagnostics: Diagnostics,
}

impl SpcModel {
    pub fn new(params: SpcParams) -> Result<Self, SpcError> {
        params.validate()?;
        Ok(SpcModel {
            params,
            dim: None,
            entries: Vec::new(),
            affinity: Vec::new(),
            next_id: 0,
            clock: 0,
            diagnostics: Diagnostics::default(),
        })
    }

    pub fn params(&self) -> &SpcParams {
        &self.params
    }

    pub fn dim(&self) -> Option<usize> {
        self.dim
    }

    /// Number of points consumed.
    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub fn diagnostics(&self) -> Diagnostics {
        self.diagnostics
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self) -> Vec<StructureId> {
        self.entries.iter().map(|e| e.id).collect()
    }

    pub fn footprint(&self, id: StructureId) -> Option<&Footprint> {
        self.index_of(id).map(|i| &self.entries[i].footprint)
    }

    pub fn structure(&self, id: StructureId) -> Option<&Structure> {
        self.index_of(id).map(|i| &self.entries[i].view)
    }

    /// Normalized structures in identifier order.
    pub fn snapshot(&self) -> Vec<(StructureId, Structure)> {
        self.entries
            .iter()
            .map(|e| (e.id, e.view.clone()))
            .collect()
    }

    /// Borrowing variant of [`SpcModel::snapshot`].
    pub fn structures(&self) -> impl Iterator<Item = (StructureId, &Structure)> {
        self.entries.iter().map(|e| (e.id, &e.view))
    }

    /// Structure distance between the entries at two positions, from the
    /// typicality cache.
    pub(crate) fn cached_distance(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        distance_from_typicalities(self.affinity[i][j], self.affinity[j][i])
    }

    fn index_of(&self, id: StructureId) -> Option<usize> {
        self.entries.binary_search_by_key(&id, |e| e.id).ok()
    }

    fn typicality_of(&mut self, s: &Structure, x: &Vector) -> f64 {
        match s.typicality(x, self.params.fuzzifier) {
            Ok(u) => u,
            Err(_) => {
                self.diagnostics.typicality_failures += 1;
                0.0
            }
        }
    }

    fn push_entry(&mut self, footprint: Footprint) -> StructureId {
        let id = StructureId(self.next_id);
        self.next_id += 1;
        let view = footprint.normalize(self.params.rates);
        let mut row = Vec::with_capacity(self.entries.len() + 1);
        let mut col = Vec::with_capacity(self.entries.len());
        for i in 0..self.entries.len() {
            let other = self.entries[i].view.clone();
            row.push(self.typicality_of(&view, other.mean()));
            col.push(self.typicality_of(&other, view.mean()));
        }
        row.push(1.0);
        for (cached, u) in self.affinity.iter_mut().zip(col) {
            cached.push(u);
        }
        self.affinity.push(row);
        self.entries.push(Entry {
            id,
            footprint,
            view,
        });
        id
    }

    fn remove_at(&mut self, idx: usize) -> Entry {
        self.affinity.remove(idx);
        for row in &mut self.affinity {
            row.remove(idx);
        }
        self.entries.remove(idx)
    }

    fn check_point(&self, x: &[f64]) -> Result<(), SpcError> {
        if x.is_empty() {
            return Err(SpcError::EmptyPoint);
        }
        if let Some(d) = self.dim {
            if x.len() != d {
                return Err(SpcError::DimensionMismatch {
                    expected: d,
                    found: x.len(),
                });
            }
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(SpcError::NonFinite);
        }
        Ok(())
    }

    /// Consumes one stream point.
    ///
    /// The point becomes its own structure. While the store is within
    /// budget nothing else happens. Past the budget every structure's weight
    /// absorbs the point's typicality, structures below `w_min` are merged
    /// into their best host or deleted (lowest weight first), and if the
    /// store is still too large the closest pair is merged.
    pub fn update(&mut self, x: &[f64]) -> Result<(), SpcError> {
        self.check_point(x)?;
        self.dim.get_or_insert(x.len());
        let point = Vector::from_column_slice(x);
        self.push_entry(Footprint::singleton(&point));
        self.clock += 1;

        if self.entries.len() <= self.params.max_structures {
            return Ok(());
        }

        let rates = self.params.rates;
        for i in 0..self.entries.len() {
            let view = self.entries[i].view.clone();
            let u = self.typicality_of(&view, &point);
            let entry = &mut self.entries[i];
            entry.footprint.update_weight(u, rates);
            let w = entry.footprint.weight(rates);
            entry.view.set_weight(w);
        }

        self.prune();

        if self.entries.len() > self.params.max_structures {
            if let Some((i, j)) = self.closest_pair() {
                let (a, b) = (self.entries[i].id, self.entries[j].id);
                self.merge_structures(a, b)?;
            }
        }
        Ok(())
    }

    fn prune(&mut self) {
        let w_min = self.params.w_min;
        loop {
            let candidate = self
                .entries
                .iter()
                .enumerate()
                .filter(|(_, e)| e.view.weight() < w_min)
                .min_by(|(_, a), (_, b)| a.view.weight().total_cmp(&b.view.weight()))
                .map(|(i, _)| i);
            let Some(i) = candidate else { break };
            if self.entries.len() == 1 {
                break;
            }
            self.diagnostics.prunes += 1;
            // best host maximizes the typicality of the pruned mean
            let host = (0..self.entries.len())
                .filter(|&j| j != i)
                .max_by(|&a, &b| {
                    self.affinity[a][i]
                        .total_cmp(&self.affinity[b][i])
                        .then(b.cmp(&a))
                })
                .expect("at least two structures");
            let nlt = nlt_from_typicality(self.affinity[host][i]);
            if nlt < self.params.nlt_max {
                let (a, b) = (self.entries[host].id, self.entries[i].id);
                self.diagnostics.prune_merges += 1;
                self.merge_structures(a, b)
                    .expect("both structures are present");
            } else {
                let gone = self.remove_at(i);
                self.diagnostics.deletions += 1;
                self.diagnostics.deleted_age += gone.footprint.age();
            }
        }
    }

    /// Positions of the pair with the smallest structure distance, lowest
    /// identifiers first on ties.
    fn closest_pair(&self) -> Option<(usize, usize)> {
        let n = self.entries.len();
        let mut best: Option<(usize, usize, f64)> = None;
        for i in 0..n {
            for j in i + 1..n {
                let d = self.cached_distance(i, j);
                if best.is_none_or(|(_, _, b)| d < b) {
                    best = Some((i, j, d));
                }
            }
        }
        best.map(|(i, j, _)| (i, j))
    }

    /// Replaces two structures with their merge and returns the new
    /// identifier. The older structure (larger age, lower identifier on
    /// ties) leads the merge.
    pub fn merge_structures(
        &mut self,
        a: StructureId,
        b: StructureId,
    ) -> Result<StructureId, SpcError> {
        if a == b {
            return Err(SpcError::SelfMerge(a));
        }
        let ia = self.index_of(a).ok_or(SpcError::UnknownIdentifier(a))?;
        let ib = self.index_of(b).ok_or(SpcError::UnknownIdentifier(b))?;
        let (fa, fb) = (&self.entries[ia].footprint, &self.entries[ib].footprint);
        let a_leads = fa.age() > fb.age() || (fa.age() == fb.age() && a < b);
        let (older, newer) = if a_leads { (fa, fb) } else { (fb, fa) };
        let fusion = fuse(older, newer, self.params.rates, true).map_err(|_| {
            SpcError::DimensionMismatch {
                expected: older.dim(),
                found: newer.dim(),
            }
        })?;
        if fusion.fell_back {
            self.diagnostics.cu_fallbacks += 1;
        }
        self.diagnostics.merges += 1;
        let (hi, lo) = if ia > ib { (ia, ib) } else { (ib, ia) };
        self.remove_at(hi);
        self.remove_at(lo);
        Ok(self.push_entry(fusion.footprint))
    }

    /// Sum of ages over live structures.
    pub fn total_age(&self) -> u64 {
        self.entries.iter().map(|e| e.footprint.age()).sum()
    }
}
