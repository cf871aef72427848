//! Single-pass possibilistic clustering of data streams.
//!
//! A [`SpcModel`] summarizes an unbounded stream with at most `N`
//! Gaussian-like structures. Each point either becomes a new structure or is
//! absorbed through damped-window footprints and covariance-union merges.
//! Crisp clusters come from DBSCAN over a typicality-derived distance,
//! computed on demand.
//!
//! ```
//! use spc::{get_clustering, SpcModel, SpcParams};
//!
//! let mut model = SpcModel::new(SpcParams::aggregation()).unwrap();
//! for i in 0..200 {
//!     let x = (i % 2) as f64 * 50.0 + (i as f64 * 0.37).sin();
//!     model.update(&[x, (i as f64 * 0.11).cos()]).unwrap();
//! }
//! assert!(model.len() <= 30);
//! let labels = get_clustering(&model);
//! assert_eq!(labels.len(), model.len());
//! ```

pub mod data;
pub mod footprint;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod offline;
pub mod spread;
pub mod typicality;
pub mod union;

pub use footprint::{DecayRates, Footprint};
pub use metrics::{nmi, purity, Contingency};
pub use model::{Diagnostics, SpcError, SpcModel, SpcParams, StructureId};
pub use offline::{assign_points, get_clustering, Assignment, ClusterLabels};
pub use spread::Spread;
pub use typicality::{structure_distance, Fuzzifier, Structure};
