//! Output tables. Numbers use the shortest round-trip formatting, so
//! identical runs produce identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;
use spc::data::LabeledPoint;
use spc::{ClusterLabels, Contingency, SpcModel, SpcParams};

use crate::config::{Output, RunConfig};
use crate::{emit_grid, grid_bounds, CliError, RunResult};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamsRecord {
    pub n: usize,
    pub gamma: f64,
    pub beta: f64,
    pub m: f64,
    pub epsilon: f64,
    pub w_min: f64,
    pub nlt_max: f64,
    pub min_pts: usize,
}

impl From<&SpcParams> for ParamsRecord {
    fn from(p: &SpcParams) -> Self {
        ParamsRecord {
            n: p.max_structures,
            gamma: p.rates.gamma(),
            beta: p.rates.beta(),
            m: p.fuzzifier.value(),
            epsilon: p.epsilon,
            w_min: p.w_min,
            nlt_max: p.nlt_max,
            min_pts: p.min_pts,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsRecord {
    pub merges: u64,
    pub prunes: u64,
    pub prune_merges: u64,
    pub deletions: u64,
    pub cu_fallbacks: u64,
    pub typicality_failures: u64,
    pub deleted_age: u64,
}

/// Run summary. Field order is the JSON key order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub points: u64,
    pub dim: usize,
    pub structures: usize,
    pub clusters: usize,
    pub density_clusters: usize,
    pub purity: f64,
    pub nmi: f64,
    pub params: ParamsRecord,
    pub diagnostics: DiagnosticsRecord,
}

impl Metrics {
    pub fn new(model: &SpcModel, labels: &ClusterLabels, pred: &[usize], truth: &[usize]) -> Self {
        let table = Contingency::new(pred, truth).expect("one prediction per point");
        let d = model.diagnostics();
        Metrics {
            points: model.clock(),
            dim: model.dim().unwrap_or(0),
            structures: model.len(),
            clusters: labels.n_clusters(),
            density_clusters: labels.density_clusters(),
            purity: table.purity(),
            nmi: table.nmi(),
            params: model.params().into(),
            diagnostics: DiagnosticsRecord {
                merges: d.merges,
                prunes: d.prunes,
                prune_merges: d.prune_merges,
                deletions: d.deletions,
                cu_fallbacks: d.cu_fallbacks,
                typicality_failures: d.typicality_failures,
                deleted_age: d.deleted_age,
            },
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("metrics serialize");
        s.push('\n');
        s
    }

    /// Flattened column names matching [`Metrics::csv_row`].
    pub fn csv_header() -> &'static str {
        "points,dim,structures,clusters,density_clusters,purity,nmi,n,gamma,beta,m,epsilon,w_min,nlt_max,min_pts,\
         merges,prunes,prune_merges,deletions,cu_fallbacks,typicality_failures,deleted_age"
    }

    pub fn csv_row(&self) -> String {
        let p = &self.params;
        let d = &self.diagnostics;
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.points,
            self.dim,
            self.structures,
            self.clusters,
            self.density_clusters,
            self.purity,
            self.nmi,
            p.n,
            p.gamma,
            p.beta,
            p.m,
            p.epsilon,
            p.w_min,
            p.nlt_max,
            p.min_pts,
            d.merges,
            d.prunes,
            d.prune_merges,
            d.deletions,
            d.cu_fallbacks,
            d.typicality_failures,
            d.deleted_age
        )
    }
}

/// One row per structure: identifier, age, weight, mean, then the spread in
/// row-major order.
pub fn snapshot_csv(model: &SpcModel) -> String {
    let d = model.dim().unwrap_or(0);
    let mut out = String::from("id,T,w");
    for i in 0..d {
        let _ = write!(out, ",mu_{i}");
    }
    for i in 0..d {
        for j in 0..d {
            let _ = write!(out, ",sigma_{i}_{j}");
        }
    }
    out.push('\n');
    for (id, s) in model.structures() {
        let _ = write!(out, "{id},{},{}", s.age(), s.weight());
        for v in s.mean().iter() {
            let _ = write!(out, ",{v}");
        }
        let sigma = s.sigma();
        for i in 0..d {
            for j in 0..d {
                let _ = write!(out, ",{}", sigma[(i, j)]);
            }
        }
        out.push('\n');
    }
    out
}

pub fn assignments_csv(points: &[LabeledPoint], result: &RunResult) -> String {
    let mut out = String::from("t,label,cluster,structure,distance\n");
    for (p, a) in points.iter().zip(&result.assignments) {
        let _ = writeln!(out, "{},{},{},{},{}", p.t, p.label, a.cluster, a.structure, a.distance);
    }
    out
}

pub fn grid_csv(cells: &[crate::GridCell]) -> String {
    let mut out = String::from("x,y,cluster,structure,distance\n");
    for c in cells {
        let a = c.assignment;
        let _ = writeln!(out, "{},{},{},{},{}", c.x, c.y, a.cluster, a.structure, a.distance);
    }
    out
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_all(config: &RunConfig, points: &[LabeledPoint], result: &RunResult) -> Result<(), CliError> {
    let dir = &config.output_dir;
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.clone(),
        source,
    })?;
    if config.outputs.contains(&Output::Metrics) {
        write_file(&dir.join("metrics.json"), &result.metrics.to_json())?;
        let timing = serde_json::json!({ "elapsed_seconds": result.elapsed.as_secs_f64() });
        write_file(&dir.join("timing.json"), &format!("{timing}\n"))?;
        if config.metrics_csv {
            let csv = format!("{}\n{}\n", Metrics::csv_header(), result.metrics.csv_row());
            write_file(&dir.join("metrics.csv"), &csv)?;
        }
    }
    if config.outputs.contains(&Output::Snapshot) {
        write_file(&dir.join("snapshot.csv"), &snapshot_csv(&result.model))?;
    }
    if config.outputs.contains(&Output::Assignments) {
        write_file(&dir.join("assignments.csv"), &assignments_csv(points, result))?;
    }
    if config.outputs.contains(&Output::Grid) {
        let bounds = grid_bounds(config, points);
        let cells = emit_grid(&result.model, &result.labels, bounds, config.grid_resolution)?;
        write_file(&dir.join("grid.csv"), &grid_csv(&cells))?;
    }
    Ok(())
}
