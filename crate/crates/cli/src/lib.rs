//! Experiment runner: streams a dataset through the model once and writes
//! plot-ready tables.

pub mod config;
pub mod output;

use std::path::PathBuf;
use std::time::{Duration, Instant};

use spc::data::{
    apply_order, gen_gaussian_highdim, gen_overlapping_triangle, gen_sine_waves, gen_two_circles, load_csv,
    DataError, LabeledPoint,
};
use spc::offline::assign_point;
use spc::{get_clustering, Assignment, ClusterLabels, SpcError, SpcModel, SpcParams};

pub use config::{GridBounds, Order, Output, RunConfig, Settings, Source};
pub use output::Metrics;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Model(#[from] SpcError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("empty stream")]
    EmptyStream,
    #[error("decision grids need 2-D data, this stream has dimension {0}")]
    GridDimension(usize),
}

/// Materializes the stream described by the config, in arrival order.
pub fn load_stream(config: &RunConfig) -> Result<Vec<LabeledPoint>, CliError> {
    let seed = config.seed;
    let points = match &config.source {
        Source::Csv { path, options } => match load_csv(path, options, config.order.resolve(seed)) {
            Err(DataError::Empty) => return Err(CliError::EmptyStream),
            other => return Ok(other?),
        },
        Source::TwoCircles(spec) => gen_two_circles(spec, seed),
        Source::SineWaves(spec) => gen_sine_waves(spec, seed),
        Source::OverlappingTriangle(spec) => gen_overlapping_triangle(spec, seed),
        Source::GaussianHighDim(spec) => {
            gen_gaussian_highdim(spec, seed)
                .map_err(|e| CliError::Config(e.to_string()))?
                .0
        }
    };
    Ok(apply_order(points, config.order.resolve(seed)))
}

/// Everything one run produces.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub model: SpcModel,
    pub labels: ClusterLabels,
    pub assignments: Vec<Assignment>,
    pub metrics: Metrics,
    /// Number of `update` calls made.
    pub points_processed: u64,
    pub elapsed: Duration,
}

/// Streams `points` through a fresh model, clusters once at the end and
/// scores nearest-structure assignments against the true labels.
pub fn run_stream(points: &[LabeledPoint], params: SpcParams) -> Result<RunResult, CliError> {
    if points.is_empty() {
        return Err(CliError::EmptyStream);
    }
    let start = Instant::now();
    let mut model = SpcModel::new(params)?;
    let mut points_processed = 0;
    for p in points {
        model.update(&p.x)?;
        points_processed += 1;
    }
    let labels = get_clustering(&model);
    let elapsed = start.elapsed();

    let m = params.fuzzifier;
    let assignments: Vec<Assignment> = points
        .iter()
        .map(|p| {
            let x = spc::linalg::Vector::from_column_slice(&p.x);
            assign_point(model.structures(), &labels, &x, m).expect("every structure is labeled")
        })
        .collect();
    let pred: Vec<usize> = assignments.iter().map(|a| a.cluster).collect();
    let truth: Vec<usize> = points.iter().map(|p| p.label).collect();
    let metrics = Metrics::new(&model, &labels, &pred, &truth);
    Ok(RunResult {
        model,
        labels,
        assignments,
        metrics,
        points_processed,
        elapsed,
    })
}

/// Runs a config and writes every requested output into its directory.
pub fn run(config: &RunConfig) -> Result<RunResult, CliError> {
    let points = load_stream(config)?;
    let dim = points.first().map_or(0, |p| p.x.len());
    if config.outputs.contains(&Output::Grid) && dim != 2 {
        return Err(CliError::GridDimension(dim));
    }
    let result = run_stream(&points, config.params)?;
    output::write_all(config, &points, &result)?;
    Ok(result)
}

/// Grid over the configured bounds, or over the data with a 5% margin.
pub fn grid_bounds(config: &RunConfig, points: &[LabeledPoint]) -> GridBounds {
    if let Some(b) = config.grid_bounds {
        return b;
    }
    let span = |k: usize| {
        let lo = points.iter().map(|p| p.x[k]).fold(f64::INFINITY, f64::min);
        let hi = points.iter().map(|p| p.x[k]).fold(f64::NEG_INFINITY, f64::max);
        let pad = 0.05 * (hi - lo).max(1e-9);
        (lo - pad, hi + pad)
    };
    GridBounds { x: span(0), y: span(1) }
}

/// One row of a decision grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridCell {
    pub x: f64,
    pub y: f64,
    pub assignment: Assignment,
}

/// Assigns every node of a `resolution × resolution` lattice spanning the
/// bounds, rows of constant `y` from the bottom up.
pub fn emit_grid(
    model: &SpcModel,
    labels: &ClusterLabels,
    bounds: GridBounds,
    resolution: usize,
) -> Result<Vec<GridCell>, CliError> {
    match model.dim() {
        Some(2) => {}
        Some(d) => return Err(CliError::GridDimension(d)),
        None => return Err(CliError::EmptyStream),
    }
    let m = model.params().fuzzifier;
    let at = |(lo, hi): (f64, f64), i: usize| lo + (hi - lo) * i as f64 / (resolution - 1) as f64;
    let mut cells = Vec::with_capacity(resolution * resolution);
    for j in 0..resolution {
        let y = at(bounds.y, j);
        for i in 0..resolution {
            let x = at(bounds.x, i);
            let v = spc::linalg::Vector::from_vec(vec![x, y]);
            let assignment = assign_point(model.structures(), labels, &v, m).expect("every structure is labeled");
            cells.push(GridCell { x, y, assignment });
        }
    }
    Ok(cells)
}

/// Cartesian product of the listed values, varying the last key fastest.
pub fn sweep_settings(base: &Settings, axes: &[(String, Vec<String>)]) -> Vec<(Vec<(String, String)>, Settings)> {
    let mut combos: Vec<Vec<(String, String)>> = vec![Vec::new()];
    for (key, values) in axes {
        combos = combos
            .into_iter()
            .flat_map(|c| {
                values.iter().map(move |v| {
                    let mut c = c.clone();
                    c.push((key.clone(), v.clone()));
                    c
                })
            })
            .collect();
    }
    combos
        .into_iter()
        .map(|c| {
            let mut s = base.clone();
            for (k, v) in &c {
                s.set(k, v);
            }
            (c, s)
        })
        .collect()
}
