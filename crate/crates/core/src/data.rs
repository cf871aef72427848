//! Stream sources: labeled CSV files and synthetic generators, each with an
//! explicit arrival order.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPoint {
    pub x: Vec<f64>,
    pub label: usize,
    /// Arrival index, `0..len` after ordering.
    pub t: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ArrivalOrder {
    #[default]
    AsIs,
    Shuffled(u64),
    /// Class `0`, `1`, … in turn; exhausted classes drop out.
    RoundRobinByClass,
    /// All of class `0`, then all of class `1`, …
    SequentialByClass,
}

/// Reorders a stream and renumbers its arrival indices. Within a class the
/// incoming order is kept.
pub fn apply_order(mut points: Vec<LabeledPoint>, order: ArrivalOrder) -> Vec<LabeledPoint> {
    match order {
        ArrivalOrder::AsIs => {}
        ArrivalOrder::Shuffled(seed) => points.shuffle(&mut ChaCha8Rng::seed_from_u64(seed)),
        ArrivalOrder::SequentialByClass => points.sort_by_key(|p| p.label),
        ArrivalOrder::RoundRobinByClass => {
            let n_classes = points.iter().map(|p| p.label + 1).max().unwrap_or(0);
            let mut queues: Vec<std::collections::VecDeque<LabeledPoint>> =
                vec![Default::default(); n_classes];
            for p in points.drain(..) {
                queues[p.label].push_back(p);
            }
            while queues.iter().any(|q| !q.is_empty()) {
                for q in &mut queues {
                    if let Some(p) = q.pop_front() {
                        points.push(p);
                    }
                }
            }
        }
    }
    for (t, p) in points.iter_mut().enumerate() {
        p.t = t as u64;
    }
    points
}

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {row}, column {column}: cannot parse {value:?} as a number")]
    Parse {
        row: usize,
        column: usize,
        value: String,
    },
    #[error("line {row}: column {column} requested but the row has {found} fields")]
    MissingColumn {
        row: usize,
        column: usize,
        found: usize,
    },
    #[error("line {row}: {message}")]
    Malformed { row: usize, message: String },
    #[error("no data rows")]
    Empty,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum LabelColumn {
    #[default]
    Last,
    Index(usize),
    /// Every point gets label 0.
    None,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CsvOptions {
    /// Zero-based feature columns. `None` means every non-label column.
    pub feature_columns: Option<Vec<usize>>,
    pub label_column: LabelColumn,
    /// `None` treats the first row as a header when any of its feature
    /// fields fails to parse.
    pub header: Option<bool>,
}

fn sniff_delimiter(text: &str) -> u8 {
    let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    if first.contains(',') {
        b','
    } else if first.contains('\t') {
        b'\t'
    } else if first.contains(';') {
        b';'
    } else {
        b' '
    }
}

/// Reads labeled points. Fields are comma separated; files without commas
/// fall back to tabs, semicolons or single spaces. Rows and columns in
/// errors are one-based.
pub fn load_csv(path: impl AsRef<Path>, options: &CsvOptions, order: ArrivalOrder) -> Result<Vec<LabeledPoint>, DataError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_csv(&text, options, order)
}

/// [`load_csv`] on in-memory text.
pub fn parse_csv(text: &str, options: &CsvOptions, order: ArrivalOrder) -> Result<Vec<LabeledPoint>, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .delimiter(sniff_delimiter(text))
        .from_reader(text.as_bytes());

    let mut classes: HashMap<String, usize> = HashMap::new();
    let mut points = Vec::new();
    let mut width = None;
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| DataError::Malformed {
            row,
            message: e.to_string(),
        })?;
        let fields: Vec<&str> = record.iter().filter(|f| !f.is_empty()).collect();
        if fields.is_empty() {
            continue;
        }
        let label_at = match options.label_column {
            LabelColumn::Last => Some(fields.len() - 1),
            LabelColumn::Index(c) => Some(c),
            LabelColumn::None => None,
        };
        let feature_cols: Vec<usize> = match &options.feature_columns {
            Some(cols) => cols.clone(),
            None => (0..fields.len()).filter(|&c| Some(c) != label_at).collect(),
        };
        for &c in feature_cols.iter().chain(label_at.iter()) {
            if c >= fields.len() {
                return Err(DataError::MissingColumn {
                    row,
                    column: c + 1,
                    found: fields.len(),
                });
            }
        }
        let parsed: Vec<Result<f64, usize>> = feature_cols
            .iter()
            .map(|&c| fields[c].parse::<f64>().map_err(|_| c))
            .collect();
        if points.is_empty() && width.is_none() {
            let is_header = options.header.unwrap_or_else(|| parsed.iter().any(|r| r.is_err()));
            width = Some(feature_cols.len());
            if is_header {
                continue;
            }
        }
        let mut x = Vec::with_capacity(parsed.len());
        for r in parsed {
            match r {
                Ok(v) => x.push(v),
                Err(c) => {
                    return Err(DataError::Parse {
                        row,
                        column: c + 1,
                        value: fields[c].to_string(),
                    })
                }
            }
        }
        if width.is_some_and(|w| w != x.len()) {
            return Err(DataError::Malformed {
                row,
                message: format!("expected {} features, found {}", width.unwrap_or(0), x.len()),
            });
        }
        let label = match label_at {
            Some(c) => {
                let next = classes.len();
                *classes.entry(fields[c].to_string()).or_insert(next)
            }
            None => 0,
        };
        points.push(LabeledPoint {
            x,
            label,
            t: points.len() as u64,
        });
    }
    if points.is_empty() {
        return Err(DataError::Empty);
    }
    Ok(apply_order(points, order))
}

/// One sine-wave class: `y = amplitude·sin(frequency·x + phase) + y_offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SineClass {
    pub amplitude: f64,
    pub frequency: f64,
    pub phase: f64,
    pub y_offset: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SineWaves {
    pub n_per_class: usize,
    pub classes: Vec<SineClass>,
    pub x_span: (f64, f64),
    pub noise_std: f64,
}

impl Default for SineWaves {
    fn default() -> Self {
        let class = |amplitude, frequency, y_offset| SineClass {
            amplitude,
            frequency,
            phase: 0.0,
            y_offset,
        };
        SineWaves {
            n_per_class: 400,
            classes: vec![class(1.0, 1.0, 0.0), class(2.0, 0.6, 6.0), class(3.0, 0.3, 14.0)],
            x_span: (0.0, 8.0 * PI),
            noise_std: 0.15,
        }
    }
}

/// Waves sweep left to right together, sampled round robin across classes.
pub fn gen_sine_waves(spec: &SineWaves, seed: u64) -> Vec<LabeledPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = spec.x_span;
    let steps = spec.n_per_class.saturating_sub(1).max(1) as f64;
    let mut points = Vec::with_capacity(spec.n_per_class * spec.classes.len());
    for i in 0..spec.n_per_class {
        let x = lo + (hi - lo) * i as f64 / steps;
        for (label, c) in spec.classes.iter().enumerate() {
            let noise: f64 = rng.sample(StandardNormal);
            let y = c.amplitude * (c.frequency * x + c.phase).sin() + c.y_offset + spec.noise_std * noise;
            points.push(LabeledPoint {
                x: vec![x, y],
                label,
                t: 0,
            });
        }
    }
    apply_order(points, ArrivalOrder::AsIs)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OverlappingTriangle {
    pub n_per_class: usize,
    pub vertices: [[f64; 2]; 3],
    /// Standard deviation along the edge opposite each vertex.
    pub major_std: f64,
    /// Ratio of major to minor standard deviation.
    pub axis_ratio: f64,
}

impl Default for OverlappingTriangle {
    fn default() -> Self {
        OverlappingTriangle {
            n_per_class: 300,
            vertices: [[0.0, 0.0], [10.0, 0.0], [5.0, 8.0]],
            major_std: 2.0,
            axis_ratio: 10.0,
        }
    }
}

impl OverlappingTriangle {
    /// Covariance of class `c`, elongated parallel to the opposite edge.
    pub fn covariance(&self, c: usize) -> [[f64; 2]; 2] {
        let a = self.vertices[(c + 1) % 3];
        let b = self.vertices[(c + 2) % 3];
        let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
        let len = dx.hypot(dy);
        let (ux, uy) = if len > 0.0 { (dx / len, dy / len) } else { (1.0, 0.0) };
        let major = self.major_std * self.major_std;
        let minor = major / (self.axis_ratio * self.axis_ratio);
        [
            [major * ux * ux + minor * uy * uy, (major - minor) * ux * uy],
            [(major - minor) * ux * uy, major * uy * uy + minor * ux * ux],
        ]
    }
}

/// Classes arrive one after another, points within a class in random order.
pub fn gen_overlapping_triangle(spec: &OverlappingTriangle, seed: u64) -> Vec<LabeledPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(3 * spec.n_per_class);
    for label in 0..3 {
        let [[a, b], [_, d]] = spec.covariance(label);
        // 2×2 Cholesky; a zero-width class collapses to its vertex
        let l11 = a.max(0.0).sqrt();
        let l21 = if l11 > 0.0 { b / l11 } else { 0.0 };
        let l22 = (d - l21 * l21).max(0.0).sqrt();
        let [mx, my] = spec.vertices[label];
        let mut class: Vec<LabeledPoint> = (0..spec.n_per_class)
            .map(|_| {
                let z1: f64 = rng.sample(StandardNormal);
                let z2: f64 = rng.sample(StandardNormal);
                LabeledPoint {
                    x: vec![mx + l11 * z1, my + l21 * z1 + l22 * z2],
                    label,
                    t: 0,
                }
            })
            .collect();
        class.shuffle(&mut rng);
        points.extend(class);
    }
    apply_order(points, ArrivalOrder::AsIs)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianHighDim {
    pub n_clusters: usize,
    pub dim: usize,
    pub n_points: usize,
    /// Minimum center distance in units of `cluster_std·√dim`.
    pub separation: f64,
    pub cluster_std: f64,
}

impl Default for GaussianHighDim {
    fn default() -> Self {
        GaussianHighDim {
            n_clusters: 16,
            dim: 1024,
            n_points: 1024,
            separation: 4.0,
            cluster_std: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum GeneratorError {
    #[error("{n_points} points cannot be split evenly into {n_clusters} clusters")]
    UnevenClusters { n_points: usize, n_clusters: usize },
    #[error("could not place centers at the requested separation")]
    Separation,
}

/// Isotropic Gaussian clusters of equal size with well-separated centers,
/// in shuffled order. Returns the points and the centers.
pub fn gen_gaussian_highdim(spec: &GaussianHighDim, seed: u64) -> Result<(Vec<LabeledPoint>, Vec<Vec<f64>>), GeneratorError> {
    if spec.n_clusters == 0 || !spec.n_points.is_multiple_of(spec.n_clusters) {
        return Err(GeneratorError::UnevenClusters {
            n_points: spec.n_points,
            n_clusters: spec.n_clusters,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let min_dist = spec.separation * spec.cluster_std * (spec.dim as f64).sqrt();
    // uniform coordinates on [0, L] put the typical center distance at
    // L·√(d/6); L is chosen so that this exceeds the minimum by 25%
    let side = 1.25 * min_dist * (6.0 / spec.dim as f64).sqrt();
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(spec.n_clusters);
    let mut attempts = 0;
    while centers.len() < spec.n_clusters {
        attempts += 1;
        if attempts > 10_000 * spec.n_clusters {
            return Err(GeneratorError::Separation);
        }
        let c: Vec<f64> = (0..spec.dim).map(|_| rng.random::<f64>() * side).collect();
        let clear = centers.iter().all(|o| {
            o.iter().zip(&c).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() >= min_dist
        });
        if clear {
            centers.push(c);
        }
    }
    let noise = Normal::new(0.0, spec.cluster_std).map_err(|_| GeneratorError::Separation)?;
    let per = spec.n_points / spec.n_clusters;
    let mut points = Vec::with_capacity(spec.n_points);
    for (label, c) in centers.iter().enumerate() {
        for _ in 0..per {
            points.push(LabeledPoint {
                x: c.iter().map(|&m| m + noise.sample(&mut rng)).collect(),
                label,
                t: 0,
            });
        }
    }
    points.shuffle(&mut rng);
    Ok((apply_order(points, ArrivalOrder::AsIs), centers))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoCircles {
    pub n_per_class: usize,
    pub centers: [[f64; 2]; 2],
    pub radii: [f64; 2],
}

impl Default for TwoCircles {
    fn default() -> Self {
        TwoCircles {
            n_per_class: 500,
            centers: [[-1.0, 0.0], [1.05, 0.0]],
            radii: [1.0, 1.0],
        }
    }
}

/// Uniform samples inside two discs, class by class.
pub fn gen_two_circles(spec: &TwoCircles, seed: u64) -> Vec<LabeledPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(2 * spec.n_per_class);
    for label in 0..2 {
        let [cx, cy] = spec.centers[label];
        for _ in 0..spec.n_per_class {
            let r = spec.radii[label] * rng.random::<f64>().sqrt();
            let theta = 2.0 * PI * rng.random::<f64>();
            points.push(LabeledPoint {
                x: vec![cx + r * theta.cos(), cy + r * theta.sin()],
                label,
                t: 0,
            });
        }
    }
    apply_order(points, ArrivalOrder::AsIs)
}
