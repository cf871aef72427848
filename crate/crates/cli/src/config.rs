//! Flat `key = value` run configuration.
//!
//! A config file holds one `key = value` pair per line, `#` starts a comment.
//! Later assignments win, so command-line overrides are simply appended.
//! Keys accept hyphens or underscores interchangeably.

use std::collections::BTreeSet;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use spc::data::{
    ArrivalOrder, CsvOptions, GaussianHighDim, LabelColumn, OverlappingTriangle, SineClass, SineWaves, TwoCircles,
};
use spc::SpcParams;

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Csv { path: PathBuf, options: CsvOptions },
    TwoCircles(TwoCircles),
    SineWaves(SineWaves),
    OverlappingTriangle(OverlappingTriangle),
    GaussianHighDim(GaussianHighDim),
}

impl Source {
    pub fn name(&self) -> &'static str {
        match self {
            Source::Csv { .. } => "csv",
            Source::TwoCircles(_) => "two-circles",
            Source::SineWaves(_) => "sine-waves",
            Source::OverlappingTriangle(_) => "overlapping-triangle",
            Source::GaussianHighDim(_) => "gaussian-highdim",
        }
    }
}

/// Arrival order. `Natural` keeps whatever order the source produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Order {
    #[default]
    Natural,
    Shuffled,
    RoundRobinByClass,
    SequentialByClass,
}

impl Order {
    pub fn resolve(self, seed: u64) -> ArrivalOrder {
        match self {
            Order::Natural => ArrivalOrder::AsIs,
            Order::Shuffled => ArrivalOrder::Shuffled(seed),
            Order::RoundRobinByClass => ArrivalOrder::RoundRobinByClass,
            Order::SequentialByClass => ArrivalOrder::SequentialByClass,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Output {
    Metrics,
    Snapshot,
    Grid,
    Assignments,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridBounds {
    pub x: (f64, f64),
    pub y: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub source: Source,
    pub order: Order,
    pub seed: u64,
    pub params: SpcParams,
    pub outputs: BTreeSet<Output>,
    /// `None` spans the data with a 5% margin.
    pub grid_bounds: Option<GridBounds>,
    pub grid_resolution: usize,
    pub output_dir: PathBuf,
    pub metrics_csv: bool,
}

/// Ordered key/value assignments.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Settings {
    pairs: Vec<(String, String)>,
}

fn normalize_key(key: &str) -> String {
    key.trim().trim_start_matches("--").replace('-', "_")
}

impl Settings {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut settings = Settings::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", i + 1)))?;
            settings.set(k, v);
        }
        Ok(settings)
    }

    pub fn set(&mut self, key: &str, value: &str) {
        self.pairs.push((normalize_key(key), value.trim().to_string()));
    }

    /// Applies `key=value` strings.
    pub fn apply(&mut self, assignments: &[String]) -> Result<(), CliError> {
        for a in assignments {
            let (k, v) = a
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("expected key=value, got {a:?}")))?;
            self.set(k, v);
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.pairs
            .iter()
            .rev()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn keys(&self) -> BTreeSet<&str> {
        self.pairs.iter().map(|(k, _)| k.as_str()).collect()
    }

    /// Builds and validates a run configuration. Unknown keys are errors.
    pub fn to_config(&self) -> Result<RunConfig, CliError> {
        let mut reader = Reader {
            settings: self,
            used: BTreeSet::new(),
        };
        let config = reader.build()?;
        let unknown: Vec<&str> = self
            .keys()
            .into_iter()
            .filter(|k| !reader.used.contains(*k))
            .collect();
        if !unknown.is_empty() {
            return Err(CliError::Config(format!("unknown keys: {}", unknown.join(", "))));
        }
        Ok(config)
    }
}

struct Reader<'a> {
    settings: &'a Settings,
    used: BTreeSet<String>,
}

fn bad<T: fmt::Display>(key: &str, value: &str, why: T) -> CliError {
    CliError::Config(format!("{key} = {value:?}: {why}"))
}

impl Reader<'_> {
    fn raw(&mut self, key: &str) -> Option<String> {
        self.used.insert(key.to_string());
        self.settings.get(key).map(str::to_string)
    }

    fn value<T: FromStr>(&mut self, key: &str, default: T) -> Result<T, CliError>
    where
        T::Err: fmt::Display,
    {
        match self.raw(key) {
            Some(v) => v.parse().map_err(|e| bad(key, &v, e)),
            None => Ok(default),
        }
    }

    fn list<T: FromStr>(&mut self, key: &str, sep: char) -> Result<Option<Vec<T>>, CliError>
    where
        T::Err: fmt::Display,
    {
        let Some(v) = self.raw(key) else {
            return Ok(None);
        };
        v.split(sep)
            .map(|p| p.trim().parse().map_err(|e| bad(key, &v, e)))
            .collect::<Result<Vec<T>, _>>()
            .map(Some)
    }

    fn pair(&mut self, key: &str, default: (f64, f64)) -> Result<(f64, f64), CliError> {
        match self.list::<f64>(key, ',')? {
            None => Ok(default),
            Some(v) if v.len() == 2 => Ok((v[0], v[1])),
            Some(_) => Err(CliError::Config(format!("{key} needs two comma-separated numbers"))),
        }
    }

    fn points<const K: usize>(&mut self, key: &str, default: [[f64; 2]; K]) -> Result<[[f64; 2]; K], CliError> {
        let Some(v) = self.raw(key) else {
            return Ok(default);
        };
        let pts: Vec<[f64; 2]> = v
            .split(';')
            .map(|p| {
                let xy: Vec<f64> = p
                    .split(',')
                    .map(|c| c.trim().parse::<f64>().map_err(|e| bad(key, &v, e)))
                    .collect::<Result<_, _>>()?;
                <[f64; 2]>::try_from(xy).map_err(|_| bad(key, &v, "points are written x,y;x,y"))
            })
            .collect::<Result<_, _>>()?;
        <[[f64; 2]; K]>::try_from(pts).map_err(|_| bad(key, &v, format!("expected {K} points")))
    }

    fn params(&mut self) -> Result<SpcParams, CliError> {
        let preset = self.raw("preset");
        let base = match preset.as_deref() {
            None | Some("aggregation") => SpcParams::aggregation(),
            Some("sine") => SpcParams::sine(),
            Some("high-dim") | Some("high_dim") => SpcParams::high_dim(),
            Some("overlapping") => SpcParams::overlapping(),
            Some(other) => return Err(bad("preset", other, "unknown preset")),
        };
        SpcParams::new(
            self.value("n", base.max_structures)?,
            self.value("gamma", base.rates.gamma())?,
            self.value("beta", base.rates.beta())?,
            self.value("m", base.fuzzifier.value())?,
            self.value("w_min", base.w_min)?,
            self.value("nlt_max", base.nlt_max)?,
            self.value("epsilon", base.epsilon)?,
            self.value("min_pts", base.min_pts)?,
        )
        .map_err(|e| CliError::Config(e.to_string()))
    }

    fn source(&mut self) -> Result<Source, CliError> {
        let kind = self.raw("source").unwrap_or_else(|| "csv".to_string());
        Ok(match kind.as_str() {
            "csv" => {
                let path = self
                    .raw("input")
                    .ok_or_else(|| CliError::Config("csv source needs input = <path>".to_string()))?;
                let label_column = match self.raw("label_column").as_deref() {
                    None | Some("last") => LabelColumn::Last,
                    Some("none") => LabelColumn::None,
                    Some(i) => LabelColumn::Index(i.parse().map_err(|e| bad("label_column", i, e))?),
                };
                let header = match self.raw("header").as_deref() {
                    None | Some("auto") => None,
                    Some(h) => Some(h.parse().map_err(|e| bad("header", h, e))?),
                };
                Source::Csv {
                    path: path.into(),
                    options: CsvOptions {
                        feature_columns: self.list("feature_columns", ',')?,
                        label_column,
                        header,
                    },
                }
            }
            "two-circles" => {
                let d = TwoCircles::default();
                let radii = self.pair("radii", (d.radii[0], d.radii[1]))?;
                Source::TwoCircles(TwoCircles {
                    n_per_class: self.value("n_per_class", d.n_per_class)?,
                    centers: self.points("centers", d.centers)?,
                    radii: [radii.0, radii.1],
                })
            }
            "sine-waves" => {
                let d = SineWaves::default();
                let k = d.classes.len();
                let amp = self.list::<f64>("amplitudes", ',')?;
                let freq = self.list::<f64>("frequencies", ',')?;
                let phase = self.list::<f64>("phases", ',')?;
                let off = self.list::<f64>("y_offsets", ',')?;
                let n = [&amp, &freq, &phase, &off]
                    .iter()
                    .filter_map(|l| l.as_ref().map(Vec::len))
                    .max()
                    .unwrap_or(k);
                let pick = |l: &Option<Vec<f64>>, i: usize, f: fn(&SineClass) -> f64| -> Result<f64, CliError> {
                    match l {
                        Some(v) => v
                            .get(i)
                            .copied()
                            .ok_or_else(|| CliError::Config("sine class lists differ in length".to_string())),
                        None => d.classes.get(i).map(f).ok_or_else(|| {
                            CliError::Config("sine class lists differ in length".to_string())
                        }),
                    }
                };
                let classes = (0..n)
                    .map(|i| {
                        Ok(SineClass {
                            amplitude: pick(&amp, i, |c| c.amplitude)?,
                            frequency: pick(&freq, i, |c| c.frequency)?,
                            phase: pick(&phase, i, |c| c.phase)?,
                            y_offset: pick(&off, i, |c| c.y_offset)?,
                        })
                    })
                    .collect::<Result<_, CliError>>()?;
                Source::SineWaves(SineWaves {
                    n_per_class: self.value("n_per_class", d.n_per_class)?,
                    classes,
                    x_span: self.pair("x_span", d.x_span)?,
                    noise_std: self.value("noise_std", d.noise_std)?,
                })
            }
            "overlapping-triangle" => {
                let d = OverlappingTriangle::default();
                Source::OverlappingTriangle(OverlappingTriangle {
                    n_per_class: self.value("n_per_class", d.n_per_class)?,
                    vertices: self.points("vertices", d.vertices)?,
                    major_std: self.value("major_std", d.major_std)?,
                    axis_ratio: self.value("axis_ratio", d.axis_ratio)?,
                })
            }
            "gaussian-highdim" => {
                let d = GaussianHighDim::default();
                Source::GaussianHighDim(GaussianHighDim {
                    n_clusters: self.value("n_clusters", d.n_clusters)?,
                    dim: self.value("dim", d.dim)?,
                    n_points: self.value("n_points", d.n_points)?,
                    separation: self.value("separation", d.separation)?,
                    cluster_std: self.value("cluster_std", d.cluster_std)?,
                })
            }
            other => return Err(bad("source", other, "unknown source")),
        })
    }

    fn build(&mut self) -> Result<RunConfig, CliError> {
        let source = self.source()?;
        let params = self.params()?;
        let order = match self.raw("order").as_deref() {
            None | Some("natural") | Some("as-is") => Order::Natural,
            Some("shuffled") => Order::Shuffled,
            Some("round-robin-by-class") => Order::RoundRobinByClass,
            Some("sequential-by-class") => Order::SequentialByClass,
            Some(o) => return Err(bad("order", o, "unknown order")),
        };
        let outputs = match self.raw("outputs") {
            None => BTreeSet::from([Output::Metrics]),
            Some(v) => v
                .split(',')
                .map(|o| match o.trim() {
                    "metrics" => Ok(Output::Metrics),
                    "snapshot" => Ok(Output::Snapshot),
                    "grid" => Ok(Output::Grid),
                    "assignments" => Ok(Output::Assignments),
                    other => Err(bad("outputs", other, "unknown output")),
                })
                .collect::<Result<_, _>>()?,
        };
        let grid_bounds = match self.list::<f64>("grid_bounds", ',')? {
            None => None,
            Some(b) if b.len() == 4 && b[0] < b[1] && b[2] < b[3] => Some(GridBounds {
                x: (b[0], b[1]),
                y: (b[2], b[3]),
            }),
            Some(_) => {
                return Err(CliError::Config(
                    "grid_bounds is xmin,xmax,ymin,ymax with min < max".to_string(),
                ))
            }
        };
        let grid_resolution = self.value("grid_resolution", 200usize)?;
        if grid_resolution < 2 {
            return Err(CliError::Config("grid_resolution must be at least 2".to_string()));
        }
        Ok(RunConfig {
            source,
            order,
            seed: self.value("seed", 0u64)?,
            params,
            outputs,
            grid_bounds,
            grid_resolution,
            output_dir: self.raw("output_dir").unwrap_or_else(|| "spc-out".to_string()).into(),
            metrics_csv: self.value("metrics_csv", false)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_overrides() {
        let mut s = Settings::parse("source = sine-waves  # drifting\npreset = sine\nn = 40\n\nseed=3\n").unwrap();
        s.apply(&["--n=30".to_string(), "w-min=0.02".to_string()]).unwrap();
        let c = s.to_config().unwrap();
        assert_eq!(c.params.max_structures, 30);
        assert_eq!(c.params.w_min, 0.02);
        assert_eq!(c.params.rates.gamma(), 0.1);
        assert_eq!(c.seed, 3);
        assert_eq!(c.source.name(), "sine-waves");
        assert_eq!(c.outputs, BTreeSet::from([Output::Metrics]));
    }

    #[test]
    fn rejects_unknown_and_malformed() {
        let s = Settings::parse("source = sine-waves\nbogus = 1\n").unwrap();
        assert!(matches!(s.to_config(), Err(CliError::Config(m)) if m.contains("bogus")));
        assert!(Settings::parse("just words\n").is_err());
        let s = Settings::parse("source = sine-waves\nm = 1.0\n").unwrap();
        assert!(s.to_config().is_err());
        let s = Settings::parse("input = a.csv\ngrid_bounds = 0,1,2\n").unwrap();
        assert!(s.to_config().is_err());
    }

    #[test]
    fn generator_fields_are_addressable() {
        let s = Settings::parse(
            "source = overlapping-triangle\nvertices = 0,0;4,0;2,3\nmajor_std = 1.5\naxis_ratio = 4\norder = shuffled\n",
        )
        .unwrap();
        let c = s.to_config().unwrap();
        match c.source {
            Source::OverlappingTriangle(t) => {
                assert_eq!(t.vertices, [[0.0, 0.0], [4.0, 0.0], [2.0, 3.0]]);
                assert_eq!((t.major_std, t.axis_ratio), (1.5, 4.0));
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(c.order.resolve(9), ArrivalOrder::Shuffled(9));

        let s = Settings::parse("source = sine-waves\namplitudes = 1,1\nfrequencies = 2,3\n").unwrap();
        assert!(s.to_config().is_ok());
        let s = Settings::parse("source = sine-waves\namplitudes = 1,1,1,1\n").unwrap();
        assert!(s.to_config().is_err());
    }

    #[test]
    fn csv_options() {
        let s = Settings::parse("input = d.txt\nfeature_columns = 0,1\nlabel_column = 2\nheader = false\n").unwrap();
        let c = s.to_config().unwrap();
        assert_eq!(
            c.source,
            Source::Csv {
                path: "d.txt".into(),
                options: CsvOptions {
                    feature_columns: Some(vec![0, 1]),
                    label_column: LabelColumn::Index(2),
                    header: Some(false),
                },
            }
        );
    }
}
