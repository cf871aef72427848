use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spc_cli::output::write_file;
use spc_cli::{load_stream, run, run_stream, sweep_settings, CliError, Metrics, Output, Settings};

#[derive(Parser)]
#[command(name = "spc", version, about = "Single-pass possibilistic clustering of data streams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Stream a dataset once and write the requested outputs.
    Run(Common),
    /// Like `run`, always writing the 2-D decision grid.
    Grid(Common),
    /// One metrics row per combination of the `--vary` values.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// KEY=V1,V2,... ; repeat to sweep a cartesian product.
        #[arg(long = "vary", value_name = "KEY=VALUES")]
        vary: Vec<String>,
    },
}

#[derive(Args)]
struct Common {
    /// Flat key = value config file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Any config key, e.g. --set noise_std=0.2
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    source: Option<String>,
    #[arg(long)]
    input: Option<String>,
    #[arg(long)]
    order: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long)]
    beta: Option<String>,
    #[arg(long)]
    m: Option<String>,
    #[arg(long)]
    epsilon: Option<String>,
    #[arg(long)]
    w_min: Option<String>,
    #[arg(long)]
    nlt_max: Option<String>,
    #[arg(long)]
    min_pts: Option<String>,
    /// Comma-separated subset of metrics,snapshot,grid,assignments
    #[arg(long)]
    outputs: Option<String>,
    #[arg(long)]
    output_dir: Option<String>,
    #[arg(long)]
    grid_resolution: Option<String>,
    /// xmin,xmax,ymin,ymax
    #[arg(long, allow_hyphen_values = true)]
    grid_bounds: Option<String>,
    /// Also write metrics.csv
    #[arg(long)]
    metrics_csv: bool,
}

impl Common {
    fn settings(&self) -> Result<Settings, CliError> {
        let mut s = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
                    path: path.clone(),
                    source,
                })?;
                Settings::parse(&text)?
            }
            None => Settings::default(),
        };
        let flags = [
            ("source", &self.source),
            ("input", &self.input),
            ("order", &self.order),
            ("seed", &self.seed),
            ("preset", &self.preset),
            ("n", &self.n),
            ("gamma", &self.gamma),
            ("beta", &self.beta),
            ("m", &self.m),
            ("epsilon", &self.epsilon),
            ("w_min", &self.w_min),
            ("nlt_max", &self.nlt_max),
            ("min_pts", &self.min_pts),
            ("outputs", &self.outputs),
            ("output_dir", &self.output_dir),
            ("grid_resolution", &self.grid_resolution),
            ("grid_bounds", &self.grid_bounds),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                s.set(k, v);
            }
        }
        if self.metrics_csv {
            s.set("metrics_csv", "true");
        }
        s.apply(&self.set)?;
        Ok(s)
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(common) => {
            let config = common.settings()?.to_config()?;
            let result = run(&config)?;
            print!("{}", result.metrics.to_json());
        }
        Command::Grid(common) => {
            let mut config = common.settings()?.to_config()?;
            config.outputs.insert(Output::Grid);
            let result = run(&config)?;
            println!(
                "{} clusters over {} structures; grid written to {}",
                result.metrics.clusters,
                result.metrics.structures,
                config.output_dir.join("grid.csv").display()
            );
        }
        Command::Sweep { common, vary } => {
            let base = common.settings()?;
            let mut axes = Vec::new();
            for v in &vary {
                let (k, values) = v
                    .split_once('=')
                    .ok_or_else(|| CliError::Config(format!("--vary expects KEY=V1,V2, got {v:?}")))?;
                axes.push((k.trim().replace('-', "_"), values.split(',').map(|s| s.trim().to_string()).collect()));
            }
            let keys: Vec<String> = axes.iter().map(|(k, _)| k.clone()).collect();
            let mut table = String::new();
            for k in &keys {
                table.push_str(k);
                table.push(',');
            }
            table.push_str(Metrics::csv_header());
            table.push('\n');
            let mut output_dir = None;
            for (combo, settings) in sweep_settings(&base, &axes) {
                let config = settings.to_config()?;
                output_dir.get_or_insert_with(|| config.output_dir.clone());
                let points = load_stream(&config)?;
                let result = run_stream(&points, config.params)?;
                for (_, v) in &combo {
                    table.push_str(v);
                    table.push(',');
                }
                table.push_str(&result.metrics.csv_row());
                table.push('\n');
            }
            let dir = output_dir.unwrap_or_else(|| "spc-out".into());
            std::fs::create_dir_all(&dir).map_err(|source| CliError::Io {
                path: dir.clone(),
                source,
            })?;
            write_file(&dir.join("sweep.csv"), &table)?;
            print!("{table}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("spc: {e}");
            ExitCode::FAILURE
        }
    }
}
