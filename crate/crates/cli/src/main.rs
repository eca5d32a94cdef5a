use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use panel_dml::crossfit::Strategy;
use panel_dml::dgp::{generate, DgpConfig, SimulationTruth};
use panel_dml::estimators::{
    estimate, estimate_timed, EstimatorSpec, FinalStage, LateDemeanScope, Method, SplitSpec,
};
use panel_dml::harness::{
    emit_report, preset, run_experiment, timing_benchmark, ExperimentConfig, ExperimentResult,
    ReportKind, PRESETS,
};
use panel_dml::paneldata::{read_csv, write_csv};

#[derive(Parser)]
#[command(name = "panel-dml", version, about = "Double machine learning for panel data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw one dataset; writes the CSV and a truth.json sidecar.
    Simulate {
        /// TOML file with the data-generating process.
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Where to write the truth (default: truth.json next to --out).
        #[arg(long)]
        truth_out: Option<PathBuf>,
    },
    /// Estimate the treatment effect on a CSV panel; prints JSON.
    Estimate {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        method: String,
        /// random, by-unit, by-period, time-folds or nlo.
        #[arg(long, default_value = "random")]
        split: String,
        #[arg(long)]
        folds: Option<usize>,
        #[arg(long, default_value_t = 1)]
        nlo_width: usize,
        /// Simulation truth, required by the oracle methods.
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Use unit and period effects.
        #[arg(long)]
        two_way: bool,
        /// average (per-fold slopes) or pooled.
        #[arg(long, default_value = "average")]
        final_stage: String,
        /// global or fold.
        #[arg(long, default_value = "global")]
        late_demean_scope: String,
        /// Include the wall time in the output.
        #[arg(long)]
        time: bool,
    },
    /// Run a Monte Carlo experiment grid.
    Experiment {
        /// TOML experiment file.
        #[arg(long, conflicts_with = "preset")]
        config: Option<PathBuf>,
        /// Built-in grid instead of a file.
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
        /// Record per-estimate wall times.
        #[arg(long)]
        time: bool,
    },
    /// Render reports from an experiment output directory.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        /// boxplot_grid, mae_lines, csv or json.
        #[arg(long)]
        kind: String,
        /// Output directory (default: the input directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time every method on structure-C, u-shaped draws.
    Timing {
        /// Panel shapes as NxT, comma separated.
        #[arg(long, default_value = "500x10", value_delimiter = ',')]
        shapes: Vec<String>,
        #[arg(long, default_value_t = 5)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Methods to time (default: all non-oracle methods).
        #[arg(long, value_delimiter = ',')]
        methods: Vec<String>,
    },
    /// Print a built-in experiment grid as TOML.
    Preset {
        /// One of the built-in names; lists them when absent.
        name: Option<String>,
    },
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    serde_json::from_reader(BufReader::new(file)).with_context(|| format!("parsing {}", path.display()))
}

fn parse_shape(s: &str) -> Result<(usize, usize)> {
    let Some((n, t)) = s.split_once('x') else {
        bail!("shape `{s}` should look like 500x10");
    };
    Ok((n.trim().parse()?, t.trim().parse()?))
}

fn parse_final_stage(s: &str) -> Result<FinalStage> {
    Ok(match s {
        "average" => FinalStage::Average,
        "pooled" => FinalStage::Pooled,
        other => bail!("unknown final stage `{other}` (average or pooled)"),
    })
}

fn parse_scope(s: &str) -> Result<LateDemeanScope> {
    Ok(match s {
        "global" => LateDemeanScope::Global,
        "fold" => LateDemeanScope::Fold,
        other => bail!("unknown late-demean scope `{other}` (global or fold)"),
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { config, seed, out, truth_out } => {
            let text = std::fs::read_to_string(&config)
                .with_context(|| format!("reading {}", config.display()))?;
            let mut cfg: DgpConfig = toml::from_str(&text)
                .with_context(|| format!("parsing {}", config.display()))?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let (data, truth) = generate(&cfg)?;
            write_csv(&data, BufWriter::new(File::create(&out)?))?;
            let truth_path = truth_out.unwrap_or_else(|| {
                out.parent().unwrap_or(Path::new(".")).join("truth.json")
            });
            std::fs::write(&truth_path, serde_json::to_string_pretty(&truth)? + "\n")?;
            eprintln!(
                "wrote {} ({} rows) and {}",
                out.display(),
                data.n_rows(),
                truth_path.display()
            );
        }
        Command::Estimate {
            data,
            method,
            split,
            folds,
            nlo_width,
            truth,
            seed,
            two_way,
            final_stage,
            late_demean_scope,
            time,
        } => {
            let dataset = read_csv(BufReader::new(
                File::open(&data).with_context(|| format!("opening {}", data.display()))?,
            ))?;
            let truth: Option<SimulationTruth> = truth.as_deref().map(read_json).transpose()?;
            let mut spec = EstimatorSpec::new(method.parse::<Method>()?).with_two_way(two_way);
            spec.split = SplitSpec {
                strategy: split.parse::<Strategy>()?,
                folds,
                neighbor_width: nlo_width,
            };
            spec.final_stage = parse_final_stage(&final_stage)?;
            spec.late_demean_scope = parse_scope(&late_demean_scope)?;
            let result = if time {
                estimate_timed(&dataset, &spec, truth.as_ref(), seed)?
            } else {
                estimate(&dataset, &spec, truth.as_ref(), seed)?
            };
            println!("{}", serde_json::to_string(&result)?);
        }
        Command::Experiment { config, preset: name, out, workers, time } => {
            let mut cfg = match (config, name) {
                (Some(path), None) => ExperimentConfig::from_file(&path)
                    .with_context(|| format!("loading {}", path.display()))?,
                (None, Some(name)) => preset(&name)?,
                _ => bail!("give either --config or --preset"),
            };
            if let Some(w) = workers {
                cfg.workers = w;
            }
            cfg.record_time |= time;
            let out = out
                .or_else(|| cfg.output_dir.clone().map(PathBuf::from))
                .context("no output directory: pass --out or set output_dir")?;
            let result = run_experiment(&cfg)?;
            result.save(&out)?;
            eprintln!(
                "{} rows ({} failed) written to {}",
                result.rows.len(),
                result.failed(),
                out.display()
            );
        }
        Command::Report { input, kind, out } => {
            let result = ExperimentResult::load(&input)?;
            let kind: ReportKind = kind.parse()?;
            for path in emit_report(&result, kind, out.as_deref().unwrap_or(&input))? {
                println!("{}", path.display());
            }
        }
        Command::Timing { shapes, runs, seed, methods } => {
            let shapes = shapes.iter().map(|s| parse_shape(s)).collect::<Result<Vec<_>>>()?;
            let methods: Vec<Method> = if methods.is_empty() {
                Method::ALL.into_iter().filter(|m| !m.needs_truth()).collect()
            } else {
                methods.iter().map(|m| m.parse()).collect::<Result<_, _>>()?
            };
            let rows = timing_benchmark(&shapes, &methods, runs, seed)?;
            println!("n_units,n_periods,method,runs,mean_seconds");
            for r in rows {
                println!("{},{},{},{},{:.6}", r.n_units, r.n_periods, r.method, r.runs, r.mean_seconds);
            }
        }
        Command::Preset { name } => match name {
            None => PRESETS.iter().for_each(|p| println!("{p}")),
            Some(name) => print!("{}", preset(&name)?.to_toml_string()?),
        },
    }
    Ok(())
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
