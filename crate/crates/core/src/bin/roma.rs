use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use serde_json::{json, Map, Value};

use roma::data::load_csv_matrix;
use roma::experiments::{run_detect, run_experiment, DetectOptions, ExperimentConfig, ExperimentKind, OutputFormat, Stage};
use roma::{Orientation, Result, RomaError, ThresholdMode};

/// Angle-based outlier detection and Monte Carlo experiments.
///
/// With --input and no --experiment, runs detection on the matrix and prints a JSON report.
#[derive(Debug, Parser)]
#[command(name = "roma", version)]
struct Cli {
    /// Matrix file (CSV).
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, value_enum)]
    orientation: Option<Orientation>,
    #[arg(long, value_enum)]
    mode: Option<ThresholdMode>,
    #[arg(long, value_enum)]
    stage: Option<Stage>,
    /// Swap the second-stage clusters when the outlier side has the lower rank ratio.
    #[arg(long)]
    rank_disambiguate: bool,
    #[arg(long, value_enum)]
    experiment: Option<ExperimentKind>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
    /// JSON config; command-line flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn config_from(cli: &Cli) -> Result<ExperimentConfig> {
    let mut user = match &cli.config {
        Some(p) => match serde_json::from_str(&std::fs::read_to_string(p)?)? {
            Value::Object(m) => m,
            _ => return Err(RomaError::Config("config must be a JSON object".into())),
        },
        None => Map::new(),
    };
    let mut set = |k: &str, v: Value| {
        user.insert(k.to_string(), v);
    };
    if let Some(e) = cli.experiment {
        set("experiment", json!(e));
    }
    if let Some(p) = &cli.input {
        set("input", json!(p));
    }
    if let Some(o) = cli.orientation {
        set("orientation", json!(o));
    }
    if let Some(m) = cli.mode {
        set("mode", json!(m));
    }
    if let Some(s) = cli.stage {
        set("stage", json!(s));
    }
    if cli.rank_disambiguate {
        set("rank_disambiguate", json!(true));
    }
    if let Some(t) = cli.trials {
        set("trials", json!(t));
    }
    if let Some(s) = cli.seed {
        set("seed", json!(s));
    }
    if let Some(p) = &cli.out {
        set("out", json!(p));
    }
    if let Some(f) = cli.format {
        set("format", json!(f));
    }
    let fallback = user.contains_key("input").then_some(ExperimentKind::Detect);
    ExperimentConfig::from_json_value(Value::Object(user), fallback)
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn run(cli: &Cli) -> Result<()> {
    let config = config_from(cli)?;
    config.validate()?;
    if config.experiment == ExperimentKind::Detect {
        let input = config.input.as_ref().expect("validated");
        let m = load_csv_matrix(input, config.orientation)?;
        let opts = DetectOptions {
            mode: config.mode,
            stage: config.stage(),
            rank_disambiguate: config.rank_disambiguate,
        };
        let report = run_detect(&m, opts)?;
        let mut w = sink(&config.out)?;
        match config.format {
            OutputFormat::Json => serde_json::to_writer_pretty(&mut w, &report)?,
            OutputFormat::Csv => {
                let outliers = roma::Partition {
                    inliers: report.inliers.clone(),
                    outliers: report.outliers.clone(),
                }
                .outlier_mask();
                writeln!(w, "point,label,q,na")?;
                for (i, (q, na)) in report.q.iter().zip(&report.na).enumerate() {
                    let label = if outliers[i] { "outlier" } else { "inlier" };
                    writeln!(w, "{i},{label},{q:?},{na}")?;
                }
            }
        }
        w.flush()?;
        return Ok(());
    }
    let report = run_experiment(&config)?;
    let mut w = sink(&config.out)?;
    report.write(config.format, &mut w)?;
    w.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
