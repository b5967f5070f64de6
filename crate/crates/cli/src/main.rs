use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use wtaenn::bench::{density_check, evaluate, run_experiment, RunConfig};
use wtaenn::data::{
    gen_function, gen_noisy, load_csv_with, read_csv_table, window_series, CsvSchema, MackeyGlass,
    Noise, TargetFunction,
};
use wtaenn::model::Output;
use wtaenn::select::{kwta, solve_box_lp, solve_ksum_lp, solve_simplex_lp, KwtaResult, LpSolution};
use wtaenn::{Error, Result, WtaennModel};

#[derive(Parser)]
#[command(name = "wtaenn", version, about = "Winner-take-all emotional neural networks")]
struct Cli {
    /// Override the seed of the run.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for output files.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Only print errors.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment: data, split, training and evaluation.
    Train { config: PathBuf },
    /// Metrics of a saved model on a CSV file.
    Eval {
        model: PathBuf,
        data: PathBuf,
        #[command(flatten)]
        csv: CsvArgs,
    },
    /// Append model predictions to the rows of a CSV file.
    Predict {
        model: PathBuf,
        data: PathBuf,
        #[command(flatten)]
        csv: CsvArgs,
    },
    /// Write a generated dataset as CSV.
    Synth {
        generator: Generator,
        out: PathBuf,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        /// Constant noise standard deviation.
        #[arg(long, conflicts_with = "hetero_sigma0")]
        sigma: Option<f64>,
        /// Noise standard deviation sigma0 * x1.
        #[arg(long)]
        hetero_sigma0: Option<f64>,
        /// Mackey-Glass series length.
        #[arg(long, default_value_t = 1500)]
        length: usize,
        /// Embed the series with this window instead of writing it raw.
        #[arg(long)]
        window: Option<usize>,
        #[arg(long, default_value_t = 1)]
        horizon: usize,
    },
    /// k-winners-take-all over each instance.
    Kselect {
        input: PathBuf,
        #[arg(long)]
        k: usize,
    },
    /// Solve WTA-reducible linear programs.
    Lp {
        input: PathBuf,
        #[arg(long, value_enum)]
        form: LpFormArg,
        /// Required for the ksum form.
        #[arg(long)]
        k: Option<usize>,
    },
    /// Fit quality as the expansion order grows.
    Density { config: PathBuf },
}

#[derive(clap::Args)]
struct CsvArgs {
    /// Zero-based target column (default: last).
    #[arg(long)]
    target_column: Option<usize>,
    /// Whether the file has a header row (default: detect).
    #[arg(long)]
    header: Option<bool>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Generator {
    F1,
    F2,
    MackeyGlass,
}

#[derive(Clone, Copy, ValueEnum)]
enum LpFormArg {
    Simplex,
    Box,
    Ksum,
}

#[derive(Deserialize)]
struct BoxInstance {
    c: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

#[derive(Serialize)]
struct EvalOutput {
    metrics: std::collections::BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    confusion: Option<Vec<Vec<usize>>>,
    samples: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "error" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            let message = e.to_string().replace('\n', " ");
            eprintln!("error[{}]: {message}", e.category());
            ExitCode::FAILURE
        }
    }
}

fn out_dir(cli: &Cli) -> PathBuf {
    cli.out_dir.clone().unwrap_or_else(|| PathBuf::from("."))
}

fn emit(cli: &Cli, value: &impl Serialize) -> Result<()> {
    if !cli.quiet {
        print_json(value)?;
    }
    Ok(())
}

fn print_json(value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    writeln!(io::stdout().lock(), "{text}")?;
    Ok(())
}

/// A closed stdout (`wtaenn ... | head`) is not a failure.
fn is_broken_pipe(e: &Error) -> bool {
    match e {
        Error::Io(e) => e.kind() == io::ErrorKind::BrokenPipe,
        Error::Csv(e) => matches!(e.kind(), csv::ErrorKind::Io(e) if e.kind() == io::ErrorKind::BrokenPipe),
        _ => false,
    }
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Train { config } => {
            let mut config = RunConfig::load(config)?;
            if let Some(seed) = cli.seed {
                config.seed = seed;
            }
            let experiment = run_experiment(&config)?;
            experiment.write(out_dir(cli))?;
            emit(cli, &experiment.report)
        }
        Command::Eval { model, data, csv } => {
            let model = WtaennModel::load(model)?;
            let dataset = load_for_model(&model, data, csv)?;
            let evaluation = evaluate(&model, &dataset)?;
            let out = EvalOutput {
                metrics: evaluation.metrics,
                confusion: evaluation.confusion,
                samples: dataset.len(),
            };
            // metrics always go to stdout
            print_json(&out)?;
            Ok(())
        }
        Command::Predict { model, data, csv } => predict(cli, model, data, csv),
        Command::Synth {
            generator,
            out,
            samples,
            sigma,
            hetero_sigma0,
            length,
            window,
            horizon,
        } => {
            let seed = cli.seed.unwrap_or(0);
            let noise = match (sigma, hetero_sigma0) {
                (Some(s), _) => Some(Noise::Constant { sigma: *s }),
                (None, Some(s0)) => Some(Noise::Heteroscedastic { sigma0: *s0 }),
                (None, None) => None,
            };
            let file = fs::File::create(out)?;
            match generator {
                Generator::F1 | Generator::F2 => {
                    let which = match generator {
                        Generator::F1 => TargetFunction::F1,
                        _ => TargetFunction::F2,
                    };
                    let d = match noise {
                        Some(n) => gen_noisy(which, n, *samples, seed)?,
                        None => gen_function(which, *samples, seed)?,
                    };
                    d.write_csv(file)
                }
                Generator::MackeyGlass => {
                    let series = MackeyGlass::default().generate(*length)?;
                    match window {
                        Some(w) => window_series(&series, *w, *horizon)?.write_csv(file),
                        None => {
                            let mut out = io::BufWriter::new(file);
                            writeln!(out, "x")?;
                            for x in series {
                                writeln!(out, "{x}")?;
                            }
                            Ok(())
                        }
                    }
                }
            }
        }
        Command::Kselect { input, k } => {
            let results: Vec<KwtaResult> = read_vectors(input)?
                .iter()
                .map(|x| kwta(x, *k))
                .collect::<Result<_>>()?;
            print_json(&results)?;
            Ok(())
        }
        Command::Lp { input, form, k } => {
            let solutions: Vec<LpSolution> = match form {
                LpFormArg::Simplex => read_vectors(input)?
                    .iter()
                    .map(|c| solve_simplex_lp(c))
                    .collect::<Result<_>>()?,
                LpFormArg::Ksum => {
                    let k = k.ok_or_else(|| Error::Config("--k is required for the ksum form".into()))?;
                    read_vectors(input)?
                        .iter()
                        .map(|c| solve_ksum_lp(c, k))
                        .collect::<Result<_>>()?
                }
                LpFormArg::Box => read_boxes(input)?
                    .iter()
                    .map(|b| solve_box_lp(&b.c, &b.lower, &b.upper))
                    .collect::<Result<_>>()?,
            };
            print_json(&solutions)?;
            Ok(())
        }
        Command::Density { config } => {
            let mut config = RunConfig::load(config)?;
            if let Some(seed) = cli.seed {
                config.seed = seed;
            }
            let density = config
                .density
                .clone()
                .ok_or_else(|| Error::Config("config has no density section".into()))?;
            let units = config
                .model
                .units
                .ok_or_else(|| Error::Config("density checks need model.units".into()))?;
            let data = config.data.load(config.data_seed())?;
            let report = density_check(&data, &density, units, &config.ga)?;
            let dir = out_dir(cli);
            fs::create_dir_all(&dir)?;
            fs::write(dir.join("density.json"), serde_json::to_string_pretty(&report)?)?;
            emit(cli, &report)
        }
    }
}

fn schema_for(model: &WtaennModel, csv: &CsvArgs) -> CsvSchema {
    CsvSchema {
        target_column: csv.target_column,
        header: csv.header,
        mode: model.mode(),
    }
}

fn load_for_model(model: &WtaennModel, path: &Path, csv: &CsvArgs) -> Result<wtaenn::data::Dataset> {
    if model.input_normalization().is_none() {
        log::warn!("model carries no input ranges; normalising with the file's own ranges");
    }
    load_csv_with(
        path,
        &schema_for(model, csv),
        model.input_normalization(),
        model.class_names(),
    )
}

fn predict(cli: &Cli, model_path: &Path, data: &Path, csv: &CsvArgs) -> Result<()> {
    let model = WtaennModel::load(model_path)?;
    let table = read_csv_table(data, csv.header)?;
    let n = model.spec().input_dim();
    // The file may or may not carry a target column.
    let skip = match table.columns() {
        c if c == n => None,
        c if c == n + 1 => Some(csv.target_column.unwrap_or(n)),
        c => {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: c,
            })
        }
    };
    let raw = table.features(skip)?;
    let inputs: Vec<Vec<f64>> = match model.input_normalization() {
        Some(ranges) => raw
            .iter()
            .map(|row| row.iter().zip(ranges).map(|(x, r)| r.normalize(*x)).collect())
            .collect(),
        None => {
            let targets = wtaenn::data::Targets::Regression(vec![0.0; raw.len()]);
            wtaenn::data::Dataset::from_raw(raw, targets, "predict")?
                .inputs()
                .to_vec()
        }
    };
    let predictions = model.predict_batch(&inputs)?;

    let sink: Box<dyn Write> = match &cli.out_dir {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            Box::new(fs::File::create(dir.join("predictions.csv"))?)
        }
        None => Box::new(io::stdout().lock()),
    };
    let mut writer = csv::Writer::from_writer(sink);
    let mut header: Vec<String> = match &table.header {
        Some(h) => h.clone(),
        None => (1..=table.columns()).map(|j| format!("c{j}")).collect(),
    };
    header.push("prediction".into());
    writer.write_record(&header)?;
    for (row, p) in table.rows.iter().zip(&predictions) {
        let value = match (p.output, model.class_names()) {
            (Output::Class(c), Some(names)) => names[c].clone(),
            (Output::Class(c), None) => c.to_string(),
            (Output::Value(v), _) => v.to_string(),
        };
        let mut record = row.clone();
        record.push(value);
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

fn is_json(path: &Path, text: &str) -> bool {
    path.extension().is_some_and(|e| e == "json")
        || text.trim_start().starts_with(['[', '{'])
}

/// One instance (a flat JSON array) or many (an array of arrays, or CSV rows).
fn read_vectors(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = fs::read_to_string(path)?;
    if is_json(path, &text) {
        let value: Value = serde_json::from_str(&text)?;
        return match &value {
            Value::Array(items) if items.iter().all(Value::is_number) => {
                Ok(vec![serde_json::from_value(value)?])
            }
            _ => Ok(serde_json::from_value(value)?),
        };
    }
    read_csv_table(path, None)?.features(None)
}

/// JSON object(s) `{c, lower, upper}` or CSV with three rows per instance.
fn read_boxes(path: &Path) -> Result<Vec<BoxInstance>> {
    let text = fs::read_to_string(path)?;
    if is_json(path, &text) {
        let value: Value = serde_json::from_str(&text)?;
        return match value {
            Value::Object(_) => Ok(vec![serde_json::from_value(value)?]),
            _ => Ok(serde_json::from_value(value)?),
        };
    }
    let rows = read_csv_table(path, Some(false))?.features(None)?;
    if rows.len() % 3 != 0 {
        return Err(Error::Data(format!(
            "box instances need rows in triples (c, lower, upper); got {} rows",
            rows.len()
        )));
    }
    Ok(rows
        .chunks_exact(3)
        .map(|t| BoxInstance {
            c: t[0].clone(),
            lower: t[1].clone(),
            upper: t[2].clone(),
        })
        .collect())
}
