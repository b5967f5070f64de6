use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::density::DensityConfig;
use super::metrics;
use super::oracle::least_squares_oracle;
use crate::data::{
    gen_function, gen_noisy, load_csv, read_csv_table, split, window_series, CsvSchema, Dataset,
    MackeyGlass, Noise, SplitSpec, TargetFunction, Targets,
};
use crate::error::{Error, Result};
use crate::expansion::ExpansionSpec;
use crate::ga::{self, GaConfig, TrainTrace};
use crate::model::{Mode, ModelShape, Output, OutputActivation, WtaennModel};

pub const CONFIG_FORMAT_VERSION: u32 = 1;
pub const REPORT_FORMAT_VERSION: u32 = 1;

/// Offsets added to the run seed for each phase that draws random numbers.
pub const DATA_SEED_OFFSET: u64 = 0;
pub const SPLIT_SEED_OFFSET: u64 = 1;
pub const GA_SEED_OFFSET: u64 = 2;

fn one() -> u32 {
    1
}
fn yes() -> bool {
    true
}
fn seventy_percent() -> f64 {
    0.7
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataSource {
    /// Tabular data; the target column holds values or class labels.
    Csv {
        path: PathBuf,
        #[serde(flatten)]
        schema: CsvSchema,
    },
    /// One numeric column of a CSV file, embedded with a sliding window.
    SeriesCsv {
        path: PathBuf,
        #[serde(default)]
        column: usize,
        #[serde(default)]
        header: Option<bool>,
        window: usize,
        horizon: usize,
    },
    Function {
        function: TargetFunction,
        n_samples: usize,
    },
    Noisy {
        function: TargetFunction,
        noise: Noise,
        n_samples: usize,
    },
    MackeyGlass {
        length: usize,
        window: usize,
        horizon: usize,
    },
}

impl DataSource {
    pub fn load(&self, seed: u64) -> Result<Dataset> {
        match self {
            DataSource::Csv { path, schema } => load_csv(path, schema),
            DataSource::SeriesCsv {
                path,
                column,
                header,
                window,
                horizon,
            } => {
                let table = read_csv_table(path, *header)?;
                let columns = table.features(None)?;
                let series: Vec<f64> = columns
                    .iter()
                    .map(|row| {
                        row.get(*column).copied().ok_or_else(|| {
                            Error::Data(format!("column {column} missing from {}", path.display()))
                        })
                    })
                    .collect::<Result<_>>()?;
                window_series(&series, *window, *horizon)
            }
            DataSource::Function {
                function,
                n_samples,
            } => gen_function(*function, *n_samples, seed),
            DataSource::Noisy {
                function,
                noise,
                n_samples,
            } => gen_noisy(*function, *noise, *n_samples, seed),
            DataSource::MackeyGlass {
                length,
                window,
                horizon,
            } => window_series(&MackeyGlass::default().generate(*length)?, *window, *horizon),
        }
    }

    fn resolve(&mut self, base: &Path) {
        if let DataSource::Csv { path, .. } | DataSource::SeriesCsv { path, .. } = self {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionConfig {
    pub order: usize,
    #[serde(default = "yes")]
    pub include_bias: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Total number of units. Required for regression.
    #[serde(default)]
    pub units: Option<usize>,
    /// Classification: units per class, used when `units` is absent.
    #[serde(default)]
    pub units_per_class: Option<usize>,
    #[serde(default)]
    pub activation: OutputActivation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    #[serde(default = "seventy_percent")]
    pub train_fraction: f64,
    /// Defaults to true for classification, false for regression.
    #[serde(default)]
    pub stratified: Option<bool>,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            train_fraction: seventy_percent(),
            stratified: None,
        }
    }
}

/// Everything that determines an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default = "one")]
    pub format_version: u32,
    #[serde(default)]
    pub seed: u64,
    pub data: DataSource,
    pub expansion: ExpansionConfig,
    pub model: ModelConfig,
    #[serde(default)]
    pub ga: GaConfig,
    #[serde(default)]
    pub split: SplitConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<DensityConfig>,
}

impl RunConfig {
    /// Read a config file; relative data paths resolve against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut config: RunConfig = serde_json::from_str(&fs::read_to_string(path)?)?;
        if config.format_version != CONFIG_FORMAT_VERSION {
            return Err(Error::Config(format!(
                "unsupported config format_version {}",
                config.format_version
            )));
        }
        let base = path.parent().unwrap_or(Path::new("."));
        config.data.resolve(base);
        Ok(config)
    }

    /// Hex SHA-256 of the canonical JSON form. Struct fields serialise in
    /// declaration order, so equal configs give equal digests.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serialises");
        hex::encode(Sha256::digest(&canonical))
    }

    pub fn data_seed(&self) -> u64 {
        self.seed.wrapping_add(DATA_SEED_OFFSET)
    }

    pub fn split_seed(&self) -> u64 {
        self.seed.wrapping_add(SPLIT_SEED_OFFSET)
    }

    pub fn ga_seed(&self) -> u64 {
        self.seed.wrapping_add(GA_SEED_OFFSET)
    }

    pub fn ga_config(&self) -> GaConfig {
        self.ga.clone().with_seed(self.ga_seed())
    }

    pub fn expansion_spec(&self, input_dim: usize) -> Result<ExpansionSpec> {
        Ok(ExpansionSpec::new(input_dim, self.expansion.order)?.with_bias(self.expansion.include_bias))
    }

    /// Model shape for data with `input_dim` features (and `n_classes` classes
    /// in classification mode).
    pub fn shape(&self, mode: Mode, input_dim: usize, n_classes: usize) -> Result<ModelShape> {
        let spec = self.expansion_spec(input_dim)?;
        match mode {
            Mode::Regression => {
                let units = self.model.units.ok_or_else(|| {
                    Error::Config("regression runs need model.units".into())
                })?;
                ModelShape::regression(spec, units, self.model.activation)
            }
            Mode::Classification => {
                let units = match (self.model.units, self.model.units_per_class) {
                    (Some(u), _) => u,
                    (None, Some(per)) => per * n_classes,
                    (None, None) => n_classes,
                };
                ModelShape::classification(spec, units, n_classes)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSummary {
    /// Least-squares RMSE on the training split over the same basis.
    pub train_rmse: f64,
    pub rank_deficient: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub format_version: u32,
    pub task: Mode,
    pub metrics: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confusion: Option<Vec<Vec<usize>>>,
    pub seed: u64,
    pub config_digest: String,
    pub provenance: String,
    pub train_samples: usize,
    pub test_samples: usize,
    pub generations_run: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSummary>,
    pub wall_time_secs: f64,
}

/// Metrics of a model on a dataset, plus the raw predictions.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub metrics: BTreeMap<String, f64>,
    pub confusion: Option<Vec<Vec<usize>>>,
    pub outputs: Vec<Output>,
}

pub fn evaluate(model: &WtaennModel, dataset: &Dataset) -> Result<Evaluation> {
    let outputs: Vec<Output> = model
        .predict_batch(dataset.inputs())?
        .into_iter()
        .map(|p| p.output)
        .collect();
    let mut out = BTreeMap::new();
    let mut confusion = None;
    match dataset.targets() {
        Targets::Regression(y) => {
            let pred: Vec<f64> = outputs.iter().map(|o| o.as_f64()).collect();
            out.insert("rmse".into(), metrics::rmse(&pred, y)?);
            out.insert("mae".into(), metrics::mae(&pred, y)?);
            match metrics::nrmse(&pred, y) {
                Ok(v) => {
                    out.insert("nrmse".into(), v);
                }
                Err(Error::ZeroVariance) => {}
                Err(e) => return Err(e),
            }
            let residuals: Vec<f64> = y.iter().zip(&pred).map(|(t, p)| t - p).collect();
            out.insert("residual_std".into(), metrics::std_dev(&residuals));
        }
        Targets::Classification {
            labels,
            class_names,
        } => {
            let pred: Vec<usize> = outputs
                .iter()
                .map(|o| match o {
                    Output::Class(c) => Ok(*c),
                    Output::Value(_) => Err(Error::Config(
                        "regression model evaluated on classification data".into(),
                    )),
                })
                .collect::<Result<_>>()?;
            let n_classes = class_names.len().max(model.shape().n_classes());
            out.insert("accuracy".into(), metrics::accuracy(&pred, labels)?);
            confusion = Some(metrics::confusion(&pred, labels, n_classes)?);
        }
    }
    Ok(Evaluation {
        metrics: out,
        confusion,
        outputs,
    })
}

/// Result of [`run_experiment`].
#[derive(Debug, Clone)]
pub struct Experiment {
    pub report: EvalReport,
    pub model: WtaennModel,
    pub trace: TrainTrace,
    pub train: Dataset,
    pub test: Dataset,
}

impl Experiment {
    /// Write `report.json`, `model.json` and `trace.csv` into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        fs::write(dir.join("report.json"), serde_json::to_string_pretty(&self.report)?)?;
        self.model.save(dir.join("model.json"))?;
        self.trace.write_csv(fs::File::create(dir.join("trace.csv"))?)?;
        Ok(())
    }
}

/// Load or generate data, split it, train on the training part and evaluate on
/// the held-out part.
pub fn run_experiment(config: &RunConfig) -> Result<Experiment> {
    let started = Instant::now();
    let data = config.data.load(config.data_seed()).map_err(|e| e.in_phase("data"))?;
    let mode = data.mode();
    let split_spec = SplitSpec {
        train_fraction: config.split.train_fraction,
        stratified: config.split.stratified.unwrap_or(mode == Mode::Classification),
        seed: config.split_seed(),
    };
    let (train, test) = split(&data, &split_spec).map_err(|e| e.in_phase("split"))?;

    let shape = config
        .shape(mode, data.input_dim(), data.n_classes())
        .map_err(|e| e.in_phase("config"))?;
    let ga_config = config.ga_config();
    let trace = ga::train(&shape, &train, &ga_config).map_err(|e| e.in_phase("train"))?;

    let mut model = trace
        .model
        .clone()
        .with_input_normalization(data.normalization().to_vec())
        .map_err(|e| e.in_phase("train"))?;
    if let Some(names) = data.class_names() {
        model = model.with_class_names(names.to_vec());
    }

    let evaluation = evaluate(&model, &test).map_err(|e| e.in_phase("evaluate"))?;
    let train_eval = evaluate(&model, &train).map_err(|e| e.in_phase("evaluate"))?;
    let mut metrics = evaluation.metrics;
    for (name, value) in train_eval.metrics {
        metrics.insert(format!("train_{name}"), value);
    }

    let oracle = match mode {
        Mode::Regression if train.len() > shape.spec.expanded_dim() => {
            let fit = least_squares_oracle(&train, &shape.spec).map_err(|e| e.in_phase("oracle"))?;
            Some(OracleSummary {
                train_rmse: fit.rmse,
                rank_deficient: fit.rank_deficient,
            })
        }
        _ => None,
    };

    let report = EvalReport {
        format_version: REPORT_FORMAT_VERSION,
        task: mode,
        metrics,
        confusion: evaluation.confusion,
        seed: config.seed,
        config_digest: config.digest(),
        provenance: data.provenance().to_string(),
        train_samples: train.len(),
        test_samples: test.len(),
        generations_run: trace.generations.len(),
        oracle,
        wall_time_secs: started.elapsed().as_secs_f64(),
    };
    Ok(Experiment {
        report,
        model,
        trace,
        train,
        test,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f1_config(generations: usize) -> RunConfig {
        RunConfig {
            format_version: 1,
            seed: 5,
            data: DataSource::Function {
                function: TargetFunction::F1,
                n_samples: 60,
            },
            expansion: ExpansionConfig {
                order: 2,
                include_bias: true,
            },
            model: ModelConfig {
                units: Some(2),
                units_per_class: None,
                activation: OutputActivation::Identity,
            },
            ga: GaConfig {
                generations,
                ..GaConfig::default()
            },
            split: SplitConfig::default(),
            density: None,
        }
    }

    #[test]
    fn zero_generations_still_reports() {
        let exp = run_experiment(&f1_config(0)).unwrap();
        assert_eq!(exp.report.generations_run, 0);
        assert!(exp.report.metrics["rmse"] >= 0.0);
        assert_eq!(exp.report.train_samples + exp.report.test_samples, 60);
    }

    #[test]
    fn reruns_match_except_wall_time() {
        let config = f1_config(20);
        let mut a = run_experiment(&config).unwrap();
        let mut b = run_experiment(&config).unwrap();
        a.report.wall_time_secs = 0.0;
        b.report.wall_time_secs = 0.0;
        assert_eq!(
            serde_json::to_string(&a.report).unwrap(),
            serde_json::to_string(&b.report).unwrap()
        );
        assert_eq!(a.model.to_json().unwrap(), b.model.to_json().unwrap());
    }

    #[test]
    fn oracle_is_a_lower_bound_for_one_unit() {
        let mut config = f1_config(40);
        config.model.units = Some(1);
        let exp = run_experiment(&config).unwrap();
        let oracle = exp.report.oracle.unwrap();
        assert!(exp.report.metrics["train_rmse"] >= oracle.train_rmse - 1e-9);
    }

    #[test]
    fn digest_tracks_content() {
        let a = f1_config(10);
        let mut b = a.clone();
        assert_eq!(a.digest(), b.digest());
        b.seed += 1;
        assert_ne!(a.digest(), b.digest());
        assert_eq!(a.digest().len(), 64);
    }

    #[test]
    fn config_json_round_trip() {
        let config = f1_config(10);
        let text = serde_json::to_string_pretty(&config).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, config);
    }

    #[test]
    fn minimal_config_uses_defaults() {
        let text = r#"{
            "seed": 3,
            "data": {"kind": "mackey_glass", "length": 300, "window": 4, "horizon": 1},
            "expansion": {"order": 1},
            "model": {"units": 2}
        }"#;
        let config: RunConfig = serde_json::from_str(text).unwrap();
        assert_eq!(config.ga, GaConfig::default());
        assert_eq!(config.split.train_fraction, 0.7);
        assert_eq!(config.ga_seed(), 5);
    }

    #[test]
    fn regression_requires_units() {
        let mut config = f1_config(0);
        config.model.units = None;
        let err = run_experiment(&config).unwrap_err();
        assert_eq!(err.category(), "config");
        assert!(err.to_string().starts_with("config:"));
    }

    #[test]
    fn data_errors_carry_phase() {
        let mut config = f1_config(0);
        config.data = DataSource::MackeyGlass {
            length: 5,
            window: 4,
            horizon: 1,
        };
        let err = run_experiment(&config).unwrap_err();
        assert!(err.to_string().starts_with("data:"), "{err}");
    }
}
