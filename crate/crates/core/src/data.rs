//! Datasets: CSV ingestion, min-max normalisation, splitting, time-series
//! windowing and the synthetic generators.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Mode;
use crate::random::{gaussian, seeded, uniform};

/// Observed range of one raw feature. Normalisation maps `[min, max]` onto
/// `[0, 1]`; a constant feature maps to `0.0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureRange {
    pub min: f64,
    pub max: f64,
}

impl FeatureRange {
    pub const UNIT: FeatureRange = FeatureRange { min: 0.0, max: 1.0 };

    fn of(values: impl Iterator<Item = f64>) -> Self {
        let (min, max) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
        Self { min, max }
    }

    pub fn is_constant(&self) -> bool {
        self.max <= self.min
    }

    #[inline]
    pub fn normalize(&self, x: f64) -> f64 {
        if self.is_constant() {
            0.0
        } else {
            (x - self.min) / (self.max - self.min)
        }
    }

    #[inline]
    pub fn denormalize(&self, u: f64) -> f64 {
        if self.is_constant() {
            self.min
        } else {
            self.min + u * (self.max - self.min)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Targets {
    Regression(Vec<f64>),
    Classification {
        /// Dense labels `0..C`.
        labels: Vec<usize>,
        /// Original label text, indexed by dense label.
        class_names: Vec<String>,
    },
}

impl Targets {
    pub fn len(&self) -> usize {
        match self {
            Targets::Regression(y) => y.len(),
            Targets::Classification { labels, .. } => labels.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn mode(&self) -> Mode {
        match self {
            Targets::Regression(_) => Mode::Regression,
            Targets::Classification { .. } => Mode::Classification,
        }
    }

    fn subset(&self, idx: &[usize]) -> Targets {
        match self {
            Targets::Regression(y) => Targets::Regression(idx.iter().map(|&i| y[i]).collect()),
            Targets::Classification {
                labels,
                class_names,
            } => Targets::Classification {
                labels: idx.iter().map(|&i| labels[i]).collect(),
                class_names: class_names.clone(),
            },
        }
    }

    fn render(&self, i: usize) -> String {
        match self {
            Targets::Regression(y) => y[i].to_string(),
            Targets::Classification {
                labels,
                class_names,
            } => class_names[labels[i]].clone(),
        }
    }
}

/// Supervised samples with normalised inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    inputs: Vec<Vec<f64>>,
    targets: Targets,
    normalization: Vec<FeatureRange>,
    provenance: String,
}

impl Dataset {
    /// Normalise `raw` feature-wise to `[0, 1]` and record the ranges.
    pub fn from_raw(raw: Vec<Vec<f64>>, targets: Targets, provenance: impl Into<String>) -> Result<Self> {
        let n = check_shape(&raw, &targets)?;
        let ranges: Vec<FeatureRange> = (0..n)
            .map(|j| FeatureRange::of(raw.iter().map(|row| row[j])))
            .collect();
        let mut provenance = provenance.into();
        let constant: Vec<String> = ranges
            .iter()
            .enumerate()
            .filter(|(_, r)| r.is_constant())
            .map(|(j, _)| j.to_string())
            .collect();
        if !constant.is_empty() {
            log::warn!("constant feature(s) {} normalised to 0", constant.join(","));
            let _ = write!(provenance, " [warning: constant feature(s) {}]", constant.join(","));
        }
        Ok(Self::apply_ranges(raw, targets, ranges, provenance))
    }

    /// Normalise `raw` with previously recorded ranges. Values outside a range
    /// land outside `[0, 1]`.
    pub fn with_ranges(
        raw: Vec<Vec<f64>>,
        targets: Targets,
        ranges: Vec<FeatureRange>,
        provenance: impl Into<String>,
    ) -> Result<Self> {
        let n = check_shape(&raw, &targets)?;
        if ranges.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: ranges.len(),
            });
        }
        Ok(Self::apply_ranges(raw, targets, ranges, provenance.into()))
    }

    fn apply_ranges(
        mut raw: Vec<Vec<f64>>,
        targets: Targets,
        ranges: Vec<FeatureRange>,
        provenance: String,
    ) -> Self {
        for row in raw.iter_mut() {
            for (x, r) in row.iter_mut().zip(&ranges) {
                *x = r.normalize(*x);
            }
        }
        Self {
            inputs: raw,
            targets,
            normalization: ranges,
            provenance,
        }
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.normalization.len()
    }

    pub fn mode(&self) -> Mode {
        self.targets.mode()
    }

    /// Normalised inputs.
    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn targets(&self) -> &Targets {
        &self.targets
    }

    pub fn normalization(&self) -> &[FeatureRange] {
        &self.normalization
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn n_classes(&self) -> usize {
        match &self.targets {
            Targets::Classification { class_names, .. } => class_names.len(),
            Targets::Regression(_) => 0,
        }
    }

    pub fn class_names(&self) -> Option<&[String]> {
        match &self.targets {
            Targets::Classification { class_names, .. } => Some(class_names),
            Targets::Regression(_) => None,
        }
    }

    /// Input row `i` mapped back to raw units.
    pub fn raw_input(&self, i: usize) -> Vec<f64> {
        self.inputs[i]
            .iter()
            .zip(&self.normalization)
            .map(|(&u, r)| r.denormalize(u))
            .collect()
    }

    /// Samples at `idx`, in that order. Normalisation and provenance carry over.
    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            inputs: idx.iter().map(|&i| self.inputs[i].clone()).collect(),
            targets: self.targets.subset(idx),
            normalization: self.normalization.clone(),
            provenance: self.provenance.clone(),
        }
    }

    /// Write raw inputs and targets as CSV with an `x1..xn,y` header.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (1..=self.input_dim()).map(|j| format!("x{j}")).collect();
        header.push("y".into());
        out.write_record(&header)?;
        for i in 0..self.len() {
            let mut record: Vec<String> = self.raw_input(i).iter().map(f64::to_string).collect();
            record.push(self.targets.render(i));
            out.write_record(&record)?;
        }
        out.flush()?;
        Ok(())
    }
}

fn check_shape(raw: &[Vec<f64>], targets: &Targets) -> Result<usize> {
    if raw.is_empty() {
        return Err(Error::Empty);
    }
    if raw.len() != targets.len() {
        return Err(Error::Data(format!(
            "{} input rows but {} targets",
            raw.len(),
            targets.len()
        )));
    }
    let n = raw[0].len();
    if n == 0 {
        return Err(Error::Data("samples have no features".into()));
    }
    for row in raw {
        if row.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: row.len(),
            });
        }
        if let Some(index) = row.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { index });
        }
    }
    if let Targets::Regression(y) = targets {
        if let Some(index) = y.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { index });
        }
    }
    Ok(n)
}

// ---------------------------------------------------------------------------
// CSV

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvSchema {
    /// Zero-based target column; the last column when absent.
    #[serde(default)]
    pub target_column: Option<usize>,
    /// Whether the first row is a header; detected when absent.
    #[serde(default)]
    pub header: Option<bool>,
    pub mode: Mode,
}

/// Raw cells of a CSV file.
#[derive(Debug, Clone)]
pub struct CsvTable {
    pub header: Option<Vec<String>>,
    pub rows: Vec<Vec<String>>,
    /// File line of each row, for diagnostics.
    pub lines: Vec<usize>,
}

fn is_number(cell: &str) -> bool {
    cell.trim().parse::<f64>().is_ok()
}

/// A header is assumed when some column has a non-numeric first cell and a
/// numeric second cell, or when no first-row cell is numeric.
fn looks_like_header(first: &[String], second: Option<&Vec<String>>) -> bool {
    if first.iter().all(|c| !is_number(c)) {
        return true;
    }
    match second {
        Some(next) => first
            .iter()
            .zip(next)
            .any(|(a, b)| !is_number(a) && is_number(b)),
        None => false,
    }
}

pub fn read_csv_table(path: impl AsRef<Path>, header: Option<bool>) -> Result<CsvTable> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(false)
        .from_path(path)?;
    let mut rows = Vec::new();
    let mut lines = Vec::new();
    for record in reader.records() {
        let record = record?;
        lines.push(record.position().map_or(0, |p| p.line() as usize));
        rows.push(record.iter().map(|c| c.trim().to_string()).collect::<Vec<_>>());
    }
    if rows.is_empty() {
        return Err(Error::Data(format!("{} has no rows", path.display())));
    }
    let has_header = header.unwrap_or_else(|| looks_like_header(&rows[0], rows.get(1)));
    let header = if has_header {
        lines.remove(0);
        Some(rows.remove(0))
    } else {
        None
    };
    if rows.is_empty() {
        return Err(Error::Data(format!("{} has no data rows", path.display())));
    }
    Ok(CsvTable {
        header,
        rows,
        lines,
    })
}

impl CsvTable {
    pub fn columns(&self) -> usize {
        self.rows[0].len()
    }

    /// Parse every column except `skip` as features.
    pub fn features(&self, skip: Option<usize>) -> Result<Vec<Vec<f64>>> {
        self.rows
            .iter()
            .zip(&self.lines)
            .map(|(row, &line)| {
                row.iter()
                    .enumerate()
                    .filter(|(j, _)| Some(*j) != skip)
                    .map(|(j, cell)| parse_cell(cell, line, j))
                    .collect()
            })
            .collect()
    }

    fn target_index(&self, target_column: Option<usize>) -> Result<usize> {
        let cols = self.columns();
        let t = target_column.unwrap_or(cols - 1);
        if t >= cols || cols < 2 {
            return Err(Error::Data(format!(
                "target column {t} not available in a {cols}-column file"
            )));
        }
        Ok(t)
    }

    /// Targets from column `t`. In classification mode labels are mapped to
    /// dense integers, either by first appearance or by `known` class names.
    pub fn targets(&self, t: usize, mode: Mode, known: Option<&[String]>) -> Result<Targets> {
        match mode {
            Mode::Regression => self
                .rows
                .iter()
                .zip(&self.lines)
                .map(|(row, &line)| parse_cell(&row[t], line, t))
                .collect::<Result<Vec<_>>>()
                .map(Targets::Regression),
            Mode::Classification => {
                let mut class_names: Vec<String> = known.map(<[String]>::to_vec).unwrap_or_default();
                let mut labels = Vec::with_capacity(self.rows.len());
                for (row, &line) in self.rows.iter().zip(&self.lines) {
                    let name = &row[t];
                    let label = match class_names.iter().position(|c| c == name) {
                        Some(l) => l,
                        None if known.is_some() => {
                            return Err(Error::Data(format!(
                                "line {line}: class {name:?} unknown to the model"
                            )))
                        }
                        None => {
                            class_names.push(name.clone());
                            class_names.len() - 1
                        }
                    };
                    labels.push(label);
                }
                Ok(Targets::Classification {
                    labels,
                    class_names,
                })
            }
        }
    }
}

fn parse_cell(cell: &str, line: usize, column: usize) -> Result<f64> {
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::Parse {
            row: line,
            column: column + 1,
            value: cell.to_string(),
        }),
    }
}

/// Load a CSV file, normalising its features to `[0, 1]`.
pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Dataset> {
    let path = path.as_ref();
    let table = read_csv_table(path, schema.header)?;
    let t = table.target_index(schema.target_column)?;
    let raw = table.features(Some(t))?;
    let targets = table.targets(t, schema.mode, None)?;
    Dataset::from_raw(raw, targets, format!("csv:{}", path.display()))
}

/// Load a CSV file using ranges and class names recorded at training time.
pub fn load_csv_with(
    path: impl AsRef<Path>,
    schema: &CsvSchema,
    ranges: Option<&[FeatureRange]>,
    class_names: Option<&[String]>,
) -> Result<Dataset> {
    let path = path.as_ref();
    let table = read_csv_table(path, schema.header)?;
    let t = table.target_index(schema.target_column)?;
    let raw = table.features(Some(t))?;
    let targets = table.targets(t, schema.mode, class_names)?;
    let provenance = format!("csv:{}", path.display());
    match ranges {
        Some(r) => Dataset::with_ranges(raw, targets, r.to_vec(), provenance),
        None => Dataset::from_raw(raw, targets, provenance),
    }
}

// ---------------------------------------------------------------------------
// Splitting

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub stratified: bool,
    pub seed: u64,
}

impl SplitSpec {
    /// 70/30, stratified for classification.
    pub fn for_mode(mode: Mode, seed: u64) -> Self {
        Self {
            train_fraction: 0.7,
            stratified: mode == Mode::Classification,
            seed,
        }
    }
}

fn train_count(fraction: f64, n: usize) -> usize {
    ((fraction * n as f64).round() as usize).clamp(1, n - 1)
}

/// Train and test index sets, each sorted ascending.
pub fn split_indices(dataset: &Dataset, spec: &SplitSpec) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(Error::Config(format!(
            "train_fraction {} not in (0, 1)",
            spec.train_fraction
        )));
    }
    let mut rng = seeded(spec.seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    let mut take = |mut idx: Vec<usize>, rng: &mut _| {
        idx.shuffle(rng);
        let k = train_count(spec.train_fraction, idx.len());
        train.extend_from_slice(&idx[..k]);
        test.extend_from_slice(&idx[k..]);
    };
    if spec.stratified {
        let Targets::Classification {
            labels,
            class_names,
        } = dataset.targets()
        else {
            return Err(Error::Config(
                "stratified split requires classification targets".into(),
            ));
        };
        for (class, name) in class_names.iter().enumerate() {
            let idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
            match idx.len() {
                0 => continue,
                1 => return Err(Error::SingletonClass { class: name.clone() }),
                _ => take(idx, &mut rng),
            }
        }
    } else {
        if dataset.len() < 2 {
            return Err(Error::Data("need at least 2 samples to split".into()));
        }
        take((0..dataset.len()).collect(), &mut rng);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

pub fn split(dataset: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
    let (train, test) = split_indices(dataset, spec)?;
    Ok((dataset.subset(&train), dataset.subset(&test)))
}

// ---------------------------------------------------------------------------
// Time series

/// Sliding-window embedding: sample `i` maps `series[i..i+window]` to
/// `series[i + window + horizon - 1]`.
pub fn window_series(series: &[f64], window: usize, horizon: usize) -> Result<Dataset> {
    if window == 0 || horizon == 0 {
        return Err(Error::Config("window and horizon must be at least 1".into()));
    }
    let required = window + horizon;
    if series.len() < required {
        return Err(Error::SeriesTooShort {
            required,
            actual: series.len(),
        });
    }
    let count = series.len() - required + 1;
    let raw: Vec<Vec<f64>> = (0..count).map(|i| series[i..i + window].to_vec()).collect();
    let y: Vec<f64> = (0..count).map(|i| series[i + window + horizon - 1]).collect();
    Dataset::from_raw(
        raw,
        Targets::Regression(y),
        format!("window(w={window},h={horizon},len={})", series.len()),
    )
}

/// Parameters of the discretised Mackey-Glass delay equation
/// `x' = beta * x(t - tau) / (1 + x(t - tau)^exponent) - gamma * x(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MackeyGlass {
    pub tau: usize,
    pub beta: f64,
    pub gamma: f64,
    pub exponent: i32,
    pub dt: f64,
    pub initial: f64,
}

impl Default for MackeyGlass {
    fn default() -> Self {
        Self {
            tau: 17,
            beta: 0.2,
            gamma: 0.1,
            exponent: 10,
            dt: 1.0,
            initial: 1.2,
        }
    }
}

impl MackeyGlass {
    /// Forward-Euler iteration. The first `tau` values are held at `initial`,
    /// which also stands in for any history before the start of the series.
    pub fn generate(&self, length: usize) -> Result<Vec<f64>> {
        if length < self.tau + 1 {
            return Err(Error::SeriesTooShort {
                required: self.tau + 1,
                actual: length,
            });
        }
        let mut x = vec![self.initial; self.tau];
        for t in self.tau..length {
            let prev = x[t - 1];
            let delayed = if t > self.tau { x[t - 1 - self.tau] } else { self.initial };
            let drive = self.beta * delayed / (1.0 + delayed.powi(self.exponent));
            x.push(prev + self.dt * (drive - self.gamma * prev));
        }
        Ok(x)
    }
}

pub fn gen_mackey_glass(length: usize) -> Result<Vec<f64>> {
    MackeyGlass::default().generate(length)
}

// ---------------------------------------------------------------------------
// Synthetic regression targets

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetFunction {
    /// `y = sin(2 pi x)` on `[0, 1]`.
    F1,
    /// `y = x1 * x2 + sin(pi x1)` on `[0, 1]^2`.
    F2,
}

impl TargetFunction {
    pub fn input_dim(self) -> usize {
        match self {
            TargetFunction::F1 => 1,
            TargetFunction::F2 => 2,
        }
    }

    pub fn eval(self, x: &[f64]) -> f64 {
        use std::f64::consts::PI;
        match self {
            TargetFunction::F1 => (2.0 * PI * x[0]).sin(),
            TargetFunction::F2 => x[0] * x[1] + (PI * x[0]).sin(),
        }
    }

    fn name(self) -> &'static str {
        match self {
            TargetFunction::F1 => "f1",
            TargetFunction::F2 => "f2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Noise {
    /// Gaussian noise with fixed standard deviation.
    Constant { sigma: f64 },
    /// Gaussian noise with standard deviation `sigma0 * x1`.
    Heteroscedastic { sigma0: f64 },
}

impl Noise {
    fn sigma_at(self, x: &[f64]) -> f64 {
        match self {
            Noise::Constant { sigma } => sigma,
            Noise::Heteroscedastic { sigma0 } => sigma0 * x[0],
        }
    }

    fn scale(self) -> f64 {
        match self {
            Noise::Constant { sigma } => sigma,
            Noise::Heteroscedastic { sigma0 } => sigma0,
        }
    }
}

fn draw_inputs(which: TargetFunction, n_samples: usize, seed: u64) -> Result<(Vec<Vec<f64>>, crate::random::WtaRng)> {
    if n_samples < 2 {
        return Err(Error::Config("a generated dataset needs at least 2 samples".into()));
    }
    let mut rng = seeded(seed);
    let dim = which.input_dim();
    let xs = (0..n_samples)
        .map(|_| (0..dim).map(|_| uniform(&mut rng)).collect())
        .collect();
    Ok((xs, rng))
}

/// Noiseless samples of `which` at uniform random points. Inputs already live
/// in the unit box, so the recorded ranges are the identity.
pub fn gen_function(which: TargetFunction, n_samples: usize, seed: u64) -> Result<Dataset> {
    let (xs, _) = draw_inputs(which, n_samples, seed)?;
    let y = xs.iter().map(|x| which.eval(x)).collect();
    Dataset::with_ranges(
        xs,
        Targets::Regression(y),
        vec![FeatureRange::UNIT; which.input_dim()],
        format!("gen:{} n={n_samples} seed={seed}", which.name()),
    )
}

/// [`gen_function`] plus Gaussian noise. Inputs are drawn first, exactly as in
/// `gen_function`, then one normal deviate per sample in sample order.
pub fn gen_noisy(which: TargetFunction, noise: Noise, n_samples: usize, seed: u64) -> Result<Dataset> {
    if noise.scale().is_nan() || noise.scale() < 0.0 {
        return Err(Error::Config(format!("noise scale {} is negative", noise.scale())));
    }
    let (xs, mut rng) = draw_inputs(which, n_samples, seed)?;
    let y = xs
        .iter()
        .map(|x| which.eval(x) + noise.sigma_at(x) * gaussian(&mut rng))
        .collect();
    let noise_tag = match noise {
        Noise::Constant { sigma } => format!("sigma={sigma}"),
        Noise::Heteroscedastic { sigma0 } => format!("sigma0*x1 sigma0={sigma0}"),
    };
    Dataset::with_ranges(
        xs,
        Targets::Regression(y),
        vec![FeatureRange::UNIT; which.input_dim()],
        format!("gen:{} {noise_tag} n={n_samples} seed={seed}", which.name()),
    )
}
