//! The winner-take-all emotional network.
//!
//! Each of the `M` emotional units owns an excitatory weight vector `v` and an
//! inhibitory weight vector `w` over the expanded pattern `p`. Units compete on
//! their excitation `v . p`; the first unit with the largest excitation wins and
//! its response `v . p - w . p` is the network response. In classification mode
//! the winner's class label is the output instead.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::FeatureRange;
use crate::error::{Error, Result};
use crate::expansion::ExpansionSpec;
use crate::select::argmax_first;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Regression,
    Classification,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputActivation {
    #[default]
    Identity,
    Logistic,
}

impl OutputActivation {
    #[inline]
    pub fn apply(self, r: f64) -> f64 {
        match self {
            OutputActivation::Identity => r,
            OutputActivation::Logistic => 1.0 / (1.0 + (-r).exp()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmotionalUnit {
    /// Excitatory weights.
    pub v: Vec<f64>,
    /// Inhibitory weights.
    pub w: Vec<f64>,
}

impl EmotionalUnit {
    pub fn zeros(m: usize) -> Self {
        Self {
            v: vec![0.0; m],
            w: vec![0.0; m],
        }
    }
}

/// Everything about a model except its weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelShape {
    pub spec: ExpansionSpec,
    pub units: usize,
    pub mode: Mode,
    pub output_activation: OutputActivation,
    /// Class carried by each unit; classification only.
    pub class_of_unit: Option<Vec<usize>>,
}

impl ModelShape {
    pub fn regression(spec: ExpansionSpec, units: usize, activation: OutputActivation) -> Result<Self> {
        let shape = Self {
            spec,
            units,
            mode: Mode::Regression,
            output_activation: activation,
            class_of_unit: None,
        };
        shape.validate()?;
        Ok(shape)
    }

    /// Classification shape with units assigned to classes round-robin:
    /// unit `j` carries class `j % n_classes`.
    pub fn classification(spec: ExpansionSpec, units: usize, n_classes: usize) -> Result<Self> {
        if n_classes == 0 || units < n_classes {
            return Err(Error::Config(format!(
                "{units} units cannot cover {n_classes} classes"
            )));
        }
        let shape = Self {
            spec,
            units,
            mode: Mode::Classification,
            output_activation: OutputActivation::Identity,
            class_of_unit: Some((0..units).map(|j| j % n_classes).collect()),
        };
        shape.validate()?;
        Ok(shape)
    }

    pub fn validate(&self) -> Result<()> {
        if self.units == 0 {
            return Err(Error::Config("a model needs at least one unit".into()));
        }
        match (self.mode, &self.class_of_unit) {
            (Mode::Regression, None) => Ok(()),
            (Mode::Regression, Some(_)) => Err(Error::Config(
                "class_of_unit is only meaningful in classification mode".into(),
            )),
            (Mode::Classification, None) => {
                Err(Error::Config("classification model without class_of_unit".into()))
            }
            (Mode::Classification, Some(classes)) if classes.len() != self.units => {
                Err(Error::DimensionMismatch {
                    expected: self.units,
                    actual: classes.len(),
                })
            }
            (Mode::Classification, Some(_)) => Ok(()),
        }
    }

    /// Number of distinct class labels any unit can emit.
    pub fn n_classes(&self) -> usize {
        self.class_of_unit
            .as_ref()
            .and_then(|c| c.iter().max())
            .map_or(0, |m| m + 1)
    }

    /// Number of genes needed to encode this shape: `2 * M * m`.
    pub fn gene_count(&self) -> usize {
        2 * self.units * self.spec.expanded_dim()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Output {
    Value(f64),
    Class(usize),
}

impl Output {
    pub fn as_f64(self) -> f64 {
        match self {
            Output::Value(v) => v,
            Output::Class(c) => c as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub winner: usize,
    pub excitation: Vec<f64>,
    pub output: Output,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WtaennModel {
    shape: ModelShape,
    units: Vec<EmotionalUnit>,
    input_normalization: Option<Vec<FeatureRange>>,
    class_names: Option<Vec<String>>,
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl WtaennModel {
    pub fn new(shape: ModelShape, units: Vec<EmotionalUnit>) -> Result<Self> {
        shape.validate()?;
        if units.len() != shape.units {
            return Err(Error::DimensionMismatch {
                expected: shape.units,
                actual: units.len(),
            });
        }
        let m = shape.spec.expanded_dim();
        for unit in &units {
            for weights in [&unit.v, &unit.w] {
                if weights.len() != m {
                    return Err(Error::DimensionMismatch {
                        expected: m,
                        actual: weights.len(),
                    });
                }
                if let Some(index) = weights.iter().position(|x| !x.is_finite()) {
                    return Err(Error::NonFinite { index });
                }
            }
        }
        Ok(Self {
            shape,
            units,
            input_normalization: None,
            class_names: None,
        })
    }

    /// Attach the feature ranges the model was trained under, so raw data can
    /// be normalised the same way at evaluation time.
    pub fn with_input_normalization(mut self, ranges: Vec<FeatureRange>) -> Result<Self> {
        if ranges.len() != self.shape.spec.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.shape.spec.input_dim(),
                actual: ranges.len(),
            });
        }
        self.input_normalization = Some(ranges);
        Ok(self)
    }

    pub fn with_class_names(mut self, names: Vec<String>) -> Self {
        self.class_names = Some(names);
        self
    }

    pub fn shape(&self) -> &ModelShape {
        &self.shape
    }

    pub fn spec(&self) -> &ExpansionSpec {
        &self.shape.spec
    }

    pub fn mode(&self) -> Mode {
        self.shape.mode
    }

    pub fn units(&self) -> &[EmotionalUnit] {
        &self.units
    }

    pub fn input_normalization(&self) -> Option<&[FeatureRange]> {
        self.input_normalization.as_deref()
    }

    pub fn class_names(&self) -> Option<&[String]> {
        self.class_names.as_deref()
    }

    /// Winner index and raw response (`v.p - w.p` of the winner) for an
    /// already expanded pattern. Writes every unit's excitation to `excitation`.
    #[inline]
    pub(crate) fn respond(&self, p: &[f64], excitation: &mut [f64]) -> (usize, f64) {
        for (a, unit) in excitation.iter_mut().zip(&self.units) {
            *a = dot(&unit.v, p);
        }
        let winner = argmax_first(excitation);
        let raw = excitation[winner] - dot(&self.units[winner].w, p);
        (winner, raw)
    }

    #[inline]
    pub(crate) fn decode_output(&self, winner: usize, raw: f64) -> Output {
        match &self.shape.class_of_unit {
            Some(classes) => Output::Class(classes[winner]),
            None => Output::Value(self.shape.output_activation.apply(raw)),
        }
    }

    /// Forward pass for one raw (normalised) input vector.
    pub fn forward(&self, s: &[f64]) -> Result<Prediction> {
        let p = self.shape.spec.expand(s)?;
        let mut excitation = vec![0.0; self.units.len()];
        let (winner, raw) = self.respond(&p, &mut excitation);
        Ok(Prediction {
            winner,
            output: self.decode_output(winner, raw),
            excitation,
        })
    }

    pub fn predict_batch(&self, inputs: &[Vec<f64>]) -> Result<Vec<Prediction>> {
        inputs
            .iter()
            .enumerate()
            .map(|(index, s)| {
                self.forward(s).map_err(|e| Error::BatchItem {
                    index,
                    source: Box::new(e),
                })
            })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ModelFile::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        file.try_into()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

/// On-disk form of a model.
#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    spec: ExpansionSpec,
    mode: Mode,
    output_activation: OutputActivation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    class_of_unit: Option<Vec<usize>>,
    units: Vec<EmotionalUnit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    input_normalization: Option<Vec<FeatureRange>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    class_names: Option<Vec<String>>,
}

impl From<&WtaennModel> for ModelFile {
    fn from(model: &WtaennModel) -> Self {
        Self {
            format_version: MODEL_FORMAT_VERSION,
            spec: model.shape.spec,
            mode: model.shape.mode,
            output_activation: model.shape.output_activation,
            class_of_unit: model.shape.class_of_unit.clone(),
            units: model.units.clone(),
            input_normalization: model.input_normalization.clone(),
            class_names: model.class_names.clone(),
        }
    }
}

impl TryFrom<ModelFile> for WtaennModel {
    type Error = Error;

    fn try_from(file: ModelFile) -> Result<Self> {
        if file.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Config(format!(
                "unsupported model format_version {}",
                file.format_version
            )));
        }
        let shape = ModelShape {
            spec: file.spec,
            units: file.units.len(),
            mode: file.mode,
            output_activation: file.output_activation,
            class_of_unit: file.class_of_unit,
        };
        let mut model = WtaennModel::new(shape, file.units)?;
        if let Some(ranges) = file.input_normalization {
            model = model.with_input_normalization(ranges)?;
        }
        model.class_names = file.class_names;
        Ok(model)
    }
}
