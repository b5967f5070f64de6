//! Closed-form least-squares fit in the expanded basis.
//!
//! A single-unit network with identity activation computes `(v - w) . p`, an
//! affine function of the expanded pattern `p`. The least-squares solution
//! over the same basis is therefore the lowest in-sample RMSE any such network
//! can reach, which makes it a yardstick for the genetic trainer.

use nalgebra::{DMatrix, DVector};

use crate::data::{Dataset, Targets};
use crate::error::{Error, Result};
use crate::expansion::ExpansionSpec;
use crate::model::{EmotionalUnit, ModelShape, OutputActivation, WtaennModel};

#[derive(Debug, Clone, PartialEq)]
pub struct OracleFit {
    /// Coefficients over the expanded basis.
    pub weights: Vec<f64>,
    /// In-sample RMSE of the fit.
    pub rmse: f64,
    pub rank: usize,
    /// True when the design matrix lost rank and the minimum-norm solution was
    /// returned.
    pub rank_deficient: bool,
}

impl OracleFit {
    /// The fit as a one-unit network (`v` = weights, `w` = 0).
    pub fn to_model(&self, spec: ExpansionSpec) -> Result<WtaennModel> {
        let shape = ModelShape::regression(spec, 1, OutputActivation::Identity)?;
        WtaennModel::new(
            shape,
            vec![EmotionalUnit {
                v: self.weights.clone(),
                w: vec![0.0; self.weights.len()],
            }],
        )
    }
}

pub fn least_squares_oracle(dataset: &Dataset, spec: &ExpansionSpec) -> Result<OracleFit> {
    let Targets::Regression(y) = dataset.targets() else {
        return Err(Error::Config("the least-squares oracle needs regression targets".into()));
    };
    let rows = dataset.len();
    let cols = spec.expanded_dim();
    if rows <= cols {
        return Err(Error::Config(format!(
            "design matrix is {rows}x{cols}; need more rows than columns"
        )));
    }
    let mut design = DMatrix::<f64>::zeros(rows, cols);
    let mut p = Vec::with_capacity(cols);
    for (i, s) in dataset.inputs().iter().enumerate() {
        spec.expand_into(s, &mut p)?;
        for (j, &x) in p.iter().enumerate() {
            design[(i, j)] = x;
        }
    }
    let b = DVector::from_column_slice(y);

    let svd = design.clone().svd(true, true);
    let largest = svd.singular_values.max();
    let tol = largest * rows.max(cols) as f64 * f64::EPSILON;
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
    let solution = svd
        .solve(&b, tol)
        .map_err(|e| Error::Data(format!("least-squares solve failed: {e}")))?;

    let residual = &design * &solution - &b;
    let rmse = (residual.norm_squared() / rows as f64).sqrt();
    Ok(OracleFit {
        weights: solution.iter().copied().collect(),
        rmse,
        rank,
        rank_deficient: rank < cols,
    })
}
