//! Empirical density check: the best fit reachable in a richer basis should
//! never be worse than in a poorer one.
//!
//! The trigonometric bases are nested (order `K` is contained in order `K+1`),
//! so the least-squares RMSE is non-increasing in `K` by construction. The
//! genetic trainer is held to the same shape up to a fixed slack, using the
//! best final training RMSE over several seeds.

use serde::{Deserialize, Serialize};

use super::oracle::least_squares_oracle;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::expansion::ExpansionSpec;
use crate::ga::{self, GaConfig};
use crate::model::{Mode, ModelShape, OutputActivation};

/// Oracle values are compared with this absolute tolerance, which only absorbs
/// rounding once the target is exactly representable.
pub const ORACLE_ROUNDING: f64 = 1e-12;

fn default_slack() -> f64 {
    0.02
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityConfig {
    /// Strictly increasing expansion orders.
    pub orders: Vec<usize>,
    /// At least three trainer seeds.
    pub seeds: Vec<u64>,
    #[serde(default = "default_slack")]
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub orders: Vec<usize>,
    /// Minimum over seeds of the final training RMSE, per order.
    pub ga_rmse: Vec<f64>,
    /// Least-squares RMSE per order; absent where the basis outgrows the data.
    pub oracle_rmse: Vec<Option<f64>>,
    pub slack: f64,
    pub ga_non_increasing: bool,
    pub oracle_non_increasing: bool,
}

pub fn non_increasing(values: &[f64], slack: f64) -> bool {
    values.windows(2).all(|w| w[1] <= w[0] + slack)
}

pub fn density_check(
    dataset: &Dataset,
    config: &DensityConfig,
    units: usize,
    ga_config: &GaConfig,
) -> Result<DensityReport> {
    if dataset.mode() != Mode::Regression {
        return Err(Error::Config("density checks need regression data".into()));
    }
    if config.orders.is_empty() || config.orders.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("orders must be non-empty and strictly increasing".into()));
    }
    if config.seeds.len() < 3 {
        return Err(Error::Config("density checks need at least 3 seeds".into()));
    }

    let mut ga_rmse = Vec::with_capacity(config.orders.len());
    let mut oracle_rmse = Vec::with_capacity(config.orders.len());
    for &order in &config.orders {
        let spec = ExpansionSpec::new(dataset.input_dim(), order)?;
        let shape = ModelShape::regression(spec, units, OutputActivation::Identity)?;
        let mut best = f64::INFINITY;
        for &seed in &config.seeds {
            let trace = ga::train(&shape, dataset, &ga_config.clone().with_seed(seed))?;
            best = best.min((-trace.best_fitness).sqrt());
        }
        log::info!("order {order}: best training rmse {best}");
        ga_rmse.push(best);
        oracle_rmse.push(if dataset.len() > spec.expanded_dim() {
            Some(least_squares_oracle(dataset, &spec)?.rmse)
        } else {
            None
        });
    }
    let oracle_values: Vec<f64> = oracle_rmse.iter().flatten().copied().collect();
    Ok(DensityReport {
        ga_non_increasing: non_increasing(&ga_rmse, config.slack),
        oracle_non_increasing: non_increasing(&oracle_values, ORACLE_ROUNDING),
        orders: config.orders.clone(),
        ga_rmse,
        oracle_rmse,
        slack: config.slack,
    })
}
