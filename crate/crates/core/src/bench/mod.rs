//! Metrics, the least-squares yardstick and experiment orchestration.

pub mod density;
pub mod experiment;
pub mod metrics;
pub mod oracle;

pub use density::{density_check, DensityConfig, DensityReport};
pub use experiment::{
    evaluate, run_experiment, DataSource, EvalReport, Evaluation, Experiment, ExpansionConfig,
    ModelConfig, RunConfig, SplitConfig,
};
pub use metrics::{accuracy, confusion, mae, nrmse, rmse};
pub use oracle::{least_squares_oracle, OracleFit};
