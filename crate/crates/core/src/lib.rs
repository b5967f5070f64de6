//! Winner-take-all emotional neural networks.
//!
//! A single layer of competing emotional units sits on top of a fixed
//! trigonometric expansion of the input. Each unit pairs an excitatory and an
//! inhibitory weight vector; the unit with the strongest excitation wins and
//! answers with its excitation minus its inhibition. Networks are trained with
//! a real-coded genetic algorithm.
//!
//! ```
//! use wtaenn::data::{gen_function, TargetFunction};
//! use wtaenn::expansion::ExpansionSpec;
//! use wtaenn::ga::{train, GaConfig};
//! use wtaenn::model::{ModelShape, OutputActivation};
//!
//! let data = gen_function(TargetFunction::F1, 50, 7)?;
//! let spec = ExpansionSpec::new(1, 2)?;
//! let shape = ModelShape::regression(spec, 2, OutputActivation::Identity)?;
//! let config = GaConfig { generations: 20, seed: 1, ..GaConfig::default() };
//! let trace = train(&shape, &data, &config)?;
//! let prediction = trace.model.forward(&[0.25])?;
//! assert!(prediction.winner < 2);
//! # Ok::<(), wtaenn::Error>(())
//! ```

pub mod bench;
pub mod data;
pub mod error;
pub mod expansion;
pub mod ga;
pub mod model;
pub mod random;
pub mod select;

pub use error::{Error, Result};
pub use expansion::ExpansionSpec;
pub use model::{Mode, ModelShape, OutputActivation, WtaennModel};

// Guide chapters, compiled as doctests so the book cannot drift from the API.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/expansion.md")]
    mod expansion {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/training.md")]
    mod training {}
    #[doc = include_str!("../../../book/src/selection.md")]
    mod selection {}
    #[doc = include_str!("../../../book/src/data.md")]
    mod data {}
    #[doc = include_str!("../../../book/src/benchmarks.md")]
    mod benchmarks {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
