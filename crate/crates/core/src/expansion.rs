//! Expandatory connections: a fixed trigonometric functional-link expansion.
//!
//! A raw stimulus `s` of length `n` is mapped to the pattern
//!
//! ```text
//! [s_1 .. s_n,
//!  sin(pi*1*s_1), cos(pi*1*s_1), .., sin(pi*K*s_1), cos(pi*K*s_1),
//!  ..
//!  sin(pi*1*s_n), cos(pi*1*s_n), .., sin(pi*K*s_n), cos(pi*K*s_n),
//!  1]
//! ```
//!
//! The trailing constant is present only when the bias is enabled. Its length
//! is `n*(2K+1) + 1` (or `n*(2K+1)` without bias). Inputs are expected to be
//! normalised to `[0, 1]` already; nothing is clamped here.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawExpansionSpec")]
pub struct ExpansionSpec {
    input_dim: usize,
    order: usize,
    include_bias: bool,
}

#[derive(Deserialize)]
struct RawExpansionSpec {
    input_dim: usize,
    order: usize,
    #[serde(default = "default_bias")]
    include_bias: bool,
}

fn default_bias() -> bool {
    true
}

impl TryFrom<RawExpansionSpec> for ExpansionSpec {
    type Error = Error;

    fn try_from(raw: RawExpansionSpec) -> Result<Self> {
        ExpansionSpec::new(raw.input_dim, raw.order).map(|s| s.with_bias(raw.include_bias))
    }
}

impl ExpansionSpec {
    /// Expansion of an `input_dim`-vector with `order` harmonics per component
    /// and a bias term.
    pub fn new(input_dim: usize, order: usize) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::Config("expansion input_dim must be at least 1".into()));
        }
        Ok(Self {
            input_dim,
            order,
            include_bias: true,
        })
    }

    pub fn with_bias(mut self, include_bias: bool) -> Self {
        self.include_bias = include_bias;
        self
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn include_bias(&self) -> bool {
        self.include_bias
    }

    /// Length `m` of an expanded pattern.
    pub fn expanded_dim(&self) -> usize {
        self.input_dim * (2 * self.order + 1) + usize::from(self.include_bias)
    }

    pub fn expand(&self, s: &[f64]) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(self.expanded_dim());
        self.expand_into(s, &mut out)?;
        Ok(out)
    }

    /// Like [`expand`](Self::expand) but reuses `out`, which is cleared first.
    pub fn expand_into(&self, s: &[f64], out: &mut Vec<f64>) -> Result<()> {
        if s.len() != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                actual: s.len(),
            });
        }
        if let Some(index) = s.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        out.clear();
        out.extend_from_slice(s);
        for &x in s {
            for k in 1..=self.order {
                let arg = PI * k as f64 * x;
                out.push(arg.sin());
                out.push(arg.cos());
            }
        }
        if self.include_bias {
            out.push(1.0);
        }
        Ok(())
    }
}

/// Free-function form of [`ExpansionSpec::expanded_dim`].
pub fn expansion_dim(spec: &ExpansionSpec) -> usize {
    spec.expanded_dim()
}

/// Free-function form of [`ExpansionSpec::expand`].
pub fn expand(spec: &ExpansionSpec, s: &[f64]) -> Result<Vec<f64>> {
    spec.expand(s)
}
