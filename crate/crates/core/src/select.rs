//! Winner-take-all selection and the linear programs it solves exactly.
//!
//! All routines share one tie policy: among equal scores the smallest index
//! wins. k-WTA is realised by repeated WTA with the previous winner masked out,
//! so the selection order is descending by score and then ascending by index.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Score given to masked entries. Legal inputs are finite, so a masked entry
/// can never beat a live one.
const MASKED: f64 = f64::NEG_INFINITY;

/// Index of the first maximum, without validation. Entries that compare false
/// against the running best (NaN) never take over.
#[inline]
pub(crate) fn argmax_first(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

fn check_finite(x: &[f64]) -> Result<()> {
    if x.is_empty() {
        return Err(Error::Empty);
    }
    match x.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}

/// Smallest index attaining the maximum of `x`.
pub fn wta(x: &[f64]) -> Result<usize> {
    check_finite(x)?;
    Ok(argmax_first(x))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KwtaResult {
    /// Winners in selection order.
    pub winners: Vec<usize>,
    /// Scores of the winners, aligned with `winners`.
    pub values: Vec<f64>,
}

/// Select the `k` highest-scoring indices by iterative mask-and-select.
pub fn kwta(x: &[f64], k: usize) -> Result<KwtaResult> {
    check_finite(x)?;
    if k == 0 || k > x.len() {
        return Err(Error::KOutOfRange { k, n: x.len() });
    }
    let mut scores = x.to_vec();
    let mut winners = Vec::with_capacity(k);
    let mut values = Vec::with_capacity(k);
    for _ in 0..k {
        let w = argmax_first(&scores);
        winners.push(w);
        values.push(x[w]);
        scores[w] = MASKED;
    }
    Ok(KwtaResult { winners, values })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LpForm {
    /// max c.x  s.t.  sum x = 1, x >= 0
    Simplex,
    /// max c.x  s.t.  lower <= x <= upper
    Box,
    /// max c.x  s.t.  sum x = k, 0 <= x <= 1
    Ksum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub certificate: LpForm,
}

fn dot(c: &[f64], x: &[f64]) -> f64 {
    c.iter().zip(x).map(|(a, b)| a * b).sum()
}

fn indicator(n: usize, support: &[usize]) -> Vec<f64> {
    let mut x = vec![0.0; n];
    for &i in support {
        x[i] = 1.0;
    }
    x
}

/// Vertex optimum of `max c.x` over the probability simplex.
pub fn solve_simplex_lp(c: &[f64]) -> Result<LpSolution> {
    let winner = wta(c)?;
    let x = indicator(c.len(), &[winner]);
    Ok(LpSolution {
        objective: dot(c, &x),
        x,
        certificate: LpForm::Simplex,
    })
}

/// Optimum of `max c.x` subject to `sum x = k`, `0 <= x <= 1`.
pub fn solve_ksum_lp(c: &[f64], k: usize) -> Result<LpSolution> {
    let sel = kwta(c, k)?;
    let x = indicator(c.len(), &sel.winners);
    Ok(LpSolution {
        objective: dot(c, &x),
        x,
        certificate: LpForm::Ksum,
    })
}

/// Optimum of `max c.x` over the box `lower <= x <= upper`. Coordinates with
/// `c_i = 0` sit at their lower bound.
pub fn solve_box_lp(c: &[f64], lower: &[f64], upper: &[f64]) -> Result<LpSolution> {
    check_finite(c)?;
    for bound in [lower, upper] {
        if bound.len() != c.len() {
            return Err(Error::DimensionMismatch {
                expected: c.len(),
                actual: bound.len(),
            });
        }
        if let Some(index) = bound.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
    }
    if let Some(index) = (0..c.len()).find(|&i| lower[i] > upper[i]) {
        return Err(Error::InvertedBounds { index });
    }
    let x: Vec<f64> = c
        .iter()
        .zip(lower.iter().zip(upper))
        .map(|(&ci, (&lo, &hi))| if ci > 0.0 { hi } else { lo })
        .collect();
    Ok(LpSolution {
        objective: dot(c, &x),
        x,
        certificate: LpForm::Box,
    })
}
