use crate::error::{Error, Result};

fn check(predictions: usize, targets: usize) -> Result<()> {
    if predictions == 0 || targets == 0 {
        return Err(Error::Empty);
    }
    if predictions != targets {
        return Err(Error::DimensionMismatch {
            expected: targets,
            actual: predictions,
        });
    }
    Ok(())
}

pub fn rmse(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    check(predictions.len(), targets.len())?;
    let sse: f64 = predictions
        .iter()
        .zip(targets)
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok((sse / targets.len() as f64).sqrt())
}

/// Population standard deviation.
pub fn std_dev(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt()
}

/// RMSE over the (population) standard deviation of the targets.
pub fn nrmse(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    let e = rmse(predictions, targets)?;
    let sd = std_dev(targets);
    if sd.is_nan() || sd <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok(e / sd)
}

pub fn mae(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    check(predictions.len(), targets.len())?;
    let total: f64 = predictions.iter().zip(targets).map(|(p, t)| (p - t).abs()).sum();
    Ok(total / targets.len() as f64)
}

pub fn accuracy(predictions: &[usize], targets: &[usize]) -> Result<f64> {
    check(predictions.len(), targets.len())?;
    let hits = predictions.iter().zip(targets).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / targets.len() as f64)
}

/// `matrix[true][predicted]` counts over `n_classes` classes.
pub fn confusion(predictions: &[usize], targets: &[usize], n_classes: usize) -> Result<Vec<Vec<usize>>> {
    check(predictions.len(), targets.len())?;
    let mut matrix = vec![vec![0; n_classes]; n_classes];
    for (&p, &t) in predictions.iter().zip(targets) {
        if p >= n_classes || t >= n_classes {
            return Err(Error::Data(format!("label {} outside {n_classes} classes", p.max(t))));
        }
        matrix[t][p] += 1;
    }
    Ok(matrix)
}
