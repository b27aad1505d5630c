//! Feature standardization: x' = (x - mu) / sigma with population
//! (divide-by-n) standard deviations.

use ndarray::{Array1, Axis};

use crate::data::{FeatureMatrix, NormalizationStats};
use crate::error::{Error, Result};

/// Fit per-feature means and population standard deviations.
pub fn fit_normalizer(train: &FeatureMatrix) -> Result<NormalizationStats> {
    if train.n_samples() == 0 {
        return Err(Error::EmptyInput);
    }
    let n = train.n_samples() as f64;
    let mu = train.x.mean_axis(Axis(0)).expect("non-empty matrix");
    let mut sigma = Array1::zeros(train.n_features());
    for (j, col) in train.x.axis_iter(Axis(1)).enumerate() {
        let var = col.iter().map(|&v| (v - mu[j]) * (v - mu[j])).sum::<f64>() / n;
        sigma[j] = var.sqrt();
        if sigma[j] == 0.0 {
            return Err(Error::ZeroSigma(j));
        }
    }
    Ok(NormalizationStats { mu, sigma })
}

/// Apply previously fitted statistics to a matrix (train or held-out).
pub fn apply_normalizer(
    matrix: &FeatureMatrix,
    stats: &NormalizationStats,
) -> Result<FeatureMatrix> {
    if stats.mu.len() != matrix.n_features() {
        return Err(Error::LengthMismatch {
            left: stats.mu.len(),
            right: matrix.n_features(),
        });
    }
    let mut x = matrix.x.clone();
    for (j, mut col) in x.axis_iter_mut(Axis(1)).enumerate() {
        let (mu, sigma) = (stats.mu[j], stats.sigma[j]);
        col.mapv_inplace(|v| (v - mu) / sigma);
    }
    Ok(FeatureMatrix {
        x,
        y: matrix.y.clone(),
        feature_names: matrix.feature_names.clone(),
    })
}
