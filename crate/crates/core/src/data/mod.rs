//! Tabular data pipeline: CSV ingestion, numeric coercion, median
//! imputation, constant-feature removal, standardization, client
//! partitioning, and synthetic dataset generation.

mod coerce;
mod csv_io;
mod normalize;
mod partition;
mod synthetic;

pub use coerce::{coerce_numeric, drop_constant_features, impute_median, select_features};
pub use csv_io::{load_csv, write_csv};
pub use normalize::{apply_normalizer, fit_normalizer};
pub use partition::{partition_dirichlet, partition_uniform};
pub use synthetic::generate_synthetic;

use std::collections::BTreeSet;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A loaded table before numeric coercion: raw text cells plus the label
/// column and the label sets used to binarize it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub label_column: String,
    pub positive_labels: BTreeSet<String>,
    /// When present, a label outside both sets is a coercion error;
    /// when absent, any non-positive label maps to class 0.
    pub negative_labels: Option<BTreeSet<String>>,
}

impl RawTable {
    pub fn label_index(&self) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == &self.label_column)
            .ok_or_else(|| Error::MissingLabelColumn(self.label_column.clone()))
    }
}

/// Numeric design matrix with binary labels. Between coercion and
/// imputation, missing entries are represented as NaN; afterwards every
/// entry is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub x: Array2<f64>,
    pub y: Array1<f64>,
    pub feature_names: Vec<String>,
}

impl FeatureMatrix {
    pub fn n_samples(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.x.ncols()
    }

    /// Gather the rows named by `indices` into a new matrix.
    pub fn subset(&self, indices: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            x: self.x.select(ndarray::Axis(0), indices),
            y: indices.iter().map(|&i| self.y[i]).collect(),
            feature_names: self.feature_names.clone(),
        }
    }

    /// True when no entry is NaN or infinite.
    pub fn all_finite(&self) -> bool {
        self.x.iter().all(|v| v.is_finite()) && self.y.iter().all(|v| v.is_finite())
    }
}

/// Per-feature means and standard deviations fitted on training data.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationStats {
    pub mu: Array1<f64>,
    pub sigma: Array1<f64>,
}

/// Disjoint client index assignments covering [0, n).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionPlan {
    pub assignments: Vec<Vec<usize>>,
}

impl PartitionPlan {
    pub fn n_clients(&self) -> usize {
        self.assignments.len()
    }

    pub fn total_indices(&self) -> usize {
        self.assignments.iter().map(|a| a.len()).sum()
    }
}

/// Description of a synthetic two-class Gaussian dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub train_samples: usize,
    pub test_samples: usize,
    pub features: usize,
    pub positive_fraction: f64,
    pub separation: f64,
    pub noise_scale: f64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.train_samples < 1 || self.test_samples < 1 || self.features < 1 {
            return Err(Error::config(
                "synthetic sample and feature counts must be >= 1",
            ));
        }
        if !(self.positive_fraction > 0.0 && self.positive_fraction < 1.0) {
            return Err(Error::config(
                "data.positive_fraction must lie strictly between 0 and 1",
            ));
        }
        if self.separation < 0.0 {
            return Err(Error::config("data.separation must be >= 0"));
        }
        if self.noise_scale <= 0.0 {
            return Err(Error::config("data.noise_scale must be > 0"));
        }
        Ok(())
    }
}

/// Full preprocessing for a train/test pair: coerce, impute with train
/// medians, drop train-constant features, and standardize with train
/// statistics. Category codes are fitted on train and extended by test.
pub fn preprocess_pair(
    train: &RawTable,
    test: &RawTable,
) -> Result<(FeatureMatrix, FeatureMatrix)> {
    let (train_fm, mut maps) = coerce::coerce_with_maps(train, None)?;
    let (test_fm, _) = coerce::coerce_with_maps(test, Some(&mut maps))?;

    let (train_fm, medians) = impute_median(train_fm, None)?;
    let (test_fm, _) = impute_median(test_fm, Some(&medians))?;

    let (train_fm, kept) = drop_constant_features(train_fm)?;
    let test_fm = select_features(&test_fm, &kept);

    let stats = fit_normalizer(&train_fm)?;
    let train_fm = apply_normalizer(&train_fm, &stats)?;
    let test_fm = apply_normalizer(&test_fm, &stats)?;
    Ok((train_fm, test_fm))
}
