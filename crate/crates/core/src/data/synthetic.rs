//! Synthetic two-class Gaussian dataset generation.

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::data::{FeatureMatrix, SyntheticSpec};
use crate::error::Result;

/// Generate train and test matrices from two Gaussian class-conditional
/// clouds with means at +/- (separation/2) along the fixed unit direction
/// (1, ..., 1)/sqrt(d), isotropic noise of the given scale, and exact label
/// counts per the positive fraction. Deterministic under the seed.
pub fn generate_synthetic(
    spec: &SyntheticSpec,
    seed: u64,
) -> Result<(FeatureMatrix, FeatureMatrix)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let train = sample_split(spec, spec.train_samples, &mut rng);
    let test = sample_split(spec, spec.test_samples, &mut rng);
    Ok((train, test))
}

fn sample_split(spec: &SyntheticSpec, n: usize, rng: &mut ChaCha8Rng) -> FeatureMatrix {
    let d = spec.features;
    let direction = 1.0 / (d as f64).sqrt();
    let offset = spec.separation / 2.0 * direction;

    // Exact positive count, clamped so both classes appear when n >= 2.
    let mut n_pos = (spec.positive_fraction * n as f64).round() as usize;
    if n >= 2 {
        n_pos = n_pos.clamp(1, n - 1);
    }
    let mut labels: Vec<f64> = vec![1.0; n_pos];
    labels.resize(n, 0.0);
    labels.shuffle(rng);

    let mut x = Array2::zeros((n, d));
    for (i, &label) in labels.iter().enumerate() {
        let center = if label == 1.0 { offset } else { -offset };
        for j in 0..d {
            let noise: f64 = StandardNormal.sample(rng);
            x[[i, j]] = center + spec.noise_scale * noise;
        }
    }

    FeatureMatrix {
        x,
        y: Array1::from_vec(labels),
        feature_names: (0..d).map(|j| format!("f{j}")).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{predict_proba, train_local, ModelParams, TrainConfig};

    fn spec() -> SyntheticSpec {
        SyntheticSpec {
            train_samples: 1000,
            test_samples: 200,
            features: 10,
            positive_fraction: 0.5,
            separation: 4.0,
            noise_scale: 1.0,
        }
    }

    #[test]
    fn test_shapes_and_label_counts() {
        let (train, test) = generate_synthetic(&spec(), 0).unwrap();
        assert_eq!(train.x.dim(), (1000, 10));
        assert_eq!(train.y.len(), 1000);
        assert_eq!(test.x.dim(), (200, 10));
        let pos = train.y.iter().filter(|&&y| y == 1.0).count();
        assert_eq!(pos, 500);
        assert!(train.all_finite() && test.all_finite());
    }

    #[test]
    fn test_same_seed_bit_identical() {
        let (a_train, a_test) = generate_synthetic(&spec(), 42).unwrap();
        let (b_train, b_test) = generate_synthetic(&spec(), 42).unwrap();
        assert_eq!(a_train, b_train);
        assert_eq!(a_test, b_test);
    }

    #[test]
    fn test_different_seeds_differ() {
        let (a, _) = generate_synthetic(&spec(), 1).unwrap();
        let (b, _) = generate_synthetic(&spec(), 2).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn test_zero_separation_is_unlearnable() {
        // Indistinguishable classes: centrally trained accuracy ~ 0.5.
        let spec = SyntheticSpec {
            separation: 0.0,
            train_samples: 2000,
            test_samples: 2000,
            ..spec()
        };
        let cfg = TrainConfig {
            eta0: 0.1,
            gamma: 1.0,
            epochs: 50,
        };
        for seed in 0..10 {
            let (train, test) = generate_synthetic(&spec, seed).unwrap();
            let model =
                train_local(&ModelParams::zeros(10), &train.x, &train.y, &cfg, 0.1).unwrap();
            let probs = predict_proba(&model, &test.x).unwrap();
            let correct = probs
                .iter()
                .zip(test.y.iter())
                .filter(|(&p, &y)| (p >= 0.5) == (y == 1.0))
                .count();
            let acc = correct as f64 / test.y.len() as f64;
            assert!((acc - 0.5).abs() < 0.05, "seed {seed}: accuracy {acc}");
        }
    }

    #[test]
    fn test_separated_classes_are_learnable() {
        let (train, test) = generate_synthetic(&spec(), 7).unwrap();
        let cfg = TrainConfig {
            eta0: 0.1,
            gamma: 1.0,
            epochs: 100,
        };
        let model = train_local(&ModelParams::zeros(10), &train.x, &train.y, &cfg, 0.1).unwrap();
        let probs = predict_proba(&model, &test.x).unwrap();
        let correct = probs
            .iter()
            .zip(test.y.iter())
            .filter(|(&p, &y)| (p >= 0.5) == (y == 1.0))
            .count();
        let acc = correct as f64 / test.y.len() as f64;
        assert!(acc > 0.9, "accuracy {acc}");
    }
}
