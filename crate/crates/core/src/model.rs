//! Logistic-regression model: prediction, binary cross-entropy loss,
//! analytic gradients, and the full-batch local training loop.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Model parameters exchanged between clients and the server: a weight
/// vector plus a scalar bias.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub w: Array1<f64>,
    pub b: f64,
}

impl ModelParams {
    pub fn zeros(dim: usize) -> Self {
        ModelParams {
            w: Array1::zeros(dim),
            b: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }

    pub fn is_finite(&self) -> bool {
        self.b.is_finite() && self.w.iter().all(|v| v.is_finite())
    }
}

/// Local training hyperparameters: initial learning rate, per-round decay
/// factor, and local epochs per round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub eta0: f64,
    pub gamma: f64,
    pub epochs: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            eta0: 0.1,
            gamma: 0.998,
            epochs: 16,
        }
    }
}

/// Numerically stable logistic function, finite for all finite inputs.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Elementwise sigmoid of X w + b.
pub fn predict_proba(params: &ModelParams, x: &Array2<f64>) -> Result<Array1<f64>> {
    if x.ncols() != params.dim() {
        return Err(Error::DimensionMismatch {
            expected: params.dim(),
            found: x.ncols(),
        });
    }
    let mut z = x.dot(&params.w);
    z.mapv_inplace(|v| sigmoid(v + params.b));
    Ok(z)
}

/// Mean binary cross-entropy; probabilities are clipped to
/// [1e-12, 1 - 1e-12] before the logarithm.
pub fn bce_loss(probs: &Array1<f64>, labels: &Array1<f64>) -> Result<f64> {
    const EPS: f64 = 1e-12;
    if probs.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: probs.len(),
            right: labels.len(),
        });
    }
    if probs.is_empty() {
        return Err(Error::EmptyInput);
    }
    let total: f64 = probs
        .iter()
        .zip(labels)
        .map(|(&p, &y)| {
            let p = p.clamp(EPS, 1.0 - EPS);
            -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
        })
        .sum();
    Ok(total / probs.len() as f64)
}

/// Analytic gradients of the mean BCE loss:
/// grad_w = X^T (sigma(Xw + b) - y) / n, grad_b = mean(sigma(Xw + b) - y).
pub fn gradients(
    params: &ModelParams,
    x: &Array2<f64>,
    y: &Array1<f64>,
) -> Result<(Array1<f64>, f64)> {
    if x.nrows() == 0 {
        return Err(Error::EmptyInput);
    }
    if x.nrows() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.nrows(),
            right: y.len(),
        });
    }
    let probs = predict_proba(params, x)?;
    let errors = &probs - y;
    let n = x.nrows() as f64;
    let grad_w = x.t().dot(&errors) / n;
    let grad_b = errors.sum() / n;
    Ok((grad_w, grad_b))
}

/// Run `epochs` full-batch gradient-descent steps from `params` at the
/// given learning rate. The input parameters are not modified.
pub fn train_local(
    params: &ModelParams,
    x: &Array2<f64>,
    y: &Array1<f64>,
    config: &TrainConfig,
    lr: f64,
) -> Result<ModelParams> {
    let mut current = params.clone();
    for _ in 0..config.epochs {
        let (grad_w, grad_b) = gradients(&current, x, y)?;
        current.w.scaled_add(-lr, &grad_w);
        current.b -= lr * grad_b;
    }
    Ok(current)
}

/// Decayed learning rate for round `r`: eta0 * gamma^r.
pub fn lr_schedule(eta0: f64, gamma: f64, round: usize) -> f64 {
    eta0 * gamma.powi(round as i32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn test_sigmoid_symmetry() {
        assert_eq!(sigmoid(0.0), 0.5);
        for z in [-3.7, -0.5, 0.1, 2.0, 11.0] {
            assert!((sigmoid(z) + sigmoid(-z) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn test_sigmoid_extreme_inputs_finite() {
        let hi = sigmoid(500.0);
        assert!(hi.is_finite() && hi < 1.0 + 1e-15 && hi > 0.999);
        let lo = sigmoid(-700.0);
        assert!(lo.is_finite() && lo >= 0.0 && lo < 1e-100);
    }

    #[test]
    fn test_predict_zero_model() {
        let params = ModelParams::zeros(3);
        let x = array![[1.0, -2.0, 0.5], [4.0, 0.0, 1.0]];
        let p = predict_proba(&params, &x).unwrap();
        assert!(p.iter().all(|&v| v == 0.5));
    }

    #[test]
    fn test_predict_hand_value() {
        let params = ModelParams {
            w: array![2.0, -1.0],
            b: 0.0,
        };
        let p = predict_proba(&params, &array![[1.0, 0.0]]).unwrap();
        assert!((p[0] - 0.8807970779778823).abs() < 1e-12);
    }

    #[test]
    fn test_predict_saturation() {
        let params = ModelParams {
            w: array![0.0],
            b: 50.0,
        };
        let p = predict_proba(&params, &array![[1.0], [2.0]]).unwrap();
        assert!(p.iter().all(|&v| v > 0.999));
    }

    #[test]
    fn test_predict_dimension_mismatch() {
        let params = ModelParams::zeros(2);
        assert!(predict_proba(&params, &array![[1.0]]).is_err());
    }

    #[test]
    fn test_loss_perfect_and_uninformative() {
        let y = array![1.0, 0.0, 1.0];
        let perfect = bce_loss(&array![1.0, 0.0, 1.0], &y).unwrap();
        assert!(perfect < 1e-11);
        let half = bce_loss(&array![0.5, 0.5, 0.5], &y).unwrap();
        assert!((half - 2.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn test_loss_clipping_guard() {
        let y = array![1.0, 0.0];
        let worst = bce_loss(&array![0.0, 1.0], &y).unwrap();
        assert!(worst.is_finite());
        assert!((worst - (-(1e-12f64).ln())).abs() < 1e-3);
    }

    #[test]
    fn test_gradients_hand_case() {
        // w=0, b=0, X=[[1]], y=[1]: error = -0.5.
        let params = ModelParams::zeros(1);
        let (gw, gb) = gradients(&params, &array![[1.0]], &array![1.0]).unwrap();
        assert_eq!(gw[0], -0.5);
        assert_eq!(gb, -0.5);
    }

    #[test]
    fn test_gradients_stationary_point() {
        let params = ModelParams {
            w: array![0.3, -0.7],
            b: 0.2,
        };
        let x = array![[1.0, 2.0], [0.5, -1.0], [2.0, 0.0]];
        let y = predict_proba(&params, &x).unwrap();
        let (gw, gb) = gradients(&params, &x, &y).unwrap();
        assert!(gw.iter().all(|&g| g.abs() < 1e-15));
        assert!(gb.abs() < 1e-15);
    }

    /// Central finite differences of the (unclipped-regime) loss.
    fn fd_gradients(params: &ModelParams, x: &Array2<f64>, y: &Array1<f64>) -> (Array1<f64>, f64) {
        const H: f64 = 1e-6;
        let loss_at = |p: &ModelParams| bce_loss(&predict_proba(p, x).unwrap(), y).unwrap();
        let mut grad_w = Array1::zeros(params.dim());
        for i in 0..params.dim() {
            let mut up = params.clone();
            up.w[i] += H;
            let mut down = params.clone();
            down.w[i] -= H;
            grad_w[i] = (loss_at(&up) - loss_at(&down)) / (2.0 * H);
        }
        let mut up = params.clone();
        up.b += H;
        let mut down = params.clone();
        down.b -= H;
        (grad_w, (loss_at(&up) - loss_at(&down)) / (2.0 * H))
    }

    fn random_instance(rng: &mut ChaCha8Rng) -> (ModelParams, Array2<f64>, Array1<f64>) {
        let n = rng.gen_range(1..=20);
        let d = rng.gen_range(1..=8);
        let x = Array2::from_shape_fn((n, d), |_| rng.gen_range(-2.0..2.0));
        let y = Array1::from_shape_fn(n, |_| rng.gen_range(0..2) as f64);
        let params = ModelParams {
            w: Array1::from_shape_fn(d, |_| rng.gen_range(-1.0..1.0)),
            b: rng.gen_range(-1.0..1.0),
        };
        (params, x, y)
    }

    #[test]
    fn test_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let (params, x, y) = random_instance(&mut rng);
            let (gw, gb) = gradients(&params, &x, &y).unwrap();
            let (fw, fb) = fd_gradients(&params, &x, &y);
            for i in 0..gw.len() {
                let denom = gw[i].abs().max(1e-4);
                assert!(
                    (gw[i] - fw[i]).abs() / denom < 1e-5,
                    "w[{i}]: analytic={} fd={}",
                    gw[i],
                    fw[i]
                );
            }
            let denom = gb.abs().max(1e-4);
            assert!((gb - fb).abs() / denom < 1e-5, "b: analytic={gb} fd={fb}");
        }
    }

    #[test]
    fn test_small_step_never_increases_loss() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..50 {
            let (params, x, y) = random_instance(&mut rng);
            let before = bce_loss(&predict_proba(&params, &x).unwrap(), &y).unwrap();
            let cfg = TrainConfig {
                eta0: 1e-3,
                gamma: 1.0,
                epochs: 1,
            };
            let stepped = train_local(&params, &x, &y, &cfg, 1e-3).unwrap();
            let after = bce_loss(&predict_proba(&stepped, &x).unwrap(), &y).unwrap();
            assert!(after <= before + 1e-12, "loss rose: {before} -> {after}");
        }
    }

    #[test]
    fn test_train_zero_lr_is_identity() {
        let params = ModelParams {
            w: array![0.4, -0.1],
            b: 0.3,
        };
        let x = array![[1.0, 2.0], [3.0, -1.0]];
        let y = array![1.0, 0.0];
        let cfg = TrainConfig {
            eta0: 0.1,
            gamma: 1.0,
            epochs: 5,
        };
        let out = train_local(&params, &x, &y, &cfg, 0.0).unwrap();
        assert_eq!(out, params);
    }

    #[test]
    fn test_train_single_epoch_unrolls() {
        let params = ModelParams::zeros(2);
        let x = array![[1.0, -1.0], [0.5, 2.0]];
        let y = array![1.0, 0.0];
        let cfg = TrainConfig {
            eta0: 0.1,
            gamma: 1.0,
            epochs: 1,
        };
        let lr = 0.25;
        let trained = train_local(&params, &x, &y, &cfg, lr).unwrap();
        let (gw, gb) = gradients(&params, &x, &y).unwrap();
        let mut expected = params.clone();
        expected.w.scaled_add(-lr, &gw);
        expected.b -= lr * gb;
        assert_eq!(trained, expected);
    }

    #[test]
    fn test_train_separable_data_reaches_full_accuracy() {
        let x = array![[-1.0], [1.0]];
        let y = array![0.0, 1.0];
        let cfg = TrainConfig {
            eta0: 0.5,
            gamma: 1.0,
            epochs: 100,
        };
        let trained = train_local(&ModelParams::zeros(1), &x, &y, &cfg, 0.5).unwrap();
        let probs = predict_proba(&trained, &x).unwrap();
        assert!(probs[0] < 0.5 && probs[1] >= 0.5);
    }

    #[test]
    fn test_train_is_deterministic() {
        let x = array![[1.0, 0.2], [-0.5, 1.5], [0.0, -1.0]];
        let y = array![1.0, 1.0, 0.0];
        let cfg = TrainConfig::default();
        let a = train_local(&ModelParams::zeros(2), &x, &y, &cfg, 0.1).unwrap();
        let b = train_local(&ModelParams::zeros(2), &x, &y, &cfg, 0.1).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn test_lr_schedule_values() {
        assert_eq!(lr_schedule(0.1, 0.998, 0), 0.1);
        assert!((lr_schedule(0.1, 0.998, 1) - 0.0998).abs() < 1e-15);
        assert!((lr_schedule(0.1, 0.998, 10) - 0.0980179).abs() < 1e-7);
    }

    #[test]
    fn test_lr_schedule_strictly_decreasing() {
        let mut prev = f64::INFINITY;
        for r in 0..100 {
            let lr = lr_schedule(0.1, 0.998, r);
            assert!(lr < prev);
            prev = lr;
        }
    }
}
