//! Summary statistics and the paired Student t-test.
//!
//! The t-distribution CDF is evaluated through the regularized incomplete
//! beta function with a continued-fraction expansion, good to ~1e-10 over
//! the parameter ranges used here.

use crate::error::{Error, Result};

/// Two-sided paired t-test outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTestResult {
    pub t_stat: f64,
    pub p_value: f64,
    pub dof: usize,
    /// All differences were exactly zero; t = 0 and p = 1 by convention.
    pub degenerate: bool,
}

/// Mean, sample (n-1) standard deviation, and standard error.
/// A single observation reports std and stderr of 0.
pub fn summarize(values: &[f64]) -> Result<(f64, f64, f64)> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return Ok((mean, 0.0, 0.0));
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    let std = var.sqrt();
    Ok((mean, std, std / n.sqrt()))
}

/// Two-sided paired t-test of `a` against `b`.
///
/// t = mean(d) * sqrt(n) / std(d) on the differences d = a - b, with the
/// p-value from the t distribution with n-1 degrees of freedom. All-zero
/// differences set the degenerate flag with t = 0, p = 1.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TTestResult> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(Error::TooFewSamples(a.len()));
    }
    let n = a.len();
    let dof = n - 1;
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();

    if diffs.iter().all(|&d| d == 0.0) {
        return Ok(TTestResult {
            t_stat: 0.0,
            p_value: 1.0,
            dof,
            degenerate: true,
        });
    }

    let (mean, std, _) = summarize(&diffs)?;
    if std == 0.0 {
        // Identical nonzero differences: the statistic diverges.
        return Ok(TTestResult {
            t_stat: if mean > 0.0 {
                f64::INFINITY
            } else {
                f64::NEG_INFINITY
            },
            p_value: 0.0,
            dof,
            degenerate: false,
        });
    }

    let t = mean * (n as f64).sqrt() / std;
    Ok(TTestResult {
        t_stat: t,
        p_value: student_t_two_sided_p(t, dof as f64),
        dof,
        degenerate: false,
    })
}

/// Two-sided p-value for a t statistic with `dof` degrees of freedom:
/// P(|T| >= |t|) = I_x(dof/2, 1/2) with x = dof / (dof + t^2).
pub fn student_t_two_sided_p(t: f64, dof: f64) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    if !t.is_finite() {
        return 0.0;
    }
    let x = dof / (dof + t * t);
    reg_inc_beta(0.5 * dof, 0.5, x).clamp(0.0, 1.0)
}

/// Regularized incomplete beta function I_x(a, b).
pub fn reg_inc_beta(a: f64, b: f64, x: f64) -> f64 {
    assert!(a > 0.0 && b > 0.0, "beta parameters must be positive");
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front =
        ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    // Continued fraction converges fastest below the mean of the distribution.
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cont_frac(a, b, x) / a
    } else {
        1.0 - front * beta_cont_frac(b, a, 1.0 - x) / b
    }
}

/// Continued fraction for the incomplete beta (modified Lentz iteration).
fn beta_cont_frac(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 300;
    const EPS: f64 = 1e-15;
    const TINY: f64 = 1e-300;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;

    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;

        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;

        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;

        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Natural log of the gamma function (Lanczos approximation, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    const COEFFS: [f64; 8] = [
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    if x < 0.5 {
        // Reflection formula.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = 0.99999999999980993;
    for (i, &c) in COEFFS.iter().enumerate() {
        acc += c / (x + i as f64 + 1.0);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}
