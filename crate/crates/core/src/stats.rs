//! Small statistics toolbox: Wilson score intervals, ordinary least
//! squares with standard errors, and deterministic number formatting for
//! CSV output.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// z for a two-sided 95% interval.
const Z95: f64 = 1.959963984540054;

/// Wilson 95% score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p_hat = successes as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let centre = p_hat + z2 / (2.0 * n);
    let half = Z95 * (p_hat * (1.0 - p_hat) / n + z2 / (4.0 * n * n)).sqrt();
    (((centre - half) / denom).max(0.0), ((centre + half) / denom).min(1.0))
}

/// Ordinary least-squares line fit with standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub intercept_se: f64,
    /// Euclidean norm of the residual vector.
    pub residual_norm: f64,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() {
        return Err(Error::invalid("xs", "x and y lengths differ"));
    }
    let n = xs.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!("need >= 2 points for a line fit, got {}", n)));
    }
    let nf = n as f64;
    let mean_x = xs.iter().sum::<f64>() / nf;
    let mean_y = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mean_x) * (x - mean_x)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("all x values identical".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mean_x) * (y - mean_y)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_res: f64 = xs.iter().zip(ys).map(|(x, y)| {
        let r = y - (slope * x + intercept);
        r * r
    }).sum();
    let (slope_se, intercept_se) = if n > 2 {
        let s2 = ss_res / (nf - 2.0);
        ((s2 / sxx).sqrt(), (s2 * (1.0 / nf + mean_x * mean_x / sxx)).sqrt())
    } else {
        (0.0, 0.0)
    };
    Ok(LinearFit { slope, intercept, slope_se, intercept_se, residual_norm: ss_res.sqrt() })
}

/// `n` logarithmically spaced values over `[lo, hi]` inclusive.
pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

/// `n` linearly spaced values over `[lo, hi]` inclusive.
pub fn lin_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Fixed 9-significant-digit decimal formatting for CSV cells. Plain
/// decimal where practical, scientific far from unity, locale free.
pub fn fmt_sig9(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return if v.is_nan() { "nan".into() } else if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let exp = v.abs().log10().floor() as i32;
    if !(-5..9).contains(&exp) {
        format!("{:.8e}", v)
    } else {
        let prec = (8 - exp).max(0) as usize;
        format!("{:.*}", prec, v)
    }
}
