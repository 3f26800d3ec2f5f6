use serde::Serialize;

use crate::error::{Error, Result};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample variance with `n - 1` in the denominator.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Sample autocorrelation at lags `0..=max_lag` (biased estimator).
pub fn autocorrelation(xs: &[f64], max_lag: usize) -> Vec<f64> {
    let n = xs.len();
    let m = mean(xs);
    let c0: f64 = xs.iter().map(|x| (x - m).powi(2)).sum();
    (0..=max_lag.min(n.saturating_sub(1)))
        .map(|k| {
            if c0 == 0.0 {
                return if k == 0 { 1.0 } else { 0.0 };
            }
            xs[..n - k]
                .iter()
                .zip(&xs[k..])
                .map(|(a, b)| (a - m) * (b - m))
                .sum::<f64>()
                / c0
        })
        .collect()
}

/// Result of a batch-means stationarity check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchMeans {
    pub means: Vec<f64>,
    /// Standard error of the difference of two batch means.
    pub pooled_se: f64,
    pub stationary: bool,
}

/// Means over disjoint windows (a trailing partial window is dropped).
///
/// The standard error of one batch mean is `sqrt(s^2 tau / window)`, where
/// `s^2` is the pooled within-window variance and `tau` the integrated
/// autocorrelation time of the within-window residuals (self-consistent
/// truncation at `5 tau`). The series is flagged stationary when every
/// pairwise difference of means is within three standard errors of a
/// difference.
pub fn batch_means(series: &[f64], window: usize) -> Result<BatchMeans> {
    if window < 2 {
        return Err(Error::invalid("window", "must be at least 2"));
    }
    if series.len() < 4 * window {
        return Err(Error::SeriesTooShort {
            len: series.len(),
            min: 4 * window,
        });
    }
    let batches: Vec<&[f64]> = series.chunks_exact(window).collect();
    let means: Vec<f64> = batches.iter().map(|b| mean(b)).collect();
    let residuals: Vec<Vec<f64>> = batches
        .iter()
        .zip(&means)
        .map(|(b, m)| b.iter().map(|x| x - m).collect())
        .collect();
    let c0: f64 = residuals.iter().flatten().map(|r| r * r).sum();
    let within_var = c0 / (batches.len() * (window - 1)) as f64;

    let mut tau = 1.0;
    if c0 > 0.0 {
        for k in 1..window / 2 {
            let ck: f64 = residuals
                .iter()
                .map(|r| {
                    r[..window - k]
                        .iter()
                        .zip(&r[k..])
                        .map(|(a, b)| a * b)
                        .sum::<f64>()
                })
                .sum();
            tau += 2.0 * ck / c0;
            if k as f64 >= 5.0 * tau {
                break;
            }
        }
    }
    let tau = tau.max(1.0);
    let pooled_se = (2.0 * within_var * tau / window as f64).sqrt();
    let (lo, hi) = means
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &m| {
            (lo.min(m), hi.max(m))
        });
    Ok(BatchMeans {
        stationary: hi - lo <= 3.0 * pooled_se,
        means,
        pooled_se,
    })
}
