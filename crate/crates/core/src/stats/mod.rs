//! Empirical distributions, KS distances, periodograms and stationarity checks.

mod distribution;
mod series;
mod spectrum;

pub use distribution::{ks_statistic, ks_two_sample, EmpiricalDistribution};
pub use series::{autocorrelation, batch_means, mean, variance, BatchMeans};
pub use spectrum::{
    find_peaks, half_height_width, hann_window, periodogram, Periodogram, MIN_PERIODOGRAM_LEN,
};
