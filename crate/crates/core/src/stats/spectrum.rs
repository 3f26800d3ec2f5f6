use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};

/// One-sided power spectrum on an angular frequency axis.
///
/// Bin `k` sits at `omega_k = 2 pi k / (N dt)`, so one bin is `2 pi / (N dt)`
/// wide. Powers are normalized so that their sum equals the mean square of
/// the windowed, mean-removed series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Periodogram {
    pub frequencies: Vec<f64>,
    pub power: Vec<f64>,
    /// Mean square of the raw input, the scale for noise floors.
    pub input_power: f64,
}

impl Periodogram {
    pub fn bin_width(&self) -> f64 {
        self.frequencies.get(1).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.power.len()
    }

    pub fn is_empty(&self) -> bool {
        self.power.is_empty()
    }

    pub fn total_power(&self) -> f64 {
        self.power.iter().sum()
    }
}

pub const MIN_PERIODOGRAM_LEN: usize = 16;

/// Periodic Hann window `w_j = (1 - cos(2 pi j / N)) / 2`.
pub fn hann_window(n: usize) -> Vec<f64> {
    (0..n)
        .map(|j| 0.5 * (1.0 - (std::f64::consts::TAU * j as f64 / n as f64).cos()))
        .collect()
}

/// Mean-removed, Hann-windowed periodogram of a uniformly sampled series.
pub fn periodogram(series: &[f64], dt: f64) -> Result<Periodogram> {
    let n = series.len();
    if n < MIN_PERIODOGRAM_LEN {
        return Err(Error::SeriesTooShort {
            len: n,
            min: MIN_PERIODOGRAM_LEN,
        });
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid("dt", "must be positive"));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::numerical(None, "non-finite value in series"));
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let input_power = series.iter().map(|v| v * v).sum::<f64>() / n as f64;
    let window = hann_window(n);
    let mut buf: Vec<Complex<f64>> = series
        .iter()
        .zip(&window)
        .map(|(v, w)| Complex::new((v - mean) * w, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);

    let half = n / 2;
    let norm = 1.0 / (n as f64 * n as f64);
    let power: Vec<f64> = (0..=half)
        .map(|k| {
            let one_sided = if k == 0 || (n.is_multiple_of(2) && k == half) {
                1.0
            } else {
                2.0
            };
            one_sided * buf[k].norm_sqr() * norm
        })
        .collect();
    let bin = std::f64::consts::TAU / (n as f64 * dt);
    let frequencies = (0..=half).map(|k| k as f64 * bin).collect();
    Ok(Periodogram {
        frequencies,
        power,
        input_power,
    })
}

/// Local maxima below this fraction of the input power are treated as noise.
const PEAK_FLOOR: f64 = 1e-20;

/// The `count` strongest interior local maxima that are pairwise at least
/// `min_separation` apart, returned in ascending frequency. Each location is
/// refined by a parabola through the peak bin and its neighbours.
pub fn find_peaks(p: &Periodogram, count: usize, min_separation: f64) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::invalid("count", "must be at least 1"));
    }
    let floor = PEAK_FLOOR * p.input_power;
    let mut candidates: Vec<usize> = (1..p.power.len().saturating_sub(1))
        .filter(|&k| {
            p.power[k] > p.power[k - 1] && p.power[k] >= p.power[k + 1] && p.power[k] > floor
        })
        .collect();
    candidates.sort_by(|&i, &j| p.power[j].total_cmp(&p.power[i]).then(i.cmp(&j)));

    let mut chosen: Vec<f64> = Vec::with_capacity(count);
    for k in candidates {
        let f = refine(p, k);
        if chosen.iter().all(|c| (c - f).abs() >= min_separation) {
            chosen.push(f);
            if chosen.len() == count {
                break;
            }
        }
    }
    if chosen.len() < count {
        return Err(Error::InsufficientPeaks {
            requested: count,
            found: chosen.len(),
        });
    }
    chosen.sort_by(f64::total_cmp);
    Ok(chosen)
}

fn refine(p: &Periodogram, k: usize) -> f64 {
    let (a, b, c) = (p.power[k - 1], p.power[k], p.power[k + 1]);
    let denom = a - 2.0 * b + c;
    let offset = if denom < 0.0 {
        (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
    } else {
        0.0
    };
    p.frequencies[k] + offset * p.bin_width()
}

/// Full width at half maximum of the peak nearest `frequency`, with linear
/// interpolation between bins.
pub fn half_height_width(p: &Periodogram, frequency: f64) -> f64 {
    let bin = p.bin_width();
    let mut k = ((frequency / bin).round() as usize).clamp(1, p.power.len() - 2);
    // Climb to the local maximum.
    loop {
        if k + 1 < p.power.len() && p.power[k + 1] > p.power[k] {
            k += 1;
        } else if k > 0 && p.power[k - 1] > p.power[k] {
            k -= 1;
        } else {
            break;
        }
    }
    let half = 0.5 * p.power[k];
    let mut right = p.frequencies[p.power.len() - 1];
    for j in k..p.power.len() - 1 {
        if p.power[j + 1] < half {
            let t = (p.power[j] - half) / (p.power[j] - p.power[j + 1]);
            right = p.frequencies[j] + t * bin;
            break;
        }
    }
    let mut left = 0.0;
    for j in (1..=k).rev() {
        if p.power[j - 1] < half {
            let t = (p.power[j] - half) / (p.power[j] - p.power[j - 1]);
            left = p.frequencies[j] - t * bin;
            break;
        }
    }
    right - left
}
