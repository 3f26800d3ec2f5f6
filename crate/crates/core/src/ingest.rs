//! Price series loading, mispricing against a fair value, and AR(2) fits.

use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dated prices with an optional fair-value series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PriceSeries {
    /// Days since the first row.
    pub timestamps: Vec<f64>,
    pub price: Vec<f64>,
    pub fair_value: Option<Vec<f64>>,
}

impl PriceSeries {
    pub fn len(&self) -> usize {
        self.price.len()
    }

    pub fn is_empty(&self) -> bool {
        self.price.is_empty()
    }

    /// Median spacing between consecutive timestamps.
    pub fn median_spacing(&self) -> Option<f64> {
        let mut gaps: Vec<f64> = self.timestamps.windows(2).map(|w| w[1] - w[0]).collect();
        if gaps.is_empty() {
            return None;
        }
        gaps.sort_by(f64::total_cmp);
        let mid = gaps.len() / 2;
        Some(if gaps.len() % 2 == 1 {
            gaps[mid]
        } else {
            0.5 * (gaps[mid - 1] + gaps[mid])
        })
    }
}

/// Reads `date,price[,fair_value]` with ISO-8601 dates. Row numbers in
/// errors count the header as row 1.
pub fn load_csv(path: impl AsRef<Path>) -> Result<PriceSeries> {
    let file = std::fs::File::open(path.as_ref())
        .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    read_csv(file)
}

pub fn read_csv<R: std::io::Read>(reader: R) -> Result<PriceSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::ParseError {
            row: 1,
            message: e.to_string(),
        })?
        .clone();
    let names: Vec<&str> = headers.iter().collect();
    let has_fair = match names.as_slice() {
        ["date", "price"] => false,
        ["date", "price", "fair_value"] => true,
        other => {
            return Err(Error::ParseError {
                row: 1,
                message: format!(
                    "expected header date,price[,fair_value], got {}",
                    other.join(",")
                ),
            })
        }
    };
    let mut first: Option<NaiveDate> = None;
    let mut series = PriceSeries {
        timestamps: Vec::new(),
        price: Vec::new(),
        fair_value: has_fair.then(Vec::new),
    };
    for (i, record) in rdr.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| Error::ParseError {
            row,
            message: e.to_string(),
        })?;
        let field = |k: usize| record.get(k).unwrap_or("");
        let date =
            NaiveDate::parse_from_str(field(0), "%Y-%m-%d").map_err(|e| Error::ParseError {
                row,
                message: format!("bad date {:?}: {e}", field(0)),
            })?;
        let parse_num = |k: usize, name: &str| -> Result<f64> {
            field(k).parse::<f64>().map_err(|e| Error::ParseError {
                row,
                message: format!("bad {name} {:?}: {e}", field(k)),
            })
        };
        let price = parse_num(1, "price")?;
        if !(price > 0.0 && price.is_finite()) {
            return Err(Error::NonPositivePrice { row });
        }
        let origin = *first.get_or_insert(date);
        let t = (date - origin).num_days() as f64;
        if let Some(&prev) = series.timestamps.last() {
            if t <= prev {
                return Err(Error::NonMonotonicDates { row });
            }
        }
        if let Some(fv) = series.fair_value.as_mut() {
            let v = parse_num(2, "fair_value")?;
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::NonPositivePrice { row });
            }
            fv.push(v);
        }
        series.timestamps.push(t);
        series.price.push(price);
    }
    Ok(series)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MispricingMode {
    /// `ln(P / V)`.
    #[default]
    LogRatio,
    /// `P - V`.
    Difference,
}

/// Mispricing against the series' fair value, or against a constant.
pub fn mispricing(
    series: &PriceSeries,
    mode: MispricingMode,
    constant_fair_value: Option<f64>,
) -> Result<Vec<f64>> {
    let fair: Vec<f64> = match (constant_fair_value, &series.fair_value) {
        (Some(v), _) => {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid("constant_fair_value", "must be positive"));
            }
            vec![v; series.len()]
        }
        (None, Some(fv)) => fv.clone(),
        (None, None) => return Err(Error::MissingFairValue),
    };
    Ok(series
        .price
        .iter()
        .zip(&fair)
        .map(|(p, v)| match mode {
            MispricingMode::LogRatio => (p / v).ln(),
            MispricingMode::Difference => p - v,
        })
        .collect())
}

pub const DEFAULT_ROLLING_WINDOW: usize = 521;

/// Centered rolling mean; the window shrinks symmetrically-as-possible
/// (clipped) near the ends.
pub fn rolling_mean(values: &[f64], window: usize) -> Result<Vec<f64>> {
    if window == 0 {
        return Err(Error::invalid("window", "must be at least 1"));
    }
    let n = values.len();
    let half_lo = (window - 1) / 2;
    let half_hi = window / 2;
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for v in values {
        prefix.push(prefix.last().unwrap() + v);
    }
    Ok((0..n)
        .map(|i| {
            let lo = i.saturating_sub(half_lo);
            let hi = (i + half_hi + 1).min(n);
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect())
}

/// Series with its fair value replaced by a centered rolling mean of the
/// price (when no fair value column is present).
pub fn with_rolling_fair_value(series: &PriceSeries, window: usize) -> Result<PriceSeries> {
    let mut out = series.clone();
    if out.fair_value.is_none() {
        out.fair_value = Some(rolling_mean(&series.price, window)?);
    }
    Ok(out)
}

/// Linearly interpolates onto a uniform grid with step `dt` starting at the
/// first timestamp.
pub fn resample_uniform(times: &[f64], values: &[f64], dt: f64) -> Vec<f64> {
    if times.is_empty() {
        return Vec::new();
    }
    let t0 = times[0];
    let span = times[times.len() - 1] - t0;
    let count = (span / dt + 1e-9).floor() as usize + 1;
    let mut j = 0;
    (0..count)
        .map(|k| {
            let t = t0 + k as f64 * dt;
            while j + 1 < times.len() - 1 && times[j + 1] <= t {
                j += 1;
            }
            if j + 1 >= times.len() {
                return values[j];
            }
            let w = ((t - times[j]) / (times[j + 1] - times[j])).clamp(0.0, 1.0);
            values[j] + w * (values[j + 1] - values[j])
        })
        .collect()
}

/// Crude damped-oscillator fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OscillatorFit {
    pub phi1: f64,
    pub phi2: f64,
    pub intercept: f64,
    /// Present only when the fit is oscillatory.
    pub period_estimate: Option<f64>,
    pub damping_estimate: Option<f64>,
    pub residual_variance: f64,
    /// Wald statistic for `phi1 = phi2 = 0` (chi-square, two degrees of freedom).
    pub wald_statistic: f64,
}

impl OscillatorFit {
    pub fn is_oscillatory(&self) -> bool {
        self.period_estimate.is_some()
    }
}

pub const MIN_AR_LEN: usize = 50;
/// 99% quantile of the chi-square distribution with two degrees of freedom.
const WALD_CRITICAL: f64 = 9.21;

/// Least-squares fit of `x_t = c + phi1 x_{t-1} + phi2 x_{t-2} + e_t`.
///
/// The fit is reported oscillatory when the characteristic roots are
/// complex (`phi1^2 + 4 phi2 < 0`) and the lag coefficients are jointly
/// significant at the 1% level; then the period is
/// `2 pi dt / arccos(phi1 / (2 sqrt(-phi2)))` and the damping rate is
/// `-ln(-phi2) / (2 dt)`.
pub fn fit_ar2(x: &[f64], dt: f64) -> Result<OscillatorFit> {
    if x.len() < MIN_AR_LEN {
        return Err(Error::SeriesTooShort {
            len: x.len(),
            min: MIN_AR_LEN,
        });
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid("dt", "must be positive"));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::numerical(None, "non-finite value in series"));
    }
    // Normal equations on centred regressors for numerical stability.
    let y = &x[2..];
    let l1 = &x[1..x.len() - 1];
    let l2 = &x[..x.len() - 2];
    let n = y.len() as f64;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / n;
    let (my, m1, m2) = (mean(y), mean(l1), mean(l2));
    let mut s11 = 0.0;
    let mut s12 = 0.0;
    let mut s22 = 0.0;
    let mut s1y = 0.0;
    let mut s2y = 0.0;
    for k in 0..y.len() {
        let (a, b, c) = (l1[k] - m1, l2[k] - m2, y[k] - my);
        s11 += a * a;
        s12 += a * b;
        s22 += b * b;
        s1y += a * c;
        s2y += b * c;
    }
    let det = s11 * s22 - s12 * s12;
    let scale = s11 * s22;
    if !(det > 1e-14 * scale) || scale == 0.0 {
        return Err(Error::numerical(
            None,
            "lagged regressors are collinear (constant series?)",
        ));
    }
    let phi1 = (s22 * s1y - s12 * s2y) / det;
    let phi2 = (s11 * s2y - s12 * s1y) / det;
    let intercept = my - phi1 * m1 - phi2 * m2;
    let rss: f64 = (0..y.len())
        .map(|k| {
            let e = y[k] - intercept - phi1 * l1[k] - phi2 * l2[k];
            e * e
        })
        .sum();
    let residual_variance = rss / (n - 3.0);
    // beta^T (X^T X) beta / sigma^2 on the centred block.
    let quad = phi1 * phi1 * s11 + 2.0 * phi1 * phi2 * s12 + phi2 * phi2 * s22;
    let wald_statistic = if residual_variance > 0.0 {
        quad / residual_variance
    } else {
        f64::INFINITY
    };

    let complex_roots = phi1 * phi1 + 4.0 * phi2 < 0.0;
    let (period_estimate, damping_estimate) = if complex_roots && wald_statistic > WALD_CRITICAL {
        let cos = (phi1 / (2.0 * (-phi2).sqrt())).clamp(-1.0, 1.0);
        let angle = cos.acos();
        let period = std::f64::consts::TAU * dt / angle;
        (Some(period), Some(-(-phi2).ln() / (2.0 * dt)))
    } else {
        (None, None)
    };
    Ok(OscillatorFit {
        phi1,
        phi2,
        intercept,
        period_estimate,
        damping_estimate,
        residual_variance,
        wald_statistic,
    })
}

/// Result of the end-to-end pipeline.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IngestReport {
    pub rows: usize,
    /// Uniform step (days) used for the fit.
    pub dt_days: f64,
    pub fair_value_source: String,
    pub mode: MispricingMode,
    pub fit: OscillatorFit,
}

/// Options of [`fit_series`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitOptions {
    pub mode: MispricingMode,
    pub constant_fair_value: Option<f64>,
    pub rolling_window: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            mode: MispricingMode::LogRatio,
            constant_fair_value: None,
            rolling_window: DEFAULT_ROLLING_WINDOW,
        }
    }
}

/// Fair value, mispricing, uniform resampling and AR(2) fit.
pub fn fit_series(series: &PriceSeries, options: &FitOptions) -> Result<IngestReport> {
    let (prepared, source) = match (options.constant_fair_value, &series.fair_value) {
        (Some(v), _) => (series.clone(), format!("constant {v}")),
        (None, Some(_)) => (series.clone(), "column".to_string()),
        (None, None) => (
            with_rolling_fair_value(series, options.rolling_window)?,
            format!("rolling mean over {} rows", options.rolling_window),
        ),
    };
    let x = mispricing(&prepared, options.mode, options.constant_fair_value)?;
    let dt = series.median_spacing().ok_or(Error::SeriesTooShort {
        len: series.len(),
        min: MIN_AR_LEN,
    })?;
    let uniform = resample_uniform(&series.timestamps, &x, dt);
    let fit = fit_ar2(&uniform, dt)?;
    Ok(IngestReport {
        rows: series.len(),
        dt_days: dt,
        fair_value_source: source,
        mode: options.mode,
        fit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrate::{IntegratorConfig, Method, NoiseStream};
    use crate::oscillator::{simulate_cartesian, DampedOscillatorModel};
    use proptest::prelude::*;

    fn parse(text: &str) -> Result<PriceSeries> {
        read_csv(text.as_bytes())
    }

    #[test]
    fn loads_valid_rows() {
        let s = parse("date,price\n2020-01-01,10.5\n2020-01-08,11\n").unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.timestamps, vec![0.0, 7.0]);
        assert!(s.fair_value.is_none());
        let s = parse("date,price,fair_value\n2020-01-01,10.5,10\n2020-02-01,11,10\n").unwrap();
        assert_eq!(s.fair_value.unwrap(), vec![10.0, 10.0]);
    }

    #[test]
    fn reports_bad_rows() {
        assert_eq!(
            parse("date,price\n2020-01-01,1\n2020-01-02,-1\n").unwrap_err(),
            Error::NonPositivePrice { row: 3 }
        );
        assert_eq!(
            parse("date,price\n2020-01-05,1\n2020-01-02,2\n").unwrap_err(),
            Error::NonMonotonicDates { row: 3 }
        );
        assert!(matches!(
            parse("date,price\n2020-13-01,1\n"),
            Err(Error::ParseError { row: 2, .. })
        ));
        assert!(matches!(
            parse("when,price\n2020-01-01,1\n"),
            Err(Error::ParseError { row: 1, .. })
        ));
        assert!(matches!(
            parse("date,price\n2020-01-01,abc\n"),
            Err(Error::ParseError { row: 2, .. })
        ));
    }

    #[test]
    fn loads_from_disk() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        std::fs::write(&path, "date,price\n2000-01-01,1\n2000-01-03,2\n").unwrap();
        assert_eq!(load_csv(&path).unwrap().timestamps, vec![0.0, 2.0]);
        assert!(matches!(
            load_csv(dir.path().join("missing.csv")),
            Err(Error::Io(_))
        ));
    }

    #[test]
    fn mispricing_examples() {
        let s = PriceSeries {
            timestamps: vec![0.0, 1.0],
            price: vec![100.0, 110.0],
            fair_value: Some(vec![100.0, 100.0]),
        };
        assert_eq!(
            mispricing(&s, MispricingMode::Difference, None).unwrap(),
            vec![0.0, 10.0]
        );
        let same = PriceSeries {
            fair_value: Some(s.price.clone()),
            ..s.clone()
        };
        assert_eq!(
            mispricing(&same, MispricingMode::LogRatio, None).unwrap(),
            vec![0.0, 0.0]
        );
        assert_eq!(
            mispricing(&same, MispricingMode::Difference, None).unwrap(),
            vec![0.0, 0.0]
        );
        let e = PriceSeries {
            price: vec![std::f64::consts::E * 100.0, 100.0],
            ..s.clone()
        };
        assert!((mispricing(&e, MispricingMode::LogRatio, None).unwrap()[0] - 1.0).abs() < 1e-15);
        let bare = PriceSeries {
            fair_value: None,
            ..s
        };
        assert_eq!(
            mispricing(&bare, MispricingMode::LogRatio, None).unwrap_err(),
            Error::MissingFairValue
        );
        assert_eq!(
            mispricing(&bare, MispricingMode::Difference, Some(100.0)).unwrap(),
            vec![0.0, 10.0]
        );
    }

    #[test]
    fn rolling_mean_clips_at_edges() {
        let m = rolling_mean(&[1.0, 2.0, 3.0, 4.0, 5.0], 3).unwrap();
        assert_eq!(m, vec![1.5, 2.0, 3.0, 4.0, 4.5]);
    }

    #[test]
    fn resampling_is_linear() {
        let r = resample_uniform(&[0.0, 1.0, 3.0], &[0.0, 1.0, 5.0], 0.5);
        assert_eq!(r, vec![0.0, 0.5, 1.0, 2.0, 3.0, 4.0, 5.0]);
    }

    #[test]
    fn sinusoid_period() {
        let x: Vec<f64> = (0..1000).map(|t| (0.5 * t as f64).cos()).collect();
        let fit = fit_ar2(&x, 1.0).unwrap();
        let p = fit.period_estimate.unwrap();
        assert!((p - 4.0 * std::f64::consts::PI).abs() < 0.02 * 4.0 * std::f64::consts::PI);
    }

    #[test]
    fn white_noise_is_rarely_oscillatory() {
        let mut oscillatory = 0;
        let runs = 200;
        for seed in 0..runs {
            let mut z = [0.0];
            let mut stream = NoiseStream::new(seed, 0, 1);
            let x: Vec<f64> = (0..500)
                .map(|k| {
                    stream.standard_normals(k, &mut z);
                    z[0]
                })
                .collect();
            if fit_ar2(&x, 1.0).unwrap().is_oscillatory() {
                oscillatory += 1;
            }
        }
        assert!(
            oscillatory as f64 <= 0.1 * runs as f64,
            "{oscillatory}/{runs}"
        );
    }

    #[test]
    fn damped_oscillator_period() {
        // With noise on both coordinates, x sampled every D is ARMA(2,1)
        // whose MA part vanishes at D = period / 4; finer sampling biases the
        // least-squares AR(2) period low.
        let m = DampedOscillatorModel::harmonic(0.1, 0.3);
        let every = 157;
        let cfg = IntegratorConfig::new(0.01, every * 4000, Method::StratonovichHeun)
            .recording_every(every);
        let t = simulate_cartesian(&m, 1.0, 0.0, &cfg, &mut NoiseStream::new(3, 0, 2)).unwrap();
        let fit = fit_ar2(&t.component(0), every as f64 * 0.01).unwrap();
        let p = fit.period_estimate.unwrap_or_else(|| panic!("{fit:?}"));
        assert!(
            (p - std::f64::consts::TAU).abs() < 0.05 * std::f64::consts::TAU,
            "period {p}"
        );
        let damping = fit.damping_estimate.unwrap();
        assert!((damping - 0.1).abs() < 0.05, "damping {damping}");
    }

    #[test]
    fn short_series_rejected() {
        assert_eq!(
            fit_ar2(&[1.0; 10], 1.0).unwrap_err(),
            Error::SeriesTooShort { len: 10, min: 50 }
        );
    }

    proptest! {
        #[test]
        fn log_ratio_scale_invariant(prices in prop::collection::vec((0.1f64..100.0, 0.1f64..100.0), 1..50), k in 0.01f64..100.0) {
            let n = prices.len();
            let s = PriceSeries {
                timestamps: (0..n).map(|i| i as f64).collect(),
                price: prices.iter().map(|p| p.0).collect(),
                fair_value: Some(prices.iter().map(|p| p.1).collect()),
            };
            let scaled = PriceSeries {
                price: s.price.iter().map(|p| p * k).collect(),
                fair_value: s.fair_value.as_ref().map(|v| v.iter().map(|p| p * k).collect()),
                ..s.clone()
            };
            let a = mispricing(&s, MispricingMode::LogRatio, None).unwrap();
            let b = mispricing(&scaled, MispricingMode::LogRatio, None).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }

        #[test]
        fn period_amplitude_invariant(scale in 1e-3f64..1e3, omega in 0.2f64..2.0) {
            let x: Vec<f64> = (0..400).map(|t| (omega * t as f64).sin() + 0.3 * (0.9 * omega * t as f64).cos()).collect();
            let y: Vec<f64> = x.iter().map(|v| v * scale).collect();
            let a = fit_ar2(&x, 1.0).unwrap();
            let b = fit_ar2(&y, 1.0).unwrap();
            match (a.period_estimate, b.period_estimate) {
                (Some(p), Some(q)) => prop_assert!((p - q).abs() < 1e-8 * p),
                (None, None) => {}
                other => prop_assert!(false, "{other:?}"),
            }
        }
    }
}
