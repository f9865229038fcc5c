//! Operations on sampled scalar time series: period averages, smoothing,
//! peak picking and exponential fits.

use serde::Serialize;

use crate::error::{Error, Result};

/// Default number of whole periods an average must span.
pub const DEFAULT_MIN_PERIODS: usize = 3;

/// Trapezoidal mean over whole periods.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeriodAverage {
    pub value: f64,
    /// Half the difference between the `K`- and `(K − 1)`-period averages.
    pub error_estimate: f64,
    pub periods: usize,
}

/// How [`time_average`] treats the window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AverageWindow {
    pub period: f64,
    pub min_periods: usize,
}

impl AverageWindow {
    pub fn new(period: f64) -> Self {
        AverageWindow {
            period,
            min_periods: DEFAULT_MIN_PERIODS,
        }
    }

    pub fn with_min_periods(mut self, min_periods: usize) -> Self {
        self.min_periods = min_periods;
        self
    }
}

/// Mean of `values` over the largest whole number `K` of periods that fits the
/// sampled span, starting at `times[0]`.
pub fn time_average(times: &[f64], values: &[f64], window: AverageWindow) -> Result<PeriodAverage> {
    if times.len() != values.len() {
        return Err(Error::DimensionMismatch {
            expected: times.len(),
            found: values.len(),
        });
    }
    if !(window.period.is_finite() && window.period > 0.0) {
        return Err(Error::InvalidParameter {
            name: "period",
            reason: format!("must be finite and > 0, got {}", window.period),
        });
    }
    crate::semiclassical::check_time_grid(times)?;
    let min_periods = window.min_periods.max(2);
    let span = match (times.first(), times.last()) {
        (Some(a), Some(b)) if times.len() >= 2 => b - a,
        _ => 0.0,
    };
    let k = (span / window.period + 1e-9).floor() as usize;
    if k < min_periods {
        return Err(Error::WindowTooShort(format!(
            "series spans {:.4} = {:.3} periods, need at least {min_periods}",
            span,
            span / window.period
        )));
    }
    let t0 = times[0];
    let mean_k = trapezoid(times, values, t0 + k as f64 * window.period) / (k as f64 * window.period);
    let mean_k1 =
        trapezoid(times, values, t0 + (k - 1) as f64 * window.period) / ((k - 1) as f64 * window.period);
    Ok(PeriodAverage {
        value: mean_k,
        error_estimate: 0.5 * (mean_k - mean_k1).abs(),
        periods: k,
    })
}

/// Like [`time_average`] for series with undefined samples, which are filled
/// by linear interpolation between their defined neighbours.
pub fn time_average_partial(
    times: &[f64],
    values: &[Option<f64>],
    window: AverageWindow,
) -> Result<PeriodAverage> {
    let filled = fill_gaps(values)
        .ok_or_else(|| Error::InvalidState("series has no defined samples".into()))?;
    time_average(times, &filled, window)
}

/// Linear interpolation over `None` samples (index-based, for uniform grids);
/// leading and trailing gaps take the nearest defined value.
pub fn fill_gaps(values: &[Option<f64>]) -> Option<Vec<f64>> {
    let defined: Vec<(usize, f64)> = values
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|x| (i, x)))
        .collect();
    let (&(first_i, first_v), &(last_i, last_v)) = (defined.first()?, defined.last()?);
    let mut out = vec![0.0; values.len()];
    out[..=first_i].iter_mut().for_each(|o| *o = first_v);
    out[last_i..].iter_mut().for_each(|o| *o = last_v);
    for pair in defined.windows(2) {
        let ((i0, v0), (i1, v1)) = (pair[0], pair[1]);
        for (i, o) in out.iter_mut().enumerate().take(i1 + 1).skip(i0) {
            let f = (i - i0) as f64 / (i1 - i0) as f64;
            *o = v0 + f * (v1 - v0);
        }
    }
    Some(out)
}

/// `∫ values dt` from `times[0]` to `t_end`, interpolating linearly inside the last interval.
fn trapezoid(times: &[f64], values: &[f64], t_end: f64) -> f64 {
    let mut acc = 0.0;
    for i in 1..times.len() {
        let (a, b) = (times[i - 1], times[i]);
        if a >= t_end {
            break;
        }
        if b <= t_end {
            acc += 0.5 * (b - a) * (values[i - 1] + values[i]);
        } else {
            let f = (t_end - a) / (b - a);
            let v_end = values[i - 1] + f * (values[i] - values[i - 1]);
            acc += 0.5 * (t_end - a) * (values[i - 1] + v_end);
            break;
        }
    }
    acc
}

/// Centered moving average over `width` time units (uniform sampling assumed).
/// Points closer than half a window to either end are dropped; returns the
/// retained times and smoothed values.
pub fn boxcar(times: &[f64], values: &[f64], width: f64) -> (Vec<f64>, Vec<f64>) {
    if times.len() < 2 {
        return (Vec::new(), Vec::new());
    }
    let dt = times[1] - times[0];
    let half = ((0.5 * width / dt).round() as usize).max(1);
    if times.len() <= 2 * half {
        return (Vec::new(), Vec::new());
    }
    let mut prefix = vec![0.0; values.len() + 1];
    for (i, v) in values.iter().enumerate() {
        prefix[i + 1] = prefix[i] + v;
    }
    // Trapezoidal weights, so whole periods of the window width average out exactly.
    (half..values.len() - half)
        .map(|i| {
            let sum = prefix[i + half + 1] - prefix[i - half]
                - 0.5 * (values[i - half] + values[i + half]);
            (times[i], sum / (2 * half) as f64)
        })
        .unzip()
}

/// Indices of strict local maxima that are also the largest value within
/// `min_separation` samples on either side.
pub fn local_maxima(values: &[f64], min_separation: usize) -> Vec<usize> {
    let n = values.len();
    let sep = min_separation.max(1);
    if n <= 2 * sep {
        return Vec::new();
    }
    (sep..n - sep)
        .filter(|&i| {
            values[i] > values[i - 1]
                && values[i] >= values[i + 1]
                && (i - sep..=i + sep).all(|j| values[j] <= values[i])
        })
        .collect()
}

/// Least-squares fit `y = A e^{−rate·t}` to positive samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentialFit {
    pub rate: f64,
    pub amplitude: f64,
    /// RMS of the log-residuals.
    pub log_residual: f64,
}

pub fn fit_exponential(times: &[f64], values: &[f64]) -> Result<ExponentialFit> {
    if times.len() != values.len() {
        return Err(Error::DimensionMismatch {
            expected: times.len(),
            found: values.len(),
        });
    }
    if times.len() < 2 || values.iter().any(|&v| v.is_nan() || v <= 0.0) {
        return Err(Error::InsufficientSpan(
            "exponential fit needs at least two positive samples".into(),
        ));
    }
    let n = times.len() as f64;
    let logs: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let tm = times.iter().sum::<f64>() / n;
    let lm = logs.iter().sum::<f64>() / n;
    let sxx: f64 = times.iter().map(|t| (t - tm).powi(2)).sum();
    let sxy: f64 = times.iter().zip(&logs).map(|(t, l)| (t - tm) * (l - lm)).sum();
    let slope = sxy / sxx;
    let intercept = lm - slope * tm;
    let log_residual = (times
        .iter()
        .zip(&logs)
        .map(|(t, l)| (l - intercept - slope * t).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(ExponentialFit {
        rate: -slope,
        amplitude: intercept.exp(),
        log_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid(t_max: f64, n: usize) -> Vec<f64> {
        (0..=n).map(|k| t_max * k as f64 / n as f64).collect()
    }

    #[test]
    fn constant_series() {
        let t = grid(30.0, 300);
        let v = vec![2.5; t.len()];
        let a = time_average(&t, &v, AverageWindow::new(10.0)).unwrap();
        assert_relative_eq!(a.value, 2.5, epsilon = 1e-14);
        assert_eq!(a.periods, 3);
        assert!(a.error_estimate < 1e-14);
    }

    #[test]
    fn full_periods_of_cosine_vanish() {
        let period = 4.0 * std::f64::consts::PI / 0.2;
        let t = grid(2.0 * period, 4000);
        let v: Vec<f64> = t.iter().map(|t| (0.1 * t).cos()).collect();
        let a = time_average(&t, &v, AverageWindow::new(period).with_min_periods(2)).unwrap();
        assert!(a.value.abs() < 1e-10, "{}", a.value);
    }

    #[test]
    fn short_window_is_rejected() {
        let t = grid(25.0, 100);
        let v = vec![1.0; t.len()];
        assert!(matches!(
            time_average(&t, &v, AverageWindow::new(10.0)),
            Err(Error::WindowTooShort(_))
        ));
    }

    #[test]
    fn gaps_are_interpolated() {
        let v = [None, Some(1.0), None, None, Some(4.0), None];
        assert_eq!(fill_gaps(&v).unwrap(), vec![1.0, 1.0, 2.0, 3.0, 4.0, 4.0]);
        assert_eq!(fill_gaps(&[None, None]), None);
    }

    #[test]
    fn boxcar_removes_fast_oscillation() {
        let t = grid(100.0, 10_000);
        let v: Vec<f64> = t.iter().map(|t| 1.0 + (2.0 * std::f64::consts::PI * t).sin()).collect();
        let (ts, s) = boxcar(&t, &v, 1.0);
        assert_eq!(ts.len(), s.len());
        assert!(s.iter().all(|x| (x - 1.0).abs() < 1e-3));
    }

    #[test]
    fn maxima_and_fit() {
        let t = grid(60.0, 6000);
        let v: Vec<f64> = t.iter().map(|t| 3.0 * (-0.05 * t).exp() * (1.0 + (t).cos())).collect();
        let peaks = local_maxima(&v, 100);
        assert!(peaks.len() >= 8);
        let (pt, pv): (Vec<f64>, Vec<f64>) = peaks.iter().map(|&i| (t[i], v[i])).unzip();
        let fit = fit_exponential(&pt, &pv).unwrap();
        assert!((fit.rate - 0.05).abs() < 2e-3, "{fit:?}");
        assert!(fit_exponential(&[0.0, 1.0], &[1.0, -1.0]).is_err());
    }
}
