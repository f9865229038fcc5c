//! Beating-period estimation from a sampled quadrature trajectory.

use crate::error::{Error, Result};
use crate::model::PolaritonSpectrum;
use crate::series::boxcar;

/// Estimates the beating period `4π/Δ̄` of `values(times)`.
///
/// The series is demodulated at the carrier `Σ̄/2` from `hint`; the in-phase
/// and quadrature envelopes are smoothed over one carrier period, and the
/// stronger of the two is timed through its zero crossings, which are spaced
/// by half a beating period. Requires a uniform grid spanning at least two
/// hinted periods.
pub fn extract_beating_period(times: &[f64], values: &[f64], hint: &PolaritonSpectrum) -> Result<f64> {
    if times.len() != values.len() {
        return Err(Error::DimensionMismatch {
            expected: times.len(),
            found: values.len(),
        });
    }
    let t_hint = hint.period_checked()?;
    let span = match (times.first(), times.last()) {
        (Some(a), Some(b)) if times.len() >= 3 => b - a,
        _ => 0.0,
    };
    if span < 2.0 * t_hint * (1.0 - 1e-9) {
        return Err(Error::InsufficientSpan(format!(
            "series spans {span:.4}, need at least two beating periods ({:.4})",
            2.0 * t_hint
        )));
    }
    let carrier = 0.5 * hint.sigma_bar;
    let dt = times[1] - times[0];
    if dt * carrier > 0.5 {
        return Err(Error::InvalidGrid(format!(
            "sampling step {dt} under-resolves the carrier frequency {carrier}"
        )));
    }
    let (in_phase, quadrature): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(values)
        .map(|(t, v)| {
            let (s, c) = (carrier * t).sin_cos();
            (v * c, v * s)
        })
        .unzip();
    let width = hint.fast_period();
    let (ts, i_env) = boxcar(times, &in_phase, width);
    let (_, q_env) = boxcar(times, &quadrature, width);
    let power = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
    let env = if power(&i_env) >= power(&q_env) { i_env } else { q_env };
    let crossings: Vec<f64> = ts
        .windows(2)
        .zip(env.windows(2))
        .filter(|(_, e)| e[0] == 0.0 || (e[0] < 0.0) != (e[1] < 0.0))
        .filter(|(_, e)| e[1] != 0.0)
        .map(|(t, e)| t[0] + (t[1] - t[0]) * e[0] / (e[0] - e[1]))
        .collect();
    if crossings.len() < 2 {
        return Err(Error::InsufficientSpan(format!(
            "found {} envelope zero crossings, need at least 2",
            crossings.len()
        )));
    }
    // Least-squares slope of crossing time against crossing index.
    let n = crossings.len() as f64;
    let km = 0.5 * (n - 1.0);
    let tm = crossings.iter().sum::<f64>() / n;
    let (num, den) = crossings
        .iter()
        .enumerate()
        .fold((0.0, 0.0), |(num, den), (k, t)| {
            let dk = k as f64 - km;
            (num + dk * (t - tm), den + dk * dk)
        });
    Ok(2.0 * num / den)
}
