//! Closed-form first moments and photon numbers.

use super::PropagatorFactory;
use crate::error::{Error, Result};
use crate::model::{polariton_spectrum, ModelVariant, PolaritonSpectrum, SystemParams};

/// Mass a position grid may leave outside its span.
pub const GRID_MASS_TOLERANCE: f64 = 1e-6;

fn require(params: &SystemParams, operation: &'static str, allowed: &[ModelVariant]) -> Result<()> {
    if allowed.contains(&params.variant()) {
        Ok(())
    } else {
        Err(Error::UnsupportedVariant {
            operation,
            variant: params.variant(),
        })
    }
}

/// `⟨X(t)⟩` for a matter wave packet released at rest from `X₀`:
/// `X₀[cos(Σ̄t/2) cos(Δ̄t/2) + β sin(Σ̄t/2) sin(Δ̄t/2)]`.
pub fn mean_x_closed_form(params: &SystemParams, x0: f64, t: f64) -> Result<f64> {
    require(params, "mean_x_closed_form", &[ModelVariant::Full, ModelVariant::Rwa])?;
    let sp = polariton_spectrum(params)?;
    Ok(x0 * envelope_carrier(&sp, t))
}

fn envelope_carrier(sp: &PolaritonSpectrum, t: f64) -> f64 {
    let (s1, c1) = (0.5 * sp.sigma_bar * t).sin_cos();
    let (s2, c2) = (0.5 * sp.delta_bar * t).sin_cos();
    c1 * c2 + sp.beta * s1 * s2
}

/// First row `(f₁, f₂, f₃, f₄)` of the classical propagator, so that
/// `X(t) = f₁X(0) + f₂P(0) + f₃q(0) + f₄p(0)`.
///
/// The full model uses the partial-fraction expressions; other variants and the
/// degenerate point read the row off the propagator.
pub fn f_functions(params: &SystemParams, t: f64) -> Result<[f64; 4]> {
    let sp = polariton_spectrum(params)?;
    if params.variant() != ModelVariant::Full || sp.delta_bar < 1e-8 {
        let m = PropagatorFactory::new(params)?.at(t).matrix;
        return Ok([m[(0, 0)], m[(0, 1)], m[(0, 2)], m[(0, 3)]]);
    }
    let (g, l) = (params.gamma(), params.lambda());
    let (wp, wm) = (sp.omega_plus, sp.omega_minus);
    let ds = sp.delta_bar * sp.sigma_bar;
    let (sp_t, cp_t) = (wp * t).sin_cos();
    let (sm_t, cm_t) = (wm * t).sin_cos();
    Ok([
        envelope_carrier(&sp, t),
        (wp * wp - g * g) * sp_t / (wp * ds) - (wm * wm - g * g) * sm_t / (wm * ds),
        -l * (wp * sp_t - wm * sm_t) / ds,
        l * g * (cp_t - cm_t) / ds,
    ])
}

/// `w²f₁² + f₂²/w² + f₃² + f₄²`, twice the position variance of the Scheme I packet.
pub fn position_variance(params: &SystemParams, w: f64, t: f64) -> Result<f64> {
    let f = f_functions(params, t)?;
    Ok(w * w * f[0] * f[0] + f[1] * f[1] / (w * w) + f[2] * f[2] + f[3] * f[3])
}

/// Marginal density of the matter position at time `t` on `x_grid`.
///
/// Fails with [`Error::GridTooNarrow`] if the grid span misses more than
/// [`GRID_MASS_TOLERANCE`] of the probability.
pub fn position_density(
    params: &SystemParams,
    x0: f64,
    w: f64,
    t: f64,
    x_grid: &[f64],
) -> Result<Vec<f64>> {
    if !(w.is_finite() && w > 0.0) {
        return Err(Error::InvalidParameter {
            name: "w",
            reason: format!("must be > 0, got {w}"),
        });
    }
    if x_grid.len() < 2 || x_grid.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidGrid(
            "position grid needs at least two finite points".into(),
        ));
    }
    if x_grid.windows(2).any(|p| p[1] <= p[0]) {
        return Err(Error::InvalidGrid("position grid must be strictly increasing".into()));
    }
    let f = f_functions(params, t)?;
    let center = f[0] * x0;
    let two_var = w * w * f[0] * f[0] + f[1] * f[1] / (w * w) + f[2] * f[2] + f[3] * f[3];
    let width = two_var.sqrt();
    let (lo, hi) = (x_grid[0], x_grid[x_grid.len() - 1]);
    let missing =
        0.5 * libm::erfc((center - lo) / width) + 0.5 * libm::erfc((hi - center) / width);
    if missing > GRID_MASS_TOLERANCE {
        return Err(Error::GridTooNarrow { missing });
    }
    let norm = 1.0 / (std::f64::consts::PI.sqrt() * width);
    Ok(x_grid
        .iter()
        .map(|&x| norm * (-(x - center) * (x - center) / two_var).exp())
        .collect())
}

/// Photon number of Scheme I minus its value for the matter ground state.
///
/// Full variant only. At `λ = 0` the modes decouple and the difference is zero.
pub fn delta_n_closed_form(params: &SystemParams, x0: f64, w: f64, t: f64) -> Result<f64> {
    require(params, "delta_n_closed_form", &[ModelVariant::Full])?;
    let l = params.lambda();
    if l == 0.0 {
        return Ok(0.0);
    }
    let g = params.gamma();
    let sp = polariton_spectrum(params)?;
    let (wp, wm) = (sp.omega_plus, sp.omega_minus);
    let sd2 = (sp.sigma_bar * sp.delta_bar).powi(2);
    let s1 = (0.5 * sp.sigma_bar * t).sin();
    let (s2, c2) = (0.5 * sp.delta_bar * t).sin_cos();
    let slow = 0.5 * sp.sigma_bar * (wm * t).sin();
    let squeeze = (g * g * s1 * s1 * s2 * s2 + (wp * s1 * c2 - slow).powi(2)) / sd2;
    let shift = g * g * (wm * s1 * c2 - slow).powi(2) / (wp * wp * wm * wm * sd2)
        + s1 * s1 * s2 * s2 / sd2;
    Ok(l * l * (1.0 / (w * w) - 1.0) * squeeze + l * l * (2.0 * x0 * x0 + w * w - 1.0) * shift)
}

/// `⟨n(t)⟩` of Scheme I under the RWA, where the ground-state baseline vanishes.
pub fn photon_number_rwa_closed_form(params: &SystemParams, x0: f64, w: f64, t: f64) -> Result<f64> {
    require(params, "photon_number_rwa_closed_form", &[ModelVariant::Rwa])?;
    let (g, l) = (params.gamma(), params.lambda());
    if l == 0.0 {
        return Ok(0.0);
    }
    let sp = polariton_spectrum(params)?;
    let (wp, wm) = (sp.omega_plus, sp.omega_minus);
    let sd2 = (sp.sigma_bar * sp.delta_bar).powi(2);
    let amp = l * l * (2.0 * x0 * x0 + (w - 1.0 / w).powi(2));
    let s1 = (0.5 * sp.sigma_bar * t).sin();
    let s2 = (0.5 * sp.delta_bar * t).sin();
    let shift = g - 0.25 * l * l;
    let bracket = wm * (shift + wp * wp) * (wp * t).sin() - wp * (shift + wm * wm) * (wm * t).sin();
    Ok(amp * (g + 1.0).powi(2) * s1 * s1 * s2 * s2 / (4.0 * sd2)
        + amp * bracket * bracket / (16.0 * wp * wp * wm * wm * sd2))
}

/// Long-time average of the Scheme I photon number above the ground-state baseline.
///
/// Full: `λ²f₁(w⁻² − 1) + λ²f₂(2X₀² + w² − 1)`. RWA: the Lorentzian
/// `λ²[2X₀² + (w − w⁻¹)²] / (8[(γ − 1)² + λ²])`. Both vanish at `λ = 0`.
pub fn delta_n_time_average(params: &SystemParams, x0: f64, w: f64) -> Result<f64> {
    require(params, "delta_n_time_average", &[ModelVariant::Full, ModelVariant::Rwa])?;
    let (g, l) = (params.gamma(), params.lambda());
    if l == 0.0 {
        return Ok(0.0);
    }
    match params.variant() {
        ModelVariant::Rwa => {
            let d = (g - 1.0).powi(2) + l * l;
            Ok(l * l / (8.0 * d) * (2.0 * x0 * x0 + (w - 1.0 / w).powi(2)))
        }
        _ => {
            let (f1, f2) = average_coefficients(params)?;
            Ok(l * l * f1 * (1.0 / (w * w) - 1.0) + l * l * f2 * (2.0 * x0 * x0 + w * w - 1.0))
        }
    }
}

/// The two coefficients of the full-model photon-number average.
pub fn average_coefficients(params: &SystemParams) -> Result<(f64, f64)> {
    require(params, "average_coefficients", &[ModelVariant::Full])?;
    let g = params.gamma();
    let sp = polariton_spectrum(params)?;
    let (p2, m2) = (sp.omega_plus.powi(2), sp.omega_minus.powi(2));
    let sd2 = (sp.sigma_bar * sp.delta_bar).powi(2);
    Ok((
        (p2 + m2 + 2.0 * g * g) / (8.0 * sd2),
        (2.0 * p2 * m2 + g * g * (p2 + m2)) / (8.0 * p2 * m2 * sd2),
    ))
}

/// Difference of the long-time photon number between the cavity prepared with
/// field quadrature `q(0) = C` and with `p(0) = C` (Scheme II).
///
/// `C` is the quadrature displacement, so the corresponding coherent amplitudes
/// are `α = C/√2` and `α = iC/√2`. Zero under the RWA.
pub fn delta_n_scheme2(params: &SystemParams, c: f64) -> Result<f64> {
    require(params, "delta_n_scheme2", &[ModelVariant::Full, ModelVariant::Rwa])?;
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::InvalidParameter {
            name: "C",
            reason: format!("must be > 0, got {c}"),
        });
    }
    let (g, l) = (params.gamma(), params.lambda());
    if params.variant() == ModelVariant::Rwa || l == 0.0 {
        return Ok(0.0);
    }
    let sp = polariton_spectrum(params)?;
    let (p2, m2) = (sp.omega_plus.powi(2), sp.omega_minus.powi(2));
    let sd2 = (sp.sigma_bar * sp.delta_bar).powi(2);
    Ok(l * l * c * c * ((2.0 * g + l * l) * (p2 + m2) - 4.0 * g) / (4.0 * sd2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semiclassical::{classical_propagator_expm, evolve_gaussian, GaussianState};
    use crate::observables::Subsystem;
    use approx::assert_relative_eq;

    fn full(g: f64, l: f64) -> SystemParams {
        SystemParams::new(g, l, ModelVariant::Full).unwrap()
    }

    #[test]
    fn mean_x_matches_exponential_row() {
        for variant in [ModelVariant::Full, ModelVariant::Rwa] {
            for &(g, l) in &[(1.0, 0.2), (0.8, 0.3), (1.3, 0.05), (1.0, 0.0), (0.6, 0.0)] {
                let p = SystemParams::new(g, l, variant).unwrap();
                for k in 0..40 {
                    let t = 2.7 * k as f64;
                    let m = classical_propagator_expm(&p, t).matrix;
                    let x = mean_x_closed_form(&p, 3.0, t).unwrap();
                    assert!((x - 3.0 * m[(0, 0)]).abs() < 1e-10, "{variant} {g} {l} {t}");
                }
            }
        }
    }

    #[test]
    fn f_functions_match_exponential_row() {
        for &(g, l) in &[(1.0, 0.2), (0.7, 0.9), (1.6, 0.4)] {
            let p = full(g, l);
            for k in 0..30 {
                let t = 3.1 * k as f64;
                let m = classical_propagator_expm(&p, t).matrix;
                let f = f_functions(&p, t).unwrap();
                for j in 0..4 {
                    assert!((f[j] - m[(0, j)]).abs() < 1e-10, "f{} at {g} {l} {t}", j + 1);
                }
            }
        }
    }

    #[test]
    fn no_diamagnetic_has_no_closed_form() {
        let p = SystemParams::new(1.0, 0.2, ModelVariant::NoDiamagnetic).unwrap();
        assert!(matches!(
            mean_x_closed_form(&p, 1.0, 1.0),
            Err(Error::UnsupportedVariant { .. })
        ));
        assert!(delta_n_time_average(&p, 1.0, 1.0).is_err());
        let rwa = p.with_variant(ModelVariant::Rwa).unwrap();
        assert!(delta_n_closed_form(&rwa, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn delta_n_matches_covariance_propagation() {
        for &(g, l, x0, w) in &[(1.0, 0.2, 3.0, 0.5), (0.8, 0.3, 2.0, 1.4), (1.3, 0.5, 0.0, 0.7)] {
            let p = full(g, l);
            let times: Vec<f64> = (0..200).map(|k| 0.9 * k as f64).collect();
            let a = evolve_gaussian(&GaussianState::scheme1(x0, w).unwrap(), &p, &times).unwrap();
            let b = evolve_gaussian(&GaussianState::vacuum(), &p, &times).unwrap();
            for ((sa, sb), &t) in a.iter().zip(&b).zip(&times) {
                let expected = sa.mode_moments(Subsystem::Light).mean_n
                    - sb.mode_moments(Subsystem::Light).mean_n;
                let got = delta_n_closed_form(&p, x0, w, t).unwrap();
                assert!((got - expected).abs() < 1e-10, "{g} {l} t={t}: {got} vs {expected}");
            }
        }
    }

    #[test]
    fn rwa_photon_number_matches_covariance_propagation() {
        for &(g, l, x0, w) in &[(1.0, 0.2, 3.0, 0.5), (0.8, 0.3, 2.0, 1.4)] {
            let p = SystemParams::new(g, l, ModelVariant::Rwa).unwrap();
            let times: Vec<f64> = (0..200).map(|k| 0.9 * k as f64).collect();
            let a = evolve_gaussian(&GaussianState::scheme1(x0, w).unwrap(), &p, &times).unwrap();
            for (s, &t) in a.iter().zip(&times) {
                let expected = s.mode_moments(Subsystem::Light).mean_n;
                let got = photon_number_rwa_closed_form(&p, x0, w, t).unwrap();
                assert!((got - expected).abs() < 1e-10, "{g} {l} t={t}: {got} vs {expected}");
            }
        }
    }

    #[test]
    fn resonant_average_is_coupling_independent() {
        for l in [0.05, 0.2, 0.5, 1.0] {
            let p = full(1.0, l);
            assert_relative_eq!(delta_n_time_average(&p, 3.0, 0.5).unwrap(), 2.53125, epsilon = 1e-12);
            let r = p.with_variant(ModelVariant::Rwa).unwrap();
            assert_relative_eq!(delta_n_time_average(&r, 3.0, 0.5).unwrap(), 2.53125, epsilon = 1e-12);
        }
    }

    #[test]
    fn average_coefficients_rational_forms() {
        for &(g, l) in &[(0.5, 0.3), (1.7, 0.8), (1.0, 0.2)] {
            let (f1, f2) = average_coefficients(&full(g, l)).unwrap();
            let den = g * g * ((g + l * l).powi(2) - 2.0) + 2.0 * g * l * l + 1.0;
            assert_relative_eq!(f1, (g * (3.0 * g + l * l) + 1.0) / (8.0 * den), max_relative = 1e-12);
            assert_relative_eq!(f2, (g * (g + l * l) + 3.0) / (8.0 * den), max_relative = 1e-12);
        }
    }

    #[test]
    fn rwa_average_is_symmetric() {
        let lo = SystemParams::new(0.8, 0.2, ModelVariant::Rwa).unwrap();
        let hi = SystemParams::new(1.2, 0.2, ModelVariant::Rwa).unwrap();
        assert_eq!(
            delta_n_time_average(&lo, 3.0, 0.5).unwrap(),
            delta_n_time_average(&hi, 3.0, 0.5).unwrap()
        );
    }

    #[test]
    fn scheme2_resonance_and_sign() {
        assert_relative_eq!(delta_n_scheme2(&full(1.0, 0.2), 1.0).unwrap(), 0.01, max_relative = 1e-12);
        let rwa = SystemParams::new(1.0, 0.2, ModelVariant::Rwa).unwrap();
        assert_eq!(delta_n_scheme2(&rwa, 3.0).unwrap(), 0.0);
        assert!(delta_n_scheme2(&full(0.5, 0.2), 1.0).unwrap() < 0.0);
        assert!(delta_n_scheme2(&full(1.5, 0.2), 1.0).unwrap() > 0.0);
        assert!(delta_n_scheme2(&full(1.0, 0.2), 0.0).is_err());
    }

    #[test]
    fn density_normalizes_and_checks_span() {
        let p = full(1.0, 0.2);
        let t = 17.0;
        let f = f_functions(&p, t).unwrap();
        let sd = (position_variance(&p, 0.5, t).unwrap() / 2.0).sqrt();
        let c = 3.0 * f[0];
        let n = 4001;
        let grid: Vec<f64> = (0..n)
            .map(|k| c - 8.0 * sd + 16.0 * sd * k as f64 / (n - 1) as f64)
            .collect();
        let rho = position_density(&p, 3.0, 0.5, t, &grid).unwrap();
        let h = grid[1] - grid[0];
        let mass: f64 = rho.windows(2).map(|r| 0.5 * h * (r[0] + r[1])).sum();
        assert!((mass - 1.0).abs() < 1e-8, "{mass}");
        let narrow: Vec<f64> = (0..11).map(|k| c - sd + 0.2 * sd * k as f64).collect();
        assert!(matches!(
            position_density(&p, 3.0, 0.5, t, &narrow),
            Err(Error::GridTooNarrow { .. })
        ));
    }

    #[test]
    fn density_at_zero_is_initial_packet() {
        let p = full(1.0, 0.2);
        let var = position_variance(&p, 0.5, 0.0).unwrap();
        assert_relative_eq!(var, 0.25, epsilon = 1e-15);
    }
}
