//! Exact Gaussian dynamics of the quadratic Hamiltonian.
//!
//! The classical flow `M(t) = exp(A t)` of the drift matrix propagates first
//! moments directly and covariances as `M Σ Mᵀ`. Because the Hamiltonian is
//! quadratic this is exact for every Gaussian state, with no time stepping.

mod closed_form;
mod gaussian;

pub use closed_form::{
    average_coefficients, delta_n_closed_form, delta_n_scheme2, delta_n_time_average, f_functions,
    mean_x_closed_form, photon_number_rwa_closed_form, position_density, position_variance,
};
pub use gaussian::{covariance_ellipse, EllipseSummary, GaussianState};

use nalgebra::{Matrix4, Vector4};

use crate::error::{Error, Result};
use crate::linalg::expm4;
use crate::model::{stability_check, Stability, SystemParams};

/// Below this splitting the partial-fraction propagator is ill-conditioned and
/// the matrix exponential is used instead.
pub const SPECTRAL_SPLIT_THRESHOLD: f64 = 1e-8;

/// Linear map `(X, P, q, p)(0) → (X, P, q, p)(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalPropagator {
    pub time: f64,
    pub matrix: Matrix4<f64>,
}

impl ClassicalPropagator {
    pub fn apply(&self, v: &Vector4<f64>) -> Vector4<f64> {
        self.matrix * v
    }

    /// Largest entry of `MᵀJM − J`.
    pub fn symplectic_defect(&self) -> f64 {
        let j = crate::linalg::symplectic_form();
        (self.matrix.transpose() * j * self.matrix - j).amax()
    }
}

/// Precomputed spectral data for repeated propagator evaluation.
#[derive(Debug, Clone)]
pub struct PropagatorFactory {
    drift: Matrix4<f64>,
    kind: FactoryKind,
}

#[derive(Debug, Clone)]
// Built once per parameter set, so the size gap is irrelevant.
#[allow(clippy::large_enum_variant)]
enum FactoryKind {
    /// `M(t) = Σ± P±[cos(Ω±t) I + A sin(Ω±t)/Ω±]`.
    Spectral {
        omega: [f64; 2],
        projector: [Matrix4<f64>; 2],
        projected_drift: [Matrix4<f64>; 2],
    },
    Exponential,
}

impl PropagatorFactory {
    pub fn new(params: &SystemParams) -> Result<Self> {
        let omega = match stability_check(params) {
            Stability::Stable { frequencies } => frequencies,
            Stability::Unstable { max_real_part } => {
                return Err(Error::Unstable { max_real_part })
            }
        };
        let drift = params.drift_matrix();
        if omega[0] - omega[1] < SPECTRAL_SPLIT_THRESHOLD {
            return Ok(PropagatorFactory {
                drift,
                kind: FactoryKind::Exponential,
            });
        }
        let a2 = drift * drift;
        let id = Matrix4::identity();
        let (wp2, wm2) = (omega[0] * omega[0], omega[1] * omega[1]);
        let p_plus = (a2 + id * wm2) / (wm2 - wp2);
        let p_minus = (a2 + id * wp2) / (wp2 - wm2);
        Ok(PropagatorFactory {
            drift,
            kind: FactoryKind::Spectral {
                omega,
                projected_drift: [p_plus * drift, p_minus * drift],
                projector: [p_plus, p_minus],
            },
        })
    }

    pub fn at(&self, t: f64) -> ClassicalPropagator {
        let matrix = match &self.kind {
            FactoryKind::Spectral {
                omega,
                projector,
                projected_drift,
            } => {
                let mut m = Matrix4::zeros();
                for k in 0..2 {
                    let (s, c) = (omega[k] * t).sin_cos();
                    m += projector[k] * c + projected_drift[k] * (s / omega[k]);
                }
                m
            }
            FactoryKind::Exponential => expm4(&(self.drift * t)),
        };
        ClassicalPropagator { time: t, matrix }
    }
}

/// Classical propagator `M(t)` for a stable parameter set.
pub fn classical_propagator(params: &SystemParams, t: f64) -> Result<ClassicalPropagator> {
    Ok(PropagatorFactory::new(params)?.at(t))
}

/// `exp(A t)` by scaling and squaring, without any spectral shortcut.
pub fn classical_propagator_expm(params: &SystemParams, t: f64) -> ClassicalPropagator {
    ClassicalPropagator {
        time: t,
        matrix: expm4(&(params.drift_matrix() * t)),
    }
}

pub(crate) fn check_time_grid(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidGrid("time grid contains non-finite values".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid("time grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Exact Gaussian evolution on a strictly increasing time grid.
pub fn evolve_gaussian(
    init: &GaussianState,
    params: &SystemParams,
    times: &[f64],
) -> Result<Vec<GaussianState>> {
    init.validate()?;
    check_time_grid(times)?;
    let factory = PropagatorFactory::new(params)?;
    Ok(times
        .iter()
        .map(|&t| init.propagate(&factory.at(t)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelVariant;

    #[test]
    fn identity_at_zero() {
        for variant in ModelVariant::ALL {
            let p = SystemParams::new(1.1, 0.3, variant).unwrap();
            let m = classical_propagator(&p, 0.0).unwrap();
            assert!((m.matrix - Matrix4::identity()).amax() < 1e-14);
        }
    }

    #[test]
    fn spectral_matches_exponential() {
        for variant in ModelVariant::ALL {
            let p = SystemParams::new(1.0, 0.2, variant).unwrap();
            let a = classical_propagator(&p, 10.0).unwrap();
            let b = classical_propagator_expm(&p, 10.0);
            assert!((a.matrix - b.matrix).amax() < 1e-10, "{variant}");
        }
    }

    #[test]
    fn decoupled_rotations() {
        let p = SystemParams::new(0.7, 0.0, ModelVariant::Full).unwrap();
        let t = 3.3;
        let m = classical_propagator(&p, t).unwrap().matrix;
        let (s1, c1) = t.sin_cos();
        let (s2, c2) = (0.7 * t).sin_cos();
        let expected = Matrix4::new(
            c1, s1, 0.0, 0.0, //
            -s1, c1, 0.0, 0.0, //
            0.0, 0.0, c2, s2, //
            0.0, 0.0, -s2, c2,
        );
        assert!((m - expected).amax() < 1e-12);
    }

    #[test]
    fn degenerate_point_uses_exponential() {
        let p = SystemParams::new(1.0, 0.0, ModelVariant::Full).unwrap();
        let m = classical_propagator(&p, 2.0).unwrap();
        assert!(m.symplectic_defect() < 1e-12);
        assert!((m.matrix[(0, 0)] - 2f64.cos()).abs() < 1e-12);
    }

    #[test]
    fn unstable_is_rejected() {
        let p = SystemParams::new(0.1, 2.0, ModelVariant::NoDiamagnetic).unwrap();
        assert!(matches!(
            classical_propagator(&p, 1.0),
            Err(Error::Unstable { .. })
        ));
    }

    #[test]
    fn grid_must_increase() {
        let p = SystemParams::new(1.0, 0.2, ModelVariant::Full).unwrap();
        let s = GaussianState::vacuum();
        assert!(evolve_gaussian(&s, &p, &[0.0, 1.0, 1.0]).is_err());
        assert!(evolve_gaussian(&s, &p, &[0.0, f64::NAN]).is_err());
        assert_eq!(evolve_gaussian(&s, &p, &[0.0, 2.0]).unwrap().len(), 2);
    }
}
