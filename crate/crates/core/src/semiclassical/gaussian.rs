use nalgebra::{Matrix2, Matrix4, SymmetricEigen, Vector2, Vector4};
use num_complex::Complex64;
use serde::Serialize;

use super::ClassicalPropagator;
use crate::error::{Error, Result};
use crate::observables::{ModeMoments, QuantumObservables, Subsystem};

/// Tolerance on the uncertainty relation and on covariance symmetry.
const STATE_TOLERANCE: f64 = 1e-9;

/// Mean vector and covariance of `(X, P, q, p)`; the vacuum has `Σ = I/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianState {
    pub mean: Vector4<f64>,
    pub cov: Matrix4<f64>,
}

impl GaussianState {
    pub fn vacuum() -> Self {
        GaussianState {
            mean: Vector4::zeros(),
            cov: Matrix4::identity() * 0.5,
        }
    }

    /// Displaced squeezed matter wave packet centred at `X₀` with position
    /// variance `w²/2`, cavity in vacuum.
    pub fn scheme1(x0: f64, w: f64) -> Result<Self> {
        if !(w.is_finite() && w > 0.0) {
            return Err(Error::InvalidParameter {
                name: "w",
                reason: format!("must be > 0, got {w}"),
            });
        }
        if !x0.is_finite() {
            return Err(Error::InvalidParameter {
                name: "x0",
                reason: "must be finite".into(),
            });
        }
        let w2 = w * w;
        Ok(GaussianState {
            mean: Vector4::new(x0, 0.0, 0.0, 0.0),
            cov: Matrix4::from_diagonal(&Vector4::new(0.5 * w2, 0.5 / w2, 0.5, 0.5)),
        })
    }

    /// Matter ground state, cavity coherent state `|α⟩`.
    pub fn scheme2(alpha: Complex64) -> Result<Self> {
        if !(alpha.re.is_finite() && alpha.im.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "alpha",
                reason: "must be finite".into(),
            });
        }
        let s = std::f64::consts::SQRT_2;
        Ok(GaussianState {
            mean: Vector4::new(0.0, 0.0, s * alpha.re, s * alpha.im),
            cov: Matrix4::identity() * 0.5,
        })
    }

    /// Checks symmetry, positive semidefiniteness and the per-mode uncertainty bound.
    pub fn validate(&self) -> Result<()> {
        if self.mean.iter().chain(self.cov.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidState("non-finite moments".into()));
        }
        if (self.cov - self.cov.transpose()).amax() > STATE_TOLERANCE {
            return Err(Error::InvalidState("covariance is not symmetric".into()));
        }
        let min_eig = SymmetricEigen::new(self.cov)
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if min_eig < -STATE_TOLERANCE {
            return Err(Error::InvalidState(format!(
                "covariance has negative eigenvalue {min_eig}"
            )));
        }
        for sub in [Subsystem::Matter, Subsystem::Light] {
            let det = self.heisenberg_product(sub);
            if det < 0.25 - STATE_TOLERANCE {
                return Err(Error::InvalidState(format!(
                    "{sub:?} block violates the uncertainty bound: det = {det}"
                )));
            }
        }
        Ok(())
    }

    pub fn propagate(&self, m: &ClassicalPropagator) -> GaussianState {
        let cov = m.matrix * self.cov * m.matrix.transpose();
        GaussianState {
            mean: m.matrix * self.mean,
            cov: (cov + cov.transpose()) * 0.5,
        }
    }

    pub fn block(&self, sub: Subsystem) -> (Vector2<f64>, Matrix2<f64>) {
        let o = sub.offset();
        (
            Vector2::new(self.mean[o], self.mean[o + 1]),
            self.cov.fixed_view::<2, 2>(o, o).into_owned(),
        )
    }

    /// `σ_x² σ_p² − σ_xp²`, bounded below by 1/4.
    pub fn heisenberg_product(&self, sub: Subsystem) -> f64 {
        self.block(sub).1.determinant()
    }

    /// Single-mode moments, including number statistics of the Gaussian.
    pub fn mode_moments(&self, sub: Subsystem) -> ModeMoments {
        let (mu, s) = self.block(sub);
        let mean_n = 0.5 * (s.trace() + mu.norm_squared() - 1.0);
        let var_n = 0.5 * (s * s).trace() - 0.25 + (mu.transpose() * s * mu)[0];
        ModeMoments {
            mean_position: mu[0],
            mean_momentum: mu[1],
            position_sq: s[(0, 0)] + mu[0] * mu[0],
            momentum_sq: s[(1, 1)] + mu[1] * mu[1],
            sym_cross: s[(0, 1)] + mu[0] * mu[1],
            mean_n,
            var_n: var_n.max(0.0),
        }
    }

    pub fn observables(&self) -> QuantumObservables {
        QuantumObservables {
            matter: self.mode_moments(Subsystem::Matter),
            light: self.mode_moments(Subsystem::Light),
        }
    }
}

/// 1-σ iso-density ellipse of one mode's phase-space distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EllipseSummary {
    pub center: [f64; 2],
    /// Square roots of the block eigenvalues, major first.
    pub semi_axes: [f64; 2],
    /// Angle of the major axis from the position axis, in `(−π/2, π/2]`.
    pub angle: f64,
}

pub fn covariance_ellipse(state: &GaussianState, sub: Subsystem) -> EllipseSummary {
    EllipseSummary::from_moments(&state.mode_moments(sub))
}

impl EllipseSummary {
    /// Ellipse of the Gaussian with the same first and second moments.
    pub fn from_moments(m: &ModeMoments) -> Self {
        let (a, b, c) = (m.var_position(), m.var_momentum(), m.covariance());
        let mean = 0.5 * (a + b);
        let radius = (0.25 * (a - b) * (a - b) + c * c).sqrt();
        let major = (mean + radius).max(0.0).sqrt();
        let minor = (mean - radius).max(0.0).sqrt();
        let mut angle = if radius == 0.0 {
            0.0
        } else {
            0.5 * (2.0 * c).atan2(a - b)
        };
        if angle <= -std::f64::consts::FRAC_PI_2 {
            angle += std::f64::consts::PI;
        }
        EllipseSummary {
            center: [m.mean_position, m.mean_momentum],
            semi_axes: [major, minor],
            angle,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn vacuum_is_circle() {
        let e = covariance_ellipse(&GaussianState::vacuum(), Subsystem::Light);
        assert_relative_eq!(e.semi_axes[0], 0.5f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(e.semi_axes[1], 0.5f64.sqrt(), epsilon = 1e-15);
        assert_eq!(e.angle, 0.0);
    }

    #[test]
    fn squeezed_matter_axes() {
        let s = GaussianState::scheme1(3.0, 0.5).unwrap();
        let e = covariance_ellipse(&s, Subsystem::Matter);
        assert_relative_eq!(e.semi_axes[0] / e.semi_axes[1], 4.0, epsilon = 1e-12);
        // Momentum is the long axis for w < 1.
        assert_relative_eq!(e.angle, std::f64::consts::FRAC_PI_2, epsilon = 1e-12);
        assert_eq!(e.center, [3.0, 0.0]);
        let wide = GaussianState::scheme1(0.0, 2.0).unwrap();
        assert_eq!(covariance_ellipse(&wide, Subsystem::Matter).angle, 0.0);
    }

    #[test]
    fn rotated_block_angle() {
        let mut s = GaussianState::vacuum();
        s.cov[(2, 2)] = 1.0;
        s.cov[(3, 3)] = 1.0;
        s.cov[(2, 3)] = 0.5;
        s.cov[(3, 2)] = 0.5;
        let e = covariance_ellipse(&s, Subsystem::Light);
        assert_relative_eq!(e.angle, std::f64::consts::FRAC_PI_4, epsilon = 1e-12);
        assert_relative_eq!(e.semi_axes[0], 1.5f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn coherent_number_statistics() {
        let s = GaussianState::scheme2(Complex64::new(2.0, 0.0)).unwrap();
        let m = s.mode_moments(Subsystem::Light);
        assert_relative_eq!(m.mean_n, 4.0, epsilon = 1e-12);
        assert_relative_eq!(m.var_n, 4.0, epsilon = 1e-12);
        assert!(m.mandel_q().unwrap().abs() < 1e-12);
        assert_eq!(s.mode_moments(Subsystem::Matter).mandel_q(), None);
    }

    #[test]
    fn squeezed_number_statistics() {
        // Displaced squeezed vacuum: n̄ = |α|² + sinh²r, Var = |α|²e^{−2r} + sinh²(2r)/2.
        let (x0, w) = (3.0f64, 0.5f64);
        let s = GaussianState::scheme1(x0, w).unwrap();
        let m = s.mode_moments(Subsystem::Matter);
        let r = -w.ln();
        let sinh2 = r.sinh().powi(2);
        assert_relative_eq!(m.mean_n, sinh2 + 0.5 * x0 * x0, epsilon = 1e-12);
        let var = 0.5 * x0 * x0 * w * w + 2.0 * sinh2 * (sinh2 + 1.0);
        assert_relative_eq!(m.var_n, var, epsilon = 1e-12);
    }

    #[test]
    fn invalid_states_are_rejected() {
        assert!(GaussianState::scheme1(1.0, 0.0).is_err());
        let mut s = GaussianState::vacuum();
        s.cov[(0, 0)] = 0.1;
        assert!(s.validate().is_err());
        let mut t = GaussianState::vacuum();
        t.cov[(0, 1)] = 0.3;
        assert!(t.validate().is_err());
    }
}
