//! Expectation values shared by the Gaussian, pure-state and density-matrix backends.

use serde::Serialize;

/// Mean occupations below this make the Mandel Q parameter undefined.
pub const Q_UNDEFINED_THRESHOLD: f64 = 1e-12;

/// One of the two bosonic modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Subsystem {
    /// Collective matter mode, quadratures `(X, P)`, operator `b`.
    Matter,
    /// Cavity mode, quadratures `(q, p)`, operator `a`.
    Light,
}

impl Subsystem {
    /// Offset of the position quadrature in `(X, P, q, p)`.
    pub fn offset(self) -> usize {
        match self {
            Subsystem::Matter => 0,
            Subsystem::Light => 2,
        }
    }
}

/// `(Var(n) − ⟨n⟩)/⟨n⟩`, or `None` when `⟨n⟩` is numerically zero.
pub fn mandel_q(mean_n: f64, var_n: f64) -> Option<f64> {
    if mean_n < Q_UNDEFINED_THRESHOLD {
        None
    } else {
        Some((var_n - mean_n) / mean_n)
    }
}

/// First and second moments of a single mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeMoments {
    pub mean_position: f64,
    pub mean_momentum: f64,
    pub position_sq: f64,
    pub momentum_sq: f64,
    /// `⟨(xp + px)/2⟩`.
    pub sym_cross: f64,
    pub mean_n: f64,
    pub var_n: f64,
}

impl ModeMoments {
    pub fn var_position(&self) -> f64 {
        self.position_sq - self.mean_position * self.mean_position
    }

    pub fn var_momentum(&self) -> f64 {
        self.momentum_sq - self.mean_momentum * self.mean_momentum
    }

    pub fn covariance(&self) -> f64 {
        self.sym_cross - self.mean_position * self.mean_momentum
    }

    pub fn mandel_q(&self) -> Option<f64> {
        mandel_q(self.mean_n, self.var_n)
    }
}

/// Moments of both modes at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuantumObservables {
    pub matter: ModeMoments,
    pub light: ModeMoments,
}

impl QuantumObservables {
    pub fn mode(&self, subsystem: Subsystem) -> &ModeMoments {
        match subsystem {
            Subsystem::Matter => &self.matter,
            Subsystem::Light => &self.light,
        }
    }

    pub fn mean_x(&self) -> f64 {
        self.matter.mean_position
    }

    pub fn mean_p_matter(&self) -> f64 {
        self.matter.mean_momentum
    }

    pub fn mean_q(&self) -> f64 {
        self.light.mean_position
    }

    pub fn mean_p_light(&self) -> f64 {
        self.light.mean_momentum
    }

    pub fn mean_n_photon(&self) -> f64 {
        self.light.mean_n
    }

    pub fn q_photon(&self) -> Option<f64> {
        self.light.mandel_q()
    }

    pub fn mean_n_matter(&self) -> f64 {
        self.matter.mean_n
    }

    pub fn q_matter(&self) -> Option<f64> {
        self.matter.mandel_q()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn q_is_undefined_at_vacuum() {
        assert_eq!(mandel_q(0.0, 0.0), None);
        assert_eq!(mandel_q(1e-13, 1e-13), None);
        assert_eq!(mandel_q(4.0, 4.0), Some(0.0));
        assert_eq!(mandel_q(2.0, 0.0), Some(-1.0));
    }
}
