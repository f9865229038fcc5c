//! Truncated two-mode Fock space.
//!
//! Basis states `|n_b, n_a⟩` are stored matter-major: index
//! `n_b · (n_photon_max + 1) + n_a`, so photon number varies fastest.

mod evolve;
mod hamiltonian;
mod measure;
mod states;

pub use evolve::{
    evolve_state, evolve_state_with, EvolutionDiagnostics, EvolutionMethod, FockPropagator,
    KRYLOV_DIMENSION_THRESHOLD, KRYLOV_TOLERANCE,
};
pub use hamiltonian::{build_hamiltonian, number_operator, FockHamiltonian};
pub use measure::{measure, top_populations};
pub use states::{
    coherent_amplitudes, displaced_squeezed_amplitudes, displaced_squeezed_by_operators,
    prepare_scheme1, prepare_scheme2,
};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::observables::Subsystem;
use crate::semiclassical::GaussianState;

/// Default bound on the population of the two highest levels of either mode.
pub const DEFAULT_LEAK_TOLERANCE: f64 = 1e-8;

/// Smallest allowed cutoff.
pub const MIN_CUTOFF: usize = 4;

/// Basis cutoffs, inclusive, and the allowed population at the top of each mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Truncation {
    pub n_matter_max: usize,
    pub n_photon_max: usize,
    pub leak_tolerance: f64,
}

impl Truncation {
    pub fn new(n_matter_max: usize, n_photon_max: usize) -> Result<Self> {
        Truncation::with_leak_tolerance(n_matter_max, n_photon_max, DEFAULT_LEAK_TOLERANCE)
    }

    pub fn with_leak_tolerance(
        n_matter_max: usize,
        n_photon_max: usize,
        leak_tolerance: f64,
    ) -> Result<Self> {
        if n_matter_max < MIN_CUTOFF || n_photon_max < MIN_CUTOFF {
            return Err(Error::InvalidParameter {
                name: "truncation",
                reason: format!(
                    "cutoffs must be >= {MIN_CUTOFF}, got ({n_matter_max}, {n_photon_max})"
                ),
            });
        }
        if !(leak_tolerance > 0.0 && leak_tolerance < 1e-3) {
            return Err(Error::InvalidParameter {
                name: "leak_tolerance",
                reason: format!("must lie in (0, 1e-3), got {leak_tolerance}"),
            });
        }
        Ok(Truncation {
            n_matter_max,
            n_photon_max,
            leak_tolerance,
        })
    }

    /// Cutoffs `ceil(μ + 8√μ + 18)` from estimated mean occupations.
    pub fn auto(mu_matter: f64, mu_light: f64, leak_tolerance: f64) -> Result<Self> {
        let size = |mu: f64| {
            let mu = mu.max(0.0);
            ((mu + 8.0 * mu.sqrt() + 18.0).ceil() as usize).max(MIN_CUTOFF)
        };
        Truncation::with_leak_tolerance(size(mu_matter), size(mu_light), leak_tolerance)
    }

    /// Same tolerance, both cutoffs scaled by `factor` (rounded up).
    pub fn grown(&self, factor: f64) -> Self {
        let grow = |n: usize| ((n as f64 * factor).ceil() as usize).max(n + 1);
        Truncation {
            n_matter_max: grow(self.n_matter_max),
            n_photon_max: grow(self.n_photon_max),
            leak_tolerance: self.leak_tolerance,
        }
    }

    pub fn cutoff(&self, sub: Subsystem) -> usize {
        match sub {
            Subsystem::Matter => self.n_matter_max,
            Subsystem::Light => self.n_photon_max,
        }
    }

    pub fn dim(&self) -> usize {
        (self.n_matter_max + 1) * (self.n_photon_max + 1)
    }

    pub fn index(&self, n_matter: usize, n_photon: usize) -> usize {
        n_matter * (self.n_photon_max + 1) + n_photon
    }

    /// `(n_b, n_a)` of a basis index.
    pub fn levels(&self, index: usize) -> (usize, usize) {
        (index / (self.n_photon_max + 1), index % (self.n_photon_max + 1))
    }
}

/// Largest mean occupation of each mode along the exact Gaussian trajectory,
/// used to size a truncation before any Fock computation.
pub fn estimate_occupations(
    params: &crate::model::SystemParams,
    init: &GaussianState,
    t_max: f64,
) -> Result<(f64, f64)> {
    let n = 400usize;
    let times: Vec<f64> = (0..=n).map(|k| t_max * k as f64 / n as f64).collect();
    let times = if t_max > 0.0 { times } else { vec![0.0] };
    let states = crate::semiclassical::evolve_gaussian(init, params, &times)?;
    Ok(states.iter().fold((0.0f64, 0.0f64), |(m, l), s| {
        (
            m.max(s.mode_moments(Subsystem::Matter).mean_n),
            l.max(s.mode_moments(Subsystem::Light).mean_n),
        )
    }))
}

/// Normalized pure state on a truncated basis.
#[derive(Debug, Clone, PartialEq)]
pub struct FockState {
    pub amplitudes: Vec<Complex64>,
    pub trunc: Truncation,
}

impl FockState {
    /// Wraps amplitudes, checking length and normalization to 1e−10.
    pub fn new(amplitudes: Vec<Complex64>, trunc: Truncation) -> Result<Self> {
        if amplitudes.len() != trunc.dim() {
            return Err(Error::DimensionMismatch {
                expected: trunc.dim(),
                found: amplitudes.len(),
            });
        }
        let state = FockState { amplitudes, trunc };
        let norm = state.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidState(format!("state norm is {norm}, expected 1")));
        }
        Ok(state)
    }

    /// Product state from single-mode amplitudes.
    pub fn product(matter: &[Complex64], light: &[Complex64], trunc: Truncation) -> Result<Self> {
        if matter.len() != trunc.n_matter_max + 1 {
            return Err(Error::DimensionMismatch {
                expected: trunc.n_matter_max + 1,
                found: matter.len(),
            });
        }
        if light.len() != trunc.n_photon_max + 1 {
            return Err(Error::DimensionMismatch {
                expected: trunc.n_photon_max + 1,
                found: light.len(),
            });
        }
        let amplitudes = matter
            .iter()
            .flat_map(|&m| light.iter().map(move |&l| m * l))
            .collect();
        FockState::new(amplitudes, trunc)
    }

    pub fn vacuum(trunc: Truncation) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); trunc.dim()];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        FockState { amplitudes, trunc }
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matter_major_indexing() {
        let t = Truncation::new(5, 7).unwrap();
        assert_eq!(t.dim(), 48);
        assert_eq!(t.index(2, 3), 19);
        assert_eq!(t.levels(19), (2, 3));
    }

    #[test]
    fn truncation_validation() {
        assert!(Truncation::new(3, 10).is_err());
        assert!(Truncation::with_leak_tolerance(10, 10, 1e-3).is_err());
        assert!(Truncation::with_leak_tolerance(10, 10, 0.0).is_err());
        let auto = Truncation::auto(4.0, 0.0, DEFAULT_LEAK_TOLERANCE).unwrap();
        assert_eq!((auto.n_matter_max, auto.n_photon_max), (38, 18));
        let g = auto.grown(1.25);
        assert_eq!((g.n_matter_max, g.n_photon_max), (48, 23));
    }

    #[test]
    fn state_checks_dimension_and_norm() {
        let t = Truncation::new(4, 4).unwrap();
        assert!(FockState::new(vec![Complex64::new(1.0, 0.0); 3], t).is_err());
        let mut v = vec![Complex64::new(0.0, 0.0); 25];
        v[3] = Complex64::new(0.5, 0.0);
        assert!(FockState::new(v, t).is_err());
        assert_eq!(FockState::vacuum(t).norm(), 1.0);
    }
}
