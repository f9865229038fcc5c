//! Dynamics of the dimensionless Hopfield light-matter Hamiltonian
//!
//! `H = (P² + X²)/2 + γ(p² + q²)/2 − λqP + λ²q²/2`
//!
//! with three backends: exact Gaussian propagation ([`semiclassical`]),
//! truncated Fock-space unitary evolution ([`fock`]) and a zero-temperature
//! Lindblad master equation for a leaky cavity ([`lindblad`]). [`experiments`]
//! assembles these into reproducible scenarios and parameter sweeps.

pub mod constants;
pub mod error;
pub mod experiments;
pub mod fock;
pub mod lindblad;
pub mod linalg;
pub mod model;
pub mod observables;
pub mod semiclassical;
pub mod series;

pub use error::{Error, ErrorClass, Result};
pub use model::{
    lambda_from_ion_parameters, polariton_spectrum, stability_check, BeatingPeriod, IonParameters,
    ModelVariant, PolaritonSpectrum, Stability, SystemParams,
};
pub use observables::{ModeMoments, QuantumObservables, Subsystem};
