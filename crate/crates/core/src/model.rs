//! Model parameters, polariton spectrum and classical stability.
//!
//! Everything is expressed in the dimensionless units of the Hopfield
//! Hamiltonian: energies in units of the matter frequency, times in units of
//! its inverse, quadratures scaled so that the vacuum variance is 1/2.
//!
//! Phase-space coordinates are always ordered `(X, P, q, p)`: matter position
//! and momentum followed by the cavity field quadratures.

use std::fmt;

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use crate::constants::{ELEMENTARY_CHARGE, SPEED_OF_LIGHT, VACUUM_PERMITTIVITY};
use crate::error::{Error, Result};

/// Splittings below this are treated as an exact degeneracy.
pub const DEGENERACY_EPSILON: f64 = 1e-12;

/// Tolerance on drift eigenvalue real parts for the stability test.
pub const STABILITY_TOLERANCE: f64 = 1e-10;

/// Which form of the light-matter Hamiltonian to simulate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelVariant {
    /// Bilinear coupling plus the diamagnetic `λ²q²/2` term.
    Full,
    /// Bilinear coupling only.
    NoDiamagnetic,
    /// Rotating-wave approximation: excitation-conserving coupling only.
    Rwa,
}

impl ModelVariant {
    pub const ALL: [ModelVariant; 3] = [
        ModelVariant::Full,
        ModelVariant::NoDiamagnetic,
        ModelVariant::Rwa,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelVariant::Full => "full",
            ModelVariant::NoDiamagnetic => "no_diamagnetic",
            ModelVariant::Rwa => "rwa",
        }
    }
}

impl fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Validated dimensionless parameters of one simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SystemParams {
    gamma: f64,
    lambda: f64,
    variant: ModelVariant,
    kappa: f64,
}

impl SystemParams {
    /// `gamma` is the cavity-to-matter frequency ratio, `lambda` the collective
    /// coupling. The RWA branches are only real for `λ² < 4γ`.
    pub fn new(gamma: f64, lambda: f64, variant: ModelVariant) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::InvalidParameter {
                name: "gamma",
                reason: format!("must be finite and > 0, got {gamma}"),
            });
        }
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "lambda",
                reason: format!("must be finite and >= 0, got {lambda}"),
            });
        }
        if variant == ModelVariant::Rwa && lambda * lambda >= 4.0 * gamma {
            return Err(Error::InvalidParameter {
                name: "lambda",
                reason: format!(
                    "the RWA polariton branches require lambda^2 < 4 gamma \
                     (lambda^2 = {}, 4 gamma = {})",
                    lambda * lambda,
                    4.0 * gamma
                ),
            });
        }
        Ok(SystemParams {
            gamma,
            lambda,
            variant,
            kappa: 0.0,
        })
    }

    pub fn with_kappa(mut self, kappa: f64) -> Result<Self> {
        if !(kappa.is_finite() && kappa >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "kappa",
                reason: format!("must be finite and >= 0, got {kappa}"),
            });
        }
        self.kappa = kappa;
        Ok(self)
    }

    /// Same coupling and detuning, different Hamiltonian form.
    pub fn with_variant(self, variant: ModelVariant) -> Result<Self> {
        SystemParams::new(self.gamma, self.lambda, variant)?.with_kappa(self.kappa)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn variant(&self) -> ModelVariant {
        self.variant
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Generator `A` of the classical flow `d/dt (X, P, q, p) = A (X, P, q, p)`.
    pub fn drift_matrix(&self) -> Matrix4<f64> {
        let (g, l) = (self.gamma, self.lambda);
        match self.variant {
            ModelVariant::Full => Matrix4::new(
                0.0, 1.0, -l, 0.0, //
                -1.0, 0.0, 0.0, 0.0, //
                0.0, 0.0, 0.0, g, //
                0.0, l, -g - l * l, 0.0,
            ),
            ModelVariant::NoDiamagnetic => Matrix4::new(
                0.0, 1.0, -l, 0.0, //
                -1.0, 0.0, 0.0, 0.0, //
                0.0, 0.0, 0.0, g, //
                0.0, l, -g, 0.0,
            ),
            // H = (X² + P²)/2 + γ(q² + p²)/2 + (λ/2)(X p − P q)
            ModelVariant::Rwa => {
                let h = 0.5 * l;
                Matrix4::new(
                    0.0, 1.0, -h, 0.0, //
                    -1.0, 0.0, 0.0, -h, //
                    h, 0.0, 0.0, g, //
                    0.0, h, -g, 0.0,
                )
            }
        }
    }
}

/// Beating period `4π/Δ̄`, or an explicit marker when the branches coincide.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BeatingPeriod {
    Finite(f64),
    Infinite,
}

impl BeatingPeriod {
    pub fn value(self) -> Option<f64> {
        match self {
            BeatingPeriod::Finite(t) => Some(t),
            BeatingPeriod::Infinite => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PolaritonSpectrum {
    pub omega_plus: f64,
    pub omega_minus: f64,
    /// `Ω₊ + Ω₋`, the fast rotation frequency (times two).
    pub sigma_bar: f64,
    /// `Ω₊ − Ω₋`, the vacuum Rabi splitting.
    pub delta_bar: f64,
    /// Weight of the `sin·sin` term in the closed-form `⟨X(t)⟩`.
    pub beta: f64,
    pub period: BeatingPeriod,
}

impl PolaritonSpectrum {
    fn from_branches(omega_plus: f64, omega_minus: f64, beta: impl FnOnce(f64, f64) -> f64) -> Self {
        let sigma_bar = omega_plus + omega_minus;
        let delta_bar = omega_plus - omega_minus;
        let (beta, period) = if delta_bar < DEGENERACY_EPSILON {
            // β → 0 as the splitting closes at resonance.
            (0.0, BeatingPeriod::Infinite)
        } else {
            (
                beta(sigma_bar, delta_bar),
                BeatingPeriod::Finite(4.0 * std::f64::consts::PI / delta_bar),
            )
        };
        PolaritonSpectrum {
            omega_plus,
            omega_minus,
            sigma_bar,
            delta_bar,
            beta,
            period,
        }
    }

    /// Finite beating period or [`Error::DegenerateSplitting`].
    pub fn period_checked(&self) -> Result<f64> {
        self.period.value().ok_or(Error::DegenerateSplitting {
            delta_bar: self.delta_bar,
        })
    }

    /// Period of the fast `cos(Σ̄t/2)` carrier.
    pub fn fast_period(&self) -> f64 {
        4.0 * std::f64::consts::PI / self.sigma_bar
    }
}

/// Polariton branches for the given variant.
///
/// Full and RWA use the closed-form branches; the no-diamagnetic variant reads
/// them off the eigenvalues of its drift matrix.
pub fn polariton_spectrum(params: &SystemParams) -> Result<PolaritonSpectrum> {
    let (g, l) = (params.gamma, params.lambda);
    match params.variant {
        ModelVariant::Full => {
            let s = 1.0 + g * g + g * l * l;
            // (s² − 4γ²) factored to avoid cancellation near resonance.
            let disc = ((s - 2.0 * g) * (s + 2.0 * g)).max(0.0).sqrt();
            let plus_sq = 0.5 * (s + disc);
            // Ω₊²Ω₋² = γ² exactly.
            let minus_sq = g * g / plus_sq;
            Ok(PolaritonSpectrum::from_branches(
                plus_sq.sqrt(),
                minus_sq.sqrt(),
                |sigma, delta| (plus_sq + minus_sq - 2.0) / (sigma * delta),
            ))
        }
        ModelVariant::Rwa => {
            let split = ((g - 1.0) * (g - 1.0) + l * l).sqrt();
            let plus = 0.5 * (1.0 + g + split);
            let minus = 0.5 * (1.0 + g - split);
            Ok(PolaritonSpectrum::from_branches(plus, minus, |_, delta| {
                (g - 1.0) / delta
            }))
        }
        ModelVariant::NoDiamagnetic => {
            let freqs = match stability_check(params) {
                Stability::Stable { frequencies } => frequencies,
                Stability::Unstable { max_real_part } => {
                    return Err(Error::Unstable { max_real_part })
                }
            };
            let (plus, minus) = (freqs[0], freqs[1]);
            Ok(PolaritonSpectrum::from_branches(plus, minus, |sigma, delta| {
                (plus * plus + minus * minus - 2.0) / (sigma * delta)
            }))
        }
    }
}

/// Outcome of [`stability_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stability {
    /// All drift eigenvalues are `±iΩ`; frequencies sorted descending.
    Stable { frequencies: [f64; 2] },
    Unstable { max_real_part: f64 },
}

impl Stability {
    pub fn is_stable(&self) -> bool {
        matches!(self, Stability::Stable { .. })
    }
}

/// Classical stability from the eigenvalues of the 4×4 drift matrix.
pub fn stability_check(params: &SystemParams) -> Stability {
    let eig = params.drift_matrix().complex_eigenvalues();
    let max_real_part = eig.iter().map(|z| z.re.abs()).fold(0.0, f64::max);
    if max_real_part > STABILITY_TOLERANCE {
        return Stability::Unstable { max_real_part };
    }
    let mut freqs: Vec<f64> = eig.iter().map(|z| z.im.abs()).collect();
    freqs.sort_by(|a, b| b.total_cmp(a));
    // Eigenvalues come in ±iΩ pairs.
    let frequencies = [0.5 * (freqs[0] + freqs[1]), 0.5 * (freqs[2] + freqs[3])];
    if frequencies[1] <= STABILITY_TOLERANCE {
        // A zero mode: marginal, treated as unstable (secular growth).
        return Stability::Unstable { max_real_part };
    }
    Stability::Stable { frequencies }
}

/// Physical inputs for a trapped-ion ensemble, SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IonParameters {
    pub count: u64,
    /// Single-particle charge in units of the elementary charge.
    pub charge_e: f64,
    pub mass_kg: f64,
    /// Trap angular frequency, rad/s.
    pub trap_frequency: f64,
    /// Area of a cavity mirror, m².
    pub mirror_area: f64,
}

/// Collective coupling `λ = sqrt(N g₀² / (π ε₀ c 𝒜 m Ω))`.
pub fn lambda_from_ion_parameters(ions: &IonParameters) -> Result<f64> {
    fn positive(v: f64, name: &'static str) -> Result<f64> {
        if v.is_finite() && v > 0.0 {
            Ok(v)
        } else {
            Err(Error::NonPositiveInput(name))
        }
    }
    if ions.count == 0 {
        return Err(Error::NonPositiveInput("count"));
    }
    let charge = positive(ions.charge_e, "charge_e")? * ELEMENTARY_CHARGE;
    let mass = positive(ions.mass_kg, "mass_kg")?;
    let omega = positive(ions.trap_frequency, "trap_frequency")?;
    let area = positive(ions.mirror_area, "mirror_area")?;
    let per_particle = charge * charge
        / (std::f64::consts::PI * VACUUM_PERMITTIVITY * SPEED_OF_LIGHT * area * mass * omega);
    Ok((ions.count as f64).sqrt() * per_particle.sqrt())
}
