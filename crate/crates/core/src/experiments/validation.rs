//! Fast invariant checks run by the `validate` command.
//!
//! Parameter points are fixed lists, so the suite is deterministic.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::Result;
use crate::fock::{
    build_hamiltonian, measure, number_operator, prepare_scheme1, prepare_scheme2, EvolutionMethod,
    FockPropagator, Truncation,
};
use crate::lindblad::{evolve_density, measure_density, DensityOperator, LindbladOptions};
use crate::model::{polariton_spectrum, ModelVariant, SystemParams};
use crate::observables::Subsystem;
use crate::semiclassical::{evolve_gaussian, mean_x_closed_form, ClassicalPropagator, GaussianState, PropagatorFactory};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    /// Worst observed deviation, compared against `tolerance`.
    pub worst: f64,
    pub tolerance: f64,
    /// Failure message when the check could not be evaluated.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl CheckOutcome {
    fn new(name: &'static str, worst: f64, tolerance: f64) -> Self {
        CheckOutcome {
            name,
            passed: worst.is_finite() && worst < tolerance,
            worst,
            tolerance,
            error: None,
        }
    }
}

const POINTS: [(f64, f64); 6] = [(1.0, 0.05), (1.0, 0.2), (0.8, 0.2), (1.2, 0.2), (0.5, 0.6), (1.7, 1.0)];

/// Runs every check, reporting failures as outcomes rather than errors.
pub fn validation_suite() -> Vec<CheckOutcome> {
    type Check = (&'static str, f64, fn() -> Result<f64>);
    let checks: [Check; 9] = [
        ("resonant splitting equals coupling", 1e-12, resonance_identity),
        ("rwa period symmetric in detuning", 1e-10, rwa_symmetry),
        ("propagator is symplectic", 1e-10, symplectic),
        ("uncertainty relation holds", 1e-12, heisenberg),
        ("covariance determinant conserved", 1e-9, determinant),
        ("rwa conserves excitations", 1e-10, rwa_excitations),
        ("fock matches closed-form quadrature", 1e-6, fock_vs_closed_form),
        ("truncation doubling is stable", 1e-7, truncation_doubling),
        ("closed lindblad matches unitary", 1e-7, lindblad_closed_limit),
    ];
    checks
        .iter()
        .map(|(name, tol, f)| match f() {
            Ok(worst) => CheckOutcome::new(name, worst, *tol),
            Err(e) => CheckOutcome {
                error: Some(e.to_string()),
                ..CheckOutcome::new(name, f64::INFINITY, *tol)
            },
        })
        .collect()
}

fn params(gamma: f64, lambda: f64, variant: ModelVariant) -> Result<SystemParams> {
    SystemParams::new(gamma, lambda, variant)
}

fn resonance_identity() -> Result<f64> {
    let mut worst = 0.0f64;
    for lambda in [0.01, 0.05, 0.2, 0.5] {
        let sp = polariton_spectrum(&params(1.0, lambda, ModelVariant::Full)?)?;
        worst = worst.max((sp.delta_bar - lambda).abs());
    }
    Ok(worst)
}

fn rwa_symmetry() -> Result<f64> {
    let mut worst = 0.0f64;
    for (d, lambda) in [(0.2, 0.2), (0.1, 0.05), (0.4, 0.6)] {
        let lo = polariton_spectrum(&params(1.0 - d, lambda, ModelVariant::Rwa)?)?;
        let hi = polariton_spectrum(&params(1.0 + d, lambda, ModelVariant::Rwa)?)?;
        worst = worst.max((lo.period_checked()? - hi.period_checked()?).abs());
    }
    Ok(worst)
}

fn propagators() -> Result<Vec<(SystemParams, Vec<ClassicalPropagator>)>> {
    let mut out = Vec::new();
    for (g, l) in POINTS {
        for v in ModelVariant::ALL {
            let p = params(g, l, v)?;
            let Ok(f) = PropagatorFactory::new(&p) else { continue };
            out.push((p, [0.3, 7.0, 55.0].iter().map(|&t| f.at(t)).collect()));
        }
    }
    Ok(out)
}

fn symplectic() -> Result<f64> {
    Ok(propagators()?
        .iter()
        .flat_map(|(_, ms)| ms.iter().map(|m| m.symplectic_defect()))
        .fold(0.0, f64::max))
}

fn gaussian_runs() -> Result<Vec<Vec<GaussianState>>> {
    let times: Vec<f64> = (0..=200).map(|k| 0.5 * k as f64).collect();
    let mut out = Vec::new();
    for (g, l) in POINTS {
        let p = params(g, l, ModelVariant::Full)?;
        for init in [GaussianState::scheme1(3.0, 0.5)?, GaussianState::scheme2(Complex64::new(1.0, 2.0))?] {
            out.push(evolve_gaussian(&init, &p, &times)?);
        }
    }
    Ok(out)
}

fn heisenberg() -> Result<f64> {
    let mut worst = 0.0f64;
    for run in gaussian_runs()? {
        for s in &run {
            for sub in [Subsystem::Matter, Subsystem::Light] {
                worst = worst.max(0.25 - s.heisenberg_product(sub));
            }
        }
    }
    Ok(worst.max(0.0))
}

fn determinant() -> Result<f64> {
    let mut worst = 0.0f64;
    for run in gaussian_runs()? {
        let d0 = run[0].cov.determinant();
        for s in &run {
            worst = worst.max((s.cov.determinant() - d0).abs() / d0);
        }
    }
    Ok(worst)
}

fn rwa_excitations() -> Result<f64> {
    let trunc = Truncation::new(16, 16)?;
    let p = params(1.1, 0.3, ModelVariant::Rwa)?;
    let ham = build_hamiltonian(&p, trunc);
    let n = number_operator(trunc, true, true);
    let comm = ham.matrix.commutator(&n).max_abs();
    let psi = prepare_scheme2(Complex64::new(0.8, 0.4), trunc)?;
    let times: Vec<f64> = (0..=20).map(|k| k as f64).collect();
    let mut n0 = None;
    let mut worst = comm;
    FockPropagator::new(&ham, EvolutionMethod::Eigen)?.evolve(&psi, &times, |_, _, s| {
        let o = measure(s);
        let total = o.matter.mean_n + o.light.mean_n;
        let start = *n0.get_or_insert(total);
        worst = worst.max((total - start).abs());
        Ok(())
    })?;
    Ok(worst)
}

fn fock_vs_closed_form() -> Result<f64> {
    let p = params(1.0, 0.2, ModelVariant::Full)?;
    let trunc = Truncation::new(20, 20)?;
    let ham = build_hamiltonian(&p, trunc);
    let psi = prepare_scheme1(1.0, 0.8, trunc)?;
    let times: Vec<f64> = (0..=40).map(|k| 0.5 * k as f64).collect();
    let mut worst = 0.0f64;
    FockPropagator::new(&ham, EvolutionMethod::Eigen)?.evolve(&psi, &times, |_, t, s| {
        worst = worst.max((measure(s).mean_x() - mean_x_closed_form(&p, 1.0, t)?).abs());
        Ok(())
    })?;
    Ok(worst)
}

fn truncation_doubling() -> Result<f64> {
    let p = params(0.9, 0.3, ModelVariant::Full)?;
    let times: Vec<f64> = (0..=10).map(|k| k as f64).collect();
    let alpha = Complex64::new(0.7, -0.3);
    let run = |n: usize| -> Result<Vec<[f64; 3]>> {
        let trunc = Truncation::new(n, n)?;
        let ham = build_hamiltonian(&p, trunc);
        let mut out = Vec::new();
        FockPropagator::new(&ham, EvolutionMethod::Eigen)?.evolve(
            &prepare_scheme2(alpha, trunc)?,
            &times,
            |_, _, s| {
                let o = measure(s);
                out.push([o.mean_x(), o.light.mean_n, o.light.var_n]);
                Ok(())
            },
        )?;
        Ok(out)
    };
    let (a, b) = (run(14)?, run(28)?);
    Ok(a.iter()
        .zip(&b)
        .flat_map(|(x, y)| x.iter().zip(y).map(|(u, v)| (u - v).abs()))
        .fold(0.0, f64::max))
}

fn lindblad_closed_limit() -> Result<f64> {
    let p = params(1.0, 0.2, ModelVariant::Full)?;
    let trunc = Truncation::new(8, 10)?;
    let ham = build_hamiltonian(&p, trunc);
    let psi = prepare_scheme2(Complex64::new(0.6, 0.3), trunc)?;
    let times: Vec<f64> = (0..=10).map(|k| k as f64).collect();
    let mut closed = Vec::new();
    FockPropagator::new(&ham, EvolutionMethod::Eigen)?.evolve(&psi, &times, |_, _, s| {
        closed.push(measure(s));
        Ok(())
    })?;
    let mut worst = 0.0f64;
    evolve_density(&ham, &DensityOperator::from_pure(&psi), 0.0, &times, LindbladOptions::default(), |k, _, r| {
        let (a, b) = (measure_density(r), closed[k]);
        for (u, v) in [
            (a.mean_x(), b.mean_x()),
            (a.light.mean_n, b.light.mean_n),
            (a.light.var_n, b.light.var_n),
            (a.matter.var_n, b.matter.var_n),
        ] {
            worst = worst.max((u - v).abs());
        }
        Ok(())
    })?;
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes() {
        for c in validation_suite() {
            assert!(c.passed, "{c:?}");
        }
    }
}
