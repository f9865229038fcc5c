use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;

use super::measure::top_populations;
use super::{FockHamiltonian, FockState};
use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;
use crate::semiclassical::check_time_grid;

/// Above this dimension [`EvolutionMethod::Auto`] switches to Krylov propagation.
pub const KRYLOV_DIMENSION_THRESHOLD: usize = 4000;

/// Per-step error bound of the Krylov propagator.
pub const KRYLOV_TOLERANCE: f64 = 1e-10;

const KRYLOV_SUBSPACE: usize = 30;
const TIME_CHUNK: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EvolutionMethod {
    Auto,
    /// Exact propagation in the eigenbasis of each decoupled block.
    Eigen,
    /// Short-iterative Lanczos steps.
    Krylov,
}

/// Conservation checks accumulated over a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvolutionDiagnostics {
    pub method: EvolutionMethod,
    pub max_norm_drift: f64,
    /// `|⟨H⟩(t) − ⟨H⟩(0)| / |⟨H⟩(0)|`.
    pub max_energy_drift: f64,
    pub max_top_population_matter: f64,
    pub max_top_population_light: f64,
    pub krylov_steps: usize,
}

impl EvolutionDiagnostics {
    fn new(method: EvolutionMethod) -> Self {
        EvolutionDiagnostics {
            method,
            max_norm_drift: 0.0,
            max_energy_drift: 0.0,
            max_top_population_matter: 0.0,
            max_top_population_light: 0.0,
            krylov_steps: 0,
        }
    }

    fn record(&mut self, h: &CsrMatrix, trunc: &super::Truncation, psi: &[Complex64], e0: f64) {
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        self.max_norm_drift = self.max_norm_drift.max((norm - 1.0).abs());
        let e = h.expectation(psi).re;
        let drift = (e - e0).abs() / e0.abs().max(f64::MIN_POSITIVE);
        self.max_energy_drift = self.max_energy_drift.max(drift);
        let (m, l) = top_populations(psi, trunc);
        self.max_top_population_matter = self.max_top_population_matter.max(m);
        self.max_top_population_light = self.max_top_population_light.max(l);
    }

    /// Largest top-level population of either mode.
    pub fn max_leak(&self) -> f64 {
        self.max_top_population_matter.max(self.max_top_population_light)
    }
}

enum Block {
    Real {
        indices: Vec<usize>,
        energies: DVector<f64>,
        vectors: DMatrix<f64>,
    },
    Complex {
        indices: Vec<usize>,
        energies: DVector<f64>,
        vectors: DMatrix<Complex64>,
    },
}

enum Kind {
    /// Blocks are real after the basis rephasing `|n_b, n_a⟩ → iⁿᵇ|n_b, n_a⟩`
    /// when `gauge` is present.
    Eigen {
        blocks: Vec<Block>,
        gauge: Option<Vec<Complex64>>,
    },
    Krylov,
}

/// Reusable propagator `exp(−iHt)` for one Hamiltonian.
pub struct FockPropagator<'a> {
    ham: &'a FockHamiltonian,
    kind: Kind,
}

fn matter_phase(nb: usize) -> Complex64 {
    match nb % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

impl<'a> FockPropagator<'a> {
    pub fn new(ham: &'a FockHamiltonian, method: EvolutionMethod) -> Result<Self> {
        let method = match method {
            EvolutionMethod::Auto if ham.dim() > KRYLOV_DIMENSION_THRESHOLD => {
                EvolutionMethod::Krylov
            }
            EvolutionMethod::Auto => EvolutionMethod::Eigen,
            m => m,
        };
        if method == EvolutionMethod::Krylov {
            return Ok(FockPropagator {
                ham,
                kind: Kind::Krylov,
            });
        }
        let h = &ham.matrix;
        let gauge: Vec<Complex64> = (0..h.dim())
            .map(|i| matter_phase(ham.trunc.levels(i).0))
            .collect();
        let scale = h.max_abs().max(1.0);
        let real = h
            .entries()
            .all(|(r, c, v)| (gauge[r].conj() * v * gauge[c]).im.abs() <= 1e-14 * scale);
        let mut local = vec![usize::MAX; h.dim()];
        let blocks = h
            .connected_blocks()
            .into_iter()
            .map(|indices| {
                for (k, &i) in indices.iter().enumerate() {
                    local[i] = k;
                }
                let n = indices.len();
                let block = if real {
                    let mut m = DMatrix::<f64>::zeros(n, n);
                    for (k, &i) in indices.iter().enumerate() {
                        for (c, v) in h.row(i) {
                            m[(k, local[c])] = (gauge[i].conj() * v * gauge[c]).re;
                        }
                    }
                    let eig = SymmetricEigen::new(m);
                    Block::Real {
                        energies: eig.eigenvalues,
                        vectors: eig.eigenvectors,
                        indices,
                    }
                } else {
                    let mut m = DMatrix::<Complex64>::zeros(n, n);
                    for (k, &i) in indices.iter().enumerate() {
                        for (c, v) in h.row(i) {
                            m[(k, local[c])] = v;
                        }
                    }
                    let eig = SymmetricEigen::new(m);
                    Block::Complex {
                        energies: eig.eigenvalues,
                        vectors: eig.eigenvectors,
                        indices,
                    }
                };
                block
            })
            .collect();
        Ok(FockPropagator {
            ham,
            kind: Kind::Eigen {
                blocks,
                gauge: real.then_some(gauge),
            },
        })
    }

    pub fn method(&self) -> EvolutionMethod {
        match self.kind {
            Kind::Eigen { .. } => EvolutionMethod::Eigen,
            Kind::Krylov => EvolutionMethod::Krylov,
        }
    }

    /// Eigenvalues of the Hamiltonian, ascending; `None` for the Krylov method.
    pub fn spectrum(&self) -> Option<Vec<f64>> {
        match &self.kind {
            Kind::Eigen { blocks, .. } => {
                let mut e: Vec<f64> = blocks
                    .iter()
                    .flat_map(|b| match b {
                        Block::Real { energies, .. } | Block::Complex { energies, .. } => {
                            energies.iter().copied()
                        }
                    })
                    .collect();
                e.sort_by(f64::total_cmp);
                Some(e)
            }
            Kind::Krylov => None,
        }
    }

    /// Calls `observer(k, t_k, ψ(t_k))` for each time, in order, with `ψ(t) = exp(−iHt)ψ₀`.
    pub fn evolve(
        &self,
        psi0: &FockState,
        times: &[f64],
        mut observer: impl FnMut(usize, f64, &FockState) -> Result<()>,
    ) -> Result<EvolutionDiagnostics> {
        if psi0.amplitudes.len() != self.ham.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.ham.dim(),
                found: psi0.amplitudes.len(),
            });
        }
        if psi0.trunc != self.ham.trunc {
            return Err(Error::InvalidState(
                "state and Hamiltonian use different truncations".into(),
            ));
        }
        check_time_grid(times)?;
        let h = &self.ham.matrix;
        let e0 = h.expectation(&psi0.amplitudes).re;
        let mut diag = EvolutionDiagnostics::new(self.method());
        let mut emit = |k: usize, t: f64, amps: Vec<Complex64>, diag: &mut EvolutionDiagnostics| {
            diag.record(h, &self.ham.trunc, &amps, e0);
            let state = FockState {
                amplitudes: amps,
                trunc: self.ham.trunc,
            };
            observer(k, t, &state)
        };
        match &self.kind {
            Kind::Eigen { blocks, gauge } => {
                let psi: Vec<Complex64> = match gauge {
                    Some(u) => psi0.amplitudes.iter().zip(u).map(|(a, g)| g.conj() * a).collect(),
                    None => psi0.amplitudes.clone(),
                };
                let coeffs: Vec<Vec<Complex64>> = blocks.iter().map(|b| b.project(&psi)).collect();
                for (chunk_idx, chunk) in times.chunks(TIME_CHUNK).enumerate() {
                    let mut out = vec![vec![Complex64::new(0.0, 0.0); psi.len()]; chunk.len()];
                    for (b, c) in blocks.iter().zip(&coeffs) {
                        b.evolve_into(c, chunk, &mut out);
                    }
                    for (j, mut amps) in out.into_iter().enumerate() {
                        if let Some(u) = gauge {
                            amps.iter_mut().zip(u).for_each(|(a, g)| *a *= g);
                        }
                        let k = chunk_idx * TIME_CHUNK + j;
                        emit(k, times[k], amps, &mut diag)?;
                    }
                }
            }
            Kind::Krylov => {
                let mut v = psi0.amplitudes.clone();
                let mut t_now = 0.0;
                let mut tau_hint = f64::INFINITY;
                for (k, &t) in times.iter().enumerate() {
                    let mut remaining = t - t_now;
                    while remaining.abs() > 0.0 {
                        let (next, used) = krylov_step(h, &v, remaining, tau_hint)?;
                        v = next;
                        remaining -= used;
                        tau_hint = 2.0 * used.abs();
                        diag.krylov_steps += 1;
                        if remaining.abs() < 1e-14 * t.abs().max(1.0) {
                            break;
                        }
                    }
                    t_now = t;
                    emit(k, t, v.clone(), &mut diag)?;
                }
            }
        }
        Ok(diag)
    }
}

impl Block {
    fn project(&self, psi: &[Complex64]) -> Vec<Complex64> {
        match self {
            Block::Real {
                indices, vectors, ..
            } => {
                let n = indices.len();
                let re = DVector::from_iterator(n, indices.iter().map(|&i| psi[i].re));
                let im = DVector::from_iterator(n, indices.iter().map(|&i| psi[i].im));
                let (cr, ci) = (vectors.tr_mul(&re), vectors.tr_mul(&im));
                cr.iter().zip(ci.iter()).map(|(&r, &i)| Complex64::new(r, i)).collect()
            }
            Block::Complex {
                indices, vectors, ..
            } => {
                let v = DVector::from_iterator(indices.len(), indices.iter().map(|&i| psi[i]));
                vectors.ad_mul(&v).iter().copied().collect()
            }
        }
    }

    fn evolve_into(&self, coeffs: &[Complex64], times: &[f64], out: &mut [Vec<Complex64>]) {
        let k = times.len();
        match self {
            Block::Real {
                indices,
                energies,
                vectors,
            } => {
                let n = indices.len();
                let mut ar = DMatrix::<f64>::zeros(n, k);
                let mut ai = DMatrix::<f64>::zeros(n, k);
                for (j, &t) in times.iter().enumerate() {
                    for m in 0..n {
                        let (s, c) = (-energies[m] * t).sin_cos();
                        let z = coeffs[m] * Complex64::new(c, s);
                        ar[(m, j)] = z.re;
                        ai[(m, j)] = z.im;
                    }
                }
                let (pr, pi) = (vectors * ar, vectors * ai);
                for (j, o) in out.iter_mut().enumerate() {
                    for (m, &i) in indices.iter().enumerate() {
                        o[i] = Complex64::new(pr[(m, j)], pi[(m, j)]);
                    }
                }
            }
            Block::Complex {
                indices,
                energies,
                vectors,
            } => {
                let n = indices.len();
                let mut a = DMatrix::<Complex64>::zeros(n, k);
                for (j, &t) in times.iter().enumerate() {
                    for m in 0..n {
                        let (s, c) = (-energies[m] * t).sin_cos();
                        a[(m, j)] = coeffs[m] * Complex64::new(c, s);
                    }
                }
                let p = vectors * a;
                for (j, o) in out.iter_mut().enumerate() {
                    for (m, &i) in indices.iter().enumerate() {
                        o[i] = p[(m, j)];
                    }
                }
            }
        }
    }
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// One Lanczos step of at most `tau` (and at most `tau_hint`), shortened by
/// halving until the a-posteriori error estimate meets [`KRYLOV_TOLERANCE`].
/// Returns the new vector and the time actually advanced.
fn krylov_step(
    h: &CsrMatrix,
    v: &[Complex64],
    tau: f64,
    tau_hint: f64,
) -> Result<(Vec<Complex64>, f64)> {
    let beta0 = dot(v, v).re.sqrt();
    let mut basis: Vec<Vec<Complex64>> = vec![v.iter().map(|z| z / beta0).collect()];
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![Complex64::new(0.0, 0.0); v.len()];
    let mut breakdown = false;
    for j in 0..KRYLOV_SUBSPACE {
        h.mul_vec_into(&basis[j], &mut w);
        let a = dot(&basis[j], &w).re;
        alpha.push(a);
        // Full reorthogonalization against every previous vector.
        for q in &basis {
            let c = dot(q, &w);
            w.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
        }
        let b = dot(&w, &w).re.sqrt();
        beta.push(b);
        if b < 1e-12 * a.abs().max(1.0) {
            breakdown = true;
            break;
        }
        basis.push(w.iter().map(|z| z / b).collect());
    }
    let m = alpha.len();
    let mut t = DMatrix::<f64>::zeros(m, m);
    for j in 0..m {
        t[(j, j)] = alpha[j];
        if j + 1 < m {
            t[(j, j + 1)] = beta[j];
            t[(j + 1, j)] = beta[j];
        }
    }
    let eig = SymmetricEigen::new(t);
    let small_exp = |step: f64| -> Vec<Complex64> {
        (0..m)
            .map(|r| {
                (0..m)
                    .map(|k| {
                        let (s, c) = (-eig.eigenvalues[k] * step).sin_cos();
                        Complex64::new(c, s) * (eig.eigenvectors[(r, k)] * eig.eigenvectors[(0, k)])
                    })
                    .sum::<Complex64>()
                    * beta0
            })
            .collect()
    };
    let mut step = tau.abs().min(tau_hint) * tau.signum();
    let y = loop {
        let y = small_exp(step);
        let err = if breakdown { 0.0 } else { beta[m - 1] * y[m - 1].norm() };
        if err <= KRYLOV_TOLERANCE {
            break y;
        }
        step *= 0.5;
        if step.abs() < 1e-12 {
            return Err(Error::Numerical(
                "Krylov step size collapsed below 1e-12".into(),
            ));
        }
    };
    let mut out = vec![Complex64::new(0.0, 0.0); v.len()];
    for (q, c) in basis.iter().zip(&y) {
        out.iter_mut().zip(q).for_each(|(o, x)| *o += c * x);
    }
    Ok((out, step))
}

/// `ψ(t) = exp(−iHt)ψ₀` on each time, with the default method.
pub fn evolve_state(ham: &FockHamiltonian, psi0: &FockState, times: &[f64]) -> Result<Vec<FockState>> {
    let mut out = Vec::with_capacity(times.len());
    evolve_state_with(ham, psi0, times, EvolutionMethod::Auto, |_, _, s| {
        out.push(s.clone());
        Ok(())
    })?;
    Ok(out)
}

/// Streams the evolution through `observer` without storing states.
pub fn evolve_state_with(
    ham: &FockHamiltonian,
    psi0: &FockState,
    times: &[f64],
    method: EvolutionMethod,
    observer: impl FnMut(usize, f64, &FockState) -> Result<()>,
) -> Result<EvolutionDiagnostics> {
    FockPropagator::new(ham, method)?.evolve(psi0, times, observer)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{build_hamiltonian, measure, prepare_scheme2, Truncation};
    use crate::model::{ModelVariant, SystemParams};

    fn dense_expm_oracle(ham: &FockHamiltonian, psi: &[Complex64], t: f64) -> Vec<Complex64> {
        let n = ham.dim();
        let mut m = DMatrix::<Complex64>::zeros(n, n);
        for (r, c, v) in ham.matrix.entries() {
            m[(r, c)] = v;
        }
        let eig = SymmetricEigen::new(m);
        let v = DVector::from_column_slice(psi);
        let c = eig.eigenvectors.ad_mul(&v);
        let phased = DVector::from_iterator(
            n,
            c.iter().zip(eig.eigenvalues.iter()).map(|(z, &e)| {
                let (s, co) = (-e * t).sin_cos();
                z * Complex64::new(co, s)
            }),
        );
        (eig.eigenvectors * phased).iter().copied().collect()
    }

    #[test]
    fn eigen_and_krylov_match_dense_oracle() {
        let trunc = Truncation::new(8, 8).unwrap();
        for variant in ModelVariant::ALL {
            let p = SystemParams::new(1.1, 0.4, variant).unwrap();
            let ham = build_hamiltonian(&p, trunc);
            let psi0 = prepare_scheme2(Complex64::new(0.3, 0.4), trunc).unwrap();
            let times = [0.0, 0.7, 5.0, 23.0];
            for method in [EvolutionMethod::Eigen, EvolutionMethod::Krylov] {
                let mut got = Vec::new();
                let d = evolve_state_with(&ham, &psi0, &times, method, |_, _, s| {
                    got.push(s.amplitudes.clone());
                    Ok(())
                })
                .unwrap();
                assert!(d.max_norm_drift < 1e-9 && d.max_energy_drift < 1e-9, "{d:?}");
                for (g, &t) in got.iter().zip(&times) {
                    let o = dense_expm_oracle(&ham, &psi0.amplitudes, t);
                    let diff = g.iter().zip(&o).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
                    assert!(diff < 1e-9, "{variant} {method:?} t={t}: {diff}");
                }
            }
        }
    }

    #[test]
    fn zero_time_returns_initial_state() {
        let trunc = Truncation::new(6, 16).unwrap();
        let p = SystemParams::new(1.0, 0.2, ModelVariant::Full).unwrap();
        let ham = build_hamiltonian(&p, trunc);
        let psi0 = prepare_scheme2(Complex64::new(1.0, 0.0), trunc).unwrap();
        let s = evolve_state(&ham, &psi0, &[0.0]).unwrap();
        let diff = s[0]
            .amplitudes
            .iter()
            .zip(&psi0.amplitudes)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-13);
    }

    #[test]
    fn decoupled_photon_number_is_constant() {
        let trunc = Truncation::new(5, 20).unwrap();
        let p = SystemParams::new(1.3, 0.0, ModelVariant::Full).unwrap();
        let ham = build_hamiltonian(&p, trunc);
        let psi0 = prepare_scheme2(Complex64::new(1.5, 0.0), trunc).unwrap();
        let times: Vec<f64> = (0..50).map(|k| k as f64 * 0.9).collect();
        for s in evolve_state(&ham, &psi0, &times).unwrap() {
            assert!((measure(&s).light.mean_n - 2.25).abs() < 1e-9);
        }
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let p = SystemParams::new(1.0, 0.2, ModelVariant::Full).unwrap();
        let ham = build_hamiltonian(&p, Truncation::new(6, 6).unwrap());
        let psi = FockState::vacuum(Truncation::new(6, 7).unwrap());
        assert!(matches!(
            evolve_state(&ham, &psi, &[0.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
