//! Leaky-cavity dynamics under the zero-temperature master equation
//!
//! `dρ/dt = −i[H, ρ] + κ(aρa† − ½{a†a, ρ})`
//!
//! integrated with fixed-step RK4 in the interaction picture of the diagonal
//! part of `H`, so that only the off-diagonal couplings and the loss are
//! resolved by the step. Output-field quantities follow from `d_out = √κ a`.

use nalgebra::{Cholesky, DMatrix};
use rayon::prelude::*;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::{FockHamiltonian, FockState, Truncation};
use crate::model::polariton_spectrum;
use crate::observables::{mandel_q, ModeMoments, QuantumObservables};
use crate::semiclassical::check_time_grid;
use crate::series::{boxcar, fit_exponential, local_maxima};

/// Largest tolerated `|tr ρ − 1|`.
pub const TRACE_TOLERANCE: f64 = 1e-8;

/// Shift added before the Cholesky positivity test.
pub const POSITIVITY_TOLERANCE: f64 = 1e-9;

const TILE: usize = 32;

/// Density matrix on a truncated two-mode basis, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    pub data: Vec<Complex64>,
    pub trunc: Truncation,
}

impl DensityOperator {
    pub fn from_pure(state: &FockState) -> Self {
        let psi = &state.amplitudes;
        let data = psi
            .iter()
            .flat_map(|a| psi.iter().map(move |b| a * b.conj()))
            .collect();
        DensityOperator {
            data,
            trunc: state.trunc,
        }
    }

    pub fn dim(&self) -> usize {
        self.trunc.dim()
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim() + col]
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim()).map(|i| self.get(i, i)).sum()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for r in 0..n {
            for c in r..n {
                worst = worst.max((self.get(r, c) - self.get(c, r).conj()).norm());
            }
        }
        worst
    }

    /// `ρ + tol·I` admits a Cholesky factorization.
    pub fn is_positive(&self, tol: f64) -> bool {
        let n = self.dim();
        let m = DMatrix::from_fn(n, n, |r, c| {
            let v = 0.5 * (self.get(r, c) + self.get(c, r).conj());
            if r == c {
                v + tol
            } else {
                v
            }
        });
        Cholesky::new(m).is_some()
    }

    /// Hermiticity to 1e−10, unit trace to 1e−9, eigenvalues above −1e−9.
    pub fn validate(&self) -> Result<()> {
        if self.data.len() != self.dim() * self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim() * self.dim(),
                found: self.data.len(),
            });
        }
        let h = self.hermiticity_defect();
        if h > 1e-10 {
            return Err(Error::InvalidState(format!("density matrix not Hermitian ({h:.2e})")));
        }
        let tr = self.trace();
        if (tr - 1.0).norm() > 1e-9 {
            return Err(Error::InvalidState(format!("trace is {tr}")));
        }
        if !self.is_positive(POSITIVITY_TOLERANCE) {
            return Err(Error::InvalidState("density matrix is not positive".into()));
        }
        Ok(())
    }

    /// Populations of the two highest levels of each mode.
    pub fn top_populations(&self) -> (f64, f64) {
        let t = &self.trunc;
        let (mut m, mut l) = (0.0, 0.0);
        for i in 0..self.dim() {
            let (nb, na) = t.levels(i);
            let p = self.get(i, i).re;
            if nb + 1 >= t.n_matter_max {
                m += p;
            }
            if na + 1 >= t.n_photon_max {
                l += p;
            }
        }
        (m, l)
    }
}

/// Single-mode moments `Tr(ρ ·)` of both modes.
pub fn measure_density(rho: &DensityOperator) -> QuantumObservables {
    let t = &rho.trunc;
    let stride = t.n_photon_max + 1;
    let sq = |n: usize| (n as f64).sqrt();
    let s2 = std::f64::consts::SQRT_2;
    let mut acc = [[Complex64::new(0.0, 0.0); 2]; 2];
    let mut nn = [[0.0f64; 2]; 2];
    for i in 0..rho.dim() {
        let (nb, na) = t.levels(i);
        let p = rho.get(i, i).re;
        nn[0][0] += p * nb as f64;
        nn[0][1] += p * (nb * nb) as f64;
        nn[1][0] += p * na as f64;
        nn[1][1] += p * (na * na) as f64;
        // Tr(ρc) = Σ ρ[i, i−δ] √n_i for c lowering level n_i.
        if nb >= 1 {
            acc[0][0] += rho.get(i, i - stride) * sq(nb);
        }
        if nb >= 2 {
            acc[0][1] += rho.get(i, i - 2 * stride) * (sq(nb) * sq(nb - 1));
        }
        if na >= 1 {
            acc[1][0] += rho.get(i, i - 1) * sq(na);
        }
        if na >= 2 {
            acc[1][1] += rho.get(i, i - 2) * (sq(na) * sq(na - 1));
        }
    }
    let mode = |k: usize| {
        let (c, c2, n, n2) = (acc[k][0], acc[k][1], nn[k][0], nn[k][1]);
        ModeMoments {
            mean_position: s2 * c.re,
            mean_momentum: s2 * c.im,
            position_sq: c2.re + n + 0.5,
            momentum_sq: -c2.re + n + 0.5,
            sym_cross: c2.im,
            mean_n: n,
            var_n: (n2 - n * n).max(0.0),
        }
    };
    QuantumObservables {
        matter: mode(0),
        light: mode(1),
    }
}

/// Integration controls for [`evolve_density`].
#[derive(Default, Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LindbladOptions {
    /// Upper bound on the RK4 step; defaults to `min(2π/Σ̄, 1/κ)/200`.
    pub max_step: Option<f64>,
    /// Run the positivity test at every `positivity_stride`-th output
    /// (0 picks a stride giving about eight tests per run).
    pub positivity_stride: usize,
}

/// Conservation and positivity checks accumulated over a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LindbladDiagnostics {
    pub steps: usize,
    pub max_step_used: f64,
    pub max_trace_drift: f64,
    pub positivity_checks: usize,
    pub positivity_failures: usize,
    pub max_top_population_matter: f64,
    pub max_top_population_light: f64,
}

/// Default step bound `min(2π/Σ̄, 1/κ)/200`.
pub fn default_max_step(ham: &FockHamiltonian, kappa: f64) -> Result<f64> {
    let sp = polariton_spectrum(&ham.params)?;
    let fast = 2.0 * std::f64::consts::PI / sp.sigma_bar;
    let bound = if kappa > 0.0 { fast.min(1.0 / kappa) } else { fast };
    Ok(bound / 200.0)
}

/// One diagonal `V[i, i+d]` of the off-diagonal part of `H`.
struct Band {
    d: isize,
    vals: Vec<Complex64>,
    /// `−i V_I[i, i+d](t)`, refreshed on each evaluation.
    cur: Vec<Complex64>,
}

/// Right-hand side of the interaction-picture master equation.
///
/// Only the upper triangle `c ≥ r` of each matrix is stored and updated;
/// lower entries are read through Hermitian conjugation, so Hermiticity
/// holds exactly and each evaluation touches half the matrix.
struct Generator {
    dim: usize,
    diag: Vec<f64>,
    bands: Vec<Band>,
    n_photon: Vec<f64>,
    /// `√(n_a + 1)` where `a†` stays inside the basis, else 0.
    raise: Vec<f64>,
    kappa: f64,
    phase: Vec<Complex64>,
    /// `a_I[i, i+1](t)` conjugated.
    alpha_conj: Vec<Complex64>,
}

impl Generator {
    fn new(ham: &FockHamiltonian, kappa: f64) -> Self {
        let h = &ham.matrix;
        let dim = h.dim();
        let zero = Complex64::new(0.0, 0.0);
        let mut diag = vec![0.0; dim];
        let mut bands: Vec<Band> = Vec::new();
        for (r, diag_r) in diag.iter_mut().enumerate() {
            for (c, v) in h.row(r) {
                if c == r {
                    *diag_r = v.re;
                    continue;
                }
                let d = c as isize - r as isize;
                let pos = match bands.iter().position(|b| b.d == d) {
                    Some(p) => p,
                    None => {
                        bands.push(Band {
                            d,
                            vals: vec![zero; dim],
                            cur: vec![zero; dim],
                        });
                        bands.len() - 1
                    }
                };
                bands[pos].vals[r] = v;
            }
        }
        let t = ham.trunc;
        let n_photon = (0..dim).map(|i| t.levels(i).1 as f64).collect();
        let raise = (0..dim)
            .map(|i| {
                let na = t.levels(i).1;
                if na < t.n_photon_max {
                    ((na + 1) as f64).sqrt()
                } else {
                    0.0
                }
            })
            .collect();
        Generator {
            dim,
            diag,
            bands,
            n_photon,
            raise,
            kappa,
            phase: vec![zero; dim],
            alpha_conj: vec![zero; dim],
        }
    }

    fn set_phases(&mut self, t: f64) {
        for (p, &d) in self.phase.iter_mut().zip(&self.diag) {
            let (s, c) = (d * t).sin_cos();
            *p = Complex64::new(c, s);
        }
    }

    /// Upper triangle of `out = L_t(rho)`, with `rho` given by its upper triangle.
    fn apply(&mut self, t: f64, rho: &[Complex64], out: &mut [Complex64]) {
        let n = self.dim;
        self.set_phases(t);
        let minus_i = Complex64::new(0.0, -1.0);
        for band in &mut self.bands {
            for (i, (c, v)) in band.cur.iter_mut().zip(&band.vals).enumerate() {
                if *v != Complex64::new(0.0, 0.0) {
                    let j = (i as isize + band.d) as usize;
                    *c = minus_i * v * self.phase[i] * self.phase[j].conj();
                }
            }
        }
        for i in 0..n {
            self.alpha_conj[i] = if self.raise[i] > 0.0 {
                (self.phase[i] * self.phase[i + 1].conj() * self.raise[i]).conj()
            } else {
                Complex64::new(0.0, 0.0)
            };
        }
        let kappa = self.kappa;
        let this = &*self;
        out.par_chunks_mut(n).enumerate().for_each(|(r, full_row)| {
            let row = &mut full_row[r..];
            let rr = &rho[r * n + r..(r + 1) * n];
            if kappa > 0.0 {
                let na_r = this.n_photon[r];
                for ((o, x), na_c) in row.iter_mut().zip(rr).zip(&this.n_photon[r..]) {
                    *o = x * (-0.5 * kappa * (na_r + na_c));
                }
                if this.raise[r] > 0.0 {
                    // κ a ρ a†: ρ[r+1, c+1] with c + 1 ≥ r + 1, stored.
                    let a = kappa * this.alpha_conj[r].conj();
                    let next = &rho[(r + 1) * n + r + 1..(r + 2) * n];
                    for ((o, x), ac) in row.iter_mut().zip(next).zip(&this.alpha_conj[r..]) {
                        *o += a * ac * x;
                    }
                }
            } else {
                row.iter_mut().for_each(|o| *o = Complex64::new(0.0, 0.0));
            }
            for band in &this.bands {
                let d = band.d;
                // −i V ρ: row r picks up V[r, k] ρ[k, c] with k = r + d.
                let k = r as isize + d;
                let a = band.cur[r];
                if (0..n as isize).contains(&k) && a != Complex64::new(0.0, 0.0) {
                    let k = k as usize;
                    let split = k.max(r);
                    for c in r..split {
                        row[c - r] += a * rho[c * n + k].conj();
                    }
                    let src = &rho[k * n + split..(k + 1) * n];
                    for (o, x) in row[split - r..].iter_mut().zip(src) {
                        *o += a * x;
                    }
                }
                // +i ρ V: row r picks up ρ[r, i] V[i, c] with i = c − d.
                let c_lo = (r as isize).max(d) as usize;
                let c_hi = (n as isize).min(n as isize + d) as usize;
                if c_lo >= c_hi {
                    continue;
                }
                let split = ((r as isize + d).max(c_lo as isize) as usize).min(c_hi);
                for c in c_lo..split {
                    let i = (c as isize - d) as usize;
                    row[c - r] -= rho[i * n + r].conj() * band.cur[i];
                }
                let i0 = (split as isize - d) as usize;
                let i1 = (c_hi as isize - d) as usize;
                let src = &rho[r * n + i0..r * n + i1];
                for ((o, x), v) in row[split - r..c_hi - r].iter_mut().zip(src).zip(&band.cur[i0..i1]) {
                    *o -= x * v;
                }
            }
        });
    }

    /// Full Schrödinger-picture matrix from an interaction-picture upper triangle.
    fn schrodinger_matrix(&mut self, t: f64, rho: &[Complex64], trunc: Truncation) -> DensityOperator {
        self.set_phases(t);
        let n = self.dim;
        let mut data = vec![Complex64::new(0.0, 0.0); n * n];
        for r in 0..n {
            let pr = self.phase[r].conj();
            for c in r..n {
                data[r * n + c] = pr * self.phase[c] * rho[r * n + c];
            }
        }
        for r0 in (0..n).step_by(TILE) {
            for c0 in (r0..n).step_by(TILE) {
                for r in r0..(r0 + TILE).min(n) {
                    for c in c0.max(r + 1)..(c0 + TILE).min(n) {
                        data[c * n + r] = data[r * n + c].conj();
                    }
                }
            }
        }
        DensityOperator { data, trunc }
    }
}

/// Integrates the master equation from `ρ(0) = rho0`, calling
/// `observer(k, t_k, ρ(t_k))` at each requested time.
///
/// The RK4 step is the largest value not exceeding the step bound that
/// divides each output interval evenly.
pub fn evolve_density(
    ham: &FockHamiltonian,
    rho0: &DensityOperator,
    kappa: f64,
    times: &[f64],
    options: LindbladOptions,
    mut observer: impl FnMut(usize, f64, &DensityOperator) -> Result<()>,
) -> Result<LindbladDiagnostics> {
    if !(kappa.is_finite() && kappa >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "kappa",
            reason: format!("must be finite and >= 0, got {kappa}"),
        });
    }
    if rho0.trunc != ham.trunc || rho0.data.len() != ham.dim() * ham.dim() {
        return Err(Error::DimensionMismatch {
            expected: ham.dim() * ham.dim(),
            found: rho0.data.len(),
        });
    }
    check_time_grid(times)?;
    if times.first().is_some_and(|&t| t < 0.0) {
        return Err(Error::InvalidGrid("times must be >= 0".into()));
    }
    let h_max = match options.max_step {
        Some(h) if h > 0.0 && h.is_finite() => h,
        Some(h) => {
            return Err(Error::InvalidParameter {
                name: "max_step",
                reason: format!("must be finite and > 0, got {h}"),
            })
        }
        None => default_max_step(ham, kappa)?,
    };
    let stride = if options.positivity_stride == 0 {
        (times.len() / 8).max(1)
    } else {
        options.positivity_stride
    };
    let n = ham.dim();
    let n2 = n * n;
    let mut gen = Generator::new(ham, kappa);
    let mut y = rho0.data.clone();
    let zero = Complex64::new(0.0, 0.0);
    let (mut k, mut acc, mut tmp) = (vec![zero; n2], vec![zero; n2], vec![zero; n2]);
    let mut diag = LindbladDiagnostics {
        steps: 0,
        max_step_used: 0.0,
        max_trace_drift: 0.0,
        positivity_checks: 0,
        positivity_failures: 0,
        max_top_population_matter: 0.0,
        max_top_population_light: 0.0,
    };
    let mut t_now = 0.0;
    for (idx, &t_out) in times.iter().enumerate() {
        let span = t_out - t_now;
        if span > 0.0 {
            let steps = (span / h_max).ceil().max(1.0) as usize;
            let h = span / steps as f64;
            diag.max_step_used = diag.max_step_used.max(h);
            for s in 0..steps {
                let t = t_now + s as f64 * h;
                gen.apply(t, &y, &mut k);
                acc.copy_from_slice(&k);
                axpy_into(n, &mut tmp, &y, 0.5 * h, &k);
                gen.apply(t + 0.5 * h, &tmp, &mut k);
                axpy(n, &mut acc, 2.0, &k);
                axpy_into(n, &mut tmp, &y, 0.5 * h, &k);
                gen.apply(t + 0.5 * h, &tmp, &mut k);
                axpy(n, &mut acc, 2.0, &k);
                axpy_into(n, &mut tmp, &y, h, &k);
                gen.apply(t + h, &tmp, &mut k);
                axpy(n, &mut acc, 1.0, &k);
                axpy(n, &mut y, h / 6.0, &acc);
            }
            diag.steps += steps;
            t_now = t_out;
        }
        let rho = gen.schrodinger_matrix(t_out, &y, ham.trunc);
        let drift = (rho.trace() - 1.0).norm();
        diag.max_trace_drift = diag.max_trace_drift.max(drift);
        if drift > TRACE_TOLERANCE {
            return Err(Error::StepTooLarge(format!(
                "trace drifted by {drift:.3e} at t = {t_out} with step bound {h_max}"
            )));
        }
        let (m, l) = rho.top_populations();
        diag.max_top_population_matter = diag.max_top_population_matter.max(m);
        diag.max_top_population_light = diag.max_top_population_light.max(l);
        if idx % stride == 0 || idx + 1 == times.len() {
            diag.positivity_checks += 1;
            if !rho.is_positive(POSITIVITY_TOLERANCE) {
                diag.positivity_failures += 1;
            }
        }
        observer(idx, t_out, &rho)?;
    }
    Ok(diag)
}

/// Row ranges of the stored upper triangle of an `n × n` matrix.
fn upper_rows(n: usize) -> impl Iterator<Item = std::ops::Range<usize>> {
    (0..n).map(move |r| r * n + r..(r + 1) * n)
}

fn axpy(n: usize, y: &mut [Complex64], a: f64, x: &[Complex64]) {
    for s in upper_rows(n) {
        for (u, v) in y[s.clone()].iter_mut().zip(&x[s]) {
            *u += v * a;
        }
    }
}

/// `out = y + a·x` on the upper triangle.
fn axpy_into(n: usize, out: &mut [Complex64], y: &[Complex64], a: f64, x: &[Complex64]) {
    for s in upper_rows(n) {
        for ((o, u), v) in out[s.clone()].iter_mut().zip(&y[s.clone()]).zip(&x[s]) {
            *o = u + v * a;
        }
    }
}

/// Leaked-field statistics at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OutputFieldSample {
    pub t: f64,
    /// `κ⟨n⟩`.
    pub n_out: f64,
    /// `κQ`, undefined where the intracavity `Q` is.
    pub q_out: Option<f64>,
}

/// Output-field photon flux and Mandel parameter from `d_out = √κ a`.
///
/// `Q_out = κQ` is taken as the defining relation for the extracted field.
pub fn output_field_observables(
    series: &[(f64, QuantumObservables)],
    kappa: f64,
) -> Vec<OutputFieldSample> {
    series
        .iter()
        .map(|(t, o)| OutputFieldSample {
            t: *t,
            n_out: kappa * o.light.mean_n,
            q_out: mandel_q(o.light.mean_n, o.light.var_n).map(|q| kappa * q),
        })
        .collect()
}

/// Exponential fit to the slow envelope of a photon-number series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeFit {
    pub rate: f64,
    pub amplitude: f64,
    pub log_residual: f64,
    /// `(t, smoothed value)` of each envelope maximum used.
    pub peaks: Vec<(f64, f64)>,
}

/// Smooths `values` over `smoothing_width`, picks maxima at least
/// `min_separation` apart in time, and fits `A e^{−rate·t}` through them.
pub fn fit_envelope_decay(
    times: &[f64],
    values: &[f64],
    smoothing_width: f64,
    min_separation: f64,
) -> Result<EnvelopeFit> {
    if times.len() < 3 {
        return Err(Error::InsufficientSpan("series too short for an envelope fit".into()));
    }
    let (ts, smooth) = boxcar(times, values, smoothing_width);
    if ts.len() < 3 {
        return Err(Error::InsufficientSpan(
            "series shorter than the smoothing window".into(),
        ));
    }
    let dt = ts[1] - ts[0];
    let sep = ((0.5 * min_separation / dt).round() as usize).max(1);
    let peaks: Vec<(f64, f64)> = local_maxima(&smooth, sep)
        .into_iter()
        .map(|i| (ts[i], smooth[i]))
        .collect();
    if peaks.len() < 2 {
        return Err(Error::InsufficientSpan(format!(
            "found {} envelope maxima, need at least 2",
            peaks.len()
        )));
    }
    let (pt, pv): (Vec<f64>, Vec<f64>) = peaks.iter().copied().unzip();
    let fit = fit_exponential(&pt, &pv)?;
    Ok(EnvelopeFit {
        rate: fit.rate,
        amplitude: fit.amplitude,
        log_residual: fit.log_residual,
        peaks,
    })
}
