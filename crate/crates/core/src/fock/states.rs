use num_complex::Complex64;

use super::{measure, FockState, Truncation};
use crate::error::{Error, Result};

/// Tolerance of the post-construction moment checks.
const MOMENT_TOLERANCE: f64 = 1e-6;

/// Amplitudes `⟨n|D(α)S(r)|0⟩`, `n = 0..=n_max`, with `S(r) = exp[(r/2)(b² − b†²)]`.
///
/// Uses the three-term recurrence implied by
/// `(b cosh r + b† sinh r)|ψ⟩ = (α cosh r + α* sinh r)|ψ⟩`.
pub fn displaced_squeezed_amplitudes(alpha: Complex64, r: f64, n_max: usize) -> Vec<Complex64> {
    let (ch, sh) = (r.cosh(), r.sinh());
    let mu = alpha * ch + alpha.conj() * sh;
    let mut c = vec![Complex64::new(0.0, 0.0); n_max + 1];
    c[0] = (-0.5 * alpha.norm_sqr() - 0.5 * alpha.conj() * alpha.conj() * r.tanh()).exp() / ch.sqrt();
    if n_max >= 1 {
        c[1] = mu * c[0] / ch;
    }
    for n in 1..n_max {
        let nf = n as f64;
        c[n + 1] = (mu * c[n] - c[n - 1] * (nf.sqrt() * sh)) / ((nf + 1.0).sqrt() * ch);
    }
    c
}

/// Same amplitudes obtained by applying `S(r)` and then `D(α)` to the vacuum
/// of a larger single-mode space.
pub fn displaced_squeezed_by_operators(alpha: Complex64, r: f64, n_max: usize) -> Vec<Complex64> {
    let m = n_max + 80 + (4.0 * alpha.norm_sqr() + 40.0 * r.abs()) as usize;
    let mut v = vec![Complex64::new(0.0, 0.0); m + 1];
    v[0] = Complex64::new(1.0, 0.0);
    let sq = |n: usize| (n as f64).sqrt();
    // (r/2)(b² − b†²)
    let squeeze = |x: &[Complex64], y: &mut [Complex64]| {
        for n in 0..=m {
            let mut acc = Complex64::new(0.0, 0.0);
            if n + 2 <= m {
                acc += x[n + 2] * (sq(n + 1) * sq(n + 2));
            }
            if n >= 2 {
                acc -= x[n - 2] * (sq(n) * sq(n - 1));
            }
            y[n] = acc * (0.5 * r);
        }
    };
    v = expm_action(squeeze, r.abs() * (m as f64 + 2.0), v);
    // α b† − α* b
    let displace = |x: &[Complex64], y: &mut [Complex64]| {
        for n in 0..=m {
            let mut acc = Complex64::new(0.0, 0.0);
            if n >= 1 {
                acc += alpha * x[n - 1] * sq(n);
            }
            if n < m {
                acc -= alpha.conj() * x[n + 1] * sq(n + 1);
            }
            y[n] = acc;
        }
    };
    v = expm_action(displace, 2.0 * alpha.norm() * (m as f64 + 1.0).sqrt(), v);
    v.truncate(n_max + 1);
    v
}

/// `exp(G) v` for a generator with norm at most `bound`, by substepped Taylor series.
fn expm_action(
    apply: impl Fn(&[Complex64], &mut [Complex64]),
    bound: f64,
    mut v: Vec<Complex64>,
) -> Vec<Complex64> {
    let steps = bound.ceil().max(1.0) as usize;
    let scale = 1.0 / steps as f64;
    let mut term = vec![Complex64::new(0.0, 0.0); v.len()];
    let mut next = term.clone();
    for _ in 0..steps {
        term.copy_from_slice(&v);
        for k in 1..60 {
            apply(&term, &mut next);
            let f = scale / k as f64;
            let mut size = 0.0f64;
            for (t, n) in term.iter_mut().zip(&next) {
                *t = n * f;
                size = size.max(t.norm());
            }
            for (x, t) in v.iter_mut().zip(&term) {
                *x += t;
            }
            if size < 1e-18 {
                break;
            }
        }
    }
    v
}

/// Coherent-state amplitudes `αⁿ e^{−|α|²/2}/√n!`.
pub fn coherent_amplitudes(alpha: Complex64, n_max: usize) -> Vec<Complex64> {
    let mut c = Vec::with_capacity(n_max + 1);
    c.push(Complex64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0));
    for n in 1..=n_max {
        let prev = c[n - 1];
        c.push(prev * alpha / (n as f64).sqrt());
    }
    c
}

/// Population outside the basis plus that of its top two levels.
fn single_mode_leak(c: &[Complex64]) -> (f64, f64) {
    let total: f64 = c.iter().map(|z| z.norm_sqr()).sum();
    let n = c.len();
    let top = c[n - 1].norm_sqr() + c[n - 2].norm_sqr();
    ((1.0 - total).max(0.0), top)
}

fn normalize(c: &mut [Complex64]) {
    let norm = c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in c.iter_mut() {
        *z /= norm;
    }
}

fn vacuum_mode(n_max: usize) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); n_max + 1];
    v[0] = Complex64::new(1.0, 0.0);
    v
}

fn too_small(what: &str, leak: f64, trunc: &Truncation) -> Error {
    let g = trunc.grown(1.5);
    Error::TruncationTooSmall(format!(
        "{what}: leaked population {leak:.3e} exceeds {:.1e} at cutoffs ({}, {}); \
         try cutoffs ({}, {})",
        trunc.leak_tolerance, trunc.n_matter_max, trunc.n_photon_max, g.n_matter_max, g.n_photon_max
    ))
}

/// Scheme I: matter wave packet `ψ₀(X) ∝ exp[−(X − X₀)²/(2w²)]` with the cavity in vacuum.
///
/// Built as `D(X₀/√2) S(−ln w)|0⟩`, then checked for truncation leakage and
/// for `⟨X⟩ = X₀`, `Var(X) = w²/2`.
pub fn prepare_scheme1(x0: f64, w: f64, trunc: Truncation) -> Result<FockState> {
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
    let alpha = Complex64::new(x0 * std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let mut matter = displaced_squeezed_amplitudes(alpha, -w.ln(), trunc.n_matter_max);
    let (missing, top) = single_mode_leak(&matter);
    if missing.max(top) > trunc.leak_tolerance {
        return Err(too_small("scheme I matter state", missing.max(top), &trunc));
    }
    normalize(&mut matter);
    let state = FockState::product(&matter, &vacuum_mode(trunc.n_photon_max), trunc)?;
    let m = measure(&state).matter;
    let (dx, dv) = (m.mean_position - x0, m.var_position() - 0.5 * w * w);
    if dx.abs() > MOMENT_TOLERANCE || dv.abs() > MOMENT_TOLERANCE {
        return Err(Error::TruncationTooSmall(format!(
            "scheme I moments off by ⟨X⟩ {dx:.3e}, Var(X) {dv:.3e} at cutoffs ({}, {})",
            trunc.n_matter_max, trunc.n_photon_max
        )));
    }
    Ok(state)
}

/// Scheme II: matter ground state with the cavity in the coherent state `|α⟩`.
pub fn prepare_scheme2(alpha: Complex64, trunc: Truncation) -> Result<FockState> {
    if !(alpha.re.is_finite() && alpha.im.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "alpha",
            reason: "must be finite".into(),
        });
    }
    let a = alpha.norm();
    if a * a + 5.0 * a >= trunc.n_photon_max as f64 {
        return Err(too_small(
            "scheme II coherent state (needs |α|² + 5|α| < n_photon_max)",
            f64::NAN,
            &trunc,
        ));
    }
    let mut light = coherent_amplitudes(alpha, trunc.n_photon_max);
    let (missing, top) = single_mode_leak(&light);
    if missing.max(top) > trunc.leak_tolerance {
        return Err(too_small("scheme II coherent state", missing.max(top), &trunc));
    }
    normalize(&mut light);
    let state = FockState::product(&vacuum_mode(trunc.n_matter_max), &light, trunc)?;
    let l = measure(&state).light;
    let s = std::f64::consts::SQRT_2;
    if (l.mean_position - s * alpha.re).abs() > MOMENT_TOLERANCE
        || (l.mean_momentum - s * alpha.im).abs() > MOMENT_TOLERANCE
    {
        return Err(Error::TruncationTooSmall(format!(
            "scheme II quadratures off at photon cutoff {}",
            trunc.n_photon_max
        )));
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// `⟨n|ψ⟩` by quadrature against Hermite functions in position space.
    fn position_overlaps(x0: f64, w: f64, n_max: usize) -> Vec<f64> {
        let (lo, hi, k) = (x0 - 14.0 * w - 12.0, x0 + 14.0 * w + 12.0, 40_000);
        let h = (hi - lo) / k as f64;
        let mut out = vec![0.0; n_max + 1];
        for i in 0..=k {
            let x = lo + h * i as f64;
            let psi = (std::f64::consts::PI * w * w).powf(-0.25)
                * (-(x - x0) * (x - x0) / (2.0 * w * w)).exp();
            let weight = if i == 0 || i == k { 0.5 * h } else { h };
            let mut prev = 0.0;
            let mut cur = std::f64::consts::PI.powf(-0.25) * (-0.5 * x * x).exp();
            for (n, o) in out.iter_mut().enumerate() {
                *o += weight * psi * cur;
                let nf = n as f64;
                let next = (2.0 / (nf + 1.0)).sqrt() * x * cur - (nf / (nf + 1.0)).sqrt() * prev;
                prev = cur;
                cur = next;
            }
        }
        out
    }

    #[test]
    fn recurrence_matches_position_space() {
        for &(x0, w) in &[(3.0, 0.5), (0.0, 1.0), (2.0, 1.6), (-1.5, 0.7)] {
            let c = displaced_squeezed_amplitudes(
                Complex64::new(x0 / 2f64.sqrt(), 0.0),
                -f64::ln(w),
                40,
            );
            let oracle = position_overlaps(x0, w, 40);
            for (n, (a, b)) in c.iter().zip(&oracle).enumerate() {
                assert!((a.re - b).abs() < 1e-9 && a.im.abs() < 1e-14, "{x0} {w} n={n}");
            }
        }
    }

    #[test]
    fn recurrence_matches_operator_action() {
        for &(alpha, r) in &[
            (Complex64::new(2.1, 0.0), 0.69),
            (Complex64::new(0.5, 1.2), -0.4),
            (Complex64::new(0.0, 0.0), 1.2),
        ] {
            let a = displaced_squeezed_amplitudes(alpha, r, 60);
            let b = displaced_squeezed_by_operators(alpha, r, 60);
            let diff = a.iter().zip(&b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
            assert!(diff < 1e-8, "{alpha} {r}: {diff}");
        }
    }

    #[test]
    fn scheme1_vacuum_and_coherent_limits() {
        let t = Truncation::new(40, 8).unwrap();
        let vac = prepare_scheme1(0.0, 1.0, t).unwrap();
        assert!((vac.amplitudes[0].re - 1.0).abs() < 1e-15);
        let o = measure(&vac);
        assert!(o.matter.mean_n.abs() < 1e-15);
        assert_eq!(o.q_matter(), None);
        let coh = prepare_scheme1(3.0, 1.0, t).unwrap();
        let o = measure(&coh);
        assert_relative_eq!(o.matter.mean_n, 4.5, epsilon = 1e-9);
        assert!(o.q_matter().unwrap().abs() < 1e-8);
    }

    #[test]
    fn scheme1_sub_poissonian_matter() {
        let t = Truncation::new(44, 6).unwrap();
        let s = prepare_scheme1(3.0, 0.5, t).unwrap();
        let (x0, w) = (3.0f64, 0.5f64);
        let (w2, w4) = (w * w, w.powi(4));
        let oracle = ((w2 - 1.0).powi(2) * (w4 + 1.0) + 4.0 * w4 * (w2 - 1.0) * x0 * x0)
            / (4.0 * w4 * x0 * x0 + 2.0 * w2 * (w2 - 1.0).powi(2));
        assert!((measure(&s).q_matter().unwrap() - oracle).abs() < 1e-6);
    }

    #[test]
    fn scheme1_reports_small_truncation() {
        let t = Truncation::new(20, 6).unwrap();
        assert!(matches!(
            prepare_scheme1(3.0, 0.5, t),
            Err(Error::TruncationTooSmall(_))
        ));
    }

    #[test]
    fn scheme2_coherent_statistics() {
        let t = Truncation::new(6, 40).unwrap();
        let s = prepare_scheme2(Complex64::new(2.0, 0.0), t).unwrap();
        let o = measure(&s);
        assert_relative_eq!(o.light.mean_n, 4.0, epsilon = 1e-9);
        assert_relative_eq!(o.light.var_n, 4.0, epsilon = 1e-8);
        assert!(o.q_photon().unwrap().abs() < 1e-8);
        let i = prepare_scheme2(Complex64::new(0.0, 2.0), t).unwrap();
        let o = measure(&i);
        assert!(o.light.mean_position.abs() < 1e-12);
        assert_relative_eq!(o.light.mean_momentum, 2.0 * 2f64.sqrt(), epsilon = 1e-9);
        let v = prepare_scheme2(Complex64::new(0.0, 0.0), t).unwrap();
        assert_eq!(v, FockState::vacuum(t));
        assert!(prepare_scheme2(Complex64::new(5.0, 0.0), t).is_err());
    }
}
