use num_complex::Complex64;

use super::{FockState, Truncation};
use crate::observables::{ModeMoments, QuantumObservables};

/// Ladder moments `⟨c⟩`, `⟨c²⟩`, `⟨c†c⟩`, `⟨(c†c)²⟩` of one mode.
#[derive(Default)]
struct Ladder {
    c: Complex64,
    c2: Complex64,
    n: f64,
    n2: f64,
}

impl Ladder {
    fn moments(&self) -> ModeMoments {
        let s = std::f64::consts::SQRT_2;
        ModeMoments {
            mean_position: s * self.c.re,
            mean_momentum: s * self.c.im,
            position_sq: self.c2.re + self.n + 0.5,
            momentum_sq: -self.c2.re + self.n + 0.5,
            sym_cross: self.c2.im,
            mean_n: self.n,
            var_n: (self.n2 - self.n * self.n).max(0.0),
        }
    }
}

/// All single-mode moments of a pure state, computed directly from amplitudes.
pub fn measure(state: &FockState) -> QuantumObservables {
    measure_amplitudes(&state.amplitudes, &state.trunc)
}

pub(crate) fn measure_amplitudes(psi: &[Complex64], trunc: &Truncation) -> QuantumObservables {
    let mut m = Ladder::default();
    let mut l = Ladder::default();
    let stride = trunc.n_photon_max + 1;
    let sq = |n: usize| (n as f64).sqrt();
    for (i, &amp) in psi.iter().enumerate() {
        if amp == Complex64::new(0.0, 0.0) {
            continue;
        }
        let (nb, na) = trunc.levels(i);
        let p = amp.norm_sqr();
        m.n += p * nb as f64;
        m.n2 += p * (nb * nb) as f64;
        l.n += p * na as f64;
        l.n2 += p * (na * na) as f64;
        // ⟨ψ|c|ψ⟩ collects conj(ψ[n−1]) √n ψ[n].
        if nb >= 1 {
            m.c += psi[i - stride].conj() * amp * sq(nb);
        }
        if nb >= 2 {
            m.c2 += psi[i - 2 * stride].conj() * amp * (sq(nb) * sq(nb - 1));
        }
        if na >= 1 {
            l.c += psi[i - 1].conj() * amp * sq(na);
        }
        if na >= 2 {
            l.c2 += psi[i - 2].conj() * amp * (sq(na) * sq(na - 1));
        }
    }
    QuantumObservables {
        matter: m.moments(),
        light: l.moments(),
    }
}

/// Population of the two highest levels of the matter and photon modes.
pub fn top_populations(psi: &[Complex64], trunc: &Truncation) -> (f64, f64) {
    let (mut matter, mut light) = (0.0, 0.0);
    for (i, amp) in psi.iter().enumerate() {
        let (nb, na) = trunc.levels(i);
        let p = amp.norm_sqr();
        if nb + 1 >= trunc.n_matter_max {
            matter += p;
        }
        if na + 1 >= trunc.n_photon_max {
            light += p;
        }
    }
    (matter, light)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::coherent_amplitudes;
    use approx::assert_relative_eq;

    #[test]
    fn coherent_light_moments() {
        let t = Truncation::new(5, 50).unwrap();
        let alpha = Complex64::new(1.5, -0.7);
        let mut light = coherent_amplitudes(alpha, 50);
        let norm: f64 = light.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        light.iter_mut().for_each(|z| *z /= norm);
        let mut matter = vec![Complex64::new(0.0, 0.0); 6];
        matter[0] = Complex64::new(1.0, 0.0);
        let s = FockState::product(&matter, &light, t).unwrap();
        let o = measure(&s);
        let r2 = 2f64.sqrt();
        assert_relative_eq!(o.light.mean_position, r2 * 1.5, epsilon = 1e-12);
        assert_relative_eq!(o.light.mean_momentum, -r2 * 0.7, epsilon = 1e-12);
        assert_relative_eq!(o.light.var_position(), 0.5, epsilon = 1e-12);
        assert_relative_eq!(o.light.var_momentum(), 0.5, epsilon = 1e-12);
        assert!(o.light.covariance().abs() < 1e-12);
        assert_relative_eq!(o.light.mean_n, alpha.norm_sqr(), epsilon = 1e-12);
        assert_eq!(o.q_matter(), None);
        let (tm, tl) = top_populations(&s.amplitudes, &t);
        assert_eq!(tm, 0.0);
        assert!(tl < 1e-40);
    }
}
