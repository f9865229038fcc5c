use num_complex::Complex64;

use super::Truncation;
use crate::linalg::CsrMatrix;
use crate::model::{ModelVariant, SystemParams};

/// Hamiltonian matrix on a truncated basis.
#[derive(Debug, Clone)]
pub struct FockHamiltonian {
    pub matrix: CsrMatrix,
    pub trunc: Truncation,
    pub params: SystemParams,
}

impl FockHamiltonian {
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }
}

/// Assembles the Hamiltonian of the given variant.
///
/// Full: `b†b + ½ + γ(a†a + ½) − i(λ/2)(b† − b)(a† + a) + (λ²/4)(a + a†)²`.
/// No-diamagnetic drops the last term. RWA keeps only `−i(λ/2)b†a + i(λ/2)ba†`.
pub fn build_hamiltonian(params: &SystemParams, trunc: Truncation) -> FockHamiltonian {
    let (g, l) = (params.gamma(), params.lambda());
    let (nb_max, na_max) = (trunc.n_matter_max, trunc.n_photon_max);
    let mut t = Vec::with_capacity(trunc.dim() * 7);
    let re = |v: f64| Complex64::new(v, 0.0);
    let im = |v: f64| Complex64::new(0.0, v);
    let sq = |n: usize| (n as f64).sqrt();
    let half = 0.5 * l;
    let dia = 0.25 * l * l;
    for nb in 0..=nb_max {
        for na in 0..=na_max {
            let i = trunc.index(nb, na);
            let mut diag = (nb as f64 + 0.5) + g * (na as f64 + 0.5);
            if params.variant() == ModelVariant::Full {
                // (a + a†)² = a² + a†² + 2a†a + 1
                diag += dia * (2.0 * na as f64 + 1.0);
                if na + 2 <= na_max {
                    let v = re(dia * sq(na + 1) * sq(na + 2));
                    t.push((trunc.index(nb, na + 2), i, v));
                    t.push((i, trunc.index(nb, na + 2), v));
                }
            }
            t.push((i, i, re(diag)));
            if l == 0.0 || nb == nb_max {
                continue;
            }
            // Raising the matter mode: coefficient of b† in each coupling term.
            let up_b = sq(nb + 1);
            let j_same = (na < na_max).then(|| trunc.index(nb + 1, na + 1));
            let j_down = (na > 0).then(|| trunc.index(nb + 1, na - 1));
            match params.variant() {
                ModelVariant::Full | ModelVariant::NoDiamagnetic => {
                    // −i(λ/2) b†(a† + a) and its conjugate +i(λ/2) b(a + a†).
                    if let Some(j) = j_same {
                        let v = im(-half * up_b * sq(na + 1));
                        t.push((j, i, v));
                        t.push((i, j, v.conj()));
                    }
                    if let Some(j) = j_down {
                        let v = im(-half * up_b * sq(na));
                        t.push((j, i, v));
                        t.push((i, j, v.conj()));
                    }
                }
                ModelVariant::Rwa => {
                    // −i(λ/2) b†a and its conjugate +i(λ/2) b a†.
                    if let Some(j) = j_down {
                        let v = im(-half * up_b * sq(na));
                        t.push((j, i, v));
                        t.push((i, j, v.conj()));
                    }
                }
            }
        }
    }
    FockHamiltonian {
        matrix: CsrMatrix::from_triplets(trunc.dim(), t),
        trunc,
        params: *params,
    }
}

/// Diagonal operator `b†b`, `a†a` or their sum, selected by the flags.
pub fn number_operator(trunc: Truncation, matter: bool, light: bool) -> CsrMatrix {
    let t = (0..trunc.dim())
        .map(|i| {
            let (nb, na) = trunc.levels(i);
            let n = if matter { nb } else { 0 } + if light { na } else { 0 };
            (i, i, Complex64::new(n as f64, 0.0))
        })
        .collect();
    CsrMatrix::from_triplets(trunc.dim(), t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn dense(h: &CsrMatrix) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(h.dim(), h.dim());
        for (r, c, v) in h.entries() {
            m[(r, c)] = v;
        }
        m
    }

    /// Builds the Hamiltonian from explicit dense ladder operators.
    fn oracle(params: &SystemParams, trunc: Truncation) -> DMatrix<Complex64> {
        let (nb, na) = (trunc.n_matter_max + 1, trunc.n_photon_max + 1);
        let ladder = |n: usize| {
            let mut m = DMatrix::<Complex64>::zeros(n, n);
            for k in 1..n {
                m[(k - 1, k)] = Complex64::new((k as f64).sqrt(), 0.0);
            }
            m
        };
        let kron = |a: &DMatrix<Complex64>, b: &DMatrix<Complex64>| a.kronecker(b);
        let (ib, ia) = (DMatrix::identity(nb, nb), DMatrix::identity(na, na));
        let b = kron(&ladder(nb), &ia);
        let a = kron(&ib, &ladder(na));
        let bd = b.adjoint();
        let ad = a.adjoint();
        let id = DMatrix::<Complex64>::identity(trunc.dim(), trunc.dim());
        let i = Complex64::new(0.0, 1.0);
        let (g, l) = (params.gamma(), params.lambda());
        let c = |v: f64| Complex64::new(v, 0.0);
        let free = &bd * &b + &id * c(0.5) + (&ad * &a + &id * c(0.5)) * c(g);
        match params.variant() {
            ModelVariant::Full | ModelVariant::NoDiamagnetic => {
                let q = (&ad + &a) * c(std::f64::consts::FRAC_1_SQRT_2);
                let p_big = (&bd - &b) * (i * std::f64::consts::FRAC_1_SQRT_2);
                // q and P act on different modes, so the product is exact.
                let mut h = free - &q * &p_big * c(l);
                if params.variant() == ModelVariant::Full {
                    // Exact q² on the truncated mode: (a² + a†² + 2a†a + 1)/2.
                    let q2 = (&a * &a + &ad * &ad + &ad * &a * c(2.0) + &id) * c(0.5);
                    h += q2 * c(0.5 * l * l);
                }
                h
            }
            ModelVariant::Rwa => free - &bd * &a * (i * 0.5 * l) + &b * &ad * (i * 0.5 * l),
        }
    }

    #[test]
    fn matches_ladder_operator_construction() {
        let trunc = Truncation::new(5, 6).unwrap();
        for variant in ModelVariant::ALL {
            let p = SystemParams::new(1.3, 0.7, variant).unwrap();
            let h = build_hamiltonian(&p, trunc);
            let diff = (dense(&h.matrix) - oracle(&p, trunc)).camax();
            assert!(diff < 1e-14, "{variant}: {diff}");
            assert!(h.matrix.hermiticity_defect() < 1e-12);
        }
    }

    #[test]
    fn decoupled_is_diagonal() {
        let trunc = Truncation::new(6, 6).unwrap();
        let p = SystemParams::new(0.8, 0.0, ModelVariant::Full).unwrap();
        let h = build_hamiltonian(&p, trunc);
        assert_eq!(h.matrix.nnz(), trunc.dim());
        for i in 0..trunc.dim() {
            let (nb, na) = trunc.levels(i);
            let e = nb as f64 + 0.5 + 0.8 * (na as f64 + 0.5);
            assert_eq!(h.matrix.get(i, i), Complex64::new(e, 0.0));
        }
    }

    #[test]
    fn rwa_conserves_excitations() {
        let trunc = Truncation::new(8, 8).unwrap();
        let p = SystemParams::new(1.0, 0.4, ModelVariant::Rwa).unwrap();
        let h = build_hamiltonian(&p, trunc);
        let n = number_operator(trunc, true, true);
        assert!(h.matrix.commutator(&n).max_abs() < 1e-12);
        let full = build_hamiltonian(&p.with_variant(ModelVariant::Full).unwrap(), trunc);
        assert!(full.matrix.commutator(&n).max_abs() > 0.1);
    }
}
