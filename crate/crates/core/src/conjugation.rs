//! The conjugation operator ũ, the analytic completion u + iũ, the Riesz
//! projection onto H^p, and the resolvent-style regularization
//! f_ε = (εI + f)(I + εf)⁻¹.
//!
//! With the unique splitting u = u₁ + u₂* + d (strict-upper, adjoint of
//! strict-lower, block-diagonal), the conjugate is ũ = i·u₂* − i·u₁. On the
//! block pattern this is entrywise multiplication by 0 / −i / +i on the
//! diagonal / strict-upper / strict-lower regions, so linearity is exact.

use num_complex::Complex64;

use crate::algebra::{BlockRegion, MatrixOperator};
use crate::error::{Error, Result};
use crate::linalg;
use crate::spectral::SpectralDecomposition;

/// Absolute clip threshold for eigenvalue dust when enforcing positivity in
/// [`regularize`].
pub const POSITIVITY_CLIP: f64 = 1e-10;

/// ũ = i·u₂* − i·u₁: multiply strict-upper entries by −i and strict-lower
/// entries by +i, zero nothing else. Φ(ũ) = 0 always; self-adjoint inputs
/// have self-adjoint conjugates.
pub fn conjugate(u: &MatrixOperator) -> MatrixOperator {
    let alg = u.algebra();
    MatrixOperator::from_fn(alg, |i, j| match alg.region(i, j) {
        BlockRegion::Diagonal => Complex64::ZERO,
        BlockRegion::StrictUpper => Complex64::new(0.0, -1.0) * u.get(i, j),
        BlockRegion::StrictLower => Complex64::new(0.0, 1.0) * u.get(i, j),
    })
}

/// u + iũ = 2u₁ + d ∈ H∞: double the strict-upper part, keep the diagonal
/// blocks, drop the strict-lower part.
pub fn analytic_completion(u: &MatrixOperator) -> MatrixOperator {
    let alg = u.algebra();
    MatrixOperator::from_fn(alg, |i, j| match alg.region(i, j) {
        BlockRegion::Diagonal => u.get(i, j),
        BlockRegion::StrictUpper => 2.0 * u.get(i, j),
        BlockRegion::StrictLower => Complex64::ZERO,
    })
}

/// Riesz projection R(a) = ½(a + iã + Φ(a)): extract the block-upper part
/// of a (diagonal blocks included). Idempotent, fixes H∞, annihilates
/// (H∞₀)*.
pub fn riesz_projection(a: &MatrixOperator) -> MatrixOperator {
    let alg = a.algebra();
    MatrixOperator::from_fn(alg, |i, j| {
        if alg.region(i, j) == BlockRegion::StrictLower {
            Complex64::ZERO
        } else {
            a.get(i, j)
        }
    })
}

/// f_ε = (εI + f)(I + εf)⁻¹ for f = u + iũ with u ≥ 0 and 0 < ε < 1.
///
/// Eigenvalues of u in [−1e-10, 0) are clipped to zero; anything lower is
/// rejected. The inverse is taken by block back-substitution: I + εf is
/// block-upper with Hermitian positive definite diagonal blocks
/// I + εΦ(u), so f_ε is exactly block-upper by construction.
pub fn regularize(u: &MatrixOperator, eps: f64) -> Result<MatrixOperator> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "regularization parameter must satisfy 0 < eps < 1, got {eps}"
        )));
    }
    let sd = SpectralDecomposition::hermitian(u)?;
    let min_eig = sd
        .eigenvalues()
        .iter()
        .fold(f64::INFINITY, |m, &l| m.min(l));
    if min_eig < -POSITIVITY_CLIP {
        return Err(Error::NotPositive {
            min_eigenvalue: min_eig,
        });
    }
    let u_pos = if min_eig < 0.0 {
        sd.apply(|l| l.max(0.0))
    } else {
        u.clone()
    };
    let f = analytic_completion(&u_pos);
    let eps_c = Complex64::new(eps, 0.0);
    let id = MatrixOperator::identity(u.algebra());
    let m = &id + &f.scale(eps_c); // I + εf
    let b = &id.scale(eps_c) + &f; // εI + f
    block_upper_solve_right(&m, &b)
}

/// Solve X·M = B for block-upper M with invertible diagonal blocks; X (and
/// hence f_ε) inherits the block-upper pattern of B exactly, entries outside
/// it are never written.
fn block_upper_solve_right(m: &MatrixOperator, b: &MatrixOperator) -> Result<MatrixOperator> {
    let alg = m.algebra();
    let n = alg.dim();
    let mut x = vec![Complex64::ZERO; n * n];
    let me = m.entries();
    let be = b.entries();
    for jb in 0..alg.block_count() {
        let js = alg.block_start(jb);
        let jl = alg.block_lengths()[jb];
        // rhs = B[:, J] − Σ_{I<J} X[:, I]·M[I, J]
        let mut rhs = vec![Complex64::ZERO; n * jl];
        for i in 0..n {
            for c in 0..jl {
                rhs[i * jl + c] = be[i * n + js + c];
            }
        }
        for ib in 0..jb {
            let is_ = alg.block_start(ib);
            let il = alg.block_lengths()[ib];
            for i in 0..n {
                for k in 0..il {
                    let xik = x[i * n + is_ + k];
                    if xik == Complex64::ZERO {
                        continue;
                    }
                    for c in 0..jl {
                        let sub = xik * me[(is_ + k) * n + js + c];
                        rhs[i * jl + c] -= sub;
                    }
                }
            }
        }
        let mut mjj = vec![Complex64::ZERO; jl * jl];
        for r in 0..jl {
            for c in 0..jl {
                mjj[r * jl + c] = me[(js + r) * n + js + c];
            }
        }
        let mjj_inv = linalg::lu_inverse(&mjj, jl)?;
        for i in 0..n {
            for c in 0..jl {
                let mut acc = Complex64::ZERO;
                for k in 0..jl {
                    acc += rhs[i * jl + k] * mjj_inv[k * jl + c];
                }
                x[i * n + js + c] = acc;
            }
        }
    }
    MatrixOperator::new(std::sync::Arc::clone(alg), x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::TracialAlgebra;
    use crate::spectral::{self, lp_norm};
    use std::sync::Arc;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn conjugate_hand_examples() {
        let alg = TracialAlgebra::uniform_singletons(2).unwrap();
        // Block-diagonal input maps to zero.
        let d = MatrixOperator::diagonal(&alg, &[c(1.0, 2.0), c(-3.0, 0.0)]).unwrap();
        assert_eq!(conjugate(&d).max_abs(), 0.0);

        // Strictly upper input maps to −i·u.
        let mut up = MatrixOperator::zero(&alg);
        up.set(0, 1, c(2.0, 1.0));
        assert!(conjugate(&up).approx_eq(&up.scale(c(0.0, -1.0)), 0.0));

        // The symmetric flip u = [[0,1],[1,0]] → [[0,−i],[i,0]].
        let u = MatrixOperator::from_real(&alg, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        let ut = conjugate(&u);
        assert_eq!(ut.get(0, 1), c(0.0, -1.0));
        assert_eq!(ut.get(1, 0), c(0.0, 1.0));
        assert_eq!(ut.get(0, 0), Complex64::ZERO);
        // Self-adjointness is preserved and Φ(ũ) = 0.
        assert!(ut.self_adjoint_deviation() == 0.0);
        assert_eq!(ut.expectation().max_abs(), 0.0);
    }

    #[test]
    fn conjugate_matches_decomposition_formula() {
        let alg = TracialAlgebra::uniform(5, vec![2, 1, 2]).unwrap();
        let u = MatrixOperator::from_fn(&alg, |i, j| c((i * 5 + j) as f64 * 0.3 - 1.0, j as f64 - i as f64));
        let (u1, u2, _) = u.decompose();
        let want = &u2.adjoint().scale(c(0.0, 1.0)) + &u1.scale(c(0.0, -1.0));
        assert!(conjugate(&u).approx_eq(&want, 0.0));
    }

    #[test]
    fn analytic_completion_examples() {
        let alg = TracialAlgebra::uniform_singletons(2).unwrap();
        let d = MatrixOperator::diagonal(&alg, &[c(1.0, 0.0), c(2.0, 0.0)]).unwrap();
        assert!(analytic_completion(&d).approx_eq(&d, 0.0));

        let u = MatrixOperator::from_real(&alg, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        let f = analytic_completion(&u);
        assert_eq!(f.get(0, 1), c(2.0, 0.0));
        assert_eq!(f.get(1, 0), Complex64::ZERO);
        assert_eq!(f.get(0, 0), Complex64::ZERO);

        let mut lower = MatrixOperator::zero(&alg);
        lower.set(1, 0, c(4.0, -1.0));
        assert_eq!(analytic_completion(&lower).max_abs(), 0.0);

        // Identity f = u + i·conjugate(u) holds entrywise.
        let alg5 = TracialAlgebra::uniform(5, vec![1, 2, 2]).unwrap();
        let x = MatrixOperator::from_fn(&alg5, |i, j| c(i as f64 - 0.5 * j as f64, 0.25 * (i + j) as f64));
        let via_formula = &x + &conjugate(&x).scale(c(0.0, 1.0));
        assert!(analytic_completion(&x).approx_eq(&via_formula, 0.0));
        assert!(analytic_completion(&x).is_analytic());
    }

    #[test]
    fn riesz_projection_examples() {
        let alg = TracialAlgebra::uniform_singletons(2).unwrap();
        let a = MatrixOperator::from_real(&alg, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        let r = riesz_projection(&a);
        assert_eq!(r.get(0, 0), c(1.0, 0.0));
        assert_eq!(r.get(0, 1), c(2.0, 0.0));
        assert_eq!(r.get(1, 0), Complex64::ZERO);
        assert_eq!(r.get(1, 1), c(4.0, 0.0));

        // R fixes H∞ and kills (H∞₀)*.
        assert!(riesz_projection(&r).approx_eq(&r, 0.0));
        let mut low = MatrixOperator::zero(&alg);
        low.set(1, 0, c(5.0, 5.0));
        assert_eq!(riesz_projection(&low).max_abs(), 0.0);

        // R agrees with ½(a + iã + Φ(a)).
        let alg4 = TracialAlgebra::uniform(4, vec![2, 2]).unwrap();
        let x = MatrixOperator::from_fn(&alg4, |i, j| c((i + 1) as f64, (j as f64) - 1.5));
        let formula = (&(&x + &conjugate(&x).scale(c(0.0, 1.0))) + &x.expectation())
            .scale(c(0.5, 0.0));
        assert!(riesz_projection(&x).approx_eq(&formula, 1e-15));
        // a − R(a) lands in (H∞₀)*.
        let resid = &x - &riesz_projection(&x);
        assert!(resid.adjoint().is_analytic_zero());
    }

    #[test]
    fn regularize_fixed_points() {
        let alg = TracialAlgebra::uniform(3, vec![2, 1]).unwrap();
        // u = 0 → f_ε = ε·I.
        let z = MatrixOperator::zero(&alg);
        let fe = regularize(&z, 0.25).unwrap();
        assert!(fe.approx_eq(&MatrixOperator::identity(&alg).scale(c(0.25, 0.0)), 1e-14));
        // u = I → f_ε = I.
        let id = MatrixOperator::identity(&alg);
        let fe = regularize(&id, 0.1).unwrap();
        assert!(fe.approx_eq(&id, 1e-13));
    }

    #[test]
    fn regularize_parameter_and_positivity_guards() {
        let alg = TracialAlgebra::uniform_singletons(2).unwrap();
        let id = MatrixOperator::identity(&alg);
        assert!(regularize(&id, 0.0).is_err());
        assert!(regularize(&id, 1.0).is_err());
        let neg = MatrixOperator::diagonal(&alg, &[c(-1.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert!(matches!(
            regularize(&neg, 0.1),
            Err(Error::NotPositive { .. })
        ));
        // Dust below zero is clipped, not rejected.
        let dust = MatrixOperator::diagonal(&alg, &[c(-5e-11, 0.0), c(1.0, 0.0)]).unwrap();
        assert!(regularize(&dust, 0.1).is_ok());
    }

    #[test]
    fn regularize_satisfies_lemma_items() {
        let alg = TracialAlgebra::uniform(4, vec![1, 2, 1]).unwrap();
        // A fixed positive operator.
        let g = MatrixOperator::from_fn(&alg, |i, j| {
            c(0.4 * ((i + 1) * (j + 2)) as f64 % 1.7, 0.3 * (i as f64 - j as f64))
        });
        let u = &g.adjoint() * &g;
        for eps in [0.5, 0.1, 0.01] {
            let f = analytic_completion(&u);
            let fe = regularize(&u, eps).unwrap();
            assert!(fe.is_analytic(), "f_eps stays in H∞");

            // Re(f_ε) ≥ εI (up to solver dust).
            let re = (&fe + &fe.adjoint()).scale(c(0.5, 0.0));
            let sd = SpectralDecomposition::hermitian(&re).unwrap();
            let min = sd.eigenvalues().iter().fold(f64::INFINITY, |m, &l| m.min(l));
            assert!(min >= eps - 1e-9, "eps={eps} min={min}");

            // ‖(I + εf)⁻¹‖∞ ≤ 1.
            let id = MatrixOperator::identity(&alg);
            let m = &id + &f.scale(c(eps, 0.0));
            let minv = spectral::inverse(&m).unwrap();
            assert!(lp_norm(&minv, f64::INFINITY).unwrap() <= 1.0 + 1e-10);

            // ‖f_ε − f‖₂ ≤ ε·‖I + f²‖₂ via the proof identity.
            let diff = &fe - &f;
            let if2 = &id + &(&f * &f);
            assert!(
                diff.norm_l2() <= eps * if2.norm_l2() + 1e-12,
                "eps={eps}"
            );
        }
    }
}
