//! Pure inequality evaluators. Each check computes (lhs, rhs) for one
//! inequality `lhs ≤ rhs`; the suites grant additive slack on top of rhs and
//! record a [`Violation`](super::Violation) when it is exceeded. The same
//! functions drive [`replay`], so every recorded witness reproduces its
//! slack independently of the suite loop.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::algebra::MatrixOperator;
use crate::conjugation::{analytic_completion, conjugate, regularize, riesz_projection};
use crate::error::{Error, Result};
use crate::fixture::MatrixFixture;
use crate::spectral::{
    inverse, lambda_dist, lp_norm, mu, submajorization_gap, SpectralDecomposition,
};
use crate::verify::Violation;

/// Outcome of one inequality evaluation.
#[derive(Debug, Clone, Copy)]
pub struct CheckValue {
    pub lhs: f64,
    pub rhs: f64,
}

impl CheckValue {
    /// lhs − rhs; positive means violated (before slack).
    pub fn slack(&self) -> f64 {
        self.lhs - self.rhs
    }

    /// Violated at additive tolerance `tol` scaled by the dominating side.
    pub fn violated(&self, tol: f64) -> bool {
        self.slack() > tol * self.rhs.abs().max(1.0)
    }
}

/// |τ(a₁⋯a_m)| ≤ Π ‖aⱼ‖_{pⱼ} for Σ 1/pⱼ = 1.
pub fn check_holder(ops: &[MatrixOperator], exponents: &[f64]) -> Result<CheckValue> {
    assert_eq!(ops.len(), exponents.len());
    let mut prod = ops[0].clone();
    for op in &ops[1..] {
        prod = &prod * op;
    }
    let lhs = prod.trace().norm();
    let mut rhs = 1.0;
    for (op, &p) in ops.iter().zip(exponents) {
        rhs *= lp_norm(op, p)?;
    }
    Ok(CheckValue { lhs, rhs })
}

/// λ_s(u + iũ) ≤ 4‖u‖₁/s for positive u.
pub fn check_weak_type(u: &MatrixOperator, s: f64) -> Result<CheckValue> {
    let f = analytic_completion(u);
    let lhs = lambda_dist(&f, s)?;
    let rhs = 4.0 * lp_norm(u, 1.0)? / s;
    Ok(CheckValue { lhs, rhs })
}

/// τ(P(ab)P) ≤ τ(ab) for positive a, b and P a spectral projection of a
/// (here χ_{(s,∞)}(a)).
pub fn check_lemma3(a: &MatrixOperator, b: &MatrixOperator, s: f64) -> Result<CheckValue> {
    let sd = SpectralDecomposition::hermitian(a)?;
    let p = sd.projection(|l| l > s);
    let ab = a * b;
    let lhs = (&(&p * &ab) * &p).trace().re;
    let rhs = ab.trace().re;
    Ok(CheckValue { lhs, rhs })
}

/// τ(C·B⁻¹) ≤ τ(C·A⁻¹) for positive definite A ≤ B and positive C.
pub fn check_lemma4(
    a: &MatrixOperator,
    b: &MatrixOperator,
    c: &MatrixOperator,
) -> Result<CheckValue> {
    let lhs = (c * &inverse(b)?).trace().re;
    let rhs = (c * &inverse(a)?).trace().re;
    Ok(CheckValue { lhs, rhs })
}

/// τ(log h) ≤ log τ(h) for positive definite h.
pub fn check_jensen_trace(h: &MatrixOperator) -> Result<CheckValue> {
    let sd = SpectralDecomposition::hermitian(h)?;
    let mut lhs = 0.0;
    for (&l, &m) in sd.eigenvalues().iter().zip(sd.masses()) {
        if l <= 0.0 {
            return Err(Error::SpectrumNearZero {
                min: l,
                max: *sd.eigenvalues().last().unwrap(),
            });
        }
        lhs += m * l.ln();
    }
    let rhs = h.trace().re.ln();
    Ok(CheckValue { lhs, rhs })
}

/// μ(bc) ≺≺ μ(b)μ(c): largest partial-integral excess of μ(bc) over the
/// pointwise product (lhs = excess, rhs = 0).
pub fn check_submajorization(b: &MatrixOperator, c: &MatrixOperator) -> Result<CheckValue> {
    let product = mu(b).pointwise_product(&mu(c));
    let gap = submajorization_gap(&product, &mu(&(b * c)));
    Ok(CheckValue { lhs: gap, rhs: 0.0 })
}

/// Named sub-checks of the regularization lemma for f_ε = (εI + f)(I + εf)⁻¹.
pub mod regularization {
    use super::*;

    /// ‖(I + εf)⁻¹‖∞ ≤ 1.
    pub fn inverse_contraction(u: &MatrixOperator, eps: f64) -> Result<CheckValue> {
        let f = analytic_completion(u);
        let id = MatrixOperator::identity(u.algebra());
        let m = &id + &f.scale(Complex64::new(eps, 0.0));
        let lhs = lp_norm(&inverse(&m)?, f64::INFINITY)?;
        Ok(CheckValue { lhs, rhs: 1.0 })
    }

    /// Largest strict-lower entry of f_ε relative to its magnitude
    /// (membership in H∞); rhs = 0.
    pub fn analytic_membership(u: &MatrixOperator, eps: f64) -> Result<CheckValue> {
        let fe = regularize(u, eps)?;
        let alg = fe.algebra();
        let mut worst = 0.0f64;
        for i in 0..fe.dim() {
            for j in 0..fe.dim() {
                if alg.block_of(i) > alg.block_of(j) {
                    worst = worst.max(fe.get(i, j).norm());
                }
            }
        }
        Ok(CheckValue {
            lhs: worst / fe.max_abs().max(1.0),
            rhs: 0.0,
        })
    }

    /// ε − λ_min(Re f_ε) ≤ 0.
    pub fn real_part_bound(u: &MatrixOperator, eps: f64) -> Result<CheckValue> {
        let fe = regularize(u, eps)?;
        let re = (&fe + &fe.adjoint()).scale(Complex64::new(0.5, 0.0));
        let sd = SpectralDecomposition::hermitian(&re)?;
        let min = sd
            .eigenvalues()
            .iter()
            .fold(f64::INFINITY, |m, &l| m.min(l));
        Ok(CheckValue {
            lhs: eps - min,
            rhs: 0.0,
        })
    }

    /// ‖f_ε − f‖_p ≤ ε‖I + f²‖_p.
    pub fn lp_convergence(u: &MatrixOperator, eps: f64, p: f64) -> Result<CheckValue> {
        let f = analytic_completion(u);
        let fe = regularize(u, eps)?;
        let id = MatrixOperator::identity(u.algebra());
        let lhs = lp_norm(&(&fe - &f), p)?;
        let rhs = eps * lp_norm(&(&id + &(&f * &f)), p)?;
        Ok(CheckValue { lhs, rhs })
    }

    /// Entrywise distance ‖Φ(f_ε) − (εI + Φ(u))(I + εΦ(u))⁻¹‖_max; rhs = 0.
    pub fn claim1(u: &MatrixOperator, eps: f64) -> Result<CheckValue> {
        let fe = regularize(u, eps)?;
        let phi_u = u.expectation();
        let id = MatrixOperator::identity(u.algebra());
        let eps_c = Complex64::new(eps, 0.0);
        let target =
            &(&id.scale(eps_c) + &phi_u) * &inverse(&(&id + &phi_u.scale(eps_c)))?;
        Ok(CheckValue {
            lhs: fe.expectation().max_diff(&target) / target.max_abs().max(1.0),
            rhs: 0.0,
        })
    }
}

/// Named sub-checks of the conjugation core suite.
pub mod conjugation_core {
    use super::*;

    /// ‖ũ‖₂ ≤ ‖u‖₂.
    pub fn l2_contraction(u: &MatrixOperator) -> CheckValue {
        CheckValue {
            lhs: conjugate(u).norm_l2(),
            rhs: u.norm_l2(),
        }
    }

    /// ‖ũ‖₂ = ‖u‖₂ when Φ(u) = 0 (lhs = |difference|, rhs = 0).
    pub fn l2_isometry_on_phi_kernel(u: &MatrixOperator) -> CheckValue {
        let u0 = &u.clone() - &u.expectation();
        CheckValue {
            lhs: (conjugate(&u0).norm_l2() - u0.norm_l2()).abs(),
            rhs: 0.0,
        }
    }

    /// ‖Φ(ũ)‖_max = 0.
    pub fn phi_annihilates(u: &MatrixOperator) -> CheckValue {
        CheckValue {
            lhs: conjugate(u).expectation().max_abs(),
            rhs: 0.0,
        }
    }

    /// Self-adjoint u has self-adjoint ũ.
    pub fn preserves_self_adjoint(u: &MatrixOperator) -> CheckValue {
        let sym = (&u.clone() + &u.adjoint()).scale(Complex64::new(0.5, 0.0));
        CheckValue {
            lhs: conjugate(&sym).self_adjoint_deviation(),
            rhs: 0.0,
        }
    }

    /// τ(uṽ) = −τ(ũv) for self-adjoint u, v (lhs = |sum|, rhs = 0).
    pub fn skew_duality(u: &MatrixOperator, v: &MatrixOperator) -> CheckValue {
        let lhs = ((u * &conjugate(v)).trace() + (&conjugate(u) * v).trace()).norm();
        CheckValue { lhs, rhs: 0.0 }
    }

    /// u + iũ ∈ H∞ (largest strict-lower entry; rhs = 0).
    pub fn completion_analytic(u: &MatrixOperator) -> CheckValue {
        let f = analytic_completion(u);
        let alg = f.algebra();
        let mut worst = 0.0f64;
        for i in 0..f.dim() {
            for j in 0..f.dim() {
                if alg.block_of(i) > alg.block_of(j) {
                    worst = worst.max(f.get(i, j).norm());
                }
            }
        }
        CheckValue { lhs: worst, rhs: 0.0 }
    }

    /// ‖R(R(a)) − R(a)‖₂ = 0 and a − R(a) ∈ (H∞₀)* (combined deviation).
    pub fn riesz_idempotent_complement(a: &MatrixOperator) -> CheckValue {
        let r = riesz_projection(a);
        let idem = riesz_projection(&r).max_diff(&r);
        let resid = &a.clone() - &r;
        let alg = a.algebra();
        let mut pattern = 0.0f64;
        for i in 0..a.dim() {
            for j in 0..a.dim() {
                if alg.block_of(i) <= alg.block_of(j) {
                    pattern = pattern.max(resid.get(i, j).norm());
                }
            }
        }
        CheckValue {
            lhs: idem.max(pattern),
            rhs: 0.0,
        }
    }

    /// ‖ũ‖_{2k} ≤ K·‖u‖_{2k} with K = K_{2k} for self-adjoint u or 2K_{2k}
    /// in general.
    pub fn even_p_bound(u: &MatrixOperator, two_k: f64, bound: f64) -> Result<CheckValue> {
        Ok(CheckValue {
            lhs: lp_norm(&conjugate(u), two_k)?,
            rhs: bound * lp_norm(u, two_k)?,
        })
    }
}

fn witness(v: &Violation, i: usize) -> Result<MatrixOperator> {
    v.witnesses
        .get(i)
        .ok_or_else(|| Error::InvalidParameter(format!("violation lacks witness {i}")))?
        .to_operator()
}

fn param(v: &Violation, name: &str) -> Result<f64> {
    v.params
        .get(name)
        .copied()
        .ok_or_else(|| Error::InvalidParameter(format!("violation lacks parameter '{name}'")))
}

/// Recompute the slack of a recorded violation from its serialized
/// witnesses alone. Replay matches the recorded slack to full precision
/// because the same evaluation path runs on bit-identical inputs.
pub fn replay(v: &Violation) -> Result<f64> {
    let head = v.check.split('.').next().unwrap_or("");
    let value: CheckValue = match head {
        "holder" => {
            let m = v.witnesses.len();
            let mut ops = Vec::with_capacity(m);
            let mut ps = Vec::with_capacity(m);
            for i in 0..m {
                ops.push(witness(v, i)?);
                ps.push(param(v, &format!("p{i}"))?);
            }
            check_holder(&ops, &ps)?
        }
        "weak-type" => check_weak_type(&witness(v, 0)?, param(v, "s")?)?,
        "lemma3" => check_lemma3(&witness(v, 0)?, &witness(v, 1)?, param(v, "s")?)?,
        "lemma4" => check_lemma4(&witness(v, 0)?, &witness(v, 1)?, &witness(v, 2)?)?,
        "jensen-trace" => check_jensen_trace(&witness(v, 0)?)?,
        "jensen-diag" => check_jensen_trace(&witness(v, 0)?)?,
        "submajorization" => check_submajorization(&witness(v, 0)?, &witness(v, 1)?)?,
        "regularization" => {
            let u = witness(v, 0)?;
            let eps = param(v, "eps")?;
            match v.check.as_str() {
                "regularization.inverse-contraction" => {
                    regularization::inverse_contraction(&u, eps)?
                }
                "regularization.analytic" => regularization::analytic_membership(&u, eps)?,
                "regularization.real-part" => regularization::real_part_bound(&u, eps)?,
                "regularization.lp" => regularization::lp_convergence(&u, eps, param(v, "p")?)?,
                "regularization.claim1" => regularization::claim1(&u, eps)?,
                other => {
                    return Err(Error::InvalidParameter(format!(
                        "unknown regularization check '{other}'"
                    )))
                }
            }
        }
        "conjugation" => {
            let u = witness(v, 0)?;
            match v.check.as_str() {
                "conjugation.l2-contraction" => conjugation_core::l2_contraction(&u),
                "conjugation.l2-isometry" => conjugation_core::l2_isometry_on_phi_kernel(&u),
                "conjugation.phi-zero" => conjugation_core::phi_annihilates(&u),
                "conjugation.self-adjoint" => conjugation_core::preserves_self_adjoint(&u),
                "conjugation.skew-duality" => {
                    conjugation_core::skew_duality(&u, &witness(v, 1)?)
                }
                "conjugation.completion-analytic" => conjugation_core::completion_analytic(&u),
                "conjugation.riesz" => conjugation_core::riesz_idempotent_complement(&u),
                "conjugation.even-p" => conjugation_core::even_p_bound(
                    &u,
                    param(v, "two_k")?,
                    param(v, "bound")?,
                )?,
                "conjugation.exact-l2-norm" => {
                    let est = crate::constants::lp_operator_norm(
                        u.algebra(),
                        2.0,
                        crate::constants::NormMode::ExactL2,
                    )?;
                    CheckValue {
                        lhs: (est.value - 1.0).abs(),
                        rhs: 0.0,
                    }
                }
                other => {
                    return Err(Error::InvalidParameter(format!(
                        "unknown conjugation check '{other}'"
                    )))
                }
            }
        }
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown check family '{other}'"
            )))
        }
    };
    Ok(value.slack())
}
