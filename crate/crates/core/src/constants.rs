//! Explicit constants for the even-power conjugation bounds: the monic
//! polynomials X^{2k} − C(2k,2)X^{2k−2} − C(2k,4)X^{2k−4} − ⋯ − 2, their
//! largest real roots K_{2k}, and empirical estimates of the conjugation
//! operator norm on L^p.

use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::algebra::{MatrixOperator, TracialAlgebra};
use crate::conjugation::conjugate;
use crate::error::{Error, Result};
use crate::spectral::{lp_norm, SpectralDecomposition};
use crate::verify::sample::{sample_operator, OperatorKind};

/// Bisection width tolerance used by [`k2k_constant`].
pub const ROOT_TOL: f64 = 1e-13;

/// Real polynomial with coefficients in ascending degree order.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coefficients: Vec<f64>,
}

impl Polynomial {
    /// The leading coefficient must be nonzero.
    pub fn new(coefficients: Vec<f64>) -> Result<Self> {
        match coefficients.last() {
            Some(&lead) if lead != 0.0 => Ok(Self { coefficients }),
            _ => Err(Error::InvalidParameter(
                "polynomial needs a nonzero leading coefficient".into(),
            )),
        }
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    /// Horner evaluation.
    pub fn eval(&self, x: f64) -> f64 {
        self.coefficients
            .iter()
            .rev()
            .fold(0.0, |acc, &c| acc * x + c)
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u64 / (i + 1) as u64;
    }
    acc as f64
}

/// The monic degree-2k polynomial whose largest real root is K_{2k}:
/// coefficient −C(2k, 2j) at degree 2k−2j for j = 1..k−1 and constant
/// term −2.
pub fn k2k_polynomial(k: usize) -> Result<Polynomial> {
    if k < 1 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let mut coeffs = vec![0.0; 2 * k + 1];
    coeffs[2 * k] = 1.0;
    coeffs[0] = -2.0;
    for j in 1..k {
        coeffs[2 * k - 2 * j] = -binomial(2 * k, 2 * j);
    }
    Polynomial::new(coeffs)
}

/// Largest real root by bracketed bisection. The bracket starts at the
/// Cauchy bound B = 1 + max|cᵢ/lead| and descends on a fixed grid until the
/// first sign change; `tol` bounds the final bracket width (relative to the
/// root magnitude).
pub fn largest_real_root(p: &Polynomial, tol: f64) -> Result<f64> {
    const SCAN_POINTS: usize = 4096;
    let lead = *p.coefficients().last().unwrap();
    let bound = 1.0
        + p.coefficients()[..p.degree()]
            .iter()
            .map(|c| (c / lead).abs())
            .fold(0.0, f64::max);
    let sign = lead.signum();
    let value = |x: f64| sign * p.eval(x);
    // value(bound) > 0 by the Cauchy bound; scan down for the first
    // non-positive point.
    let mut hi = bound;
    let mut lo = None;
    for i in 1..=SCAN_POINTS {
        let t = bound * (1.0 - i as f64 / SCAN_POINTS as f64);
        if value(t) <= 0.0 {
            lo = Some(t);
            break;
        }
        hi = t;
    }
    let mut lo = lo.ok_or(Error::NoBracket)?;
    let mut iterations = 0;
    while hi - lo > tol * lo.abs().max(1.0) && iterations < 200 {
        let mid = 0.5 * (lo + hi);
        if value(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    Ok(0.5 * (lo + hi))
}

/// K_{2k}: the largest real root of [`k2k_polynomial`].
pub fn k2k_constant(k: usize) -> Result<f64> {
    largest_real_root(&k2k_polynomial(k)?, ROOT_TOL)
}

/// How to estimate the conjugation operator norm on L^p.
#[derive(Debug, Clone, PartialEq)]
pub enum NormMode {
    /// Exact value for p = 2 via the weighted Hilbert–Schmidt isometry.
    ExactL2,
    /// Certified lower bound from multistart projected ascent.
    Multistart(MultistartOptions),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultistartOptions {
    pub restarts: usize,
    pub iterations: usize,
    /// Restrict the ascent to self-adjoint operators (the iteration
    /// preserves self-adjointness).
    pub self_adjoint: bool,
    pub seed: u64,
}

impl Default for MultistartOptions {
    fn default() -> Self {
        Self {
            restarts: 64,
            iterations: 40,
            self_adjoint: false,
            seed: 0,
        }
    }
}

/// Norm estimate together with the operator achieving it (when nonzero).
#[derive(Debug, Clone)]
pub struct LpNormEstimate {
    pub value: f64,
    pub maximizer: Option<MatrixOperator>,
}

/// Operator norm of the conjugation map on L^p(M, τ).
///
/// `ExactL2` (p = 2 only): under the weighted Hilbert–Schmidt isometry the
/// map is diagonal — it scales diagonal-block coordinates by 0 and strict
/// upper/lower coordinates by ∓i — so every singular value is 0 or 1 and
/// the exact norm is 1 whenever the strict part is non-empty, 0 otherwise.
///
/// `Multistart`: a lower-bound estimate max over restarts of ‖ã‖_p/‖a‖_p
/// after duality-map ascent; each evaluated ratio is a true lower bound.
pub fn lp_operator_norm(
    algebra: &Arc<TracialAlgebra>,
    p: f64,
    mode: NormMode,
) -> Result<LpNormEstimate> {
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "operator-norm estimation requires p >= 1, got {p}"
        )));
    }
    match mode {
        NormMode::ExactL2 => {
            if (p - 2.0).abs() > 1e-12 {
                return Err(Error::InvalidParameter(format!(
                    "exact-l2 mode only applies to p = 2, got {p}"
                )));
            }
            if algebra.has_strict_part() {
                let (i0, j0) = algebra.strict_upper_coordinates()[0];
                let mut unit = MatrixOperator::zero(algebra);
                unit.set(i0, j0, Complex64::ONE);
                Ok(LpNormEstimate {
                    value: 1.0,
                    maximizer: Some(unit),
                })
            } else {
                Ok(LpNormEstimate {
                    value: 0.0,
                    maximizer: None,
                })
            }
        }
        NormMode::Multistart(opts) => multistart_ascent(algebra, p, &opts),
    }
}

fn hermitize(x: &MatrixOperator) -> MatrixOperator {
    (&(x.clone()) + &x.adjoint()).scale(Complex64::new(0.5, 0.0))
}

/// Norming element u·|y|^{p−1}/‖y‖_p^{p−1} with u = y·pinv(|y|); its
/// L^q norm is 1 and it pairs with y to ‖y‖_p.
fn dual_element(y: &MatrixOperator, p: f64) -> Result<MatrixOperator> {
    let yty = &y.adjoint() * y;
    let sd = SpectralDecomposition::hermitian(&yty)?;
    let sigma_max = sd
        .eigenvalues()
        .iter()
        .fold(0.0f64, |m, &l| m.max(l.max(0.0)))
        .sqrt();
    if sigma_max == 0.0 {
        return Err(Error::Singular {
            smallest_singular_value: 0.0,
        });
    }
    let cut = 1e-14 * sigma_max;
    // y·V g(σ) V* with g(σ) = σ^{p−2} above the cutoff.
    let weight = sd.apply(|l| {
        let sigma = l.max(0.0).sqrt();
        if sigma > cut {
            sigma.powf(p - 2.0)
        } else {
            0.0
        }
    });
    let raw = y * &weight;
    let norm_p = lp_norm(y, p)?;
    Ok(raw.scale(Complex64::new(norm_p.powf(1.0 - p), 0.0)))
}

fn multistart_ascent(
    algebra: &Arc<TracialAlgebra>,
    p: f64,
    opts: &MultistartOptions,
) -> Result<LpNormEstimate> {
    let q = if p > 1.0 + 1e-12 {
        (p / (p - 1.0)).min(64.0)
    } else {
        64.0
    };
    let kind = if opts.self_adjoint {
        OperatorKind::SelfAdjoint
    } else {
        OperatorKind::Ginibre
    };
    let mut best = 0.0f64;
    let mut best_op: Option<MatrixOperator> = None;
    for restart in 0..opts.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(
            opts.seed ^ (restart as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
        );
        let mut x = sample_operator(algebra, kind, &mut rng);
        let nx = lp_norm(&x, p)?;
        if nx == 0.0 {
            continue;
        }
        x = x.scale(Complex64::new(1.0 / nx, 0.0));
        let mut stale = 0usize;
        for _ in 0..opts.iterations {
            if opts.self_adjoint {
                x = hermitize(&x);
                let nx = lp_norm(&x, p)?;
                if nx == 0.0 {
                    break;
                }
                x = x.scale(Complex64::new(1.0 / nx, 0.0));
            }
            let y = conjugate(&x);
            let ratio = lp_norm(&y, p)?;
            if ratio > best + 1e-12 {
                best = ratio;
                best_op = Some(x.clone());
                stale = 0;
            } else {
                stale += 1;
                if stale >= 3 {
                    break;
                }
            }
            if ratio < 1e-14 {
                break;
            }
            let s = dual_element(&y, p)?;
            let z = -&conjugate(&s); // the adjoint of ~ is −~
            if lp_norm(&z, q)? < 1e-14 {
                break;
            }
            let mut next = dual_element(&z, q)?;
            let np = lp_norm(&next, p)?;
            if np == 0.0 {
                break;
            }
            next = next.scale(Complex64::new(1.0 / np, 0.0));
            x = next;
        }
    }
    Ok(LpNormEstimate {
        value: best,
        maximizer: best_op,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k2k_polynomials_match_closed_forms() {
        // k = 1: X² − 2.
        let p1 = k2k_polynomial(1).unwrap();
        assert_eq!(p1.coefficients(), &[-2.0, 0.0, 1.0]);
        // k = 2: X⁴ − 6X² − 2.
        let p2 = k2k_polynomial(2).unwrap();
        assert_eq!(p2.coefficients(), &[-2.0, 0.0, -6.0, 0.0, 1.0]);
        // k = 3: X⁶ − 15X⁴ − 15X² − 2.
        let p3 = k2k_polynomial(3).unwrap();
        assert_eq!(p3.coefficients(), &[-2.0, 0.0, -15.0, 0.0, -15.0, 0.0, 1.0]);
        assert!(k2k_polynomial(0).is_err());
    }

    #[test]
    fn largest_roots_match_oracles() {
        // K₂ = √2.
        let k2 = k2k_constant(1).unwrap();
        assert!((k2 - 2.0f64.sqrt()).abs() < 1e-12, "K2 = {k2}");
        // K₄ = √(3 + √11), the positive root of the quadratic in X².
        let k4 = k2k_constant(2).unwrap();
        assert!((k4 - (3.0 + 11.0f64.sqrt()).sqrt()).abs() < 1e-9, "K4 = {k4}");
        // Degenerate linear case: X − 1.
        let lin = Polynomial::new(vec![-1.0, 1.0]).unwrap();
        assert!((largest_real_root(&lin, 1e-13).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn k2k_monotone_growth() {
        let mut prev = 1.0;
        for k in 1..=8 {
            let val = k2k_constant(k).unwrap();
            assert!(val > 1.0, "K_{} = {val} should exceed 1", 2 * k);
            assert!(val >= prev, "K_{} = {val} < previous {prev}", 2 * k);
            prev = val;
        }
    }

    #[test]
    fn root_finder_rejects_positive_polynomials() {
        // X² + 1 has no real root.
        let p = Polynomial::new(vec![1.0, 0.0, 1.0]).unwrap();
        assert!(matches!(largest_real_root(&p, 1e-13), Err(Error::NoBracket)));
    }

    #[test]
    fn exact_l2_norm_is_one_iff_strict_part() {
        let alg = TracialAlgebra::uniform_singletons(3).unwrap();
        let est = lp_operator_norm(&alg, 2.0, NormMode::ExactL2).unwrap();
        assert!((est.value - 1.0).abs() < 1e-15);
        let m = est.maximizer.unwrap();
        assert!((lp_norm(&conjugate(&m), 2.0).unwrap() - lp_norm(&m, 2.0).unwrap()).abs() < 1e-12);

        let trivial = TracialAlgebra::uniform(1, vec![1]).unwrap();
        let est = lp_operator_norm(&trivial, 2.0, NormMode::ExactL2).unwrap();
        assert_eq!(est.value, 0.0);

        let one_block = TracialAlgebra::uniform(3, vec![3]).unwrap();
        let est = lp_operator_norm(&one_block, 2.0, NormMode::ExactL2).unwrap();
        assert_eq!(est.value, 0.0);

        assert!(lp_operator_norm(&alg, 4.0, NormMode::ExactL2).is_err());
        assert!(lp_operator_norm(&alg, 0.5, NormMode::ExactL2).is_err());
    }

    #[test]
    fn multistart_reaches_one_at_p2_and_respects_k4() {
        let alg = TracialAlgebra::uniform_singletons(4).unwrap();
        let opts = MultistartOptions {
            restarts: 8,
            iterations: 25,
            self_adjoint: false,
            seed: 11,
        };
        let est = lp_operator_norm(&alg, 2.0, NormMode::Multistart(opts)).unwrap();
        assert!((est.value - 1.0).abs() < 1e-6, "estimate {}", est.value);

        // Self-adjoint ascent at p = 4 stays below K₄.
        let opts = MultistartOptions {
            restarts: 8,
            iterations: 25,
            self_adjoint: true,
            seed: 5,
        };
        let est = lp_operator_norm(&alg, 4.0, NormMode::Multistart(opts)).unwrap();
        let k4 = k2k_constant(2).unwrap();
        assert!(est.value <= k4 + 1e-9, "estimate {} vs K4 {k4}", est.value);
        assert!(est.value > 0.5, "ascent should make progress: {}", est.value);
    }
}
