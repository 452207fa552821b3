//! Functional calculus and the measure-theoretic layer: |x|, spectral
//! projections, the generalized singular value function μ_t and its inverse
//! distribution λ_s, L^p and weak-L¹ (quasi)norms, matrix exp/log/log⁺,
//! guarded inversion, triangular-unitary factorizations, and submajorization
//! of step functions.
//!
//! Self-adjoint inputs are symmetrized ((x + x*)/2) before decomposition and
//! diagonalized by a cyclic Jacobi iteration (off-diagonal tolerance
//! 1e-13·‖x‖_F, capped sweep count). Spectral projections select eigenvalues
//! from the half-open interval (lo, hi]; χ_{(s,∞)} is the unbounded
//! shorthand with hi = +∞.

use std::sync::Arc;

use num_complex::Complex64;

use crate::algebra::{MatrixOperator, TracialAlgebra};
use crate::error::{Error, Result};
use crate::linalg;

/// Relative tolerance under which neighbouring singular values are merged
/// into one spectral cell when building μ.
pub const TIE_TOL: f64 = 1e-10;

/// Relative spectral-floor guard for log and inversion: refuse when the
/// smallest eigenvalue (singular value) is below `SPECTRUM_GUARD` times the
/// largest.
pub const SPECTRUM_GUARD: f64 = 1e-12;

const SINGULAR_GUARD: f64 = 1e-13;
const SELF_ADJOINT_TOL: f64 = 1e-8;

/// Right-continuous non-increasing step function on [0, 1): value
/// `values[j]` on `[breakpoints[j], breakpoints[j+1])`, with the final
/// interval extending to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl StepFunction {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breakpoints.is_empty() || breakpoints.len() != values.len() {
            return Err(Error::InvalidParameter(
                "step function needs one value per breakpoint".into(),
            ));
        }
        if breakpoints[0] != 0.0 {
            return Err(Error::InvalidParameter(
                "first breakpoint must be 0".into(),
            ));
        }
        for w in breakpoints.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::InvalidParameter(
                    "breakpoints must be strictly increasing".into(),
                ));
            }
        }
        if *breakpoints.last().unwrap() >= 1.0 {
            return Err(Error::InvalidParameter(
                "breakpoints must lie in [0, 1)".into(),
            ));
        }
        let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for w in values.windows(2) {
            if w[1] > w[0] + 1e-12 * scale.max(1.0) {
                return Err(Error::InvalidParameter(
                    "values must be non-increasing".into(),
                ));
            }
        }
        Ok(Self {
            breakpoints,
            values,
        })
    }

    pub fn constant(value: f64) -> Self {
        Self {
            breakpoints: vec![0.0],
            values: vec![value],
        }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value at t ∈ [0, 1).
    pub fn value_at(&self, t: f64) -> f64 {
        debug_assert!((0.0..1.0).contains(&t));
        match self
            .breakpoints
            .binary_search_by(|b| b.total_cmp(&t))
        {
            Ok(j) => self.values[j],
            Err(j) => self.values[j - 1],
        }
    }

    /// ∫₀^α of the step function, for α ∈ [0, 1].
    pub fn partial_integral(&self, alpha: f64) -> f64 {
        let alpha = alpha.clamp(0.0, 1.0);
        let mut acc = 0.0;
        for (j, &start) in self.breakpoints.iter().enumerate() {
            if start >= alpha {
                break;
            }
            let end = self
                .breakpoints
                .get(j + 1)
                .copied()
                .unwrap_or(1.0)
                .min(alpha);
            acc += (end - start) * self.values[j];
        }
        acc
    }

    /// Total length of {t : value(t) > s}.
    pub fn level_set_length(&self, s: f64) -> f64 {
        let mut acc = 0.0;
        for (j, &start) in self.breakpoints.iter().enumerate() {
            if self.values[j] > s {
                let end = self.breakpoints.get(j + 1).copied().unwrap_or(1.0);
                acc += end - start;
            }
        }
        acc
    }

    /// Pointwise product, on the union of the two breakpoint grids.
    pub fn pointwise_product(&self, other: &Self) -> Self {
        let mut grid: Vec<f64> = self
            .breakpoints
            .iter()
            .chain(other.breakpoints.iter())
            .copied()
            .collect();
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        let values = grid
            .iter()
            .map(|&t| self.value_at(t) * other.value_at(t))
            .collect();
        Self {
            breakpoints: grid,
            values,
        }
    }

    /// sup over each interval of t·value, i.e. max_j breakpoint_{j+1}·v_j
    /// with the final endpoint taken as 1.
    pub fn sup_t_times_value(&self) -> f64 {
        let mut sup = 0.0f64;
        for (j, &v) in self.values.iter().enumerate() {
            let end = self.breakpoints.get(j + 1).copied().unwrap_or(1.0);
            sup = sup.max(end * v);
        }
        sup
    }
}

/// Spectral decomposition of a self-adjoint operator: eigenvalues ascending,
/// unitary eigenvector columns, and the trace weight mass
/// τ(vⱼvⱼ*) = Σᵢ wᵢ|Vᵢⱼ|² carried by each eigenvector.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    algebra: Arc<TracialAlgebra>,
    eigenvalues: Vec<f64>,
    vectors: Vec<Complex64>,
    masses: Vec<f64>,
}

impl SpectralDecomposition {
    /// Decompose a self-adjoint operator. The input is symmetrized first;
    /// inputs farther than 1e-8·‖x‖_max from self-adjoint are rejected.
    pub fn hermitian(x: &MatrixOperator) -> Result<Self> {
        let dev = x.self_adjoint_deviation();
        if dev > SELF_ADJOINT_TOL * x.max_abs().max(1.0) {
            return Err(Error::NotSelfAdjoint { deviation: dev });
        }
        let n = x.dim();
        let mut sym = vec![Complex64::ZERO; n * n];
        for i in 0..n {
            for j in 0..n {
                sym[i * n + j] = 0.5 * (x.get(i, j) + x.get(j, i).conj());
            }
        }
        let eig = linalg::hermitian_eigen(&sym, n)?;
        let w = x.algebra().weights();
        let masses = (0..n)
            .map(|k| {
                (0..n)
                    .map(|i| w[i] * eig.vectors[i * n + k].norm_sqr())
                    .sum()
            })
            .collect();
        Ok(Self {
            algebra: Arc::clone(x.algebra()),
            eigenvalues: eig.eigenvalues,
            vectors: eig.vectors,
            masses,
        })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Trace mass per eigenvector, aligned with `eigenvalues`.
    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn algebra(&self) -> &Arc<TracialAlgebra> {
        &self.algebra
    }

    /// V f(Λ) V*.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> MatrixOperator {
        let n = self.algebra.dim();
        let eig = linalg::HermitianEigen {
            eigenvalues: self.eigenvalues.clone(),
            vectors: self.vectors.clone(),
            n,
        };
        MatrixOperator::new(Arc::clone(&self.algebra), eig.apply(f))
            .expect("dimensions preserved")
    }

    /// Projection onto the eigenvectors selected by the predicate.
    pub fn projection(&self, select: impl Fn(f64) -> bool) -> MatrixOperator {
        let n = self.algebra.dim();
        let mut entries = vec![Complex64::ZERO; n * n];
        for (k, &lambda) in self.eigenvalues.iter().enumerate() {
            if !select(lambda) {
                continue;
            }
            for i in 0..n {
                let vik = self.vectors[i * n + k];
                for j in 0..n {
                    entries[i * n + j] += vik * self.vectors[j * n + k].conj();
                }
            }
        }
        MatrixOperator::new(Arc::clone(&self.algebra), entries).expect("dimensions preserved")
    }

    /// Mass of eigenvalues satisfying the predicate.
    pub fn mass_where(&self, select: impl Fn(f64) -> bool) -> f64 {
        self.eigenvalues
            .iter()
            .zip(self.masses.iter())
            .filter(|(l, _)| select(**l))
            .map(|(_, m)| m)
            .sum()
    }
}

/// |x| = (x*x)^{1/2}. Positive semidefinite; tiny negative eigenvalue dust
/// from the square is clamped to zero.
pub fn abs_op(x: &MatrixOperator) -> MatrixOperator {
    let xtx = &x.adjoint() * x;
    let sd = SpectralDecomposition::hermitian(&xtx).expect("x*x is Hermitian by construction");
    sd.apply(|l| l.max(0.0).sqrt())
}

/// Singular value cells of x: pairs (σ, mass) sorted by σ descending, one
/// per eigenvector of |x|, not tie-merged.
pub fn singular_cells(x: &MatrixOperator) -> Vec<(f64, f64)> {
    let sd = SpectralDecomposition::hermitian(&abs_op(x)).expect("|x| is Hermitian");
    let mut cells: Vec<(f64, f64)> = sd
        .eigenvalues
        .iter()
        .map(|l| l.max(0.0))
        .zip(sd.masses.iter().copied())
        .collect();
    cells.sort_by(|a, b| b.0.total_cmp(&a.0));
    cells
}

/// The generalized singular value function μ(x): the non-increasing
/// rearrangement of the singular values of x, each occupying an interval of
/// length equal to its trace mass. Neighbouring values within a relative
/// tie tolerance of 1e-10 are merged into one cell (mass-weighted value).
pub fn mu(x: &MatrixOperator) -> StepFunction {
    let cells = singular_cells(x);
    let scale = cells.first().map(|c| c.0).unwrap_or(0.0);
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(cells.len());
    for (sigma, mass) in cells {
        match merged.last_mut() {
            Some((s, m)) if (*s - sigma).abs() <= TIE_TOL * scale => {
                let total = *m + mass;
                *s = (*s * *m + sigma * mass) / total;
                *m = total;
            }
            _ => merged.push((sigma, mass)),
        }
    }
    let mut breakpoints = Vec::with_capacity(merged.len());
    let mut values = Vec::with_capacity(merged.len());
    let mut t = 0.0;
    for (sigma, mass) in merged {
        breakpoints.push(t);
        values.push(sigma);
        t += mass;
    }
    StepFunction::new(breakpoints, values).expect("cells form a valid step function")
}

/// λ_s(x) = τ(χ_{(s,∞)}(|x|)): total trace mass of singular values strictly
/// greater than s.
pub fn lambda_dist(x: &MatrixOperator, s: f64) -> Result<f64> {
    if s < 0.0 {
        return Err(Error::InvalidParameter(format!("negative level s = {s}")));
    }
    Ok(singular_cells(x)
        .iter()
        .filter(|(sigma, _)| *sigma > s)
        .map(|(_, m)| m)
        .sum())
}

/// ‖x‖_p = τ(|x|^p)^{1/p} for 0 < p < ∞ (a norm for p ≥ 1, the quasinorm
/// otherwise); the largest singular value for p = ∞.
pub fn lp_norm(x: &MatrixOperator, p: f64) -> Result<f64> {
    if !(p > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "lp_norm requires p > 0, got {p}"
        )));
    }
    let cells = singular_cells(x);
    if p.is_infinite() {
        return Ok(cells.first().map(|c| c.0).unwrap_or(0.0));
    }
    let total: f64 = cells.iter().map(|(s, m)| m * s.powf(p)).sum();
    Ok(total.powf(1.0 / p))
}

/// ‖x‖_{1,∞} = sup_{t>0} t·μ_t(x), evaluated in closed form on the step
/// intervals of μ.
pub fn weak_l1_quasinorm(x: &MatrixOperator) -> f64 {
    mu(x).sup_t_times_value()
}

/// Spectral projection of a self-adjoint operator onto the eigenvalues in
/// the half-open interval (lo, hi]; pass `hi = f64::INFINITY` for χ_{(s,∞)}.
pub fn spectral_projection(x: &MatrixOperator, lo: f64, hi: f64) -> Result<MatrixOperator> {
    let sd = SpectralDecomposition::hermitian(x)?;
    Ok(sd.projection(|l| l > lo && l <= hi))
}

/// Named real functions for the self-adjoint functional calculus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MatrixFunction {
    Exp,
    /// Natural log; requires the spectrum to stay above the relative guard.
    Log,
    /// log⁺(t) = max(log t, 0); vanishes on (−∞, 1].
    LogPlus,
    /// t ↦ t^p. Requires a nonnegative spectrum when p is fractional.
    Power(f64),
    /// t ↦ shift + scale·t.
    ShiftScale { shift: f64, scale: f64 },
}

/// V f(Λ) V* for self-adjoint x.
pub fn apply_function(x: &MatrixOperator, f: MatrixFunction) -> Result<MatrixOperator> {
    let sd = SpectralDecomposition::hermitian(x)?;
    let lambda_max = sd
        .eigenvalues
        .iter()
        .fold(f64::NEG_INFINITY, |m, &l| m.max(l));
    let lambda_min = sd.eigenvalues.iter().fold(f64::INFINITY, |m, &l| m.min(l));
    match f {
        MatrixFunction::Exp => Ok(sd.apply(f64::exp)),
        MatrixFunction::Log => {
            if lambda_max <= 0.0 || lambda_min < SPECTRUM_GUARD * lambda_max {
                return Err(Error::SpectrumNearZero {
                    min: lambda_min,
                    max: lambda_max,
                });
            }
            Ok(sd.apply(f64::ln))
        }
        MatrixFunction::LogPlus => Ok(sd.apply(|l| if l > 1.0 { l.ln() } else { 0.0 })),
        MatrixFunction::Power(p) => {
            if p.fract() == 0.0 && p >= 0.0 {
                Ok(sd.apply(|l| l.powi(p as i32)))
            } else {
                let floor = -TIE_TOL * lambda_max.abs().max(1.0);
                if lambda_min < floor {
                    return Err(Error::InvalidParameter(format!(
                        "fractional power {p} of an operator with negative spectrum ({lambda_min:.3e})"
                    )));
                }
                if p < 0.0 && lambda_min.max(0.0) < SPECTRUM_GUARD * lambda_max.max(0.0) {
                    return Err(Error::SpectrumNearZero {
                        min: lambda_min,
                        max: lambda_max,
                    });
                }
                Ok(sd.apply(|l| l.max(0.0).powf(p)))
            }
        }
        MatrixFunction::ShiftScale { shift, scale } => Ok(sd.apply(|l| shift + scale * l)),
    }
}

/// Largest and smallest singular values.
pub fn singular_extremes(x: &MatrixOperator) -> (f64, f64) {
    let cells = singular_cells(x);
    let max = cells.first().map(|c| c.0).unwrap_or(0.0);
    let min = cells.last().map(|c| c.0).unwrap_or(0.0);
    (max, min)
}

/// Guarded inverse: refuses when σ_min < 1e-13·σ_max. Triangular inputs get
/// exactly triangular inverses (the LU pivot order never swaps).
pub fn inverse(x: &MatrixOperator) -> Result<MatrixOperator> {
    let (smax, smin) = singular_extremes(x);
    if smax == 0.0 || smin < SINGULAR_GUARD * smax {
        return Err(Error::Singular {
            smallest_singular_value: smin,
        });
    }
    let n = x.dim();
    let inv = linalg::lu_inverse(x.entries(), n)?;
    MatrixOperator::new(Arc::clone(x.algebra()), inv)
}

fn diag_phase_normalize(
    r: &mut [Complex64],
    q: &mut [Complex64],
    n: usize,
    r_on_left: bool,
) {
    // Absorb diagonal phases of R into Q so that diag(R) ≥ 0. With R on the
    // left (x = R·Q): R ← R·D*, Q ← D·Q. With R on the right (x = Q·R):
    // R ← D*·R, Q ← Q·D.
    for k in 0..n {
        let d = r[linalg::idx(n, k, k)];
        let mag = d.norm();
        if mag == 0.0 {
            continue;
        }
        let phase = d / mag;
        if r_on_left {
            for i in 0..n {
                let v = r[linalg::idx(n, i, k)] * phase.conj();
                r[linalg::idx(n, i, k)] = v;
            }
            for j in 0..n {
                let v = phase * q[linalg::idx(n, k, j)];
                q[linalg::idx(n, k, j)] = v;
            }
        } else {
            for j in 0..n {
                let v = phase.conj() * r[linalg::idx(n, k, j)];
                r[linalg::idx(n, k, j)] = v;
            }
            for i in 0..n {
                let v = q[linalg::idx(n, i, k)] * phase;
                q[linalg::idx(n, i, k)] = v;
            }
        }
        r[linalg::idx(n, k, k)] = Complex64::new(mag, 0.0);
    }
}

/// RQ factorization x = a·u with a upper triangular (hence block-upper for
/// any partition) with nonnegative real diagonal, and u unitary. Requires x
/// invertible; then a is invertible with upper-triangular inverse and
/// a·a* = x·x*.
pub fn rq_factor(x: &MatrixOperator) -> Result<(MatrixOperator, MatrixOperator)> {
    let (smax, smin) = singular_extremes(x);
    if smax == 0.0 || smin < SINGULAR_GUARD * smax {
        return Err(Error::Singular {
            smallest_singular_value: smin,
        });
    }
    let n = x.dim();
    // x = R·Q via QR of M = J x* J (J the index-reversal permutation):
    // M = Q̂ R̂  ⇒  x = (J R̂* J)(J Q̂* J).
    let mut m = vec![Complex64::ZERO; n * n];
    for i in 0..n {
        for j in 0..n {
            m[linalg::idx(n, i, j)] = x.get(n - 1 - j, n - 1 - i).conj();
        }
    }
    let (qh, rh) = linalg::householder_qr(&m, n);
    let mut a = vec![Complex64::ZERO; n * n];
    let mut u = vec![Complex64::ZERO; n * n];
    for i in 0..n {
        for j in 0..n {
            a[linalg::idx(n, i, j)] = rh[linalg::idx(n, n - 1 - i, n - 1 - j)].conj();
            u[linalg::idx(n, i, j)] = qh[linalg::idx(n, n - 1 - i, n - 1 - j)].conj();
        }
    }
    diag_phase_normalize(&mut a, &mut u, n, true);
    Ok((
        MatrixOperator::new(Arc::clone(x.algebra()), a)?,
        MatrixOperator::new(Arc::clone(x.algebra()), u)?,
    ))
}

/// QL-style companion of [`rq_factor`]: x = u·b with u unitary and b upper
/// triangular with nonnegative real diagonal, so b*·b = x*·x.
pub fn qr_factor(x: &MatrixOperator) -> Result<(MatrixOperator, MatrixOperator)> {
    let (smax, smin) = singular_extremes(x);
    if smax == 0.0 || smin < SINGULAR_GUARD * smax {
        return Err(Error::Singular {
            smallest_singular_value: smin,
        });
    }
    let n = x.dim();
    let (mut q, mut r) = linalg::householder_qr(x.entries(), n);
    diag_phase_normalize(&mut r, &mut q, n, false);
    Ok((
        MatrixOperator::new(Arc::clone(x.algebra()), q)?,
        MatrixOperator::new(Arc::clone(x.algebra()), r)?,
    ))
}

/// Largest violation of the partial-integral comparison: max over α of
/// ∫₀^α dominated − ∫₀^α dominating (positive means submajorization fails
/// at that α). The integrals are piecewise linear, so checking the union of
/// breakpoints plus the right endpoint suffices.
pub fn submajorization_gap(dominating: &StepFunction, dominated: &StepFunction) -> f64 {
    let mut grid: Vec<f64> = dominating
        .breakpoints
        .iter()
        .chain(dominated.breakpoints.iter())
        .copied()
        .collect();
    grid.push(1.0);
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid.iter()
        .map(|&alpha| dominated.partial_integral(alpha) - dominating.partial_integral(alpha))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// dominated ≺≺ dominating: every partial integral of the dominated function
/// stays within `tol` of the dominating one.
pub fn submajorizes(dominating: &StepFunction, dominated: &StepFunction, tol: f64) -> bool {
    submajorization_gap(dominating, dominated) <= tol
}
