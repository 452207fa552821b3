//! The finite tracial matrix algebra (M, τ) together with the subdiagonal
//! algebra H∞ of block-upper-triangular matrices, the diagonal D of
//! block-diagonal matrices, and the expectation Φ (the block mask).
//!
//! A [`TracialAlgebra`] fixes a dimension `n`, a vector of positive trace
//! weights summing to one, and an ordered partition of `{0..n}` into
//! contiguous blocks. Every [`MatrixOperator`] is a dense complex `n×n`
//! matrix bound to its algebra.
//!
//! The weighted functional τ(x) = Σᵢ wᵢ·xᵢᵢ is a faithful normal state for
//! any weight vector and is tracial (τ(xy) = τ(yx) on all of M) exactly when
//! the weights are uniform. The L²-geometry (orthogonal decomposition,
//! conjugation contraction) holds for arbitrary weights; trace-identity
//! suites are exercised under uniform weights.

use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Tolerance scale for entrywise zero-pattern tests: an entry counts as zero
/// when |entry| ≤ `ZERO_PATTERN_TOL` · max|entries|.
pub const ZERO_PATTERN_TOL: f64 = 1e-12;

const WEIGHT_SUM_TOL: f64 = 1e-12;

/// Position of a matrix entry relative to the block partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockRegion {
    /// Row and column indices share a block (the diagonal D).
    Diagonal,
    /// Row block strictly precedes column block (strict part of H∞).
    StrictUpper,
    /// Row block strictly follows column block (strict part of (H∞)*).
    StrictLower,
}

/// A finite tracial matrix algebra: dimension, trace weights and the block
/// partition defining H∞, D and Φ.
#[derive(Debug, Clone, PartialEq)]
pub struct TracialAlgebra {
    n: usize,
    weights: Vec<f64>,
    block_lengths: Vec<usize>,
    block_of: Vec<usize>,
    block_starts: Vec<usize>,
}

impl TracialAlgebra {
    /// Build an algebra from trace weights and block lengths.
    ///
    /// Weights must be positive and sum to 1 within 1e-12; block lengths must
    /// be positive and sum to the dimension.
    pub fn new(weights: Vec<f64>, block_lengths: Vec<usize>) -> Result<Arc<Self>> {
        let n = weights.len();
        if n == 0 {
            return Err(Error::InvalidWeights("empty weight vector".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0)) {
            return Err(Error::InvalidWeights(format!("non-positive weight {w}")));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidWeights(format!(
                "weights sum to {sum}, expected 1 within {WEIGHT_SUM_TOL:e}"
            )));
        }
        if block_lengths.is_empty() || block_lengths.iter().any(|&l| l == 0) {
            return Err(Error::InvalidBlocks("block lengths must be positive".into()));
        }
        if block_lengths.iter().sum::<usize>() != n {
            return Err(Error::InvalidBlocks(format!(
                "block lengths sum to {}, expected {n}",
                block_lengths.iter().sum::<usize>()
            )));
        }
        let mut block_of = Vec::with_capacity(n);
        let mut block_starts = Vec::with_capacity(block_lengths.len());
        let mut start = 0usize;
        for (b, &len) in block_lengths.iter().enumerate() {
            block_starts.push(start);
            for _ in 0..len {
                block_of.push(b);
            }
            start += len;
        }
        Ok(Arc::new(Self {
            n,
            weights,
            block_lengths,
            block_of,
            block_starts,
        }))
    }

    /// Uniform trace (1/n each) over the given block lengths.
    pub fn uniform(n: usize, block_lengths: Vec<usize>) -> Result<Arc<Self>> {
        Self::new(vec![1.0 / n as f64; n], block_lengths)
    }

    /// Uniform trace with all-singleton blocks: D = diagonal matrices,
    /// H∞ = upper-triangular matrices.
    pub fn uniform_singletons(n: usize) -> Result<Arc<Self>> {
        Self::uniform(n, vec![1; n])
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn block_lengths(&self) -> &[usize] {
        &self.block_lengths
    }

    pub fn block_count(&self) -> usize {
        self.block_lengths.len()
    }

    /// Index of the block containing row/column `i`.
    pub fn block_of(&self, i: usize) -> usize {
        self.block_of[i]
    }

    /// Start offset of block `b`.
    pub fn block_start(&self, b: usize) -> usize {
        self.block_starts[b]
    }

    pub fn region(&self, i: usize, j: usize) -> BlockRegion {
        match self.block_of[i].cmp(&self.block_of[j]) {
            std::cmp::Ordering::Equal => BlockRegion::Diagonal,
            std::cmp::Ordering::Less => BlockRegion::StrictUpper,
            std::cmp::Ordering::Greater => BlockRegion::StrictLower,
        }
    }

    /// True when all weights are equal, i.e. τ is a genuine trace on M.
    pub fn has_uniform_weights(&self) -> bool {
        let w0 = 1.0 / self.n as f64;
        self.weights.iter().all(|w| (w - w0).abs() <= WEIGHT_SUM_TOL)
    }

    /// True when the strict block-upper region is non-empty (more than one
    /// block), so the conjugation operator is nonzero.
    pub fn has_strict_part(&self) -> bool {
        self.block_lengths.len() > 1
    }

    /// Coordinates (row, col) of the strict block-upper region, row-major.
    pub fn strict_upper_coordinates(&self) -> Vec<(usize, usize)> {
        let mut coords = Vec::new();
        for i in 0..self.n {
            for j in 0..self.n {
                if self.region(i, j) == BlockRegion::StrictUpper {
                    coords.push((i, j));
                }
            }
        }
        coords
    }
}

/// A dense complex matrix bound to its owning [`TracialAlgebra`].
#[derive(Debug, Clone)]
pub struct MatrixOperator {
    algebra: Arc<TracialAlgebra>,
    entries: Vec<Complex64>,
}

impl MatrixOperator {
    /// Wrap row-major entries; the grid must be square and match the algebra
    /// dimension.
    pub fn new(algebra: Arc<TracialAlgebra>, entries: Vec<Complex64>) -> Result<Self> {
        let n = algebra.dim();
        if entries.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: entries.len(),
            });
        }
        Ok(Self { algebra, entries })
    }

    pub fn zero(algebra: &Arc<TracialAlgebra>) -> Self {
        let n = algebra.dim();
        Self {
            algebra: Arc::clone(algebra),
            entries: vec![Complex64::ZERO; n * n],
        }
    }

    pub fn identity(algebra: &Arc<TracialAlgebra>) -> Self {
        let mut m = Self::zero(algebra);
        for i in 0..algebra.dim() {
            m.set(i, i, Complex64::ONE);
        }
        m
    }

    pub fn diagonal(algebra: &Arc<TracialAlgebra>, diag: &[Complex64]) -> Result<Self> {
        if diag.len() != algebra.dim() {
            return Err(Error::DimensionMismatch {
                expected: algebra.dim(),
                got: diag.len(),
            });
        }
        let mut m = Self::zero(algebra);
        for (i, &d) in diag.iter().enumerate() {
            m.set(i, i, d);
        }
        Ok(m)
    }

    pub fn from_fn(
        algebra: &Arc<TracialAlgebra>,
        mut f: impl FnMut(usize, usize) -> Complex64,
    ) -> Self {
        let n = algebra.dim();
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                entries.push(f(i, j));
            }
        }
        Self {
            algebra: Arc::clone(algebra),
            entries,
        }
    }

    /// Build from real row-major data (imaginary parts zero).
    pub fn from_real(algebra: &Arc<TracialAlgebra>, data: &[f64]) -> Result<Self> {
        let entries = data.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Self::new(Arc::clone(algebra), entries)
    }

    pub fn algebra(&self) -> &Arc<TracialAlgebra> {
        &self.algebra
    }

    pub fn dim(&self) -> usize {
        self.algebra.dim()
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.entries[i * self.algebra.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        let n = self.algebra.n;
        self.entries[i * n + j] = v;
    }

    fn assert_same_algebra(&self, other: &Self) {
        assert!(
            self.algebra.as_ref() == other.algebra.as_ref(),
            "operands belong to different algebras"
        );
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(&self.algebra, |i, j| self.get(j, i).conj())
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            algebra: Arc::clone(&self.algebra),
            entries: self.entries.iter().map(|&e| c * e).collect(),
        }
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|e| e.norm()).fold(0.0, f64::max)
    }

    /// Weighted trace τ(x) = Σᵢ wᵢ·xᵢᵢ.
    pub fn trace(&self) -> Complex64 {
        let mut acc = Complex64::ZERO;
        for i in 0..self.dim() {
            acc += self.algebra.weights[i] * self.get(i, i);
        }
        acc
    }

    /// The expectation Φ: keep entries whose row and column share a block,
    /// zero the rest. Φ∘Φ = Φ, τ∘Φ = τ, Φ(x*) = Φ(x)*.
    pub fn expectation(&self) -> Self {
        Self::from_fn(&self.algebra, |i, j| {
            if self.algebra.region(i, j) == BlockRegion::Diagonal {
                self.get(i, j)
            } else {
                Complex64::ZERO
            }
        })
    }

    /// Unique decomposition a = a₁ + a₂* + d with a₁, a₂ strictly
    /// block-upper and d block-diagonal. Returns (a₁, a₂, d).
    pub fn decompose(&self) -> (Self, Self, Self) {
        let alg = &self.algebra;
        let a1 = Self::from_fn(alg, |i, j| {
            if alg.region(i, j) == BlockRegion::StrictUpper {
                self.get(i, j)
            } else {
                Complex64::ZERO
            }
        });
        // a₂* is the strict lower part, so a₂ = (strict lower part)*.
        let a2 = Self::from_fn(alg, |i, j| {
            if alg.region(j, i) == BlockRegion::StrictLower {
                self.get(j, i).conj()
            } else {
                Complex64::ZERO
            }
        });
        let d = self.expectation();
        (a1, a2, d)
    }

    fn pattern_is_zero_outside(&self, keep: impl Fn(BlockRegion) -> bool) -> bool {
        let tol = ZERO_PATTERN_TOL * self.max_abs();
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                if !keep(self.algebra.region(i, j)) && self.get(i, j).norm() > tol {
                    return false;
                }
            }
        }
        true
    }

    /// Membership in H∞ (block-upper-triangular), up to the pattern tolerance.
    pub fn is_analytic(&self) -> bool {
        self.pattern_is_zero_outside(|r| r != BlockRegion::StrictLower)
    }

    /// Membership in H∞₀ = {x ∈ H∞ : Φ(x) = 0} (strictly block-upper).
    pub fn is_analytic_zero(&self) -> bool {
        let nonzero = self.max_abs() > 0.0;
        nonzero && self.pattern_is_zero_outside(|r| r == BlockRegion::StrictUpper)
    }

    /// Membership in D (block-diagonal).
    pub fn is_diagonal(&self) -> bool {
        self.pattern_is_zero_outside(|r| r == BlockRegion::Diagonal)
    }

    /// True when ‖x − x*‖_max ≤ tol·max(1, ‖x‖_max).
    pub fn is_self_adjoint(&self, tol: f64) -> bool {
        self.self_adjoint_deviation() <= tol * self.max_abs().max(1.0)
    }

    /// Largest entry of |x − x*|.
    pub fn self_adjoint_deviation(&self) -> f64 {
        let mut dev: f64 = 0.0;
        for i in 0..self.dim() {
            for j in i..self.dim() {
                dev = dev.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        dev
    }

    /// The weighted Hilbert–Schmidt pairing ⟨x, y⟩ = τ(y*x); linear in `self`,
    /// conjugate-linear in `other`.
    pub fn inner_product(&self, other: &Self) -> Complex64 {
        self.assert_same_algebra(other);
        let n = self.dim();
        let w = &self.algebra.weights;
        let mut acc = Complex64::ZERO;
        // τ(y*x) = Σ_{i,j} w_j · conj(y_ij) · x_ij  (column weight).
        for i in 0..n {
            for j in 0..n {
                acc += w[j] * other.get(i, j).conj() * self.get(i, j);
            }
        }
        acc
    }

    /// ‖x‖₂ = τ(x*x)^{1/2}, evaluated directly from the entries.
    pub fn norm_l2(&self) -> f64 {
        let n = self.dim();
        let w = &self.algebra.weights;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += w[j] * self.get(i, j).norm_sqr();
            }
        }
        acc.sqrt()
    }

    /// Entrywise comparison: max |self − other| ≤ tol.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.assert_same_algebra(other);
        self.entries
            .iter()
            .zip(other.entries.iter())
            .all(|(a, b)| (a - b).norm() <= tol)
    }

    /// Largest entry of |self − other|.
    pub fn max_diff(&self, other: &Self) -> f64 {
        self.assert_same_algebra(other);
        self.entries
            .iter()
            .zip(other.entries.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl Add for &MatrixOperator {
    type Output = MatrixOperator;
    fn add(self, rhs: &MatrixOperator) -> MatrixOperator {
        self.assert_same_algebra(rhs);
        MatrixOperator {
            algebra: Arc::clone(&self.algebra),
            entries: self
                .entries
                .iter()
                .zip(rhs.entries.iter())
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &MatrixOperator {
    type Output = MatrixOperator;
    fn sub(self, rhs: &MatrixOperator) -> MatrixOperator {
        self.assert_same_algebra(rhs);
        MatrixOperator {
            algebra: Arc::clone(&self.algebra),
            entries: self
                .entries
                .iter()
                .zip(rhs.entries.iter())
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Neg for &MatrixOperator {
    type Output = MatrixOperator;
    fn neg(self) -> MatrixOperator {
        self.scale(-Complex64::ONE)
    }
}

impl Mul for &MatrixOperator {
    type Output = MatrixOperator;
    fn mul(self, rhs: &MatrixOperator) -> MatrixOperator {
        self.assert_same_algebra(rhs);
        let n = self.dim();
        let mut entries = vec![Complex64::ZERO; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.entries[i * n + k];
                if a == Complex64::ZERO {
                    continue;
                }
                for j in 0..n {
                    entries[i * n + j] += a * rhs.entries[k * n + j];
                }
            }
        }
        MatrixOperator {
            algebra: Arc::clone(&self.algebra),
            entries,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn op(alg: &Arc<TracialAlgebra>, rows: &[&[f64]]) -> MatrixOperator {
        let data: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        MatrixOperator::from_real(alg, &data).unwrap()
    }

    #[test]
    fn rejects_bad_weights_and_blocks() {
        assert!(TracialAlgebra::new(vec![0.5, 0.6], vec![2]).is_err());
        assert!(TracialAlgebra::new(vec![1.0, 0.0], vec![2]).is_err());
        assert!(TracialAlgebra::new(vec![0.5, 0.5], vec![1]).is_err());
        assert!(TracialAlgebra::new(vec![0.5, 0.5], vec![1, 1, 1]).is_err());
        assert!(TracialAlgebra::new(vec![], vec![]).is_err());
    }

    #[test]
    fn trace_of_identity_is_one() {
        let alg = TracialAlgebra::new(vec![0.25, 0.75], vec![1, 1]).unwrap();
        let id = MatrixOperator::identity(&alg);
        assert!((id.trace() - Complex64::ONE).norm() < 1e-15);
    }

    #[test]
    fn trace_hand_values() {
        let alg = TracialAlgebra::uniform_singletons(2).unwrap();
        let x = op(&alg, &[&[2.0, 0.0], &[0.0, 4.0]]);
        assert!((x.trace() - c(3.0, 0.0)).norm() < 1e-15);

        let alg = TracialAlgebra::new(vec![0.25, 0.75], vec![1, 1]).unwrap();
        let x = op(&alg, &[&[4.0, 9.0], &[7.0, 0.0]]);
        assert!((x.trace() - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn expectation_is_block_mask() {
        // Singleton blocks: Φ = diagonal part.
        let alg = TracialAlgebra::uniform_singletons(2).unwrap();
        let x = op(&alg, &[&[1.0, 2.0], &[3.0, 4.0]]);
        let p = x.expectation();
        assert!(p.is_diagonal());
        assert!((p.get(0, 0) - c(1.0, 0.0)).norm() < 1e-15);
        assert!((p.get(1, 1) - c(4.0, 0.0)).norm() < 1e-15);

        // Blocks {1,2},{3}: ones matrix keeps the 2×2 corner and (3,3).
        let alg = TracialAlgebra::uniform(3, vec![2, 1]).unwrap();
        let ones = MatrixOperator::from_fn(&alg, |_, _| Complex64::ONE);
        let p = ones.expectation();
        for (i, j, want) in [
            (0, 0, 1.0),
            (0, 1, 1.0),
            (1, 0, 1.0),
            (1, 1, 1.0),
            (2, 2, 1.0),
            (0, 2, 0.0),
            (2, 0, 0.0),
            (1, 2, 0.0),
            (2, 1, 0.0),
        ] {
            assert!((p.get(i, j) - c(want, 0.0)).norm() < 1e-15, "({i},{j})");
        }

        // Φ fixes block-diagonal operators and is idempotent.
        let d = ones.expectation();
        assert_eq!(d.expectation().entries(), d.entries());
    }

    #[test]
    fn expectation_preserves_trace_and_adjoint() {
        let alg = TracialAlgebra::new(vec![0.2, 0.3, 0.5], vec![2, 1]).unwrap();
        let x = MatrixOperator::from_fn(&alg, |i, j| c((i + 2 * j) as f64, (i as f64) - 1.0));
        assert!((x.expectation().trace() - x.trace()).norm() < 1e-14);
        assert!(x
            .adjoint()
            .expectation()
            .approx_eq(&x.expectation().adjoint(), 1e-15));
    }

    #[test]
    fn decompose_hand_example() {
        let alg = TracialAlgebra::uniform_singletons(2).unwrap();
        let a = op(&alg, &[&[1.0, 2.0], &[3.0, 4.0]]);
        let (a1, a2, d) = a.decompose();
        assert!((a1.get(0, 1) - c(2.0, 0.0)).norm() < 1e-15);
        assert!(a1.is_analytic_zero());
        assert!((a2.get(0, 1) - c(3.0, 0.0)).norm() < 1e-15);
        assert!(a2.is_analytic_zero());
        assert!(d.is_diagonal());
        // Exact reconstruction.
        let rebuilt = &(&a1 + &a2.adjoint()) + &d;
        assert_eq!(rebuilt.entries(), a.entries());
    }

    #[test]
    fn decompose_trivial_cases() {
        let alg = TracialAlgebra::uniform(4, vec![2, 2]).unwrap();
        let d0 = MatrixOperator::from_fn(&alg, |i, j| {
            if alg.region(i, j) == BlockRegion::Diagonal {
                c(1.0 + i as f64, j as f64)
            } else {
                Complex64::ZERO
            }
        });
        let (a1, a2, d) = d0.decompose();
        assert_eq!(a1.max_abs(), 0.0);
        assert_eq!(a2.max_abs(), 0.0);
        assert_eq!(d.entries(), d0.entries());

        let u0 = MatrixOperator::from_fn(&alg, |i, j| {
            if alg.region(i, j) == BlockRegion::StrictUpper {
                c(1.0, -2.0)
            } else {
                Complex64::ZERO
            }
        });
        let (a1, a2, d) = u0.decompose();
        assert_eq!(a1.entries(), u0.entries());
        assert_eq!(a2.max_abs(), 0.0);
        assert_eq!(d.max_abs(), 0.0);
    }

    #[test]
    fn membership_predicates() {
        let alg = TracialAlgebra::uniform_singletons(3).unwrap();
        let id = MatrixOperator::identity(&alg);
        assert!(id.is_analytic());
        assert!(id.is_diagonal());
        assert!(!id.is_analytic_zero());

        let mut u = MatrixOperator::zero(&alg);
        u.set(0, 2, c(1.0, 1.0));
        assert!(u.is_analytic_zero());
        assert!(u.is_analytic());
        assert!(!u.is_diagonal());

        let mut l = MatrixOperator::zero(&alg);
        l.set(2, 0, c(0.5, 0.0));
        assert!(!l.is_analytic());
    }

    #[test]
    fn inner_product_orthogonality() {
        let alg = TracialAlgebra::new(vec![0.1, 0.4, 0.5], vec![1, 2]).unwrap();
        let id = MatrixOperator::identity(&alg);
        assert!((id.inner_product(&id) - Complex64::ONE).norm() < 1e-15);

        let mut upper = MatrixOperator::zero(&alg);
        upper.set(0, 1, c(2.0, -1.0));
        upper.set(0, 2, c(1.0, 3.0));
        let diag = MatrixOperator::from_fn(&alg, |i, j| {
            if alg.region(i, j) == BlockRegion::Diagonal {
                c(1.0, 1.0)
            } else {
                Complex64::ZERO
            }
        });
        assert_eq!(upper.inner_product(&diag), Complex64::ZERO);

        let mut lower_adj = MatrixOperator::zero(&alg);
        lower_adj.set(1, 0, c(4.0, 2.0));
        assert_eq!(upper.inner_product(&lower_adj.adjoint()), Complex64::ZERO);
    }

    #[test]
    fn weighted_trace_is_not_unitarily_invariant() {
        // Weights must actually enter τ: conjugating by a permutation changes
        // the trace when the weights differ.
        let alg = TracialAlgebra::new(vec![0.25, 0.75], vec![1, 1]).unwrap();
        let x = op(&alg, &[&[1.0, 0.0], &[0.0, 2.0]]);
        let swap = op(&alg, &[&[0.0, 1.0], &[1.0, 0.0]]);
        let conj = &(&swap * &x) * &swap;
        assert!((x.trace().re - 1.75).abs() < 1e-15);
        assert!((conj.trace().re - 1.25).abs() < 1e-15);
    }

    #[test]
    #[should_panic(expected = "different algebras")]
    fn cross_algebra_arithmetic_panics() {
        let a = TracialAlgebra::uniform_singletons(2).unwrap();
        let b = TracialAlgebra::uniform(2, vec![2]).unwrap();
        let x = MatrixOperator::identity(&a);
        let y = MatrixOperator::identity(&b);
        let _ = &x + &y;
    }

    #[test]
    fn dimension_mismatch_on_construction() {
        let alg = TracialAlgebra::uniform_singletons(2).unwrap();
        assert!(matches!(
            MatrixOperator::new(Arc::clone(&alg), vec![Complex64::ZERO; 3]),
            Err(Error::DimensionMismatch { expected: 4, got: 3 })
        ));
    }
}
