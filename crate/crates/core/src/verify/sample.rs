//! Seeded random ensembles: algebras (weights and block partitions) and the
//! operator kinds used across the suites. Everything is a pure function of
//! the generator state.

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::algebra::{MatrixOperator, TracialAlgebra};
use crate::spectral::singular_extremes;
use crate::verify::{BlockSpec, WeightSpec};

/// Operator ensembles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    /// I.i.d. standard complex Gaussian entries (E|z|² = 1).
    Ginibre,
    /// Symmetrized Ginibre.
    SelfAdjoint,
    /// g*g for Ginibre g.
    Positive,
    /// Block-upper pattern with each diagonal block shifted so its smallest
    /// singular value is at least 0.5.
    BlockUpperInvertible,
    /// Strict block-upper masked Ginibre.
    AnalyticZero,
}

fn gaussian_complex(rng: &mut impl Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Sample trace weights for dimension `n`.
pub fn sample_weights(spec: WeightSpec, n: usize, rng: &mut impl Rng) -> Vec<f64> {
    match spec {
        WeightSpec::Uniform => vec![1.0 / n as f64; n],
        WeightSpec::Dirichlet => {
            // Dirichlet(1,…,1) via normalized Exp(1) variables.
            let raw: Vec<f64> = (0..n)
                .map(|_| -(1.0 - rng.random::<f64>()).ln())
                .collect();
            let total: f64 = raw.iter().sum();
            raw.iter().map(|e| e / total).collect()
        }
    }
}

/// Sample block lengths for dimension `n`. The random generator keeps at
/// least two blocks whenever n ≥ 2 so that the strict part of H∞ is
/// non-empty.
pub fn sample_blocks(spec: &BlockSpec, n: usize, rng: &mut impl Rng) -> Vec<usize> {
    match spec {
        BlockSpec::Singletons => vec![1; n],
        BlockSpec::Fixed(sizes) => sizes.clone(),
        BlockSpec::Random => {
            if n == 1 {
                return vec![1];
            }
            // Cut each of the n−1 interior boundaries with probability 1/2,
            // forcing at least one cut.
            let mut cuts: Vec<usize> = (1..n).filter(|_| rng.random::<bool>()).collect();
            if cuts.is_empty() {
                cuts.push(rng.random_range(1..n));
            }
            let mut lengths = Vec::with_capacity(cuts.len() + 1);
            let mut prev = 0;
            for c in cuts {
                lengths.push(c - prev);
                prev = c;
            }
            lengths.push(n - prev);
            lengths
        }
    }
}

/// Sample a whole algebra.
pub fn sample_algebra(
    dim: usize,
    blocks: &BlockSpec,
    weights: WeightSpec,
    rng: &mut impl Rng,
) -> Arc<TracialAlgebra> {
    let block_lengths = sample_blocks(blocks, dim, rng);
    let w = sample_weights(weights, dim, rng);
    TracialAlgebra::new(w, block_lengths).expect("sampled parameters are valid")
}

/// Draw one operator of the requested kind. Deterministic given the
/// generator state.
pub fn sample_operator(
    algebra: &Arc<TracialAlgebra>,
    kind: OperatorKind,
    rng: &mut impl Rng,
) -> MatrixOperator {
    match kind {
        OperatorKind::Ginibre => {
            MatrixOperator::from_fn(algebra, |_, _| gaussian_complex(rng))
        }
        OperatorKind::SelfAdjoint => {
            let g = sample_operator(algebra, OperatorKind::Ginibre, rng);
            (&g + &g.adjoint()).scale(Complex64::new(0.5, 0.0))
        }
        OperatorKind::Positive => {
            let g = sample_operator(algebra, OperatorKind::Ginibre, rng);
            &g.adjoint() * &g
        }
        OperatorKind::BlockUpperInvertible => {
            let mut m = MatrixOperator::from_fn(algebra, |i, j| {
                if algebra.block_of(i) <= algebra.block_of(j) {
                    gaussian_complex(rng)
                } else {
                    Complex64::ZERO
                }
            });
            // Shift each diagonal block B by (0.5 + σ_max(B))·I, which
            // guarantees σ_min(B + sI) ≥ s − σ_max(B) = 0.5.
            for b in 0..algebra.block_count() {
                let start = algebra.block_start(b);
                let len = algebra.block_lengths()[b];
                let sub = TracialAlgebra::uniform(len, vec![1; len])
                    .expect("singleton algebra is valid");
                let block = MatrixOperator::from_fn(&sub, |r, c| m.get(start + r, start + c));
                let (smax, _) = singular_extremes(&block);
                let shift = Complex64::new(0.5 + smax, 0.0);
                for r in 0..len {
                    let v = m.get(start + r, start + r) + shift;
                    m.set(start + r, start + r, v);
                }
            }
            m
        }
        OperatorKind::AnalyticZero => MatrixOperator::from_fn(algebra, |i, j| {
            if algebra.block_of(i) < algebra.block_of(j) {
                gaussian_complex(rng)
            } else {
                Complex64::ZERO
            }
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{inverse, SpectralDecomposition};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn positive_kind_is_positive() {
        let alg = TracialAlgebra::uniform_singletons(5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = sample_operator(&alg, OperatorKind::Positive, &mut rng);
        let sd = SpectralDecomposition::hermitian(&u).unwrap();
        let min = sd.eigenvalues().iter().fold(f64::INFINITY, |m, &l| m.min(l));
        assert!(min >= -1e-12);
    }

    #[test]
    fn block_upper_invertible_kind() {
        let alg = TracialAlgebra::uniform(6, vec![2, 3, 1]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let a = sample_operator(&alg, OperatorKind::BlockUpperInvertible, &mut rng);
        assert!(a.is_analytic());
        assert!(inverse(&a).is_ok());
    }

    #[test]
    fn sampling_is_deterministic() {
        let alg = TracialAlgebra::uniform_singletons(4).unwrap();
        let mut r1 = ChaCha8Rng::seed_from_u64(42);
        let mut r2 = ChaCha8Rng::seed_from_u64(42);
        let a = sample_operator(&alg, OperatorKind::Ginibre, &mut r1);
        let b = sample_operator(&alg, OperatorKind::Ginibre, &mut r2);
        assert_eq!(a.entries(), b.entries());
    }

    #[test]
    fn random_blocks_have_strict_part() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for n in 2..10 {
            for _ in 0..50 {
                let lengths = sample_blocks(&BlockSpec::Random, n, &mut rng);
                assert!(lengths.len() >= 2, "n={n} lengths={lengths:?}");
                assert_eq!(lengths.iter().sum::<usize>(), n);
            }
        }
        assert_eq!(sample_blocks(&BlockSpec::Random, 1, &mut rng), vec![1]);
    }

    #[test]
    fn dirichlet_weights_normalized() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w = sample_weights(WeightSpec::Dirichlet, 8, &mut rng);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(w.iter().all(|&x| x > 0.0));
    }
}
