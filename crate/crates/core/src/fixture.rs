//! Matrix fixture files: the on-disk interchange format for operators.
//!
//! A fixture is a JSON document with fields `n` (dimension), `weights`
//! (n positive reals summing to 1), `blocks` (block lengths summing to n)
//! and `entries` (row-major array of `[re, im]` pairs). Serialization uses
//! shortest round-trip decimal floats, so write-then-read is exact.

use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{MatrixOperator, TracialAlgebra};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixFixture {
    pub n: usize,
    pub weights: Vec<f64>,
    pub blocks: Vec<usize>,
    pub entries: Vec<[f64; 2]>,
}

impl MatrixFixture {
    pub fn from_operator(op: &MatrixOperator) -> Self {
        let alg = op.algebra();
        Self {
            n: alg.dim(),
            weights: alg.weights().to_vec(),
            blocks: alg.block_lengths().to_vec(),
            entries: op.entries().iter().map(|z| [z.re, z.im]).collect(),
        }
    }

    pub fn to_operator(&self) -> Result<MatrixOperator> {
        if self.weights.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: self.weights.len(),
            });
        }
        let alg = TracialAlgebra::new(self.weights.clone(), self.blocks.clone())?;
        let entries = self
            .entries
            .iter()
            .map(|[re, im]| Complex64::new(*re, *im))
            .collect();
        MatrixOperator::new(Arc::clone(&alg), entries)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_is_exact() {
        let alg = TracialAlgebra::new(vec![0.125, 0.375, 0.5], vec![2, 1]).unwrap();
        let op = MatrixOperator::from_fn(&alg, |i, j| {
            Complex64::new(
                (i as f64 + 0.1) / 3.0 + 1e-17,
                -(j as f64) * std::f64::consts::PI,
            )
        });
        let fx = MatrixFixture::from_operator(&op);
        let text = serde_json::to_string(&fx).unwrap();
        let back: MatrixFixture = serde_json::from_str(&text).unwrap();
        let op2 = back.to_operator().unwrap();
        assert_eq!(op.entries(), op2.entries());
        assert_eq!(op.algebra().weights(), op2.algebra().weights());
    }

    #[test]
    fn rejects_inconsistent_fields() {
        let fx = MatrixFixture {
            n: 2,
            weights: vec![0.5, 0.5],
            blocks: vec![1, 1],
            entries: vec![[1.0, 0.0]; 3],
        };
        assert!(fx.to_operator().is_err());
        let fx = MatrixFixture {
            n: 3,
            weights: vec![0.5, 0.5],
            blocks: vec![2],
            entries: vec![[0.0, 0.0]; 9],
        };
        assert!(fx.to_operator().is_err());
    }
}
