//! Randomized verification harness: seeded operator ensembles, one suite
//! per inequality family, and machine-readable reports.
//!
//! Trials are independent tasks keyed by (suite, trial index); each derives
//! its own generator seed from the master seed, so parallel and serial runs
//! produce identical reports. Suites never abort on the first violation —
//! they collect everything and fail at the end.

pub mod checks;
pub mod sample;
mod suites;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixture::MatrixFixture;

pub use suites::{
    run_conjugation_core_suite, run_corollary1_suite, run_holder_suite, run_jensen_trace_suite,
    run_lemma3_suite, run_lemma4_suite, run_loglogplus_metric, run_regularization_suite,
    run_submajorization_suite, run_weak_type_suite,
};

/// Block partition generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlockSpec {
    /// All blocks of size one.
    Singletons,
    /// Fixed block lengths (must sum to each sampled dimension).
    Fixed(Vec<usize>),
    /// Random composition; always at least two blocks when n ≥ 2, so the
    /// strict part of H∞ is non-empty.
    Random,
}

/// Trace weight generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightSpec {
    /// wᵢ = 1/n: τ is a genuine trace on all of M. The default; required by
    /// the suites that rest on traciality (Hölder, the lemma suites, the
    /// weak-type and even-p bounds).
    Uniform,
    /// Dirichlet(1,…,1) weights: τ is a faithful state but not a trace;
    /// sound for the L²-geometry suites.
    Dirichlet,
}

/// Log-spaced grid of levels s for the weak-type suite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SGrid {
    pub count: usize,
    pub log10_min: f64,
    pub log10_max: f64,
}

impl SGrid {
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![10f64.powf(self.log10_min)];
        }
        (0..self.count)
            .map(|i| {
                let t = i as f64 / (self.count - 1) as f64;
                10f64.powf(self.log10_min + t * (self.log10_max - self.log10_min))
            })
            .collect()
    }
}

impl Default for SGrid {
    fn default() -> Self {
        Self {
            count: 50,
            log10_min: -2.0,
            log10_max: 2.0,
        }
    }
}

/// Configuration shared by every suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub dims: Vec<usize>,
    pub blocks: BlockSpec,
    pub weights: WeightSpec,
    pub trials: usize,
    pub seed: u64,
    /// Additive slack granted to each inequality, scaled by the dominating
    /// side's magnitude.
    pub tolerance: f64,
    pub s_grid: SGrid,
}

impl Default for TrialConfig {
    fn default() -> Self {
        Self {
            dims: vec![2, 4, 8],
            blocks: BlockSpec::Random,
            weights: WeightSpec::Uniform,
            trials: 200,
            seed: 1,
            tolerance: 1e-9,
            s_grid: SGrid::default(),
        }
    }
}

impl TrialConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        if self.tolerance < 0.0 {
            return Err(Error::InvalidParameter(
                "tolerance must be nonnegative".into(),
            ));
        }
        if self.dims.is_empty() || self.dims.iter().any(|&d| d < 1) {
            return Err(Error::InvalidParameter(
                "dims must be nonempty with every dimension at least 1".into(),
            ));
        }
        if let BlockSpec::Fixed(sizes) = &self.blocks {
            for &d in &self.dims {
                if sizes.iter().sum::<usize>() != d {
                    return Err(Error::InvalidParameter(format!(
                        "fixed block lengths sum to {}, but dimension {d} was requested",
                        sizes.iter().sum::<usize>()
                    )));
                }
            }
        }
        if self.s_grid.count < 1 || self.s_grid.log10_min >= self.s_grid.log10_max {
            return Err(Error::InvalidParameter("invalid s-grid".into()));
        }
        Ok(())
    }

    /// Dimension used by a given trial (cycles through `dims`).
    pub fn dim_for_trial(&self, trial: usize) -> usize {
        self.dims[trial % self.dims.len()]
    }
}

/// One recorded inequality violation, with enough data to replay it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub trial: usize,
    /// Derived per-trial generator seed.
    pub seed: u64,
    pub dim: usize,
    /// Identifier of the violated check, e.g. "holder.m3".
    pub check: String,
    /// Violated amount: lhs − (rhs + slack granted) at recording time was
    /// positive; `slack` stores lhs − rhs.
    pub slack: f64,
    /// Scalar parameters of the check (levels s, exponents p, ε, …).
    pub params: BTreeMap<String, f64>,
    /// Serialized operators, in the order the check expects.
    pub witnesses: Vec<MatrixFixture>,
}

/// Histogram of recorded gaps (used by the Jensen explorer).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapHistogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
}

impl GapHistogram {
    pub fn build(gaps: &[f64], bins: usize) -> Option<Self> {
        if gaps.is_empty() || bins == 0 {
            return None;
        }
        let lo = gaps.iter().fold(f64::INFINITY, |m, &g| m.min(g));
        let hi = gaps.iter().fold(f64::NEG_INFINITY, |m, &g| m.max(g));
        let mut counts = vec![0u64; bins];
        if hi > lo {
            for &g in gaps {
                let mut b = ((g - lo) / (hi - lo) * bins as f64) as usize;
                if b >= bins {
                    b = bins - 1;
                }
                counts[b] += 1;
            }
        } else {
            counts[0] = gaps.len() as u64;
        }
        Some(Self { lo, hi, counts })
    }
}

/// Per-suite result: violations, empirical constants and the pass flag
/// (true exactly when no violations were recorded).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub schema: u32,
    pub name: String,
    pub config: TrialConfig,
    pub trials: usize,
    pub violations: Vec<Violation>,
    pub constants: BTreeMap<String, f64>,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub witness: Option<MatrixFixture>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub histogram: Option<GapHistogram>,
}

impl VerificationReport {
    pub(crate) fn assemble(
        name: &str,
        config: &TrialConfig,
        violations: Vec<Violation>,
        constants: BTreeMap<String, f64>,
    ) -> Self {
        Self {
            schema: 1,
            name: name.to_string(),
            config: config.clone(),
            trials: config.trials,
            pass: violations.is_empty(),
            violations,
            constants,
            witness: None,
            histogram: None,
        }
    }
}

/// Seed for trial `trial` of suite `suite` under `master`: a splitmix-style
/// mix of the master seed, the FNV-1a hash of the suite name, and the trial
/// index. Stable across platforms and executions.
pub fn derive_trial_seed(master: u64, suite: &str, trial: usize) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in suite.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    mix(master ^ mix(h ^ mix(trial as u64)))
}

/// All suite names accepted by [`run_suite`], in canonical order.
pub const SUITE_NAMES: [&str; 10] = [
    "conjugation-core",
    "weak-type",
    "holder",
    "lemma3",
    "lemma4",
    "jensen-trace",
    "regularization",
    "submajorization",
    "loglogplus",
    "corollary1",
];

/// Run one suite by name.
pub fn run_suite(name: &str, cfg: &TrialConfig) -> Result<VerificationReport> {
    cfg.validate()?;
    match name {
        "conjugation-core" => Ok(run_conjugation_core_suite(cfg)),
        "weak-type" => Ok(run_weak_type_suite(cfg)),
        "holder" => Ok(run_holder_suite(cfg)),
        "lemma3" => Ok(run_lemma3_suite(cfg)),
        "lemma4" => Ok(run_lemma4_suite(cfg)),
        "jensen-trace" => Ok(run_jensen_trace_suite(cfg)),
        "regularization" => Ok(run_regularization_suite(cfg)),
        "submajorization" => Ok(run_submajorization_suite(cfg)),
        "loglogplus" => Ok(run_loglogplus_metric(cfg)),
        "corollary1" => Ok(run_corollary1_suite(cfg)),
        other => Err(Error::InvalidParameter(format!("unknown suite '{other}'"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_are_stable_and_distinct() {
        let a = derive_trial_seed(1, "holder", 0);
        let b = derive_trial_seed(1, "holder", 1);
        let c = derive_trial_seed(1, "lemma3", 0);
        let d = derive_trial_seed(2, "holder", 0);
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
        assert_eq!(a, derive_trial_seed(1, "holder", 0));
    }

    #[test]
    fn config_validation() {
        let mut cfg = TrialConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.trials = 0;
        assert!(cfg.validate().is_err());
        cfg.trials = 1;
        cfg.tolerance = -1.0;
        assert!(cfg.validate().is_err());
        cfg.tolerance = 0.0;
        cfg.dims = vec![];
        assert!(cfg.validate().is_err());
        cfg.dims = vec![3];
        cfg.blocks = BlockSpec::Fixed(vec![2, 2]);
        assert!(cfg.validate().is_err());
        cfg.blocks = BlockSpec::Fixed(vec![2, 1]);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn unknown_suite_is_rejected() {
        assert!(run_suite("nosuch", &TrialConfig::default()).is_err());
    }
}
