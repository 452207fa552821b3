//! Suite runners. Each suite maps trials over the configured ensemble,
//! evaluates its inequalities through [`checks`], and folds violations and
//! empirical constants in trial order, so parallel and serial execution
//! produce identical reports.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::algebra::MatrixOperator;
use crate::conjugation::{analytic_completion, conjugate};
use crate::constants::{k2k_constant, lp_operator_norm, NormMode};
use crate::fixture::MatrixFixture;
use crate::spectral::{lp_norm, weak_l1_quasinorm, singular_cells, SpectralDecomposition};
use crate::verify::checks::{self, CheckValue};
use crate::verify::sample::{sample_algebra, sample_operator, OperatorKind};
use crate::verify::{derive_trial_seed, TrialConfig, VerificationReport, Violation};

#[derive(Default)]
struct TrialOutcome {
    violations: Vec<Violation>,
    /// Metrics merged across trials by taking the maximum.
    max_metrics: Vec<(String, f64)>,
}

impl TrialOutcome {
    fn metric(&mut self, name: impl Into<String>, value: f64) {
        self.max_metrics.push((name.into(), value));
    }

    #[allow(clippy::too_many_arguments)]
    fn check(
        &mut self,
        trial: usize,
        seed: u64,
        dim: usize,
        check: &str,
        value: CheckValue,
        tol: f64,
        params: &[(&str, f64)],
        witnesses: &[&MatrixOperator],
    ) {
        if value.violated(tol) {
            self.violations.push(Violation {
                trial,
                seed,
                dim,
                check: check.to_string(),
                slack: value.slack(),
                params: params
                    .iter()
                    .map(|(k, v)| (k.to_string(), *v))
                    .collect(),
                witnesses: witnesses
                    .iter()
                    .map(|w| MatrixFixture::from_operator(w))
                    .collect(),
            });
        }
    }
}

fn run_trials(
    suite: &'static str,
    cfg: &TrialConfig,
    body: impl Fn(usize, u64, &mut ChaCha8Rng, &mut TrialOutcome) + Sync,
) -> VerificationReport {
    let outcomes: Vec<TrialOutcome> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let seed = derive_trial_seed(cfg.seed, suite, trial);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut out = TrialOutcome::default();
            body(trial, seed, &mut rng, &mut out);
            out
        })
        .collect();
    let mut violations = Vec::new();
    let mut constants: BTreeMap<String, f64> = BTreeMap::new();
    for out in outcomes {
        violations.extend(out.violations);
        for (name, value) in out.max_metrics {
            constants
                .entry(name)
                .and_modify(|v| *v = v.max(value))
                .or_insert(value);
        }
    }
    VerificationReport::assemble(suite, cfg, violations, constants)
}

/// Batched conjugation invariants: the L² contraction and isometry on
/// ker Φ, Φ(ũ) = 0, preservation of self-adjointness, skew-duality
/// τ(uṽ) = −τ(ũv), H∞ membership of u + iũ, Riesz idempotency and
/// complementation, the exact L² operator norm, and the even-p K_{2k}
/// bounds.
pub fn run_conjugation_core_suite(cfg: &TrialConfig) -> VerificationReport {
    let kbound: Vec<(f64, f64)> = (1..=3)
        .map(|k| {
            let c = k2k_constant(k).expect("k >= 1");
            (2.0 * k as f64, c)
        })
        .collect();
    run_trials("conjugation-core", cfg, |trial, seed, rng, out| {
        let dim = cfg.dim_for_trial(trial);
        let alg = sample_algebra(dim, &cfg.blocks, cfg.weights, rng);
        let tol = cfg.tolerance;
        let g = sample_operator(&alg, OperatorKind::Ginibre, rng);
        let u = sample_operator(&alg, OperatorKind::SelfAdjoint, rng);
        let v = sample_operator(&alg, OperatorKind::SelfAdjoint, rng);

        let contraction = checks::conjugation_core::l2_contraction(&g);
        out.check(trial, seed, dim, "conjugation.l2-contraction", contraction, tol, &[], &[&g]);
        if contraction.rhs > 0.0 {
            out.metric("l2_contraction_max_ratio", contraction.lhs / contraction.rhs);
        }
        out.check(
            trial, seed, dim,
            "conjugation.l2-isometry",
            checks::conjugation_core::l2_isometry_on_phi_kernel(&g),
            tol, &[], &[&g],
        );
        out.check(
            trial, seed, dim,
            "conjugation.phi-zero",
            checks::conjugation_core::phi_annihilates(&g),
            tol, &[], &[&g],
        );
        out.check(
            trial, seed, dim,
            "conjugation.self-adjoint",
            checks::conjugation_core::preserves_self_adjoint(&g),
            tol, &[], &[&g],
        );
        let duality = checks::conjugation_core::skew_duality(&u, &v);
        out.check(trial, seed, dim, "conjugation.skew-duality", duality, tol, &[], &[&u, &v]);
        out.metric("skew_duality_max_err", duality.lhs);
        out.check(
            trial, seed, dim,
            "conjugation.completion-analytic",
            checks::conjugation_core::completion_analytic(&g),
            tol, &[], &[&g],
        );
        out.check(
            trial, seed, dim,
            "conjugation.riesz",
            checks::conjugation_core::riesz_idempotent_complement(&g),
            tol, &[], &[&g],
        );
        if alg.has_strict_part() {
            let est = lp_operator_norm(&alg, 2.0, NormMode::ExactL2)
                .expect("exact-l2 on valid algebra");
            let value = CheckValue {
                lhs: (est.value - 1.0).abs(),
                rhs: 0.0,
            };
            out.check(
                trial, seed, dim,
                "conjugation.exact-l2-norm",
                value,
                1e-9,
                &[],
                &[&MatrixOperator::identity(&alg)],
            );
            out.metric("exact_l2_norm_max_dev", value.lhs);
        }
        for &(two_k, k_const) in &kbound {
            let sa = checks::conjugation_core::even_p_bound(&u, two_k, k_const)
                .expect("norms of finite operators");
            out.check(
                trial, seed, dim,
                "conjugation.even-p",
                sa,
                tol,
                &[("two_k", two_k), ("bound", k_const)],
                &[&u],
            );
            if sa.rhs > 0.0 {
                out.metric(format!("kbound_max_ratio_sa_p{}", two_k as u32), sa.lhs / sa.rhs);
            }
            let gen = checks::conjugation_core::even_p_bound(&g, two_k, 2.0 * k_const)
                .expect("norms of finite operators");
            out.check(
                trial, seed, dim,
                "conjugation.even-p",
                gen,
                tol,
                &[("two_k", two_k), ("bound", 2.0 * k_const)],
                &[&g],
            );
            if gen.rhs > 0.0 {
                out.metric(format!("kbound_max_ratio_gen_p{}", two_k as u32), gen.lhs / gen.rhs);
            }
        }
    })
}

/// λ_s(u + iũ) ≤ 4‖u‖₁/s over a log-spaced grid of levels, with the exact
/// sup_s s·λ_s/‖u‖₁ recorded per dimension.
pub fn run_weak_type_suite(cfg: &TrialConfig) -> VerificationReport {
    let s_values = cfg.s_grid.values();
    run_trials("weak-type", cfg, |trial, seed, rng, out| {
        let dim = cfg.dim_for_trial(trial);
        let alg = sample_algebra(dim, &cfg.blocks, cfg.weights, rng);
        let u = sample_operator(&alg, OperatorKind::Positive, rng);
        let f = analytic_completion(&u);
        let cells = singular_cells(&f);
        let u_l1 = lp_norm(&u, 1.0).expect("p = 1");
        for &s in &s_values {
            let lhs: f64 = cells
                .iter()
                .filter(|(sigma, _)| *sigma > s)
                .map(|(_, m)| m)
                .sum();
            let value = CheckValue {
                lhs,
                rhs: 4.0 * u_l1 / s,
            };
            out.check(trial, seed, dim, "weak-type", value, cfg.tolerance, &[("s", s)], &[&u]);
        }
        if u_l1 > 0.0 {
            let constant = weak_l1_quasinorm(&f) / u_l1;
            out.metric("weak_type_constant", constant);
            out.metric(format!("weak_type_constant_dim{dim}"), constant);
        }
    })
}

fn sample_holder_exponents(m: usize, rng: &mut impl Rng) -> Vec<f64> {
    // Reciprocals uniform on the simplex; resample while any p_j > 64.
    loop {
        let raw: Vec<f64> = (0..m).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
        let total: f64 = raw.iter().sum();
        let ps: Vec<f64> = raw.iter().map(|e| total / e).collect();
        if ps.iter().all(|&p| p <= 64.0) {
            return ps;
        }
    }
}

/// |τ(a₁⋯a_m)| ≤ Π ‖aⱼ‖_{pⱼ} for m ∈ {2,3,4} and random conjugate
/// exponent tuples.
pub fn run_holder_suite(cfg: &TrialConfig) -> VerificationReport {
    run_trials("holder", cfg, |trial, seed, rng, out| {
        let dim = cfg.dim_for_trial(trial);
        let alg = sample_algebra(dim, &cfg.blocks, cfg.weights, rng);
        let m = 2 + trial % 3;
        let ps = sample_holder_exponents(m, rng);
        let ops: Vec<MatrixOperator> = (0..m)
            .map(|_| sample_operator(&alg, OperatorKind::Ginibre, rng))
            .collect();
        let value = checks::check_holder(&ops, &ps).expect("valid exponents");
        let refs: Vec<&MatrixOperator> = ops.iter().collect();
        let params: Vec<(String, f64)> = ps
            .iter()
            .enumerate()
            .map(|(i, &p)| (format!("p{i}"), p))
            .collect();
        let params_ref: Vec<(&str, f64)> =
            params.iter().map(|(k, v)| (k.as_str(), *v)).collect();
        out.check(
            trial, seed, dim,
            &format!("holder.m{m}"),
            value,
            cfg.tolerance,
            &params_ref,
            &refs,
        );
        if value.rhs > 0.0 {
            out.metric("holder_max_ratio", value.lhs / value.rhs);
        }
    })
}

/// τ(P(ab)P) ≤ τ(ab) for positive a, b and P = χ_{(s,∞)}(a).
pub fn run_lemma3_suite(cfg: &TrialConfig) -> VerificationReport {
    run_trials("lemma3", cfg, |trial, seed, rng, out| {
        let dim = cfg.dim_for_trial(trial);
        let alg = sample_algebra(dim, &cfg.blocks, cfg.weights, rng);
        let a = sample_operator(&alg, OperatorKind::Positive, rng);
        let b = sample_operator(&alg, OperatorKind::Positive, rng);
        let sd = SpectralDecomposition::hermitian(&a).expect("a is self-adjoint");
        let lo = sd.eigenvalues().first().copied().unwrap_or(0.0);
        let hi = sd.eigenvalues().last().copied().unwrap_or(1.0);
        let s = lo + rng.random::<f64>() * (hi - lo).max(1e-12);
        let value = checks::check_lemma3(&a, &b, s).expect("positive samples");
        out.check(trial, seed, dim, "lemma3", value, cfg.tolerance, &[("s", s)], &[&a, &b]);
        out.metric("lemma3_max_slack", value.slack());
    })
}

/// τ(C·B⁻¹) ≤ τ(C·A⁻¹) for positive definite A, B = A + increment, and
/// positive C.
pub fn run_lemma4_suite(cfg: &TrialConfig) -> VerificationReport {
    run_trials("lemma4", cfg, |trial, seed, rng, out| {
        let dim = cfg.dim_for_trial(trial);
        let alg = sample_algebra(dim, &cfg.blocks, cfg.weights, rng);
        let half = Complex64::new(0.5, 0.0);
        let a = &sample_operator(&alg, OperatorKind::Positive, rng)
            + &MatrixOperator::identity(&alg).scale(half);
        let b = &a + &sample_operator(&alg, OperatorKind::Positive, rng);
        let c = sample_operator(&alg, OperatorKind::Positive, rng);
        let value = checks::check_lemma4(&a, &b, &c).expect("shifted operators are invertible");
        out.check(trial, seed, dim, "lemma4", value, cfg.tolerance, &[], &[&a, &b, &c]);
        out.metric("lemma4_max_slack", value.slack());
    })
}

/// τ(log h) ≤ log τ(h) for positive definite h.
pub fn run_jensen_trace_suite(cfg: &TrialConfig) -> VerificationReport {
    run_trials("jensen-trace", cfg, |trial, seed, rng, out| {
        let dim = cfg.dim_for_trial(trial);
        let alg = sample_algebra(dim, &cfg.blocks, cfg.weights, rng);
        let h = &sample_operator(&alg, OperatorKind::Positive, rng)
            + &MatrixOperator::identity(&alg).scale(Complex64::new(0.01, 0.0));
        let value = checks::check_jensen_trace(&h).expect("h is positive definite");
        // The trace inequality is exact mathematics; grant only the absolute
        // floating-point slack.
        out.check(trial, seed, dim, "jensen-trace", value, 1e-12, &[], &[&h]);
        out.metric("jensen_trace_max_slack", value.slack());
    })
}

/// All regularization items plus the expectation identity
/// Φ(f_ε) = (εI + Φ(u))(I + εΦ(u))⁻¹, for ε ∈ {0.5, 0.1, 0.01} and
/// p ∈ {1, 2, 4}.
pub fn run_regularization_suite(cfg: &TrialConfig) -> VerificationReport {
    const EPSILONS: [f64; 3] = [0.5, 0.1, 0.01];
    const PS: [f64; 3] = [1.0, 2.0, 4.0];
    run_trials("regularization", cfg, |trial, seed, rng, out| {
        let dim = cfg.dim_for_trial(trial);
        let alg = sample_algebra(dim, &cfg.blocks, cfg.weights, rng);
        let u = sample_operator(&alg, OperatorKind::Positive, rng);
        for &eps in &EPSILONS {
            let contraction = checks::regularization::inverse_contraction(&u, eps)
                .expect("I + εf is invertible");
            out.check(
                trial, seed, dim,
                "regularization.inverse-contraction",
                contraction,
                cfg.tolerance.min(1e-10),
                &[("eps", eps)],
                &[&u],
            );
            out.metric("max_inverse_norm", contraction.lhs);
            out.check(
                trial, seed, dim,
                "regularization.analytic",
                checks::regularization::analytic_membership(&u, eps).expect("regularize"),
                cfg.tolerance,
                &[("eps", eps)],
                &[&u],
            );
            let re = checks::regularization::real_part_bound(&u, eps).expect("regularize");
            out.check(
                trial, seed, dim,
                "regularization.real-part",
                re,
                cfg.tolerance,
                &[("eps", eps)],
                &[&u],
            );
            out.metric("max_re_deficit", re.lhs);
            for &p in &PS {
                let lp = checks::regularization::lp_convergence(&u, eps, p)
                    .expect("regularize");
                out.check(
                    trial, seed, dim,
                    "regularization.lp",
                    lp,
                    cfg.tolerance,
                    &[("eps", eps), ("p", p)],
                    &[&u],
                );
                if lp.rhs > 0.0 {
                    out.metric("max_lp_ratio", lp.lhs / lp.rhs);
                }
                if (p - 2.0).abs() < 1e-12 {
                    out.metric(format!("mean_l2_dist_eps{eps}"), lp.lhs);
                }
            }
            let claim1 = checks::regularization::claim1(&u, eps).expect("regularize");
            out.check(
                trial, seed, dim,
                "regularization.claim1",
                claim1,
                cfg.tolerance,
                &[("eps", eps)],
                &[&u],
            );
            out.metric("max_claim1_err", claim1.lhs);
        }
    })
}

/// μ(bc) ≺≺ μ(b)·μ(c) for random pairs.
pub fn run_submajorization_suite(cfg: &TrialConfig) -> VerificationReport {
    run_trials("submajorization", cfg, |trial, seed, rng, out| {
        let dim = cfg.dim_for_trial(trial);
        let alg = sample_algebra(dim, &cfg.blocks, cfg.weights, rng);
        let b = sample_operator(&alg, OperatorKind::Ginibre, rng);
        let c = sample_operator(&alg, OperatorKind::Ginibre, rng);
        let value = checks::check_submajorization(&b, &c).expect("mu of finite operators");
        out.check(trial, seed, dim, "submajorization", value, cfg.tolerance, &[], &[&b, &c]);
        out.metric("submajorization_max_gap", value.lhs);
    })
}

/// Report-only L log L metric: K̂ = max ‖ã‖₁/(1 + τ(|a| log⁺|a|)) per
/// dimension, plus the exact dyadic spectral reconstruction
/// a = a·χ_{[0,1)}(a) + Σ_k a·χ_{[2^{k−1},2^k)}(a) for positive a.
pub fn run_loglogplus_metric(cfg: &TrialConfig) -> VerificationReport {
    run_trials("loglogplus", cfg, |trial, seed, rng, out| {
        let dim = cfg.dim_for_trial(trial);
        let alg = sample_algebra(dim, &cfg.blocks, cfg.weights, rng);
        let a = sample_operator(&alg, OperatorKind::Ginibre, rng);
        let cells = singular_cells(&a);
        let l_log_l: f64 = cells
            .iter()
            .map(|(sigma, m)| m * sigma * sigma.ln().max(0.0))
            .sum();
        let khat = lp_norm(&conjugate(&a), 1.0).expect("p = 1") / (1.0 + l_log_l);
        let finite = CheckValue {
            lhs: if khat.is_finite() { 0.0 } else { 1.0 },
            rhs: 0.0,
        };
        out.check(trial, seed, dim, "loglogplus.finite", finite, 0.0, &[], &[&a]);
        out.metric(format!("khat_dim{dim}"), khat);

        // Dyadic split of a positive sample.
        let pos = sample_operator(&alg, OperatorKind::Positive, rng);
        let sd = SpectralDecomposition::hermitian(&pos).expect("positive sample");
        let lambda_max = sd.eigenvalues().last().copied().unwrap_or(0.0);
        let bucket = |l: f64| -> i32 {
            if l < 1.0 {
                0
            } else {
                l.log2().floor() as i32 + 1
            }
        };
        let k_max = bucket(lambda_max);
        let mut rebuilt = MatrixOperator::zero(&alg);
        for k in 0..=k_max {
            let p_k = sd.projection(|l| bucket(l.max(0.0)) == k);
            rebuilt = &rebuilt + &(&pos * &p_k);
        }
        let err = rebuilt.max_diff(&pos) / pos.max_abs().max(1.0);
        let value = CheckValue { lhs: err, rhs: 0.0 };
        out.check(trial, seed, dim, "loglogplus.dyadic", value, 1e-12, &[], &[&pos]);
        out.metric("dyadic_max_err", err);
    })
}

/// Quasinorm ratios ‖ũ‖_p for p ∈ {1/4, 1/2, 3/4} over positive u with
/// ‖u‖₁ = 1; recorded, not asserted (only finiteness is checked).
pub fn run_corollary1_suite(cfg: &TrialConfig) -> VerificationReport {
    const PS: [f64; 3] = [0.25, 0.5, 0.75];
    run_trials("corollary1", cfg, |trial, seed, rng, out| {
        let dim = cfg.dim_for_trial(trial);
        let alg = sample_algebra(dim, &cfg.blocks, cfg.weights, rng);
        let raw = sample_operator(&alg, OperatorKind::Positive, rng);
        let norm1 = lp_norm(&raw, 1.0).expect("p = 1");
        if norm1 <= 1e-12 {
            out.metric("skipped_zero_norm", 1.0);
            return;
        }
        let u = raw.scale(Complex64::new(1.0 / norm1, 0.0));
        let ut = conjugate(&u);
        for &p in &PS {
            let ratio = lp_norm(&ut, p).expect("p > 0");
            let finite = CheckValue {
                lhs: if ratio.is_finite() { 0.0 } else { 1.0 },
                rhs: 0.0,
            };
            out.check(
                trial, seed, dim,
                &format!("corollary1.finite-p{p}"),
                finite,
                0.0,
                &[("p", p)],
                &[&u],
            );
            out.metric(format!("ratio_p{p}"), ratio);
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::{BlockSpec, SGrid, WeightSpec};

    fn small_cfg(trials: usize, seed: u64) -> TrialConfig {
        TrialConfig {
            dims: vec![2, 3, 4],
            blocks: BlockSpec::Random,
            weights: WeightSpec::Uniform,
            trials,
            seed,
            tolerance: 1e-9,
            s_grid: SGrid {
                count: 12,
                log10_min: -2.0,
                log10_max: 2.0,
            },
        }
    }

    #[test]
    fn all_suites_pass_on_small_sweeps() {
        for name in crate::verify::SUITE_NAMES {
            let report = crate::verify::run_suite(name, &small_cfg(24, 7)).unwrap();
            assert!(
                report.pass,
                "suite {name} found violations: {:?}",
                report
                    .violations
                    .iter()
                    .map(|v| (&v.check, v.slack))
                    .collect::<Vec<_>>()
            );
            assert_eq!(report.trials, 24);
        }
    }

    #[test]
    fn reports_are_deterministic() {
        for name in ["weak-type", "holder", "conjugation-core"] {
            let a = crate::verify::run_suite(name, &small_cfg(16, 3)).unwrap();
            let b = crate::verify::run_suite(name, &small_cfg(16, 3)).unwrap();
            assert_eq!(
                serde_json::to_string(&a).unwrap(),
                serde_json::to_string(&b).unwrap(),
                "suite {name} not deterministic"
            );
        }
    }

    #[test]
    fn weak_type_constant_below_four() {
        let report = run_weak_type_suite(&small_cfg(60, 42));
        assert!(report.pass, "{} violations", report.violations.len());
        let c = report.constants["weak_type_constant"];
        assert!(c <= 4.0, "empirical constant {c}");
        assert!(c > 0.0);
    }

    #[test]
    fn regularization_distance_shrinks_with_eps() {
        let report = run_regularization_suite(&small_cfg(20, 5));
        assert!(report.pass);
        let d50 = report.constants["mean_l2_dist_eps0.5"];
        let d10 = report.constants["mean_l2_dist_eps0.1"];
        let d01 = report.constants["mean_l2_dist_eps0.01"];
        assert!(d50 >= d10 && d10 >= d01, "{d50} {d10} {d01}");
    }

    #[test]
    fn dirichlet_weights_keep_l2_suite_clean() {
        // The L²-geometry checks hold for arbitrary weights.
        let mut cfg = small_cfg(24, 11);
        cfg.weights = WeightSpec::Dirichlet;
        for name in ["corollary1", "loglogplus"] {
            let report = crate::verify::run_suite(name, &cfg).unwrap();
            assert!(report.pass, "suite {name}");
        }
    }
}
