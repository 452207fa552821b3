//! Command-line front end: fixture I/O, suite orchestration, constants
//! tables, Szegő and Jensen runs, and the operator-norm sweep.
//!
//! Exit codes: 0 when everything passed, 1 when any suite recorded a
//! violation, 2 on usage or configuration errors. Reports embed a run
//! manifest; everything except the manifest timestamps is a pure function
//! of the flags, so repeated runs are byte-identical up to those fields.
//! `NC_HARDY_THREADS` caps suite parallelism (0 or unset = automatic).

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::algebra::TracialAlgebra;
use crate::constants::{k2k_constant, lp_operator_norm, MultistartOptions, NormMode};
use crate::error::Result;
use crate::fixture::MatrixFixture;
use crate::szego::{jensen_search, sample_szego_operand, szego_infimum, szego_infimum_right};
use crate::verify::{
    run_suite, BlockSpec, SGrid, TrialConfig, VerificationReport, WeightSpec, SUITE_NAMES,
};

#[derive(Parser)]
#[command(name = "nc-hardy", version, about = "Subdiagonal-algebra toolkit: conjugation operator, non-commutative Lp inequalities, Szego least squares, and a seeded verification harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run verification suites and emit one report per suite.
    Verify(VerifyArgs),
    /// Emit the table of constants (2k, K_2k, 2K_2k).
    Constants(ConstantsArgs),
    /// Solve the Szegő least-squares problem on a fixture or a sampled operand.
    Szego(SzegoArgs),
    /// Explore the operator Jensen inequality on random analytic operators.
    JensenSearch(JensenArgs),
    /// Sweep empirical conjugation-operator-norm estimates over p and dimension.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum WeightsArg {
    Uniform,
    Random,
}

impl From<WeightsArg> for WeightSpec {
    fn from(w: WeightsArg) -> Self {
        match w {
            WeightsArg::Uniform => WeightSpec::Uniform,
            WeightsArg::Random => WeightSpec::Dirichlet,
        }
    }
}

#[derive(Args, Debug)]
struct ConfigArgs {
    /// Comma-separated dimensions to cycle through.
    #[arg(long, value_delimiter = ',', default_values_t = vec![2usize, 4, 8])]
    dims: Vec<usize>,
    /// Block partition: "singletons", "random", or comma-separated sizes.
    #[arg(long, default_value = "random")]
    blocks: String,
    /// Trace weights.
    #[arg(long, value_enum, default_value_t = WeightsArg::Uniform)]
    weights: WeightsArg,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Additive inequality tolerance.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Number of log-spaced levels s for the weak-type suite.
    #[arg(long, default_value_t = 50)]
    s_count: usize,
    #[arg(long, default_value_t = -2.0, allow_hyphen_values = true)]
    s_log_min: f64,
    #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
    s_log_max: f64,
}

impl ConfigArgs {
    fn to_config(&self) -> Result<TrialConfig> {
        let blocks = match self.blocks.as_str() {
            "singletons" => BlockSpec::Singletons,
            "random" => BlockSpec::Random,
            sizes => {
                let parsed: std::result::Result<Vec<usize>, _> =
                    sizes.split(',').map(|s| s.trim().parse()).collect();
                match parsed {
                    Ok(v) if !v.is_empty() => BlockSpec::Fixed(v),
                    _ => {
                        return Err(crate::error::Error::InvalidParameter(format!(
                            "unrecognized --blocks value '{sizes}'"
                        )))
                    }
                }
            }
        };
        let cfg = TrialConfig {
            dims: self.dims.clone(),
            blocks,
            weights: self.weights.into(),
            trials: self.trials,
            seed: self.seed,
            tolerance: self.tol,
            s_grid: SGrid {
                count: self.s_count,
                log10_min: self.s_log_min,
                log10_max: self.s_log_max,
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Comma list of suites, or "all".
    #[arg(long, default_value = "all")]
    suites: String,
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    format: OutputFormat,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ConstantsArgs {
    #[arg(long, default_value_t = 8)]
    kmax: usize,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    format: OutputFormat,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SzegoArgs {
    /// Operand fixture file; omit to sample a random operand.
    #[arg(long)]
    fixture: Option<PathBuf>,
    /// Dimension of the sampled operand (ignored with --fixture).
    #[arg(long, default_value_t = 4)]
    dim: usize,
    /// Block partition for the sampled operand.
    #[arg(long, default_value = "singletons")]
    blocks: String,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Which variant(s) to solve.
    #[arg(long, default_value = "both")]
    side: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct JensenArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long, value_delimiter = ',', default_values_t = vec![2usize, 4, 8])]
    dims: Vec<usize>,
    /// Comma list of exponents p ≥ 1.
    #[arg(long, value_delimiter = ',', default_values_t = vec![1.0, 2.0, 4.0, 6.0])]
    p_list: Vec<f64>,
    #[arg(long, default_value_t = 64)]
    restarts: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct RunManifest {
    command: String,
    version: String,
    seed: u64,
    config: serde_json::Value,
    started_unix_ms: u64,
    finished_unix_ms: u64,
    outputs: Vec<String>,
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

fn manifest(command: &str, seed: u64, config: serde_json::Value, started: u64, out: &Option<PathBuf>) -> RunManifest {
    RunManifest {
        command: command.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed,
        config,
        started_unix_ms: started,
        finished_unix_ms: now_ms(),
        outputs: out
            .iter()
            .map(|p| p.display().to_string())
            .collect(),
    }
}

fn emit(text: &str, out: &Option<PathBuf>) -> std::result::Result<(), String> {
    match out {
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.write_all(b"\n"))
                .map_err(|e| format!("cannot write to stdout: {e}"))
        }
        Some(path) => std::fs::write(path, format!("{text}\n"))
            .map_err(|e| format!("cannot write '{}': {e}", path.display())),
    }
}

fn init_thread_pool() {
    if let Ok(value) = std::env::var("NC_HARDY_THREADS") {
        if let Ok(threads) = value.trim().parse::<usize>() {
            if threads > 0 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global();
            }
        }
    }
}

fn cmd_verify(args: &VerifyArgs) -> i32 {
    let started = now_ms();
    let cfg = match args.config.to_config() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let suite_names: Vec<&str> = if args.suites == "all" {
        SUITE_NAMES.to_vec()
    } else {
        args.suites.split(',').map(str::trim).collect()
    };
    for name in &suite_names {
        if !SUITE_NAMES.contains(name) {
            eprintln!("error: unknown suite '{name}'; known: {}", SUITE_NAMES.join(", "));
            return 2;
        }
    }
    let mut reports: Vec<VerificationReport> = Vec::with_capacity(suite_names.len());
    for name in &suite_names {
        match run_suite(name, &cfg) {
            Ok(r) => reports.push(r),
            Err(e) => {
                eprintln!("error: {e}");
                return 2;
            }
        }
    }
    let any_violation = reports.iter().any(|r| !r.pass);
    let text = match args.format {
        OutputFormat::Json => {
            let doc = serde_json::json!({
                "schema": 1,
                "manifest": manifest(
                    "verify",
                    cfg.seed,
                    serde_json::to_value(&cfg).expect("config serializes"),
                    started,
                    &args.out,
                ),
                "reports": reports,
            });
            serde_json::to_string_pretty(&doc).expect("report serializes")
        }
        OutputFormat::Csv => {
            let mut rows = String::from("suite,constant,value\n");
            for r in &reports {
                for (k, v) in &r.constants {
                    rows.push_str(&format!("{},{},{}\n", r.name, k, v));
                }
                rows.push_str(&format!("{},pass,{}\n", r.name, u8::from(r.pass)));
            }
            rows.trim_end().to_string()
        }
    };
    if let Err(e) = emit(&text, &args.out) {
        eprintln!("error: {e}");
        return 2;
    }
    i32::from(any_violation)
}

fn cmd_constants(args: &ConstantsArgs) -> i32 {
    let started = now_ms();
    if args.kmax < 1 {
        eprintln!("error: --kmax must be at least 1");
        return 2;
    }
    let mut table = Vec::with_capacity(args.kmax);
    for k in 1..=args.kmax {
        match k2k_constant(k) {
            Ok(value) => table.push((2 * k, value, 2.0 * value)),
            Err(e) => {
                eprintln!("error: {e}");
                return 2;
            }
        }
    }
    let text = match args.format {
        OutputFormat::Json => {
            let rows: Vec<serde_json::Value> = table
                .iter()
                .map(|(two_k, k2k, two_k2k)| {
                    serde_json::json!({"two_k": two_k, "k2k": k2k, "two_k2k": two_k2k})
                })
                .collect();
            let doc = serde_json::json!({
                "schema": 1,
                "manifest": manifest(
                    "constants",
                    0,
                    serde_json::json!({"kmax": args.kmax}),
                    started,
                    &args.out,
                ),
                "table": rows,
            });
            serde_json::to_string_pretty(&doc).expect("table serializes")
        }
        OutputFormat::Csv => {
            let mut rows = String::from("2k,K2k,2K2k\n");
            for (two_k, k2k, two_k2k) in &table {
                rows.push_str(&format!("{two_k},{k2k},{two_k2k}\n"));
            }
            rows.trim_end().to_string()
        }
    };
    if let Err(e) = emit(&text, &args.out) {
        eprintln!("error: {e}");
        return 2;
    }
    0
}

#[derive(Serialize)]
struct SzegoSideReport {
    side: String,
    achieved: f64,
    predicted: f64,
    relative_gap: f64,
    normal_residual: f64,
    gram_condition: f64,
    minimizer: MatrixFixture,
    closed_form: MatrixFixture,
}

fn cmd_szego(args: &SzegoArgs) -> i32 {
    let started = now_ms();
    let operand = match &args.fixture {
        Some(path) => match MatrixFixture::load(path).and_then(|fx| fx.to_operator()) {
            Ok(op) => op,
            Err(e) => {
                eprintln!("error: cannot load fixture: {e}");
                return 2;
            }
        },
        None => {
            use rand::SeedableRng;
            let blocks = match args.blocks.as_str() {
                "singletons" => vec![1; args.dim],
                "random" => {
                    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(args.seed);
                    crate::verify::sample::sample_blocks(&BlockSpec::Random, args.dim, &mut rng)
                }
                sizes => match sizes.split(',').map(|s| s.trim().parse()).collect() {
                    Ok(v) => v,
                    Err(_) => {
                        eprintln!("error: unrecognized --blocks value '{sizes}'");
                        return 2;
                    }
                },
            };
            let alg = match TracialAlgebra::uniform(args.dim, blocks) {
                Ok(a) => a,
                Err(e) => {
                    eprintln!("error: {e}");
                    return 2;
                }
            };
            let mut rng = {
                use rand::SeedableRng;
                rand_chacha::ChaCha8Rng::seed_from_u64(args.seed)
            };
            sample_szego_operand(&alg, &mut rng)
        }
    };
    let sides: Vec<&str> = match args.side.as_str() {
        "left" => vec!["left"],
        "right" => vec!["right"],
        "both" => vec!["left", "right"],
        other => {
            eprintln!("error: --side must be left, right or both (got '{other}')");
            return 2;
        }
    };
    let mut results = Vec::new();
    for side in sides {
        let sol = match side {
            "left" => szego_infimum(&operand),
            _ => szego_infimum_right(&operand),
        };
        match sol {
            Ok(s) => results.push(SzegoSideReport {
                side: side.to_string(),
                achieved: s.achieved,
                predicted: s.predicted,
                relative_gap: (s.achieved - s.predicted).abs() / s.predicted.abs().max(1e-300),
                normal_residual: s.normal_residual,
                gram_condition: s.gram_condition,
                minimizer: MatrixFixture::from_operator(&s.minimizer),
                closed_form: MatrixFixture::from_operator(&s.closed_form),
            }),
            Err(e) => {
                eprintln!("error: {e}");
                return 2;
            }
        }
    }
    let doc = serde_json::json!({
        "schema": 1,
        "manifest": manifest(
            "szego",
            args.seed,
            serde_json::json!({
                "fixture": args.fixture.as_ref().map(|p| p.display().to_string()),
                "dim": args.dim,
                "side": args.side,
            }),
            started,
            &args.out,
        ),
        "operand": MatrixFixture::from_operator(&operand),
        "results": results,
    });
    let text = serde_json::to_string_pretty(&doc).expect("report serializes");
    if let Err(e) = emit(&text, &args.out) {
        eprintln!("error: {e}");
        return 2;
    }
    0
}

fn cmd_jensen(args: &JensenArgs) -> i32 {
    let started = now_ms();
    let cfg = match args.config.to_config() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let report = jensen_search(&cfg);
    let pass = report.pass;
    let doc = serde_json::json!({
        "schema": 1,
        "manifest": manifest(
            "jensen-search",
            cfg.seed,
            serde_json::to_value(&cfg).expect("config serializes"),
            started,
            &args.out,
        ),
        // Exploration output: gaps and witnesses, never a theorem claim.
        "exploration": true,
        "report": report,
    });
    let text = serde_json::to_string_pretty(&doc).expect("report serializes");
    if let Err(e) = emit(&text, &args.out) {
        eprintln!("error: {e}");
        return 2;
    }
    i32::from(!pass)
}

fn cmd_sweep(args: &SweepArgs) -> i32 {
    let started = now_ms();
    if args.dims.is_empty() || args.p_list.is_empty() {
        eprintln!("error: --dims and --p-list must be nonempty");
        return 2;
    }
    if let Some(p) = args.p_list.iter().find(|p| !(**p >= 1.0)) {
        eprintln!("error: sweep exponents must satisfy p >= 1 (got {p})");
        return 2;
    }
    let mut rows: Vec<(usize, f64, f64, Option<f64>)> = Vec::new();
    for &dim in &args.dims {
        let alg = match TracialAlgebra::uniform_singletons(dim) {
            Ok(a) => a,
            Err(e) => {
                eprintln!("error: {e}");
                return 2;
            }
        };
        for &p in &args.p_list {
            let mode = if (p - 2.0).abs() < 1e-12 {
                NormMode::ExactL2
            } else {
                NormMode::Multistart(MultistartOptions {
                    restarts: args.restarts,
                    iterations: 40,
                    self_adjoint: false,
                    seed: args.seed,
                })
            };
            let estimate = match lp_operator_norm(&alg, p, mode) {
                Ok(e) => e.value,
                Err(e) => {
                    eprintln!("error: {e}");
                    return 2;
                }
            };
            let bound = even_p_bound(p);
            rows.push((dim, p, estimate, bound));
        }
    }
    let text = match args.format {
        OutputFormat::Csv => {
            let mut out = String::from("dim,p,estimate,proven_bound_even_p\n");
            for (dim, p, est, bound) in &rows {
                match bound {
                    Some(b) => out.push_str(&format!("{dim},{p},{est},{b}\n")),
                    None => out.push_str(&format!("{dim},{p},{est},\n")),
                }
            }
            out.trim_end().to_string()
        }
        OutputFormat::Json => {
            let rows: Vec<serde_json::Value> = rows
                .iter()
                .map(|(dim, p, est, bound)| {
                    serde_json::json!({
                        "dim": dim, "p": p, "estimate": est,
                        "proven_bound_even_p": bound,
                    })
                })
                .collect();
            let doc = serde_json::json!({
                "schema": 1,
                "manifest": manifest(
                    "sweep",
                    args.seed,
                    serde_json::json!({"dims": args.dims, "p_list": args.p_list, "restarts": args.restarts}),
                    started,
                    &args.out,
                ),
                "rows": rows,
            });
            serde_json::to_string_pretty(&doc).expect("rows serialize")
        }
    };
    if let Err(e) = emit(&text, &args.out) {
        eprintln!("error: {e}");
        return 2;
    }
    0
}

/// 2·K_{2k} when p = 2k is an even integer.
fn even_p_bound(p: f64) -> Option<f64> {
    if p.fract() == 0.0 && (p as u64) % 2 == 0 && p >= 2.0 {
        k2k_constant(p as usize / 2).ok().map(|k| 2.0 * k)
    } else {
        None
    }
}

/// Run the CLI on explicit arguments and return the process exit code.
pub fn run_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    init_thread_pool();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            // clap renders --help/--version through the error path with
            // success status.
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match &cli.command {
        Command::Verify(a) => cmd_verify(a),
        Command::Constants(a) => cmd_constants(a),
        Command::Szego(a) => cmd_szego(a),
        Command::JensenSearch(a) => cmd_jensen(a),
        Command::Sweep(a) => cmd_sweep(a),
    }
}

/// Entry point for the binary.
pub fn run() -> i32 {
    run_with_args(std::env::args_os())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn even_p_bounds() {
        assert!(even_p_bound(2.0).is_some());
        assert!(even_p_bound(4.0).is_some());
        assert!(even_p_bound(3.0).is_none());
        assert!(even_p_bound(2.5).is_none());
        let b2 = even_p_bound(2.0).unwrap();
        assert!((b2 - 2.0 * 2.0f64.sqrt()).abs() < 1e-11);
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run_with_args(["nc-hardy", "verify", "--suites", "nosuch"]), 2);
        assert_eq!(run_with_args(["nc-hardy", "verify", "--trials", "0"]), 2);
        assert_eq!(run_with_args(["nc-hardy", "constants", "--kmax", "0"]), 2);
        assert_eq!(run_with_args(["nc-hardy", "no-such-command"]), 2);
    }
}
