//! Command-line front end: `analyze` (exact asymptotics report), `verify`
//! (Monte Carlo + optional quadrature oracle against the report) and
//! `vertices` (exhaustive basic-solution listing).
//!
//! Exit codes: 0 success, 1 input/configuration errors, 2 analytic
//! refusals (hypothesis violation, infinite constant, enumeration budget).

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use tailprod::lp::DEFAULT_ENUM_BUDGET;
use tailprod::rational::human_rational;
use tailprod::tail::{analyze_with_budget, AnalyzeError, CheckStatus, ProblemSpec, TailReport};
use tailprod::verify::{
    estimate_ratio, exact_prob, normalizer, predicted_slope, slope_fit, SimulationConfig,
    VerifyError,
};
use tailprod::ProblemFile;

const ENUM_BUDGET_ENV: &str = "TAILPROD_ENUM_BUDGET";

#[derive(Parser)]
#[command(
    name = "tailprod",
    about = "Exact tail asymptotics for joint exceedances of products of heavy-tailed factors",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the exceedance program and print the asymptotic report.
    Analyze(AnalyzeArgs),
    /// Estimate the exceedance ratio by simulation and check the predicted slope.
    Verify(VerifyArgs),
    /// List all feasible basic solutions of the exceedance program.
    Vertices(VerticesArgs),
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Problem file (JSON).
    path: PathBuf,
    /// Emit the report as JSON instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct VerifyArgs {
    /// Problem file (JSON).
    path: PathBuf,
    /// Comma-separated thresholds, strictly increasing, all > 1.
    #[arg(long, value_delimiter = ',', default_value = "10,100,1000")]
    x_grid: Vec<f64>,
    /// Monte Carlo samples per grid point.
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Parallel chunks (fixed count keeps output byte-identical).
    #[arg(long, default_value_t = 64)]
    chunks: u64,
    /// Also evaluate the quadrature oracle per grid point (at most 4 factors).
    #[arg(long)]
    oracle: bool,
    /// Write the simulation table as CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerticesArgs {
    /// Problem file (JSON).
    path: PathBuf,
}

fn enum_budget() -> Result<u64, String> {
    match std::env::var(ENUM_BUDGET_ENV) {
        Ok(v) => v
            .trim()
            .parse::<u64>()
            .map_err(|_| format!("{ENUM_BUDGET_ENV} must be an integer, got {v:?}")),
        Err(_) => Ok(DEFAULT_ENUM_BUDGET),
    }
}

fn load_spec(path: &PathBuf) -> Result<ProblemSpec, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    ProblemFile::parse(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn run_analyze(spec: &ProblemSpec, budget: u64) -> Result<TailReport, ExitCode> {
    match analyze_with_budget(spec, budget) {
        Ok(report) => Ok(report),
        Err(AnalyzeError::HypothesisViolation {
            message,
            log,
            witness,
        }) => {
            eprintln!("analysis refused: {message}");
            if witness.is_some() {
                eprintln!("optimal solution not unique");
            }
            for h in &log {
                let status = match h.status {
                    CheckStatus::Pass => "pass",
                    CheckStatus::Fail => "FAIL",
                };
                eprintln!("  [{status}] {}: {}", h.condition, h.detail);
            }
            if let Some(w) = witness {
                eprintln!(
                    "alternative optimum: ({})",
                    w.iter().map(human_rational).collect::<Vec<_>>().join(", ")
                );
            }
            Err(ExitCode::from(2))
        }
        Err(e) => {
            eprintln!("error: {e}");
            Err(ExitCode::from(1))
        }
    }
}

fn cmd_analyze(args: &AnalyzeArgs) -> ExitCode {
    let budget = match enum_budget() {
        Ok(b) => b,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let spec = match load_spec(&args.path) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let report = match run_analyze(&spec, budget) {
        Ok(r) => r,
        Err(code) => return code,
    };
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report).unwrap());
    } else {
        print!("{}", report.render_text());
    }
    ExitCode::SUCCESS
}

fn cmd_verify(args: &VerifyArgs) -> ExitCode {
    let budget = match enum_budget() {
        Ok(b) => b,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let spec = match load_spec(&args.path) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let report = match run_analyze(&spec, budget) {
        Ok(r) => r,
        Err(code) => return code,
    };
    let cfg = SimulationConfig {
        x_grid: args.x_grid.clone(),
        samples_per_x: args.samples,
        seed: args.seed,
        chunks: args.chunks,
    };
    let result = match estimate_ratio(&spec, &report, &cfg) {
        Ok(r) => r,
        Err(VerifyError::InfiniteConstant) => {
            eprintln!(
                "verification infeasible: the limit constant is infinite, \
                 the ratio has no finite target"
            );
            return ExitCode::from(2);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };

    if let Some(out) = &args.out {
        if let Err(e) = std::fs::write(out, result.to_csv()) {
            eprintln!("error: cannot write {}: {e}", out.display());
            return ExitCode::from(1);
        }
    }

    println!("constant: {}", report.constant_at_c.human());
    println!("index: {}", human_rational(&report.rv_index));
    println!("x,ratio,stderr{}", if args.oracle { ",oracle_ratio" } else { "" });
    let mut oracle_curve: Vec<(f64, f64)> = Vec::new();
    for row in &result.rows {
        let mut line = format!("{},{:.6e},{:.3e}", row.x, row.ratio, row.stderr);
        if args.oracle {
            match exact_prob(&spec, row.x, 1e-6) {
                Ok(q) => {
                    let norm = normalizer(&spec, &report, row.x);
                    line.push_str(&format!(",{:.6e}", q.value / norm));
                    oracle_curve.push((row.x, q.value));
                }
                Err(e) => line.push_str(&format!(",oracle failed: {e}")),
            }
        }
        println!("{line}");
    }

    let predicted = predicted_slope(&report);
    let mc_curve: Vec<(f64, f64)> = result.rows.iter().map(|r| (r.x, r.p_hat)).collect();
    match slope_fit(&mc_curve, args.seed) {
        Ok(fit) => println!(
            "mc slope: {:.4} (95% CI [{:.4}, {:.4}]), predicted -sum kappa = {:.4}",
            fit.slope, fit.ci_low, fit.ci_high, predicted
        ),
        Err(e) => println!("mc slope: unavailable ({e})"),
    }
    if args.oracle && !oracle_curve.is_empty() {
        match slope_fit(&oracle_curve, args.seed) {
            Ok(fit) => println!(
                "oracle slope: {:.4} (95% CI [{:.4}, {:.4}]), predicted -sum kappa = {:.4}",
                fit.slope, fit.ci_low, fit.ci_high, predicted
            ),
            Err(e) => println!("oracle slope: unavailable ({e})"),
        }
    }
    ExitCode::SUCCESS
}

fn cmd_vertices(args: &VerticesArgs) -> ExitCode {
    let budget = match enum_budget() {
        Ok(b) => b,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let spec = match load_spec(&args.path) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let vertices = match tailprod::lp::enumerate_vertices(&spec.a, budget) {
        Ok(v) => v,
        Err(e @ tailprod::lp::LpError::BudgetExceeded { .. }) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let best = vertices
        .iter()
        .map(|v| &v.objective)
        .min()
        .cloned();
    println!("{} feasible basic solution(s)", vertices.len());
    for v in &vertices {
        let optimal = best.as_ref() == Some(&v.objective);
        println!(
            "basis {:?}  kappa ({})  objective {}{}",
            v.basis.iter().map(|b| b + 1).collect::<Vec<_>>(),
            v.kappa
                .iter()
                .map(human_rational)
                .collect::<Vec<_>>()
                .join(", "),
            human_rational(&v.objective),
            if optimal { "  [optimal]" } else { "" }
        );
    }
    if vertices.is_empty() {
        println!("program infeasible: no feasible basic solutions");
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Analyze(args) => cmd_analyze(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Vertices(args) => cmd_vertices(args),
    }
}
