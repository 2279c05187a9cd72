//! `evt` — simulate tail samples, estimate the extreme-value statistic
//! family, verify limit theorems by Monte Carlo, run the covariance oracle,
//! and detect domains of attraction.
//!
//! Exit status: 0 on success/pass, 2 on verification failure, 1 on usage or
//! data errors.

mod io;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use evt_core::models::{builtin, Builtin, BuiltinParams, SampleBatch, TailModel};
use evt_core::montecarlo::{self, ExperimentConfig, SizeRule, TheoremTarget};
use evt_core::{detect, discrepancy, estimators};

use crate::manifest::RunManifest;

#[derive(Parser)]
#[command(
    name = "evt",
    version,
    about = "Extreme-value statistics: simulation, estimation, verification, detection",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a sample from a builtin tail model and write it as CSV.
    Simulate(SimulateArgs),
    /// Compute the statistic family from a sample file.
    Estimate(EstimateArgs),
    /// Run a Monte Carlo verification target and report pass/fail.
    Verify(VerifyArgs),
    /// Run the covariance oracle and write the discrepancy report.
    BridgeOracle(BridgeOracleArgs),
    /// Label the domain of attraction of a sample.
    Detect(DetectArgs),
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// Builtin model: pareto | oscillatory | power-f | gumbel | gumbel-slow |
    /// weibull | weibull-linear-b | weibull-power-b | loglog-b
    #[arg(long, default_value = "pareto")]
    model: String,
    /// Tail index for the heavy/bounded families.
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    /// Scale constant c > 0.
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    /// Location constant of the de Haan form.
    #[arg(long, default_value_t = 1.0)]
    d: f64,
    /// Upper endpoint of the bounded family (defaults to c).
    #[arg(long)]
    y0: Option<f64>,
    /// Amplitude of the power perturbation.
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    /// Exponent of the power perturbation (> 1).
    #[arg(long, default_value_t = 2.0)]
    rho: f64,
    /// Sign of the log-log perturbation (+1 or -1).
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    sign: f64,
}

impl ModelArgs {
    fn build(&self) -> anyhow::Result<TailModel> {
        let which = Builtin::parse(&self.model)
            .ok_or_else(|| anyhow::anyhow!("unknown model '{}'", self.model))?;
        let params = BuiltinParams {
            gamma: self.gamma,
            c: self.c,
            d: self.d,
            y0: self.y0,
            a: self.a,
            rho: self.rho,
            sign: self.sign,
        };
        Ok(builtin(which, params)?)
    }

    fn echo(&self) -> serde_json::Value {
        serde_json::json!({
            "model": self.model,
            "gamma": self.gamma,
            "c": self.c,
            "d": self.d,
            "y0": self.y0,
            "a": self.a,
            "rho": self.rho,
            "sign": self.sign,
        })
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Sample size.
    #[arg(long)]
    n: usize,
    /// RNG seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EstimateArgs {
    /// Input CSV: one value >= 1 per line, '#' comments ignored, optional
    /// header line 'x'.
    #[arg(long)]
    input: PathBuf,
    /// Wide window size.
    #[arg(long)]
    k: usize,
    /// Narrow window size (1 <= ell < k).
    #[arg(long)]
    ell: usize,
    /// Exponent of the normalizing power of n.
    #[arg(long, default_value_t = 0.0)]
    nu: f64,
    /// Upper endpoint on the log scale; enables the endpoint-ratio entry.
    #[arg(long)]
    y0: Option<f64>,
    /// Output JSON path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Verification target: T3.1 T3.2 T4.1 T4.2 T5.1 C5.1 T6.1 T6.2 T6.3
    /// T6.4 T6.5 T7.1 ThmB
    #[arg(long)]
    theorem: String,
    #[command(flatten)]
    model: ModelArgs,
    /// Sample size per replicate.
    #[arg(long)]
    n: Option<usize>,
    /// Wide window: an integer or a rate like 'n^0.6'.
    #[arg(long)]
    k: Option<String>,
    /// Narrow window: an integer or a rate like 'n^0.55'.
    #[arg(long)]
    ell: Option<String>,
    /// Exponent of the normalizing power of n.
    #[arg(long)]
    nu: Option<f64>,
    /// Number of replicates.
    #[arg(long)]
    reps: Option<usize>,
    /// RNG seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Report JSON path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BridgeOracleArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Window for the empirical cross-check: sample-size scale.
    #[arg(long, default_value_t = 1_000_000)]
    empirical_n: usize,
    #[arg(long, default_value_t = 1000)]
    empirical_k: usize,
    #[arg(long, default_value_t = 10)]
    empirical_ell: usize,
    /// Functional draws for the cross-check (0 disables it).
    #[arg(long, default_value_t = 10_000)]
    draws: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Report JSON path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DetectArgs {
    /// Input CSV (same format as `estimate`).
    #[arg(long)]
    input: PathBuf,
    /// Wide-window rate exponent.
    #[arg(long, default_value_t = 0.7)]
    alpha: f64,
    /// Narrow-window rate exponent (0.5 < beta < alpha).
    #[arg(long, default_value_t = 0.55)]
    beta: f64,
    /// Auxiliary rate exponent in (0, 0.5).
    #[arg(long, default_value_t = 0.3)]
    delta: f64,
    /// Output JSON path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprintln!("{e}");
            return ExitCode::from(1);
        }
    };

    if let Ok(threads) = std::env::var("EVT_THREADS") {
        if let Ok(t) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
        }
    }

    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cmd: Command) -> anyhow::Result<ExitCode> {
    match cmd {
        Command::Simulate(args) => simulate(args),
        Command::Estimate(args) => estimate(args),
        Command::Verify(args) => verify(args),
        Command::BridgeOracle(args) => bridge_oracle(args),
        Command::Detect(args) => run_detect(args),
    }
}

fn simulate(args: SimulateArgs) -> anyhow::Result<ExitCode> {
    let model = args.model.build()?;
    let mut man = RunManifest::start(
        "simulate",
        Some(args.seed),
        serde_json::json!({
            "model": args.model.echo(),
            "n": args.n,
            "seed": args.seed,
        }),
    );
    let batch = model.draw(args.n, args.seed)?;
    man.finish(&[args.out.display().to_string()]);
    io::write_sample_csv(&args.out, batch.x_sorted(), &man)?;
    eprintln!("wrote {} values to {}", args.n, args.out.display());
    Ok(ExitCode::SUCCESS)
}

fn estimate(args: EstimateArgs) -> anyhow::Result<ExitCode> {
    let values = io::read_sample_csv(&args.input)?;
    let batch = SampleBatch::from_values(&values)?;
    let mut window = estimators::WindowConfig::new(args.k, args.ell, args.nu);
    if let Some(y0) = args.y0 {
        window = window.with_y0(y0);
    }
    let stats = estimators::stat_vector(&batch, &window)?;
    let mut man = RunManifest::start(
        "estimate",
        None,
        serde_json::json!({
            "input": args.input.display().to_string(),
            "k": args.k, "ell": args.ell, "nu": args.nu, "y0": args.y0,
        }),
    );
    man.finish(&io::path_list(&args.out));
    // Flat statistic keys plus the embedded manifest.
    let mut doc = serde_json::to_value(&stats)?;
    doc.as_object_mut()
        .unwrap()
        .insert("manifest".into(), serde_json::to_value(&man)?);
    io::emit_json(&args.out, &doc)?;
    Ok(ExitCode::SUCCESS)
}

/// Default configuration for each verification target; flags override.
fn verify_defaults(target: TheoremTarget) -> (Builtin, f64, usize, &'static str, &'static str, f64, usize) {
    // (model, gamma, n, k_rule, ell_rule, nu, reps)
    match target {
        TheoremTarget::T3_1 => (Builtin::Pareto, 1.0, 100_000, "n^0.6", "1", 0.0, 400),
        TheoremTarget::T3_2 => (Builtin::Pareto, 1.0, 100_000, "n^0.6", "1", 0.0, 500),
        TheoremTarget::T4_1 => (Builtin::Pareto, 1.0, 100_000, "n^0.6", "1", 0.0, 400),
        TheoremTarget::T4_2 => (Builtin::Pareto, 1.0, 100_000, "n^0.6", "1", 0.0, 400),
        TheoremTarget::T5_1 => (Builtin::Gumbel, 1.0, 100_000, "n^0.7", "2", 0.0, 2000),
        TheoremTarget::C5_1 => (Builtin::Gumbel, 1.0, 100_000, "n^0.7", "2", 0.3, 2000),
        TheoremTarget::T6_1 => (Builtin::Pareto, 1.0, 100_000, "n^0.6", "1", 0.0, 400),
        TheoremTarget::T6_2 => (Builtin::Pareto, 1.0, 100_000, "n^0.6", "1", 0.0, 400),
        TheoremTarget::T6_3 => (Builtin::Pareto, 1.0, 100_000, "n^0.7", "2", 0.3, 1000),
        TheoremTarget::T6_4 => (Builtin::Pareto, 1.0, 100_000, "n^0.7", "n^0.55", 0.0, 400),
        TheoremTarget::T6_5 => (Builtin::Pareto, 1.0, 100_000, "n^0.7", "n^0.55", 0.0, 400),
        TheoremTarget::T7_1 => (Builtin::Pareto, 1.0, 100_000, "n^0.7", "n^0.55", 0.3, 400),
        TheoremTarget::ThmB => (Builtin::Pareto, 1.0, 100_000, "n^0.7", "n^0.55", 0.275, 100),
    }
}

fn verify(args: VerifyArgs) -> anyhow::Result<ExitCode> {
    let target = TheoremTarget::parse(&args.theorem)
        .ok_or_else(|| anyhow::anyhow!("unknown verification target '{}'", args.theorem))?;
    let (def_model, def_gamma, def_n, def_k, def_ell, def_nu, def_reps) = verify_defaults(target);
    let mut model_args = args.model.clone();
    // Apply target defaults only where the user left the generic defaults.
    if model_args.model == "pareto" && def_model != Builtin::Pareto {
        model_args.model = def_model.name().to_string();
    }
    let _ = def_gamma;
    let model = model_args.build()?;
    let config = ExperimentConfig {
        model,
        n: args.n.unwrap_or(def_n),
        k_rule: SizeRule::parse(args.k.as_deref().unwrap_or(def_k))?,
        ell_rule: SizeRule::parse(args.ell.as_deref().unwrap_or(def_ell))?,
        nu: args.nu.unwrap_or(def_nu),
        reps: args.reps.unwrap_or(def_reps),
        seed: args.seed,
        target,
    };
    let mut man = RunManifest::start(
        "verify",
        Some(args.seed),
        serde_json::json!({
            "theorem": target.id(),
            "model": model_args.echo(),
            "n": config.n,
            "k": config.k_rule.to_string(),
            "ell": config.ell_rule.to_string(),
            "nu": config.nu,
            "reps": config.reps,
            "seed": config.seed,
        }),
    );
    let report = montecarlo::run(&config)?;
    man.finish(&io::path_list(&args.out));
    print_report_table(&report);
    let doc = serde_json::json!({ "manifest": man, "report": report });
    io::emit_json_to(&args.out, &doc)?;
    if report.pass {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(2))
    }
}

fn print_report_table(report: &evt_core::McReport) {
    let c = &report.config;
    println!(
        "target {}  model {}  n={} k={} ell={} nu={}  reps={} (excluded {})  seed={}",
        c.target, c.model, c.n, c.k, c.ell, c.nu, report.replicates_used, report.excluded, c.seed
    );
    for w in &report.warnings {
        println!("  note: {w}");
    }
    for s in &report.stats {
        println!(
            "  {:<28} limit {:<18} mean {:+.4}  var {:.4}  skew {:+.3}  ks {}",
            s.name,
            s.limit_label,
            s.emp_mean,
            s.emp_variance,
            s.emp_skewness,
            s.ks_distance
                .map(|k| format!("{k:.4}"))
                .unwrap_or_else(|| "-".into()),
        );
        for v in &s.verdicts {
            println!(
                "      {:<26} {:>12.6} vs {:>12.6}  {}",
                v.check,
                v.value,
                v.bound,
                if v.pass { "pass" } else { "FAIL" }
            );
        }
    }
    if let Some(j) = &report.joint {
        println!(
            "  cross-block: {} pairs, max |cov|/se = {:.3}  {}",
            j.cross.len(),
            j.max_abs_over_se,
            if j.pass { "pass" } else { "FAIL" }
        );
    }
    println!("VERDICT: {}", if report.pass { "PASS" } else { "FAIL" });
}

fn bridge_oracle(args: BridgeOracleArgs) -> anyhow::Result<ExitCode> {
    let model = args.model.build()?;
    let empirical = if args.draws > 0 {
        Some((
            args.empirical_n,
            args.empirical_k,
            args.empirical_ell,
            args.draws,
            args.seed,
        ))
    } else {
        None
    };
    let mut man = RunManifest::start(
        "bridge-oracle",
        Some(args.seed),
        serde_json::json!({
            "model": args.model.echo(),
            "empirical_n": args.empirical_n,
            "empirical_k": args.empirical_k,
            "empirical_ell": args.empirical_ell,
            "draws": args.draws,
            "seed": args.seed,
        }),
    );
    let report = discrepancy::build_report(&model, empirical)?;
    man.finish(&io::path_list(&args.out));
    println!(
        "oracle base (model {}, gamma {}): Var(N0)={:.5} Var(N3)={:.5} Cov(N0,N3)={:.5} Cov(N0,N2)={:.5} Cov(N3,N2)={:.5}",
        report.model,
        report.gamma,
        report.oracle_base.var_n0,
        report.oracle_base.var_n3,
        report.oracle_base.cov_n0_n3,
        report.oracle_base.cov_n0_n2,
        report.oracle_base.cov_n3_n2,
    );
    for arb in &report.arbitrations {
        println!(
            "  {}: oracle {:.5} -> winner: {}",
            arb.quantity, arb.oracle_value, arb.winner
        );
    }
    for cmp in &report.matrix_comparisons {
        println!(
            "  {}: {} tabulated-vs-reconstructed mismatches (dim {})",
            cmp.block, cmp.mismatches, cmp.dim
        );
    }
    if let Some(e) = &report.empirical {
        println!(
            "  empirical cross-check ({} draws): {}",
            e.draws,
            if e.all_within {
                "all entries within 3 SE"
            } else {
                "entries OUTSIDE 3 SE"
            }
        );
    }
    let doc = serde_json::json!({ "manifest": man, "report": report });
    io::emit_json_to(&args.out, &doc)?;
    Ok(ExitCode::SUCCESS)
}

fn run_detect(args: DetectArgs) -> anyhow::Result<ExitCode> {
    let values = io::read_sample_csv(&args.input)?;
    let batch = SampleBatch::from_values(&values)?;
    let result = detect::detect(&batch, args.alpha, args.beta, args.delta)?;
    let mut man = RunManifest::start(
        "detect",
        None,
        serde_json::json!({
            "input": args.input.display().to_string(),
            "alpha": args.alpha, "beta": args.beta, "delta": args.delta,
        }),
    );
    man.finish(&io::path_list(&args.out));
    let doc = serde_json::json!({ "manifest": man, "result": result });
    io::emit_json(&args.out, &doc)?;
    Ok(ExitCode::SUCCESS)
}
