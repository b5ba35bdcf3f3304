use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use hkit_core::experiment::{run, Kind, RunConfig};
use hkit_core::Error;

#[derive(Parser)]
#[command(name = "hkit", version, about = "Numerical checks for multidimensional Hausdorff operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compare the L_A, L* and L2 kernel conditions.
    Norms(RunArgs),
    /// Apply the operator to a sampled function.
    Apply(RunArgs),
    /// Check the L1 bound.
    VerifyL1(RunArgs),
    /// Check the H1 bound through the Riesz surrogate.
    VerifyH1(RunArgs),
    /// Check atom conditions, optionally after a linear change of variables.
    AtomCheck(RunArgs),
    /// Sweep one config parameter and tabulate the three conditions.
    Sweep(RunArgs),
    /// Search for matrices with spectral norm above the ell-norm.
    CounterexampleSearch(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 lets rayon decide.
    #[arg(long, env = "HKIT_THREADS")]
    threads: Option<usize>,
}

impl Command {
    fn split(self) -> (Kind, RunArgs) {
        match self {
            Command::Norms(a) => (Kind::Norms, a),
            Command::Apply(a) => (Kind::Apply, a),
            Command::VerifyL1(a) => (Kind::VerifyL1, a),
            Command::VerifyH1(a) => (Kind::VerifyH1, a),
            Command::AtomCheck(a) => (Kind::AtomCheck, a),
            Command::Sweep(a) => (Kind::Sweep, a),
            Command::CounterexampleSearch(a) => (Kind::CounterexampleSearch, a),
        }
    }
}

fn load(kind: Kind, args: &RunArgs) -> Result<RunConfig, Error> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| Error::ConfigInvalid(format!("cannot read {}: {e}", args.config.display())))?;
    let mut value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::ConfigInvalid(format!("not valid JSON: {e}")))?;
    if let (Some(seed), Some(obj)) = (args.seed, value.as_object_mut()) {
        obj.insert("seed".into(), seed.into());
    }
    let config = RunConfig::from_value(value)?;
    if config.kind != kind {
        return Err(Error::ConfigInvalid(format!(
            "config kind is {} but the subcommand is {}",
            config.kind.name(),
            kind.name()
        )));
    }
    Ok(config)
}

fn execute(kind: Kind, args: &RunArgs) -> Result<i32, Error> {
    let config = load(kind, args)?;
    let started = Instant::now();
    let output = match args.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::ConfigInvalid(format!("cannot start {n} threads: {e}")))?
            .install(|| run(&config))?,
        None => run(&config)?,
    };
    let elapsed = started.elapsed().as_secs_f64();
    output.write(&args.out)?;
    let timing = serde_json::json!({ "kind": kind.name(), "seconds": elapsed });
    std::fs::write(args.out.join("timing.json"), format!("{timing}\n"))?;
    for check in &output.report.checks {
        let r = &check.report;
        println!(
            "{} {}: lhs={:e} rhs={:e} ratio={:e}",
            if r.pass { "PASS" } else { "FAIL" },
            check.name,
            r.lhs,
            r.rhs,
            r.ratio
        );
    }
    println!(
        "{} {} checks, report in {}",
        kind.name(),
        output.report.checks.len(),
        args.out.join("report.json").display()
    );
    Ok(output.report.exit_code())
}

fn main() -> ExitCode {
    let (kind, args) = Cli::parse().command.split();
    match execute(kind, &args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
