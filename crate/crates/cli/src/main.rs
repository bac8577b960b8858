use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use mckayhall_core::pipeline::{emit_report, parse_checks, run, RunConfig, Stage};
use mckayhall_core::Error;

#[derive(Parser)]
#[command(name = "mckayhall", version, about = "McKay data, Kleinian Tor checks and Hall algebra Serre checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the selected stages (all by default).
    Run(Common),
    /// Group, character table and McKay graph only.
    Mckay(Common),
    /// Point ideals and Koszul Tor on the Kleinian singularity.
    TorCheck(Common),
    /// Serre relations in the Hall algebra of the McKay graph.
    SerreCheck(Common),
    /// Hall composition dimensions against the Serre-presented positive part.
    DimsCompare(Common),
}

#[derive(Args)]
struct Common {
    /// Family: `A n`, `D n`, `E6`, `E7` or `E8` (`A3` also accepted).
    #[arg(long, num_args = 1..=2, value_name = "FAMILY")]
    family: Option<Vec<String>>,
    /// JSON config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    modulus: Option<u32>,
    /// Comma-separated interpolation primes.
    #[arg(long, value_delimiter = ',')]
    hall_primes: Option<Vec<u32>>,
    #[arg(long)]
    held_out: Option<u32>,
    /// `key=value` list: poly, hall, positive, variety, group.
    #[arg(long)]
    caps: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for report.json and CSV tables.
    #[arg(long)]
    out: Option<PathBuf>,
    /// `all` or a comma-separated subset of group, mckay, tor, serre, dims
    /// (only for `run`).
    #[arg(long)]
    checks: Option<String>,
}

fn build_config(c: &Common, fixed: Option<&[Stage]>) -> Result<RunConfig, Error> {
    let mut cfg = match &c.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(f) = &c.family {
        cfg.family = f.join(" ");
    }
    if let Some(p) = c.modulus {
        cfg.modulus = Some(p);
    }
    if let Some(p) = &c.hall_primes {
        cfg.hall_primes = p.clone();
    }
    if let Some(h) = c.held_out {
        cfg.held_out = h;
    }
    if let Some(caps) = &c.caps {
        cfg.caps.apply(caps)?;
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(o) = &c.out {
        cfg.out = Some(o.clone());
    }
    match (fixed, &c.checks) {
        (Some(_), Some(_)) => return Err(Error::Config("--checks is only accepted by `run`".into())),
        (Some(stages), None) => cfg.checks = stages.to_vec(),
        (None, Some(list)) => cfg.checks = parse_checks(list)?,
        (None, None) => {}
    }
    Ok(cfg)
}

fn execute(cfg: &RunConfig) -> anyhow::Result<bool> {
    let report = run(cfg)?;
    if let Some(dir) = &cfg.out {
        emit_report(&report, dir).with_context(|| format!("writing artifacts to {}", dir.display()))?;
    }
    let family = report.group.as_ref().map_or(cfg.family.clone(), |g| g.family.clone());
    let modulus = report.config.modulus.unwrap_or_default();
    println!("{family} over F_{modulus}: {} checks", report.checks.len());
    for c in report.failed_checks() {
        println!("FAIL {}: {}", c.name, c.detail);
    }
    println!("verdict: {}", report.verdict);
    Ok(report.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    use Stage::*;
    let (common, fixed): (&Common, Option<&[Stage]>) = match &cli.command {
        Command::Run(c) => (c, None),
        Command::Mckay(c) => (c, Some(&[Group, Mckay])),
        Command::TorCheck(c) => (c, Some(&[Group, Mckay, Tor])),
        Command::SerreCheck(c) => (c, Some(&[Group, Mckay, Serre])),
        Command::DimsCompare(c) => (c, Some(&[Group, Mckay, Dims])),
    };
    let cfg = match build_config(common, fixed).and_then(|c| c.validate().map(|_| c)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match execute(&cfg) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            let usage = matches!(e.downcast_ref::<Error>(), Some(Error::Config(_)));
            ExitCode::from(if usage { 2 } else { 1 })
        }
    }
}
