//! `rfw`: batch runner for the Ritus-basis Foldy-Wouthuysen checks.

mod config;
mod report;
mod suites;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use log::info;
use serde_json::json;

use config::{Overrides, RunConfig};
use report::Outcome;
use rfw_core::ritus::SliceSolution;
use suites::Context;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Command {
    Spectrum,
    VerifyRitus,
    FwExact,
    FwSeries,
    Propagator,
    All,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::VerifyRitus => "verify-ritus",
            Command::FwExact => "fw-exact",
            Command::FwSeries => "fw-series",
            Command::Propagator => "propagator",
            Command::All => "all",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "rfw", version, about = "Ritus-basis Foldy-Wouthuysen verification runner")]
struct Cli {
    command: Command,
    /// JSON run configuration; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Product e·B of charge and field strength.
    #[arg(long = "eB", allow_hyphen_values = true)]
    eb: Option<f64>,
    #[arg(long)]
    mass: Option<f64>,
    #[arg(long = "py", allow_hyphen_values = true)]
    py: Option<f64>,
    /// Highest Landau level n_max.
    #[arg(long)]
    levels: Option<usize>,
    #[arg(long = "grid-n")]
    grid_n: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

const EXIT_FAIL: u8 = 1;
const EXIT_CONFIG: u8 = 2;

fn configure_threads() -> Result<(), String> {
    if let Ok(v) = std::env::var("RFW_THREADS") {
        let n: usize = v.parse().map_err(|_| format!("RFW_THREADS must be a positive integer, got '{v}'"))?;
        if n == 0 {
            return Err("RFW_THREADS must be at least 1".into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(Outcome, RunConfig), String> {
    configure_threads()?;
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    cfg.apply(&Overrides {
        eb: cli.eb,
        mass: cli.mass,
        p_y: cli.py,
        levels: cli.levels,
        grid_n: cli.grid_n,
        out: cli.out.clone(),
    });
    cfg.validate()?;
    let slice = cfg.slice()?;
    let rep = cfg.rep()?;
    info!("solving channels for n_max = {}", cfg.n_max);
    let sol = SliceSolution::solve(&slice, &rep, cfg.n_max, &cfg.grid_config()).map_err(|e| e.to_string())?;
    let ctx = Context::new(cfg.clone(), sol);
    let mut out = Outcome::default();
    let steps: &[fn(&Context, &mut Outcome) -> rfw_core::Result<()>] = match cli.command {
        Command::Spectrum => &[suites::spectrum],
        Command::VerifyRitus => &[suites::verify_ritus],
        Command::FwExact => &[suites::fw_exact],
        Command::FwSeries => &[suites::fw_series],
        Command::Propagator => &[suites::propagator],
        Command::All => &[
            suites::spectrum,
            suites::verify_ritus,
            suites::fw_exact,
            suites::fw_series,
            suites::propagator,
        ],
    };
    for step in steps {
        step(&ctx, &mut out).map_err(|e| e.to_string())?;
    }
    Ok((out, cfg))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (outcome, cfg) = match run(&cli) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("rfw: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let mut echo = serde_json::to_value(&cfg).expect("config serializes");
    if let Some(obj) = echo.as_object_mut() {
        // the destination directory does not affect any result
        obj.remove("output");
    }
    let report = outcome.report(cli.command.name(), json!(echo));
    let dir = cfg.output_dir();
    if let Err(e) = outcome.write(&dir, &report) {
        eprintln!("rfw: cannot write {}: {e}", dir.display());
        return ExitCode::from(EXIT_CONFIG);
    }
    for c in &outcome.checks {
        println!(
            "{} {:<32} {:.3e}",
            if c.passed() { "PASS" } else { "FAIL" },
            c.name,
            c.value
        );
    }
    if outcome.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAIL)
    }
}
