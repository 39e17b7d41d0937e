use std::path::PathBuf;
use std::process::ExitCode;

use boussinesq_core::analyticity::{fit_radius_shell, NOISE_FLOOR};
use boussinesq_core::bounds::verify_combinatorial;
use boussinesq_core::harness::{execute, load_config, load_report, read_spectrum_csv, recalibrate, self_test, Verdict};
use boussinesq_core::Error;
use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

/// Inviscid Boussinesq solver and analyticity diagnostics.
#[derive(Parser, Debug)]
#[command(name = "boussinesq", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run an experiment and write its outputs to the configured directory.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Enumerate the combinatorial constant up to a given order.
    VerifyLemma {
        #[arg(long)]
        order_max: usize,
        #[arg(long)]
        dim: usize,
    },
    /// Shell fit of a stored `shell_radius,amplitude` spectrum.
    EstimateRadius {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = NOISE_FLOOR)]
        noise_floor: f64,
    },
    /// Re-run the constant search on a stored report.
    Calibrate {
        #[arg(long)]
        report: PathBuf,
    },
    /// Run the built-in closed-form checks.
    SelfTest,
}

fn run(command: Command) -> Result<bool, Error> {
    match command {
        Command::Run { config } => {
            let config = load_config(&config)?;
            let (report, dir) = execute(&config)?;
            let count = |v: Verdict| report.verdicts.iter().filter(|s| s.verdict == v).count();
            println!("termination = {:?}", report.termination);
            println!("output_dir = {}", dir.display());
            println!("snapshots = {}", report.records.len());
            match &report.calibration {
                Some(c) => println!("c0 = {}\nc1 = {}", c.c0, c.c1),
                None => println!("calibration = failed"),
            }
            println!(
                "verdicts = {} holds, {} violated, {} inconclusive",
                count(Verdict::Holds),
                count(Verdict::Violated),
                count(Verdict::Inconclusive)
            );
            Ok(true)
        }
        Command::VerifyLemma { order_max, dim } => {
            let report = verify_combinatorial::<f64>(order_max, dim)?;
            for o in &report.orders {
                let growth = o.growth.map_or("na".to_string(), |g| format!("{g:.6}"));
                println!("order {:>2}  max = {:.9}  C = {:.9}  growth = {growth}", o.order, o.order_max, o.empirical_c);
            }
            println!("empirical_c = {}", report.empirical_c);
            println!("saturated = {}", report.saturated);
            Ok(true)
        }
        Command::EstimateRadius { input, noise_floor } => {
            let spectrum = read_spectrum_csv(&input)?;
            let fit = fit_radius_shell(&spectrum, noise_floor)?;
            println!("tau = {}", fit.tau);
            match fit.r_squared {
                Some(r2) => println!("r_squared = {r2}"),
                None => println!("r_squared = na"),
            }
            println!("shells_used = {}", fit.shells_used);
            println!("degraded = {}", fit.degraded);
            Ok(true)
        }
        Command::Calibrate { report } => {
            let c = recalibrate(&load_report(&report)?)?;
            println!("c0 = {}\nc1 = {}\nc0_fit = {}", c.c0, c.c1, c.c0_fit);
            Ok(true)
        }
        Command::SelfTest => {
            let outcomes = self_test();
            for o in &outcomes {
                match o.passed {
                    true => println!("ok    {}", o.name),
                    false => println!("FAIL  {}: {}", o.name, o.detail),
                }
            }
            let failed = outcomes.iter().filter(|o| !o.passed).count();
            println!("{} passed, {failed} failed", outcomes.len() - failed);
            Ok(failed == 0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e)
            if matches!(
                e.kind(),
                ErrorKind::DisplayHelp
                    | ErrorKind::DisplayVersion
                    | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand
            ) =>
        {
            e.exit()
        }
        Err(e) => {
            let first = e.to_string();
            let line = first.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("error: usage: {line}");
            return ExitCode::from(2);
        }
    };
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: self_test_failed: at least one check failed");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {}: {}", e.category(), e.to_string().replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}
