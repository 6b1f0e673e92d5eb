use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use conewave_cli::{ladder, load_config, run, verify, CliError, FAMILIES};

#[derive(Parser)]
#[command(name = "conewave", version, about = "Inward/outward energy experiments for the defocusing wave equation")]
struct Cli {
    /// Caps the worker threads (also read from CONEWAVE_THREADS).
    #[arg(long, env = "CONEWAVE_THREADS", global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve one configuration and write its artifacts.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides output_dir from the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rerun a configuration at h, h/2, h/4, … and report observed orders.
    Ladder {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 3)]
        levels: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exit 0 iff every check in a report.json or convergence.json passes.
    Verify { report: PathBuf },
    /// Print the available initial-data families.
    ListDataFamilies,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 || rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            eprintln!("configuration error: invalid thread count {n}");
            return ExitCode::from(2);
        }
    }
    match dispatch(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(command: Command) -> Result<bool, CliError> {
    match command {
        Command::Run { config, out } => {
            let cfg = load_config(&config)?;
            let dir = out.unwrap_or_else(|| cfg.output_dir.clone());
            let report = run(&cfg, &dir)?;
            for c in report.checks.iter().filter(|c| !c.pass) {
                println!("FAIL {}: {} > {}", c.name, c.lhs, c.rhs);
            }
            println!("{} checks, {} failed, artifacts in {}", report.checks.len(), report.checks.iter().filter(|c| !c.pass).count(), dir.display());
            Ok(report.pass)
        }
        Command::Ladder { config, levels, out } => {
            let cfg = load_config(&config)?;
            let dir = out.unwrap_or_else(|| cfg.output_dir.clone());
            let report = ladder(&cfg, levels, &dir)?;
            for o in &report.orders {
                let orders: Vec<String> = o.orders.iter().map(|x| format!("{x:.2}")).collect();
                let req = o.required.map(|q| format!(" (need >= {q})")).unwrap_or_default();
                println!("{} {}: orders [{}]{req}", if o.pass { "PASS" } else { "FAIL" }, o.quantity, orders.join(", "));
            }
            Ok(report.pass)
        }
        Command::Verify { report } => {
            let verdicts = verify(&report)?;
            for (name, _) in verdicts.iter().filter(|v| !v.1) {
                println!("FAIL {name}");
            }
            let ok = verdicts.iter().all(|v| v.1);
            println!("{} of {} checks pass", verdicts.iter().filter(|v| v.1).count(), verdicts.len());
            Ok(ok)
        }
        Command::ListDataFamilies => {
            for (name, params, about) in FAMILIES {
                println!("{name}\n  parameters: {params}\n  {about}");
            }
            Ok(true)
        }
    }
}
