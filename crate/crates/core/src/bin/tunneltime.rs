use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use tunnel_traversal::cli::{apply_overrides, load_config, run, Exit};

/// Barrier traversal times for a scenario file.
#[derive(Parser)]
#[command(version)]
struct Args {
    /// Scenario file (TOML).
    config: PathBuf,
    /// Task to run; repeatable, overrides the scenario's task list.
    #[arg(long = "task")]
    tasks: Vec<String>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Relative tolerance for all quadratures.
    #[arg(long)]
    rel_tol: Option<f64>,
    /// Suppress the summary table.
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(Exit::Invalid as u8);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    let prepared = load_config(&args.config).and_then(|mut config| {
        let tasks = apply_overrides(&mut config, &args.tasks, args.rel_tol)?;
        Ok((config, tasks))
    });
    let (config, tasks) = match prepared {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(Exit::Invalid as u8);
        }
    };
    let outcome = run(&config, &tasks);
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    if let Err(e) = outcome.write(&args.out) {
        eprintln!("error: {e}");
        return ExitCode::from(Exit::Invalid as u8);
    }
    if !args.quiet {
        print!("{}", outcome.table());
        if let Some(o) = &outcome.oracle {
            println!("oracle: max relative deviation {:.3e}", o.max_relative_deviation);
        }
    }
    ExitCode::from(outcome.exit() as u8)
}
