// Runs a scenario file the same way the `tunneltime` binary does, without
// writing any files. Defaults to the bundled two-step scenario.
//
// cargo run --example run_scenario -- crates/core/examples/scenarios/attoclock_scan.toml

use std::path::PathBuf;

use tunnel_traversal::cli::{load_config, run};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args_os().nth(1).map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/scenarios/two_step.toml")
    });
    let config = load_config(&path)?;
    let outcome = run(&config, &config.compute.tasks);
    print!("{}", outcome.table());
    if let Some(scan) = &outcome.scan {
        print!("\n{}", scan.render());
    }
    if let Some(oracle) = &outcome.oracle {
        print!("\n{}", oracle.text);
    }
    println!("exit status: {:?}", outcome.exit());
    Ok(())
}
