//! Runs a CLI command from a TOML configuration in-process.
//!
//! cargo run --release --example config_experiment -- <config.toml> [price|greeks|simulate|converge|compare-leland]

use robust_hedge::cli::{execute, Command};
use robust_hedge::config::parse_config;

fn main() -> robust_hedge::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let text = match args.first() {
        Some(p) => std::fs::read_to_string(p)?,
        None => "[run]\npaths = 50\n[grid]\nsteps = 5000\n".to_string(),
    };
    let command = match args.get(1).map(String::as_str).unwrap_or("simulate") {
        "price" => Command::Price,
        "greeks" => Command::Greeks,
        "converge" => Command::Converge,
        "compare-leland" => Command::CompareLeland,
        _ => Command::Simulate,
    };
    let mut cfg = parse_config(&text)?;
    if args.is_empty() {
        cfg.output.dir = std::env::temp_dir().join("robust_hedge_example");
    }
    let status = execute(command, &cfg, None)?;
    for p in &status.artifacts {
        println!("{}", p.display());
    }
    println!("alarms: {}", status.alarms);
    Ok(())
}
