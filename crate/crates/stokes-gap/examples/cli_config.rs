//! Parse a run configuration and drive the command-line front end in-process.

use stokes_gap::cli::main_with_args;
use stokes_gap::config::parse_config;

fn main() -> stokes_gap::Result<()> {
    let text = "[geometry]\neps = 0.02\n[mesh]\nn_base = 60\n[solver]\ntol = 1e-4\n[experiment]\nphi = psi5\n";
    let cfg = parse_config(text)?;
    println!("eps {} n_base {} phi {}", cfg.geometry.eps, cfg.solver.n_base, cfg.experiment.phi);
    println!("{}", parse_config("eps = 0.7").unwrap_err());
    let dir = std::env::temp_dir().join("stokes-gap-example");
    let out = dir.join("aux.csv");
    let code = main_with_args(["stokes-gap", "verify-aux", "--points", "500", "--out", out.to_str().unwrap()]);
    println!("verify-aux exit code {code}, table in {}", out.display());
    Ok(())
}
