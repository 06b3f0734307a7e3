//! Force- and torque-free inclusions driven by linear container data.

use stokes_gap::geometry::GapGeometry;
use stokes_gap::rigid_system::cauchy_stress;
use stokes_gap::stokes_mfs::{eval_flow, MfsSolver, SolverParams, SurfaceData, ANTISYM_DEMO};

fn main() -> stokes_gap::Result<()> {
    let geom = GapGeometry::new(3, 0.05)?;
    let solver = MfsSolver::gap(&geom, SolverParams::default())?;
    println!("{} Stokeslets", solver.disc.sources.len());
    let s = solver.solve_constrained(&SurfaceData::Linear(ANTISYM_DEMO))?;
    println!("held-out boundary residual {:.2e}, converged {}", s.residual.max, s.converged);
    for (i, c) in s.constants.iter().enumerate() {
        println!("C_{}: {:?}", i + 1, c.map(|v| (v * 1e9).round() / 1e9));
    }
    println!("force/torque residuals {:?}", s.force_torque_residual);
    for z in [-0.02, 0.0, 0.02] {
        let f = eval_flow(&s.solution, &[0.0, 0.0, z])?;
        println!("x3 = {z:+.2}: u = {:?}", f.velocity.map(|v| (v * 1e6).round() / 1e6));
    }
    let sigma = cauchy_stress(&s.solution, &[0.0; 3])?;
    println!("|sigma(0)| = {:.4e} (pressure gauge {:.4e})", sigma.norm(), sigma.gauge);
    Ok(())
}
