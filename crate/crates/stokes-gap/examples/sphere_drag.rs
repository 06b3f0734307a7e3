//! Drag on a translating sphere inside a spherical container, compared with
//! the concentric-sphere correction and with Stokes' law for a distant wall.

use stokes_gap::geometry::Part;
use stokes_gap::stokes_mfs::{concentric_drag_factor, BoundaryCondition, MfsSolver, Scene, SolverParams};
use std::f64::consts::PI;

fn main() -> stokes_gap::Result<()> {
    let params = SolverParams::default();
    for rho in [4.0, 8.0, 32.0, 200.0] {
        let solver = MfsSolver::new(Scene::single_sphere(1.0, rho)?, params.clone())?;
        let s = solver.solve_dirichlet(&BoundaryCondition::rigid_on(Part::D1, 3))?;
        let drag = s.solution.moments(Part::D1)[2];
        let stokes = 6.0 * PI * params.mu;
        println!(
            "rho = {rho:>5}: drag {drag:.8}  /6pi = {:.6}  oracle {:.6}  residual {:.1e}",
            drag / stokes,
            concentric_drag_factor(1.0 / rho),
            s.residual.max
        );
    }
    Ok(())
}
