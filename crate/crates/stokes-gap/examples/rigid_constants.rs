//! Rigid constants by the decomposition system and by the direct constrained
//! solve, plus the coupling-matrix structure.

use stokes_gap::geometry::{GapGeometry, Part};
use stokes_gap::rigid_system::{tilde_b, two_route, M3};
use stokes_gap::stokes_mfs::{MfsSolver, SolverParams, SurfaceData, ANTISYM_DEMO};

fn main() -> stokes_gap::Result<()> {
    let geom = GapGeometry::new(3, 0.05)?;
    let solver = MfsSolver::gap(&geom, SolverParams::default())?;
    let tr = two_route(&solver, &SurfaceData::Linear(ANTISYM_DEMO), 1e6)?;
    let cm = &tr.coupling;
    println!("a_11 diagonal: {:?}", cm.a11_diag().map(|v| (v * 1e4).round() / 1e4));
    println!("a_11 eigenvalues: {:?}", cm.a11_eigenvalues.iter().map(|v| (v * 1e4).round() / 1e4).collect::<Vec<_>>());
    println!("reciprocity defect {:.1e}, symmetry-pattern defect {:.1e}", cm.symmetry_defect, cm.symmetry_pattern_defect());
    println!("alpha  C1 (direct)      C1 (system)      C1 - C2");
    for a in 0..M3 {
        println!(
            "{:>5}  {:+.9e}  {:+.9e}  {:+.3e}",
            a + 1,
            tr.direct.constants[0][a],
            tr.decomposition.c[0][a],
            tr.direct.constants[0][a] - tr.direct.constants[1][a]
        );
    }
    println!("route gap {:.2e}", tr.route_gap);
    println!("b~_1 = {:?}", tilde_b(cm, &tr.decomposition, Part::D1)?.map(|v| (v * 1e6).round() / 1e6));
    Ok(())
}
