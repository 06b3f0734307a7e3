//! Boundary meshes of the two inclusions and the container, with the
//! ring clustering near the gap.

use stokes_gap::geometry::{build_boundary_mesh, GapGeometry, Part};

fn main() -> stokes_gap::Result<()> {
    for eps in [0.1, 0.01, 0.001] {
        let geom = GapGeometry::new(3, eps)?;
        for part in [Part::D1, Part::D2, Part::Outer] {
            let mesh = build_boundary_mesh(&geom, part, 80, 1.0)?;
            let exact = match part {
                Part::Outer => 4.0 * std::f64::consts::PI * geom.rho_d.powi(2),
                _ => 4.0 * std::f64::consts::PI * geom.radius().powi(2),
            };
            println!(
                "eps = {eps:<6} {:<5} rings {:>4}  nodes {:>6}  min spacing {:.3e}  area error {:.2e}",
                part.name(),
                mesh.rings.len(),
                mesh.nodes.len(),
                mesh.clustering.min_spacing,
                (mesh.area() - exact).abs() / exact
            );
            for w in &mesh.warnings {
                println!("  warning: {w}");
            }
        }
    }
    Ok(())
}
