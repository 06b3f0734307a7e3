//! Evaluate the closed-form auxiliary fields in the neck and report their
//! Stokes residual, divergence and the cancellation identity.

use stokes_gap::asymptotics::cancellation_defect;
use stokes_gap::aux_fields::{fd_check, vertical_clearance, AuxField};
use stokes_gap::geometry::GapGeometry;

fn main() -> stokes_gap::Result<()> {
    let geom = GapGeometry::new(3, 1e-3)?;
    let x = [0.12, -0.05, 0.004];
    println!("delta(x') = {:.6e}", geom.delta(&x[..2])?);
    for alpha in 1..=6 {
        let field = AuxField::new(&geom, 1, alpha, 1.0)?;
        let s = field.eval(&x)?;
        let f = s.residual(1.0);
        let fnorm = f.iter().map(|v| v * v).sum::<f64>().sqrt();
        let cancel = cancellation_defect(&field, &x)?;
        println!(
            "v_1^{alpha}: u = [{:+.4e}, {:+.4e}, {:+.4e}]  p = {:+.4e}  div = {:.1e}  |f| = {:.3e}  cancellation = {}",
            s.value[0],
            s.value[1],
            s.value[2],
            s.pressure,
            s.divergence,
            fnorm,
            cancel.map(|c| format!("{c:.1e}")).unwrap_or_else(|| "-".into())
        );
    }
    let field = AuxField::new(&geom, 1, 3, 1.0)?;
    let fd = fd_check(|y| field.eval(y), &x, 1e-5, vertical_clearance(&geom, &x))?;
    println!("finite-difference gradient ratio (h vs h/2): {:.3}", fd.grad_ratio());
    Ok(())
}
