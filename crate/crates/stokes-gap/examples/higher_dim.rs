use stokes_gap::asymptotics::higher_dim_check;

fn main() -> stokes_gap::Result<()> {
    for d in [4, 5] {
        let rep = higher_dim_check(d, &[1e-2, 1e-3, 1e-4], 2_000, 7)?;
        let div = rep.rows.iter().map(|r| r.max_divergence).fold(0.0, f64::max);
        let bc = rep.rows.iter().map(|r| r.max_boundary_error).fold(0.0, f64::max);
        let drift = rep.envelope_drift.iter().map(|r| r.2).fold(0.0, f64::max);
        println!("d = {d}: {} pairs, max div {div:.1e}, max boundary error {bc:.1e}, worst envelope drift {drift:.3}", rep.rows.len() / 3);
        for u in &rep.unimplemented {
            println!("  {u}");
        }
    }
    Ok(())
}
