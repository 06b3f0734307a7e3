//! A short gap sweep followed by rate fits of the blow-up observables.
//! Pass `full` for the seven-point sweep down to eps = 10^-2.5.

use stokes_gap::asymptotics::{eps_range, fit_rate, observable, predicted_rate, run_sweep, RateModel};
use stokes_gap::geometry::GapGeometry;
use stokes_gap::stokes_mfs::{SolverParams, SurfaceData, ANTISYM_DEMO};

fn main() -> stokes_gap::Result<()> {
    let full = std::env::args().any(|a| a == "full");
    let eps = if full { eps_range(0.1, 10f64.powf(-2.5), 7) } else { eps_range(0.2, 0.05, 4) };
    let template = GapGeometry::new(3, eps[0])?;
    let phi = SurfaceData::Linear(ANTISYM_DEMO);
    let rows = run_sweep(&template, &SolverParams::default(), &eps, &phi, 1e6, |r| {
        println!("eps = {:.4e}  max|grad u| = {:.4e}  |sigma(0)| = {:.4e}  ({:.1} s)", r.eps, r.max_grad_segment, r.midpoint_stress, r.seconds);
        Ok(())
    })?;
    let e: Vec<f64> = rows.iter().map(|r| r.eps).collect();
    for name in ["max_grad_segment", "midpoint_stress", "a11_1", "a11_3", "cdiff_1"] {
        let (_, t) = predicted_rate(name).unwrap_or((0.0, 0.0));
        let y: Vec<f64> = rows.iter().map(|r| observable(r, name).unwrap_or(f64::NAN).abs()).collect();
        let model = if t == 0.0 { RateModel::Power } else { RateModel::PowerLog { t: Some(t) } };
        let fit = fit_rate(&e, &y, model)?;
        println!("{name:<17} s = {:+.3}  t = {:+.1}  r2 = {:.4}  band ratio {:.3}", fit.exponent, fit.log_power, fit.r_squared, fit.band_ratio());
    }
    Ok(())
}
