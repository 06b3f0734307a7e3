//! Fit synthetic blow-up data with and without the logarithmic factor.

use stokes_gap::asymptotics::{eps_range, extrapolate_log, fit_rate, RateModel};

fn main() -> stokes_gap::Result<()> {
    let eps = eps_range(0.1, 1e-4, 9);
    let log_rate: Vec<f64> = eps.iter().map(|e| 3.0 / (e * e.ln().abs())).collect();
    let power: Vec<f64> = eps.iter().map(|e| e.powf(-1.5)).collect();
    for (name, y) in [("1/(eps |ln eps|)", &log_rate), ("eps^-3/2", &power)] {
        for model in [RateModel::Power, RateModel::PowerLog { t: None }, RateModel::PowerLog { t: Some(1.0) }] {
            let f = fit_rate(&eps, y, model)?;
            println!("{name:<17} {model:?}: s = {:.4}, t = {:.4}, r2 = {:.6}", f.exponent, f.log_power, f.r_squared);
        }
    }
    let b: Vec<f64> = eps.iter().map(|e| 1.5 + 2.0 / e.ln().abs()).collect();
    let (b0, se) = extrapolate_log(&eps, &b)?;
    println!("limit of 1.5 + 2/|ln eps|: {b0:.6} +- {se:.1e}");
    Ok(())
}
