//! Free-space Stokeslet: velocity, pressure, velocity gradient and stress of a point force.

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelSample {
    pub velocity: Vec3,
    pub pressure: f64,
    /// `grad[i][k] = d u_i / d x_k`.
    pub grad: [[f64; 3]; 3],
    pub stress: [[f64; 3]; 3],
}

/// Field at `x` of the point force `g` applied to the fluid at `y`, so that
/// `mu Δu - ∇p + g δ_y = 0` and `∇·u = 0`.
pub fn stokeslet_kernel(y: &Vec3, g: &Vec3, x: &Vec3, mu: f64) -> Result<KernelSample> {
    let r = [x[0] - y[0], x[1] - y[1], x[2] - y[2]];
    let r2 = r[0] * r[0] + r[1] * r[1] + r[2] * r[2];
    if r2 == 0.0 {
        return Err(Error::Singular);
    }
    Ok(kernel_at(&r, r2, g, mu))
}

pub(crate) fn kernel_at(r: &Vec3, r2: f64, g: &Vec3, mu: f64) -> KernelSample {
    let rn = r2.sqrt();
    let inv_r = 1.0 / rn;
    let inv_r3 = inv_r / r2;
    let inv_r5 = inv_r3 / r2;
    let rg = r[0] * g[0] + r[1] * g[1] + r[2] * g[2];
    let c = 1.0 / (8.0 * PI * mu);
    let mut velocity = [0.0; 3];
    let mut grad = [[0.0; 3]; 3];
    let mut stress = [[0.0; 3]; 3];
    for i in 0..3 {
        velocity[i] = c * (g[i] * inv_r + r[i] * rg * inv_r3);
        for k in 0..3 {
            let delta = if i == k { rg } else { 0.0 };
            grad[i][k] = c * (-g[i] * r[k] * inv_r3 + (delta + r[i] * g[k]) * inv_r3
                - 3.0 * r[i] * r[k] * rg * inv_r5);
            stress[i][k] = -3.0 / (4.0 * PI) * r[i] * r[k] * rg * inv_r5;
        }
    }
    KernelSample { velocity, pressure: rg * inv_r3 / (4.0 * PI), grad, stress }
}

/// Velocity only, for assembly loops.
#[inline]
pub(crate) fn velocity_at(r: &Vec3, g: &Vec3, c: f64) -> Vec3 {
    let r2 = r[0] * r[0] + r[1] * r[1] + r[2] * r[2];
    let inv_r = 1.0 / r2.sqrt();
    let inv_r3 = inv_r / r2;
    let rg = (r[0] * g[0] + r[1] * g[1] + r[2] * g[2]) * inv_r3;
    [
        c * (g[0] * inv_r + r[0] * rg),
        c * (g[1] * inv_r + r[1] * rg),
        c * (g[2] * inv_r + r[2] * rg),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    const Y: Vec3 = [0.1, -0.2, 0.3];
    const G: Vec3 = [0.7, -0.4, 1.3];
    const X: Vec3 = [0.9, 0.4, -0.5];

    fn vel(x: &Vec3) -> Vec3 {
        stokeslet_kernel(&Y, &G, x, 1.3).unwrap().velocity
    }

    fn shifted(x: &Vec3, k: usize, h: f64) -> Vec3 {
        let mut y = *x;
        y[k] += h;
        y
    }

    #[test]
    fn homogeneous_of_degree_minus_one() {
        let far = [2.0 * X[0] - Y[0], 2.0 * X[1] - Y[1], 2.0 * X[2] - Y[2]];
        let (a, b) = (vel(&X), vel(&far));
        for i in 0..3 {
            assert!((a[i] - 2.0 * b[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn gradient_and_divergence_match_fd() {
        let s = stokeslet_kernel(&Y, &G, &X, 1.3).unwrap();
        let h = 1e-5;
        let mut div = 0.0;
        for k in 0..3 {
            let (p, m) = (vel(&shifted(&X, k, h)), vel(&shifted(&X, k, -h)));
            for i in 0..3 {
                let fd = (p[i] - m[i]) / (2.0 * h);
                assert!((fd - s.grad[i][k]).abs() < 1e-9);
            }
            div += (p[k] - m[k]) / (2.0 * h);
        }
        assert!(div.abs() < 1e-9);
        assert!((s.grad[0][0] + s.grad[1][1] + s.grad[2][2]).abs() < 1e-15);
    }

    #[test]
    fn stokes_equation_holds_by_fd() {
        let mu = 1.3;
        let h = 1e-3;
        let p = |x: &Vec3| stokeslet_kernel(&Y, &G, x, mu).unwrap().pressure;
        let u0 = vel(&X);
        for i in 0..3 {
            let mut lap = 0.0;
            for k in 0..3 {
                lap += (vel(&shifted(&X, k, h))[i] - 2.0 * u0[i] + vel(&shifted(&X, k, -h))[i]) / (h * h);
            }
            let dp = (p(&shifted(&X, i, h)) - p(&shifted(&X, i, -h))) / (2.0 * h);
            assert!((mu * lap - dp).abs() < 1e-5, "{i}: {}", mu * lap - dp);
        }
    }

    #[test]
    fn stress_is_newtonian() {
        let mu = 0.7;
        let s = stokeslet_kernel(&Y, &G, &X, mu).unwrap();
        for i in 0..3 {
            for k in 0..3 {
                let id = if i == k { s.pressure } else { 0.0 };
                let expect = -id + mu * (s.grad[i][k] + s.grad[k][i]);
                assert!((expect - s.stress[i][k]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn singular_at_source() {
        assert!(matches!(stokeslet_kernel(&Y, &G, &Y, 1.0), Err(Error::Singular)));
    }
}
