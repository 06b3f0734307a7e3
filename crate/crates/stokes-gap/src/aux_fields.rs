//! Closed-form auxiliary velocity/pressure pairs in the neck between the inclusions.
//!
//! For inclusion 1 every field has the form `v = psi_alpha (k + 1/2) + F (k^2 - 1/4)`
//! with the Keller function `k = x_d / delta(x')`, so `v = psi_alpha` on the top
//! graph and `v = 0` on the bottom graph. Inclusion 2 is obtained by the
//! reflection `x_d -> -x_d`, which turns `k` into `-x_d / delta`.

use crate::error::{Error, Result};
use crate::geometry::{GapGeometry, ProfileKind};
use crate::jet::Jet;
use crate::rigid::{MotionKind, RigidMotion};

#[derive(Clone, Debug, PartialEq)]
pub struct FieldSample {
    pub value: Vec<f64>,
    /// `grad[i][k] = d v_i / d x_k`.
    pub grad: Vec<Vec<f64>>,
    /// `hessian[i][k][l] = d^2 v_i / d x_k d x_l`.
    pub hessian: Vec<Vec<Vec<f64>>>,
    pub laplacian: Vec<f64>,
    pub pressure: f64,
    pub pressure_grad: Vec<f64>,
    pub divergence: f64,
}

impl FieldSample {
    /// `mu * laplacian - grad p`.
    pub fn residual(&self, mu: f64) -> Vec<f64> {
        self.laplacian
            .iter()
            .zip(&self.pressure_grad)
            .map(|(l, g)| mu * l - g)
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct AuxField {
    pub geom: GapGeometry,
    pub i: usize,
    pub motion: RigidMotion,
    pub mu: f64,
}

impl AuxField {
    pub fn new(geom: &GapGeometry, i: usize, alpha: usize, mu: f64) -> Result<Self> {
        if i != 1 && i != 2 {
            return Err(Error::Validation(format!("inclusion index must be 1 or 2, got {i}")));
        }
        if geom.d < 3 || geom.d > 8 {
            return Err(Error::Unimplemented(format!(
                "auxiliary fields are implemented for 3 <= d <= 8, got d = {}",
                geom.d
            )));
        }
        let motion = RigidMotion::new(geom.d, alpha)?;
        let quadratic_only = match motion.kind {
            MotionKind::Translation(j) => j == geom.d - 1,
            MotionKind::Rotation(_, k) => k == geom.d - 1,
        };
        if quadratic_only
            && (geom.profile_kind != ProfileKind::QuadraticSymmetric || geom.kappa2 != 1.0)
        {
            return Err(Error::Unimplemented(format!(
                "alpha = {alpha} requires the quadratic profile with kappa2 = 1"
            )));
        }
        Ok(Self { geom: geom.clone(), i, motion, mu })
    }

    pub fn eval(&self, x: &[f64]) -> Result<FieldSample> {
        if x.len() != self.geom.d {
            return Err(Error::Validation(format!(
                "point has {} coordinates, expected {}",
                x.len(),
                self.geom.d
            )));
        }
        check_in_neck(&self.geom, x)?;
        Ok(match self.geom.d {
            3 => self.eval_d::<3>(x),
            4 => self.eval_d::<4>(x),
            5 => self.eval_d::<5>(x),
            6 => self.eval_d::<6>(x),
            7 => self.eval_d::<7>(x),
            8 => self.eval_d::<8>(x),
            d => unreachable!("dimension {d} rejected at construction"),
        })
    }

    pub fn residual(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.eval(x)?.residual(self.mu))
    }

    fn eval_d<const D: usize>(&self, x: &[f64]) -> FieldSample {
        let mut y = [0.0; D];
        y.copy_from_slice(x);
        let (v, p) = if self.i == 1 {
            top_field(&self.geom, &self.motion, self.mu, &y)
        } else {
            bottom_field(&self.geom, &self.motion, self.mu, &y)
        };
        sample_from_jets(&v, &p)
    }
}

/// Evaluates `v_i^alpha`, `p_i^alpha` and their derivatives at `x`.
pub fn eval_aux(geom: &GapGeometry, i: usize, alpha: usize, mu: f64, x: &[f64]) -> Result<FieldSample> {
    AuxField::new(geom, i, alpha, mu)?.eval(x)
}

/// Stokes residual `mu Δv - ∇p` of the auxiliary pair.
pub fn residual(geom: &GapGeometry, i: usize, alpha: usize, mu: f64, x: &[f64]) -> Result<Vec<f64>> {
    AuxField::new(geom, i, alpha, mu)?.residual(x)
}

/// Keller function (`k` for inclusion 1, `-x_d/delta` for inclusion 2) and its gradient.
pub fn keller(geom: &GapGeometry, i: usize, x: &[f64]) -> Result<(f64, Vec<f64>)> {
    if i != 1 && i != 2 {
        return Err(Error::Validation(format!("inclusion index must be 1 or 2, got {i}")));
    }
    if x.len() != geom.d {
        return Err(Error::Validation("point dimension mismatch".into()));
    }
    check_in_neck(geom, x)?;
    let d = x.len();
    let delta = geom.delta_unchecked(&x[..d - 1]);
    let sign = if i == 1 { 1.0 } else { -1.0 };
    let k = sign * x[d - 1] / delta;
    let mut grad = vec![0.0; d];
    // Chain rule through delta: dk/dx_j = -k (d delta/dx_j) / delta.
    let dd = delta_gradient(geom, &x[..d - 1]);
    for j in 0..d - 1 {
        grad[j] = -k * dd[j] / delta;
    }
    grad[d - 1] = sign / delta;
    Ok((k, grad))
}

fn delta_gradient(geom: &GapGeometry, xp: &[f64]) -> Vec<f64> {
    let r2: f64 = xp.iter().map(|v| v * v).sum();
    let quartic = if geom.profile_kind == ProfileKind::GeneralConvex { geom.quartic } else { 0.0 };
    xp.iter()
        .map(|&xj| 2.0 * geom.kappa2 * xj + 8.0 * quartic * r2 * xj)
        .collect()
}

fn check_in_neck(geom: &GapGeometry, x: &[f64]) -> Result<()> {
    let d = x.len();
    let xp = &x[..d - 1];
    let r = xp.iter().map(|v| v * v).sum::<f64>().sqrt();
    let slack = 1e-12 * (1.0 + geom.eps);
    if r > 2.0 * geom.r_neck {
        return Err(Error::OutOfNeck(format!("|x'| = {r} exceeds 2R = {}", 2.0 * geom.r_neck)));
    }
    if x[d - 1] > geom.top(xp) + slack || x[d - 1] < geom.bottom(xp) - slack {
        return Err(Error::OutOfNeck(format!(
            "x_d = {} outside [{}, {}]",
            x[d - 1],
            geom.bottom(xp),
            geom.top(xp)
        )));
    }
    Ok(())
}

/// Jets of the field attached to the top inclusion.
fn top_field<const D: usize>(
    geom: &GapGeometry,
    motion: &RigidMotion,
    mu: f64,
    x: &[f64; D],
) -> ([Jet<D>; D], Jet<D>) {
    let d = D as f64;
    let n = D - 1;
    let xs: [Jet<D>; D] = std::array::from_fn(|i| Jet::coord(x, i));
    let delta = geom.delta_jet(x);
    let inv = delta.recip();
    let k = xs[n] * inv;
    let k_plus = k + 0.5;
    let k2 = k.square();
    let k2_minus = k2 - 0.25;
    let mut r2 = Jet::zero();
    for &c in &xs[..n] {
        r2 += c * c;
    }

    let mut v: [Jet<D>; D] = [Jet::zero(); D];
    let psi: [Jet<D>; D] = match motion.kind {
        MotionKind::Translation(j) => std::array::from_fn(|i| Jet::constant(if i == j { 1.0 } else { 0.0 })),
        MotionKind::Rotation(j, kk) => std::array::from_fn(|i| {
            if i == j {
                xs[kk]
            } else if i == kk {
                -xs[j]
            } else {
                Jet::zero()
            }
        }),
    };
    for i in 0..D {
        v[i] = psi[i] * k_plus;
    }

    let pressure = match motion.kind {
        MotionKind::Translation(j) if j < n => {
            // Half the lateral slope of delta keeps the field divergence free.
            let half_slope = half_delta_slope(geom, &xs, &r2, j);
            v[n] += half_slope * k2_minus;
            half_slope * k * inv * (2.0 * mu)
        }
        MotionKind::Translation(_) => {
            let c = 6.0 / (d - 1.0);
            for i in 0..n {
                v[i] += xs[i] * inv * c * k2_minus;
            }
            let fd = r2 * xs[n] * inv * inv * (2.0 * c) - k * 2.0;
            v[n] += fd * k2_minus;
            let a = inv * inv * (-3.0 * mu / (d - 1.0));
            let b = (r2 * inv * c - 1.0) * inv * k2 * (6.0 * mu);
            a + b
        }
        MotionKind::Rotation(_, kk) if kk < n => Jet::zero(),
        MotionKind::Rotation(j, _) => {
            let q = 2.0 * d - 1.0;
            let xj = xs[j];
            for i in 0..n {
                let mut fi = xs[i] * xj * inv * (-12.0 / q);
                if i == j {
                    fi += Jet::constant(3.0 / q) - xs[n] * k * 5.0;
                }
                v[i] += fi * k2_minus;
            }
            let fd = xj * k * (r2 * inv * (-12.0 / q) + 2.0 * (d + 1.0) / q - xs[n] * k * 3.0) * 2.0;
            v[n] += fd * k2_minus;
            let a = xj * inv * inv * (6.0 * mu / q);
            let b = xj * inv * (Jet::constant(d + 1.0) - r2 * inv * 6.0) * k2 * (12.0 * mu / q);
            a + b
        }
    };
    (v, pressure)
}

fn half_delta_slope<const D: usize>(geom: &GapGeometry, xs: &[Jet<D>; D], r2: &Jet<D>, j: usize) -> Jet<D> {
    let mut s = xs[j] * geom.kappa2;
    if geom.profile_kind == ProfileKind::GeneralConvex {
        s += xs[j] * *r2 * (4.0 * geom.quartic);
    }
    s
}

/// Jets of the field attached to the bottom inclusion, by reflection in `x_d`.
fn bottom_field<const D: usize>(
    geom: &GapGeometry,
    motion: &RigidMotion,
    mu: f64,
    x: &[f64; D],
) -> ([Jet<D>; D], Jet<D>) {
    let n = D - 1;
    let mut y = *x;
    y[n] = -y[n];
    let (v, p) = top_field(geom, motion, mu, &y);
    // psi_alpha(Px) = s P psi_alpha(x) with s = -1 exactly when psi_alpha has a normal component.
    let s = match motion.kind {
        MotionKind::Translation(j) => if j == n { -1.0 } else { 1.0 },
        MotionKind::Rotation(_, k) => if k == n { -1.0 } else { 1.0 },
    };
    let reflect = |j: Jet<D>| -> Jet<D> {
        let mut out = j;
        out.g[n] = -out.g[n];
        for b in 0..n {
            out.h[n][b] = -out.h[n][b];
            out.h[b][n] = -out.h[b][n];
        }
        out
    };
    let vv: [Jet<D>; D] = std::array::from_fn(|i| {
        let c = reflect(v[i]);
        if i == n { c * (-s) } else { c * s }
    });
    (vv, reflect(p) * s)
}

fn sample_from_jets<const D: usize>(v: &[Jet<D>; D], p: &Jet<D>) -> FieldSample {
    let value = v.iter().map(|j| j.v).collect();
    let grad: Vec<Vec<f64>> = v.iter().map(|j| j.g.to_vec()).collect();
    let hessian = v.iter().map(|j| j.h.iter().map(|r| r.to_vec()).collect()).collect();
    let laplacian = v.iter().map(|j| j.laplacian()).collect();
    let divergence = (0..D).map(|i| v[i].g[i]).sum();
    FieldSample {
        value,
        grad,
        hessian,
        laplacian,
        pressure: p.v,
        pressure_grad: p.g.to_vec(),
        divergence,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FdReport {
    /// Step sizes `h` and `h/2`.
    pub steps: [f64; 2],
    /// Max deviation between analytic and central-difference gradient, per step.
    pub grad_dev: [f64; 2],
    pub laplacian_dev: [f64; 2],
    /// Max |divergence| of the central-difference gradient minus the analytic divergence.
    pub divergence_dev: [f64; 2],
}

impl FdReport {
    pub fn grad_ratio(&self) -> f64 {
        self.grad_dev[0] / self.grad_dev[1]
    }

    pub fn laplacian_ratio(&self) -> f64 {
        self.laplacian_dev[0] / self.laplacian_dev[1]
    }
}

/// Compares an analytic field sample against central differences of its values at steps `h` and `h/2`.
///
/// `clearance` is the distance from `x` to the nearest point where the field stops being smooth.
pub fn fd_check(
    field: impl Fn(&[f64]) -> Result<FieldSample>,
    x: &[f64],
    h: f64,
    clearance: f64,
) -> Result<FdReport> {
    if clearance < 2.0 * h {
        return Err(Error::Validation(format!(
            "clearance {clearance} is below twice the step {h}"
        )));
    }
    let exact = field(x)?;
    let d = x.len();
    let mut report = FdReport {
        steps: [h, h / 2.0],
        grad_dev: [0.0; 2],
        laplacian_dev: [0.0; 2],
        divergence_dev: [0.0; 2],
    };
    for (s, &step) in report.steps.clone().iter().enumerate() {
        let mut grad = vec![vec![0.0; d]; d];
        let mut lap = vec![0.0; d];
        let centre = &exact.value;
        for k in 0..d {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[k] += step;
            xm[k] -= step;
            let fp = field(&xp)?.value;
            let fm = field(&xm)?.value;
            for i in 0..d {
                grad[i][k] = (fp[i] - fm[i]) / (2.0 * step);
                lap[i] += (fp[i] - 2.0 * centre[i] + fm[i]) / (step * step);
            }
        }
        let mut gdev: f64 = 0.0;
        for i in 0..d {
            for k in 0..d {
                gdev = gdev.max((grad[i][k] - exact.grad[i][k]).abs());
            }
        }
        let ldev = (0..d).map(|i| (lap[i] - exact.laplacian[i]).abs()).fold(0.0, f64::max);
        let div: f64 = (0..d).map(|i| grad[i][i]).sum();
        report.grad_dev[s] = gdev;
        report.laplacian_dev[s] = ldev;
        report.divergence_dev[s] = (div - exact.divergence).abs();
    }
    Ok(report)
}

/// Distance from `x` to the nearer neck graph, measured vertically.
pub fn vertical_clearance(geom: &GapGeometry, x: &[f64]) -> f64 {
    let d = x.len();
    let xp = &x[..d - 1];
    (geom.top(xp) - x[d - 1]).min(x[d - 1] - geom.bottom(xp))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geom(d: usize, eps: f64) -> GapGeometry {
        GapGeometry::new(d, eps).unwrap()
    }

    #[test]
    fn keller_examples() {
        let g = geom(3, 0.01);
        let (k, _) = keller(&g, 1, &[0.0, 0.0, 0.005]).unwrap();
        assert!((k - 0.5).abs() < 1e-15);
        let (k, grad) = keller(&g, 1, &[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(k, 0.0);
        assert!((grad[2] - 100.0).abs() < 1e-9);
        let (kt, _) = keller(&g, 2, &[0.0, 0.0, 0.005]).unwrap();
        assert!((kt + 0.5).abs() < 1e-15);
        assert!(keller(&g, 1, &[0.0, 0.0, 0.01]).is_err());
    }

    #[test]
    fn keller_gradient_matches_fd() {
        let g = geom(3, 0.02);
        let x = [0.13, -0.07, 0.004];
        let (_, grad) = keller(&g, 1, &x).unwrap();
        let h = 1e-6 * g.delta(&x[..2]).unwrap();
        for j in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[j] += h;
            xm[j] -= h;
            let fd = (keller(&g, 1, &xp).unwrap().0 - keller(&g, 1, &xm).unwrap().0) / (2.0 * h);
            assert!((fd - grad[j]).abs() < 1e-6 * grad[j].abs().max(1.0), "{j}");
        }
    }

    #[test]
    fn translation_values() {
        let g = geom(3, 0.01);
        let xp = [0.2, 0.1];
        let top = [xp[0], xp[1], g.top(&xp)];
        let s = eval_aux(&g, 1, 1, 1.0, &top).unwrap();
        assert!((s.value[0] - 1.0).abs() < 1e-12 && s.value[1].abs() < 1e-12 && s.value[2].abs() < 1e-12);
        let mid = [xp[0], xp[1], 0.0];
        let s = eval_aux(&g, 1, 1, 1.0, &mid).unwrap();
        assert!((s.value[0] - 0.5).abs() < 1e-15);
        assert!((s.value[2] + xp[0] / 4.0).abs() < 1e-15);
    }

    #[test]
    fn vertical_derivative_of_tangential_component() {
        let g = geom(3, 0.003);
        let x = [0.05, -0.02, 0.001];
        let s = eval_aux(&g, 1, 2, 1.0, &x).unwrap();
        let delta = g.delta(&x[..2]).unwrap();
        assert!((s.grad[1][2] - 1.0 / delta).abs() < 1e-10 / delta);
    }

    #[test]
    fn rotation_fields_match_rigid_motion_on_top() {
        let g = geom(3, 0.01);
        let xp = [0.15, -0.25];
        let x = [xp[0], xp[1], g.top(&xp)];
        for alpha in 1..=6 {
            let s = eval_aux(&g, 1, alpha, 1.0, &x).unwrap();
            let psi = RigidMotion::new(3, alpha).unwrap().eval(&x);
            for i in 0..3 {
                assert!((s.value[i] - psi[i]).abs() < 1e-12, "alpha {alpha}");
            }
            let xb = [xp[0], xp[1], g.bottom(&xp)];
            let s = eval_aux(&g, 1, alpha, 1.0, &xb).unwrap();
            assert!(s.value.iter().all(|v| v.abs() < 1e-12), "alpha {alpha}");
        }
    }

    #[test]
    fn second_inclusion_swaps_boundary_values() {
        let g = geom(3, 0.01);
        let xp = [0.1, 0.3];
        let bottom = [xp[0], xp[1], g.bottom(&xp)];
        let top = [xp[0], xp[1], g.top(&xp)];
        for alpha in 1..=6 {
            let s = eval_aux(&g, 2, alpha, 1.0, &bottom).unwrap();
            let psi = RigidMotion::new(3, alpha).unwrap().eval(&bottom);
            for i in 0..3 {
                assert!((s.value[i] - psi[i]).abs() < 1e-12, "alpha {alpha}");
            }
            let s = eval_aux(&g, 2, alpha, 1.0, &top).unwrap();
            assert!(s.value.iter().all(|v| v.abs() < 1e-12));
            assert!(s.divergence.abs() < 1e-9);
        }
    }

    #[test]
    fn fd_ratio_is_second_order() {
        let g = geom(3, 0.05);
        let x = [0.1, 0.05, 0.01];
        let h = 2e-3;
        let clear = vertical_clearance(&g, &x);
        let r = fd_check(|y| eval_aux(&g, 1, 1, 1.0, y), &x, h, clear).unwrap();
        assert!((3.5..=4.5).contains(&r.grad_ratio()), "{r:?}");
        let r = fd_check(|y| eval_aux(&g, 1, 5, 1.0, y), &x, h, clear).unwrap();
        let ratio = r.divergence_dev[0] / r.divergence_dev[1];
        assert!((3.5..=4.5).contains(&ratio), "{r:?}");
    }

    #[test]
    fn fd_check_constant_field_is_exact() {
        let constant = |_: &[f64]| -> Result<FieldSample> {
            Ok(FieldSample {
                value: vec![1.0, 2.0, 3.0],
                grad: vec![vec![0.0; 3]; 3],
                hessian: vec![vec![vec![0.0; 3]; 3]; 3],
                laplacian: vec![0.0; 3],
                pressure: 0.0,
                pressure_grad: vec![0.0; 3],
                divergence: 0.0,
            })
        };
        let r = fd_check(constant, &[0.0, 0.0, 0.0], 1e-3, 1.0).unwrap();
        assert_eq!(r.grad_dev, [0.0, 0.0]);
        assert_eq!(r.laplacian_dev, [0.0, 0.0]);
        assert_eq!(r.divergence_dev, [0.0, 0.0]);
    }

    #[test]
    fn fd_check_rejects_small_clearance() {
        let g = geom(3, 0.05);
        assert!(fd_check(|y| eval_aux(&g, 1, 1, 1.0, y), &[0.0, 0.0, 0.0], 0.1, 0.025).is_err());
    }

    #[test]
    fn general_convex_lateral_translation() {
        let g = GapGeometry {
            profile_kind: ProfileKind::GeneralConvex,
            quartic: 0.5,
            ..geom(3, 0.01)
        }
        .validated()
        .unwrap();
        let x = [0.3, -0.2, 0.01];
        let s = eval_aux(&g, 1, 1, 1.0, &x).unwrap();
        assert!(s.divergence.abs() < 1e-12);
        assert!((s.grad[2][2] - s.pressure).abs() < 1e-10 * s.pressure.abs().max(1.0));
        assert!(matches!(eval_aux(&g, 1, 3, 1.0, &x), Err(Error::Unimplemented(_))));
    }
}
