//! Gap sweeps, blow-up rate fits and envelope checks.

use crate::aux_fields::{fd_check, vertical_clearance, AuxField};
use crate::error::{Error, Result};
use crate::geometry::{GapGeometry, Vec3};
use crate::rigid::{basis_size, MotionKind, RigidMotion};
use crate::rigid_system::{cauchy_stress, tilde_b, two_route, M3};
use crate::stokes_mfs::{eval_flow, FlowSolution, MfsSolver, SolverParams, SurfaceData};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

/// `n` pseudo-random points of the neck `Omega_R`, deterministic in `seed`.
pub fn neck_points(geom: &GapGeometry, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = geom.d;
    let r = geom.r_neck;
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let xp: Vec<f64> = (0..d - 1).map(|_| r * (2.0 * rng.random::<f64>() - 1.0)).collect();
        if xp.iter().map(|v| v * v).sum::<f64>() >= r * r {
            continue;
        }
        let (lo, hi) = (geom.bottom(&xp), geom.top(&xp));
        let mut x = xp;
        x.push(lo + (hi - lo) * rng.random::<f64>());
        out.push(x);
    }
    out
}

/// Weight `w(x')` such that `w |f_1^alpha|` is expected to stay bounded as `eps -> 0`.
pub fn envelope_weight(motion: &RigidMotion, delta: f64, r: f64) -> f64 {
    let d = motion.d;
    match motion.kind {
        MotionKind::Translation(j) if j == d - 1 => delta * delta / r,
        MotionKind::Rotation(_, k) if k < d - 1 => delta / r,
        _ => delta,
    }
}

/// Sup of `envelope_weight * |mu Δv - ∇p|` over a 64 x 64 grid of the neck:
/// `|x'| = (i+1) R / 64` along a fixed lateral direction, `x_d` spanning the gap.
pub fn residual_envelope(geom: &GapGeometry, i: usize, alpha: usize, mu: f64) -> Result<f64> {
    let field = AuxField::new(geom, i, alpha, mu)?;
    let d = geom.d;
    let mut dir: Vec<f64> = (0..d - 1).map(|k| (0.6 + 0.9 * k as f64).cos()).collect();
    if d == 3 {
        dir = vec![0.6f64.cos(), 0.6f64.sin()];
    }
    let nd = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
    let n = 64;
    let mut sup = 0.0f64;
    for a in 0..n {
        let r = (a + 1) as f64 * geom.r_neck / n as f64;
        let xp: Vec<f64> = dir.iter().map(|v| r * v / nd).collect();
        let delta = geom.delta(&xp)?;
        let w = envelope_weight(&field.motion, delta, r);
        for b in 0..n {
            let t = -1.0 + 2.0 * b as f64 / (n - 1) as f64;
            let mut x = xp.clone();
            x.push(t * 0.5 * delta);
            let f = field.residual(&x)?;
            sup = sup.max(w * f.iter().map(|v| v * v).sum::<f64>().sqrt());
        }
    }
    Ok(sup)
}

/// Exactness checks of one auxiliary pair over random neck points.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuxCheckRow {
    pub d: usize,
    pub eps: f64,
    pub i: usize,
    pub alpha: usize,
    pub points: usize,
    pub max_divergence: f64,
    /// Max deviation from `psi_alpha` / `0` on the two graphs.
    pub max_boundary_error: f64,
    /// Relative defect of the cancellation identity linking `v^(d)` and `p`
    /// (translations only).
    pub max_cancellation: Option<f64>,
    /// Smallest and largest ratio of finite-difference errors at steps `h` and `h/2`.
    pub fd_ratio: (f64, f64),
    pub envelope_sup: f64,
}

/// Relative defect of `mu d_d v^(d) - p` (tangential translations) or
/// `mu d_dd v^(d) - d_d p` (normal translation).
pub fn cancellation_defect(field: &AuxField, x: &[f64]) -> Result<Option<f64>> {
    let d = field.geom.d;
    let s = field.eval(x)?;
    let (a, b) = match field.motion.kind {
        MotionKind::Translation(j) if j < d - 1 => (field.mu * s.grad[d - 1][d - 1], s.pressure),
        MotionKind::Translation(_) => (field.mu * s.hessian[d - 1][d - 1][d - 1], s.pressure_grad[d - 1]),
        MotionKind::Rotation(..) => return Ok(None),
    };
    Ok(Some((a - b).abs() / a.abs().max(b.abs()).max(1.0)))
}

/// Runs every exactness check for `(i, alpha)` at gap `eps` in dimension `d`.
pub fn check_aux_pair(
    d: usize,
    eps: f64,
    i: usize,
    alpha: usize,
    n_points: usize,
    seed: u64,
    mu: f64,
) -> Result<AuxCheckRow> {
    let geom = GapGeometry::new(d, eps)?;
    let field = AuxField::new(&geom, i, alpha, mu)?;
    let pts = neck_points(&geom, n_points, seed);
    let mut row = AuxCheckRow {
        d,
        eps,
        i,
        alpha,
        points: pts.len(),
        max_divergence: 0.0,
        max_boundary_error: 0.0,
        max_cancellation: None,
        fd_ratio: (f64::INFINITY, 0.0),
        envelope_sup: 0.0,
    };
    for x in &pts {
        let s = field.eval(x)?;
        row.max_divergence = row.max_divergence.max(s.divergence.abs());
        if let Some(c) = cancellation_defect(&field, x)? {
            row.max_cancellation = Some(row.max_cancellation.unwrap_or(0.0).max(c));
        }
        let xp = &x[..d - 1];
        for (height, top) in [(geom.top(xp), true), (geom.bottom(xp), false)] {
            let mut y = x.clone();
            y[d - 1] = height;
            let psi_y = field.motion.eval(&y);
            let want_psi = (i == 1) == top;
            let v = field.eval(&y)?.value;
            for k in 0..d {
                let want = if want_psi { psi_y[k] } else { 0.0 };
                row.max_boundary_error = row.max_boundary_error.max((v[k] - want).abs());
            }
        }
    }
    // Finite differences on points well inside the gap.
    for x in pts.iter().take(20) {
        let clearance = vertical_clearance(&geom, x);
        let delta = geom.delta(&x[..d - 1])?;
        let h = (0.05 * delta).min(0.4 * clearance);
        if h <= 1e-3 * delta {
            continue;
        }
        let rep = fd_check(|y| field.eval(y), x, h, clearance)?;
        if rep.grad_dev[1] > 1e-9 * delta.recip() {
            let q = rep.grad_ratio();
            row.fd_ratio = (row.fd_ratio.0.min(q), row.fd_ratio.1.max(q));
        }
    }
    row.envelope_sup = residual_envelope(&geom, i, alpha, mu)?;
    Ok(row)
}

/// All `(i, alpha)` checks for each gap in `eps_list`.
pub fn verify_aux(d: usize, eps_list: &[f64], n_points: usize, seed: u64, mu: f64) -> Result<Vec<AuxCheckRow>> {
    let jobs: Vec<(f64, usize, usize)> = eps_list
        .iter()
        .flat_map(|&e| (1..=2).flat_map(move |i| (1..=basis_size(d)).map(move |a| (e, i, a))))
        .collect();
    jobs.par_iter().map(|&(e, i, a)| check_aux_pair(d, e, i, a, n_points, seed, mu)).collect()
}

/// Higher-dimensional report: exactness checks plus, per `(i, alpha)`, the
/// ratio of the largest to smallest residual-envelope sup across the gaps.
#[derive(Clone, Debug, Serialize)]
pub struct HigherDimReport {
    pub d: usize,
    pub rows: Vec<AuxCheckRow>,
    /// `(i, alpha, max sup / min sup)`.
    pub envelope_drift: Vec<(usize, usize, f64)>,
    pub unimplemented: Vec<String>,
}

pub fn higher_dim_check(d: usize, eps_list: &[f64], n_points: usize, seed: u64) -> Result<HigherDimReport> {
    if d < 4 {
        return Err(Error::Validation(format!("higher-dimensional check needs d >= 4, got {d}")));
    }
    let mut rows = Vec::new();
    let mut unimplemented = Vec::new();
    for &eps in eps_list {
        for i in 1..=2 {
            for alpha in 1..=basis_size(d) {
                match check_aux_pair(d, eps, i, alpha, n_points, seed, 1.0) {
                    Ok(r) => rows.push(r),
                    Err(Error::Unimplemented(msg)) => unimplemented.push(format!("d={d} i={i} alpha={alpha}: {msg}")),
                    Err(e) => return Err(e),
                }
            }
        }
    }
    let mut envelope_drift = Vec::new();
    for i in 1..=2 {
        for alpha in 1..=basis_size(d) {
            let sups: Vec<f64> = rows.iter().filter(|r| r.i == i && r.alpha == alpha).map(|r| r.envelope_sup).collect();
            if !sups.is_empty() {
                envelope_drift.push((i, alpha, band_ratio(&sups)));
            }
        }
    }
    Ok(HigherDimReport { d, rows, envelope_drift, unimplemented })
}

/// `max / min` of `|values|`; infinite when some value vanishes.
pub fn band_ratio(values: &[f64]) -> f64 {
    let lo = values.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    let hi = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if lo > 0.0 { hi / lo } else { f64::INFINITY }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RateModel {
    /// `y ~ eps^{-s}`.
    Power,
    /// `y ~ eps^{-s} |ln eps|^{-t}`; `t` pinned when given.
    PowerLog { t: Option<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateFit {
    pub model: RateModel,
    pub exponent: f64,
    pub log_power: f64,
    pub r_squared: f64,
    /// Min and max of the compensated observable `y eps^s |ln eps|^t`.
    pub band: (f64, f64),
    pub points: usize,
}

impl RateFit {
    pub fn band_ratio(&self) -> f64 {
        if self.band.0 > 0.0 { self.band.1 / self.band.0 } else { f64::INFINITY }
    }
}

/// Least-squares fit of `ln y = c + s ln(1/eps) - t ln|ln eps|`.
pub fn fit_rate(eps: &[f64], y: &[f64], model: RateModel) -> Result<RateFit> {
    if eps.len() != y.len() || eps.len() < 4 {
        return Err(Error::Validation(format!("rate fit needs >= 4 paired points, got {}", eps.len().min(y.len()))));
    }
    if eps.iter().chain(y).any(|v| !(v.is_finite() && *v > 0.0)) || eps.iter().any(|e| *e >= 1.0) {
        return Err(Error::Validation("rate fit needs finite positive observables and 0 < eps < 1".into()));
    }
    let n = eps.len();
    let u: Vec<f64> = eps.iter().map(|e| -e.ln()).collect();
    let l: Vec<f64> = eps.iter().map(|e| (-e.ln()).ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let (s, t) = match model {
        RateModel::Power | RateModel::PowerLog { t: Some(_) } => {
            let t = match model {
                RateModel::PowerLog { t: Some(t) } => t,
                _ => 0.0,
            };
            let z: Vec<f64> = (0..n).map(|k| ly[k] + t * l[k]).collect();
            (simple_slope(&u, &z)?, t)
        }
        RateModel::PowerLog { t: None } => {
            // Two regressors with intercept, solved by centred normal equations.
            let mu_u = mean(&u);
            let mu_l = mean(&l);
            let mu_y = mean(&ly);
            let (mut suu, mut sll, mut sul, mut suy, mut sly) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for k in 0..n {
                let (a, b, c) = (u[k] - mu_u, l[k] - mu_l, ly[k] - mu_y);
                suu += a * a;
                sll += b * b;
                sul += a * b;
                suy += a * c;
                sly += b * c;
            }
            let det = suu * sll - sul * sul;
            if !(det.abs() > 1e-12 * suu * sll) {
                return Err(Error::Numerical("degenerate design matrix in rate fit".into()));
            }
            let s = (suy * sll - sly * sul) / det;
            let mt = (suu * sly - sul * suy) / det;
            (s, -mt)
        }
    };
    let z: Vec<f64> = (0..n).map(|k| ly[k] - s * u[k] + t * l[k]).collect();
    let c = mean(&z);
    let ss_res: f64 = z.iter().map(|v| (v - c) * (v - c)).sum();
    let mu_y = mean(&ly);
    let ss_tot: f64 = ly.iter().map(|v| (v - mu_y) * (v - mu_y)).sum();
    let r_squared = if ss_tot > 0.0 { (1.0 - ss_res / ss_tot).clamp(0.0, 1.0) } else { 1.0 };
    let comp: Vec<f64> = z.iter().map(|v| v.exp()).collect();
    let band = (
        comp.iter().cloned().fold(f64::INFINITY, f64::min),
        comp.iter().cloned().fold(0.0, f64::max),
    );
    Ok(RateFit { model, exponent: s, log_power: t, r_squared, band, points: n })
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn simple_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    let (mx, my) = (mean(x), mean(y));
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if !(sxx > 1e-14 * mx * mx) {
        return Err(Error::Numerical("degenerate design matrix in rate fit".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    Ok(sxy / sxx)
}

/// Linear extrapolation of `b(eps)` to `1/|ln eps| = 0`; returns the intercept and its standard error.
pub fn extrapolate_log(eps: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    let n = eps.len();
    if n < 3 || b.len() != n {
        return Err(Error::Validation("extrapolation needs >= 3 points".into()));
    }
    let x: Vec<f64> = eps.iter().map(|e| 1.0 / e.ln().abs()).collect();
    let slope = simple_slope(&x, b)?;
    let (mx, my) = (mean(&x), mean(b));
    let intercept = my - slope * mx;
    let ss: f64 = x.iter().zip(b).map(|(xi, bi)| (bi - intercept - slope * xi).powi(2)).sum();
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sigma2 = ss / (n - 2) as f64;
    let se = (sigma2 * (1.0 / n as f64 + mx * mx / sxx)).sqrt();
    Ok((intercept, se))
}

/// Gradient envelope over `Omega_R`: smallest `K` with
/// `|∇u(x)| <= K (1 + |ln eps| |x'|) / (|ln eps| (eps + |x'|^2))` on the grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnvelopeReport {
    pub eps: f64,
    pub k: f64,
    pub worst: Vec3,
    pub samples: usize,
    /// True when the symmetric gradient vanishes on the grid (rigid data); `k` is then reported as zero.
    pub degenerate: bool,
}

pub fn envelope_bound(eps: f64, r: f64) -> f64 {
    let l = eps.ln().abs();
    (1.0 + l * r) / (l * (eps + r * r))
}

/// Grid: `n_r` radii in `[0, R]`, 4 azimuths, 7 heights in the central 90% of the gap.
pub fn envelope_check(sol: &FlowSolution, geom: &GapGeometry, n_r: usize) -> Result<EnvelopeReport> {
    let mut pts = Vec::new();
    for a in 0..n_r {
        let r = geom.r_neck * a as f64 / (n_r - 1).max(1) as f64;
        let top = geom.sphere_top(r);
        for k in 0..4 {
            let phi = std::f64::consts::FRAC_PI_2 * k as f64 + 0.3;
            for j in 0..7 {
                let t = -0.9 + 1.8 * j as f64 / 6.0;
                pts.push(([r * phi.cos(), r * phi.sin(), t * top], r));
            }
        }
    }
    let vals: Result<Vec<(f64, f64, Vec3)>> = pts
        .par_iter()
        .map(|(x, r)| {
            let f = eval_flow(sol, x)?;
            let g = f.grad.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
            let mut e2 = 0.0;
            for i in 0..3 {
                for k in 0..3 {
                    e2 += (0.5 * (f.grad[i][k] + f.grad[k][i])).powi(2);
                }
            }
            Ok((g / envelope_bound(geom.eps, *r), e2.sqrt() / g.max(f64::MIN_POSITIVE), *x))
        })
        .collect();
    let vals = vals?;
    let degenerate = vals.iter().all(|v| v.1 < 1e-8);
    let (k, worst) = vals.iter().fold((0.0, [0.0; 3]), |acc, v| if v.0 > acc.0 { (v.0, v.2) } else { acc });
    Ok(EnvelopeReport { eps: geom.eps, k: if degenerate { 0.0 } else { k }, worst, samples: vals.len(), degenerate })
}

/// `max |∇u(0', x_3)|` over 33 equispaced points of `|x_3| <= eps/2`.
pub fn max_grad_segment(sol: &FlowSolution, eps: f64) -> Result<f64> {
    let mut m = 0.0f64;
    for k in 0..33 {
        let z = -0.5 * eps + eps * k as f64 / 32.0;
        let f = eval_flow(sol, &[0.0, 0.0, z])?;
        m = m.max(f.grad.iter().flatten().map(|v| v * v).sum::<f64>().sqrt());
    }
    Ok(m)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub eps: f64,
    pub max_grad_segment: f64,
    pub midpoint_stress: f64,
    pub a_diag: [f64; M3],
    pub c_diff: [f64; M3],
    pub envelope_k: f64,
    pub route_gap: f64,
    /// Held-out boundary residual of the constrained solve.
    pub bc_residual: f64,
    /// Constants from the constrained solve, `c[i-1][alpha-1]`.
    pub constants: [[f64; M3]; 2],
    pub tilde_b1: [f64; M3],
    /// Full `a_11` block, `a11[alpha - 1][beta - 1]`.
    pub a11: [[f64; M3]; M3],
    pub off_diag_max: f64,
    pub seconds: f64,
    pub error: Option<String>,
}

impl SweepRow {
    fn failed(eps: f64, msg: String) -> Self {
        Self {
            eps,
            max_grad_segment: f64::NAN,
            midpoint_stress: f64::NAN,
            a_diag: [f64::NAN; M3],
            c_diff: [f64::NAN; M3],
            envelope_k: f64::NAN,
            route_gap: f64::NAN,
            bc_residual: f64::NAN,
            constants: [[f64::NAN; M3]; 2],
            tilde_b1: [f64::NAN; M3],
            a11: [[f64::NAN; M3]; M3],
            off_diag_max: f64::NAN,
            seconds: 0.0,
            error: Some(msg),
        }
    }

    pub fn csv_header() -> Vec<String> {
        let mut h = vec!["eps".to_string(), "max_grad_segment".into(), "midpoint_stress".into()];
        h.extend((1..=M3).map(|a| format!("a11_{a}")));
        h.extend((1..=M3).map(|a| format!("cdiff_{a}")));
        h.extend(["envelope_K".into(), "route_gap".into(), "bc_residual".into()]);
        h
    }

    pub fn csv_record(&self) -> Vec<String> {
        let f = |v: f64| format!("{v:.12e}");
        let mut r = vec![f(self.eps), f(self.max_grad_segment), f(self.midpoint_stress)];
        r.extend(self.a_diag.iter().map(|v| f(*v)));
        r.extend(self.c_diff.iter().map(|v| f(*v)));
        r.extend([f(self.envelope_k), f(self.route_gap), f(self.bc_residual)]);
        r
    }
}

/// Observables of [`SweepRow`] by CSV column name.
pub fn observable(row: &SweepRow, name: &str) -> Option<f64> {
    match name {
        "max_grad_segment" => Some(row.max_grad_segment),
        "midpoint_stress" => Some(row.midpoint_stress),
        "envelope_K" => Some(row.envelope_k),
        "route_gap" => Some(row.route_gap),
        "bc_residual" => Some(row.bc_residual),
        _ => {
            let (kind, idx) = name.split_once('_')?;
            let a: usize = idx.parse().ok()?;
            if !(1..=M3).contains(&a) {
                return None;
            }
            match kind {
                "a11" => Some(row.a_diag[a - 1]),
                "cdiff" => Some(row.c_diff[a - 1]),
                _ => None,
            }
        }
    }
}

/// Exponents `(s, t)` of `eps^{-s} |ln eps|^{-t}` predicted for an observable, if any.
pub fn predicted_rate(name: &str) -> Option<(f64, f64)> {
    match name {
        "max_grad_segment" => Some((1.0, 1.0)),
        "midpoint_stress" => Some((1.0, 0.0)),
        "a11_1" | "a11_2" | "a11_5" | "a11_6" => Some((0.0, -1.0)),
        "a11_3" => Some((1.0, 0.0)),
        "a11_4" => Some((0.0, 0.0)),
        "cdiff_1" | "cdiff_2" => Some((0.0, 1.0)),
        "cdiff_3" => Some((-1.0, 0.0)),
        _ => None,
    }
}

/// `eps_count` values from `eps_from` to `eps_to`, geometrically spaced and decreasing.
pub fn eps_range(eps_from: f64, eps_to: f64, count: usize) -> Vec<f64> {
    let (a, b) = (eps_from.max(eps_to).log10(), eps_from.min(eps_to).log10());
    if count <= 1 {
        return vec![10f64.powf(a)];
    }
    (0..count).map(|k| 10f64.powf(a + (b - a) * k as f64 / (count - 1) as f64)).collect()
}

/// One full pipeline at a single gap: both routes, observables and envelope.
pub fn sweep_point(template: &GapGeometry, params: &SolverParams, eps: f64, phi: &SurfaceData, sanity: f64) -> Result<SweepRow> {
    let start = std::time::Instant::now();
    let mut geom = template.clone();
    geom.eps = eps;
    let geom = geom.validated()?;
    let solver = MfsSolver::gap(&geom, params.clone())?;
    let tr = two_route(&solver, phi, sanity)?;
    let sol = &tr.direct.solution;
    let constants = [tr.direct.constants[0], tr.direct.constants[1]];
    let c_diff = std::array::from_fn(|k| constants[0][k] - constants[1][k]);
    let rc = crate::rigid_system::RigidConstants { c: constants, residual: 0.0, truncated: false };
    let tb = tilde_b(&tr.coupling, &rc, crate::geometry::Part::D1)?;
    let mut off = 0.0f64;
    for a in 1..=M3 {
        for b in 1..=M3 {
            if a != b {
                off = off.max(tr.coupling.entry(1, a, 1, b).abs());
            }
        }
    }
    Ok(SweepRow {
        eps,
        max_grad_segment: max_grad_segment(sol, eps)?,
        midpoint_stress: cauchy_stress(sol, &[0.0; 3])?.norm(),
        a_diag: tr.coupling.a11_diag(),
        c_diff,
        envelope_k: envelope_check(sol, &geom, 12)?.k,
        route_gap: tr.route_gap,
        bc_residual: tr.direct.residual.max,
        constants,
        tilde_b1: tb,
        a11: std::array::from_fn(|a| std::array::from_fn(|b| tr.coupling.entry(1, a + 1, 1, b + 1))),
        off_diag_max: off,
        seconds: start.elapsed().as_secs_f64(),
        error: if tr.direct.converged { None } else { Some(format!("constrained solve not converged: residual {:.3e}", tr.direct.residual.max)) },
    })
}

/// Runs [`sweep_point`] for each gap in decreasing order, handing each row to
/// `sink` as soon as it is available. Per-gap failures are recorded in the row.
pub fn run_sweep(
    template: &GapGeometry,
    params: &SolverParams,
    eps_list: &[f64],
    phi: &SurfaceData,
    sanity: f64,
    mut sink: impl FnMut(&SweepRow) -> Result<()>,
) -> Result<Vec<SweepRow>> {
    let mut eps: Vec<f64> = eps_list.to_vec();
    eps.sort_by(|a, b| b.partial_cmp(a).expect("finite eps"));
    eps.dedup();
    let mut rows = Vec::with_capacity(eps.len());
    for e in eps {
        let row = match sweep_point(template, params, e, phi, sanity) {
            Ok(r) => r,
            Err(err) => SweepRow::failed(e, err.to_string()),
        };
        sink(&row)?;
        rows.push(row);
    }
    Ok(rows)
}
