//! Stokeslet collocation for Dirichlet problems and for force- and torque-free
//! rigid inclusions in a spherical container.
//!
//! Sources sit on rings inside each inclusion and outside the container. On an
//! axisymmetric scene the unknowns split into azimuthal families (see
//! [`family`]); each family is a small dense least-squares problem, and every
//! solution is materialized as an explicit [`StokesletSet`].

pub mod discretization;
pub mod family;
pub mod kernel;
pub mod lstsq;

pub use discretization::{Body, Discretization, Scene, SolverParams};
pub use family::Family;
pub use kernel::{stokeslet_kernel, KernelSample};
pub use lstsq::LsReport;

use crate::error::{Error, Result};
use crate::geometry::{GapGeometry, Part, Vec3};
use crate::rigid::RigidMotion;
use discretization::Probe;
use family::{basis, to_cylindrical};
use faer::Mat;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

/// Antisymmetric traceless linear container data `x -> M x` used by the demos:
/// `phi = (x3 - x1/2, x3/2 - x2/2, x3)`.
pub const ANTISYM_DEMO: [[f64; 3]; 3] = [[-0.5, 0.0, 1.0], [0.0, -0.5, 0.5], [0.0, 0.0, 1.0]];

/// Dirichlet data on one surface.
#[derive(Clone, Debug, PartialEq)]
pub enum SurfaceData {
    Zero,
    /// Rigid motion `psi_alpha` (one-based).
    Rigid(usize),
    /// Rigid combination `sum_alpha c[alpha - 1] psi_alpha`.
    Motion([f64; 6]),
    /// Linear field `x -> M x`.
    Linear([[f64; 3]; 3]),
    /// One value per mesh node of the surface.
    Nodal(Vec<Vec3>),
}

impl SurfaceData {
    /// Value at `x`; nodal data is only known at mesh nodes.
    pub fn at(&self, x: &Vec3, node: Option<usize>) -> Option<Vec3> {
        match self {
            SurfaceData::Zero => Some([0.0; 3]),
            SurfaceData::Rigid(a) => Some(RigidMotion::new(3, *a).ok()?.eval3(x)),
            SurfaceData::Motion(c) => {
                let mut u = [0.0; 3];
                for (a, &ca) in c.iter().enumerate() {
                    let p = rigid3(a + 1, x);
                    for i in 0..3 {
                        u[i] += ca * p[i];
                    }
                }
                Some(u)
            }
            SurfaceData::Linear(m) => {
                Some([0, 1, 2].map(|i| m[i][0] * x[0] + m[i][1] * x[1] + m[i][2] * x[2]))
            }
            SurfaceData::Nodal(v) => node.and_then(|k| v.get(k).copied()),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            SurfaceData::Zero => true,
            SurfaceData::Rigid(_) => false,
            SurfaceData::Motion(c) => c.iter().all(|v| *v == 0.0),
            SurfaceData::Linear(m) => m.iter().flatten().all(|v| *v == 0.0),
            SurfaceData::Nodal(v) => v.iter().flatten().all(|v| *v == 0.0),
        }
    }
}

/// Velocity prescribed on each boundary part.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryCondition {
    pub d1: SurfaceData,
    pub d2: SurfaceData,
    pub outer: SurfaceData,
}

impl BoundaryCondition {
    pub fn zero() -> Self {
        Self { d1: SurfaceData::Zero, d2: SurfaceData::Zero, outer: SurfaceData::Zero }
    }

    /// `psi_alpha` on one inclusion, zero elsewhere.
    pub fn rigid_on(part: Part, alpha: usize) -> Self {
        let mut bc = Self::zero();
        *bc.part_mut(part) = SurfaceData::Rigid(alpha);
        bc
    }

    /// `psi_alpha` on both inclusions, zero on the container.
    pub fn rigid_on_both(alpha: usize) -> Self {
        Self { d1: SurfaceData::Rigid(alpha), d2: SurfaceData::Rigid(alpha), outer: SurfaceData::Zero }
    }

    /// Outer data `phi`, zero on the inclusions.
    pub fn outer(phi: SurfaceData) -> Self {
        Self { outer: phi, ..Self::zero() }
    }

    pub fn part(&self, part: Part) -> &SurfaceData {
        match part {
            Part::D1 => &self.d1,
            Part::D2 => &self.d2,
            Part::Outer => &self.outer,
        }
    }

    pub fn part_mut(&mut self, part: Part) -> &mut SurfaceData {
        match part {
            Part::D1 => &mut self.d1,
            Part::D2 => &mut self.d2,
            Part::Outer => &mut self.outer,
        }
    }
}

/// Point forces lodged outside the fluid.
#[derive(Clone, Debug)]
pub struct StokesletSet {
    pub locations: Arc<Vec<Vec3>>,
    /// Part whose fictitious surface carries each location.
    pub parts: Arc<Vec<Part>>,
    pub strengths: Vec<Vec3>,
}

impl StokesletSet {
    /// `sum_{y in part} psi_beta(y) . g_y` for `beta = 1..=6`.
    pub fn moments(&self, part: Part) -> [f64; 6] {
        let mut out = [0.0; 6];
        for ((y, g), p) in self.locations.iter().zip(&self.strengths).zip(self.parts.iter()) {
            if *p == part {
                for (b, o) in out.iter_mut().enumerate() {
                    let psi = rigid3(b + 1, y);
                    *o += psi[0] * g[0] + psi[1] * g[1] + psi[2] * g[2];
                }
            }
        }
        out
    }

    pub fn max_strength(&self) -> f64 {
        self.strengths.iter().map(crate::geometry::norm).fold(0.0, f64::max)
    }
}

fn rigid3(alpha: usize, x: &Vec3) -> Vec3 {
    match alpha {
        1 => [1.0, 0.0, 0.0],
        2 => [0.0, 1.0, 0.0],
        3 => [0.0, 0.0, 1.0],
        4 => [x[1], -x[0], 0.0],
        5 => [x[2], 0.0, -x[0]],
        6 => [0.0, x[2], -x[1]],
        _ => unreachable!("three-dimensional rigid index"),
    }
}

/// Velocity, gauge-relative pressure, velocity gradient and Cauchy stress at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowSample {
    pub velocity: Vec3,
    pub pressure: f64,
    pub grad: [[f64; 3]; 3],
    pub stress: [[f64; 3]; 3],
}

/// A Stokes flow represented by a Stokeslet superposition.
#[derive(Clone, Debug)]
pub struct FlowSolution {
    pub disc: Arc<Discretization>,
    pub sources: StokesletSet,
    gauge: OnceLock<f64>,
}

impl FlowSolution {
    pub fn new(disc: Arc<Discretization>, strengths: Vec<Vec3>) -> Self {
        let sources = StokesletSet {
            locations: Arc::new(disc.sources.clone()),
            parts: Arc::new(disc.source_parts()),
            strengths,
        };
        Self { disc, sources, gauge: OnceLock::new() }
    }

    pub fn mu(&self) -> f64 {
        self.disc.params.mu
    }

    pub fn velocity(&self, x: &Vec3) -> Vec3 {
        let c = 1.0 / (8.0 * PI * self.mu());
        let mut u = [0.0; 3];
        for (y, g) in self.sources.locations.iter().zip(&self.sources.strengths) {
            let v = kernel::velocity_at(&[x[0] - y[0], x[1] - y[1], x[2] - y[2]], g, c);
            for k in 0..3 {
                u[k] += v[k];
            }
        }
        u
    }

    pub fn raw_pressure(&self, x: &Vec3) -> f64 {
        let mut p = 0.0;
        for (y, g) in self.sources.locations.iter().zip(&self.sources.strengths) {
            let r = [x[0] - y[0], x[1] - y[1], x[2] - y[2]];
            let r2 = r[0] * r[0] + r[1] * r[1] + r[2] * r[2];
            p += (r[0] * g[0] + r[1] * g[1] + r[2] * g[2]) / (r2 * r2.sqrt());
        }
        p / (4.0 * PI)
    }

    /// Pressure constant subtracted by [`eval_flow`]: the mean pressure over the
    /// reference shell `R/2 <= |x'| <= R` of the neck for gap scenes, zero otherwise.
    pub fn gauge(&self) -> f64 {
        *self.gauge.get_or_init(|| match &self.disc.scene.geom {
            Some(g) => shell_mean(g, |x| self.raw_pressure(x)),
            None => 0.0,
        })
    }

    /// Moments `sum psi_beta(y) . g_y` of the sources inside `part`.
    pub fn moments(&self, part: Part) -> [f64; 6] {
        self.sources.moments(part)
    }
}

/// Mean of `f` over the shell `R/2 <= |x'| <= R` between the two inclusion surfaces.
pub fn shell_mean(geom: &GapGeometry, f: impl Fn(&Vec3) -> f64 + Sync) -> f64 {
    let (r0, r1) = geom.gauge_shell();
    let (xr, wr) = gauss_legendre(8);
    let (xt, wt) = gauss_legendre(8);
    let nphi = 8;
    let pts: Vec<(Vec3, f64)> = (0..xr.len())
        .flat_map(|i| {
            let r = r0 + (r1 - r0) * 0.5 * (xr[i] + 1.0);
            let top = geom.sphere_top(r);
            let w_r = wr[i] * 0.5 * (r1 - r0) * r;
            let (xt, wt) = (&xt, &wt);
            (0..nphi).flat_map(move |k| {
                let phi = 2.0 * PI * k as f64 / nphi as f64;
                (0..xt.len()).map(move |j| {
                    let z = top * xt[j];
                    let w = w_r * (2.0 * PI / nphi as f64) * wt[j] * top;
                    ([r * phi.cos(), r * phi.sin(), z], w)
                })
            })
        })
        .collect();
    let vals: Vec<f64> = pts.par_iter().map(|(x, w)| w * f(x)).collect();
    let vol: f64 = pts.iter().map(|p| p.1).sum();
    vals.iter().sum::<f64>() / vol
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut t = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, t);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * t * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (t * p1 - p0) / (t * t - 1.0);
            let dt = p1 / dp;
            t -= dt;
            if dt.abs() < 1e-16 {
                let (mut q0, mut q1) = (1.0, t);
                for k in 2..=n {
                    let q2 = ((2 * k - 1) as f64 * t * q1 - (k - 1) as f64 * q0) / k as f64;
                    q0 = q1;
                    q1 = q2;
                }
                let dq = n as f64 * (t * q1 - q0) / (t * t - 1.0);
                w[i] = 2.0 / ((1.0 - t * t) * dq * dq);
                break;
            }
        }
        x[i] = t;
    }
    (x, w)
}

/// Evaluates the flow at a point of the closed fluid domain.
pub fn eval_flow(sol: &FlowSolution, x: &Vec3) -> Result<FlowSample> {
    if !sol.disc.scene.in_fluid(x) {
        return Err(Error::OutsideDomain(format!("{x:?}")));
    }
    let mu = sol.mu();
    let mut out = FlowSample { velocity: [0.0; 3], pressure: 0.0, grad: [[0.0; 3]; 3], stress: [[0.0; 3]; 3] };
    for (y, g) in sol.sources.locations.iter().zip(&sol.sources.strengths) {
        let r = [x[0] - y[0], x[1] - y[1], x[2] - y[2]];
        let r2 = r[0] * r[0] + r[1] * r[1] + r[2] * r[2];
        if r2 == 0.0 {
            return Err(Error::Singular);
        }
        let k = kernel::kernel_at(&r, r2, g, mu);
        out.pressure += k.pressure;
        for i in 0..3 {
            out.velocity[i] += k.velocity[i];
            for j in 0..3 {
                out.grad[i][j] += k.grad[i][j];
                out.stress[i][j] += k.stress[i][j];
            }
        }
    }
    let gauge = sol.gauge();
    out.pressure -= gauge;
    for i in 0..3 {
        out.stress[i][i] += gauge;
    }
    Ok(out)
}

/// `int_{dD_part} psi_beta . sigma nu`, with `nu` pointing into the fluid,
/// computed exactly from the source moments: a closed surface enclosing point
/// forces `g_y` carries total traction `-sum g_y`.
pub fn traction_integral(sol: &FlowSolution, part: Part, beta: usize) -> Result<f64> {
    if part == Part::Outer || !(1..=6).contains(&beta) {
        return Err(Error::Validation(format!("traction integral needs an inclusion and beta in 1..=6, got {part:?}, {beta}")));
    }
    Ok(-sol.moments(part)[beta - 1])
}

/// Same integral by quadrature of the analytic stress over the surface mesh.
pub fn traction_quadrature(sol: &FlowSolution, part: Part, beta: usize) -> Result<f64> {
    let s = sol
        .disc
        .surface_index(part)
        .filter(|_| part != Part::Outer)
        .ok_or_else(|| Error::Validation(format!("no inclusion {part:?} in scene")))?;
    let mesh = &sol.disc.meshes[s];
    let idx: Vec<usize> = (0..mesh.nodes.len()).collect();
    let parts: Result<Vec<f64>> = idx
        .par_iter()
        .map(|&k| {
            let x = mesh.nodes[k];
            let n = mesh.normals[k];
            let f = eval_flow(sol, &x)?;
            let psi = rigid3(beta, &x);
            let mut acc = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    acc += psi[i] * f.stress[i][j] * n[j];
                }
            }
            Ok(acc * mesh.weights[k])
        })
        .collect();
    Ok(parts?.iter().sum())
}

/// Velocity mismatch at held-out boundary points.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct BoundaryResidual {
    pub max: f64,
    pub rms: f64,
    /// Largest boundary datum at the probes.
    pub data_scale: f64,
    /// False when some surface carried nodal data, which is checked at mesh nodes instead.
    pub held_out: bool,
    pub probes: usize,
}

impl BoundaryResidual {
    pub fn relative_max(&self) -> f64 {
        if self.data_scale > 0.0 { self.max / self.data_scale } else { self.max }
    }
}

/// Result of a Dirichlet solve.
#[derive(Clone, Debug)]
pub struct DirichletSolve {
    pub solution: FlowSolution,
    pub bc: BoundaryCondition,
    pub residual: BoundaryResidual,
    pub diagnostics: Vec<(Family, LsReport)>,
    pub converged: bool,
}

/// Result of the rigid-inclusion solve.
#[derive(Clone, Debug)]
pub struct ConstrainedSolve {
    pub solution: FlowSolution,
    pub phi: SurfaceData,
    /// `constants[i][alpha - 1] = C_{i+1}^alpha` for each inclusion of the scene.
    pub constants: Vec<[f64; 6]>,
    pub residual: BoundaryResidual,
    /// `max_beta |int psi_beta . sigma nu|` per inclusion.
    pub force_torque_residual: Vec<f64>,
    pub diagnostics: Vec<(Family, LsReport)>,
    pub converged: bool,
}

struct FamilySystem {
    matrix: Mat<f64>,
    /// Moments `sum psi_beta . g` of each column, `beta = 1..=6`.
    moments: Vec<[f64; 6]>,
    col_surface: Vec<usize>,
}

/// Collocation solver bound to one discretized scene. Family matrices are
/// assembled on first use and shared by every subsequent solve.
pub struct MfsSolver {
    pub disc: Arc<Discretization>,
    systems: Vec<OnceLock<Arc<FamilySystem>>>,
}

impl MfsSolver {
    pub fn new(scene: Scene, params: SolverParams) -> Result<Self> {
        let disc = Arc::new(Discretization::new(scene, params)?);
        let systems = (0..Family::all(disc.params.m_max).len()).map(|_| OnceLock::new()).collect();
        Ok(Self { disc, systems })
    }

    pub fn gap(geom: &GapGeometry, params: SolverParams) -> Result<Self> {
        Self::new(Scene::gap(geom)?, params)
    }

    pub fn families(&self) -> Vec<Family> {
        Family::all(self.disc.params.m_max)
    }

    fn system(&self, k: usize) -> Arc<FamilySystem> {
        self.systems[k].get_or_init(|| Arc::new(assemble(&self.disc, self.families()[k]))).clone()
    }

    pub fn solve_dirichlet(&self, bc: &BoundaryCondition) -> Result<DirichletSolve> {
        Ok(self.solve_dirichlet_many(std::slice::from_ref(bc))?.remove(0))
    }

    /// Solves several Dirichlet problems sharing one factorization per family.
    pub fn solve_dirichlet_many(&self, bcs: &[BoundaryCondition]) -> Result<Vec<DirichletSolve>> {
        for bc in bcs {
            self.check_compatible(bc)?;
        }
        let disc = &self.disc;
        let mut strengths = vec![vec![[0.0; 3]; disc.sources.len()]; bcs.len()];
        let mut diags = vec![Vec::new(); bcs.len()];
        for (k, fam) in self.families().into_iter().enumerate() {
            let data: Vec<Vec<f64>> = bcs.iter().map(|bc| self.rhs(bc, fam)).collect();
            let active: Vec<usize> = (0..bcs.len()).filter(|&i| data[i].iter().any(|v| *v != 0.0)).collect();
            if active.is_empty() {
                continue;
            }
            let sys = self.system(k);
            let rhs = Mat::from_fn(sys.matrix.nrows(), active.len(), |r, c| data[active[c]][r]);
            let (coef, rep) = lstsq::solve(&sys.matrix, &rhs, disc.params.trunc)?;
            for (c, &i) in active.iter().enumerate() {
                let col: Vec<f64> = (0..coef.nrows()).map(|r| coef[(r, c)]).collect();
                add_strengths(disc, fam, &col, &mut strengths[i]);
                diags[i].push((fam, rep.clone()));
            }
        }
        let sols: Vec<FlowSolution> =
            strengths.into_iter().map(|s| FlowSolution::new(disc.clone(), s)).collect();
        let refs: Vec<&FlowSolution> = sols.iter().collect();
        let residuals = residuals(disc, &refs, bcs);
        Ok(sols
            .into_iter()
            .zip(bcs)
            .zip(residuals)
            .zip(diags)
            .map(|(((solution, bc), residual), diagnostics)| {
                let converged = residual.relative_max() <= disc.params.tol;
                DirichletSolve { solution, bc: bc.clone(), residual, diagnostics, converged }
            })
            .collect())
    }

    /// Solves for the flow with data `phi` on the container and unknown rigid
    /// motions of the inclusions, whose sources carry zero net force and torque.
    pub fn solve_constrained(&self, phi: &SurfaceData) -> Result<ConstrainedSolve> {
        let bc = BoundaryCondition::outer(phi.clone());
        self.check_compatible(&bc)?;
        let disc = &self.disc;
        let nb = disc.scene.bodies.len();
        let mut strengths = vec![[0.0; 3]; disc.sources.len()];
        let mut constants = vec![[0.0; 6]; nb];
        let mut diagnostics = Vec::new();
        for (k, fam) in self.families().into_iter().enumerate() {
            let data = self.rhs(&bc, fam);
            if data.iter().all(|v| *v == 0.0) {
                continue;
            }
            let sys = self.system(k);
            let ncol = sys.matrix.ncols();
            let unknowns: Vec<(usize, usize)> = (0..nb)
                .flat_map(|b| (1..=6).map(move |beta| (b, beta)))
                .filter(|&(_, beta)| rigid_in_family(beta, fam))
                .collect();
            let cons = Mat::from_fn(unknowns.len(), ncol, |r, c| {
                let (b, beta) = unknowns[r];
                if sys.col_surface[c] == b { sys.moments[c][beta - 1] } else { 0.0 }
            });
            let null = lstsq::null_space(&cons, 1e-12)?;
            let an = &sys.matrix * &null;
            let psi: Vec<Vec<f64>> = unknowns
                .iter()
                .map(|&(b, beta)| {
                    let mut one = BoundaryCondition::zero();
                    *one.part_mut(disc.surface_part(b)) = SurfaceData::Rigid(beta);
                    self.rhs(&one, fam)
                })
                .collect();
            let nz = an.ncols();
            let full = Mat::from_fn(an.nrows(), nz + unknowns.len(), |r, c| {
                if c < nz { an[(r, c)] } else { -psi[c - nz][r] }
            });
            let rhs = Mat::from_fn(data.len(), 1, |r, _| data[r]);
            let (sol, rep) = lstsq::solve(&full, &rhs, disc.params.trunc)?;
            let z = Mat::from_fn(nz, 1, |r, _| sol[(r, 0)]);
            let x = &null * &z;
            let col: Vec<f64> = (0..ncol).map(|r| x[(r, 0)]).collect();
            add_strengths(disc, fam, &col, &mut strengths);
            for (u, &(b, beta)) in unknowns.iter().enumerate() {
                constants[b][beta - 1] += sol[(nz + u, 0)];
            }
            diagnostics.push((fam, rep));
        }
        let solution = FlowSolution::new(disc.clone(), strengths);
        let mut body_bc = bc.clone();
        for (b, body) in disc.scene.bodies.iter().enumerate() {
            *body_bc.part_mut(body.part) = SurfaceData::Motion(constants[b]);
        }
        let residual = residuals(disc, &[&solution], std::slice::from_ref(&body_bc)).remove(0);
        let force_torque_residual = disc
            .scene
            .bodies
            .iter()
            .map(|b| solution.moments(b.part).iter().fold(0.0f64, |m, v| m.max(v.abs())))
            .collect();
        let converged = residual.relative_max() <= disc.params.tol;
        Ok(ConstrainedSolve {
            solution,
            phi: phi.clone(),
            constants,
            residual,
            force_torque_residual,
            diagnostics,
            converged,
        })
    }

    /// Rejects data whose net flux through the fluid boundary is not small.
    fn check_compatible(&self, bc: &BoundaryCondition) -> Result<()> {
        let disc = &self.disc;
        let (mut flux, mut scale) = (0.0, 0.0);
        for (s, mesh) in disc.meshes.iter().enumerate() {
            let part = disc.surface_part(s);
            let data = bc.part(part);
            if let SurfaceData::Nodal(v) = data {
                if v.len() != mesh.nodes.len() {
                    return Err(Error::Validation(format!(
                        "{} data has {} nodes, mesh has {}",
                        part.name(),
                        v.len(),
                        mesh.nodes.len()
                    )));
                }
            }
            let sign = if part == Part::Outer { 1.0 } else { -1.0 };
            for k in 0..mesh.nodes.len() {
                let u = data.at(&mesh.nodes[k], Some(k)).unwrap_or([0.0; 3]);
                let n = mesh.normals[k];
                let un = u[0] * n[0] + u[1] * n[1] + u[2] * n[2];
                flux += sign * mesh.weights[k] * un;
                scale += mesh.weights[k] * un.abs();
            }
        }
        if scale > 0.0 && flux.abs() > 1e-3 * scale {
            return Err(Error::Validation(format!(
                "boundary data carries net flux {flux:.3e} (total |u.n| {scale:.3e})"
            )));
        }
        Ok(())
    }

    /// Family coefficients of `bc` on every collocation ring, in row order.
    fn rhs(&self, bc: &BoundaryCondition, fam: Family) -> Vec<f64> {
        let disc = &self.disc;
        let mut out = Vec::with_capacity(disc.colloc.len() * fam.comps().len());
        for ring in &disc.colloc {
            let mesh = &disc.meshes[ring.surface];
            let data = bc.part(disc.surface_part(ring.surface));
            let mr = &mesh.rings[ring.mesh_ring];
            let coef = if data.is_zero() {
                [0.0; 3]
            } else {
                let samples: Vec<Vec3> = (mr.first..mr.first + mr.count)
                    .map(|k| data.at(&mesh.nodes[k], Some(k)).unwrap_or([0.0; 3]))
                    .collect();
                fam.project(&samples)
            };
            for &c in fam.comps() {
                let v = coef[c.index()];
                out.push(if v.abs() < 1e-15 { 0.0 } else { v });
            }
        }
        out
    }
}

fn rigid_in_family(beta: usize, fam: Family) -> bool {
    let n = 16;
    let samples: Vec<Vec3> = (0..n)
        .map(|j| {
            let e = basis(2.0 * PI * j as f64 / n as f64)[0];
            rigid3(beta, &[0.7 * e[0], 0.7 * e[1], 0.3])
        })
        .collect();
    fam.project(&samples).iter().any(|v| v.abs() > 1e-12)
}

fn assemble(disc: &Discretization, fam: Family) -> FamilySystem {
    let comps = fam.comps();
    let nc = comps.len();
    let c8 = 1.0 / (8.0 * PI * disc.params.mu);
    // Force patterns per source ring and component.
    let patterns: Vec<Vec<Vec<Vec3>>> = disc
        .src_rings
        .iter()
        .map(|ring| {
            comps
                .iter()
                .map(|&c| {
                    (0..ring.count)
                        .map(|j| {
                            let phi = 2.0 * PI * j as f64 / ring.count as f64;
                            let e = basis(phi)[c.index()];
                            let w = fam.weight(c, phi);
                            [w * e[0], w * e[1], w * e[2]]
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let ncol = disc.src_rings.len() * nc;
    let blocks: Vec<Vec<f64>> = disc
        .colloc
        .par_iter()
        .map(|ring| {
            let mut block = vec![0.0; nc * ncol];
            let mut azimuths: Vec<f64> = comps.iter().map(|&c| fam.probe_azimuth(c)).collect();
            azimuths.dedup();
            for &phi_e in &azimuths {
                let e = basis(phi_e)[0];
                let x = [ring.r * e[0], ring.r * e[1], ring.z];
                for (s, src) in disc.src_rings.iter().enumerate() {
                    let mut u = [[0.0; 3]; 3];
                    for j in 0..src.count {
                        let y = disc.sources[src.first + j];
                        let r = [x[0] - y[0], x[1] - y[1], x[2] - y[2]];
                        let r2 = r[0] * r[0] + r[1] * r[1] + r[2] * r[2];
                        let inv_r = 1.0 / r2.sqrt();
                        let inv_r3 = inv_r / r2;
                        for ci in 0..nc {
                            let g = patterns[s][ci][j];
                            let rg = (r[0] * g[0] + r[1] * g[1] + r[2] * g[2]) * inv_r3;
                            for k in 0..3 {
                                u[ci][k] += g[k] * inv_r + r[k] * rg;
                            }
                        }
                    }
                    for (ri, &cr) in comps.iter().enumerate() {
                        if fam.probe_azimuth(cr) != phi_e {
                            continue;
                        }
                        for ci in 0..nc {
                            block[ri * ncol + s * nc + ci] = c8 * to_cylindrical(&u[ci], phi_e)[cr.index()];
                        }
                    }
                }
            }
            block
        })
        .collect();
    let nrow = disc.colloc.len() * nc;
    let matrix = Mat::from_fn(nrow, ncol, |r, c| blocks[r / nc][(r % nc) * ncol + c]);
    let mut moments = Vec::with_capacity(ncol);
    let mut col_surface = Vec::with_capacity(ncol);
    for (s, src) in disc.src_rings.iter().enumerate() {
        for ci in 0..nc {
            let mut m = [0.0; 6];
            for j in 0..src.count {
                let y = disc.sources[src.first + j];
                let g = patterns[s][ci][j];
                for (b, mb) in m.iter_mut().enumerate() {
                    let psi = rigid3(b + 1, &y);
                    *mb += psi[0] * g[0] + psi[1] * g[1] + psi[2] * g[2];
                }
            }
            moments.push(m);
            col_surface.push(src.surface);
        }
    }
    FamilySystem { matrix, moments, col_surface }
}

fn add_strengths(disc: &Discretization, fam: Family, coef: &[f64], strengths: &mut [Vec3]) {
    let comps = fam.comps();
    let nc = comps.len();
    for (s, src) in disc.src_rings.iter().enumerate() {
        for (ci, &c) in comps.iter().enumerate() {
            let a = coef[s * nc + ci];
            if a == 0.0 {
                continue;
            }
            for j in 0..src.count {
                let phi = 2.0 * PI * j as f64 / src.count as f64;
                let e = basis(phi)[c.index()];
                let w = a * fam.weight(c, phi);
                let g = &mut strengths[src.first + j];
                for k in 0..3 {
                    g[k] += w * e[k];
                }
            }
        }
    }
}

/// Held-out residuals of several solutions sharing one source layout.
fn residuals(disc: &Discretization, sols: &[&FlowSolution], bcs: &[BoundaryCondition]) -> Vec<BoundaryResidual> {
    let nodal: Vec<bool> = bcs
        .iter()
        .map(|bc| [&bc.d1, &bc.d2, &bc.outer].iter().any(|d| matches!(d, SurfaceData::Nodal(_))))
        .collect();
    // Probes, plus two mesh nodes per ring on surfaces that carry nodal data.
    let mut points: Vec<(Probe, Option<usize>)> = disc.probes.iter().map(|p| (p.clone(), None)).collect();
    if nodal.iter().any(|n| *n) {
        for (s, mesh) in disc.meshes.iter().enumerate() {
            for r in &mesh.rings {
                for k in [r.first, r.first + r.count / 3] {
                    points.push((Probe { surface: s, x: mesh.nodes[k] }, Some(k)));
                }
            }
        }
    }
    let c = 1.0 / (8.0 * PI * disc.params.mu);
    let errs: Vec<Vec<Option<(f64, f64)>>> = points
        .par_iter()
        .map(|(p, node)| {
            let x = p.x;
            let mut u = vec![[0.0; 3]; sols.len()];
            for (j, y) in disc.sources.iter().enumerate() {
                let r = [x[0] - y[0], x[1] - y[1], x[2] - y[2]];
                for (k, s) in sols.iter().enumerate() {
                    let g = &s.sources.strengths[j];
                    if g[0] == 0.0 && g[1] == 0.0 && g[2] == 0.0 {
                        continue;
                    }
                    let v = kernel::velocity_at(&r, g, c);
                    for i in 0..3 {
                        u[k][i] += v[i];
                    }
                }
            }
            let part = disc.surface_part(p.surface);
            bcs.iter()
                .enumerate()
                .map(|(k, bc)| {
                    let data = bc.part(part);
                    let nodal_surface = matches!(data, SurfaceData::Nodal(_));
                    if nodal_surface != node.is_some() {
                        return None;
                    }
                    let want = match node {
                        Some(n) => data.at(&x, Some(*n))?,
                        None => data.at(&x, None)?,
                    };
                    let e = crate::geometry::dist(&u[k], &want);
                    Some((e, crate::geometry::norm(&want)))
                })
                .collect()
        })
        .collect();
    (0..bcs.len())
        .map(|k| {
            let mut res = BoundaryResidual { held_out: !nodal[k], ..Default::default() };
            let mut sum2 = 0.0;
            for row in &errs {
                if let Some((e, d)) = row[k] {
                    res.max = res.max.max(e);
                    res.data_scale = res.data_scale.max(d);
                    sum2 += e * e;
                    res.probes += 1;
                }
            }
            res.rms = if res.probes > 0 { (sum2 / res.probes as f64).sqrt() } else { 0.0 };
            res
        })
        .collect()
}

/// Dirichlet solve on the gap scene of `geom`.
pub fn solve_dirichlet(geom: &GapGeometry, params: SolverParams, bc: &BoundaryCondition) -> Result<DirichletSolve> {
    MfsSolver::gap(geom, params)?.solve_dirichlet(bc)
}

/// Rigid-inclusion solve on the gap scene of `geom`.
pub fn solve_constrained(geom: &GapGeometry, params: SolverParams, phi: &SurfaceData) -> Result<ConstrainedSolve> {
    MfsSolver::gap(geom, params)?.solve_constrained(phi)
}

/// Drag correction `F / (6 pi mu a U)` for a sphere translating at the centre of a
/// fixed concentric spherical container, with `lambda = a / rho`.
pub fn concentric_drag_factor(lambda: f64) -> f64 {
    let l = lambda;
    (1.0 - l.powi(5)) / (1.0 - 2.25 * l + 2.5 * l.powi(3) - 2.25 * l.powi(5) + l.powi(6))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere_drag(radius: f64, rho: f64) -> (f64, DirichletSolve) {
        let solver = MfsSolver::new(Scene::single_sphere(radius, rho).unwrap(), SolverParams::default()).unwrap();
        let s = solver.solve_dirichlet(&BoundaryCondition::rigid_on(Part::D1, 3)).unwrap();
        let force = s.solution.moments(Part::D1)[2];
        (force, s)
    }

    #[test]
    fn drag_matches_concentric_oracle() {
        let (f, s) = sphere_drag(1.0, 8.0);
        assert!(s.converged);
        let oracle = 6.0 * PI * concentric_drag_factor(1.0 / 8.0);
        assert!((f / oracle - 1.0).abs() < 1e-6, "{f} vs {oracle}");
    }

    #[test]
    fn drag_approaches_unbounded_stokes_law() {
        let (f, _) = sphere_drag(0.5, 200.0);
        let stokes = 6.0 * PI * 0.5;
        assert!((f / stokes - 1.0).abs() < 0.02, "{f} vs {stokes}");
    }

    #[test]
    fn drag_by_mesh_quadrature_agrees_with_moments() {
        let (f, s) = sphere_drag(1.0, 8.0);
        let q = traction_quadrature(&s.solution, Part::D1, 3).unwrap();
        assert!((q + f).abs() < 1e-3 * f, "{q} vs {f}");
    }

    #[test]
    fn zero_data_gives_zero_field() {
        let g = GapGeometry::new(3, 0.1).unwrap();
        let s = solve_dirichlet(&g, SolverParams::default(), &BoundaryCondition::zero()).unwrap();
        let f = eval_flow(&s.solution, &[0.1, 0.2, 0.0]).unwrap();
        let m = f.velocity.iter().chain(f.grad.iter().flatten()).fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(m < 1e-10 && f.pressure.abs() < 1e-10);
    }

    #[test]
    fn rigid_container_data_moves_inclusions_rigidly() {
        let g = GapGeometry::new(3, 0.1).unwrap();
        let s = solve_constrained(&g, SolverParams::default(), &SurfaceData::Rigid(4)).unwrap();
        assert!(s.converged);
        for (k, c) in s.constants.iter().flatten().enumerate() {
            let want = if k % 6 == 3 { 1.0 } else { 0.0 };
            assert!((c - want).abs() < 1e-6, "{k}: {c}");
        }
    }

    #[test]
    fn points_outside_fluid_are_rejected() {
        let g = GapGeometry::new(3, 0.1).unwrap();
        let s = solve_dirichlet(&g, SolverParams::default(), &BoundaryCondition::zero()).unwrap();
        assert!(matches!(eval_flow(&s.solution, &[0.0, 0.0, 0.5]), Err(Error::OutsideDomain(_))));
    }

    #[test]
    fn incompatible_outer_flux_is_rejected() {
        let g = GapGeometry::new(3, 0.1).unwrap();
        let expand = SurfaceData::Linear([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
        assert!(matches!(solve_dirichlet(&g, SolverParams::default(), &BoundaryCondition::outer(expand)), Err(Error::Validation(_))));
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(8);
        let i: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((i - 2.0 / 15.0).abs() < 1e-14);
    }
}
