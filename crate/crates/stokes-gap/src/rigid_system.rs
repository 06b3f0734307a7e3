//! The free-constant linear system: coupling matrix `a_ij^{ab}`, right-hand
//! side `b_j^b`, rigid constants `C_i^a`, Cauchy stress and the blow-up
//! functionals `b~_j^b`.
//!
//! Indices: `i, j` in `{1, 2}` name the inclusions, `alpha, beta` in `1..=6`
//! the rigid motions. Flat index of `(i, alpha)` is `6 (i - 1) + alpha - 1`.

use crate::error::{Error, Result};
use crate::geometry::{Part, Vec3};
use crate::stokes_mfs::{
    eval_flow, BoundaryCondition, DirichletSolve, FlowSolution, MfsSolver, SurfaceData,
};
use faer::{Mat, Side};
use serde::Serialize;

pub const M3: usize = 6;

/// Off-diagonal entries of `a_11` (and `a_22`, `a_12`, `a_21`) that vanish by
/// the mirror symmetries of the two-sphere scene.
pub const SYMMETRY_ZEROS: [(usize, usize); 13] = [
    (1, 2), (1, 3), (1, 4), (1, 6),
    (2, 3), (2, 4), (2, 5),
    (3, 4), (3, 5), (3, 6),
    (4, 5), (4, 6),
    (5, 6),
];

pub fn flat(i: usize, alpha: usize) -> usize {
    M3 * (i - 1) + alpha - 1
}

#[derive(Clone, Debug, Serialize)]
pub struct CouplingMatrix {
    pub m: usize,
    pub eps: f64,
    /// `a[flat(i, alpha)][flat(j, beta)] = a_ij^{alpha beta}`.
    pub a: Vec<Vec<f64>>,
    /// `b[flat(j, beta)] = b_j^beta`.
    pub b: Vec<f64>,
    /// `max |a_ij^{ab} - a_ji^{ba}| / max |a|`.
    pub symmetry_defect: f64,
    /// Eigenvalues of the symmetric part of `a_11`, ascending.
    pub a11_eigenvalues: Vec<f64>,
    pub n_base: usize,
    pub sources: usize,
    /// Largest held-out residual among the cell solves, relative to their data.
    pub max_cell_residual: f64,
}

impl CouplingMatrix {
    pub fn entry(&self, i: usize, alpha: usize, j: usize, beta: usize) -> f64 {
        self.a[flat(i, alpha)][flat(j, beta)]
    }

    pub fn a11_diag(&self) -> [f64; M3] {
        std::array::from_fn(|k| self.entry(1, k + 1, 1, k + 1))
    }

    /// Largest symmetry-forbidden entry of any block, relative to the largest diagonal of `a_11`.
    pub fn symmetry_pattern_defect(&self) -> f64 {
        let scale = self.a11_diag().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut worst = 0.0f64;
        for (al, be) in SYMMETRY_ZEROS {
            for i in 1..=2 {
                for j in 1..=2 {
                    worst = worst.max(self.entry(i, al, j, be).abs()).max(self.entry(i, be, j, al).abs());
                }
            }
        }
        worst / scale
    }

    /// Checks reciprocity (relative tolerance `tol`) and positivity of `a_11`.
    pub fn check(&self, tol: f64) -> Result<()> {
        if !(self.symmetry_defect <= tol) {
            return Err(Error::Numerical(format!(
                "coupling matrix asymmetry {:.3e} exceeds {tol:.1e}",
                self.symmetry_defect
            )));
        }
        if !(self.a11_eigenvalues.first().copied().unwrap_or(0.0) > 0.0) {
            return Err(Error::Numerical(format!(
                "a_11 is not positive definite: eigenvalues {:?}",
                self.a11_eigenvalues
            )));
        }
        Ok(())
    }
}

/// The `2m` cell solutions `u_i^alpha` and the solution `u_0` with outer data `phi`.
#[derive(Clone, Debug)]
pub struct CellSolves {
    /// `cells[flat(i, alpha)]`.
    pub cells: Vec<DirichletSolve>,
    pub u0: DirichletSolve,
}

pub fn cell_solves(solver: &MfsSolver, phi: &SurfaceData) -> Result<CellSolves> {
    let mut bcs: Vec<BoundaryCondition> = Vec::with_capacity(2 * M3 + 1);
    for part in [Part::D1, Part::D2] {
        for alpha in 1..=M3 {
            bcs.push(BoundaryCondition::rigid_on(part, alpha));
        }
    }
    bcs.push(BoundaryCondition::outer(phi.clone()));
    let mut all = solver.solve_dirichlet_many(&bcs)?;
    let u0 = all.pop().expect("u0 solve");
    Ok(CellSolves { cells: all, u0 })
}

/// Assembles `a` and `b` from exact source moments of the cell solutions.
pub fn assemble_coupling(solver: &MfsSolver, phi: &SurfaceData) -> Result<(CouplingMatrix, CellSolves)> {
    let geom = solver
        .disc
        .scene
        .geom
        .clone()
        .ok_or_else(|| Error::Validation("coupling matrix needs a two-inclusion scene".into()))?;
    let cs = cell_solves(solver, phi)?;
    let mut offenders = Vec::new();
    for (k, c) in cs.cells.iter().enumerate() {
        if !c.converged {
            offenders.push(format!("u_{}^{} ({:.2e})", k / M3 + 1, k % M3 + 1, c.residual.relative_max()));
        }
    }
    if !cs.u0.converged {
        offenders.push(format!("u_0 ({:.2e})", cs.u0.residual.relative_max()));
    }
    if !offenders.is_empty() {
        return Err(Error::Numerical(format!("non-converged cell solves: {}", offenders.join(", "))));
    }
    let n = 2 * M3;
    let mut a = vec![vec![0.0; n]; n];
    let mut b = vec![0.0; n];
    for (j, part) in [(1, Part::D1), (2, Part::D2)] {
        for (row, c) in cs.cells.iter().enumerate() {
            let mom = c.solution.moments(part);
            for beta in 1..=M3 {
                a[row][flat(j, beta)] = mom[beta - 1];
            }
        }
        let mom = cs.u0.solution.moments(part);
        for beta in 1..=M3 {
            b[flat(j, beta)] = -mom[beta - 1];
        }
    }
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut defect = 0.0f64;
    for p in 0..n {
        for q in 0..n {
            defect = defect.max((a[p][q] - a[q][p]).abs());
        }
    }
    let a11 = Mat::from_fn(M3, M3, |p, q| 0.5 * (a[p][q] + a[q][p]));
    let a11_eigenvalues = a11
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Numerical(format!("eigenvalues of a_11: {e:?}")))?;
    let max_cell_residual = cs
        .cells
        .iter()
        .chain(std::iter::once(&cs.u0))
        .map(|c| c.residual.relative_max())
        .fold(0.0, f64::max);
    let cm = CouplingMatrix {
        m: M3,
        eps: geom.eps,
        a,
        b,
        symmetry_defect: defect / scale,
        a11_eigenvalues,
        n_base: solver.disc.params.n_base,
        sources: solver.disc.sources.len(),
        max_cell_residual,
    };
    Ok((cm, cs))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RigidConstants {
    /// `c[i - 1][alpha - 1] = C_i^alpha`.
    pub c: [[f64; M3]; 2],
    /// `|a C - b| / |b|`.
    pub residual: f64,
    pub truncated: bool,
}

impl RigidConstants {
    pub fn diff(&self) -> [f64; M3] {
        std::array::from_fn(|k| self.c[0][k] - self.c[1][k])
    }
}

/// Solves `sum_i sum_alpha C_i^alpha a_ij^{alpha beta} = b_j^beta`.
pub fn solve_constants(cm: &CouplingMatrix, sanity_bound: f64) -> Result<RigidConstants> {
    let n = 2 * cm.m;
    let mat = Mat::from_fn(n, n, |r, c| cm.a[c][r]);
    let rhs = Mat::from_fn(n, 1, |r, _| cm.b[r]);
    let (x, rep) = crate::stokes_mfs::lstsq::solve(&mat, &rhs, 1e13)?;
    let mut c = [[0.0; M3]; 2];
    for i in 1..=2 {
        for alpha in 1..=M3 {
            c[i - 1][alpha - 1] = x[(flat(i, alpha), 0)];
        }
    }
    if c.iter().flatten().any(|v| !v.is_finite() || v.abs() > sanity_bound) {
        return Err(Error::Numerical(format!("rigid constants exceed the sanity bound {sanity_bound:.1e}: {c:?}")));
    }
    let bn = cm.b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let rn = (0..n)
        .map(|r| {
            let v: f64 = (0..n).map(|q| mat[(r, q)] * x[(q, 0)]).sum::<f64>() - cm.b[r];
            v * v
        })
        .sum::<f64>()
        .sqrt();
    Ok(RigidConstants { c, residual: if bn > 0.0 { rn / bn } else { rn }, truncated: rep.truncated })
}

/// Blow-up functionals `b~_j^beta = int_{dD_j} psi_beta . sigma[u_b] nu` with
/// `u_b = sum_alpha C_2^alpha (u_1^alpha + u_2^alpha) + u_0`.
pub fn tilde_b(cm: &CouplingMatrix, c: &RigidConstants, part: Part) -> Result<[f64; M3]> {
    let j = part.inclusion().ok_or_else(|| Error::Validation("b~ is defined on D1 or D2".into()))?;
    Ok(std::array::from_fn(|k| {
        let beta = k + 1;
        let mut v = cm.b[flat(j, beta)];
        for alpha in 1..=M3 {
            v -= c.c[1][alpha - 1] * (cm.entry(1, alpha, j, beta) + cm.entry(2, alpha, j, beta));
        }
        v
    }))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StressSample {
    pub sigma: [[f64; 3]; 3],
    /// Pressure constant subtracted from `p`.
    pub gauge: f64,
    /// Gauge-relative pressure.
    pub pressure: f64,
}

impl StressSample {
    pub fn norm(&self) -> f64 {
        self.sigma.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// `sigma[u, p - (p)_shell] = 2 mu e(u) - (p - gauge) I`.
pub fn cauchy_stress(sol: &FlowSolution, x: &Vec3) -> Result<StressSample> {
    let f = eval_flow(sol, x)?;
    let mu = sol.mu();
    let mut sigma = [[0.0; 3]; 3];
    for i in 0..3 {
        for k in 0..3 {
            sigma[i][k] = mu * (f.grad[i][k] + f.grad[k][i]);
        }
        sigma[i][i] -= f.pressure;
    }
    Ok(StressSample { sigma, gauge: sol.gauge(), pressure: f.pressure })
}

/// Outcome of both routes for the rigid constants on one geometry.
#[derive(Clone, Debug)]
pub struct TwoRoute {
    pub coupling: CouplingMatrix,
    pub decomposition: RigidConstants,
    pub cells: CellSolves,
    pub direct: crate::stokes_mfs::ConstrainedSolve,
    /// `max |C_direct - C_decomp| / max |C_direct|`.
    pub route_gap: f64,
}

pub fn two_route(solver: &MfsSolver, phi: &SurfaceData, sanity_bound: f64) -> Result<TwoRoute> {
    let (coupling, cells) = assemble_coupling(solver, phi)?;
    let decomposition = solve_constants(&coupling, sanity_bound)?;
    let direct = solver.solve_constrained(phi)?;
    let scale = direct.constants.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut gap = 0.0f64;
    for i in 0..2 {
        for k in 0..M3 {
            gap = gap.max((direct.constants[i][k] - decomposition.c[i][k]).abs());
        }
    }
    let route_gap = if scale > 0.0 { gap / scale } else { gap };
    Ok(TwoRoute { coupling, decomposition, cells, direct, route_gap })
}
