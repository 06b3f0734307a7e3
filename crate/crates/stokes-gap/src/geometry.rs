//! Two-inclusion gap geometry: neck profiles, gap thickness, boundary meshes.
//!
//! Lengths are measured in units of the inclusion radius `1/kappa2`. The neck
//! profiles `h1`, `h2` drive the auxiliary fields; the flow solver works with
//! the full spherical inclusions of radius `1/kappa2` whose lower/upper caps
//! are the graphs `eps/2 + a - sqrt(a^2 - |x'|^2)`.

use crate::error::{Error, Result};
use crate::jet::Jet;
use serde::Serialize;
use std::f64::consts::PI;

pub type Vec3 = [f64; 3];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    /// `h1 = h2 = kappa2/2 |x'|^2`.
    QuadraticSymmetric,
    /// `h1 = h2 = kappa2/2 |x'|^2 + quartic |x'|^4`.
    GeneralConvex,
}

impl ProfileKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "quadratic_symmetric" => Some(Self::QuadraticSymmetric),
            "general_convex" => Some(Self::GeneralConvex),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::QuadraticSymmetric => "quadratic_symmetric",
            Self::GeneralConvex => "general_convex",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Part {
    D1,
    D2,
    Outer,
}

impl Part {
    pub fn name(self) -> &'static str {
        match self {
            Part::D1 => "D1",
            Part::D2 => "D2",
            Part::Outer => "outer",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "D1" | "d1" => Some(Part::D1),
            "D2" | "d2" => Some(Part::D2),
            "outer" | "D" => Some(Part::Outer),
            _ => None,
        }
    }

    /// Inclusion index 1 or 2; `None` for the container.
    pub fn inclusion(self) -> Option<usize> {
        match self {
            Part::D1 => Some(1),
            Part::D2 => Some(2),
            Part::Outer => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapGeometry {
    pub d: usize,
    pub eps: f64,
    pub kappa2: f64,
    /// Coefficient of `|x'|^4` in the general convex profile.
    pub quartic: f64,
    pub r_neck: f64,
    pub profile_kind: ProfileKind,
    /// Radius of the spherical container centred at the origin.
    pub rho_d: f64,
}

impl GapGeometry {
    pub fn new(d: usize, eps: f64) -> Result<Self> {
        Self {
            d,
            eps,
            kappa2: 1.0,
            quartic: 0.0,
            r_neck: 0.5,
            profile_kind: ProfileKind::QuadraticSymmetric,
            rho_d: 8.0,
        }
        .validated()
    }

    pub fn validated(self) -> Result<Self> {
        if self.d < 2 {
            return Err(Error::Validation(format!("dim must be >= 2, got {}", self.d)));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::Validation(format!("eps must be > 0, got {}", self.eps)));
        }
        if !(self.kappa2 > 0.0) {
            return Err(Error::Validation(format!("kappa2 must be > 0, got {}", self.kappa2)));
        }
        if !(self.r_neck > 0.0) {
            return Err(Error::Validation(format!("R must be > 0, got {}", self.r_neck)));
        }
        if self.r_neck >= self.radius() {
            return Err(Error::Validation(format!(
                "R must be smaller than the inclusion radius 1/kappa2, got R = {}",
                self.r_neck
            )));
        }
        if self.quartic < 0.0 {
            return Err(Error::Validation(format!("quartic must be >= 0, got {}", self.quartic)));
        }
        if self.profile_kind == ProfileKind::QuadraticSymmetric && self.quartic != 0.0 {
            return Err(Error::Validation(
                "quartic is only meaningful with profile_kind = general_convex".into(),
            ));
        }
        let reach = self.eps + 2.0 * self.radius();
        if self.rho_d <= reach {
            return Err(Error::Validation(format!(
                "rho_D = {} must exceed the inclusions' extent {}",
                self.rho_d, reach
            )));
        }
        Ok(self)
    }

    /// Inclusion radius `1/kappa2`.
    pub fn radius(&self) -> f64 {
        1.0 / self.kappa2
    }

    /// Inclusion centres `(0', ±(eps/2 + a))`.
    pub fn center(&self, part: Part) -> Vec3 {
        let z = self.eps / 2.0 + self.radius();
        match part {
            Part::D1 => [0.0, 0.0, z],
            Part::D2 => [0.0, 0.0, -z],
            Part::Outer => [0.0; 3],
        }
    }

    /// Profile `h1(x') = h2(x')`.
    pub fn h(&self, xp: &[f64]) -> f64 {
        let r2: f64 = xp.iter().map(|v| v * v).sum();
        let mut h = 0.5 * self.kappa2 * r2;
        if self.profile_kind == ProfileKind::GeneralConvex {
            h += self.quartic * r2 * r2;
        }
        h
    }

    /// `delta(x') = eps + h1(x') + h2(x')` on `|x'| <= 2R`.
    pub fn delta(&self, xp: &[f64]) -> Result<f64> {
        self.check_lateral(xp)?;
        Ok(self.delta_unchecked(xp))
    }

    pub(crate) fn delta_unchecked(&self, xp: &[f64]) -> f64 {
        match self.profile_kind {
            ProfileKind::QuadraticSymmetric => {
                let r2: f64 = xp.iter().map(|v| v * v).sum();
                self.eps + self.kappa2 * r2
            }
            ProfileKind::GeneralConvex => self.eps + 2.0 * self.h(xp),
        }
    }

    fn check_lateral(&self, xp: &[f64]) -> Result<()> {
        let r = xp.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r > 2.0 * self.r_neck {
            return Err(Error::OutOfNeck(format!(
                "|x'| = {r} exceeds 2R = {}",
                2.0 * self.r_neck
            )));
        }
        Ok(())
    }

    /// Jet of `delta` as a function of the full point `x` (independent of `x_d`).
    pub fn delta_jet<const D: usize>(&self, x: &[f64; D]) -> Jet<D> {
        let mut r2 = Jet::zero();
        for i in 0..D - 1 {
            let c = Jet::coord(x, i);
            r2 += c * c;
        }
        let mut delta = r2 * self.kappa2 + self.eps;
        if self.profile_kind == ProfileKind::GeneralConvex {
            delta += r2 * r2 * (2.0 * self.quartic);
        }
        delta
    }

    /// Height of the top graph `eps/2 + h1(x')` in the neck.
    pub fn top(&self, xp: &[f64]) -> f64 {
        self.eps / 2.0 + self.h(xp)
    }

    /// Height of the bottom graph `-eps/2 - h2(x')` in the neck.
    pub fn bottom(&self, xp: &[f64]) -> f64 {
        -self.eps / 2.0 - self.h(xp)
    }

    /// True iff `x` lies strictly between the two neck graphs with `|x'| < r`.
    pub fn in_neck(&self, x: &[f64], r: f64) -> bool {
        let d = x.len();
        let xp = &x[..d - 1];
        let rr = xp.iter().map(|v| v * v).sum::<f64>().sqrt();
        rr < r && x[d - 1] > self.bottom(xp) && x[d - 1] < self.top(xp)
    }

    /// Upper spherical cap height `eps/2 + a - sqrt(a^2 - |x'|^2)` of the solver's inclusion `D1`.
    pub fn sphere_top(&self, rho: f64) -> f64 {
        let a = self.radius();
        self.eps / 2.0 + a - (a * a - rho * rho).max(0.0).sqrt()
    }

    /// True iff `x` lies in the fluid between the container and the spherical inclusions.
    pub fn in_fluid(&self, x: &Vec3) -> bool {
        let a = self.radius();
        let r_out = norm(x);
        r_out < self.rho_d
            && dist(x, &self.center(Part::D1)) > a
            && dist(x, &self.center(Part::D2)) > a
    }

    /// Extent of the reference shell `Omega_R \ Omega_{R/2}` used for the pressure gauge.
    pub fn gauge_shell(&self) -> (f64, f64) {
        (0.5 * self.r_neck, self.r_neck)
    }
}

pub fn norm(x: &Vec3) -> f64 {
    (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
}

pub fn dist(x: &Vec3, y: &Vec3) -> f64 {
    norm(&[x[0] - y[0], x[1] - y[1], x[2] - y[2]])
}

/// Ring of mesh nodes at fixed polar angle.
#[derive(Clone, Debug, PartialEq)]
pub struct Ring {
    /// Polar angle measured from the gap pole (inclusions) or the north pole (container).
    pub theta: f64,
    /// Quadrature weight in `theta`.
    pub dtheta: f64,
    /// Distance from the symmetry axis.
    pub radius: f64,
    pub z: f64,
    /// Index of the first node of this ring in the mesh node list.
    pub first: usize,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NeckClustering {
    pub n_base: usize,
    pub neck_refine: f64,
    /// Smallest meridional spacing, attained at the gap pole.
    pub min_spacing: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryMesh {
    pub part: Part,
    pub nodes: Vec<Vec3>,
    /// Unit normals pointing out of the inclusions (into the fluid) and out of the container.
    pub normals: Vec<Vec3>,
    pub weights: Vec<f64>,
    pub rings: Vec<Ring>,
    pub clustering: NeckClustering,
    pub warnings: Vec<String>,
}

/// Smallest gap at which the default resolution is trusted.
pub const TRUSTED_EPS: f64 = 0.003_162_277_660_168_379_5;

/// Meridional spacing of inclusion mesh rings at polar angle `theta` from the gap pole.
pub fn inclusion_spacing(eps: f64, theta: f64, n_base: usize, neck_refine: f64) -> f64 {
    let far = PI / n_base as f64;
    far * (((eps + theta * theta).sqrt() / (2.0 * neck_refine)).min(1.0))
}

/// Nodes `theta_k` in `[0, pi]` equidistributing the density `1/spacing(theta)`,
/// with the midpoint-rule weights `dtheta_k` of that change of variables.
pub fn equidistribute(spacing: impl Fn(f64) -> f64, min_count: usize) -> Vec<(f64, f64)> {
    const FINE: usize = 20_000;
    let dth = PI / FINE as f64;
    let mut cum = Vec::with_capacity(FINE + 1);
    cum.push(0.0);
    let mut acc = 0.0;
    for i in 0..FINE {
        let a = i as f64 * dth;
        // Simpson on each fine cell.
        let w = (1.0 / spacing(a) + 4.0 / spacing(a + 0.5 * dth) + 1.0 / spacing(a + dth)) / 6.0;
        acc += w * dth;
        cum.push(acc);
    }
    let total = acc;
    let n = (total.ceil() as usize).max(min_count);
    let dt = total / n as f64;
    let mut out = Vec::with_capacity(n);
    let mut seg = 0;
    for k in 0..n {
        let t = (k as f64 + 0.5) * dt;
        while cum[seg + 1] < t {
            seg += 1;
        }
        let f = (t - cum[seg]) / (cum[seg + 1] - cum[seg]);
        let theta = (seg as f64 + f) * dth;
        out.push((theta, dt * spacing(theta)));
    }
    out
}

/// Builds a ring-structured mesh of one boundary part.
///
/// Inclusion rings are spaced by [`inclusion_spacing`], which shrinks like
/// `sqrt(delta)` near the gap; the container uses `n_base` equispaced rings.
/// Each ring carries a uniform azimuthal grid with spacing matched to the ring spacing.
pub fn build_boundary_mesh(
    geom: &GapGeometry,
    part: Part,
    n_base: usize,
    neck_refine: f64,
) -> Result<BoundaryMesh> {
    if geom.d != 3 {
        return Err(Error::Unimplemented(format!(
            "boundary meshes are three-dimensional, got d = {}",
            geom.d
        )));
    }
    if n_base < 50 {
        return Err(Error::Validation(format!("mesh.n_base must be >= 50, got {n_base}")));
    }
    if !(neck_refine >= 1.0) {
        return Err(Error::Validation(format!(
            "mesh.neck_refine must be >= 1, got {neck_refine}"
        )));
    }
    let mut warnings = Vec::new();
    let (radius, center, sign, thetas) = match part {
        Part::D1 | Part::D2 => {
            if geom.eps < TRUSTED_EPS * (1.0 - 1e-9) {
                warnings.push(format!(
                    "eps = {} is below the trusted resolution limit {:.3e}",
                    geom.eps, TRUSTED_EPS
                ));
            }
            let eps = geom.eps;
            let th = equidistribute(|t| inclusion_spacing(eps, t, n_base, neck_refine), 8);
            let sign = if part == Part::D1 { -1.0 } else { 1.0 };
            (geom.radius(), geom.center(part), sign, th)
        }
        Part::Outer => {
            let dt = PI / n_base as f64;
            let th = (0..n_base).map(|k| ((k as f64 + 0.5) * dt, dt)).collect();
            (geom.rho_d, [0.0; 3], 1.0, th)
        }
    };
    let mut mesh = ring_mesh(part, radius, center, sign, &thetas);
    mesh.clustering.n_base = n_base;
    mesh.clustering.neck_refine = neck_refine;
    mesh.warnings = warnings;
    Ok(mesh)
}

/// Mesh of a sphere of radius `radius` centred on the symmetry axis at height `center_z`,
/// with `n_rings` equispaced rings and polar angle measured from the south pole.
pub fn build_sphere_mesh(part: Part, center_z: f64, radius: f64, n_rings: usize) -> Result<BoundaryMesh> {
    if n_rings < 8 || !(radius > 0.0) {
        return Err(Error::Validation(format!(
            "sphere mesh needs radius > 0 and at least 8 rings, got {radius}, {n_rings}"
        )));
    }
    let dt = PI / n_rings as f64;
    let th: Vec<_> = (0..n_rings).map(|k| ((k as f64 + 0.5) * dt, dt)).collect();
    let mut mesh = ring_mesh(part, radius, [0.0, 0.0, center_z], -1.0, &th);
    mesh.clustering.n_base = n_rings;
    Ok(mesh)
}

fn ring_mesh(part: Part, radius: f64, center: Vec3, sign: f64, thetas: &[(f64, f64)]) -> BoundaryMesh {
    let mut nodes = Vec::new();
    let mut normals = Vec::new();
    let mut weights = Vec::new();
    let mut rings = Vec::with_capacity(thetas.len());
    let mut min_spacing = f64::INFINITY;
    for &(theta, dtheta) in thetas {
        let (s, c) = theta.sin_cos();
        let ring_r = radius * s;
        let spacing = radius * dtheta;
        min_spacing = min_spacing.min(spacing);
        let count = azimuth_count(ring_r, spacing);
        let z = center[2] + sign * radius * c;
        rings.push(Ring { theta, dtheta, radius: ring_r, z, first: nodes.len(), count });
        let w = radius * radius * s * dtheta * 2.0 * PI / count as f64;
        for j in 0..count {
            let phi = 2.0 * PI * j as f64 / count as f64;
            let (sp, cp) = phi.sin_cos();
            let n = [s * cp, s * sp, sign * c];
            nodes.push([center[0] + radius * n[0], center[1] + radius * n[1], center[2] + radius * n[2]]);
            normals.push(n);
            weights.push(w);
        }
    }
    BoundaryMesh {
        part,
        nodes,
        normals,
        weights,
        rings,
        clustering: NeckClustering { n_base: 0, neck_refine: 1.0, min_spacing },
        warnings: Vec::new(),
    }
}

fn azimuth_count(ring_r: f64, spacing: f64) -> usize {
    let n = (2.0 * PI * ring_r / spacing).ceil() as usize;
    n.max(8).div_ceil(4) * 4
}

impl BoundaryMesh {
    pub fn area(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn integrate(&self, f: impl Fn(&Vec3, &Vec3) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.normals)
            .zip(&self.weights)
            .map(|((x, n), w)| w * f(x, n))
            .sum()
    }
}
