//! Collocation rings, source rings and held-out probes for an axisymmetric scene.

use super::family::basis;
use crate::error::{Error, Result};
use crate::geometry::{
    build_boundary_mesh, build_sphere_mesh, dist, equidistribute, norm, BoundaryMesh, GapGeometry,
    Part, Vec3,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverParams {
    pub mu: f64,
    pub n_base: usize,
    pub neck_refine: f64,
    /// Source depth below an inclusion surface is `offset * sqrt(eps + theta^2)` inclusion radii,
    /// capped at `offset_max`.
    pub offset: f64,
    pub offset_max: f64,
    /// Source rings per source depth along the meridian.
    pub source_density: f64,
    /// Sources per ring scale like `azimuth_factor * pi * r / depth`.
    pub azimuth_factor: f64,
    /// Container sources sit on a sphere of radius `rho_D * (1 + outer_offset)`.
    pub outer_offset: f64,
    pub m_max: usize,
    /// Condition-number threshold for the truncated-SVD fallback.
    pub trunc: f64,
    /// Held-out residual tolerance, relative to the largest boundary datum.
    pub tol: f64,
    pub seed: u64,
    pub heldout_azimuths: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            mu: 1.0,
            n_base: 80,
            neck_refine: 1.0,
            offset: 0.2,
            offset_max: 0.4,
            source_density: 4.0,
            azimuth_factor: 24.0,
            outer_offset: 0.5,
            m_max: 2,
            trunc: 1e13,
            tol: 1e-4,
            seed: 0,
            heldout_azimuths: 2,
        }
    }
}

impl SolverParams {
    pub fn validated(self) -> Result<Self> {
        let pos = [
            ("solver.mu", self.mu),
            ("solver.offset", self.offset),
            ("solver.offset_max", self.offset_max),
            ("solver.source_density", self.source_density),
            ("solver.azimuth_factor", self.azimuth_factor),
            ("solver.outer_offset", self.outer_offset),
            ("solver.trunc", self.trunc),
            ("solver.tol", self.tol),
        ];
        for (k, v) in pos {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Validation(format!("{k} must be positive and finite, got {v}")));
            }
        }
        if self.offset_max >= 1.0 {
            return Err(Error::Validation("solver.offset_max must be below one radius".into()));
        }
        if self.n_base < 50 {
            return Err(Error::Validation(format!("mesh.n_base must be >= 50, got {}", self.n_base)));
        }
        if self.m_max > 6 {
            return Err(Error::Validation(format!("solver.m_max must be <= 6, got {}", self.m_max)));
        }
        if self.heldout_azimuths == 0 {
            return Err(Error::Validation("solver.heldout_azimuths must be >= 1".into()));
        }
        Ok(self)
    }
}

/// A spherical body on the symmetry axis.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Body {
    pub part: Part,
    pub center_z: f64,
    pub radius: f64,
    /// `-1` when the pole nearest the gap points down, `+1` when it points up.
    pub pole: f64,
    /// Gap width next to the pole, if the body faces a near-contact gap.
    pub gap: Option<f64>,
}

/// Spherical container of radius `rho` holding one or two spherical bodies.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Scene {
    pub bodies: Vec<Body>,
    pub rho: f64,
    pub geom: Option<GapGeometry>,
}

impl Scene {
    /// Two inclusions of the gap geometry inside its container.
    pub fn gap(geom: &GapGeometry) -> Result<Self> {
        let geom = geom.clone().validated()?;
        if geom.d != 3 {
            return Err(Error::Unimplemented(format!("flow solves are three-dimensional, got d = {}", geom.d)));
        }
        if geom.profile_kind != crate::geometry::ProfileKind::QuadraticSymmetric {
            return Err(Error::Unimplemented("flow solves use the quadratic symmetric profile".into()));
        }
        let a = geom.radius();
        let bodies = vec![
            Body { part: Part::D1, center_z: geom.center(Part::D1)[2], radius: a, pole: -1.0, gap: Some(geom.eps) },
            Body { part: Part::D2, center_z: geom.center(Part::D2)[2], radius: a, pole: 1.0, gap: Some(geom.eps) },
        ];
        Ok(Self { bodies, rho: geom.rho_d, geom: Some(geom) })
    }

    /// One sphere of radius `radius` at the centre of a container of radius `rho`.
    pub fn single_sphere(radius: f64, rho: f64) -> Result<Self> {
        if !(radius > 0.0 && rho > 1.5 * radius) {
            return Err(Error::Validation(format!("need 0 < 1.5 radius < rho, got {radius}, {rho}")));
        }
        let body = Body { part: Part::D1, center_z: 0.0, radius, pole: -1.0, gap: None };
        Ok(Self { bodies: vec![body], rho, geom: None })
    }

    pub fn body(&self, part: Part) -> Option<&Body> {
        self.bodies.iter().find(|b| b.part == part)
    }

    /// Closed fluid domain test with a relative slack of `1e-9` on each surface.
    pub fn in_fluid(&self, x: &Vec3) -> bool {
        norm(x) <= self.rho * (1.0 + 1e-9)
            && self.bodies.iter().all(|b| dist(x, &[0.0, 0.0, b.center_z]) >= b.radius * (1.0 - 1e-9))
    }
}

#[derive(Clone, Debug)]
pub struct CollocRing {
    pub surface: usize,
    pub r: f64,
    pub z: f64,
    pub mesh_ring: usize,
}

#[derive(Clone, Debug)]
pub struct SourceRing {
    /// Surface index (bodies first, then the container).
    pub surface: usize,
    pub r: f64,
    pub z: f64,
    pub depth: f64,
    pub first: usize,
    pub count: usize,
}

#[derive(Clone, Debug)]
pub struct Probe {
    pub surface: usize,
    pub x: Vec3,
}

/// Everything that depends on the scene and the solver parameters but not on boundary data.
#[derive(Clone, Debug)]
pub struct Discretization {
    pub scene: Scene,
    pub params: SolverParams,
    /// Surface meshes: one per body, then the container.
    pub meshes: Vec<BoundaryMesh>,
    pub colloc: Vec<CollocRing>,
    pub src_rings: Vec<SourceRing>,
    pub sources: Vec<Vec3>,
    pub probes: Vec<Probe>,
    pub warnings: Vec<String>,
}

impl Discretization {
    pub fn new(scene: Scene, params: SolverParams) -> Result<Self> {
        let params = params.validated()?;
        let mut meshes = Vec::new();
        let mut warnings = Vec::new();
        for b in &scene.bodies {
            let mesh = match (&scene.geom, b.gap) {
                (Some(g), Some(_)) => build_boundary_mesh(g, b.part, params.n_base, params.neck_refine)?,
                _ => build_sphere_mesh(b.part, b.center_z, b.radius, params.n_base)?,
            };
            warnings.extend(mesh.warnings.iter().cloned());
            meshes.push(mesh);
        }
        let outer = match &scene.geom {
            Some(g) => build_boundary_mesh(g, Part::Outer, params.n_base, params.neck_refine)?,
            None => build_sphere_mesh(Part::Outer, 0.0, scene.rho, params.n_base)?,
        };
        meshes.push(outer);

        let mut colloc = Vec::new();
        for (s, mesh) in meshes.iter().enumerate() {
            for (k, ring) in mesh.rings.iter().enumerate() {
                colloc.push(CollocRing { surface: s, r: ring.radius, z: ring.z, mesh_ring: k });
            }
        }

        let mut src_rings = Vec::new();
        let mut sources = Vec::new();
        let mut push_ring = |surface: usize, r: f64, z: f64, depth: f64| {
            let count = ((params.azimuth_factor * PI * r / depth).ceil() as usize).max(8);
            src_rings.push(SourceRing { surface, r, z, depth, first: sources.len(), count });
            for j in 0..count {
                let phi = 2.0 * PI * j as f64 / count as f64;
                let e = basis(phi)[0];
                sources.push([r * e[0], r * e[1], z]);
            }
        };
        for (s, b) in scene.bodies.iter().enumerate() {
            let a = b.radius;
            let eps_hat = b.gap.map(|e| e / a);
            let depth = |t: f64| match eps_hat {
                Some(e) => (params.offset * (e + t * t).sqrt()).min(params.offset_max),
                None => params.offset_max,
            };
            for (theta, _) in equidistribute(|t| depth(t) / params.source_density, 4) {
                let d = depth(theta);
                let rad = a * (1.0 - d);
                push_ring(s, rad * theta.sin(), b.center_z + b.pole * rad * theta.cos(), a * d);
            }
        }
        let rs = scene.rho * (1.0 + params.outer_offset);
        let depth_c = scene.rho * params.outer_offset;
        let n_outer = ((PI * rs * params.source_density / depth_c).ceil() as usize).max(8);
        for k in 0..n_outer {
            let theta = (k as f64 + 0.5) * PI / n_outer as f64;
            push_ring(scene.bodies.len(), rs * theta.sin(), rs * theta.cos(), depth_c);
        }

        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let mut probes = Vec::new();
        for (s, mesh) in meshes.iter().enumerate() {
            let (center_z, radius, pole) = match scene.bodies.get(s) {
                Some(b) => (b.center_z, b.radius, b.pole),
                None => (0.0, scene.rho, 1.0),
            };
            let thetas: Vec<f64> = mesh.rings.iter().map(|r| r.theta).collect();
            for w in thetas.windows(2) {
                let theta = 0.5 * (w[0] + w[1]);
                for _ in 0..params.heldout_azimuths {
                    let phi = rng.random::<f64>() * 2.0 * PI;
                    let e = basis(phi)[0];
                    let rr = radius * theta.sin();
                    probes.push(Probe {
                        surface: s,
                        x: [rr * e[0], rr * e[1], center_z + pole * radius * theta.cos()],
                    });
                }
            }
        }
        Ok(Self { scene, params, meshes, colloc, src_rings, sources, probes, warnings })
    }

    pub fn surface_part(&self, s: usize) -> Part {
        self.scene.bodies.get(s).map(|b| b.part).unwrap_or(Part::Outer)
    }

    pub fn surface_index(&self, part: Part) -> Option<usize> {
        if part == Part::Outer {
            return Some(self.scene.bodies.len());
        }
        self.scene.bodies.iter().position(|b| b.part == part)
    }

    /// Part owning each source point.
    pub fn source_parts(&self) -> Vec<Part> {
        let mut out = vec![Part::Outer; self.sources.len()];
        for ring in &self.src_rings {
            let p = self.surface_part(ring.surface);
            out[ring.first..ring.first + ring.count].fill(p);
        }
        out
    }
}
