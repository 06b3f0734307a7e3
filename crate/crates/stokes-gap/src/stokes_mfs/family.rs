//! Azimuthal symmetry classes of axisymmetric scenes.
//!
//! A field in family `(m, even)` has cylindrical components
//! `u_r = A cos(m phi)`, `u_phi = B sin(m phi)`, `u_z = C cos(m phi)`; the odd
//! family swaps `cos` and `sin`. Families decouple exactly on a scene that is
//! invariant under rotations about and reflections through the axis.

use crate::geometry::Vec3;
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Family {
    pub m: usize,
    pub odd: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Comp {
    R,
    Phi,
    Z,
}

impl Comp {
    pub fn index(self) -> usize {
        match self {
            Comp::R => 0,
            Comp::Phi => 1,
            Comp::Z => 2,
        }
    }
}

impl Family {
    pub fn all(m_max: usize) -> Vec<Family> {
        (0..=m_max).flat_map(|m| [Family { m, odd: false }, Family { m, odd: true }]).collect()
    }

    pub fn comps(self) -> &'static [Comp] {
        match (self.m, self.odd) {
            (0, false) => &[Comp::R, Comp::Z],
            (0, true) => &[Comp::Phi],
            _ => &[Comp::R, Comp::Phi, Comp::Z],
        }
    }

    /// Angular weight of component `c` at azimuth `phi`.
    pub fn weight(self, c: Comp, phi: f64) -> f64 {
        let (s, co) = (self.m as f64 * phi).sin_cos();
        match (c, self.odd) {
            (Comp::Phi, false) | (Comp::R | Comp::Z, true) => s,
            _ => co,
        }
    }

    /// Azimuth at which the weight of `c` equals one.
    pub fn probe_azimuth(self, c: Comp) -> f64 {
        let quarter = if self.m == 0 { 0.0 } else { PI / (2.0 * self.m as f64) };
        match (c, self.odd) {
            (Comp::Phi, false) | (Comp::R | Comp::Z, true) => quarter,
            _ => 0.0,
        }
    }

    /// Projection of the samples `u(phi_j)`, `phi_j = 2 pi j / n`, onto this family.
    pub fn project(self, samples: &[Vec3]) -> [f64; 3] {
        let n = samples.len();
        let norm = if self.m == 0 { 1.0 } else { 2.0 } / n as f64;
        let mut out = [0.0; 3];
        for (j, u) in samples.iter().enumerate() {
            let phi = 2.0 * PI * j as f64 / n as f64;
            let cyl = to_cylindrical(u, phi);
            for &c in self.comps() {
                out[c.index()] += norm * cyl[c.index()] * self.weight(c, phi);
            }
        }
        out
    }
}

pub fn basis(phi: f64) -> [Vec3; 3] {
    let (s, c) = phi.sin_cos();
    [[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]]
}

pub fn to_cylindrical(u: &Vec3, phi: f64) -> Vec3 {
    let (s, c) = phi.sin_cos();
    [c * u[0] + s * u[1], -s * u[0] + c * u[1], u[2]]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_recovers_mode_amplitudes() {
        let fam = Family { m: 2, odd: true };
        let (a, b, c) = (0.3, -1.1, 0.7);
        let n = 24;
        let samples: Vec<Vec3> = (0..n)
            .map(|j| {
                let phi = 2.0 * PI * j as f64 / n as f64;
                let e = basis(phi);
                let (ur, up, uz) = (a * (2.0 * phi).sin(), b * (2.0 * phi).cos(), c * (2.0 * phi).sin());
                [0, 1, 2].map(|k| ur * e[0][k] + up * e[1][k] + uz * e[2][k])
            })
            .collect();
        let p = fam.project(&samples);
        assert!((p[0] - a).abs() < 1e-14 && (p[1] - b).abs() < 1e-14 && (p[2] - c).abs() < 1e-14);
        let other = Family { m: 2, odd: false }.project(&samples);
        assert!(other.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn probe_azimuths_have_unit_weight() {
        for f in Family::all(3) {
            for &c in f.comps() {
                assert!((f.weight(c, f.probe_azimuth(c)) - 1.0).abs() < 1e-15);
            }
        }
    }
}
