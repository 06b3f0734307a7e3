//! Rigid-motion basis `psi_alpha` of `R^d`.
//!
//! Ordering: translations `e_1..e_d`; then rotations `x_k e_j - x_j e_k` with
//! `j < k < d` in lexicographic order; then rotations `x_d e_j - x_j e_d` for
//! `j = 1..d-1`. In three dimensions this is `psi4 = (x2,-x1,0)`,
//! `psi5 = (x3,0,-x1)`, `psi6 = (0,x3,-x2)`.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MotionKind {
    /// Translation along `e_{j+1}` (zero-based axis `j`).
    Translation(usize),
    /// Rotation `x_k e_j - x_j e_k` (zero-based, `j < k`).
    Rotation(usize, usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RigidMotion {
    pub d: usize,
    /// One-based index in `1..=d(d+1)/2`.
    pub alpha: usize,
    pub kind: MotionKind,
}

pub fn basis_size(d: usize) -> usize {
    d * (d + 1) / 2
}

impl RigidMotion {
    pub fn new(d: usize, alpha: usize) -> Result<Self> {
        let m = basis_size(d);
        if alpha == 0 || alpha > m {
            return Err(Error::Validation(format!("alpha must lie in 1..={m}, got {alpha}")));
        }
        let kind = if alpha <= d {
            MotionKind::Translation(alpha - 1)
        } else {
            let mut idx = d;
            let mut found = None;
            'outer: for j in 0..d.saturating_sub(1) {
                for k in j + 1..d - 1 {
                    idx += 1;
                    if idx == alpha {
                        found = Some(MotionKind::Rotation(j, k));
                        break 'outer;
                    }
                }
            }
            found.unwrap_or_else(|| MotionKind::Rotation(alpha - d - (d - 1) * (d - 2) / 2 - 1, d - 1))
        };
        Ok(Self { d, alpha, kind })
    }

    pub fn all(d: usize) -> Vec<Self> {
        (1..=basis_size(d)).map(|a| Self::new(d, a).expect("index in range")).collect()
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut v = vec![0.0; self.d];
        match self.kind {
            MotionKind::Translation(j) => v[j] = 1.0,
            MotionKind::Rotation(j, k) => {
                v[j] = x[k];
                v[k] = -x[j];
            }
        }
        v
    }

    pub fn eval3(&self, x: &[f64; 3]) -> [f64; 3] {
        let v = self.eval(x);
        [v[0], v[1], v[2]]
    }

    pub fn is_translation(&self) -> bool {
        matches!(self.kind, MotionKind::Translation(_))
    }

    /// The constant gradient matrix `G[i][k] = d psi_i / d x_k`.
    pub fn gradient(&self) -> Vec<Vec<f64>> {
        let mut g = vec![vec![0.0; self.d]; self.d];
        if let MotionKind::Rotation(j, k) = self.kind {
            g[j][k] = 1.0;
            g[k][j] = -1.0;
        }
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_dimensional_listing() {
        let x = [0.3, -0.7, 1.1];
        let e = |a| RigidMotion::new(3, a).unwrap().eval(&x);
        assert_eq!(e(1), vec![1.0, 0.0, 0.0]);
        assert_eq!(e(3), vec![0.0, 0.0, 1.0]);
        assert_eq!(e(4), vec![x[1], -x[0], 0.0]);
        assert_eq!(e(5), vec![x[2], 0.0, -x[0]]);
        assert_eq!(e(6), vec![0.0, x[2], -x[1]]);
    }

    #[test]
    fn ordering_in_higher_dimensions() {
        let d = 5;
        let kinds: Vec<_> = RigidMotion::all(d).into_iter().map(|m| m.kind).collect();
        assert_eq!(kinds.len(), 15);
        assert_eq!(kinds[5], MotionKind::Rotation(0, 1));
        assert_eq!(kinds[7], MotionKind::Rotation(0, 3));
        assert_eq!(kinds[10], MotionKind::Rotation(2, 3));
        assert_eq!(kinds[11], MotionKind::Rotation(0, 4));
        assert_eq!(kinds[14], MotionKind::Rotation(3, 4));
    }

    #[test]
    fn symmetric_gradient_vanishes() {
        for d in 2..=6 {
            for m in RigidMotion::all(d) {
                let g = m.gradient();
                for i in 0..d {
                    for k in 0..d {
                        assert_eq!(g[i][k] + g[k][i], 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_bad_index() {
        assert!(RigidMotion::new(3, 0).is_err());
        assert!(RigidMotion::new(3, 7).is_err());
    }
}
