//! Dense least squares with column scaling and a truncated-SVD fallback.

use crate::error::{Error, Result};
use faer::linalg::solvers::SolveLstsq;
use faer::Mat;
use serde::Serialize;

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct LsReport {
    pub rows: usize,
    pub cols: usize,
    /// Ratio of extreme diagonal entries of the pivoted triangular factor.
    pub cond_estimate: f64,
    pub truncated: bool,
    pub rank: usize,
    /// Singular values of the scaled matrix, reported only on the truncated path.
    pub singular_values: Vec<f64>,
}

/// Minimizes `|A X - B|` column by column.
///
/// Columns of `A` are scaled to unit norm first. When the estimated condition
/// number exceeds `trunc` the solve falls back to an SVD that discards
/// singular values below `s_max / trunc`.
pub fn solve(a: &Mat<f64>, b: &Mat<f64>, trunc: f64) -> Result<(Mat<f64>, LsReport)> {
    let (m, n) = (a.nrows(), a.ncols());
    if b.nrows() != m {
        return Err(Error::Validation(format!("rhs has {} rows, matrix {m}", b.nrows())));
    }
    if n == 0 {
        return Ok((Mat::zeros(0, b.ncols()), LsReport { rows: m, ..Default::default() }));
    }
    if m < n {
        return Err(Error::Numerical(format!("underdetermined system {m}x{n}")));
    }
    let scale: Vec<f64> = (0..n)
        .map(|j| {
            let s = (0..m).map(|i| a[(i, j)] * a[(i, j)]).sum::<f64>().sqrt();
            if s > 0.0 { s } else { 1.0 }
        })
        .collect();
    let scaled = Mat::from_fn(m, n, |i, j| a[(i, j)] / scale[j]);
    if !scaled.as_ref().is_all_finite() || !b.as_ref().is_all_finite() {
        return Err(Error::Numerical("non-finite entries in least-squares system".into()));
    }
    let qr = scaled.col_piv_qr();
    let diag: Vec<f64> = {
        let r = qr.thin_R();
        (0..n).map(|k| r[(k, k)].abs()).collect()
    };
    let dmax = diag.iter().cloned().fold(0.0, f64::max);
    let dmin = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    let cond = if dmin > 0.0 { dmax / dmin } else { f64::INFINITY };
    let mut report = LsReport { rows: m, cols: n, cond_estimate: cond, rank: n, ..Default::default() };
    let mut x = if cond <= trunc {
        qr.solve_lstsq(b)
    } else {
        let svd = scaled
            .thin_svd()
            .map_err(|e| Error::Numerical(format!("svd failed: {e:?}")))?;
        let s: Vec<f64> = svd.S().column_vector().iter().cloned().collect();
        let smax = s.iter().cloned().fold(0.0, f64::max);
        let keep: Vec<usize> = (0..s.len()).filter(|&k| s[k] > smax / trunc).collect();
        report.truncated = true;
        report.rank = keep.len();
        report.singular_values = s.clone();
        let (u, v) = (svd.U(), svd.V());
        let mut x = Mat::zeros(n, b.ncols());
        for c in 0..b.ncols() {
            for &k in &keep {
                let coef = (0..m).map(|i| u[(i, k)] * b[(i, c)]).sum::<f64>() / s[k];
                for j in 0..n {
                    x[(j, c)] += coef * v[(j, k)];
                }
            }
        }
        x
    };
    for j in 0..n {
        for c in 0..x.ncols() {
            x[(j, c)] /= scale[j];
        }
    }
    Ok((x, report))
}

/// Orthonormal basis of the null space of the `k x n` matrix `c` (full row rank required).
pub fn null_space(c: &Mat<f64>, rank_tol: f64) -> Result<Mat<f64>> {
    let (k, n) = (c.nrows(), c.ncols());
    if k == 0 {
        return Ok(Mat::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 }));
    }
    let ct = c.transpose().to_owned();
    let qr = ct.col_piv_qr();
    let r = qr.thin_R();
    let r00 = r[(0, 0)].abs();
    for i in 0..k {
        if r[(i, i)].abs() <= rank_tol * r00.max(f64::MIN_POSITIVE) {
            return Err(Error::Numerical(format!(
                "constraint rows are rank deficient: |R_{i}{i}| = {:.3e}, |R_00| = {r00:.3e}",
                r[(i, i)].abs()
            )));
        }
    }
    let q = qr.compute_Q();
    Ok(q.subcols(k, n - k).to_owned())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_consistent_solution() {
        let a = Mat::from_fn(12, 4, |i, j| ((i + 1) as f64).powi(j as i32) * 10f64.powi(j as i32));
        let x0 = [1.0, -2.0, 0.5, 0.25];
        let b = Mat::from_fn(12, 1, |i, _| (0..4).map(|j| a[(i, j)] * x0[j]).sum());
        let (x, rep) = solve(&a, &b, 1e13).unwrap();
        assert!(!rep.truncated);
        for j in 0..4 {
            assert!((x[(j, 0)] - x0[j]).abs() < 1e-9, "{j}");
        }
    }

    #[test]
    fn truncates_duplicate_columns() {
        let a = Mat::from_fn(6, 3, |i, j| if j == 2 { i as f64 } else { (i as f64) * (j as f64 + 1.0) + 1.0 });
        let a = Mat::from_fn(6, 3, |i, j| if j == 1 { a[(i, 2)] } else { a[(i, j)] });
        let b = Mat::from_fn(6, 1, |i, _| i as f64);
        let (x, rep) = solve(&a, &b, 1e13).unwrap();
        assert!(rep.truncated);
        assert_eq!(rep.rank, 2);
        assert!((x[(1, 0)] - x[(2, 0)]).abs() < 1e-12);
        assert!((x[(1, 0)] + x[(2, 0)] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn null_space_is_orthogonal_to_rows() {
        let c = Mat::from_fn(2, 5, |i, j| ((i * 5 + j) as f64).sin());
        let n = null_space(&c, 1e-12).unwrap();
        assert_eq!(n.ncols(), 3);
        let prod = &c * &n;
        for i in 0..2 {
            for j in 0..3 {
                assert!(prod[(i, j)].abs() < 1e-14);
            }
        }
    }
}
