//! Thin SVD by one-sided (Hestenes) Jacobi rotations.
//!
//! The working matrix is oriented so that it has at least as many rows as
//! columns; pairs of columns are rotated until every pair is orthogonal to
//! working precision. Column norms are then the singular values, and the
//! accumulated rotations are the right singular vectors. One-sided Jacobi
//! computes small singular values to high relative accuracy, which matters
//! near the interpolation threshold where the spectrum approaches zero.

use serde::{Deserialize, Serialize};

use super::{axpy, dot, norm, Matrix, Vector};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 80;
/// Relative factor in the rank tolerance `σ_max · max(N, D) · 1e-12`.
pub const RANK_RTOL: f64 = 1e-12;

/// Thin SVD `X = Σ_r σ_r u_r v_rᵀ` restricted to the numerically nonzero
/// modes.
///
/// Singular values are positive and non-increasing. Each `v_r` has its first
/// nonzero component positive; `u_r` carries the matching sign.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvdResult {
    rows: usize,
    cols: usize,
    u: Vec<Vec<f64>>,
    singular_values: Vec<f64>,
    v: Vec<Vec<f64>>,
    rank_tolerance: f64,
}

impl SvdResult {
    /// Assembles a decomposition from its parts, checking shapes and ordering.
    /// Orthonormality is the caller's responsibility.
    pub fn from_parts(
        rows: usize,
        cols: usize,
        u: Vec<Vec<f64>>,
        singular_values: Vec<f64>,
        v: Vec<Vec<f64>>,
        rank_tolerance: f64,
    ) -> Result<Self> {
        let r = singular_values.len();
        if u.len() != r {
            return Err(Error::dims("SvdResult::from_parts (u)", r, u.len()));
        }
        if v.len() != r {
            return Err(Error::dims("SvdResult::from_parts (v)", r, v.len()));
        }
        if r > rows.min(cols) {
            return Err(Error::InvalidParameter(format!(
                "rank {r} exceeds min({rows}, {cols})"
            )));
        }
        if let Some(bad) = u.iter().find(|c| c.len() != rows) {
            return Err(Error::dims("SvdResult::from_parts (u_r)", rows, bad.len()));
        }
        if let Some(bad) = v.iter().find(|c| c.len() != cols) {
            return Err(Error::dims("SvdResult::from_parts (v_r)", cols, bad.len()));
        }
        if singular_values.iter().any(|s| !s.is_finite() || *s <= 0.0) {
            return Err(Error::InvalidParameter(
                "singular values must be finite and positive".into(),
            ));
        }
        if singular_values.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::InvalidParameter(
                "singular values must be non-increasing".into(),
            ));
        }
        Ok(Self {
            rows,
            cols,
            u,
            singular_values,
            v,
            rank_tolerance,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// Numerical rank R.
    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    pub fn rank_tolerance(&self) -> f64 {
        self.rank_tolerance
    }

    /// Left singular vector `u_r` (length N).
    pub fn u(&self, r: usize) -> &[f64] {
        &self.u[r]
    }

    /// Right singular vector `v_r` (length D).
    pub fn v(&self, r: usize) -> &[f64] {
        &self.v[r]
    }

    pub fn sigma_max(&self) -> f64 {
        self.singular_values.first().copied().unwrap_or(0.0)
    }

    /// `Σ_r σ_r u_r v_rᵀ`
    pub fn reconstruct(&self) -> Matrix {
        let mut data = vec![0.0; self.rows * self.cols];
        for ((s, u), v) in self.singular_values.iter().zip(&self.u).zip(&self.v) {
            for (i, ui) in u.iter().enumerate() {
                axpy(s * ui, v, &mut data[i * self.cols..(i + 1) * self.cols]);
            }
        }
        Matrix::from_raw(self.rows, self.cols, data)
    }

    /// `X⁺ y = Σ_r (u_r·y / σ_r) v_r`
    pub fn pinv_apply(&self, y: &[f64]) -> Result<Vector> {
        if y.len() != self.rows {
            return Err(Error::dims("pseudoinverse_apply", self.rows, y.len()));
        }
        let mut out = vec![0.0; self.cols];
        for ((s, u), v) in self.singular_values.iter().zip(&self.u).zip(&self.v) {
            axpy(dot(u, y) / s, v, &mut out);
        }
        Ok(Vector::from_raw(out))
    }
}

/// Computes the thin SVD of `x`, dropping modes with
/// `σ ≤ σ_max · max(N, D) · 1e-12`.
pub fn svd(x: &Matrix) -> Result<SvdResult> {
    let (n, d) = x.shape();
    if n == 0 || d == 0 {
        return Err(Error::InvalidParameter(format!(
            "svd needs a non-empty matrix, got {n}x{d}"
        )));
    }
    let transposed = n < d;
    let columns: Vec<Vec<f64>> = if transposed {
        x.row_iter().map(<[f64]>::to_vec).collect()
    } else {
        (0..d).map(|j| x.column(j)).collect()
    };
    let frob = x.frobenius_norm();
    let (w, rot) = one_sided_jacobi(columns, frob)?;

    let mut modes: Vec<(f64, Vec<f64>, Vec<f64>)> = w
        .into_iter()
        .zip(rot)
        .map(|(col, r)| (norm(&col), col, r))
        .collect();
    modes.sort_by(|a, b| b.0.total_cmp(&a.0));

    let sigma_max = modes.first().map_or(0.0, |m| m.0);
    let tolerance = sigma_max * n.max(d) as f64 * RANK_RTOL;

    let mut u = Vec::new();
    let mut v = Vec::new();
    let mut singular_values = Vec::new();
    for (sigma, col, rot) in modes {
        if !(sigma > tolerance) {
            break;
        }
        let unit: Vec<f64> = col.iter().map(|c| c / sigma).collect();
        let (mut left, mut right) = if transposed { (rot, unit) } else { (unit, rot) };
        if first_significant(&right) < 0.0 {
            left.iter_mut().for_each(|c| *c = -*c);
            right.iter_mut().for_each(|c| *c = -*c);
        }
        singular_values.push(sigma);
        u.push(left);
        v.push(right);
    }

    Ok(SvdResult {
        rows: n,
        cols: d,
        u,
        singular_values,
        v,
        rank_tolerance: tolerance,
    })
}

fn first_significant(v: &[f64]) -> f64 {
    v.iter().copied().find(|c| c.abs() > 1e-12).unwrap_or(0.0)
}

/// Orthogonalizes `columns` in place; returns the rotated columns and the
/// accumulated rotation, one vector per column.
fn one_sided_jacobi(
    mut columns: Vec<Vec<f64>>,
    frob: f64,
) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let k = columns.len();
    let m = columns.first().map_or(0, Vec::len);
    let mut rot: Vec<Vec<f64>> = (0..k)
        .map(|j| {
            let mut e = vec![0.0; k];
            e[j] = 1.0;
            e
        })
        .collect();
    if frob == 0.0 {
        return Ok((columns, rot));
    }

    let tol = f64::EPSILON * (m as f64).sqrt();
    // columns this small sit far below any retained singular value
    let floor_sq = (f64::EPSILON * frob).powi(2);
    let mut sq_norms: Vec<f64> = columns.iter().map(|c| dot(c, c)).collect();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..k {
            for q in p + 1..k {
                let alpha = sq_norms[p];
                let beta = sq_norms[q];
                if alpha <= floor_sq || beta <= floor_sq {
                    continue;
                }
                let gamma = dot(&columns[p], &columns[q]);
                if gamma.abs() <= tol * alpha.sqrt() * beta.sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + zeta.hypot(1.0));
                let c = 1.0 / t.hypot(1.0);
                let s = c * t;
                rotate_pair(&mut columns, p, q, c, s);
                rotate_pair(&mut rot, p, q, c, s);
                sq_norms[p] = dot(&columns[p], &columns[p]);
                sq_norms[q] = dot(&columns[q], &columns[q]);
            }
        }
        if !rotated {
            return Ok((columns, rot));
        }
    }
    Err(Error::IterationFailure { sweeps: MAX_SWEEPS })
}

fn rotate_pair(vs: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (head, tail) = vs.split_at_mut(q);
    let (a, b) = (&mut head[p], &mut tail[0]);
    for (x, y) in a.iter_mut().zip(b.iter_mut()) {
        let (xp, yq) = (*x, *y);
        *x = c * xp - s * yq;
        *y = s * xp + c * yq;
    }
}

/// `X⁺ y` computed from a fresh SVD of `x`.
pub fn pseudoinverse_apply(x: &Matrix, y: &[f64]) -> Result<Vector> {
    if y.len() != x.rows() {
        return Err(Error::dims("pseudoinverse_apply", x.rows(), y.len()));
    }
    svd(x)?.pinv_apply(y)
}

/// Drops every mode with `σ < cutoff`.
pub fn truncate_svd(s: &SvdResult, cutoff: f64) -> Result<SvdResult> {
    if !(cutoff >= 0.0) || !cutoff.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "cutoff must be finite and >= 0, got {cutoff}"
        )));
    }
    let keep = s.singular_values.iter().take_while(|&&x| x >= cutoff).count();
    Ok(SvdResult {
        rows: s.rows,
        cols: s.cols,
        u: s.u[..keep].to_vec(),
        singular_values: s.singular_values[..keep].to_vec(),
        v: s.v[..keep].to_vec(),
        rank_tolerance: s.rank_tolerance.max(cutoff),
    })
}

/// Orthogonal projection of `x` onto `span{v_r}`.
pub fn project_onto_rowspace(x: &[f64], s: &SvdResult) -> Result<Vector> {
    if x.len() != s.cols {
        return Err(Error::dims("project_onto_rowspace", s.cols, x.len()));
    }
    let mut out = vec![0.0; s.cols];
    for v in &s.v {
        axpy(dot(x, v), v, &mut out);
    }
    Ok(Vector::from_raw(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::distance;

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        assert!(distance(a, b) <= tol, "{a:?} vs {b:?}");
    }

    #[test]
    fn diagonal_matrix() {
        let x = Matrix::from_rows(&[[2.0, 0.0], [0.0, 1.0]]).unwrap();
        let s = svd(&x).unwrap();
        assert_eq!(s.singular_values(), &[2.0, 1.0]);
        assert_close(s.v(0), &[1.0, 0.0], 1e-15);
        assert_close(s.v(1), &[0.0, 1.0], 1e-15);
        assert_close(s.u(0), &[1.0, 0.0], 1e-15);
        assert_close(s.u(1), &[0.0, 1.0], 1e-15);
    }

    #[test]
    fn zero_matrix_has_empty_spectrum() {
        let s = svd(&Matrix::zeros(2, 2)).unwrap();
        assert_eq!(s.rank(), 0);
        assert!(s.singular_values().is_empty());
    }

    #[test]
    fn single_row() {
        // X Xᵀ = [2] so σ = √2, and v = Xᵀu/σ = (1, 1)/√2
        let x = Matrix::from_rows(&[[1.0, 1.0]]).unwrap();
        let s = svd(&x).unwrap();
        assert_eq!(s.rank(), 1);
        assert!((s.singular_values()[0] - 2f64.sqrt()).abs() < 1e-15);
        let h = 1.0 / 2f64.sqrt();
        assert_close(s.v(0), &[h, h], 1e-15);
        assert_close(s.u(0), &[1.0], 1e-15);
    }

    #[test]
    fn sign_convention_makes_first_component_of_v_positive() {
        let x = Matrix::from_rows(&[[-3.0, 1.0], [2.0, -5.0], [0.5, 0.5]]).unwrap();
        let s = svd(&x).unwrap();
        for r in 0..s.rank() {
            assert!(first_significant(s.v(r)) > 0.0);
        }
    }

    #[test]
    fn rank_deficient_columns() {
        let x = Matrix::from_rows(&[[1.0, 0.0], [1.0, 0.0]]).unwrap();
        let s = svd(&x).unwrap();
        assert_eq!(s.rank(), 1);
        assert!((s.singular_values()[0] - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn pseudoinverse_examples() {
        let y = pseudoinverse_apply(&Matrix::identity(2), &[3.0, 4.0]).unwrap();
        assert_close(&y, &[3.0, 4.0], 1e-15);

        let y = pseudoinverse_apply(&Matrix::from_rows(&[[1.0, 1.0]]).unwrap(), &[2.0]).unwrap();
        assert_close(&y, &[1.0, 1.0], 1e-15);

        let x = Matrix::from_rows(&[[1.0, 0.0], [1.0, 0.0]]).unwrap();
        let y = pseudoinverse_apply(&x, &[1.0, 1.0]).unwrap();
        // ridge limit Xᵀ(XXᵀ + λI)⁻¹y with λ = 1e-12: XXᵀ = [[1,1],[1,1]],
        // y is its eigenvector with eigenvalue 2, so α = y/(2+λ), β = Xᵀα.
        let lambda = 1e-12;
        let oracle = [2.0 / (2.0 + lambda), 0.0];
        assert_close(&y, &oracle, 1e-10);

        assert!(pseudoinverse_apply(&x, &[1.0]).is_err());
    }

    #[test]
    fn truncation() {
        let s = SvdResult::from_parts(
            3,
            3,
            vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
            vec![2.0, 1.0, 0.01],
            vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
            1e-12,
        )
        .unwrap();
        let t = truncate_svd(&s, 0.5).unwrap();
        assert_eq!(t.singular_values(), &[2.0, 1.0]);
        assert_eq!(t.rank_tolerance(), 0.5);

        assert_eq!(truncate_svd(&s, 0.0).unwrap(), s);

        let t = truncate_svd(&t, 3.0).unwrap();
        assert_eq!(t.rank(), 0);
        assert!(truncate_svd(&s, -1.0).is_err());
    }

    #[test]
    fn projection_examples() {
        let s = svd(&Matrix::from_rows(&[[1.0, 0.0]]).unwrap()).unwrap();
        assert_close(&project_onto_rowspace(&[1.0, 1.0], &s).unwrap(), &[1.0, 0.0], 1e-15);
        assert_close(&project_onto_rowspace(&[0.0, 3.0], &s).unwrap(), &[0.0, 0.0], 1e-15);
        assert_close(&project_onto_rowspace(&[4.0, 0.0], &s).unwrap(), &[4.0, 0.0], 1e-15);
        assert!(project_onto_rowspace(&[1.0], &s).is_err());
    }

    #[test]
    fn from_parts_validates() {
        assert!(SvdResult::from_parts(1, 1, vec![vec![1.0]], vec![-1.0], vec![vec![1.0]], 0.0).is_err());
        assert!(SvdResult::from_parts(
            2,
            2,
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![1.0, 2.0],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            0.0
        )
        .is_err());
    }
}
