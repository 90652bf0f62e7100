use crate::error::{Error, Result};

use super::Matrix;

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
#[derive(Clone, Debug)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    /// Factors `a`. Breakdown (a pivot at or below `n · eps · max diagonal`)
    /// is reported as rank deficiency, with the number of pivots that
    /// succeeded as the rank.
    pub fn factor(a: &Matrix) -> Result<Self> {
        let n = a.rows();
        let max_diag = (0..n.min(a.cols()))
            .map(|i| a.get(i, i))
            .fold(0.0_f64, f64::max);
        Self::factor_with_threshold(a, n as f64 * f64::EPSILON * max_diag)
    }

    /// Factors `a`, treating any pivot `<= threshold` as breakdown.
    pub fn factor_with_threshold(a: &Matrix, threshold: f64) -> Result<Self> {
        let n = a.rows();
        if a.cols() != n {
            return Err(Error::dims("Cholesky::factor", n, a.cols()));
        }

        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut d = a.get(j, j);
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !(d > threshold) {
                return Err(Error::RankDeficient {
                    rank: j,
                    required: n,
                });
            }
            let ljj = d.sqrt();
            l[j * n + j] = ljj;
            for i in j + 1..n {
                let mut s = a.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / ljj;
            }
        }
        Ok(Self { n, l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        if b.len() != n {
            return Err(Error::dims("Cholesky::solve", n, b.len()));
        }
        let l = &self.l;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= l[i * n + k] * y[k];
            }
            y[i] = s / l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= l[k * n + i] * y[k];
            }
            y[i] = s / l[i * n + i];
        }
        Ok(y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_spd_system() {
        let a = Matrix::from_rows(&[[4.0, 2.0], [2.0, 3.0]]).unwrap();
        let c = Cholesky::factor(&a).unwrap();
        let x = c.solve(&[2.0, 1.0]).unwrap();
        assert!((4.0 * x[0] + 2.0 * x[1] - 2.0).abs() < 1e-14);
        assert!((2.0 * x[0] + 3.0 * x[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn singular_matrix_is_rank_deficient() {
        let a = Matrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]).unwrap();
        assert!(matches!(
            Cholesky::factor(&a),
            Err(Error::RankDeficient { rank: 1, required: 2 })
        ));
    }
}
