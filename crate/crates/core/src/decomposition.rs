//! Per-instance decomposition of the test prediction error.
//!
//! Writing the training targets as `Y = Xβ* + E`, the minimum-norm
//! prediction at `x_test` differs from the ideal prediction `x_test·β*` by
//!
//! ```text
//! ŷ − y* = x_test·(Σ_r v_r v_rᵀ − I) β*  +  Σ_r (1/σ_r)(x_test·v_r)(u_r·E)
//!          └──────── bias ────────┘      └────────── variance ──────────┘
//! ```
//!
//! The bias vanishes when the training features span every direction
//! (`R = D`). Each variance summand is the product of the three quantities
//! that must all be large for the error to spike: a small singular value, a
//! test point aligned with that mode, and residuals aligned with it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{fit_least_squares, Regime};
use crate::linalg::{dot, Matrix, SvdResult, Vector};

/// Ideal parameters β* and the training residuals `E = Y − Xβ*`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub beta_star: Vector,
    pub residuals: Vector,
}

impl GroundTruth {
    pub fn from_beta(beta_star: Vector, x_train: &Matrix, y_train: &[f64]) -> Result<Self> {
        if beta_star.len() != x_train.cols() {
            return Err(Error::dims("GroundTruth::from_beta", x_train.cols(), beta_star.len()));
        }
        if y_train.len() != x_train.rows() {
            return Err(Error::dims("GroundTruth::from_beta", x_train.rows(), y_train.len()));
        }
        let fitted = x_train.matvec(&beta_star)?;
        let residuals = Vector::new(y_train.iter().zip(fitted.iter()).map(|(y, f)| y - f).collect())?;
        Ok(Self {
            beta_star,
            residuals,
        })
    }

    /// `y* = x·β*`
    pub fn ideal_prediction(&self, x: &[f64]) -> f64 {
        dot(x, &self.beta_star)
    }
}

/// β* is the least-squares fit on the full data; residuals are taken on the
/// training rows.
pub fn make_ground_truth(
    x_full: &Matrix,
    y_full: &[f64],
    x_train: &Matrix,
    y_train: &[f64],
) -> Result<GroundTruth> {
    if x_full.cols() != x_train.cols() {
        return Err(Error::dims("make_ground_truth", x_full.cols(), x_train.cols()));
    }
    if x_full.rows() < x_train.rows() {
        return Err(Error::dims("make_ground_truth", x_train.rows(), x_full.rows()));
    }
    let beta_star = fit_least_squares(x_full, y_full)?.beta;
    GroundTruth::from_beta(beta_star, x_train, y_train)
}

/// Relative tolerance used by [`ErrorDecomposition::check_against`].
pub const DECOMPOSITION_RTOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeContribution {
    pub mode_index: usize,
    pub sigma: f64,
    pub inv_sigma: f64,
    pub xtest_dot_v: f64,
    pub u_dot_e: f64,
    /// `inv_sigma · xtest_dot_v · u_dot_e`
    pub contribution: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorDecomposition {
    pub bias_term: f64,
    pub modes: Vec<ModeContribution>,
    pub variance_term: f64,
    pub predicted_error: f64,
}

impl ErrorDecomposition {
    /// Compares `predicted_error` with `ŷ − y*` computed from a fitted
    /// estimator, within `1e-8 · max(1, |y*|, |ŷ − y*|)`.
    pub fn check_against(&self, y_hat: f64, y_star: f64) -> Result<()> {
        let scale = 1f64.max(y_star.abs()).max((y_hat - y_star).abs());
        self.check_against_with(y_hat, y_star, DECOMPOSITION_RTOL * scale)
    }

    pub fn check_against_with(&self, y_hat: f64, y_star: f64, tolerance: f64) -> Result<()> {
        let direct = y_hat - y_star;
        if (direct - self.predicted_error).abs() <= tolerance {
            Ok(())
        } else {
            Err(Error::DecompositionMismatch {
                predicted: self.predicted_error,
                direct,
                tolerance,
            })
        }
    }
}

/// Precomputes the per-mode quantities that do not depend on the test point,
/// so many test points can be decomposed cheaply.
#[derive(Clone, Debug)]
pub struct ErrorDecomposer<'a> {
    svd: &'a SvdResult,
    beta_star: &'a [f64],
    full_rank: bool,
    u_dot_e: Vec<f64>,
    v_dot_beta: Vec<f64>,
}

impl<'a> ErrorDecomposer<'a> {
    pub fn new(svd: &'a SvdResult, gt: &'a GroundTruth, regime: Regime) -> Result<Self> {
        let (n, d) = svd.shape();
        if regime != Regime::of(n, d) {
            return Err(Error::RegimeMismatch {
                declared: regime.as_str(),
                rows: n,
                cols: d,
            });
        }
        if gt.beta_star.len() != d {
            return Err(Error::dims("decompose_test_error (beta_star)", d, gt.beta_star.len()));
        }
        if gt.residuals.len() != n {
            return Err(Error::dims("decompose_test_error (residuals)", n, gt.residuals.len()));
        }
        let u_dot_e = (0..svd.rank()).map(|r| dot(svd.u(r), &gt.residuals)).collect();
        let v_dot_beta = (0..svd.rank()).map(|r| dot(svd.v(r), &gt.beta_star)).collect();
        Ok(Self {
            svd,
            beta_star: &gt.beta_star,
            full_rank: svd.rank() == d,
            u_dot_e,
            v_dot_beta,
        })
    }

    fn check_len(&self, x_test: &[f64]) -> Result<()> {
        if x_test.len() != self.svd.cols() {
            return Err(Error::dims("decompose_test_error (x_test)", self.svd.cols(), x_test.len()));
        }
        Ok(())
    }

    pub fn decompose(&self, x_test: &[f64]) -> Result<ErrorDecomposition> {
        self.check_len(x_test)?;
        let mut bias_proj = 0.0;
        let mut modes = Vec::with_capacity(self.svd.rank());
        for (r, &sigma) in self.svd.singular_values().iter().enumerate() {
            let xtest_dot_v = dot(x_test, self.svd.v(r));
            bias_proj += xtest_dot_v * self.v_dot_beta[r];
            let inv_sigma = 1.0 / sigma;
            let u_dot_e = self.u_dot_e[r];
            modes.push(ModeContribution {
                mode_index: r,
                sigma,
                inv_sigma,
                xtest_dot_v,
                u_dot_e,
                contribution: inv_sigma * xtest_dot_v * u_dot_e,
            });
        }
        let bias_term = self.bias(x_test, bias_proj);
        let variance_term = modes.iter().map(|m| m.contribution).sum::<f64>();
        Ok(ErrorDecomposition {
            bias_term,
            modes,
            variance_term,
            predicted_error: bias_term + variance_term,
        })
    }

    /// `(bias, variance)` without materializing the per-mode list.
    pub fn terms(&self, x_test: &[f64]) -> Result<(f64, f64)> {
        self.check_len(x_test)?;
        let mut bias_proj = 0.0;
        let mut variance = 0.0;
        for (r, &sigma) in self.svd.singular_values().iter().enumerate() {
            let xv = dot(x_test, self.svd.v(r));
            bias_proj += xv * self.v_dot_beta[r];
            variance += (1.0 / sigma) * xv * self.u_dot_e[r];
        }
        Ok((self.bias(x_test, bias_proj), variance))
    }

    fn bias(&self, x_test: &[f64], projected: f64) -> f64 {
        // the projector is exactly the identity when R = D
        if self.full_rank {
            0.0
        } else {
            projected - dot(x_test, self.beta_star)
        }
    }
}

pub fn decompose_test_error(
    x_test: &[f64],
    svd: &SvdResult,
    gt: &GroundTruth,
    regime: Regime,
) -> Result<ErrorDecomposition> {
    ErrorDecomposer::new(svd, gt, regime)?.decompose(x_test)
}

/// `σ_R`, the smallest retained singular value.
pub fn smallest_nonzero_singular_value(svd: &SvdResult) -> Result<f64> {
    svd.singular_values().last().copied().ok_or(Error::EmptySpectrum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::svd;

    fn m<R: AsRef<[f64]>>(rows: &[R]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    fn v(values: &[f64]) -> Vector {
        Vector::new(values.to_vec()).unwrap()
    }

    #[test]
    fn noiseless_targets_have_zero_variance() {
        let x = m(&[[1.0, 2.0], [0.5, -1.0], [3.0, 0.0]]);
        let beta = v(&[0.7, -0.2]);
        let y = x.matvec(&beta).unwrap();
        let gt = make_ground_truth(&x, &y, &x, &y).unwrap();
        assert!(gt.residuals.norm() < 1e-14);
        let s = svd(&x).unwrap();
        let dec = decompose_test_error(&[1.0, 1.0], &s, &gt, Regime::Underparameterized).unwrap();
        assert!(dec.variance_term.abs() < 1e-14);
        assert_eq!(dec.bias_term, 0.0);
    }

    #[test]
    fn identity_training_features() {
        // σ = 1 and u_r = v_r = e_r, so mode r contributes x_r · E_r
        let x = Matrix::identity(2);
        let gt = GroundTruth {
            beta_star: v(&[1.0, 0.0]),
            residuals: v(&[0.0, 1.0]),
        };
        let s = svd(&x).unwrap();
        let dec = decompose_test_error(&[1.0, 1.0], &s, &gt, Regime::Interpolation).unwrap();
        assert_eq!(dec.modes.len(), 2);
        assert_eq!(dec.modes[0].contribution, 0.0);
        assert_eq!(dec.modes[1].contribution, 1.0);
        assert_eq!(dec.variance_term, 1.0);
        assert_eq!(dec.predicted_error, 1.0);
    }

    #[test]
    fn overparameterized_bias() {
        // (e₁e₁ᵀ − I)(0, 1) = (0, −1), dotted with x_test = (0, 1)
        let x = m(&[[1.0, 0.0]]);
        let gt = GroundTruth {
            beta_star: v(&[0.0, 1.0]),
            residuals: v(&[0.0]),
        };
        let s = svd(&x).unwrap();
        let dec = decompose_test_error(&[0.0, 1.0], &s, &gt, Regime::Overparameterized).unwrap();
        assert_eq!(dec.bias_term, -1.0);
        assert_eq!(dec.variance_term, 0.0);
    }

    #[test]
    fn regime_mismatch_is_rejected() {
        let x = m(&[[1.0, 0.0]]);
        let gt = GroundTruth {
            beta_star: v(&[0.0, 1.0]),
            residuals: v(&[0.0]),
        };
        let s = svd(&x).unwrap();
        assert!(matches!(
            decompose_test_error(&[0.0, 1.0], &s, &gt, Regime::Underparameterized),
            Err(Error::RegimeMismatch { .. })
        ));
    }

    #[test]
    fn ground_truth_examples() {
        let gt = make_ground_truth(&m(&[[2.0]]), &[6.0], &m(&[[2.0]]), &[6.0]).unwrap();
        assert_eq!(&*gt.beta_star, &[3.0]);
        assert_eq!(&*gt.residuals, &[0.0]);

        // noise orthogonal to the column space of X_full leaves β* unchanged
        let x_full = m(&[[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, -1.0]]);
        let beta = [2.0, -1.0];
        let noise = [1.0, 1.0, -1.0, 0.0];
        assert!(x_full.tr_matvec(&noise).unwrap().norm() == 0.0);
        let clean = x_full.matvec(&beta).unwrap();
        let y_full: Vec<f64> = clean.iter().zip(noise).map(|(c, e)| c + e).collect();
        let train_rows = [0, 2];
        let x_train = x_full.select_rows(&train_rows);
        let y_train: Vec<f64> = train_rows.iter().map(|&i| y_full[i]).collect();
        let gt = make_ground_truth(&x_full, &y_full, &x_train, &y_train).unwrap();
        assert!(crate::linalg::distance(&gt.beta_star, &beta) < 1e-14);
        let expected: Vec<f64> = train_rows.iter().map(|&i| noise[i]).collect();
        assert!(crate::linalg::distance(&gt.residuals, &expected) < 1e-14);
    }

    #[test]
    fn smallest_singular_value() {
        let s = svd(&m(&[[2.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 0.1]])).unwrap();
        assert!((smallest_nonzero_singular_value(&s).unwrap() - 0.1).abs() < 1e-15);
        let s = svd(&m(&[[5.0]])).unwrap();
        assert_eq!(smallest_nonzero_singular_value(&s).unwrap(), 5.0);
        let s = svd(&Matrix::zeros(2, 3)).unwrap();
        assert!(matches!(smallest_nonzero_singular_value(&s), Err(Error::EmptySpectrum)));
    }

    #[test]
    fn nearly_collinear_rows() {
        // brute-force oracle: eigenvalues of the symmetric 2x2 XᵀX in
        // extended form λ_min = det / λ_max avoids the cancellation
        let eps = 1e-6;
        let x = m(&[[1.0, 1.0], [1.0, 1.0 + eps]]);
        let g = x.gram_cols();
        let (a, b, c) = (g.get(0, 0), g.get(0, 1), g.get(1, 1));
        // det(XᵀX) = det(X)², and det(X) = (1 + eps) − 1 is exact in floating point
        let det = ((1.0 + eps) - 1.0_f64).powi(2);
        let lambda_max = 0.5 * (a + c) + (0.25 * (a - c).powi(2) + b * b).sqrt();
        let oracle = (det / lambda_max).sqrt();
        // 50-digit reference: 4.99999874999999997738e-7
        assert!((oracle - 4.999_998_75e-7).abs() < 1e-15);
        let s = svd(&x).unwrap();
        let got = smallest_nonzero_singular_value(&s).unwrap();
        assert!((got - oracle).abs() <= 1e-9 * oracle, "{got} vs {oracle}");
    }

    #[test]
    fn check_against_flags_mismatch() {
        let dec = ErrorDecomposition {
            bias_term: 0.0,
            modes: vec![],
            variance_term: 1.0,
            predicted_error: 1.0,
        };
        assert!(dec.check_against(3.0, 2.0).is_ok());
        assert!(matches!(
            dec.check_against(3.5, 2.0),
            Err(Error::DecompositionMismatch { .. })
        ));
    }
}
