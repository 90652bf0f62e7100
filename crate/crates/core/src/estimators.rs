//! Ways to fit the linear parameters β.
//!
//! The two closed forms solve the normal equations of the respective regime:
//! `(XᵀX) β = XᵀY` when underparameterized and `β = Xᵀ(XXᵀ)⁻¹Y` when
//! overparameterized. Both are Cholesky based and never touch the SVD, so
//! they serve as an independent check on [`fit_pinv`].

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, axpy, distance, dot, norm, Cholesky, Matrix, SvdResult, Vector};

const MAX_REFINEMENT_STEPS: usize = 6;
/// Gradient descent stops once `‖Xw − Y‖²` drops below this.
pub const GD_LOSS_EXIT: f64 = 1e-14;
/// Gradient descent reports divergence once the loss exceeds this multiple of
/// its running minimum.
pub const GD_DIVERGENCE_FACTOR: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// N > D
    Underparameterized,
    /// N = D
    Interpolation,
    /// N < D
    Overparameterized,
}

impl Regime {
    pub fn of(n_rows: usize, n_params: usize) -> Self {
        use std::cmp::Ordering::*;
        match n_rows.cmp(&n_params) {
            Greater => Regime::Underparameterized,
            Equal => Regime::Interpolation,
            Less => Regime::Overparameterized,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Underparameterized => "under",
            Regime::Interpolation => "interpolation",
            Regime::Overparameterized => "over",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    OlsNormalEquations,
    GramMinNorm,
    Pseudoinverse,
    Ridge { lambda: f64 },
    GradientDescent { learning_rate: f64, steps: usize },
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::OlsNormalEquations => f.write_str("ols-normal-equations"),
            Method::GramMinNorm => f.write_str("gram-min-norm"),
            Method::Pseudoinverse => f.write_str("pseudoinverse"),
            Method::Ridge { lambda } => write!(f, "ridge({lambda})"),
            Method::GradientDescent {
                learning_rate,
                steps,
            } => write!(f, "gradient-descent({learning_rate}, {steps})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub beta: Vector,
    pub regime: Regime,
    pub method: Method,
    /// `(1/N) ‖Xβ − Y‖²`
    pub train_mse: f64,
}

impl FitResult {
    fn new(x: &Matrix, y: &[f64], beta: Vector, method: Method) -> Result<Self> {
        let train_mse = mse(x, &beta, y)?;
        Ok(Self {
            beta,
            regime: Regime::of(x.rows(), x.cols()),
            method,
            train_mse,
        })
    }

    pub fn predict(&self, features: &[f64]) -> f64 {
        linalg::dot(features, &self.beta)
    }
}

/// `(1/N) ‖Xβ − Y‖²`, or 0 for an empty design.
pub fn mse(x: &Matrix, beta: &[f64], y: &[f64]) -> Result<f64> {
    if y.len() != x.rows() {
        return Err(Error::dims("mse", x.rows(), y.len()));
    }
    if x.rows() == 0 {
        return Ok(0.0);
    }
    let pred = x.matvec(beta)?;
    let sse: f64 = pred.iter().zip(y).map(|(p, t)| (p - t).powi(2)).sum();
    Ok(sse / x.rows() as f64)
}

fn check_rows(op: &'static str, x: &Matrix, y: &[f64]) -> Result<()> {
    if y.len() != x.rows() {
        return Err(Error::dims(op, x.rows(), y.len()));
    }
    if x.rows() == 0 || x.cols() == 0 {
        return Err(Error::InvalidParameter(format!(
            "{op} needs a non-empty design, got {}x{}",
            x.rows(),
            x.cols()
        )));
    }
    Ok(())
}

/// Repeats `correction` while it keeps shrinking, adding it to `state`.
fn refine<F>(state: &mut [f64], mut correction: F) -> Result<()>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let mut last = f64::INFINITY;
    for _ in 0..MAX_REFINEMENT_STEPS {
        let delta = correction(state)?;
        let size = norm(&delta);
        if !(size < last) {
            break;
        }
        axpy(1.0, &delta, state);
        last = size;
        if size <= 4.0 * f64::EPSILON * norm(state) {
            break;
        }
    }
    Ok(())
}

/// Underparameterized least squares `β = (XᵀX)⁻¹XᵀY`.
pub fn fit_ols_under(x: &Matrix, y: &[f64]) -> Result<FitResult> {
    check_rows("fit_ols_under", x, y)?;
    let (n, d) = x.shape();
    if n < d {
        return Err(Error::RankDeficient {
            rank: n,
            required: d,
        });
    }
    let chol = Cholesky::factor(&x.gram_cols())?;
    let mut beta = chol.solve(&x.tr_matvec(y)?)?;
    refine(&mut beta, |b| {
        let pred = x.matvec(b)?;
        let resid = linalg::sub(y, &pred);
        chol.solve(&x.tr_matvec(&resid)?)
    })?;
    FitResult::new(x, y, Vector::new(beta)?, Method::OlsNormalEquations)
}

/// Minimum-norm interpolant `β = Xᵀ(XXᵀ)⁻¹Y`.
pub fn fit_min_norm(x: &Matrix, y: &[f64]) -> Result<FitResult> {
    check_rows("fit_min_norm", x, y)?;
    let (n, d) = x.shape();
    if n > d {
        return Err(Error::RankDeficient {
            rank: d,
            required: n,
        });
    }
    let chol = Cholesky::factor(&x.gram_rows())?;
    // iterate on the multipliers so β stays an exact combination of rows
    let mut alpha = chol.solve(y)?;
    refine(&mut alpha, |a| {
        let beta = x.tr_matvec(a)?;
        let resid = linalg::sub(y, &x.matvec(&beta)?);
        chol.solve(&resid)
    })?;
    let beta = x.tr_matvec(&alpha)?;
    FitResult::new(x, y, beta, Method::GramMinNorm)
}

/// `β = X⁺Y`.
pub fn fit_pinv(x: &Matrix, y: &[f64]) -> Result<FitResult> {
    if y.len() != x.rows() {
        return Err(Error::dims("fit_pinv", x.rows(), y.len()));
    }
    let s = linalg::svd(x)?;
    fit_pinv_with(x, y, &s)
}

/// `β = X⁺Y` from a precomputed (possibly truncated) SVD of `x`.
pub fn fit_pinv_with(x: &Matrix, y: &[f64], s: &SvdResult) -> Result<FitResult> {
    if s.shape() != x.shape() {
        return Err(Error::dims("fit_pinv_with", x.rows(), s.rows()));
    }
    let beta = s.pinv_apply(y)?;
    FitResult::new(x, y, beta, Method::Pseudoinverse)
}

/// Ridge solution `β = Xᵀ(XXᵀ + λI)⁻¹Y`.
pub fn fit_ridge(x: &Matrix, y: &[f64], lambda: f64) -> Result<FitResult> {
    check_rows("fit_ridge", x, y)?;
    fit_ridge_with(x, y, lambda, &linalg::svd(x)?)
}

/// Ridge from a precomputed SVD of `x`, as the filtered expansion
/// `β = Σ_r σ_r/(σ_r² + λ) (u_r·Y) v_r`. Each coefficient shrinks
/// monotonically in λ, so `‖β_λ‖` does too, even in floating point.
pub fn fit_ridge_with(x: &Matrix, y: &[f64], lambda: f64, s: &SvdResult) -> Result<FitResult> {
    check_rows("fit_ridge", x, y)?;
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "ridge needs lambda > 0, got {lambda}"
        )));
    }
    if s.shape() != x.shape() {
        return Err(Error::dims("fit_ridge_with", x.rows(), s.rows()));
    }
    let mut beta = vec![0.0; x.cols()];
    for (r, &sigma) in s.singular_values().iter().enumerate() {
        let filter = sigma / (sigma * sigma + lambda);
        axpy(filter * dot(s.u(r), y), s.v(r), &mut beta);
    }
    FitResult::new(x, y, Vector::new(beta)?, Method::Ridge { lambda })
}

/// Regime-appropriate minimum-norm least squares: the OLS closed form when
/// N > D, the Gram closed form when N < D and the pseudoinverse at N = D.
/// Rank-deficient inputs fall back to the pseudoinverse.
pub fn fit_least_squares(x: &Matrix, y: &[f64]) -> Result<FitResult> {
    let attempt = match Regime::of(x.rows(), x.cols()) {
        Regime::Underparameterized => fit_ols_under(x, y),
        Regime::Overparameterized => fit_min_norm(x, y),
        Regime::Interpolation => return fit_pinv(x, y),
    };
    match attempt {
        Err(Error::RankDeficient { .. }) => fit_pinv(x, y),
        other => other,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LearningRate {
    /// `1 / σ_max²` of the instance.
    Auto,
    Fixed(f64),
}

#[derive(Clone, Debug)]
pub struct GdOptions {
    pub learning_rate: LearningRate,
    pub steps: usize,
    /// Record `‖w − X⁺Y‖` every this many steps (plus the final iterate).
    pub checkpoint_every: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GdTrace {
    pub learning_rate: f64,
    /// Steps actually taken (less than the budget on early exit).
    pub steps: usize,
    /// `‖Xw(t) − Y‖²` for t = 0..=steps.
    pub loss_history: Vec<f64>,
    pub final_beta: Vector,
    pub distance_to_pinv: f64,
    /// `(t, ‖w(t) − X⁺Y‖)` at the requested checkpoints.
    pub distance_history: Vec<(usize, f64)>,
}

impl GdTrace {
    pub fn to_fit(&self, x: &Matrix, y: &[f64]) -> Result<FitResult> {
        FitResult::new(
            x,
            y,
            self.final_beta.clone(),
            Method::GradientDescent {
                learning_rate: self.learning_rate,
                steps: self.steps,
            },
        )
    }
}

/// Plain gradient descent `w ← w − η Xᵀ(Xw − Y)` from `w = 0`.
pub fn fit_gradient_descent(x: &Matrix, y: &[f64], eta: f64, steps: usize) -> Result<GdTrace> {
    gradient_descent(
        x,
        y,
        &GdOptions {
            learning_rate: LearningRate::Fixed(eta),
            steps,
            checkpoint_every: None,
        },
    )
}

pub fn gradient_descent(x: &Matrix, y: &[f64], opts: &GdOptions) -> Result<GdTrace> {
    check_rows("fit_gradient_descent", x, y)?;
    let s = linalg::svd(x)?;
    let eta = match opts.learning_rate {
        LearningRate::Fixed(eta) => eta,
        LearningRate::Auto if s.rank() == 0 => 1.0,
        LearningRate::Auto => s.sigma_max().powi(-2),
    };
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "learning rate must be positive, got {eta}"
        )));
    }
    let target = s.pinv_apply(y)?;

    let mut w = vec![0.0; x.cols()];
    let mut loss_history = Vec::with_capacity(opts.steps.min(1 << 20) + 1);
    let mut distance_history = Vec::new();
    let mut min_loss = f64::INFINITY;
    let mut taken = 0;
    loop {
        let pred = x.matvec(&w)?;
        let err = linalg::sub(&pred, y);
        let loss = linalg::dot(&err, &err);
        if !loss.is_finite() || loss > GD_DIVERGENCE_FACTOR * min_loss {
            return Err(Error::Divergence {
                step: taken,
                loss,
                min_loss,
            });
        }
        min_loss = min_loss.min(loss);
        loss_history.push(loss);

        let done = taken == opts.steps || loss < GD_LOSS_EXIT;
        if let Some(every) = opts.checkpoint_every {
            if done || taken % every.max(1) == 0 {
                distance_history.push((taken, distance(&w, &target)));
            }
        }
        if done {
            break;
        }
        let grad = x.tr_matvec(&err)?;
        axpy(-eta, &grad, &mut w);
        taken += 1;
    }

    let distance_to_pinv = distance(&w, &target);
    Ok(GdTrace {
        learning_rate: eta,
        steps: taken,
        loss_history,
        final_beta: Vector::new(w)?,
        distance_to_pinv,
        distance_history,
    })
}
