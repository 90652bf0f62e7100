use std::collections::BTreeMap;

use rayon::prelude::*;

use super::sweep::evaluate;
use super::{AblatedCell, AblationKind, CellFailure, EstimatorPolicy, SweepOutcome, SweepRecord};
use crate::data::{legendre_design, polynomial_target, sample_polynomial_points};
use crate::error::{Error, Result};
use crate::estimators::{fit_least_squares, fit_pinv, Regime};
use crate::linalg::{svd, Matrix, Vector};

/// Noiseless evaluation points, evenly spaced on [−1, 1].
pub const EVAL_GRID_POINTS: usize = 1000;
pub const MAX_POLY_FEATURES: usize = 200;

pub fn eval_grid() -> Vec<f64> {
    let step = 2.0 / (EVAL_GRID_POINTS - 1) as f64;
    (0..EVAL_GRID_POINTS).map(|i| -1.0 + step * i as f64).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolynomialFit {
    pub p: usize,
    pub seed: u64,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub beta: Vector,
}

impl PolynomialFit {
    /// Fitted curve at `x`.
    pub fn predict(&self, x: f64) -> Result<f64> {
        let f = crate::data::legendre_features(x, self.p)?;
        Ok(crate::linalg::dot(&f, &self.beta))
    }
}

/// Minimum-norm fit of `P` Legendre features to `n` noisy samples.
pub fn fit_polynomial(n: usize, p: usize, noise_sd: f64, seed: u64) -> Result<PolynomialFit> {
    let (xs, ys) = sample_polynomial_points(n, noise_sd, seed)?;
    let x = legendre_design(&xs, p)?;
    let beta = fit_pinv(&x, &ys)?.beta;
    Ok(PolynomialFit { p, seed, xs, ys, beta })
}

/// One record per (P, seed) in grid order; duplicate P values give
/// duplicate records. Test MSE is measured against the noiseless target on
/// [`EVAL_GRID_POINTS`] evenly spaced points, and β*_P is the least-squares fit
/// on those points.
pub fn run_polynomial_sweep(p_grid: &[usize], n: usize, seeds: &[u64], noise_sd: f64) -> Result<SweepOutcome> {
    if let Some(&p) = p_grid.iter().find(|&&p| p == 0 || p > MAX_POLY_FEATURES) {
        return Err(Error::InvalidParameter(format!(
            "P = {p} outside [1, {MAX_POLY_FEATURES}]"
        )));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("polynomial sweep needs n >= 1".into()));
    }
    if !(noise_sd >= 0.0) || !noise_sd.is_finite() {
        return Err(Error::InvalidParameter(format!("noise_sd must be >= 0, got {noise_sd}")));
    }
    let Some(&p_max) = p_grid.iter().max() else {
        return Ok(SweepOutcome::default());
    };
    if seeds.is_empty() {
        return Ok(SweepOutcome::default());
    }

    let grid = eval_grid();
    let x_eval = legendre_design(&grid, p_max)?;
    let y_eval = Vector::new(grid.iter().map(|&x| polynomial_target(x)).collect())?;
    let mut distinct: Vec<usize> = p_grid.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    let beta_star: BTreeMap<usize, Result<(Matrix, Vector)>> = distinct
        .par_iter()
        .map(|&p| {
            let x = x_eval.head_cols(p);
            let b = fit_least_squares(&x, &y_eval).map(|f| (x, f.beta));
            (p, b)
        })
        .collect();

    let training: Vec<Result<(Matrix, Vector)>> = seeds
        .par_iter()
        .map(|&seed| {
            let (xs, ys) = sample_polynomial_points(n, noise_sd, seed)?;
            Ok((legendre_design(&xs, p_max)?, Vector::new(ys)?))
        })
        .collect();

    let cells: Vec<(usize, usize)> = p_grid
        .iter()
        .flat_map(|&p| (0..seeds.len()).map(move |s| (p, s)))
        .collect();
    let results: Vec<Result<SweepRecord>> = cells
        .par_iter()
        .map(|&(p, s)| {
            let seed = seeds[s];
            poly_cell(p, n, seed, &beta_star[&p], &training[s], &y_eval).map_err(|e| Error::Cell {
                n_train: n,
                seed,
                source: Box::new(e),
            })
        })
        .collect();

    let mut outcome = SweepOutcome::default();
    for ((p, s), r) in cells.into_iter().zip(results) {
        match r {
            Ok(rec) => outcome.records.push(rec),
            Err(e) => outcome.failures.push(CellFailure {
                n_train: n,
                d: p,
                seed: seeds[s],
                error: e.to_string(),
            }),
        }
    }
    outcome.records.sort_by_key(|r| (r.n_train, r.d, r.seed));
    outcome.failures.sort_by_key(|f| (f.n_train, f.d, f.seed));
    Ok(outcome)
}

fn poly_cell(
    p: usize,
    n: usize,
    seed: u64,
    truth: &Result<(Matrix, Vector)>,
    training: &Result<(Matrix, Vector)>,
    y_eval: &Vector,
) -> Result<SweepRecord> {
    let (x_eval, beta_star) = truth
        .as_ref()
        .map_err(|e| Error::InvalidParameter(format!("β* fit for P = {p} failed: {e}")))?;
    let (x_train_max, y_train) = training
        .as_ref()
        .map_err(|e| Error::InvalidParameter(format!("training sample failed: {e}")))?;
    let x_train = x_train_max.head_cols(p);
    let cell = AblatedCell {
        svd: svd(&x_train)?,
        x_train,
        y_train: y_train.clone(),
        x_test: x_eval.clone(),
        y_test: y_eval.clone(),
        cutoff: None,
        note: String::new(),
    };
    let m = evaluate(&cell, beta_star, EstimatorPolicy::Pinv)?;
    Ok(SweepRecord {
        n_train: n,
        d: p,
        seed,
        ablation: AblationKind::None,
        estimator: EstimatorPolicy::Pinv,
        train_mse: m.train_mse,
        test_mse: m.test_mse,
        smallest_nonzero_sv: m.smallest_nonzero_sv,
        bias_term_mean: m.bias_term_mean,
        variance_term_mean: m.variance_term_mean,
        regime: Regime::of(n, p),
        cutoff: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_grid_endpoints() {
        let g = eval_grid();
        assert_eq!(g.len(), EVAL_GRID_POINTS);
        assert_eq!(g[0], -1.0);
        assert!((g[EVAL_GRID_POINTS - 1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn interpolation_at_p_equals_n() {
        let out = run_polynomial_sweep(&[30], 30, &[0, 1, 2], 0.0).unwrap();
        assert!(out.failures.is_empty(), "{:?}", out.failures);
        for r in &out.records {
            assert_eq!(r.regime, Regime::Interpolation);
            assert!(r.train_mse <= 1e-8, "train mse {}", r.train_mse);
        }
    }

    #[test]
    fn duplicates_are_kept() {
        let out = run_polynomial_sweep(&[3, 3, 5], 10, &[0], 0.5).unwrap();
        let ps: Vec<usize> = out.records.iter().map(|r| r.d).collect();
        assert_eq!(ps, [3, 3, 5]);
        assert_eq!(out.records[0], out.records[1]);
    }

    #[test]
    fn rejects_out_of_range_p() {
        assert!(run_polynomial_sweep(&[0], 10, &[0], 0.5).is_err());
        assert!(run_polynomial_sweep(&[201], 10, &[0], 0.5).is_err());
    }
}
