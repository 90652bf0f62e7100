use rayon::prelude::*;

use super::{
    apply_ablation, median, AblatedCell, CellFailure, CutoffPolicy, DatasetSource, EstimatorPolicy,
    SweepConfig, SweepOutcome, SweepRecord, AUTO_CUTOFF_FACTOR,
};
use crate::data::{load_csv, make_student_teacher, split, Dataset, SplitSpec};
use crate::decomposition::{smallest_nonzero_singular_value, ErrorDecomposer, GroundTruth, DECOMPOSITION_RTOL};
use crate::error::{Error, Result};
use crate::estimators::{fit_least_squares, fit_pinv_with, fit_ridge_with, mse, Regime};
use crate::linalg::{dot, svd, SvdResult, Vector};

enum Loaded {
    Synthetic { d: usize, noise_sd: f64, n_test: usize, pool: usize },
    Table { ds: Dataset, beta_star: Vector, n_test: usize },
}

impl Loaded {
    fn new(config: &SweepConfig) -> Result<Self> {
        let max_n = *config.grid.last().expect("validated grid");
        match &config.source {
            &DatasetSource::StudentTeacher { d, noise_sd, n_test } => Ok(Loaded::Synthetic {
                d,
                noise_sd,
                n_test,
                pool: max_n,
            }),
            DatasetSource::Csv { path, target_column, standardize } => {
                let ds = load_csv(path, target_column, *standardize)?;
                let total = ds.n_rows();
                let n_test = total / 5;
                if n_test == 0 || max_n > total - n_test {
                    return Err(Error::InvalidParameter(format!(
                        "largest n_train {max_n} exceeds the {} rows left after holding out {n_test} of {total}",
                        total - n_test
                    )));
                }
                config.validate(Some(ds.n_features()))?;
                let beta_star = fit_least_squares(&ds.x, &ds.y)?.beta;
                Ok(Loaded::Table { ds, beta_star, n_test })
            }
        }
    }

    fn d(&self) -> usize {
        match self {
            Loaded::Synthetic { d, .. } => *d,
            Loaded::Table { ds, .. } => ds.n_features(),
        }
    }
}

/// Everything a seed's cells share: the training pool (cells take its
/// leading rows), the held-out test set, β* and the resolved auto cutoff.
struct SeedContext {
    pool: Dataset,
    test: Dataset,
    beta_star: Vector,
    auto_cutoff: Option<f64>,
}

impl SeedContext {
    fn new(config: &SweepConfig, loaded: &Loaded, seed: u64) -> Result<Self> {
        let (pool, test, beta_star) = match loaded {
            &Loaded::Synthetic { d, noise_sd, n_test, pool } => {
                let (ds, _teacher) = make_student_teacher(pool + n_test, d, noise_sd, seed)?;
                let beta_star = fit_least_squares(&ds.x, &ds.y)?.beta;
                let test_rows: Vec<usize> = (pool..pool + n_test).collect();
                (ds.head(pool), ds.subset(&test_rows), beta_star)
            }
            Loaded::Table { ds, beta_star, n_test } => {
                let spec = SplitSpec {
                    n_train: ds.n_rows() - n_test,
                    seed,
                    shuffle: true,
                };
                let (pool, test) = split(ds, spec)?;
                (pool, test, beta_star.clone())
            }
        };
        let auto_cutoff = match config.ablation.cutoff_policy() {
            Some(CutoffPolicy::Auto) => {
                let sigma_max = config
                    .grid
                    .iter()
                    .map(|&n| Ok(svd(&pool.x.head_rows(n))?.sigma_max()))
                    .collect::<Result<Vec<f64>>>()?;
                Some(AUTO_CUTOFF_FACTOR * median(&sigma_max).expect("non-empty grid"))
            }
            _ => None,
        };
        Ok(Self { pool, test, beta_star, auto_cutoff })
    }

    fn run(&self, config: &SweepConfig, n_train: usize, seed: u64) -> Result<SweepRecord> {
        if n_train > self.pool.n_rows() {
            return Err(Error::SplitOutOfRange { n_train, total: self.pool.n_rows() });
        }
        let train = self.pool.head(n_train);
        let cell = apply_ablation(config.ablation, &train, &self.test, &self.beta_star, self.auto_cutoff)?;
        let m = evaluate(&cell, &self.beta_star, config.estimator)?;
        Ok(SweepRecord {
            n_train,
            d: train.n_features(),
            seed,
            ablation: config.ablation,
            estimator: config.estimator,
            train_mse: m.train_mse,
            test_mse: m.test_mse,
            smallest_nonzero_sv: m.smallest_nonzero_sv,
            bias_term_mean: m.bias_term_mean,
            variance_term_mean: m.variance_term_mean,
            regime: Regime::of(n_train, train.n_features()),
            cutoff: cell.cutoff,
        })
    }
}

pub(crate) struct CellMetrics {
    pub train_mse: f64,
    pub test_mse: f64,
    pub smallest_nonzero_sv: Option<f64>,
    pub bias_term_mean: f64,
    pub variance_term_mean: f64,
}

/// Fits the ablated training data and scores it on the ablated test data.
///
/// The bias and variance terms are linear in the test point, so their means
/// over the test set are the terms at the mean test row. The sum is checked
/// against the mean prediction error of the fit itself.
pub(crate) fn evaluate(cell: &AblatedCell, beta_star: &[f64], estimator: EstimatorPolicy) -> Result<CellMetrics> {
    let (n, d) = cell.x_train.shape();
    let regime = Regime::of(n, d);
    let (fit, lambda) = match estimator {
        EstimatorPolicy::Pinv => (fit_pinv_with(&cell.x_train, &cell.y_train, &cell.svd)?, None),
        EstimatorPolicy::Ridge(l) => (fit_ridge_with(&cell.x_train, &cell.y_train, l, &cell.svd)?, Some(l)),
        EstimatorPolicy::RidgeRelative(c) => {
            let l = c * cell.svd.sigma_max().powi(2);
            (fit_ridge_with(&cell.x_train, &cell.y_train, l, &cell.svd)?, Some(l))
        }
    };
    let test_mse = mse(&cell.x_test, &fit.beta, &cell.y_test)?;

    let n_test = cell.x_test.rows() as f64;
    let mut x_mean = vec![0.0; d];
    let (mut pred_err_sum, mut abs_err_sum, mut abs_ideal_sum) = (0.0, 0.0, 0.0);
    for row in cell.x_test.row_iter() {
        crate::linalg::axpy(1.0 / n_test, row, &mut x_mean);
        let ideal = dot(row, beta_star);
        let err = dot(row, &fit.beta) - ideal;
        pred_err_sum += err;
        abs_err_sum += err.abs();
        abs_ideal_sum += ideal.abs();
    }
    let gt = GroundTruth::from_beta(Vector::new(beta_star.to_vec())?, &cell.x_train, &cell.y_train)?;
    let (bias, variance) = match lambda {
        None => ErrorDecomposer::new(&cell.svd, &gt, regime)?.terms(&x_mean)?,
        Some(l) => ridge_terms(&cell.svd, &gt, l, &x_mean),
    };
    let mean_err = pred_err_sum / n_test;
    let tolerance = DECOMPOSITION_RTOL * 1f64.max(abs_ideal_sum / n_test).max(abs_err_sum / n_test);
    if !((bias + variance) - mean_err).abs().le(&tolerance) {
        return Err(Error::DecompositionMismatch {
            predicted: bias + variance,
            direct: mean_err,
            tolerance,
        });
    }
    Ok(CellMetrics {
        train_mse: fit.train_mse,
        test_mse,
        smallest_nonzero_sv: smallest_nonzero_singular_value(&cell.svd).ok(),
        bias_term_mean: bias,
        variance_term_mean: variance,
    })
}

/// Ridge analogue of the decomposition: each mode is shrunk by
/// `σ²/(σ² + λ)`, so bias = `x·(Σ_r f_r v_r v_rᵀ − I)β*` and
/// variance = `Σ_r σ_r/(σ_r² + λ) (x·v_r)(u_r·E)`.
fn ridge_terms(s: &SvdResult, gt: &GroundTruth, lambda: f64, x: &[f64]) -> (f64, f64) {
    let mut bias = -dot(x, &gt.beta_star);
    let mut variance = 0.0;
    for (r, &sigma) in s.singular_values().iter().enumerate() {
        let xv = dot(x, s.v(r));
        let denom = sigma * sigma + lambda;
        bias += sigma * sigma / denom * xv * dot(s.v(r), &gt.beta_star);
        variance += sigma / denom * xv * dot(s.u(r), &gt.residuals);
    }
    (bias, variance)
}

fn wrap(n_train: usize, seed: u64, e: Error) -> Error {
    Error::Cell {
        n_train,
        seed,
        source: Box::new(e),
    }
}

/// One (n_train, seed) cell, computed from scratch.
pub fn run_cell(config: &SweepConfig, n_train: usize, seed: u64) -> Result<SweepRecord> {
    config.validate(None)?;
    let loaded = Loaded::new(config)?;
    SeedContext::new(config, &loaded, seed)
        .and_then(|ctx| ctx.run(config, n_train, seed))
        .map_err(|e| wrap(n_train, seed, e))
}

/// All cells of `config` on the global thread pool.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepOutcome> {
    run_sweep_with_threads(config, None)
}

/// All cells of `config`, on a dedicated pool of `threads` workers when
/// given. Output order and contents do not depend on the schedule. A failing
/// cell is recorded in `failures` and does not abort the sweep.
pub fn run_sweep_with_threads(config: &SweepConfig, threads: Option<usize>) -> Result<SweepOutcome> {
    config.validate(None)?;
    if config.seeds.is_empty() {
        return Ok(SweepOutcome::default());
    }
    let loaded = Loaded::new(config)?;
    match threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?
            .install(|| Ok(sweep_on_current_pool(config, &loaded))),
        None => Ok(sweep_on_current_pool(config, &loaded)),
    }
}

fn sweep_on_current_pool(config: &SweepConfig, loaded: &Loaded) -> SweepOutcome {
    let contexts: Vec<Result<SeedContext>> = config
        .seeds
        .par_iter()
        .map(|&seed| SeedContext::new(config, loaded, seed))
        .collect();
    let cells: Vec<(usize, usize)> = (0..config.seeds.len())
        .flat_map(|s| config.grid.iter().map(move |&n| (s, n)))
        .collect();
    let results: Vec<Result<SweepRecord>> = cells
        .par_iter()
        .map(|&(s, n)| {
            let seed = config.seeds[s];
            match &contexts[s] {
                Ok(ctx) => ctx.run(config, n, seed),
                Err(e) => Err(Error::InvalidParameter(format!("seed setup failed: {e}"))),
            }
            .map_err(|e| wrap(n, seed, e))
        })
        .collect();

    let d = loaded.d();
    let mut outcome = SweepOutcome::default();
    for ((s, n), r) in cells.into_iter().zip(results) {
        match r {
            Ok(rec) => outcome.records.push(rec),
            Err(e) => outcome.failures.push(CellFailure {
                n_train: n,
                d,
                seed: config.seeds[s],
                error: e.to_string(),
            }),
        }
    }
    outcome.records.sort_by_key(|r| (r.n_train, r.d, r.seed));
    outcome.failures.sort_by_key(|f| (f.n_train, f.d, f.seed));
    outcome
}
