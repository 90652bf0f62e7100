//! Double-descent sweeps over the number of training points (linear
//! regression) and over the number of features (polynomial regression), with
//! the three ablations that each remove one factor of the spike.

mod ablation;
mod polynomial;
mod sweep;

pub use ablation::{apply_ablation, AblatedCell};
pub use polynomial::{fit_polynomial, run_polynomial_sweep, PolynomialFit, EVAL_GRID_POINTS, MAX_POLY_FEATURES};
pub use sweep::{run_cell, run_sweep, run_sweep_with_threads};

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::Regime;

/// Auto cutoff τ = this × median over the grid of σ_max(training X).
pub const AUTO_CUTOFF_FACTOR: f64 = 0.1;
/// Medians below this are treated as exact zeros by [`peak_ratio`].
pub const MEDIAN_FLOOR: f64 = 1e-12;
pub const DEFAULT_SYNTHETIC_TEST_ROWS: usize = 500;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CutoffPolicy {
    Auto,
    Fixed(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AblationKind {
    None,
    /// Fit with the training SVD truncated at τ.
    SvCutoff(CutoffPolicy),
    /// Replace each test row by its projection onto the training modes with
    /// σ ≥ τ.
    TestProjection(CutoffPolicy),
    /// Replace every target with its ideal prediction `x·β*`.
    LinearizedTargets,
}

impl AblationKind {
    pub fn cutoff_policy(&self) -> Option<CutoffPolicy> {
        match *self {
            AblationKind::SvCutoff(p) | AblationKind::TestProjection(p) => Some(p),
            _ => None,
        }
    }

    fn validate(&self) -> Result<()> {
        if let Some(CutoffPolicy::Fixed(tau)) = self.cutoff_policy() {
            if !(tau > 0.0) || !tau.is_finite() {
                return Err(Error::InvalidParameter(format!("cutoff τ must be > 0, got {tau}")));
            }
        }
        Ok(())
    }
}

impl fmt::Display for AblationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let with_cutoff = |f: &mut fmt::Formatter<'_>, name: &str, p: &CutoffPolicy| match p {
            CutoffPolicy::Auto => f.write_str(name),
            CutoffPolicy::Fixed(tau) => write!(f, "{name}:{tau}"),
        };
        match self {
            AblationKind::None => f.write_str("none"),
            AblationKind::SvCutoff(p) => with_cutoff(f, "sv-cutoff", p),
            AblationKind::TestProjection(p) => with_cutoff(f, "test-projection", p),
            AblationKind::LinearizedTargets => f.write_str("linearized-targets"),
        }
    }
}

fn parse_cutoff(s: Option<&str>) -> Result<CutoffPolicy> {
    match s {
        None | Some("auto") => Ok(CutoffPolicy::Auto),
        Some(v) => {
            let tau: f64 = v
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("bad cutoff `{v}`")))?;
            if !(tau > 0.0) || !tau.is_finite() {
                return Err(Error::InvalidParameter(format!("cutoff τ must be > 0, got {v}")));
            }
            Ok(CutoffPolicy::Fixed(tau))
        }
    }
}

impl FromStr for AblationKind {
    type Err = Error;

    /// `none | sv-cutoff[:τ|:auto] | test-projection[:τ|:auto] | linearized-targets`
    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        match (name, arg) {
            ("none", None) => Ok(AblationKind::None),
            ("linearized-targets", None) => Ok(AblationKind::LinearizedTargets),
            ("sv-cutoff", a) => Ok(AblationKind::SvCutoff(parse_cutoff(a)?)),
            ("test-projection", a) => Ok(AblationKind::TestProjection(parse_cutoff(a)?)),
            _ => Err(Error::InvalidParameter(format!("unknown ablation `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorPolicy {
    /// Minimum-norm least squares.
    Pinv,
    Ridge(f64),
    /// Ridge with λ = c · σ_max²(training X), chosen per cell.
    RidgeRelative(f64),
}

impl fmt::Display for EstimatorPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EstimatorPolicy::Pinv => f.write_str("pinv"),
            EstimatorPolicy::Ridge(l) => write!(f, "ridge:{l}"),
            EstimatorPolicy::RidgeRelative(c) => write!(f, "ridge-rel:{c}"),
        }
    }
}

impl FromStr for EstimatorPolicy {
    type Err = Error;

    /// `pinv | ridge:λ | ridge-rel:c`
    fn from_str(s: &str) -> Result<Self> {
        let positive = |v: &str| -> Result<f64> {
            match v.parse::<f64>() {
                Ok(x) if x > 0.0 && x.is_finite() => Ok(x),
                _ => Err(Error::InvalidParameter(format!("ridge strength must be > 0, got `{v}`"))),
            }
        };
        match s.split_once(':') {
            None if s == "pinv" => Ok(EstimatorPolicy::Pinv),
            Some(("ridge", v)) => Ok(EstimatorPolicy::Ridge(positive(v)?)),
            Some(("ridge-rel", v)) => Ok(EstimatorPolicy::RidgeRelative(positive(v)?)),
            _ => Err(Error::InvalidParameter(format!("unknown estimator `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DatasetSource {
    /// Per seed: a teacher, a training pool of max(grid) rows and `n_test`
    /// held-out rows.
    StudentTeacher { d: usize, noise_sd: f64, n_test: usize },
    /// Per seed: a shuffled split with the last 20% held out.
    Csv { path: PathBuf, target_column: String, standardize: bool },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub source: DatasetSource,
    pub grid: Vec<usize>,
    pub seeds: Vec<u64>,
    pub ablation: AblationKind,
    pub estimator: EstimatorPolicy,
    /// Accept a grid that does not straddle D.
    pub allow_one_sided_grid: bool,
}

impl SweepConfig {
    pub fn student_teacher(d: usize, noise_sd: f64, grid: Vec<usize>, seeds: Vec<u64>) -> Self {
        Self {
            source: DatasetSource::StudentTeacher {
                d,
                noise_sd,
                n_test: DEFAULT_SYNTHETIC_TEST_ROWS,
            },
            grid,
            seeds,
            ablation: AblationKind::None,
            estimator: EstimatorPolicy::Pinv,
            allow_one_sided_grid: false,
        }
    }

    pub fn with_ablation(mut self, ablation: AblationKind) -> Self {
        self.ablation = ablation;
        self
    }

    pub fn with_estimator(mut self, estimator: EstimatorPolicy) -> Self {
        self.estimator = estimator;
        self
    }

    /// Checks everything that does not need the data; `d` is the feature
    /// count once known.
    pub fn validate(&self, d: Option<usize>) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::InvalidParameter("n_train grid is empty".into()));
        }
        if self.grid[0] == 0 {
            return Err(Error::InvalidParameter("n_train must be >= 1".into()));
        }
        if self.grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("n_train grid must be strictly increasing".into()));
        }
        self.ablation.validate()?;
        if matches!(self.ablation, AblationKind::SvCutoff(_)) && self.estimator != EstimatorPolicy::Pinv {
            return Err(Error::InvalidParameter(
                "the sv-cutoff ablation requires the pinv estimator".into(),
            ));
        }
        if let DatasetSource::StudentTeacher { d: sd, noise_sd, n_test } = self.source {
            if sd == 0 || n_test == 0 || !(noise_sd >= 0.0) || !noise_sd.is_finite() {
                return Err(Error::InvalidParameter(
                    "student-teacher needs D >= 1, n_test >= 1 and noise_sd >= 0".into(),
                ));
            }
        }
        let d = d.or(match self.source {
            DatasetSource::StudentTeacher { d, .. } => Some(d),
            DatasetSource::Csv { .. } => None,
        });
        if let Some(d) = d {
            let (lo, hi) = (self.grid[0], self.grid[self.grid.len() - 1]);
            if !self.allow_one_sided_grid && !(lo < d && d < hi) {
                return Err(Error::InvalidParameter(format!(
                    "grid [{lo}, {hi}] does not straddle D = {d}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub n_train: usize,
    pub d: usize,
    pub seed: u64,
    pub ablation: AblationKind,
    pub estimator: EstimatorPolicy,
    pub train_mse: f64,
    pub test_mse: f64,
    /// `None` when the (possibly truncated) training spectrum is empty.
    pub smallest_nonzero_sv: Option<f64>,
    pub bias_term_mean: f64,
    pub variance_term_mean: f64,
    pub regime: Regime,
    /// τ actually used by a cutoff ablation.
    pub cutoff: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub n_train: usize,
    pub d: usize,
    pub seed: u64,
    pub error: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepOutcome {
    /// Sorted by (n_train, d, seed).
    pub records: Vec<SweepRecord>,
    pub failures: Vec<CellFailure>,
}

impl SweepOutcome {
    pub fn total_cells(&self) -> usize {
        self.records.len() + self.failures.len()
    }

    /// Fraction of cells that produced a record; 1 for an empty sweep.
    pub fn success_fraction(&self) -> f64 {
        match self.total_cells() {
            0 => 1.0,
            n => self.records.len() as f64 / n as f64,
        }
    }
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

/// Median over seeds of `value`, grouped by `key`. Records for which `value`
/// returns `None` are skipped.
pub fn medians_by<K, V>(records: &[SweepRecord], key: K, value: V) -> BTreeMap<usize, f64>
where
    K: Fn(&SweepRecord) -> usize,
    V: Fn(&SweepRecord) -> Option<f64>,
{
    let mut groups: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for r in records {
        if let Some(v) = value(r) {
            groups.entry(key(r)).or_default().push(v);
        }
    }
    groups
        .into_iter()
        .filter_map(|(k, v)| median(&v).map(|m| (k, m)))
        .collect()
}

/// Median test MSE per n_train.
pub fn median_test_mse(records: &[SweepRecord]) -> BTreeMap<usize, f64> {
    medians_by(records, |r| r.n_train, |r| Some(r.test_mse))
}

/// Median smallest nonzero singular value per n_train.
pub fn median_smallest_sv(records: &[SweepRecord]) -> BTreeMap<usize, f64> {
    medians_by(records, |r| r.n_train, |r| r.smallest_nonzero_sv)
}

/// Median test MSE at n_train = D over the median at n_train = 3D, both
/// floored at [`MEDIAN_FLOOR`].
pub fn peak_ratio(records: &[SweepRecord], d: usize) -> Result<f64> {
    let med = median_test_mse(records);
    let at = |n: usize| {
        med.get(&n)
            .map(|m| m.max(MEDIAN_FLOOR))
            .ok_or_else(|| Error::InvalidParameter(format!("no records at n_train = {n}")))
    };
    Ok(at(d)? / at(3 * d)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ablation_round_trip() {
        for s in [
            "none",
            "sv-cutoff",
            "sv-cutoff:0.5",
            "test-projection",
            "test-projection:2",
            "linearized-targets",
        ] {
            assert_eq!(s.parse::<AblationKind>().unwrap().to_string(), s);
        }
        assert_eq!("sv-cutoff:auto".parse::<AblationKind>().unwrap(), AblationKind::SvCutoff(CutoffPolicy::Auto));
        for bad in ["sv-cutoff:0", "sv-cutoff:-1", "sv-cutoff:x", "nope", "none:1"] {
            assert!(bad.parse::<AblationKind>().is_err(), "{bad}");
        }
    }

    #[test]
    fn estimator_round_trip() {
        for s in ["pinv", "ridge:0.001", "ridge-rel:0.001"] {
            assert_eq!(s.parse::<EstimatorPolicy>().unwrap().to_string(), s);
        }
        for bad in ["ridge", "ridge:0", "ols", "pinv:1"] {
            assert!(bad.parse::<EstimatorPolicy>().is_err(), "{bad}");
        }
    }

    #[test]
    fn config_validation() {
        let ok = SweepConfig::student_teacher(32, 0.25, vec![16, 32, 64], vec![0]);
        assert!(ok.validate(None).is_ok());
        let mut c = ok.clone();
        c.grid = vec![16, 16, 64];
        assert!(c.validate(None).is_err());
        c.grid = vec![40, 64];
        assert!(c.validate(None).is_err());
        c.allow_one_sided_grid = true;
        assert!(c.validate(None).is_ok());
        let c = ok.clone().with_ablation(AblationKind::SvCutoff(CutoffPolicy::Fixed(-1.0)));
        assert!(c.validate(None).is_err());
        let c = ok
            .with_ablation(AblationKind::SvCutoff(CutoffPolicy::Auto))
            .with_estimator(EstimatorPolicy::Ridge(1.0));
        assert!(c.validate(None).is_err());
    }

    #[test]
    fn medians() {
        assert_eq!(median(&[]), None);
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
    }
}
