//! Datasets: Legendre polynomial features, student-teacher synthetic data and
//! real tabular data read from CSV.

mod legendre;
mod synthetic;
mod tabular;

pub use legendre::{legendre_design, legendre_features, polynomial_target};
pub use synthetic::{
    make_polynomial_dataset, make_student_teacher, sample_polynomial_points, seeded_rng,
};
pub use tabular::{load_csv, write_dataset_cache};

use std::fmt;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DataSource {
    SyntheticStudentTeacher { noise_sd: f64, seed: u64 },
    Polynomial { noise_sd: f64, seed: u64 },
    Csv { path: PathBuf },
}

impl fmt::Display for DataSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DataSource::SyntheticStudentTeacher { .. } => f.write_str("synthetic-student-teacher"),
            DataSource::Polynomial { .. } => f.write_str("polynomial"),
            DataSource::Csv { path } => write!(f, "csv({})", path.display()),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Preprocessing {
    pub standardized: bool,
    /// Per-column mean and (population) standard deviation used for
    /// standardization; empty when not standardized.
    pub column_means: Vec<f64>,
    pub column_scales: Vec<f64>,
    pub rows_dropped_for_missing: usize,
    pub non_numeric_columns: Vec<String>,
    pub constant_columns: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub x: Matrix,
    pub y: Vector,
    pub feature_names: Vec<String>,
    pub target_name: String,
    pub source: DataSource,
    pub preprocessing: Preprocessing,
}

impl Dataset {
    pub fn n_rows(&self) -> usize {
        self.x.rows()
    }

    pub fn n_features(&self) -> usize {
        self.x.cols()
    }

    /// Rows at `indices`, in that order. Metadata is carried over.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select_rows(indices),
            y: self.y.select(indices),
            ..self.clone_meta()
        }
    }

    pub fn head(&self, n: usize) -> Dataset {
        Dataset {
            x: self.x.head_rows(n),
            y: self.y.head(n),
            ..self.clone_meta()
        }
    }

    fn clone_meta(&self) -> Dataset {
        Dataset {
            x: Matrix::zeros(0, 0),
            y: Vector::zeros(0),
            feature_names: self.feature_names.clone(),
            target_name: self.target_name.clone(),
            source: self.source.clone(),
            preprocessing: self.preprocessing.clone(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub n_train: usize,
    pub seed: u64,
    pub shuffle: bool,
}

/// Splits into `(train, test)`: train gets `n_train` rows, test the rest.
/// With `shuffle`, rows are permuted by a generator seeded from `spec.seed`.
pub fn split(ds: &Dataset, spec: SplitSpec) -> Result<(Dataset, Dataset)> {
    let total = ds.n_rows();
    if spec.n_train < 1 || spec.n_train >= total {
        return Err(Error::SplitOutOfRange {
            n_train: spec.n_train,
            total,
        });
    }
    let mut order: Vec<usize> = (0..total).collect();
    if spec.shuffle {
        order.shuffle(&mut seeded_rng(spec.seed));
    }
    let (train, test) = order.split_at(spec.n_train);
    Ok((ds.subset(train), ds.subset(test)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(n: usize) -> Dataset {
        let x = Matrix::new(n, 1, (0..n).map(|i| i as f64).collect()).unwrap();
        let y = Vector::new((0..n).map(|i| 10.0 * i as f64).collect()).unwrap();
        Dataset {
            x,
            y,
            feature_names: vec!["a".into()],
            target_name: "y".into(),
            source: DataSource::Csv { path: "toy.csv".into() },
            preprocessing: Preprocessing::default(),
        }
    }

    #[test]
    fn split_without_shuffle_takes_leading_rows() {
        let ds = toy(5);
        let (train, test) = split(&ds, SplitSpec { n_train: 3, seed: 0, shuffle: false }).unwrap();
        assert_eq!(&*train.y, &[0.0, 10.0, 20.0]);
        assert_eq!(&*test.y, &[30.0, 40.0]);
    }

    #[test]
    fn split_leaves_one_test_row() {
        let ds = toy(6);
        let (train, test) = split(&ds, SplitSpec { n_train: 5, seed: 3, shuffle: true }).unwrap();
        assert_eq!(train.n_rows(), 5);
        assert_eq!(test.n_rows(), 1);
    }

    #[test]
    fn shuffled_split_is_deterministic_disjoint_and_exhaustive() {
        let ds = toy(20);
        let spec = SplitSpec { n_train: 12, seed: 42, shuffle: true };
        let (a_train, a_test) = split(&ds, spec).unwrap();
        let (b_train, b_test) = split(&ds, spec).unwrap();
        assert_eq!(a_train, b_train);
        assert_eq!(a_test, b_test);
        let mut all: Vec<f64> = a_train.x.as_slice().iter().chain(a_test.x.as_slice()).copied().collect();
        all.sort_by(f64::total_cmp);
        assert_eq!(all, (0..20).map(|i| i as f64).collect::<Vec<_>>());
        // row alignment between X and Y survives the shuffle
        for (x, y) in a_train.x.as_slice().iter().zip(a_train.y.iter()) {
            assert_eq!(10.0 * x, *y);
        }
    }

    #[test]
    fn split_out_of_range() {
        let ds = toy(4);
        for n_train in [0, 4, 9] {
            assert!(matches!(
                split(&ds, SplitSpec { n_train, seed: 0, shuffle: false }),
                Err(Error::SplitOutOfRange { .. })
            ));
        }
    }
}
