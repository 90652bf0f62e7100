use super::{AblationKind, CutoffPolicy};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{self, project_onto_rowspace, truncate_svd, Matrix, SvdResult, Vector};

/// Training and test data after an ablation, plus the training SVD the fit
/// should use.
#[derive(Clone, Debug)]
pub struct AblatedCell {
    pub x_train: Matrix,
    pub y_train: Vector,
    pub x_test: Matrix,
    pub y_test: Vector,
    /// Training SVD, truncated at τ for `sv-cutoff`.
    pub svd: SvdResult,
    pub cutoff: Option<f64>,
    pub note: String,
}

fn resolve(policy: CutoffPolicy, auto_cutoff: Option<f64>) -> Result<f64> {
    let tau = match policy {
        CutoffPolicy::Fixed(tau) => tau,
        CutoffPolicy::Auto => auto_cutoff.ok_or_else(|| {
            Error::InvalidParameter("automatic cutoff requested but not resolved".into())
        })?,
    };
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::InvalidParameter(format!("cutoff τ must be > 0, got {tau}")));
    }
    Ok(tau)
}

/// Applies `kind` to a train/test pair. `beta_star` is the full-data fit used
/// by `linearized-targets`; `auto_cutoff` resolves [`CutoffPolicy::Auto`].
pub fn apply_ablation(
    kind: AblationKind,
    train: &Dataset,
    test: &Dataset,
    beta_star: &[f64],
    auto_cutoff: Option<f64>,
) -> Result<AblatedCell> {
    let d = train.n_features();
    if test.n_features() != d {
        return Err(Error::dims("apply_ablation (test features)", d, test.n_features()));
    }
    if beta_star.len() != d {
        return Err(Error::dims("apply_ablation (beta_star)", d, beta_star.len()));
    }
    let full = linalg::svd(&train.x)?;
    let mut cell = AblatedCell {
        x_train: train.x.clone(),
        y_train: train.y.clone(),
        x_test: test.x.clone(),
        y_test: test.y.clone(),
        svd: full,
        cutoff: None,
        note: kind.to_string(),
    };
    match kind {
        AblationKind::None => {}
        AblationKind::SvCutoff(policy) => {
            let tau = resolve(policy, auto_cutoff)?;
            let kept = truncate_svd(&cell.svd, tau)?;
            cell.note = format!("sv-cutoff τ = {tau}: kept {} of {} modes", kept.rank(), cell.svd.rank());
            cell.svd = kept;
            cell.cutoff = Some(tau);
        }
        AblationKind::TestProjection(policy) => {
            let tau = resolve(policy, auto_cutoff)?;
            let leading = truncate_svd(&cell.svd, tau)?;
            cell.x_test = test.x.map_rows(|row| project_onto_rowspace(row, &leading))?;
            cell.note = format!("test rows projected onto {} leading modes (τ = {tau})", leading.rank());
            cell.cutoff = Some(tau);
        }
        AblationKind::LinearizedTargets => {
            cell.y_train = train.x.matvec(beta_star)?;
            cell.y_test = test.x.matvec(beta_star)?;
        }
    }
    Ok(cell)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{DataSource, Preprocessing};
    use crate::decomposition::{ErrorDecomposer, GroundTruth};
    use crate::estimators::Regime;

    fn ds(rows: &[[f64; 3]], y: &[f64]) -> Dataset {
        Dataset {
            x: Matrix::from_rows(rows).unwrap(),
            y: Vector::new(y.to_vec()).unwrap(),
            feature_names: vec!["a".into(), "b".into(), "c".into()],
            target_name: "y".into(),
            source: DataSource::Csv { path: "t.csv".into() },
            preprocessing: Preprocessing::default(),
        }
    }

    fn five_by_three() -> (Dataset, Dataset) {
        let train = ds(
            &[
                [1.0, 0.5, -0.2],
                [0.3, -1.0, 0.8],
                [-0.7, 0.2, 1.1],
                [0.9, 1.3, -0.4],
                [-0.1, -0.6, 0.5],
            ],
            &[1.0, -0.5, 0.7, 2.2, -0.3],
        );
        let test = ds(&[[0.4, 0.4, 0.4], [1.0, -2.0, 0.5]], &[0.9, -1.1]);
        (train, test)
    }

    #[test]
    fn none_is_identity() {
        let (train, test) = five_by_three();
        let cell = apply_ablation(AblationKind::None, &train, &test, &[0.0; 3], None).unwrap();
        assert_eq!(cell.x_train, train.x);
        assert_eq!(cell.y_train, train.y);
        assert_eq!(cell.x_test, test.x);
        assert_eq!(cell.y_test, test.y);
        assert_eq!(cell.svd.rank(), 3);
    }

    #[test]
    fn projection_fixes_rows_in_the_training_row_space() {
        let train = ds(&[[1.0, 0.0, 0.0], [0.0, 2.0, 0.0]], &[1.0, 2.0]);
        let test = ds(&[[0.3, -0.7, 0.0], [2.0, 5.0, 0.0]], &[0.0, 0.0]);
        let kind = AblationKind::TestProjection(CutoffPolicy::Fixed(0.5));
        let cell = apply_ablation(kind, &train, &test, &[0.0; 3], None).unwrap();
        for (a, b) in cell.x_test.as_slice().iter().zip(test.x.as_slice()) {
            assert!((a - b).abs() <= 1e-10);
        }
        // off-span component removed
        let test = ds(&[[0.3, -0.7, 4.0]], &[0.0]);
        let cell = apply_ablation(kind, &train, &test, &[0.0; 3], None).unwrap();
        assert!(cell.x_test.get(0, 2).abs() < 1e-12);
    }

    #[test]
    fn linearized_targets_zero_the_variance() {
        let (train, test) = five_by_three();
        let beta_star = [0.6, -1.2, 0.3];
        let cell = apply_ablation(AblationKind::LinearizedTargets, &train, &test, &beta_star, None).unwrap();
        let gt = GroundTruth::from_beta(Vector::new(beta_star.to_vec()).unwrap(), &cell.x_train, &cell.y_train).unwrap();
        assert!(gt.residuals.iter().all(|&e| e == 0.0));
        let dec = ErrorDecomposer::new(&cell.svd, &gt, Regime::Underparameterized).unwrap();
        for row in cell.x_test.row_iter() {
            let (_, variance) = dec.terms(row).unwrap();
            assert_eq!(variance, 0.0);
        }
    }

    #[test]
    fn cutoff_truncates_and_requires_resolution() {
        let train = ds(&[[3.0, 0.0, 0.0], [0.0, 0.1, 0.0]], &[1.0, 2.0]);
        let (_, test) = five_by_three();
        let kind = AblationKind::SvCutoff(CutoffPolicy::Fixed(0.5));
        let cell = apply_ablation(kind, &train, &test, &[0.0; 3], None).unwrap();
        assert_eq!(cell.svd.singular_values(), &[3.0]);
        assert_eq!(cell.cutoff, Some(0.5));
        let auto = AblationKind::SvCutoff(CutoffPolicy::Auto);
        assert!(apply_ablation(auto, &train, &test, &[0.0; 3], None).is_err());
        let cell = apply_ablation(auto, &train, &test, &[0.0; 3], Some(0.05)).unwrap();
        assert_eq!(cell.svd.rank(), 2);
    }
}
