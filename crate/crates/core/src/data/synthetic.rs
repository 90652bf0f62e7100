use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{legendre_design, polynomial_target, DataSource, Dataset, Preprocessing};
use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};

/// ChaCha8 stream for `seed`; the sequence is fixed across platforms.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn check_noise(noise_sd: f64) -> Result<()> {
    if !(noise_sd >= 0.0) || !noise_sd.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "noise_sd must be finite and >= 0, got {noise_sd}"
        )));
    }
    Ok(())
}

/// Draws `n` inputs uniformly from [−1, 1] and their noisy targets
/// `2x + cos(25x) + N(0, noise_sd²)`. All x values are drawn before any noise,
/// so the inputs do not depend on `noise_sd`.
pub fn sample_polynomial_points(n: usize, noise_sd: f64, seed: u64) -> Result<(Vec<f64>, Vec<f64>)> {
    check_noise(noise_sd)?;
    let mut rng = seeded_rng(seed);
    let xs: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
    let ys = xs
        .iter()
        .map(|&x| {
            let z: f64 = rng.sample(StandardNormal);
            polynomial_target(x) + noise_sd * z
        })
        .collect();
    Ok((xs, ys))
}

pub fn make_polynomial_dataset(n: usize, p: usize, noise_sd: f64, seed: u64) -> Result<Dataset> {
    if n == 0 || p == 0 {
        return Err(Error::InvalidParameter(format!(
            "polynomial dataset needs n >= 1 and P >= 1, got n = {n}, P = {p}"
        )));
    }
    let (xs, ys) = sample_polynomial_points(n, noise_sd, seed)?;
    Ok(Dataset {
        x: legendre_design(&xs, p)?,
        y: Vector::new(ys)?,
        feature_names: (1..=p).map(|i| format!("legendre_{i}")).collect(),
        target_name: "y".into(),
        source: DataSource::Polynomial { noise_sd, seed },
        preprocessing: Preprocessing::default(),
    })
}

/// Student-teacher regression data: a unit-norm Gaussian teacher β, standard
/// Gaussian rows and `Y = Xβ + N(0, noise_sd²)`. Returns the dataset and the
/// teacher.
pub fn make_student_teacher(
    n_total: usize,
    d: usize,
    noise_sd: f64,
    seed: u64,
) -> Result<(Dataset, Vector)> {
    if n_total < 2 || d == 0 {
        return Err(Error::InvalidParameter(format!(
            "student-teacher needs n_total >= 2 and D >= 1, got n_total = {n_total}, D = {d}"
        )));
    }
    check_noise(noise_sd)?;
    let mut rng = seeded_rng(seed);
    let mut teacher: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    let scale = crate::linalg::norm(&teacher);
    teacher.iter_mut().for_each(|b| *b /= scale);

    let data: Vec<f64> = (0..n_total * d).map(|_| rng.sample(StandardNormal)).collect();
    let x = Matrix::new(n_total, d, data)?;
    let clean = x.matvec(&teacher)?;
    let y: Vec<f64> = clean
        .iter()
        .map(|c| {
            let z: f64 = rng.sample(StandardNormal);
            c + noise_sd * z
        })
        .collect();

    let ds = Dataset {
        x,
        y: Vector::new(y)?,
        feature_names: (1..=d).map(|i| format!("x{i}")).collect(),
        target_name: "y".into(),
        source: DataSource::SyntheticStudentTeacher { noise_sd, seed },
        preprocessing: Preprocessing::default(),
    };
    Ok((ds, Vector::new(teacher)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::fit_pinv;
    use crate::linalg::distance;

    #[test]
    fn noiseless_polynomial_point_is_exact() {
        let ds = make_polynomial_dataset(1, 1, 0.0, 7).unwrap();
        let (xs, _) = sample_polynomial_points(1, 0.0, 7).unwrap();
        assert_eq!(ds.y[0], polynomial_target(xs[0]));
        assert_eq!(ds.x.get(0, 0), xs[0]);
    }

    #[test]
    fn polynomial_dataset_is_deterministic() {
        let a = make_polynomial_dataset(10, 6, 0.5, 3).unwrap();
        let b = make_polynomial_dataset(10, 6, 0.5, 3).unwrap();
        assert_eq!(a, b);
        let c = make_polynomial_dataset(10, 6, 0.5, 4).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn polynomial_overparameterized_shape() {
        let ds = make_polynomial_dataset(10, 200, 0.1, 0).unwrap();
        assert_eq!(ds.x.shape(), (10, 200));
        assert!(ds.x.as_slice().iter().all(|v| v.abs() <= 1.0 + 1e-12));
    }

    #[test]
    fn inputs_do_not_depend_on_noise_or_feature_count() {
        let (a, _) = sample_polynomial_points(8, 0.0, 11).unwrap();
        let (b, _) = sample_polynomial_points(8, 2.0, 11).unwrap();
        assert_eq!(a, b);
        let narrow = make_polynomial_dataset(8, 3, 0.5, 11).unwrap();
        let wide = make_polynomial_dataset(8, 9, 0.5, 11).unwrap();
        assert_eq!(narrow.y, wide.y);
        assert_eq!(narrow.x, wide.x.head_cols(3));
    }

    #[test]
    fn noiseless_student_teacher_is_recovered() {
        let (ds, teacher) = make_student_teacher(40, 12, 0.0, 5).unwrap();
        assert!((teacher.norm() - 1.0).abs() < 1e-14);
        let fit = fit_pinv(&ds.x, &ds.y).unwrap();
        assert!(distance(&fit.beta, &teacher) < 1e-8);
    }

    #[test]
    fn student_teacher_is_deterministic() {
        let a = make_student_teacher(96, 32, 0.25, 1).unwrap();
        let b = make_student_teacher(96, 32, 0.25, 1).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.0.x.shape(), (96, 32));
    }

    #[test]
    fn invalid_parameters() {
        assert!(make_student_teacher(1, 3, 0.1, 0).is_err());
        assert!(make_student_teacher(5, 0, 0.1, 0).is_err());
        assert!(make_student_teacher(5, 2, -0.1, 0).is_err());
        assert!(make_polynomial_dataset(0, 2, 0.1, 0).is_err());
    }
}
