//! Legendre polynomial feature map for the polynomial regression demo.

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};

/// `(P_1(x), …, P_p(x))` via Bonnet's recurrence
/// `(k+1) P_{k+1}(x) = (2k+1) x P_k(x) − k P_{k−1}(x)`.
///
/// The constant `P_0` is not included.
pub fn legendre_features(x: f64, p: usize) -> Result<Vector> {
    if !(x.abs() <= 1.0) {
        return Err(Error::Domain(x));
    }
    if p == 0 {
        return Err(Error::InvalidParameter("feature count P must be >= 1".into()));
    }
    let mut out = Vec::with_capacity(p);
    fill_features(x, &mut out, p);
    Ok(Vector::from_raw(out))
}

fn fill_features(x: f64, out: &mut Vec<f64>, p: usize) {
    let (mut prev, mut cur) = (1.0, x);
    out.push(cur);
    for k in 1..p {
        let k = k as f64;
        let next = ((2.0 * k + 1.0) * x * cur - k * prev) / (k + 1.0);
        prev = cur;
        cur = next;
        out.push(cur);
    }
}

/// Design matrix with row `i` equal to `legendre_features(xs[i], p)`.
pub fn legendre_design(xs: &[f64], p: usize) -> Result<Matrix> {
    if p == 0 {
        return Err(Error::InvalidParameter("feature count P must be >= 1".into()));
    }
    let mut data = Vec::with_capacity(xs.len() * p);
    for &x in xs {
        if !(x.abs() <= 1.0) {
            return Err(Error::Domain(x));
        }
        fill_features(x, &mut data, p);
    }
    Matrix::new(xs.len(), p, data)
}

/// `y(x) = 2x + cos(25x)`
pub fn polynomial_target(x: f64) -> f64 {
    2.0 * x + (25.0 * x).cos()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_ones_at_one() {
        for p in [1, 5, 50, 200] {
            let f = legendre_features(1.0, p).unwrap();
            assert!(f.iter().all(|&v| (v - 1.0).abs() < 1e-12));
        }
    }

    #[test]
    fn closed_forms_at_small_points() {
        assert_eq!(&*legendre_features(0.0, 3).unwrap(), &[0.0, -0.5, 0.0]);
        assert_eq!(&*legendre_features(0.5, 2).unwrap(), &[0.5, -0.125]);
    }

    #[test]
    fn matches_textbook_polynomials() {
        let closed: [fn(f64) -> f64; 5] = [
            |x| x,
            |x| (3.0 * x * x - 1.0) / 2.0,
            |x| (5.0 * x.powi(3) - 3.0 * x) / 2.0,
            |x| (35.0 * x.powi(4) - 30.0 * x * x + 3.0) / 8.0,
            |x| (63.0 * x.powi(5) - 70.0 * x.powi(3) + 15.0 * x) / 8.0,
        ];
        for i in 0..100 {
            let x = -1.0 + 2.0 * i as f64 / 99.0;
            let f = legendre_features(x, 5).unwrap();
            for (deg, p) in closed.iter().enumerate() {
                assert!((f[deg] - p(x)).abs() < 1e-12, "degree {} at {x}", deg + 1);
            }
        }
    }

    #[test]
    fn rejects_outside_domain() {
        assert!(matches!(legendre_features(1.5, 3), Err(Error::Domain(_))));
        assert!(legendre_features(f64::NAN, 3).is_err());
        assert!(legendre_features(0.5, 0).is_err());
        assert!(legendre_design(&[0.0, -1.01], 2).is_err());
    }

    #[test]
    fn design_rows_match_features() {
        let xs = [-0.3, 0.0, 0.9];
        let m = legendre_design(&xs, 4).unwrap();
        for (i, &x) in xs.iter().enumerate() {
            assert_eq!(m.row(i), &*legendre_features(x, 4).unwrap());
        }
    }

    #[test]
    fn target_values() {
        assert_eq!(polynomial_target(0.0), 1.0);
        let x = std::f64::consts::PI / 25.0;
        assert!((polynomial_target(x) - (2.0 * x - 1.0)).abs() < 1e-15);
        assert!((polynomial_target(x) + 0.748_672_6).abs() < 1e-6);
        let x0 = 0.37;
        assert!((polynomial_target(x0) - polynomial_target(-x0) - 4.0 * x0).abs() < 1e-15);
    }
}
