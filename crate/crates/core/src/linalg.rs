//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, SymmetricEigen};

pub fn symmetric_part(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub fn is_symmetric(m: &DMatrix<f64>, tol: f64) -> bool {
    m.is_square() && (m - m.transpose()).amax() <= tol * (1.0 + m.amax())
}

/// Smallest and largest eigenvalue of the symmetric part of `m`.
pub fn symmetric_eigen_range(m: &DMatrix<f64>) -> (f64, f64) {
    let eig = SymmetricEigen::new(symmetric_part(m));
    let lo = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .singular_values()
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

pub fn is_diagonal(m: &DMatrix<f64>) -> bool {
    m.is_square()
        && (0..m.nrows()).all(|i| (0..m.ncols()).all(|j| i == j || m[(i, j)] == 0.0))
}

/// True when `m` is a nonnegative multiple of the identity.
pub fn isotropic_scale(m: &DMatrix<f64>) -> Option<f64> {
    if !is_diagonal(m) || m.nrows() == 0 {
        return None;
    }
    let s = m[(0, 0)];
    (0..m.nrows()).all(|i| m[(i, i)] == s).then_some(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_range_of_nonsymmetric_uses_symmetric_part() {
        // rotation generator has zero symmetric part
        let m = DMatrix::from_row_slice(2, 2, &[1.0, -3.0, 3.0, 1.0]);
        let (lo, hi) = symmetric_eigen_range(&m);
        assert!((lo - 1.0).abs() < 1e-12 && (hi - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spectral_norm_of_diagonal() {
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.5, -2.0]));
        assert!((spectral_norm(&m) - 2.0).abs() < 1e-12);
        assert_eq!(isotropic_scale(&m), None);
        assert_eq!(isotropic_scale(&DMatrix::identity(3, 3)), Some(1.0));
    }
}
