//! Complex eigenvalues of real matrices.

use nalgebra::{Complex, DMatrix};

use super::Matrix;

/// Eigenvalues sorted by decreasing modulus.
pub fn eigenvalues(m: &Matrix<f64>) -> Vec<Complex<f64>> {
    assert!(m.is_square());
    let n = m.rows();
    if n == 0 {
        return Vec::new();
    }
    let dm = DMatrix::from_row_slice(n, n, m.entries());
    let mut ev: Vec<Complex<f64>> = dm.complex_eigenvalues().iter().cloned().collect();
    ev.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
    ev
}

pub fn moduli(m: &Matrix<f64>) -> Vec<f64> {
    eigenvalues(m).iter().map(|z| z.norm()).collect()
}

pub fn spectral_radius(m: &Matrix<f64>) -> f64 {
    moduli(m).first().copied().unwrap_or(0.0)
}

/// Top two eigenvalue moduli.
pub fn top_two(m: &Matrix<f64>) -> (f64, f64) {
    let mo = moduli(m);
    (mo.first().copied().unwrap_or(0.0), mo.get(1).copied().unwrap_or(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotation_has_unit_radius() {
        let m = Matrix::from_rows(vec![vec![0.0, -2.0], vec![2.0, 0.0]]).unwrap();
        assert!((spectral_radius(&m) - 2.0).abs() < 1e-12);
        let d = Matrix::diag(&[1.0, -3.0, 2.0]);
        let (a, b) = top_two(&d);
        assert!((a - 3.0).abs() < 1e-12 && (b - 2.0).abs() < 1e-12);
    }
}
