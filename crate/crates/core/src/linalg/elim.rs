//! Gaussian elimination generic over the field. Pivots are chosen by largest
//! absolute value, which over Q_p means least valuation.

use num_traits::{One, Zero};

use super::svd::RANK_TOL;
use super::Matrix;
use crate::error::{Error, Result};
use crate::field::Field;

fn scale_of<F: Field>(f: &F, m: &Matrix<F::Elem>) -> f64 {
    m.entries().iter().fold(0.0f64, |a, x| a.max(f.abs(x)))
}

/// Reduced row echelon form and pivot columns.
pub fn rref<F: Field>(f: &F, m: &Matrix<F::Elem>, tol: f64) -> (Matrix<F::Elem>, Vec<usize>) {
    let mut a = m.clone();
    let scale = scale_of(f, m);
    let (rows, cols) = (a.rows(), a.cols());
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let mut best: Option<(f64, usize)> = None;
        for i in r..rows {
            let x = &a[(i, c)];
            if f.negligible(x, scale, tol) {
                continue;
            }
            let ax = f.abs(x);
            if best.is_none_or(|(b, _)| ax > b) {
                best = Some((ax, i));
            }
        }
        let Some((_, pi)) = best else {
            if !f.is_exact() {
                for i in r..rows {
                    a[(i, c)] = F::Elem::zero();
                }
            }
            continue;
        };
        a.swap_rows(r, pi);
        let p = a[(r, c)].clone();
        for j in 0..cols {
            a[(r, j)] = a[(r, j)].clone() / p.clone();
        }
        for i in 0..rows {
            if i == r {
                continue;
            }
            let coef = a[(i, c)].clone();
            if coef.is_zero() {
                continue;
            }
            a.row_axpy(i, r, &coef);
        }
        pivots.push(c);
        r += 1;
    }
    (a, pivots)
}

pub fn rank<F: Field>(f: &F, m: &Matrix<F::Elem>) -> usize {
    rref(f, m, RANK_TOL).1.len()
}

pub fn rank_of_vectors<F: Field>(f: &F, vectors: &[Vec<F::Elem>]) -> usize {
    if vectors.is_empty() {
        return 0;
    }
    // rows scaled to unit size so that the tolerance is relative per vector
    let rows: Vec<Vec<F::Elem>> = vectors
        .iter()
        .filter_map(|v| f.polar(v).ok().map(|(_, xi)| xi))
        .collect();
    if rows.is_empty() {
        return 0;
    }
    rank(f, &Matrix::from_rows(rows).expect("equal lengths"))
}

/// Basis of the right nullspace `{x : m x = 0}`.
pub fn nullspace<F: Field>(f: &F, m: &Matrix<F::Elem>, tol: f64) -> Vec<Vec<F::Elem>> {
    let (a, pivots) = rref(f, m, tol);
    let cols = m.cols();
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&fc| {
            let mut v = vec![F::Elem::zero(); cols];
            v[fc] = F::Elem::one();
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = -a[(r, fc)].clone();
            }
            v
        })
        .collect()
}

pub fn inverse<F: Field>(f: &F, m: &Matrix<F::Elem>) -> Result<Matrix<F::Elem>> {
    let n = m.rows();
    if !m.is_square() {
        return Err(Error::Dimension { expected: n, got: m.cols() });
    }
    let mut aug = Matrix::zeros(n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            aug[(i, j)] = m[(i, j)].clone();
        }
        aug[(i, n + i)] = F::Elem::one();
    }
    // tolerance measured against the left block only
    let scale = scale_of(f, m);
    let mut a = aug;
    for c in 0..n {
        let mut best: Option<(f64, usize)> = None;
        for i in c..n {
            let x = &a[(i, c)];
            if f.negligible(x, scale, 1e-14) {
                continue;
            }
            let ax = f.abs(x);
            if best.is_none_or(|(b, _)| ax > b) {
                best = Some((ax, i));
            }
        }
        let (_, pi) = best.ok_or(Error::Singular)?;
        a.swap_rows(c, pi);
        let p = a[(c, c)].clone();
        for j in 0..2 * n {
            a[(c, j)] = a[(c, j)].clone() / p.clone();
        }
        for i in 0..n {
            if i != c {
                let coef = a[(i, c)].clone();
                if !coef.is_zero() {
                    a.row_axpy(i, c, &coef);
                }
            }
        }
    }
    Ok(a.block(0, n, n, 2 * n))
}

pub fn solve<F: Field>(f: &F, m: &Matrix<F::Elem>, b: &[F::Elem]) -> Result<Vec<F::Elem>> {
    Ok(inverse(f, m)?.mul_vec(b))
}

pub fn determinant<F: Field>(f: &F, m: &Matrix<F::Elem>) -> F::Elem {
    assert!(m.is_square());
    let n = m.rows();
    let mut a = m.clone();
    let mut det = F::Elem::one();
    for c in 0..n {
        let mut best: Option<(f64, usize)> = None;
        for i in c..n {
            let x = &a[(i, c)];
            if x.is_zero() {
                continue;
            }
            let ax = f.abs(x);
            if best.is_none_or(|(b, _)| ax > b) {
                best = Some((ax, i));
            }
        }
        let Some((_, pi)) = best else {
            return F::Elem::zero();
        };
        if pi != c {
            a.swap_rows(c, pi);
            det = -det;
        }
        let p = a[(c, c)].clone();
        det = det * p.clone();
        for i in c + 1..n {
            let coef = a[(i, c)].clone() / p.clone();
            if !coef.is_zero() {
                a.row_axpy(i, c, &coef);
            }
        }
    }
    det
}

/// Invertibility with the rank tolerance (exact over Q_p).
pub fn is_invertible<F: Field>(f: &F, m: &Matrix<F::Elem>) -> bool {
    m.is_square() && rank(f, m) == m.rows()
}

/// Growing linearly independent family with membership tests.
#[derive(Debug, Clone)]
pub struct IncrementalBasis<F: Field> {
    field: F,
    len: usize,
    rows: Vec<(usize, Vec<F::Elem>)>,
    originals: Vec<Vec<F::Elem>>,
    tol: f64,
}

impl<F: Field> IncrementalBasis<F> {
    pub fn new(field: F, len: usize) -> Self {
        IncrementalBasis { field, len, rows: Vec::new(), originals: Vec::new(), tol: RANK_TOL }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn vectors(&self) -> &[Vec<F::Elem>] {
        &self.originals
    }

    fn reduce(&self, v: &[F::Elem]) -> Vec<F::Elem> {
        let mut w = v.to_vec();
        for (pc, row) in &self.rows {
            let c = w[*pc].clone();
            if c.is_zero() {
                continue;
            }
            for (x, y) in w.iter_mut().zip(row) {
                *x = x.clone() - c.clone() * y.clone();
            }
        }
        w
    }

    pub fn contains(&self, v: &[F::Elem]) -> bool {
        let f = &self.field;
        let scale = v.iter().fold(0.0f64, |a, x| a.max(f.abs(x)));
        if scale == 0.0 {
            return true;
        }
        self.reduce(v).iter().all(|x| f.negligible(x, scale, self.tol))
    }

    /// Adds `v` if independent; returns whether it was added.
    pub fn insert(&mut self, v: &[F::Elem]) -> bool {
        assert_eq!(v.len(), self.len);
        let f = &self.field;
        let scale = v.iter().fold(0.0f64, |a, x| a.max(f.abs(x)));
        if scale == 0.0 {
            return false;
        }
        let w = self.reduce(v);
        let mut best: Option<(f64, usize)> = None;
        for (j, x) in w.iter().enumerate() {
            if f.negligible(x, scale, self.tol) {
                continue;
            }
            let ax = f.abs(x);
            if best.is_none_or(|(b, _)| ax > b) {
                best = Some((ax, j));
            }
        }
        let Some((_, pc)) = best else {
            return false;
        };
        let p = w[pc].clone();
        let row: Vec<F::Elem> = w.iter().map(|x| x.clone() / p.clone()).collect();
        self.rows.push((pc, row));
        self.originals.push(v.to_vec());
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{q, PadicField, RealField};

    #[test]
    fn inverse_and_determinant() {
        let f = RealField::default();
        let m = Matrix::from_rows(vec![vec![2.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let inv = inverse(&f, &m).unwrap();
        let id = m.matmul(&inv);
        assert!(id.sub(&Matrix::identity(2)).max_abs() < 1e-15);
        assert!((determinant(&f, &m) - 1.0).abs() < 1e-15);
        let s = Matrix::from_rows(vec![vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert_eq!(inverse(&f, &s).unwrap_err(), Error::Singular);
    }

    #[test]
    fn exact_nullspace() {
        let f = PadicField::new(2).unwrap();
        let m = Matrix::from_rows(vec![vec![q(1, 1), q(2, 1), q(3, 1)], vec![q(2, 1), q(4, 1), q(6, 1)]]).unwrap();
        let ns = nullspace(&f, &m, 0.0);
        assert_eq!(ns.len(), 2);
        for v in ns {
            assert!(m.mul_vec(&v).iter().all(|x| x.is_zero()));
        }
    }

    #[test]
    fn incremental_basis() {
        let f = RealField::default();
        let mut b = IncrementalBasis::new(f, 3);
        assert!(b.insert(&[1.0, 0.0, 0.0]));
        assert!(b.insert(&[1.0, 1.0, 0.0]));
        assert!(!b.insert(&[3.0, -2.0, 0.0]));
        assert!(b.contains(&[0.0, 5.0, 0.0]));
        assert!(!b.contains(&[0.0, 0.0, 1.0]));
        assert_eq!(b.dim(), 2);
    }
}
