//! Real kernels: one-sided Jacobi SVD, Householder QR and Gram-Schmidt.

use super::{Kak, Matrix};
use crate::error::{Error, Result};

/// `a = u * diag(s) * v^T` with `s` sorted in decreasing order.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Matrix<f64>,
    pub s: Vec<f64>,
    pub v: Matrix<f64>,
}

const MAX_SWEEPS: usize = 80;

/// One-sided (Hestenes) Jacobi SVD of a square or tall matrix.
pub fn jacobi_svd(a: &Matrix<f64>) -> Svd {
    let m = a.rows();
    let n = a.cols();
    assert!(m >= n, "jacobi_svd expects rows >= cols");
    let mut u = a.clone();
    let mut v = Matrix::<f64>::identity(n);
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..n {
            for j in i + 1..n {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for k in 0..m {
                    let (x, y) = (u[(k, i)], u[(k, j)]);
                    alpha += x * x;
                    beta += y * y;
                    gamma += x * y;
                }
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for k in 0..m {
                    let (x, y) = (u[(k, i)], u[(k, j)]);
                    u[(k, i)] = c * x - s * y;
                    u[(k, j)] = s * x + c * y;
                }
                for k in 0..n {
                    let (x, y) = (v[(k, i)], v[(k, j)]);
                    v[(k, i)] = c * x - s * y;
                    v[(k, j)] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = (0..n).map(|j| (0..m).map(|k| u[(k, j)] * u[(k, j)]).sum::<f64>().sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]).then(a.cmp(&b)));

    let smax = norms.iter().cloned().fold(0.0, f64::max);
    let mut ucols: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut s = Vec::with_capacity(n);
    let mut vcols = Vec::with_capacity(n);
    let mut deficient = false;
    for &j in &order {
        let sj = norms[j];
        s.push(sj);
        vcols.push(v.col(j));
        if sj > smax * 1e-300 && sj > 0.0 && !deficient {
            ucols.push((0..m).map(|k| u[(k, j)] / sj).collect());
        } else {
            deficient = true;
        }
    }
    // complete U to an orthonormal basis of R^m
    let full = complete_basis(&ucols, m);
    Svd { u: Matrix::from_cols(m, &full[..m.min(full.len())]), s, v: Matrix::from_cols(n, &vcols) }
}

pub fn singular_values(a: &Matrix<f64>) -> Vec<f64> {
    if a.rows() >= a.cols() {
        jacobi_svd(a).s
    } else {
        jacobi_svd(&a.transpose()).s
    }
}

pub fn kak_real(g: &Matrix<f64>) -> Result<Kak<f64>> {
    if !g.is_square() {
        return Err(Error::Dimension { expected: g.rows(), got: g.cols() });
    }
    let svd = jacobi_svd(g);
    let smax = svd.s.first().copied().unwrap_or(0.0);
    let smin = svd.s.last().copied().unwrap_or(0.0);
    if !(smin > 1e-14 * smax) {
        return Err(Error::Singular);
    }
    Ok(Kak { k_left: svd.u, a: svd.s, u_right: svd.v.transpose() })
}

/// `m = q r` with `r_ii >= 0`; returns `q` and `ln r_ii`.
pub fn householder_qr(m: &Matrix<f64>) -> (Matrix<f64>, Vec<f64>) {
    let n = m.rows();
    assert!(m.is_square());
    let mut r = m.clone();
    let mut q = Matrix::<f64>::identity(n);
    for k in 0..n.saturating_sub(1) {
        let norm: f64 = (k..n).map(|i| r[(i, k)] * r[(i, k)]).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if r[(k, k)] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (k..n).map(|i| r[(i, k)]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        // r <- (I - 2 v v^T / v^T v) r
        for j in 0..n {
            let s: f64 = (k..n).map(|i| v[i - k] * r[(i, j)]).sum::<f64>() * 2.0 / vnorm2;
            for i in k..n {
                r[(i, j)] -= s * v[i - k];
            }
        }
        // q <- q (I - 2 v v^T / v^T v)
        for i in 0..n {
            let s: f64 = (k..n).map(|j| q[(i, j)] * v[j - k]).sum::<f64>() * 2.0 / vnorm2;
            for j in k..n {
                q[(i, j)] -= s * v[j - k];
            }
        }
    }
    let mut logs = Vec::with_capacity(n);
    for k in 0..n {
        if r[(k, k)] < 0.0 {
            for i in 0..n {
                q[(i, k)] = -q[(i, k)];
            }
        }
        logs.push(r[(k, k)].abs().ln());
    }
    (q, logs)
}

fn project_out(v: &mut [f64], basis: &[Vec<f64>]) {
    // twice is enough
    for _ in 0..2 {
        for b in basis {
            let c: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            for (x, y) in v.iter_mut().zip(b) {
                *x -= c * y;
            }
        }
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Extends an orthonormal family by canonical vectors, choosing the largest
/// residual each time (lowest index on ties).
pub fn complete_basis(basis: &[Vec<f64>], dim: usize) -> Vec<Vec<f64>> {
    let mut out = basis.to_vec();
    while out.len() < dim {
        let mut best: Option<(f64, Vec<f64>)> = None;
        for i in 0..dim {
            let mut e = vec![0.0; dim];
            e[i] = 1.0;
            project_out(&mut e, &out);
            let r = norm2(&e);
            if best.as_ref().is_none_or(|(b, _)| r > b * (1.0 + 1e-12)) {
                best = Some((r, e));
            }
        }
        let (r, mut e) = best.expect("dim > 0");
        for x in e.iter_mut() {
            *x /= r;
        }
        out.push(e);
    }
    out
}

pub const RANK_TOL: f64 = 1e-9;

pub fn gram_schmidt_split(vectors: &[Vec<f64>], dim: usize) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in vectors {
        if v.len() != dim {
            return Err(Error::Dimension { expected: dim, got: v.len() });
        }
        let n0 = norm2(v);
        if n0 == 0.0 || !n0.is_finite() {
            continue;
        }
        let mut w = v.clone();
        project_out(&mut w, &basis);
        let r = norm2(&w);
        if r > RANK_TOL * n0 {
            basis.push(w.iter().map(|x| x / r).collect());
        }
        if basis.len() == dim {
            break;
        }
    }
    let r = basis.len();
    let full = complete_basis(&basis, dim);
    Ok((full[..r].to_vec(), full[r..].to_vec()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel_err(a: &Matrix<f64>, b: &Matrix<f64>) -> f64 {
        a.sub(b).frobenius() / b.frobenius()
    }

    #[test]
    fn diagonal_is_its_own_kak() {
        let g = Matrix::diag(&[3.0, 1.0]);
        let kak = kak_real(&g).unwrap();
        assert_eq!(kak.a, vec![3.0, 1.0]);
        assert_eq!(kak.k_left, Matrix::identity(2));
        assert_eq!(kak.u_right, Matrix::identity(2));
    }

    #[test]
    fn orthogonal_has_unit_singular_values() {
        let t: f64 = 0.7;
        let q = Matrix::from_rows(vec![vec![t.cos(), -t.sin()], vec![t.sin(), t.cos()]]).unwrap();
        let kak = kak_real(&q).unwrap();
        for a in kak.a {
            assert!((a - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn singular_is_rejected() {
        let g = Matrix::from_rows(vec![vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert_eq!(kak_real(&g).unwrap_err(), Error::Singular);
    }

    #[test]
    fn split_of_first_axis_is_canonical() {
        let (e, c) = gram_schmidt_split(&[vec![2.0, 0.0, 0.0]], 3).unwrap();
        assert_eq!(e, vec![vec![1.0, 0.0, 0.0]]);
        assert_eq!(c, vec![vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]);
    }

    fn mat(n: usize) -> impl Strategy<Value = Matrix<f64>> {
        proptest::collection::vec(-3.0f64..3.0, n * n).prop_map(move |v| Matrix::from_vec(n, n, v).unwrap())
    }

    proptest! {
        #[test]
        fn kak_reconstructs(g in (2usize..6).prop_flat_map(mat)) {
            if let Ok(kak) = kak_real(&g) {
                let rec = kak.k_left.matmul(&Matrix::diag(&kak.a)).matmul(&kak.u_right);
                prop_assert!(rel_err(&rec, &g) <= 1e-10);
                for w in kak.a.windows(2) {
                    prop_assert!(w[0] >= w[1]);
                }
                let f = crate::field::RealField::default();
                use crate::field::Field;
                prop_assert!(f.is_isometry(&kak.k_left));
                prop_assert!(f.is_isometry(&kak.u_right));
                prop_assert!((f.op_norm(&g) - kak.a[0]).abs() <= 1e-12 * kak.a[0]);
            }
        }

        #[test]
        fn qr_reconstructs(g in (2usize..6).prop_flat_map(mat)) {
            let (q, logs) = householder_qr(&g);
            let r = q.transpose().matmul(&g);
            let n = g.rows();
            for i in 0..n {
                for j in 0..i {
                    prop_assert!(r[(i, j)].abs() <= 1e-10 * g.frobenius().max(1.0));
                }
                if r[(i, i)].abs() > 1e-12 {
                    prop_assert!((r[(i, i)].ln() - logs[i]).abs() < 1e-9);
                }
            }
        }
    }
}
