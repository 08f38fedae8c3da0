//! Valuation-pivot reductions over Q_p with row/column operations restricted
//! to GL_d(Z_p): the KAK (Smith) form, the Iwasawa form, and orthonormal
//! splittings of subspaces.

use num_rational::BigRational;
use num_traits::Zero;

use super::{elim, Kak, Matrix};
use crate::error::{Error, Result};
use crate::field::{Field, PadicField};

type Q = BigRational;

pub(crate) struct SmithForm {
    /// `m = left * diag(diag) * right`, `left`, `right` in GL(Z_p).
    pub left: Matrix<Q>,
    pub diag: Vec<Q>,
    pub right: Matrix<Q>,
}

/// Entry of least valuation in the trailing block `[s.., s..]`.
fn min_valuation_entry(f: &PadicField, a: &Matrix<Q>, s: usize, col_limit: Option<usize>) -> Option<(usize, usize)> {
    let mut best: Option<(i64, usize, usize)> = None;
    let cols = col_limit.map_or(a.cols(), |c| c.min(a.cols()));
    for i in s..a.rows() {
        for j in s..cols {
            if let Some(v) = f.valuation(&a[(i, j)]) {
                if best.is_none_or(|(b, _, _)| v < b) {
                    best = Some((v, i, j));
                }
            }
        }
    }
    best.map(|(_, i, j)| (i, j))
}

pub(crate) fn smith(f: &PadicField, m: &Matrix<Q>) -> SmithForm {
    let (rows, cols) = (m.rows(), m.cols());
    let mut a = m.clone();
    let mut left = Matrix::<Q>::identity(rows);
    let mut right = Matrix::<Q>::identity(cols);
    let mut diag = Vec::new();
    for s in 0..rows.min(cols) {
        let Some((pi, pj)) = min_valuation_entry(f, &a, s, None) else {
            break;
        };
        a.swap_rows(s, pi);
        left.swap_cols(s, pi);
        a.swap_cols(s, pj);
        right.swap_rows(s, pj);
        let pivot = a[(s, s)].clone();
        for i in s + 1..rows {
            let c = a[(i, s)].clone() / pivot.clone();
            if c.is_zero() {
                continue;
            }
            a.row_axpy(i, s, &c);
            left.col_axpy(s, i, &-c);
        }
        for j in s + 1..cols {
            let c = a[(s, j)].clone() / pivot.clone();
            if c.is_zero() {
                continue;
            }
            a.col_axpy(j, s, &c);
            right.row_axpy(s, j, &-c);
        }
        diag.push(pivot);
    }
    SmithForm { left, diag, right }
}

pub fn kak_padic(f: &PadicField, g: &Matrix<Q>) -> Result<Kak<Q>> {
    if !g.is_square() {
        return Err(Error::Dimension { expected: g.rows(), got: g.cols() });
    }
    let sf = smith(f, g);
    if sf.diag.len() < g.rows() {
        return Err(Error::Singular);
    }
    let mut k = sf.left;
    let mut a = Vec::with_capacity(sf.diag.len());
    for (j, d) in sf.diag.iter().enumerate() {
        let v = f.valuation(d).expect("nonzero pivot");
        let pk = f.pow_p(v);
        let unit = d.clone() / pk.clone();
        for i in 0..k.rows() {
            k[(i, j)] = k[(i, j)].clone() * unit.clone();
        }
        a.push(pk);
    }
    Ok(Kak { k_left: k, a, u_right: sf.right })
}

/// `m = k r` with `k` in GL(Z_p), `r` upper triangular (row operations only).
pub fn iwasawa_padic(f: &PadicField, m: &Matrix<Q>) -> (Matrix<Q>, Vec<f64>) {
    let n = m.rows();
    let mut r = m.clone();
    let mut k = Matrix::<Q>::identity(n);
    let mut logs = Vec::with_capacity(n);
    for c in 0..m.cols().min(n) {
        let mut best: Option<(i64, usize)> = None;
        for i in c..n {
            if let Some(v) = f.valuation(&r[(i, c)]) {
                if best.is_none_or(|(b, _)| v < b) {
                    best = Some((v, i));
                }
            }
        }
        let Some((_, pi)) = best else {
            logs.push(f64::NEG_INFINITY);
            continue;
        };
        r.swap_rows(c, pi);
        k.swap_cols(c, pi);
        let pivot = r[(c, c)].clone();
        for i in c + 1..n {
            let coef = r[(i, c)].clone() / pivot.clone();
            if coef.is_zero() {
                continue;
            }
            r.row_axpy(i, c, &coef);
            k.col_axpy(c, i, &-coef);
        }
        logs.push(f.log_abs(&pivot));
    }
    (k, logs)
}

pub fn split_padic(f: &PadicField, vectors: &[Vec<Q>], dim: usize) -> Result<(Vec<Vec<Q>>, Vec<Vec<Q>>)> {
    for v in vectors {
        if v.len() != dim {
            return Err(Error::Dimension { expected: dim, got: v.len() });
        }
    }
    if vectors.is_empty() {
        let id = Matrix::<Q>::identity(dim);
        return Ok((Vec::new(), id.col_vecs()));
    }
    let b = Matrix::from_cols(dim, vectors);
    let sf = smith(f, &b);
    let r = sf.diag.len();
    let cols = sf.left.col_vecs();
    Ok((cols[..r].to_vec(), cols[r..].to_vec()))
}

/// Square matrix with integral entries and unit determinant.
pub fn in_gl_integral(f: &PadicField, m: &Matrix<Q>) -> bool {
    if !m.is_square() || !m.entries().iter().all(|x| f.is_integral(x)) {
        return false;
    }
    let det = elim::determinant(f, m);
    !det.is_zero() && f.valuation(&det) == Some(0)
}
