//! Dense linear algebra over R and Q_p: matrices, projective points with the
//! Fubini-Study metric, subspaces with orthogonal complements and quotient
//! norms, KAK factors and exterior squares.

pub mod eigen;
pub mod elim;
mod matrix;
pub mod smith;
pub mod svd;

pub use matrix::{axpy, dot, scale_vec, unit_vector, wedge, wedge_square, Matrix};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{Field, Scalar};

/// `g = k_left * diag(a) * u_right`.
#[derive(Debug, Clone, PartialEq)]
pub struct Kak<E> {
    pub k_left: Matrix<E>,
    pub a: Vec<E>,
    pub u_right: Matrix<E>,
}

impl<E: Scalar> Kak<E> {
    pub fn reconstruct(&self) -> Matrix<E> {
        self.k_left.matmul(&Matrix::diag(&self.a)).matmul(&self.u_right)
    }
}

pub fn kak_decompose<F: Field>(f: &F, g: &Matrix<F::Elem>) -> Result<Kak<F::Elem>> {
    f.kak(g)
}

/// A point of projective space, represented by a vector with unit polar part.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjPoint<E> {
    v: Vec<E>,
}

impl<E: Scalar> ProjPoint<E> {
    pub fn new<F: Field<Elem = E>>(f: &F, v: &[E]) -> Result<Self> {
        let (_, xi) = f.polar(v)?;
        Ok(ProjPoint { v: xi })
    }

    pub fn dim(&self) -> usize {
        self.v.len()
    }

    pub fn vector(&self) -> &[E] {
        &self.v
    }

    pub fn into_vector(self) -> Vec<E> {
        self.v
    }

    pub fn act<F: Field<Elem = E>>(&self, f: &F, g: &Matrix<E>) -> Self {
        ProjPoint::new(f, &g.mul_vec(&self.v)).expect("invertible action")
    }
}

impl ProjPoint<f64> {
    /// Sign-normalized copy: the entry of largest modulus is positive.
    pub fn canonical(&self) -> ProjPoint<f64> {
        let mut best = 0;
        for (i, x) in self.v.iter().enumerate() {
            if x.abs() > self.v[best].abs() * (1.0 + 1e-12) {
                best = i;
            }
        }
        let s = if self.v[best] < 0.0 { -1.0 } else { 1.0 };
        ProjPoint { v: self.v.iter().map(|x| x * s).collect() }
    }

    /// Quantized key for deduplication.
    pub fn key(&self, resolution: f64) -> Vec<i64> {
        self.canonical().v.iter().map(|x| (x / resolution).round() as i64).collect()
    }

    pub fn from_unit(v: Vec<f64>) -> Self {
        ProjPoint { v }
    }
}

/// Fubini-Study distance `||x ^ y|| / (||x|| ||y||)`.
pub fn fubini_distance<F: Field>(f: &F, x: &ProjPoint<F::Elem>, y: &ProjPoint<F::Elem>) -> f64 {
    fubini_vec(f, x.vector(), y.vector())
}

pub fn fubini_vec<F: Field>(f: &F, x: &[F::Elem], y: &[F::Elem]) -> f64 {
    let w = wedge(x, y);
    (f.log_norm(&w) - f.log_norm(x) - f.log_norm(y)).exp().min(1.0)
}

/// Fast path for real unit vectors.
#[inline]
pub fn fubini_real(x: &[f64], y: &[f64]) -> f64 {
    if x.len() == 3 {
        let c0 = x[1] * y[2] - x[2] * y[1];
        let c1 = x[2] * y[0] - x[0] * y[2];
        let c2 = x[0] * y[1] - x[1] * y[0];
        return (c0 * c0 + c1 * c1 + c2 * c2).sqrt().min(1.0);
    }
    let mut s = 0.0;
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            let m = x[i] * y[j] - x[j] * y[i];
            s += m * m;
        }
    }
    s.sqrt().min(1.0)
}

/// Linear subspace with an orthonormal basis (a Z_p-lattice basis over Q_p).
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace<E> {
    ambient: usize,
    basis: Vec<Vec<E>>,
}

impl<E: Scalar> Subspace<E> {
    pub fn zero(ambient: usize) -> Self {
        Subspace { ambient, basis: Vec::new() }
    }

    pub fn full<F: Field<Elem = E>>(_f: &F, ambient: usize) -> Self {
        Subspace { ambient, basis: Matrix::<E>::identity(ambient).col_vecs() }
    }

    pub fn span<F: Field<Elem = E>>(f: &F, vectors: &[Vec<E>], ambient: usize) -> Result<Self> {
        let (basis, _) = f.orthonormal_split(vectors, ambient)?;
        Ok(Subspace { ambient, basis })
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec<E>] {
        &self.basis
    }

    pub fn is_zero(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.basis.len() == self.ambient
    }

    pub fn is_proper(&self) -> bool {
        !self.is_zero() && !self.is_full()
    }

    fn membership<F: Field<Elem = E>>(&self, f: &F) -> elim::IncrementalBasis<F> {
        let mut b = elim::IncrementalBasis::new(f.clone(), self.ambient);
        for v in &self.basis {
            b.insert(v);
        }
        b
    }

    pub fn contains<F: Field<Elem = E>>(&self, f: &F, v: &[E]) -> bool {
        self.membership(f).contains(v)
    }

    pub fn is_subspace_of<F: Field<Elem = E>>(&self, f: &F, other: &Self) -> bool {
        let m = other.membership(f);
        self.basis.iter().all(|v| m.contains(v))
    }

    /// Subspace equality by rank tests.
    pub fn equals<F: Field<Elem = E>>(&self, f: &F, other: &Self) -> bool {
        self.dim() == other.dim() && self.is_subspace_of(f, other)
    }

    pub fn sum<F: Field<Elem = E>>(&self, f: &F, other: &Self) -> Result<Self> {
        let mut v = self.basis.clone();
        v.extend(other.basis.iter().cloned());
        Subspace::span(f, &v, self.ambient)
    }

    pub fn intersection<F: Field<Elem = E>>(&self, f: &F, other: &Self) -> Result<Self> {
        if self.is_zero() || other.is_zero() {
            return Ok(Subspace::zero(self.ambient));
        }
        let mut cols = self.basis.clone();
        cols.extend(other.basis.iter().map(|v| v.iter().map(|x| -x.clone()).collect::<Vec<_>>()));
        let m = Matrix::from_cols(self.ambient, &cols);
        let ns = elim::nullspace(f, &m, svd::RANK_TOL);
        let r = self.dim();
        let vecs: Vec<Vec<E>> = ns
            .iter()
            .map(|c| {
                let mut v = vec![E::zero(); self.ambient];
                for (b, a) in self.basis.iter().zip(&c[..r]) {
                    v = axpy(&v, a, b);
                }
                v
            })
            .collect();
        Subspace::span(f, &vecs, self.ambient)
    }

    /// `g W` contained in `W`.
    pub fn is_invariant<F: Field<Elem = E>>(&self, f: &F, g: &Matrix<E>) -> bool {
        let m = self.membership(f);
        self.basis.iter().all(|v| m.contains(&g.mul_vec(v)))
    }

    /// Annihilator in the dual space, in dual coordinates.
    pub fn annihilator<F: Field<Elem = E>>(&self, f: &F) -> Result<Self> {
        if self.is_zero() {
            return Ok(Subspace::full(f, self.ambient));
        }
        let bt = Matrix::from_rows(self.basis.clone())?;
        let ns = elim::nullspace(f, &bt, svd::RANK_TOL);
        Subspace::span(f, &ns, self.ambient)
    }

    /// Orthonormal basis of a complement followed by the subspace basis's
    /// complement: columns `[W | W^perp]`.
    pub fn adapted_basis<F: Field<Elem = E>>(&self, f: &F) -> Result<Matrix<E>> {
        let (_, comp) = f.orthonormal_split(&self.basis, self.ambient)?;
        let mut cols = self.basis.clone();
        cols.extend(comp);
        Ok(Matrix::from_cols(self.ambient, &cols))
    }

    /// Matrix of `g` restricted to an invariant subspace, in its basis.
    pub fn restrict<F: Field<Elem = E>>(&self, f: &F, g: &Matrix<E>) -> Result<Matrix<E>> {
        if !self.is_invariant(f, g) {
            return Err(Error::NotInvariant);
        }
        let p = self.adapted_basis(f)?;
        let pinv = elim::inverse(f, &p)?;
        let r = self.dim();
        Ok(pinv.matmul(g).matmul(&p).block(0, r, 0, r))
    }

    /// Matrix of the action induced on `V / W`, in the complement basis.
    pub fn quotient<F: Field<Elem = E>>(&self, f: &F, g: &Matrix<E>) -> Result<Matrix<E>> {
        if !self.is_invariant(f, g) {
            return Err(Error::NotInvariant);
        }
        let p = self.adapted_basis(f)?;
        let pinv = elim::inverse(f, &p)?;
        let (r, d) = (self.dim(), self.ambient);
        Ok(pinv.matmul(g).matmul(&p).block(r, d, r, d))
    }

    pub fn to_f64<F: Field<Elem = E>>(&self, f: &F) -> Vec<Vec<f64>> {
        self.basis.iter().map(|v| v.iter().map(|x| f.to_f64(x)).collect()).collect()
    }
}

/// Orthogonal complement. Over Q_p complements are not unique; any valid
/// one is returned (see [`is_orthogonal_complement`]).
pub fn orthogonal_complement<F: Field>(f: &F, e: &Subspace<F::Elem>) -> Result<Subspace<F::Elem>> {
    if e.is_zero() {
        return Err(Error::DegenerateSubspace("zero subspace"));
    }
    if e.is_full() {
        return Err(Error::DegenerateSubspace("whole space"));
    }
    let (_, comp) = f.orthonormal_split(e.basis(), e.ambient())?;
    Ok(Subspace { ambient: e.ambient(), basis: comp })
}

/// Checks `V = E + W` with `||v + w|| = ||v|| (+) ||w||` (Pythagoras over R,
/// max over Q_p): the orthonormal bases of `E` and `W` together form an
/// isometry.
pub fn is_orthogonal_complement<F: Field>(f: &F, e: &Subspace<F::Elem>, w: &Subspace<F::Elem>) -> bool {
    if e.dim() + w.dim() != e.ambient() || e.ambient() != w.ambient() {
        return false;
    }
    let mut cols = e.basis().to_vec();
    cols.extend(w.basis().iter().cloned());
    f.is_isometry(&Matrix::from_cols(e.ambient(), &cols))
}

/// Cached quotient-norm projector for repeated distance queries to `[E]`.
#[derive(Debug, Clone)]
pub struct SubspaceDistance<F: Field> {
    field: F,
    /// Rows of the inverse adapted basis giving the `E^perp` coordinates.
    perp_rows: Matrix<F::Elem>,
}

impl<F: Field> SubspaceDistance<F> {
    pub fn new(f: &F, e: &Subspace<F::Elem>) -> Result<Self> {
        if e.is_zero() {
            return Err(Error::DegenerateSubspace("zero subspace"));
        }
        if e.is_full() {
            return Err(Error::DegenerateSubspace("whole space"));
        }
        let p = e.adapted_basis(f)?;
        let pinv = elim::inverse(f, &p)?;
        let perp_rows = pinv.block(e.dim(), e.ambient(), 0, e.ambient());
        Ok(SubspaceDistance { field: f.clone(), perp_rows })
    }

    /// `delta([x], [E]) = ||pi_{E^perp}(x)|| / ||x||`.
    pub fn distance(&self, x: &[F::Elem]) -> f64 {
        let c = self.perp_rows.mul_vec(x);
        let f = &self.field;
        (f.log_norm(&c) - f.log_norm(x)).exp().min(1.0)
    }
}

pub fn distance_to_subspace<F: Field>(f: &F, x: &ProjPoint<F::Elem>, e: &Subspace<F::Elem>) -> Result<f64> {
    Ok(SubspaceDistance::new(f, e)?.distance(x.vector()))
}

/// Distance to the hyperplane `Ker(phi)`: `|phi(x)| / (||phi|| ||x||)`.
pub fn hyperplane_distance<F: Field>(f: &F, phi: &[F::Elem], x: &[F::Elem]) -> f64 {
    let v = dot(phi, x);
    (f.log_abs(&v) - f.log_norm(phi) - f.log_norm(x)).exp().min(1.0)
}

/// Plain serializable view of a subspace.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SubspaceView {
    pub dim: usize,
    pub basis: Vec<Vec<String>>,
}

pub fn subspace_view<F: Field>(f: &F, s: &Subspace<F::Elem>) -> SubspaceView {
    SubspaceView {
        dim: s.dim(),
        basis: s.basis().iter().map(|v| v.iter().map(|x| f.format_elem(x)).collect()).collect(),
    }
}

pub fn matrix_strings<F: Field>(f: &F, m: &Matrix<F::Elem>) -> Vec<String> {
    m.entries().iter().map(|x| f.format_elem(x)).collect()
}
