//! Skew-product chart `X = L x S(V/L)` of `P(V) \ [L]` for an invariant
//! subspace `L`, the lifted action and its affine cocycle.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::linalg::{elim, orthogonal_complement, Matrix, ProjPoint, Subspace};
use crate::measure::{MeasureSpec, RngStream};

/// Adapted basis `[L | L~]` with `L~ = L^perp`.
#[derive(Debug, Clone)]
pub struct SkewChart<F: Field> {
    field: F,
    l: Subspace<F::Elem>,
    l_tilde: Subspace<F::Elem>,
    basis: Matrix<F::Elem>,
    basis_inv: Matrix<F::Elem>,
}

/// `g = [[A, B], [0, C]]` in the adapted basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Blocks<E> {
    pub a: Matrix<E>,
    pub b: Matrix<E>,
    pub c: Matrix<E>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkewPoint<E> {
    pub t: Vec<E>,
    pub xi: Vec<E>,
}

/// `t -> linear t + translation` on `L`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap<E> {
    pub linear: Matrix<E>,
    pub translation: Vec<E>,
}

impl<E: crate::field::Scalar> AffineMap<E> {
    pub fn identity(r: usize) -> Self {
        AffineMap { linear: Matrix::identity(r), translation: vec![E::zero(); r] }
    }

    pub fn apply(&self, t: &[E]) -> Vec<E> {
        self.linear.mul_vec(t).into_iter().zip(&self.translation).map(|(a, b)| a + b.clone()).collect()
    }

    /// `self o other`.
    pub fn compose(&self, other: &Self) -> Self {
        AffineMap { linear: self.linear.matmul(&other.linear), translation: self.apply(&other.translation) }
    }
}

impl AffineMap<f64> {
    /// Unique fixed point in dimension one, `None` for a translation.
    pub fn fixed_point_1d(&self) -> Option<f64> {
        let a = self.linear[(0, 0)];
        (a != 1.0).then(|| self.translation[0] / (1.0 - a))
    }

    pub fn defect(&self, other: &Self) -> f64 {
        let scale = self.linear.max_abs().max(self.translation.iter().fold(0.0f64, |m, x| m.max(x.abs()))).max(1.0);
        let dl = self.linear.sub(&other.linear).max_abs();
        let dt = self.translation.iter().zip(&other.translation).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        dl.max(dt) / scale
    }
}

impl<F: Field> SkewChart<F> {
    pub fn new(field: &F, l: Subspace<F::Elem>) -> Result<Self> {
        let l_tilde = orthogonal_complement(field, &l)?;
        Self::with_complement(field, l, l_tilde)
    }

    pub fn with_complement(field: &F, l: Subspace<F::Elem>, l_tilde: Subspace<F::Elem>) -> Result<Self> {
        let d = l.ambient();
        if l.dim() + l_tilde.dim() != d {
            return Err(Error::Dimension { expected: d - l.dim(), got: l_tilde.dim() });
        }
        let mut cols = l.basis().to_vec();
        cols.extend(l_tilde.basis().iter().cloned());
        let basis = Matrix::from_cols(d, &cols);
        let basis_inv = elim::inverse(field, &basis).map_err(|_| Error::DegenerateSubspace("complement meets L"))?;
        Ok(SkewChart { field: field.clone(), l, l_tilde, basis, basis_inv })
    }

    /// Chart for `L` spanned by the given vectors.
    pub fn for_span(field: &F, vectors: &[Vec<F::Elem>], d: usize) -> Result<Self> {
        Self::new(field, Subspace::span(field, vectors, d)?)
    }

    pub fn field(&self) -> &F {
        &self.field
    }

    pub fn l(&self) -> &Subspace<F::Elem> {
        &self.l
    }

    pub fn l_tilde(&self) -> &Subspace<F::Elem> {
        &self.l_tilde
    }

    /// Columns: the basis of `L` followed by that of the complement.
    pub fn basis(&self) -> &Matrix<F::Elem> {
        &self.basis
    }

    pub fn basis_inv(&self) -> &Matrix<F::Elem> {
        &self.basis_inv
    }

    pub fn r(&self) -> usize {
        self.l.dim()
    }

    pub fn d(&self) -> usize {
        self.l.ambient()
    }

    pub fn blocks(&self, g: &Matrix<F::Elem>) -> Result<Blocks<F::Elem>> {
        if !self.l.is_invariant(&self.field, g) {
            return Err(Error::NotInvariant);
        }
        let h = self.basis_inv.matmul(g).matmul(&self.basis);
        let (r, d) = (self.r(), self.d());
        Ok(Blocks { a: h.block(0, r, 0, r), b: h.block(0, r, r, d), c: h.block(r, d, r, d) })
    }

    fn split(&self, x: &[F::Elem]) -> (Vec<F::Elem>, Vec<F::Elem>) {
        let y = self.basis_inv.mul_vec(x);
        let r = self.r();
        (y[..r].to_vec(), y[r..].to_vec())
    }

    /// `[l + w] -> (l / N(w), w / N(w))`.
    pub fn to_chart(&self, x: &ProjPoint<F::Elem>) -> Result<SkewPoint<F::Elem>> {
        self.to_chart_vec(x.vector())
    }

    pub fn to_chart_vec(&self, x: &[F::Elem]) -> Result<SkewPoint<F::Elem>> {
        let f = &self.field;
        let (l, w) = self.split(x);
        let scale = f.norm(x);
        if w.iter().all(|e| f.negligible(e, scale, 1e-13)) {
            return Err(Error::PointAtInfinity);
        }
        let (n, xi) = f.polar(&w)?;
        let t = l.into_iter().map(|e| e / n.clone()).collect();
        Ok(SkewPoint { t, xi })
    }

    pub fn from_chart(&self, s: &SkewPoint<F::Elem>) -> ProjPoint<F::Elem> {
        ProjPoint::new(&self.field, &self.from_chart_vec(s)).expect("xi is a unit vector")
    }

    /// Representative `t + xi` in ambient coordinates.
    pub fn from_chart_vec(&self, s: &SkewPoint<F::Elem>) -> Vec<F::Elem> {
        let mut y = s.t.clone();
        y.extend(s.xi.iter().cloned());
        self.basis.mul_vec(&y)
    }

    /// Action on `X`: `(t, xi) -> ((A t + B xi) / N(C xi), C xi / N(C xi))`.
    pub fn act(&self, blocks: &Blocks<F::Elem>, s: &SkewPoint<F::Elem>) -> SkewPoint<F::Elem> {
        let f = &self.field;
        let (n, xi) = f.polar(&blocks.c.mul_vec(&s.xi)).expect("C invertible");
        let at = blocks.a.mul_vec(&s.t);
        let bx = blocks.b.mul_vec(&s.xi);
        let t = at
            .into_iter()
            .zip(bx)
            .map(|(a, b)| (a + b) / n.clone())
            .collect();
        SkewPoint { t, xi }
    }

    pub fn act_skew(&self, g: &Matrix<F::Elem>, s: &SkewPoint<F::Elem>) -> Result<SkewPoint<F::Elem>> {
        Ok(self.act(&self.blocks(g)?, s))
    }

    /// Base action `xi -> C xi / N(C xi)`.
    pub fn act_base(&self, blocks: &Blocks<F::Elem>, xi: &[F::Elem]) -> Vec<F::Elem> {
        self.field.polar(&blocks.c.mul_vec(xi)).expect("C invertible").1
    }

    /// `sigma(g, xi): t -> (A t + B xi) / N(C xi)`.
    pub fn sigma(&self, blocks: &Blocks<F::Elem>, xi: &[F::Elem]) -> AffineMap<F::Elem> {
        let f = &self.field;
        let (n, _) = f.polar(&blocks.c.mul_vec(xi)).expect("C invertible");
        AffineMap { linear: blocks.a.div_scalar(&n), translation: blocks.b.mul_vec(xi).into_iter().map(|e| e / n.clone()).collect() }
    }

    pub fn sigma_cocycle(&self, g: &Matrix<F::Elem>, xi: &[F::Elem]) -> Result<AffineMap<F::Elem>> {
        Ok(self.sigma(&self.blocks(g)?, xi))
    }

    /// Blocks of every atom; fails if some atom does not preserve `L`.
    pub fn atom_blocks(&self, spec: &MeasureSpec<F>) -> Result<Vec<Blocks<F::Elem>>> {
        spec.atoms.iter().map(|g| self.blocks(g)).collect()
    }
}

/// Trajectory `s_0, ..., s_n` of the stochastic recursion `s_{k+1} = X_{k+1} s_k`.
pub fn run_recursion<F: Field>(
    spec: &MeasureSpec<F>,
    s0: &SkewPoint<F::Elem>,
    chart: &SkewChart<F>,
    n: usize,
    stream: RngStream,
) -> Result<Vec<SkewPoint<F::Elem>>> {
    let blocks = chart.atom_blocks(spec)?;
    let sampler = spec.sampler();
    let mut rng = stream.rng();
    let mut out = Vec::with_capacity(n + 1);
    out.push(s0.clone());
    let mut s = s0.clone();
    let f = chart.field();
    for _ in 0..n {
        s = chart.act(&blocks[sampler.draw(&mut rng)], &s);
        if f.is_exact() {
            s = SkewPoint { t: s.t.iter().map(|x| f.tidy(x)).collect(), xi: s.xi.iter().map(|x| f.tidy(x)).collect() };
        }
        out.push(s.clone());
    }
    Ok(out)
}

/// Sign-normalized real skew point: the entry of `xi` of largest modulus is
/// positive.
pub fn canonical_sign(s: &SkewPoint<f64>) -> SkewPoint<f64> {
    let mut best = 0;
    for (i, x) in s.xi.iter().enumerate() {
        if x.abs() > s.xi[best].abs() * (1.0 + 1e-12) {
            best = i;
        }
    }
    if s.xi.get(best).is_some_and(|x| *x < 0.0) {
        SkewPoint { t: s.t.iter().map(|x| -x).collect(), xi: s.xi.iter().map(|x| -x).collect() }
    } else {
        s.clone()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SkewRow {
    pub t: Vec<f64>,
    pub xi: Vec<f64>,
}

pub fn trajectory_csv<F: Field>(f: &F, traj: &[SkewPoint<F::Elem>]) -> String {
    let (r, q) = traj.first().map_or((0, 0), |s| (s.t.len(), s.xi.len()));
    let mut out = String::from("step");
    for i in 1..=r {
        out.push_str(&format!(",t_{i}"));
    }
    for i in 1..=q {
        out.push_str(&format!(",xi_{i}"));
    }
    out.push('\n');
    for (k, s) in traj.iter().enumerate() {
        out.push_str(&k.to_string());
        for x in s.t.iter().chain(&s.xi) {
            out.push_str(&format!(",{:.12e}", f.to_f64(x)));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::field::{q, PadicField, RealField};
    use crate::linalg::fubini_distance;
    use rand::Rng;

    fn real() -> RealField {
        RealField::default()
    }

    fn e1_chart() -> SkewChart<RealField> {
        SkewChart::for_span(&real(), &[vec![1.0, 0.0, 0.0]], 3).unwrap()
    }

    #[test]
    fn chart_examples() {
        let c = e1_chart();
        let f = real();
        let s = c.to_chart(&ProjPoint::new(&f, &[5.0, 3.0, 4.0]).unwrap()).unwrap();
        // [(5,3,4)] is also [-(5,3,4)]; the normalized representative has |t| = 1
        let s = canonical_sign(&s);
        assert!((s.t[0] - 1.0).abs() < 1e-15);
        assert!((s.xi[0] - 0.6).abs() < 1e-15 && (s.xi[1] - 0.8).abs() < 1e-15);
        let s = c.to_chart_vec(&[0.0, 1.0, 0.0]).unwrap();
        assert_eq!(s.t, vec![0.0]);
        assert_eq!(c.to_chart_vec(&[1.0, 0.0, 0.0]).unwrap_err(), Error::PointAtInfinity);
    }

    #[test]
    fn round_trip() {
        let c = e1_chart();
        let f = real();
        let mut rng = RngStream::new(1, 2).rng();
        for _ in 0..100 {
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            let p = ProjPoint::new(&f, &x).unwrap();
            let back = c.from_chart(&c.to_chart(&p).unwrap());
            assert!(fubini_distance(&f, &p, &back) < 1e-12);
        }
    }

    #[test]
    fn affine_case() {
        // L a hyperplane of R^2 and C = 1: (t, 1) -> (a t + b, 1)
        let f = real();
        let c = SkewChart::for_span(&f, &[vec![1.0, 0.0]], 2).unwrap();
        let g = Matrix::from_rows(vec![vec![0.5, 3.0], vec![0.0, 1.0]]).unwrap();
        let s = c.act_skew(&g, &SkewPoint { t: vec![2.0], xi: vec![1.0] }).unwrap();
        assert_eq!(s, SkewPoint { t: vec![4.0], xi: vec![1.0] });
    }

    #[test]
    fn example3_cocycles() {
        let f = real();
        let c = e1_chart();
        let spec = catalog::example3(f.clone());
        let s241 = 241f64.sqrt();
        let xi0 = vec![-4.0 / s241, 15.0 / s241];
        let s3 = c.sigma_cocycle(&spec.atoms[2], &xi0).unwrap();
        assert!((s3.linear[(0, 0)] - 0.125).abs() < 1e-15);
        assert!((s3.translation[0] - 11.0 / s241 / 4.0).abs() < 1e-15);
        let t0 = s3.fixed_point_1d().unwrap();
        assert!((t0 - 22.0 / (7.0 * s241)).abs() < 1e-15);
        // sigma(g1, xi0) has linear part 0.5 / 0.25 = 2 and xi0 is fixed on the base
        let s1 = c.sigma_cocycle(&spec.atoms[0], &xi0).unwrap();
        assert!((s1.linear[(0, 0)] - 2.0).abs() < 1e-14);
        assert!((s1.translation[0] - 4.0 * (2.0 * xi0[0] + 3.0 * xi0[1])).abs() < 1e-14);
        let b1 = c.blocks(&spec.atoms[0]).unwrap();
        let moved = c.act_base(&b1, &xi0);
        assert!((moved[0] - xi0[0]).abs() < 1e-15 && (moved[1] - xi0[1]).abs() < 1e-15);
        // xi0 is repelling for C1, so only a few float iterations track the orbit
        let mut s = SkewPoint { t: vec![t0], xi: xi0 };
        let mut last = t0.abs();
        for _ in 0..8 {
            s = c.act(&b1, &s);
            assert!(s.t[0].abs() > last);
            last = s.t[0].abs();
        }
        assert!(last > 1e3);
    }

    #[test]
    fn identity_cocycle() {
        let c = e1_chart();
        let m = c.sigma_cocycle(&Matrix::identity(3), &[0.6, 0.8]).unwrap();
        assert_eq!(m, AffineMap::identity(1));
    }

    #[test]
    fn cocycle_identity_and_conjugation() {
        let f = real();
        let c = e1_chart();
        let spec = catalog::example1(f.clone());
        let mut rng = RngStream::new(7, 0).rng();
        for _ in 0..200 {
            let g1 = &spec.atoms[rng.random_range(0..2)];
            let g2 = &spec.atoms[rng.random_range(0..2)];
            let xi = f.polar(&[rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).unwrap().1;
            let b2 = c.blocks(g2).unwrap();
            let lhs = c.sigma_cocycle(&g1.matmul(g2), &xi).unwrap();
            let rhs = c.sigma_cocycle(g1, &c.act_base(&b2, &xi)).unwrap().compose(&c.sigma(&b2, &xi));
            assert!(lhs.defect(&rhs) <= 1e-12);
            let s = SkewPoint { t: vec![rng.random_range(-5.0..5.0)], xi: xi.clone() };
            let moved = c.from_chart(&c.act(&b2, &s));
            let direct = c.from_chart(&s).act(&f, g2);
            assert!(fubini_distance(&f, &moved, &direct) <= 1e-10);
        }
    }

    #[test]
    fn padic_conjugation_is_exact() {
        let f = PadicField::new(2).unwrap();
        let spec = catalog::example2(f.clone());
        let c = SkewChart::for_span(&f, &[vec![q(1, 1), q(0, 1), q(0, 1)]], 3).unwrap();
        let s = SkewPoint { t: vec![q(3, 5)], xi: vec![q(1, 1), q(2, 3)] };
        for g in &spec.atoms {
            let moved = c.from_chart_vec(&c.act_skew(g, &s).unwrap());
            let direct = g.mul_vec(&c.from_chart_vec(&s));
            // proportional vectors: all 2x2 minors vanish exactly
            assert!(crate::linalg::wedge(&moved, &direct).iter().all(|m| *m == q(0, 1)));
        }
    }

    #[test]
    fn point_mass_at_identity_is_constant() {
        let f = real();
        let c = e1_chart();
        let spec = catalog::identity(f, 3);
        let s0 = SkewPoint { t: vec![0.3], xi: vec![0.6, 0.8] };
        let tr = run_recursion(&spec, &s0, &c, 10, RngStream::new(1, 0)).unwrap();
        assert_eq!(tr.len(), 11);
        assert!(tr.iter().all(|s| *s == s0));
    }

    #[test]
    fn example1_fiber_is_unbounded() {
        let f = real();
        let c = e1_chart();
        let spec = catalog::example1(f);
        let s0 = SkewPoint { t: vec![0.0], xi: vec![1.0, 0.0] };
        let tr = run_recursion(&spec, &s0, &c, 100_000, RngStream::new(2, 0)).unwrap();
        let max_first = tr[..1000].iter().fold(0.0f64, |m, s| m.max(s.t[0].abs()));
        let max_all = tr.iter().fold(0.0f64, |m, s| m.max(s.t[0].abs()));
        assert!(max_all > 2.0 * max_first);
    }
}
