//! Proximal elements and their attracting points, limit-set clouds over
//! words in the atoms, and fiber-escape diagnostics. Real field only.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{PadicField, RealField};
use crate::linalg::{eigen, elim, fubini_real, svd, Matrix, ProjPoint, Subspace, SubspaceDistance};
use crate::measure::{MeasureSpec, RngStream};
use crate::skew::{canonical_sign, Blocks, SkewChart, SkewPoint};

/// Dominant to subdominant modulus ratio must exceed `1 + PROXIMAL_TOL`.
pub const PROXIMAL_TOL: f64 = 1e-6;
/// Subspace membership tolerance for the `in_u` / `off_l` tags.
pub const TAG_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProximalData {
    pub lambda_top: f64,
    /// `|lambda_1| / |lambda_2|`, infinite in dimension one.
    pub gap_ratio: f64,
    #[serde(serialize_with = "ser_point")]
    pub attractor: ProjPoint<f64>,
    pub word: Vec<usize>,
    pub in_u: bool,
    pub off_l: bool,
}

fn ser_point<S: serde::Serializer>(p: &ProjPoint<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    serde::Serialize::serialize(p.vector(), s)
}

fn normalize(v: &[f64]) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / n).collect()
}

/// Unit eigenvector for a real simple eigenvalue `lambda`.
fn eigenvector(g: &Matrix<f64>, lambda: f64, ratio: f64) -> Vec<f64> {
    let n = g.rows();
    let mut shifted = g.clone();
    for i in 0..n {
        shifted[(i, i)] -= lambda;
    }
    let s = svd::jacobi_svd(&shifted);
    let mut v = s.v.col(n - 1);
    if ratio > 1.5 {
        for _ in 0..4 {
            v = normalize(&g.mul_vec(&v));
        }
    }
    ProjPoint::from_unit(normalize(&v)).canonical().into_vector()
}

/// Data of `g` if it has a simple real eigenvalue of strictly largest modulus.
/// The flags are relative to the trivial flag `{0} < V`.
pub fn proximal_check(g: &Matrix<f64>) -> Option<ProximalData> {
    let ev = eigen::eigenvalues(g);
    let top = *ev.first()?;
    let ratio = match ev.get(1) {
        Some(z) if z.norm() > 0.0 => top.norm() / z.norm(),
        Some(_) | None => f64::INFINITY,
    };
    if !(ratio > 1.0 + PROXIMAL_TOL) || top.norm() == 0.0 {
        return None;
    }
    let lambda = top.re;
    let v = eigenvector(g, lambda, ratio);
    Some(ProximalData {
        lambda_top: lambda,
        gap_ratio: ratio,
        attractor: ProjPoint::from_unit(v),
        word: Vec::new(),
        in_u: true,
        off_l: true,
    })
}

/// `delta(g p, p)`, zero for an exact eigenvector.
pub fn eigen_residual(g: &Matrix<f64>, p: &ProjPoint<f64>) -> f64 {
    fubini_real(&normalize(&g.mul_vec(p.vector())), p.vector())
}

/// Attracting point of a block-triangular element in chart coordinates:
/// `xi_C = p+(C)` and `t_0 = -(A - lambda I)^-1 B xi_C`.
pub fn attractor_point_block(blocks: &Blocks<f64>) -> Result<SkewPoint<f64>> {
    let c = proximal_check(&blocks.c).ok_or(Error::NotProximal("quotient block"))?;
    let lambda = c.lambda_top;
    if eigen::spectral_radius(&blocks.a) >= lambda.abs() {
        return Err(Error::NotProximal("fiber block dominates"));
    }
    let r = blocks.a.rows();
    let mut shifted = blocks.a.clone();
    for i in 0..r {
        shifted[(i, i)] -= lambda;
    }
    let scale = blocks.a.max_abs().max(lambda.abs());
    let s = svd::singular_values(&shifted);
    if s.last().is_none_or(|x| *x <= 1e-12 * scale) {
        return Err(Error::ResonantBlock);
    }
    let xi = c.attractor.into_vector();
    let rhs: Vec<f64> = blocks.b.mul_vec(&xi).into_iter().map(|x| -x).collect();
    let t = elim::solve(&RealField::default(), &shifted, &rhs).map_err(|_| Error::ResonantBlock)?;
    Ok(canonical_sign(&SkewPoint { t, xi }))
}

/// Fubini-Study Hausdorff distance between two clouds of real unit vectors.
pub fn hausdorff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    if a.is_empty() || b.is_empty() {
        return if a.is_empty() && b.is_empty() { 0.0 } else { 1.0 };
    }
    let one_sided = |x: &[Vec<f64>], y: &[Vec<f64>]| -> f64 {
        x.par_iter()
            .map(|p| y.iter().map(|q| fubini_real(p, q)).fold(f64::INFINITY, f64::min))
            .collect::<Vec<f64>>()
            .into_iter()
            .fold(0.0, f64::max)
    };
    one_sided(a, b).max(one_sided(b, a))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitSetParams {
    pub max_word_len: usize,
    /// Random words drawn after the exhaustive phase.
    pub budget: usize,
    /// Deduplication resolution for attractor keys.
    pub resolution: f64,
}

impl Default for LimitSetParams {
    fn default() -> Self {
        LimitSetParams { max_word_len: 8, budget: 2000, resolution: 1e-9 }
    }
}

fn word_product(atoms: &[Matrix<f64>], word: &[usize]) -> Matrix<f64> {
    let mut m = atoms[word[0]].clone();
    for &k in &word[1..] {
        m = m.matmul(&atoms[k]);
        let s = m.max_abs();
        if s > 1e100 || s < 1e-100 {
            m = m.scale(&(1.0 / s));
        }
    }
    m
}

/// Attracting points of the proximal words, deduplicated and tagged against
/// `u` (membership) and `l` (avoidance).
pub fn limit_set_sample(
    spec: &MeasureSpec<RealField>,
    l: &Subspace<f64>,
    u: &Subspace<f64>,
    params: &LimitSetParams,
    stream: RngStream,
) -> Result<Vec<ProximalData>> {
    let f = RealField::default();
    let k = spec.len();
    let mut words: Vec<Vec<usize>> = Vec::new();
    let mut frontier: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..params.max_word_len {
        let next: Vec<Vec<usize>> = frontier
            .iter()
            .flat_map(|w| {
                (0..k).map(move |a| {
                    let mut w = w.clone();
                    w.push(a);
                    w
                })
            })
            .collect();
        words.extend(next.iter().cloned());
        frontier = next;
    }
    let mut rng = stream.rng();
    let sampler = spec.sampler();
    let (lo, hi) = (params.max_word_len + 1, 2 * params.max_word_len.max(1));
    for _ in 0..params.budget {
        let len = rand::Rng::random_range(&mut rng, lo..=hi.max(lo));
        words.push((0..len).map(|_| sampler.draw(&mut rng)).collect());
    }

    let l_dist = if l.is_proper() { Some(SubspaceDistance::new(&f, l)?) } else { None };
    let u_dist = if u.is_proper() { Some(SubspaceDistance::new(&f, u)?) } else { None };
    let found: Vec<Option<ProximalData>> = words
        .into_par_iter()
        .map(|w| {
            let g = word_product(&spec.atoms, &w);
            let mut p = proximal_check(&g)?;
            p.word = w;
            let x = p.attractor.vector();
            p.in_u = u.is_full() || u_dist.as_ref().is_some_and(|d| d.distance(x) <= TAG_TOL);
            p.off_l = l.is_zero() || l_dist.as_ref().is_some_and(|d| d.distance(x) > TAG_TOL);
            Some(p)
        })
        .collect();
    let mut seen = std::collections::HashSet::new();
    Ok(found.into_iter().flatten().filter(|p| seen.insert(p.attractor.key(params.resolution))).collect())
}

pub fn cloud_points(cloud: &[ProximalData]) -> Vec<Vec<f64>> {
    cloud.iter().map(|p| p.attractor.vector().to_vec()).collect()
}

pub fn to_exact(m: &Matrix<f64>) -> Matrix<BigRational> {
    Matrix::from_vec(m.rows(), m.cols(), exact_vec(m.entries())).expect("shape")
}

pub fn exact_vec(v: &[f64]) -> Vec<BigRational> {
    v.iter().map(|x| BigRational::from_float(*x).expect("finite entry")).collect()
}

/// Continued-fraction convergents of `x` with denominators up to `max_den`.
fn convergents(x: f64, max_den: i64) -> Vec<(i64, i64)> {
    let mut out = Vec::new();
    let (mut h0, mut h1, mut k0, mut k1) = (0i64, 1i64, 1i64, 0i64);
    let mut r = x;
    for _ in 0..40 {
        let a = r.floor();
        if a.abs() > 1e15 {
            break;
        }
        let a = a as i64;
        let (h, k) = (a.saturating_mul(h1).saturating_add(h0), a.saturating_mul(k1).saturating_add(k0));
        if k > max_den || k <= 0 {
            break;
        }
        out.push((h, k));
        (h0, h1, k0, k1) = (h1, h, k1, k);
        let frac = r - a as f64;
        if frac.abs() < 1e-15 {
            break;
        }
        r = 1.0 / frac;
    }
    out
}

/// Exact attracting vector of a rational matrix whose dominant eigenvalue is
/// rational (denominator at most `10^6`).
pub fn exact_attractor(g: &Matrix<BigRational>) -> Option<Vec<BigRational>> {
    // elimination over Q_p is exact rational elimination for any prime
    let q = PadicField::new(2).expect("prime");
    let n = g.rows();
    let gf = Matrix::from_vec(n, n, g.entries().iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect()).ok()?;
    let p = proximal_check(&gf)?;
    for (num, den) in convergents(p.lambda_top, 1_000_000) {
        let lambda = BigRational::new(BigInt::from(num), BigInt::from(den));
        let mut shifted = g.clone();
        for i in 0..n {
            shifted[(i, i)] = shifted[(i, i)].clone() - lambda.clone();
        }
        if elim::determinant(&q, &shifted).is_zero() {
            let ns = elim::nullspace(&q, &shifted, 0.0);
            if ns.len() == 1 {
                return Some(ns.into_iter().next().expect("one vector"));
            }
        }
    }
    None
}

/// `g^m x` in exact arithmetic; converges to the attracting vector at rate
/// `(|lambda_2| / |lambda_1|)^m`.
pub fn refine_attractor(g: &Matrix<BigRational>, x: &[BigRational], m: usize) -> Vec<BigRational> {
    let mut v = x.to_vec();
    for _ in 0..m {
        v = g.mul_vec(&v);
        let top = v.iter().map(|e| e.abs()).max().expect("nonempty");
        if !top.is_zero() {
            v = v.into_iter().map(|e| e / &top).collect();
        }
    }
    v
}

#[derive(Debug, Clone, PartialEq)]
pub struct EscapeParams {
    pub steps: usize,
    pub threshold: f64,
    /// Length of the strictly increasing run required at the end.
    pub tail: usize,
}

impl Default for EscapeParams {
    fn default() -> Self {
        EscapeParams { steps: 1000, threshold: 1e6, tail: 8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EscapeResult {
    pub escape: bool,
    /// `|t_k|` for the steps taken (`inf` at the point at infinity).
    pub norms: Vec<f64>,
    pub first_crossing: Option<usize>,
}

fn fiber_norm(basis_inv: &Matrix<BigRational>, r: usize, v: &[BigRational]) -> f64 {
    let y = basis_inv.mul_vec(v);
    let m = y[r..].iter().map(|e| e.abs()).max().expect("nonempty complement");
    if m.is_zero() {
        return f64::INFINITY;
    }
    let sq = |s: &[BigRational]| s.iter().map(|e| (e / &m).to_f64().unwrap_or(f64::INFINITY).powi(2)).sum::<f64>().sqrt();
    sq(&y[..r]) / sq(&y[r..])
}

/// Iterates `g` exactly on the ambient vector `x` and records the fiber norm
/// in the chart. Stops early once the norm passes `threshold * 1e6`.
pub fn orbit_escape_exact(
    g: &Matrix<BigRational>,
    x: &[BigRational],
    chart: &SkewChart<RealField>,
    params: &EscapeParams,
) -> EscapeResult {
    let basis_inv = to_exact(chart.basis_inv());
    let r = chart.r();
    let mut v = x.to_vec();
    let mut norms = vec![fiber_norm(&basis_inv, r, &v)];
    for _ in 0..params.steps {
        if norms.last().is_some_and(|n| *n > params.threshold * 1e6) {
            break;
        }
        v = g.mul_vec(&v);
        let top = v.iter().map(|e| e.abs()).max().expect("nonempty");
        v = v.into_iter().map(|e| e / &top).collect();
        norms.push(fiber_norm(&basis_inv, r, &v));
    }
    let first_crossing = norms.iter().position(|n| *n > params.threshold);
    let last = *norms.last().expect("nonempty");
    let tail = params.tail.min(norms.len() - 1);
    let monotone = norms[norms.len() - 1 - tail..].windows(2).all(|w| w[1] > w[0] || w[1].is_infinite());
    EscapeResult { escape: last > params.threshold && monotone, norms, first_crossing }
}

/// Escape test from a floating-point chart point; the start is read as the
/// exact dyadic rational it stores and iterated exactly.
pub fn orbit_escape_test(g: &Matrix<f64>, s: &SkewPoint<f64>, chart: &SkewChart<RealField>, params: &EscapeParams) -> EscapeResult {
    orbit_escape_exact(&to_exact(g), &exact_vec(&chart.from_chart_vec(s)), chart, params)
}
