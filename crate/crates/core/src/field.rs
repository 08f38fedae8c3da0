//! Scalar fields: the reals (binary64) and the p-adic numbers Q_p, the latter
//! stored as exact rationals whose size is measured by the p-adic valuation.
//!
//! Everything downstream is generic over [`Field`]. The trait carries the
//! handful of operations whose meaning changes with the absolute value:
//! norms, the polar part `N`, the KAK and Iwasawa decompositions, and
//! orthogonal splittings.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{smith, svd, Kak, Matrix};

/// Arithmetic bound shared by `f64` and `BigRational`.
pub trait Scalar:
    Clone
    + fmt::Debug
    + PartialEq
    + Send
    + Sync
    + 'static
    + Zero
    + One
    + Neg<Output = Self>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
{
}

impl<T> Scalar for T where
    T: Clone
        + fmt::Debug
        + PartialEq
        + Send
        + Sync
        + 'static
        + Zero
        + One
        + Neg<Output = T>
        + Add<Output = T>
        + Sub<Output = T>
        + Mul<Output = T>
        + Div<Output = T>
{
}

/// Serialized form of a field: `"real"` or `{"padic": p}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldSpec {
    Real,
    Padic(u64),
}

impl FieldSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            FieldSpec::Real => Ok(()),
            FieldSpec::Padic(p) if is_prime(p) => Ok(()),
            FieldSpec::Padic(p) => Err(Error::InvalidArgument(format!("{p} is not prime"))),
        }
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldSpec::Real => write!(f, "R"),
            FieldSpec::Padic(p) => write!(f, "Q_{p}"),
        }
    }
}

pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut q = 2u64;
    while q * q <= p {
        if p % q == 0 {
            return false;
        }
        q += 1;
    }
    true
}

pub trait Field: Clone + fmt::Debug + Send + Sync + 'static {
    type Elem: Scalar;

    fn spec(&self) -> FieldSpec;

    fn abs(&self, x: &Self::Elem) -> f64;

    /// `ln |x|`, `-inf` at zero.
    fn log_abs(&self, x: &Self::Elem) -> f64;

    /// Canonical norm: Euclidean over R, max-norm over Q_p.
    fn norm(&self, v: &[Self::Elem]) -> f64;

    fn log_norm(&self, v: &[Self::Elem]) -> f64;

    /// Rank/zero decisions. Over R, `|x| <= tol * scale`; over Q_p exact.
    fn negligible(&self, x: &Self::Elem, scale: f64, tol: f64) -> bool;

    /// Polar decomposition `x = N * xi` with `|N| = ||x||` and `||xi|| = 1`.
    fn polar(&self, v: &[Self::Elem]) -> Result<(Self::Elem, Vec<Self::Elem>)>;

    /// Scalar `N` (and `ln|N|`) to divide out of `v` when its size has left
    /// `[e^-log_bound, e^log_bound]`; `None` when no rescaling is due.
    fn renormalizer(&self, v: &[Self::Elem], log_bound: f64) -> Option<(Self::Elem, f64)>;

    fn to_f64(&self, x: &Self::Elem) -> f64;

    fn from_i64(&self, n: i64) -> Self::Elem;

    fn from_ratio(&self, num: i64, den: i64) -> Self::Elem {
        self.from_i64(num) / self.from_i64(den)
    }

    fn parse_elem(&self, s: &str) -> Result<Self::Elem>;

    fn format_elem(&self, x: &Self::Elem) -> String;

    fn random_elem<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::Elem;

    /// Precision management for long products. Identity over R; over Q_p,
    /// keeps `precision` p-adic digits relative to the valuation.
    fn tidy(&self, x: &Self::Elem) -> Self::Elem;

    /// `g = k a u` with isometries `k`, `u` and `|a_1| >= ... >= |a_d|`.
    fn kak(&self, g: &Matrix<Self::Elem>) -> Result<Kak<Self::Elem>>;

    /// `m = k r` with `k` an isometry and `r` upper triangular; returns `k`
    /// and `ln |r_ii|`.
    fn iwasawa(&self, m: &Matrix<Self::Elem>) -> (Matrix<Self::Elem>, Vec<f64>);

    /// Orthonormal bases `(E, E^perp)` for `E = span(vectors)` in `k^dim`.
    #[allow(clippy::type_complexity)]
    fn orthonormal_split(
        &self,
        vectors: &[Vec<Self::Elem>],
        dim: usize,
    ) -> Result<(Vec<Vec<Self::Elem>>, Vec<Vec<Self::Elem>>)>;

    /// Image of the first basis vector under `k` in `m = k a u`, the top
    /// singular direction. Does not require `m` to be invertible.
    fn top_direction(&self, m: &Matrix<Self::Elem>) -> Result<Vec<Self::Elem>>;

    /// Operator norm induced by the canonical norm.
    fn op_norm(&self, m: &Matrix<Self::Elem>) -> f64;

    fn log_op_norm(&self, m: &Matrix<Self::Elem>) -> f64;

    fn is_isometry(&self, m: &Matrix<Self::Elem>) -> bool;

    /// Relative tolerance for approximate comparisons (exact over Q_p).
    fn approx_eq(&self, a: &Self::Elem, b: &Self::Elem) -> bool;

    fn is_exact(&self) -> bool;
}

/// The real numbers as binary64.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealField {
    pub rel_tol: f64,
}

impl Default for RealField {
    fn default() -> Self {
        RealField { rel_tol: 1e-12 }
    }
}

impl Field for RealField {
    type Elem = f64;

    fn spec(&self) -> FieldSpec {
        FieldSpec::Real
    }

    fn abs(&self, x: &f64) -> f64 {
        x.abs()
    }

    fn log_abs(&self, x: &f64) -> f64 {
        x.abs().ln()
    }

    fn norm(&self, v: &[f64]) -> f64 {
        // scaled to avoid overflow in the squares
        let m = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        if m == 0.0 || !m.is_finite() {
            return m;
        }
        m * v.iter().map(|x| (x / m) * (x / m)).sum::<f64>().sqrt()
    }

    fn log_norm(&self, v: &[f64]) -> f64 {
        self.norm(v).ln()
    }

    fn negligible(&self, x: &f64, scale: f64, tol: f64) -> bool {
        x.abs() <= tol * scale
    }

    fn polar(&self, v: &[f64]) -> Result<(f64, Vec<f64>)> {
        let n = self.norm(v);
        if n == 0.0 {
            return Err(Error::ZeroVector);
        }
        Ok((n, v.iter().map(|x| x / n).collect()))
    }

    fn renormalizer(&self, v: &[f64], log_bound: f64) -> Option<(f64, f64)> {
        let m = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        if m == 0.0 {
            return None;
        }
        let l = m.ln();
        (l.abs() > log_bound).then_some((m, l))
    }

    fn to_f64(&self, x: &f64) -> f64 {
        *x
    }

    fn from_i64(&self, n: i64) -> f64 {
        n as f64
    }

    fn parse_elem(&self, s: &str) -> Result<f64> {
        let s = s.trim();
        if let Some((a, b)) = s.split_once('/') {
            let a: f64 = a.trim().parse().map_err(|_| Error::Parse(s.to_string()))?;
            let b: f64 = b.trim().parse().map_err(|_| Error::Parse(s.to_string()))?;
            if b == 0.0 {
                return Err(Error::Parse(format!("zero denominator in {s}")));
            }
            return Ok(a / b);
        }
        let x: f64 = s.parse().map_err(|_| Error::Parse(s.to_string()))?;
        if !x.is_finite() {
            return Err(Error::Parse(format!("non-finite entry {s}")));
        }
        Ok(x)
    }

    fn format_elem(&self, x: &f64) -> String {
        format!("{x}")
    }

    fn random_elem<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        rng.sample(StandardNormal)
    }

    fn tidy(&self, x: &f64) -> f64 {
        *x
    }

    fn kak(&self, g: &Matrix<f64>) -> Result<Kak<f64>> {
        svd::kak_real(g)
    }

    fn iwasawa(&self, m: &Matrix<f64>) -> (Matrix<f64>, Vec<f64>) {
        svd::householder_qr(m)
    }

    fn orthonormal_split(&self, vectors: &[Vec<f64>], dim: usize) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
        svd::gram_schmidt_split(vectors, dim)
    }

    fn top_direction(&self, m: &Matrix<f64>) -> Result<Vec<f64>> {
        let svd = svd::jacobi_svd(m);
        if !(svd.s.first().copied().unwrap_or(0.0) > 0.0) {
            return Err(Error::ZeroVector);
        }
        Ok(svd.u.col(0))
    }

    fn op_norm(&self, m: &Matrix<f64>) -> f64 {
        svd::singular_values(m).first().copied().unwrap_or(0.0)
    }

    fn log_op_norm(&self, m: &Matrix<f64>) -> f64 {
        self.op_norm(m).ln()
    }

    fn is_isometry(&self, m: &Matrix<f64>) -> bool {
        if m.rows() != m.cols() {
            return false;
        }
        let g = m.transpose().matmul(m);
        let n = m.rows();
        (0..n).all(|i| (0..n).all(|j| (g[(i, j)] - if i == j { 1.0 } else { 0.0 }).abs() <= 1e-10))
    }

    fn approx_eq(&self, a: &f64, b: &f64) -> bool {
        (a - b).abs() <= self.rel_tol * a.abs().max(b.abs()).max(1.0)
    }

    fn is_exact(&self) -> bool {
        false
    }
}

/// Q_p with elements stored as reduced rationals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PadicField {
    p: u64,
    /// p-adic digits kept by [`Field::tidy`].
    precision: u32,
}

impl PadicField {
    pub fn new(p: u64) -> Result<Self> {
        FieldSpec::Padic(p).validate()?;
        Ok(PadicField { p, precision: 48 })
    }

    pub fn with_precision(mut self, digits: u32) -> Self {
        self.precision = digits.max(1);
        self
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    fn p_big(&self) -> BigInt {
        BigInt::from(self.p)
    }

    fn int_valuation(&self, n: &BigInt) -> i64 {
        debug_assert!(!n.is_zero());
        let p = self.p_big();
        let mut v = 0;
        let mut m = n.clone();
        loop {
            let (q, r) = m.div_rem(&p);
            if !r.is_zero() {
                return v;
            }
            m = q;
            v += 1;
        }
    }

    /// `v_p(x)`, `None` at zero.
    pub fn valuation(&self, x: &BigRational) -> Option<i64> {
        if x.is_zero() {
            return None;
        }
        Some(self.int_valuation(x.numer()) - self.int_valuation(x.denom()))
    }

    /// `p^k` as an exact rational.
    pub fn pow_p(&self, k: i64) -> BigRational {
        let e = num_traits::pow(self.p_big(), k.unsigned_abs() as usize);
        if k >= 0 {
            BigRational::from_integer(e)
        } else {
            BigRational::new(BigInt::one(), e)
        }
    }

    /// Smallest valuation among the nonzero entries.
    pub fn min_valuation(&self, v: &[BigRational]) -> Option<i64> {
        v.iter().filter_map(|x| self.valuation(x)).min()
    }

    fn ln_p(&self) -> f64 {
        (self.p as f64).ln()
    }

    pub fn is_integral(&self, x: &BigRational) -> bool {
        self.valuation(x).is_none_or(|v| v >= 0)
    }

    pub fn is_unit(&self, x: &BigRational) -> bool {
        self.valuation(x) == Some(0)
    }
}

fn mod_inverse(a: &BigInt, m: &BigInt) -> Option<BigInt> {
    let e = a.mod_floor(m).extended_gcd(m);
    e.gcd.is_one().then(|| e.x.mod_floor(m))
}

impl Field for PadicField {
    type Elem = BigRational;

    fn spec(&self) -> FieldSpec {
        FieldSpec::Padic(self.p)
    }

    fn abs(&self, x: &BigRational) -> f64 {
        match self.valuation(x) {
            None => 0.0,
            Some(v) if v.unsigned_abs() < 1000 => (self.p as f64).powi(-(v as i32)),
            Some(v) => (-(v as f64) * self.ln_p()).exp(),
        }
    }

    fn log_abs(&self, x: &BigRational) -> f64 {
        match self.valuation(x) {
            None => f64::NEG_INFINITY,
            Some(v) => -(v as f64) * self.ln_p(),
        }
    }

    fn norm(&self, v: &[BigRational]) -> f64 {
        v.iter().fold(0.0, |a, x| a.max(self.abs(x)))
    }

    fn log_norm(&self, v: &[BigRational]) -> f64 {
        match self.min_valuation(v) {
            None => f64::NEG_INFINITY,
            Some(m) => -(m as f64) * self.ln_p(),
        }
    }

    fn negligible(&self, x: &BigRational, _scale: f64, _tol: f64) -> bool {
        x.is_zero()
    }

    fn polar(&self, v: &[BigRational]) -> Result<(BigRational, Vec<BigRational>)> {
        let m = self.min_valuation(v).ok_or(Error::ZeroVector)?;
        let n = self.pow_p(m);
        let xi = v.iter().map(|x| x / &n).collect();
        Ok((n, xi))
    }

    fn renormalizer(&self, v: &[BigRational], _log_bound: f64) -> Option<(BigRational, f64)> {
        let m = self.min_valuation(v)?;
        (m != 0).then(|| (self.pow_p(m), -(m as f64) * self.ln_p()))
    }

    fn to_f64(&self, x: &BigRational) -> f64 {
        x.to_f64().unwrap_or(f64::NAN)
    }

    fn from_i64(&self, n: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(n))
    }

    fn parse_elem(&self, s: &str) -> Result<BigRational> {
        parse_rational(s)
    }

    fn format_elem(&self, x: &BigRational) -> String {
        format!("{}/{}", x.numer(), x.denom())
    }

    fn random_elem<R: Rng + ?Sized>(&self, rng: &mut R) -> BigRational {
        let n: i64 = rng.random_range(-16..=16);
        let k: i64 = rng.random_range(-1..=1);
        self.from_i64(n) * self.pow_p(k)
    }

    fn tidy(&self, x: &BigRational) -> BigRational {
        let Some(v) = self.valuation(x) else {
            return BigRational::zero();
        };
        let unit = x / self.pow_p(v);
        let modulus = num_traits::pow(self.p_big(), self.precision as usize);
        let inv = mod_inverse(unit.denom(), &modulus).expect("unit denominator is prime to p");
        let mut r = (unit.numer() * inv).mod_floor(&modulus);
        // symmetric representative keeps small negative numbers small
        if &r * BigInt::from(2) > modulus {
            r -= &modulus;
        }
        BigRational::from_integer(r) * self.pow_p(v)
    }

    fn kak(&self, g: &Matrix<BigRational>) -> Result<Kak<BigRational>> {
        smith::kak_padic(self, g)
    }

    fn iwasawa(&self, m: &Matrix<BigRational>) -> (Matrix<BigRational>, Vec<f64>) {
        smith::iwasawa_padic(self, m)
    }

    fn orthonormal_split(
        &self,
        vectors: &[Vec<BigRational>],
        dim: usize,
    ) -> Result<(Vec<Vec<BigRational>>, Vec<Vec<BigRational>>)> {
        smith::split_padic(self, vectors, dim)
    }

    fn top_direction(&self, m: &Matrix<BigRational>) -> Result<Vec<BigRational>> {
        let sf = smith::smith(self, m);
        if sf.diag.is_empty() {
            return Err(Error::ZeroVector);
        }
        Ok(sf.left.col(0))
    }

    fn op_norm(&self, m: &Matrix<BigRational>) -> f64 {
        self.norm(m.entries())
    }

    fn log_op_norm(&self, m: &Matrix<BigRational>) -> f64 {
        self.log_norm(m.entries())
    }

    fn is_isometry(&self, m: &Matrix<BigRational>) -> bool {
        smith::in_gl_integral(self, m)
    }

    fn approx_eq(&self, a: &BigRational, b: &BigRational) -> bool {
        a == b
    }

    fn is_exact(&self) -> bool {
        true
    }
}

/// Parses `"a/b"`, `"a"` or a finite decimal `"0.25"` into an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::Parse(s.to_string());
    if let Some((a, b)) = s.split_once('/') {
        let a: BigInt = a.trim().parse().map_err(|_| bad())?;
        let b: BigInt = b.trim().parse().map_err(|_| bad())?;
        if b.is_zero() {
            return Err(Error::Parse(format!("zero denominator in {s}")));
        }
        return Ok(BigRational::new(a, b));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let neg = int.starts_with('-');
        let digits = format!("{}{}", int.trim_start_matches(['-', '+']), frac);
        if digits.is_empty() || !digits.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let mut n: BigInt = digits.parse().map_err(|_| bad())?;
        if neg {
            n = -n;
        }
        let d = num_traits::pow(BigInt::from(10), frac.len());
        return Ok(BigRational::new(n, d));
    }
    let n: BigInt = s.parse().map_err(|_| bad())?;
    Ok(BigRational::from_integer(n))
}

/// Convenience: exact rational `num/den`.
pub fn q(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Whether a rational is an integer with absolute value below `bound`.
pub fn small_integer(x: &BigRational, bound: i64) -> bool {
    x.is_integer() && x.numer().abs() < BigInt::from(bound)
}
