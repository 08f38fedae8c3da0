//! Joint spectral radius brackets and the compactness criterion for the
//! support of the stationary measure in the skew chart. Real field only.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::RealField;
use crate::linalg::{eigen, elim, svd, Matrix};
use crate::measure::MeasureSpec;
use crate::skew::{Blocks, SkewChart};

pub const DEFAULT_DEPTH: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NormKind {
    L1,
    L2,
    Linf,
    /// `||M X M^-1||_2` for a fitted upper-triangular `M`.
    Ellipsoid,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JsrBounds {
    pub lower: f64,
    pub upper: f64,
    pub depth: usize,
    pub witness_word_lower: Vec<usize>,
    pub norm_used: NormKind,
    /// Running bounds after each depth `1..=depth`.
    pub lower_by_depth: Vec<f64>,
    pub upper_by_depth: Vec<f64>,
}

fn op_norm(kind: NormKind, m: &Matrix<f64>, ell: Option<&(Matrix<f64>, Matrix<f64>)>) -> f64 {
    let (r, c) = (m.rows(), m.cols());
    match kind {
        NormKind::L1 => (0..c).map(|j| (0..r).map(|i| m[(i, j)].abs()).sum::<f64>()).fold(0.0, f64::max),
        NormKind::Linf => (0..r).map(|i| (0..c).map(|j| m[(i, j)].abs()).sum::<f64>()).fold(0.0, f64::max),
        NormKind::L2 => svd::singular_values(m)[0],
        NormKind::Ellipsoid => {
            let (e, ei) = ell.expect("ellipsoid form");
            svd::singular_values(&e.matmul(m).matmul(ei))[0]
        }
    }
}

fn spectral_radius(m: &Matrix<f64>) -> f64 {
    eigen::spectral_radius(m)
}

/// Upper-triangular `M` with positive diagonal from its parameters.
fn form_from(params: &[f64], d: usize) -> Matrix<f64> {
    let mut m = Matrix::<f64>::zeros(d, d);
    let mut k = 0;
    for i in 0..d {
        for j in i..d {
            m[(i, j)] = if i == j { if i == 0 { 1.0 } else { params[k].exp() } } else { params[k] };
            if !(i == 0 && j == 0) {
                k += 1;
            }
        }
    }
    m
}

/// Coordinate descent on `max_a ||M A_a M^-1||_2` over upper-triangular `M`.
fn fit_ellipsoid(sigma: &[Matrix<f64>]) -> (Matrix<f64>, Matrix<f64>) {
    let f = RealField::default();
    let d = sigma[0].rows();
    let np = d * (d + 1) / 2 - 1;
    let objective = |p: &[f64]| -> f64 {
        let m = form_from(p, d);
        let Ok(mi) = elim::inverse(&f, &m) else { return f64::INFINITY };
        sigma.iter().map(|a| svd::singular_values(&m.matmul(a).matmul(&mi))[0]).fold(0.0, f64::max)
    };
    let mut p = vec![0.0; np];
    let mut best = objective(&p);
    let mut step = 0.5;
    let mut passes = 0;
    while step > 1e-6 && passes < 400 {
        passes += 1;
        let mut improved = false;
        for k in 0..np {
            for s in [step, -step] {
                let mut q = p.clone();
                q[k] += s;
                let v = objective(&q);
                if v < best {
                    best = v;
                    p = q;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    let m = form_from(&p, d);
    let mi = elim::inverse(&f, &m).expect("triangular with positive diagonal");
    (m, mi)
}

/// Largest norm over words of length `k`, by depth-first search with
/// prefixes pruned when `||P|| * level_max[k - |P|]` cannot beat the
/// incumbent.
fn level_max(
    sigma: &[Matrix<f64>],
    k: usize,
    norms_of: &dyn Fn(&Matrix<f64>) -> f64,
    level_max_prev: &[f64],
) -> f64 {
    fn dfs(
        sigma: &[Matrix<f64>],
        prefix: &Matrix<f64>,
        len: usize,
        k: usize,
        norms_of: &dyn Fn(&Matrix<f64>) -> f64,
        prev: &[f64],
        best: &mut f64,
    ) {
        let mut children: Vec<(f64, Matrix<f64>)> = sigma
            .iter()
            .map(|a| {
                let p = prefix.matmul(a);
                (norms_of(&p), p)
            })
            .collect();
        children.sort_by(|a, b| b.0.total_cmp(&a.0));
        for (n, p) in children {
            if len + 1 == k {
                *best = best.max(n);
                continue;
            }
            let rest = prev[k - len - 1];
            if n * rest * (1.0 + 1e-12) <= *best {
                continue;
            }
            dfs(sigma, &p, len + 1, k, norms_of, prev, best);
        }
    }
    let d = sigma[0].rows();
    let mut best = 0.0;
    dfs(sigma, &Matrix::identity(d), 0, k, norms_of, level_max_prev, &mut best);
    best
}

/// Lower bound `max rho(w)^(1/|w|)` and upper bound
/// `min_k max_{|w| = k} ||w||^(1/k)` over a menu of norms.
pub fn jsr_bounds(sigma: &[Matrix<f64>], depth: usize) -> Result<JsrBounds> {
    if sigma.is_empty() {
        return Err(Error::InvalidArgument("empty set of matrices".into()));
    }
    let d = sigma[0].rows();
    if sigma.iter().any(|m| m.rows() != d || m.cols() != d) {
        return Err(Error::Dimension { expected: d, got: sigma.iter().map(|m| m.rows()).find(|r| *r != d).unwrap_or(d) });
    }
    let depth = depth.max(1);

    let mut lower = 0.0;
    let mut witness = vec![0];
    let mut lower_by_depth = Vec::with_capacity(depth);
    let mut level: Vec<(Vec<usize>, Matrix<f64>)> = vec![(Vec::new(), Matrix::identity(d))];
    for k in 1..=depth {
        let mut next = Vec::with_capacity(level.len() * sigma.len());
        for (w, p) in &level {
            for (a, m) in sigma.iter().enumerate() {
                let q = p.matmul(m);
                let mut wa = w.clone();
                wa.push(a);
                let rho = spectral_radius(&q).powf(1.0 / k as f64);
                if rho > lower * (1.0 + 1e-12) {
                    lower = rho;
                    witness = wa.clone();
                }
                next.push((wa, q));
            }
        }
        lower_by_depth.push(lower);
        level = next;
        // the exhaustive lower-bound search stops growing past this size
        if level.len() > 200_000 {
            level.truncate(200_000);
        }
    }

    let ell = fit_ellipsoid(sigma);
    let mut upper = f64::INFINITY;
    let mut norm_used = NormKind::L2;
    let mut upper_by_depth = vec![f64::INFINITY; depth];
    for kind in [NormKind::L2, NormKind::L1, NormKind::Linf, NormKind::Ellipsoid] {
        let norms_of = |m: &Matrix<f64>| op_norm(kind, m, Some(&ell));
        let mut prev = vec![1.0];
        let mut running = f64::INFINITY;
        for k in 1..=depth {
            let mk = level_max(sigma, k, &norms_of, &prev);
            prev.push(mk);
            running = running.min(mk.powf(1.0 / k as f64));
            if running < upper_by_depth[k - 1] {
                upper_by_depth[k - 1] = running;
            }
        }
        if running < upper * (1.0 - 1e-12) {
            upper = running;
            norm_used = kind;
        }
    }
    Ok(JsrBounds { lower, upper, depth, witness_word_lower: witness, norm_used, lower_by_depth, upper_by_depth })
}

/// Outcome of the compactness criterion `r = JSR{|a_g| C_g^-1} < 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompactnessCertificate {
    pub pass: bool,
    pub reason: Option<String>,
    pub r_upper: f64,
    pub r_lower: f64,
    pub depth: usize,
    pub norm_used: NormKind,
    pub witness: Option<Vec<usize>>,
}

fn scaled_inverse_quotients(spec: &MeasureSpec<RealField>, chart: &SkewChart<RealField>, a_scale: impl Fn(&Blocks<f64>) -> f64) -> Result<Vec<Matrix<f64>>> {
    let f = RealField::default();
    chart
        .atom_blocks(spec)?
        .iter()
        .map(|b| Ok(elim::inverse(&f, &b.c)?.scale(&a_scale(b))))
        .collect()
}

pub fn compactness_certificate(spec: &MeasureSpec<RealField>, chart: &SkewChart<RealField>, depth: usize) -> Result<CompactnessCertificate> {
    if chart.r() != 1 {
        return Err(Error::ChartDimension);
    }
    let set = scaled_inverse_quotients(spec, chart, |b| b.a[(0, 0)].abs())?;
    let mut last = None;
    for k in 1..=depth.max(1) {
        let b = jsr_bounds(&set, k)?;
        if b.upper < 1.0 {
            return Ok(CompactnessCertificate {
                pass: true,
                reason: None,
                r_upper: b.upper,
                r_lower: b.lower,
                depth: k,
                norm_used: b.norm_used,
                witness: None,
            });
        }
        last = Some(b);
    }
    let b = last.expect("depth >= 1");
    let reason = if b.lower >= 1.0 {
        format!("r >= {:.6} from a word with spectral radius at least 1", b.lower)
    } else {
        format!("upper bound {:.6} not below 1 at depth {}", b.upper, b.depth)
    };
    Ok(CompactnessCertificate {
        pass: false,
        reason: Some(reason),
        r_upper: b.upper,
        r_lower: b.lower,
        depth: b.depth,
        norm_used: b.norm_used,
        witness: (b.lower >= 1.0).then_some(b.witness_word_lower),
    })
}

/// Experimental form for `dim L > 1`: brackets for `JSR{||A_g|| C_g^-1}`.
/// Not a certified criterion.
pub fn experimental_compactness_bounds(spec: &MeasureSpec<RealField>, chart: &SkewChart<RealField>, depth: usize) -> Result<JsrBounds> {
    let set = scaled_inverse_quotients(spec, chart, |b| svd::singular_values(&b.a)[0])?;
    jsr_bounds(&set, depth)
}

/// A word with `rho(A_w) > rho(C_w)`, searched up to `depth`, shortest first.
pub fn noncompactness_witness(spec: &MeasureSpec<RealField>, chart: &SkewChart<RealField>, depth: usize) -> Result<Option<Vec<usize>>> {
    let blocks = chart.atom_blocks(spec)?;
    let mut level: Vec<(Vec<usize>, Matrix<f64>, Matrix<f64>)> =
        vec![(Vec::new(), Matrix::identity(chart.r()), Matrix::identity(chart.d() - chart.r()))];
    for _ in 0..depth {
        let mut next = Vec::with_capacity(level.len() * blocks.len());
        for (w, a, c) in &level {
            for (k, b) in blocks.iter().enumerate() {
                let (a2, c2) = (a.matmul(&b.a), c.matmul(&b.c));
                let mut w2 = w.clone();
                w2.push(k);
                if spectral_radius(&a2) > spectral_radius(&c2) * (1.0 + 1e-9) {
                    return Ok(Some(w2));
                }
                next.push((w2, a2, c2));
            }
        }
        level = next;
        if level.len() > 200_000 {
            break;
        }
    }
    Ok(None)
}

/// A ball `|t - center| <= radius` in the fiber that every chart map sends
/// into itself; the stationary measure lives over it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FiberBound {
    pub center: f64,
    pub radius: f64,
    /// `|center| + radius`.
    pub bound: f64,
    /// Largest fiber contraction `|a_g| / ||C_g xi||` over atoms and grid.
    pub kappa: f64,
}

fn unit_grid(k: usize, points: usize) -> Vec<Vec<f64>> {
    if k == 1 {
        return vec![vec![1.0]];
    }
    if k == 2 {
        return (0..points)
            .map(|i| {
                let th = std::f64::consts::PI * i as f64 / points as f64;
                vec![th.cos(), th.sin()]
            })
            .collect();
    }
    let mut rng = crate::measure::RngStream::new(0, 0).rng();
    (0..points)
        .map(|_| {
            let v: Vec<f64> = (0..k).map(|_| rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng)).collect();
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.into_iter().map(|x| x / n).collect()
        })
        .collect()
}

/// Stable fiber ball for `dim L = 1` when every atom contracts the fiber,
/// evaluated over a grid of `xi` (both signs are covered by symmetry).
pub fn fiber_bound(spec: &MeasureSpec<RealField>, chart: &SkewChart<RealField>, grid: usize) -> Result<Option<FiberBound>> {
    if chart.r() != 1 {
        return Err(Error::ChartDimension);
    }
    let blocks = chart.atom_blocks(spec)?;
    let xs = unit_grid(chart.d() - 1, grid.max(8));
    // fixed points f_y and contractions a_y of t -> a_y t + b xi / ||C xi||
    let mut ys = Vec::with_capacity(xs.len() * blocks.len() * 2);
    for b in &blocks {
        for x in &xs {
            for s in [1.0, -1.0] {
                let xi: Vec<f64> = x.iter().map(|v| v * s).collect();
                let n = b.c.mul_vec(&xi).iter().map(|v| v * v).sum::<f64>().sqrt();
                let a = b.a[(0, 0)] / n;
                let bx = b.b.mul_vec(&xi)[0] / n;
                if a.abs() >= 1.0 {
                    return Ok(None);
                }
                ys.push((a, bx / (1.0 - a)));
            }
        }
    }
    let kappa = ys.iter().map(|(a, _)| a.abs()).fold(0.0, f64::max);
    let center = ys[0].1;
    let radius = ys.iter().map(|(a, fy)| (1.0 + a.abs()) / (1.0 - a.abs()) * (fy - center).abs()).fold(0.0, f64::max);
    // grid slack
    let radius = radius * 1.01 + 1e-9;
    Ok(Some(FiberBound { center, radius, bound: center.abs() + radius, kappa }))
}
