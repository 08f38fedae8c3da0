//! Samples of the stationary measure on `P(V) \ [L_mu]` and two-sample
//! diagnostics in the Fubini-Study metric.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::linalg::{wedge, wedge_square, Matrix, ProjPoint, Subspace, SubspaceDistance};
use crate::measure::{par_trials, sample, MeasureSpec, RngStream};
use crate::skew::SkewChart;
use crate::stats::{self, Aggregate, DecayCurve};
use crate::structure::StructureReport;
use crate::walk::WalkState;

/// Default number of pooled-bootstrap resamples for the energy null.
pub const ENERGY_RESAMPLES: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub enum Sampler<E> {
    /// Top left-singular direction of `R_n`.
    TopDirection,
    /// `R_n [x]`.
    PushForward(Vec<E>),
}

impl<E> Sampler<E> {
    pub fn label(&self) -> &'static str {
        match self {
            Sampler::TopDirection => "top-direction",
            Sampler::PushForward(_) => "push-forward",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub sampler: String,
    pub n: usize,
    pub trials: usize,
    pub master_seed: u64,
    pub stream_index: u64,
}

/// Uniformly weighted sample of projective points.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure<E> {
    pub points: Vec<ProjPoint<E>>,
    pub provenance: Provenance,
}

impl<E: crate::field::Scalar> EmpiricalMeasure<E> {
    pub fn from_points(points: Vec<ProjPoint<E>>, sampler: &str) -> Self {
        let trials = points.len();
        EmpiricalMeasure {
            points,
            provenance: Provenance { sampler: sampler.to_string(), n: 0, trials, master_seed: 0, stream_index: 0 },
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Unit real coordinates of the points (Euclidean-normalized).
    pub fn real_points<F: Field<Elem = E>>(&self, f: &F) -> Vec<Vec<f64>> {
        self.points
            .iter()
            .map(|p| {
                let v: Vec<f64> = p.vector().iter().map(|x| f.to_f64(x)).collect();
                let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                v.into_iter().map(|x| x / n).collect()
            })
            .collect()
    }

    pub fn csv<F: Field<Elem = E>>(&self, f: &F) -> String {
        let d = self.points.first().map_or(0, |p| p.dim());
        let mut out = String::from("i");
        for k in 0..d {
            out.push_str(&format!(",x_{k}"));
        }
        out.push('\n');
        for (i, p) in self.points.iter().enumerate() {
            out.push_str(&i.to_string());
            for x in p.vector() {
                out.push(',');
                out.push_str(&f.format_elem(x));
            }
            out.push('\n');
        }
        out
    }
}

/// What the samplers need to know about the structure of `mu`.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryContext<E> {
    pub l_mu: Subspace<E>,
    pub gap_certified: bool,
}

impl<E: crate::field::Scalar> StationaryContext<E> {
    pub fn from_report(r: &StructureReport<E>) -> Self {
        StationaryContext { l_mu: r.l_mu.clone(), gap_certified: r.gap_certified() }
    }
}

fn push_forward<F: Field>(spec: &MeasureSpec<F>, draws: &[usize], x: &[F::Elem]) -> ProjPoint<F::Elem> {
    let f = &spec.field;
    let mut v = x.to_vec();
    for &k in draws.iter().rev() {
        v = spec.atoms[k].mul_vec(&v);
        let (_, xi) = f.polar(&v).expect("invertible atoms");
        v = if f.is_exact() { xi.iter().map(|e| f.tidy(e)).collect() } else { xi };
    }
    ProjPoint::new(f, &v).expect("nonzero")
}

/// `trials` independent approximate draws from the stationary measure.
///
/// Samplers draw from a child stream named after them, so the two samplers
/// run on independent walks even when called with the same stream.
pub fn sample_stationary<F: Field>(
    spec: &MeasureSpec<F>,
    ctx: &StationaryContext<F::Elem>,
    n: usize,
    trials: usize,
    stream: RngStream,
    sampler: &Sampler<F::Elem>,
) -> Result<EmpiricalMeasure<F::Elem>> {
    if !ctx.gap_certified {
        return Err(Error::GapUncertified);
    }
    let f = &spec.field;
    let d = spec.dim();
    if let Sampler::PushForward(x) = sampler {
        if x.len() != d {
            return Err(Error::Dimension { expected: d, got: x.len() });
        }
        f.polar(x)?;
        if ctx.l_mu.contains(f, x) {
            return Err(Error::InExceptionalSubspace);
        }
    }
    let s = stream.child(sampler.label());
    let points = par_trials(trials, s, |_, st| -> Result<ProjPoint<F::Elem>> {
        let draws = sample(spec, st, n);
        match sampler {
            Sampler::TopDirection => {
                let mut w = WalkState::new(f.clone(), d);
                for &k in &draws {
                    w.step_right(&spec.atoms[k]);
                }
                ProjPoint::new(f, &f.top_direction(w.product())?)
            }
            Sampler::PushForward(x) => Ok(push_forward(spec, &draws, x)),
        }
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(EmpiricalMeasure {
        points,
        provenance: Provenance {
            sampler: sampler.label().to_string(),
            n,
            trials,
            master_seed: stream.master_seed,
            stream_index: stream.stream_index,
        },
    })
}

/// Two-sample energy statistic with a pooled-bootstrap null.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyTest {
    pub statistic: f64,
    pub null_mean: f64,
    pub null_sd: f64,
    /// `null_mean + 3 null_sd`.
    pub threshold: f64,
    pub resamples: usize,
    pub reject: bool,
}

/// Energy distance between the index sets `a` and `b` of a pooled sample.
fn energy_indices(a: &[usize], b: &[usize], dist: &(impl Fn(usize, usize) -> f64 + Sync)) -> f64 {
    let cross: f64 = a.par_iter().map(|&i| b.iter().map(|&j| dist(i, j)).sum::<f64>()).collect::<Vec<f64>>().iter().sum();
    let within = |s: &[usize]| -> f64 {
        if s.len() < 2 {
            return 0.0;
        }
        let rows: Vec<f64> =
            (0..s.len()).into_par_iter().map(|i| s[i + 1..].iter().map(|&j| dist(s[i], j)).sum::<f64>()).collect();
        rows.iter().sum::<f64>() * 2.0 / (s.len() * (s.len() - 1)) as f64
    };
    2.0 * cross / (a.len() * b.len()) as f64 - within(a) - within(b)
}

/// Energy test on a pooled sample of size `n1 + n2` given by its metric.
pub fn energy_test_with(
    n1: usize,
    n2: usize,
    dist: impl Fn(usize, usize) -> f64 + Sync,
    resamples: usize,
    stream: RngStream,
) -> EnergyTest {
    let a: Vec<usize> = (0..n1).collect();
    let b: Vec<usize> = (n1..n1 + n2).collect();
    let statistic = energy_indices(&a, &b, &dist);
    let mut rng = stream.rng();
    let null: Vec<f64> = (0..resamples)
        .map(|_| {
            let draw = |k: usize, rng: &mut rand_chacha::ChaCha8Rng| -> Vec<usize> {
                (0..k).map(|_| rand::Rng::random_range(rng, 0..n1 + n2)).collect()
            };
            let ra = draw(n1, &mut rng);
            let rb = draw(n2, &mut rng);
            energy_indices(&ra, &rb, &dist)
        })
        .collect();
    let null_mean = stats::mean(&null);
    let null_sd = if null.len() > 1 { stats::std_dev(&null) } else { 0.0 };
    let threshold = null_mean + 3.0 * null_sd;
    EnergyTest { statistic, null_mean, null_sd, threshold, resamples, reject: statistic > threshold }
}

/// Energy distance between two samples of real unit vectors.
pub fn energy_distance(x: &[Vec<f64>], y: &[Vec<f64>]) -> f64 {
    let pooled: Vec<&[f64]> = x.iter().chain(y).map(|v| v.as_slice()).collect();
    let a: Vec<usize> = (0..x.len()).collect();
    let b: Vec<usize> = (x.len()..pooled.len()).collect();
    energy_indices(&a, &b, &|i, j| crate::linalg::fubini_real(pooled[i], pooled[j]))
}

/// Energy test between two empirical measures in the Fubini-Study metric of
/// their field.
pub fn energy_test<F: Field>(
    f: &F,
    x: &EmpiricalMeasure<F::Elem>,
    y: &EmpiricalMeasure<F::Elem>,
    resamples: usize,
    stream: RngStream,
) -> EnergyTest {
    if f.is_exact() {
        let pooled: Vec<&[F::Elem]> = x.points.iter().chain(&y.points).map(|p| p.vector()).collect();
        let logn: Vec<f64> = pooled.iter().map(|v| f.log_norm(v)).collect();
        let dist = |i: usize, j: usize| (f.log_norm(&wedge(pooled[i], pooled[j])) - logn[i] - logn[j]).exp().min(1.0);
        return energy_test_with(x.len(), y.len(), dist, resamples, stream);
    }
    let mut pooled = x.real_points(f);
    pooled.extend(y.real_points(f));
    let d = pooled.first().map_or(0, |v| v.len());
    let flat: Vec<f64> = pooled.concat();
    let dist = |i: usize, j: usize| crate::linalg::fubini_real(&flat[i * d..i * d + d], &flat[j * d..j * d + d]);
    energy_test_with(x.len(), y.len(), dist, resamples, stream)
}

/// One-step pushforward `mu * nu_hat`: each point moved by an independent
/// draw from `mu`.
pub fn push_once<F: Field>(spec: &MeasureSpec<F>, nu: &EmpiricalMeasure<F::Elem>, stream: RngStream) -> EmpiricalMeasure<F::Elem> {
    let draws = sample(spec, stream, nu.len());
    let points = nu.points.iter().zip(draws).map(|(p, k)| p.act(&spec.field, &spec.atoms[k])).collect();
    EmpiricalMeasure { points, provenance: Provenance { sampler: "push-once".into(), ..nu.provenance.clone() } }
}

/// Energy test of `nu_hat` against its one-step pushforward.
pub fn stationarity_residual<F: Field>(
    spec: &MeasureSpec<F>,
    nu: &EmpiricalMeasure<F::Elem>,
    resamples: usize,
    stream: RngStream,
) -> Result<EnergyTest> {
    if nu.is_empty() {
        return Err(Error::InvalidArgument("empty measure".into()));
    }
    let pushed = push_once(spec, nu, stream.child("push"));
    Ok(energy_test(&spec.field, nu, &pushed, resamples, stream.child("null")))
}

/// Fraction of samples within Fubini-Study distance `eps` of `[W]`.
pub fn subspace_mass<F: Field>(f: &F, nu: &EmpiricalMeasure<F::Elem>, w: &Subspace<F::Elem>, eps: f64) -> Result<f64> {
    if nu.is_empty() {
        return Ok(0.0);
    }
    if w.is_zero() {
        return Err(Error::DegenerateSubspace("zero subspace"));
    }
    if w.is_full() {
        return Ok(1.0);
    }
    let sd = SubspaceDistance::new(f, w)?;
    let hits = nu.points.iter().filter(|p| sd.distance(p.vector()) <= eps).count();
    Ok(hits as f64 / nu.len() as f64)
}

/// Image of `nu_hat` in `P(V/L)`, in the coordinates of the orthogonal
/// complement of `L`.
pub fn quotient_marginal<F: Field>(f: &F, nu: &EmpiricalMeasure<F::Elem>, l: &Subspace<F::Elem>) -> Result<EmpiricalMeasure<F::Elem>> {
    let chart = SkewChart::new(f, l.clone())?;
    let points = nu
        .points
        .iter()
        .map(|p| ProjPoint::new(f, &chart.to_chart(p)?.xi))
        .collect::<Result<Vec<_>>>()?;
    Ok(EmpiricalMeasure { points, provenance: Provenance { sampler: "quotient-marginal".into(), ..nu.provenance.clone() } })
}

/// Parameters of the boundary-convergence diagnostic.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryParams {
    pub n_grid: Vec<usize>,
    /// Independent walks `omega`.
    pub paths: usize,
    /// Points of `nu_hat` used for the pairwise diameters.
    pub max_points: usize,
    pub resamples: usize,
}

impl Default for BoundaryParams {
    fn default() -> Self {
        BoundaryParams { n_grid: default_grid(), paths: 64, max_points: 48, resamples: stats::DEFAULT_BOOTSTRAP }
    }
}

/// `10, 20, ..., 200`.
pub fn default_grid() -> Vec<usize> {
    (1..=20).map(|k| 10 * k).collect()
}

/// Median pairwise distance of `R_n nu_hat` along the grid, median over paths.
///
/// Distances are evaluated as `||L2(R_n)(x ^ y)|| / (||R_n x|| ||R_n y||)` so
/// that they stay accurate far below the rounding level of the points.
pub fn boundary_convergence<F: Field>(
    spec: &MeasureSpec<F>,
    nu: &EmpiricalMeasure<F::Elem>,
    params: &BoundaryParams,
    stream: RngStream,
) -> DecayCurve {
    let f = &spec.field;
    let d = spec.dim();
    let m = nu.len().min(params.max_points);
    let pts: Vec<&[F::Elem]> = nu.points[..m].iter().map(|p| p.vector()).collect();
    let mut pairs = Vec::new();
    for i in 0..m {
        for j in i + 1..m {
            pairs.push((i, j, wedge(pts[i], pts[j])));
        }
    }
    let wedges: Vec<Matrix<F::Elem>> = spec.atoms.iter().map(wedge_square).collect();
    let d2 = d * (d.saturating_sub(1)) / 2;
    let n_max = params.n_grid.iter().copied().max().unwrap_or(0);
    let values = par_trials(params.paths, stream.child("paths"), |_, st| {
        let draws = sample(spec, st, n_max);
        let mut r = WalkState::new(f.clone(), d);
        let mut w = WalkState::new(f.clone(), d2.max(1));
        let mut out = Vec::with_capacity(params.n_grid.len());
        let mut step = 0;
        for &target in &params.n_grid {
            while step < target {
                r.step_right(&spec.atoms[draws[step]]);
                if d2 > 0 {
                    w.step_right(&wedges[draws[step]]);
                }
                step += 1;
            }
            if pairs.is_empty() {
                out.push(0.0);
                continue;
            }
            let ln: Vec<f64> = pts.iter().map(|x| f.log_norm(&r.product().mul_vec(x)) + r.log_scale()).collect();
            let dists: Vec<f64> = pairs
                .iter()
                .map(|(i, j, v)| {
                    let num = f.log_norm(&w.product().mul_vec(v)) + w.log_scale();
                    (num - ln[*i] - ln[*j]).exp().min(1.0)
                })
                .collect();
            out.push(stats::median(&dists));
        }
        out
    });
    let mut rng = stream.child("bootstrap").rng();
    DecayCurve::from_trials(params.n_grid.clone(), &values, Aggregate::Median, params.resamples, &mut rng)
}
