//! Empirical decay estimates: convergence in direction, hyperplane hitting
//! probabilities, and the Hölder exponent of the stationary measure.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::linalg::{fubini_vec, hyperplane_distance, Subspace, SubspaceDistance};
use crate::measure::{par_trials, sample, MeasureSpec, RngStream};
use crate::stationary::EmpiricalMeasure;
use crate::stats::{self, Aggregate, DecayCurve};
use crate::walk::WalkState;

/// Exceptional subspaces of `mu` and of the transpose measure.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularityContext<E> {
    pub l_mu: Subspace<E>,
    pub l_mu_dual: Subspace<E>,
    pub gap_certified: bool,
}

fn check_point<F: Field>(f: &F, l: &Subspace<F::Elem>, x: &[F::Elem]) -> Result<()> {
    if x.len() != l.ambient() {
        return Err(Error::Dimension { expected: l.ambient(), got: x.len() });
    }
    f.polar(x)?;
    if l.contains(f, x) {
        return Err(Error::InExceptionalSubspace);
    }
    Ok(())
}

fn check_grid(n_grid: &[usize]) -> Result<usize> {
    if n_grid.is_empty() || n_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("n grid must be nonempty and strictly increasing".into()));
    }
    Ok(*n_grid.last().expect("nonempty"))
}

/// `E delta(R_n [x], Z_est)` along `n_grid`, where `Z_est` is the top
/// direction of the same trajectory at the largest `n`.
pub fn direction_convergence_rate<F: Field>(
    spec: &MeasureSpec<F>,
    ctx: &RegularityContext<F::Elem>,
    x: &[F::Elem],
    n_grid: &[usize],
    trials: usize,
    stream: RngStream,
) -> Result<DecayCurve> {
    if !ctx.gap_certified {
        return Err(Error::GapUncertified);
    }
    let f = &spec.field;
    check_point(f, &ctx.l_mu, x)?;
    let n_max = check_grid(n_grid)?;
    let d = spec.dim();
    let values = par_trials(trials, stream.child("direction"), |_, st| -> Result<Vec<f64>> {
        let draws = sample(spec, st, n_max);
        let mut w = WalkState::new(f.clone(), d);
        let mut images = Vec::with_capacity(n_grid.len());
        let mut step = 0;
        for &target in n_grid {
            while step < target {
                w.step_right(&spec.atoms[draws[step]]);
                step += 1;
            }
            images.push(w.product().mul_vec(x));
        }
        let z = f.top_direction(w.product())?;
        Ok(images.iter().map(|v| fubini_vec(f, v, &z)).collect())
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let mut rng = stream.child("bootstrap").rng();
    Ok(DecayCurve::from_trials(n_grid.to_vec(), &values, Aggregate::Mean, stats::DEFAULT_BOOTSTRAP, &mut rng))
}

/// Monte-Carlo estimate of `P[delta(L_n [x], [Ker f]) <= exp(-eps n)]`.
///
/// `stat` holds the raw frequencies; the slope is fitted to
/// `ln((k + 1/2) / (trials + 1))` so that empty counts stay finite.
pub fn hitting_probability_curve<F: Field>(
    spec: &MeasureSpec<F>,
    ctx: &RegularityContext<F::Elem>,
    x: &[F::Elem],
    phi: &[F::Elem],
    eps: f64,
    n_grid: &[usize],
    trials: usize,
    stream: RngStream,
) -> Result<DecayCurve> {
    let f = &spec.field;
    check_point(f, &ctx.l_mu, x)?;
    check_point(f, &ctx.l_mu_dual, phi)?;
    let n_max = check_grid(n_grid)?;
    if n_grid.len() > 64 {
        return Err(Error::InvalidArgument("at most 64 grid points".into()));
    }
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be positive".into()));
    }
    let masks: Vec<u64> = par_trials(trials, stream.child("hitting"), |_, st| {
        let draws = sample(spec, st, n_max);
        let mut v = x.to_vec();
        let mut mask = 0u64;
        let mut step = 0;
        for (k, &target) in n_grid.iter().enumerate() {
            while step < target {
                v = spec.atoms[draws[step]].mul_vec(&v);
                let (_, xi) = f.polar(&v).expect("invertible atoms");
                v = if f.is_exact() { xi.iter().map(|e| f.tidy(e)).collect() } else { xi };
                step += 1;
            }
            if hyperplane_distance(f, phi, &v) <= (-eps * target as f64).exp() {
                mask |= 1 << k;
            }
        }
        mask
    });
    let counts = |idx: &mut dyn Iterator<Item = usize>| -> Vec<usize> {
        let mut c = vec![0usize; n_grid.len()];
        for i in idx {
            let m = masks[i];
            for (k, ck) in c.iter_mut().enumerate() {
                *ck += ((m >> k) & 1) as usize;
            }
        }
        c
    };
    let corrected = |c: &[usize]| -> Vec<f64> { c.iter().map(|k| (*k as f64 + 0.5) / (trials as f64 + 1.0)).collect() };
    let base = counts(&mut (0..trials));
    let stat: Vec<f64> = base.iter().map(|k| *k as f64 / trials as f64).collect();
    let stderr = stat.iter().map(|p| (p * (1.0 - p) / trials as f64).sqrt()).collect();
    let (slope, _, residual) = stats::log_slope(n_grid, &corrected(&base)).unwrap_or((0.0, 0.0, 0.0));
    let mut rng = stream.child("bootstrap").rng();
    let mut slopes: Vec<f64> = (0..stats::DEFAULT_BOOTSTRAP)
        .map(|_| {
            let c = counts(&mut (0..trials).map(|_| rng.random_range(0..trials)));
            stats::log_slope(n_grid, &corrected(&c)).map_or(slope, |s| s.0)
        })
        .collect();
    let slope_ci = if n_grid.len() < 2 {
        (slope, slope)
    } else {
        let se = stats::std_dev(&slopes);
        slopes.sort_by(f64::total_cmp);
        (
            stats::quantile_sorted(&slopes, 0.005).min(slope - stats::Z99 * se),
            stats::quantile_sorted(&slopes, 0.995).max(slope + stats::Z99 * se),
        )
    };
    Ok(DecayCurve { n: n_grid.to_vec(), stat, stderr, slope, slope_ci, residual })
}

/// Dual vector `phi` (the hyperplane `Ker phi`) with its weight
/// `delta([phi], [L_mu_dual])`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedHyperplane<E> {
    pub phi: Vec<E>,
    pub weight: f64,
}

pub fn weighted_hyperplane<F: Field>(f: &F, phi: Vec<F::Elem>, l_mu_dual: &Subspace<F::Elem>) -> Result<WeightedHyperplane<F::Elem>> {
    f.polar(&phi)?;
    let weight = if l_mu_dual.is_zero() {
        1.0
    } else if l_mu_dual.is_full() {
        0.0
    } else {
        SubspaceDistance::new(f, l_mu_dual)?.distance(&phi)
    };
    Ok(WeightedHyperplane { phi, weight })
}

/// Duals `x^*` of `from_sample` points of `nu_hat` plus `random` generic
/// hyperplanes.
pub fn hyperplane_grid<F: Field>(
    f: &F,
    nu: &EmpiricalMeasure<F::Elem>,
    l_mu_dual: &Subspace<F::Elem>,
    from_sample: usize,
    random: usize,
    stream: RngStream,
) -> Result<Vec<WeightedHyperplane<F::Elem>>> {
    let d = l_mu_dual.ambient();
    let mut rng = stream.rng();
    let mut out = Vec::with_capacity(from_sample + random);
    let gauss = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<F::Elem> { (0..d).map(|_| f.random_elem(rng)).collect() };
    for _ in 0..from_sample.min(nu.len() * 4) {
        let x = nu.points[rng.random_range(0..nu.len())].vector().to_vec();
        if let Ok(h) = weighted_hyperplane(f, x, l_mu_dual) {
            out.push(h);
        }
    }
    while out.len() < from_sample.min(nu.len() * 4) + random {
        if let Ok(h) = weighted_hyperplane(f, gauss(&mut rng), l_mu_dual) {
            out.push(h);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HolderParams {
    pub alpha_grid: Vec<f64>,
    pub resamples: usize,
    /// Largest admissible weighted integral.
    pub threshold: f64,
    /// Largest admissible bootstrap coefficient of variation of the integral.
    pub max_spread: f64,
    /// Points of `nu_hat` used (a prefix).
    pub max_points: usize,
}

impl Default for HolderParams {
    fn default() -> Self {
        HolderParams {
            alpha_grid: (1..=40).map(|k| 0.05 * k as f64).collect(),
            resamples: 50,
            threshold: 1e6,
            max_spread: 1.0,
            max_points: 2000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolderEstimate {
    pub alpha_hat: f64,
    /// 99% bootstrap interval of `alpha_hat` (resampling `nu_hat`).
    pub alpha_ci: (f64, f64),
    /// `sup_H w_H * mean delta(x, H)^-alpha` per grid value.
    pub sup_integral: Vec<f64>,
    pub spread: Vec<f64>,
    /// Index of the hyperplane attaining the sup at `alpha_hat`.
    pub sup_hyperplane: Option<usize>,
}

fn sup_integral(logd: &[Vec<f64>], weights: &[f64], idx: &[usize], alpha: f64) -> (f64, usize) {
    let mut best = (0.0, 0);
    for (h, w) in weights.iter().enumerate() {
        let m = idx.iter().map(|&i| (-alpha * logd[i][h]).exp()).sum::<f64>() / idx.len() as f64;
        let v = w * m;
        if v > best.0 || v.is_nan() {
            best = (if v.is_nan() { f64::INFINITY } else { v }, h);
        }
    }
    best
}

/// Largest grid `alpha` such that every grid value up to it keeps the
/// weighted integral finite, below `threshold`, and stable under bootstrap.
pub fn holder_alpha_estimate<F: Field>(
    f: &F,
    nu: &EmpiricalMeasure<F::Elem>,
    hyperplanes: &[WeightedHyperplane<F::Elem>],
    params: &HolderParams,
    stream: RngStream,
) -> Result<HolderEstimate> {
    if nu.is_empty() || hyperplanes.is_empty() {
        return Err(Error::InvalidArgument("empty sample or hyperplane grid".into()));
    }
    let m = nu.len().min(params.max_points);
    let logd: Vec<Vec<f64>> = nu.points[..m]
        .iter()
        .map(|p| hyperplane_vector_logs(f, hyperplanes, p.vector()))
        .collect();
    let weights: Vec<f64> = hyperplanes.iter().map(|h| h.weight).collect();
    let all: Vec<usize> = (0..m).collect();
    let mut rng = stream.rng();
    let boots: Vec<Vec<usize>> = (0..params.resamples).map(|_| (0..m).map(|_| rng.random_range(0..m)).collect()).collect();

    let mut sup = Vec::with_capacity(params.alpha_grid.len());
    let mut spread = Vec::with_capacity(params.alpha_grid.len());
    let mut boot_vals: Vec<Vec<f64>> = Vec::with_capacity(params.alpha_grid.len());
    let mut alpha_hat = 0.0;
    let mut arg = None;
    let mut stable_prefix = true;
    for &alpha in &params.alpha_grid {
        let (s, h) = sup_integral(&logd, &weights, &all, alpha);
        let b: Vec<f64> = boots.iter().map(|idx| sup_integral(&logd, &weights, idx, alpha).0).collect();
        let cv = if s.is_finite() && b.iter().all(|v| v.is_finite()) && b.len() > 1 {
            stats::std_dev(&b) / stats::mean(&b).max(f64::MIN_POSITIVE)
        } else if s.is_finite() && b.len() <= 1 {
            0.0
        } else {
            f64::INFINITY
        };
        let ok = s.is_finite() && s <= params.threshold && cv <= params.max_spread;
        if stable_prefix && ok {
            alpha_hat = alpha;
            arg = Some(h);
        } else {
            stable_prefix = false;
        }
        sup.push(s);
        spread.push(cv);
        boot_vals.push(b);
    }
    // alpha_hat per resample, with the finiteness and threshold rule only
    let mut per_boot: Vec<f64> = (0..params.resamples)
        .map(|r| {
            let mut a = 0.0;
            for (k, &alpha) in params.alpha_grid.iter().enumerate() {
                let v = boot_vals[k][r];
                if v.is_finite() && v <= params.threshold {
                    a = alpha;
                } else {
                    break;
                }
            }
            a
        })
        .collect();
    per_boot.sort_by(f64::total_cmp);
    let alpha_ci = if per_boot.is_empty() {
        (alpha_hat, alpha_hat)
    } else {
        (stats::quantile_sorted(&per_boot, 0.005).min(alpha_hat), stats::quantile_sorted(&per_boot, 0.995).max(alpha_hat))
    };
    Ok(HolderEstimate { alpha_hat, alpha_ci, sup_integral: sup, spread, sup_hyperplane: arg })
}

fn hyperplane_vector_logs<F: Field>(f: &F, hyperplanes: &[WeightedHyperplane<F::Elem>], x: &[F::Elem]) -> Vec<f64> {
    hyperplanes.iter().map(|h| hyperplane_distance(f, &h.phi, x).ln()).collect()
}

/// CSV with columns `n,statistic,stderr`.
pub fn curve_csv(c: &DecayCurve) -> String {
    let mut out = String::from("n,statistic,stderr\n");
    for ((n, s), e) in c.n.iter().zip(&c.stat).zip(&c.stderr) {
        out.push_str(&format!("{n},{s},{e}\n"));
    }
    out
}
