//! Small statistics kit: means, bootstrap intervals, least-squares slopes.

use rand::Rng;
use serde::Serialize;

/// Two-sided 99% standard normal quantile.
pub const Z99: f64 = 2.575_829_303_548_901;

pub const DEFAULT_BOOTSTRAP: usize = 200;

pub fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        return f64::NAN;
    }
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample standard deviation (n - 1 denominator).
pub fn std_dev(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let m = mean(x);
    (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() - 1) as f64).sqrt()
}

pub fn stderr(x: &[f64]) -> f64 {
    if x.is_empty() {
        return f64::NAN;
    }
    std_dev(x) / (x.len() as f64).sqrt()
}

/// Linear-interpolated quantile of unsorted data.
pub fn quantile(x: &[f64], q: f64) -> f64 {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    quantile_sorted(&s, q)
}

pub fn quantile_sorted(s: &[f64], q: f64) -> f64 {
    if s.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (s.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    s[lo] + (s[hi] - s[lo]) * (pos - lo as f64)
}

pub fn median(x: &[f64]) -> f64 {
    quantile(x, 0.5)
}

/// Point estimate with a bootstrap standard error and percentile interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub estimate: f64,
    pub stderr: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn exact(x: f64) -> Self {
        Interval { estimate: x, stderr: 0.0, lo: x, hi: x }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// Intervals separated with `self` strictly below `other`.
    pub fn below(&self, other: &Interval) -> bool {
        self.hi < other.lo
    }

    pub fn overlaps(&self, other: &Interval) -> bool {
        !(self.below(other) || other.below(self))
    }
}

/// Bootstrap of an arbitrary statistic over resampled index sets.
pub fn bootstrap<R: Rng + ?Sized>(
    n: usize,
    resamples: usize,
    rng: &mut R,
    mut stat: impl FnMut(&[usize]) -> f64,
) -> Vec<f64> {
    let mut idx = vec![0usize; n];
    (0..resamples)
        .map(|_| {
            for i in idx.iter_mut() {
                *i = rng.random_range(0..n);
            }
            stat(&idx)
        })
        .collect()
}

/// 99% percentile bootstrap interval for the mean.
pub fn mean_interval<R: Rng + ?Sized>(x: &[f64], resamples: usize, rng: &mut R) -> Interval {
    let m = mean(x);
    if x.len() < 2 || x.iter().all(|v| *v == x[0]) {
        return Interval::exact(m);
    }
    let boot = bootstrap(x.len(), resamples, rng, |idx| idx.iter().map(|&i| x[i]).sum::<f64>() / idx.len() as f64);
    let mut s = boot.clone();
    s.sort_by(f64::total_cmp);
    let se = std_dev(&boot);
    // the percentile interval is widened to the normal one when the resample is small
    let lo = quantile_sorted(&s, 0.005).min(m - Z99 * se);
    let hi = quantile_sorted(&s, 0.995).max(m + Z99 * se);
    Interval { estimate: m, stderr: se, lo, hi }
}

/// Least-squares line `y = slope * x + intercept`; returns the RMS residual too.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    assert_eq!(x.len(), y.len());
    let mx = mean(x);
    let my = mean(y);
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - slope * a - intercept).powi(2)).sum();
    (slope, intercept, (rss / x.len().max(1) as f64).sqrt())
}

/// Joint 99% agreement of two estimates with independent standard errors.
pub fn agree(a: f64, se_a: f64, b: f64, se_b: f64) -> bool {
    (a - b).abs() <= Z99 * (se_a * se_a + se_b * se_b).sqrt() + 1e-12 * a.abs().max(b.abs()).max(1.0)
}

/// Slope of `ln stat` against `n` over the positive entries.
pub fn log_slope(n: &[usize], stat: &[f64]) -> Option<(f64, f64, f64)> {
    let (x, y): (Vec<f64>, Vec<f64>) =
        n.iter().zip(stat).filter(|(_, s)| **s > 0.0 && s.is_finite()).map(|(k, s)| (*k as f64, s.ln())).unzip();
    (x.len() >= 2).then(|| linear_fit(&x, &y))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Aggregate {
    Mean,
    Median,
}

impl Aggregate {
    fn apply(self, x: &[f64]) -> f64 {
        match self {
            Aggregate::Mean => mean(x),
            Aggregate::Median => median(x),
        }
    }
}

/// A statistic tracked along a grid of walk lengths, with a log-linear fit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayCurve {
    pub n: Vec<usize>,
    pub stat: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Slope of `ln stat` in `n`; `-inf` when the statistic vanishes.
    pub slope: f64,
    pub slope_ci: (f64, f64),
    pub residual: f64,
}

impl DecayCurve {
    /// `values[trial][k]` is the observation at `n[k]`; trials are resampled
    /// jointly for the slope interval.
    pub fn from_trials<R: Rng + ?Sized>(
        n: Vec<usize>,
        values: &[Vec<f64>],
        agg: Aggregate,
        resamples: usize,
        rng: &mut R,
    ) -> Self {
        let k = n.len();
        let column = |idx: &[usize], j: usize| idx.iter().map(|&t| values[t][j]).collect::<Vec<f64>>();
        let all: Vec<usize> = (0..values.len()).collect();
        let stat: Vec<f64> = (0..k).map(|j| agg.apply(&column(&all, j))).collect();
        let mut boot_stats = vec![Vec::with_capacity(resamples); k];
        let slopes: Vec<f64> = if values.len() < 2 {
            Vec::new()
        } else {
            bootstrap(values.len(), resamples, rng, |idx| {
                let s: Vec<f64> = (0..k).map(|j| agg.apply(&column(idx, j))).collect();
                for (j, v) in s.iter().enumerate() {
                    boot_stats[j].push(*v);
                }
                log_slope(&n, &s).map_or(f64::NAN, |f| f.0)
            })
        };
        let stderr = boot_stats.iter().map(|b| if b.len() > 1 { std_dev(b) } else { 0.0 }).collect();
        let Some((slope, _, residual)) = log_slope(&n, &stat) else {
            return DecayCurve { n, stat, stderr, slope: f64::NEG_INFINITY, slope_ci: (f64::NEG_INFINITY, f64::NEG_INFINITY), residual: 0.0 };
        };
        let mut finite: Vec<f64> = slopes.into_iter().filter(|s| s.is_finite()).collect();
        let slope_ci = if finite.len() < 2 {
            (slope, slope)
        } else {
            let se = std_dev(&finite);
            finite.sort_by(f64::total_cmp);
            (quantile_sorted(&finite, 0.005).min(slope - Z99 * se), quantile_sorted(&finite, 0.995).max(slope + Z99 * se))
        };
        DecayCurve { n, stat, stderr, slope, slope_ci, residual }
    }

    /// Whether `stat` strictly decreases along the grid.
    pub fn strictly_decreasing(&self) -> bool {
        self.stat.windows(2).all(|w| w[1] < w[0])
    }
}
