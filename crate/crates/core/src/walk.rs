//! Left and right random walks with renormalization, and Lyapunov spectra by
//! blockwise QR deflation of the streamed product.

use serde::Serialize;

use crate::field::Field;
use crate::linalg::{wedge_square, Matrix};
use crate::measure::{par_trials, MeasureSpec, RngStream};
use crate::stats::{self, Interval};

/// Renormalization bound `C = e^16`.
pub const LOG_C: f64 = 16.0;
/// Steps between QR deflations.
pub const QR_BLOCK: usize = 8;

/// Renormalized product; the true product is `product * exp(log_scale)`
/// (over Q_p the scale is a power of p and the identity holds up to a unit
/// of modulus 1).
#[derive(Debug, Clone)]
pub struct WalkState<F: Field> {
    field: F,
    product: Matrix<F::Elem>,
    log_scale: f64,
    step: usize,
}

impl<F: Field> WalkState<F> {
    pub fn new(field: F, d: usize) -> Self {
        WalkState { field, product: Matrix::identity(d), log_scale: 0.0, step: 0 }
    }

    pub fn product(&self) -> &Matrix<F::Elem> {
        &self.product
    }

    pub fn log_scale(&self) -> f64 {
        self.log_scale
    }

    pub fn step(&self) -> usize {
        self.step
    }

    /// `ln ||true product||`.
    pub fn log_norm(&self) -> f64 {
        self.log_scale + self.field.log_op_norm(&self.product)
    }

    /// `L_{n+1} = g L_n`.
    pub fn step_left(&mut self, g: &Matrix<F::Elem>) {
        self.product = g.matmul(&self.product);
        self.settle();
    }

    /// `R_{n+1} = R_n g`.
    pub fn step_right(&mut self, g: &Matrix<F::Elem>) {
        self.product = self.product.matmul(g);
        self.settle();
    }

    fn settle(&mut self) {
        self.step += 1;
        let f = &self.field;
        if let Some((c, lc)) = f.renormalizer(self.product.entries(), LOG_C) {
            self.product = self.product.div_scalar(&c);
            self.log_scale += lc;
        }
        if f.is_exact() {
            self.product = self.product.map(|x| f.tidy(x));
        }
    }
}

/// Per-trial exponents, each list sorted in decreasing order.
pub fn spectrum_trial<F: Field>(spec: &MeasureSpec<F>, n: usize, stream: RngStream) -> Vec<f64> {
    let f = &spec.field;
    let d = spec.dim();
    let sampler = spec.sampler();
    let mut rng = stream.rng();
    let mut frame = Matrix::<F::Elem>::identity(d);
    let mut sums = vec![0.0; d];
    let mut block = Matrix::<F::Elem>::identity(d);
    let mut block_log = 0.0;
    let mut k = 0;
    for step in 0..n {
        let g = &spec.atoms[sampler.draw(&mut rng)];
        block = g.matmul(&block);
        if let Some((c, lc)) = f.renormalizer(block.entries(), LOG_C) {
            block = block.div_scalar(&c);
            block_log += lc;
        }
        if f.is_exact() {
            block = block.map(|x| f.tidy(x));
        }
        k += 1;
        if k == QR_BLOCK || step + 1 == n {
            let (q, logs) = f.iwasawa(&block.matmul(&frame));
            for (s, l) in sums.iter_mut().zip(&logs) {
                *s += l + block_log;
            }
            frame = if f.is_exact() { q.map(|x| f.tidy(x)) } else { q };
            block = Matrix::identity(d);
            block_log = 0.0;
            k = 0;
        }
    }
    let mut out: Vec<f64> = sums.iter().map(|s| s / n.max(1) as f64).collect();
    out.sort_by(|a, b| b.total_cmp(a));
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumEstimate {
    pub lambda: Vec<f64>,
    pub stderr: Vec<f64>,
    /// 99% bootstrap intervals.
    pub ci: Vec<(f64, f64)>,
    pub n_steps: usize,
    pub n_trials: usize,
    #[serde(skip)]
    pub per_trial: Vec<Vec<f64>>,
}

impl SpectrumEstimate {
    pub fn from_trials(per_trial: Vec<Vec<f64>>, n_steps: usize, stream: RngStream) -> Self {
        let d = per_trial.first().map_or(0, Vec::len);
        let mut rng = stream.child("bootstrap").rng();
        let mut lambda = Vec::with_capacity(d);
        let mut stderr = Vec::with_capacity(d);
        let mut ci = Vec::with_capacity(d);
        for i in 0..d {
            let col: Vec<f64> = per_trial.iter().map(|t| t[i]).collect();
            let iv = stats::mean_interval(&col, stats::DEFAULT_BOOTSTRAP, &mut rng);
            lambda.push(iv.estimate);
            stderr.push(iv.stderr);
            ci.push((iv.lo, iv.hi));
        }
        SpectrumEstimate { lambda, stderr, ci, n_steps, n_trials: per_trial.len(), per_trial }
    }

    pub fn exponent(&self, i: usize) -> Interval {
        Interval { estimate: self.lambda[i], stderr: self.stderr[i], lo: self.ci[i].0, hi: self.ci[i].1 }
    }

    pub fn top(&self) -> Interval {
        self.exponent(0)
    }

    /// Sum of the top `k` exponents with its bootstrap interval.
    pub fn partial_sum(&self, k: usize, stream: RngStream) -> Interval {
        let col: Vec<f64> = self.per_trial.iter().map(|t| t[..k].iter().sum()).collect();
        stats::mean_interval(&col, stats::DEFAULT_BOOTSTRAP, &mut stream.child("partial").rng())
    }

    pub fn csv(&self) -> String {
        let d = self.lambda.len();
        let mut s = String::from("trial,n");
        for i in 1..=d {
            s.push_str(&format!(",lambda_{i}"));
        }
        s.push('\n');
        for (t, row) in self.per_trial.iter().enumerate() {
            s.push_str(&format!("{t},{}", self.n_steps));
            for x in row {
                s.push_str(&format!(",{x:.12e}"));
            }
            s.push('\n');
        }
        s
    }
}

pub fn lyapunov_spectrum<F: Field>(spec: &MeasureSpec<F>, n: usize, trials: usize, stream: RngStream) -> SpectrumEstimate {
    let per_trial = par_trials(trials, stream.child("spectrum"), |_, s| spectrum_trial(spec, n, s));
    SpectrumEstimate::from_trials(per_trial, n, stream)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct GapEstimate {
    pub gap: f64,
    pub ci: (f64, f64),
    pub simple_top: bool,
}

impl GapEstimate {
    pub fn from_spectrum(est: &SpectrumEstimate, stream: RngStream) -> Self {
        if est.lambda.len() < 2 {
            return GapEstimate { gap: f64::INFINITY, ci: (f64::INFINITY, f64::INFINITY), simple_top: true };
        }
        let col: Vec<f64> = est.per_trial.iter().map(|t| t[0] - t[1]).collect();
        let iv = stats::mean_interval(&col, stats::DEFAULT_BOOTSTRAP, &mut stream.child("gap").rng());
        GapEstimate { gap: iv.estimate, ci: (iv.lo, iv.hi), simple_top: iv.lo > crate::structure::SEPARATION_TOL }
    }
}

pub fn top_gap<F: Field>(spec: &MeasureSpec<F>, n: usize, trials: usize, stream: RngStream) -> GapEstimate {
    GapEstimate::from_spectrum(&lyapunov_spectrum(spec, n, trials, stream), stream)
}

/// `(1/n) ln ||L_n x||` for one trajectory.
pub fn growth_rate_trial<F: Field>(spec: &MeasureSpec<F>, x: &[F::Elem], n: usize, stream: RngStream) -> f64 {
    let f = &spec.field;
    let sampler = spec.sampler();
    let mut rng = stream.rng();
    let mut v = x.to_vec();
    let mut log_scale = -f.log_norm(x);
    for _ in 0..n {
        v = spec.atoms[sampler.draw(&mut rng)].mul_vec(&v);
        if let Some((c, lc)) = f.renormalizer(&v, LOG_C) {
            v = v.iter().map(|e| e.clone() / c.clone()).collect();
            log_scale += lc;
        }
        if f.is_exact() {
            v = v.iter().map(|e| f.tidy(e)).collect();
        }
    }
    (log_scale + f.log_norm(&v)) / n.max(1) as f64
}

pub fn growth_rates<F: Field>(spec: &MeasureSpec<F>, x: &[F::Elem], n: usize, trials: usize, stream: RngStream) -> Vec<f64> {
    par_trials(trials, stream.child("growth"), |_, s| growth_rate_trial(spec, x, n, s))
}

/// Image of the measure under `g -> wedge^2 g`.
pub fn wedge_measure<F: Field>(spec: &MeasureSpec<F>) -> MeasureSpec<F> {
    spec.map_atoms(spec.field.clone(), wedge_square)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::field::{PadicField, RealField};
    use rand::Rng;

    fn real() -> RealField {
        RealField::default()
    }

    #[test]
    fn identity_walk_keeps_zero_scale() {
        let mut w = WalkState::new(real(), 3);
        for _ in 0..1000 {
            w.step_left(&Matrix::identity(3));
        }
        assert_eq!(w.log_scale(), 0.0);
        assert_eq!(w.step(), 1000);
    }

    #[test]
    fn diagonal_walk_scale_bookkeeping() {
        let mut w = WalkState::new(real(), 2);
        let g = Matrix::diag(&[2.0, 1.0]);
        for _ in 0..500 {
            w.step_right(&g);
        }
        assert!((w.log_norm() - 500.0 * 2f64.ln()).abs() < 1e-9);
        assert!(w.product().max_abs() <= LOG_C.exp());
    }

    #[test]
    fn renormalized_product_matches_naive() {
        let mut rng = RngStream::new(5, 0).rng();
        for _ in 0..20 {
            let mut w = WalkState::new(real(), 2);
            let mut naive = Matrix::<f64>::identity(2);
            for _ in 0..20 {
                let a: f64 = rng.random_range(-3.0..3.0);
                let b: f64 = rng.random_range(-3.0..3.0);
                let c: f64 = rng.random_range(0.2..3.0);
                // det 1 as a product of two triangular factors
                let g = Matrix::from_rows(vec![vec![c, a], vec![0.0, 1.0 / c]]).unwrap();
                let h = Matrix::from_rows(vec![vec![1.0, 0.0], vec![b, 1.0]]).unwrap();
                let g = g.matmul(&h);
                w.step_left(&g);
                naive = g.matmul(&naive);
            }
            let rec = w.product().scale(&w.log_scale().exp());
            assert!(rec.sub(&naive).frobenius() <= 1e-10 * naive.frobenius());
        }
    }

    #[test]
    fn diagonal_spectrum_is_exact() {
        let est = lyapunov_spectrum(&catalog::diag21(real()), 100, 4, RngStream::new(1, 0));
        assert!((est.lambda[0] - 2f64.ln()).abs() < 1e-14);
        assert!(est.lambda[1].abs() < 1e-14);
        let gap = GapEstimate::from_spectrum(&est, RngStream::new(1, 0));
        assert!((gap.gap - 2f64.ln()).abs() < 1e-14 && gap.simple_top);
    }

    #[test]
    fn identity_has_no_gap() {
        let g = top_gap(&catalog::identity(real(), 3), 50, 10, RngStream::new(1, 1));
        assert_eq!(g.gap, 0.0);
        assert!(!g.simple_top);
    }

    #[test]
    fn padic_diagonal_spectrum() {
        let f = PadicField::new(2).unwrap();
        let spec = MeasureSpec::dirac(f.clone(), Matrix::diag(&[crate::field::q(1, 4), crate::field::q(3, 1)]));
        let est = lyapunov_spectrum(&spec, 40, 2, RngStream::new(1, 0));
        // |1/4|_2 = 4, |3|_2 = 1
        assert!((est.lambda[0] - 4f64.ln()).abs() < 1e-12);
        assert!(est.lambda[1].abs() < 1e-12);
    }

    #[test]
    fn example1_quotient_has_positive_exponent() {
        let s = catalog::example1(real());
        let q = s.map_atoms(real(), |g| g.block(1, 3, 1, 3));
        let est = lyapunov_spectrum(&q, 1000, 100, RngStream::new(11, 0));
        assert!(est.ci[0].0 > 0.0);
    }

    #[test]
    fn example2_matches_quotient_and_restriction() {
        let s = catalog::example2(real());
        let q = s.map_atoms(real(), |g| g.block(1, 3, 1, 3));
        let full = lyapunov_spectrum(&s, 1000, 200, RngStream::new(12, 0));
        let quot = lyapunov_spectrum(&q, 1000, 200, RngStream::new(12, 1));
        assert!(stats::agree(full.lambda[0], full.stderr[0], quot.lambda[0], quot.stderr[0]));
        let restricted = s.map_atoms(real(), |g| g.block(0, 1, 0, 1));
        let r = lyapunov_spectrum(&restricted, 300, 5, RngStream::new(12, 2));
        assert!((r.lambda[0] - 0.5f64.ln()).abs() < 1e-12);
    }
}
