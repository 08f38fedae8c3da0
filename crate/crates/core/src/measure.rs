//! Finitely supported probability measures on GL(V) and reproducible sampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::linalg::{elim, Matrix};

pub const WEIGHT_TOL: f64 = 1e-12;

/// Atoms with positive weights. Construction does not validate; call
/// [`MeasureSpec::validate`] or [`MeasureSpec::checked`].
#[derive(Debug, Clone)]
pub struct MeasureSpec<F: Field> {
    pub field: F,
    pub atoms: Vec<Matrix<F::Elem>>,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub dimension: usize,
    pub atom_invertible: Vec<bool>,
    pub weight_sum: f64,
    pub errors: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.errors.is_empty()
    }
}

impl<F: Field> MeasureSpec<F> {
    pub fn new(field: F, atoms: Vec<Matrix<F::Elem>>, weights: Vec<f64>) -> Self {
        MeasureSpec { field, atoms, weights }
    }

    pub fn uniform(field: F, atoms: Vec<Matrix<F::Elem>>) -> Self {
        let w = 1.0 / atoms.len().max(1) as f64;
        let weights = vec![w; atoms.len()];
        MeasureSpec { field, atoms, weights }
    }

    pub fn dirac(field: F, g: Matrix<F::Elem>) -> Self {
        MeasureSpec { field, atoms: vec![g], weights: vec![1.0] }
    }

    pub fn checked(self) -> Result<Self> {
        let r = self.validate();
        if r.is_valid() {
            Ok(self)
        } else {
            Err(Error::InvalidMeasure(r.errors.join("; ")))
        }
    }

    pub fn dim(&self) -> usize {
        self.atoms.first().map_or(0, |a| a.rows())
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn validate(&self) -> ValidationReport {
        let mut errors = Vec::new();
        let d = self.dim();
        if self.atoms.is_empty() {
            errors.push("measure has no atoms".to_string());
        }
        if let Err(e) = self.field.spec().validate() {
            errors.push(e.to_string());
        }
        let mut atom_invertible = Vec::with_capacity(self.atoms.len());
        for (i, a) in self.atoms.iter().enumerate() {
            if !a.is_square() || a.rows() != d {
                errors.push(format!("atom {i} is not {d}x{d}"));
                atom_invertible.push(false);
                continue;
            }
            let inv = elim::is_invertible(&self.field, a);
            if !inv {
                errors.push(format!("atom {i} not invertible"));
            }
            atom_invertible.push(inv);
        }
        if self.weights.len() != self.atoms.len() {
            errors.push(format!("{} weights for {} atoms", self.weights.len(), self.atoms.len()));
        }
        if let Some(w) = self.weights.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
            errors.push(format!("weight {w} is not positive"));
        }
        let weight_sum: f64 = self.weights.iter().sum();
        if (weight_sum - 1.0).abs() > WEIGHT_TOL {
            errors.push(format!("weights sum \u{2260} 1 (sum = {weight_sum})"));
        }
        ValidationReport { dimension: d, atom_invertible, weight_sum, errors }
    }

    /// Pushforward by `g -> g^t`.
    pub fn transpose(&self) -> Self {
        MeasureSpec {
            field: self.field.clone(),
            atoms: self.atoms.iter().map(Matrix::transpose).collect(),
            weights: self.weights.clone(),
        }
    }

    /// Same weights, atoms replaced by `phi(g)`.
    pub fn map_atoms<G: Field>(&self, field: G, phi: impl Fn(&Matrix<F::Elem>) -> Matrix<G::Elem>) -> MeasureSpec<G> {
        MeasureSpec { field, atoms: self.atoms.iter().map(phi).collect(), weights: self.weights.clone() }
    }

    /// Conjugation `g -> h g h^-1` of every atom.
    pub fn conjugate(&self, h: &Matrix<F::Elem>) -> Result<Self> {
        let hinv = elim::inverse(&self.field, h)?;
        Ok(self.map_atoms(self.field.clone(), |g| h.matmul(g).matmul(&hinv)))
    }

    pub fn sampler(&self) -> AtomSampler {
        AtomSampler::new(&self.weights)
    }

    pub fn to_f64(&self) -> Vec<Matrix<f64>> {
        self.atoms.iter().map(|a| a.to_f64(&self.field)).collect()
    }
}

/// Inverse-CDF sampler over atom indices.
#[derive(Debug, Clone)]
pub struct AtomSampler {
    cumulative: Vec<f64>,
}

impl AtomSampler {
    pub fn new(weights: &[f64]) -> Self {
        let total: f64 = weights.iter().sum();
        let mut acc = 0.0;
        let cumulative = weights
            .iter()
            .map(|w| {
                acc += w / total;
                acc
            })
            .collect();
        AtomSampler { cumulative }
    }

    #[inline]
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        if self.cumulative.len() == 1 {
            return 0;
        }
        let u: f64 = rng.random();
        self.cumulative.partition_point(|c| *c <= u).min(self.cumulative.len() - 1)
    }
}

/// Reproducible random stream keyed by `(master_seed, stream_index)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RngStream {
    pub master_seed: u64,
    pub stream_index: u64,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        RngStream { master_seed, stream_index }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.master_seed);
        r.set_stream(self.stream_index);
        r
    }

    /// Child stream `i`; children of distinct parents or indices do not collide
    /// in practice.
    pub fn substream(&self, i: u64) -> RngStream {
        RngStream { master_seed: self.master_seed, stream_index: splitmix(self.stream_index ^ splitmix(i.wrapping_add(1))) }
    }

    /// Named child stream, for separating the phases of one computation.
    pub fn child(&self, label: &str) -> RngStream {
        let h = label.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3));
        self.substream(h)
    }
}

/// I.i.d. atom indices drawn by weight; a pure function of its inputs.
pub fn sample<F: Field>(spec: &MeasureSpec<F>, stream: RngStream, n: usize) -> Vec<usize> {
    let s = spec.sampler();
    let mut rng = stream.rng();
    (0..n).map(|_| s.draw(&mut rng)).collect()
}

/// Runs `job(i, stream_i)` for `i < trials` in parallel, in trial order.
pub fn par_trials<T: Send>(trials: usize, stream: RngStream, job: impl Fn(usize, RngStream) -> T + Sync + Send) -> Vec<T> {
    (0..trials).into_par_iter().map(|i| job(i, stream.substream(i as u64))).collect()
}
