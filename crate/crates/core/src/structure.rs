//! Invariant-subspace data of the semigroup generated by the atoms: algebra
//! closure, cyclic modules, the subspaces 𝓛_μ and 𝓤_μ, the Furstenberg-Kifer
//! filtration and the duality with the transposed measure.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::linalg::{elim::IncrementalBasis, subspace_view, unit_vector, Matrix, Subspace, SubspaceView};
use crate::measure::{MeasureSpec, RngStream};
use crate::stats::Interval;
use crate::walk::{lyapunov_spectrum, GapEstimate, SpectrumEstimate};

/// Spanning set of the unital algebra generated by some matrices.
#[derive(Debug, Clone)]
pub struct AlgebraBasis<E> {
    pub basis: Vec<Matrix<E>>,
}

impl<E> AlgebraBasis<E> {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }
}

pub fn algebra_closure<F: Field>(f: &F, generators: &[Matrix<F::Elem>]) -> AlgebraBasis<F::Elem> {
    let d = generators.first().map_or(0, |g| g.rows());
    let mut span = IncrementalBasis::new(f.clone(), d * d);
    let mut basis = vec![Matrix::<F::Elem>::identity(d)];
    span.insert(basis[0].entries());
    let mut next = 0;
    while next < basis.len() {
        let m = basis[next].clone();
        next += 1;
        for g in generators {
            let w = g.matmul(&m);
            // unit scale keeps the relative rank tolerance meaningful
            let Ok((_, unit)) = f.polar(w.entries()) else {
                continue;
            };
            if span.insert(&unit) {
                basis.push(Matrix::from_vec(d, d, unit).expect("square"));
            }
        }
    }
    AlgebraBasis { basis }
}

/// The cyclic module `A v`: the smallest subspace containing `v` stable under
/// every generator.
pub fn minimal_invariant_subspace<F: Field>(f: &F, alg: &AlgebraBasis<F::Elem>, v: &[F::Elem]) -> Result<Subspace<F::Elem>> {
    let images: Vec<Vec<F::Elem>> = alg.basis.iter().map(|m| m.mul_vec(v)).collect();
    Subspace::span(f, &images, v.len())
}

pub fn check_invariant<F: Field>(spec: &MeasureSpec<F>, w: &Subspace<F::Elem>) -> Result<()> {
    if spec.atoms.iter().all(|g| w.is_invariant(&spec.field, g)) {
        Ok(())
    } else {
        Err(Error::NotInvariant)
    }
}

/// Image measure of the restrictions to an invariant subspace.
pub fn restrict_measure<F: Field>(spec: &MeasureSpec<F>, w: &Subspace<F::Elem>) -> Result<MeasureSpec<F>> {
    let atoms = spec.atoms.iter().map(|g| w.restrict(&spec.field, g)).collect::<Result<Vec<_>>>()?;
    Ok(MeasureSpec::new(spec.field.clone(), atoms, spec.weights.clone()))
}

/// Image measure on the quotient `V / W`.
pub fn quotient_measure<F: Field>(spec: &MeasureSpec<F>, w: &Subspace<F::Elem>) -> Result<MeasureSpec<F>> {
    let atoms = spec.atoms.iter().map(|g| w.quotient(&spec.field, g)).collect::<Result<Vec<_>>>()?;
    Ok(MeasureSpec::new(spec.field.clone(), atoms, spec.weights.clone()))
}

/// Top exponent of the walk restricted to `W`.
pub fn exponent_of_subspace<F: Field>(
    spec: &MeasureSpec<F>,
    w: &Subspace<F::Elem>,
    n: usize,
    trials: usize,
    stream: RngStream,
) -> Result<Interval> {
    check_invariant(spec, w)?;
    if w.is_zero() {
        return Err(Error::DegenerateSubspace("zero subspace"));
    }
    let r = restrict_measure(spec, w)?;
    Ok(lyapunov_spectrum(&r, n, trials, stream).top())
}

#[derive(Debug, Clone, Copy)]
pub struct StructureParams {
    pub n: usize,
    pub trials: usize,
    /// Random cyclic generators; `None` means `4 d`.
    pub random_vectors: Option<usize>,
}

impl Default for StructureParams {
    fn default() -> Self {
        StructureParams { n: 1000, trials: 200, random_vectors: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// 99% intervals separate the exponent below `lambda_1`.
    Below,
    /// The whole space.
    Top,
    /// Not separated from `lambda_1`; counted on the top side.
    Undecided,
}

#[derive(Debug, Clone)]
pub struct Candidate<E> {
    pub subspace: Subspace<E>,
    pub exponent: Interval,
    pub verdict: Verdict,
}

/// One Furstenberg-Kifer level: vectors of `space` outside the next level grow
/// at rate `beta`.
#[derive(Debug, Clone)]
pub struct FkLevel<E> {
    pub beta: Interval,
    pub space: Subspace<E>,
}

#[derive(Debug, Clone)]
pub struct StructureReport<E> {
    pub spectrum: SpectrumEstimate,
    pub gap: GapEstimate,
    pub l_mu: Subspace<E>,
    /// Omitted when the gap is not certified.
    pub u_mu: Option<Subspace<E>>,
    pub fk_levels: Vec<FkLevel<E>>,
    pub candidates: Vec<Candidate<E>>,
    pub duality_ok: Option<bool>,
}

impl<E: crate::field::Scalar> StructureReport<E> {
    pub fn gap_certified(&self) -> bool {
        self.gap.simple_top
    }

    pub fn undecided(&self) -> usize {
        self.candidates.iter().filter(|c| c.verdict == Verdict::Undecided).count()
    }
}

/// Exponents closer than this are never separated, whatever the intervals say.
pub const SEPARATION_TOL: f64 = 1e-9;

fn separated(e: &Interval, top: &Interval) -> bool {
    e.hi < top.lo - SEPARATION_TOL
}

/// Cap on the candidate pool; reached only when many subspaces are invariant.
pub const MAX_POOL: usize = 64;

fn candidate_pool<F: Field>(spec: &MeasureSpec<F>, count: usize, stream: RngStream) -> Result<Vec<Subspace<F::Elem>>> {
    let f = &spec.field;
    let d = spec.dim();
    let alg = algebra_closure(f, &spec.atoms);
    let mut rng = stream.child("candidates").rng();
    let mut vectors: Vec<Vec<F::Elem>> = (0..d).map(|i| unit_vector(d, i)).collect();
    for _ in 0..count {
        vectors.push((0..d).map(|_| f.random_elem(&mut rng)).collect());
    }
    let mut pool: Vec<Subspace<F::Elem>> = Vec::new();
    for v in vectors {
        if v.iter().all(|x| f.abs(x) == 0.0) {
            continue;
        }
        let w = minimal_invariant_subspace(f, &alg, &v)?;
        if !pool.iter().any(|p| p.equals(f, &w)) {
            pool.push(w);
        }
    }
    // sums and intersections of cyclic modules are invariant too
    let cyclic = pool.len();
    'outer: for i in 0..cyclic {
        for j in 0..i {
            for w in [pool[i].sum(f, &pool[j])?, pool[i].intersection(f, &pool[j])?] {
                if pool.len() >= MAX_POOL {
                    break 'outer;
                }
                if !w.is_zero() && !pool.iter().any(|p| p.equals(f, &w)) {
                    pool.push(w);
                }
            }
        }
    }
    pool.sort_by_key(|w| w.dim());
    Ok(pool)
}

/// `𝓛_μ` only, with the candidate table; no recursion.
fn top_level<F: Field>(
    spec: &MeasureSpec<F>,
    spectrum: &SpectrumEstimate,
    params: &StructureParams,
    stream: RngStream,
) -> Result<(Subspace<F::Elem>, Option<Subspace<F::Elem>>, Vec<Candidate<F::Elem>>)> {
    let f = &spec.field;
    let d = spec.dim();
    let count = params.random_vectors.unwrap_or(4 * d);
    let pool = candidate_pool(spec, count, stream)?;
    let top = spectrum.top();
    let mut candidates = Vec::with_capacity(pool.len());
    for (i, w) in pool.into_iter().enumerate() {
        let (exponent, verdict) = if w.is_full() {
            (top, Verdict::Top)
        } else {
            let e = exponent_of_subspace(spec, &w, params.n, params.trials, stream.substream(i as u64))?;
            (e, if separated(&e, &top) { Verdict::Below } else { Verdict::Undecided })
        };
        candidates.push(Candidate { subspace: w, exponent, verdict });
    }
    let mut l_mu = Subspace::zero(d);
    let mut u_mu = Subspace::full(f, d);
    for c in &candidates {
        match c.verdict {
            Verdict::Below => l_mu = l_mu.sum(f, &c.subspace)?,
            _ => u_mu = u_mu.intersection(f, &c.subspace)?,
        }
    }
    Ok((l_mu, Some(u_mu), candidates))
}

pub fn compute_structure<F: Field>(spec: &MeasureSpec<F>, params: &StructureParams, stream: RngStream) -> Result<StructureReport<F::Elem>> {
    let spec = spec.clone().checked()?;
    let f = spec.field.clone();
    let d = spec.dim();
    let spectrum = lyapunov_spectrum(&spec, params.n, params.trials, stream.child("full"));
    let gap = GapEstimate::from_spectrum(&spectrum, stream);
    let (l_mu, u_mu, candidates) = top_level(&spec, &spectrum, params, stream.child("level0"))?;

    let mut fk_levels = vec![FkLevel { beta: spectrum.top(), space: Subspace::full(&f, d) }];
    let mut current = l_mu.clone();
    let mut depth = 1u64;
    while !current.is_zero() {
        let restricted = restrict_measure(&spec, &current)?;
        let rs = lyapunov_spectrum(&restricted, params.n, params.trials, stream.child("level").substream(depth));
        fk_levels.push(FkLevel { beta: rs.top(), space: current.clone() });
        let (inner, _, _) = top_level(&restricted, &rs, params, stream.child("inner").substream(depth))?;
        // back to ambient coordinates through the basis of `current`
        let vecs: Vec<Vec<F::Elem>> = inner
            .basis()
            .iter()
            .map(|c| Matrix::from_cols(d, current.basis()).mul_vec(c))
            .collect();
        let next = Subspace::span(&f, &vecs, d)?;
        if next.dim() >= current.dim() {
            break;
        }
        current = next;
        depth += 1;
    }

    Ok(StructureReport {
        u_mu: if gap.simple_top { u_mu } else { None },
        spectrum,
        gap,
        l_mu,
        fk_levels,
        candidates,
        duality_ok: None,
    })
}

/// `Ann(𝓛_μ) = 𝓤_μ̌` and `Ann(𝓤_μ) = 𝓛_μ̌`, as exact subspace equalities.
pub fn duality_check<F: Field>(
    spec: &MeasureSpec<F>,
    report: &StructureReport<F::Elem>,
    params: &StructureParams,
    stream: RngStream,
) -> Result<bool> {
    let f = &spec.field;
    let u_mu = report.u_mu.as_ref().ok_or(Error::GapUncertified)?;
    let dual = compute_structure(&spec.transpose(), params, stream.child("dual"))?;
    let u_dual = dual.u_mu.as_ref().ok_or(Error::GapUncertified)?;
    let a = report.l_mu.annihilator(f)?.equals(f, u_dual);
    let b = u_mu.annihilator(f)?.equals(f, &dual.l_mu);
    Ok(a && b)
}

#[derive(Debug, Clone, Serialize)]
pub struct CandidateView {
    pub dim: usize,
    pub exponent: Interval,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Serialize)]
pub struct FkLevelView {
    pub beta: Interval,
    pub space: SubspaceView,
}

#[derive(Debug, Clone, Serialize)]
pub struct StructureView {
    pub gap_certified: bool,
    pub flag: Option<&'static str>,
    pub l_mu: SubspaceView,
    pub u_mu: Option<SubspaceView>,
    pub fk_levels: Vec<FkLevelView>,
    pub spectrum: SpectrumEstimate,
    pub gap: GapEstimate,
    pub candidates: Vec<CandidateView>,
    pub undecided: usize,
    pub duality_ok: Option<bool>,
}

pub fn structure_view<F: Field>(f: &F, r: &StructureReport<F::Elem>) -> StructureView {
    StructureView {
        gap_certified: r.gap_certified(),
        flag: if r.gap_certified() { None } else { Some("gap uncertified") },
        l_mu: subspace_view(f, &r.l_mu),
        u_mu: r.u_mu.as_ref().map(|u| subspace_view(f, u)),
        fk_levels: r.fk_levels.iter().map(|l| FkLevelView { beta: l.beta, space: subspace_view(f, &l.space) }).collect(),
        spectrum: r.spectrum.clone(),
        gap: r.gap,
        candidates: r
            .candidates
            .iter()
            .map(|c| CandidateView { dim: c.subspace.dim(), exponent: c.exponent, verdict: c.verdict })
            .collect(),
        undecided: r.undecided(),
        duality_ok: r.duality_ok,
    }
}
