//! Acceptance suite: one PASS/FAIL line per criterion.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use projlab_core::field::q;
use projlab_core::jsr::compactness_certificate;
use projlab_core::limitset::{attractor_point_block, cloud_points, hausdorff, limit_set_sample, LimitSetParams};
use projlab_core::linalg::smith::in_gl_integral;
use projlab_core::linalg::{fubini_vec, svd, unit_vector, Subspace, SubspaceDistance};
use projlab_core::measure::{MeasureSpec, RngStream};
use projlab_core::regularity::{direction_convergence_rate, hitting_probability_curve, RegularityContext};
use projlab_core::skew::SkewChart;
use projlab_core::stationary::{
    energy_test, sample_stationary, stationarity_residual, EmpiricalMeasure, Sampler, StationaryContext, ENERGY_RESAMPLES,
};
use projlab_core::stats;
use projlab_core::structure::{compute_structure, duality_check, StructureParams};
use projlab_core::walk::{growth_rates, lyapunov_spectrum, top_gap, wedge_measure};
use projlab_core::{catalog, Field, Matrix, PadicField, RealField};
use rand::Rng;

type Q = <PadicField as Field>::Elem;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn real() -> RealField {
    RealField::default()
}

fn q2() -> PadicField {
    PadicField::new(2).unwrap()
}

fn examples() -> Vec<(u8, MeasureSpec<RealField>)> {
    (1..=3).map(|k| (k, catalog::example(k, real()).unwrap())).collect()
}

fn e1_line(d: usize) -> Subspace<f64> {
    Subspace::span(&real(), &[unit_vector(d, 0)], d).unwrap()
}

fn within(t: Duration, secs: u64) -> bool {
    t <= Duration::from_secs(secs)
}

fn c1_attractor() -> Outcome {
    let t = Instant::now();
    let spec = catalog::example3(real());
    let chart = SkewChart::new(&real(), e1_line(3)).unwrap();
    let s = attractor_point_block(&chart.blocks(&spec.atoms[2]).unwrap()).unwrap();
    let elapsed = t.elapsed();
    let t0 = 22.0 / (7.0 * 241f64.sqrt());
    let n = 241f64.sqrt();
    let xi0 = [-4.0 / n, 15.0 / n];
    let dt = (s.t[0] - t0).abs();
    let dxi = (s.xi[0] - xi0[0]).abs().max((s.xi[1] - xi0[1]).abs());
    outcome(
        dt <= 1e-9 && dxi <= 1e-9 && within(elapsed, 1),
        format!("t0 = {:.12}, |t0 - 22/(7 sqrt 241)| = {dt:.1e}, xi0 error {dxi:.1e}, {elapsed:.2?}", s.t[0]),
    )
}

fn c2_norm_certificate() -> Outcome {
    let t = Instant::now();
    let spec = catalog::example2(real());
    let chart = SkewChart::new(&real(), e1_line(3)).unwrap();
    let c1 = chart.blocks(&spec.atoms[0]).unwrap().c;
    let norm = svd::singular_values(&c1)[0];
    let expected = ((3.0 + 5f64.sqrt()) / 2.0).sqrt();
    let cert = compactness_certificate(&spec, &chart, 4).unwrap();
    let elapsed = t.elapsed();
    outcome(
        (norm - expected).abs() <= 1e-9 && cert.pass && cert.r_upper < 1.0 && cert.depth <= 4 && within(elapsed, 10),
        format!(
            "||C1||_2 = {norm:.12} (error {:.1e}); certificate pass = {}, r <= {:.5} at depth {} ({:?}), {elapsed:.2?}",
            (norm - expected).abs(),
            cert.pass,
            cert.r_upper,
            cert.depth,
            cert.norm_used
        ),
    )
}

fn c3_gap() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (k, spec) in examples() {
        let t = Instant::now();
        let g = top_gap(&spec, 2000, 400, RngStream::new(3, u64::from(k)));
        let el = t.elapsed();
        pass &= g.simple_top && within(el, 120);
        parts.push(format!("ex{k} gap {:.4} CI [{:.4}, {:.4}] {el:.1?}", g.gap, g.ci.0, g.ci.1));
    }
    let id = top_gap(&catalog::identity(real(), 3), 2000, 400, RngStream::new(3, 0));
    pass &= !id.simple_top;
    parts.push(format!("identity simple_top = {}", id.simple_top));
    outcome(pass, parts.join("; "))
}

fn c4_structure() -> Outcome {
    let f = real();
    let mut pass = true;
    let mut parts = Vec::new();
    for (k, spec) in examples() {
        let p = StructureParams::default();
        let r = compute_structure(&spec, &p, RngStream::new(4, u64::from(k))).unwrap();
        let l_ok = r.l_mu.equals(&f, &e1_line(3));
        let u_ok = r.u_mu.as_ref().is_some_and(|u| u.is_full());
        let dual = r.u_mu.is_some() && duality_check(&spec, &r, &p, RngStream::new(4, 10 + u64::from(k))).unwrap();
        pass &= l_ok && u_ok && dual;
        parts.push(format!("ex{k} L = span(e1): {l_ok}, U = R^3: {u_ok}, duality: {dual}"));
    }
    outcome(pass, parts.join("; "))
}

fn c5_fk_dichotomy() -> Outcome {
    let spec = catalog::example2(real());
    let s = RngStream::new(5, 0);
    let low = growth_rates(&spec, &unit_vector(3, 0), 2000, 50, s.child("e1"));
    let worst = low.iter().map(|r| (r - 0.5f64.ln()).abs()).fold(0.0, f64::max);
    let generic = growth_rates(&spec, &[0.3, 1.0, 0.7], 2000, 400, s.child("generic"));
    let g = stats::mean_interval(&generic, stats::DEFAULT_BOOTSTRAP, &mut s.child("boot").rng());
    let top = lyapunov_spectrum(&spec, 2000, 400, s.child("spectrum")).top();
    let agree = g.overlaps(&top);
    outcome(
        worst <= 1e-12 && agree,
        format!(
            "max |rate(e1) - ln 1/2| = {worst:.1e}; generic x: {:.5} [{:.5}, {:.5}] vs lambda1 {:.5} [{:.5}, {:.5}]",
            g.estimate, g.lo, g.hi, top.estimate, top.lo, top.hi
        ),
    )
}

fn c6_cocycle() -> Outcome {
    let f = real();
    let mut worst: f64 = 0.0;
    for (k, spec) in examples() {
        let chart = SkewChart::new(&f, e1_line(3)).unwrap();
        let mut rng = RngStream::new(6, u64::from(k)).rng();
        for _ in 0..1000 {
            let g1 = &spec.atoms[rng.random_range(0..spec.len())];
            let g2 = &spec.atoms[rng.random_range(0..spec.len())];
            let th: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let xi = [th.cos(), th.sin()];
            let lhs = chart.sigma_cocycle(&g1.matmul(g2), &xi).unwrap();
            let b2 = chart.blocks(g2).unwrap();
            let xi2 = chart.act_base(&b2, &xi);
            let rhs = chart.sigma_cocycle(g1, &xi2).unwrap().compose(&chart.sigma_cocycle(g2, &xi).unwrap());
            worst = worst.max(lhs.defect(&rhs));
        }
    }
    outcome(worst <= 1e-10, format!("max defect {worst:.2e} over 3 x 1000 triples"))
}

fn great_circle(n: usize) -> EmpiricalMeasure<f64> {
    let f = real();
    let pts = (0..n)
        .map(|i| {
            let th = std::f64::consts::PI * (i as f64 + 0.5) / n as f64;
            projlab_core::linalg::ProjPoint::new(&f, &[0.0, th.cos(), th.sin()]).unwrap()
        })
        .collect();
    EmpiricalMeasure::from_points(pts, "great-circle")
}

fn example2_context(seed: u64) -> (MeasureSpec<RealField>, StationaryContext<f64>) {
    let spec = catalog::example2(real());
    let r = compute_structure(&spec, &StructureParams::default(), RngStream::new(seed, 0)).unwrap();
    let ctx = StationaryContext::from_report(&r);
    (spec, ctx)
}

fn c7_stationarity() -> Outcome {
    let (spec, ctx) = example2_context(7);
    let s = RngStream::new(7, 1);
    let top = sample_stationary(&spec, &ctx, 200, 10_000, s, &Sampler::TopDirection).unwrap();
    let push = sample_stationary(&spec, &ctx, 200, 10_000, s, &Sampler::PushForward(vec![0.3, 1.0, 0.7])).unwrap();
    let f = real();
    let between = energy_test(&f, &top, &push, ENERGY_RESAMPLES, s.child("between"));
    let r_top = stationarity_residual(&spec, &top, ENERGY_RESAMPLES, s.child("r-top")).unwrap();
    let r_push = stationarity_residual(&spec, &push, ENERGY_RESAMPLES, s.child("r-push")).unwrap();
    let planted = stationarity_residual(&spec, &great_circle(2000), ENERGY_RESAMPLES, s.child("planted")).unwrap();
    let pass = !between.reject && !r_top.reject && !r_push.reject && planted.reject;
    outcome(
        pass,
        format!(
            "samplers {:.2e} < {:.2e}: {}; residual(top) {:.2e} < {:.2e}: {}; residual(push) {:.2e} < {:.2e}: {}; planted {:.2e} > {:.2e}: {}",
            between.statistic,
            between.threshold,
            !between.reject,
            r_top.statistic,
            r_top.threshold,
            !r_top.reject,
            r_push.statistic,
            r_push.threshold,
            !r_push.reject,
            planted.statistic,
            planted.threshold,
            planted.reject
        ),
    )
}

fn c8_limit_set() -> Outcome {
    let t = Instant::now();
    let (spec, ctx) = example2_context(8);
    let f = real();
    let params = LimitSetParams { max_word_len: 8, budget: 0, ..Default::default() };
    let cloud = limit_set_sample(&spec, &ctx.l_mu, &Subspace::full(&f, 3), &params, RngStream::new(8, 1)).unwrap();
    let nu = sample_stationary(&spec, &ctx, 200, 10_000, RngStream::new(8, 2), &Sampler::TopDirection).unwrap();
    let h = hausdorff(&cloud_points(&cloud), &nu.real_points(&f));
    let el = t.elapsed();
    outcome(h <= 0.05 && within(el, 300), format!("Hausdorff {h:.4} between {} attractors and {} samples, {el:.1?}", cloud.len(), nu.len()))
}

fn c9_wedge() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (k, spec) in examples() {
        let s = RngStream::new(9, u64::from(k));
        let base = lyapunov_spectrum(&spec, 2000, 400, s.child("base"));
        let sum = base.partial_sum(2, s.child("sum"));
        let wedge = lyapunov_spectrum(&wedge_measure(&spec), 2000, 400, s.child("wedge")).top();
        let ok = sum.overlaps(&wedge);
        pass &= ok;
        parts.push(format!("ex{k} l1+l2 {:.4} [{:.4}, {:.4}] vs wedge {:.4} [{:.4}, {:.4}]", sum.estimate, sum.lo, sum.hi, wedge.estimate, wedge.lo, wedge.hi));
    }
    outcome(pass, parts.join("; "))
}

/// `inf_{y in E} delta(x, y)` over a dense circle of directions, refined.
fn brute_real(x: &[f64], e: &Subspace<f64>) -> f64 {
    let f = real();
    let b = e.basis();
    if b.len() == 1 {
        return fubini_vec(&f, x, &b[0]);
    }
    let at = |th: f64| {
        let y: Vec<f64> = (0..3).map(|i| th.cos() * b[0][i] + th.sin() * b[1][i]).collect();
        fubini_vec(&f, x, &y)
    };
    let n = 4000;
    let step = std::f64::consts::PI / n as f64;
    let k = (0..n).min_by(|&i, &j| at(i as f64 * step).total_cmp(&at(j as f64 * step))).unwrap();
    let (mut lo, mut hi) = ((k as f64 - 1.0) * step, (k as f64 + 1.0) * step);
    for _ in 0..200 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if at(m1) < at(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    at(0.5 * (lo + hi))
}

fn grid_coefficients() -> Vec<Q> {
    let mut out = vec![q(0, 1)];
    for a in (1..=15).step_by(2) {
        for k in -3i32..=3 {
            let c = if k >= 0 { q(a * (1 << k), 1) } else { q(a, 1 << -k) };
            out.push(c.clone());
            out.push(-c);
        }
    }
    out
}

fn random_q2(rng: &mut impl Rng, vmin: i32, vmax: i32) -> Q {
    let a = 2 * rng.random_range(0..8i64) + 1;
    let s = if rng.random_bool(0.5) { 1 } else { -1 };
    let k = rng.random_range(vmin..=vmax);
    if k >= 0 {
        q(s * a * (1 << k), 1)
    } else {
        q(s * a, 1 << -k)
    }
}

fn c10_distance_oracle() -> Outcome {
    let f = real();
    let mut rng = RngStream::new(10, 0).rng();
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let dim = 1 + i % 2;
        let vs: Vec<Vec<f64>> = (0..dim).map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let e = Subspace::span(&f, &vs, 3).unwrap();
        let x: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let formula = SubspaceDistance::new(&f, &e).unwrap().distance(&x);
        worst = worst.max((formula - brute_real(&x, &e)).abs());
    }
    let p = q2();
    let grid = grid_coefficients();
    let mut exact = 0;
    let mut total = 0;
    for d in [2usize, 3] {
        for i in 0..20 {
            let dim = if d == 2 { 1 } else { 1 + i % 2 };
            let vs: Vec<Vec<Q>> = (0..dim).map(|_| (0..d).map(|_| random_q2(&mut rng, 0, 2)).collect()).collect();
            let Ok(e) = Subspace::span(&p, &vs, d) else { continue };
            if e.dim() != dim {
                continue;
            }
            let x: Vec<Q> = (0..d).map(|_| random_q2(&mut rng, -2, 2)).collect();
            let formula = SubspaceDistance::new(&p, &e).unwrap().distance(&x);
            let b = e.basis();
            let mut best = f64::INFINITY;
            let mut idx = vec![0usize; dim];
            loop {
                if idx.iter().any(|&k| k != 0) {
                    let y: Vec<Q> = (0..d)
                        .map(|j| idx.iter().zip(b).map(|(&k, v)| &grid[k] * &v[j]).fold(q(0, 1), |a, t| a + t))
                        .collect();
                    best = best.min(fubini_vec(&p, &x, &y));
                }
                let mut c = 0;
                while c < dim {
                    idx[c] += 1;
                    if idx[c] < grid.len() {
                        break;
                    }
                    idx[c] = 0;
                    c += 1;
                }
                if c == dim {
                    break;
                }
            }
            total += 1;
            let same_power = formula.log2().round() == best.log2().round()
                && (formula - 2f64.powf(formula.log2().round())).abs() <= 1e-12 * formula;
            if same_power {
                exact += 1;
            }
        }
    }
    outcome(
        worst <= 1e-6 && exact == total && total > 0,
        format!("R^3: max |formula - brute| = {worst:.1e} over 100; Q_2: {exact}/{total} exact on grids (d = 2, 3)"),
    )
}

fn c11_padic_kak() -> Outcome {
    let f = q2();
    let mut rng = RngStream::new(11, 0).rng();
    let mut ok = 0;
    let mut done = 0;
    while done < 100 {
        let d = 2 + done % 3;
        let rows: Vec<Vec<Q>> = (0..d).map(|_| (0..d).map(|_| random_q2(&mut rng, -4, 4)).collect()).collect();
        let g = Matrix::from_rows(rows).unwrap();
        let Ok(kak) = f.kak(&g) else { continue };
        done += 1;
        if kak.reconstruct() == g && in_gl_integral(&f, &kak.k_left) && in_gl_integral(&f, &kak.u_right) {
            ok += 1;
        }
    }
    outcome(ok == 100, format!("{ok}/100 exact reconstructions with k, u in GL_d(Z_2)"))
}

fn c12_decay() -> Outcome {
    let t = Instant::now();
    let spec = catalog::example2(real());
    let f = real();
    let r = compute_structure(&spec, &StructureParams::default(), RngStream::new(12, 0)).unwrap();
    let ctx = RegularityContext {
        l_mu: r.l_mu.clone(),
        l_mu_dual: r.u_mu.as_ref().unwrap().annihilator(&f).unwrap(),
        gap_certified: r.gap_certified(),
    };
    let grid: Vec<usize> = (1..=20).map(|k| 10 * k).collect();
    let s = RngStream::new(12, 1);
    let x = [0.3, 1.0, 0.7];
    let dir = direction_convergence_rate(&spec, &ctx, &x, &grid, 100_000, s.child("direction")).unwrap();
    let hit = hitting_probability_curve(&spec, &ctx, &x, &[0.2, -0.5, 1.0], 0.1, &grid, 100_000, s.child("hitting")).unwrap();
    let el = t.elapsed();
    let neg = |c: &(f64, f64)| c.1 < 0.0;
    outcome(
        dir.slope < 0.0 && neg(&dir.slope_ci) && hit.slope < 0.0 && neg(&hit.slope_ci) && within(el, 600),
        format!(
            "direction slope {:.4} CI [{:.4}, {:.4}]; hitting slope {:.4} CI [{:.4}, {:.4}]; {el:.1?}",
            dir.slope, dir.slope_ci.0, dir.slope_ci.1, hit.slope, hit.slope_ci.0, hit.slope_ci.1
        ),
    )
}

fn read_dir(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn c13_determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let mut bundles = Vec::new();
    for (i, threads) in ["1", "4", "1"].iter().enumerate() {
        let out = tmp.path().join(format!("run{i}"));
        let status = Command::new(env!("CARGO_BIN_EXE_projlab"))
            .args(["reproduce", "--example", "2", "--seed", "17", "--out", out.to_str().unwrap()])
            .env("PROJLAB_THREADS", threads)
            .output()
            .unwrap();
        if !status.status.success() {
            return outcome(false, format!("run {i} failed: {}", String::from_utf8_lossy(&status.stderr)));
        }
        bundles.push(read_dir(&out));
    }
    let same = bundles.windows(2).all(|w| w[0] == w[1]);
    let names: Vec<&str> = bundles[0].iter().map(|(n, _)| n.as_str()).collect();
    outcome(same && names.len() == 5, format!("files {names:?} byte-identical across PROJLAB_THREADS = 1, 4, 1: {same}"))
}

fn main() {
    let criteria: Vec<(&str, fn() -> Outcome)> = vec![
        ("example 3 attractor point", c1_attractor),
        ("example 2 quotient norm and certificate", c2_norm_certificate),
        ("top-gap certification", c3_gap),
        ("structure recovery and duality", c4_structure),
        ("Furstenberg-Kifer dichotomy", c5_fk_dichotomy),
        ("cocycle identity", c6_cocycle),
        ("stationarity and uniqueness", c7_stationarity),
        ("limit set and support agreement", c8_limit_set),
        ("exterior-power consistency", c9_wedge),
        ("distance-formula oracle", c10_distance_oracle),
        ("p-adic KAK", c11_padic_kak),
        ("decay experiments", c12_decay),
        ("determinism of reproduce", c13_determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let id = format!("{}", i + 1);
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let t = Instant::now();
        let o = run();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("{tag} [{id:>2}] {name}: {} ({:.1?})", o.detail, t.elapsed());
        if !o.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
