//! Dispatch of configured runs.

use projlab_core::jsr::{compactness_certificate, experimental_compactness_bounds, fiber_bound, noncompactness_witness, DEFAULT_DEPTH};
use projlab_core::limitset::{limit_set_sample, LimitSetParams, ProximalData};
use projlab_core::linalg::{subspace_view, unit_vector, Subspace};
use projlab_core::measure::{MeasureSpec, RngStream};
use projlab_core::regularity::{
    curve_csv, direction_convergence_rate, holder_alpha_estimate, hitting_probability_curve, hyperplane_grid, HolderParams,
    RegularityContext,
};
use projlab_core::skew::{trajectory_csv, SkewChart};
use projlab_core::stationary::{
    boundary_convergence, default_grid, sample_stationary, stationarity_residual, subspace_mass, BoundaryParams, EmpiricalMeasure,
    Sampler, StationaryContext, ENERGY_RESAMPLES,
};
use projlab_core::structure::{compute_structure, duality_check, structure_view, StructureParams, StructureReport};
use projlab_core::walk::{lyapunov_spectrum, GapEstimate};
use projlab_core::{Field, FieldSpec, PadicField, RealField};
use serde_json::json;

use crate::config::{parse_vector, Command, Params, RunConfig, SamplerKind};
use crate::svg::emit_svg_log_curve;
use crate::{reproduce, to_json, Artifacts, CliError};

pub const DEFAULT_SEED: u64 = 20_240_101;

pub fn run(cfg: &RunConfig, seed: u64) -> Result<Artifacts, CliError> {
    cfg.validate()?;
    let field = cfg.measure.field();
    match (cfg.command, field) {
        (Command::Reproduce, FieldSpec::Real) => reproduce::reproduce(cfg.measure.example.expect("validated"), seed, &cfg.params),
        (Command::Reproduce | Command::Limitset | Command::Jsr, FieldSpec::Padic(_)) => {
            Err(CliError::Validation(format!("command not supported over {field}")))
        }
        (Command::Limitset, FieldSpec::Real) => limitset(&cfg.measure.build(RealField::default())?, &cfg.params, seed),
        (Command::Jsr, FieldSpec::Real) => jsr(&cfg.measure.build(RealField::default())?, &cfg.params, seed),
        (_, FieldSpec::Real) => run_generic(RealField::default(), cfg, seed),
        (_, FieldSpec::Padic(p)) => run_generic(PadicField::new(p)?, cfg, seed),
    }
}

fn run_generic<F: Field>(f: F, cfg: &RunConfig, seed: u64) -> Result<Artifacts, CliError> {
    let spec = cfg.measure.build(f)?;
    let p = &cfg.params;
    match cfg.command {
        Command::Spectrum => spectrum(&spec, p, seed),
        Command::Structure => structure(&spec, p, seed),
        Command::Stationary => stationary(&spec, p, seed),
        Command::Regularity => regularity(&spec, p, seed),
        Command::Limitset | Command::Jsr | Command::Reproduce => unreachable!("dispatched in run"),
    }
}

fn root(seed: u64) -> RngStream {
    RngStream::new(seed, 0)
}

fn structure_params(p: &Params) -> StructureParams {
    StructureParams { n: p.n.unwrap_or(1000), trials: p.trials.unwrap_or(200), ..Default::default() }
}

fn header<F: Field>(spec: &MeasureSpec<F>, command: &str, seed: u64) -> serde_json::Value {
    json!({ "command": command, "field": spec.field.spec().to_string(), "dim": spec.dim(), "atoms": spec.len(), "seed": seed })
}

fn merge(mut a: serde_json::Value, b: serde_json::Value) -> serde_json::Value {
    if let (Some(a), serde_json::Value::Object(b)) = (a.as_object_mut(), b) {
        a.extend(b);
    }
    a
}

fn spectrum<F: Field>(spec: &MeasureSpec<F>, p: &Params, seed: u64) -> Result<Artifacts, CliError> {
    let s = root(seed);
    let est = lyapunov_spectrum(spec, p.n.unwrap_or(2000), p.trials.unwrap_or(400), s.child("spectrum"));
    let gap = GapEstimate::from_spectrum(&est, s.child("gap"));
    let summary = merge(
        header(spec, "spectrum", seed),
        json!({
            "lambda": est.lambda, "stderr": est.stderr, "ci": est.ci,
            "n_steps": est.n_steps, "n_trials": est.n_trials, "gap": gap,
        }),
    );
    let mut out = Artifacts::new(summary);
    out.add("spectrum.json", to_json(&out.summary));
    out.add("spectrum.csv", est.csv());
    Ok(out)
}

fn structure_report<F: Field>(spec: &MeasureSpec<F>, p: &Params, s: RngStream) -> Result<StructureReport<F::Elem>, CliError> {
    Ok(compute_structure(spec, &structure_params(p), s.child("structure"))?)
}

fn structure<F: Field>(spec: &MeasureSpec<F>, p: &Params, seed: u64) -> Result<Artifacts, CliError> {
    let s = root(seed);
    let mut report = structure_report(spec, p, s)?;
    if report.gap_certified() {
        report.duality_ok = Some(duality_check(spec, &report, &structure_params(p), s.child("duality"))?);
    }
    let view = structure_view(&spec.field, &report);
    let summary = merge(header(spec, "structure", seed), serde_json::to_value(&view)?);
    let mut out = Artifacts::new(summary);
    out.add("structure.json", to_json(&out.summary));
    Ok(out)
}

/// First coordinate vector outside `l`.
fn generic_unit<F: Field>(f: &F, l: &Subspace<F::Elem>) -> Result<Vec<F::Elem>, CliError> {
    let d = l.ambient();
    (0..d)
        .map(|i| unit_vector(d, i))
        .find(|v| !l.contains(f, v))
        .ok_or_else(|| CliError::Validation("exceptional subspace is the whole space".into()))
}

fn point_param<F: Field>(f: &F, v: &Option<Vec<crate::config::Entry>>, l: &Subspace<F::Elem>) -> Result<Vec<F::Elem>, CliError> {
    match v {
        Some(v) => parse_vector(f, v),
        None => generic_unit(f, l),
    }
}

fn certified_samples<F: Field>(
    spec: &MeasureSpec<F>,
    report: &StructureReport<F::Elem>,
    p: &Params,
    s: RngStream,
) -> Result<(EmpiricalMeasure<F::Elem>, Sampler<F::Elem>), CliError> {
    let f = &spec.field;
    let ctx = StationaryContext::from_report(report);
    if !ctx.gap_certified {
        return Err(CliError::GapUncertified("top gap not certified; stationary sampling aborted".into()));
    }
    let sampler = match p.sampler.unwrap_or(SamplerKind::TopDirection) {
        SamplerKind::TopDirection => Sampler::TopDirection,
        SamplerKind::PushForward => Sampler::PushForward(point_param(f, &p.x, &report.l_mu)?),
    };
    let nu = sample_stationary(spec, &ctx, p.n.unwrap_or(200), p.trials.unwrap_or(2000), s.child("samples"), &sampler)?;
    Ok((nu, sampler))
}

/// Chart coordinates of the samples, when the chart exists.
fn skew_csv<F: Field>(f: &F, l: &Subspace<F::Elem>, nu: &EmpiricalMeasure<F::Elem>) -> Option<String> {
    if l.is_zero() || l.is_full() {
        return None;
    }
    let chart = SkewChart::new(f, l.clone()).ok()?;
    let pts: Vec<_> = nu.points.iter().filter_map(|x| chart.to_chart(x).ok()).collect();
    Some(trajectory_csv(f, &pts))
}

fn stationary<F: Field>(spec: &MeasureSpec<F>, p: &Params, seed: u64) -> Result<Artifacts, CliError> {
    let s = root(seed);
    let f = &spec.field;
    let report = compute_structure(spec, &StructureParams::default(), s.child("structure"))?;
    let (nu, _) = certified_samples(spec, &report, p, s)?;
    let resamples = p.resamples.unwrap_or(ENERGY_RESAMPLES);
    let residual = stationarity_residual(spec, &nu, resamples, s.child("residual"))?;
    let eps = p.eps.unwrap_or(1e-3);
    let mass_l = if report.l_mu.is_zero() { 0.0 } else { subspace_mass(f, &nu, &report.l_mu, eps)? };
    let bparams = BoundaryParams { n_grid: p.n_grid.clone().unwrap_or_else(default_grid), ..Default::default() };
    let boundary = boundary_convergence(spec, &nu, &bparams, s.child("boundary"));
    let summary = merge(
        header(spec, "stationary", seed),
        json!({
            "provenance": nu.provenance,
            "l_mu": subspace_view(f, &report.l_mu),
            "mass_near_l_mu": { "eps": eps, "mass": mass_l },
            "stationarity_residual": residual,
            "boundary_convergence": boundary,
        }),
    );
    let mut out = Artifacts::new(summary);
    out.add("stationary.json", to_json(&out.summary));
    out.add("samples.csv", nu.csv(f));
    if let Some(csv) = skew_csv(f, &report.l_mu, &nu) {
        out.add("samples_skew.csv", csv);
    }
    out.add("boundary.csv", curve_csv(&boundary));
    out.add("boundary.svg", emit_svg_log_curve(&boundary.n, &boundary.stat, "boundary diameter"));
    Ok(out)
}

fn regularity<F: Field>(spec: &MeasureSpec<F>, p: &Params, seed: u64) -> Result<Artifacts, CliError> {
    let s = root(seed);
    let f = &spec.field;
    let report = compute_structure(spec, &StructureParams::default(), s.child("structure"))?;
    let Some(u_mu) = report.u_mu.as_ref().filter(|_| report.gap_certified()) else {
        return Err(CliError::GapUncertified("top gap not certified; regularity aborted".into()));
    };
    let ctx = RegularityContext { l_mu: report.l_mu.clone(), l_mu_dual: u_mu.annihilator(f)?, gap_certified: true };
    let x = point_param(f, &p.x, &ctx.l_mu)?;
    let phi = point_param(f, &p.phi, &ctx.l_mu_dual)?;
    let grid = p.n_grid.clone().unwrap_or_else(default_grid);
    let trials = p.trials.unwrap_or(2000);
    let eps = p.eps.unwrap_or(0.1);
    let direction = direction_convergence_rate(spec, &ctx, &x, &grid, trials, s.child("direction"))?;
    let hitting = hitting_probability_curve(spec, &ctx, &x, &phi, eps, &grid, trials, s.child("hitting"))?;
    let sample_params = Params { n: Some(200), trials: Some(p.n.unwrap_or(2000)), sampler: None, ..p.clone() };
    let (nu, _) = certified_samples(spec, &report, &sample_params, s)?;
    let hyperplanes = hyperplane_grid(f, &nu, &ctx.l_mu_dual, 32, 32, s.child("hyperplanes"))?;
    let mut hp = HolderParams::default();
    if let Some(a) = &p.alpha_grid {
        hp.alpha_grid = a.clone();
    }
    if let Some(r) = p.resamples {
        hp.resamples = r;
    }
    let holder = holder_alpha_estimate(f, &nu, &hyperplanes, &hp, s.child("holder"))?;
    let fmt = |v: &[F::Elem]| v.iter().map(|e| f.format_elem(e)).collect::<Vec<_>>();
    let summary = merge(
        header(spec, "regularity", seed),
        json!({
            "x": fmt(&x), "phi": fmt(&phi), "eps": eps, "trials": trials,
            "direction": direction, "hitting": hitting,
            "holder": { "alpha_grid": hp.alpha_grid, "estimate": holder, "hyperplanes": hyperplanes.len() },
        }),
    );
    let mut out = Artifacts::new(summary);
    out.add("regularity.json", to_json(&out.summary));
    out.add("direction.csv", curve_csv(&direction));
    out.add("direction.svg", emit_svg_log_curve(&direction.n, &direction.stat, "direction convergence"));
    out.add("hitting.csv", curve_csv(&hitting));
    out.add("hitting.svg", emit_svg_log_curve(&hitting.n, &hitting.stat, "hyperplane hitting probability"));
    Ok(out)
}

pub fn cloud_csv(cloud: &[ProximalData]) -> String {
    let d = cloud.first().map_or(0, |c| c.attractor.dim());
    let mut s = String::from("i,word,lambda_top,gap_ratio,in_u,off_l");
    for k in 1..=d {
        s.push_str(&format!(",x_{k}"));
    }
    s.push('\n');
    for (i, c) in cloud.iter().enumerate() {
        let word: Vec<String> = c.word.iter().map(|k| (k + 1).to_string()).collect();
        s.push_str(&format!("{i},{},{:.12e},{:.12e},{},{}", word.join("-"), c.lambda_top, c.gap_ratio, c.in_u, c.off_l));
        for x in c.attractor.vector() {
            s.push_str(&format!(",{x:.12e}"));
        }
        s.push('\n');
    }
    s
}

fn limitset(spec: &MeasureSpec<RealField>, p: &Params, seed: u64) -> Result<Artifacts, CliError> {
    let s = root(seed);
    let f = &spec.field;
    let report = structure_report(spec, p, s)?;
    let u = report.u_mu.clone().unwrap_or_else(|| Subspace::full(f, spec.dim()));
    let defaults = LimitSetParams::default();
    let params = LimitSetParams {
        max_word_len: p.max_word_len.unwrap_or(defaults.max_word_len),
        budget: p.budget.unwrap_or(defaults.budget),
        ..defaults
    };
    let cloud = limit_set_sample(spec, &report.l_mu, &u, &params, s.child("limitset"))?;
    let summary = merge(
        header(spec, "limitset", seed),
        json!({
            "max_word_len": params.max_word_len, "budget": params.budget,
            "gap_certified": report.gap_certified(),
            "l_mu": subspace_view(f, &report.l_mu), "u_mu": subspace_view(f, &u),
            "count": cloud.len(),
            "in_u": cloud.iter().filter(|c| c.in_u).count(),
            "off_l": cloud.iter().filter(|c| c.off_l).count(),
        }),
    );
    let mut out = Artifacts::new(summary);
    out.add("limitset.json", to_json(&out.summary));
    out.add("cloud.csv", cloud_csv(&cloud));
    if spec.dim() == 3 && report.l_mu.dim() == 1 {
        let chart = SkewChart::new(f, report.l_mu.clone())?;
        let pts: Vec<_> = cloud.iter().filter_map(|c| chart.to_chart(&c.attractor).ok()).collect();
        let rows = reproduce::cylinder_rows(&pts);
        let (cyl, _) = reproduce::cylinder_csv(&rows);
        let (svg, _) = reproduce::cylinder_svgs(&rows, "attractor cloud");
        out.add("cloud_cylinder.csv", cyl);
        out.add("cloud_cylinder.svg", svg);
    }
    Ok(out)
}

fn jsr(spec: &MeasureSpec<RealField>, p: &Params, seed: u64) -> Result<Artifacts, CliError> {
    let s = root(seed);
    let f = &spec.field;
    let l = match &p.l {
        Some(rows) => {
            let vs = rows.iter().map(|r| parse_vector(f, r)).collect::<Result<Vec<_>, _>>()?;
            Subspace::span(f, &vs, spec.dim())?
        }
        None => structure_report(spec, p, s)?.l_mu,
    };
    if l.is_zero() || l.is_full() {
        return Err(CliError::Validation("chart subspace must be proper and nonzero".into()));
    }
    let chart = SkewChart::new(f, l.clone())?;
    let depth = p.depth.unwrap_or(DEFAULT_DEPTH);
    let body = if chart.r() != 1 && p.experimental.unwrap_or(false) {
        json!({ "experimental": true, "bounds": experimental_compactness_bounds(spec, &chart, depth)? })
    } else {
        let cert = compactness_certificate(spec, &chart, depth)?;
        let fb = if cert.pass { fiber_bound(spec, &chart, 720)? } else { None };
        json!({
            "r_upper": cert.r_upper, "r_lower": cert.r_lower, "depth": cert.depth, "pass": cert.pass,
            "norm_used": cert.norm_used, "witness": cert.witness, "reason": cert.reason,
            "noncompactness_witness": noncompactness_witness(spec, &chart, depth)?,
            "fiber_bound": fb,
        })
    };
    let summary = merge(header(spec, "jsr", seed), merge(json!({ "l": subspace_view(f, &l) }), body));
    let mut out = Artifacts::new(summary);
    out.add("jsr.json", to_json(&out.summary));
    Ok(out)
}
