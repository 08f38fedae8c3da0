//! Figure bundles and findings for the three guiding examples.

use num_traits::ToPrimitive;
use projlab_core::catalog;
use projlab_core::jsr::{compactness_certificate, fiber_bound, noncompactness_witness, CompactnessCertificate, FiberBound, DEFAULT_DEPTH};
use projlab_core::limitset::{attractor_point_block, exact_attractor, exact_vec, orbit_escape_exact, EscapeParams};
use projlab_core::linalg::subspace_view;
use projlab_core::measure::{MeasureSpec, RngStream};
use projlab_core::skew::{SkewChart, SkewPoint};
use projlab_core::stationary::{sample_stationary, Sampler, StationaryContext};
use projlab_core::structure::{compute_structure, duality_check, StructureParams};
use projlab_core::{PadicField, RealField};
use serde::Serialize;
use serde_json::json;

use crate::config::Params;
use crate::svg::{emit_svg_scatter, SvgStyle};
use crate::{to_json, Artifacts, CliError};

/// Where an escape orbit starts.
#[derive(Debug, Clone, Copy)]
enum Start {
    /// Chart point `(t, xi)` with `dim L = 1`, `dim V/L = 2`.
    Chart(f64, [f64; 2]),
    /// Attracting point of atom `k`, computed exactly.
    Attractor(usize),
}

/// Orbit-escape experiments run for each example: `(map atom, start, threshold)`.
fn escape_plan(id: u8) -> Vec<(usize, Start, f64)> {
    match id {
        1 => vec![(0, Start::Chart(0.0, [1.0, 0.0]), 1e3)],
        3 => vec![(0, Start::Attractor(2), EscapeParams::default().threshold)],
        _ => Vec::new(),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EscapeEvidence {
    /// 1-based atom label.
    pub map: usize,
    pub start: String,
    pub start_t: f64,
    pub start_xi: Vec<f64>,
    pub threshold: f64,
    pub escape: bool,
    pub first_crossing: Option<usize>,
    pub steps: usize,
    pub final_norm: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AttractorRecord {
    pub atom: usize,
    pub t0: f64,
    pub xi0: Vec<f64>,
    /// Exact eigenvector when the top eigenvalue is rational.
    pub exact_eigenvector: Option<Vec<String>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Compactness {
    pub verdict: &'static str,
    pub certificate: CompactnessCertificate,
    pub noncompactness_witness: Option<Vec<usize>>,
    pub fiber_bound: Option<FiberBound>,
    pub escape: Vec<EscapeEvidence>,
}

fn escape_evidence(id: u8, chart: &SkewChart<RealField>) -> Result<Vec<EscapeEvidence>, CliError> {
    let exact = catalog::example(id, PadicField::new(2)?).expect("example id");
    let mut out = Vec::new();
    for (map, start, threshold) in escape_plan(id) {
        let (x, label) = match start {
            Start::Chart(t, xi) => {
                let v = chart.from_chart_vec(&SkewPoint { t: vec![t], xi: xi.to_vec() });
                (exact_vec(&v), format!("chart point t = {t}, xi = ({}, {})", xi[0], xi[1]))
            }
            Start::Attractor(k) => {
                let v = exact_attractor(&exact.atoms[k])
                    .ok_or_else(|| CliError::Runtime(format!("atom {} has no rational attractor", k + 1)))?;
                (v, format!("attracting point of g{}", k + 1))
            }
        };
        let xf: Vec<f64> = x.iter().map(|e| e.to_f64().unwrap_or(f64::NAN)).collect();
        let s = chart.to_chart_vec(&xf)?;
        let params = EscapeParams { threshold, ..Default::default() };
        let r = orbit_escape_exact(&exact.atoms[map], &x, chart, &params);
        out.push(EscapeEvidence {
            map: map + 1,
            start: label,
            start_t: s.t[0],
            start_xi: s.xi,
            threshold,
            escape: r.escape,
            first_crossing: r.first_crossing,
            steps: r.norms.len() - 1,
            final_norm: *r.norms.last().expect("nonempty"),
        });
    }
    Ok(out)
}

fn attractors(spec: &MeasureSpec<RealField>, chart: &SkewChart<RealField>, id: u8) -> Result<Vec<AttractorRecord>, CliError> {
    let exact = catalog::example(id, PadicField::new(2)?).expect("example id");
    let mut out = Vec::new();
    for (k, g) in spec.atoms.iter().enumerate() {
        let Ok(s) = attractor_point_block(&chart.blocks(g)?) else { continue };
        let exact_eigenvector = exact_attractor(&exact.atoms[k]).map(|v| v.iter().map(|e| e.to_string()).collect());
        out.push(AttractorRecord { atom: k + 1, t0: s.t[0], xi0: s.xi, exact_eigenvector });
    }
    Ok(out)
}

/// `(sign, t, xi_0, xi_1, theta)` rows for both lifts of every sample.
pub fn cylinder_rows(points: &[SkewPoint<f64>]) -> Vec<(i8, f64, f64, f64, f64)> {
    let mut rows = Vec::with_capacity(2 * points.len());
    for s in points {
        for sign in [1i8, -1] {
            let c = f64::from(sign);
            let (t, x0, x1) = (c * s.t[0], c * s.xi[0], c * s.xi[1]);
            rows.push((sign, t, x0, x1, x1.atan2(x0)));
        }
    }
    rows
}

/// Cylinder CSV `sign,t,xi_0,xi_1,theta` and circle CSV `sign,xi_0,xi_1`.
pub fn cylinder_csv(rows: &[(i8, f64, f64, f64, f64)]) -> (String, String) {
    let mut cylinder = String::from("sign,t,xi_0,xi_1,theta\n");
    let mut circle = String::from("sign,xi_0,xi_1\n");
    for (sign, t, x0, x1, th) in rows {
        cylinder.push_str(&format!("{sign},{t:.12e},{x0:.12e},{x1:.12e},{th:.12e}\n"));
        circle.push_str(&format!("{sign},{x0:.12e},{x1:.12e}\n"));
    }
    (cylinder, circle)
}

/// `t` against `theta`, and the projection on the circle.
pub fn cylinder_svgs(rows: &[(i8, f64, f64, f64, f64)], title: &str) -> (String, String) {
    let cyl_pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.4, r.1)).collect();
    let s1_pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.2, r.3)).collect();
    let cyl = emit_svg_scatter(&cyl_pts, &SvgStyle::titled(&format!("{title}: cylinder"), "theta", "t"));
    let mut s1_style = SvgStyle::titled(&format!("{title}: projection on S1"), "xi_0", "xi_1");
    s1_style.width = s1_style.height;
    (cyl, emit_svg_scatter(&s1_pts, &s1_style))
}

pub fn reproduce(id: u8, seed: u64, p: &Params) -> Result<Artifacts, CliError> {
    let f = RealField::default();
    let spec = catalog::example(id, f).ok_or_else(|| CliError::Validation(format!("unknown example {id}")))?;
    let s = RngStream::new(seed, 0);
    let sp = StructureParams::default();
    let mut report = compute_structure(&spec, &sp, s.child("structure"))?;
    if !report.gap_certified() {
        return Err(CliError::GapUncertified(format!("example {id}: top gap not certified")));
    }
    report.duality_ok = Some(duality_check(&spec, &report, &sp, s.child("duality"))?);
    if report.l_mu.dim() != 1 {
        return Err(CliError::Runtime(format!("example {id}: expected a one-dimensional exceptional subspace")));
    }
    let chart = SkewChart::new(&f, report.l_mu.clone())?;
    let ctx = StationaryContext::from_report(&report);
    let n = p.n.unwrap_or(200);
    let trials = p.trials.unwrap_or(2000);
    let nu = sample_stationary(&spec, &ctx, n, trials, s.child("samples"), &Sampler::TopDirection)?;
    let points: Vec<SkewPoint<f64>> = nu.points.iter().filter_map(|x| chart.to_chart(x).ok()).collect();
    let rows = cylinder_rows(&points);

    let (cylinder, circle) = cylinder_csv(&rows);
    let (cyl_svg, s1_svg) = cylinder_svgs(&rows, &format!("example {id}"));

    let certificate = compactness_certificate(&spec, &chart, 4)?;
    let witness = noncompactness_witness(&spec, &chart, DEFAULT_DEPTH)?;
    let fb = if certificate.pass { fiber_bound(&spec, &chart, 720)? } else { None };
    let escape = escape_evidence(id, &chart)?;
    let verdict = if certificate.pass {
        "compact"
    } else if witness.is_some() || escape.iter().any(|e| e.escape) {
        "non-compact"
    } else {
        "undetermined"
    };
    let compactness = Compactness { verdict, certificate, noncompactness_witness: witness, fiber_bound: fb, escape };
    let t_extent = rows.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), r| (a.min(r.1), b.max(r.1)));
    let u_mu = report.u_mu.as_ref().expect("certified");
    let findings = json!({
        "example": id,
        "seed": seed,
        "l_mu": subspace_view(&f, &report.l_mu),
        "u_mu": subspace_view(&f, u_mu),
        "duality_ok": report.duality_ok,
        "spectrum": { "lambda": report.spectrum.lambda, "ci": report.spectrum.ci },
        "gap": report.gap,
        "simple_top": report.gap.simple_top,
        "samples": { "provenance": nu.provenance, "chart_points": points.len(), "t_extent": [t_extent.0, t_extent.1] },
        "compactness": compactness,
        "attractors": attractors(&spec, &chart, id)?,
    });
    let mut out = Artifacts::new(findings);
    out.add("cylinder.csv", cylinder);
    out.add("s1.csv", circle);
    out.add("cylinder.svg", cyl_svg);
    out.add("s1.svg", s1_svg);
    out.add("findings.json", to_json(&out.summary));
    Ok(out)
}
