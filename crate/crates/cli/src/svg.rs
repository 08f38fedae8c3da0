//! Minimal deterministic SVG scatter plots.

use std::fmt::Write;

#[derive(Debug, Clone, PartialEq)]
pub struct SvgStyle {
    pub width: f64,
    pub height: f64,
    pub margin: f64,
    pub radius: f64,
    pub fill: String,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
}

impl Default for SvgStyle {
    fn default() -> Self {
        SvgStyle {
            width: 480.0,
            height: 360.0,
            margin: 48.0,
            radius: 1.5,
            fill: "#1f4e79".into(),
            title: String::new(),
            x_label: "x".into(),
            y_label: "y".into(),
        }
    }
}

impl SvgStyle {
    pub fn titled(title: &str, x_label: &str, y_label: &str) -> Self {
        SvgStyle { title: title.into(), x_label: x_label.into(), y_label: y_label.into(), ..Default::default() }
    }
}

/// Data window `[lo, hi]` of the plot, padded when degenerate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extent {
    pub x: (f64, f64),
    pub y: (f64, f64),
}

fn range(v: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = v.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if lo > hi {
        return (0.0, 1.0);
    }
    if hi - lo <= 1e-12 * lo.abs().max(1.0) {
        let pad = 0.5 * lo.abs().max(1.0);
        return (lo - pad, hi + pad);
    }
    (lo, hi)
}

pub fn extent(points: &[(f64, f64)]) -> Extent {
    let finite: Vec<(f64, f64)> = points.iter().copied().filter(|(x, y)| x.is_finite() && y.is_finite()).collect();
    Extent { x: range(finite.iter().map(|p| p.0)), y: range(finite.iter().map(|p| p.1)) }
}

/// Pixel coordinates of a data point.
pub fn map_point(e: &Extent, style: &SvgStyle, p: (f64, f64)) -> (f64, f64) {
    let w = style.width - 2.0 * style.margin;
    let h = style.height - 2.0 * style.margin;
    let px = style.margin + (p.0 - e.x.0) / (e.x.1 - e.x.0) * w;
    let py = style.height - style.margin - (p.1 - e.y.0) / (e.y.1 - e.y.0) * h;
    (px, py)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Non-finite points are dropped.
pub fn emit_svg_scatter(points: &[(f64, f64)], style: &SvgStyle) -> String {
    let e = extent(points);
    let (w, h, m) = (style.width, style.height, style.margin);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{w:.0}" height="{h:.0}" fill="white"/>"#);
    if !style.title.is_empty() {
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" font-size="13" text-anchor="middle">{}</text>"#, w / 2.0, m / 2.0, escape(&style.title));
    }
    let _ = writeln!(
        s,
        r#"<rect class="axes" x="{m:.3}" y="{m:.3}" width="{:.3}" height="{:.3}" fill="none" stroke="black" stroke-width="1"/>"#,
        w - 2.0 * m,
        h - 2.0 * m
    );
    let label = |s: &mut String, x: f64, y: f64, anchor: &str, text: &str| {
        let _ = writeln!(s, r#"<text x="{x:.1}" y="{y:.1}" font-size="10" text-anchor="{anchor}">{}</text>"#, escape(text));
    };
    label(&mut s, m, h - m + 14.0, "start", &format!("{:.4}", e.x.0));
    label(&mut s, w - m, h - m + 14.0, "end", &format!("{:.4}", e.x.1));
    label(&mut s, m - 4.0, h - m, "end", &format!("{:.4}", e.y.0));
    label(&mut s, m - 4.0, m + 10.0, "end", &format!("{:.4}", e.y.1));
    label(&mut s, w / 2.0, h - m / 4.0, "middle", &style.x_label);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="middle" transform="rotate(-90 {:.1} {:.1})">{}</text>"#,
        m / 4.0 + 4.0,
        h / 2.0,
        m / 4.0 + 4.0,
        h / 2.0,
        escape(&style.y_label)
    );
    let _ = writeln!(s, r#"<g fill="{}" fill-opacity="0.6">"#, escape(&style.fill));
    for &p in points {
        if !(p.0.is_finite() && p.1.is_finite()) {
            continue;
        }
        let (px, py) = map_point(&e, style, p);
        let _ = writeln!(s, r#"<circle cx="{px:.3}" cy="{py:.3}" r="{:.2}"/>"#, style.radius);
    }
    s.push_str("</g>\n</svg>\n");
    s
}

/// `log10 stat` against `n`, skipping non-positive values.
pub fn emit_svg_log_curve(n: &[usize], stat: &[f64], title: &str) -> String {
    let pts: Vec<(f64, f64)> = n.iter().zip(stat).filter(|(_, s)| **s > 0.0).map(|(n, s)| (*n as f64, s.log10())).collect();
    let mut style = SvgStyle::titled(title, "n", "log10 statistic");
    style.radius = 3.0;
    emit_svg_scatter(&pts, &style)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circles(s: &str) -> Vec<(f64, f64)> {
        s.lines()
            .filter(|l| l.starts_with("<circle"))
            .map(|l| {
                let attr = |name: &str| -> f64 {
                    let i = l.find(&format!("{name}=\"")).unwrap() + name.len() + 2;
                    l[i..].split('"').next().unwrap().parse().unwrap()
                };
                (attr("cx"), attr("cy"))
            })
            .collect()
    }

    #[test]
    fn empty_input_gives_empty_axes() {
        let s = emit_svg_scatter(&[], &SvgStyle::default());
        assert!(s.starts_with("<svg"));
        assert!(s.trim_end().ends_with("</svg>"));
        assert!(s.contains(r#"class="axes""#));
        assert!(circles(&s).is_empty());
    }

    #[test]
    fn colinear_points_map_affinely() {
        let style = SvgStyle::default();
        let s = emit_svg_scatter(&[(0.0, 0.0), (1.0, 2.0), (2.0, 4.0)], &style);
        let c = circles(&s);
        assert_eq!(c.len(), 3);
        let (m, w, h) = (style.margin, style.width, style.height);
        assert_eq!(c[0], (m, h - m));
        assert_eq!(c[2], (w - m, m));
        assert!((c[1].0 - w / 2.0).abs() < 1e-3 && (c[1].1 - h / 2.0).abs() < 1e-3);
    }

    #[test]
    fn output_is_deterministic_and_skips_non_finite() {
        let pts = [(0.1, 0.3), (f64::NAN, 1.0), (0.2, f64::INFINITY), (-0.5, 0.25)];
        let a = emit_svg_scatter(&pts, &SvgStyle::default());
        let b = emit_svg_scatter(&pts, &SvgStyle::default());
        assert_eq!(a, b);
        assert_eq!(circles(&a).len(), 2);
    }

    #[test]
    fn single_point_is_centered() {
        let style = SvgStyle::default();
        let c = circles(&emit_svg_scatter(&[(3.0, -2.0)], &style));
        assert!((c[0].0 - style.width / 2.0).abs() < 1e-3);
        assert!((c[0].1 - style.height / 2.0).abs() < 1e-3);
    }

    #[test]
    fn titles_are_escaped() {
        let s = emit_svg_scatter(&[], &SvgStyle::titled("a<b & c", "x", "y"));
        assert!(s.contains("a&lt;b &amp; c"));
    }
}
