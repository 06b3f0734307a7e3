//! Static log-log SVG charts.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 440.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 56.0;

/// Log-log chart of `(eps, y)` with an optional guide curve
/// `y ~ eps^{-s} |ln eps|^{-t}` anchored at the middle data point.
pub fn loglog_svg(title: &str, eps: &[f64], y: &[f64], guide: Option<(f64, f64)>) -> String {
    let pts: Vec<(f64, f64)> = eps
        .iter()
        .zip(y)
        .filter(|(e, v)| e.is_finite() && v.is_finite() && **e > 0.0 && v.abs() > 0.0)
        .map(|(e, v)| (e.log10(), v.abs().log10()))
        .collect();
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
    if pts.is_empty() {
        let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">no positive data</text>"#, W / 2.0, H / 2.0);
        svg.push_str("</svg>\n");
        return svg;
    }

    let mut guide_pts = Vec::new();
    if let Some((s, t)) = guide {
        let mid = pts.len() / 2;
        let (e0, y0) = (10f64.powf(pts[mid].0), pts[mid].1);
        let l0 = e0.ln().abs();
        for &(le, _) in &pts {
            let e = 10f64.powf(le);
            let g = y0 + s * (e0 / e).log10() - t * (e.ln().abs() / l0).log10();
            guide_pts.push((le, g));
        }
    }

    let (mut x0, mut x1) = min_max(pts.iter().map(|p| p.0));
    let (mut y0, mut y1) = min_max(pts.iter().chain(&guide_pts).map(|p| p.1));
    widen(&mut x0, &mut x1);
    widen(&mut y0, &mut y1);
    let px = |v: f64| LEFT + (v - x0) / (x1 - x0) * (W - LEFT - RIGHT);
    let py = |v: f64| H - BOTTOM - (v - y0) / (y1 - y0) * (H - TOP - BOTTOM);

    let _ = writeln!(
        svg,
        r#"<rect x="{LEFT}" y="{TOP}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - LEFT - RIGHT,
        H - TOP - BOTTOM
    );
    for k in ticks(x0, x1) {
        let x = px(k);
        let _ = writeln!(svg, r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{}" stroke="#ddd"/>"##, H - BOTTOM);
        let _ = writeln!(svg, r#"<text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#, H - BOTTOM + 18.0, tick_label(k));
    }
    for k in ticks(y0, y1) {
        let y = py(k);
        let _ = writeln!(svg, r##"<line x1="{LEFT}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="#ddd"/>"##, W - RIGHT);
        let _ = writeln!(svg, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 6.0, y + 4.0, tick_label(k));
    }
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">eps</text>"#, (LEFT + W - RIGHT) / 2.0, H - 14.0);
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#,
        (TOP + H - BOTTOM) / 2.0,
        (TOP + H - BOTTOM) / 2.0,
        escape(title)
    );

    if let Some((s, t)) = guide {
        let path = polyline(&guide_pts, &px, &py);
        let _ = writeln!(svg, r##"<polyline points="{path}" fill="none" stroke="#c0392b" stroke-dasharray="6 4"/>"##);
        let _ = writeln!(
            svg,
            r##"<text x="{}" y="{}" text-anchor="end" fill="#c0392b">guide: eps^-{s} |ln eps|^-{t}</text>"##,
            W - RIGHT - 8.0,
            TOP + 16.0
        );
    }
    let path = polyline(&pts, &px, &py);
    let _ = writeln!(svg, r##"<polyline points="{path}" fill="none" stroke="#1f4e9a"/>"##);
    for &(a, b) in &pts {
        let _ = writeln!(svg, r##"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="#1f4e9a"/>"##, px(a), py(b));
    }
    svg.push_str("</svg>\n");
    svg
}

fn min_max(it: impl Iterator<Item = f64>) -> (f64, f64) {
    it.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)))
}

fn widen(lo: &mut f64, hi: &mut f64) {
    let pad = ((*hi - *lo) * 0.08).max(0.1);
    *lo -= pad;
    *hi += pad;
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let step = if hi - lo > 3.0 { 1.0 } else { 0.5 };
    let mut k = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while k <= hi {
        out.push(k);
        k += step;
    }
    out
}

fn tick_label(k: f64) -> String {
    if k.fract() == 0.0 {
        format!("1e{}", k as i64)
    } else {
        format!("{:.3}", 10f64.powf(k))
    }
}

fn polyline(pts: &[(f64, f64)], px: &impl Fn(f64) -> f64, py: &impl Fn(f64) -> f64) -> String {
    pts.iter().map(|&(a, b)| format!("{:.2},{:.2}", px(a), py(b))).collect::<Vec<_>>().join(" ")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_points_and_guide() {
        let eps = [0.1, 0.03, 0.01, 0.003];
        let y: Vec<f64> = eps.iter().map(|e| 1.0 / e).collect();
        let svg = loglog_svg("midpoint_stress", &eps, &y, Some((1.0, 0.0)));
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<circle").count(), 4);
        assert!(svg.contains("stroke-dasharray"));
    }

    #[test]
    fn empty_data_still_valid() {
        let svg = loglog_svg("x", &[0.1], &[f64::NAN], None);
        assert!(svg.contains("no positive data"));
    }
}
