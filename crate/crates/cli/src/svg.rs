//! Static SVG charts for sensitivity curves and error reports.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 400.0;
const M: f64 = 56.0;
const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ =
        writeln!(out, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn axes(out: &mut String, x_label: &str, y_label: &str, x: (f64, f64), y: (f64, f64)) {
    let _ = writeln!(out, r##"<path d="M{M} {M} V{b} H{r}" fill="none" stroke="#333"/>"##, b = H - M, r = W - M / 2.0);
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 12.0, escape(x_label));
    let _ = writeln!(
        out,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(y_label)
    );
    let _ = writeln!(out, r#"<text x="{M}" y="{}" text-anchor="middle">{:.3}</text>"#, H - M + 16.0, x.0);
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{:.3}</text>"#, W - M / 2.0, H - M + 16.0, x.1);
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="end">{:.3}</text>"#, M - 4.0, H - M, y.0);
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="end">{:.3}</text>"#, M - 4.0, M + 4.0, y.1);
}

fn range(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) =
        vals.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, lo + 0.5)
    }
}

pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let xr = range(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let yr = range(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)).chain([0.0]));
    let sx = |x: f64| M + (x - xr.0) / (xr.1 - xr.0) * (W - 1.5 * M);
    let sy = |y: f64| H - M - (y - yr.0) / (yr.1 - yr.0) * (H - 2.0 * M);
    let mut out = String::new();
    header(&mut out, title);
    axes(&mut out, x_label, y_label, xr, yr);
    for (i, s) in series.iter().enumerate() {
        let c = COLORS[i % COLORS.len()];
        let mut d = String::new();
        let mut pen_up = true;
        for &(x, y) in &s.points {
            if !y.is_finite() {
                pen_up = true;
                continue;
            }
            let _ = write!(d, "{}{:.2} {:.2} ", if pen_up { "M" } else { "L" }, sx(x), sy(y));
            pen_up = false;
        }
        let _ = writeln!(out, r#"<path d="{}" fill="none" stroke="{c}" stroke-width="2"/>"#, d.trim_end());
        let ly = M + 16.0 * i as f64;
        let _ = writeln!(out, r#"<rect x="{}" y="{}" width="10" height="10" fill="{c}"/>"#, W - 110.0, ly - 9.0);
        let _ = writeln!(out, r#"<text x="{}" y="{ly}">{}</text>"#, W - 95.0, escape(&s.label));
    }
    out.push_str("</svg>\n");
    out
}

/// Grouped bars: one group per category, one bar per series entry.
pub fn bar_chart(title: &str, y_label: &str, categories: &[String], groups: &[(String, Vec<f64>)]) -> String {
    let yr = (0.0, range(groups.iter().flat_map(|g| g.1.iter().copied()).chain([0.0])).1);
    let sy = |y: f64| H - M - (y - yr.0) / (yr.1 - yr.0) * (H - 2.0 * M);
    let mut out = String::new();
    header(&mut out, title);
    axes(&mut out, "", y_label, (0.0, categories.len() as f64), yr);
    let slot = (W - 1.5 * M) / categories.len().max(1) as f64;
    let bar = slot * 0.8 / groups.len().max(1) as f64;
    for (ci, cat) in categories.iter().enumerate() {
        let x0 = M + slot * ci as f64 + slot * 0.1;
        for (gi, (_, vals)) in groups.iter().enumerate() {
            let v = vals.get(ci).copied().unwrap_or(f64::NAN);
            if !v.is_finite() {
                continue;
            }
            let c = COLORS[gi % COLORS.len()];
            let _ = writeln!(
                out,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{c}"/>"#,
                x0 + bar * gi as f64,
                sy(v),
                bar,
                (H - M) - sy(v)
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{}" text-anchor="middle">{}</text>"#,
            x0 + slot * 0.4,
            H - M + 30.0,
            escape(cat)
        );
    }
    for (gi, (label, _)) in groups.iter().enumerate() {
        let c = COLORS[gi % COLORS.len()];
        let ly = M + 16.0 * gi as f64;
        let _ = writeln!(out, r#"<rect x="{}" y="{}" width="10" height="10" fill="{c}"/>"#, W - 110.0, ly - 9.0);
        let _ = writeln!(out, r#"<text x="{}" y="{ly}">{}</text>"#, W - 95.0, escape(label));
    }
    out.push_str("</svg>\n");
    out
}
