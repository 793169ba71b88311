//! Minimal standalone SVG plots. Output depends only on the inputs, so
//! reruns produce identical files.

use std::fmt::Write;

use crate::eval::Image2d;

const W: f64 = 640.0;
const H: f64 = 420.0;
const MARGIN: f64 = 56.0;
pub const PALETTE: [&str; 12] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
    "#393b79", "#637939",
];

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        let span = if self.x1 > self.x0 { self.x1 - self.x0 } else { 1.0 };
        MARGIN + (x - self.x0) / span * (W - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        let span = if self.y1 > self.y0 { self.y1 - self.y0 } else { 1.0 };
        H - MARGIN - (y - self.y0) / span * (H - 2.0 * MARGIN)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn open(out: &mut String, title: &str, xlabel: &str, ylabel: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 12.0, escape(xlabel));
    let _ = writeln!(
        out,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(ylabel)
    );
}

fn axes(out: &mut String, f: &Frame, xticks: &[(f64, String)], yticks: &[f64]) {
    let (l, r, t, b) = (MARGIN, W - MARGIN, MARGIN, H - MARGIN);
    let _ = writeln!(out, r#"<path d="M{l} {t}V{b}H{r}" fill="none" stroke="black"/>"#);
    for (x, label) in xticks {
        let p = f.px(*x);
        let _ = writeln!(out, r#"<line x1="{p:.2}" y1="{b}" x2="{p:.2}" y2="{}" stroke="black"/>"#, b + 4.0);
        let _ = writeln!(out, r#"<text x="{p:.2}" y="{}" text-anchor="middle">{}</text>"#, b + 18.0, escape(label));
    }
    for &y in yticks {
        let p = f.py(y);
        let _ = writeln!(out, r#"<line x1="{}" y1="{p:.2}" x2="{l}" y2="{p:.2}" stroke="black"/>"#, l - 4.0);
        let _ = writeln!(out, r#"<text x="{}" y="{:.2}" text-anchor="end">{y:.1}</text>"#, l - 6.0, p + 4.0);
    }
}

fn legend(out: &mut String, labels: &[(String, &str)]) {
    for (i, (label, color)) in labels.iter().enumerate() {
        let y = MARGIN + 6.0 + 16.0 * i as f64;
        let x = W - MARGIN - 150.0;
        let _ = writeln!(out, r#"<rect x="{x}" y="{}" width="10" height="10" fill="{color}"/>"#, y - 9.0);
        let _ = writeln!(out, r#"<text x="{}" y="{y}">{}</text>"#, x + 14.0, escape(label));
    }
}

fn polyline(f: &Frame, pts: &[(f64, f64)]) -> String {
    let mut d = String::new();
    for (i, &(x, y)) in pts.iter().enumerate() {
        let _ = write!(d, "{}{:.2} {:.2}", if i == 0 { "M" } else { "L" }, f.px(x), f.py(y));
    }
    d
}

fn unit_ticks() -> Vec<f64> {
    (0..=5).map(|i| i as f64 * 0.2).collect()
}

/// One band per series: `(label, per-epoch (mean, std))`, the mean drawn as
/// a line over a shaded `mean +/- std` region.
pub fn band_plot(title: &str, series: &[(String, Vec<(f64, f64)>)]) -> String {
    let n = series.iter().map(|(_, v)| v.len()).max().unwrap_or(1).max(1);
    let f = Frame { x0: 1.0, x1: n as f64, y0: 0.0, y1: 1.0 };
    let mut out = String::new();
    open(&mut out, title, "epoch", "training accuracy");
    let step = (n / 6).max(1);
    let xt: Vec<(f64, String)> = (1..=n).step_by(step).map(|e| (e as f64, e.to_string())).collect();
    axes(&mut out, &f, &xt, &unit_ticks());
    let mut keys = Vec::new();
    for (i, (label, vals)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let upper: Vec<(f64, f64)> = vals.iter().enumerate().map(|(e, &(m, s))| ((e + 1) as f64, (m + s).min(1.0))).collect();
        let lower: Vec<(f64, f64)> = vals.iter().enumerate().rev().map(|(e, &(m, s))| ((e + 1) as f64, (m - s).max(0.0))).collect();
        let mut ring = upper;
        ring.extend(lower);
        let _ = writeln!(out, r#"<path d="{}Z" fill="{color}" fill-opacity="0.2" stroke="none"/>"#, polyline(&f, &ring));
        let mean: Vec<(f64, f64)> = vals.iter().enumerate().map(|(e, &(m, _))| ((e + 1) as f64, m)).collect();
        let _ = writeln!(out, r#"<path d="{}" fill="none" stroke="{color}" stroke-width="2"/>"#, polyline(&f, &mean));
        keys.push((label.clone(), color));
    }
    legend(&mut out, &keys);
    out.push_str("</svg>\n");
    out
}

/// ROC curves, one labelled polyline each, plus the chance diagonal.
pub fn roc_overlay(title: &str, curves: &[(String, Vec<(f64, f64)>)]) -> String {
    let f = Frame { x0: 0.0, x1: 1.0, y0: 0.0, y1: 1.0 };
    let mut out = String::new();
    open(&mut out, title, "1 - specificity", "sensitivity");
    let xt: Vec<(f64, String)> = unit_ticks().into_iter().map(|x| (x, format!("{x:.1}"))).collect();
    axes(&mut out, &f, &xt, &unit_ticks());
    let _ = writeln!(
        out,
        r##"<path d="{}" fill="none" stroke="#999" stroke-dasharray="4 4"/>"##,
        polyline(&f, &[(0.0, 0.0), (1.0, 1.0)])
    );
    let mut keys = Vec::new();
    for (i, (label, pts)) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let _ = writeln!(
            out,
            r#"<path class="roc" data-label="{}" d="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            escape(label),
            polyline(&f, pts)
        );
        keys.push((label.clone(), color));
    }
    legend(&mut out, &keys);
    out.push_str("</svg>\n");
    out
}

pub struct BoxGroup {
    pub group: String,
    pub label: String,
    pub color: &'static str,
    pub values: Vec<f64>,
}

/// Quartiles by linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Box-and-whisker plot. Boxes sharing a `group` sit side by side under one
/// x-axis label; colours distinguish the boxes within a group.
pub fn box_plot(title: &str, ylabel: &str, boxes: &[BoxGroup]) -> String {
    let mut groups: Vec<&str> = Vec::new();
    for b in boxes {
        if !groups.contains(&b.group.as_str()) {
            groups.push(&b.group);
        }
    }
    let f = Frame { x0: 0.0, x1: groups.len() as f64, y0: 0.0, y1: 1.0 };
    let mut out = String::new();
    open(&mut out, title, "intensity normalization", ylabel);
    let xt: Vec<(f64, String)> = groups.iter().enumerate().map(|(i, g)| (i as f64 + 0.5, g.to_string())).collect();
    axes(&mut out, &f, &xt, &unit_ticks());
    let mut keys: Vec<(String, &str)> = Vec::new();
    for (gi, g) in groups.iter().enumerate() {
        let members: Vec<&BoxGroup> = boxes.iter().filter(|b| b.group == *g).collect();
        let slot = 0.8 / members.len() as f64;
        for (j, b) in members.iter().enumerate() {
            let mut v = b.values.clone();
            if v.is_empty() {
                continue;
            }
            v.sort_by(f64::total_cmp);
            let (q1, med, q3) = (quantile(&v, 0.25), quantile(&v, 0.5), quantile(&v, 0.75));
            let (lo, hi) = (v[0], v[v.len() - 1]);
            let xl = f.px(gi as f64 + 0.1 + slot * j as f64 + slot * 0.15);
            let xr = f.px(gi as f64 + 0.1 + slot * (j + 1) as f64 - slot * 0.15);
            let xm = (xl + xr) / 2.0;
            let c = b.color;
            let _ = writeln!(
                out,
                r#"<g class="box" data-label="{}"><line x1="{xm:.2}" y1="{:.2}" x2="{xm:.2}" y2="{:.2}" stroke="{c}"/><rect x="{xl:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{c}" fill-opacity="0.3" stroke="{c}"/><line x1="{xl:.2}" y1="{:.2}" x2="{xr:.2}" y2="{:.2}" stroke="{c}" stroke-width="2"/></g>"#,
                escape(&b.label),
                f.py(hi),
                f.py(lo),
                f.py(q3),
                xr - xl,
                f.py(q1) - f.py(q3),
                f.py(med),
                f.py(med)
            );
            if !keys.iter().any(|(l, _)| *l == b.label) {
                keys.push((b.label.clone(), c));
            }
        }
    }
    legend(&mut out, &keys);
    out.push_str("</svg>\n");
    out
}

/// Grey-scale raster, one rect per pixel, scaled to the image maximum.
pub fn image_svg(img: &Image2d) -> String {
    let max = img.pixels.iter().fold(0.0f32, |m, &v| m.max(v));
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}" shape-rendering="crispEdges">"#,
        img.width * 8,
        img.height * 8,
        img.width,
        img.height
    );
    for y in 0..img.height {
        for x in 0..img.width {
            let g = grey(img.get(y, x), max);
            let _ = writeln!(out, r#"<rect x="{x}" y="{y}" width="1" height="1" fill="rgb({g},{g},{g})"/>"#);
        }
    }
    out.push_str("</svg>\n");
    out
}

pub(crate) fn grey(v: f32, max: f32) -> u8 {
    if max > 0.0 {
        (v / max * 255.0).round().clamp(0.0, 255.0) as u8
    } else {
        0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quartiles() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile(&v, 0.5), 3.0);
        assert_eq!(quantile(&v, 0.25), 2.0);
        assert_eq!(quantile(&[1.0, 2.0], 0.5), 1.5);
    }

    #[test]
    fn overlay_labels_each_curve() {
        let curves: Vec<(String, Vec<(f64, f64)>)> =
            ["no_u", "int_u"].iter().map(|t| (t.to_string(), vec![(0.0, 0.0), (0.5, 0.9), (1.0, 1.0)])).collect();
        let svg = roc_overlay("ROC", &curves);
        assert_eq!(svg.matches(r#"class="roc""#).count(), 2);
        assert!(svg.contains(r#"data-label="int_u""#));
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
    }

    #[test]
    fn image_has_one_rect_per_pixel() {
        let img = Image2d { width: 3, height: 2, pixels: vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0] };
        assert_eq!(image_svg(&img).matches("<rect").count(), 6);
        assert_eq!(grey(5.0, 5.0), 255);
    }
}
