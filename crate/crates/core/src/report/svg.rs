//! Standalone SVG figures. Every number is printed with at most six
//! significant digits so output is stable across platforms.

use std::fmt::Write;

use crate::numerics::Matrix;
use crate::{Error, Result};

/// Points drawn per scatter panel at most.
pub const PANEL_POINTS: usize = 500;

const FONT: &str = r#"font-family="sans-serif" font-size="12""#;

/// Six significant digits, trailing zeros trimmed.
pub fn fmt_num(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return "0".into();
    }
    let magnitude = v.abs().log10().floor() as i32;
    if !(-4..=9).contains(&magnitude) {
        return format!("{v:.5e}");
    }
    let decimals = (5 - magnitude).max(0) as usize;
    let s = format!("{v:.decimals$}");
    let s = if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        &s
    };
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Maps `t` in [0, 1] onto a perceptually ordered blue-green-yellow ramp.
pub fn colormap(t: f64) -> String {
    const STOPS: [[f64; 3]; 5] = [
        [68.0, 1.0, 84.0],
        [59.0, 82.0, 139.0],
        [33.0, 145.0, 140.0],
        [94.0, 201.0, 98.0],
        [253.0, 231.0, 37.0],
    ];
    let t = if t.is_finite() {
        t.clamp(0.0, 1.0)
    } else {
        0.0
    };
    let pos = t * (STOPS.len() - 1) as f64;
    let i = (pos.floor() as usize).min(STOPS.len() - 2);
    let f = pos - i as f64;
    let c: Vec<u8> = (0..3)
        .map(|k| (STOPS[i][k] + f * (STOPS[i + 1][k] - STOPS[i][k])).round() as u8)
        .collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

fn open(width: f64, height: f64) -> String {
    format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
         <svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
         <rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n",
        w = fmt_num(width),
        h = fmt_num(height)
    )
}

fn text(out: &mut String, x: f64, y: f64, anchor: &str, s: &str) {
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="{anchor}" {FONT}>{}</text>"#,
        fmt_num(x),
        fmt_num(y),
        escape(s)
    );
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    if !(hi > lo) {
        (lo - 0.5, lo + 0.5)
    } else {
        (lo, hi)
    }
}

/// Bar chart of relevances in the given order; bar heights are proportional to the values.
pub fn relevance_bars(values: &[f64], title: &str) -> Result<String> {
    if values.is_empty() {
        return Err(Error::Data("no relevances to plot".into()));
    }
    if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::Data(
            "relevances must be finite and non-negative".into(),
        ));
    }
    let (left, top, plot_w, plot_h) = (60.0, 40.0, 60.0 * values.len() as f64, 300.0);
    let (width, height) = (left + plot_w + 20.0, top + plot_h + 50.0);
    let max = values.iter().copied().fold(0.0, f64::max);
    let scale = if max > 0.0 { plot_h / max } else { 0.0 };

    let mut out = open(width, height);
    text(&mut out, width / 2.0, 24.0, "middle", title);
    let base = top + plot_h;
    let _ = writeln!(
        out,
        r#"<path d="M{l} {t} V{b} H{r}" stroke="black" fill="none"/>"#,
        l = fmt_num(left),
        t = fmt_num(top),
        b = fmt_num(base),
        r = fmt_num(left + plot_w)
    );
    for k in 0..=4 {
        let v = max * k as f64 / 4.0;
        let y = base - v * scale;
        text(&mut out, left - 6.0, y + 4.0, "end", &fmt_num(v));
    }
    for (i, &v) in values.iter().enumerate() {
        let h = v * scale;
        let x = left + 60.0 * i as f64 + 10.0;
        let _ = writeln!(
            out,
            r##"<rect class="bar" x="{}" y="{}" width="40" height="{}" fill="#3b528b"><title>{}</title></rect>"##,
            fmt_num(x),
            fmt_num(base - h),
            fmt_num(h),
            fmt_num(v)
        );
        text(
            &mut out,
            x + 20.0,
            base + 18.0,
            "middle",
            &(i + 1).to_string(),
        );
    }
    text(
        &mut out,
        left + plot_w / 2.0,
        base + 40.0,
        "middle",
        "latent (by relevance)",
    );
    out.push_str("</svg>\n");
    Ok(out)
}

/// Grid of ⟨z⟩ against each feature: one row per entry of `latents`
/// (column index into `z_mean`, label), one column per feature.
pub fn scatter_grid(
    features: &Matrix,
    names: &[String],
    z_mean: &Matrix,
    latents: &[(usize, String)],
) -> Result<String> {
    if latents.is_empty() || names.is_empty() {
        return Err(Error::Data(
            "scatter grid needs at least one latent and one feature".into(),
        ));
    }
    if features.cols() != names.len() || features.rows() != z_mean.rows() {
        return Err(Error::shape(
            "scatter_grid",
            format!("{} rows x {} cols", z_mean.rows(), names.len()),
            format!("{:?}", features.shape()),
        ));
    }
    if let Some((j, _)) = latents.iter().find(|(j, _)| *j >= z_mean.cols()) {
        return Err(Error::Data(format!("latent index {j} out of range")));
    }
    let (panel, gap, left, top) = (120.0, 12.0, 50.0, 30.0);
    let width = left + names.len() as f64 * (panel + gap);
    let height = top + latents.len() as f64 * (panel + gap) + 20.0;
    let n = features.rows();
    let stride = n.div_ceil(PANEL_POINTS).max(1);

    let mut out = open(width, height);
    for (c, name) in names.iter().enumerate() {
        text(
            &mut out,
            left + c as f64 * (panel + gap) + panel / 2.0,
            20.0,
            "middle",
            name,
        );
    }
    for (r, (j, label)) in latents.iter().enumerate() {
        let y0 = top + r as f64 * (panel + gap);
        text(&mut out, left - 8.0, y0 + panel / 2.0 + 4.0, "end", label);
        let (zlo, zhi) = range((0..n).map(|i| z_mean.get(i, *j)));
        for c in 0..names.len() {
            let x0 = left + c as f64 * (panel + gap);
            let (xlo, xhi) = range((0..n).map(|i| features.get(i, c)));
            let _ = writeln!(
                out,
                r##"<g class="panel"><rect x="{}" y="{}" width="{p}" height="{p}" fill="none" stroke="#999"/>"##,
                fmt_num(x0),
                fmt_num(y0),
                p = fmt_num(panel)
            );
            for i in (0..n).step_by(stride) {
                let px = x0 + 4.0 + (panel - 8.0) * (features.get(i, c) - xlo) / (xhi - xlo);
                let py = y0 + panel - 4.0 - (panel - 8.0) * (z_mean.get(i, *j) - zlo) / (zhi - zlo);
                let _ = writeln!(
                    out,
                    r##"<circle cx="{}" cy="{}" r="1.2" fill="#21918c"/>"##,
                    fmt_num(px),
                    fmt_num(py)
                );
            }
            out.push_str("</g>\n");
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Events in the `(x1, x2)` plane colored by one latent's posterior mean.
pub fn latent_plane(points: &[[f64; 2]], z: &[f64], labels: [&str; 3]) -> Result<String> {
    if points.is_empty() || points.len() != z.len() {
        return Err(Error::Data(
            "plane plot needs one latent value per point".into(),
        ));
    }
    let (size, margin) = (420.0, 40.0);
    let extent = points
        .iter()
        .flat_map(|p| [p[0].abs(), p[1].abs()])
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let (zlo, zhi) = range(z.iter().copied());
    let map = |v: f64| margin + size * (v + extent) / (2.0 * extent);

    let mut out = open(size + 2.0 * margin + 70.0, size + 2.0 * margin);
    let _ = writeln!(
        out,
        r##"<rect x="{m}" y="{m}" width="{s}" height="{s}" fill="none" stroke="#999"/>"##,
        m = fmt_num(margin),
        s = fmt_num(size)
    );
    for (p, &v) in points.iter().zip(z) {
        let _ = writeln!(
            out,
            r#"<circle cx="{}" cy="{}" r="2.5" fill="{}"/>"#,
            fmt_num(map(p[0])),
            fmt_num(2.0 * margin + size - map(p[1])),
            colormap((v - zlo) / (zhi - zlo))
        );
    }
    text(
        &mut out,
        margin + size / 2.0,
        margin + size + 28.0,
        "middle",
        labels[0],
    );
    text(&mut out, 14.0, margin + size / 2.0, "middle", labels[1]);

    let bar_x = margin + size + 20.0;
    out.push_str("<defs><linearGradient id=\"ramp\" x1=\"0\" y1=\"1\" x2=\"0\" y2=\"0\">\n");
    for k in 0..=4 {
        let t = k as f64 / 4.0;
        let _ = writeln!(
            out,
            r#"<stop offset="{}" stop-color="{}"/>"#,
            fmt_num(t),
            colormap(t)
        );
    }
    out.push_str("</linearGradient></defs>\n");
    let _ = writeln!(
        out,
        r#"<rect x="{}" y="{}" width="14" height="{}" fill="url(#ramp)"/>"#,
        fmt_num(bar_x),
        fmt_num(margin),
        fmt_num(size)
    );
    text(&mut out, bar_x + 7.0, margin - 8.0, "middle", &fmt_num(zhi));
    text(
        &mut out,
        bar_x + 7.0,
        margin + size + 16.0,
        "middle",
        &fmt_num(zlo),
    );
    text(
        &mut out,
        bar_x + 7.0,
        margin + size + 32.0,
        "middle",
        labels[2],
    );
    out.push_str("</svg>\n");
    Ok(out)
}
