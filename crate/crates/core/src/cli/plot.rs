//! Hand-written SVG output. Every number goes through fixed formatting so identical tables give
//! identical bytes.

use std::fmt::Write as _;

use super::config::{AxisName, AxisScale, PlotPart};
use super::table::Table;
use crate::error::{Error, Result};

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"];

/// What to draw from a table.
#[derive(Debug, Clone)]
pub struct PlotSpec {
    pub channel: String,
    pub part: PlotPart,
    pub axes: Vec<(AxisName, AxisScale)>,
    pub title: String,
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn num(v: f64) -> String {
    format!("{v:.2}")
}

fn tick(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 {
        "0".into()
    } else if (1e-2..1e4).contains(&a) {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.2e}")
    }
}

fn channel_units(channel: &str) -> &'static str {
    if channel.starts_with("chi2") {
        "m/V"
    } else {
        "dimensionless"
    }
}

struct Scale {
    lo: f64,
    hi: f64,
    log: bool,
    a: f64,
    b: f64,
}

impl Scale {
    fn new(lo: f64, hi: f64, log: bool, a: f64, b: f64) -> Self {
        let (mut lo, mut hi) = if log { (lo.log10(), hi.log10()) } else { (lo, hi) };
        if hi - lo <= f64::EPSILON * hi.abs().max(lo.abs()).max(1e-300) {
            let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.05 };
            lo -= pad;
            hi += pad;
        }
        Self { lo, hi, log, a, b }
    }

    fn map(&self, v: f64) -> f64 {
        let v = if self.log { v.log10() } else { v };
        self.a + (v - self.lo) / (self.hi - self.lo) * (self.b - self.a)
    }

    fn ticks(&self) -> Vec<f64> {
        (0..5)
            .map(|i| {
                let t = self.lo + (self.hi - self.lo) * i as f64 / 4.0;
                if self.log {
                    10f64.powf(t)
                } else {
                    t
                }
            })
            .collect()
    }
}

fn value(v: Option<(f64, f64)>, imag: bool) -> Option<f64> {
    let (re, im) = v?;
    let x = if imag { im } else { re };
    x.is_finite().then_some(x)
}

fn parts(part: PlotPart) -> Vec<bool> {
    match part {
        PlotPart::Re => vec![false],
        PlotPart::Im => vec![true],
        PlotPart::Both => vec![false, true],
    }
}

fn part_name(imag: bool) -> &'static str {
    if imag {
        "Im"
    } else {
        "Re"
    }
}

/// Renders `spec` from `table`: a line plot for one axis, heatmaps for two.
pub fn emit_plot(table: &Table, spec: &PlotSpec) -> Result<String> {
    if table.rows.is_empty() {
        return Err(Error::EmptySeries("the table has no rows".into()));
    }
    let ch = table
        .channel_index(&spec.channel)
        .ok_or_else(|| Error::Config(format!("no column {} in the table", spec.channel)))?;
    match spec.axes.len() {
        1 => line_plot(table, spec, ch),
        2 => heatmap(table, spec, ch),
        n => Err(Error::Config(format!("cannot plot a table with {n} sweep axes"))),
    }
}

fn frame(out: &mut String, w: f64, h: f64, title: &str) {
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}" font-family="sans-serif" font-size="12">"#,
        num(w),
        num(h),
        num(w),
        num(h)
    );
    let _ = writeln!(out, r#"<rect x="0" y="0" width="{}" height="{}" fill="white"/>"#, num(w), num(h));
    let _ = writeln!(out, r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#, num(w / 2.0), esc(title));
}

fn axes_box(out: &mut String, xs: &Scale, ys: &Scale, xlabel: &str, ylabel: &str) {
    let (x0, x1, y0, y1) = (xs.a, xs.b, ys.b, ys.a);
    let _ = writeln!(
        out,
        r#"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        num(x0),
        num(y0),
        num(x1 - x0),
        num(y1 - y0)
    );
    for t in xs.ticks() {
        let x = xs.map(t);
        let _ = writeln!(out, r#"<line x1="{0}" y1="{1}" x2="{0}" y2="{2}" stroke="black"/>"#, num(x), num(y1), num(y1 + 5.0));
        let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, num(x), num(y1 + 18.0), tick(t));
    }
    for t in ys.ticks() {
        let y = ys.map(t);
        let _ = writeln!(out, r#"<line x1="{0}" y1="{1}" x2="{2}" y2="{1}" stroke="black"/>"#, num(x0 - 5.0), num(y), num(x0));
        let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, num(x0 - 8.0), num(y + 4.0), tick(t));
    }
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, num((x0 + x1) / 2.0), num(y1 + 38.0), esc(xlabel));
    let (lx, ly) = (x0 - 72.0, (y0 + y1) / 2.0);
    let _ = writeln!(
        out,
        r#"<text x="{0}" y="{1}" text-anchor="middle" transform="rotate(-90 {0} {1})">{2}</text>"#,
        num(lx),
        num(ly),
        esc(ylabel)
    );
}

fn line_plot(table: &Table, spec: &PlotSpec, ch: usize) -> Result<String> {
    let (axis, scale) = spec.axes[0];
    let log = scale == AxisScale::Log;
    let imag_parts = parts(spec.part);
    let series = table.series();

    let mut xr = (f64::INFINITY, f64::NEG_INFINITY);
    let mut yr = (f64::INFINITY, f64::NEG_INFINITY);
    let mut skipped = 0usize;
    for r in &table.rows {
        let x = r.axes[0];
        for &im in &imag_parts {
            match value(r.values[ch], im) {
                Some(y) if x.is_finite() && (!log || x > 0.0) => {
                    xr = (xr.0.min(x), xr.1.max(x));
                    yr = (yr.0.min(y), yr.1.max(y));
                }
                _ => skipped += 1,
            }
        }
    }
    if !xr.0.is_finite() {
        return Err(Error::EmptySeries(format!("no finite values of {} to plot", spec.channel)));
    }

    let legend_rows = series.len() * imag_parts.len() + usize::from(skipped > 0);
    let (w, plot_h) = (760.0, 440.0);
    let legend_h = 18.0 * legend_rows as f64 + 10.0;
    let h = plot_h + legend_h;
    let xs = Scale::new(xr.0, xr.1, log, 100.0, w - 30.0);
    let ys = Scale::new(yr.0, yr.1, false, plot_h - 70.0, 40.0);

    let mut out = String::new();
    frame(&mut out, w, h, &spec.title);
    let names: Vec<String> = imag_parts.iter().map(|&im| format!("{} {}", part_name(im), spec.channel)).collect();
    let ylabel = format!("{} ({})", names.join(", "), channel_units(&spec.channel));
    axes_box(&mut out, &xs, &ys, axis.label(), &ylabel);

    let mut legend_y = plot_h;
    for (si, s) in series.iter().enumerate() {
        let color = PALETTE[si % PALETTE.len()];
        for &im in &imag_parts {
            let dash = if im { r#" stroke-dasharray="6 3""# } else { "" };
            // Gaps (failed or non-finite points) split the curve.
            let mut segments: Vec<Vec<(f64, f64)>> = vec![Vec::new()];
            for r in table.rows.iter().filter(|r| &r.series == s) {
                let x = r.axes[0];
                match value(r.values[ch], im) {
                    Some(y) if x.is_finite() && (!log || x > 0.0) => segments.last_mut().unwrap().push((xs.map(x), ys.map(y))),
                    _ => segments.push(Vec::new()),
                }
            }
            for seg in segments.iter().filter(|s| !s.is_empty()) {
                if seg.len() == 1 {
                    let _ = writeln!(out, r#"<circle cx="{}" cy="{}" r="2.5" fill="{color}"/>"#, num(seg[0].0), num(seg[0].1));
                    continue;
                }
                let pts: Vec<String> = seg.iter().map(|(x, y)| format!("{},{}", num(*x), num(*y))).collect();
                let _ = writeln!(
                    out,
                    r#"<polyline fill="none" stroke="{color}" stroke-width="1.6"{dash} points="{}"/>"#,
                    pts.join(" ")
                );
            }
            let label = if s.is_empty() { part_name(im).to_string() } else { format!("{s} ({})", part_name(im)) };
            let _ = writeln!(
                out,
                r#"<line x1="110" y1="{0}" x2="140" y2="{0}" stroke="{color}" stroke-width="1.6"{dash}/>"#,
                num(legend_y)
            );
            let _ = writeln!(out, r#"<text x="148" y="{}">{}</text>"#, num(legend_y + 4.0), esc(&label));
            legend_y += 18.0;
        }
    }
    if skipped > 0 {
        let _ = writeln!(
            out,
            r#"<text x="110" y="{}" font-style="italic">{skipped} point(s) skipped: failed or non-finite</text>"#,
            num(legend_y + 4.0)
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn color_map(t: f64) -> String {
    // Blue → white → red, for signed data.
    let t = t.clamp(0.0, 1.0);
    let (r, g, b) = if t < 0.5 {
        let u = t / 0.5;
        (40.0 + 215.0 * u, 70.0 + 185.0 * u, 200.0 + 55.0 * u)
    } else {
        let u = (t - 0.5) / 0.5;
        (255.0 - 35.0 * u, 255.0 - 205.0 * u, 255.0 - 215.0 * u)
    };
    format!("#{:02x}{:02x}{:02x}", r.round() as u8, g.round() as u8, b.round() as u8)
}

fn sorted_unique(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| a.to_bits() == b.to_bits());
    v
}

fn heatmap(table: &Table, spec: &PlotSpec, ch: usize) -> Result<String> {
    let (xa, xscale) = spec.axes[0];
    let (ya, yscale) = spec.axes[1];
    let series = table.series();
    let imag_parts = parts(spec.part);
    let panels: Vec<(&String, bool)> = series.iter().flat_map(|s| imag_parts.iter().map(move |&im| (s, im))).collect();

    let (pw, ph) = (420.0, 360.0);
    let w = pw * panels.len() as f64;
    let h = ph + 90.0;
    let mut out = String::new();
    frame(&mut out, w, h, &spec.title);
    let mut any = false;
    for (pi, (s, im)) in panels.iter().enumerate() {
        let rows: Vec<_> = table.rows.iter().filter(|r| &r.series == *s).collect();
        let xv = sorted_unique(rows.iter().map(|r| r.axes[0]).collect());
        let yv = sorted_unique(rows.iter().map(|r| r.axes[1]).collect());
        let vals: Vec<f64> = rows.iter().filter_map(|r| value(r.values[ch], *im)).collect();
        let skipped = rows.len() - vals.len();
        if vals.is_empty() || xv.len() < 2 || yv.len() < 2 {
            continue;
        }
        any = true;
        let vmax = vals.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let vmax = if vmax > 0.0 { vmax } else { 1.0 };
        let ox = pi as f64 * pw;
        let xs = Scale::new(xv[0], xv[xv.len() - 1], xscale == AxisScale::Log, ox + 90.0, ox + pw - 40.0);
        let ys = Scale::new(yv[0], yv[yv.len() - 1], yscale == AxisScale::Log, ph - 20.0, 50.0);
        // Cell edges sit halfway between neighbouring grid values.
        let edges = |v: &[f64], sc: &Scale| -> Vec<f64> {
            let m: Vec<f64> = v.iter().map(|&x| sc.map(x)).collect();
            let mut e = vec![m[0] - (m[1] - m[0]) / 2.0];
            e.extend(m.windows(2).map(|p| (p[0] + p[1]) / 2.0));
            e.push(m[m.len() - 1] + (m[m.len() - 1] - m[m.len() - 2]) / 2.0);
            e
        };
        let (ex, ey) = (edges(&xv, &xs), edges(&yv, &ys));
        for r in &rows {
            let Some(v) = value(r.values[ch], *im) else { continue };
            let i = xv.iter().position(|x| x.to_bits() == r.axes[0].to_bits()).unwrap_or(0);
            let j = yv.iter().position(|y| y.to_bits() == r.axes[1].to_bits()).unwrap_or(0);
            let (xa0, xa1) = (ex[i].min(ex[i + 1]), ex[i].max(ex[i + 1]));
            let (ya0, ya1) = (ey[j].min(ey[j + 1]), ey[j].max(ey[j + 1]));
            let _ = writeln!(
                out,
                r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{}"/>"#,
                num(xa0),
                num(ya0),
                num(xa1 - xa0),
                num(ya1 - ya0),
                color_map(0.5 + 0.5 * v / vmax)
            );
        }
        let ylabel = ya.label();
        axes_box(&mut out, &xs, &ys, xa.label(), ylabel);
        let head = if s.is_empty() { String::new() } else { format!("{s}: ") };
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle">{}{} {} ({}), colour range ±{}</text>"#,
            num(ox + pw / 2.0 + 25.0),
            num(ph + 40.0),
            esc(&head),
            part_name(*im),
            esc(&spec.channel),
            channel_units(&spec.channel),
            tick(vmax)
        );
        if skipped > 0 {
            let _ = writeln!(
                out,
                r#"<text x="{}" y="{}" text-anchor="middle" font-style="italic">{skipped} cell(s) skipped: failed or non-finite</text>"#,
                num(ox + pw / 2.0 + 25.0),
                num(ph + 58.0)
            );
        }
    }
    if !any {
        return Err(Error::EmptySeries(format!("no finite values of {} to plot", spec.channel)));
    }
    out.push_str("</svg>\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::table::Row;

    fn table(values: Vec<Option<(f64, f64)>>) -> Table {
        let rows = values
            .into_iter()
            .enumerate()
            .map(|(i, v)| Row { series: "s".into(), axes: vec![i as f64], values: vec![v], formula: "f".into(), error: String::new() })
            .collect();
        Table { axes: vec!["detuning".into()], channels: vec!["chi1_xx".into()], rows }
    }

    fn spec() -> PlotSpec {
        PlotSpec { channel: "chi1_xx".into(), part: PlotPart::Re, axes: vec![(AxisName::Detuning, AxisScale::Linear)], title: "t".into() }
    }

    #[test]
    fn line_plot_is_stable_and_well_formed() {
        let t = table(vec![Some((1.0, 0.0)), Some((2.0, 0.5)), Some((1.5, 0.1))]);
        let a = emit_plot(&t, &spec()).unwrap();
        assert_eq!(a, emit_plot(&t, &spec()).unwrap());
        assert!(a.starts_with("<?xml") && a.trim_end().ends_with("</svg>"));
        assert_eq!(a.matches("<polyline").count(), 1);
        assert!(a.contains("detuning Δ/ω_x"));
    }

    #[test]
    fn non_finite_rows_are_noted() {
        let t = table(vec![Some((1.0, 0.0)), Some((f64::NAN, 0.0)), None, Some((2.0, 0.0)), Some((3.0, 0.0))]);
        let s = emit_plot(&t, &spec()).unwrap();
        assert!(s.contains("2 point(s) skipped"));
        assert!(!s.contains("NaN"));
    }

    #[test]
    fn empty_tables_are_rejected() {
        assert!(matches!(emit_plot(&table(vec![]), &spec()), Err(Error::EmptySeries(_))));
        assert!(matches!(emit_plot(&table(vec![None, Some((f64::NAN, 0.0))]), &spec()), Err(Error::EmptySeries(_))));
    }

    #[test]
    fn two_axes_give_a_heatmap() {
        let mut rows = Vec::new();
        for i in 0..3 {
            for j in 0..2 {
                rows.push(Row {
                    series: "MS".into(),
                    axes: vec![i as f64, j as f64],
                    values: vec![Some((i as f64 - j as f64, 0.0))],
                    formula: "f".into(),
                    error: String::new(),
                });
            }
        }
        let t = Table { axes: vec!["detuning".into(), "asymmetry".into()], channels: vec!["chi1_xx".into()], rows };
        let mut sp = spec();
        sp.axes.push((AxisName::Asymmetry, AxisScale::Linear));
        let s = emit_plot(&t, &sp).unwrap();
        assert_eq!(s.matches("<rect").count(), 2 + 6);
    }
}
