//! Minimal self-contained SVG line charts.

use std::fmt::Write;

use crate::error::{Error, Result};

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SeriesStyle {
    #[default]
    Line,
    Points,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub style: SeriesStyle,
}

impl Series {
    pub fn line(label: impl Into<String>, x: Vec<f64>, y: Vec<f64>) -> Self {
        Self { label: label.into(), x, y, style: SeriesStyle::Line }
    }

    pub fn points(label: impl Into<String>, x: Vec<f64>, y: Vec<f64>) -> Self {
        Self { label: label.into(), x, y, style: SeriesStyle::Points }
    }
}

/// Vertical dashed line at `x`.
#[derive(Clone, Debug, PartialEq)]
pub struct Marker {
    pub x: f64,
    pub label: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlotOptions {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_y: bool,
    /// Fixed y range; data outside is clipped.
    pub y_range: Option<(f64, f64)>,
    pub width: f64,
    pub height: f64,
}

impl Default for PlotOptions {
    fn default() -> Self {
        Self {
            title: String::new(),
            x_label: String::new(),
            y_label: String::new(),
            log_y: false,
            y_range: None,
            width: 640.0,
            height: 420.0,
        }
    }
}

const MARGIN_LEFT: f64 = 72.0;
const MARGIN_RIGHT: f64 = 150.0;
const MARGIN_TOP: f64 = 36.0;
const MARGIN_BOTTOM: f64 = 52.0;

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if (1e-3..1e4).contains(&a) {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_owned()
    } else {
        format!("{v:.0e}")
    }
}

fn nice_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= 6.0)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    log_y: bool,
    left: f64,
    top: f64,
    w: f64,
    h: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        self.left + (x - self.x0) / (self.x1 - self.x0) * self.w
    }

    fn py(&self, y: f64) -> f64 {
        let t = if self.log_y { y.log10() } else { y };
        let py = self.top + self.h - (t - self.y0) / (self.y1 - self.y0) * self.h;
        py.clamp(-1e6, 1e6)
    }
}

fn widen(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        let pad = 0.04 * (hi - lo);
        (lo - pad, hi + pad)
    } else {
        let pad = if lo == 0.0 { 1.0 } else { 0.1 * lo.abs() };
        (lo - pad, hi + pad)
    }
}

/// Renders `series` as one chart. With `log_y`, non-positive y values are left
/// out. Fails with [`Error::EmptySeries`] when there is nothing to draw, when
/// a value is not finite, and with a dimension error when a series has
/// different x and y lengths.
pub fn render_line_svg(series: &[Series], markers: &[Marker], opts: &PlotOptions) -> Result<String> {
    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#,
        w = opts.width,
        h = opts.height
    )
    .unwrap();
    draw_chart(&mut out, "plot", 0.0, 0.0, series, markers, opts)?;
    out.push_str("</svg>\n");
    Ok(out)
}

/// Several charts side by side in one SVG.
pub fn render_panel_svg(panels: &[(Vec<Series>, Vec<Marker>, PlotOptions)]) -> Result<String> {
    if panels.is_empty() {
        return Err(Error::EmptySeries("no panels".into()));
    }
    let width: f64 = panels.iter().map(|p| p.2.width).sum();
    let height = panels.iter().map(|p| p.2.height).fold(0.0, f64::max);
    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    let mut left = 0.0;
    for (i, (series, markers, opts)) in panels.iter().enumerate() {
        draw_chart(&mut out, &format!("panel{i}"), left, 0.0, series, markers, opts)?;
        left += opts.width;
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn draw_chart(
    out: &mut String,
    id: &str,
    left: f64,
    top: f64,
    series: &[Series],
    markers: &[Marker],
    opts: &PlotOptions,
) -> Result<()> {
    if series.is_empty() {
        return Err(Error::EmptySeries("no series given".into()));
    }
    let mut kept: Vec<Vec<(f64, f64)>> = Vec::with_capacity(series.len());
    for s in series {
        if s.x.len() != s.y.len() {
            return Err(Error::dims("render_line_svg", s.x.len(), s.y.len()));
        }
        if s.x.is_empty() {
            return Err(Error::EmptySeries(format!("series `{}` has no points", s.label)));
        }
        if s.x.iter().chain(&s.y).any(|v| !v.is_finite()) {
            return Err(Error::EmptySeries(format!("series `{}` has non-finite values", s.label)));
        }
        let pts: Vec<(f64, f64)> = s
            .x
            .iter()
            .zip(&s.y)
            .map(|(&x, &y)| (x, y))
            .filter(|&(_, y)| !opts.log_y || y > 0.0)
            .collect();
        if pts.is_empty() {
            return Err(Error::EmptySeries(format!("series `{}` has no positive values", s.label)));
        }
        kept.push(pts);
    }
    if markers.iter().any(|m| !m.x.is_finite()) {
        return Err(Error::EmptySeries("marker position is not finite".into()));
    }

    let all = kept.iter().flatten();
    let (mut xmin, mut xmax) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        let t = if opts.log_y { y.log10() } else { y };
        xmin = xmin.min(x);
        xmax = xmax.max(x);
        ymin = ymin.min(t);
        ymax = ymax.max(t);
    }
    for m in markers {
        xmin = xmin.min(m.x);
        xmax = xmax.max(m.x);
    }
    if let Some((lo, hi)) = opts.y_range {
        (ymin, ymax) = if opts.log_y { (lo.log10(), hi.log10()) } else { (lo, hi) };
    }
    let (x0, x1) = widen(xmin, xmax);
    let (y0, y1) = if opts.y_range.is_some() && ymax > ymin { (ymin, ymax) } else { widen(ymin, ymax) };
    let f = Frame {
        x0,
        x1,
        y0,
        y1,
        log_y: opts.log_y,
        left: left + MARGIN_LEFT,
        top: top + MARGIN_TOP,
        w: opts.width - MARGIN_LEFT - MARGIN_RIGHT,
        h: opts.height - MARGIN_TOP - MARGIN_BOTTOM,
    };

    let w = |out: &mut String, s: String| out.push_str(&s);
    w(out, format!(
        "<rect x=\"{left}\" y=\"{top}\" width=\"{}\" height=\"{}\" fill=\"white\"/>\n",
        opts.width, opts.height
    ));
    w(out, format!(
        "<clipPath id=\"{id}-area\"><rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\"/></clipPath>\n",
        f.left, f.top, f.w, f.h
    ));
    if !opts.title.is_empty() {
        w(out, format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
            f.left + f.w / 2.0,
            top + 22.0,
            escape(&opts.title)
        ));
    }
    // axes
    let (bx, by) = (f.left, f.top + f.h);
    w(out, format!(
        "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" stroke=\"#444\"/>\n",
        f.left, f.top, f.w, f.h
    ));
    for t in nice_ticks(x0, x1) {
        let px = f.px(t);
        w(out, format!(
            "<line x1=\"{px:.2}\" y1=\"{by:.2}\" x2=\"{px:.2}\" y2=\"{:.2}\" stroke=\"#444\"/>\n",
            by + 5.0
        ));
        w(out, format!(
            "<text x=\"{px:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>\n",
            by + 18.0,
            fmt_tick(t)
        ));
    }
    let y_ticks: Vec<(f64, String)> = if opts.log_y {
        let (lo, hi) = (y0.ceil() as i64, y1.floor() as i64);
        let stride = ((hi - lo) / 8 + 1).max(1);
        (lo..=hi)
            .filter(|k| (k - lo) % stride == 0)
            .map(|k| (10f64.powi(k as i32), format!("1e{k}")))
            .collect()
    } else {
        nice_ticks(y0, y1).into_iter().map(|t| (t, fmt_tick(t))).collect()
    };
    for (t, label) in y_ticks {
        let py = f.py(t);
        w(out, format!(
            "<line x1=\"{:.2}\" y1=\"{py:.2}\" x2=\"{bx:.2}\" y2=\"{py:.2}\" stroke=\"#444\"/>\n",
            bx - 5.0
        ));
        w(out, format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{label}</text>\n",
            bx - 8.0,
            py + 4.0
        ));
    }
    w(out, format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>\n",
        f.left + f.w / 2.0,
        by + 38.0,
        escape(&opts.x_label)
    ));
    w(out, format!(
        "<text transform=\"translate({:.2} {:.2}) rotate(-90)\" text-anchor=\"middle\">{}</text>\n",
        left + 16.0,
        f.top + f.h / 2.0,
        escape(&opts.y_label)
    ));

    w(out, format!("<g clip-path=\"url(#{id}-area)\">\n"));
    for (i, (s, pts)) in series.iter().zip(&kept).enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        match s.style {
            SeriesStyle::Line => {
                let coords: Vec<String> =
                    pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", f.px(x), f.py(y))).collect();
                w(out, format!(
                    "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.6\" points=\"{}\"/>\n",
                    coords.join(" ")
                ));
            }
            SeriesStyle::Points => {
                for &(x, y) in pts {
                    w(out, format!(
                        "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.5\" fill=\"{color}\"/>\n",
                        f.px(x),
                        f.py(y)
                    ));
                }
            }
        }
    }
    w(out, "</g>\n".into());
    for m in markers {
        let px = f.px(m.x);
        w(out, format!(
            "<line x1=\"{px:.2}\" y1=\"{:.2}\" x2=\"{px:.2}\" y2=\"{by:.2}\" stroke=\"#555\" stroke-dasharray=\"6 4\"/>\n",
            f.top
        ));
        if !m.label.is_empty() {
            w(out, format!(
                "<text x=\"{:.2}\" y=\"{:.2}\" fill=\"#555\">{}</text>\n",
                px + 4.0,
                f.top + 14.0,
                escape(&m.label)
            ));
        }
    }
    // legend
    let lx = f.left + f.w + 12.0;
    for (i, s) in series.iter().enumerate() {
        let ly = f.top + 10.0 + 18.0 * i as f64;
        let color = PALETTE[i % PALETTE.len()];
        w(out, format!(
            "<rect x=\"{lx:.2}\" y=\"{:.2}\" width=\"12\" height=\"4\" fill=\"{color}\"/>\n",
            ly - 4.0
        ));
        w(out, format!(
            "<text x=\"{:.2}\" y=\"{ly:.2}\">{}</text>\n",
            lx + 18.0,
            escape(&s.label)
        ));
    }
    Ok(())
}
