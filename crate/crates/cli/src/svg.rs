//! Minimal native SVG rendering: line plots, heatmaps and ternary heatmaps.
//!
//! Every figure is drawn from the same `Figure` value that feeds the CSV writer.

use std::fmt::Write;

use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct Series {
    pub name: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LinePanel {
    pub title: String,
    pub series: Vec<Series>,
}

/// `z[iy][ix]` is the value at `(x[ix], y[iy])`.
#[derive(Debug, Clone, Serialize)]
pub struct GridPanel {
    pub title: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TernaryPanel {
    pub title: String,
    pub points: Vec<[f64; 3]>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Figure {
    Lines {
        title: String,
        x_label: String,
        y_label: String,
        log_x: bool,
        log_y: bool,
        panels: Vec<LinePanel>,
    },
    Grid {
        title: String,
        x_label: String,
        y_label: String,
        panels: Vec<GridPanel>,
    },
    Ternary {
        title: String,
        panels: Vec<TernaryPanel>,
    },
}

const PW: f64 = 360.0;
const PH: f64 = 300.0;
const ML: f64 = 60.0;
const MR: f64 = 20.0;
const MT: f64 = 50.0;
const MB: f64 = 50.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2",
];

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Viridis-like ramp on [0, 1].
fn color(t: f64) -> String {
    if !t.is_finite() {
        return "#cccccc".into();
    }
    const STOPS: [(f64, f64, f64); 5] = [
        (68.0, 1.0, 84.0),
        (59.0, 82.0, 139.0),
        (33.0, 145.0, 140.0),
        (94.0, 201.0, 98.0),
        (253.0, 231.0, 37.0),
    ];
    let t = t.clamp(0.0, 1.0) * (STOPS.len() - 1) as f64;
    let i = (t.floor() as usize).min(STOPS.len() - 2);
    let f = t - i as f64;
    let (a, b) = (STOPS[i], STOPS[i + 1]);
    let mix = |p: f64, q: f64| (p + f * (q - p)).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

fn tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn fit<'a>(vals: impl Iterator<Item = &'a f64>, log: bool) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &v in vals {
            let v = if log { if v > 0.0 { v.log10() } else { continue } } else { v };
            if v.is_finite() {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo < 1e-12 {
            lo -= 0.5;
            hi += 0.5;
        }
        Self { lo, hi, log }
    }

    fn frac(&self, v: f64) -> Option<f64> {
        let v = if self.log {
            if v > 0.0 { v.log10() } else { return None }
        } else {
            v
        };
        v.is_finite().then(|| (v - self.lo) / (self.hi - self.lo))
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        (0..5)
            .map(|k| {
                let f = k as f64 / 4.0;
                let v = self.lo + f * (self.hi - self.lo);
                (f, if self.log { format!("1e{v:.1}") } else { tick(v) })
            })
            .collect()
    }
}

fn frame(out: &mut String, ox: f64, title: &str, xl: &str, yl: &str, xa: Option<&Axis>, ya: Option<&Axis>) {
    let (x0, y0, w, h) = (ox + ML, MT, PW - ML - MR, PH - MT - MB);
    let _ = writeln!(out, r##"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="12">{}</text>"##, x0 + w / 2.0, MT - 12.0, esc(title));
    let _ = writeln!(out, r##"<rect x="{x0:.1}" y="{y0:.1}" width="{w:.1}" height="{h:.1}" fill="none" stroke="#333"/>"##);
    if let Some(a) = xa {
        for (f, s) in a.ticks() {
            let x = x0 + f * w;
            let _ = writeln!(out, r##"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="#333"/><text x="{x:.1}" y="{:.1}" text-anchor="middle" font-size="9">{}</text>"##, y0 + h, y0 + h + 4.0, y0 + h + 15.0, esc(&s));
        }
    }
    if let Some(a) = ya {
        for (f, s) in a.ticks() {
            let y = y0 + h - f * h;
            let _ = writeln!(out, r##"<line x1="{:.1}" y1="{y:.1}" x2="{x0:.1}" y2="{y:.1}" stroke="#333"/><text x="{:.1}" y="{:.1}" text-anchor="end" font-size="9">{}</text>"##, x0 - 4.0, x0 - 6.0, y + 3.0, esc(&s));
        }
    }
    let _ = writeln!(out, r##"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="10">{}</text>"##, x0 + w / 2.0, PH - 12.0, esc(xl));
    let _ = writeln!(out, r##"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="10" transform="rotate(-90 {:.1} {:.1})">{}</text>"##, ox + 14.0, y0 + h / 2.0, ox + 14.0, y0 + h / 2.0, esc(yl));
}

fn lines(out: &mut String, x_label: &str, y_label: &str, log_x: bool, log_y: bool, panels: &[LinePanel]) {
    for (p, panel) in panels.iter().enumerate() {
        let ox = p as f64 * PW;
        let xa = Axis::fit(panel.series.iter().flat_map(|s| s.x.iter()), log_x);
        let ya = Axis::fit(panel.series.iter().flat_map(|s| s.y.iter()), log_y);
        frame(out, ox, &panel.title, x_label, y_label, Some(&xa), Some(&ya));
        let (x0, y0, w, h) = (ox + ML, MT, PW - ML - MR, PH - MT - MB);
        for (k, s) in panel.series.iter().enumerate() {
            let c = PALETTE[k % PALETTE.len()];
            let _ = writeln!(out, r##"<g class="series" data-name="{}" data-points="{}">"##, esc(&s.name), s.x.len());
            let mut seg: Vec<String> = Vec::new();
            let flush = |seg: &mut Vec<String>, out: &mut String| {
                if seg.len() > 1 {
                    let _ = writeln!(out, r##"<polyline fill="none" stroke="{c}" stroke-width="1.2" points="{}"/>"##, seg.join(" "));
                }
                seg.clear();
            };
            for (x, y) in s.x.iter().zip(&s.y) {
                match (xa.frac(*x), ya.frac(*y)) {
                    (Some(fx), Some(fy)) => seg.push(format!("{:.2},{:.2}", x0 + fx * w, y0 + h - fy * h)),
                    _ => flush(&mut seg, out),
                }
            }
            flush(&mut seg, out);
            let _ = writeln!(out, "</g>");
            let ly = y0 + 12.0 + 11.0 * k as f64;
            let _ = writeln!(out, r##"<text x="{:.1}" y="{ly:.1}" font-size="8" fill="{c}">{}</text>"##, x0 + 4.0, esc(&s.name));
        }
    }
}

fn value_range<'a>(vals: impl Iterator<Item = &'a f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in vals.filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-300 {
        (lo, lo + 1.0)
    } else {
        (lo, hi)
    }
}

fn colorbar(out: &mut String, ox: f64, lo: f64, hi: f64) {
    let x = ox + PW - MR - 100.0;
    let y = PH - 22.0;
    for k in 0..20 {
        let _ = writeln!(out, r##"<rect x="{:.1}" y="{y:.1}" width="5" height="6" fill="{}"/>"##, x + 5.0 * k as f64, color(k as f64 / 19.0));
    }
    let _ = writeln!(out, r##"<text x="{:.1}" y="{:.1}" font-size="8" text-anchor="end">{}</text><text x="{:.1}" y="{:.1}" font-size="8">{}</text>"##, x - 2.0, y + 6.0, esc(&tick(lo)), x + 102.0, y + 6.0, esc(&tick(hi)));
}

fn grid(out: &mut String, x_label: &str, y_label: &str, panels: &[GridPanel]) {
    for (p, panel) in panels.iter().enumerate() {
        let ox = p as f64 * PW;
        let xa = Axis::fit(panel.x.iter(), false);
        let ya = Axis::fit(panel.y.iter(), false);
        frame(out, ox, &panel.title, x_label, y_label, Some(&xa), Some(&ya));
        let (x0, y0, w, h) = (ox + ML, MT, PW - ML - MR, PH - MT - MB);
        let (lo, hi) = value_range(panel.z.iter().flatten());
        let (nx, ny) = (panel.x.len(), panel.y.len());
        let (cw, ch) = (w / nx as f64, h / ny as f64);
        let _ = writeln!(out, r##"<g class="grid" data-nx="{nx}" data-ny="{ny}">"##);
        for iy in 0..ny {
            for ix in 0..nx {
                let v = panel.z[iy][ix];
                let _ = writeln!(
                    out,
                    r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"##,
                    x0 + ix as f64 * cw,
                    y0 + h - (iy + 1) as f64 * ch,
                    cw + 0.05,
                    ch + 0.05,
                    color((v - lo) / (hi - lo))
                );
            }
        }
        let _ = writeln!(out, "</g>");
        colorbar(out, ox, lo, hi);
    }
}

fn ternary(out: &mut String, panels: &[TernaryPanel]) {
    for (p, panel) in panels.iter().enumerate() {
        let ox = p as f64 * PW;
        frame(out, ox, &panel.title, "", "", None, None);
        let (x0, y0, w, h) = (ox + ML, MT, PW - ML - MR, PH - MT - MB);
        let side = w.min(h * 2.0 / 3f64.sqrt()) * 0.92;
        let cx = x0 + w / 2.0;
        let base = y0 + h - 8.0;
        let v = [
            (cx - side / 2.0, base),
            (cx + side / 2.0, base),
            (cx, base - side * 3f64.sqrt() / 2.0),
        ];
        let at = |q: &[f64; 3]| {
            let s = q[0] + q[1] + q[2];
            (
                (q[0] * v[0].0 + q[1] * v[1].0 + q[2] * v[2].0) / s,
                (q[0] * v[0].1 + q[1] * v[1].1 + q[2] * v[2].1) / s,
            )
        };
        // log scale: densities span several decades near the vertices
        let logs: Vec<f64> = panel.values.iter().map(|v| if *v > 0.0 { v.log10() } else { f64::NAN }).collect();
        let (lo, hi) = value_range(logs.iter());
        let r = side / (2.0 * (panel.points.len() as f64).sqrt().max(1.0));
        let _ = writeln!(out, r##"<g class="ternary" data-points="{}">"##, panel.points.len());
        for (q, l) in panel.points.iter().zip(&logs) {
            let (x, y) = at(q);
            let _ = writeln!(out, r##"<circle cx="{x:.2}" cy="{y:.2}" r="{r:.2}" fill="{}"/>"##, color((l - lo) / (hi - lo)));
        }
        let _ = writeln!(out, "</g>");
        let _ = writeln!(
            out,
            r##"<polygon fill="none" stroke="#333" points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2}"/>"##,
            v[0].0, v[0].1, v[1].0, v[1].1, v[2].0, v[2].1
        );
        for (k, (x, y)) in v.iter().enumerate() {
            let dy = if k == 2 { -4.0 } else { 12.0 };
            let _ = writeln!(out, r##"<text x="{x:.1}" y="{:.1}" font-size="9" text-anchor="middle">w{}</text>"##, y + dy, k + 1);
        }
        colorbar(out, ox, lo, hi);
        let _ = writeln!(out, r##"<text x="{:.1}" y="{:.1}" font-size="8">log10 h</text>"##, x0, PH - 16.0);
    }
}

pub fn render(fig: &Figure) -> String {
    let (title, n) = match fig {
        Figure::Lines { title, panels, .. } => (title, panels.len()),
        Figure::Grid { title, panels, .. } => (title, panels.len()),
        Figure::Ternary { title, panels } => (title, panels.len()),
    };
    let width = PW * n.max(1) as f64;
    let mut out = String::new();
    let _ = writeln!(out, r##"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{:.0}" viewBox="0 0 {width:.0} {:.0}" font-family="sans-serif">"##, PH + 20.0, PH + 20.0);
    let _ = writeln!(out, "<title>{}</title>", esc(title));
    let _ = writeln!(out, "<desc>{}</desc>", esc(&describe(fig)));
    let _ = writeln!(out, r##"<rect width="100%" height="100%" fill="white"/>"##);
    let _ = writeln!(out, r##"<g transform="translate(0,20)">"##);
    match fig {
        Figure::Lines { x_label, y_label, log_x, log_y, panels, .. } => lines(&mut out, x_label, y_label, *log_x, *log_y, panels),
        Figure::Grid { x_label, y_label, panels, .. } => grid(&mut out, x_label, y_label, panels),
        Figure::Ternary { panels, .. } => ternary(&mut out, panels),
    }
    out.push_str("</g>\n</svg>\n");
    out
}

/// Panel and point counts, matching the CSV row count.
pub fn describe(fig: &Figure) -> String {
    match fig {
        Figure::Lines { panels, .. } => {
            let series: usize = panels.iter().map(|p| p.series.len()).sum();
            let points: usize = panels.iter().flat_map(|p| &p.series).map(|s| s.x.len()).sum();
            format!("panels={} series={series} points={points}", panels.len())
        }
        Figure::Grid { panels, .. } => {
            let points: usize = panels.iter().map(|p| p.x.len() * p.y.len()).sum();
            format!("panels={} points={points}", panels.len())
        }
        Figure::Ternary { panels, .. } => {
            let points: usize = panels.iter().map(|p| p.points.len()).sum();
            format!("panels={} points={points}", panels.len())
        }
    }
}
