//! Bare-bones SVG 1.1 charts: histograms and line plots with linear or
//! log axes. No styling beyond what keeps them readable.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 56.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

#[derive(Clone, Copy)]
pub enum Scale {
    Linear,
    Log,
}

impl Scale {
    fn map(self, x: f64) -> f64 {
        match self {
            Scale::Linear => x,
            Scale::Log => x.log10(),
        }
    }
}

pub struct Series<'a> {
    pub label: &'a str,
    pub points: Vec<(f64, f64)>,
}

fn header(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        PAD + (x - self.x.0) / (self.x.1 - self.x.0) * (W - 2.0 * PAD)
    }

    fn py(&self, y: f64) -> f64 {
        H - PAD - (y - self.y.0) / (self.y.1 - self.y.0) * (H - 2.0 * PAD)
    }

    fn axes(&self, s: &mut String, xlabel: &str, ylabel: &str, xs: Scale, ys: Scale) {
        let _ = writeln!(
            s,
            r#"<path d="M{PAD},{t} V{b} H{r}" fill="none" stroke="black"/>"#,
            t = PAD,
            b = H - PAD,
            r = W - PAD
        );
        for i in 0..=4 {
            let f = i as f64 / 4.0;
            let xv = self.x.0 + f * (self.x.1 - self.x.0);
            let yv = self.y.0 + f * (self.y.1 - self.y.0);
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
                self.px(xv),
                H - PAD + 16.0,
                tick(xv, xs)
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
                PAD - 6.0,
                self.py(yv) + 4.0,
                tick(yv, ys)
            );
        }
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 12.0, escape(xlabel));
        let _ = writeln!(
            s,
            r#"<text x="14" y="{y}" text-anchor="middle" transform="rotate(-90 14 {y})">{}</text>"#,
            escape(ylabel),
            y = H / 2.0
        );
    }
}

fn tick(v: f64, scale: Scale) -> String {
    let v = match scale {
        Scale::Linear => v,
        Scale::Log => 10f64.powf(v),
    };
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.1e}")
    } else {
        format!("{v:.3}")
    }
}

/// Bar chart of bin counts over `edges`.
pub fn histogram(title: &str, xlabel: &str, edges: &[f64], counts: &[u64]) -> String {
    let frame = Frame {
        x: (edges[0], edges[edges.len() - 1]),
        y: (0.0, counts.iter().copied().max().unwrap_or(1).max(1) as f64),
    };
    let mut s = header(title);
    for (i, &c) in counts.iter().enumerate() {
        let (x0, x1) = (frame.px(edges[i]), frame.px(edges[i + 1]));
        let y = frame.py(c as f64);
        let _ = writeln!(
            s,
            r#"<rect x="{x0:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="{}" stroke="white" stroke-width="0.5"/>"#,
            (x1 - x0).max(0.0),
            H - PAD - y,
            COLORS[0]
        );
    }
    frame.axes(&mut s, xlabel, "count", Scale::Linear, Scale::Linear);
    s.push_str("</svg>\n");
    s
}

/// Polylines with markers and a legend.
pub fn lines(title: &str, xlabel: &str, ylabel: &str, series: &[Series<'_>], xs: Scale, ys: Scale) -> String {
    let usable = |p: &&(f64, f64)| {
        let ok = |v: f64, sc: Scale| v.is_finite() && !matches!(sc, Scale::Log if v <= 0.0);
        ok(p.0, xs) && ok(p.1, ys)
    };
    let all = || series.iter().flat_map(|s| s.points.iter().filter(usable));
    let frame = Frame {
        x: range(all().map(|p| xs.map(p.0))),
        y: range(all().map(|p| ys.map(p.1))),
    };
    let mut s = header(title);
    for (i, ser) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<(f64, f64)> = ser
            .points
            .iter()
            .filter(usable)
            .map(|p| (frame.px(xs.map(p.0)), frame.py(ys.map(p.1))))
            .collect();
        let path: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, path.join(" "));
        if pts.len() <= 60 {
            for (x, y) in &pts {
                let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="2.5" fill="{color}"/>"#);
            }
        }
        let ly = PAD + 16.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<rect x="{:.1}" y="{:.1}" width="10" height="10" fill="{color}"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            W - PAD - 150.0,
            ly - 9.0,
            W - PAD - 135.0,
            ly,
            escape(ser.label)
        );
    }
    frame.axes(&mut s, xlabel, ylabel, xs, ys);
    s.push_str("</svg>\n");
    s
}
