//! Bare-bones SVG plots: axes, polylines, polygons and cells.

use std::fmt::Write as _;

const W: f64 = 640.0;
const H: f64 = 480.0;
const MARGIN: f64 = 56.0;

pub const PALETTE: &[&str] = &["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

pub struct Plot {
    title: String,
    x: (f64, f64),
    y: (f64, f64),
    body: String,
    legend: Vec<(String, String)>,
}

/// `[lo, hi]` of the finite values, padded by 5%, never degenerate.
pub fn range(values: impl IntoIterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values.into_iter().filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        return (-1.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 1.0, hi + 1.0);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

impl Plot {
    pub fn new(title: &str, x: (f64, f64), y: (f64, f64)) -> Plot {
        Plot {
            title: title.to_string(),
            x,
            y,
            body: String::new(),
            legend: Vec::new(),
        }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x.0) / (self.x.1 - self.x.0) * (W - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        H - MARGIN - (y - self.y.0) / (self.y.1 - self.y.0) * (H - 2.0 * MARGIN)
    }

    fn points(&self, pts: &[(f64, f64)]) -> String {
        pts.iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", self.px(x), self.py(y)))
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn label(&mut self, name: &str, color: &str) {
        self.legend.push((name.to_string(), color.to_string()));
    }

    pub fn polyline(&mut self, pts: &[(f64, f64)], color: &str, dashed: bool) {
        let dash = if dashed { " stroke-dasharray=\"6,4\"" } else { "" };
        writeln!(
            self.body,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"{dash}/>",
            self.points(pts)
        )
        .unwrap();
    }

    pub fn polygon(&mut self, pts: &[(f64, f64)], color: &str, dashed: bool) {
        let dash = if dashed { " stroke-dasharray=\"6,4\"" } else { "" };
        writeln!(
            self.body,
            "<polygon points=\"{}\" fill=\"{color}\" fill-opacity=\"0.12\" stroke=\"{color}\" stroke-width=\"1.5\"{dash}/>",
            self.points(pts)
        )
        .unwrap();
    }

    pub fn markers(&mut self, pts: &[(f64, f64)], color: &str) {
        for &(x, y) in pts.iter().filter(|(x, y)| x.is_finite() && y.is_finite()) {
            writeln!(
                self.body,
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.5\" fill=\"{color}\"/>",
                self.px(x),
                self.py(y)
            )
            .unwrap();
        }
    }

    /// Axis-aligned cell centred at `(x, y)` with data-space size `(w, h)`.
    pub fn cell(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str) {
        let (x0, x1) = (self.px(x - w / 2.0), self.px(x + w / 2.0));
        let (y0, y1) = (self.py(y + h / 2.0), self.py(y - h / 2.0));
        writeln!(
            self.body,
            "<rect x=\"{x0:.2}\" y=\"{y0:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{fill}\"/>",
            x1 - x0,
            y1 - y0
        )
        .unwrap();
    }

    pub fn hline(&mut self, y: f64, color: &str) {
        self.polyline(&[(self.x.0, y), (self.x.1, y)], color, true);
    }

    pub fn finish(self, x_label: &str, y_label: &str) -> String {
        let mut s = String::new();
        writeln!(
            s,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\" font-size=\"11\">"
        )
        .unwrap();
        writeln!(s, "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>").unwrap();
        writeln!(s, "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">{}</text>", W / 2.0, escape(&self.title))
            .unwrap();
        let (l, r, t, b) = (MARGIN, W - MARGIN, MARGIN, H - MARGIN);
        writeln!(s, "<rect x=\"{l}\" y=\"{t}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>", r - l, b - t)
            .unwrap();
        for i in 0..=4 {
            let f = i as f64 / 4.0;
            let xv = self.x.0 + f * (self.x.1 - self.x.0);
            let yv = self.y.0 + f * (self.y.1 - self.y.0);
            let (xp, yp) = (self.px(xv), self.py(yv));
            writeln!(s, "<line x1=\"{xp:.2}\" y1=\"{b}\" x2=\"{xp:.2}\" y2=\"{}\" stroke=\"black\"/>", b + 4.0).unwrap();
            writeln!(s, "<text x=\"{xp:.2}\" y=\"{}\" text-anchor=\"middle\">{}</text>", b + 16.0, tick(xv)).unwrap();
            writeln!(s, "<line x1=\"{}\" y1=\"{yp:.2}\" x2=\"{l}\" y2=\"{yp:.2}\" stroke=\"black\"/>", l - 4.0).unwrap();
            writeln!(s, "<text x=\"{}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>", l - 6.0, yp + 4.0, tick(yv)).unwrap();
        }
        writeln!(s, "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>", W / 2.0, H - 12.0, escape(x_label)).unwrap();
        writeln!(
            s,
            "<text x=\"14\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 14 {})\">{}</text>",
            H / 2.0,
            H / 2.0,
            escape(y_label)
        )
        .unwrap();
        s.push_str(&self.body);
        for (i, (name, color)) in self.legend.iter().enumerate() {
            let y = t + 14.0 + 16.0 * i as f64;
            writeln!(s, "<rect x=\"{}\" y=\"{}\" width=\"10\" height=\"10\" fill=\"{color}\"/>", r - 150.0, y - 9.0).unwrap();
            writeln!(s, "<text x=\"{}\" y=\"{y}\">{}</text>", r - 135.0, escape(name)).unwrap();
        }
        s.push_str("</svg>\n");
        s
    }
}

fn tick(v: f64) -> String {
    let t = format!("{v:.3}");
    if t == "-0.000" {
        "0.000".into()
    } else {
        t
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Blue for negative, red for positive, white at zero; `scale` maps to full
/// saturation.
pub fn diverging(v: f64, scale: f64) -> String {
    if !v.is_finite() {
        return "#bbbbbb".into();
    }
    let f = (v.abs() / scale.max(1e-12)).min(1.0);
    let fade = (255.0 * (1.0 - f)).round() as u8;
    if v >= 0.0 {
        format!("#ff{fade:02x}{fade:02x}")
    } else {
        format!("#{fade:02x}{fade:02x}ff")
    }
}
