//! Plain SVG plots. Coordinates are printed with fixed precision so equal
//! inputs give byte-identical files.

use std::fmt::Write as _;

use crate::metrics::{EvalReport, Outcome};

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

struct Plot {
    out: String,
    x_max: f64,
    y_max: f64,
}

impl Plot {
    fn new(title: &str, x_label: &str, y_label: &str, x_max: f64, y_max: f64) -> Self {
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(out, r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="15">{}</text>"#, W / 2.0, escape(title));
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            LEFT + (W - LEFT - RIGHT) / 2.0,
            H - 12.0,
            escape(x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="18" y="{:.1}" text-anchor="middle" transform="rotate(-90 18 {:.1})">{}</text>"#,
            TOP + (H - TOP - BOTTOM) / 2.0,
            TOP + (H - TOP - BOTTOM) / 2.0,
            escape(y_label)
        );
        let mut p = Self { out, x_max, y_max };
        p.axes();
        p
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + x / self.x_max * (W - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        H - BOTTOM - y / self.y_max * (H - TOP - BOTTOM)
    }

    fn axes(&mut self) {
        let (x0, y0, x1, y1) = (self.px(0.0), self.py(0.0), self.px(self.x_max), self.py(self.y_max));
        let _ = writeln!(self.out, r#"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x1:.2}" y2="{y0:.2}" stroke="black"/>"#);
        let _ = writeln!(self.out, r#"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x0:.2}" y2="{y1:.2}" stroke="black"/>"#);
        for i in 0..=5 {
            let v = self.y_max * i as f64 / 5.0;
            let y = self.py(v);
            let _ = writeln!(self.out, r#"<line x1="{:.2}" y1="{y:.2}" x2="{x0:.2}" y2="{y:.2}" stroke="black"/>"#, x0 - 4.0);
            let _ = writeln!(self.out, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{v:.3}</text>"#, x0 - 6.0, y + 4.0);
        }
    }

    fn x_tick(&mut self, x: f64, label: &str) {
        let y0 = self.py(0.0);
        let px = self.px(x);
        let _ = writeln!(self.out, r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, y0 + 18.0, escape(label));
    }

    fn legend(&mut self, names: &[&str]) {
        for (i, name) in names.iter().enumerate() {
            let y = TOP + 8.0 + 16.0 * i as f64;
            let x = W - RIGHT - 150.0;
            let _ = writeln!(
                self.out,
                r#"<rect x="{x:.2}" y="{:.2}" width="10" height="10" fill="{}"/><text x="{:.2}" y="{:.2}">{}</text>"#,
                y - 9.0,
                PALETTE[i % PALETTE.len()],
                x + 14.0,
                y,
                escape(name)
            );
        }
    }

    fn finish(mut self) -> String {
        self.out.push_str("</svg>\n");
        self.out
    }
}

/// Observed frequency against mean score per bin, one series per report,
/// with the identity line for perfect calibration.
pub fn reliability_diagram(series: &[(&str, &EvalReport)]) -> String {
    let mut p = Plot::new("Reliability diagram", "mean predicted score", "observed frequency", 1.0, 1.0);
    let _ = writeln!(
        p.out,
        r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#999" stroke-dasharray="4 3"/>"##,
        p.px(0.0),
        p.py(0.0),
        p.px(1.0),
        p.py(1.0)
    );
    for i in 0..=5 {
        let v = i as f64 / 5.0;
        p.x_tick(v, &format!("{v:.1}"));
    }
    for (s, (_, report)) in series.iter().enumerate() {
        let color = PALETTE[s % PALETTE.len()];
        let pts: Vec<String> = report
            .bins
            .iter()
            .filter(|b| b.count > 0)
            .map(|b| format!("{:.2},{:.2}", p.px(b.mean_score), p.py(b.frequency)))
            .collect();
        if pts.len() > 1 {
            let _ = writeln!(p.out, r#"<polyline points="{}" fill="none" stroke="{color}"/>"#, pts.join(" "));
        }
        for pt in &pts {
            let (x, y) = pt.split_once(',').unwrap();
            let _ = writeln!(p.out, r#"<circle cx="{x}" cy="{y}" r="3.5" fill="{color}"/>"#);
        }
    }
    let names: Vec<&str> = series.iter().map(|(n, _)| *n).collect();
    p.legend(&names);
    p.finish()
}

/// One bar per `(label, value)`.
pub fn bar_chart(title: &str, y_label: &str, bars: &[(String, f64)]) -> String {
    let top = bars.iter().map(|b| b.1).fold(0.0, f64::max);
    let y_max = if top > 0.0 { top * 1.15 } else { 1.0 };
    let n = bars.len().max(1) as f64;
    let mut p = Plot::new(title, "UQ method", y_label, n, y_max);
    for (i, (label, v)) in bars.iter().enumerate() {
        let x0 = p.px(i as f64 + 0.2);
        let x1 = p.px(i as f64 + 0.8);
        let y = p.py(*v);
        let _ = writeln!(
            p.out,
            r#"<rect x="{x0:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
            x1 - x0,
            p.py(0.0) - y,
            PALETTE[i % PALETTE.len()]
        );
        let _ = writeln!(p.out, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{v:.4}</text>"#, (x0 + x1) / 2.0, y - 4.0);
        p.x_tick(i as f64 + 0.5, label);
    }
    p.finish()
}

/// Per-sample entropy grouped by confusion outcome; one point per sample.
pub fn scatter_by_outcome(series: &[(&str, &EvalReport)]) -> String {
    let order = [Outcome::Tp, Outcome::Tn, Outcome::Fp, Outcome::Fn];
    let mut p = Plot::new("Predictive entropy by outcome", "outcome", "entropy (nats)", 4.0, std::f64::consts::LN_2);
    for (i, o) in order.iter().enumerate() {
        p.x_tick(i as f64 + 0.5, &o.as_str().to_uppercase());
    }
    let k = series.len().max(1) as f64;
    for (s, (_, report)) in series.iter().enumerate() {
        let color = PALETTE[s % PALETTE.len()];
        for (j, row) in report.rows.iter().enumerate() {
            let slot = order.iter().position(|o| *o == row.outcome).unwrap() as f64;
            // Spread points horizontally by a golden-ratio sequence.
            let jitter = (j as f64 * 0.618_033_988_75).fract();
            let x = slot + 0.1 + 0.8 * (s as f64 + jitter) / k;
            let _ = writeln!(
                p.out,
                r#"<circle cx="{:.2}" cy="{:.2}" r="2" fill="{color}" fill-opacity="0.6"/>"#,
                p.px(x),
                p.py(row.entropy)
            );
        }
    }
    let names: Vec<&str> = series.iter().map(|(n, _)| *n).collect();
    p.legend(&names);
    p.finish()
}
