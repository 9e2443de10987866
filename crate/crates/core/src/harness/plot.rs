//! Small static SVG charts.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 400.0;
const M: f64 = 48.0;

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn new(xs: impl Iterator<Item = f64> + Clone, ys: impl Iterator<Item = f64> + Clone) -> Self {
        let (x0, x1) = range(xs);
        let (y0, y1) = range(ys);
        Frame { x0, x1, y0, y1 }
    }

    fn x(&self, v: f64) -> f64 {
        M + (v - self.x0) / (self.x1 - self.x0) * (W - 2.0 * M)
    }

    fn y(&self, v: f64) -> f64 {
        H - M - (v - self.y0) / (self.y1 - self.y0) * (H - 2.0 * M)
    }
}

fn range(v: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = v
        .filter(|x| x.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn open(title: &str, f: &Frame, xlabel: &str, ylabel: &str) -> String {
    let mut s = String::new();
    let _ = write!(
        s,
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">
<rect width="{W}" height="{H}" fill="white"/>
<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>
<line x1="{M}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/>
<line x1="{M}" y1="{M}" x2="{M}" y2="{b}" stroke="black"/>
<text x="{}" y="{}" text-anchor="middle">{}</text>
<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>
<text x="{M}" y="{}" text-anchor="middle">{:.3}</text>
<text x="{r}" y="{}" text-anchor="middle">{:.3}</text>
<text x="{}" y="{b}" text-anchor="end">{:.3}</text>
<text x="{}" y="{}" text-anchor="end">{:.3}</text>
"##,
        W / 2.0,
        escape(title),
        W / 2.0,
        H - 8.0,
        escape(xlabel),
        H / 2.0,
        H / 2.0,
        escape(ylabel),
        H - M + 16.0,
        f.x0,
        H - M + 16.0,
        f.x1,
        M - 4.0,
        f.y0,
        M - 4.0,
        M + 4.0,
        f.y1,
        b = H - M,
        r = W - M,
    );
    s
}

fn polyline(points: &[(f64, f64)]) -> String {
    points.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect::<Vec<_>>().join(" ")
}

/// Samples sorted by observed value: observations as dots, the prediction
/// as a line, and a band of two standard deviations around it.
/// Each row is `(observed, predicted, std)`.
pub fn uncertainty_band_svg(title: &str, rows: &[(f64, f64, f64)]) -> String {
    let mut rows = rows.to_vec();
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = rows.len().max(2) as f64 - 1.0;
    let ys = rows.iter().flat_map(|&(o, p, s)| [o, p - 2.0 * s, p + 2.0 * s]);
    let f = Frame::new([0.0, n].into_iter(), ys);
    let mut s = open(title, &f, "sample (sorted by observed value)", "value");
    let upper: Vec<(f64, f64)> = rows.iter().enumerate().map(|(i, r)| (f.x(i as f64), f.y(r.1 + 2.0 * r.2))).collect();
    let lower: Vec<(f64, f64)> = rows.iter().enumerate().map(|(i, r)| (f.x(i as f64), f.y(r.1 - 2.0 * r.2))).collect();
    let band: Vec<(f64, f64)> = upper.iter().copied().chain(lower.iter().rev().copied()).collect();
    let _ = writeln!(s, r##"<polygon points="{}" fill="#9ecae1" fill-opacity="0.6" stroke="none"/>"##, polyline(&band));
    let pred: Vec<(f64, f64)> = rows.iter().enumerate().map(|(i, r)| (f.x(i as f64), f.y(r.1))).collect();
    let _ = writeln!(s, r##"<polyline points="{}" fill="none" stroke="#08519c" stroke-width="1.5"/>"##, polyline(&pred));
    for (i, r) in rows.iter().enumerate() {
        let _ = writeln!(
            s,
            r##"<circle cx="{:.2}" cy="{:.2}" r="2" fill="#d94801"/>"##,
            f.x(i as f64),
            f.y(r.0)
        );
    }
    s.push_str(
        r##"<text x="60" y="60" fill="#d94801">observed</text><text x="60" y="76" fill="#08519c">predicted ± 2σ</text>
</svg>
"##,
    );
    s
}

/// Precision against recall.
pub fn pr_curve_svg(title: &str, points: &[(f64, f64)]) -> String {
    let f = Frame {
        x0: 0.0,
        x1: 1.0,
        y0: 0.0,
        y1: 1.0,
    };
    let mut s = open(title, &f, "recall", "precision");
    let pts: Vec<(f64, f64)> = points.iter().map(|&(r, p)| (f.x(r), f.y(p))).collect();
    let _ = writeln!(s, r##"<polyline points="{}" fill="none" stroke="#08519c" stroke-width="1.5"/>"##, polyline(&pts));
    s.push_str("</svg>\n");
    s
}
