//! Minimal SVG line plots: log2 x-axis, labeled axes and a dashed 1/2 line.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 400.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;
const COLORS: &[&str] = &["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

pub struct Series {
    pub label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Optional `(lower, upper)` envelope drawn as a shaded band.
    pub band: Option<(Vec<f64>, Vec<f64>)>,
}

pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Horizontal reference line.
    pub benchmark: Option<f64>,
}

impl Plot {
    pub fn render(&self) -> String {
        let xs = self.series.iter().flat_map(|s| s.x.iter().map(|x| x.log2()));
        let (x0, x1) = bounds(xs);
        let mut ys: Vec<f64> = Vec::new();
        for s in &self.series {
            ys.extend(&s.y);
            if let Some((lo, hi)) = &s.band {
                ys.extend(lo);
                ys.extend(hi);
            }
        }
        ys.extend(self.benchmark);
        let (y0, y1) = bounds(ys.into_iter());
        let px = |x: f64| LEFT + (x.log2() - x0) / (x1 - x0) * (W - LEFT - RIGHT);
        let py = |y: f64| H - BOTTOM - (y - y0) / (y1 - y0) * (H - TOP - BOTTOM);

        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{}" y="18" text-anchor="middle" font-size="14">{}</text>"#,
            W / 2.0,
            esc(&self.title)
        );
        let (bx, by) = (LEFT, H - BOTTOM);
        let _ = writeln!(
            out,
            r#"<path d="M{bx} {TOP} L{bx} {by} L{} {by}" stroke="black" fill="none"/>"#,
            W - RIGHT
        );
        for k in (x0.ceil() as i64)..=(x1.floor() as i64) {
            let x = px(2f64.powi(k as i32));
            let _ = writeln!(
                out,
                r#"<line x1="{x:.1}" y1="{by}" x2="{x:.1}" y2="{:.1}" stroke="black"/><text x="{x:.1}" y="{:.1}" text-anchor="middle">2^{k}</text>"#,
                by + 4.0,
                by + 18.0
            );
        }
        for i in 0..=4 {
            let v = y0 + (y1 - y0) * i as f64 / 4.0;
            let y = py(v);
            let _ = writeln!(
                out,
                r#"<line x1="{:.1}" y1="{y:.1}" x2="{bx}" y2="{y:.1}" stroke="black"/><text x="{:.1}" y="{:.1}" text-anchor="end">{v:.3}</text>"#,
                bx - 4.0,
                bx - 6.0,
                y + 4.0
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            W / 2.0,
            H - 10.0,
            esc(&self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
            H / 2.0,
            H / 2.0,
            esc(&self.y_label)
        );
        if let Some(b) = self.benchmark {
            let y = py(b);
            let _ = writeln!(
                out,
                r#"<line x1="{bx}" y1="{y:.1}" x2="{}" y2="{y:.1}" stroke="black" stroke-dasharray="6 4"/>"#,
                W - RIGHT
            );
        }
        for (i, s) in self.series.iter().enumerate() {
            let color = COLORS[i % COLORS.len()];
            if let Some((lo, hi)) = &s.band {
                let mut d = String::new();
                for (j, (x, y)) in s.x.iter().zip(hi).enumerate() {
                    let _ = write!(d, "{}{:.1} {:.1} ", if j == 0 { "M" } else { "L" }, px(*x), py(*y));
                }
                for (x, y) in s.x.iter().zip(lo).rev() {
                    let _ = write!(d, "L{:.1} {:.1} ", px(*x), py(*y));
                }
                let _ = writeln!(
                    out,
                    r#"<path d="{}Z" fill="{color}" fill-opacity="0.2" stroke="none"/>"#,
                    d
                );
            }
            let pts: Vec<String> =
                s.x.iter()
                    .zip(&s.y)
                    .map(|(x, y)| format!("{:.1},{:.1}", px(*x), py(*y)))
                    .collect();
            let _ = writeln!(
                out,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                pts.join(" ")
            );
            let ly = TOP + 14.0 * i as f64 + 6.0;
            let _ = writeln!(
                out,
                r#"<line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/><text x="{:.1}" y="{:.1}">{}</text>"#,
                W - RIGHT - 130.0,
                W - RIGHT - 110.0,
                W - RIGHT - 104.0,
                ly + 4.0,
                esc(&s.label)
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values.filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_band_and_benchmark() {
        let plot = Plot {
            title: "a < b".into(),
            x_label: "n".into(),
            y_label: "exponent".into(),
            series: vec![Series {
                label: "d=3".into(),
                x: vec![16.0, 64.0, 256.0],
                y: vec![0.4, 0.5, 0.6],
                band: Some((vec![0.3, 0.4, 0.5], vec![0.5, 0.6, 0.7])),
            }],
            benchmark: Some(0.5),
        };
        let svg = plot.render();
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert!(svg.contains("stroke-dasharray") && svg.contains("fill-opacity"));
        assert!(svg.contains("a &lt; b") && svg.contains("2^6"));
    }
}
