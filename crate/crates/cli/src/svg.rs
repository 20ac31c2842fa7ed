//! Plain SVG charts. Every plotted number is written into a `data-value`
//! attribute with the same formatting the TSV tables use, so a figure can be
//! checked against its table by string comparison.

use std::fmt::Write;

use crate::fmt::num;

const W: f64 = 640.0;
const H: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 70.0;

#[derive(Debug, Clone)]
pub struct Bar {
    pub label: String,
    pub value: f64,
    /// Error bar half-width; `None` draws no error bar.
    pub half_width: Option<f64>,
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Vertical range covering `values` and zero, padded a little. A flat range
/// gets one unit either side.
fn range(values: impl IntoIterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (0.0f64, 0.0f64);
    for v in values.into_iter().filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if hi - lo < 1e-12 {
        return (lo - 1.0, hi + 1.0);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

struct Frame {
    lo: f64,
    hi: f64,
    out: String,
}

impl Frame {
    fn new(title: &str, y_label: &str, lo: f64, hi: f64) -> Frame {
        let mut out = String::new();
        let _ = write!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
        );
        out.push('\n');
        let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ =
            writeln!(out, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, esc(title));
        let _ = writeln!(
            out,
            r#"<text transform="translate(16,{}) rotate(-90)" text-anchor="middle">{}</text>"#,
            TOP + (H - TOP - BOTTOM) / 2.0,
            esc(y_label)
        );
        let mut f = Frame { lo, hi, out };
        f.axes();
        f
    }

    fn y(&self, v: f64) -> f64 {
        let t = (v - self.lo) / (self.hi - self.lo);
        H - BOTTOM - t * (H - TOP - BOTTOM)
    }

    fn axes(&mut self) {
        let (x0, x1) = (LEFT, W - RIGHT);
        let _ = writeln!(self.out, r#"<line x1="{x0}" y1="{TOP}" x2="{x0}" y2="{}" stroke="black"/>"#, H - BOTTOM);
        let zero = self.y(0.0);
        if (TOP..=H - BOTTOM).contains(&zero) {
            let _ = writeln!(self.out, r#"<line x1="{x0}" y1="{zero:.2}" x2="{x1}" y2="{zero:.2}" stroke="black"/>"#);
        }
        for k in 0..=4 {
            let v = self.lo + (self.hi - self.lo) * k as f64 / 4.0;
            let y = self.y(v);
            let _ = writeln!(
                self.out,
                r#"<line x1="{}" y1="{y:.2}" x2="{x0}" y2="{y:.2}" stroke="black"/><text x="{}" y="{:.2}" text-anchor="end">{v:.3}</text>"#,
                x0 - 4.0,
                x0 - 6.0,
                y + 4.0
            );
        }
    }

    fn x_label(&mut self, x: f64, label: &str) {
        let _ = writeln!(
            self.out,
            r#"<text x="{x:.2}" y="{}" text-anchor="end" transform="rotate(-30 {x:.2} {})">{}</text>"#,
            H - BOTTOM + 16.0,
            H - BOTTOM + 16.0,
            esc(label)
        );
    }

    fn finish(mut self) -> String {
        self.out.push_str("</svg>\n");
        self.out
    }
}

pub fn bar_chart(title: &str, y_label: &str, bars: &[Bar]) -> String {
    let extent = bars.iter().flat_map(|b| {
        let h = b.half_width.unwrap_or(0.0);
        [b.value - h, b.value + h]
    });
    let (lo, hi) = range(extent);
    let mut f = Frame::new(title, y_label, lo, hi);
    let slot = (W - LEFT - RIGHT) / bars.len().max(1) as f64;
    for (i, b) in bars.iter().enumerate() {
        let cx = LEFT + slot * (i as f64 + 0.5);
        let (y0, y1) = (f.y(0.0), f.y(b.value));
        let (top, height) = (y0.min(y1), (y0 - y1).abs());
        let hw = b.half_width.map(|h| format!(r#" data-half-width="{}""#, num(h))).unwrap_or_default();
        let _ = writeln!(
            f.out,
            r##"<rect class="bar" x="{:.2}" y="{top:.2}" width="{:.2}" height="{height:.2}" fill="#7a9cc6" data-label="{}" data-value="{}"{hw}/>"##,
            cx - slot * 0.35,
            slot * 0.7,
            esc(&b.label),
            num(b.value)
        );
        if let Some(h) = b.half_width {
            let (ya, yb) = (f.y(b.value - h), f.y(b.value + h));
            let _ = writeln!(
                f.out,
                r#"<path class="error" d="M{:.2},{ya:.2}H{:.2}M{cx:.2},{ya:.2}V{yb:.2}M{:.2},{yb:.2}H{:.2}" stroke="black" fill="none"/>"#,
                cx - 6.0,
                cx + 6.0,
                cx - 6.0,
                cx + 6.0
            );
        }
        f.x_label(cx, &b.label);
    }
    f.finish()
}

/// One line per series over shared categorical x positions.
pub fn line_plot(title: &str, y_label: &str, x_labels: &[String], series: &[(String, Vec<f64>)]) -> String {
    let (lo, hi) = range(series.iter().flat_map(|(_, v)| v.iter().copied()));
    let mut f = Frame::new(title, y_label, lo, hi);
    let step = (W - LEFT - RIGHT) / x_labels.len().max(1) as f64;
    let x = |i: usize| LEFT + step * (i as f64 + 0.5);
    const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
    for (s, (name, values)) in series.iter().enumerate() {
        let color = COLORS[s % COLORS.len()];
        let points: Vec<String> =
            values.iter().enumerate().map(|(i, v)| format!("{:.2},{:.2}", x(i), f.y(*v))).collect();
        let _ = writeln!(
            f.out,
            r#"<polyline data-series="{}" points="{}" stroke="{color}" fill="none" stroke-width="2"/>"#,
            esc(name),
            points.join(" ")
        );
        for (i, v) in values.iter().enumerate() {
            let _ = writeln!(
                f.out,
                r#"<circle class="point" cx="{:.2}" cy="{:.2}" r="3" fill="{color}" data-series="{}" data-label="{}" data-value="{}"/>"#,
                x(i),
                f.y(*v),
                esc(name),
                esc(x_labels.get(i).map(String::as_str).unwrap_or("")),
                num(*v)
            );
        }
        let _ = writeln!(
            f.out,
            r#"<text x="{}" y="{}" fill="{color}">{}</text>"#,
            W - RIGHT - 150.0,
            TOP + 14.0 * (s as f64 + 1.0),
            esc(name)
        );
    }
    for (i, l) in x_labels.iter().enumerate() {
        f.x_label(x(i), l);
    }
    f.finish()
}

/// Scatter of (x, y) with the fitted line `intercept + slope * x`.
pub fn scatter_fit(
    title: &str,
    x_label: &str,
    y_label: &str,
    points: &[(f64, f64)],
    intercept: f64,
    slope: f64,
) -> String {
    let (xlo, xhi) = {
        let lo = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
        let hi = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
        if !lo.is_finite() || hi - lo < 1e-12 {
            (lo.min(0.0) - 1.0, hi.max(0.0) + 1.0)
        } else {
            (lo - 0.05 * (hi - lo), hi + 0.05 * (hi - lo))
        }
    };
    let line = [intercept + slope * xlo, intercept + slope * xhi];
    let (lo, hi) = range(points.iter().map(|p| p.1).chain(line));
    let mut f = Frame::new(title, y_label, lo, hi);
    let sx = |v: f64| LEFT + (v - xlo) / (xhi - xlo) * (W - LEFT - RIGHT);
    for (x, y) in points {
        let _ = writeln!(
            f.out,
            r##"<circle class="point" cx="{:.2}" cy="{:.2}" r="3" fill="#1f77b4" fill-opacity="0.6" data-x="{}" data-value="{}"/>"##,
            sx(*x),
            f.y(*y),
            num(*x),
            num(*y)
        );
    }
    let _ = writeln!(
        f.out,
        r##"<line class="fit" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#d62728" stroke-width="2" data-intercept="{}" data-slope="{}"/>"##,
        sx(xlo),
        f.y(line[0]),
        sx(xhi),
        f.y(line[1]),
        num(intercept),
        num(slope)
    );
    for k in 0..=4 {
        let v = xlo + (xhi - xlo) * k as f64 / 4.0;
        let _ =
            writeln!(f.out, r#"<text x="{:.2}" y="{}" text-anchor="middle">{v:.1}</text>"#, sx(v), H - BOTTOM + 16.0);
    }
    let _ = writeln!(f.out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 20.0, esc(x_label));
    f.finish()
}

/// Values of every `name="..."` attribute in document order.
pub fn attribute_values(svg: &str, name: &str) -> Vec<String> {
    let needle = format!(" {name}=\"");
    let mut out = Vec::new();
    let mut rest = svg;
    while let Some(i) = rest.find(&needle) {
        rest = &rest[i + needle.len()..];
        let end = rest.find('"').unwrap_or(rest.len());
        out.push(rest[..end].to_string());
        rest = &rest[end..];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bars_carry_their_values() {
        let bars = vec![
            Bar { label: "a<b".into(), value: 1.0 / 3.0, half_width: Some(0.25) },
            Bar { label: "c".into(), value: -2.0, half_width: None },
        ];
        let svg = bar_chart("t", "bits", &bars);
        assert_eq!(attribute_values(&svg, "data-value"), vec![num(1.0 / 3.0), "-2".to_string()]);
        assert_eq!(attribute_values(&svg, "data-half-width"), vec!["0.25"]);
        assert_eq!(attribute_values(&svg, "data-label"), vec!["a&lt;b", "c"]);
        assert_eq!(svg.matches("class=\"error\"").count(), 1);
    }

    #[test]
    fn flat_data_still_renders() {
        let svg = line_plot("t", "bits", &["x".into(), "y".into()], &[("s".into(), vec![0.0, 0.0])]);
        assert!(!svg.contains("NaN"));
        assert_eq!(attribute_values(&svg, "data-value"), vec!["0", "0"]);
        let svg = scatter_fit("t", "len", "bits", &[(3.0, 1.0), (3.0, 1.0)], 1.0, 0.0);
        assert!(!svg.contains("NaN") && !svg.contains("inf"));
    }

    #[test]
    fn zero_bars_sit_on_the_axis() {
        let svg = bar_chart("t", "bits", &[Bar { label: "z".into(), value: 0.0, half_width: Some(0.0) }]);
        assert!(svg.contains(r#"height="0.00""#));
    }
}
