//! Minimal standalone SVG emission for the pipeline figures.
//!
//! No display dependency: documents are plain strings with a fixed viewBox
//! computed from the data bounds. Coordinates are flipped so mathematical
//! y-up renders naturally.

use num_complex::Complex64;
use std::fmt::Write as _;

pub struct SvgDocument {
    body: String,
    min: (f64, f64),
    max: (f64, f64),
}

impl SvgDocument {
    pub fn new() -> Self {
        Self {
            body: String::new(),
            min: (f64::INFINITY, f64::INFINITY),
            max: (f64::NEG_INFINITY, f64::NEG_INFINITY),
        }
    }

    fn grow(&mut self, p: Complex64) {
        self.min.0 = self.min.0.min(p.re);
        self.min.1 = self.min.1.min(-p.im);
        self.max.0 = self.max.0.max(p.re);
        self.max.1 = self.max.1.max(-p.im);
    }

    pub fn polyline(&mut self, pts: &[Complex64], stroke: &str, width: f64, close: bool) {
        if pts.is_empty() {
            return;
        }
        let mut d = String::new();
        for (i, p) in pts.iter().enumerate() {
            self.grow(*p);
            let _ = write!(d, "{}{:.6},{:.6} ", if i == 0 { "M" } else { "L" }, p.re, -p.im);
        }
        if close {
            d.push('Z');
        }
        let _ = writeln!(
            self.body,
            r#"<path d="{}" fill="none" stroke="{}" stroke-width="{}"/>"#,
            d.trim_end(),
            stroke,
            width
        );
    }

    /// Circular arc from angle_start to angle_end (ccw in math orientation).
    pub fn arc(
        &mut self,
        center: Complex64,
        radius: f64,
        angle_start: f64,
        angle_end: f64,
        stroke: &str,
        width: f64,
    ) {
        let p0 = center + Complex64::from_polar(radius, angle_start);
        let p1 = center + Complex64::from_polar(radius, angle_end);
        self.grow(center + Complex64::new(radius, radius));
        self.grow(center - Complex64::new(radius, radius));
        let sweep = angle_end - angle_start;
        let large = if sweep.abs() > std::f64::consts::PI { 1 } else { 0 };
        // math-ccw becomes sweep-flag 0 after the y flip
        let _ = writeln!(
            self.body,
            r#"<path d="M{:.6},{:.6} A{:.6},{:.6} 0 {} 0 {:.6},{:.6}" fill="none" stroke="{}" stroke-width="{}"/>"#,
            p0.re, -p0.im, radius, radius, large, p1.re, -p1.im, stroke, width
        );
    }

    pub fn segment(&mut self, a: Complex64, b: Complex64, stroke: &str, width: f64) {
        self.grow(a);
        self.grow(b);
        let _ = writeln!(
            self.body,
            r#"<line x1="{:.6}" y1="{:.6}" x2="{:.6}" y2="{:.6}" stroke="{}" stroke-width="{}"/>"#,
            a.re, -a.im, b.re, -b.im, stroke, width
        );
    }

    pub fn circle_marker(&mut self, p: Complex64, r: f64, stroke: &str) {
        self.grow(p + Complex64::new(r, r));
        self.grow(p - Complex64::new(r, r));
        let _ = writeln!(
            self.body,
            r#"<circle cx="{:.6}" cy="{:.6}" r="{}" fill="none" stroke="{}" stroke-width="{}"/>"#,
            p.re,
            -p.im,
            r,
            stroke,
            r * 0.4
        );
    }

    pub fn cross_marker(&mut self, p: Complex64, r: f64, stroke: &str) {
        self.segment(
            p - Complex64::new(r, r),
            p + Complex64::new(r, r),
            stroke,
            r * 0.4,
        );
        self.segment(
            p + Complex64::new(-r, r),
            p + Complex64::new(r, -r),
            stroke,
            r * 0.4,
        );
    }

    pub fn text(&mut self, p: Complex64, size: f64, content: &str) {
        self.grow(p);
        let _ = writeln!(
            self.body,
            r#"<text x="{:.6}" y="{:.6}" font-size="{}" font-family="monospace">{}</text>"#,
            p.re, -p.im, size, content
        );
    }

    pub fn finish(self) -> String {
        let (w, h) = (
            (self.max.0 - self.min.0).max(1e-9),
            (self.max.1 - self.min.1).max(1e-9),
        );
        let pad = 0.05 * w.max(h);
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{:.6} {:.6} {:.6} {:.6}\">\n{}</svg>\n",
            self.min.0 - pad,
            self.min.1 - pad,
            w + 2.0 * pad,
            h + 2.0 * pad,
            self.body
        )
    }
}

impl Default for SvgDocument {
    fn default() -> Self {
        Self::new()
    }
}

/// A simple x/y line plot with point markers, for the shell-decay figures.
pub struct LinePlot {
    pub width: f64,
    pub height: f64,
    series: Vec<(Vec<(f64, f64)>, String, bool)>,
    labels: Vec<String>,
}

impl LinePlot {
    pub fn new() -> Self {
        Self {
            width: 640.0,
            height: 420.0,
            series: Vec::new(),
            labels: Vec::new(),
        }
    }

    pub fn add_series(&mut self, pts: Vec<(f64, f64)>, color: &str, with_markers: bool) {
        self.series.push((pts, color.to_string(), with_markers));
    }

    pub fn add_label(&mut self, text: String) {
        self.labels.push(text);
    }

    pub fn finish(self) -> String {
        let all: Vec<(f64, f64)> = self.series.iter().flat_map(|s| s.0.clone()).collect();
        if all.is_empty() {
            return String::from("<svg xmlns=\"http://www.w3.org/2000/svg\"/>\n");
        }
        let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY);
        for &(x, y) in &all {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        let xr = (x1 - x0).max(1e-12);
        let yr = (y1 - y0).max(1e-12);
        let (margin, w, h) = (60.0, self.width, self.height);
        let sx = |x: f64| margin + (x - x0) / xr * (w - 2.0 * margin);
        let sy = |y: f64| h - margin - (y - y0) / yr * (h - 2.0 * margin);

        let mut out = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {w} {h}\">\n<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n"
        );
        let _ = writeln!(
            out,
            r#"<line x1="{m}" y1="{b}" x2="{r}" y2="{b}" stroke="black" stroke-width="1"/>
<line x1="{m}" y1="{t}" x2="{m}" y2="{b}" stroke="black" stroke-width="1"/>"#,
            m = margin,
            b = h - margin,
            r = w - margin,
            t = margin
        );
        for i in 0..=4 {
            let xv = x0 + xr * i as f64 / 4.0;
            let yv = y0 + yr * i as f64 / 4.0;
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{:.1}" font-size="11" font-family="monospace" text-anchor="middle">{:.3}</text>"#,
                sx(xv),
                h - margin + 16.0,
                xv
            );
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{:.1}" font-size="11" font-family="monospace" text-anchor="end">{:.2}</text>"#,
                margin - 6.0,
                sy(yv) + 4.0,
                yv
            );
        }
        for (pts, color, markers) in &self.series {
            let mut d = String::new();
            for (i, &(x, y)) in pts.iter().enumerate() {
                let _ = write!(d, "{}{:.2},{:.2} ", if i == 0 { "M" } else { "L" }, sx(x), sy(y));
            }
            let _ = writeln!(
                out,
                r#"<path d="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#,
                d.trim_end(),
                color
            );
            if *markers {
                for &(x, y) in pts {
                    let _ = writeln!(
                        out,
                        r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{}"/>"#,
                        sx(x),
                        sy(y),
                        color
                    );
                }
            }
        }
        for (i, label) in self.labels.iter().enumerate() {
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{:.1}" font-size="12" font-family="monospace">{}</text>"#,
                margin + 8.0,
                margin + 16.0 + 16.0 * i as f64,
                label
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

impl Default for LinePlot {
    fn default() -> Self {
        Self::new()
    }
}
