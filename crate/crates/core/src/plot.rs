//! Minimal SVG rendering of confidence bands.

use std::fmt::Write as _;

use crate::inference::ScrBand;
use crate::scalar::Real;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 48.0;

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn fit(xs: &[f64], ys: impl Iterator<Item = f64>) -> Self {
        let (mut x0, mut x1) = min_max(xs.iter().copied());
        let (mut y0, mut y1) = min_max(ys);
        if x1 <= x0 {
            x0 -= 1.0;
            x1 += 1.0;
        }
        if y1 <= y0 {
            y0 -= 1.0;
            y1 += 1.0;
        }
        let pad = 0.05 * (y1 - y0);
        Self { x0, x1, y0: y0 - pad, y1: y1 + pad }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - 2.0 * MARGIN)
    }
}

fn min_max(it: impl Iterator<Item = f64>) -> (f64, f64) {
    it.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)))
}

fn polyline(frame: &Frame, xs: &[f64], ys: &[f64]) -> String {
    let mut s = String::new();
    for (x, y) in xs.iter().zip(ys) {
        let _ = write!(s, "{:.2},{:.2} ", frame.px(*x), frame.py(*y));
    }
    s.trim_end().to_string()
}

/// Band against the first coordinate, for the rows in `rows`.
fn render(band: &ScrBand<impl Real>, rows: &[usize], title: &str, null: Option<&dyn Fn(f64) -> f64>) -> String {
    let mut order = rows.to_vec();
    let x = |j: usize| band.eval_points.row(j)[0].to_f64_lossy();
    order.sort_by(|&a, &b| x(a).total_cmp(&x(b)));
    let xs: Vec<f64> = order.iter().map(|&j| x(j)).collect();
    let lo: Vec<f64> = order.iter().map(|&j| band.lower[j].to_f64_lossy()).collect();
    let hi: Vec<f64> = order.iter().map(|&j| band.upper[j].to_f64_lossy()).collect();
    let mu: Vec<f64> = order.iter().map(|&j| band.mu_star[j].to_f64_lossy()).collect();
    let nul: Option<Vec<f64>> = null.map(|f| xs.iter().map(|&v| f(v)).collect());
    let frame = Frame::fit(&xs, lo.iter().chain(&hi).chain(nul.iter().flatten()).copied());

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="24" font-family="sans-serif" font-size="14" text-anchor="middle">{title}</text>"#, WIDTH / 2.0);
    let mut area = polyline(&frame, &xs, &hi);
    let rev_x: Vec<f64> = xs.iter().rev().copied().collect();
    let rev_lo: Vec<f64> = lo.iter().rev().copied().collect();
    area.push(' ');
    area.push_str(&polyline(&frame, &rev_x, &rev_lo));
    let _ = writeln!(svg, r##"<polygon points="{area}" fill="#9ecae1" fill-opacity="0.6" stroke="none"/>"##);
    let _ = writeln!(svg, r##"<polyline points="{}" fill="none" stroke="#08519c" stroke-width="1.5"/>"##, polyline(&frame, &xs, &mu));
    if let Some(n) = &nul {
        let _ = writeln!(svg, r##"<polyline points="{}" fill="none" stroke="#cb181d" stroke-dasharray="4 3"/>"##, polyline(&frame, &xs, n));
    }
    let (bx0, by0, bx1, by1) = (MARGIN, MARGIN, WIDTH - MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(svg, r#"<rect x="{bx0}" y="{by0}" width="{}" height="{}" fill="none" stroke="black"/>"#, bx1 - bx0, by1 - by0);
    for (v, anchor, px, py) in [
        (frame.x0, "start", bx0, by1 + 16.0),
        (frame.x1, "end", bx1, by1 + 16.0),
    ] {
        let _ = writeln!(svg, r#"<text x="{px}" y="{py}" font-family="sans-serif" font-size="11" text-anchor="{anchor}">{v:.3}</text>"#);
    }
    for (v, py) in [(frame.y0, by1), (frame.y1, by0 + 10.0)] {
        let _ = writeln!(svg, r#"<text x="{}" y="{py}" font-family="sans-serif" font-size="11" text-anchor="end">{v:.3}</text>"#, bx0 - 4.0);
    }
    svg.push_str("</svg>\n");
    svg
}

/// One-dimensional band plot; `null` overlays a candidate curve.
pub fn band_svg<T: Real>(band: &ScrBand<T>, null: Option<&dyn Fn(f64) -> f64>) -> String {
    let rows: Vec<usize> = (0..band.len()).collect();
    render(band, &rows, &format!("{:.0}% simultaneous band", 100.0 * (1.0 - band.alpha)), null)
}

/// For two covariates: the band against `x1` within `slices` quantile
/// slices of `x2`. Returns `(label, svg)` pairs.
pub fn band_slices_svg<T: Real>(band: &ScrBand<T>, slices: usize) -> Vec<(String, String)> {
    if band.eval_points.dim() < 2 || band.is_empty() || slices == 0 {
        return Vec::new();
    }
    let mut by_x2: Vec<usize> = (0..band.len()).collect();
    by_x2.sort_by(|&a, &b| band.eval_points.row(a)[1].to_f64_lossy().total_cmp(&band.eval_points.row(b)[1].to_f64_lossy()));
    let per = by_x2.len().div_ceil(slices);
    by_x2
        .chunks(per)
        .enumerate()
        .map(|(k, rows)| {
            let (a, b) = min_max(rows.iter().map(|&j| band.eval_points.row(j)[1].to_f64_lossy()));
            let title = format!("x2 in [{a:.3}, {b:.3}]");
            (format!("slice{}", k + 1), render(band, rows, &title, None))
        })
        .collect()
}
