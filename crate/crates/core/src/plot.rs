//! Static SVG plots.

use std::fmt::Write;

use crate::analysis::FreeBoundaryReport;
use crate::grid::ScalarField;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 56.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
    log_x: bool,
}

impl Frame {
    fn new(x: (f64, f64), y: (f64, f64), log_x: bool) -> Self {
        let pad = |(a, b): (f64, f64)| {
            if b > a {
                (a, b)
            } else {
                let d = a.abs().max(1.0) * 0.05;
                (a - d, b + d)
            }
        };
        let x = if log_x { (x.0.log10(), x.1.log10()) } else { x };
        Frame {
            x: pad(x),
            y: pad(y),
            log_x,
        }
    }

    fn px(&self, x: f64) -> f64 {
        let x = if self.log_x { x.log10() } else { x };
        MARGIN + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - 2.0 * MARGIN)
    }

    fn axes(&self, out: &mut String, xlabel: &str, ylabel: &str) {
        let (l, r) = (MARGIN, WIDTH - MARGIN);
        let (t, b) = (MARGIN, HEIGHT - MARGIN);
        let _ = writeln!(
            out,
            r#"<rect x="{l}" y="{t}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            r - l,
            b - t
        );
        for k in 0..=4 {
            let f = k as f64 / 4.0;
            let xv = self.x.0 + f * (self.x.1 - self.x.0);
            let label = if self.log_x {
                format!("{:.1e}", 10f64.powf(xv))
            } else {
                format!("{xv:.3}")
            };
            let xp = l + f * (r - l);
            let _ = writeln!(
                out,
                r#"<text x="{xp:.1}" y="{:.1}" font-size="11" text-anchor="middle">{label}</text>"#,
                b + 16.0
            );
            let yv = self.y.0 + f * (self.y.1 - self.y.0);
            let yp = b - f * (b - t);
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="end">{yv:.3}</text>"#,
                l - 4.0,
                yp + 4.0
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="13" text-anchor="middle">{xlabel}</text>"#,
            WIDTH / 2.0,
            HEIGHT - 12.0
        );
        let _ = writeln!(
            out,
            r#"<text x="14" y="{:.1}" font-size="13" text-anchor="middle" transform="rotate(-90 14 {:.1})">{ylabel}</text>"#,
            HEIGHT / 2.0,
            HEIGHT / 2.0
        );
    }

    fn polyline(&self, out: &mut String, pts: &[[f64; 2]], color: &str, dashed: bool) {
        let mut d = String::new();
        for p in pts {
            let _ = write!(d, "{:.2},{:.2} ", self.px(p[0]), self.py(p[1]));
        }
        let dash = if dashed {
            r#" stroke-dasharray="6 4""#
        } else {
            ""
        };
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#,
            d.trim_end()
        );
    }
}

fn open(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="24" font-size="15" text-anchor="middle">{title}</text>"#,
        WIDTH / 2.0
    );
    s
}

fn bounds(pts: impl Iterator<Item = [f64; 2]>) -> ((f64, f64), (f64, f64)) {
    let mut bx = (f64::INFINITY, f64::NEG_INFINITY);
    let mut by = bx;
    for p in pts {
        bx = (bx.0.min(p[0]), bx.1.max(p[0]));
        by = (by.0.min(p[1]), by.1.max(p[1]));
    }
    if !bx.0.is_finite() {
        return ((0.0, 1.0), (0.0, 1.0));
    }
    (bx, by)
}

/// Thins a long curve to at most `max` points.
fn thin(pts: &[[f64; 2]], max: usize) -> Vec<[f64; 2]> {
    if pts.len() <= max {
        return pts.to_vec();
    }
    let step = pts.len().div_ceil(max);
    let mut out: Vec<[f64; 2]> = pts.iter().step_by(step).copied().collect();
    if out.last() != pts.last() {
        out.push(*pts.last().expect("nonempty"));
    }
    out
}

/// One solid polyline per labelled 1D profile plus an optional dashed
/// reference curve.
pub fn profile_overlay(
    curves: &[(String, Vec<[f64; 2]>)],
    reference: Option<&[[f64; 2]]>,
) -> String {
    let all = curves
        .iter()
        .flat_map(|(_, c)| c.iter().copied())
        .chain(reference.into_iter().flatten().copied());
    let (bx, by) = bounds(all);
    let frame = Frame::new(bx, by, false);
    let mut s = open("u(x) per eps");
    frame.axes(&mut s, "x", "u");
    for (k, (label, c)) in curves.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        frame.polyline(&mut s, &thin(c, 2000), color, false);
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-size="11" fill="{color}">{label}</text>"#,
            WIDTH - MARGIN - 110.0,
            MARGIN + 16.0 + 14.0 * k as f64
        );
    }
    if let Some(r) = reference {
        frame.polyline(&mut s, &thin(r, 2000), "black", true);
    }
    s.push_str("</svg>\n");
    s
}

fn heat_color(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let r = (255.0 * t.sqrt()) as u8;
    let g = (255.0 * t * t) as u8;
    let b = (255.0 * (1.0 - t) * 0.6) as u8;
    format!("#{r:02x}{g:02x}{b:02x}")
}

/// Heat map of a 2D field with the free-boundary polyline and its points
/// colored by relative slope error (green 0, red at 10% or more).
pub fn heat_map(u: &ScalarField, fb: Option<&FreeBoundaryReport>) -> String {
    let grid = u.grid();
    let frame = Frame::new(
        (grid.lower(0), grid.upper(0)),
        (grid.lower(1), grid.upper(1)),
        false,
    );
    let mut s = open("u and free boundary");
    let (lo, hi) = (u.min(), u.max());
    let span = if hi > lo { hi - lo } else { 1.0 };
    let cells = 100usize;
    let [nx, ny] = [grid.counts()[0], grid.counts()[1]];
    let bx = (nx - 1).div_ceil(cells).max(1);
    let by = (ny - 1).div_ceil(cells).max(1);
    for j in (0..ny - 1).step_by(by) {
        for i in (0..nx - 1).step_by(bx) {
            let v = u.values()[grid.node_index([i, j])];
            let x0 = grid.node_coords(grid.node_index([i, j]));
            let x1 =
                grid.node_coords(grid.node_index([(i + bx).min(nx - 1), (j + by).min(ny - 1)]));
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                frame.px(x0[0]),
                frame.py(x1[1]),
                frame.px(x1[0]) - frame.px(x0[0]) + 0.5,
                frame.py(x0[1]) - frame.py(x1[1]) + 0.5,
                heat_color((v - lo) / span)
            );
        }
    }
    frame.axes(&mut s, "x1", "x2");
    if let Some(fb) = fb {
        for [a, b] in &fb.segments {
            let _ = writeln!(
                s,
                r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="white" stroke-width="1.5"/>"#,
                frame.px(a[0]),
                frame.py(a[1]),
                frame.px(b[0]),
                frame.py(b[1])
            );
        }
        for p in &fb.points {
            if let Some(e) = p.rel_error {
                let t = (e / 0.1).min(1.0);
                let color = format!(
                    "#{:02x}{:02x}00",
                    (255.0 * t) as u8,
                    (255.0 * (1.0 - t)) as u8
                );
                let _ = writeln!(
                    s,
                    r#"<circle cx="{:.2}" cy="{:.2}" r="1.8" fill="{color}"/>"#,
                    frame.px(p.position[0]),
                    frame.py(p.position[1])
                );
            }
        }
    }
    s.push_str("</svg>\n");
    s
}

/// Measured slope against `eps` on a log axis with the limiting value as a
/// dashed horizontal line.
pub fn slope_convergence(eps: &[f64], slopes: &[Option<f64>], reference: f64) -> String {
    let pts: Vec<[f64; 2]> = eps
        .iter()
        .zip(slopes)
        .filter_map(|(&e, s)| s.map(|s| [e, s]))
        .collect();
    let (mut bx, mut by) = bounds(pts.iter().copied().chain(std::iter::once([
        eps.first().copied().unwrap_or(1.0),
        reference,
    ])));
    for &e in eps {
        bx = (bx.0.min(e), bx.1.max(e));
    }
    by = (by.0.min(reference), by.1.max(reference));
    let frame = Frame::new((bx.0 * 0.8, bx.1 * 1.25), (by.0 - 0.02, by.1 + 0.02), true);
    let mut s = open("free-boundary slope vs eps");
    frame.axes(&mut s, "eps", "slope");
    let line = [[bx.0 * 0.8, reference], [bx.1 * 1.25, reference]];
    frame.polyline(&mut s, &line, "black", true);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" font-size="11">lambda* = {reference:.4}</text>"#,
        MARGIN + 6.0,
        frame.py(reference) - 4.0
    );
    if !pts.is_empty() {
        frame.polyline(&mut s, &pts, PALETTE[0], false);
        for p in &pts {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{}"/>"#,
                frame.px(p[0]),
                frame.py(p[1]),
                PALETTE[0]
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::extract_free_boundary;
    use crate::grid::Grid;

    #[test]
    fn overlay_structure() {
        let curves = vec![
            ("eps=0.1".to_string(), vec![[0.0, 1.0], [1.0, 0.0]]),
            (
                "eps=0.05".to_string(),
                vec![[0.0, 1.0], [0.5, 0.2], [1.0, 0.0]],
            ),
        ];
        let svg = profile_overlay(&curves, Some(&[[0.0, 1.0], [1.0, 0.0]]));
        assert_eq!(svg.matches("<polyline").count(), 3);
        assert_eq!(svg.matches("stroke-dasharray").count(), 1);
        assert!(!svg.contains("<script"));
    }

    #[test]
    fn heat_map_with_and_without_front() {
        let grid = Grid::new_2d([41, 41], [-1.0, -1.0], [1.0, 1.0]).unwrap();
        let u = ScalarField::from_fn(grid, |x| (0.5 - x[0].hypot(x[1])).max(0.0));
        let empty = extract_free_boundary(&ScalarField::constant(grid, 1.0), 0.1).unwrap();
        let svg = heat_map(&u, Some(&empty));
        assert!(!svg.contains("<line"));
        let fb = extract_free_boundary(&u, 0.1).unwrap();
        assert!(heat_map(&u, Some(&fb)).contains("<line"));
    }

    #[test]
    fn slope_axis_includes_reference() {
        let svg = slope_convergence(&[0.04, 0.02, 0.01], &[Some(0.9), Some(0.95), None], 1.0);
        assert!(svg.contains("lambda* = 1.0000"));
        let frame_top = svg.contains("1.020");
        assert!(frame_top);
    }
}
