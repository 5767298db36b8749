use std::fmt::Write as _;

use super::WirePolyline;

/// Orthographic view direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Projection {
    /// Looking down -Z.
    Top,
    /// Looking along +Y.
    Front,
    /// Looking along -X.
    Side,
}

impl Projection {
    fn project(self, p: [f64; 3]) -> (f64, f64) {
        match self {
            Projection::Top => (p[0], p[1]),
            Projection::Front => (p[0], p[2]),
            Projection::Side => (p[1], p[2]),
        }
    }
}

/// Renders the polyline as a standalone SVG document, y up, with the wire
/// start marked.
pub fn render_svg(w: &WirePolyline, view: Projection, wire_diameter: f64) -> String {
    let pts: Vec<(f64, f64)> = w.points.iter().map(|&p| view.project(p)).collect();
    let (mut x0, mut y0, mut x1, mut y1) = (0.0_f64, 0.0_f64, 1.0_f64, 1.0_f64);
    if let Some(&(x, y)) = pts.first() {
        (x0, y0, x1, y1) = (x, y, x, y);
    }
    for &(x, y) in &pts {
        x0 = x0.min(x);
        y0 = y0.min(y);
        x1 = x1.max(x);
        y1 = y1.max(y);
    }
    let margin = 5.0 + wire_diameter;
    let (width, height) = (x1 - x0 + 2.0 * margin, y1 - y0 + 2.0 * margin);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {width:.3} {height:.3}" width="{width:.3}mm" height="{height:.3}mm">"#
    );
    let coords: Vec<String> = pts
        .iter()
        .map(|&(x, y)| format!("{:.3},{:.3}", x - x0 + margin, y1 - y + margin))
        .collect();
    let _ = writeln!(
        out,
        r#"  <polyline points="{}" fill="none" stroke="black" stroke-width="{wire_diameter:.3}" stroke-linejoin="round"/>"#,
        coords.join(" ")
    );
    if let Some(&(x, y)) = pts.first() {
        let _ = writeln!(
            out,
            r#"  <circle cx="{:.3}" cy="{:.3}" r="{:.3}" fill="green"/>"#,
            x - x0 + margin,
            y1 - y + margin,
            wire_diameter
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svg_has_all_points() {
        let w = WirePolyline {
            points: vec![[0.0, 0.0, 0.0], [35.0, 0.0, 0.0], [35.0, 35.0, 0.0]],
            provenance: vec![0, 2],
        };
        let s = render_svg(&w, Projection::Top, 3.0);
        assert!(s.starts_with("<svg"));
        assert!(s.contains("8.000,43.000 43.000,43.000 43.000,8.000"), "{s}");
    }
}
