//! Newton polygon drawing.

use std::fmt::Write;

use crate::analysis::NewtonPolygon;
use crate::gps::format_rational;

const UNIT: f64 = 60.0;
const PAD: f64 = 40.0;

/// Unit grid, the points, the boundary of the hull with a 1 px stroke and
/// each positive slope written next to its edge.
pub fn polygon_svg(poly: &NewtonPolygon) -> String {
    let pts: Vec<(f64, f64)> = poly.points.iter().map(|(i, v)| (*i as f64, v.to_f64())).collect();
    let xmax = pts.iter().map(|p| p.0).fold(1.0, f64::max);
    let ymin = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min).floor().min(0.0);
    let ymax = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max).ceil().max(ymin + 1.0) + 1.0;
    let width = 2.0 * PAD + UNIT * xmax;
    let height = 2.0 * PAD + UNIT * (ymax - ymin);
    let sx = |x: f64| PAD + UNIT * x;
    let sy = |y: f64| height - PAD - UNIT * (y - ymin);

    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">"
    );
    for x in 0..=(xmax as i64) {
        let _ = writeln!(
            out,
            "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"#ddd\" stroke-width=\"1\"/>",
            sx(x as f64),
            sy(ymin),
            sy(ymax)
        );
    }
    for y in (ymin as i64)..=(ymax as i64) {
        let _ = writeln!(
            out,
            "<line x1=\"{1}\" y1=\"{0}\" x2=\"{2}\" y2=\"{0}\" stroke=\"#ddd\" stroke-width=\"1\"/>",
            sy(y as f64),
            sx(0.0),
            sx(xmax)
        );
    }

    if let (Some(first), Some(last)) = (poly.vertices.first(), poly.vertices.last()) {
        let mut d = format!("M{:.2},{:.2}", sx(0.0), sy(first.1.to_f64()));
        for (i, v) in &poly.vertices {
            let _ = write!(d, " L{:.2},{:.2}", sx(*i as f64), sy(v.to_f64()));
        }
        let _ = write!(d, " L{:.2},{:.2}", sx(last.0 as f64), sy(ymax));
        let _ = writeln!(out, "<path d=\"{d}\" fill=\"none\" stroke=\"#000\" stroke-width=\"1\"/>");
    }
    for (a, b) in poly.vertices.iter().zip(poly.vertices.iter().skip(1)) {
        let mx = (a.0 + b.0) as f64 / 2.0;
        let my = (a.1.to_f64() + b.1.to_f64()) / 2.0;
        let slope = rug::Rational::from(&b.1 - &a.1) / rug::Rational::from((b.0 - a.0) as i64);
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\">{}</text>",
            sx(mx) + 6.0,
            sy(my) + 14.0,
            format_rational(&slope)
        );
    }
    for (x, y) in &pts {
        let _ = writeln!(out, "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"#1f4e9c\"/>", sx(*x), sy(*y));
    }
    let _ = writeln!(
        out,
        "<text x=\"{PAD}\" y=\"{:.2}\" font-size=\"12\">k = {}</text>",
        PAD / 2.0,
        poly.k
    );
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::newton_polygon;
    use rug::Rational;

    #[test]
    fn deterministic_and_labelled() {
        let poly = newton_polygon(&[(0, Rational::from(0)), (1, Rational::from(1)), (2, Rational::from(3))]).unwrap();
        let a = polygon_svg(&poly);
        assert_eq!(a, polygon_svg(&poly));
        assert!(a.contains(">1</text>") && a.contains(">2</text>"));
        assert!(a.contains("stroke-width=\"1\""));
        assert_eq!(a.matches("<circle").count(), 3);
    }
}
