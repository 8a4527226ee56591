use std::fmt;

use rug::Rational;
use serde_json::{json, Value};

use crate::error::AnalysisError;
use crate::gps::format_rational;

/// A Newton polygon slope, or the absence of any positive slope.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Slope {
    Finite(Rational),
    Infinite,
}

impl Slope {
    pub fn is_infinite(&self) -> bool {
        matches!(self, Slope::Infinite)
    }

    pub fn as_finite(&self) -> Option<&Rational> {
        match self {
            Slope::Finite(r) => Some(r),
            Slope::Infinite => None,
        }
    }

    pub fn parse(s: &str) -> Option<Slope> {
        match s.trim() {
            "inf" | "infinity" | "∞" => Some(Slope::Infinite),
            t => crate::gps::parse_rational(t).map(Slope::Finite),
        }
    }
}

impl fmt::Display for Slope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Slope::Finite(r) => f.write_str(&format_rational(r)),
            Slope::Infinite => f.write_str("inf"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NewtonPolygon {
    /// `(i, Re val ∂F/∂u_i)` as given.
    pub points: Vec<(usize, Rational)>,
    /// Lower boundary vertices from the rightmost minimum to the last point.
    pub vertices: Vec<(usize, Rational)>,
    /// Slopes between consecutive vertices, strictly increasing and positive.
    pub slopes: Vec<Rational>,
    pub k: Slope,
}

impl NewtonPolygon {
    pub fn to_json(&self) -> Value {
        let pt = |(i, v): &(usize, Rational)| json!([i, format_rational(v)]);
        json!({
            "points": self.points.iter().map(pt).collect::<Vec<_>>(),
            "vertices": self.vertices.iter().map(pt).collect::<Vec<_>>(),
            "slopes": self.slopes.iter().map(format_rational).collect::<Vec<_>>(),
            "k": self.k.to_string(),
        })
    }
}

fn cross(o: &(usize, Rational), a: &(usize, Rational), b: &(usize, Rational)) -> Rational {
    let ax = Rational::from(a.0 as i64 - o.0 as i64);
    let bx = Rational::from(b.0 as i64 - o.0 as i64);
    let ay = Rational::from(&a.1 - &o.1);
    let by = Rational::from(&b.1 - &o.1);
    ax * by - ay * bx
}

/// Boundary of the convex hull of the quadrants `{x ≤ i, y ≥ v_i}`.
///
/// The boundary is horizontal up to the rightmost point attaining the
/// minimum, then follows the lower convex chain through the remaining
/// points; its slopes there are the positive slopes of the polygon.
pub fn newton_polygon(points: &[(usize, Rational)]) -> Result<NewtonPolygon, AnalysisError> {
    if points.is_empty() {
        return Err(AnalysisError::EmptyPolygon);
    }
    let mut sorted = points.to_vec();
    sorted.sort_by_key(|a| a.0);
    let vmin = sorted.iter().map(|p| &p.1).min().cloned().expect("nonempty");
    let start = sorted.iter().rposition(|p| p.1 == vmin).expect("minimum exists");

    let mut chain: Vec<(usize, Rational)> = Vec::new();
    for pt in sorted[start..].iter() {
        while chain.len() >= 2 {
            let n = chain.len();
            if cross(&chain[n - 2], &chain[n - 1], pt).cmp0().is_gt() {
                break;
            }
            chain.pop();
        }
        chain.push(pt.clone());
    }

    let slopes: Vec<Rational> = chain
        .windows(2)
        .map(|w| Rational::from(&w[1].1 - &w[0].1) / Rational::from((w[1].0 - w[0].0) as i64))
        .collect();
    let k = slopes
        .first()
        .cloned()
        .map(Slope::Finite)
        .unwrap_or(Slope::Infinite);
    Ok(NewtonPolygon {
        points: points.to_vec(),
        vertices: chain,
        slopes,
        k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pts(v: &[(usize, i64)]) -> Vec<(usize, Rational)> {
        v.iter().map(|&(i, y)| (i, Rational::from(y))).collect()
    }

    /// Exhaustive hull: a pair is an edge when every point lies on or above
    /// the line through it, the slope is positive and the pair is the
    /// outermost on that line.
    fn brute_force_slopes(points: &[(usize, Rational)]) -> Vec<Rational> {
        let mut out = Vec::new();
        for a in points {
            for b in points {
                if a.0 >= b.0 {
                    continue;
                }
                let slope = Rational::from(&b.1 - &a.1) / Rational::from((b.0 - a.0) as i64);
                if slope.cmp0().is_le() {
                    continue;
                }
                let line = |x: usize| &a.1 + &slope * Rational::from(x as i64 - a.0 as i64);
                if points.iter().any(|p| p.1 < line(p.0)) {
                    continue;
                }
                let on: Vec<usize> = points.iter().filter(|p| p.1 == line(p.0)).map(|p| p.0).collect();
                if on.iter().min() == Some(&a.0) && on.iter().max() == Some(&b.0) {
                    out.push(slope);
                }
            }
        }
        out.sort();
        out
    }

    #[test]
    fn single_edge() {
        let p = newton_polygon(&pts(&[(0, 0), (1, 1)])).unwrap();
        assert_eq!(p.slopes, vec![Rational::from(1)]);
        assert_eq!(p.k, Slope::Finite(Rational::from(1)));
    }

    #[test]
    fn two_edges() {
        let p = newton_polygon(&pts(&[(0, 0), (2, 2), (3, 5)])).unwrap();
        assert_eq!(p.slopes, vec![Rational::from(1), Rational::from(3)]);
        assert_eq!(p.k, Slope::Finite(Rational::from(1)));
        assert_eq!(p.slopes, brute_force_slopes(&p.points));
    }

    #[test]
    fn minimum_at_last_index() {
        let p = newton_polygon(&pts(&[(0, 3), (1, 0)])).unwrap();
        assert!(p.slopes.is_empty());
        assert_eq!(p.k, Slope::Infinite);
    }

    #[test]
    fn rightmost_minimum_starts_the_chain() {
        let p = newton_polygon(&pts(&[(0, 1), (1, 1), (3, 2), (4, 5)])).unwrap();
        assert_eq!(p.vertices[0].0, 1);
        assert_eq!(p.slopes, vec![Rational::from((1, 2)), Rational::from(3)]);
    }

    #[test]
    fn collinear_points_are_not_vertices() {
        let p = newton_polygon(&pts(&[(0, 0), (1, 1), (2, 2)])).unwrap();
        assert_eq!(p.vertices.len(), 2);
        assert_eq!(p.slopes, vec![Rational::from(1)]);
    }

    #[test]
    fn empty_input() {
        assert_eq!(newton_polygon(&[]), Err(AnalysisError::EmptyPolygon));
    }

    fn arb_points() -> impl Strategy<Value = Vec<(usize, Rational)>> {
        proptest::collection::btree_map(0usize..12, (-20i64..20, 1i64..4), 1..10).prop_map(|m| {
            m.into_iter()
                .map(|(i, (n, d))| (i, Rational::from((n, d))))
                .collect()
        })
    }

    proptest! {
        #[test]
        fn matches_brute_force(points in arb_points()) {
            let p = newton_polygon(&points).unwrap();
            prop_assert_eq!(&p.slopes, &brute_force_slopes(&points));
            prop_assert!(p.slopes.windows(2).all(|w| w[0] < w[1]));
        }

        #[test]
        fn point_above_changes_nothing(points in arb_points(), lift in 1i64..10) {
            let p = newton_polygon(&points).unwrap();
            let used: Vec<usize> = points.iter().map(|q| q.0).collect();
            let (lo, hi) = (p.vertices[0].0, p.vertices.last().unwrap().0);
            if let Some(x) = (lo..hi).find(|x| !used.contains(x)) {
                let w = p.vertices.windows(2).find(|w| w[0].0 <= x && x < w[1].0).unwrap();
                let slope = Rational::from(&w[1].1 - &w[0].1) / Rational::from((w[1].0 - w[0].0) as i64);
                let y = (&w[0].1 + slope * Rational::from((x - w[0].0) as i64)) + lift;
                let mut more = points.clone();
                more.push((x, y));
                let q = newton_polygon(&more).unwrap();
                prop_assert_eq!(q.vertices, p.vertices);
                prop_assert_eq!(q.slopes, p.slopes);
            }
        }
    }
}
