//! Built-in domains.
//!
//! The parabolic region, unit square, triangle, pentagon and star carry
//! published coordinates. The two annuli, the four-petal flower and the pair
//! of squares are synthetic stand-ins with no published counterpart.

use super::{Constraint, DomainSpec, Rect};
use crate::exprlang::parse_expr;

/// Names accepted by [`by_name`].
pub const NAMES: [&str; 9] = [
    "parabola",
    "unit_square",
    "triangle",
    "pentagon",
    "star",
    "rect_annulus",
    "star_annulus",
    "four_petal",
    "two_squares",
];

/// Region between the x axis, the parabola `y = x²` and the line `x = 1`.
pub fn parabola() -> DomainSpec {
    let constraints = ["y >= 0", "y <= x^2", "x <= 1", "x >= 0"]
        .iter()
        .map(|s| Constraint::parse(s).expect("fixture constraint"))
        .collect();
    DomainSpec::curve_bounded(
        constraints,
        Some(Rect::new(-0.5, -0.5, 1.5, 1.5)),
        Some(Rect::new(0.0, 0.0, 1.0, 1.0)),
    )
    .expect("fixture")
}

pub fn unit_square() -> DomainSpec {
    polygon(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)])
}

pub fn triangle() -> DomainSpec {
    polygon(&[(1.0, 1.0), (13.0, 1.0), (7.0, 12.25)])
}

pub fn pentagon() -> DomainSpec {
    polygon(&[
        (1.1, 8.0),
        (7.0, 12.25),
        (12.8, 8.0),
        (10.5, 1.0),
        (3.5, 1.0),
    ])
}

pub fn star() -> DomainSpec {
    polygon(&STAR)
}

const STAR: [(f64, f64); 10] = [
    (1.1, 8.0),
    (5.6, 8.0),
    (7.0, 12.25),
    (8.4, 8.0),
    (12.8, 8.0),
    (9.2, 5.4),
    (10.5, 1.0),
    (7.0, 3.6),
    (3.5, 1.0),
    (4.8, 5.4),
];

/// `[1, 12] × [1, 9]` minus `[4, 9] × [3, 7]`.
pub fn rect_annulus() -> DomainSpec {
    let outer = polygon(&[(1.0, 1.0), (12.0, 1.0), (12.0, 9.0), (1.0, 9.0)]);
    let inner = polygon(&[(4.0, 3.0), (9.0, 3.0), (9.0, 7.0), (4.0, 7.0)]);
    DomainSpec::difference(outer, inner).expect("fixture")
}

/// The star minus a copy scaled by 0.35 about the centroid of its inner
/// vertices.
pub fn star_annulus() -> DomainSpec {
    let (cx, cy) = (7.0, 6.08);
    let s = 0.35;
    let inner: Vec<(f64, f64)> = STAR
        .iter()
        .map(|&(x, y)| (cx + s * (x - cx), cy + s * (y - cy)))
        .collect();
    DomainSpec::difference(star(), polygon(&inner)).expect("fixture")
}

/// Four-petal rose `r = |cos 2θ|`, written as `r³ - |x² - y²| < 0`.
pub fn four_petal() -> DomainSpec {
    DomainSpec::implicit(
        parse_expr("sqrt(x^2+y^2)^3 - abs(x^2-y^2)").expect("fixture expression"),
        Some(Rect::new(-1.5, -1.5, 1.5, 1.5)),
        Some(Rect::new(-1.0, -1.0, 1.0, 1.0)),
    )
    .expect("fixture")
}

/// Two disjoint squares; its interior is never connected.
pub fn two_squares() -> DomainSpec {
    DomainSpec::union(vec![
        polygon(&[(1.0, 1.0), (3.0, 1.0), (3.0, 3.0), (1.0, 3.0)]),
        polygon(&[(6.0, 1.0), (8.0, 1.0), (8.0, 3.0), (6.0, 3.0)]),
    ])
    .expect("fixture")
}

pub fn by_name(name: &str) -> Option<DomainSpec> {
    Some(match name {
        "parabola" => parabola(),
        "unit_square" => unit_square(),
        "triangle" => triangle(),
        "pentagon" => pentagon(),
        "star" => star(),
        "rect_annulus" => rect_annulus(),
        "star_annulus" => star_annulus(),
        "four_petal" => four_petal(),
        "two_squares" => two_squares(),
        _ => return None,
    })
}

/// Every fixture, paired with its name.
pub fn all() -> Vec<(&'static str, DomainSpec)> {
    NAMES
        .iter()
        .map(|n| (*n, by_name(n).expect("listed fixture")))
        .collect()
}

fn polygon(v: &[(f64, f64)]) -> DomainSpec {
    DomainSpec::polygon(v.to_vec()).expect("fixture polygon")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::PointClass;

    #[test]
    fn every_name_resolves() {
        assert_eq!(all().len(), NAMES.len());
        assert!(by_name("hexagon").is_none());
    }

    #[test]
    fn four_petal_declared_box_matches_sampling() {
        let d = four_petal();
        let s = d
            .sampled_bbox(&Rect::new(-1.5, -1.5, 1.5, 1.5), 601)
            .unwrap();
        let h = 3.0 / 600.0;
        assert!((s.x1 - 1.0).abs() <= 2.0 * h, "{s:?}");
        assert!((s.y0 + 1.0).abs() <= 2.0 * h, "{s:?}");
    }

    #[test]
    fn star_annulus_hole() {
        let d = star_annulus();
        assert_eq!(
            d.classify_point(7.0, 6.08, 1e-9).unwrap(),
            PointClass::Outside
        );
        assert_eq!(
            d.classify_point(7.0, 10.0, 1e-9).unwrap(),
            PointClass::Inside
        );
    }
}
