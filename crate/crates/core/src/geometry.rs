//! Planar domains and point membership.

use thiserror::Error;

use crate::exprlang::{parse_expr, BinOp, EvalError, Expr, ParseError};

pub mod fixtures;

/// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Rect {
        Rect { x0, y0, x1, y1 }
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn contains_rect(&self, other: &Rect, tol: f64) -> bool {
        other.x0 >= self.x0 - tol
            && other.y0 >= self.y0 - tol
            && other.x1 <= self.x1 + tol
            && other.y1 <= self.y1 + tol
    }

    pub fn union(&self, other: &Rect) -> Rect {
        Rect {
            x0: self.x0.min(other.x0),
            y0: self.y0.min(other.y0),
            x1: self.x1.max(other.x1),
            y1: self.y1.max(other.y1),
        }
    }

    fn is_valid(&self) -> bool {
        [self.x0, self.y0, self.x1, self.y1]
            .iter()
            .all(|v| v.is_finite())
            && self.x1 > self.x0
            && self.y1 > self.y0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PointClass {
    Inside,
    OnBoundary,
    Outside,
}

impl PointClass {
    /// Inside or on the boundary.
    pub fn in_closure(self) -> bool {
        self != PointClass::Outside
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("invalid polygon: {0}")]
    InvalidPolygon(String),
    #[error("invalid rectangle: {0}")]
    InvalidRect(String),
    #[error("bounding box of an implicit domain needs a search window")]
    MissingWindow,
    #[error("no sample of the search window lies in the domain")]
    EmptyDomain,
    #[error("inner domain is not contained in the outer domain (sample at ({x}, {y}))")]
    NotNested { x: f64, y: f64 },
    #[error("union needs at least one member")]
    EmptyUnion,
    #[error("bad constraint `{text}`: {msg}")]
    BadConstraint { text: String, msg: String },
    #[error("constraint expression: {0}")]
    Parse(#[from] ParseError),
    #[error("domain function evaluation failed at ({x}, {y}): {source}")]
    Eval {
        x: f64,
        y: f64,
        #[source]
        source: EvalError,
    },
}

/// Simple closed polygon. Vertices are validated on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    vertices: Vec<(f64, f64)>,
}

impl Polygon {
    pub fn new(vertices: Vec<(f64, f64)>) -> Result<Polygon, GeometryError> {
        let n = vertices.len();
        if n < 3 {
            return Err(GeometryError::InvalidPolygon(format!(
                "need at least 3 vertices, got {n}"
            )));
        }
        if vertices
            .iter()
            .any(|(x, y)| !x.is_finite() || !y.is_finite())
        {
            return Err(GeometryError::InvalidPolygon("non-finite vertex".into()));
        }
        for i in 0..n {
            if vertices[i] == vertices[(i + 1) % n] {
                return Err(GeometryError::InvalidPolygon(format!(
                    "vertices {i} and {} coincide",
                    (i + 1) % n
                )));
            }
        }
        for i in 0..n {
            let (a, b) = (vertices[i], vertices[(i + 1) % n]);
            for j in i + 1..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                let (c, d) = (vertices[j], vertices[(j + 1) % n]);
                let hit = if adjacent {
                    // consecutive edges p->q->r may only share q
                    let (p, q, r) = if j == i + 1 { (a, b, d) } else { (c, a, b) };
                    folds_back(p, q, r)
                } else {
                    segments_intersect(a, b, c, d)
                };
                if hit {
                    return Err(GeometryError::InvalidPolygon(format!(
                        "edges {i} and {j} intersect"
                    )));
                }
            }
        }
        Ok(Polygon { vertices })
    }

    pub fn vertices(&self) -> &[(f64, f64)] {
        &self.vertices
    }

    fn edges(&self) -> impl Iterator<Item = ((f64, f64), (f64, f64))> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn bbox(&self) -> Rect {
        let mut r = Rect::new(
            f64::INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::NEG_INFINITY,
        );
        for &(x, y) in &self.vertices {
            r.x0 = r.x0.min(x);
            r.y0 = r.y0.min(y);
            r.x1 = r.x1.max(x);
            r.y1 = r.y1.max(y);
        }
        r
    }

    /// Shoelace area (positive for either orientation).
    pub fn area(&self) -> f64 {
        let s: f64 = self
            .edges()
            .map(|((x0, y0), (x1, y1))| x0 * y1 - x1 * y0)
            .sum();
        0.5 * s.abs()
    }

    pub fn classify(&self, x: f64, y: f64, eps: f64) -> PointClass {
        if self
            .edges()
            .any(|(a, b)| dist_to_segment((x, y), a, b) <= eps)
        {
            return PointClass::OnBoundary;
        }
        if self.ray_parity(x, y, eps) {
            PointClass::Inside
        } else {
            PointClass::Outside
        }
    }

    // Even-odd count along a ray. The direction is rotated away from any
    // vertex lying within eps of the ray, so every crossing is transversal.
    fn ray_parity(&self, x: f64, y: f64, eps: f64) -> bool {
        const ANGLES: [f64; 8] = [0.0, 0.3217, 1.1071, 1.9237, 2.6779, 3.5914, 4.3806, 5.4978];
        let scale = self.vertices.iter().fold(1.0f64, |m, &(vx, vy)| {
            m.max((vx - x).abs()).max((vy - y).abs())
        });
        let slack = eps.max(1e-12 * scale);
        let mut chosen = None;
        for &theta in &ANGLES {
            let (dy, dx) = theta.sin_cos();
            let degenerate = self.vertices.iter().any(|&(vx, vy)| {
                let (rx, ry) = (vx - x, vy - y);
                let along = rx * dx + ry * dy;
                let off = (rx * dy - ry * dx).abs();
                along > -slack && off <= slack
            });
            if !degenerate {
                chosen = Some((dx, dy));
                break;
            }
        }
        // Eight directions cannot all graze a vertex unless the polygon has
        // vertices on eight distinct rays through the point; fall back to
        // the first angle in that pathological case.
        let (dx, dy) = chosen.unwrap_or((1.0, 0.0));
        let mut inside = false;
        for ((ax, ay), (bx, by)) in self.edges() {
            // Solve (x,y) + s(dx,dy) = a + u(b - a)
            let (ex, ey) = (bx - ax, by - ay);
            let denom = dx * ey - dy * ex;
            if denom == 0.0 {
                continue;
            }
            let (wx, wy) = (ax - x, ay - y);
            let s = (wx * ey - wy * ex) / denom;
            let u = (wx * dy - wy * dx) / denom;
            if s > 0.0 && (0.0..1.0).contains(&u) {
                inside = !inside;
            }
        }
        inside
    }
}

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

fn on_segment(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> bool {
    p.0 >= a.0.min(b.0) && p.0 <= a.0.max(b.0) && p.1 >= a.1.min(b.1) && p.1 <= a.1.max(b.1)
}

fn segments_intersect(a: (f64, f64), b: (f64, f64), c: (f64, f64), d: (f64, f64)) -> bool {
    let d1 = cross(c, d, a);
    let d2 = cross(c, d, b);
    let d3 = cross(a, b, c);
    let d4 = cross(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(a, c, d))
        || (d2 == 0.0 && on_segment(b, c, d))
        || (d3 == 0.0 && on_segment(c, a, b))
        || (d4 == 0.0 && on_segment(d, a, b))
}

// Edges p->q and q->r fold onto each other when they are collinear and
// point in opposite directions.
fn folds_back(p: (f64, f64), q: (f64, f64), r: (f64, f64)) -> bool {
    let (ux, uy) = (q.0 - p.0, q.1 - p.1);
    let (vx, vy) = (r.0 - q.0, r.1 - q.1);
    cross(p, q, r) == 0.0 && ux * vx + uy * vy < 0.0
}

fn dist_to_segment(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (ex, ey) = (b.0 - a.0, b.1 - a.1);
    let len2 = ex * ex + ey * ey;
    let t = (((p.0 - a.0) * ex + (p.1 - a.1) * ey) / len2).clamp(0.0, 1.0);
    let (cx, cy) = (a.0 + t * ex, a.1 + t * ey);
    ((p.0 - cx).powi(2) + (p.1 - cy).powi(2)).sqrt()
}

/// One side of a curve-bounded region, stored as `g(x, y) <= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub g: Expr,
}

impl Constraint {
    /// Parses `lhs <= rhs` or `lhs >= rhs` (strict `<`, `>` are accepted and
    /// treated the same; the boundary is resolved by the tolerance).
    pub fn parse(text: &str) -> Result<Constraint, GeometryError> {
        let bad = |msg: &str| GeometryError::BadConstraint {
            text: text.to_string(),
            msg: msg.to_string(),
        };
        let ops = ["<=", ">=", "<", ">"];
        let (pos, op) = ops
            .iter()
            .filter_map(|op| text.find(op).map(|p| (p, *op)))
            .min_by_key(|(p, op)| (*p, std::cmp::Reverse(op.len())))
            .ok_or_else(|| bad("expected `<=` or `>=`"))?;
        let lhs = parse_expr(&text[..pos])?;
        let rest = &text[pos + op.len()..];
        if ops.iter().any(|o| rest.contains(o)) {
            return Err(bad("only one comparison allowed"));
        }
        let rhs = parse_expr(rest)?;
        let g = if op.starts_with('<') {
            Expr::Bin(BinOp::Sub, Box::new(lhs), Box::new(rhs))
        } else {
            Expr::Bin(BinOp::Sub, Box::new(rhs), Box::new(lhs))
        };
        Ok(Constraint { g })
    }
}

/// Declarative description of a planar domain.
#[derive(Debug, Clone, PartialEq)]
pub enum DomainSpec {
    Polygon(Polygon),
    /// `phi < 0` inside, `phi = 0` on the boundary.
    Implicit {
        phi: Expr,
        window: Option<Rect>,
        bbox: Option<Rect>,
    },
    /// Intersection of half-regions `g_i <= 0`.
    CurveBounded {
        constraints: Vec<Constraint>,
        window: Option<Rect>,
        bbox: Option<Rect>,
    },
    Difference(Box<DomainSpec>, Box<DomainSpec>),
    Union(Vec<DomainSpec>),
}

/// Samples per axis used when a bounding box has to be estimated.
pub const DEFAULT_BBOX_SAMPLES: usize = 2048;

const NESTING_SAMPLES: usize = 1000;

impl DomainSpec {
    pub fn polygon(vertices: Vec<(f64, f64)>) -> Result<DomainSpec, GeometryError> {
        Ok(DomainSpec::Polygon(Polygon::new(vertices)?))
    }

    pub fn implicit(
        phi: Expr,
        window: Option<Rect>,
        bbox: Option<Rect>,
    ) -> Result<DomainSpec, GeometryError> {
        check_rects(window, bbox)?;
        Ok(DomainSpec::Implicit { phi, window, bbox })
    }

    pub fn curve_bounded(
        constraints: Vec<Constraint>,
        window: Option<Rect>,
        bbox: Option<Rect>,
    ) -> Result<DomainSpec, GeometryError> {
        if constraints.is_empty() {
            return Err(GeometryError::BadConstraint {
                text: String::new(),
                msg: "at least one constraint is required".into(),
            });
        }
        check_rects(window, bbox)?;
        Ok(DomainSpec::CurveBounded {
            constraints,
            window,
            bbox,
        })
    }

    /// `outer \ inner`. Points of the inner domain, drawn from a Halton
    /// sequence over its bounding box, must all lie inside the outer one.
    pub fn difference(outer: DomainSpec, inner: DomainSpec) -> Result<DomainSpec, GeometryError> {
        let ib = inner.bounding_box()?;
        let eps = inner.default_eps()?;
        let oeps = outer.default_eps()?;
        let mut found = 0;
        let mut i = 1u64;
        while found < NESTING_SAMPLES && i < 200 * NESTING_SAMPLES as u64 {
            let x = ib.x0 + radical_inverse(i, 2) * ib.width();
            let y = ib.y0 + radical_inverse(i, 3) * ib.height();
            i += 1;
            if inner.classify_point(x, y, eps)? != PointClass::Inside {
                continue;
            }
            found += 1;
            if outer.classify_point(x, y, oeps)? != PointClass::Inside {
                return Err(GeometryError::NotNested { x, y });
            }
        }
        Ok(DomainSpec::Difference(Box::new(outer), Box::new(inner)))
    }

    pub fn union(parts: Vec<DomainSpec>) -> Result<DomainSpec, GeometryError> {
        if parts.is_empty() {
            return Err(GeometryError::EmptyUnion);
        }
        Ok(DomainSpec::Union(parts))
    }

    pub fn classify_point(&self, x: f64, y: f64, eps: f64) -> Result<PointClass, GeometryError> {
        let eval = |e: &Expr| {
            e.eval(x, y, 0.0)
                .map_err(|source| GeometryError::Eval { x, y, source })
        };
        Ok(match self {
            DomainSpec::Polygon(p) => p.classify(x, y, eps),
            DomainSpec::Implicit { phi, .. } => {
                let v = eval(phi)?;
                if v.abs() <= eps {
                    PointClass::OnBoundary
                } else if v < 0.0 {
                    PointClass::Inside
                } else {
                    PointClass::Outside
                }
            }
            DomainSpec::CurveBounded { constraints, .. } => {
                let mut on = false;
                for c in constraints {
                    let v = eval(&c.g)?;
                    if v > eps {
                        return Ok(PointClass::Outside);
                    }
                    if v >= -eps {
                        on = true;
                    }
                }
                if on {
                    PointClass::OnBoundary
                } else {
                    PointClass::Inside
                }
            }
            DomainSpec::Difference(outer, inner) => {
                let o = outer.classify_point(x, y, eps)?;
                if o == PointClass::Outside {
                    return Ok(PointClass::Outside);
                }
                match inner.classify_point(x, y, eps)? {
                    PointClass::Inside => PointClass::Outside,
                    PointClass::OnBoundary => PointClass::OnBoundary,
                    PointClass::Outside => o,
                }
            }
            DomainSpec::Union(parts) => {
                let mut best = PointClass::Outside;
                for p in parts {
                    match p.classify_point(x, y, eps)? {
                        PointClass::Inside => return Ok(PointClass::Inside),
                        PointClass::OnBoundary => best = PointClass::OnBoundary,
                        PointClass::Outside => {}
                    }
                }
                best
            }
        })
    }

    /// Bounding box of the closure. Polygons are exact; implicit and
    /// curve-bounded domains use their declared box when present and a dense
    /// sample of the search window otherwise.
    pub fn bounding_box(&self) -> Result<Rect, GeometryError> {
        self.bounding_box_with(DEFAULT_BBOX_SAMPLES)
    }

    pub fn bounding_box_with(&self, samples: usize) -> Result<Rect, GeometryError> {
        match self {
            DomainSpec::Polygon(p) => Ok(p.bbox()),
            DomainSpec::Implicit { bbox: Some(b), .. }
            | DomainSpec::CurveBounded { bbox: Some(b), .. } => Ok(*b),
            DomainSpec::Implicit { window, .. } | DomainSpec::CurveBounded { window, .. } => {
                let w = window.ok_or(GeometryError::MissingWindow)?;
                self.sampled_bbox(&w, samples)
            }
            DomainSpec::Difference(outer, _) => outer.bounding_box_with(samples),
            DomainSpec::Union(parts) => {
                let mut r = parts[0].bounding_box_with(samples)?;
                for p in &parts[1..] {
                    r = r.union(&p.bounding_box_with(samples)?);
                }
                Ok(r)
            }
        }
    }

    /// Extent of the sampled points that lie in the closure, padded by one
    /// sample spacing. Ignores any declared box.
    pub fn sampled_bbox(&self, window: &Rect, samples: usize) -> Result<Rect, GeometryError> {
        let samples = samples.max(2);
        let hx = window.width() / (samples - 1) as f64;
        let hy = window.height() / (samples - 1) as f64;
        let eps = default_eps_for(window);
        let mut r = Rect::new(
            f64::INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::NEG_INFINITY,
        );
        for k in 0..samples {
            let y = window.y0 + k as f64 * hy;
            for j in 0..samples {
                let x = window.x0 + j as f64 * hx;
                if self.classify_point(x, y, eps)?.in_closure() {
                    r.x0 = r.x0.min(x);
                    r.y0 = r.y0.min(y);
                    r.x1 = r.x1.max(x);
                    r.y1 = r.y1.max(y);
                }
            }
        }
        if !r.x0.is_finite() {
            return Err(GeometryError::EmptyDomain);
        }
        Ok(Rect::new(r.x0 - hx, r.y0 - hy, r.x1 + hx, r.y1 + hy))
    }

    /// Boundary tolerance `1e-9 · max(|xmax|, |ymax|, 1)` from the bounding box.
    pub fn default_eps(&self) -> Result<f64, GeometryError> {
        Ok(default_eps_for(&self.bounding_box()?))
    }
}

fn default_eps_for(b: &Rect) -> f64 {
    1e-9 * b.x1.abs().max(b.y1.abs()).max(1.0)
}

fn check_rects(window: Option<Rect>, bbox: Option<Rect>) -> Result<(), GeometryError> {
    for (name, r) in [("window", window), ("bbox", bbox)] {
        if let Some(r) = r {
            if !r.is_valid() {
                return Err(GeometryError::InvalidRect(format!(
                    "{name} {r:?} is empty or non-finite"
                )));
            }
        }
    }
    Ok(())
}

/// Van der Corput radical inverse of `i` in `base`.
pub(crate) fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}
