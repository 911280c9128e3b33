//! Convex polygons and their support-line geometry.
//!
//! A [`ConvexDomain`] is a counterclockwise, strictly convex polygon. Everything
//! downstream (widths, chords, the angular classification of the vertical
//! support lines, boundary slopes at the extreme points) is computed exactly
//! from the vertex list; tolerances only decide coincidence and collinearity.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// Absolute tolerance for coincidence and collinearity, applied after scaling
/// by the bounding-box diameter of the input.
pub const EPS_GEOM: f64 = 1e-9;

/// Edges steeper than this are treated as vertical.
pub const SLOPE_CAP: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product.
    #[inline]
    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn dist(self, o: Point) -> f64 {
        (self - o).norm()
    }

    /// Counterclockwise rotation by a right angle.
    #[inline]
    pub fn perp(self) -> Point {
        Point::new(-self.y, self.x)
    }

    pub fn lerp(self, o: Point, t: f64) -> Point {
        self + (o - self) * t
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<[f64; 2]> for Point {
    fn from(a: [f64; 2]) -> Self {
        Point::new(a[0], a[1])
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Unit vector `h`, the carrier of directional derivatives `u_h` and widths.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct Direction {
    dx: f64,
    dy: f64,
}

impl Direction {
    pub const X: Direction = Direction { dx: 1.0, dy: 0.0 };
    pub const Y: Direction = Direction { dx: 0.0, dy: 1.0 };

    /// Normalizes `(dx, dy)`; fails on zero or non-finite input.
    pub fn new(dx: f64, dy: f64) -> Result<Self> {
        let n = dx.hypot(dy);
        if !n.is_finite() || n == 0.0 {
            return Err(Error::InvalidDirection(format!("cannot normalize ({dx}, {dy})")));
        }
        Ok(Self { dx: dx / n, dy: dy / n })
    }

    pub fn from_angle(radians: f64) -> Self {
        let (s, c) = radians.sin_cos();
        Self { dx: c, dy: s }
    }

    pub fn from_degrees(deg: f64) -> Self {
        // exact axis directions for the common grid angles
        let r = deg.rem_euclid(360.0);
        match r {
            0.0 => Self::X,
            90.0 => Self::Y,
            180.0 => Self { dx: -1.0, dy: 0.0 },
            270.0 => Self { dx: 0.0, dy: -1.0 },
            _ => Self::from_angle(deg.to_radians()),
        }
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn dy(&self) -> f64 {
        self.dy
    }

    pub fn angle(&self) -> f64 {
        self.dy.atan2(self.dx)
    }

    pub fn as_point(&self) -> Point {
        Point::new(self.dx, self.dy)
    }

    /// The direction rotated counterclockwise by a right angle.
    pub fn normal(&self) -> Direction {
        Direction { dx: -self.dy, dy: self.dx }
    }

    pub fn reversed(&self) -> Direction {
        Direction { dx: -self.dx, dy: -self.dy }
    }

    pub fn dot(&self, o: &Direction) -> f64 {
        self.dx * o.dx + self.dy * o.dy
    }

    pub fn cross(&self, o: &Direction) -> f64 {
        self.dx * o.dy - self.dy * o.dx
    }
}

impl TryFrom<[f64; 2]> for Direction {
    type Error = Error;
    fn try_from(a: [f64; 2]) -> Result<Self> {
        Direction::new(a[0], a[1])
    }
}

impl From<Direction> for [f64; 2] {
    fn from(d: Direction) -> Self {
        [d.dx, d.dy]
    }
}

/// A support line `{p : normal·p = offset}` with the domain in `normal·p <= offset`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportLine {
    /// Outward normal.
    pub normal: Direction,
    pub offset: f64,
    /// A touching point (the first maximizing vertex).
    pub point: Point,
    /// Direction of the line itself.
    pub direction: Direction,
}

/// The segment `[a, b]` cut from the domain by the line `n·p = t`, where `n`
/// is the normal of the chord direction and `a` precedes `b` along it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Chord {
    pub t: f64,
    pub a: Point,
    pub b: Point,
}

impl Chord {
    pub fn length(&self) -> f64 {
        self.a.dist(self.b)
    }
}

/// Tangent cone at a boundary point, spanned by two unit edge directions.
/// At a regular point the two directions are opposite and the cone is a half-plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TangentCone {
    pub vertex: Point,
    pub edge_dirs: [Direction; 2],
}

impl TangentCone {
    pub fn is_half_plane(&self) -> bool {
        self.edge_dirs[0].dot(&self.edge_dirs[1]) <= -1.0 + 1e-12
    }

    /// Whether `p` lies in the closed cone.
    pub fn contains(&self, p: Point) -> bool {
        let v = p - self.vertex;
        let [e0, e1] = self.edge_dirs;
        let tol = 1e-12 * (1.0 + v.norm());
        if self.is_half_plane() {
            return e0.as_point().cross(v) >= -tol || e1.as_point().cross(v) <= tol;
        }
        // cone spanned counterclockwise from e0 to e1
        e0.as_point().cross(v) >= -tol && v.cross(e1.as_point()) >= -tol
    }
}

/// Left and right extreme points and the height offset `c = B.y - A.y`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtremePoints {
    pub a: Point,
    pub b: Point,
    pub c: f64,
}

/// Incident edge slopes at the extreme points; `lower` is the lower boundary
/// chain (convex graph), `upper` the upper one (concave graph). Vertical edges
/// report `±inf`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundarySlopes {
    #[serde(with = "crate::ext")]
    pub left_lower: f64,
    #[serde(with = "crate::ext")]
    pub left_upper: f64,
    #[serde(with = "crate::ext")]
    pub right_lower: f64,
    #[serde(with = "crate::ext")]
    pub right_upper: f64,
}

impl BoundarySlopes {
    pub fn as_array(&self) -> [f64; 4] {
        [self.left_lower, self.left_upper, self.right_lower, self.right_upper]
    }

    pub fn max_abs(&self) -> f64 {
        self.as_array().iter().fold(0.0_f64, |m, s| m.max(s.abs()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerticalSupport {
    pub left_angular: bool,
    pub right_angular: bool,
    pub slopes: BoundarySlopes,
}

/// Minimal and maximal widths with the line directions that realize them.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WidthExtremes {
    pub w_max: f64,
    pub w_min: f64,
    pub h_max: Direction,
    pub h_min: Direction,
}

#[derive(Serialize, Deserialize)]
struct DomainJson {
    vertices: Vec<Point>,
}

/// Counterclockwise strictly convex polygon.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DomainJson", into = "DomainJson")]
pub struct ConvexDomain {
    vertices: Vec<Point>,
    tol: f64,
}

impl TryFrom<DomainJson> for ConvexDomain {
    type Error = Error;
    fn try_from(j: DomainJson) -> Result<Self> {
        ConvexDomain::new(j.vertices)
    }
}

impl From<ConvexDomain> for DomainJson {
    fn from(d: ConvexDomain) -> Self {
        DomainJson { vertices: d.vertices }
    }
}

impl ConvexDomain {
    /// Validates and normalizes a vertex list: clockwise input is reversed,
    /// near-coincident and collinear vertices are collapsed, and anything that
    /// is still not strictly convex is rejected.
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        if vertices.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidDomain("non-finite vertex".into()));
        }
        if vertices.len() < 3 {
            return Err(Error::InvalidDomain(format!("{} vertices, need at least 3", vertices.len())));
        }
        let (lo, hi) = bbox(&vertices);
        let diam = (hi - lo).norm();
        if diam == 0.0 {
            return Err(Error::InvalidDomain("all vertices coincide".into()));
        }
        let tol = EPS_GEOM * diam;

        let mut v = vertices;
        if signed_area(&v) < 0.0 {
            v.reverse();
        }

        // coincident neighbours
        let mut out: Vec<Point> = Vec::with_capacity(v.len());
        for p in v {
            if out.last().is_none_or(|q| q.dist(p) > tol) {
                out.push(p);
            }
        }
        while out.len() > 1 && out[0].dist(out[out.len() - 1]) <= tol {
            out.pop();
        }

        // collinear runs
        let mut changed = true;
        while changed && out.len() >= 3 {
            changed = false;
            let n = out.len();
            for i in 0..n {
                let prev = out[(i + n - 1) % n];
                let next = out[(i + 1) % n];
                let base = next - prev;
                let len = base.norm();
                let off = if len > 0.0 { base.cross(out[i] - prev) / len } else { 0.0 };
                if off.abs() <= tol {
                    out.remove(i);
                    changed = true;
                    break;
                }
            }
        }
        if out.len() < 3 {
            return Err(Error::InvalidDomain("degenerate polygon (zero area)".into()));
        }

        let n = out.len();
        let mut turning = 0.0;
        for i in 0..n {
            let e0 = out[(i + 1) % n] - out[i];
            let e1 = out[(i + 2) % n] - out[(i + 1) % n];
            if e0.cross(e1) <= 0.0 {
                return Err(Error::InvalidDomain(format!("not convex at vertex {}", (i + 1) % n)));
            }
            turning += e0.cross(e1).atan2(e0.dot(e1));
        }
        if (turning - 2.0 * PI).abs() > 1e-6 {
            return Err(Error::InvalidDomain("self-overlapping polygon".into()));
        }
        Ok(Self { vertices: out, tol })
    }

    pub fn from_coords(coords: &[[f64; 2]]) -> Result<Self> {
        Self::new(coords.iter().copied().map(Point::from).collect())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("domain serializes")
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertex(&self, i: usize) -> Point {
        self.vertices[i % self.vertices.len()]
    }

    /// Edge `i` runs from vertex `i` to vertex `i + 1`.
    pub fn edge(&self, i: usize) -> (Point, Point) {
        (self.vertex(i), self.vertex(i + 1))
    }

    /// Unit outward normal of edge `i`.
    pub fn edge_normal(&self, i: usize) -> Direction {
        let (a, b) = self.edge(i);
        let e = b - a;
        Direction::new(e.y, -e.x).expect("edges have positive length")
    }

    /// Coincidence tolerance in the domain's own length units.
    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn centroid(&self) -> Point {
        let n = self.len();
        let (mut cx, mut cy, mut a2) = (0.0, 0.0, 0.0);
        let o = self.vertices[0];
        for i in 1..n - 1 {
            let p = self.vertices[i] - o;
            let q = self.vertices[i + 1] - o;
            let w = p.cross(q);
            cx += w * (p.x + q.x) / 3.0;
            cy += w * (p.y + q.y) / 3.0;
            a2 += w;
        }
        o + Point::new(cx / a2, cy / a2)
    }

    /// Signed distance to the boundary: positive inside, negative outside.
    pub fn inner_distance(&self, p: Point) -> f64 {
        (0..self.len())
            .map(|i| {
                let n = self.edge_normal(i).as_point();
                n.dot(self.vertex(i)) - n.dot(p)
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn contains(&self, p: Point) -> bool {
        self.inner_distance(p) >= -self.tol
    }

    pub fn on_boundary(&self, p: Point) -> bool {
        self.inner_distance(p).abs() <= self.tol
    }

    /// Index of the edge containing the boundary point `p`, lowest index first.
    pub fn boundary_edge_of(&self, p: Point) -> Option<usize> {
        (0..self.len()).find(|&i| {
            let (a, b) = self.edge(i);
            point_segment_distance(p, a, b) <= self.tol
        })
    }

    /// Indices of all edges containing the point (two at a vertex).
    pub fn boundary_edges_of(&self, p: Point) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| {
                let (a, b) = self.edge(i);
                point_segment_distance(p, a, b) <= self.tol
            })
            .collect()
    }

    /// `(min, max)` of `n·v` over the vertices.
    pub fn projection(&self, n: Point) -> (f64, f64) {
        self.vertices.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            let s = n.dot(*v);
            (lo.min(s), hi.max(s))
        })
    }

    /// Support line with outward normal `(cos alpha, sin alpha)`.
    pub fn support_line(&self, alpha: f64) -> SupportLine {
        let normal = Direction::from_angle(alpha);
        self.support_line_normal(normal)
    }

    pub fn support_line_normal(&self, normal: Direction) -> SupportLine {
        let n = normal.as_point();
        let mut best = 0;
        for (i, v) in self.vertices.iter().enumerate() {
            if n.dot(*v) > n.dot(self.vertices[best]) {
                best = i;
            }
        }
        let point = self.vertices[best];
        SupportLine { normal, offset: n.dot(point), point, direction: normal.normal() }
    }

    /// The contact set of the support line with outward normal `n`, as a
    /// segment ordered along the line direction (a point repeated when the
    /// contact is a single vertex).
    pub fn support_contact(&self, normal: Direction) -> (Point, Point) {
        let n = normal.as_point();
        let (_, hi) = self.projection(n);
        let t = normal.normal().as_point();
        let mut first: Option<(f64, Point)> = None;
        let mut last: Option<(f64, Point)> = None;
        for v in &self.vertices {
            if n.dot(*v) >= hi - self.tol {
                let s = t.dot(*v);
                if first.is_none_or(|(s0, _)| s < s0) {
                    first = Some((s, *v));
                }
                if last.is_none_or(|(s1, _)| s > s1) {
                    last = Some((s, *v));
                }
            }
        }
        (first.expect("nonempty").1, last.expect("nonempty").1)
    }

    /// Distance between the two support lines parallel to `h`.
    pub fn width(&self, h: Direction) -> f64 {
        let (lo, hi) = self.projection(h.normal().as_point());
        hi - lo
    }

    /// Side lengths `(w_x, w_y)` of the axis-aligned circumscribed rectangle.
    pub fn circumscribed_rectangle(&self) -> (f64, f64) {
        let (lo, hi) = bbox(&self.vertices);
        (hi.x - lo.x, hi.y - lo.y)
    }

    /// Rotating calipers. The minimum width is attained with a support line
    /// flush to an edge; the maximum width equals the diameter and is attained
    /// at an antipodal vertex pair.
    pub fn width_extremes(&self) -> WidthExtremes {
        let n = self.len();
        let v = &self.vertices;

        let mut w_min = f64::INFINITY;
        let mut h_min = Direction::X;
        let mut j = 1;
        for i in 0..n {
            let a = v[i];
            let b = v[(i + 1) % n];
            let e = b - a;
            let len = e.norm();
            let height = |k: usize| e.cross(v[k % n] - a) / len;
            while height(j + 1) > height(j) {
                j = (j + 1) % n;
            }
            let w = height(j);
            if w < w_min {
                w_min = w;
                h_min = Direction::new(e.x, e.y).expect("edge");
            }
        }

        let (mut p, mut q) = (v[0], v[1]);
        for (a, b) in self.antipodal_pairs() {
            if a.dist(b) > p.dist(q) {
                p = a;
                q = b;
            }
        }
        let d = q - p;
        WidthExtremes { w_max: d.norm(), w_min, h_max: Direction::new(-d.y, d.x).expect("diameter"), h_min }
    }

    /// All antipodal vertex pairs (each listed once per supporting edge).
    pub fn antipodal_pairs(&self) -> Vec<(Point, Point)> {
        let n = self.len();
        let v = &self.vertices;
        let area = |i: usize, k: usize| (v[(i + 1) % n] - v[i]).cross(v[k % n] - v[i]);
        let mut pairs = Vec::new();
        let mut j = 1;
        for i in 0..n {
            while area(i, j + 1) > area(i, j) {
                j = (j + 1) % n;
            }
            pairs.push((v[i], v[j % n]));
            pairs.push((v[(i + 1) % n], v[j % n]));
            if (area(i, j + 1) - area(i, j)).abs() <= self.tol * (v[(i + 1) % n] - v[i]).norm() {
                // edge parallel to edge: both endpoints are antipodal
                pairs.push((v[i], v[(j + 1) % n]));
                pairs.push((v[(i + 1) % n], v[(j + 1) % n]));
            }
        }
        pairs
    }

    /// Chord cut by the line parallel to `h` at offset `t` along `h.normal()`.
    pub fn chord(&self, h: Direction, t: f64) -> Option<Chord> {
        let n = h.normal().as_point();
        let along = h.as_point();
        let mut pts: Vec<Point> = Vec::with_capacity(4);
        for i in 0..self.len() {
            let (a, b) = self.edge(i);
            let da = n.dot(a) - t;
            let db = n.dot(b) - t;
            if da.abs() <= self.tol {
                pts.push(a);
            }
            if (da > self.tol && db < -self.tol) || (da < -self.tol && db > self.tol) {
                pts.push(a.lerp(b, da / (da - db)));
            }
        }
        let a = *pts.iter().min_by(|p, q| along.dot(**p).total_cmp(&along.dot(**q)))?;
        let b = *pts.iter().max_by(|p, q| along.dot(**p).total_cmp(&along.dot(**q)))?;
        Some(Chord { t, a, b })
    }

    /// `Ω ∩ {y = t}`.
    pub fn horizontal_chord(&self, y: f64) -> Option<Chord> {
        self.chord(Direction::X, y)
    }

    fn extreme_index(&self, left: bool) -> (usize, usize) {
        let key = |p: &Point| if left { p.x } else { -p.x };
        let best = self.vertices.iter().map(key).fold(f64::INFINITY, f64::min);
        let tied: Vec<usize> = (0..self.len()).filter(|&i| key(&self.vertices[i]) <= best + self.tol).collect();
        let lowest =
            *tied.iter().min_by(|&&i, &&k| self.vertices[i].y.total_cmp(&self.vertices[k].y)).expect("nonempty");
        (lowest, tied.len())
    }

    /// Leftmost point `A` and rightmost point `B`; ties go to the lower vertex.
    pub fn extreme_x_points(&self) -> ExtremePoints {
        let a = self.vertex(self.extreme_index(true).0);
        let b = self.vertex(self.extreme_index(false).0);
        ExtremePoints { a, b, c: b.y - a.y }
    }

    /// A vertical support line is angular when it touches a single vertex and
    /// neither incident edge is vertical.
    pub fn vertical_support_classification(&self) -> VerticalSupport {
        let n = self.len();
        let (ia, na) = self.extreme_index(true);
        let (ib, nb) = self.extreme_index(false);
        let a = self.vertex(ia);
        let b = self.vertex(ib);
        // counterclockwise from the leftmost vertex runs along the lower chain
        let slopes = BoundarySlopes {
            left_lower: capped_slope(a, self.vertex(ia + 1), 1.0),
            left_upper: capped_slope(a, self.vertex(ia + n - 1), 1.0),
            right_lower: capped_slope(self.vertex(ib + n - 1), b, 1.0),
            right_upper: capped_slope(b, self.vertex(ib + 1), -1.0),
        };
        VerticalSupport {
            left_angular: na == 1 && slopes.left_lower.is_finite() && slopes.left_upper.is_finite(),
            right_angular: nb == 1 && slopes.right_lower.is_finite() && slopes.right_upper.is_finite(),
            slopes,
        }
    }

    /// Largest absolute boundary slope at the extreme points; `+inf` when an
    /// incident edge is vertical.
    pub fn max_boundary_slope(&self) -> f64 {
        self.vertical_support_classification().slopes.max_abs()
    }

    /// Tangent cone at vertex `i`.
    pub fn tangent_cone(&self, i: usize) -> TangentCone {
        let n = self.len();
        let v = self.vertex(i);
        let next = self.vertex(i + 1) - v;
        let prev = self.vertex(i + n - 1) - v;
        TangentCone {
            vertex: v,
            edge_dirs: [Direction::new(next.x, next.y).expect("edge"), Direction::new(prev.x, prev.y).expect("edge")],
        }
    }

    /// Tangent cone at an arbitrary boundary point.
    pub fn tangent_cone_at(&self, p: Point) -> Result<TangentCone> {
        if let Some(i) = self.vertices.iter().position(|v| v.dist(p) <= self.tol) {
            return Ok(self.tangent_cone(i));
        }
        let i = self.boundary_edge_of(p).ok_or(Error::OutsideDomain { x: p.x, y: p.y })?;
        let (a, b) = self.edge(i);
        let e = Direction::new(b.x - a.x, b.y - a.y)?;
        Ok(TangentCone { vertex: p, edge_dirs: [e, e.reversed()] })
    }

    /// Image under `p ↦ M p + t`; the orientation is repaired when `det M < 0`.
    pub fn map_affine(&self, m: [[f64; 2]; 2], t: Point) -> Result<Self> {
        Self::new(self.vertices.iter().map(|p| apply_affine(m, t, *p)).collect())
    }

    /// Mirror image across the diagonal `y = x`.
    pub fn swap_axes(&self) -> Self {
        self.map_affine([[0.0, 1.0], [1.0, 0.0]], Point::default()).expect("reflection of a valid domain is valid")
    }

    /// Fan triangulation from vertex 0.
    pub fn fan(&self) -> Vec<[Point; 3]> {
        (1..self.len() - 1).map(|i| [self.vertices[0], self.vertices[i], self.vertices[i + 1]]).collect()
    }

    /// Intersection with the half-plane `n·p <= c`, or `None` if it is
    /// degenerate.
    pub fn clip(&self, n: Point, c: f64) -> Option<ConvexDomain> {
        let pts = clip_polygon(&self.vertices, n, c);
        ConvexDomain::new(pts).ok()
    }

    /// The inner parallel body at distance `d`.
    pub fn shrink(&self, d: f64) -> Option<ConvexDomain> {
        let mut pts = self.vertices.clone();
        for i in 0..self.len() {
            let n = self.edge_normal(i).as_point();
            pts = clip_polygon(&pts, n, n.dot(self.vertex(i)) - d);
            if pts.len() < 3 {
                return None;
            }
        }
        ConvexDomain::new(pts).ok()
    }
}

pub fn apply_affine(m: [[f64; 2]; 2], t: Point, p: Point) -> Point {
    Point::new(m[0][0] * p.x + m[0][1] * p.y + t.x, m[1][0] * p.x + m[1][1] * p.y + t.y)
}

/// Sutherland–Hodgman against one half-plane `n·p <= c`.
pub fn clip_polygon(poly: &[Point], n: Point, c: f64) -> Vec<Point> {
    let mut out = Vec::with_capacity(poly.len() + 1);
    let k = poly.len();
    for i in 0..k {
        let a = poly[i];
        let b = poly[(i + 1) % k];
        let da = n.dot(a) - c;
        let db = n.dot(b) - c;
        if da <= 0.0 {
            out.push(a);
        }
        if (da < 0.0 && db > 0.0) || (da > 0.0 && db < 0.0) {
            out.push(a.lerp(b, da / (da - db)));
        }
    }
    out
}

/// Slope of the edge `p -> q`; `orient` is the expected sign of `q.x - p.x`.
/// Vertical or backwards edges give `±inf`.
fn capped_slope(p: Point, q: Point, orient: f64) -> f64 {
    let dx = q.x - p.x;
    let dy = q.y - p.y;
    if dx * orient <= 0.0 || dy.abs() > SLOPE_CAP * dx.abs() {
        return f64::INFINITY.copysign(dy * orient);
    }
    dy / dx
}

pub(crate) fn signed_area(v: &[Point]) -> f64 {
    let n = v.len();
    let o = v[0];
    (1..n.saturating_sub(1)).map(|i| (v[i] - o).cross(v[i + 1] - o)).sum::<f64>() / 2.0
}

pub fn bbox(v: &[Point]) -> (Point, Point) {
    v.iter().fold(
        (Point::new(f64::INFINITY, f64::INFINITY), Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY)),
        |(lo, hi), p| (Point::new(lo.x.min(p.x), lo.y.min(p.y)), Point::new(hi.x.max(p.x), hi.y.max(p.y))),
    )
}

pub(crate) fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let e = b - a;
    let l2 = e.dot(e);
    if l2 == 0.0 {
        return p.dist(a);
    }
    let s = ((p - a).dot(e) / l2).clamp(0.0, 1.0);
    p.dist(a + e * s)
}

/// Andrew's monotone chain; returns the strict convex hull counterclockwise.
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Point> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Point>> =
            if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for &p in iter {
            while hull.len() >= start + 2 {
                let a = hull[hull.len() - 2];
                let b = hull[hull.len() - 1];
                if (b - a).cross(p - a) <= 0.0 {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

/// Named domain generators.
pub mod presets {
    use super::*;

    /// Regular `n`-gon inscribed in the unit circle, with a vertex at `(1, 0)`.
    pub fn disc(n: usize) -> Result<ConvexDomain> {
        if n < 3 {
            return Err(Error::InvalidArgument(format!("disc needs n >= 3, got {n}")));
        }
        ConvexDomain::new(
            (0..n)
                .map(|k| {
                    let (s, c) = (2.0 * PI * k as f64 / n as f64).sin_cos();
                    Point::new(c, s)
                })
                .collect(),
        )
    }

    pub fn square() -> ConvexDomain {
        ConvexDomain::from_coords(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).expect("square")
    }

    pub fn diamond() -> ConvexDomain {
        ConvexDomain::from_coords(&[[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]]).expect("diamond")
    }

    pub fn triangle(ax: f64, ay: f64, bx: f64, by: f64, cx: f64, cy: f64) -> Result<ConvexDomain> {
        ConvexDomain::from_coords(&[[ax, ay], [bx, by], [cx, cy]])
    }

    pub fn rectangle(w: f64, h: f64) -> Result<ConvexDomain> {
        ConvexDomain::from_coords(&[[0.0, 0.0], [w, 0.0], [w, h], [0.0, h]])
    }

    /// Unit-height parallelogram with a horizontal base of length `base` and
    /// lateral sides of slope `slope`.
    pub fn parallelogram(base: f64, slope: f64) -> Result<ConvexDomain> {
        if slope == 0.0 || !slope.is_finite() {
            return Err(Error::InvalidArgument("parallelogram slope must be finite and nonzero".into()));
        }
        let run = 1.0 / slope;
        ConvexDomain::from_coords(&[[0.0, 0.0], [base, 0.0], [base + run, 1.0], [run, 1.0]])
    }

    /// Resolves a preset by name; `n` is used by `disc`.
    pub fn by_name(name: &str, n: usize) -> Result<ConvexDomain> {
        match name {
            "disc" => disc(n),
            "square" => Ok(square()),
            "diamond" => Ok(diamond()),
            "triangle" => triangle(0.0, 0.0, 2.0, 0.0, 1.0, 1.0),
            "parallelogram" => parallelogram(1.0, 1.0),
            _ => Err(Error::InvalidArgument(format!("unknown preset {name:?}"))),
        }
    }
}
