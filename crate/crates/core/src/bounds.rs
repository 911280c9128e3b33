//! Upper bounds for the ratio `‖∂u/∂h1‖_p / ‖∂u/∂h2‖_p` over concave `u`
//! vanishing on the boundary, with their equality certificates.
//!
//! Conventions: `w_x` and `w_y` are the side lengths of the circumscribed
//! axis-aligned rectangle, `width(h)` is the distance between the two support
//! lines parallel to `h`. Every horizontal line carries `∫|u_x| = 2 m(y)` and
//! `M <= ∫ 2m <= 2M` per unit of height, so `‖u_x‖₁` lies in `[w_y M, 2 w_y M]`
//! and `K₁ <= 2 w_y / w_x`.

use crate::error::{Error, Result};
use crate::geometry::{ConvexDomain, Direction, Point};
use crate::poincare::poincare_constant;
use serde::{Deserialize, Serialize};

/// A bound with a boolean equality certificate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certified {
    #[serde(with = "crate::ext")]
    pub bound: f64,
    pub certificate: bool,
}

fn intervals_overlap(a: (f64, f64), b: (f64, f64), tol: f64) -> bool {
    a.0.max(b.0) <= a.1.min(b.1) + tol
}

fn projected(seg: (Point, Point), n: Point) -> (f64, f64) {
    let (s, t) = (n.dot(seg.0), n.dot(seg.1));
    (s.min(t), s.max(t))
}

/// `K₁ <= 2 w_y / w_x`. Equality needs a vertical segment in `Ω` joining the
/// top and bottom sides of the circumscribed rectangle.
pub fn k1_upper_bound(dom: &ConvexDomain) -> Certified {
    let (w_x, w_y) = dom.circumscribed_rectangle();
    let top = dom.support_contact(Direction::Y);
    let bottom = dom.support_contact(Direction::Y.reversed());
    let e1 = Point::new(1.0, 0.0);
    Certified {
        bound: 2.0 * w_y / w_x,
        certificate: intervals_overlap(projected(top, e1), projected(bottom, e1), dom.tol()),
    }
}

/// `‖u_{h1}‖₁ / ‖u_{h2}‖₁ <= 2 width(h1) / width(h2)`. The certificate asks
/// for a line parallel to `h2` meeting both contact sets of the support lines
/// parallel to `h1`.
pub fn directional_k1_upper(dom: &ConvexDomain, h1: Direction, h2: Direction) -> Result<Certified> {
    if h1.cross(&h2).abs() <= 1e-12 {
        return Err(Error::InvalidDirection("h1 and h2 are collinear".into()));
    }
    let n1 = h1.normal();
    let m2 = h2.normal().as_point();
    let a = dom.support_contact(n1);
    let b = dom.support_contact(n1.reversed());
    Ok(Certified {
        bound: 2.0 * dom.width(h1) / dom.width(h2),
        certificate: intervals_overlap(projected(a, m2), projected(b, m2), dom.tol()),
    })
}

/// `2 w_max / w_min` with the directions realizing the widths.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformBound {
    pub bound: f64,
    pub certificate: bool,
    pub w_max: f64,
    pub w_min: f64,
    /// Lines parallel to `h_max` are `w_max` apart; likewise `h_min`.
    pub h_max: Direction,
    pub h_min: Direction,
}

/// Relative tolerance used by [`uniform_k1_upper`].
pub const UNIFORM_TOL: f64 = 1e-9;

pub fn uniform_k1_upper(dom: &ConvexDomain) -> UniformBound {
    uniform_k1_upper_with_tol(dom, UNIFORM_TOL)
}

/// The uniform bound over all direction pairs. The certificate holds when a
/// direction of maximal width is orthogonal to one of minimal width, with
/// widths compared to relative tolerance `tol`.
pub fn uniform_k1_upper_with_tol(dom: &ConvexDomain, tol: f64) -> UniformBound {
    let ext = dom.width_extremes();
    let near_max = |h: Direction| dom.width(h) >= ext.w_max * (1.0 - tol);
    let near_min = |h: Direction| dom.width(h) <= ext.w_min * (1.0 + tol);
    let mut found: Option<(Direction, Direction)> = None;
    // minimal widths are attained flush to an edge
    for i in 0..dom.len() {
        let (a, b) = dom.edge(i);
        let h = Direction::new(b.x - a.x, b.y - a.y).expect("edge");
        if near_min(h) && near_max(h.normal()) {
            found = Some((h.normal(), h));
            break;
        }
    }
    // maximal widths are attained across antipodal pairs
    if found.is_none() {
        for (a, b) in dom.antipodal_pairs() {
            let d = b - a;
            let h = Direction::new(-d.y, d.x).expect("pair");
            if near_max(h) && near_min(h.normal()) {
                found = Some((h, h.normal()));
                break;
            }
        }
    }
    let (h_max, h_min) = found.unwrap_or((ext.h_max, ext.h_min));
    UniformBound {
        bound: 2.0 * ext.w_max / ext.w_min,
        certificate: found.is_some(),
        w_max: ext.w_max,
        w_min: ext.w_min,
        h_max,
        h_min,
    }
}

/// The shear-and-scale sending the leftmost point `A` to `(0,0)` and the
/// rightmost point `B` to `(2,0)`:
/// `x = A_x + (w_x/2) x̃`, `y = A_y + (c/2) x̃ + ỹ` with `c = B_y - A_y`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AffineNormalization {
    pub w_x: f64,
    pub c: f64,
    pub forward: [[f64; 2]; 2],
    pub forward_shift: Point,
    pub inverse: [[f64; 2]; 2],
    pub inverse_shift: Point,
    pub image: ConvexDomain,
}

impl AffineNormalization {
    pub fn apply(&self, p: Point) -> Point {
        crate::geometry::apply_affine(self.forward, self.forward_shift, p)
    }

    pub fn invert(&self, q: Point) -> Point {
        crate::geometry::apply_affine(self.inverse, self.inverse_shift, q)
    }

    /// `d(x, y) / d(x̃, ỹ)`.
    pub fn jacobian(&self) -> f64 {
        self.w_x / 2.0
    }

    /// Upper bound for the original ratio from the normalized one, using
    /// `u_x = (2/w_x) ũ_x̃ - (c/w_x) ũ_ỹ` and `u_y = ũ_ỹ`.
    pub fn transfer(&self, normalized_ratio: f64) -> f64 {
        2.0 / self.w_x * normalized_ratio + self.c.abs() / self.w_x
    }
}

pub fn affine_normalize(dom: &ConvexDomain) -> Result<AffineNormalization> {
    let e = dom.extreme_x_points();
    let w_x = e.b.x - e.a.x;
    let c = e.c;
    let forward = [[2.0 / w_x, 0.0], [-c / w_x, 1.0]];
    let shift = |m: [[f64; 2]; 2], p: Point| -Point::new(m[0][0] * p.x + m[0][1] * p.y, m[1][0] * p.x + m[1][1] * p.y);
    let forward_shift = shift(forward, e.a);
    let inverse = [[w_x / 2.0, 0.0], [c / 2.0, 1.0]];
    let image = dom.map_affine(forward, forward_shift)?;
    Ok(AffineNormalization { w_x, c, forward, forward_shift, inverse, inverse_shift: e.a, image })
}

/// `m` of the normalized domain: largest |slope| of the four boundary edges
/// at its extreme points `(0,0)` and `(2,0)`.
pub fn normalized_slope_bound(dom: &ConvexDomain) -> Result<f64> {
    Ok(affine_normalize(dom)?.image.max_boundary_slope())
}

/// `M_p = m (2 C_p^{1/p} + 1)`.
pub fn m_p(m: f64, c_p: f64, p: f64) -> f64 {
    m * (2.0 * c_p.powf(1.0 / p) + 1.0)
}

fn both_angular(dom: &ConvexDomain) -> bool {
    let v = dom.vertical_support_classification();
    v.left_angular && v.right_angular
}

/// `K_p` bound for `p` in `(1, inf)`: `+inf` unless both vertical support
/// lines are angular, otherwise `(2/w_x) M_p(Ω̃) + |c|/w_x`.
pub fn kp_upper_bound(dom: &ConvexDomain, p: f64) -> Result<f64> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!("p = {p}: expected p in (1, inf)")));
    }
    if !both_angular(dom) {
        return Ok(f64::INFINITY);
    }
    let norm = affine_normalize(dom)?;
    let m = norm.image.max_boundary_slope();
    Ok(norm.transfer(m_p(m, poincare_constant(p)?, p)))
}

/// `K_∞ = m` when both vertical support lines are angular, else `+inf`.
pub fn k_infinity(dom: &ConvexDomain) -> f64 {
    if both_angular(dom) {
        dom.max_boundary_slope()
    } else {
        f64::INFINITY
    }
}

/// `K_p` bound for `p` in `{1} ∪ (1, inf) ∪ {inf}` in the coordinate directions.
pub fn kp_axis_bound(dom: &ConvexDomain, p: f64) -> Result<f64> {
    if p == 1.0 {
        Ok(k1_upper_bound(dom).bound)
    } else if p.is_infinite() {
        Ok(k_infinity(dom))
    } else {
        kp_upper_bound(dom, p)
    }
}

/// Bound for an arbitrary direction pair. For `p = 1` the directional width
/// bound applies directly; otherwise the domain is pulled back by
/// `L = [h1 h2]`, which turns `∂/∂h1, ∂/∂h2` into `∂/∂x, ∂/∂y` and scales
/// both norms by the same Jacobian factor.
pub fn ratio_upper_bound(dom: &ConvexDomain, p: f64, h1: Direction, h2: Direction) -> Result<f64> {
    if p == 1.0 {
        return Ok(directional_k1_upper(dom, h1, h2)?.bound);
    }
    if h1 == Direction::X && h2 == Direction::Y {
        return kp_axis_bound(dom, p);
    }
    let det = h1.cross(&h2);
    if det.abs() <= 1e-12 {
        return Err(Error::InvalidDirection("h1 and h2 are collinear".into()));
    }
    let inv = [[h2.dy() / det, -h2.dx() / det], [-h1.dy() / det, h1.dx() / det]];
    kp_axis_bound(&dom.map_affine(inv, Point::default())?, p)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimaxBounds {
    /// Upper bound for `K_p(Ω)`.
    #[serde(with = "crate::ext")]
    pub k_upper: f64,
    /// Upper bound for `1/k_p(Ω)`, which is `K_p` of the axis-swapped domain.
    #[serde(with = "crate::ext")]
    pub k_lower_inverse: f64,
    #[serde(with = "crate::ext")]
    pub product: f64,
}

pub fn minimax_bounds(dom: &ConvexDomain, p: f64) -> Result<MinimaxBounds> {
    if p == 1.0 {
        let (w_x, w_y) = dom.circumscribed_rectangle();
        return Ok(MinimaxBounds {
            k_upper: 2.0 * w_y / w_x,
            k_lower_inverse: 2.0 * w_x / w_y,
            // (2 w_y / w_x)(2 w_x / w_y) with the widths cancelled
            product: 4.0 * (w_x * w_y) / (w_y * w_x),
        });
    }
    let k_upper = kp_axis_bound(dom, p)?;
    let k_lower_inverse = kp_axis_bound(&dom.swap_axes(), p)?;
    Ok(MinimaxBounds { k_upper, k_lower_inverse, product: k_upper * k_lower_inverse })
}

/// Exterior angle below which an extreme vertex is treated as a discretized
/// smooth point whose slope grows under refinement (5 degrees).
const SMOOTH_TURN: f64 = 0.087_266_462_599_716_48;

/// Everything the bounds module knows about a domain at one order `p`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub w_x: f64,
    pub w_y: f64,
    pub w_max: f64,
    pub w_min: f64,
    pub left_angular: bool,
    pub right_angular: bool,
    #[serde(with = "crate::ext")]
    pub m: f64,
    #[serde(with = "crate::ext")]
    pub m_normalized: f64,
    /// The extreme-point slope is that of a finely discretized smooth curve.
    pub m_refinement_dependent: bool,
    pub c: f64,
    #[serde(with = "crate::ext")]
    pub p: f64,
    #[serde(rename = "C_p")]
    pub c_p: Option<f64>,
    #[serde(rename = "M_p_normalized", with = "crate::ext::option")]
    pub m_p_normalized: Option<f64>,
    #[serde(rename = "K_p_upper", with = "crate::ext")]
    pub k_p_upper: f64,
    #[serde(rename = "K_inf", with = "crate::ext")]
    pub k_inf: f64,
    pub k1_upper: f64,
}

impl BoundReport {
    pub const CSV_HEADER: [&'static str; 16] = [
        "w_x",
        "w_y",
        "w_max",
        "w_min",
        "left_angular",
        "right_angular",
        "m",
        "m_normalized",
        "m_refinement_dependent",
        "c",
        "p",
        "C_p",
        "M_p_normalized",
        "K_p_upper",
        "K_inf",
        "k1_upper",
    ];

    pub fn csv_row(&self) -> Vec<String> {
        use crate::ext::format as f;
        let opt = |v: Option<f64>| v.map(f).unwrap_or_default();
        vec![
            f(self.w_x),
            f(self.w_y),
            f(self.w_max),
            f(self.w_min),
            self.left_angular.to_string(),
            self.right_angular.to_string(),
            f(self.m),
            f(self.m_normalized),
            self.m_refinement_dependent.to_string(),
            f(self.c),
            f(self.p),
            opt(self.c_p),
            opt(self.m_p_normalized),
            f(self.k_p_upper),
            f(self.k_inf),
            f(self.k1_upper),
        ]
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

fn extreme_turn_is_small(dom: &ConvexDomain) -> bool {
    let e = dom.extreme_x_points();
    [e.a, e.b].iter().any(|&v| {
        let Some(i) = dom.vertices().iter().position(|&w| w == v) else { return false };
        let a = dom.vertex(i + dom.len() - 1);
        let b = dom.vertex(i + 1);
        let turn = (v - a).cross(b - v).atan2((v - a).dot(b - v));
        turn < SMOOTH_TURN
    })
}

pub fn bound_report(dom: &ConvexDomain, p: f64) -> Result<BoundReport> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidArgument(format!("p = {p} must be at least 1")));
    }
    let (w_x, w_y) = dom.circumscribed_rectangle();
    let widths = dom.width_extremes();
    let vs = dom.vertical_support_classification();
    let norm = affine_normalize(dom)?;
    let m_normalized = norm.image.max_boundary_slope();
    let interior = p > 1.0 && p.is_finite();
    let c_p = if interior { Some(poincare_constant(p)?) } else { None };
    let m_p_normalized = c_p.map(|c| m_p(m_normalized, c, p));
    let angular = vs.left_angular && vs.right_angular;
    Ok(BoundReport {
        w_x,
        w_y,
        w_max: widths.w_max,
        w_min: widths.w_min,
        left_angular: vs.left_angular,
        right_angular: vs.right_angular,
        m: vs.slopes.max_abs(),
        m_normalized,
        m_refinement_dependent: angular && extreme_turn_is_small(dom),
        c: norm.c,
        p,
        c_p,
        m_p_normalized,
        k_p_upper: kp_axis_bound(dom, p)?,
        k_inf: k_infinity(dom),
        k1_upper: k1_upper_bound(dom).bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::presets::*;
    use std::f64::consts::PI;

    #[test]
    fn k1_examples() {
        let s = k1_upper_bound(&square());
        assert_eq!(s, Certified { bound: 2.0, certificate: true });
        let d = k1_upper_bound(&disc(512).unwrap());
        assert!((d.bound - 2.0).abs() < 1e-12 && d.certificate);
        let t = k1_upper_bound(&triangle(0.0, 0.0, 4.0, 0.0, 3.0, 3.0).unwrap());
        assert!((t.bound - 1.5).abs() < 1e-15 && t.certificate);
        // a tall thin rectangle has K₁ = 20 through the tent on x = 1/2
        let r = k1_upper_bound(&rectangle(1.0, 10.0).unwrap());
        assert!((r.bound - 20.0).abs() < 1e-12);
        let p = k1_upper_bound(&parallelogram(1.0, 0.5).unwrap());
        assert!(!p.certificate);
        let p = k1_upper_bound(&parallelogram(1.0, 1.0).unwrap());
        assert!(p.certificate);
    }

    #[test]
    fn directional_examples() {
        let s = directional_k1_upper(&square(), Direction::X, Direction::Y).unwrap();
        assert_eq!(s, Certified { bound: 2.0, certificate: true });
        let d =
            directional_k1_upper(&diamond(), Direction::from_degrees(45.0), Direction::from_degrees(-45.0)).unwrap();
        assert!((d.bound - 2.0).abs() < 1e-14 && d.certificate);
        assert!(directional_k1_upper(&square(), Direction::X, Direction::X.reversed()).is_err());
        // thin triangle: h1 along the longest side, h2 perpendicular
        let t = triangle(0.0, 0.0, 2.0, 0.0, 1.0, 1.0).unwrap();
        let c = directional_k1_upper(&t, Direction::Y, Direction::X).unwrap();
        assert!((c.bound - 4.0).abs() < 1e-14 && c.certificate);
    }

    #[test]
    fn uniform_examples() {
        let s = uniform_k1_upper(&square());
        assert!((s.bound - 2.0 * 2f64.sqrt()).abs() < 1e-14);
        assert!(!s.certificate);
        let d = disc(512).unwrap();
        let strict = uniform_k1_upper(&d);
        assert!((strict.bound - 2.0 / (PI / 512.0).cos()).abs() < 1e-12);
        assert!(!strict.certificate);
        let loose = uniform_k1_upper_with_tol(&d, 1e-4);
        assert!(loose.certificate);
        assert!(loose.h_max.dot(&loose.h_min).abs() < 1e-12);
        let r = uniform_k1_upper(&rectangle(2.0, 1.0).unwrap());
        assert!((r.w_max - 5f64.sqrt()).abs() < 1e-14 && (r.w_min - 1.0).abs() < 1e-14);
        // an isosceles right triangle: the hypotenuse is the diameter and
        // the minimal width is the altitude onto it
        let t = uniform_k1_upper(&triangle(0.0, 0.0, 2.0, 0.0, 1.0, 1.0).unwrap());
        assert!(t.certificate && (t.bound - 4.0).abs() < 1e-14);
    }

    #[test]
    fn normalization_examples() {
        let dom = ConvexDomain::from_coords(&[[0.0, 0.0], [2.0, -1.0], [4.0, 2.0], [1.0, 2.0]]).unwrap();
        let n = affine_normalize(&dom).unwrap();
        assert_eq!((n.w_x, n.c), (4.0, 2.0));
        assert!(n.apply(Point::new(0.0, 0.0)).dist(Point::new(0.0, 0.0)) < 1e-15);
        assert!(n.apply(Point::new(4.0, 2.0)).dist(Point::new(2.0, 0.0)) < 1e-15);
        let e = n.image.extreme_x_points();
        assert!(e.a.dist(Point::default()) < 1e-9 && e.b.dist(Point::new(2.0, 0.0)) < 1e-9);
        assert!((n.image.area() * n.jacobian() - dom.area()).abs() < 1e-12);
        for v in dom.vertices() {
            assert!(n.invert(n.apply(*v)).dist(*v) < 1e-14);
        }

        let n = affine_normalize(&diamond()).unwrap();
        assert_eq!(n.c, 0.0);
        assert!(n.apply(Point::new(-1.0, 0.0)).dist(Point::default()) < 1e-15);
    }

    #[test]
    fn kp_examples() {
        assert_eq!(kp_upper_bound(&square(), 2.0).unwrap(), f64::INFINITY);
        let d = kp_upper_bound(&diamond(), 2.0).unwrap();
        assert!((d - (1.0 + 2.0 / PI)).abs() < 2e-3, "{d}");
        let g = disc(512).unwrap();
        let b = kp_upper_bound(&g, 2.0).unwrap();
        let m = 1.0 / (PI / 512.0).tan();
        assert!(b.is_finite() && b > m);
        assert!(kp_upper_bound(&g, 1.0).is_err());
    }

    #[test]
    fn k_infinity_examples() {
        assert_eq!(k_infinity(&diamond()), 1.0);
        assert_eq!(k_infinity(&square()), f64::INFINITY);
        assert!((k_infinity(&triangle(0.0, 0.0, 2.0, 0.0, 1.0, 1.0).unwrap()) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn minimax_examples() {
        for dom in [square(), diamond(), disc(37).unwrap(), triangle(0.0, 0.0, 4.0, 0.0, 3.0, 3.0).unwrap()] {
            assert_eq!(minimax_bounds(&dom, 1.0).unwrap().product, 4.0);
        }
        assert_eq!(minimax_bounds(&diamond(), f64::INFINITY).unwrap().product, 1.0);
        assert_eq!(minimax_bounds(&square(), f64::INFINITY).unwrap().product, f64::INFINITY);
        let p2 = minimax_bounds(&diamond(), 2.0).unwrap();
        assert!((p2.k_upper - p2.k_lower_inverse).abs() < 1e-12);
    }

    #[test]
    fn general_direction_bounds() {
        let d = diamond();
        let axis = ratio_upper_bound(&d, f64::INFINITY, Direction::X, Direction::Y).unwrap();
        assert_eq!(axis, 1.0);
        // the diamond rotated by 45 degrees is a square: its diagonal pair is non-angular
        let diag = ratio_upper_bound(&d, f64::INFINITY, Direction::from_degrees(45.0), Direction::from_degrees(135.0))
            .unwrap();
        assert_eq!(diag, f64::INFINITY);
        let swapped = ratio_upper_bound(&square(), 1.0, Direction::Y, Direction::X).unwrap();
        assert_eq!(swapped, 2.0);
    }

    #[test]
    fn report_examples() {
        let r = bound_report(&diamond(), 2.0).unwrap();
        assert_eq!((r.m, r.k_inf, r.k1_upper), (1.0, 1.0, 2.0));
        assert!(r.left_angular && r.right_angular && !r.m_refinement_dependent);
        assert!((r.c_p.unwrap() - 1.0 / (PI * PI)).abs() < 1e-4);
        let j = r.to_json();
        let back: BoundReport = serde_json::from_str(&j).unwrap();
        assert_eq!(back, r);
        assert_eq!(r.csv_row().len(), BoundReport::CSV_HEADER.len());

        let s = bound_report(&square(), 1.0).unwrap();
        assert!(s.to_json().contains("\"K_inf\":\"inf\""));
        assert_eq!(s.c_p, None);
        let g = bound_report(&disc(512).unwrap(), 2.0).unwrap();
        assert!(g.m_refinement_dependent);
    }
}
