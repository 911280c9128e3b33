//! L_p and sup norms of directional derivatives of piecewise-linear concave
//! functions, plus the scanline quadrature of `∫ 2 m_h(t) dt` used as an
//! independent check of the L₁ norm.

use crate::concave::{ConcaveFunction, Mode};
use crate::error::{Error, Result};
use crate::geometry::Direction;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    FacetExact,
    Scanline,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    #[serde(with = "crate::ext")]
    pub p: f64,
    pub h: Direction,
    #[serde(with = "crate::ext")]
    pub value: f64,
    pub method: Method,
    /// Mass of the singular part of `∂u/∂h` on `∂Ω` (distributional L₁ only).
    pub jump_part: f64,
}

impl NormReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

fn trace_tolerance(u: &ConcaveFunction) -> f64 {
    1e-12 * u.max_value().0.abs().max(1.0)
}

/// `∫_{∂Ω} |trace| |h·n| ds`, exact for traces linear on each segment.
pub fn jump_mass(u: &ConcaveFunction, h: Direction) -> f64 {
    u.trace()
        .iter()
        .map(|s| {
            let len = s.a.dist(s.b);
            let (a, b) = (s.va, s.vb);
            let integral = if a * b >= 0.0 {
                len * (a.abs() + b.abs()) / 2.0
            } else {
                len * (a * a + b * b) / (2.0 * (a.abs() + b.abs()))
            };
            integral * h.dot(&s.normal).abs()
        })
        .sum()
}

/// `‖∂u/∂h‖_p` summed facet by facet. In distributional mode with `p = 1`
/// the boundary jump mass is added and reported separately.
pub fn lp_directional_norm(u: &ConcaveFunction, p: f64, h: Direction) -> Result<NormReport> {
    if p.is_infinite() {
        return sup_directional_norm(u, h);
    }
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidArgument(format!("order p = {p} must be at least 1")));
    }
    let has_trace = u.mode() == Mode::Distributional && u.trace_max() > trace_tolerance(u);
    if has_trace && p > 1.0 {
        return Err(Error::NormUndefined(format!(
            "derivative has a jump part on the boundary; its L_{p} norm is infinite"
        )));
    }
    let sum: f64 =
        u.facets().iter().enumerate().map(|(i, f)| f.plane.derivative(h).abs().powf(p) * u.facet_area(i)).sum();
    let ac = if p == 1.0 { sum } else { sum.powf(1.0 / p) };
    let jump_part = if has_trace { jump_mass(u, h) } else { 0.0 };
    Ok(NormReport { p, h, value: ac + jump_part, method: Method::FacetExact, jump_part })
}

/// Largest facet value of `|∇u·h|`.
pub fn sup_directional_norm(u: &ConcaveFunction, h: Direction) -> Result<NormReport> {
    if u.mode() == Mode::Distributional && u.trace_max() > trace_tolerance(u) {
        return Err(Error::NormUndefined("derivative has a jump part on the boundary; it is unbounded".into()));
    }
    let value = u.facets().iter().map(|f| f.plane.derivative(h).abs()).fold(0.0, f64::max);
    debug_assert!(sup_attained_near_boundary(u, h));
    Ok(NormReport { p: f64::INFINITY, h, value, method: Method::FacetExact, jump_part: 0.0 })
}

/// Whether the sup of `|∇u·h|` is attained on a facet touching `∂Ω`.
pub fn sup_attained_near_boundary(u: &ConcaveFunction, h: Direction) -> bool {
    let all = u.facets().iter().map(|f| f.plane.derivative(h).abs()).fold(0.0, f64::max);
    let edge = (0..u.facets().len())
        .filter(|&i| u.is_boundary_adjacent(i))
        .map(|i| u.facets()[i].plane.derivative(h).abs())
        .fold(0.0, f64::max);
    edge >= all * (1.0 - 1e-12)
}

/// Trapezoid quadrature of `2 m_h(t)` over `n_lines` uniformly spaced chords
/// parallel to `h`, extreme chords included. For either mode this is the full
/// total variation of `u` (extended by zero) in direction `h`.
pub fn scanline_l1_norm(u: &ConcaveFunction, h: Direction, n_lines: usize) -> Result<NormReport> {
    if n_lines < 16 {
        return Err(Error::InvalidArgument(format!("n_lines = {n_lines}; at least 16 are required")));
    }
    let profile = u.max_profile(h, n_lines)?;
    let s = &profile.samples;
    let value: f64 = s.windows(2).map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1)).sum();
    Ok(NormReport { p: 1.0, h, value, method: Method::Scanline, jump_part: 0.0 })
}

/// `‖∂u/∂h1‖_p / ‖∂u/∂h2‖_p`, with `+inf` when only the denominator vanishes.
pub fn ratio(u: &ConcaveFunction, p: f64, h1: Direction, h2: Direction) -> Result<f64> {
    let a = lp_directional_norm(u, p, h1)?.value;
    let b = lp_directional_norm(u, p, h2)?.value;
    ratio_of(a, b)
}

pub(crate) fn ratio_of(a: f64, b: f64) -> Result<f64> {
    match (a > 0.0, b > 0.0) {
        (_, true) => Ok(a / b),
        (true, false) => Ok(f64::INFINITY),
        (false, false) => Err(Error::ZeroFunction),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::concave::{concave_envelope, family_u_omega, linear_extremal_triangle, tent_function};
    use crate::geometry::presets::*;
    use crate::geometry::Point;

    fn cone() -> ConcaveFunction {
        concave_envelope(&diamond(), &[(Point::new(0.0, 0.0), 1.0)]).unwrap()
    }

    fn disc_tent() -> ConcaveFunction {
        let d = disc(512).unwrap();
        tent_function(&d, d.vertex(384), d.vertex(128), 1.0).unwrap()
    }

    #[test]
    fn cone_norms() {
        let u = cone();
        let r = lp_directional_norm(&u, 1.0, Direction::X).unwrap();
        assert!((r.value - 2.0).abs() < 1e-14 && r.jump_part == 0.0);
        let s = sup_directional_norm(&u, Direction::X).unwrap();
        assert!((s.value - 1.0).abs() < 1e-14);
        let d = sup_directional_norm(&u, Direction::from_degrees(45.0)).unwrap();
        assert!((d.value - 2f64.sqrt()).abs() < 1e-14);
        let sc = scanline_l1_norm(&u, Direction::X, 4096).unwrap();
        assert!((sc.value - 2.0).abs() < 1e-6);
        assert!((ratio(&u, 1.0, Direction::X, Direction::Y).unwrap() - 1.0).abs() < 1e-14);
        // ‖u_x‖₂ = sqrt(area)
        let r2 = lp_directional_norm(&u, 2.0, Direction::X).unwrap();
        assert!((r2.value - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn disc_tent_norms() {
        let u = disc_tent();
        let d = u.domain().clone();
        let x = lp_directional_norm(&u, 1.0, Direction::X).unwrap();
        // absolutely continuous part is the area, slope one everywhere
        assert!((x.value - x.jump_part - d.area()).abs() < 1e-12);
        assert!((x.value - 4.0).abs() < 1e-3, "{}", x.value);
        let y = lp_directional_norm(&u, 1.0, Direction::Y).unwrap();
        assert!((y.value - y.jump_part).abs() < 1e-12);
        assert!((y.value - 2.0).abs() < 1e-3, "{}", y.value);
        for h in [Direction::X, Direction::Y] {
            let exact = lp_directional_norm(&u, 1.0, h).unwrap().value;
            let sc = scanline_l1_norm(&u, h, 4096).unwrap().value;
            assert!((exact - sc).abs() < 1e-3);
        }
        assert!((ratio(&u, 1.0, Direction::X, Direction::Y).unwrap() - 2.0).abs() < 1e-3);
        assert!(matches!(lp_directional_norm(&u, 2.0, Direction::X), Err(Error::NormUndefined(_))));
        assert!(sup_directional_norm(&u, Direction::X).is_err());
    }

    #[test]
    fn u_omega_sup_norm() {
        let u = family_u_omega(&square(), Point::new(0.0, 0.5), 0.01).unwrap();
        let s = sup_directional_norm(&u, Direction::X).unwrap();
        assert!((s.value - 100.0).abs() < 1e-9);
        assert!(sup_attained_near_boundary(&u, Direction::X));
    }

    #[test]
    fn triangle_extremal_ratio() {
        let t = triangle(0.0, 0.0, 2.0, 0.0, 1.0, 1.0).unwrap();
        let u = linear_extremal_triangle(&t).unwrap();
        let r = ratio(&u, 1.0, Direction::Y, Direction::X).unwrap();
        assert!((r - 4.0).abs() < 1e-12, "{r}");
        let sy = scanline_l1_norm(&u, Direction::Y, 4096).unwrap().value;
        let sx = scanline_l1_norm(&u, Direction::X, 4096).unwrap().value;
        assert!((sy / sx - 4.0).abs() < 1e-3);
    }

    #[test]
    fn zero_and_infinite_ratios() {
        assert_eq!(ratio_of(1.0, 0.0).unwrap(), f64::INFINITY);
        assert!(matches!(ratio_of(0.0, 0.0), Err(Error::ZeroFunction)));
        assert!(scanline_l1_norm(&cone(), Direction::X, 8).is_err());
    }

    #[test]
    fn report_json() {
        let r = sup_directional_norm(&cone(), Direction::X).unwrap();
        let j = r.to_json();
        assert!(j.contains("\"p\":\"inf\"") && j.contains("facet-exact"), "{j}");
    }
}
