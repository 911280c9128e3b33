//! Lower bounds for `K_p` by evaluating the ratio over a fixed schedule of
//! candidate functions: tents constant on a chord (p = 1), boundary-anchored
//! single-point envelopes `u_ω`, cones with apexes on a grid or at random, and
//! random multi-point envelopes.
//!
//! Candidates are independent; they are evaluated in parallel and reduced to
//! the maximum ratio, ties going to the lowest candidate index, so the result
//! depends only on `(domain, p, h1, h2, budget, seed)`.

use crate::bounds::ratio_upper_bound;
use crate::concave::{u_omega_point, FunctionSpec};
use crate::error::{Error, Result};
use crate::geometry::{ConvexDomain, Direction, Point, EPS_GEOM};
use crate::norms::{lp_directional_norm, ratio};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Default `ω` schedule for the boundary-anchored family.
pub const OMEGA_SCHEDULE: [f64; 5] = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3];

/// Default `ε` schedule for the near-vertical-arc family.
pub const EPS_SCHEDULE: [f64; 5] = [1e-1, 5e-2, 2e-2, 1e-2, 5e-3];

/// Default angle `φ` for the near-vertical-arc family.
pub const DEFAULT_PHI: f64 = std::f64::consts::FRAC_PI_4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioEstimate {
    #[serde(with = "crate::ext")]
    pub p: f64,
    pub h1: Direction,
    pub h2: Direction,
    #[serde(with = "crate::ext")]
    pub best_ratio: f64,
    pub witness: FunctionSpec,
    #[serde(with = "crate::ext")]
    pub upper_bound: f64,
    #[serde(with = "crate::ext")]
    pub gap: f64,
    pub evaluations: usize,
    pub seed: u64,
}

impl RatioEstimate {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("estimate serializes")
    }
}

/// One evaluated candidate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub index: usize,
    pub family: String,
    /// `None` when the candidate could not be built or its norm is undefined.
    #[serde(with = "crate::ext::option")]
    pub ratio: Option<f64>,
    pub witness: FunctionSpec,
}

#[derive(Clone, Debug)]
struct Candidate {
    family: &'static str,
    spec: FunctionSpec,
}

/// Coordinates in which `h1, h2` become the axes: `p = L p'` with
/// `L = [h1 h2]`.
struct Frame {
    l: [[f64; 2]; 2],
    identity: bool,
    image: ConvexDomain,
}

impl Frame {
    fn new(dom: &ConvexDomain, h1: Direction, h2: Direction) -> Result<Self> {
        let det = h1.cross(&h2);
        if det.abs() <= 1e-12 {
            return Err(Error::InvalidDirection("h1 and h2 are collinear".into()));
        }
        let identity = h1 == Direction::X && h2 == Direction::Y;
        let l = [[h1.dx(), h2.dx()], [h1.dy(), h2.dy()]];
        let inv = [[h2.dy() / det, -h2.dx() / det], [-h1.dy() / det, h1.dx() / det]];
        let image = if identity { dom.clone() } else { dom.map_affine(inv, Point::default())? };
        Ok(Self { l, identity, image })
    }

    fn to_original(&self, q: Point) -> Point {
        crate::geometry::apply_affine(self.l, Point::default(), q)
    }
}

/// Midpoint of the boundary edge (in the frame where `h1, h2` are the axes)
/// with the largest `|n_x| / |n_y|`; ties go to the lowest edge index.
fn steepest_anchor(dom: &ConvexDomain) -> Point {
    let steepness = |i: usize| {
        let n = dom.edge_normal(i);
        if n.dy() == 0.0 {
            f64::INFINITY
        } else {
            (n.dx() / n.dy()).abs()
        }
    };
    let mut best = 0;
    for i in 1..dom.len() {
        if steepness(i) > steepness(best) {
            best = i;
        }
    }
    let (a, b) = dom.edge(best);
    a.lerp(b, 0.5)
}

fn u_omega_candidates(dom: &ConvexDomain, frame: &Frame, omegas: &[f64]) -> Vec<Candidate> {
    let anchor = steepest_anchor(&frame.image);
    omegas
        .iter()
        .filter_map(|&omega| {
            let q = u_omega_point(&frame.image, anchor, omega).ok()?;
            let spec = if frame.identity {
                FunctionSpec::UOmega { anchor: anchor.into(), omega }
            } else {
                let q = frame.to_original(q);
                if dom.inner_distance(q) <= dom.tol() {
                    return None;
                }
                FunctionSpec::Envelope { constraints: vec![[q.x, q.y, 1.0]] }
            };
            Some(Candidate { family: "u-omega", spec })
        })
        .collect()
}

fn tent_on_chord(dom: &ConvexDomain, h: Direction, t: f64) -> Option<Candidate> {
    let (lo, hi) = dom.projection(h.normal().as_point());
    if t - lo <= dom.tol() || hi - t <= dom.tol() {
        return None;
    }
    let c = dom.chord(h, t)?;
    if c.a.dist(c.b) <= dom.tol() {
        return None;
    }
    Some(Candidate { family: "tent", spec: FunctionSpec::Tent { segment: [c.a.into(), c.b.into()], height: 1.0 } })
}

/// Tents whose ridge is parallel (or nearly parallel) to `h2`: first the
/// chords through the contact sets of the two support lines parallel to `h1`,
/// then chords between boundary vertices within 15 degrees of `h2`, then a
/// uniform family of chords parallel to `h2`.
fn tent_candidates(dom: &ConvexDomain, h1: Direction, h2: Direction) -> Vec<Candidate> {
    let mut out = Vec::new();
    let m2 = h2.normal().as_point();
    let n1 = h1.normal();
    for normal in [n1, n1.reversed()] {
        let (a, b) = dom.support_contact(normal);
        out.extend(tent_on_chord(dom, h2, m2.dot(a.lerp(b, 0.5))));
    }
    let n = dom.len();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let d = dom.vertex(j) - dom.vertex(i);
            let Ok(dir) = Direction::new(d.x, d.y) else { continue };
            let dev = dir.cross(&h2).abs().asin();
            if dev < 15f64.to_radians() && j != i + 1 && !(i == 0 && j == n - 1) {
                pairs.push((dev, i, j));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    for (_, i, j) in pairs.into_iter().take(32) {
        out.push(Candidate {
            family: "tent",
            spec: FunctionSpec::Tent { segment: [dom.vertex(i).into(), dom.vertex(j).into()], height: 1.0 },
        });
    }
    let (lo, hi) = dom.projection(m2);
    for k in 1..16 {
        out.extend(tent_on_chord(dom, h2, lo + (hi - lo) * k as f64 / 16.0));
    }
    out
}

fn grid_cones(inner: &ConvexDomain) -> Vec<Candidate> {
    let (lo, hi) = crate::geometry::bbox(inner.vertices());
    let k = 6;
    let mut out = Vec::new();
    for i in 0..k {
        for j in 0..k {
            let p = Point::new(
                lo.x + (hi.x - lo.x) * (i as f64 + 0.5) / k as f64,
                lo.y + (hi.y - lo.y) * (j as f64 + 0.5) / k as f64,
            );
            if inner.inner_distance(p) > 0.0 {
                out.push(Candidate {
                    family: "cone-grid",
                    spec: FunctionSpec::Envelope { constraints: vec![[p.x, p.y, 1.0]] },
                });
            }
        }
    }
    out
}

fn random_point(inner: &ConvexDomain, rng: &mut ChaCha8Rng) -> Point {
    let (lo, hi) = crate::geometry::bbox(inner.vertices());
    loop {
        let p = Point::new(rng.random_range(lo.x..=hi.x), rng.random_range(lo.y..=hi.y));
        if inner.inner_distance(p) >= 0.0 {
            return p;
        }
    }
}

/// Candidate `index` of the random tail: even indices are cones, odd ones
/// envelopes of two to five points. Each index has its own generator stream.
fn random_candidate(inner: &ConvexDomain, seed: u64, index: usize) -> Candidate {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    if index.is_multiple_of(2) {
        let p = random_point(inner, &mut rng);
        Candidate { family: "cone-random", spec: FunctionSpec::Envelope { constraints: vec![[p.x, p.y, 1.0]] } }
    } else {
        let k = rng.random_range(2..=5);
        let constraints = (0..k)
            .map(|_| {
                let p = random_point(inner, &mut rng);
                [p.x, p.y, rng.random_range(0.2..=1.0)]
            })
            .collect();
        Candidate { family: "envelope-random", spec: FunctionSpec::Envelope { constraints } }
    }
}

fn schedule(
    dom: &ConvexDomain,
    p: f64,
    h1: Direction,
    h2: Direction,
    budget: usize,
    seed: u64,
) -> Result<Vec<Candidate>> {
    let frame = Frame::new(dom, h1, h2)?;
    let mut out = Vec::new();
    if p == 1.0 {
        if dom.len() == 3 {
            out.push(Candidate { family: "triangle-linear", spec: FunctionSpec::TriangleLinear });
        }
        out.extend(tent_candidates(dom, h1, h2));
    }
    out.extend(u_omega_candidates(dom, &frame, &OMEGA_SCHEDULE));
    let diameter = dom.width_extremes().w_max;
    let inner = dom.shrink(10.0 * EPS_GEOM * diameter).ok_or_else(|| Error::InvalidDomain("domain too thin".into()))?;
    out.extend(grid_cones(&inner));
    out.truncate(budget);
    let mut k = 0;
    while out.len() < budget {
        out.push(random_candidate(&inner, seed, k));
        k += 1;
    }
    Ok(out)
}

fn evaluate(dom: &ConvexDomain, spec: &FunctionSpec, p: f64, h1: Direction, h2: Direction) -> Option<f64> {
    let u = spec.build(dom).ok()?;
    ratio(&u, p, h1, h2).ok().filter(|r| !r.is_nan())
}

fn extended_gap(upper: f64, best: f64) -> f64 {
    if upper.is_infinite() && best.is_infinite() {
        0.0
    } else {
        upper - best
    }
}

/// Best ratio over the candidate schedule, with every candidate's record.
pub fn estimate_kp_lower_traced(
    dom: &ConvexDomain,
    p: f64,
    h1: Direction,
    h2: Direction,
    budget: usize,
    seed: u64,
) -> Result<(RatioEstimate, Vec<CandidateRecord>)> {
    if budget < 1 {
        return Err(Error::InvalidArgument("budget must be at least 1".into()));
    }
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidArgument(format!("p = {p} must be at least 1")));
    }
    let candidates = schedule(dom, p, h1, h2, budget, seed)?;
    let records: Vec<CandidateRecord> = candidates
        .into_par_iter()
        .enumerate()
        .map(|(index, c)| CandidateRecord {
            index,
            family: c.family.to_string(),
            ratio: evaluate(dom, &c.spec, p, h1, h2),
            witness: c.spec,
        })
        .collect();
    let best = records
        .iter()
        .filter_map(|r| r.ratio.map(|v| (v, r.index)))
        .fold(None, |acc: Option<(f64, usize)>, (v, i)| match acc {
            Some((bv, _)) if bv >= v => acc,
            _ => Some((v, i)),
        })
        .ok_or_else(|| Error::NotApplicable("no candidate could be evaluated".into()))?;
    let upper_bound = ratio_upper_bound(dom, p, h1, h2)?;
    let estimate = RatioEstimate {
        p,
        h1,
        h2,
        best_ratio: best.0,
        witness: records[best.1].witness.clone(),
        upper_bound,
        gap: extended_gap(upper_bound, best.0),
        evaluations: records.len(),
        seed,
    };
    Ok((estimate, records))
}

pub fn estimate_kp_lower(
    dom: &ConvexDomain,
    p: f64,
    h1: Direction,
    h2: Direction,
    budget: usize,
    seed: u64,
) -> Result<RatioEstimate> {
    Ok(estimate_kp_lower_traced(dom, p, h1, h2, budget, seed)?.0)
}

/// Estimates of `K_p` and `k_p` in the coordinate directions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairEstimate {
    /// Lower bound for `K_p = sup ‖u_x‖/‖u_y‖`.
    #[serde(rename = "K_est", with = "crate::ext")]
    pub k_sup: f64,
    /// Upper bound for `k_p = inf ‖u_x‖/‖u_y‖`.
    #[serde(rename = "k_est", with = "crate::ext")]
    pub k_inf: f64,
    /// `K_est / k_est`, a lower bound for `K_p / k_p`.
    #[serde(with = "crate::ext")]
    pub product: f64,
    pub forward: RatioEstimate,
    pub swapped: RatioEstimate,
}

/// Splits the budget between `(x, y)` and `(y, x)`; `1/k_p` is the sup of the
/// swapped ratio.
pub fn estimate_kp_pair(dom: &ConvexDomain, p: f64, budget: usize, seed: u64) -> Result<PairEstimate> {
    if budget < 2 {
        return Err(Error::InvalidArgument("budget must be at least 2".into()));
    }
    let forward = estimate_kp_lower(dom, p, Direction::X, Direction::Y, budget.div_ceil(2), seed)?;
    let swapped = estimate_kp_lower(dom, p, Direction::Y, Direction::X, budget / 2, seed)?;
    Ok(PairEstimate {
        k_sup: forward.best_ratio,
        k_inf: 1.0 / swapped.best_ratio,
        product: forward.best_ratio * swapped.best_ratio,
        forward,
        swapped,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    /// Angle of `h1` in degrees for grid rows; `None` for width-extreme rows.
    pub angle_deg: Option<f64>,
    pub label: String,
    pub estimate: RatioEstimate,
}

/// Orthogonal pairs `(θ, θ + 90°)` for `θ = k·180°/n_angles`, followed by the
/// width-extreme pairs `(h_max, h_min)` and `(h_min, h_max)`.
pub fn directional_sweep(
    dom: &ConvexDomain,
    p: f64,
    n_angles: usize,
    budget: usize,
    seed: u64,
) -> Result<Vec<SweepRow>> {
    if n_angles < 2 {
        return Err(Error::InvalidArgument("n_angles must be at least 2".into()));
    }
    let mut pairs: Vec<(Option<f64>, String, Direction, Direction)> = (0..n_angles)
        .map(|k| {
            let deg = 180.0 * k as f64 / n_angles as f64;
            (Some(deg), "orthogonal".to_string(), Direction::from_degrees(deg), Direction::from_degrees(deg + 90.0))
        })
        .collect();
    let w = dom.width_extremes();
    if w.h_max.cross(&w.h_min).abs() > 1e-12 {
        pairs.push((None, "width-max/min".into(), w.h_max, w.h_min));
        pairs.push((None, "width-min/max".into(), w.h_min, w.h_max));
    }
    pairs
        .into_par_iter()
        .map(|(angle_deg, label, h1, h2)| {
            Ok(SweepRow { angle_deg, label, estimate: estimate_kp_lower(dom, p, h1, h2, budget, seed)? })
        })
        .collect()
}

/// The families tabulated by [`family_table`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// Envelope equal to one on a sample of `D(φ, ε)`; parameter `ε`.
    UPhiEps,
    /// Single point displaced by `ω` from the steepest boundary edge.
    UOmega,
    /// Single point displaced by `ω` from the midpoint of the left vertical edge.
    UOmegaVertical,
}

impl std::str::FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "u-phi-eps" => Ok(Family::UPhiEps),
            "u-omega" => Ok(Family::UOmega),
            "u-omega-vertical" => Ok(Family::UOmegaVertical),
            _ => Err(Error::InvalidArgument(format!("unknown family {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyRow {
    pub parameter: f64,
    #[serde(with = "crate::ext")]
    pub norm_h1: f64,
    #[serde(with = "crate::ext")]
    pub norm_h2: f64,
    #[serde(with = "crate::ext")]
    pub ratio: f64,
}

impl Family {
    pub fn default_parameters(self) -> &'static [f64] {
        match self {
            Family::UPhiEps => &EPS_SCHEDULE,
            Family::UOmega | Family::UOmegaVertical => &OMEGA_SCHEDULE,
        }
    }

    pub fn spec(self, dom: &ConvexDomain, parameter: f64, phi: f64) -> Result<FunctionSpec> {
        match self {
            Family::UPhiEps => Ok(FunctionSpec::UPhiEps { phi, eps: parameter }),
            Family::UOmega => Ok(FunctionSpec::UOmega { anchor: steepest_anchor(dom).into(), omega: parameter }),
            Family::UOmegaVertical => {
                let (xmin, _) = dom.projection(Point::new(1.0, 0.0));
                let tol = dom.tol();
                let edge = (0..dom.len())
                    .find(|&i| {
                        let (a, b) = dom.edge(i);
                        (a.x - xmin).abs() <= tol && (b.x - xmin).abs() <= tol
                    })
                    .ok_or_else(|| Error::NotApplicable("the left support line touches a single vertex".into()))?;
                let (a, b) = dom.edge(edge);
                Ok(FunctionSpec::UOmega { anchor: a.lerp(b, 0.5).into(), omega: parameter })
            }
        }
    }
}

/// Norms and ratio of one family across its parameter schedule (x and y
/// derivatives).
pub fn family_table(
    dom: &ConvexDomain,
    family: Family,
    p: f64,
    parameters: &[f64],
    phi: f64,
) -> Result<Vec<FamilyRow>> {
    parameters
        .par_iter()
        .map(|&parameter| {
            let u = family.spec(dom, parameter, phi)?.build(dom)?;
            let norm_h1 = lp_directional_norm(&u, p, Direction::X)?.value;
            let norm_h2 = lp_directional_norm(&u, p, Direction::Y)?.value;
            Ok(FamilyRow { parameter, norm_h1, norm_h2, ratio: crate::norms::ratio_of(norm_h1, norm_h2)? })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::presets::*;

    #[test]
    fn disc_tent_is_found() {
        let d = disc(512).unwrap();
        let e = estimate_kp_lower(&d, 1.0, Direction::X, Direction::Y, 200, 42).unwrap();
        assert!(e.best_ratio >= 2.0 - 1e-2, "{}", e.best_ratio);
        assert!(e.best_ratio <= e.upper_bound + 1e-9);
        assert!(matches!(e.witness, FunctionSpec::Tent { .. }));
        assert_eq!(e.evaluations, 200);
    }

    #[test]
    fn diamond_sup_ratio_approaches_slope() {
        let e = estimate_kp_lower(&diamond(), f64::INFINITY, Direction::X, Direction::Y, 200, 42).unwrap();
        assert!(e.best_ratio >= 0.95 && e.best_ratio <= 1.0 + 1e-9, "{}", e.best_ratio);
    }

    #[test]
    fn witness_reproduces_ratio() {
        let t = triangle(0.0, 0.0, 4.0, 0.0, 3.0, 3.0).unwrap();
        for p in [1.0, 2.0, f64::INFINITY] {
            let e = estimate_kp_lower(&t, p, Direction::X, Direction::Y, 60, 7).unwrap();
            let u = e.witness.build(&t).unwrap();
            let r = ratio(&u, p, Direction::X, Direction::Y).unwrap();
            assert!((r - e.best_ratio).abs() <= 1e-9 * r.max(1.0));
            assert!(e.best_ratio <= e.upper_bound + 1e-9);
        }
    }

    #[test]
    fn deterministic() {
        let d = disc(9).unwrap();
        let a =
            estimate_kp_lower(&d, 2.0, Direction::from_degrees(20.0), Direction::from_degrees(100.0), 80, 3).unwrap();
        let b =
            estimate_kp_lower(&d, 2.0, Direction::from_degrees(20.0), Direction::from_degrees(100.0), 80, 3).unwrap();
        assert_eq!(a, b);
        let c =
            estimate_kp_lower(&d, 2.0, Direction::from_degrees(20.0), Direction::from_degrees(100.0), 80, 4).unwrap();
        assert_eq!(c.seed, 4);
    }

    #[test]
    fn pair_estimates() {
        let d = disc(512).unwrap();
        let pair = estimate_kp_pair(&d, 1.0, 200, 42).unwrap();
        assert!(pair.product >= 4.0 - 0.05 && pair.product <= 4.0 + 1e-9, "{}", pair.product);
        let s = estimate_kp_pair(&square(), 1.0, 100, 42).unwrap();
        assert!(s.product <= 4.0 + 1e-9);
    }

    #[test]
    fn omega_family_on_the_square_diverges() {
        let sq = square();
        for p in [2.0, f64::INFINITY] {
            let rows = family_table(&sq, Family::UOmegaVertical, p, &OMEGA_SCHEDULE, DEFAULT_PHI).unwrap();
            assert!(rows.windows(2).all(|w| w[1].ratio > w[0].ratio));
            assert!(rows.last().unwrap().ratio >= 10.0);
        }
        let rows = family_table(&sq, Family::UOmegaVertical, f64::INFINITY, &[0.01], DEFAULT_PHI).unwrap();
        assert!((rows[0].norm_h1 - 100.0).abs() < 1e-9);
        assert!(family_table(&diamond(), Family::UOmegaVertical, 2.0, &[0.01], DEFAULT_PHI).is_err());
    }

    #[test]
    fn sweep_includes_width_extremes() {
        let rows = directional_sweep(&square(), 1.0, 4, 30, 1).unwrap();
        assert_eq!(rows.len(), 6);
        let cap = rows.iter().map(|r| r.estimate.upper_bound).fold(0.0, f64::max);
        assert!((cap - 2.0 * 2f64.sqrt()).abs() < 1e-12);
        for r in rows.iter().filter(|r| r.angle_deg.is_some()) {
            assert!((r.estimate.upper_bound - 2.0).abs() < 1e-12);
        }
    }
}
