//! Property suites over a seeded corpus of random convex polygons and random
//! concave envelopes on them.
//!
//! Instance `i` uses polygon `i / ENVELOPES_PER_POLYGON`; polygons and
//! envelopes draw from separate generator streams, so any single instance can
//! be rebuilt from `(seed, i)` alone. A failing instance is reported as a
//! [`Counterexample`] that replays without the corpus.

use crate::bounds::{affine_normalize, minimax_bounds};
use crate::concave::{ConcaveFunction, FunctionSpec};
use crate::error::{Error, Result};
use crate::geometry::{clip_polygon, convex_hull, ConvexDomain, Direction, Point};
use crate::norms::{lp_directional_norm, ratio, scanline_l1_norm, sup_attained_near_boundary};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const ENVELOPES_PER_POLYGON: usize = 5;
pub const DEFAULT_CASES: usize = 200 * ENVELOPES_PER_POLYGON;
pub const DEFAULT_ORACLE_TOL: f64 = 1e-3;
pub const ORACLE_LINES: usize = 4096;

const PROPERTY_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Sandwich,
    LineVariation,
    #[serde(rename = "oracle-l1")]
    ScanlineOracle,
    SlopeRatio,
    TangentSlope,
    BoundarySup,
    AffineTransfer,
    Minimax,
    Envelope,
}

impl Suite {
    pub const ALL: [Suite; 9] = [
        Suite::Envelope,
        Suite::Sandwich,
        Suite::LineVariation,
        Suite::ScanlineOracle,
        Suite::SlopeRatio,
        Suite::TangentSlope,
        Suite::BoundarySup,
        Suite::AffineTransfer,
        Suite::Minimax,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Sandwich => "sandwich",
            Suite::LineVariation => "line-variation",
            Suite::ScanlineOracle => "oracle-l1",
            Suite::SlopeRatio => "slope-ratio",
            Suite::TangentSlope => "tangent-slope",
            Suite::BoundarySup => "boundary-sup",
            Suite::AffineTransfer => "affine-transfer",
            Suite::Minimax => "minimax",
            Suite::Envelope => "envelope",
        }
    }

    /// Suites checked on the normalized image of each instance.
    fn normalized(self) -> bool {
        matches!(self, Suite::SlopeRatio | Suite::TangentSlope)
    }
}

/// Alternative names accepted on input.
const ALIASES: [(&str, Suite); 6] = [
    ("theorem1", Suite::Sandwich),
    ("lemma1", Suite::LineVariation),
    ("lemma5", Suite::SlopeRatio),
    ("lemma-tan", Suite::TangentSlope),
    ("lemma7", Suite::BoundarySup),
    ("eq8", Suite::AffineTransfer),
];

impl std::str::FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .or_else(|| ALIASES.iter().find(|a| a.0 == s).map(|a| a.1))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown suite {s:?}")))
    }
}

/// A failing instance, self-contained for replay.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub suite: Suite,
    pub seed: u64,
    pub case: usize,
    pub tol: f64,
    pub domain: ConvexDomain,
    pub function: FunctionSpec,
    pub detail: String,
}

impl Counterexample {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("counterexample serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// Re-runs the property on the stored instance.
    pub fn replay(&self) -> std::result::Result<(), String> {
        check_instance(self.suite, &self.domain, &self.function, self.tol, salt(self.seed, self.case))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub cases: usize,
    pub violations: usize,
    pub first_counterexample: Option<Counterexample>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Polygon `k` of the corpus: hull of 3 to 12 points on a jittered ellipse,
/// then sheared. Rejected draws are retried on the next sub-stream.
pub fn random_polygon(seed: u64, k: usize) -> ConvexDomain {
    for attempt in 0u64.. {
        let mut r = rng(seed, (2 * k as u64) << 8 | attempt);
        let n = r.random_range(3..=12);
        let mut angles: Vec<f64> = (0..n).map(|_| r.random_range(0.0..std::f64::consts::TAU)).collect();
        angles.sort_by(f64::total_cmp);
        let (ax, ay) = (r.random_range(0.3..3.0), r.random_range(0.3..3.0));
        let shear = r.random_range(-1.0..1.0);
        let center = Point::new(r.random_range(-2.0..2.0), r.random_range(-2.0..2.0));
        let pts: Vec<Point> = angles
            .iter()
            .map(|t| {
                let rad = r.random_range(0.6..1.0);
                let (x, y) = (ax * rad * t.cos(), ay * rad * t.sin());
                center + Point::new(x + shear * y, y)
            })
            .collect();
        if let Ok(d) = ConvexDomain::new(convex_hull(&pts)) {
            if d.width_extremes().w_min > 1e-2 * d.width_extremes().w_max {
                return d;
            }
        }
    }
    unreachable!()
}

/// Envelope of 1 to 5 constraints at least `1e-3·diameter` inside.
pub fn random_envelope(dom: &ConvexDomain, seed: u64, case: usize) -> FunctionSpec {
    let mut r = rng(seed, ((2 * case as u64 + 1) << 8) | 0xff);
    let inner = dom.shrink(1e-3 * dom.width_extremes().w_max).expect("corpus polygons are not thin");
    let (lo, hi) = crate::geometry::bbox(inner.vertices());
    let k = r.random_range(1..=5);
    let constraints = (0..k)
        .map(|_| loop {
            let p = Point::new(r.random_range(lo.x..=hi.x), r.random_range(lo.y..=hi.y));
            if inner.inner_distance(p) >= 0.0 {
                break [p.x, p.y, r.random_range(0.1..=1.0)];
            }
        })
        .collect();
    FunctionSpec::Envelope { constraints }
}

pub fn corpus_instance(seed: u64, case: usize) -> (ConvexDomain, FunctionSpec) {
    let dom = random_polygon(seed, case / ENVELOPES_PER_POLYGON);
    let spec = random_envelope(&dom, seed, case);
    (dom, spec)
}

fn salt(seed: u64, case: usize) -> u64 {
    seed ^ case as u64
}

fn random_direction(seed: u64) -> Direction {
    Direction::from_angle(rng(seed, u64::MAX).random_range(0.0..std::f64::consts::PI))
}

/// Runs one suite over `cases` corpus instances.
pub fn run_suite(suite: Suite, cases: usize, seed: u64, tol: f64) -> SuiteReport {
    let failures: Vec<Option<Counterexample>> = (0..cases)
        .into_par_iter()
        .map(|case| {
            let (domain, function) = corpus_instance(seed, case);
            let (domain, function) = if suite.normalized() {
                match normalized_instance(&domain, &function) {
                    Ok(x) => x,
                    Err(e) => return Some((domain, function, e.to_string())),
                }
            } else {
                (domain, function)
            };
            check_instance(suite, &domain, &function, tol, salt(seed, case))
                .err()
                .map(|detail| (domain, function, detail))
        })
        .enumerate()
        .map(|(case, f)| {
            f.map(|(domain, function, detail)| Counterexample { suite, seed, case, tol, domain, function, detail })
        })
        .collect();
    let violations = failures.iter().filter(|f| f.is_some()).count();
    SuiteReport { suite, cases, violations, first_counterexample: failures.into_iter().flatten().next() }
}

/// Image of an envelope instance under the normalization `A -> (0,0)`,
/// `B -> (2,0)`; envelopes map to envelopes of the mapped constraints.
pub fn normalized_instance(dom: &ConvexDomain, spec: &FunctionSpec) -> Result<(ConvexDomain, FunctionSpec)> {
    let n = affine_normalize(dom)?;
    let FunctionSpec::Envelope { constraints } = spec else {
        return Err(Error::InvalidArgument("only envelopes are normalized".into()));
    };
    let constraints = constraints
        .iter()
        .map(|[x, y, h]| {
            let q = n.apply(Point::new(*x, *y));
            [q.x, q.y, *h]
        })
        .collect();
    Ok((n.image, FunctionSpec::Envelope { constraints }))
}

/// Checks one property on one instance; `Err` carries a readable detail.
pub fn check_instance(
    suite: Suite,
    dom: &ConvexDomain,
    spec: &FunctionSpec,
    tol: f64,
    salt: u64,
) -> std::result::Result<(), String> {
    let u = spec.build(dom).map_err(|e| format!("construction failed: {e}"))?;
    let r = match suite {
        Suite::Envelope => check_envelope(&u, spec),
        Suite::Sandwich => check_sandwich(&u),
        Suite::LineVariation => check_line_variation(&u, salt),
        Suite::ScanlineOracle => check_scanline_oracle(&u, tol, salt),
        Suite::SlopeRatio => check_slope_ratio(&u),
        Suite::TangentSlope => check_tangent_slope(&u),
        Suite::BoundarySup => check_boundary_sup(&u, salt),
        Suite::AffineTransfer => check_affine_transfer(&u),
        Suite::Minimax => check_minimax(dom),
    };
    r.map_err(|e| e.to_string())
}

type Check = std::result::Result<(), String>;

fn scale(u: &ConcaveFunction) -> f64 {
    u.max_value().0.max(1.0)
}

fn check_envelope(u: &ConcaveFunction, spec: &FunctionSpec) -> Check {
    u.check_invariants()?;
    if let FunctionSpec::Envelope { constraints } = spec {
        for [x, y, h] in constraints {
            let v = u.evaluate(Point::new(*x, *y)).map_err(|e| e.to_string())?;
            if v < h - PROPERTY_TOL {
                return Err(format!("constraint ({x}, {y}) has value {v} below its height {h}"));
            }
        }
        // every interior node is a constraint at its own height
        for n in u.nodes().iter().filter(|n| !u.domain().on_boundary(n.p)) {
            let hit =
                constraints.iter().any(|[x, y, h]| n.p.dist(Point::new(*x, *y)) <= 1e-12 && (n.z - h).abs() <= 1e-12);
            if !hit {
                return Err(format!("interior node {} is not an active constraint", n.p));
            }
        }
    }
    let prof = u.max_profile(Direction::X, 33).map_err(|e| e.to_string())?;
    for w in prof.samples.windows(3) {
        let (a, b, c) = (w[0], w[1], w[2]);
        let mid = a.1 + (c.1 - a.1) * (b.0 - a.0) / (c.0 - a.0);
        if b.1 < mid - PROPERTY_TOL * scale(u) {
            return Err(format!("line maximum is not concave near t = {}", b.0));
        }
    }
    Ok(())
}

fn check_sandwich(u: &ConcaveFunction) -> Check {
    let (w_x, w_y) = u.domain().circumscribed_rectangle();
    let m = u.max_value().0;
    for (h, w) in [(Direction::X, w_y), (Direction::Y, w_x)] {
        let v = lp_directional_norm(u, 1.0, h).map_err(|e| e.to_string())?.value;
        if v < w * m - PROPERTY_TOL || v > 2.0 * w * m + PROPERTY_TOL {
            return Err(format!("‖u_h‖₁ = {v} outside [{}, {}] for h = {h:?}", w * m, 2.0 * w * m));
        }
    }
    Ok(())
}

fn check_line_variation(u: &ConcaveFunction, salt: u64) -> Check {
    let mut r = rng(salt, 7);
    for h in [Direction::X, Direction::Y, random_direction(salt)] {
        let (lo, hi) = u.domain().projection(h.normal().as_point());
        for _ in 0..8 {
            let t = lo + (hi - lo) * r.random_range(0.01..0.99);
            let integral = u.line_gradient_integral(h, t);
            let m = u.restriction(h, t).ok_or("line misses the domain")?.max();
            if (integral - 2.0 * m).abs() > PROPERTY_TOL * scale(u) {
                return Err(format!("line t = {t}: ∫|u_h| = {integral}, 2m = {}", 2.0 * m));
            }
        }
    }
    Ok(())
}

fn check_scanline_oracle(u: &ConcaveFunction, tol: f64, salt: u64) -> Check {
    for h in [Direction::X, Direction::Y, random_direction(salt)] {
        let exact = lp_directional_norm(u, 1.0, h).map_err(|e| e.to_string())?.value;
        let sc = scanline_l1_norm(u, h, ORACLE_LINES).map_err(|e| e.to_string())?.value;
        if ((exact - sc) / exact).abs() > tol {
            return Err(format!("facet-exact {exact} vs scanline {sc} for h = {h:?}"));
        }
    }
    Ok(())
}

/// On a normalized domain, at regular points with `0 < x <= 1`:
/// `|u_x| <= (u - y u_y) / x`. On a facet `u - y u_y = g_x x + z_0` is affine,
/// so the inequality times `x` is checked at the corners of the facet clipped
/// to `x <= 1`.
fn check_slope_ratio(u: &ConcaveFunction) -> Check {
    let tol = PROPERTY_TOL;
    for (i, f) in u.facets().iter().enumerate() {
        let poly = clip_polygon(&u.facet_points(i), Point::new(1.0, 0.0), 1.0);
        for q in poly {
            if q.x <= 0.0 {
                continue;
            }
            let lhs = f.plane.gx.abs() * q.x;
            let rhs = f.plane.eval(q) - q.y * f.plane.gy;
            if lhs > rhs + tol * q.x {
                return Err(format!("facet {i} at {q}: |u_x| = {} > {}", f.plane.gx.abs(), rhs / q.x));
            }
        }
    }
    Ok(())
}

/// At a non-extreme boundary node, the level line of every incident facet
/// has slope `-u_x/u_y` between the slopes of the boundary on either side.
fn check_tangent_slope(u: &ConcaveFunction) -> Check {
    let dom = u.domain();
    let (xmin, xmax) = dom.projection(Point::new(1.0, 0.0));
    let tol = dom.tol();
    for (i, f) in u.facets().iter().enumerate() {
        for &k in &f.corners {
            let p = u.nodes()[k].p;
            if (p.x - xmin).abs() <= tol || (xmax - p.x).abs() <= tol {
                continue;
            }
            let edges = dom.boundary_edges_of(p);
            if edges.is_empty() {
                continue;
            }
            let slopes: Vec<f64> = edges
                .iter()
                .map(|&e| {
                    let (a, b) = dom.edge(e);
                    (b.y - a.y) / (b.x - a.x)
                })
                .collect();
            let lo = slopes.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = slopes.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let (gx, gy) = (f.plane.gx, f.plane.gy);
            if gy == 0.0 {
                return Err(format!("facet {i} at boundary node {p} has u_y = 0"));
            }
            let s = -gx / gy;
            let slack = PROPERTY_TOL * lo.abs().max(hi.abs()).max(1.0);
            if s < lo - slack || s > hi + slack {
                return Err(format!("facet {i} at {p}: -u_x/u_y = {s} outside [{lo}, {hi}]"));
            }
        }
    }
    Ok(())
}

fn check_boundary_sup(u: &ConcaveFunction, salt: u64) -> Check {
    for h in [Direction::X, Direction::Y, random_direction(salt)] {
        if !sup_attained_near_boundary(u, h) {
            return Err(format!("sup of |u_h| for h = {h:?} is attained only away from the boundary"));
        }
    }
    Ok(())
}

fn check_affine_transfer(u: &ConcaveFunction) -> Check {
    let n = affine_normalize(u.domain()).map_err(|e| e.to_string())?;
    let v = u.map_affine(n.forward, n.forward_shift).map_err(|e| e.to_string())?;
    for p in [1.0, 2.0, f64::INFINITY] {
        let r = ratio(u, p, Direction::X, Direction::Y).map_err(|e| e.to_string())?;
        let rn = ratio(&v, p, Direction::X, Direction::Y).map_err(|e| e.to_string())?;
        if r > n.transfer(rn) + PROPERTY_TOL {
            return Err(format!("p = {p}: ratio {r} exceeds transferred bound {}", n.transfer(rn)));
        }
    }
    Ok(())
}

fn check_minimax(dom: &ConvexDomain) -> Check {
    let b = minimax_bounds(dom, 1.0).map_err(|e| e.to_string())?;
    if b.product != 4.0 {
        return Err(format!("p = 1 product bound is {} instead of 4", b.product));
    }
    let pair = crate::search::estimate_kp_pair(dom, 1.0, 8, 1).map_err(|e| e.to_string())?;
    if pair.product > 4.0 + PROPERTY_TOL {
        return Err(format!("estimated K₁/k₁ = {} exceeds 4", pair.product));
    }
    Ok(())
}
