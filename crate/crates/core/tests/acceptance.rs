//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Run with `cargo test -p kpratio --test acceptance -- --nocapture` to see
//! the report.

use kpratio::bounds::{
    directional_k1_upper, k1_upper_bound, k_infinity, minimax_bounds, ratio_upper_bound, uniform_k1_upper,
};
use kpratio::concave::{concave_envelope, tent_function};
use kpratio::geometry::presets::{diamond, disc, parallelogram, rectangle, square, triangle};
use kpratio::norms::{lp_directional_norm, ratio, scanline_l1_norm};
use kpratio::poincare::{poincare_constant, poincare_constant_with};
use kpratio::search::{
    estimate_kp_lower, estimate_kp_pair, family_table, Family, DEFAULT_PHI, EPS_SCHEDULE, OMEGA_SCHEDULE,
};
use kpratio::verify::{random_polygon, run_suite, Suite};
use kpratio::{ConvexDomain, Direction, Point};
use std::f64::consts::PI;
use std::time::{Duration, Instant};

const SEED: u64 = 42;
const BOUND_SLACK: f64 = 1e-9;

struct Line {
    id: usize,
    pass: bool,
    detail: String,
}

/// An estimate together with the bound it must respect.
struct Bounded {
    label: String,
    value: f64,
    bound: f64,
}

#[derive(Default)]
struct Report {
    lines: Vec<Line>,
    bounded: Vec<Bounded>,
}

impl Report {
    fn record(&mut self, id: usize, pass: bool, detail: String) {
        self.lines.push(Line { id, pass, detail });
    }

    fn bound(&mut self, label: impl Into<String>, value: f64, bound: f64) {
        self.bounded.push(Bounded { label: label.into(), value, bound });
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let out = f();
    (out, t.elapsed())
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] > w[0])
}

fn disc_tent() -> kpratio::concave::ConcaveFunction {
    tent_function(&disc(512).unwrap(), Point::new(0.0, -1.0), Point::new(0.0, 1.0), 1.0).unwrap()
}

fn disc_extremal(r: &mut Report) {
    let ((ratio_scan, exact), elapsed) = timed(|| {
        let u = disc_tent();
        let a = scanline_l1_norm(&u, Direction::X, 4096).unwrap().value;
        let b = scanline_l1_norm(&u, Direction::Y, 4096).unwrap().value;
        (a / b, ratio(&u, 1.0, Direction::X, Direction::Y).unwrap())
    });
    let d = disc(512).unwrap();
    r.bound("disc tent vs 2w_y/w_x", exact, k1_upper_bound(&d).bound);
    r.bound("disc tent vs 2w_max/w_min", exact, uniform_k1_upper(&d).bound);
    let pass = (ratio_scan - 2.0).abs() <= 1e-3 && elapsed < Duration::from_secs(1);
    r.record(
        1,
        pass,
        format!("512-gon tent scanline ratio {ratio_scan:.9} (target 2 ± 1e-3) in {elapsed:.2?} (< 1 s)"),
    );
}

fn sandwich(r: &mut Report) {
    let (rep, elapsed) = timed(|| run_suite(Suite::Sandwich, 1000, SEED, 0.0));
    let pass = rep.passed() && rep.cases == 1000 && elapsed < Duration::from_secs(30);
    r.record(
        2,
        pass,
        format!(
            "wM <= ‖u_x‖₁ <= 2wM on {} instances: {} violations in {elapsed:.2?} (< 30 s)",
            rep.cases, rep.violations
        ),
    );
}

fn cone_equality(r: &mut Report) {
    let dom = diamond();
    let u = concave_envelope(&dom, &[(Point::new(0.0, 0.0), 1.0)]).unwrap();
    let norm = lp_directional_norm(&u, 1.0, Direction::X).unwrap().value;
    let (_, w_y) = dom.circumscribed_rectangle();
    let wm = w_y * u.max_value().0;
    // |u_x| = 1 on the whole diamond of area 2
    let pass = (norm - wm).abs() < 1e-12 && (norm - 2.0).abs() < 1e-12;
    r.record(3, pass, format!("diamond cone ‖u_x‖₁ = {norm}, wM = {wm}, |error| = {:e}", (norm - wm).abs()));
}

fn oracle(r: &mut Report) {
    let rep = run_suite(Suite::ScanlineOracle, 100, SEED, 1e-3);
    let u = disc_tent();
    let exact = lp_directional_norm(&u, 1.0, Direction::X).unwrap();
    let scan = scanline_l1_norm(&u, Direction::X, 4096).unwrap().value;
    let ac = exact.value - exact.jump_part;
    let gap = (scan - (ac + exact.jump_part)).abs();
    let pass = rep.passed() && gap <= 1e-9;
    r.record(
        4,
        pass,
        format!(
            "facet vs scanline on {} instances: {} violations; disc tent scanline {scan} vs AC {ac} + jump {} (gap {gap:e})",
            rep.cases, rep.violations, exact.jump_part
        ),
    );
}

fn normalized_domain_suites(r: &mut Report) {
    let a = run_suite(Suite::SlopeRatio, 200, SEED, 0.0);
    let b = run_suite(Suite::TangentSlope, 200, SEED, 0.0);
    let pass = a.passed() && b.passed();
    r.record(
        5,
        pass,
        format!(
            "normalized instances 200: slope-ratio inequality {} violations, tangent slopes {} violations",
            a.violations, b.violations
        ),
    );
}

fn poincare(r: &mut Report) {
    let c = poincare_constant(2.0).unwrap();
    let fine = poincare_constant_with(2.0, 2 * kpratio::poincare::DEFAULT_CELLS).unwrap();
    let rel = (c * PI * PI - 1.0).abs();
    let pass = rel <= 1e-3 && (c - fine).abs() < 1e-4;
    r.record(6, pass, format!("C_2 = {c:.9} vs 1/π² (rel {rel:e}); doubling change {:e}", (c - fine).abs()));
}

fn final_ratios(dom: &ConvexDomain, family: Family, p: f64, params: &[f64]) -> Vec<f64> {
    family_table(dom, family, p, params, DEFAULT_PHI).unwrap().into_iter().map(|row| row.ratio).collect()
}

fn attainment(r: &mut Report) {
    let mut ok = true;
    let mut parts = vec![];
    for (name, dom, m) in
        [("diamond", diamond(), 1.0), ("triangle", triangle(0.0, 0.0, 2.0, 0.0, 1.0, 1.0).unwrap(), 1.0)]
    {
        let ratios = final_ratios(&dom, Family::UOmega, f64::INFINITY, &OMEGA_SCHEDULE);
        let last = *ratios.last().unwrap();
        ok &= (0.95 * m..=m).contains(&last);
        parts.push(format!("{name} final {last}"));
        let bound = ratio_upper_bound(&dom, f64::INFINITY, Direction::X, Direction::Y).unwrap();
        ok &= k_infinity(&dom) == m;
        for (w, x) in OMEGA_SCHEDULE.iter().zip(&ratios) {
            r.bound(format!("{name} u_ω(ω={w}) vs K_∞ = m"), *x, bound);
        }
        let est = estimate_kp_lower(&dom, f64::INFINITY, Direction::X, Direction::Y, 64, SEED).unwrap();
        r.bound(format!("{name} p=∞ search"), est.best_ratio, est.upper_bound);
    }
    r.record(7, ok, format!("u_ω schedule to ω = 1e-3 with m = 1: {}", parts.join(", ")));
}

fn divergence(r: &mut Report) {
    let mut ok = true;
    let mut parts = vec![];
    let sq = square();
    for p in [f64::INFINITY, 2.0] {
        let ratios = final_ratios(&sq, Family::UOmegaVertical, p, &OMEGA_SCHEDULE);
        let last = *ratios.last().unwrap();
        ok &= strictly_increasing(&ratios) && last >= 10.0;
        parts.push(format!("square p={p} final {last:.4}"));
        let bound = ratio_upper_bound(&sq, p, Direction::X, Direction::Y).unwrap();
        for x in &ratios {
            r.bound(format!("square p={p} u_ω"), *x, bound);
        }
    }
    let d = disc(512).unwrap();
    let ratios = final_ratios(&d, Family::UPhiEps, 2.0, &EPS_SCHEDULE);
    ok &= strictly_increasing(&ratios);
    parts.push(format!("disc u_φ,ε {:?}", ratios.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>()));
    let bound = ratio_upper_bound(&d, 2.0, Direction::X, Direction::Y).unwrap();
    for x in &ratios {
        r.bound("disc p=2 u_φ,ε", *x, bound);
    }
    r.record(8, ok, format!("strictly increasing: {}", parts.join("; ")));
}

fn extra_estimates(r: &mut Report) {
    let d = disc(512).unwrap();
    let est = estimate_kp_lower(&d, 1.0, Direction::X, Direction::Y, 64, SEED).unwrap();
    r.bound("disc p=1 search vs 2w_y/w_x", est.best_ratio, k1_upper_bound(&d).bound);

    let sq = square();
    let (h1, h2) = (Direction::from_degrees(30.0), Direction::from_degrees(120.0));
    let est = estimate_kp_lower(&sq, 1.0, h1, h2, 64, SEED).unwrap();
    r.bound("square p=1 (30°, 120°) vs 2w₁/w₂", est.best_ratio, directional_k1_upper(&sq, h1, h2).unwrap().bound);
    r.bound("square p=1 (30°, 120°) vs 2w_max/w_min", est.best_ratio, uniform_k1_upper(&sq).bound);

    let dia = diamond();
    let est = estimate_kp_lower(&dia, 2.0, Direction::X, Direction::Y, 64, SEED).unwrap();
    r.bound(
        "diamond p=2 search vs M_p composition",
        est.best_ratio,
        ratio_upper_bound(&dia, 2.0, Direction::X, Direction::Y).unwrap(),
    );
}

fn consistency(r: &mut Report) {
    extra_estimates(r);
    let bad: Vec<&Bounded> = r.bounded.iter().filter(|b| b.value.is_nan() || b.value > b.bound + BOUND_SLACK).collect();
    let detail = match bad.first() {
        None => format!("{} estimates within their upper bounds", r.bounded.len()),
        Some(b) => {
            format!("{} of {} exceed; first: {} = {} > {}", bad.len(), r.bounded.len(), b.label, b.value, b.bound)
        }
    };
    let pass = bad.is_empty();
    r.record(9, pass, detail);
}

fn minimax(r: &mut Report) {
    let ((ok_product, checked, pair), elapsed) = timed(|| {
        let mut domains = vec![
            disc(512).unwrap(),
            disc(7).unwrap(),
            square(),
            diamond(),
            triangle(0.0, 0.0, 2.0, 0.0, 1.0, 1.0).unwrap(),
            triangle(0.0, 0.0, 4.0, 0.0, 3.0, 3.0).unwrap(),
            rectangle(1.0, 10.0).unwrap(),
            parallelogram(2.0, 0.5).unwrap(),
        ];
        domains.extend((0..200).map(|k| random_polygon(SEED, k)));
        let ok = domains.iter().all(|d| minimax_bounds(d, 1.0).unwrap().product == 4.0);
        let pair = estimate_kp_pair(&diamond(), f64::INFINITY, 64, SEED).unwrap();
        (ok, domains.len(), pair)
    });
    let pass = ok_product && (0.90..=1.0).contains(&pair.product) && elapsed < Duration::from_secs(10);
    r.record(
        10,
        pass,
        format!(
            "p=1 product == 4 on {checked} domains: {ok_product}; diamond K_∞/k_∞ estimate {} in {elapsed:.2?} (< 10 s)",
            pair.product
        ),
    );
}

#[test]
fn acceptance_criteria() {
    let mut r = Report::default();
    disc_extremal(&mut r);
    sandwich(&mut r);
    cone_equality(&mut r);
    oracle(&mut r);
    normalized_domain_suites(&mut r);
    poincare(&mut r);
    attainment(&mut r);
    divergence(&mut r);
    consistency(&mut r);
    minimax(&mut r);
    r.lines.sort_by_key(|l| l.id);
    for l in &r.lines {
        println!("criterion {:>2}: {} {}", l.id, if l.pass { "PASS" } else { "FAIL" }, l.detail);
    }
    let failed: Vec<usize> = r.lines.iter().filter(|l| !l.pass).map(|l| l.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
