use clap::{Args, Parser, Subcommand, ValueEnum};
use kpratio::bounds::{bound_report, BoundReport};
use kpratio::geometry::presets;
use kpratio::norms::scanline_l1_norm;
use kpratio::search::{
    directional_sweep, estimate_kp_lower_traced, family_table, CandidateRecord, Family, RatioEstimate,
};
use kpratio::verify::{self, Counterexample, Suite, SuiteReport};
use kpratio::{ext, ConvexDomain, Direction, Point};
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;

mod output;

use output::{Output, Table};

/// Ratios of directional derivative norms of concave functions on convex
/// polygons.
#[derive(Parser, Debug)]
#[command(name = "kpratio", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Widths, vertical support lines and extreme boundary slopes.
    Analyze {
        #[command(flatten)]
        domain: DomainArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Theoretical upper bounds for one exponent.
    Bounds {
        #[command(flatten)]
        domain: DomainArgs,
        #[arg(long, value_parser = parse_p, default_value = "1")]
        p: f64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Seeded search for a lower estimate of sup ‖u_h1‖_p / ‖u_h2‖_p.
    Estimate {
        #[command(flatten)]
        domain: DomainArgs,
        #[arg(long, value_parser = parse_p, default_value = "1")]
        p: f64,
        /// Angle of h1 in degrees.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        h1: f64,
        /// Angle of h2 in degrees.
        #[arg(long, default_value_t = 90.0, allow_negative_numbers = true)]
        h2: f64,
        #[arg(long, default_value_t = 200)]
        budget: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Re-evaluate the p = 1 witness with this many scanlines.
        #[arg(long)]
        n_lines: Option<usize>,
        /// Emit every candidate instead of the summary.
        #[arg(long)]
        trace: bool,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Property suites on the seeded random corpus, or replay of a counterexample.
    Verify {
        /// Suite name, or `all`.
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = verify::DEFAULT_CASES)]
        cases: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Relative tolerance of the facet vs scanline oracle.
        #[arg(long, default_value_t = verify::DEFAULT_ORACLE_TOL)]
        tol: f64,
        /// Counterexample file to re-run instead of the corpus.
        #[arg(long)]
        replay: Option<PathBuf>,
        /// Where to write the first counterexample on failure.
        #[arg(long)]
        counterexample: Option<PathBuf>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Norms and ratio of an extremal family over its parameter schedule.
    Families {
        #[command(flatten)]
        domain: DomainArgs,
        #[arg(long)]
        family: String,
        #[arg(long, value_parser = parse_p, default_value = "2")]
        p: f64,
        /// Opening half-angle for u-phi-eps, in degrees.
        #[arg(long, default_value_t = 45.0)]
        phi: f64,
        /// Comma-separated parameters overriding the default schedule.
        #[arg(long, value_delimiter = ',')]
        params: Vec<f64>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// One-dimensional Poincaré constant C_p.
    Poincare {
        #[arg(long, value_parser = parse_p)]
        p: f64,
        #[arg(long, default_value_t = kpratio::poincare::DEFAULT_CELLS)]
        cells: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Estimates over orthogonal direction pairs and the width-extreme pairs.
    Sweep {
        #[command(flatten)]
        domain: DomainArgs,
        #[arg(long, value_parser = parse_p, default_value = "1")]
        p: f64,
        #[arg(long, default_value_t = 12)]
        n_angles: usize,
        #[arg(long, default_value_t = 64)]
        budget: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Args, Debug)]
struct DomainArgs {
    /// JSON file `{"vertices": [[x, y], ...]}` or a bare vertex array.
    #[arg(long, required_unless_present = "preset", conflicts_with = "preset")]
    domain: Option<PathBuf>,
    /// disc, square, diamond, triangle or parallelogram.
    #[arg(long)]
    preset: Option<String>,
    /// Vertex count for the disc preset.
    #[arg(long, default_value_t = 512, requires = "preset")]
    n: usize,
}

#[derive(Args, Debug)]
struct OutArgs {
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

fn parse_p(s: &str) -> Result<f64, String> {
    match ext::parse(s) {
        Some(p) if p >= 1.0 => Ok(p),
        _ => Err(format!("{s:?} is not an exponent in [1, inf]")),
    }
}

/// Input or computation error; exit code 2.
#[derive(Debug)]
struct Failure {
    code: &'static str,
    message: String,
}

impl From<kpratio::Error> for Failure {
    fn from(e: kpratio::Error) -> Self {
        Failure { code: e.code(), message: e.to_string() }
    }
}

impl Failure {
    fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        Failure { code: "io", message: format!("{}: {e}", path.display()) }
    }
}

type CmdResult = Result<ExitCode, Failure>;

impl DomainArgs {
    fn load(&self) -> Result<ConvexDomain, Failure> {
        if let Some(name) = &self.preset {
            return Ok(presets::by_name(name, self.n)?);
        }
        let path = self.domain.as_ref().expect("clap enforces one domain source");
        let text = std::fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
        let parse_error = |e: serde_json::Error| Failure { code: "parse", message: format!("{}: {e}", path.display()) };
        if text.trim_start().starts_with('[') {
            let coords: Vec<[f64; 2]> = serde_json::from_str(&text).map_err(parse_error)?;
            Ok(ConvexDomain::from_coords(&coords)?)
        } else {
            serde_json::from_str(&text).map_err(parse_error)
        }
    }
}

impl OutArgs {
    fn output(&self) -> Output {
        Output { csv: self.format == Format::Csv, path: self.out.clone() }
    }
}

/// Angle of the line spanned by `h`, in `[0, 180)` degrees.
fn degrees(h: Direction) -> f64 {
    let d = h.angle().to_degrees().rem_euclid(180.0);
    if d >= 180.0 - 1e-9 {
        0.0
    } else {
        d
    }
}

#[derive(Serialize)]
struct GeometryReport {
    n_vertices: usize,
    #[serde(with = "ext")]
    w_x: f64,
    #[serde(with = "ext")]
    w_y: f64,
    #[serde(with = "ext")]
    w_max: f64,
    #[serde(with = "ext")]
    w_min: f64,
    h_max_deg: f64,
    h_min_deg: f64,
    left_angular: bool,
    right_angular: bool,
    #[serde(with = "ext")]
    m: f64,
    a: Point,
    b: Point,
    c: f64,
}

impl GeometryReport {
    const HEADER: [&'static str; 15] = [
        "n_vertices",
        "w_x",
        "w_y",
        "w_max",
        "w_min",
        "h_max_deg",
        "h_min_deg",
        "left_angular",
        "right_angular",
        "m",
        "a_x",
        "a_y",
        "b_x",
        "b_y",
        "c",
    ];

    fn new(d: &ConvexDomain) -> Self {
        let (w_x, w_y) = d.circumscribed_rectangle();
        let w = d.width_extremes();
        let v = d.vertical_support_classification();
        let e = d.extreme_x_points();
        GeometryReport {
            n_vertices: d.len(),
            w_x,
            w_y,
            w_max: w.w_max,
            w_min: w.w_min,
            h_max_deg: degrees(w.h_max),
            h_min_deg: degrees(w.h_min),
            left_angular: v.left_angular,
            right_angular: v.right_angular,
            m: v.slopes.max_abs(),
            a: e.a,
            b: e.b,
            c: e.c,
        }
    }

    fn row(&self) -> Vec<String> {
        let f = ext::format;
        vec![
            self.n_vertices.to_string(),
            f(self.w_x),
            f(self.w_y),
            f(self.w_max),
            f(self.w_min),
            f(self.h_max_deg),
            f(self.h_min_deg),
            self.left_angular.to_string(),
            self.right_angular.to_string(),
            f(self.m),
            f(self.a.x),
            f(self.a.y),
            f(self.b.x),
            f(self.b.y),
            f(self.c),
        ]
    }
}

fn analyze(domain: &DomainArgs, out: &OutArgs) -> CmdResult {
    let d = domain.load()?;
    let r = GeometryReport::new(&d);
    out.output().emit(&r, Table::new(&GeometryReport::HEADER, vec![r.row()]))?;
    Ok(ExitCode::SUCCESS)
}

fn bounds(domain: &DomainArgs, p: f64, out: &OutArgs) -> CmdResult {
    let r = bound_report(&domain.load()?, p)?;
    out.output().emit(&r, Table::new(&BoundReport::CSV_HEADER, vec![r.csv_row()]))?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct EstimateOutput {
    #[serde(flatten)]
    estimate: RatioEstimate,
    h1_deg: f64,
    h2_deg: f64,
    #[serde(skip_serializing_if = "Option::is_none", with = "ext::option")]
    scanline_ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trace: Option<Vec<CandidateRecord>>,
}

const ESTIMATE_HEADER: [&str; 9] =
    ["p", "h1_deg", "h2_deg", "best_ratio", "upper_bound", "gap", "evaluations", "seed", "scanline_ratio"];
const TRACE_HEADER: [&str; 3] = ["index", "family", "ratio"];

#[allow(clippy::too_many_arguments)]
fn estimate(
    domain: &DomainArgs,
    p: f64,
    h1: f64,
    h2: f64,
    budget: usize,
    seed: u64,
    n_lines: Option<usize>,
    trace: bool,
    out: &OutArgs,
) -> CmdResult {
    let d = domain.load()?;
    let (dir1, dir2) = (Direction::from_degrees(h1), Direction::from_degrees(h2));
    let (estimate, records) = estimate_kp_lower_traced(&d, p, dir1, dir2, budget, seed)?;
    let scanline_ratio = match n_lines {
        Some(n) if p == 1.0 => {
            let u = estimate.witness.build(&d)?;
            Some(scanline_l1_norm(&u, dir1, n)?.value / scanline_l1_norm(&u, dir2, n)?.value)
        }
        Some(_) => return Err(Failure { code: "invalid-argument", message: "--n-lines applies to p = 1 only".into() }),
        None => None,
    };
    let table = if trace {
        let rows = records
            .iter()
            .map(|r| vec![r.index.to_string(), r.family.clone(), r.ratio.map_or_else(String::new, ext::format)])
            .collect();
        Table::new(&TRACE_HEADER, rows)
    } else {
        let f = ext::format;
        let e = &estimate;
        let row = vec![
            f(e.p),
            f(h1),
            f(h2),
            f(e.best_ratio),
            f(e.upper_bound),
            f(e.gap),
            e.evaluations.to_string(),
            e.seed.to_string(),
            scanline_ratio.map_or_else(String::new, f),
        ];
        Table::new(&ESTIMATE_HEADER, vec![row])
    };
    let json = EstimateOutput { estimate, h1_deg: h1, h2_deg: h2, scanline_ratio, trace: trace.then_some(records) };
    out.output().emit(&json, table)?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct VerifyOutput {
    seed: u64,
    cases: usize,
    tol: f64,
    passed: bool,
    suites: Vec<SuiteReport>,
}

#[derive(Serialize)]
struct ReplayOutput {
    suite: Suite,
    case: usize,
    passed: bool,
    detail: Option<String>,
}

const VERIFY_HEADER: [&str; 4] = ["suite", "cases", "violations", "passed"];

fn run_verify(
    suite: &str,
    cases: usize,
    seed: u64,
    tol: f64,
    replay: Option<&PathBuf>,
    counterexample: Option<&PathBuf>,
    out: &OutArgs,
) -> CmdResult {
    if let Some(path) = replay {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
        let c = Counterexample::from_json(&text)
            .map_err(|e| Failure { code: "parse", message: format!("{}: {e}", path.display()) })?;
        let result = c.replay();
        let r = ReplayOutput { suite: c.suite, case: c.case, passed: result.is_ok(), detail: result.err() };
        let row = vec![c.suite.name().to_string(), "1".into(), u8::from(!r.passed).to_string(), r.passed.to_string()];
        out.output().emit(&r, Table::new(&VERIFY_HEADER, vec![row]))?;
        return Ok(if r.passed { ExitCode::SUCCESS } else { ExitCode::from(1) });
    }
    let suites: Vec<Suite> = if suite == "all" { Suite::ALL.to_vec() } else { vec![suite.parse::<Suite>()?] };
    let reports: Vec<SuiteReport> = suites.into_iter().map(|s| verify::run_suite(s, cases, seed, tol)).collect();
    let passed = reports.iter().all(SuiteReport::passed);
    let rows = reports
        .iter()
        .map(|r| {
            vec![r.suite.name().to_string(), r.cases.to_string(), r.violations.to_string(), r.passed().to_string()]
        })
        .collect();
    if let Some(c) = reports.iter().find_map(|r| r.first_counterexample.as_ref()) {
        match counterexample {
            Some(path) => std::fs::write(path, c.to_json()).map_err(|e| Failure::io(path, e))?,
            None => eprintln!("{}", c.to_json()),
        }
    }
    out.output().emit(&VerifyOutput { seed, cases, tol, passed, suites: reports }, Table::new(&VERIFY_HEADER, rows))?;
    Ok(if passed { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

#[derive(Serialize)]
struct FamilyOutput {
    family: Family,
    #[serde(with = "ext")]
    p: f64,
    phi_deg: f64,
    rows: Vec<kpratio::search::FamilyRow>,
}

const FAMILY_HEADER: [&str; 4] = ["parameter", "norm_h1", "norm_h2", "ratio"];

fn families(domain: &DomainArgs, family: &str, p: f64, phi: f64, params: &[f64], out: &OutArgs) -> CmdResult {
    let d = domain.load()?;
    let fam: Family = family.parse()?;
    let params = if params.is_empty() { fam.default_parameters() } else { params };
    let rows = family_table(&d, fam, p, params, phi.to_radians())?;
    let f = ext::format;
    let csv = rows.iter().map(|r| vec![f(r.parameter), f(r.norm_h1), f(r.norm_h2), f(r.ratio)]).collect();
    out.output().emit(&FamilyOutput { family: fam, p, phi_deg: phi, rows }, Table::new(&FAMILY_HEADER, csv))?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct PoincareOutput {
    #[serde(with = "ext")]
    p: f64,
    cells: usize,
    #[serde(rename = "C_p")]
    c_p: f64,
}

fn poincare(p: f64, cells: usize, out: &OutArgs) -> CmdResult {
    let c_p = kpratio::poincare::poincare_constant_with(p, cells)?;
    let row = vec![ext::format(p), cells.to_string(), ext::format(c_p)];
    out.output().emit(&PoincareOutput { p, cells, c_p }, Table::new(&["p", "cells", "C_p"], vec![row]))?;
    Ok(ExitCode::SUCCESS)
}

const SWEEP_HEADER: [&str; 7] = ["label", "h1_deg", "h2_deg", "best_ratio", "upper_bound", "gap", "evaluations"];

fn sweep(domain: &DomainArgs, p: f64, n_angles: usize, budget: usize, seed: u64, out: &OutArgs) -> CmdResult {
    let d = domain.load()?;
    let rows = directional_sweep(&d, p, n_angles, budget, seed)?;
    let f = ext::format;
    let csv = rows
        .iter()
        .map(|r| {
            let e = &r.estimate;
            vec![
                r.label.clone(),
                f(degrees(e.h1)),
                f(degrees(e.h2)),
                f(e.best_ratio),
                f(e.upper_bound),
                f(e.gap),
                e.evaluations.to_string(),
            ]
        })
        .collect();
    out.output().emit(&rows, Table::new(&SWEEP_HEADER, csv))?;
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> CmdResult {
    match &cli.command {
        Command::Analyze { domain, out } => analyze(domain, out),
        Command::Bounds { domain, p, out } => bounds(domain, *p, out),
        Command::Estimate { domain, p, h1, h2, budget, seed, n_lines, trace, out } => {
            estimate(domain, *p, *h1, *h2, *budget, *seed, *n_lines, *trace, out)
        }
        Command::Verify { suite, cases, seed, tol, replay, counterexample, out } => {
            run_verify(suite, *cases, *seed, *tol, replay.as_ref(), counterexample.as_ref(), out)
        }
        Command::Families { domain, family, p, phi, params, out } => families(domain, family, *p, *phi, params, out),
        Command::Poincare { p, cells, out } => poincare(*p, *cells, out),
        Command::Sweep { domain, p, n_angles, budget, seed, out } => sweep(domain, *p, *n_angles, *budget, *seed, out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("{}", serde_json::json!({ "error": f.code, "message": f.message }));
            ExitCode::from(2)
        }
    }
}
