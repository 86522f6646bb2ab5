//! Command line front end: exact Farey-graph queries, boundary products,
//! mapping class orbits, marking distances, join limits and neighborhood
//! tests, plus static plot-data emission.
//!
//! Output is deterministic for a fixed configuration and seed. Exit codes:
//! 0 ok, 2 parse error, 3 semantic error, 4 insufficient depth.

use std::fmt::Write as _;
use std::fs;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use curvex_core::action::{
    act_boundary, annular_projection_distance, canonical_twist_coordinate, classify,
    north_south_report, MappingClass, NTClass,
};
use curvex_core::boundary::{gromov_product, visual_distance, BoundaryPoint, Site};
use curvex_core::error::Error;
use curvex_core::join::{
    extract_limit, w_membership, ProductPoint, SequenceTrace, Universe, WeightedLamination,
};
use curvex_core::markings::{
    marking_corpus, marking_distance_bfs, max_projection_gap, mm_path, CappedDistance, GapWitness,
    Marking, MarkingMove,
};
use curvex_core::oracle::FareyUniverse;
use curvex_core::slopes::{
    farey_distance, farey_geodesic, intersection_number, is_edge, pivot_sequence,
    ContinuedFraction, Slope,
};
use curvex_core::{Int, Rational};

const DEFAULT_SEED: u64 = 20110 * 389; // fixed default for reproducible runs

type BigSlope = Slope<Int>;

#[derive(Parser)]
#[command(name = "curvex", version, about = "Exact Farey-graph and boundary toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct RunOpts {
    /// Truncation depth for boundary codes.
    #[arg(long, default_value_t = 40)]
    depth: usize,
    /// Window length for convergence verdicts.
    #[arg(long, default_value_t = 5)]
    window: usize,
    /// Tolerance for weight and ratio comparisons, as a fraction.
    #[arg(long, default_value = "1/10")]
    tolerance: String,
    /// Seed for randomized sweeps; CURVEX_SEED overrides.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Output format for row-oriented commands.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

impl RunOpts {
    fn seed(&self) -> u64 {
        match std::env::var("CURVEX_SEED") {
            Ok(v) => v.parse().unwrap_or(self.seed),
            Err(_) => self.seed,
        }
    }

    fn tolerance(&self) -> Result<Rational, Error> {
        parse_ratio(&self.tolerance)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Farey graph queries on exact slopes.
    Farey {
        #[command(subcommand)]
        op: FareyOp,
    },
    /// Gromov products, the visual metric and convergence checks.
    Boundary {
        #[command(subcommand)]
        op: BoundaryOp,
    },
    /// The matrix action on slopes and boundary points.
    Act {
        #[command(subcommand)]
        op: ActOp,
    },
    /// Iterate a matrix on a seed slope and report products with the
    /// attracting fixed point.
    Orbit {
        #[arg(long)]
        matrix: String,
        #[arg(long)]
        start: String,
        #[arg(long)]
        iters: u32,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Annular projection distance between two slopes.
    Project {
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
        #[arg(long)]
        about: String,
    },
    /// Marking graph distance, staged paths and projection gaps.
    Marking {
        #[command(subcommand)]
        op: MarkingOp,
    },
    /// Extract the limit of a recorded sequence over a universe.
    Limit {
        #[arg(long)]
        universe: String,
        #[arg(long)]
        input: String,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Neighborhood membership test for a product point.
    Wtest {
        #[arg(long)]
        universe: String,
        #[arg(long)]
        xi: String,
        #[arg(long)]
        point: String,
        #[arg(long)]
        j: u64,
        #[arg(long)]
        delta: String,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Exhaustive scenario sweeps.
    Sweep {
        #[command(subcommand)]
        op: SweepOp,
    },
    /// Emit Farey tessellation edges for external plotting.
    Tessellation {
        #[arg(long = "max-denominator", default_value_t = 12)]
        max_denominator: i64,
        /// Lower bound of the value window (integer).
        #[arg(long, default_value_t = 0)]
        lo: i64,
        /// Upper bound of the value window (integer).
        #[arg(long, default_value_t = 1)]
        hi: i64,
        #[command(flatten)]
        opts: RunOpts,
    },
}

#[derive(Subcommand)]
enum FareyOp {
    /// Exact graph distance.
    Dist { a: String, b: String },
    /// A witness geodesic.
    Geo { a: String, b: String },
    /// Geometric intersection number.
    Int { a: String, b: String },
    /// Is the pair an edge?
    Edge { a: String, b: String },
    /// Canonical continued fraction.
    Cf { a: String },
    /// Triangles crossed by the connecting geodesic.
    Pivot {
        a: String,
        b: String,
        #[command(flatten)]
        opts: RunOpts,
    },
}

#[derive(Subcommand)]
enum BoundaryOp {
    /// Gromov product of two sites from a base slope.
    Product {
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
        #[arg(long, default_value = "1/0")]
        base: String,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Visual distance `2^-(x|y)`.
    Visual {
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
        #[arg(long, default_value = "1/0")]
        base: String,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Does a comma-separated slope sequence converge to the target?
    Converges {
        #[arg(long)]
        seq: String,
        #[arg(long)]
        target: String,
        #[arg(long, default_value = "1/0")]
        base: String,
        #[command(flatten)]
        opts: RunOpts,
    },
}

#[derive(Subcommand)]
enum ActOp {
    /// Image of a slope.
    Slope {
        #[arg(long)]
        matrix: String,
        #[arg(long)]
        slope: String,
    },
    /// Image of a boundary point.
    Point {
        #[arg(long)]
        matrix: String,
        #[arg(long)]
        point: String,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Trace classification with fixed data.
    Classify {
        #[arg(long)]
        matrix: String,
    },
    /// Twist coordinate of a slope about a curve.
    Twist {
        #[arg(long)]
        slope: String,
        #[arg(long)]
        about: String,
    },
}

#[derive(Subcommand)]
enum MarkingOp {
    /// Marking graph distance (breadth first search, capped).
    Dist {
        m1: String,
        m2: String,
        #[arg(long, default_value_t = 60)]
        cap: u64,
    },
    /// The staged twist-and-swap path.
    Path { m1: String, m2: String },
    /// Maximal projection gap and its witness.
    Gap { m1: String, m2: String },
}

#[derive(Subcommand)]
enum SweepOp {
    /// Compare pivot distances against the brute-force oracle on all
    /// pairs up to a denominator bound.
    Farey {
        #[arg(long = "max-denominator", default_value_t = 12)]
        max_denominator: i64,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Projection-gap statistics over a seeded marking corpus.
    Marking {
        #[arg(long, default_value_t = 50)]
        pairs: usize,
        #[command(flatten)]
        opts: RunOpts,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::Parse(_) | Error::ZeroSlope | Error::BadContinuedFraction(_) => 2,
                Error::InsufficientDepth { .. } | Error::IndistinguishableAtDepth { .. } => 4,
                _ => 3,
            };
            ExitCode::from(code)
        }
    }
}

fn parse_ratio(s: &str) -> Result<Rational, Error> {
    curvex_core::join::parse_ratio(s)
}

fn parse_site(s: &str) -> Result<Site<Int>, Error> {
    let t = s.trim();
    if t.starts_with('{') {
        let v: Value =
            serde_json::from_str(t).map_err(|e| Error::Parse(format!("bad point json: {e}")))?;
        Ok(Site::Ideal(BoundaryPoint::from_json(&v)?))
    } else {
        Ok(Site::Vertex(t.parse()?))
    }
}

fn parse_point(s: &str) -> Result<BoundaryPoint<Int>, Error> {
    let t = s.trim();
    if t.starts_with('{') {
        let v: Value =
            serde_json::from_str(t).map_err(|e| Error::Parse(format!("bad point json: {e}")))?;
        BoundaryPoint::from_json(&v)
    } else {
        Err(Error::Parse("expected a boundary point JSON object".into()))
    }
}

fn read_json(path: &str) -> Result<Value, Error> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("cannot read {path}: {e}")))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{path}: {e}")))
}

fn slope_x(s: &Slope<i64>) -> String {
    if s.is_infinity() {
        "inf".to_string()
    } else {
        format!("{:.6}", *s.numer() as f64 / *s.denom() as f64)
    }
}

fn rows_out(rows: Vec<Vec<(&'static str, Value)>>, format: Format) -> String {
    let mut out = String::new();
    match format {
        Format::Json => {
            for row in rows {
                let obj: serde_json::Map<String, Value> = row
                    .into_iter()
                    .map(|(k, v)| (k.to_string(), v))
                    .collect();
                writeln!(out, "{}", Value::Object(obj)).unwrap();
            }
        }
        Format::Csv => {
            if let Some(first) = rows.first() {
                let header: Vec<&str> = first.iter().map(|(k, _)| *k).collect();
                writeln!(out, "{}", header.join(",")).unwrap();
            }
            for row in rows {
                let cells: Vec<String> = row
                    .into_iter()
                    .map(|(_, v)| match v {
                        Value::String(s) => s,
                        other => other.to_string(),
                    })
                    .collect();
                writeln!(out, "{}", cells.join(",")).unwrap();
            }
        }
    }
    out
}

fn run(command: Command) -> Result<String, Error> {
    match command {
        Command::Farey { op } => run_farey(op),
        Command::Boundary { op } => run_boundary(op),
        Command::Act { op } => run_act(op),
        Command::Orbit {
            matrix,
            start,
            iters,
            opts,
        } => run_orbit(&matrix, &start, iters, &opts),
        Command::Project { x, y, about } => {
            let x: BigSlope = x.parse()?;
            let y: BigSlope = y.parse()?;
            let about: BigSlope = about.parse()?;
            let d = annular_projection_distance(&x, &y, &about)?;
            Ok(format!("{d}\n"))
        }
        Command::Marking { op } => run_marking(op),
        Command::Limit {
            universe,
            input,
            opts,
        } => run_limit(&universe, &input, &opts),
        Command::Wtest {
            universe,
            xi,
            point,
            j,
            delta,
            opts,
        } => run_wtest(&universe, &xi, &point, j, &delta, &opts),
        Command::Sweep { op } => run_sweep(op),
        Command::Tessellation {
            max_denominator,
            lo,
            hi,
            opts,
        } => run_tessellation(max_denominator, lo, hi, &opts),
    }
}

fn run_farey(op: FareyOp) -> Result<String, Error> {
    match op {
        FareyOp::Dist { a, b } => {
            let a: BigSlope = a.parse()?;
            let b: BigSlope = b.parse()?;
            Ok(format!("{}\n", farey_distance(&a, &b)))
        }
        FareyOp::Geo { a, b } => {
            let a: BigSlope = a.parse()?;
            let b: BigSlope = b.parse()?;
            let path: Vec<String> = farey_geodesic(&a, &b)
                .iter()
                .map(ToString::to_string)
                .collect();
            Ok(format!("{}\n", path.join(" ")))
        }
        FareyOp::Int { a, b } => {
            let a: BigSlope = a.parse()?;
            let b: BigSlope = b.parse()?;
            Ok(format!("{}\n", intersection_number(&a, &b)))
        }
        FareyOp::Edge { a, b } => {
            let a: BigSlope = a.parse()?;
            let b: BigSlope = b.parse()?;
            Ok(format!("{}\n", is_edge(&a, &b)))
        }
        FareyOp::Cf { a } => {
            let a: BigSlope = a.parse()?;
            Ok(format!("{}\n", ContinuedFraction::of_slope(&a)?))
        }
        FareyOp::Pivot { a, b, opts } => {
            let a: BigSlope = a.parse()?;
            let b: BigSlope = b.parse()?;
            let pv = pivot_sequence(&a, &b)?;
            let rows: Vec<Vec<(&'static str, Value)>> = pv
                .triangles()
                .iter()
                .enumerate()
                .map(|(i, t)| {
                    vec![
                        ("index", json!(i)),
                        ("a", json!(t[0].to_string())),
                        ("b", json!(t[1].to_string())),
                        ("c", json!(t[2].to_string())),
                    ]
                })
                .collect();
            Ok(rows_out(rows, opts.format))
        }
    }
}

fn run_boundary(op: BoundaryOp) -> Result<String, Error> {
    match op {
        BoundaryOp::Product { x, y, base, opts } => {
            let est = gromov_product(&parse_site(&x)?, &parse_site(&y)?, &base.parse()?, opts.depth)?;
            Ok(format!(
                "{}\n",
                json!({ "lower": est.lower, "exact": est.exact })
            ))
        }
        BoundaryOp::Visual { x, y, base, opts } => {
            let d = visual_distance(&parse_site(&x)?, &parse_site(&y)?, &base.parse()?, opts.depth)?;
            Ok(format!("{d}\n"))
        }
        BoundaryOp::Converges {
            seq,
            target,
            base,
            opts,
        } => {
            let slopes: Vec<BigSlope> = seq
                .split(',')
                .map(|t| t.trim().parse())
                .collect::<Result<_, _>>()?;
            let target = parse_point(&target)?;
            let ok = curvex_core::boundary::converges_to(
                &slopes,
                &target,
                &base.parse()?,
                opts.depth,
                opts.window,
            );
            Ok(format!("{ok}\n"))
        }
    }
}

fn run_act(op: ActOp) -> Result<String, Error> {
    match op {
        ActOp::Slope { matrix, slope } => {
            let m: MappingClass<Int> = matrix.parse()?;
            let s: BigSlope = slope.parse()?;
            Ok(format!("{}\n", m.act_slope(&s)))
        }
        ActOp::Point {
            matrix,
            point,
            opts,
        } => {
            let m: MappingClass<Int> = matrix.parse()?;
            let p = parse_point(&point)?;
            let image = act_boundary(&m, &p, opts.depth);
            Ok(format!("{}\n", image.to_json(opts.depth)))
        }
        ActOp::Classify { matrix } => {
            let m: MappingClass<Int> = matrix.parse()?;
            let out = match classify(&m) {
                NTClass::FiniteOrder => json!({ "kind": "finite-order" }),
                NTClass::TwistReducible { about } => json!({
                    "kind": "twist-reducible",
                    "about": about.to_string(),
                }),
                NTClass::PseudoAnosov {
                    attracting,
                    repelling,
                } => json!({
                    "kind": "pseudo-anosov",
                    "attracting": BoundaryPoint::QuadraticIrrational(attracting).to_json(0),
                    "repelling": BoundaryPoint::QuadraticIrrational(repelling).to_json(0),
                }),
            };
            Ok(format!("{out}\n"))
        }
        ActOp::Twist { slope, about } => {
            let s: BigSlope = slope.parse()?;
            let about: BigSlope = about.parse()?;
            Ok(format!("{}\n", canonical_twist_coordinate(&s, &about)?))
        }
    }
}

fn run_orbit(matrix: &str, start: &str, iters: u32, opts: &RunOpts) -> Result<String, Error> {
    let m: MappingClass<Int> = matrix.parse()?;
    let start: BigSlope = start.parse()?;
    let report = north_south_report(&m, &[start], iters, opts.depth)?;
    let rows: Vec<Vec<(&'static str, Value)>> = report.seeds[0]
        .1
        .iter()
        .map(|r| {
            vec![
                ("iter", json!(r.iter)),
                ("slope", json!(r.slope.to_string())),
                ("product_with_target", json!(r.product_with_target)),
            ]
        })
        .collect();
    Ok(rows_out(rows, opts.format))
}

fn run_marking(op: MarkingOp) -> Result<String, Error> {
    match op {
        MarkingOp::Dist { m1, m2, cap } => {
            let m1: Marking<Int> = m1.parse()?;
            let m2: Marking<Int> = m2.parse()?;
            match marking_distance_bfs(&m1, &m2, cap) {
                CappedDistance::Within(d) => Ok(format!("{d}\n")),
                CappedDistance::ExceedsCap => Ok("exceeds-cap\n".to_string()),
            }
        }
        MarkingOp::Path { m1, m2 } => {
            let m1: Marking<Int> = m1.parse()?;
            let m2: Marking<Int> = m2.parse()?;
            let path = mm_path(&m1, &m2);
            let mut tokens = Vec::new();
            for mv in &path.moves {
                match mv {
                    MarkingMove::Twist(k) => tokens.push(format!("T{k:+}")),
                    MarkingMove::Swap => tokens.push("S".to_string()),
                }
            }
            Ok(format!(
                "{}\nlength {}\n",
                if tokens.is_empty() {
                    "(empty)".to_string()
                } else {
                    tokens.join(" ")
                },
                path.length()
            ))
        }
        MarkingOp::Gap { m1, m2 } => {
            let m1: Marking<Int> = m1.parse()?;
            let m2: Marking<Int> = m2.parse()?;
            let (witness, d) = max_projection_gap(&m1, &m2);
            let w = match witness {
                GapWitness::WholeSurface => "whole".to_string(),
                GapWitness::Annulus(c) => format!("annulus {c}"),
            };
            Ok(format!(
                "{}\n",
                json!({ "witness": w, "diameter": d.to_string() })
            ))
        }
    }
}

fn run_limit(universe: &str, input: &str, opts: &RunOpts) -> Result<String, Error> {
    let uni = Universe::from_json(&read_json(universe)?)?;
    let trace = SequenceTrace::from_json(&uni, &read_json(input)?)?;
    let seq: Vec<WeightedLamination<Int>> = trace.laminations()?;
    let ex = extract_limit(&seq, &uni, &opts.tolerance()?, opts.depth, opts.window)?;
    Ok(format!(
        "{}\n",
        json!({
            "indices": ex.indices,
            "limit": ex.limit.to_json(opts.depth),
        })
    ))
}

fn run_wtest(
    universe: &str,
    xi: &str,
    point: &str,
    j: u64,
    delta: &str,
    opts: &RunOpts,
) -> Result<String, Error> {
    let uni = Universe::from_json(&read_json(universe)?)?;
    let xi = WeightedLamination::from_json(&uni, &read_json(xi)?)?;
    let point = ProductPoint::from_json(&uni, &read_json(point)?)?;
    let delta = parse_ratio(delta)?;
    let ok = w_membership(&point, &xi, j, &delta, &uni, opts.depth)?;
    Ok(format!("{ok}\n"))
}

fn run_sweep(op: SweepOp) -> Result<String, Error> {
    match op {
        SweepOp::Farey {
            max_denominator,
            opts,
        } => {
            let max_den = max_denominator.max(1);
            let mut slopes: Vec<Slope<i64>> = vec![Slope::infinity()];
            for q in 1..=max_den {
                for p in 0..=q {
                    if num_integer::gcd(p, q) == 1 {
                        slopes.push(Slope::new(p, q));
                    }
                }
            }
            slopes.sort();
            let oracle = FareyUniverse::build(8 * max_den, (-2, 1), (3, 1));
            let mut rows = Vec::new();
            let mut cases = 0u64;
            let mut mismatches = 0u64;
            for (i, a) in slopes.iter().enumerate() {
                let dist = oracle.bfs_from(a);
                for b in slopes.iter().skip(i + 1) {
                    cases += 1;
                    let got = farey_distance(a, b);
                    let want = dist[oracle.vertex_id(b).expect("in universe") as usize] as u64;
                    if got != want {
                        mismatches += 1;
                        rows.push(vec![
                            ("case", json!(format!("{a}|{b}"))),
                            ("pivot", json!(got)),
                            ("oracle", json!(want)),
                        ]);
                    }
                }
            }
            rows.push(vec![
                ("case", json!("summary")),
                ("pivot", json!(cases)),
                ("oracle", json!(mismatches)),
            ]);
            Ok(rows_out(rows, opts.format))
        }
        SweepOp::Marking { pairs, opts } => {
            let corpus = marking_corpus::<Int>(opts.seed(), pairs, 6, 24);
            let mut rows = Vec::new();
            for (i, (m1, m2)) in corpus.iter().enumerate() {
                let bfs = match marking_distance_bfs(m1, m2, 40) {
                    CappedDistance::Within(d) => d,
                    CappedDistance::ExceedsCap => continue,
                };
                let (_, gap) = max_projection_gap(m1, m2);
                let len = mm_path(m1, m2).length();
                rows.push(vec![
                    ("case", json!(i)),
                    ("bfs", json!(bfs)),
                    ("gap", json!(gap.to_string())),
                    ("path_length", json!(len.to_string())),
                ]);
            }
            Ok(rows_out(rows, opts.format))
        }
    }
}

fn run_tessellation(max_den: i64, lo: i64, hi: i64, opts: &RunOpts) -> Result<String, Error> {
    if max_den < 1 || lo >= hi {
        return Err(Error::Parse("need max-denominator >= 1 and lo < hi".into()));
    }
    let uni = FareyUniverse::build(max_den, (lo, 1), (hi, 1));
    let mut edges: Vec<(Slope<i64>, Slope<i64>)> = Vec::new();
    let verts = uni.vertices();
    for (i, u) in verts.iter().enumerate() {
        for v in verts.iter().skip(i + 1) {
            if is_edge(u, v) {
                let (a, b) = if u <= v { (u, v) } else { (v, u) };
                edges.push((a.clone(), b.clone()));
            }
        }
    }
    edges.sort();
    let rows: Vec<Vec<(&'static str, Value)>> = edges
        .iter()
        .map(|(u, v)| {
            vec![
                ("u", json!(u.to_string())),
                ("v", json!(v.to_string())),
                ("ux", json!(slope_x(u))),
                ("vx", json!(slope_x(v))),
            ]
        })
        .collect();
    Ok(rows_out(rows, opts.format))
}
