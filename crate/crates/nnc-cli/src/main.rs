//! `nnc` — workbench front end for the nearest-neighbor-chain algorithm
//! crate: seeded instance generation, solving, oracle comparison, parameter
//! certification, benchmarking, and SVG/JSON emission.
//!
//! Exit codes: 0 success, 2 validation error, 3 oracle mismatch,
//! 4 infeasible or degenerate input.

mod formats;
mod svg;

use std::collections::BTreeSet;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use formats::*;
use nnc::geom::{LpMetric, Point, TieBreaker};
use nnc::matching::{gale_shapley_oracle, narcissistic_match, verify_stability, Side, Stability};
use nnc::mftsp::{
    mftsp_oracle, mftsp_oracle_matrix, mftsp_oracle_paths, mftsp_snnc, mftsp_snnc_paths,
    mnn_strategy_random, mnn_strategy_random_paths, DistanceMatrix,
};
use nnc::motorcycle::{mc_oracle, motorcycle_graph, statuses_agree, Status};
use nnc::params::{analytic_2d_l2, falsify_params, find_params, Arity, Certificate, Falsification};
use nnc::snn::SnnConfig;
use nnc::steiner::steiner_mftsp;
use nnc::{cover, gen};

#[derive(Parser)]
#[command(name = "nnc", version, about = "Nearest-neighbor-chain workbench")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Kind {
    Points,
    Paths,
    Motorcycles,
    Matching,
    Cover,
    Graph,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Algorithm {
    TspSnnc,
    TspOracle,
    TspMnn,
    Steiner,
    Motorcycle,
    MotorcycleOracle,
    Match,
    MatchGsLeft,
    MatchGsRight,
    Cover,
    CoverExact,
    CoverGreedy,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum BenchKind {
    Cover,
    Tsp,
}

fn algo_name(a: Algorithm) -> &'static str {
    match a {
        Algorithm::TspSnnc => "tsp-snnc",
        Algorithm::TspOracle => "tsp-oracle",
        Algorithm::TspMnn => "tsp-mnn",
        Algorithm::Steiner => "steiner",
        Algorithm::Motorcycle => "motorcycle",
        Algorithm::MotorcycleOracle => "motorcycle-oracle",
        Algorithm::Match => "match",
        Algorithm::MatchGsLeft => "match-gs-left",
        Algorithm::MatchGsRight => "match-gs-right",
        Algorithm::Cover => "cover",
        Algorithm::CoverExact => "cover-exact",
        Algorithm::CoverGreedy => "cover-greedy",
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a seeded instance file.
    Gen {
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Element count (points, paths, motorcycles, matching pairs).
        #[arg(long, default_value_t = 32)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        /// L_p exponent ("1", "2", "inf", ...).
        #[arg(long, default_value = "2")]
        p: String,
        /// Attributes per agent (matching).
        #[arg(long, default_value_t = 2)]
        k: usize,
        /// Client count (cover).
        #[arg(long, default_value_t = 40)]
        clients: usize,
        /// Server count (cover).
        #[arg(long, default_value_t = 10)]
        servers: usize,
        /// Grid rows (graph).
        #[arg(long, default_value_t = 5)]
        rows: usize,
        /// Grid cols (graph).
        #[arg(long, default_value_t = 6)]
        cols: usize,
        /// Site count (graph).
        #[arg(long, default_value_t = 8)]
        sites: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve an instance and emit a run report.
    Solve {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        algorithm: Algorithm,
        /// Also run the matching oracle and record a verdict; exit 3 on
        /// mismatch.
        #[arg(long)]
        oracle: bool,
        /// Use certified soft parameters for tsp-snnc (slower to set up)
        /// instead of the exact-mode index.
        #[arg(long)]
        certified: bool,
        /// Seed for randomized strategies (tsp-mnn).
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        svg: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the brute-force oracle for an instance.
    Oracle {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare two run reports for solution equivalence; exit 3 on
    /// mismatch.
    Compare {
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: PathBuf,
    },
    /// Find and certify valid soft nearest-neighbor parameters.
    Params {
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value = "2")]
        p: String,
        /// "two" or "three".
        #[arg(long, default_value = "two")]
        arity: String,
        #[arg(long, default_value_t = 100_000)]
        falsify_effort: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Timing rows (CSV) over a size/seed grid.
    Bench {
        #[arg(long, value_enum)]
        kind: BenchKind,
        /// Comma-separated sizes.
        #[arg(long, value_delimiter = ',')]
        sizes: Vec<usize>,
        /// Comma-separated seeds.
        #[arg(long, value_delimiter = ',', default_value = "0")]
        seeds: Vec<u64>,
        #[arg(long, default_value_t = 5)]
        repeats: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render an instance (optionally with a result report) as SVG.
    Render {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

enum CliError {
    Validation(String),
    Mismatch(String),
    Infeasible(String),
}

impl From<nnc::Error> for CliError {
    fn from(e: nnc::Error) -> Self {
        match e {
            nnc::Error::Degenerate(_) | nnc::Error::Infeasible(_) => {
                CliError::Infeasible(e.to_string())
            }
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Validation(format!("bad JSON: {e}"))
    }
}

type CliResult<T> = Result<T, CliError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Validation(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(CliError::Mismatch(m)) => {
            eprintln!("oracle mismatch: {m}");
            ExitCode::from(3)
        }
        Err(CliError::Infeasible(m)) => {
            eprintln!("infeasible or degenerate input: {m}");
            ExitCode::from(4)
        }
    }
}

/// NNC_SEED overrides --seed everywhere.
fn effective_seed(cli_seed: u64) -> u64 {
    std::env::var("NNC_SEED")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(cli_seed)
}

fn emit(out: &Option<PathBuf>, content: &str) -> CliResult<()> {
    match out {
        Some(path) => fs::write(path, content)?,
        None => print!("{content}"),
    }
    Ok(())
}

fn load_instance(path: &PathBuf) -> CliResult<(InstanceFile, String)> {
    let raw = fs::read_to_string(path)?;
    let file: InstanceFile = serde_json::from_str(&raw)?;
    if file.version != SCHEMA_VERSION {
        return Err(CliError::Validation(format!(
            "unsupported schema version {}",
            file.version
        )));
    }
    let canonical = to_canonical_json(&file);
    let dig = digest(canonical.as_bytes());
    Ok((file, dig))
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.cmd {
        Cmd::Gen {
            kind,
            seed,
            n,
            dim,
            p,
            k,
            clients,
            servers,
            rows,
            cols,
            sites,
            out,
        } => {
            let seed = effective_seed(seed);
            let file = generate(kind, seed, n, dim, &p, k, clients, servers, rows, cols, sites)?;
            emit(&out, &to_canonical_json(&file))
        }
        Cmd::Solve {
            input,
            algorithm,
            oracle,
            certified,
            seed,
            svg: svg_out,
            out,
        } => {
            let (file, dig) = load_instance(&input)?;
            let seed = effective_seed(seed);
            let t0 = Instant::now();
            let (result, counters) = solve(&file.instance, algorithm, certified, seed)?;
            let wall_ms = t0.elapsed().as_secs_f64() * 1e3;
            let verdict = if oracle {
                Some(oracle_verdict(&file.instance, algorithm, &result, seed)?)
            } else {
                None
            };
            if let Some(path) = &svg_out {
                match svg::render(&file.instance, Some(&result)) {
                    Some(s) => fs::write(path, s)?,
                    None => {
                        return Err(CliError::Validation(
                            "no renderer for this instance kind/dimension".into(),
                        ))
                    }
                }
            }
            let mismatch = verdict.as_ref().is_some_and(|v| v.verdict != "match");
            let detail = verdict.as_ref().map(|v| v.detail.clone());
            let report = RunReport {
                version: SCHEMA_VERSION,
                algorithm: algo_name(algorithm).into(),
                instance_digest: dig,
                result,
                counters,
                wall_ms,
                oracle: verdict,
            };
            emit(&out, &to_canonical_json(&report))?;
            if mismatch {
                return Err(CliError::Mismatch(detail.unwrap_or_default()));
            }
            Ok(())
        }
        Cmd::Oracle { input, out } => {
            let (file, dig) = load_instance(&input)?;
            let algorithm = match file.instance {
                Instance::Points { .. } | Instance::Paths { .. } => Algorithm::TspOracle,
                Instance::Motorcycles { .. } => Algorithm::MotorcycleOracle,
                Instance::Matching { .. } => Algorithm::MatchGsLeft,
                Instance::Cover { .. } => Algorithm::CoverExact,
                Instance::Graph { .. } => Algorithm::Steiner,
            };
            let t0 = Instant::now();
            let (result, counters) = solve(&file.instance, algorithm, false, 0)?;
            let report = RunReport {
                version: SCHEMA_VERSION,
                algorithm: algo_name(algorithm).into(),
                instance_digest: dig,
                result,
                counters,
                wall_ms: t0.elapsed().as_secs_f64() * 1e3,
                oracle: None,
            };
            emit(&out, &to_canonical_json(&report))
        }
        Cmd::Compare { left, right } => {
            let l: RunReport = serde_json::from_str(&fs::read_to_string(&left)?)?;
            let r: RunReport = serde_json::from_str(&fs::read_to_string(&right)?)?;
            match compare_reports(&l, &r) {
                Ok(()) => {
                    println!("match");
                    Ok(())
                }
                Err(detail) => Err(CliError::Mismatch(detail)),
            }
        }
        Cmd::Params {
            dim,
            p,
            arity,
            falsify_effort,
            out,
        } => {
            let pv = parse_p(&p).map_err(CliError::Validation)?;
            let metric = LpMetric::new(pv, dim)?;
            let ar = match arity.as_str() {
                "two" => Arity::TwoWay,
                "three" => Arity::ThreeWay,
                other => {
                    return Err(CliError::Validation(format!(
                        "arity must be 'two' or 'three', got {other}"
                    )))
                }
            };
            let found = find_params(metric, ar)?;
            let fals = falsify_params(&found, metric, falsify_effort);
            let (cert, samples, cseed, margin) = match &found.certificate {
                Certificate::VolumeBound {
                    samples,
                    seed,
                    margin,
                } => ("volume", *samples, *seed, *margin),
                Certificate::SurfaceBound {
                    samples,
                    seed,
                    margin,
                } => ("surface", *samples, *seed, *margin),
                Certificate::Analytic2d => ("analytic", 0, 0, 0.0),
            };
            let json = ParamsJson {
                dim,
                p: format_p(pv),
                arity: arity.clone(),
                epsilon: found.epsilon,
                k: found.k,
                certificate: cert.into(),
                certificate_samples: samples,
                certificate_seed: cseed,
                certificate_margin: margin,
                analytic_epsilon: (dim == 2 && pv == 2.0 && ar == Arity::TwoWay)
                    .then(|| analytic_2d_l2().epsilon),
                falsification: match fals {
                    Falsification::Unfalsified => "unfalsified".into(),
                    Falsification::Falsified(_) => "falsified".into(),
                },
                falsify_effort,
            };
            emit(&out, &to_canonical_json(&json))
        }
        Cmd::Bench {
            kind,
            sizes,
            seeds,
            repeats,
            out,
        } => {
            let mut csv = String::from("kind,n,seed,median_ms,iterations,connections,queries,merges\n");
            for &n in &sizes {
                for &seed in &seeds {
                    let row = bench_row(kind, n, seed, repeats.max(1))?;
                    csv.push_str(&row);
                }
            }
            emit(&out, &csv)
        }
        Cmd::Render { input, report, out } => {
            let (file, _) = load_instance(&input)?;
            let result = match &report {
                Some(path) => {
                    let rep: RunReport = serde_json::from_str(&fs::read_to_string(path)?)?;
                    Some(rep.result)
                }
                None => None,
            };
            match svg::render(&file.instance, result.as_ref()) {
                Some(s) => {
                    fs::write(&out, s)?;
                    Ok(())
                }
                None => Err(CliError::Validation(
                    "no renderer for this instance kind/dimension".into(),
                )),
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn generate(
    kind: Kind,
    seed: u64,
    n: usize,
    dim: usize,
    p: &str,
    k: usize,
    clients: usize,
    servers: usize,
    rows: usize,
    cols: usize,
    sites: usize,
) -> CliResult<InstanceFile> {
    let pv = parse_p(p).map_err(CliError::Validation)?;
    let instance = match kind {
        Kind::Points => {
            let metric = LpMetric::new(pv, dim)?;
            let pts = gen::gen_points(n, metric, seed)?;
            Instance::Points {
                dim,
                p: format_p(pv),
                coords: pts.into_iter().map(|pt| pt.0).collect(),
            }
        }
        Kind::Paths => {
            let metric = LpMetric::new(pv, dim)?;
            let pts = gen::gen_points(2 * n, metric, seed)?;
            Instance::Paths {
                dim,
                p: format_p(pv),
                segments: pts
                    .chunks_exact(2)
                    .map(|c| [c[0].0.clone(), c[1].0.clone()])
                    .collect(),
            }
        }
        Kind::Motorcycles => {
            let bikes = gen::gen_motorcycles(n, seed)?;
            Instance::Motorcycles {
                motorcycles: bikes
                    .into_iter()
                    .map(|m| McJson {
                        start: m.start,
                        dir: m.dir,
                        speed: m.speed,
                    })
                    .collect(),
            }
        }
        Kind::Matching => {
            let inst = gen::gen_matching(n, k, seed)?;
            Instance::Matching {
                k,
                left: inst.left,
                right: inst.right,
            }
        }
        Kind::Cover => {
            let inst = gen::gen_cover(clients, servers, seed)?;
            Instance::Cover {
                clients: inst.clients,
                servers: inst.servers,
            }
        }
        Kind::Graph => {
            let g = gen::gen_graph(rows, cols, sites, seed)?;
            let mut edges = Vec::new();
            for u in 0..g.node_count() {
                for &(v, w) in g.neighbors(u) {
                    if v > u {
                        edges.push((u, v, w));
                    }
                }
            }
            Instance::Graph {
                nodes: g.node_count(),
                edges,
                sites: g.sites,
            }
        }
    };
    let generator = format!(
        "{} seed={seed} n={n} dim={dim} p={p} k={k} clients={clients} servers={servers} rows={rows} cols={cols} sites={sites}",
        match kind {
            Kind::Points => "points",
            Kind::Paths => "paths",
            Kind::Motorcycles => "motorcycles",
            Kind::Matching => "matching",
            Kind::Cover => "cover",
            Kind::Graph => "graph",
        }
    );
    Ok(InstanceFile {
        version: SCHEMA_VERSION,
        seed,
        generator,
        instance,
    })
}

fn status_json(s: &Status) -> StatusJson {
    match s {
        Status::Escaped => StatusJson::Escaped,
        Status::Crashed { into, point, time } => StatusJson::Crashed {
            into: *into,
            point: *point,
            time: *time,
        },
    }
}

fn tsp_config(certified: bool, metric: LpMetric) -> CliResult<SnnConfig> {
    if certified {
        Ok(SnnConfig::Certified(find_params(metric, Arity::ThreeWay)?))
    } else {
        Ok(SnnConfig::Exact)
    }
}

fn solve(
    instance: &Instance,
    algorithm: Algorithm,
    certified: bool,
    seed: u64,
) -> CliResult<(RunResult, Counters)> {
    let kind_error = || {
        CliError::Validation(format!(
            "algorithm {algorithm:?} does not apply to instance kind {}",
            instance.kind()
        ))
    };
    let mut counters = Counters::default();
    let result = match (algorithm, instance) {
        (Algorithm::TspSnnc, Instance::Points { dim, p, coords }) => {
            let (pts, metric) = points_of(coords, *dim, p).map_err(CliError::Validation)?;
            let config = tsp_config(certified, metric)?;
            let (tour, stats) = mftsp_snnc(&pts, metric, &config)?;
            counters.iterations = stats.iterations;
            counters.connections = stats.connections;
            counters.pushes = stats.pushes;
            counters.pops = stats.pops;
            counters.queries = stats.snn_queries;
            RunResult::Tour {
                order: tour.order,
                length: tour.length,
            }
        }
        (Algorithm::TspOracle, Instance::Points { dim, p, coords }) => {
            let (pts, metric) = points_of(coords, *dim, p).map_err(CliError::Validation)?;
            let tour = mftsp_oracle(&pts, metric)?;
            RunResult::Tour {
                order: tour.order,
                length: tour.length,
            }
        }
        (Algorithm::TspMnn, Instance::Points { dim, p, coords }) => {
            let (pts, metric) = points_of(coords, *dim, p).map_err(CliError::Validation)?;
            let tour = mnn_strategy_random(&pts, metric, seed)?;
            RunResult::Tour {
                order: tour.order,
                length: tour.length,
            }
        }
        (Algorithm::TspSnnc, Instance::Paths { dim, p, segments }) => {
            let (segs, metric) = segments_of(segments, *dim, p)?;
            let config = tsp_config(certified, metric)?;
            let (plan, stats) = mftsp_snnc_paths(&segs, metric, &config)?;
            counters.iterations = stats.iterations;
            counters.connections = stats.connections;
            counters.pushes = stats.pushes;
            counters.pops = stats.pops;
            counters.queries = stats.snn_queries;
            RunResult::Plan {
                edges: plan.edges,
                closing: plan.closing,
                length: plan.length,
            }
        }
        (Algorithm::TspOracle, Instance::Paths { dim, p, segments }) => {
            let (segs, metric) = segments_of(segments, *dim, p)?;
            let plan = mftsp_oracle_paths(&segs, metric)?;
            RunResult::Plan {
                edges: plan.edges,
                closing: plan.closing,
                length: plan.length,
            }
        }
        (Algorithm::TspMnn, Instance::Paths { dim, p, segments }) => {
            let (segs, metric) = segments_of(segments, *dim, p)?;
            let plan = mnn_strategy_random_paths(&segs, metric, seed)?;
            RunResult::Plan {
                edges: plan.edges,
                closing: plan.closing,
                length: plan.length,
            }
        }
        (Algorithm::Steiner, Instance::Graph { nodes, edges, sites }) => {
            let g = graph_of(*nodes, edges, sites).map_err(CliError::Validation)?;
            let t = steiner_mftsp(&g)?;
            RunResult::SiteTour {
                site_order: t.site_order,
                length: t.length,
                walk: t.walk,
            }
        }
        (Algorithm::Motorcycle, Instance::Motorcycles { motorcycles }) => {
            let bikes = motorcycles_of(motorcycles).map_err(CliError::Validation)?;
            let (st, stats) = motorcycle_graph(&bikes)?;
            counters.queries = stats.queries;
            counters.clips = stats.clips;
            counters.cycles = stats.cycles;
            RunResult::Motorcycles {
                statuses: st.iter().map(status_json).collect(),
            }
        }
        (Algorithm::MotorcycleOracle, Instance::Motorcycles { motorcycles }) => {
            let bikes = motorcycles_of(motorcycles).map_err(CliError::Validation)?;
            let st = mc_oracle(&bikes)?;
            RunResult::Motorcycles {
                statuses: st.iter().map(status_json).collect(),
            }
        }
        (Algorithm::Match, Instance::Matching { k, left, right }) => {
            let inst = matching_of(*k, left, right).map_err(CliError::Validation)?;
            let m = narcissistic_match(&inst)?;
            RunResult::Matching { pairs: m.pairs }
        }
        (Algorithm::MatchGsLeft, Instance::Matching { k, left, right }) => {
            let inst = matching_of(*k, left, right).map_err(CliError::Validation)?;
            let m = gale_shapley_oracle(&inst, Side::Left)?;
            RunResult::Matching { pairs: m.pairs }
        }
        (Algorithm::MatchGsRight, Instance::Matching { k, left, right }) => {
            let inst = matching_of(*k, left, right).map_err(CliError::Validation)?;
            let m = gale_shapley_oracle(&inst, Side::Right)?;
            RunResult::Matching { pairs: m.pairs }
        }
        (Algorithm::Cover, Instance::Cover { clients, servers }) => {
            let inst = cover_of(clients, servers).map_err(CliError::Validation)?;
            let (sol, stats) = cover::cover_nnc(&inst)?;
            counters.merges = stats.merges;
            RunResult::Cover {
                cost: sol.cost(),
                radii: sol.radii,
            }
        }
        (Algorithm::CoverExact, Instance::Cover { clients, servers }) => {
            let inst = cover_of(clients, servers).map_err(CliError::Validation)?;
            let sol = cover::cover_exact(&inst)?;
            RunResult::Cover {
                cost: sol.cost(),
                radii: sol.radii,
            }
        }
        (Algorithm::CoverGreedy, Instance::Cover { clients, servers }) => {
            let inst = cover_of(clients, servers).map_err(CliError::Validation)?;
            let sol = cover::cover_greedy_alt(&inst)?;
            RunResult::Cover {
                cost: sol.cost(),
                radii: sol.radii,
            }
        }
        _ => return Err(kind_error()),
    };
    Ok((result, counters))
}

fn segments_of(
    segments: &[[Vec<f64>; 2]],
    dim: usize,
    p: &str,
) -> CliResult<(Vec<(Point, Point)>, LpMetric)> {
    let flat: Vec<Vec<f64>> = segments
        .iter()
        .flat_map(|s| s.iter().cloned())
        .collect();
    let (pts, metric) = points_of(&flat, dim, p).map_err(CliError::Validation)?;
    let segs = pts
        .chunks_exact(2)
        .map(|c| (c[0].clone(), c[1].clone()))
        .collect();
    Ok((segs, metric))
}

fn tour_edge_set(order: &[usize]) -> BTreeSet<(usize, usize)> {
    let n = order.len();
    let mut out = BTreeSet::new();
    if n < 2 {
        return out;
    }
    for i in 0..n {
        out.insert(TieBreaker::norm_pair((order[i], order[(i + 1) % n])));
    }
    out
}

fn plan_edge_set(edges: &[(usize, usize)], closing: (usize, usize)) -> BTreeSet<(usize, usize)> {
    let mut out: BTreeSet<(usize, usize)> = edges.iter().map(|&e| TieBreaker::norm_pair(e)).collect();
    out.insert(TieBreaker::norm_pair(closing));
    out
}

fn verdict(ok: bool, detail: String) -> OracleVerdict {
    OracleVerdict {
        verdict: if ok { "match" } else { "mismatch" }.into(),
        detail,
    }
}

/// Run the independent oracle for the algorithm family and compare.
fn oracle_verdict(
    instance: &Instance,
    algorithm: Algorithm,
    result: &RunResult,
    seed: u64,
) -> CliResult<OracleVerdict> {
    let v = match (algorithm, instance) {
        (Algorithm::TspSnnc | Algorithm::TspMnn, Instance::Points { dim, p, coords }) => {
            let (pts, metric) = points_of(coords, *dim, p).map_err(CliError::Validation)?;
            let oracle = mftsp_oracle(&pts, metric)?;
            let RunResult::Tour { order, length } = result else {
                unreachable!()
            };
            let ok = tour_edge_set(order) == oracle.edge_set()
                && (length - oracle.length).abs() <= 1e-9 * (1.0 + oracle.length);
            verdict(ok, format!("sorted-edge oracle length {}", oracle.length))
        }
        (Algorithm::TspSnnc | Algorithm::TspMnn, Instance::Paths { dim, p, segments }) => {
            let (segs, metric) = segments_of(segments, *dim, p)?;
            let oracle = mftsp_oracle_paths(&segs, metric)?;
            let RunResult::Plan { edges, closing, length } = result else {
                unreachable!()
            };
            let ok = plan_edge_set(edges, *closing) == oracle.edge_set()
                && (length - oracle.length).abs() <= 1e-9 * (1.0 + oracle.length);
            verdict(ok, format!("sorted-edge oracle length {}", oracle.length))
        }
        (Algorithm::Steiner, Instance::Graph { nodes, edges, sites }) => {
            let g = graph_of(*nodes, edges, sites).map_err(CliError::Validation)?;
            let k = sites.len();
            let oracle_edges = if k >= 2 {
                let mut rows = vec![vec![0.0; k]; k];
                for i in 0..k {
                    let d = g.distances_from(sites[i]);
                    for j in 0..k {
                        if i != j {
                            rows[i][j] = d[sites[j]];
                        }
                    }
                }
                for i in 0..k {
                    for j in 0..i {
                        let v = rows[i][j].min(rows[j][i]);
                        rows[i][j] = v;
                        rows[j][i] = v;
                    }
                }
                let m = DistanceMatrix::new(rows)?;
                let t = mftsp_oracle_matrix(&m)?;
                // Tour over site indices; map back to node ids.
                let order: Vec<usize> = t.order.iter().map(|&i| sites[i]).collect();
                Some((tour_edge_set(&order), t.length))
            } else {
                None
            };
            let RunResult::SiteTour {
                site_order, length, ..
            } = result
            else {
                unreachable!()
            };
            let ok = match oracle_edges {
                Some((set, olen)) => {
                    tour_edge_set(site_order) == set
                        && (length - olen).abs() <= 1e-9 * (1.0 + olen)
                }
                None => site_order.len() == 1,
            };
            verdict(ok, "sorted-edge oracle over the site metric".into())
        }
        (Algorithm::Motorcycle, Instance::Motorcycles { motorcycles }) => {
            let bikes = motorcycles_of(motorcycles).map_err(CliError::Validation)?;
            let oracle = mc_oracle(&bikes)?;
            let RunResult::Motorcycles { statuses } = result else {
                unreachable!()
            };
            let got: Vec<Status> = statuses
                .iter()
                .map(|s| match s {
                    StatusJson::Escaped => Status::Escaped,
                    StatusJson::Crashed { into, point, time } => Status::Crashed {
                        into: *into,
                        point: *point,
                        time: *time,
                    },
                })
                .collect();
            verdict(
                statuses_agree(&got, &oracle, 1e-9),
                "chronological simulation".into(),
            )
        }
        (Algorithm::Match, Instance::Matching { k, left, right }) => {
            let inst = matching_of(*k, left, right).map_err(CliError::Validation)?;
            let gl = gale_shapley_oracle(&inst, Side::Left)?;
            let gr = gale_shapley_oracle(&inst, Side::Right)?;
            let RunResult::Matching { pairs } = result else {
                unreachable!()
            };
            let stable = matches!(
                verify_stability(
                    &nnc::matching::Matching {
                        pairs: pairs.clone()
                    },
                    &inst
                )?,
                Stability::Stable
            );
            let ok = *pairs == gl.pairs && *pairs == gr.pairs && stable;
            verdict(ok, "deferred acceptance from both sides + stability".into())
        }
        (Algorithm::Cover | Algorithm::CoverGreedy, Instance::Cover { clients, servers }) => {
            let inst = cover_of(clients, servers).map_err(CliError::Validation)?;
            let exact = cover::cover_exact(&inst)?;
            let RunResult::Cover { radii, cost } = result else {
                unreachable!()
            };
            let sol = cover::CoverSolution {
                radii: radii.clone(),
            };
            let ok = sol.covers(&inst) && *cost <= 2.0 * exact.cost() + 1e-9;
            verdict(
                ok,
                format!("exact optimum {} (factor-2 check)", exact.cost()),
            )
        }
        _ => {
            return Err(CliError::Validation(format!(
                "no oracle comparison for {algorithm:?} on kind {}",
                instance.kind()
            )))
        }
    };
    let _ = seed;
    Ok(v)
}

fn compare_reports(l: &RunReport, r: &RunReport) -> Result<(), String> {
    if l.instance_digest != r.instance_digest {
        return Err(format!(
            "different instances: {} vs {}",
            l.instance_digest, r.instance_digest
        ));
    }
    let ok = match (&l.result, &r.result) {
        (
            RunResult::Tour { order: o1, length: l1 },
            RunResult::Tour { order: o2, length: l2 },
        ) => tour_edge_set(o1) == tour_edge_set(o2) && (l1 - l2).abs() <= 1e-9 * (1.0 + l2.abs()),
        (
            RunResult::Plan { edges: e1, closing: c1, length: l1 },
            RunResult::Plan { edges: e2, closing: c2, length: l2 },
        ) => {
            plan_edge_set(e1, *c1) == plan_edge_set(e2, *c2)
                && (l1 - l2).abs() <= 1e-9 * (1.0 + l2.abs())
        }
        (
            RunResult::Motorcycles { statuses: s1 },
            RunResult::Motorcycles { statuses: s2 },
        ) => s1.len() == s2.len() && {
            let to_status = |v: &[StatusJson]| -> Vec<Status> {
                v.iter()
                    .map(|s| match s {
                        StatusJson::Escaped => Status::Escaped,
                        StatusJson::Crashed { into, point, time } => Status::Crashed {
                            into: *into,
                            point: *point,
                            time: *time,
                        },
                    })
                    .collect()
            };
            statuses_agree(&to_status(s1), &to_status(s2), 1e-9)
        },
        (RunResult::Matching { pairs: p1 }, RunResult::Matching { pairs: p2 }) => p1 == p2,
        (
            RunResult::Cover { radii: r1, cost: c1 },
            RunResult::Cover { radii: r2, cost: c2 },
        ) => {
            r1.len() == r2.len()
                && r1
                    .iter()
                    .zip(r2)
                    .all(|(a, b)| (a - b).abs() <= 1e-9 * (1.0 + b.abs()))
                && (c1 - c2).abs() <= 1e-9 * (1.0 + c2.abs())
        }
        (
            RunResult::SiteTour { site_order: o1, length: l1, .. },
            RunResult::SiteTour { site_order: o2, length: l2, .. },
        ) => tour_edge_set(o1) == tour_edge_set(o2) && (l1 - l2).abs() <= 1e-9 * (1.0 + l2.abs()),
        _ => return Err("incomparable result types".into()),
    };
    if ok {
        Ok(())
    } else {
        Err("solutions differ".into())
    }
}

fn bench_row(kind: BenchKind, n: usize, seed: u64, repeats: usize) -> CliResult<String> {
    let mut times = Vec::with_capacity(repeats);
    let mut counters = Counters::default();
    match kind {
        BenchKind::Cover => {
            let m = (n / 50).max(1);
            let inst = gen::gen_cover(n, m, seed)?;
            for _ in 0..repeats {
                let t0 = Instant::now();
                let (sol, stats) = cover::cover_nnc(&inst)?;
                times.push(t0.elapsed().as_secs_f64() * 1e3);
                std::hint::black_box(&sol);
                counters.merges = stats.merges;
            }
            if counters.merges != n + m - 1 {
                return Err(CliError::Validation("merge counter out of bounds".into()));
            }
        }
        BenchKind::Tsp => {
            let metric = LpMetric::l2(2);
            let pts = gen::gen_points(n, metric, seed)?;
            for _ in 0..repeats {
                let t0 = Instant::now();
                let (tour, stats) = mftsp_snnc(&pts, metric, &SnnConfig::Exact)?;
                times.push(t0.elapsed().as_secs_f64() * 1e3);
                std::hint::black_box(&tour);
                counters.iterations = stats.iterations;
                counters.connections = stats.connections;
                counters.queries = stats.snn_queries;
            }
            if n >= 2 && counters.iterations > 3 * n - 3 {
                return Err(CliError::Validation("iteration counter out of bounds".into()));
            }
        }
    }
    times.sort_by(f64::total_cmp);
    let median = times[times.len() / 2];
    Ok(format!(
        "{},{n},{seed},{median:.3},{},{},{},{}\n",
        match kind {
            BenchKind::Cover => "cover",
            BenchKind::Tsp => "tsp",
        },
        counters.iterations,
        counters.connections,
        counters.queries,
        counters.merges
    ))
}
