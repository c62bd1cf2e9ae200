//! Command-line front end: decomposition, norm estimate, queries, raster
//! export and the depth audit over a CSV dataset.

mod dataset;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use c2plus::czdecomp::DecompositionDoc;
use c2plus::oned::{extend_linear, extend_nonneg, stencil, OneDData};
use c2plus::tracenorm::{estimate_norm_on, ORACLE_LIMIT};
use c2plus::*;
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use dataset::{Dataset, InputError};

/// Squares whose 9/8 dilation can contain one point: its own plus 20 touching ones.
const MAX_OVERLAP: usize = 21;
/// Largest instance for which `norm` also runs the exact oracle.
const ORACLE_COMPARE_LIMIT: usize = 6;

#[derive(Parser)]
#[command(name = "c2plus", version, about = "Nonnegative C2 interpolation of planar data")]
struct Cli {
    /// JSON configuration; missing fields take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the square decomposition and print it as JSON with summary stats.
    Decompose {
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate the trace norm and report the witness square.
    Norm { input: PathBuf },
    /// Evaluate the interpolant and its derivatives at points.
    Query {
        input: PathBuf,
        /// Query point `x,y`; repeatable.
        #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
        at: Vec<[f64; 2]>,
        /// CSV of `x,y` query rows.
        #[arg(long)]
        points: Option<PathBuf>,
        /// Norm bound M; defaults to the estimate.
        #[arg(long)]
        norm: Option<f64>,
    },
    /// Sample the interpolant on a regular grid.
    Grid {
        input: PathBuf,
        /// `xmin,ymin,xmax,ymax`; defaults to the data box padded by one unit.
        #[arg(long, value_parser = parse_bounds, allow_hyphen_values = true)]
        grid: Option<[f64; 4]>,
        #[arg(long, default_value_t = 101)]
        nx: usize,
        #[arg(long, default_value_t = 101)]
        ny: usize,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        norm: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check that every query depends only on its reported depth set.
    DepthAudit {
        input: PathBuf,
        #[arg(long, default_value_t = 50)]
        queries: usize,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        norm: Option<f64>,
    },
    /// Print the effective configuration.
    Config,
    /// Evaluate a one-dimensional extension.
    #[command(hide = true)]
    Oned {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        knots: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        values: Vec<f64>,
        #[arg(long, allow_hyphen_values = true)]
        at: f64,
        /// Use the nonnegative operator with this norm bound.
        #[arg(long)]
        nonneg: Option<f64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Pgm,
}

/// Raised when the audit finds a leak; maps to its own exit code.
#[derive(Debug)]
struct LeakFound(usize);

impl std::fmt::Display for LeakFound {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "depth audit found {} leak(s)", self.0)
    }
}

impl std::error::Error for LeakFound {}

fn parse_numbers<const N: usize>(s: &str) -> std::result::Result<[f64; N], String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != N {
        return Err(format!("expected {N} comma-separated numbers, got {s:?}"));
    }
    let mut out = [0.0; N];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p.trim().parse::<f64>().map_err(|_| format!("not a number: {p:?}"))?;
        if !o.is_finite() {
            return Err(format!("not finite: {p:?}"));
        }
    }
    Ok(out)
}

fn parse_pair(s: &str) -> std::result::Result<[f64; 2], String> {
    parse_numbers::<2>(s)
}

fn parse_bounds(s: &str) -> std::result::Result<[f64; 4], String> {
    let b = parse_numbers::<4>(s)?;
    if !(b[0] < b[2] && b[1] < b[3]) {
        return Err(format!("bounds must satisfy xmin < xmax and ymin < ymax, got {s:?}"));
    }
    Ok(b)
}

fn load_config(path: Option<&Path>) -> Result<Config> {
    let cfg = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str::<Config>(&text).map_err(|e| InputError {
                path: p.display().to_string(),
                line: e.line() as u64,
                message: e.to_string(),
            })?
        }
        None => Config::default(),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

/// Data box padded by one unit, or the unit square around the origin without data.
fn padded_bounds(points: &[Point2]) -> [f64; 4] {
    if points.is_empty() {
        return [-1.0, -1.0, 1.0, 1.0];
    }
    let mut b = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
    for p in points {
        b = [b[0].min(p.x1), b[1].min(p.x2), b[2].max(p.x1), b[3].max(p.x2)];
    }
    [b[0] - 1.0, b[1] - 1.0, b[2] + 1.0, b[3] + 1.0]
}

#[derive(Serialize)]
struct DecomposeStats {
    squares: usize,
    sharp: usize,
    empty: usize,
    trivial: usize,
    min_side: f64,
    max_side: f64,
    max_touching_ratio: f64,
}

#[derive(Serialize)]
struct DecomposeOutput {
    source: String,
    checksum: String,
    points: usize,
    stats: DecomposeStats,
    decomposition: DecompositionDoc,
}

fn cmd_decompose(ds: &Dataset, cfg: &Config, out: Option<&Path>) -> Result<()> {
    let start = Instant::now();
    let dec = build_decomposition(&ds.points, cfg)?;
    let secs = start.elapsed().as_secs_f64();
    let sides: Vec<f64> = (0..dec.squares().len()).map(|i| dec.side(i)).collect();
    let stats = DecomposeStats {
        squares: dec.squares().len(),
        sharp: dec.count(Label::Sharp),
        empty: dec.count(Label::Empty),
        trivial: dec.count(Label::Trivial),
        min_side: sides.iter().copied().fold(f64::INFINITY, f64::min),
        max_side: sides.iter().copied().fold(0.0, f64::max),
        max_touching_ratio: dec.max_touching_ratio(),
    };
    let doc = DecomposeOutput {
        source: ds.source.display().to_string(),
        checksum: ds.checksum.clone(),
        points: ds.points.len(),
        stats,
        decomposition: dec.to_doc(),
    };
    // Timing goes to stderr so stdout stays byte-identical across runs.
    eprintln!("decomposition of {} points: {secs:.6} s", ds.points.len());
    emit(out, &to_json(&doc)?)
}

#[derive(Serialize)]
struct Witness {
    square: [i64; 3],
    depth_set: Vec<usize>,
}

#[derive(Serialize)]
struct OracleComparison {
    value: f64,
    ratio: f64,
}

#[derive(Serialize)]
struct NormOutput {
    source: String,
    checksum: String,
    m_hat: f64,
    witness: Option<Witness>,
    oracle: Option<OracleComparison>,
}

fn cmd_norm(ds: &Dataset, cfg: &Config) -> Result<()> {
    let dec = build_decomposition(&ds.points, cfg)?;
    let est = estimate_norm_on(&dec, &ds.values, cfg)?;
    let witness = est.lower_witness.map(|(q, d)| Witness { square: [q.i, q.j, q.k as i64], depth_set: d.indices });
    let oracle = if !ds.points.is_empty() && ds.points.len() <= ORACLE_COMPARE_LIMIT.min(ORACLE_LIMIT) {
        let value = oracle_norm(&ds.points, &ds.values, cfg)?;
        let ratio = if value > 0.0 {
            est.m_hat / value
        } else if est.m_hat == 0.0 {
            1.0
        } else {
            f64::INFINITY
        };
        Some(OracleComparison { value, ratio })
    } else {
        None
    };
    let doc = NormOutput {
        source: ds.source.display().to_string(),
        checksum: ds.checksum.clone(),
        m_hat: est.m_hat,
        witness,
        oracle,
    };
    emit(None, &to_json(&doc)?)
}

/// Interpolant for the dataset with `M` from the flag or the estimate.
fn interpolant(ds: &Dataset, cfg: &Config, norm: Option<f64>) -> Result<Interpolant> {
    let dec = build_decomposition(&ds.points, cfg)?;
    let m = match norm {
        Some(m) => {
            if !m.is_finite() || m < 0.0 {
                bail!(c2plus::Error::InvalidArgument(format!("--norm must be finite and nonnegative, got {m}")));
            }
            m
        }
        None => estimate_norm_on(&dec, &ds.values, cfg)?.m_hat,
    };
    Ok(Interpolant::with_decomposition(Arc::new(dec), ds.values.clone(), m, cfg)?)
}

#[derive(Serialize)]
struct QueryOutput {
    at: [f64; 2],
    m: f64,
    value: f64,
    grad: [f64; 2],
    /// `(d11, d12, d22)`.
    hess: [f64; 3],
    depth_set: Vec<usize>,
    squares_visited: usize,
}

fn read_query_points(path: &Path) -> Result<Vec<[f64; 2]>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        match parse_pair(line) {
            Ok(p) => out.push(p),
            Err(_) if n == 0 => continue,
            Err(message) => bail!(InputError { path: path.display().to_string(), line: n as u64 + 1, message }),
        }
    }
    Ok(out)
}

fn cmd_query(ds: &Dataset, cfg: &Config, at: &[[f64; 2]], points: Option<&Path>, norm: Option<f64>) -> Result<()> {
    let mut queries = at.to_vec();
    if let Some(p) = points {
        queries.extend(read_query_points(p)?);
    }
    if queries.is_empty() {
        bail!(c2plus::Error::InvalidArgument("no query points; pass --at x,y or --points FILE".into()));
    }
    let it = interpolant(ds, cfg, norm)?;
    it.assemble_all()?;
    let mut text = String::new();
    let start = Instant::now();
    for q in &queries {
        let r = it.query(&Point2::new(q[0], q[1]))?;
        let row = QueryOutput {
            at: *q,
            m: it.norm_bound(),
            value: r.value,
            grad: r.grad,
            hess: r.hess,
            depth_set: r.depth_set.indices,
            squares_visited: r.squares_visited,
        };
        text.push_str(&serde_json::to_string(&row)?);
        text.push('\n');
    }
    let per = start.elapsed().as_secs_f64() / queries.len() as f64;
    eprintln!("{} queries, {:.3e} s per query", queries.len(), per);
    emit(None, &text)
}

struct GridSpec {
    bounds: Option<[f64; 4]>,
    nx: usize,
    ny: usize,
    format: Format,
}

fn cmd_grid(ds: &Dataset, cfg: &Config, spec: GridSpec, norm: Option<f64>, out: Option<&Path>) -> Result<()> {
    let GridSpec { bounds, nx, ny, format } = spec;
    if nx < 2 || ny < 2 {
        bail!(c2plus::Error::InvalidArgument(format!("grid needs nx, ny >= 2, got {nx} x {ny}")));
    }
    let b = bounds.unwrap_or_else(|| padded_bounds(&ds.points));
    let it = interpolant(ds, cfg, norm)?;
    let mut rows = Vec::with_capacity(ny);
    for j in 0..ny {
        let y = b[1] + (b[3] - b[1]) * j as f64 / (ny - 1) as f64;
        let row = (0..nx)
            .map(|i| {
                let x = b[0] + (b[2] - b[0]) * i as f64 / (nx - 1) as f64;
                it.query_value(&Point2::new(x, y)).map(|v| (x, y, v))
            })
            .collect::<c2plus::Result<Vec<_>>>()?;
        rows.push(row);
    }
    let text = match format {
        Format::Csv => {
            let mut s = String::from("x,y,value\n");
            for (x, y, v) in rows.iter().flatten() {
                s.push_str(&format!("{x},{y},{v}\n"));
            }
            s
        }
        Format::Pgm => {
            // Plain PGM, top row at ymax, gray levels scaled to [0, max].
            let max = rows.iter().flatten().map(|r| r.2).fold(0.0, f64::max);
            let mut s = format!("P2\n{nx} {ny}\n255\n");
            for row in rows.iter().rev() {
                let line: Vec<String> = row
                    .iter()
                    .map(|&(_, _, v)| {
                        let level = if max > 0.0 { (255.0 * v.max(0.0) / max).round() } else { 0.0 };
                        format!("{}", level as u8)
                    })
                    .collect();
                s.push_str(&line.join(" "));
                s.push('\n');
            }
            s
        }
    };
    emit(out, &text)
}

#[derive(Serialize)]
struct AuditOutput {
    queries: usize,
    trials: usize,
    leaks: usize,
    leak_details: Vec<c2plus::patch::Leak>,
    empirical_depth: usize,
    budget: usize,
    pass: bool,
}

/// The first `n` nodes of the smallest square grid with at least `n` nodes.
fn query_grid(b: [f64; 4], n: usize) -> Vec<Point2> {
    let side = (n as f64).sqrt().ceil().max(2.0) as usize;
    (0..side * side)
        .take(n)
        .map(|k| {
            let (i, j) = (k % side, k / side);
            let s = (side - 1) as f64;
            Point2::new(b[0] + (b[2] - b[0]) * i as f64 / s, b[1] + (b[3] - b[1]) * j as f64 / s)
        })
        .collect()
}

fn cmd_depth_audit(
    ds: &Dataset,
    cfg: &Config,
    queries: usize,
    trials: usize,
    seed: u64,
    norm: Option<f64>,
) -> Result<()> {
    let it = interpolant(ds, cfg, norm)?;
    let qs = query_grid(padded_bounds(&ds.points), queries);
    let report = depth_audit(&it, &qs, trials, seed)?;
    let leaks = report.leaks.len();
    let out = AuditOutput {
        queries: report.queries,
        trials: report.trials,
        leaks,
        leak_details: report.leaks,
        empirical_depth: report.max_depth,
        budget: MAX_OVERLAP * (cfg.depth_cap() + 5),
        pass: leaks == 0,
    };
    emit(None, &to_json(&out)?)?;
    if leaks > 0 {
        bail!(LeakFound(leaks));
    }
    Ok(())
}

#[derive(Serialize)]
struct OnedOutput {
    at: f64,
    value: f64,
    d1: f64,
    d2: f64,
    stencil: Vec<usize>,
}

fn cmd_oned(knots: &[f64], values: &[f64], at: f64, nonneg: Option<f64>) -> Result<()> {
    let data = OneDData::new(knots.to_vec(), values.to_vec())?;
    let f = match nonneg {
        Some(m) => extend_nonneg(&data, m)?,
        None => extend_linear(&data),
    };
    let (value, d1, d2) = f.eval(at);
    let out = OnedOutput { at, value, d1, d2, stencil: stencil(at, knots)?.indices };
    emit(None, &to_json(&out)?)
}

fn run(cli: Cli) -> Result<()> {
    let cfg = load_config(cli.config.as_deref())?;
    let load = |p: &Path| Dataset::load(p);
    match cli.command {
        Command::Decompose { input, out } => cmd_decompose(&load(&input)?, &cfg, out.as_deref()),
        Command::Norm { input } => cmd_norm(&load(&input)?, &cfg),
        Command::Query { input, at, points, norm } => cmd_query(&load(&input)?, &cfg, &at, points.as_deref(), norm),
        Command::Grid { input, grid, nx, ny, format, norm, out } => {
            let spec = GridSpec { bounds: grid, nx, ny, format };
            cmd_grid(&load(&input)?, &cfg, spec, norm, out.as_deref())
        }
        Command::DepthAudit { input, queries, trials, seed, norm } => {
            cmd_depth_audit(&load(&input)?, &cfg, queries, trials, seed, norm)
        }
        Command::Config => emit(None, &to_json(&cfg)?),
        Command::Oned { knots, values, at, nonneg } => cmd_oned(&knots, &values, at, nonneg),
    }
}

/// 2 for bad input, 3 for solver failures, 4 for depth leaks.
fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<LeakFound>().is_some() {
        return 4;
    }
    match err.downcast_ref::<c2plus::Error>() {
        Some(
            c2plus::Error::MaxDepthExceeded(_)
            | c2plus::Error::NotGraphLike(_)
            | c2plus::Error::RepresentativePoint(_)
            | c2plus::Error::MuUndefined(_)
            | c2plus::Error::InfiniteCushion
            | c2plus::Error::NonConvergence(_)
            | c2plus::Error::SizeCap { .. },
        ) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
