use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use polyrelax::certify::{self, extract_variety_with, Exactness, OracleMethod, VarietyReport, OMEGA_THRESHOLD, RESIDUAL_GATE};
use polyrelax::lagrange::{self, AscentConfig, Mode, TraceRow};
use polyrelax::report::OracleValue;
use polyrelax::{
    evaluate, normalize, parse_problem, BoundReport, BoundRow, Error, Hierarchy, ProblemInstance, SolveStatus,
    SolverConfig,
};

const EXIT_USAGE: u8 = 1;
const EXIT_NO_BOUND: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

#[derive(Parser)]
#[command(name = "polyrelax", version, about = "LP, SOS and Lagrangian bounds for polynomial optimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one relaxation and verify its certificate.
    Solve(SolveArgs),
    /// Tabulate bounds over hierarchies, levels and k.
    Compare(CompareArgs),
    /// Check exactness and extract the obstruction variety of a certificate.
    Certify(CertifyArgs),
    /// Maximize the Lagrangian dual by projected supgradient ascent.
    Lagrange(LagrangeArgs),
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long)]
    input: PathBuf,
    /// Solver tolerance.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum OracleArg {
    None,
    Grid,
    Enumerate,
}

impl OracleArg {
    fn method(self) -> Option<OracleMethod> {
        match self {
            OracleArg::None => None,
            OracleArg::Grid => Some(OracleMethod::Grid),
            OracleArg::Enumerate => Some(OracleMethod::Enumerate),
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    hierarchy: Hierarchy,
    #[arg(long)]
    level: u32,
    #[arg(long, default_value_t = 1)]
    k: u32,
    #[arg(long, value_enum, default_value_t = OracleArg::None)]
    oracle: OracleArg,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated hierarchy tags.
    #[arg(long, value_delimiter = ',', required = true)]
    hierarchy: Vec<Hierarchy>,
    /// Inclusive range `A..B`.
    #[arg(long, conflicts_with = "level")]
    levels: Option<String>,
    #[arg(long)]
    level: Option<u32>,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    k: Vec<u32>,
    #[arg(long, value_enum, default_value_t = OracleArg::None)]
    oracle: OracleArg,
}

#[derive(Args)]
struct CertifyArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    hierarchy: Hierarchy,
    #[arg(long)]
    level: u32,
    #[arg(long, default_value_t = 1)]
    k: u32,
    /// Defaults to enumeration for all-binary instances, grid otherwise.
    #[arg(long, value_enum)]
    oracle: Option<OracleArg>,
    /// Multipliers above this value form the support Ω.
    #[arg(long, default_value_t = OMEGA_THRESHOLD)]
    threshold: f64,
}

#[derive(Args)]
struct LagrangeArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    level: u32,
    #[arg(long, value_enum)]
    mode: ModeArg,
    #[arg(long, default_value_t = 500)]
    iterations: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Certified,
    Heuristic,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::OracleScope(_) | Error::NotCertifiable(_) => EXIT_NO_BOUND,
            Error::Unverified(_) => EXIT_NUMERIC,
            _ => EXIT_USAGE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type CmdResult = Result<u8, Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let outcome = match cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Certify(a) => cmd_certify(a),
        Command::Lagrange(a) => cmd_lagrange(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

/// Parsed and normalized instance plus its display name.
fn load(path: &Path) -> Result<(String, ProblemInstance), Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    let raw = parse_problem(&text).map_err(|e| Failure::usage(format!("{}:{e}", path.display())))?;
    let inst = normalize(&raw)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok((name, inst))
}

fn emit(common: &Common, body: &str) -> Result<(), Failure> {
    match &common.out {
        Some(p) => fs::write(p, body).map_err(|e| Failure::usage(format!("{}: {e}", p.display()))),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

fn status_code(status: SolveStatus) -> u8 {
    match status {
        SolveStatus::Optimal => 0,
        SolveStatus::Infeasible | SolveStatus::Unbounded => EXIT_NO_BOUND,
        SolveStatus::NumericalTrouble | SolveStatus::IterationLimit => EXIT_NUMERIC,
    }
}

fn oracle_value(inst: &ProblemInstance, method: Option<OracleMethod>) -> Result<Option<OracleValue>, Failure> {
    let Some(m) = method else {
        return Ok(None);
    };
    let r = certify::oracle(inst, m)?;
    Ok(Some(OracleValue {
        value: r.value,
        method: m.to_string(),
    }))
}

fn render(common: &Common, report: &BoundReport, notes: &[String]) -> Result<(), Failure> {
    let body = match common.format {
        Format::Json => json(report),
        Format::Csv => report.to_csv(),
        Format::Text => {
            let mut s = report.to_text();
            for n in notes {
                s.push_str(n);
                s.push('\n');
            }
            s
        }
    };
    emit(common, &body)
}

fn warn_residual(row: &BoundRow) {
    if let Some(r) = row.residual {
        if r > RESIDUAL_GATE {
            log::warn!("{} d={} k={}: certificate residual {r:.2e} exceeds {RESIDUAL_GATE:e}", row.hierarchy, row.d, row.k);
        }
    }
}

fn cmd_solve(a: SolveArgs) -> CmdResult {
    let (name, inst) = load(&a.common.input)?;
    let config = SolverConfig::with_tolerance(a.common.tol);
    let ev = evaluate(&inst, a.hierarchy, a.level, a.k, &config)?;
    warn_residual(&ev.row);
    let mut report = BoundReport::new(name);
    report.oracle = oracle_value(&inst, a.oracle.method())?;
    let code = status_code(ev.row.status);
    report.rows.push(ev.row);
    render(&a.common, &report, &[])?;
    Ok(code)
}

fn parse_levels(a: &CompareArgs) -> Result<Vec<u32>, Failure> {
    if let Some(d) = a.level {
        return Ok(vec![d]);
    }
    let Some(spec) = &a.levels else {
        return Err(Failure::usage("give --level or --levels"));
    };
    let (lo, hi) = spec
        .split_once("..")
        .ok_or_else(|| Failure::usage(format!("levels '{spec}' are not of the form A..B")))?;
    let parse = |s: &str| {
        s.trim()
            .parse::<u32>()
            .map_err(|_| Failure::usage(format!("bad level '{s}'")))
    };
    let (lo, hi) = (parse(lo)?, parse(hi)?);
    if lo > hi {
        return Err(Failure::usage(format!("level range {lo}..{hi} is empty")));
    }
    Ok((lo..=hi).collect())
}

/// Expected orderings between rows of one table, checked on the optimal rows.
fn sandwich_notes(report: &BoundReport) -> Vec<String> {
    const TOL: f64 = 1e-6;
    let find = |h: Hierarchy, d: u32, k: u32| report.rows.iter().find(|r| r.hierarchy == h && r.d == d && r.k == k);
    let mut notes = Vec::new();
    let mut check = |hi: &BoundRow, lo: &BoundRow| {
        if let (Some(a), Some(b)) = (hi.bound, lo.bound) {
            let ok = a >= b - TOL;
            notes.push(format!(
                "check {}(d={},k={}) >= {}(d={},k={}): {}",
                hi.hierarchy.tag(),
                hi.d,
                hi.k,
                lo.hierarchy.tag(),
                lo.d,
                lo.k,
                if ok { "ok" } else { "VIOLATED" }
            ));
        }
    };
    for r in &report.rows {
        let below = match r.hierarchy {
            Hierarchy::Bsos => find(Hierarchy::Lp, r.d, 0),
            Hierarchy::Bsos01 => find(Hierarchy::Rlt01, r.d, 0),
            _ => None,
        };
        if let Some(b) = below {
            check(r, b);
        }
        if matches!(r.hierarchy, Hierarchy::Bsos | Hierarchy::Bsos01) && r.d == 2 && r.k >= 1 {
            if let Some(b) = find(Hierarchy::Putinar, 1, 0) {
                check(r, b);
            }
        }
    }
    if let Some(o) = &report.oracle {
        for r in &report.rows {
            if let Some(b) = r.bound {
                notes.push(format!(
                    "check {}(d={},k={}) <= oracle: {}",
                    r.hierarchy.tag(),
                    r.d,
                    r.k,
                    if b <= o.value + TOL { "ok" } else { "VIOLATED" }
                ));
            }
        }
    }
    notes
}

fn cmd_compare(a: CompareArgs) -> CmdResult {
    let levels = parse_levels(&a)?;
    if a.k.is_empty() {
        return Err(Failure::usage("empty k list"));
    }
    let (name, inst) = load(&a.common.input)?;
    let mut cells: Vec<(Hierarchy, u32, u32)> = Vec::new();
    for &h in &a.hierarchy {
        for &d in &levels {
            let ks: Vec<u32> = if h.uses_k() { a.k.clone() } else { vec![0] };
            for k in ks {
                if !cells.contains(&(h, d, k)) {
                    cells.push((h, d, k));
                }
            }
        }
    }
    let config = SolverConfig::with_tolerance(a.common.tol);
    let rows: Vec<BoundRow> = cells
        .par_iter()
        .map(|&(h, d, k)| evaluate(&inst, h, d, k, &config).map(|ev| ev.row))
        .collect::<polyrelax::Result<_>>()?;
    let mut report = BoundReport::new(name);
    for r in &rows {
        warn_residual(r);
    }
    report.rows = rows;
    // a clamped k can produce duplicate cells
    report.sort();
    report.rows.dedup_by_key(|r| (r.hierarchy, r.d, r.k));
    report.oracle = oracle_value(&inst, a.oracle.method())?;
    let notes = sandwich_notes(&report);
    render(&a.common, &report, &notes)?;
    let failed = report.rows.iter().any(|r| status_code(r.status) == EXIT_NUMERIC);
    Ok(if failed { EXIT_NUMERIC } else { 0 })
}

#[derive(Serialize)]
struct CertifyReport {
    instance: String,
    row: BoundRow,
    exactness: Exactness,
    /// Present only for exact certificates.
    variety: Option<VarietyReport>,
}

fn cmd_certify(a: CertifyArgs) -> CmdResult {
    let (name, inst) = load(&a.common.input)?;
    let config = SolverConfig::with_tolerance(a.common.tol);
    let ev = evaluate(&inst, a.hierarchy, a.level, a.k, &config)?;
    let code = status_code(ev.row.status);
    if code != 0 {
        return Err(Failure {
            code,
            message: format!("{} d={} ended with status {}; nothing to certify", a.hierarchy, a.level, ev.row.status),
        });
    }
    let residual = ev.row.residual.unwrap_or(f64::INFINITY);
    if residual > RESIDUAL_GATE {
        return Err(Error::Unverified(residual).into());
    }
    let default_oracle = if inst.is_all_binary() { OracleArg::Enumerate } else { OracleArg::Grid };
    let method = a
        .oracle
        .unwrap_or(default_oracle)
        .method()
        .ok_or_else(|| Failure::usage("certify needs an oracle"))?;
    let bound = ev.row.bound.unwrap_or(f64::NEG_INFINITY);
    let exactness = certify::exactness_check(&inst, bound, method)?;
    let cert = ev.certificate.as_ref().expect("optimal solve carries a certificate");
    let variety = if exactness.exact && !cert.lambda.is_empty() {
        Some(extract_variety_with(&inst, cert, &exactness.oracle.minimizer, a.threshold)?)
    } else {
        None
    };
    let report = CertifyReport {
        instance: name,
        row: ev.row,
        exactness,
        variety,
    };
    let body = match a.common.format {
        Format::Json => json(&report),
        Format::Csv => certify_csv(&report),
        Format::Text => certify_text(&report),
    };
    emit(&a.common, &body)?;
    Ok(0)
}

fn certify_csv(r: &CertifyReport) -> String {
    let v = r.variety.as_ref();
    format!(
        "hierarchy,d,k,bound,oracle,gap,exact,omega,generators_vanish,constancy\n{},{},{},{},{},{},{},{},{},{}\n",
        r.row.hierarchy,
        r.row.d,
        r.row.k,
        r.row.bound.unwrap_or(f64::NEG_INFINITY),
        r.exactness.oracle.value,
        r.exactness.gap,
        r.exactness.exact,
        v.map(|v| v.omega.len().to_string()).unwrap_or_default(),
        v.map(|v| v.generators_vanish.to_string()).unwrap_or_default(),
        v.map(|v| json(&v.constancy).trim().trim_matches('"').to_string()).unwrap_or_default(),
    )
}

fn certify_text(r: &CertifyReport) -> String {
    let mut s = format!(
        "instance: {}\n{} d={} k={}: bound {:.9}, residual {:.2e}\noracle ({}): {:.9} at {:?}\ngap {:.3e} -> {}\n",
        r.instance,
        r.row.hierarchy,
        r.row.d,
        r.row.k,
        r.row.bound.unwrap_or(f64::NEG_INFINITY),
        r.row.residual.unwrap_or(f64::NAN),
        r.exactness.oracle.method,
        r.exactness.oracle.value,
        r.exactness.oracle.minimizer_original,
        r.exactness.gap,
        if r.exactness.exact { "exact" } else { "not exact" }
    );
    let Some(v) = &r.variety else {
        s.push_str("no variety: the certificate is not exact or has no product multipliers\n");
        return s;
    };
    s.push_str(&format!("I1 = {:?}, I2 = {:?}\n", v.active_lower, v.active_upper));
    s.push_str(&format!("omega (lambda > {:e}):\n", v.threshold));
    for e in &v.omega {
        s.push_str(&format!("  {} = {:.3e}  generator {:?}\n", e.label, e.value, e.generator));
    }
    s.push_str(&format!(
        "generators vanish at x*: {} (max {:.2e}); sigma(x*) = {:.2e}\n",
        v.generators_vanish, v.max_generator_at_minimizer, v.sigma_at_minimizer
    ));
    if let Some(ij) = v.ij_products_vanish {
        s.push_str(&format!("I/J products vanish at x*: {ij}\n"));
    }
    s.push_str(&format!(
        "V: {} sampled points {:?}\nf on V: {}\n",
        v.sample_count,
        v.samples,
        json(&v.constancy).trim().trim_matches('"')
    ));
    if let Some(w) = &v.witness {
        s.push_str(&format!("witness: {w:?}\n"));
    }
    s
}

#[derive(Serialize)]
struct LagrangeReport {
    instance: String,
    d: u32,
    mode: Mode,
    quality: lagrange::Quality,
    /// Original units.
    rho_estimate: f64,
    rho_normalized: f64,
    converged: bool,
    budget_exhausted: bool,
    labels: Vec<String>,
    lambda: Vec<f64>,
    trace: Vec<TraceRow>,
}

fn cmd_lagrange(a: LagrangeArgs) -> CmdResult {
    let (name, inst) = load(&a.common.input)?;
    let mode = match a.mode {
        ModeArg::Certified => Mode::Certified,
        ModeArg::Heuristic => Mode::Heuristic,
    };
    let config = AscentConfig {
        mode,
        iterations: a.iterations,
        ..AscentConfig::default()
    };
    let r = lagrange::maximize_g(&inst, a.level, &config)?;
    let body = match a.common.format {
        Format::Csv => r.trace_csv(),
        Format::Json => json(&LagrangeReport {
            instance: name,
            d: a.level,
            mode,
            quality: r.quality,
            rho_estimate: inst.to_original_units(r.rho_estimate),
            rho_normalized: r.rho_estimate,
            converged: r.converged,
            budget_exhausted: r.budget_exhausted,
            labels: r.labels.clone(),
            lambda: r.lambda.clone(),
            trace: r.trace.clone(),
        }),
        Format::Text => {
            let mut s = format!(
                "instance: {name}\nrho_{} estimate: {:.9} ({})\n{} after {} iterations\n",
                a.level,
                inst.to_original_units(r.rho_estimate),
                r.quality,
                if r.converged { "converged" } else { "budget exhausted" },
                r.trace.len()
            );
            for (l, v) in r.labels.iter().zip(&r.lambda) {
                if *v > 0.0 {
                    s.push_str(&format!("  {l} = {v:.6}\n"));
                }
            }
            let stride = (r.trace.len() / 10).max(1);
            for t in r.trace.iter().step_by(stride) {
                s.push_str(&format!("  iter {:>4}  G {:.9}  step {:.4}  active {}\n", t.iter, t.g, t.step, t.active));
            }
            s
        }
    };
    emit(&a.common, &body)?;
    Ok(0)
}
