//! The `fhl` command-line driver.

pub mod archive;
pub mod config;
pub mod fmt;
pub mod plot;
pub mod selftest;

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use fhl::bubbles::{convolution_identity_residual, hls_quotient, Family};
use fhl::constants::applicable;
use fhl::diagnostics::continuation;
use fhl::domain::DomainKind;
use fhl::riesz::build_weights_cached;
use fhl::solver::{solve, Status};
use fhl::spectral::{build_basis, green, robin, RobinOptions};
use fhl::{Bubble, DomainSpec, GridField, ModeSet, Params, Regime};
use serde::Serialize;

use crate::archive::{diagnose, field_csv, load_report, write, ReportFile, RunArchive};
use crate::config::{parse_config, RunConfig, SCHEMA_VERSION};
use crate::fmt::{csv_row, g12};

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    UnknownKey(String),
    TypeError(String),
    MissingRequired(String),
    Io(String),
    Core(fhl::Error),
    /// A solve finished without converging; the archive is still written.
    Unconverged {
        status: Status,
        detail: String,
    },
}

impl From<fhl::Error> for CliError {
    fn from(e: fhl::Error) -> Self {
        CliError::Core(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::UnknownKey(k) => write!(f, "unknown config key '{k}'"),
            CliError::TypeError(k) => write!(f, "bad value for '{k}'"),
            CliError::MissingRequired(k) => write!(f, "missing required key '{k}'"),
            CliError::Io(m) => write!(f, "{m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Unconverged { status, detail } => write!(f, "solve ended with status {status:?}: {detail}"),
        }
    }
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::UnknownKey(_) => "UnknownKey",
            CliError::TypeError(_) => "TypeError",
            CliError::MissingRequired(_) => "MissingRequired",
            CliError::Io(_) => "Io",
            CliError::Core(e) => e.kind(),
            CliError::Unconverged { status: Status::PositivityLost, .. } => "PositivityLost",
            CliError::Unconverged { .. } => "NoConvergence",
        }
    }

    /// 1 for rejected input, 2 for a numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numerical() => 2,
            CliError::Unconverged { .. } => 2,
            _ => 1,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": self.kind(), "message": self.to_string() }).to_string()
    }
}

#[derive(Parser, Debug)]
#[command(name = "fhl", version, about = "Fractional Hartree laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print every constant defined for (n, s, mu).
    Constants {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        s: f64,
        #[arg(long)]
        mu: f64,
        #[arg(long)]
        json: bool,
    },
    /// Checks on the Hartree bubble W[0,1].
    Bubble {
        #[command(subcommand)]
        action: BubbleCommand,
    },
    /// Tabulate the Robin function on the interior grid nodes.
    Robin {
        #[arg(long, value_enum)]
        domain: DomainArg,
        #[arg(long)]
        a: f64,
        #[arg(long)]
        b: f64,
        #[arg(long)]
        ay: Option<f64>,
        #[arg(long)]
        by: Option<f64>,
        #[arg(long)]
        s: f64,
        #[arg(long)]
        modes: usize,
        #[arg(long)]
        grid: usize,
        /// CSV destination; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One solve from a config file.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Directory for record.json and solution.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Warm-started sweep over decreasing eps, written as an archive.
    Continuation {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated eps values; overrides `eps_list` in the config.
        #[arg(long)]
        eps: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// CSV series and SVG charts from an archived report.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the built-in quick checks.
    Selftest,
}

#[derive(Subcommand, Debug)]
enum BubbleCommand {
    /// Convolution identity at points along the first axis.
    Check {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        s: f64,
        #[arg(long)]
        mu: f64,
        #[arg(long, default_value_t = 16)]
        points: usize,
    },
    /// Minimization quotient of W[0,1] and its tail bound.
    Quotient {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        s: f64,
        #[arg(long)]
        mu: f64,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum DomainArg {
    Interval,
    Rectangle,
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}

fn dispatch(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Constants { n, s, mu, json } => constants(n, s, mu, json),
        Command::Bubble { action: BubbleCommand::Check { n, s, mu, points } } => bubble_check(n, s, mu, points),
        Command::Bubble { action: BubbleCommand::Quotient { n, s, mu } } => bubble_quotient(n, s, mu),
        Command::Robin { domain, a, b, ay, by, s, modes, grid, out } => {
            let kind = match domain {
                DomainArg::Interval => DomainKind::Interval { a, b },
                DomainArg::Rectangle => DomainKind::Rectangle {
                    ax: a,
                    bx: b,
                    ay: ay.ok_or_else(|| CliError::MissingRequired("ay".into()))?,
                    by: by.ok_or_else(|| CliError::MissingRequired("by".into()))?,
                },
            };
            robin_table(kind, s, modes, grid, out.as_deref())
        }
        Command::Solve { config, out } => solve_command(&config, out.as_deref()),
        Command::Continuation { config, eps, out } => continuation_command(&config, eps.as_deref(), &out),
        Command::Report { input, out } => report_command(&input, &out),
        Command::Selftest => selftest::run_all(),
    }
}

fn free_params(n: usize, s: f64, mu: f64) -> Result<Params, CliError> {
    Ok(Params::new(n, s, mu, 0.0, Regime::FreeSpace)?)
}

fn constants(n: usize, s: f64, mu: f64, json: bool) -> Result<(), CliError> {
    let values = applicable(&free_params(n, s, mu)?)?;
    if json {
        let map: serde_json::Map<String, serde_json::Value> =
            values.iter().map(|(k, v)| (k.tag().to_string(), serde_json::json!(*v))).collect();
        println!("{}", serde_json::Value::Object(map));
    } else {
        for (k, v) in values {
            println!("{:<16}{}", k.tag(), g12(v));
        }
    }
    Ok(())
}

fn bubble_check(n: usize, s: f64, mu: f64, points: usize) -> Result<(), CliError> {
    let w = Bubble::standard(Family::HartreeW, free_params(n, s, mu)?)?;
    println!("x,lhs,rhs,residual");
    for k in 0..points {
        let r = 3.0 * k as f64 / (points.max(2) - 1) as f64;
        let mut x = vec![0.0; n];
        x[0] = r;
        let c = convolution_identity_residual(&w, &x)?;
        println!("{}", csv_row(&[r, c.lhs, c.rhs, c.residual]));
    }
    Ok(())
}

fn bubble_quotient(n: usize, s: f64, mu: f64) -> Result<(), CliError> {
    let w = Bubble::standard(Family::HartreeW, free_params(n, s, mu)?)?;
    let q = hls_quotient(&w)?;
    println!("quotient    {}", g12(q.value));
    println!("tail_bound  {}", g12(q.tail_bound));
    Ok(())
}

fn robin_table(kind: DomainKind<f64>, s: f64, modes: usize, grid: usize, out: Option<&Path>) -> Result<(), CliError> {
    let spec = DomainSpec::new(kind, grid)?;
    if !(s > 0.0 && s < 1.0 && 2.0 * s < spec.dim() as f64) {
        return Err(fhl::Error::OutOfRange(format!("0 < s < 1 and 2s < n fail (s = {s})")).into());
    }
    let set = ModeSet::lowest(kind, modes);
    let dim = spec.dim();
    let mut text =
        String::from(if dim == 1 { "x,phi,tail_estimate,spread\n" } else { "x,y,phi,tail_estimate,spread\n" });
    for i in 0..spec.node_count() {
        if spec.is_boundary_node(i) {
            continue;
        }
        let x = spec.node(i);
        let r = robin(&kind, s, &x[..dim], &RobinOptions::default())?;
        // truncation of the eigen series at the largest Richardson offset
        let mut y = x;
        y[0] += r.delta0;
        let tail = green(&set, s, &x[..dim], &y[..dim])?.tail_estimate;
        let mut row = x[..dim].to_vec();
        row.extend([r.value, tail, r.spread]);
        text.push_str(&csv_row(&row));
        text.push('\n');
    }
    match out {
        Some(path) => write(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = archive::read(path)?;
    let parsed = parse_config(&text)?;
    for w in &parsed.warnings {
        eprintln!("{}", serde_json::json!({ "warning": w }));
    }
    Ok(parsed.config)
}

fn cache_dir(fallback: Option<PathBuf>) -> Option<PathBuf> {
    match std::env::var_os("FHL_CACHE_DIR") {
        Some(dir) if !dir.is_empty() => Some(PathBuf::from(dir)),
        _ => fallback,
    }
}

#[derive(Serialize)]
struct SolveOutput<'a> {
    schema_version: u32,
    config: String,
    record: &'a fhl::SolutionRecord,
    wall_time_s: f64,
}

fn solve_command(config: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let start = Instant::now();
    let cfg = load_config(config)?;
    let eps = cfg.eps.ok_or_else(|| CliError::MissingRequired("eps".into()))?;
    let params = cfg.params(eps)?;
    let domain = cfg.domain()?;
    let basis = Arc::new(build_basis(&domain, cfg.modes)?);
    let cache = cache_dir(out.map(|o| o.join("cache")));
    let weights = build_weights_cached(&domain, params.mu, cache.as_deref())?;
    let record = solve(&params, &basis, &weights, &cfg.solve_options())?;
    let output = SolveOutput {
        schema_version: SCHEMA_VERSION,
        config: cfg.to_text(),
        record: &record,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    let json = serde_json::to_string_pretty(&output).map_err(|e| CliError::Io(e.to_string()))?;
    println!("{json}");
    if let Some(dir) = out {
        write(&dir.join("record.json"), &json)?;
        write(&dir.join("solution.csv"), &field_csv(&record.field(&basis)))?;
    }
    if record.status != Status::Converged {
        return Err(CliError::Unconverged {
            status: record.status,
            detail: format!("residual {} after {} iterations", g12(record.residual), record.iterations),
        });
    }
    Ok(())
}

fn parse_eps(list: &str) -> Result<Vec<f64>, CliError> {
    list.split(',').map(|v| v.trim().parse::<f64>().map_err(|_| CliError::TypeError("eps".into()))).collect()
}

/// Runs a sweep and writes its archive; returns the saved report.
pub fn run_continuation(cfg: &RunConfig, eps_list: &[f64], out: &Path) -> Result<ReportFile, CliError> {
    let start = Instant::now();
    let first = *eps_list.first().ok_or_else(|| CliError::MissingRequired("eps_list".into()))?;
    let params = cfg.params(first)?;
    let domain = cfg.domain()?;
    let archive = RunArchive::new(out);
    let basis = Arc::new(build_basis(&domain, cfg.modes)?);
    let weights = build_weights_cached(&domain, params.mu, Some(&archive.cache_dir()))?;
    let report = continuation(&params, &basis, &weights, eps_list, &cfg.solve_options(), cfg.strip_radius)?;
    let robin_at_x0 = match (cfg.robin, report.records.last()) {
        (true, Some(last)) => {
            let dim = domain.dim();
            Some(robin(&cfg.domain_kind(), cfg.s, &last.argmax[..dim], &RobinOptions::default())?)
        }
        _ => None,
    };
    let diagnostics = diagnose(&report, robin_at_x0.as_ref(), &weights);
    let file = ReportFile {
        schema_version: SCHEMA_VERSION,
        config: RunConfig { eps_list: Some(eps_list.to_vec()), ..cfg.clone() }.to_text(),
        report,
        robin_at_x0,
        diagnostics,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    archive.save(&file)?;
    Ok(file)
}

fn continuation_command(config: &Path, eps: Option<&str>, out: &Path) -> Result<(), CliError> {
    let cfg = load_config(config)?;
    let eps_list = match eps {
        Some(list) => parse_eps(list)?,
        None => cfg.eps_list.clone().ok_or_else(|| CliError::MissingRequired("eps_list".into()))?,
    };
    let file = run_continuation(&cfg, &eps_list, out)?;
    print!("{}", archive::summary_csv(&file.report));
    if let Some(bad) = file.report.records.iter().find(|r| r.status != Status::Converged) {
        return Err(CliError::Unconverged {
            status: bad.status,
            detail: format!("eps = {}, residual {}", g12(bad.eps), g12(bad.residual)),
        });
    }
    Ok(())
}

fn series_csv(header: &str, rows: &[Vec<f64>]) -> String {
    let mut out = format!("{header}\n");
    for r in rows {
        out.push_str(&csv_row(r));
        out.push('\n');
    }
    out
}

fn report_command(input: &Path, out: &Path) -> Result<(), CliError> {
    let file = load_report(input)?;
    let report = &file.report;
    let mut series: Vec<(&str, &str, Vec<Vec<f64>>)> = vec![
        ("sup_norm", "eps,sup_norm", report.records.iter().map(|r| vec![r.eps, r.sup_norm]).collect()),
        ("mu_eps", "eps,mu_eps", report.derived.iter().map(|d| vec![d.eps, d.mu_eps]).collect()),
        (
            "mu_eps_pow_eps",
            "eps,mu_eps_pow_eps",
            report.derived.iter().map(|d| vec![d.eps, d.mu_eps_pow_eps]).collect(),
        ),
        (
            "profile_distance",
            "eps,profile_distance",
            report.derived.iter().filter_map(|d| d.profile_distance.map(|p| vec![d.eps, p])).collect(),
        ),
        (
            "boundary",
            "eps,boundary_sup,interior_L1",
            report.derived.iter().map(|d| vec![d.eps, d.boundary_sup, d.interior_l1]).collect(),
        ),
    ];
    if let Some(rate) = &file.diagnostics.rate_law {
        series.push(("rate_lhs", "eps,lhs,rhs", rate.lhs.iter().map(|(e, v)| vec![*e, *v, rate.rhs]).collect()));
    }
    if let Some(balances) = &file.diagnostics.pohozaev {
        let rows = report
            .records
            .iter()
            .zip(balances)
            .map(|(r, b)| vec![r.eps, b.relative_gap, b.moment_balance_gap])
            .collect();
        series.push(("pohozaev", "eps,relative_gap,moment_balance_gap", rows));
    }
    for (name, header, rows) in &series {
        write(&out.join(format!("{name}.csv")), &series_csv(header, rows))?;
        let ylabel = header.split(',').nth(1).unwrap_or(name);
        let points: Vec<(f64, f64)> = rows.iter().map(|r| (r[0], r[1])).collect();
        write(&out.join(format!("{name}.svg")), &plot::line_chart(name, "eps", ylabel, &points))?;
    }
    if let Some(last) = report.records.last() {
        let u = GridField { domain: report.domain, values: last.values.clone() };
        write(&out.join("last_field.csv"), &field_csv(&u))?;
    }
    Ok(())
}
