//! The `randens` command line: `eval`, `verify` and `scan-pd`.
//!
//! Settings come from three layers, highest first: command-line flags, a
//! flat TOML file given with `--config`, built-in defaults. Output goes to
//! `--out` or standard output; diagnostics go to standard error.
//!
//! Exit status: 0 on success, 1 when `verify` finds a failing suite that was
//! expected to pass, 2 for configuration and domain errors, 3 when a grid
//! point could not be computed (its row is still written, marked in the
//! `status` column).
//!
//! CSV columns of `eval`:
//!
//! ```text
//! family,p1,p2,method,g11,g12,g22,t111,t112,t122,t222,err_estimate,pd_flag,status
//! ```
//!
//! `scan-pd` writes `family,p1,p2,g11,g12,g22,err_estimate,pd_flag,lambda1,lambda2,status`.
//! Numbers use 17 significant digits; cells that were not computed are empty.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ParamPoint;
use crate::geometry::{self, FisherMatrix, FormulaMode, StructureTensor};
use crate::grid::GridSpec;
use crate::kernels::FamilyTag;
use crate::quadrature::QuadratureConfig;
use crate::sources::SourceSpec;
use crate::verify::{self, ResidualReport, Status};

pub const EXIT_OK: i32 = 0;
pub const EXIT_SUITE_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

pub const EVAL_HEADER: [&str; 14] = [
    "family",
    "p1",
    "p2",
    "method",
    "g11",
    "g12",
    "g22",
    "t111",
    "t112",
    "t122",
    "t222",
    "err_estimate",
    "pd_flag",
    "status",
];

pub const SCAN_HEADER: [&str; 11] = [
    "family",
    "p1",
    "p2",
    "g11",
    "g12",
    "g22",
    "err_estimate",
    "pd_flag",
    "lambda1",
    "lambda2",
    "status",
];

#[derive(Debug, Parser)]
#[command(name = "randens", version, about = "Fisher metric and structure tensor of randomized densities")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate metric and/or tensor over a parameter grid.
    Eval(RunArgs),
    /// Run the kernel identity suite and, with --source, the consistency suite.
    Verify(RunArgs),
    /// Check positive definiteness of the direct-method metric over a grid.
    ScanPd(RunArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// heat or laplace
    #[arg(long)]
    pub family: Option<String>,
    /// Source descriptor, e.g. `gaussian:mu=0,sigma=1` or `mix:0.5*uniform:a=0,b=1|0.5*cauchy:gamma=2`
    #[arg(long)]
    pub source: Option<String>,
    /// `p1=lo:hi:count,p2=lo:hi:count`
    #[arg(long)]
    pub grid: Option<String>,
    /// closed, direct or both
    #[arg(long)]
    pub method: Option<String>,
    /// printed or corrected
    #[arg(long)]
    pub mode: Option<String>,
    /// metric, tensor or both
    #[arg(long)]
    pub quantity: Option<String>,
    #[arg(long)]
    pub abs_tol: Option<f64>,
    #[arg(long)]
    pub rel_tol: Option<f64>,
    #[arg(long)]
    pub max_subdivisions: Option<usize>,
    #[arg(long)]
    pub tail_tol: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Sample size of the identity suite.
    #[arg(long)]
    pub n_points: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// csv or json
    #[arg(long)]
    pub format: Option<String>,
    /// Flat TOML file with the same keys as the flags (underscored).
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Contents of a `--config` file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    family: Option<String>,
    source: Option<String>,
    grid: Option<String>,
    method: Option<String>,
    mode: Option<String>,
    quantity: Option<String>,
    abs_tol: Option<f64>,
    rel_tol: Option<f64>,
    max_subdivisions: Option<usize>,
    tail_tol: Option<f64>,
    seed: Option<u64>,
    n_points: Option<usize>,
    out: Option<PathBuf>,
    format: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Closed,
    Direct,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Quantity {
    Metric,
    Tensor,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

fn parse_choice<T: Copy>(what: &str, s: &str, choices: &[(&str, T)]) -> Result<T> {
    let key = s.trim().to_ascii_lowercase();
    choices
        .iter()
        .find(|(name, _)| *name == key)
        .map(|(_, v)| *v)
        .ok_or_else(|| {
            let names: Vec<&str> = choices.iter().map(|(n, _)| *n).collect();
            Error::Parse(format!("unknown {what} {s:?} (expected {})", names.join(", ")))
        })
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        parse_choice(
            "method",
            s,
            &[("closed", Method::Closed), ("direct", Method::Direct), ("both", Method::Both)],
        )
    }
}

impl FromStr for Quantity {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        parse_choice(
            "quantity",
            s,
            &[("metric", Quantity::Metric), ("tensor", Quantity::Tensor), ("both", Quantity::Both)],
        )
    }
}

impl FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        parse_choice("format", s, &[("csv", Format::Csv), ("json", Format::Json)])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Subcmd {
    Eval,
    Verify,
    ScanPd,
}

/// Fully resolved settings of one run. The serialized form is echoed in
/// JSON reports; it leaves out the output path so that reports written to
/// different files compare equal.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub family: FamilyTag,
    #[serde(serialize_with = "ser_display_opt")]
    pub source: Option<SourceSpec>,
    #[serde(serialize_with = "ser_display_opt")]
    pub grid: Option<GridSpec>,
    pub method: Method,
    pub mode: FormulaMode,
    pub quantity: Quantity,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    pub tail_tol: f64,
    pub seed: u64,
    pub n_points: usize,
    pub format: Format,
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

fn ser_display_opt<T: std::fmt::Display, S: serde::Serializer>(
    v: &Option<T>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(v) => s.collect_str(v),
        None => s.serialize_none(),
    }
}

impl RunConfig {
    pub fn quadrature(&self) -> QuadratureConfig {
        QuadratureConfig {
            abs_tol: self.abs_tol,
            rel_tol: self.rel_tol,
            max_subdivisions: self.max_subdivisions,
            tail_tol: self.tail_tol,
            ..QuadratureConfig::default()
        }
    }

    fn require_source(&self) -> Result<&SourceSpec> {
        self.source
            .as_ref()
            .ok_or_else(|| Error::Config("--source is required".into()))
    }

    fn require_grid(&self) -> Result<&GridSpec> {
        self.grid
            .as_ref()
            .ok_or_else(|| Error::Config("--grid is required".into()))
    }
}

fn default_verify_grid(family: FamilyTag) -> GridSpec {
    let s = match family {
        FamilyTag::Heat => "p1=-1:1:5,p2=0.2:1:5",
        FamilyTag::Laplace => "p1=0.5:2:3,p2=-1:1:3",
    };
    s.parse().expect("built-in grid parses")
}

fn resolve(args: &RunArgs, cmd: Subcmd) -> Result<RunConfig> {
    let file = match &args.config {
        Some(path) => load_file_config(path)?,
        None => FileConfig::default(),
    };
    fn pick<T: Clone>(flag: &Option<T>, file: &Option<T>) -> Option<T> {
        flag.clone().or_else(|| file.clone())
    }

    let family: FamilyTag = pick(&args.family, &file.family)
        .ok_or_else(|| Error::Config("--family is required".into()))?
        .parse()?;
    let source = pick(&args.source, &file.source)
        .map(|s| s.parse::<SourceSpec>())
        .transpose()?;
    let mut grid = pick(&args.grid, &file.grid)
        .map(|s| s.parse::<GridSpec>())
        .transpose()?;
    if grid.is_none() && cmd == Subcmd::Verify && source.is_some() {
        grid = Some(default_verify_grid(family));
    }
    fn parse_or<T: FromStr<Err = Error>>(v: Option<String>, default: T) -> Result<T> {
        v.map(|s| s.parse()).transpose().map(|o| o.unwrap_or(default))
    }
    let defaults = QuadratureConfig::default();
    let cfg = RunConfig {
        family,
        source,
        grid,
        method: parse_or(pick(&args.method, &file.method), Method::Both)?,
        mode: parse_or(pick(&args.mode, &file.mode), FormulaMode::Printed)?,
        quantity: parse_or(pick(&args.quantity, &file.quantity), Quantity::Both)?,
        abs_tol: pick(&args.abs_tol, &file.abs_tol).unwrap_or(defaults.abs_tol),
        rel_tol: pick(&args.rel_tol, &file.rel_tol).unwrap_or(defaults.rel_tol),
        max_subdivisions: pick(&args.max_subdivisions, &file.max_subdivisions)
            .unwrap_or(defaults.max_subdivisions),
        tail_tol: pick(&args.tail_tol, &file.tail_tol).unwrap_or(defaults.tail_tol),
        seed: pick(&args.seed, &file.seed).unwrap_or(42),
        n_points: pick(&args.n_points, &file.n_points).unwrap_or(100),
        format: parse_or(
            pick(&args.format, &file.format),
            if cmd == Subcmd::Verify { Format::Json } else { Format::Csv },
        )?,
        out: pick(&args.out, &file.out),
    };
    cfg.quadrature().validate()?;
    if cfg.n_points == 0 {
        return Err(Error::Config("n_points must be at least 1".into()));
    }
    if let Some(g) = &cfg.grid {
        g.points(cfg.family)?;
    }
    Ok(cfg)
}

fn load_file_config(path: &Path) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn fmt_num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        String::new()
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_num).unwrap_or_default()
}

/// One output row of `eval` or `scan-pd`.
#[derive(Debug, Clone, Serialize)]
pub struct EvalRow {
    pub family: FamilyTag,
    pub p1: f64,
    pub p2: f64,
    pub method: &'static str,
    pub metric: Option<FisherMatrix>,
    pub tensor: Option<StructureTensor>,
    pub err_estimate: Option<f64>,
    pub pd_flag: Option<bool>,
    pub eigenvalues: Option<(f64, f64)>,
    pub status: String,
    #[serde(skip)]
    pub error: Option<Error>,
}

impl EvalRow {
    fn new(theta: ParamPoint, method: &'static str) -> Self {
        EvalRow {
            family: theta.family,
            p1: theta.p1,
            p2: theta.p2,
            method,
            metric: None,
            tensor: None,
            err_estimate: None,
            pd_flag: None,
            eigenvalues: None,
            status: "ok".into(),
            error: None,
        }
    }

    fn failed(mut self, e: Error) -> Self {
        self.status = format!("failed: {e}");
        self.error = Some(e);
        self
    }

    fn with_metric(mut self, g: FisherMatrix) -> Self {
        let (pd, eig) = geometry::pd_check(&g);
        self.metric = Some(g);
        self.pd_flag = Some(pd);
        self.eigenvalues = Some(eig);
        self
    }

    fn eval_record(&self) -> Vec<String> {
        let g = self.metric;
        let t = self.tensor;
        vec![
            self.family.to_string(),
            fmt_num(self.p1),
            fmt_num(self.p2),
            self.method.to_string(),
            fmt_opt(g.map(|g| g.g11)),
            fmt_opt(g.map(|g| g.g12)),
            fmt_opt(g.map(|g| g.g22)),
            fmt_opt(t.map(|t| t.t111)),
            fmt_opt(t.map(|t| t.t112)),
            fmt_opt(t.map(|t| t.t122)),
            fmt_opt(t.map(|t| t.t222)),
            fmt_opt(self.err_estimate),
            self.pd_flag.map(|b| b.to_string()).unwrap_or_default(),
            self.status.clone(),
        ]
    }

    fn scan_record(&self) -> Vec<String> {
        let g = self.metric;
        vec![
            self.family.to_string(),
            fmt_num(self.p1),
            fmt_num(self.p2),
            fmt_opt(g.map(|g| g.g11)),
            fmt_opt(g.map(|g| g.g12)),
            fmt_opt(g.map(|g| g.g22)),
            fmt_opt(self.err_estimate),
            self.pd_flag.map(|b| b.to_string()).unwrap_or_default(),
            fmt_opt(self.eigenvalues.map(|e| e.0)),
            fmt_opt(self.eigenvalues.map(|e| e.1)),
            self.status.clone(),
        ]
    }
}

fn closed_row(cfg: &RunConfig, source: &SourceSpec, theta: ParamPoint) -> EvalRow {
    let row = EvalRow::new(theta, "closed");
    match geometry::closed_forms(source, theta, &cfg.quadrature(), cfg.mode) {
        Ok((g, t, err)) => {
            let mut row = if cfg.quantity != Quantity::Tensor { row.with_metric(g) } else { row };
            if cfg.quantity != Quantity::Metric {
                row.tensor = Some(t);
            }
            row.err_estimate = Some(err);
            row
        }
        Err(e) => row.failed(e),
    }
}

fn direct_row(cfg: &RunConfig, source: &SourceSpec, theta: ParamPoint) -> EvalRow {
    let row = EvalRow::new(theta, "direct");
    let qcfg = cfg.quadrature();
    if cfg.quantity == Quantity::Metric {
        return match geometry::fisher_direct(source, theta, &qcfg) {
            Ok((g, err)) => {
                let mut row = row.with_metric(g);
                row.err_estimate = Some(err);
                row
            }
            Err(e) => row.failed(e),
        };
    }
    match geometry::direct_moments(source, theta, &qcfg) {
        Ok(m) => {
            let mut row = if cfg.quantity == Quantity::Both { row.with_metric(m.metric) } else { row };
            row.tensor = Some(m.tensor);
            row.err_estimate = Some(m.err);
            row
        }
        Err(e) => row.failed(e),
    }
}

/// Rows of `eval` in grid order, closed before direct at each point.
pub fn eval_rows(cfg: &RunConfig) -> Result<Vec<EvalRow>> {
    let source = cfg.require_source()?;
    let points = cfg.require_grid()?.points(cfg.family)?;
    let per_point: Vec<Vec<EvalRow>> = points
        .par_iter()
        .map(|&theta| {
            let mut rows = Vec::with_capacity(2);
            if cfg.method != Method::Direct {
                rows.push(closed_row(cfg, source, theta));
            }
            if cfg.method != Method::Closed {
                rows.push(direct_row(cfg, source, theta));
            }
            rows
        })
        .collect();
    Ok(per_point.into_iter().flatten().collect())
}

/// Rows of `scan-pd`: direct-method metric at every grid point.
pub fn scan_rows(cfg: &RunConfig) -> Result<Vec<EvalRow>> {
    let source = cfg.require_source()?;
    let points = cfg.require_grid()?.points(cfg.family)?;
    let metric_only = RunConfig {
        quantity: Quantity::Metric,
        ..cfg.clone()
    };
    Ok(points
        .par_iter()
        .map(|&theta| direct_row(&metric_only, source, theta))
        .collect())
}

fn write_csv(header: &[&str], records: impl Iterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(header).map_err(io)?;
    for r in records {
        w.write_record(&r).map_err(io)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.to_string()))
}

fn write_json(cfg: &RunConfig, reports: &impl Serialize, summary: serde_json::Value) -> Result<Vec<u8>> {
    let doc = serde_json::json!({
        "config": cfg,
        "reports": reports,
        "summary": summary,
    });
    let mut bytes = serde_json::to_vec_pretty(&doc).map_err(|e| Error::Io(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn emit(cfg: &RunConfig, bytes: &[u8], stdout: &mut dyn Write) -> Result<()> {
    match &cfg.out {
        Some(path) => std::fs::write(path, bytes)
            .map_err(|e| Error::Io(format!("cannot write {}: {e}", path.display()))),
        None => stdout.write_all(bytes).map_err(Error::from),
    }
}

fn row_failure_code(rows: &[EvalRow]) -> i32 {
    if rows.iter().any(|r| r.error.is_some()) {
        EXIT_NUMERICAL
    } else {
        EXIT_OK
    }
}

fn cmd_eval(cfg: &RunConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let rows = eval_rows(cfg)?;
    let failures = rows.iter().filter(|r| r.error.is_some()).count();
    let bytes = match cfg.format {
        Format::Csv => write_csv(&EVAL_HEADER, rows.iter().map(EvalRow::eval_record))?,
        Format::Json => write_json(
            cfg,
            &rows,
            serde_json::json!({ "rows": rows.len(), "failed_rows": failures }),
        )?,
    };
    emit(cfg, &bytes, stdout)?;
    if failures > 0 {
        let _ = writeln!(stderr, "{failures} of {} rows failed", rows.len());
    }
    Ok(row_failure_code(&rows))
}

fn cmd_scan_pd(cfg: &RunConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let rows = scan_rows(cfg)?;
    let non_pd = rows.iter().filter(|r| r.pd_flag != Some(true)).count();
    let failures = rows.iter().filter(|r| r.error.is_some()).count();
    let bytes = match cfg.format {
        Format::Csv => write_csv(&SCAN_HEADER, rows.iter().map(EvalRow::scan_record))?,
        Format::Json => write_json(
            cfg,
            &rows,
            serde_json::json!({ "points": rows.len(), "non_pd": non_pd, "failed_rows": failures }),
        )?,
    };
    emit(cfg, &bytes, stdout)?;
    let line = format!("non-PD points: {non_pd} of {}", rows.len());
    if cfg.out.is_some() {
        let _ = writeln!(stdout, "{line}");
    } else {
        let _ = writeln!(stderr, "{line}");
    }
    Ok(row_failure_code(&rows))
}

/// Identity suite, plus the consistency suite when a source is configured.
pub fn verify_reports(cfg: &RunConfig) -> Result<Vec<ResidualReport>> {
    let mut reports = verify::run_identity_suite(cfg.family, cfg.mode, cfg.n_points, cfg.seed);
    if let Some(source) = &cfg.source {
        let grid = cfg.require_grid()?;
        reports.extend(verify::run_consistency_suite(
            source,
            cfg.family,
            grid,
            &cfg.quadrature(),
            cfg.mode,
        )?);
    }
    Ok(reports)
}

fn cmd_verify(cfg: &RunConfig, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    let reports = verify_reports(cfg)?;
    let count = |s: Status| reports.iter().filter(|r| r.status == s).count();
    let (pass, fail, known) = (
        count(Status::Pass),
        count(Status::Fail),
        count(Status::KnownDiscrepancy),
    );
    let code = if fail > 0 { EXIT_SUITE_FAILED } else { EXIT_OK };
    let bytes = match cfg.format {
        Format::Json => write_json(
            cfg,
            &reports,
            serde_json::json!({
                "reports": reports.len(),
                "pass": pass,
                "fail": fail,
                "known_discrepancy": known,
                "exit_status": code,
            }),
        )?,
        Format::Csv => {
            let header = [
                "id",
                "suite",
                "n_points",
                "max_abs",
                "max_rel",
                "argmax_1",
                "argmax_2",
                "tolerance",
                "status",
                "failed_points",
            ];
            write_csv(
                &header,
                reports.iter().map(|r| {
                    vec![
                        r.id.clone(),
                        r.suite.clone(),
                        r.n_points.to_string(),
                        fmt_num(r.max_abs),
                        fmt_num(r.max_rel),
                        fmt_opt(r.argmax.map(|a| a[0])),
                        fmt_opt(r.argmax.map(|a| a[1])),
                        fmt_num(r.tolerance),
                        r.status.to_string(),
                        r.failed_points.to_string(),
                    ]
                }),
            )?
        }
    };
    emit(cfg, &bytes, stdout)?;
    for r in reports.iter().filter(|r| r.is_failure()) {
        let _ = writeln!(stderr, "FAILED {}: max_rel {:e} (tolerance {:e})", r.id, r.max_rel, r.tolerance);
    }
    Ok(code)
}

fn exit_code_for(e: &Error) -> i32 {
    if e.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_CONFIG
    }
}

/// Run a parsed command line; returns the process exit status.
pub fn run(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let (args, sub) = match &cli.command {
        Command::Eval(a) => (a, Subcmd::Eval),
        Command::Verify(a) => (a, Subcmd::Verify),
        Command::ScanPd(a) => (a, Subcmd::ScanPd),
    };
    let outcome = resolve(args, sub).and_then(|cfg| match sub {
        Subcmd::Eval => cmd_eval(&cfg, stdout, stderr),
        Subcmd::Verify => cmd_verify(&cfg, stdout, stderr),
        Subcmd::ScanPd => cmd_scan_pd(&cfg, stdout, stderr),
    });
    match outcome {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code_for(&e)
        }
    }
}

/// Parse `args` (program name first) and run.
pub fn run_from_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli, stdout, stderr),
        Err(e) => {
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(stderr, "{text}");
            } else {
                let _ = write!(stdout, "{text}");
            }
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run_from_args(std::iter::once("randens").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn eval_closed_heat_improper() {
        let (code, out, _) = run_args(&[
            "eval",
            "--family",
            "heat",
            "--source",
            "improper-uniform",
            "--grid",
            "p1=0:0:1,p2=0.5:0.5:1",
            "--method",
            "closed",
        ]);
        assert_eq!(code, 0);
        let mut rdr = csv::Reader::from_reader(out.as_bytes());
        let rec = rdr.records().next().unwrap().unwrap();
        assert_eq!(rec[4].parse::<f64>().unwrap(), 1.0);
        assert_eq!(rec[5].parse::<f64>().unwrap(), 0.0);
        assert_eq!(rec[6].parse::<f64>().unwrap(), 2.0);
        assert_eq!(&rec[12], "true");
    }

    #[test]
    fn bad_sigma_names_field() {
        let (code, _, err) = run_args(&[
            "eval",
            "--family",
            "heat",
            "--source",
            "gaussian:sigma=-1",
            "--grid",
            "p1=0:1:2,p2=0.5:1:2",
        ]);
        assert_eq!(code, 2);
        assert!(err.contains("sigma"), "{err}");
    }

    #[test]
    fn zero_time_is_domain_error() {
        let (code, _, _) = run_args(&[
            "scan-pd",
            "--family",
            "heat",
            "--source",
            "gaussian:sigma=1",
            "--grid",
            "p1=0:1:2,p2=0:1:2",
        ]);
        assert_eq!(code, 2);
    }

    #[test]
    fn missing_family_and_unknown_flag() {
        assert_eq!(run_args(&["eval"]).0, 2);
        assert_eq!(run_args(&["eval", "--bogus"]).0, 2);
        assert_eq!(run_args(&["verify", "--family", "heat", "--mode", "fancy"]).0, 2);
    }

    #[test]
    fn verify_exit_statuses() {
        for (family, mode) in [("heat", "printed"), ("laplace", "printed"), ("laplace", "corrected")] {
            let (code, out, _) = run_args(&["verify", "--family", family, "--mode", mode, "--seed", "42"]);
            assert_eq!(code, 0, "{family} {mode}");
            let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
            let known = doc["summary"]["known_discrepancy"].as_u64().unwrap();
            assert_eq!(known > 0, family == "laplace" && mode == "printed");
        }
    }

    #[test]
    fn config_file_layering() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(
            &path,
            "family = \"laplace\"\nsource = \"improper-uniform\"\ngrid = \"p1=1:1:1,p2=0:0:1\"\nmethod = \"direct\"\nquantity = \"metric\"\n",
        )
        .unwrap();
        let p = path.to_str().unwrap();
        let (code, out, _) = run_args(&["eval", "--config", p]);
        assert_eq!(code, 0);
        assert!(out.lines().nth(1).unwrap().starts_with("laplace,"));
        let (code, out, _) = run_args(&["eval", "--config", p, "--method", "closed"]);
        assert_eq!(code, 0);
        assert!(out.contains(",closed,"));

        std::fs::write(&path, "famly = \"heat\"\n").unwrap();
        assert_eq!(run_args(&["eval", "--config", p]).0, 2);
    }
}
