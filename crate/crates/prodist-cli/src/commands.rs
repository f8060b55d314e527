//! Subcommand implementations: evaluate densities and CDFs on grids, compute
//! moments, draw samples, fit data files and run experiment plans.

use crate::error::{CliError, CliResult};
use crate::spec_io::{parse_joint_arg, plan_from_dto, product_spec, PlanDto, StrategyDto};
use crate::table::read_column;
use prodist::fit::{fit_mle, FitProblem, FreeParam};
use prodist::validate::run_experiment;
use prodist::ExperimentReport;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

pub fn write_output(out: &Option<PathBuf>, bytes: &[u8]) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, bytes).map_err(CliError::from),
        None => {
            std::io::stdout()
                .write_all(bytes)
                .map_err(CliError::from)
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> CliResult<Vec<u8>> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Usage(format!("serialization failed: {e}")))?;
    text.push('\n');
    Ok(text.into_bytes())
}

fn grid_csv(header: &str, rows: &[(f64, f64)]) -> Vec<u8> {
    let mut text = String::with_capacity(rows.len() * 32);
    text.push_str(header);
    text.push('\n');
    for (a, b) in rows {
        text.push_str(&format!("{a},{b}\n"));
    }
    text.into_bytes()
}

#[derive(Debug, clap::Args)]
pub struct SpecArgs {
    /// Joint spec as inline JSON or @path to a JSON file
    #[arg(long)]
    pub spec: String,
    /// Evaluation strategy
    #[arg(long, value_enum)]
    pub strategy: Option<CliStrategy>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum CliStrategy {
    Auto,
    ClosedForm,
    Quadrature,
}

impl From<CliStrategy> for StrategyDto {
    fn from(s: CliStrategy) -> Self {
        match s {
            CliStrategy::Auto => StrategyDto::Auto,
            CliStrategy::ClosedForm => StrategyDto::ClosedForm,
            CliStrategy::Quadrature => StrategyDto::Quadrature,
        }
    }
}

impl SpecArgs {
    pub fn build(&self, quad_rel_tol: Option<f64>) -> CliResult<prodist::ProductSpec> {
        let joint = parse_joint_arg(&self.spec)?;
        product_spec(joint, quad_rel_tol, self.strategy.map(Into::into))
    }
}

#[derive(Debug, clap::Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    /// Single evaluation point
    #[arg(long, conflicts_with_all = ["z_min", "z_max"])]
    pub z: Option<f64>,
    /// Grid lower bound
    #[arg(long, requires = "z_max")]
    pub z_min: Option<f64>,
    /// Grid upper bound
    #[arg(long, requires = "z_min")]
    pub z_max: Option<f64>,
    /// Number of grid points
    #[arg(long, default_value_t = 201)]
    pub points: usize,
    /// Log-spaced grid (bounds must be positive)
    #[arg(long)]
    pub log_spaced: bool,
}

impl EvalArgs {
    fn points(&self) -> CliResult<Vec<f64>> {
        if let Some(z) = self.z {
            return Ok(vec![z]);
        }
        let (lo, hi) = match (self.z_min, self.z_max) {
            (Some(lo), Some(hi)) if lo < hi => (lo, hi),
            (Some(_), Some(_)) => {
                return Err(CliError::Usage("--z-min must be below --z-max".into()))
            }
            _ => return Err(CliError::Usage("provide --z or --z-min/--z-max".into())),
        };
        let n = self.points.max(2);
        if self.log_spaced {
            if lo <= 0.0 {
                return Err(CliError::Usage(
                    "--log-spaced requires positive bounds".into(),
                ));
            }
            let (l0, l1) = (lo.ln(), hi.ln());
            Ok((0..n)
                .map(|i| (l0 + (l1 - l0) * i as f64 / (n - 1) as f64).exp())
                .collect())
        } else {
            Ok((0..n)
                .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
                .collect())
        }
    }
}

#[derive(Serialize)]
struct CurveReport {
    schema_version: u32,
    z: Vec<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pdf: Vec<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    cdf: Vec<f64>,
}

pub fn cmd_pdf(
    args: &EvalArgs,
    quad_rel_tol: Option<f64>,
    format: OutputFormat,
    out: &Option<PathBuf>,
) -> CliResult<()> {
    let spec = args.spec.build(quad_rel_tol)?;
    let zs = args.points()?;
    let mut pdf = Vec::with_capacity(zs.len());
    for &z in &zs {
        pdf.push(spec.pdf(z).map_err(CliError::from)?);
    }
    let bytes = match format {
        OutputFormat::Json => to_json(&CurveReport {
            schema_version: 1,
            z: zs,
            pdf,
            cdf: Vec::new(),
        })?,
        OutputFormat::Csv => {
            let rows: Vec<(f64, f64)> = zs.into_iter().zip(pdf).collect();
            grid_csv("z,pdf", &rows)
        }
    };
    write_output(out, &bytes)
}

pub fn cmd_cdf(
    args: &EvalArgs,
    quad_rel_tol: Option<f64>,
    format: OutputFormat,
    out: &Option<PathBuf>,
) -> CliResult<()> {
    let spec = args.spec.build(quad_rel_tol)?;
    let zs = args.points()?;
    let mut cdf = Vec::with_capacity(zs.len());
    for &z in &zs {
        cdf.push(spec.cdf(z).map_err(CliError::from)?);
    }
    let bytes = match format {
        OutputFormat::Json => to_json(&CurveReport {
            schema_version: 1,
            z: zs,
            pdf: Vec::new(),
            cdf,
        })?,
        OutputFormat::Csv => {
            let rows: Vec<(f64, f64)> = zs.into_iter().zip(cdf).collect();
            grid_csv("z,cdf", &rows)
        }
    };
    write_output(out, &bytes)
}

#[derive(Serialize)]
struct MomentsReport {
    schema_version: u32,
    mean: Option<f64>,
    variance: Option<f64>,
}

pub fn cmd_moments(
    args: &SpecArgs,
    quad_rel_tol: Option<f64>,
    format: OutputFormat,
    out: &Option<PathBuf>,
) -> CliResult<()> {
    let spec = args.build(quad_rel_tol)?;
    let m = spec.moments().map_err(CliError::from)?;
    let bytes = match format {
        OutputFormat::Json => to_json(&MomentsReport {
            schema_version: 1,
            mean: m.mean,
            variance: m.variance,
        })?,
        OutputFormat::Csv => {
            let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            format!("mean,variance\n{},{}\n", fmt(m.mean), fmt(m.variance)).into_bytes()
        }
    };
    write_output(out, &bytes)
}

#[derive(Debug, clap::Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    /// Number of draws
    #[arg(long, default_value_t = 1000)]
    pub count: usize,
}

#[derive(Serialize)]
struct SampleReport {
    schema_version: u32,
    seed: u64,
    count: usize,
    z: Vec<f64>,
}

pub fn cmd_sample(
    args: &SampleArgs,
    seed: u64,
    quad_rel_tol: Option<f64>,
    format: OutputFormat,
    out: &Option<PathBuf>,
) -> CliResult<()> {
    let spec = args.spec.build(quad_rel_tol)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let zs = spec.sample(&mut rng, args.count);
    let bytes = match format {
        OutputFormat::Json => to_json(&SampleReport {
            schema_version: 1,
            seed,
            count: args.count,
            z: zs,
        })?,
        OutputFormat::Csv => {
            let mut text = String::from("z\n");
            for z in zs {
                text.push_str(&format!("{z}\n"));
            }
            text.into_bytes()
        }
    };
    write_output(out, &bytes)
}

#[derive(Debug, clap::Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    /// Comma-separated free parameter names (e.g. "a,theta_prod")
    #[arg(long)]
    pub free: String,
    /// CSV file with the z sample
    #[arg(long)]
    pub data: PathBuf,
    /// Column holding the z values (header name or 0-based index)
    #[arg(long, default_value = "z")]
    pub column: String,
    /// Field delimiter
    #[arg(long, default_value_t = ',')]
    pub delimiter: char,
    /// Treat the first row as data, not a header
    #[arg(long)]
    pub no_header: bool,
    /// Number of optimizer starts
    #[arg(long, default_value_t = 5)]
    pub multistart: usize,
}

#[derive(Serialize)]
struct FitReport {
    schema_version: u32,
    estimates: BTreeMap<String, f64>,
    loglik: f64,
    converged: bool,
    iterations: usize,
    starts_tried: usize,
    excluded_points: usize,
    skipped_rows: usize,
}

fn delimiter_byte(c: char) -> CliResult<u8> {
    u8::try_from(c).map_err(|_| CliError::Usage("delimiter must be a single ASCII byte".into()))
}

pub fn cmd_fit(
    args: &FitArgs,
    seed: u64,
    quad_rel_tol: Option<f64>,
    format: OutputFormat,
    out: &Option<PathBuf>,
) -> CliResult<()> {
    let template = args.spec.build(quad_rel_tol)?;
    let (data, skipped) = read_column(
        &args.data,
        &args.column,
        delimiter_byte(args.delimiter)?,
        !args.no_header,
    )?;
    let free: Vec<FreeParam> = args
        .free
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(FreeParam::new)
        .collect();
    let mut problem = FitProblem::new(data, template, free).map_err(CliError::from)?;
    problem.seed = seed;
    problem.multistart = args.multistart;
    let fit = fit_mle(&problem).map_err(CliError::from)?;
    let report = FitReport {
        schema_version: 1,
        estimates: fit.estimates.into_iter().collect(),
        loglik: fit.loglik,
        converged: fit.converged,
        iterations: fit.iterations,
        starts_tried: fit.starts_tried,
        excluded_points: fit.excluded_points,
        skipped_rows: skipped,
    };
    let bytes = match format {
        OutputFormat::Json => to_json(&report)?,
        OutputFormat::Csv => {
            let mut text = String::from("parameter,estimate\n");
            for (name, value) in &report.estimates {
                text.push_str(&format!("{name},{value}\n"));
            }
            text.into_bytes()
        }
    };
    write_output(out, &bytes)
}

#[derive(Debug, clap::Args)]
pub struct ExperimentArgs {
    /// JSON experiment plan file
    #[arg(long)]
    pub plan: PathBuf,
}

#[derive(Serialize)]
struct SummaryDto {
    min: f64,
    q25: f64,
    median: f64,
    q75: f64,
    max: f64,
}

#[derive(Serialize)]
struct GridDto {
    z: Vec<f64>,
    values: Vec<f64>,
}

#[derive(Serialize)]
struct ExperimentReportDto {
    schema_version: u32,
    param_names: Vec<String>,
    truth: Vec<f64>,
    estimates: Vec<Vec<f64>>,
    errors: Vec<Vec<f64>>,
    error_summary: Vec<SummaryDto>,
    ks: Vec<f64>,
    failures: usize,
    pdf_grid: GridDto,
    tail_grid: GridDto,
}

impl From<&ExperimentReport> for ExperimentReportDto {
    fn from(r: &ExperimentReport) -> Self {
        ExperimentReportDto {
            schema_version: 1,
            param_names: r.param_names.clone(),
            truth: r.truth.clone(),
            estimates: r.estimates.clone(),
            errors: r.errors.clone(),
            error_summary: r
                .error_summary
                .iter()
                .map(|s| SummaryDto {
                    min: s.min,
                    q25: s.q25,
                    median: s.median,
                    q75: s.q75,
                    max: s.max,
                })
                .collect(),
            ks: r.ks.clone(),
            failures: r.failures,
            pdf_grid: GridDto {
                z: r.pdf_grid.iter().map(|p| p.0).collect(),
                values: r.pdf_grid.iter().map(|p| p.1).collect(),
            },
            tail_grid: GridDto {
                z: r.tail_grid.iter().map(|p| p.0).collect(),
                values: r.tail_grid.iter().map(|p| p.1).collect(),
            },
        }
    }
}

pub fn cmd_experiment(
    args: &ExperimentArgs,
    seed: u64,
    quad_rel_tol: Option<f64>,
    format: OutputFormat,
    out: &Option<PathBuf>,
) -> CliResult<()> {
    let text = std::fs::read_to_string(&args.plan)
        .map_err(|e| CliError::Data(format!("cannot read plan {}: {e}", args.plan.display())))?;
    let dto: PlanDto = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("invalid plan json: {e}")))?;
    let plan = plan_from_dto(dto, seed, quad_rel_tol)?;
    let report = run_experiment(&plan).map_err(CliError::from)?;
    let bytes = match format {
        OutputFormat::Json => to_json(&ExperimentReportDto::from(&report))?,
        OutputFormat::Csv => {
            // CSV output carries one grid: the density if requested, else the
            // survival tail.
            if !report.pdf_grid.is_empty() {
                grid_csv("z,pdf", &report.pdf_grid)
            } else if !report.tail_grid.is_empty() {
                grid_csv("z,survival", &report.tail_grid)
            } else {
                return Err(CliError::Usage(
                    "csv output requires a pdf_grid or tail_grid experiment output".into(),
                ));
            }
        }
    };
    write_output(out, &bytes)
}

#[derive(Debug, clap::Args)]
pub struct AnalyzeArgs {
    /// CSV file of transactions
    #[arg(long)]
    pub data: PathBuf,
    /// Volume column (header name or 0-based index)
    #[arg(long, default_value = "volume")]
    pub volume_col: String,
    /// Price column (header name or 0-based index)
    #[arg(long, default_value = "price")]
    pub price_col: String,
    /// Field delimiter
    #[arg(long, default_value_t = ',')]
    pub delimiter: char,
    /// Treat the first row as data, not a header
    #[arg(long)]
    pub no_header: bool,
    /// Minimum number of usable rows
    #[arg(long, default_value_t = 30)]
    pub min_rows: usize,
}

pub fn cmd_analyze(
    args: &AnalyzeArgs,
    seed: u64,
    quad_rel_tol: Option<f64>,
    format: OutputFormat,
    out: &Option<PathBuf>,
) -> CliResult<()> {
    let table = crate::table::ingest_csv(
        &args.data,
        &args.volume_col,
        &args.price_col,
        delimiter_byte(args.delimiter)?,
        !args.no_header,
    )?;
    let opts = crate::analyze::AnalyzeOptions {
        min_rows: args.min_rows,
        seed,
        quad_rel_tol,
    };
    let report = crate::analyze::analyze(&table, &opts)?;
    let bytes = match format {
        OutputFormat::Json => to_json(&report)?,
        OutputFormat::Csv => {
            // The analysis report is hierarchical; CSV output carries the
            // plot-ready value grid.
            let mut text = String::from("z");
            for curve in &report.value_pdf_grid.curves {
                text.push_str(&format!(",{}_{}", curve.family, curve.fit_kind));
            }
            text.push('\n');
            for (i, z) in report.value_pdf_grid.z.iter().enumerate() {
                text.push_str(&z.to_string());
                for curve in &report.value_pdf_grid.curves {
                    text.push_str(&format!(",{}", curve.pdf[i]));
                }
                text.push('\n');
            }
            text.into_bytes()
        }
    };
    write_output(out, &bytes)
}
