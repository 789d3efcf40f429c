// SPDX-License-Identifier: Apache-2.0

//! The `retention` command line: validation, reports, fixtures and the
//! HTTP service.

mod render;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use retention_core::fixtures::{generate, FixtureSpec};
use retention_core::{build_snapshot, DataSources, IngestError, QueryError};
use retention_service::{Report, ServiceConfig, ServiceError};
use thiserror::Error;

pub use render::{payload, render_report, render_validation, PAYLOAD_MARKER};

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_DATA: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "retention", version, about = "Student retention analytics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Ingest the data files and print the ingest report.
    Validate {
        #[command(flatten)]
        data: DataArgs,
        /// Print the full report as JSON instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Run one report and print it as a table followed by its JSON payload.
    Report {
        #[arg(value_enum)]
        report: ReportKind,
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        options: ReportArgs,
    },
    /// Write a synthetic dataset and its ground-truth manifest.
    Fixtures(FixtureArgs),
    /// Serve the HTTP API.
    Serve {
        /// TOML config file; RETENTION_* variables override its values.
        #[arg(long)]
        serve_config: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct DataArgs {
    #[arg(long)]
    activity: PathBuf,
    #[arg(long)]
    cohort: PathBuf,
    #[arg(long)]
    mapping: Option<PathBuf>,
    /// Reference values; defaults to `<cohort>.meta` when present.
    #[arg(long)]
    cohort_meta: Option<PathBuf>,
}

impl DataArgs {
    fn sources(&self) -> DataSources {
        let mut sources = DataSources::new(&self.activity, &self.cohort).with_mapping(self.mapping.clone());
        sources.cohort_meta = self.cohort_meta.clone();
        sources
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportKind {
    Meta,
    Situations,
    CourseRanking,
    Tda,
    AttendanceBands,
    CrBands,
    Failures,
    Categories,
    Disciplines,
}

impl ReportKind {
    /// Endpoint path of the equivalent service report.
    pub fn path(self) -> &'static str {
        match self {
            ReportKind::Meta => "meta",
            ReportKind::Situations => "overview/situations",
            ReportKind::CourseRanking => "overview/course-ranking",
            ReportKind::Tda => "tda/histogram",
            ReportKind::AttendanceBands => "dropouts/attendance-bands",
            ReportKind::CrBands => "dropouts/cr-bands",
            ReportKind::Failures => "dropouts/failure-histogram",
            ReportKind::Categories => "dropouts/categories",
            ReportKind::Disciplines => "disciplines/ranking",
        }
    }
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Filter constraint `key=value`; repeatable.
    #[arg(long = "filter", value_name = "KEY=VALUE")]
    filters: Vec<String>,
    #[arg(long)]
    course: Option<String>,
    #[arg(long)]
    limit: Option<String>,
    #[arg(long)]
    order: Option<String>,
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    group: Option<String>,
    #[arg(long)]
    index: Option<String>,
    #[arg(long)]
    situation: Option<String>,
    #[arg(long)]
    mode: Option<String>,
    /// Write to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl ReportArgs {
    fn params(&self) -> Result<Vec<(String, String)>, CliError> {
        let mut params = Vec::new();
        for filter in &self.filters {
            let (key, value) = filter
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("--filter expects KEY=VALUE, got `{filter}`")))?;
            params.push((key.trim().to_owned(), value.to_owned()));
        }
        let named = [
            ("course", &self.course),
            ("limit", &self.limit),
            ("order", &self.order),
            ("kind", &self.kind),
            ("group", &self.group),
            ("index", &self.index),
            ("situation", &self.situation),
            ("mode", &self.mode),
        ];
        params.extend(named.into_iter().filter_map(|(k, v)| v.clone().map(|v| (k.to_owned(), v))));
        Ok(params)
    }
}

#[derive(Debug, Args)]
struct FixtureArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    students: Option<usize>,
    #[arg(long)]
    courses: Option<usize>,
    #[arg(long)]
    disciplines: Option<usize>,
    #[arg(long)]
    rows_per_student: Option<usize>,
    #[arg(long)]
    corruption_rate: Option<f64>,
    #[arg(long)]
    duplicate_rate: Option<f64>,
}

impl FixtureArgs {
    fn spec(&self) -> Result<FixtureSpec, CliError> {
        let mut spec = FixtureSpec::with_seed(self.seed);
        let positive = |name: &str, v: Option<usize>, slot: &mut usize| match v {
            Some(0) => Err(CliError::Usage(format!("--{name} must be positive"))),
            Some(v) => {
                *slot = v;
                Ok(())
            }
            None => Ok(()),
        };
        positive("students", self.students, &mut spec.students)?;
        positive("courses", self.courses, &mut spec.courses)?;
        positive("disciplines", self.disciplines, &mut spec.disciplines_per_course)?;
        positive("rows-per-student", self.rows_per_student, &mut spec.max_rows_per_student)?;
        for (name, v, slot) in [
            ("corruption-rate", self.corruption_rate, &mut spec.corruption_rate),
            ("duplicate-rate", self.duplicate_rate, &mut spec.duplicate_rate),
        ] {
            if let Some(v) = v {
                if !(0.0..=1.0).contains(&v) {
                    return Err(CliError::Usage(format!("--{name} must be within [0, 1], got {v}")));
                }
                *slot = v;
            }
        }
        Ok(spec)
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Service(#[from] ServiceError),
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Query(_) => EXIT_USAGE,
            _ => EXIT_DATA,
        }
    }
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit code.
pub fn run(args: impl IntoIterator<Item = impl Into<OsString> + Clone>, out: &mut dyn Write, err: &mut dyn Write) -> u8 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let target: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn execute(command: Command, out: &mut dyn Write) -> Result<(), CliError> {
    let stdout_error = |source| CliError::Write { path: PathBuf::from("<stdout>"), source };
    match command {
        Command::Validate { data, json } => {
            let snapshot = build_snapshot(&data.sources(), 1)?;
            let text = if json {
                serde_json::to_string_pretty(snapshot.report()).expect("report serializes") + "\n"
            } else {
                render_validation(snapshot.report())
            };
            out.write_all(text.as_bytes()).map_err(stdout_error)
        }
        Command::Report { report, data, options } => {
            let request = Report::parse(report.path(), &options.params()?)?;
            let snapshot = build_snapshot(&data.sources(), 1)?;
            let output = request.run(&snapshot)?;
            let text = render_report(report.path(), &output, snapshot.version());
            match options.out {
                Some(path) => std::fs::write(&path, text).map_err(|source| CliError::Write { path, source }),
                None => out.write_all(text.as_bytes()).map_err(stdout_error),
            }
        }
        Command::Fixtures(args) => {
            let spec = args.spec()?;
            let fixture = generate(&spec);
            let paths = fixture.write(&args.out).map_err(|source| CliError::Write { path: args.out.clone(), source })?;
            let m = &fixture.manifest;
            let text = format!(
                "activity  {}\ncohort    {}\nmeta      {}\nmanifest  {}\nrows {} (kept {}, deduplicated {}, rejected {}), students {}, cohorts {}\n",
                paths.activity.display(),
                paths.cohort.display(),
                paths.cohort_meta.display(),
                paths.manifest.display(),
                m.rows_read,
                m.rows_kept,
                m.rows_deduplicated,
                m.rows_rejected,
                m.students.len(),
                m.cohorts.len(),
            );
            out.write_all(text.as_bytes()).map_err(stdout_error)
        }
        Command::Serve { serve_config } => {
            let config = ServiceConfig::load(serve_config.as_deref()).map_err(ServiceError::from)?;
            let runtime = tokio::runtime::Runtime::new().map_err(ServiceError::Serve)?;
            let _ = writeln!(out, "listening on {}", config.listen);
            runtime.block_on(retention_service::serve(config))?;
            Ok(())
        }
    }
}
