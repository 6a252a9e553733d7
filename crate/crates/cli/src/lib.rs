//! `govlint` command line: single-file lint and corpus analysis.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use chrono::{DateTime, NaiveDate, Utc};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use govlint_core::corpus::{
    apply_filters, assemble_report, evaluate_corpus, evaluate_file, ingest_panel, CorpusInput,
    EntryReport, EvalConfig, EvaluatorScoreSet, FileError, FileMetadata, FilterConfig,
};
use govlint_core::document::{GovernanceDocument, DEFAULT_POINTER_LINE_LIMIT};
use govlint_core::report::{emit, emit_lint, Format, ReportConfig};
use govlint_core::resolver::{
    DefaultFetcher, FetchError, FetchLimits, Fetched, ResolverConfig, TargetFetcher,
    DEFAULT_DEPTH_CAP,
};
use govlint_core::scoring::{validate_threshold, DEFAULT_THRESHOLD};
use govlint_core::{Locator, RuleSet};

pub const EXIT_OK: i32 = 0;
pub const EXIT_BELOW_THRESHOLD: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "govlint",
    version,
    about = "Score AI agent governance files (AGENTS.md) for structural completeness"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub options: Options,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score one file; exits 1 when its total is below the threshold.
    Lint { path: PathBuf },
    /// Filter, score and summarise a directory or a TOML manifest of files.
    Corpus {
        input: PathBuf,
        /// Only collect files with this name (case-insensitive), e.g. AGENTS.md.
        #[arg(long, env = "GOVLINT_FILE_NAME")]
        file_name: Option<String>,
    },
}

#[derive(Debug, Args)]
pub struct Options {
    #[arg(long, global = true, env = "GOVLINT_THRESHOLD", default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: f64,
    /// Rule file replacing the built-in rules.
    #[arg(long, global = true, env = "GOVLINT_RULES")]
    pub rules: Option<PathBuf>,
    /// Do not follow redirects.
    #[arg(long, global = true, env = "GOVLINT_NO_RESOLVE")]
    pub no_resolve: bool,
    #[arg(long, global = true, env = "GOVLINT_FORMAT", default_value = "text")]
    pub format: Format,
    /// External evaluator score file; repeatable.
    #[arg(
        long = "panel",
        global = true,
        env = "GOVLINT_PANEL",
        value_delimiter = ','
    )]
    pub panels: Vec<PathBuf>,
    /// Anchor for the six-month activity window (YYYY-MM-DD); defaults to today.
    #[arg(long, global = true, env = "GOVLINT_REFERENCE_DATE")]
    pub reference_date: Option<NaiveDate>,
    #[arg(long, global = true, env = "GOVLINT_POINTER_LIMIT", default_value_t = DEFAULT_POINTER_LINE_LIMIT)]
    pub pointer_limit: usize,
    #[arg(long, global = true, env = "GOVLINT_DEPTH_CAP", default_value_t = DEFAULT_DEPTH_CAP)]
    pub depth_cap: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub threshold: f64,
    pub pointer_line_limit: usize,
    pub depth_cap: usize,
    pub resolve_redirects: bool,
    pub rules_path: Option<PathBuf>,
    pub output_format: Format,
    pub reference_date: Option<NaiveDate>,
    pub panel_paths: Vec<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            threshold: DEFAULT_THRESHOLD,
            pointer_line_limit: DEFAULT_POINTER_LINE_LIMIT,
            depth_cap: DEFAULT_DEPTH_CAP,
            resolve_redirects: true,
            rules_path: None,
            output_format: Format::Text,
            reference_date: None,
            panel_paths: Vec::new(),
        }
    }
}

impl RunConfig {
    pub fn from_options(o: &Options) -> Result<Self> {
        let config = RunConfig {
            threshold: o.threshold,
            pointer_line_limit: o.pointer_limit,
            depth_cap: o.depth_cap,
            resolve_redirects: !o.no_resolve,
            rules_path: o.rules.clone(),
            output_format: o.format,
            reference_date: o.reference_date,
            panel_paths: o.panels.clone(),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        validate_threshold(self.threshold)?;
        if self.depth_cap == 0 {
            bail!("depth cap must be at least 1");
        }
        Ok(())
    }

    fn load_rules(&self) -> Result<RuleSet> {
        let rules = match &self.rules_path {
            Some(p) => RuleSet::from_path(p)?,
            None => RuleSet::default(),
        };
        let missing = rules.uncovered();
        if !missing.is_empty() {
            let codes: Vec<&str> = missing.iter().map(|p| p.code()).collect();
            bail!("rule set has no rules for {}", codes.join(", "));
        }
        Ok(rules)
    }

    fn eval_config(&self, rules: &RuleSet) -> EvalConfig {
        EvalConfig {
            threshold: self.threshold,
            resolve_redirects: self.resolve_redirects,
            resolver: ResolverConfig {
                depth_cap: self.depth_cap,
                pointer_line_limit: self.pointer_line_limit,
                vocabulary: rules.redirects().clone(),
            },
        }
    }

    fn report_config(&self) -> ReportConfig {
        ReportConfig {
            threshold: self.threshold,
            pointer_line_limit: self.pointer_line_limit,
            depth_cap: self.depth_cap,
            resolve_redirects: self.resolve_redirects,
            rules: self
                .rules_path
                .as_ref()
                .map_or("default".into(), |p| p.display().to_string()),
            reference_date: self.reference_date,
        }
    }
}

/// Parses `args` and runs the command, writing the report to `out` and
/// diagnostics to `err`. Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let result = RunConfig::from_options(&cli.options).and_then(|config| match &cli.command {
        Command::Lint { path } => cmd_lint(path, &config, out),
        Command::Corpus { input, file_name } => {
            cmd_corpus(input, file_name.as_deref(), &config, out, err)
        }
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "govlint: {e:#}");
            EXIT_ERROR
        }
    }
}

pub fn cmd_lint(path: &Path, config: &RunConfig, out: &mut dyn Write) -> Result<i32> {
    let rules = config.load_rules()?;
    let bytes = std::fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    let text = String::from_utf8_lossy(&bytes);
    let locator = Locator::Path(path.to_path_buf());
    let doc = GovernanceDocument::parse_with(&text, locator.clone(), rules.redirects());
    let fetcher = DefaultFetcher::new(FetchLimits::default());
    let eval = evaluate_file(&doc, &rules, &fetcher, &config.eval_config(&rules))?;
    let gating = eval.gating_total();
    let entry = EntryReport::from_evaluation(&locator, &doc, eval);
    let report = assemble_report(vec![entry], config.threshold);
    out.write_all(emit_lint(&report, &config.report_config(), config.output_format).as_bytes())?;
    Ok(if gating.as_f64() < config.threshold {
        EXIT_BELOW_THRESHOLD
    } else {
        EXIT_OK
    })
}

pub fn cmd_corpus(
    input: &Path,
    file_name: Option<&str>,
    config: &RunConfig,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32> {
    let rules = config.load_rules()?;
    let panels = config
        .panel_paths
        .iter()
        .map(|p| EvaluatorScoreSet::from_path(p))
        .collect::<Result<Vec<_>, _>>()?;

    let sources = if input.is_dir() {
        collect_directory(input, file_name)?
    } else if input.extension().is_some_and(|e| e == "toml") {
        read_manifest(input)?
    } else {
        bail!(
            "{} is neither a directory nor a .toml manifest",
            input.display()
        );
    };

    let mut inputs = Vec::new();
    let mut errors = Vec::new();
    for source in &sources {
        match std::fs::read(&source.full_path) {
            Ok(bytes) => inputs.push(CorpusInput {
                path: Locator::Path(PathBuf::from(&source.display)),
                raw_text: String::from_utf8_lossy(&bytes).into_owned(),
                metadata: source.metadata.clone(),
            }),
            Err(e) => errors.push(FileError {
                path: source.display.clone(),
                message: e.to_string(),
            }),
        }
    }
    let processed = inputs.len();

    let filter = FilterConfig {
        pointer_line_limit: config.pointer_line_limit,
        reference_date: config.reference_date,
        vocabulary: rules.redirects().clone(),
        ..FilterConfig::default()
    };
    let entries = apply_filters(inputs, &filter);
    let fetcher = RootedFetcher::new(
        sources
            .first()
            .map_or(input.to_path_buf(), |s| s.root.clone()),
        DefaultFetcher::new(FetchLimits::default()),
    );
    let mut report = evaluate_corpus(&entries, &rules, &fetcher, &config.eval_config(&rules))?;
    report.errors = errors;
    if !panels.is_empty() {
        report = ingest_panel(report, &panels);
    }
    out.write_all(emit(&report, &config.report_config(), config.output_format).as_bytes())?;

    if processed == 0 {
        writeln!(
            err,
            "govlint: no files could be processed under {}",
            input.display()
        )?;
        return Ok(EXIT_ERROR);
    }
    Ok(EXIT_OK)
}

/// A corpus file: where to read it and the name it is reported under.
#[derive(Debug, Clone)]
struct Source {
    root: PathBuf,
    full_path: PathBuf,
    display: String,
    metadata: Option<FileMetadata>,
}

fn display_path(p: &Path) -> String {
    p.components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}

fn collect_directory(root: &Path, file_name: Option<&str>) -> Result<Vec<Source>> {
    let mut out = Vec::new();
    for entry in walkdir::WalkDir::new(root).sort_by_file_name() {
        let entry = entry.with_context(|| format!("cannot walk {}", root.display()))?;
        if !entry.file_type().is_file() && !entry.path_is_symlink() {
            continue;
        }
        let name = entry.file_name().to_string_lossy();
        let wanted = match file_name {
            Some(n) => name.eq_ignore_ascii_case(n),
            None => Path::new(&*name)
                .extension()
                .is_some_and(|e| e.eq_ignore_ascii_case("md")),
        };
        if !wanted {
            continue;
        }
        let rel = entry.path().strip_prefix(root).unwrap_or(entry.path());
        out.push(Source {
            root: root.to_path_buf(),
            full_path: entry.path().to_path_buf(),
            display: display_path(rel),
            metadata: None,
        });
    }
    Ok(out)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    root: Option<PathBuf>,
    #[serde(default, rename = "file")]
    files: Vec<ManifestFile>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestFile {
    path: String,
    last_modified: Option<toml::Value>,
    origin: Option<String>,
}

fn parse_timestamp(v: &toml::Value) -> Result<DateTime<Utc>> {
    let text = match v {
        toml::Value::String(s) => s.clone(),
        toml::Value::Datetime(d) => d.to_string(),
        other => bail!("last_modified must be a date or timestamp, got {other}"),
    };
    if let Ok(t) = DateTime::parse_from_rfc3339(&text) {
        return Ok(t.with_timezone(&Utc));
    }
    let date = NaiveDate::parse_from_str(&text, "%Y-%m-%d")
        .with_context(|| format!("invalid last_modified `{text}`"))?;
    Ok(date.and_hms_opt(0, 0, 0).unwrap().and_utc())
}

fn read_manifest(path: &Path) -> Result<Vec<Source>> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let manifest: Manifest =
        toml::from_str(&text).with_context(|| format!("invalid manifest {}", path.display()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let root = match manifest.root {
        Some(r) => base.join(r),
        None => base.to_path_buf(),
    };
    manifest
        .files
        .into_iter()
        .map(|f| {
            let last_modified = f.last_modified.as_ref().map(parse_timestamp).transpose()?;
            let metadata = (last_modified.is_some() || f.origin.is_some()).then(|| FileMetadata {
                last_modified,
                origin: f.origin.clone(),
            });
            Ok(Source {
                root: root.clone(),
                full_path: root.join(&f.path),
                display: f.path,
                metadata,
            })
        })
        .collect()
}

/// Lets corpus entries carry root-relative names while fetching from disk.
pub struct RootedFetcher<F> {
    root: PathBuf,
    canonical_root: Option<PathBuf>,
    inner: F,
}

impl<F: TargetFetcher> RootedFetcher<F> {
    pub fn new(root: PathBuf, inner: F) -> Self {
        let canonical_root = std::fs::canonicalize(&root).ok();
        RootedFetcher {
            root,
            canonical_root,
            inner,
        }
    }

    fn rooted(&self, loc: &Locator) -> Locator {
        match loc {
            Locator::Path(p) if p.is_relative() => Locator::Path(self.root.join(p)),
            other => other.clone(),
        }
    }

    fn relative(&self, loc: Locator) -> Locator {
        let Locator::Path(p) = &loc else {
            return loc;
        };
        for root in [Some(&self.root), self.canonical_root.as_ref()]
            .into_iter()
            .flatten()
        {
            if let Ok(rel) = p.strip_prefix(root) {
                return Locator::Path(PathBuf::from(display_path(rel)));
            }
        }
        loc
    }
}

impl<F: TargetFetcher> TargetFetcher for RootedFetcher<F> {
    fn fetch(&self, target: &str, base: &Locator) -> Result<Fetched, FetchError> {
        let fetched = self.inner.fetch(target, &self.rooted(base))?;
        Ok(Fetched {
            locator: self.relative(fetched.locator),
            bytes: fetched.bytes,
        })
    }

    fn identity(&self, locator: &Locator) -> Locator {
        self.inner.identity(&self.rooted(locator))
    }
}
