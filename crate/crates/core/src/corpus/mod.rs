//! Corpus selection, evaluation and aggregate statistics.

pub mod dedup;
pub mod panel;
pub mod stats;

use std::collections::BTreeMap;

use chrono::{DateTime, Months, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

use crate::detectors::{evaluate_document, DetectError, PrincipleId, RuleSet};
use crate::document::{
    GovernanceDocument, RedirectKind, RedirectVocabulary, DEFAULT_POINTER_LINE_LIMIT,
};
use crate::locator::Locator;
use crate::resolver::{
    resolve, resolve_any, RedirectResolution, ResolutionStatus, ResolverConfig, TargetFetcher,
};
use crate::scoring::{
    aggregate, classify_archetype, validate_threshold, Archetype, Evaluation, ScoringError, Total,
    Variant, DEFAULT_THRESHOLD,
};

pub use dedup::{near_duplicate, shingle_similarity, ShingleSet, DUPLICATE_SIMILARITY};
pub use panel::{
    convergence, ingest_panel, Convergence, EvaluatorScoreSet, EvaluatorStats, Hotspot, PanelError,
    PanelSummary,
};

pub const MIN_SUBSTANTIVE_LINES: usize = 10;
pub const ACTIVITY_WINDOW_MONTHS: u32 = 6;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileMetadata {
    pub last_modified: Option<DateTime<Utc>>,
    pub origin: Option<String>,
}

/// One candidate file handed to [`apply_filters`].
#[derive(Debug, Clone)]
pub struct CorpusInput {
    pub path: Locator,
    pub raw_text: String,
    pub metadata: Option<FileMetadata>,
}

impl CorpusInput {
    pub fn new(path: impl Into<Locator>, raw_text: impl Into<String>) -> Self {
        CorpusInput {
            path: path.into(),
            raw_text: raw_text.into(),
            metadata: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Inclusion {
    Included,
    ExcludedTooShort,
    ExcludedInactive,
    ExcludedGenerated,
    ExcludedDuplicate,
    IncludedAsPointer,
}

impl Inclusion {
    pub fn is_included(self) -> bool {
        matches!(self, Inclusion::Included | Inclusion::IncludedAsPointer)
    }
}

#[derive(Debug, Clone)]
pub struct CorpusEntry {
    pub path: Locator,
    pub metadata: Option<FileMetadata>,
    pub document: GovernanceDocument,
    pub inclusion: Inclusion,
    pub duplicate_of: Option<Locator>,
}

#[derive(Debug, Clone)]
pub struct FilterConfig {
    pub pointer_line_limit: usize,
    pub min_substantive_lines: usize,
    /// Anchor of the activity window; today when unset.
    pub reference_date: Option<NaiveDate>,
    pub vocabulary: RedirectVocabulary,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            pointer_line_limit: DEFAULT_POINTER_LINE_LIMIT,
            min_substantive_lines: MIN_SUBSTANTIVE_LINES,
            reference_date: None,
            vocabulary: RedirectVocabulary::default(),
        }
    }
}

/// Applies the selection rules in order: pointer exception, length,
/// activity, generation marker, near-duplicate.
///
/// Inputs are processed in path order so that the lexicographically
/// smallest path of a duplicate group survives whatever the input order.
pub fn apply_filters(mut files: Vec<CorpusInput>, config: &FilterConfig) -> Vec<CorpusEntry> {
    files.sort_by(|a, b| a.path.cmp(&b.path));
    let reference = config
        .reference_date
        .unwrap_or_else(|| Utc::now().date_naive());
    let cutoff = reference
        .checked_sub_months(Months::new(ACTIVITY_WINDOW_MONTHS))
        .unwrap_or(NaiveDate::MIN)
        .and_hms_opt(0, 0, 0)
        .unwrap()
        .and_utc();

    let mut kept: Vec<(Locator, ShingleSet)> = Vec::new();
    let mut out = Vec::with_capacity(files.len());
    for f in files {
        let document =
            GovernanceDocument::parse_with(&f.raw_text, f.path.clone(), &config.vocabulary);
        let mut duplicate_of = None;
        let inactive = f
            .metadata
            .as_ref()
            .and_then(|m| m.last_modified)
            .is_some_and(|t| t < cutoff);
        let inclusion = if document.is_pointer_file(config.pointer_line_limit) {
            Inclusion::IncludedAsPointer
        } else if document.substantive_line_count() <= config.min_substantive_lines {
            Inclusion::ExcludedTooShort
        } else if inactive {
            Inclusion::ExcludedInactive
        } else if document.has_generation_marker() {
            Inclusion::ExcludedGenerated
        } else {
            let shingles = ShingleSet::of(&document);
            let dup = kept.iter().find(|(_, s)| {
                s.may_reach(&shingles, DUPLICATE_SIMILARITY)
                    && s.jaccard(&shingles) >= DUPLICATE_SIMILARITY
            });
            match dup {
                Some((path, _)) => {
                    duplicate_of = Some(path.clone());
                    Inclusion::ExcludedDuplicate
                }
                None => {
                    kept.push((f.path.clone(), shingles));
                    Inclusion::Included
                }
            }
        };
        out.push(CorpusEntry {
            path: f.path,
            metadata: f.metadata,
            document,
            inclusion,
            duplicate_of,
        });
    }
    out
}

#[derive(Debug, Clone)]
pub struct EvalConfig {
    pub threshold: f64,
    pub resolve_redirects: bool,
    pub resolver: ResolverConfig,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            threshold: DEFAULT_THRESHOLD,
            resolve_redirects: true,
            resolver: ResolverConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainStep {
    pub source: String,
    pub target: String,
    pub kind: RedirectKind,
}

/// Serializable digest of a [`RedirectResolution`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RedirectSummary {
    pub status: ResolutionStatus,
    pub chain: Vec<ChainStep>,
    pub resolved_path: Option<String>,
    pub failure_detail: Option<String>,
}

impl From<&RedirectResolution> for RedirectSummary {
    fn from(r: &RedirectResolution) -> Self {
        RedirectSummary {
            status: r.status,
            chain: r
                .chain
                .iter()
                .map(|link| ChainStep {
                    source: link.source.to_string(),
                    target: link.redirect.target.clone(),
                    kind: link.redirect.kind,
                })
                .collect(),
            resolved_path: r.resolved_document.as_ref().map(|d| d.source().to_string()),
            failure_detail: r.failure_detail.clone(),
        }
    }
}

/// Standalone and (where applicable) resolved evaluation of one file.
#[derive(Debug, Clone)]
pub struct FileEvaluation {
    pub pointer: bool,
    pub hybrid: bool,
    pub resolution: RedirectResolution,
    pub standalone: Evaluation,
    pub resolved: Option<Evaluation>,
}

impl FileEvaluation {
    /// Total used for gating: the better of standalone and resolved.
    pub fn gating_total(&self) -> Total {
        self.resolved.as_ref().map_or(self.standalone.total, |r| {
            r.total.max(self.standalone.total)
        })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error(transparent)]
    Detect(#[from] DetectError),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
}

pub fn evaluate_file(
    doc: &GovernanceDocument,
    rules: &RuleSet,
    fetcher: &dyn TargetFetcher,
    config: &EvalConfig,
) -> Result<FileEvaluation, EvalError> {
    let limit = config.resolver.pointer_line_limit;
    let pointer = doc.is_pointer_file(limit);
    let hybrid = doc.is_hybrid(limit);
    let resolution = if !config.resolve_redirects {
        RedirectResolution::none(pointer)
    } else if pointer {
        resolve(doc, fetcher, &config.resolver)
    } else {
        resolve_any(doc, fetcher, &config.resolver)
    };

    let mut standalone = aggregate(
        evaluate_document(doc, rules)?,
        config.threshold,
        Variant::Standalone,
    )?;
    standalone.archetype = classify_archetype(&standalone, &resolution);

    let resolved = match &resolution.resolved_document {
        Some(target) => {
            let mut e = aggregate(
                evaluate_document(target, rules)?,
                config.threshold,
                Variant::Resolved,
            )?;
            e.archetype = classify_archetype(&e, &RedirectResolution::none(false));
            Some(e)
        }
        None => None,
    };
    Ok(FileEvaluation {
        pointer,
        hybrid,
        resolution,
        standalone,
        resolved,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryReport {
    pub path: String,
    pub inclusion: Inclusion,
    pub duplicate_of: Option<String>,
    pub origin: Option<String>,
    pub substantive_lines: usize,
    pub pointer: bool,
    pub hybrid: bool,
    pub redirect: Option<RedirectSummary>,
    pub standalone: Option<Evaluation>,
    pub resolved: Option<Evaluation>,
    pub error: Option<String>,
}

impl EntryReport {
    fn skeleton(entry: &CorpusEntry, limit: usize) -> Self {
        EntryReport {
            path: entry.path.to_string(),
            inclusion: entry.inclusion,
            duplicate_of: entry.duplicate_of.as_ref().map(ToString::to_string),
            origin: entry.metadata.as_ref().and_then(|m| m.origin.clone()),
            substantive_lines: entry.document.substantive_line_count(),
            pointer: entry.document.is_pointer_file(limit),
            hybrid: entry.document.is_hybrid(limit),
            redirect: None,
            standalone: None,
            resolved: None,
            error: None,
        }
    }

    pub fn from_evaluation(path: &Locator, doc: &GovernanceDocument, eval: FileEvaluation) -> Self {
        EntryReport {
            path: path.to_string(),
            inclusion: if eval.pointer {
                Inclusion::IncludedAsPointer
            } else {
                Inclusion::Included
            },
            duplicate_of: None,
            origin: None,
            substantive_lines: doc.substantive_line_count(),
            pointer: eval.pointer,
            hybrid: eval.hybrid,
            redirect: Some(RedirectSummary::from(&eval.resolution)),
            standalone: Some(eval.standalone),
            resolved: eval.resolved,
            error: None,
        }
    }

    /// Total used for gating: the better of standalone and resolved.
    pub fn gating_total(&self) -> Option<Total> {
        let s = self.standalone.as_ref()?.total;
        Some(self.resolved.as_ref().map_or(s, |r| r.total.max(s)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedPrinciple {
    pub rank: usize,
    pub principle: PrincipleId,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionBin {
    pub total: Total,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub evaluated_files: usize,
    pub principle_means: BTreeMap<PrincipleId, f64>,
    pub principle_ranking: Vec<RankedPrinciple>,
    pub mean_total: f64,
    pub median_total: f64,
    pub total_distribution: Vec<DistributionBin>,
    pub fraction_below_threshold_files: f64,
    pub fraction_below_threshold_pairs: Option<f64>,
    pub archetype_counts: BTreeMap<Archetype, usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileError {
    pub path: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusReport {
    pub threshold: f64,
    pub entries: Vec<EntryReport>,
    pub aggregates: Aggregates,
    pub panels: Option<PanelSummary>,
    pub warnings: Vec<String>,
    pub errors: Vec<FileError>,
}

impl CorpusReport {
    /// Standalone evaluations of every evaluated entry, in path order.
    pub fn evaluated(&self) -> impl Iterator<Item = (&EntryReport, &Evaluation)> {
        self.entries
            .iter()
            .filter_map(|e| e.standalone.as_ref().map(|s| (e, s)))
    }
}

/// Evaluates every included entry and computes aggregates over the
/// standalone evaluations.
///
/// Entries are evaluated on worker threads; the report is assembled in
/// path order. A failing entry carries its error and is left out of the
/// aggregates.
pub fn evaluate_corpus(
    entries: &[CorpusEntry],
    rules: &RuleSet,
    fetcher: &dyn TargetFetcher,
    config: &EvalConfig,
) -> Result<CorpusReport, ScoringError> {
    validate_threshold(config.threshold)?;
    let mut order: Vec<usize> = (0..entries.len()).collect();
    order.sort_by(|&a, &b| entries[a].path.cmp(&entries[b].path));

    let limit = config.resolver.pointer_line_limit;
    let evaluate = |entry: &CorpusEntry| -> EntryReport {
        let mut report = EntryReport::skeleton(entry, limit);
        if !entry.inclusion.is_included() {
            return report;
        }
        match evaluate_file(&entry.document, rules, fetcher, config) {
            Ok(eval) => {
                report.redirect = Some(RedirectSummary::from(&eval.resolution));
                report.standalone = Some(eval.standalone);
                report.resolved = eval.resolved;
            }
            Err(e) => report.error = Some(e.to_string()),
        }
        report
    };

    let workers = std::thread::available_parallelism()
        .map_or(1, usize::from)
        .min(order.len().max(1));
    let chunk = order.len().div_ceil(workers).max(1);
    let reports: Vec<EntryReport> = std::thread::scope(|scope| {
        let handles: Vec<_> = order
            .chunks(chunk)
            .map(|idx| {
                let evaluate = &evaluate;
                scope.spawn(move || {
                    idx.iter()
                        .map(|&i| evaluate(&entries[i]))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("evaluation worker panicked"))
            .collect()
    });

    Ok(assemble_report(reports, config.threshold))
}

/// Builds a report (and its aggregates) from finished entries.
pub fn assemble_report(entries: Vec<EntryReport>, threshold: f64) -> CorpusReport {
    let aggregates = compute_aggregates(&entries, threshold);
    CorpusReport {
        threshold,
        entries,
        aggregates,
        panels: None,
        warnings: Vec::new(),
        errors: Vec::new(),
    }
}

pub fn compute_aggregates(entries: &[EntryReport], threshold: f64) -> Aggregates {
    let evals: Vec<&Evaluation> = entries
        .iter()
        .filter_map(|e| e.standalone.as_ref())
        .collect();
    let totals: Vec<f64> = evals.iter().map(|e| e.total.as_f64()).collect();
    let principle_means: BTreeMap<PrincipleId, f64> = PrincipleId::ALL
        .into_iter()
        .map(|p| {
            let v: Vec<f64> = evals.iter().map(|e| e.score(p).as_f64()).collect();
            (p, stats::mean(&v))
        })
        .collect();
    let mut archetype_counts = BTreeMap::new();
    for e in &evals {
        *archetype_counts.entry(e.archetype).or_insert(0) += 1;
    }
    let total_distribution = Total::all()
        .map(|t| DistributionBin {
            total: t,
            count: evals.iter().filter(|e| e.total == t).count(),
        })
        .collect();
    Aggregates {
        evaluated_files: evals.len(),
        principle_ranking: rank_principles(&principle_means),
        principle_means,
        mean_total: stats::mean(&totals),
        median_total: stats::median(&totals),
        total_distribution,
        fraction_below_threshold_files: stats::fraction_below(&totals, threshold),
        fraction_below_threshold_pairs: None,
        archetype_counts,
    }
}

/// Strongest first; ties keep P1..P5 order.
pub fn rank_principles(means: &BTreeMap<PrincipleId, f64>) -> Vec<RankedPrinciple> {
    let mut ranked: Vec<(PrincipleId, f64)> = means.iter().map(|(p, m)| (*p, *m)).collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked
        .into_iter()
        .enumerate()
        .map(|(i, (principle, mean))| RankedPrinciple {
            rank: i + 1,
            principle,
            mean,
        })
        .collect()
}
