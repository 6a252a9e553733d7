//! Report rendering: human-readable text, structured JSON and SARIF 2.1.0.

use std::fmt::Write as _;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::corpus::{
    Aggregates, Convergence, CorpusReport, EntryReport, EvaluatorStats, FileError, PanelSummary,
};
use crate::detectors::{PrincipleId, Score};
use crate::resolver::ResolutionStatus;
use crate::scoring::Evaluation;

pub const TOOL_NAME: &str = "govlint";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
/// Bumped whenever the structured layout changes incompatibly.
pub const STRUCTURED_SCHEMA_VERSION: u32 = 1;
const SARIF_SCHEMA: &str = "https://json.schemastore.org/sarif-2.1.0.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Text,
    Structured,
    Interchange,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "text" => Ok(Format::Text),
            "structured" | "json" => Ok(Format::Structured),
            "interchange" | "sarif" => Ok(Format::Interchange),
            _ => Err(format!(
                "unknown format `{s}` (text, structured, interchange)"
            )),
        }
    }
}

/// Settings echoed into structured output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub threshold: f64,
    pub pointer_line_limit: usize,
    pub depth_cap: usize,
    pub resolve_redirects: bool,
    /// Rule file path, or `"default"` for the embedded rules.
    pub rules: String,
    pub reference_date: Option<NaiveDate>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairCounts {
    pub pairs: usize,
    pub below_threshold: usize,
}

/// Top-level structured document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuredReport {
    pub schema_version: u32,
    pub tool_version: String,
    pub config: ReportConfig,
    pub entries: Vec<EntryReport>,
    pub aggregates: Aggregates,
    pub panels: Vec<EvaluatorStats>,
    pub panel_pairs: Option<PairCounts>,
    pub convergence: Option<Convergence>,
    pub warnings: Vec<String>,
    pub errors: Vec<FileError>,
}

impl StructuredReport {
    pub fn new(report: &CorpusReport, config: &ReportConfig) -> Self {
        let (panels, panel_pairs, convergence) = match &report.panels {
            Some(p) => (
                p.per_evaluator_stats.clone(),
                Some(PairCounts {
                    pairs: p.pairs,
                    below_threshold: p.pairs_below_threshold,
                }),
                p.convergence.clone(),
            ),
            None => (Vec::new(), None, None),
        };
        StructuredReport {
            schema_version: STRUCTURED_SCHEMA_VERSION,
            tool_version: TOOL_VERSION.to_string(),
            config: ReportConfig {
                threshold: report.threshold,
                ..config.clone()
            },
            entries: report.entries.clone(),
            aggregates: report.aggregates.clone(),
            panels,
            panel_pairs,
            convergence,
            warnings: report.warnings.clone(),
            errors: report.errors.clone(),
        }
    }

    pub fn into_report(self) -> CorpusReport {
        let panels = self.panel_pairs.map(|counts| PanelSummary {
            per_evaluator_stats: self.panels,
            pairs: counts.pairs,
            pairs_below_threshold: counts.below_threshold,
            convergence: self.convergence,
        });
        CorpusReport {
            threshold: self.config.threshold,
            entries: self.entries,
            aggregates: self.aggregates,
            panels,
            warnings: self.warnings,
            errors: self.errors,
        }
    }
}

pub fn parse_structured(text: &str) -> Result<StructuredReport, serde_json::Error> {
    serde_json::from_str(text)
}

pub fn structured(report: &CorpusReport, config: &ReportConfig) -> String {
    let mut out = serde_json::to_string_pretty(&StructuredReport::new(report, config))
        .expect("report serialization cannot fail");
    out.push('\n');
    out
}

/// The evaluation a file is gated on: resolved when it scores higher.
pub fn gating_evaluation(entry: &EntryReport) -> Option<&Evaluation> {
    let s = entry.standalone.as_ref()?;
    match &entry.resolved {
        Some(r) if r.total > s.total => Some(r),
        _ => Some(s),
    }
}

pub fn sarif(report: &CorpusReport) -> String {
    let rules: Vec<_> = PrincipleId::ALL
        .iter()
        .map(|p| {
            json!({
                "id": p.code(),
                "name": p.name().replace(' ', ""),
                "shortDescription": { "text": format!("{} is missing or partial", p.name()) },
                "defaultConfiguration": { "level": "warning" },
            })
        })
        .collect();

    let mut results = Vec::new();
    for entry in &report.entries {
        let Some(eval) = gating_evaluation(entry) else {
            continue;
        };
        for ps in &eval.principle_scores {
            let level = match ps.score {
                Score::Absent => "error",
                Score::Partial => "warning",
                Score::Present => continue,
            };
            let line = ps.evidence.first().map_or(1, |e| e.line);
            results.push(json!({
                "ruleId": ps.principle.code(),
                "ruleIndex": ps.principle.index(),
                "level": level,
                "message": {
                    "text": format!(
                        "{} ({}) scored {}: {}",
                        ps.principle.name(),
                        ps.principle.code(),
                        ps.score,
                        ps.rationale
                    )
                },
                "locations": [{
                    "physicalLocation": {
                        "artifactLocation": { "uri": entry.path },
                        "region": { "startLine": line },
                    }
                }],
                "properties": {
                    "score": ps.score,
                    "variant": eval.variant,
                    "total": eval.total,
                },
            }));
        }
    }

    let doc = json!({
        "$schema": SARIF_SCHEMA,
        "version": "2.1.0",
        "runs": [{
            "tool": {
                "driver": {
                    "name": TOOL_NAME,
                    "version": TOOL_VERSION,
                    "rules": rules,
                }
            },
            "results": results,
        }]
    });
    let mut out = serde_json::to_string_pretty(&doc).expect("sarif serialization cannot fail");
    out.push('\n');
    out
}

fn pct(f: f64) -> String {
    format!("{:.1}%", f * 100.0)
}

fn evaluation_block(out: &mut String, title: &str, eval: &Evaluation) {
    let _ = writeln!(out, "{title}");
    for ps in &eval.principle_scores {
        let _ = writeln!(
            out,
            "  {:<26} {}  {}",
            ps.principle.to_string(),
            ps.score,
            ps.rationale
        );
        for ev in &ps.evidence {
            let quote = ev.quote.split_whitespace().collect::<Vec<_>>().join(" ");
            let _ = writeln!(out, "      line {}: \"{quote}\"", ev.line);
        }
    }
    let _ = writeln!(
        out,
        "  total {} / 5.0 ({}), archetype: {}{}",
        eval.total,
        eval.band.describe(),
        eval.archetype.describe(),
        if eval.below_threshold {
            ", below threshold"
        } else {
            ""
        }
    );
}

/// Single-file report with evidence.
pub fn lint_text(entry: &EntryReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}", entry.path);
    let kind = if entry.pointer {
        "pointer"
    } else if entry.hybrid {
        "hybrid"
    } else {
        "standalone"
    };
    let _ = writeln!(
        out,
        "  {} substantive lines, {kind} file",
        entry.substantive_lines
    );
    if let Some(r) = &entry.redirect {
        if r.status != ResolutionStatus::None {
            let chain: Vec<&str> = r.chain.iter().map(|c| c.target.as_str()).collect();
            let _ = write!(out, "  redirect: {:?} via {}", r.status, chain.join(" -> "));
            if let Some(d) = &r.failure_detail {
                let _ = write!(out, " ({d})");
            }
            out.push('\n');
        }
    }
    if let Some(err) = &entry.error {
        let _ = writeln!(out, "  error: {err}");
    }
    if let Some(s) = &entry.standalone {
        out.push('\n');
        evaluation_block(&mut out, "standalone", s);
    }
    if let Some(r) = &entry.resolved {
        out.push('\n');
        evaluation_block(&mut out, "resolved target", r);
        if let Some(t) = entry.gating_total() {
            let _ = writeln!(
                out,
                "\ngating on the higher of standalone and resolved: {t}"
            );
        }
    }
    out
}

pub fn corpus_text(report: &CorpusReport) -> String {
    let mut out = String::new();
    let agg = &report.aggregates;
    let included = report
        .entries
        .iter()
        .filter(|e| e.inclusion.is_included())
        .count();
    let _ = writeln!(
        out,
        "{} files, {} included, {} evaluated (threshold {:.1})\n",
        report.entries.len(),
        included,
        agg.evaluated_files,
        report.threshold
    );

    let _ = writeln!(
        out,
        "{:<48} {:<18} {:>6} {:>8}  archetype",
        "file", "inclusion", "total", "resolved"
    );
    for e in &report.entries {
        let total = e
            .standalone
            .as_ref()
            .map_or("-".into(), |s| s.total.to_string());
        let resolved = e
            .resolved
            .as_ref()
            .map_or("-".into(), |s| s.total.to_string());
        let arch = e.standalone.as_ref().map_or("", |s| s.archetype.describe());
        let _ = writeln!(
            out,
            "{:<48} {:<18} {:>6} {:>8}  {}",
            e.path,
            format!("{:?}", e.inclusion),
            total,
            resolved,
            arch
        );
        if let Some(err) = &e.error {
            let _ = writeln!(out, "    error: {err}");
        }
    }

    let _ = writeln!(out, "\nPrinciple strength ranking");
    let _ = writeln!(out, "{:>4}  {:<26} {:>6}", "rank", "principle", "mean");
    for r in &agg.principle_ranking {
        let _ = writeln!(
            out,
            "{:>4}  {:<26} {:>6.2}",
            r.rank,
            r.principle.to_string(),
            r.mean
        );
    }

    let _ = writeln!(out, "\nmean total          {:.2}", agg.mean_total);
    let _ = writeln!(out, "median total        {:.2}", agg.median_total);
    let _ = writeln!(
        out,
        "below threshold     {}",
        pct(agg.fraction_below_threshold_files)
    );
    if let Some(p) = agg.fraction_below_threshold_pairs {
        let _ = writeln!(out, "below (pairs)       {}", pct(p));
    }
    let dist: Vec<String> = agg
        .total_distribution
        .iter()
        .filter(|b| b.count > 0)
        .map(|b| format!("{}:{}", b.total, b.count))
        .collect();
    let _ = writeln!(out, "distribution        {}", dist.join(" "));
    let arch: Vec<String> = agg
        .archetype_counts
        .iter()
        .map(|(a, n)| format!("{}={n}", a.describe()))
        .collect();
    let _ = writeln!(out, "archetypes          {}", arch.join(", "));

    if let Some(panels) = &report.panels {
        panel_text(&mut out, panels);
    }
    for w in &report.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    for e in &report.errors {
        let _ = writeln!(out, "error: {}: {}", e.path, e.message);
    }
    out
}

fn panel_text(out: &mut String, panels: &PanelSummary) {
    let stats = &panels.per_evaluator_stats;
    let _ = writeln!(out, "\nEvaluator panels");
    let _ = write!(out, "{:<22}", "metric");
    for s in stats {
        let _ = write!(out, " {:>12}", s.name);
    }
    out.push('\n');
    let mut row = |label: &str, cell: &dyn Fn(&EvaluatorStats) -> String| {
        let _ = write!(out, "{label:<22}");
        for s in stats {
            let _ = write!(out, " {:>12}", cell(s));
        }
        out.push('\n');
    };
    row("files", &|s| s.files.to_string());
    row("mean total", &|s| format!("{:.2}", s.mean_total));
    row("median total", &|s| format!("{:.2}", s.median_total));
    row("below threshold", &|s| pct(s.fraction_below));
    for p in PrincipleId::ALL {
        row(&format!("{} mean", p.code()), &|s| {
            format!("{:.2}", s.principle_means.get(&p).copied().unwrap_or(0.0))
        });
    }
    let _ = writeln!(
        out,
        "pairs below threshold {} of {}",
        panels.pairs_below_threshold, panels.pairs
    );
    if let Some(c) = &panels.convergence {
        let _ = writeln!(
            out,
            "\nrank agreement (Kendall tau-b, {} shared files)",
            c.shared_files
        );
        for (i, name) in c.evaluators.iter().enumerate() {
            let cells: Vec<String> = c.principle_rank_agreement[i]
                .iter()
                .map(|v| v.map_or("n/a".into(), |t| format!("{t:.2}")))
                .collect();
            let _ = writeln!(out, "  {name:<20} {}", cells.join("  "));
        }
        for h in &c.disagreement_hotspots {
            let _ = writeln!(out, "  hotspot: {} {}", h.path, h.principle.code());
        }
    }
}

pub fn emit(report: &CorpusReport, config: &ReportConfig, format: Format) -> String {
    match format {
        Format::Text => corpus_text(report),
        Format::Structured => structured(report, config),
        Format::Interchange => sarif(report),
    }
}

/// Like [`emit`], but text output shows the per-principle detail of each entry.
pub fn emit_lint(report: &CorpusReport, config: &ReportConfig, format: Format) -> String {
    match format {
        Format::Text => report
            .entries
            .iter()
            .map(lint_text)
            .collect::<Vec<_>>()
            .join("\n"),
        _ => emit(report, config, format),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{assemble_report, EntryReport, Inclusion};
    use crate::detectors::PrincipleScore;
    use crate::resolver::RedirectResolution;
    use crate::scoring::{aggregate, classify_archetype, Variant};

    fn entry(path: &str, values: [f64; 5]) -> EntryReport {
        let scores = PrincipleId::ALL
            .into_iter()
            .zip(values)
            .map(|(p, v)| PrincipleScore::bare(p, Score::from_f64(v).unwrap()))
            .collect();
        let mut eval = aggregate(scores, 2.5, Variant::Standalone).unwrap();
        eval.archetype = classify_archetype(&eval, &RedirectResolution::none(false));
        EntryReport {
            path: path.into(),
            inclusion: Inclusion::Included,
            duplicate_of: None,
            origin: None,
            substantive_lines: 12,
            pointer: false,
            hybrid: false,
            redirect: None,
            standalone: Some(eval),
            resolved: None,
            error: None,
        }
    }

    fn config() -> ReportConfig {
        ReportConfig {
            threshold: 2.5,
            pointer_line_limit: 10,
            depth_cap: 8,
            resolve_redirects: true,
            rules: "default".into(),
            reference_date: None,
        }
    }

    fn results(report: &CorpusReport) -> Vec<serde_json::Value> {
        let v: serde_json::Value = serde_json::from_str(&sarif(report)).unwrap();
        assert_eq!(v["version"], "2.1.0");
        v["runs"][0]["results"].as_array().unwrap().clone()
    }

    #[test]
    fn maximal_file_has_no_sarif_results() {
        let r = assemble_report(vec![entry("a.md", [1.0; 5])], 2.5);
        assert!(results(&r).is_empty());
    }

    #[test]
    fn missing_p4_is_one_error_naming_data_classification() {
        let r = assemble_report(vec![entry("a.md", [1.0, 1.0, 1.0, 0.0, 1.0])], 2.5);
        let res = results(&r);
        assert_eq!(res.len(), 1);
        assert_eq!(res[0]["level"], "error");
        assert!(res[0]["message"]["text"]
            .as_str()
            .unwrap()
            .contains("Data Classification"));

        let r = assemble_report(vec![entry("a.md", [1.0, 0.5, 1.0, 1.0, 1.0])], 2.5);
        assert_eq!(results(&r)[0]["level"], "warning");
    }

    #[test]
    fn structured_round_trips() {
        let r = assemble_report(
            vec![
                entry("a.md", [1.0, 0.5, 0.0, 0.0, 0.5]),
                entry("b.md", [0.0; 5]),
            ],
            2.5,
        );
        let text = structured(&r, &config());
        let back = parse_structured(&text).unwrap();
        assert_eq!(back.clone().into_report(), r);
        assert_eq!(structured(&back.into_report(), &config()), text);
    }

    #[test]
    fn structured_scores_have_one_decimal() {
        let r = assemble_report(vec![entry("a.md", [1.0, 0.5, 0.0, 0.0, 0.5])], 2.5);
        let text = structured(&r, &config());
        assert!(text.contains("\"score\": 1.0"));
        assert!(text.contains("\"score\": 0.0"));
        assert!(text.contains("\"total\": 2.0"));
    }

    #[test]
    fn format_names() {
        assert_eq!("sarif".parse::<Format>().unwrap(), Format::Interchange);
        assert_eq!("Structured".parse::<Format>().unwrap(), Format::Structured);
        assert!("xml".parse::<Format>().is_err());
    }
}
