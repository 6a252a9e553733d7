//! External evaluator score sets ("panels") and cross-panel convergence.
//!
//! A panel file is TOML:
//!
//! ```toml
//! evaluator = "model-a"
//!
//! [scores]
//! "org/repo/AGENTS.md" = [1.0, 0.5, 0, 0, 0.5]
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{stats, CorpusReport};
use crate::detectors::{PrincipleId, Score};
use crate::scoring::Total;

#[derive(Debug, thiserror::Error)]
pub enum PanelError {
    #[error("cannot read panel {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("panel syntax error: {0}")]
    Syntax(String),
    #[error("panel {evaluator}: {file}: {reason}")]
    InvalidScores {
        evaluator: String,
        file: String,
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvaluatorScoreSet {
    pub evaluator_name: String,
    pub scores: BTreeMap<String, [Score; 5]>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PanelFile {
    evaluator: String,
    #[serde(default)]
    scores: BTreeMap<String, Vec<toml::Value>>,
}

impl EvaluatorScoreSet {
    pub fn new(evaluator_name: impl Into<String>) -> Self {
        EvaluatorScoreSet {
            evaluator_name: evaluator_name.into(),
            scores: BTreeMap::new(),
        }
    }

    pub fn with(mut self, file: impl Into<String>, scores: [Score; 5]) -> Self {
        self.scores.insert(file.into(), scores);
        self
    }

    pub fn from_toml_str(text: &str) -> Result<Self, PanelError> {
        let raw: PanelFile = toml::from_str(text).map_err(|e| PanelError::Syntax(e.to_string()))?;
        let mut set = EvaluatorScoreSet::new(raw.evaluator);
        for (file, values) in raw.scores {
            let invalid = |reason: String| PanelError::InvalidScores {
                evaluator: set.evaluator_name.clone(),
                file: file.clone(),
                reason,
            };
            if values.len() != 5 {
                return Err(invalid(format!(
                    "expected 5 scores, found {}",
                    values.len()
                )));
            }
            let mut scores = [Score::Absent; 5];
            for (slot, v) in scores.iter_mut().zip(&values) {
                let n = match v {
                    toml::Value::Integer(i) => *i as f64,
                    toml::Value::Float(f) => *f,
                    other => return Err(invalid(format!("score {other} is not a number"))),
                };
                *slot = Score::from_f64(n)
                    .ok_or_else(|| invalid(format!("score {n} is not one of 0, 0.5, 1.0")))?;
            }
            set.scores.insert(file, scores);
        }
        Ok(set)
    }

    pub fn from_path(path: &Path) -> Result<Self, PanelError> {
        let text = std::fs::read_to_string(path).map_err(|source| PanelError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluatorStats {
    pub name: String,
    pub files: usize,
    pub mean_total: f64,
    pub median_total: f64,
    pub fraction_below: f64,
    pub principle_means: BTreeMap<PrincipleId, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hotspot {
    pub path: String,
    pub principle: PrincipleId,
    pub scores: BTreeMap<String, Score>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Convergence {
    pub evaluators: Vec<String>,
    pub shared_files: usize,
    /// Kendall tau-b of per-principle means, indexed like `evaluators`.
    /// `None` where a panel's means are all equal.
    pub principle_rank_agreement: Vec<Vec<Option<f64>>>,
    pub disagreement_hotspots: Vec<Hotspot>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelSummary {
    pub per_evaluator_stats: Vec<EvaluatorStats>,
    pub pairs: usize,
    pub pairs_below_threshold: usize,
    pub convergence: Option<Convergence>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("convergence needs at least 2 panels, got {0}")]
pub struct InsufficientPanels(pub usize);

/// Adds per-evaluator statistics, the file×evaluator below-threshold
/// fraction and (for two or more panels) convergence to `report`.
///
/// Scores for files the report did not evaluate are dropped with a warning.
pub fn ingest_panel(mut report: CorpusReport, panels: &[EvaluatorScoreSet]) -> CorpusReport {
    let known: BTreeSet<&str> = report.evaluated().map(|(e, _)| e.path.as_str()).collect();
    let threshold = report.threshold;

    let mut filtered = Vec::with_capacity(panels.len());
    let mut warnings = Vec::new();
    for panel in panels {
        let mut kept = EvaluatorScoreSet::new(panel.evaluator_name.clone());
        for (file, scores) in &panel.scores {
            if known.contains(file.as_str()) {
                kept.scores.insert(file.clone(), *scores);
            } else {
                warnings.push(format!(
                    "panel {}: unknown file {file}",
                    panel.evaluator_name
                ));
            }
        }
        filtered.push(kept);
    }

    let mut pairs = 0;
    let mut pairs_below = 0;
    let per_evaluator_stats = filtered
        .iter()
        .map(|panel| {
            let totals: Vec<f64> = panel
                .scores
                .values()
                .map(|s| Total::of(*s).as_f64())
                .collect();
            pairs += totals.len();
            pairs_below += totals.iter().filter(|t| **t < threshold).count();
            EvaluatorStats {
                name: panel.evaluator_name.clone(),
                files: totals.len(),
                mean_total: stats::mean(&totals),
                median_total: stats::median(&totals),
                fraction_below: stats::fraction_below(&totals, threshold),
                principle_means: principle_means(panel.scores.values()),
            }
        })
        .collect();

    let files: BTreeSet<String> = known.iter().map(|s| s.to_string()).collect();
    report.aggregates.fraction_below_threshold_pairs =
        (pairs > 0).then(|| pairs_below as f64 / pairs as f64);
    report.panels = Some(PanelSummary {
        per_evaluator_stats,
        pairs,
        pairs_below_threshold: pairs_below,
        convergence: convergence(&filtered, &files).ok(),
    });
    report.warnings.extend(warnings);
    report
}

fn principle_means<'a>(
    scores: impl Iterator<Item = &'a [Score; 5]> + Clone,
) -> BTreeMap<PrincipleId, f64> {
    PrincipleId::ALL
        .into_iter()
        .map(|p| {
            let v: Vec<f64> = scores.clone().map(|s| s[p.index()].as_f64()).collect();
            (p, stats::mean(&v))
        })
        .collect()
}

/// Rank agreement between panels over the files every panel scored
/// (restricted to `files`).
pub fn convergence(
    panels: &[EvaluatorScoreSet],
    files: &BTreeSet<String>,
) -> Result<Convergence, InsufficientPanels> {
    if panels.len() < 2 {
        return Err(InsufficientPanels(panels.len()));
    }
    let shared: Vec<&String> = files
        .iter()
        .filter(|f| panels.iter().all(|p| p.scores.contains_key(*f)))
        .collect();

    let means: Vec<Vec<f64>> = panels
        .iter()
        .map(|p| {
            principle_means(shared.iter().map(|f| &p.scores[*f]))
                .into_values()
                .collect()
        })
        .collect();
    let matrix = means
        .iter()
        .map(|a| means.iter().map(|b| stats::kendall_tau_b(a, b)).collect())
        .collect();

    let mut hotspots = Vec::new();
    for file in &shared {
        for p in PrincipleId::ALL {
            let cell: BTreeMap<String, Score> = panels
                .iter()
                .map(|panel| (panel.evaluator_name.clone(), panel.scores[*file][p.index()]))
                .collect();
            let lo = cell.values().min();
            let hi = cell.values().max();
            if lo == Some(&Score::Absent) && hi == Some(&Score::Present) {
                hotspots.push(Hotspot {
                    path: (*file).clone(),
                    principle: p,
                    scores: cell,
                });
            }
        }
    }

    Ok(Convergence {
        evaluators: panels.iter().map(|p| p.evaluator_name.clone()).collect(),
        shared_files: shared.len(),
        principle_rank_agreement: matrix,
        disagreement_hotspots: hotspots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use Score::{Absent as Z, Partial as H, Present as F};

    fn files(names: &[&str]) -> BTreeSet<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn parses_panel_file() {
        let set = EvaluatorScoreSet::from_toml_str(
            "evaluator = \"m\"\n[scores]\n\"a/AGENTS.md\" = [1.0, 0.5, 0, 0, 1]\n",
        )
        .unwrap();
        assert_eq!(set.evaluator_name, "m");
        assert_eq!(set.scores["a/AGENTS.md"], [F, H, Z, Z, F]);
    }

    #[test]
    fn rejects_bad_panels() {
        for text in [
            "evaluator = \"m\"\n[scores]\n\"a\" = [1, 0, 0, 0]\n",
            "evaluator = \"m\"\n[scores]\n\"a\" = [1, 0, 0, 0, 0.7]\n",
            "evaluator = \"m\"\n[scores]\n\"a\" = [1, 0, 0, 0, \"x\"]\n",
            "[scores]\n\"a\" = [1, 0, 0, 0, 0]\n",
            "evaluator = \"m\"\nextra = 1\n",
        ] {
            assert!(EvaluatorScoreSet::from_toml_str(text).is_err(), "{text}");
        }
    }

    #[test]
    fn identical_panels_agree_fully() {
        let a = EvaluatorScoreSet::new("a")
            .with("x", [F, H, F, Z, H])
            .with("y", [F, Z, H, Z, F]);
        let b = EvaluatorScoreSet {
            evaluator_name: "b".into(),
            ..a.clone()
        };
        let c = convergence(&[a, b], &files(&["x", "y"])).unwrap();
        assert_eq!(c.principle_rank_agreement[0][1], Some(1.0));
        assert!(c.disagreement_hotspots.is_empty());
    }

    #[test]
    fn reversed_ranking_gives_minus_one() {
        let a = EvaluatorScoreSet::new("a")
            .with("x", [F, F, F, H, Z])
            .with("y", [F, H, Z, Z, Z]);
        let b = EvaluatorScoreSet::new("b")
            .with("x", [Z, H, F, F, F])
            .with("y", [Z, Z, Z, H, F]);
        let c = convergence(&[a, b], &files(&["x", "y"])).unwrap();
        assert_eq!(c.principle_rank_agreement[0][1], Some(-1.0));
    }

    #[test]
    fn full_range_disagreement_is_a_hotspot() {
        let a = EvaluatorScoreSet::new("a").with("x", [F, H, H, Z, H]);
        let b = EvaluatorScoreSet::new("b").with("x", [F, Z, H, F, H]);
        let c = convergence(&[a, b], &files(&["x"])).unwrap();
        assert_eq!(c.disagreement_hotspots.len(), 1);
        assert_eq!(
            c.disagreement_hotspots[0].principle,
            PrincipleId::DataClassification
        );
    }

    #[test]
    fn one_panel_is_insufficient() {
        let a = EvaluatorScoreSet::new("a");
        assert_eq!(
            convergence(&[a], &BTreeSet::new()).unwrap_err(),
            InsufficientPanels(1)
        );
    }
}
