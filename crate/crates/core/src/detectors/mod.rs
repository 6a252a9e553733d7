//! Principle detectors.
//!
//! Each of the five principles is scored by running its rules over a
//! [`GovernanceDocument`]. Phrase rules see substantive prose and fenced
//! code content; section rules look at heading-delimited sections. The
//! principle score is the highest level among the rules that fired, and
//! every match is kept as [`Evidence`].

pub mod pattern;
pub mod rules;

use std::collections::HashSet;
use std::fmt;
use std::ops::Range;
use std::str::FromStr;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::document::{GovernanceDocument, LineClass};
pub use rules::{Rule, RuleError, RuleSet, Scope, Trigger};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PrincipleId {
    #[serde(rename = "P1")]
    SuccessDefinition,
    #[serde(rename = "P2")]
    AssessmentRubric,
    #[serde(rename = "P3")]
    ScopeBoundary,
    #[serde(rename = "P4")]
    DataClassification,
    #[serde(rename = "P5")]
    QualityGate,
}

impl PrincipleId {
    pub const ALL: [PrincipleId; 5] = [
        PrincipleId::SuccessDefinition,
        PrincipleId::AssessmentRubric,
        PrincipleId::ScopeBoundary,
        PrincipleId::DataClassification,
        PrincipleId::QualityGate,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Short code, `P1`..`P5`.
    pub fn code(self) -> &'static str {
        ["P1", "P2", "P3", "P4", "P5"][self.index()]
    }

    pub fn name(self) -> &'static str {
        match self {
            PrincipleId::SuccessDefinition => "Success Definition",
            PrincipleId::AssessmentRubric => "Assessment Rubric",
            PrincipleId::ScopeBoundary => "Scope Boundary",
            PrincipleId::DataClassification => "Data Classification",
            PrincipleId::QualityGate => "Quality Gate",
        }
    }
}

impl fmt::Display for PrincipleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code(), self.name())
    }
}

impl FromStr for PrincipleId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .map(|c| c.to_ascii_lowercase())
            .collect();
        PrincipleId::ALL
            .into_iter()
            .find(|p| {
                let name: String = p.name().replace(' ', "").to_ascii_lowercase();
                key == p.code().to_ascii_lowercase() || key == name
            })
            .ok_or_else(|| format!("unknown principle `{s}`"))
    }
}

/// Three-point holistic score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum Score {
    #[default]
    Absent,
    Partial,
    Present,
}

impl Score {
    pub const ALL: [Score; 3] = [Score::Absent, Score::Partial, Score::Present];

    pub fn half_points(self) -> u8 {
        self as u8
    }

    pub fn from_half_points(n: u8) -> Option<Score> {
        Score::ALL.get(n as usize).copied()
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.half_points()) / 2.0
    }

    /// Exact match against 0, 0.5 or 1.0.
    pub fn from_f64(v: f64) -> Option<Score> {
        Score::ALL.into_iter().find(|s| s.as_f64() == v)
    }

    pub fn label(self) -> &'static str {
        match self {
            Score::Absent => "absent",
            Score::Partial => "partial",
            Score::Present => "present",
        }
    }
}

impl fmt::Display for Score {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.1}", self.as_f64())
    }
}

impl Serialize for Score {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.as_f64())
    }
}

impl<'de> Deserialize<'de> for Score {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        Score::from_f64(v).ok_or_else(|| {
            serde::de::Error::custom(format!("score must be 0, 0.5 or 1.0, got {v}"))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Evidence {
    pub rule_id: String,
    /// Byte range in the document's raw text.
    pub span: Range<usize>,
    /// One-based line of the span start.
    pub line: usize,
    pub quote: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrincipleScore {
    pub principle: PrincipleId,
    pub score: Score,
    pub evidence: Vec<Evidence>,
    pub rationale: String,
}

impl PrincipleScore {
    /// Score with rationale only, as ingested from external evaluators.
    pub fn bare(principle: PrincipleId, score: Score) -> Self {
        PrincipleScore {
            principle,
            score,
            evidence: Vec::new(),
            rationale: format!("{}: external score", score.label()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DetectError {
    #[error("rule set has no rules for {0}")]
    NoRules(PrincipleId),
}

static LIST_ITEM: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\s{0,6}(?:[-*+]|\d{1,3}[.)])\s+\S").unwrap());

/// Scores one principle.
pub fn detect(
    doc: &GovernanceDocument,
    principle: PrincipleId,
    rules: &RuleSet,
) -> Result<PrincipleScore, DetectError> {
    let mut any_rule = false;
    let mut fired: Vec<&Rule> = Vec::new();
    let mut evidence: Vec<Evidence> = Vec::new();
    let prose = doc.prose_segments();
    let code: Vec<Range<usize>> = doc
        .code_blocks()
        .iter()
        .map(|b| b.content_span.clone())
        .filter(|r| !r.is_empty())
        .collect();

    for rule in rules.for_principle(principle) {
        any_rule = true;
        let hits = match &rule.trigger {
            Trigger::Phrases {
                groups,
                min_distinct,
                scope,
            } => phrase_hits(doc, groups, *min_distinct, *scope, &prose, &code),
            Trigger::SectionList { heading, min_items } => section_hits(doc, heading, *min_items),
        };
        if let Some(spans) = hits {
            fired.push(rule);
            evidence.extend(spans.into_iter().map(|span| Evidence {
                rule_id: rule.id.clone(),
                line: line_number(doc, span.start),
                quote: doc.raw_text()[span.clone()].to_string(),
                span,
            }));
        }
    }
    if !any_rule {
        return Err(DetectError::NoRules(principle));
    }

    let score = fired.iter().map(|r| r.level).max().unwrap_or(Score::Absent);
    // stable: rule order breaks ties at equal positions
    evidence.sort_by_key(|e| (e.span.start, e.span.end));
    evidence.dedup_by(|b, a| a.span == b.span);
    let rationale = if fired.is_empty() {
        "absent: no rule fired".to_string()
    } else {
        let ids: Vec<&str> = fired.iter().map(|r| r.id.as_str()).collect();
        format!("{}: fired {}", score.label(), ids.join(", "))
    };
    Ok(PrincipleScore {
        principle,
        score,
        evidence,
        rationale,
    })
}

/// Scores all five principles, ordered P1..P5.
pub fn evaluate_document(
    doc: &GovernanceDocument,
    rules: &RuleSet,
) -> Result<Vec<PrincipleScore>, DetectError> {
    PrincipleId::ALL
        .into_iter()
        .map(|p| detect(doc, p, rules))
        .collect()
}

fn phrase_hits(
    doc: &GovernanceDocument,
    groups: &[Regex],
    min_distinct: usize,
    scope: Scope,
    prose: &[Range<usize>],
    code: &[Range<usize>],
) -> Option<Vec<Range<usize>>> {
    let raw = doc.raw_text();
    let mut segments: Vec<&Range<usize>> = Vec::new();
    if scope.includes_prose() {
        segments.extend(prose);
    }
    if scope.includes_code() {
        segments.extend(code);
    }
    let mut all = Vec::new();
    for re in groups {
        let mut spans = Vec::new();
        let mut distinct = HashSet::new();
        for seg in &segments {
            for m in re.find_iter(&raw[(*seg).clone()]) {
                let span = seg.start + m.start()..seg.start + m.end();
                distinct.insert(normalize(m.as_str()));
                spans.push(span);
            }
        }
        if distinct.len() < min_distinct {
            return None;
        }
        all.extend(spans);
    }
    Some(all)
}

fn section_hits(
    doc: &GovernanceDocument,
    heading: &Regex,
    min_items: usize,
) -> Option<Vec<Range<usize>>> {
    let lines = doc.lines();
    let mut out = Vec::new();
    for section in doc.sections() {
        if !heading.is_match(&section.heading_text) {
            continue;
        }
        let items: Vec<Range<usize>> = lines[section.line_range.clone()]
            .iter()
            .skip(1)
            .filter(|l| {
                l.class == LineClass::Substantive && !l.in_code_block && LIST_ITEM.is_match(&l.text)
            })
            .map(|l| l.span())
            .collect();
        if items.len() >= min_items {
            out.push(lines[section.line_range.start].span());
            out.extend(items);
        }
    }
    (!out.is_empty()).then_some(out)
}

fn normalize(s: &str) -> String {
    s.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

fn line_number(doc: &GovernanceDocument, byte: usize) -> usize {
    doc.lines().partition_point(|l| l.offset <= byte).max(1)
}
