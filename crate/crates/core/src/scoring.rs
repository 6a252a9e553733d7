//! Totals, interpretation bands, the incompleteness flag and archetypes.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::detectors::{PrincipleId, PrincipleScore, Score};
use crate::resolver::{RedirectResolution, ResolutionStatus};

pub const DEFAULT_THRESHOLD: f64 = 2.5;

/// Sum of five principle scores, held in half-point units (0..=10).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Total(u8);

impl Total {
    pub const MAX: Total = Total(10);

    pub fn from_half_points(n: u8) -> Option<Total> {
        (n <= 10).then_some(Total(n))
    }

    pub fn half_points(self) -> u8 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.0) / 2.0
    }

    pub fn of(scores: impl IntoIterator<Item = Score>) -> Total {
        Total(scores.into_iter().map(Score::half_points).sum())
    }

    /// All achievable totals, 0.0 to 5.0 in half-point steps.
    pub fn all() -> impl Iterator<Item = Total> {
        (0..=10).map(Total)
    }
}

impl fmt::Display for Total {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.1}", self.as_f64())
    }
}

impl Serialize for Total {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.as_f64())
    }
}

impl<'de> Deserialize<'de> for Total {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        let half = v * 2.0;
        if half.fract() != 0.0 || !(0.0..=10.0).contains(&half) {
            return Err(serde::de::Error::custom(format!("invalid total {v}")));
        }
        Ok(Total(half as u8))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Band {
    StructurallyComplete,
    FunctionalWithGaps,
    StructurallyIncomplete,
}

impl Band {
    /// [4.0, 5.0] complete; [3.0, 4.0) functional with gaps; below 3.0 incomplete.
    pub fn of(total: Total) -> Band {
        match total.half_points() {
            8..=10 => Band::StructurallyComplete,
            6 | 7 => Band::FunctionalWithGaps,
            _ => Band::StructurallyIncomplete,
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            Band::StructurallyComplete => "structurally complete",
            Band::FunctionalWithGaps => "functional with gaps",
            Band::StructurallyIncomplete => "structurally incomplete",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Archetype {
    OperationalGuide,
    ConstrainedExecutor,
    MinimalPointer,
    BrokenReference,
    CompleteSpecification,
    Unclassified,
}

impl Archetype {
    pub const ALL: [Archetype; 6] = [
        Archetype::OperationalGuide,
        Archetype::ConstrainedExecutor,
        Archetype::MinimalPointer,
        Archetype::BrokenReference,
        Archetype::CompleteSpecification,
        Archetype::Unclassified,
    ];

    pub fn describe(self) -> &'static str {
        match self {
            Archetype::OperationalGuide => "operational guide",
            Archetype::ConstrainedExecutor => "constrained executor",
            Archetype::MinimalPointer => "minimal pointer",
            Archetype::BrokenReference => "broken reference",
            Archetype::CompleteSpecification => "complete specification",
            Archetype::Unclassified => "unclassified",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    Standalone,
    Resolved,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub principle_scores: Vec<PrincipleScore>,
    pub total: Total,
    pub band: Band,
    pub below_threshold: bool,
    pub archetype: Archetype,
    pub variant: Variant,
}

impl Evaluation {
    pub fn score(&self, principle: PrincipleId) -> Score {
        self.principle_scores[principle.index()].score
    }

    pub fn scores(&self) -> [Score; 5] {
        PrincipleId::ALL.map(|p| self.score(p))
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScoringError {
    #[error("invalid score set: {0}")]
    InvalidScoreSet(String),
    #[error("threshold must lie in (0, 5], got {0}")]
    InvalidThreshold(f64),
}

pub fn validate_threshold(threshold: f64) -> Result<(), ScoringError> {
    if threshold > 0.0 && threshold <= 5.0 {
        Ok(())
    } else {
        Err(ScoringError::InvalidThreshold(threshold))
    }
}

/// Combines five principle scores into an unclassified evaluation.
///
/// Scores may arrive in any order; they are stored P1..P5.
pub fn aggregate(
    scores: Vec<PrincipleScore>,
    threshold: f64,
    variant: Variant,
) -> Result<Evaluation, ScoringError> {
    validate_threshold(threshold)?;
    let mut slots: [Option<PrincipleScore>; 5] = Default::default();
    let count = scores.len();
    for s in scores {
        let slot = &mut slots[s.principle.index()];
        if slot.is_some() {
            return Err(ScoringError::InvalidScoreSet(format!(
                "duplicate score for {}",
                s.principle.code()
            )));
        }
        *slot = Some(s);
    }
    if count != 5 {
        let missing: Vec<&str> = PrincipleId::ALL
            .into_iter()
            .filter(|p| slots[p.index()].is_none())
            .map(PrincipleId::code)
            .collect();
        return Err(ScoringError::InvalidScoreSet(format!(
            "missing {}",
            missing.join(", ")
        )));
    }
    let principle_scores: Vec<PrincipleScore> = slots.into_iter().flatten().collect();
    let total = Total::of(principle_scores.iter().map(|s| s.score));
    Ok(Evaluation {
        band: Band::of(total),
        below_threshold: total.as_f64() < threshold,
        total,
        principle_scores,
        archetype: Archetype::Unclassified,
        variant,
    })
}

/// First matching rule wins; see the README for the ordering.
pub fn classify_archetype(eval: &Evaluation, redirect: &RedirectResolution) -> Archetype {
    use PrincipleId::*;
    let half = |p: PrincipleId| eval.score(p).half_points();
    match redirect.status {
        ResolutionStatus::Broken | ResolutionStatus::Cyclic => return Archetype::BrokenReference,
        ResolutionStatus::Resolved
            if redirect.source_is_pointer && eval.total.half_points() == 0 =>
        {
            return Archetype::MinimalPointer
        }
        _ => {}
    }
    if eval.scores().iter().all(|s| *s == Score::Present) {
        return Archetype::CompleteSpecification;
    }
    let operational_base = half(ScopeBoundary) >= 1 && half(QualityGate) >= 1;
    if operational_base && half(AssessmentRubric) >= 1 && half(DataClassification) < 1 {
        return Archetype::ConstrainedExecutor;
    }
    let weak_max = half(SuccessDefinition)
        .max(half(AssessmentRubric))
        .max(half(DataClassification));
    if operational_base && weak_max <= 1 && half(AssessmentRubric) < 1 {
        return Archetype::OperationalGuide;
    }
    Archetype::Unclassified
}
