//! Rule sets: loading, validation and compilation.

use std::collections::HashSet;
use std::path::Path;
use std::sync::LazyLock;

use regex::Regex;
use serde::Deserialize;

use super::pattern::{compile_any, PatternError};
use super::{PrincipleId, Score};
use crate::document::RedirectVocabulary;

/// The shipped rule file.
pub const DEFAULT_RULES_TOML: &str = include_str!("default_rules.toml");

pub const RULESET_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum RuleError {
    #[error("cannot read rule file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("rule file is not valid: {0}")]
    Syntax(String),
    #[error("unsupported rule-set version {0} (expected {RULESET_VERSION})")]
    Version(u32),
    #[error("malformed rule `{id}`: {reason}")]
    MalformedRule { id: String, reason: String },
    #[error("duplicate rule id `{0}`")]
    DuplicateId(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    Prose,
    Code,
    #[default]
    Any,
}

impl Scope {
    pub fn includes_prose(self) -> bool {
        matches!(self, Scope::Prose | Scope::Any)
    }

    pub fn includes_code(self) -> bool {
        matches!(self, Scope::Code | Scope::Any)
    }
}

#[derive(Debug, Clone)]
pub enum Trigger {
    /// Every group must produce at least `min_distinct` distinct matches.
    Phrases {
        groups: Vec<Regex>,
        min_distinct: usize,
        scope: Scope,
    },
    /// A section whose heading matches, holding at least `min_items` list items.
    SectionList { heading: Regex, min_items: usize },
}

#[derive(Debug, Clone)]
pub struct Rule {
    pub id: String,
    pub principle: PrincipleId,
    pub level: Score,
    pub description: String,
    pub trigger: Trigger,
}

#[derive(Debug, Clone)]
pub struct RuleSet {
    rules: Vec<Rule>,
    redirects: RedirectVocabulary,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleFile {
    version: u32,
    #[serde(default)]
    redirects: Option<RedirectSpec>,
    #[serde(default, rename = "rule")]
    rules: Vec<RuleSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RedirectSpec {
    known_files: Option<Vec<String>>,
    window: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleSpec {
    id: String,
    principle: String,
    level: f64,
    #[serde(default)]
    description: String,
    #[serde(default)]
    scope: Scope,
    any: Option<Vec<String>>,
    all: Option<Vec<Vec<String>>>,
    min_distinct: Option<usize>,
    section_heading: Option<Vec<String>>,
    min_list_items: Option<usize>,
}

static DEFAULT: LazyLock<RuleSet> = LazyLock::new(|| {
    RuleSet::from_toml_str(DEFAULT_RULES_TOML).expect("shipped rule set is valid")
});

impl Default for RuleSet {
    fn default() -> Self {
        DEFAULT.clone()
    }
}

impl RuleSet {
    pub fn from_toml_str(text: &str) -> Result<Self, RuleError> {
        let file: RuleFile = toml::from_str(text).map_err(|e| RuleError::Syntax(e.to_string()))?;
        if file.version != RULESET_VERSION {
            return Err(RuleError::Version(file.version));
        }
        let mut seen = HashSet::new();
        let mut rules = Vec::with_capacity(file.rules.len());
        for spec in file.rules {
            if !seen.insert(spec.id.clone()) {
                return Err(RuleError::DuplicateId(spec.id));
            }
            rules.push(compile_rule(spec)?);
        }
        let mut redirects = RedirectVocabulary::default();
        if let Some(r) = file.redirects {
            if let Some(files) = r.known_files {
                redirects.known_files = files;
            }
            if let Some(w) = r.window {
                redirects.window = w;
            }
        }
        Ok(RuleSet { rules, redirects })
    }

    pub fn from_path(path: &Path) -> Result<Self, RuleError> {
        let text = std::fs::read_to_string(path).map_err(|source| RuleError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn for_principle(&self, principle: PrincipleId) -> impl Iterator<Item = &Rule> {
        self.rules.iter().filter(move |r| r.principle == principle)
    }

    pub fn redirects(&self) -> &RedirectVocabulary {
        &self.redirects
    }

    /// Principles with no rule at all.
    pub fn uncovered(&self) -> Vec<PrincipleId> {
        PrincipleId::ALL
            .into_iter()
            .filter(|p| self.for_principle(*p).next().is_none())
            .collect()
    }

    /// Copy of this set with every rule of `principle` replaced by `rules`.
    pub fn with_principle_rules(&self, principle: PrincipleId, rules: Vec<Rule>) -> RuleSet {
        let mut out: Vec<Rule> = self
            .rules
            .iter()
            .filter(|r| r.principle != principle)
            .cloned()
            .collect();
        out.extend(rules);
        RuleSet {
            rules: out,
            redirects: self.redirects.clone(),
        }
    }
}

fn compile_rule(spec: RuleSpec) -> Result<Rule, RuleError> {
    let id = spec.id.clone();
    let malformed = |reason: String| RuleError::MalformedRule {
        id: id.clone(),
        reason,
    };
    let pattern_err = |e: PatternError| malformed(e.to_string());

    let principle: PrincipleId = spec
        .principle
        .parse()
        .map_err(|_| malformed(format!("unknown principle `{}`", spec.principle)))?;
    let level = match Score::from_f64(spec.level) {
        Some(s) if s != Score::Absent => s,
        _ => {
            return Err(malformed(format!(
                "level must be 0.5 or 1.0, got {}",
                spec.level
            )))
        }
    };

    let forms = [
        spec.any.is_some(),
        spec.all.is_some(),
        spec.section_heading.is_some(),
    ];
    if forms.iter().filter(|f| **f).count() != 1 {
        return Err(malformed(
            "exactly one of `any`, `all` or `section_heading` is required".into(),
        ));
    }

    let trigger = if let Some(heading) = spec.section_heading {
        if spec.min_distinct.is_some() {
            return Err(malformed(
                "`min_distinct` does not apply to section rules".into(),
            ));
        }
        Trigger::SectionList {
            heading: compile_any(&heading).map_err(pattern_err)?,
            min_items: spec.min_list_items.unwrap_or(1).max(1),
        }
    } else {
        if spec.min_list_items.is_some() {
            return Err(malformed(
                "`min_list_items` requires `section_heading`".into(),
            ));
        }
        let groups = match (spec.any, spec.all) {
            (Some(any), None) => vec![any],
            (None, Some(all)) if !all.is_empty() => all,
            _ => return Err(malformed("`all` needs at least one group".into())),
        };
        let groups = groups
            .iter()
            .map(|g| compile_any(g))
            .collect::<Result<Vec<_>, _>>()
            .map_err(pattern_err)?;
        let min_distinct = spec.min_distinct.unwrap_or(1);
        if min_distinct == 0 {
            return Err(malformed("`min_distinct` must be at least 1".into()));
        }
        Trigger::Phrases {
            groups,
            min_distinct,
            scope: spec.scope,
        }
    };

    Ok(Rule {
        id: spec.id,
        principle,
        level,
        description: spec.description,
        trigger,
    })
}
