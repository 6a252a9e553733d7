use std::fmt;
use std::path::{Component, Path, PathBuf};

use serde::{Deserialize, Serialize};
use url::Url;

/// Where a governance file lives: a filesystem path or an http(s) URL.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", from = "String")]
pub enum Locator {
    Path(PathBuf),
    Url(String),
}

impl Locator {
    pub fn is_url(&self) -> bool {
        matches!(self, Locator::Url(_))
    }

    /// Resolves `target` against this locator's directory.
    pub fn join(&self, target: &str) -> Locator {
        let target = target.trim();
        if is_url(target) {
            return Locator::Url(target.to_string());
        }
        let target = strip_fragment(target);
        match self {
            Locator::Url(base) => match Url::parse(base).and_then(|b| b.join(target)) {
                Ok(u) => Locator::Url(u.to_string()),
                Err(_) => Locator::Url(format!("{base}/{target}")),
            },
            Locator::Path(base) => {
                let t = Path::new(target);
                if t.is_absolute() {
                    return Locator::Path(normalize(t));
                }
                let dir = base.parent().unwrap_or(Path::new(""));
                Locator::Path(normalize(&dir.join(t)))
            }
        }
    }

    pub fn as_path(&self) -> Option<&Path> {
        match self {
            Locator::Path(p) => Some(p),
            Locator::Url(_) => None,
        }
    }
}

fn is_url(s: &str) -> bool {
    let lower = s.to_ascii_lowercase();
    lower.starts_with("http://") || lower.starts_with("https://")
}

fn strip_fragment(target: &str) -> &str {
    target.split('#').next().unwrap_or(target)
}

/// Lexical normalisation: drops `.` and folds `..` where possible.
fn normalize(p: &Path) -> PathBuf {
    let mut out = PathBuf::new();
    for c in p.components() {
        match c {
            Component::CurDir => {}
            Component::ParentDir => {
                if !out.pop() {
                    out.push("..");
                }
            }
            other => out.push(other.as_os_str()),
        }
    }
    out
}

impl fmt::Display for Locator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Locator::Path(p) => write!(f, "{}", p.display()),
            Locator::Url(u) => f.write_str(u),
        }
    }
}

impl From<&str> for Locator {
    fn from(s: &str) -> Self {
        if is_url(s) {
            Locator::Url(s.to_string())
        } else {
            Locator::Path(PathBuf::from(s))
        }
    }
}

impl From<String> for Locator {
    fn from(s: String) -> Self {
        Locator::from(s.as_str())
    }
}

impl From<PathBuf> for Locator {
    fn from(p: PathBuf) -> Self {
        Locator::Path(p)
    }
}

impl From<&Path> for Locator {
    fn from(p: &Path) -> Self {
        Locator::Path(p.to_path_buf())
    }
}

impl From<Locator> for String {
    fn from(l: Locator) -> Self {
        l.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_targets_resolve_beside_source() {
        let base = Locator::from("repo/AGENTS.md");
        assert_eq!(base.join("CLAUDE.md"), Locator::from("repo/CLAUDE.md"));
        assert_eq!(
            base.join("./.github/copilot-instructions.md#top"),
            Locator::from("repo/.github/copilot-instructions.md")
        );
        assert_eq!(base.join("../x/AGENTS.md"), Locator::from("x/AGENTS.md"));
        assert_eq!(
            Locator::from("AGENTS.md").join("CLAUDE.md"),
            Locator::from("CLAUDE.md")
        );
    }

    #[test]
    fn url_joins() {
        let base = Locator::from("https://example.com/org/repo/raw/main/AGENTS.md");
        assert_eq!(
            base.join("openspec/AGENTS.md"),
            Locator::Url("https://example.com/org/repo/raw/main/openspec/AGENTS.md".into())
        );
        assert_eq!(
            Locator::from("a/AGENTS.md").join("HTTPS://h/x.md"),
            Locator::Url("HTTPS://h/x.md".into())
        );
    }

    #[test]
    fn string_round_trip() {
        for s in ["a/b.md", "https://h/x.md"] {
            assert_eq!(String::from(Locator::from(s)), s);
        }
    }
}
