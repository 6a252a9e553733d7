//! Redirect resolution.
//!
//! A pointer file hands its governance off to another document. The
//! resolver follows the first redirect of each pointer until it reaches a
//! document with real content, a target that cannot be loaded, or a loop.

use std::collections::{BTreeMap, HashSet};
use std::io::Read;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::document::{
    GovernanceDocument, RedirectRef, RedirectVocabulary, DEFAULT_POINTER_LINE_LIMIT,
};
use crate::locator::Locator;

pub const DEFAULT_DEPTH_CAP: usize = 8;
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);
pub const DEFAULT_SIZE_CAP: u64 = 1024 * 1024;
pub const DEFAULT_HTTP_REDIRECTS: u32 = 5;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FetchError {
    #[error("not found: {detail}")]
    NotFound { detail: String },
    #[error("timed out after {0:?}")]
    Timeout(Duration),
    #[error("transport error: {0}")]
    TransportError(String),
    #[error("target exceeds {limit} bytes")]
    TooLarge { limit: u64 },
    #[error("symbolic link loop at {0}")]
    Loop(String),
}

impl FetchError {
    /// Short form stored in a broken resolution, e.g. `404`.
    pub fn detail(&self) -> String {
        match self {
            FetchError::NotFound { detail } => detail.clone(),
            other => other.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fetched {
    /// Identity of what was loaded; symlinks and `..` are folded away.
    pub locator: Locator,
    pub bytes: Vec<u8>,
}

/// Loads redirect targets. Implementations must be usable from several threads.
pub trait TargetFetcher: Send + Sync {
    fn fetch(&self, target: &str, base: &Locator) -> Result<Fetched, FetchError>;

    /// Canonical identity of an already-known locator, used for loop detection.
    fn identity(&self, locator: &Locator) -> Locator {
        locator.clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FetchLimits {
    pub timeout: Duration,
    pub size_cap: u64,
    pub max_http_redirects: u32,
}

impl Default for FetchLimits {
    fn default() -> Self {
        FetchLimits {
            timeout: DEFAULT_TIMEOUT,
            size_cap: DEFAULT_SIZE_CAP,
            max_http_redirects: DEFAULT_HTTP_REDIRECTS,
        }
    }
}

/// Reads local files, following symlinks.
#[derive(Debug, Clone, Default)]
pub struct FsFetcher {
    pub limits: FetchLimits,
}

impl FsFetcher {
    fn load(&self, path: &Path) -> Result<Fetched, FetchError> {
        let real = follow_symlinks(path)?;
        let meta = std::fs::metadata(&real).map_err(|e| io_error(path, e))?;
        if meta.is_dir() {
            return Err(FetchError::NotFound {
                detail: format!("{} is a directory", path.display()),
            });
        }
        if meta.len() > self.limits.size_cap {
            return Err(FetchError::TooLarge {
                limit: self.limits.size_cap,
            });
        }
        let bytes = std::fs::read(&real).map_err(|e| io_error(path, e))?;
        let canonical = std::fs::canonicalize(&real).unwrap_or(real);
        Ok(Fetched {
            locator: Locator::Path(canonical),
            bytes,
        })
    }
}

fn io_error(path: &Path, e: std::io::Error) -> FetchError {
    match e.kind() {
        std::io::ErrorKind::NotFound => FetchError::NotFound {
            detail: format!("{} does not exist", path.display()),
        },
        _ => FetchError::TransportError(format!("{}: {e}", path.display())),
    }
}

/// Walks the symlink chain of the final path component.
fn follow_symlinks(path: &Path) -> Result<PathBuf, FetchError> {
    let mut current = path.to_path_buf();
    let mut seen = HashSet::new();
    loop {
        let Ok(meta) = std::fs::symlink_metadata(&current) else {
            return Ok(current);
        };
        if !meta.file_type().is_symlink() {
            return Ok(current);
        }
        if !seen.insert(current.clone()) || seen.len() > 40 {
            return Err(FetchError::Loop(path.display().to_string()));
        }
        let link = std::fs::read_link(&current).map_err(|e| io_error(path, e))?;
        current = match current.parent() {
            Some(dir) if link.is_relative() => dir.join(link),
            _ => link,
        };
    }
}

impl TargetFetcher for FsFetcher {
    fn fetch(&self, target: &str, base: &Locator) -> Result<Fetched, FetchError> {
        match base.join(target) {
            Locator::Path(p) => self.load(&p),
            Locator::Url(u) => Err(FetchError::TransportError(format!(
                "{u}: URL targets need an HTTP-capable fetcher"
            ))),
        }
    }

    fn identity(&self, locator: &Locator) -> Locator {
        match locator {
            Locator::Path(p) => match follow_symlinks(p).map(std::fs::canonicalize) {
                Ok(Ok(c)) => Locator::Path(c),
                _ => locator.clone(),
            },
            other => other.clone(),
        }
    }
}

/// Blocking HTTP GET with a global timeout, size cap and redirect limit.
#[derive(Debug, Clone)]
pub struct HttpFetcher {
    agent: ureq::Agent,
    limits: FetchLimits,
}

impl HttpFetcher {
    pub fn new(limits: FetchLimits) -> Self {
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(limits.timeout))
            .max_redirects(limits.max_http_redirects)
            .http_status_as_error(false)
            .build();
        HttpFetcher {
            agent: config.into(),
            limits,
        }
    }

    fn get(&self, url: &str) -> Result<Fetched, FetchError> {
        let mut resp = self.agent.get(url).call().map_err(|e| self.map_error(e))?;
        let status = resp.status().as_u16();
        match status {
            200..=299 => {}
            404 | 410 => {
                return Err(FetchError::NotFound {
                    detail: status.to_string(),
                })
            }
            300..=399 => {
                return Err(FetchError::TransportError(format!(
                    "more than {} HTTP redirects",
                    self.limits.max_http_redirects
                )))
            }
            _ => return Err(FetchError::TransportError(format!("HTTP {status}"))),
        }
        let cap = self.limits.size_cap;
        let mut bytes = Vec::new();
        resp.body_mut()
            .as_reader()
            .take(cap + 1)
            .read_to_end(&mut bytes)
            .map_err(|e| FetchError::TransportError(e.to_string()))?;
        if bytes.len() as u64 > cap {
            return Err(FetchError::TooLarge { limit: cap });
        }
        Ok(Fetched {
            locator: Locator::Url(url.to_string()),
            bytes,
        })
    }

    fn map_error(&self, e: ureq::Error) -> FetchError {
        match e {
            ureq::Error::Timeout(_) => FetchError::Timeout(self.limits.timeout),
            ureq::Error::TooManyRedirects => FetchError::TransportError(format!(
                "more than {} HTTP redirects",
                self.limits.max_http_redirects
            )),
            ureq::Error::Io(io) if io.kind() == std::io::ErrorKind::TimedOut => {
                FetchError::Timeout(self.limits.timeout)
            }
            other => FetchError::TransportError(other.to_string()),
        }
    }
}

impl Default for HttpFetcher {
    fn default() -> Self {
        HttpFetcher::new(FetchLimits::default())
    }
}

impl TargetFetcher for HttpFetcher {
    fn fetch(&self, target: &str, base: &Locator) -> Result<Fetched, FetchError> {
        match base.join(target) {
            Locator::Url(u) => self.get(&u),
            Locator::Path(p) => Err(FetchError::TransportError(format!(
                "{}: local targets need a filesystem fetcher",
                p.display()
            ))),
        }
    }
}

/// Filesystem for paths, HTTP for URLs.
#[derive(Debug, Clone, Default)]
pub struct DefaultFetcher {
    pub fs: FsFetcher,
    pub http: HttpFetcher,
}

impl DefaultFetcher {
    pub fn new(limits: FetchLimits) -> Self {
        DefaultFetcher {
            fs: FsFetcher { limits },
            http: HttpFetcher::new(limits),
        }
    }
}

impl TargetFetcher for DefaultFetcher {
    fn fetch(&self, target: &str, base: &Locator) -> Result<Fetched, FetchError> {
        if base.join(target).is_url() {
            self.http.fetch(target, base)
        } else {
            self.fs.fetch(target, base)
        }
    }

    fn identity(&self, locator: &Locator) -> Locator {
        self.fs.identity(locator)
    }
}

/// Deterministic fetcher over an in-memory file map, for tests and dry runs.
#[derive(Debug, Default)]
pub struct MemoryFetcher {
    files: BTreeMap<Locator, String>,
    failures: BTreeMap<Locator, FetchError>,
    calls: AtomicUsize,
}

impl MemoryFetcher {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_file(mut self, locator: impl Into<Locator>, text: impl Into<String>) -> Self {
        self.files.insert(locator.into(), text.into());
        self
    }

    pub fn with_failure(mut self, locator: impl Into<Locator>, err: FetchError) -> Self {
        self.failures.insert(locator.into(), err);
        self
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }
}

impl TargetFetcher for MemoryFetcher {
    fn fetch(&self, target: &str, base: &Locator) -> Result<Fetched, FetchError> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        let loc = base.join(target);
        if let Some(err) = self.failures.get(&loc) {
            return Err(err.clone());
        }
        match self.files.get(&loc) {
            Some(text) => Ok(Fetched {
                locator: loc,
                bytes: text.clone().into_bytes(),
            }),
            None => Err(FetchError::NotFound {
                detail: if loc.is_url() {
                    "404".to_string()
                } else {
                    format!("{loc} does not exist")
                },
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ResolutionStatus {
    None,
    Resolved,
    Broken,
    Cyclic,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainLink {
    pub source: Locator,
    pub redirect: RedirectRef,
    /// Redirects in the same file that were not followed.
    pub other_refs: Vec<RedirectRef>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RedirectResolution {
    pub chain: Vec<ChainLink>,
    pub status: ResolutionStatus,
    pub resolved_document: Option<GovernanceDocument>,
    pub failure_detail: Option<String>,
    /// Whether the file the chain starts from is a pointer file.
    pub source_is_pointer: bool,
}

impl RedirectResolution {
    /// Nothing followed.
    pub fn none(source_is_pointer: bool) -> Self {
        RedirectResolution {
            chain: Vec::new(),
            status: ResolutionStatus::None,
            resolved_document: None,
            failure_detail: None,
            source_is_pointer,
        }
    }

    #[cfg(test)]
    pub(crate) fn test_status(status: ResolutionStatus, source_is_pointer: bool) -> Self {
        RedirectResolution {
            status,
            source_is_pointer,
            ..Self::none(source_is_pointer)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolverConfig {
    pub depth_cap: usize,
    pub pointer_line_limit: usize,
    pub vocabulary: RedirectVocabulary,
}

impl Default for ResolverConfig {
    fn default() -> Self {
        ResolverConfig {
            depth_cap: DEFAULT_DEPTH_CAP,
            pointer_line_limit: DEFAULT_POINTER_LINE_LIMIT,
            vocabulary: RedirectVocabulary::default(),
        }
    }
}

/// Follows a pointer file's redirect chain. Non-pointer input yields status `None`.
pub fn resolve(
    doc: &GovernanceDocument,
    fetcher: &dyn TargetFetcher,
    config: &ResolverConfig,
) -> RedirectResolution {
    let pointer = doc.is_pointer_file(config.pointer_line_limit);
    if !pointer {
        return RedirectResolution::none(false);
    }
    follow(doc, fetcher, config, true)
}

/// Like [`resolve`], but also follows the first reference of a hybrid file.
pub fn resolve_any(
    doc: &GovernanceDocument,
    fetcher: &dyn TargetFetcher,
    config: &ResolverConfig,
) -> RedirectResolution {
    let pointer = doc.is_pointer_file(config.pointer_line_limit);
    if doc.redirect_refs().is_empty() {
        return RedirectResolution::none(pointer);
    }
    follow(doc, fetcher, config, pointer)
}

fn follow(
    start: &GovernanceDocument,
    fetcher: &dyn TargetFetcher,
    config: &ResolverConfig,
    source_is_pointer: bool,
) -> RedirectResolution {
    let depth_cap = config.depth_cap.max(1);
    let mut out = RedirectResolution::none(source_is_pointer);
    let mut visited = HashSet::from([fetcher.identity(start.source())]);
    let mut current = start.clone();
    loop {
        if out.chain.len() == depth_cap {
            out.status = ResolutionStatus::Cyclic;
            out.failure_detail = Some(format!("depth cap {depth_cap} reached"));
            return out;
        }
        let refs = current.redirect_refs();
        let first = refs[0].clone();
        out.chain.push(ChainLink {
            source: current.source().clone(),
            redirect: first.clone(),
            other_refs: refs[1..].to_vec(),
        });
        let fetched = match fetcher.fetch(&first.target, current.source()) {
            Ok(f) => f,
            Err(FetchError::Loop(at)) => {
                out.status = ResolutionStatus::Cyclic;
                out.failure_detail = Some(format!("symbolic link loop at {at}"));
                return out;
            }
            Err(e) => {
                out.status = ResolutionStatus::Broken;
                out.failure_detail = Some(e.detail());
                return out;
            }
        };
        if !visited.insert(fetcher.identity(&fetched.locator)) {
            out.status = ResolutionStatus::Cyclic;
            out.failure_detail = Some(format!("{} revisited", fetched.locator));
            return out;
        }
        let text = String::from_utf8_lossy(&fetched.bytes);
        let next = GovernanceDocument::parse_with(&text, fetched.locator, &config.vocabulary);
        if !next.is_pointer_file(config.pointer_line_limit) {
            out.status = ResolutionStatus::Resolved;
            out.resolved_document = Some(next);
            return out;
        }
        current = next;
    }
}
