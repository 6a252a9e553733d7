//! Parsed model of a governance file.
//!
//! A [`GovernanceDocument`] keeps the byte-exact source text next to a
//! line-level view (blank / boilerplate / substantive), the flat list of
//! heading-delimited sections, fenced code blocks and every reference that
//! points the reader at another governance file.

use std::ops::Range;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::locator::Locator;

/// Default substantive-line ceiling below which a redirecting file counts as a pointer.
pub const DEFAULT_POINTER_LINE_LIMIT: usize = 10;

/// Filenames that conventionally hold agent governance content.
pub const KNOWN_GOVERNANCE_FILES: &[&str] = &[
    "CLAUDE.md",
    "CONTRIBUTING.md",
    "copilot-instructions.md",
    "GEMINI.md",
    "AGENT.md",
    ".cursorrules",
];

/// How many tokens after a "see" / "refer to" / "read" directive may hold the target.
pub const DIRECTIVE_WINDOW: usize = 5;

const GENERATION_MARKERS: &[&str] = &["generated by", "auto-generated"];

// "do not edit" as a file notice, not as an instruction about other files
static DO_NOT_EDIT_NOTICE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"(?i)\b(?:do not|don't) edit(?:\s+(?:this file|manually|directly|by hand))*\s*[.!:]?\s*(?:-->|\*/)?\s*$",
    )
    .unwrap()
});

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LineClass {
    Substantive,
    Boilerplate,
    Blank,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LineEnding {
    None,
    Lf,
    CrLf,
}

impl LineEnding {
    pub fn as_str(self) -> &'static str {
        match self {
            LineEnding::None => "",
            LineEnding::Lf => "\n",
            LineEnding::CrLf => "\r\n",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Line {
    pub index: usize,
    pub text: String,
    pub ending: LineEnding,
    /// Byte offset of the first character of `text` in the raw text.
    pub offset: usize,
    pub class: LineClass,
    pub in_code_block: bool,
}

impl Line {
    /// Byte range of the line text (terminator excluded).
    pub fn span(&self) -> Range<usize> {
        self.offset..self.offset + self.text.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Section {
    pub heading_text: String,
    pub heading_level: u8,
    /// Half-open line-index interval, heading line included.
    pub line_range: Range<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeBlock {
    /// Half-open line-index interval covering both fence lines.
    pub line_range: Range<usize>,
    pub info_string: String,
    pub content: String,
    /// Byte range of `content` in the raw text.
    pub content_span: Range<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RedirectKind {
    Link,
    Mention,
    SeeDirective,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RedirectRef {
    pub target: String,
    /// Byte range in the raw text; the slice contains `target`.
    pub span: Range<usize>,
    pub kind: RedirectKind,
}

/// Filenames and directive words used by redirect detection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RedirectVocabulary {
    pub known_files: Vec<String>,
    pub window: usize,
}

impl Default for RedirectVocabulary {
    fn default() -> Self {
        RedirectVocabulary {
            known_files: KNOWN_GOVERNANCE_FILES
                .iter()
                .map(|s| s.to_string())
                .collect(),
            window: DIRECTIVE_WINDOW,
        }
    }
}

impl RedirectVocabulary {
    fn is_known_file(&self, target: &str) -> bool {
        let name = basename(target);
        self.known_files
            .iter()
            .any(|k| k.eq_ignore_ascii_case(name))
    }
}

/// Immutable parsed governance file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GovernanceDocument {
    source: Locator,
    raw_text: String,
    lines: Vec<Line>,
    sections: Vec<Section>,
    code_blocks: Vec<CodeBlock>,
    redirect_refs: Vec<RedirectRef>,
    substantive_line_count: usize,
}

impl GovernanceDocument {
    pub fn parse(raw_text: &str, source: Locator) -> Self {
        Self::parse_with(raw_text, source, &RedirectVocabulary::default())
    }

    /// Parses raw bytes, replacing invalid UTF-8 sequences with U+FFFD.
    pub fn parse_bytes(bytes: &[u8], source: Locator) -> Self {
        Self::parse(&String::from_utf8_lossy(bytes), source)
    }

    pub fn parse_with(raw_text: &str, source: Locator, vocab: &RedirectVocabulary) -> Self {
        let (lines, fences) = split_and_classify(raw_text);
        let sections = collect_sections(&lines);
        let code_blocks = collect_code_blocks(raw_text, &lines, fences);
        let substantive_line_count = lines
            .iter()
            .filter(|l| l.class == LineClass::Substantive)
            .count();
        let mut doc = GovernanceDocument {
            source,
            raw_text: raw_text.to_string(),
            lines,
            sections,
            code_blocks,
            redirect_refs: Vec::new(),
            substantive_line_count,
        };
        doc.redirect_refs = detect_redirects_with(&doc, vocab);
        doc
    }

    pub fn source(&self) -> &Locator {
        &self.source
    }

    pub fn raw_text(&self) -> &str {
        &self.raw_text
    }

    pub fn lines(&self) -> &[Line] {
        &self.lines
    }

    pub fn sections(&self) -> &[Section] {
        &self.sections
    }

    pub fn code_blocks(&self) -> &[CodeBlock] {
        &self.code_blocks
    }

    pub fn redirect_refs(&self) -> &[RedirectRef] {
        &self.redirect_refs
    }

    pub fn substantive_line_count(&self) -> usize {
        self.substantive_line_count
    }

    pub fn is_pointer_file(&self, pointer_line_limit: usize) -> bool {
        is_pointer_file(self, pointer_line_limit)
    }

    /// Carries redirect references but too much content to be a pointer.
    pub fn is_hybrid(&self, pointer_line_limit: usize) -> bool {
        !self.redirect_refs.is_empty() && !self.is_pointer_file(pointer_line_limit)
    }

    /// True when any line outside code blocks carries an auto-generation marker.
    pub fn has_generation_marker(&self) -> bool {
        self.lines
            .iter()
            .any(|l| !l.in_code_block && has_generation_marker(&l.text))
    }

    /// Maximal runs of consecutive substantive prose lines, as byte ranges.
    pub fn prose_segments(&self) -> Vec<Range<usize>> {
        let mut out = Vec::new();
        let mut current: Option<Range<usize>> = None;
        for line in &self.lines {
            if line.class == LineClass::Substantive && !line.in_code_block {
                let span = line.span();
                current = Some(match current {
                    Some(r) => r.start..span.end,
                    None => span,
                });
            } else if let Some(r) = current.take() {
                out.push(r);
            }
        }
        out.extend(current);
        out
    }

    /// Section containing the given line index, if any.
    pub fn section_of(&self, line_index: usize) -> Option<&Section> {
        self.sections
            .iter()
            .find(|s| s.line_range.contains(&line_index))
    }
}

pub fn parse(raw_text: &str, source: Locator) -> GovernanceDocument {
    GovernanceDocument::parse(raw_text, source)
}

pub fn is_pointer_file(doc: &GovernanceDocument, pointer_line_limit: usize) -> bool {
    doc.substantive_line_count <= pointer_line_limit && !doc.redirect_refs.is_empty()
}

pub fn detect_redirects(doc: &GovernanceDocument) -> Vec<RedirectRef> {
    detect_redirects_with(doc, &RedirectVocabulary::default())
}

static FENCE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^ {0,3}(`{3,}|~{3,})(.*)$").unwrap());
static HEADING: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^ {0,3}(#{1,6})(?:[ \t]+(.*?))?[ \t#]*$").unwrap());
static HRULE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^ {0,3}(?:(?:-[ \t]*){3,}|(?:\*[ \t]*){3,}|(?:_[ \t]*){3,})$").unwrap()
});
static IMAGE_TOKEN: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r#"(?i)\[!\[[^\]]*\]\([^)]*\)\]\([^)]*\)|!\[[^\]]*\]\([^)]*\)|<img\b[^>]*>|</?(?:a|p|div|picture|source)\b[^>]*>"#,
    )
    .unwrap()
});
static MD_LINK: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r#"!?\[([^\]]*)\]\(\s*<?([^)\s>]+)>?(?:\s+"[^"]*")?\s*\)"#).unwrap()
});

/// Classifies a single line. Fenced content is substantive unless blank.
pub fn classify_line(text: &str, in_code_block: bool) -> LineClass {
    if text.trim().is_empty() {
        return LineClass::Blank;
    }
    if in_code_block {
        return LineClass::Substantive;
    }
    if is_boilerplate(text) {
        LineClass::Boilerplate
    } else {
        LineClass::Substantive
    }
}

fn is_boilerplate(text: &str) -> bool {
    let trimmed = text.trim();
    FENCE.is_match(text)
        || HEADING.is_match(text)
        || HRULE.is_match(text)
        || trimmed.starts_with("<!--")
        || trimmed.ends_with("-->")
        || is_image_only(trimmed)
        || has_generation_marker(text)
}

fn is_image_only(trimmed: &str) -> bool {
    if !IMAGE_TOKEN.is_match(trimmed) {
        return false;
    }
    IMAGE_TOKEN.replace_all(trimmed, "").trim().is_empty()
}

pub fn has_generation_marker(text: &str) -> bool {
    let lower = text.to_lowercase();
    GENERATION_MARKERS.iter().any(|m| lower.contains(m)) || DO_NOT_EDIT_NOTICE.is_match(text)
}

struct FenceSpan {
    lines: Range<usize>,
    info: String,
}

fn split_and_classify(raw: &str) -> (Vec<Line>, Vec<FenceSpan>) {
    let mut lines = Vec::new();
    let mut fences = Vec::new();
    let mut offset = 0;
    // (fence char, fence length, opening line, info string) while inside a block
    let mut open: Option<(char, usize, usize, String)> = None;
    while offset < raw.len() {
        let rest = &raw[offset..];
        let (body, ending, consumed) = match rest.find('\n') {
            Some(nl) if nl > 0 && rest.as_bytes()[nl - 1] == b'\r' => {
                (&rest[..nl - 1], LineEnding::CrLf, nl + 1)
            }
            Some(nl) => (&rest[..nl], LineEnding::Lf, nl + 1),
            None => (rest, LineEnding::None, rest.len()),
        };
        let index = lines.len();
        let in_code_block = match &open {
            Some((ch, len, start, info)) => {
                if closes_fence(body, *ch, *len) {
                    fences.push(FenceSpan {
                        lines: *start..index + 1,
                        info: info.clone(),
                    });
                    open = None;
                    false
                } else {
                    true
                }
            }
            None => {
                if let Some(caps) = FENCE.captures(body) {
                    let marker = caps.get(1).unwrap().as_str();
                    let ch = marker.chars().next().unwrap();
                    let info = caps.get(2).map_or("", |m| m.as_str());
                    // backtick fences may not carry backticks in the info string
                    if ch != '`' || !info.contains('`') {
                        open = Some((ch, marker.len(), index, info.trim().to_string()));
                    }
                }
                false
            }
        };
        lines.push(Line {
            index,
            text: body.to_string(),
            ending,
            offset,
            class: classify_line(body, in_code_block),
            in_code_block,
        });
        offset += consumed;
    }
    if let Some((_, _, start, info)) = open {
        fences.push(FenceSpan {
            lines: start..lines.len(),
            info,
        });
    }
    (lines, fences)
}

fn closes_fence(text: &str, ch: char, len: usize) -> bool {
    let t = text.trim_start_matches(' ');
    if text.len() - t.len() > 3 {
        return false;
    }
    let run = t.chars().take_while(|&c| c == ch).count();
    run >= len && t[run * ch.len_utf8()..].trim().is_empty()
}

fn collect_sections(lines: &[Line]) -> Vec<Section> {
    let mut sections: Vec<Section> = Vec::new();
    for line in lines {
        if line.in_code_block {
            continue;
        }
        let Some(caps) = HEADING.captures(&line.text) else {
            continue;
        };
        if let Some(prev) = sections.last_mut() {
            prev.line_range.end = line.index;
        }
        sections.push(Section {
            heading_text: caps.get(2).map_or("", |m| m.as_str()).trim().to_string(),
            heading_level: caps.get(1).unwrap().as_str().len() as u8,
            line_range: line.index..lines.len(),
        });
    }
    sections
}

fn collect_code_blocks(raw: &str, lines: &[Line], fences: Vec<FenceSpan>) -> Vec<CodeBlock> {
    fences
        .into_iter()
        .map(|f| {
            let inner: Vec<&Line> = lines[f.lines.clone()]
                .iter()
                .filter(|l| l.in_code_block)
                .collect();
            let content_span = match (inner.first(), inner.last()) {
                (Some(first), Some(last)) => first.offset..last.span().end,
                _ => {
                    let opener = &lines[f.lines.start];
                    let at = opener.span().end + opener.ending.as_str().len();
                    at..at
                }
            };
            CodeBlock {
                line_range: f.lines,
                info_string: f.info,
                content: raw[content_span.clone()].to_string(),
                content_span,
            }
        })
        .collect()
}

fn basename(target: &str) -> &str {
    let no_frag = target.split(['#', '?']).next().unwrap_or(target);
    let no_frag = no_frag.trim_end_matches('/');
    no_frag.rsplit(['/', '\\']).next().unwrap_or(no_frag)
}

fn is_markdown_path(target: &str) -> bool {
    let name = basename(target);
    name.len() > 3 && name.to_ascii_lowercase().ends_with(".md")
}

struct Token<'a> {
    span: Range<usize>,
    text: &'a str,
}

/// Whitespace tokens with surrounding punctuation stripped; spans are line-relative.
fn tokenize(line: &str) -> Vec<Token<'_>> {
    const LEAD: &[char] = &['(', '[', '{', '<', '"', '\'', '`', '*', '_'];
    const TRAIL: &[char] = &[
        ')', ']', '}', '>', '"', '\'', '`', '.', ',', ';', ':', '!', '?', '*', '_',
    ];
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in line
        .char_indices()
        .chain(std::iter::once((line.len(), ' ')))
    {
        if c.is_whitespace() {
            if let Some(s) = start.take() {
                let raw = &line[s..i];
                let lead_trimmed = raw.trim_start_matches(LEAD);
                let trimmed = lead_trimmed.trim_end_matches(TRAIL);
                if !trimmed.is_empty() {
                    let ts = s + (raw.len() - lead_trimmed.len());
                    out.push(Token {
                        span: ts..ts + trimmed.len(),
                        text: trimmed,
                    });
                }
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    out
}

fn directive_len(tokens: &[Token<'_>], i: usize) -> Option<usize> {
    let t = tokens[i].text.to_ascii_lowercase();
    match t.as_str() {
        "see" | "read" => Some(1),
        "refer"
            if tokens
                .get(i + 1)
                .is_some_and(|n| n.text.eq_ignore_ascii_case("to")) =>
        {
            Some(2)
        }
        _ => None,
    }
}

fn overlaps(spans: &[Range<usize>], r: &Range<usize>) -> bool {
    spans.iter().any(|s| s.start < r.end && r.start < s.end)
}

fn detect_redirects_with(doc: &GovernanceDocument, vocab: &RedirectVocabulary) -> Vec<RedirectRef> {
    let mut refs = Vec::new();
    for line in &doc.lines {
        if line.class != LineClass::Substantive || line.in_code_block {
            continue;
        }
        let text = line.text.as_str();
        let tokens = tokenize(text);
        // (directive start byte, directive end byte, window end byte, window token range)
        let mut windows: Vec<(usize, usize, usize, Range<usize>)> = Vec::new();
        for i in 0..tokens.len() {
            if let Some(n) = directive_len(&tokens, i) {
                let first = (i + n).min(tokens.len());
                let last = (first + vocab.window).min(tokens.len());
                if first < last {
                    windows.push((
                        tokens[i].span.start,
                        tokens[i + n - 1].span.end,
                        tokens[last - 1].span.end,
                        first..last,
                    ));
                }
            }
        }
        let directed = |pos: usize| {
            windows
                .iter()
                .any(|(_, end, wend, _)| *end <= pos && pos < *wend)
        };

        let mut consumed: Vec<Range<usize>> = Vec::new();
        let mut line_refs: Vec<RedirectRef> = Vec::new();

        for caps in MD_LINK.captures_iter(text) {
            let whole = caps.get(0).unwrap();
            if whole.as_str().starts_with('!') {
                continue;
            }
            let target = caps.get(2).unwrap().as_str();
            let accepted = vocab.is_known_file(target)
                || (is_markdown_path(target) && directed(whole.start()));
            if accepted {
                consumed.push(whole.range());
                line_refs.push(RedirectRef {
                    target: target.to_string(),
                    span: line.offset + whole.start()..line.offset + whole.end(),
                    kind: RedirectKind::Link,
                });
            }
        }

        for (start, _, _, window) in &windows {
            let first_target = tokens[window.clone()]
                .iter()
                .find(|t| is_markdown_path(t.text) || vocab.is_known_file(t.text));
            let Some(tok) = first_target else { continue };
            let span = *start..tok.span.end;
            if overlaps(&consumed, &tok.span) {
                continue;
            }
            consumed.push(span.clone());
            line_refs.push(RedirectRef {
                target: tok.text.to_string(),
                span: line.offset + span.start..line.offset + span.end,
                kind: RedirectKind::SeeDirective,
            });
        }

        for tok in &tokens {
            if vocab.is_known_file(tok.text) && !overlaps(&consumed, &tok.span) {
                consumed.push(tok.span.clone());
                line_refs.push(RedirectRef {
                    target: tok.text.to_string(),
                    span: line.offset + tok.span.start..line.offset + tok.span.end,
                    kind: RedirectKind::Mention,
                });
            }
        }

        line_refs.sort_by_key(|r| r.span.start);
        refs.extend(line_refs);
    }
    refs
}
