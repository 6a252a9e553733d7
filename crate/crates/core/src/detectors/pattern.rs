//! Phrase patterns used by detector rules.
//!
//! A pattern is a whitespace-separated phrase matched case-insensitively,
//! with whitespace in the pattern matching any run of whitespace (including
//! line breaks) in the text. A handful of operators are available:
//!
//! | syntax        | meaning                                              |
//! |---------------|------------------------------------------------------|
//! | `word`        | literal word, matched on word boundaries             |
//! | `prefix*`     | any word starting with `prefix`                      |
//! | `*`           | exactly one arbitrary word                           |
//! | `...`         | up to [`GAP_WORDS`] arbitrary words                  |
//! | `{a\|b c\|d}` | one of several alternative phrases                   |
//! | `^`           | leading only: the phrase must start a line           |
//!
//! Everything else is literal, so punctuation such as `include:` is
//! matched as written.

use regex::Regex;

/// Maximum number of words a `...` gap may skip.
pub const GAP_WORDS: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("pattern `{pattern}`: {reason}")]
pub struct PatternError {
    pub pattern: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    Words(Vec<String>),
    Alternatives(Vec<Vec<String>>),
    AnyWord,
    Gap,
}

/// Translates one phrase pattern into regex source (without flags).
pub fn to_regex_source(pattern: &str) -> Result<String, PatternError> {
    let err = |reason: &str| PatternError {
        pattern: pattern.to_string(),
        reason: reason.to_string(),
    };
    let trimmed = pattern.trim();
    let (anchored, body) = match trimmed.strip_prefix('^') {
        Some(rest) => (true, rest.trim_start()),
        None => (false, trimmed),
    };
    let tokens = tokenize(body).map_err(|r| err(&r))?;
    if tokens.is_empty() {
        return Err(err("empty pattern"));
    }
    if matches!(tokens.first(), Some(Token::Gap)) || matches!(tokens.last(), Some(Token::Gap)) {
        return Err(err("`...` must sit between two terms"));
    }
    if tokens
        .windows(2)
        .any(|w| w[0] == Token::Gap && w[1] == Token::Gap)
    {
        return Err(err("consecutive `...` gaps"));
    }

    let mut out = String::new();
    if anchored {
        out.push_str(r"(?m:^)[ \t]*(?:\$[ \t]+)?");
    }
    let mut pending_gap = false;
    for (i, tok) in tokens.iter().enumerate() {
        if let Token::Gap = tok {
            pending_gap = true;
            continue;
        }
        if i > 0 {
            if pending_gap {
                out.push_str(&format!(r"(?:\s+\S+){{0,{GAP_WORDS}}}?\s+"));
            } else {
                out.push_str(r"\s+");
            }
        }
        pending_gap = false;
        match tok {
            Token::Words(words) => out.push_str(&phrase(words)),
            Token::Alternatives(alts) => {
                let parts: Vec<String> = alts.iter().map(|a| phrase(a)).collect();
                out.push_str(&format!("(?:{})", parts.join("|")));
            }
            Token::AnyWord => out.push_str(r"\S+"),
            Token::Gap => unreachable!(),
        }
    }
    Ok(out)
}

/// Compiles a group of alternative patterns into a single case-insensitive regex.
pub fn compile_any(patterns: &[String]) -> Result<Regex, PatternError> {
    if patterns.is_empty() {
        return Err(PatternError {
            pattern: String::new(),
            reason: "empty pattern list".into(),
        });
    }
    let sources = patterns
        .iter()
        .map(|p| to_regex_source(p).map(|s| format!("(?:{s})")))
        .collect::<Result<Vec<_>, _>>()?;
    let joined = format!("(?i){}", sources.join("|"));
    Regex::new(&joined).map_err(|e| PatternError {
        pattern: patterns.join(" | "),
        reason: e.to_string(),
    })
}

fn phrase(words: &[String]) -> String {
    words
        .iter()
        .map(|w| word(w))
        .collect::<Vec<_>>()
        .join(r"\s+")
}

fn word(w: &str) -> String {
    let (stem, prefix) = match w.strip_suffix('*') {
        Some(stem) if !stem.is_empty() => (stem, true),
        _ => (w, false),
    };
    let mut s = String::new();
    if stem.chars().next().is_some_and(is_word_char) {
        s.push_str(r"\b");
    }
    s.push_str(&regex::escape(stem));
    if prefix {
        s.push_str(r"\w*");
    }
    if prefix || stem.chars().last().is_some_and(is_word_char) {
        s.push_str(r"\b");
    }
    s
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

fn tokenize(body: &str) -> Result<Vec<Token>, String> {
    let mut tokens = Vec::new();
    let mut words: Vec<String> = Vec::new();
    let mut chars = body.char_indices().peekable();
    let flush = |words: &mut Vec<String>, tokens: &mut Vec<Token>| {
        if !words.is_empty() {
            tokens.push(Token::Words(std::mem::take(words)));
        }
    };
    while let Some(&(i, c)) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
            continue;
        }
        if c == '{' {
            let close = body[i..].find('}').ok_or("unbalanced `{`")? + i;
            let inner = &body[i + 1..close];
            if inner.contains('{') {
                return Err("nested `{` is not supported".into());
            }
            let mut alts = Vec::new();
            for alt in inner.split('|') {
                let ws: Vec<String> = alt.split_whitespace().map(str::to_string).collect();
                if ws.is_empty() {
                    return Err("empty alternative".into());
                }
                if ws.iter().any(|w| w == "*" || w == "..." || w == "^") {
                    return Err("operators are not allowed inside `{}`".into());
                }
                alts.push(ws);
            }
            flush(&mut words, &mut tokens);
            tokens.push(Token::Alternatives(alts));
            while chars.peek().is_some_and(|&(j, _)| j <= close) {
                chars.next();
            }
            continue;
        }
        let end = body[i..]
            .find(|ch: char| ch.is_whitespace() || ch == '{')
            .map_or(body.len(), |e| e + i);
        let w = &body[i..end];
        if w.contains('}') {
            return Err("unbalanced `}`".into());
        }
        if w.contains('^') {
            return Err("`^` is only allowed at the start".into());
        }
        match w {
            "*" => {
                flush(&mut words, &mut tokens);
                tokens.push(Token::AnyWord);
            }
            "..." => {
                flush(&mut words, &mut tokens);
                tokens.push(Token::Gap);
            }
            _ => words.push(w.to_string()),
        }
        while chars.peek().is_some_and(|&(j, _)| j < end) {
            chars.next();
        }
    }
    flush(&mut words, &mut tokens);
    Ok(tokens)
}
