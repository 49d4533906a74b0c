//! Removal stage: strips special tokens, URLs, file extensions, symbol- or
//! digit-bearing terms, meta words and short words from caption text.

use std::sync::OnceLock;

use regex::Regex;
use unicode_normalization::UnicodeNormalization;

use super::{standardize, FilterConfig};

fn special_token_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"[<⟨〈‹][^<>⟨⟩〈〉‹›]{0,40}[>⟩〉›]").unwrap())
}

fn domain_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r"(?i)^[a-z0-9]([a-z0-9-]*[a-z0-9])?(\.[a-z0-9]([a-z0-9-]*[a-z0-9])?)*\.(com|org|net|edu|gov|mil|int|info|biz|io|co|me|tv|us|uk|ca|au|de|fr|it|es|nl|be|ch|at|se|no|dk|fi|pl|ru|cn|jp|kr|in|br|mx|ar|nz|za|ie|eu|ly|gl|app|dev|blog|shop)(/\S*)?$",
        )
        .unwrap()
    })
}

fn file_ext_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?i)^(.+)\.(jpe?g|png|gif|bmp|webp|tiff?|svg|heic|raw|ico|mp4|mov|avi|mkv|webm|mp3|wav|pdf|html?|php|aspx?|txt|docx?|xlsx?|pptx?|zip|psd|eps)$")
            .unwrap()
    })
}

fn is_url(token: &str) -> bool {
    let lower = token.to_lowercase();
    lower.contains("://") || lower.starts_with("www.") || domain_re().is_match(&lower)
}

/// Characters that separate words inside a whitespace-delimited token.
fn is_separator(c: char) -> bool {
    matches!(
        c,
        '_' | '-'
            | '‐'
            | '‑'
            | '–'
            | '—'
            | '/'
            | '.'
            | ','
            | ';'
            | ':'
            | '!'
            | '?'
            | '"'
            | '“'
            | '”'
            | '„'
            | '('
            | ')'
            | '['
            | ']'
            | '{'
            | '}'
            | '…'
            | '«'
            | '»'
    )
}

fn trim_edges(s: &str) -> &str {
    s.trim_matches(|c: char| is_separator(c) || c == '\'')
}

/// Drops a possessive suffix and reports whether the term is purely alphabetic.
fn plain_word(term: &str) -> Option<&str> {
    let t = term.trim_matches('\'');
    let t = t.strip_suffix("'s").unwrap_or(t);
    if !t.is_empty() && t.chars().all(char::is_alphabetic) {
        Some(t)
    } else {
        None
    }
}

/// Removal stage for one caption. Output keeps the original casing.
pub fn clean_tokens(caption: &str, cfg: &FilterConfig) -> Vec<String> {
    let text: String = caption.nfc().collect();
    let text = text.replace(['’', '‘', '`'], "'");
    let text = special_token_re().replace_all(&text, " ");

    let mut out = Vec::new();
    for raw in text.split_whitespace() {
        let token = trim_edges(raw);
        if token.is_empty() || is_url(token) {
            continue;
        }
        let token = match file_ext_re().captures(token) {
            Some(c) => c.get(1).map_or(token, |m| m.as_str()),
            None => token,
        };
        for piece in token.split(is_separator) {
            let Some(word) = plain_word(piece) else {
                continue;
            };
            if word.chars().count() < cfg.min_word_length {
                continue;
            }
            if is_meta(word, cfg) {
                continue;
            }
            out.push(word.to_string());
        }
    }
    out
}

fn is_meta(word: &str, cfg: &FilterConfig) -> bool {
    let lower = word.to_lowercase();
    cfg.meta_words.contains(&lower) || cfg.meta_words.contains(&standardize(&lower))
}

/// Whitespace tokenization with no removal, used when the removal stage is off.
pub(crate) fn raw_tokens(caption: &str) -> Vec<String> {
    caption.split_whitespace().map(str::to_string).collect()
}
