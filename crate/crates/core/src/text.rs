//! Normalization and tokenization for Devanagari (Nepali) and mixed-script text.

use alloc::string::String;
use alloc::vec::Vec;

use unicode_general_category::{get_general_category, GeneralCategory};
use unicode_normalization::UnicodeNormalization;

const ZWNJ: char = '\u{200C}';
const ZWJ: char = '\u{200D}';

/// Unicode normalization form applied by [`normalize`]. Both are at least
/// canonical; `Nfkc` additionally folds compatibility characters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum UnicodeForm {
    #[default]
    Nfc,
    Nfkc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct NormalizationConfig {
    pub strip_html: bool,
    pub strip_urls: bool,
    /// Remove control characters, invisible format characters (other than
    /// ZWJ/ZWNJ, which are meaningful in Devanagari conjuncts) and U+FFFD.
    pub strip_special: bool,
    pub unicode_form: UnicodeForm,
}

impl Default for NormalizationConfig {
    fn default() -> Self {
        Self {
            strip_html: true,
            strip_urls: true,
            strip_special: true,
            unicode_form: UnicodeForm::Nfc,
        }
    }
}

/// Ordered, non-empty, whitespace-free tokens.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenStream(Vec<String>);

impl TokenStream {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[String] {
        &self.0
    }

    pub fn iter(&self) -> core::slice::Iter<'_, String> {
        self.0.iter()
    }

    pub fn into_vec(self) -> Vec<String> {
        self.0
    }
}

impl IntoIterator for TokenStream {
    type Item = String;
    type IntoIter = alloc::vec::IntoIter<String>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.into_iter()
    }
}

impl<'a> IntoIterator for &'a TokenStream {
    type Item = &'a String;
    type IntoIter = core::slice::Iter<'a, String>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// Clean `text` for indexing: strip markup, URLs and invisible junk, apply
/// canonical composition and collapse whitespace.
///
/// The cleaning passes are repeated until the text stops changing, so the
/// function is idempotent even when removing one construct exposes another
/// (`"<a<b>>"` loses `<b>` and then `<a>`).
pub fn normalize(text: &str, config: &NormalizationConfig) -> String {
    let mut current = normalize_once(text, config);
    // Every changing pass removes characters or recomposes, so this settles
    // after a couple of rounds on real input.
    for _ in 0..16 {
        let next = normalize_once(&current, config);
        if next == current {
            break;
        }
        current = next;
    }
    current
}

fn normalize_once(text: &str, config: &NormalizationConfig) -> String {
    let mut s: String = if config.strip_html {
        strip_tags(text)
    } else {
        text.into()
    };
    if config.strip_urls {
        s = strip_urls(&s);
    }
    if config.strip_special {
        s = s
            .chars()
            .filter_map(|c| match special_action(c) {
                Special::Keep => Some(c),
                Special::Space => Some(' '),
                Special::Drop => None,
            })
            .collect();
    }
    let composed: String = match config.unicode_form {
        UnicodeForm::Nfc => s.nfc().collect(),
        UnicodeForm::Nfkc => s.nfkc().collect(),
    };
    collapse_whitespace(&composed)
}

enum Special {
    Keep,
    Space,
    Drop,
}

fn special_action(c: char) -> Special {
    if c.is_whitespace() {
        return Special::Keep;
    }
    if c == ZWJ || c == ZWNJ {
        return Special::Keep;
    }
    if c == '\u{FFFD}' {
        return Special::Space;
    }
    match get_general_category(c) {
        GeneralCategory::Control => Special::Space,
        GeneralCategory::Format | GeneralCategory::Surrogate | GeneralCategory::Unassigned => {
            Special::Drop
        }
        _ => Special::Keep,
    }
}

/// Replace `<tag ...>`, `</tag>`, `<!-- ... -->`-style markup with a space.
fn strip_tags(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(pos) = rest.find('<') {
        out.push_str(&rest[..pos]);
        let after = &rest[pos + 1..];
        let opens_tag = after
            .chars()
            .next()
            .is_some_and(|c| c.is_ascii_alphabetic() || matches!(c, '/' | '!' | '?'));
        let close = after.find('>');
        let nested = after.find('<');
        match close {
            Some(end) if opens_tag && nested.is_none_or(|n| n > end) => {
                out.push(' ');
                rest = &after[end + 1..];
            }
            _ => {
                out.push('<');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}

fn url_start(s: &str) -> Option<usize> {
    const SCHEMES: [&str; 3] = ["http://", "https://", "www."];
    let bytes = s.as_bytes();
    let mut best: Option<usize> = None;
    for scheme in SCHEMES {
        let n = scheme.len();
        let found = (0..bytes.len().saturating_sub(n - 1))
            .find(|&i| bytes[i..i + n].eq_ignore_ascii_case(scheme.as_bytes()));
        if let Some(i) = found {
            best = Some(best.map_or(i, |b| b.min(i)));
        }
    }
    best
}

/// Remove every whitespace-delimited run that starts at `http://`,
/// `https://` or `www.` (case-insensitive).
fn strip_urls(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(start) = url_start(rest) {
        out.push_str(&rest[..start]);
        out.push(' ');
        let tail = &rest[start..];
        let end = tail.find(char::is_whitespace).unwrap_or(tail.len());
        rest = &tail[end..];
    }
    out.push_str(rest);
    out
}

fn collapse_whitespace(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for word in text.split(char::is_whitespace).filter(|w| !w.is_empty()) {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

/// Characters that may appear inside a token: letters and digits of any
/// script, combining marks (Devanagari matras, virama, candrabindu) and the
/// zero-width joiners used in conjuncts.
pub fn is_token_char(c: char) -> bool {
    if c.is_alphanumeric() || c == ZWJ || c == ZWNJ {
        return true;
    }
    matches!(
        get_general_category(c),
        GeneralCategory::NonspacingMark
            | GeneralCategory::SpacingMark
            | GeneralCategory::EnclosingMark
    )
}

/// Split normalized text into maximal runs of token characters.
///
/// Punctuation (including the danda `।`) separates tokens and is dropped.
/// Cased letters are lowercased; Devanagari has no case and passes through.
/// Runs made only of marks or joiners carry no letter and are discarded.
pub fn tokenize(text: &str) -> TokenStream {
    let mut tokens = Vec::new();
    let mut current = String::new();
    let mut has_letter = false;
    let mut flush = |current: &mut String, has_letter: &mut bool| {
        if *has_letter {
            tokens.push(core::mem::take(current));
        } else {
            current.clear();
        }
        *has_letter = false;
    };
    for c in text.chars() {
        if is_token_char(c) {
            if c.is_alphanumeric() {
                has_letter = true;
            }
            if c.is_uppercase() {
                current.extend(c.to_lowercase());
            } else {
                current.push(c);
            }
        } else {
            flush(&mut current, &mut has_letter);
        }
    }
    flush(&mut current, &mut has_letter);
    TokenStream(tokens)
}

/// `tokenize(normalize(text))` with the default configuration.
pub fn analyze(text: &str) -> TokenStream {
    tokenize(&normalize(text, &NormalizationConfig::default()))
}

/// Number of tokens in `text` after default normalization.
pub fn token_count(text: &str) -> usize {
    analyze(text).len()
}
