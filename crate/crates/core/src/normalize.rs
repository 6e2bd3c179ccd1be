//! Placeholder substitution and tokenization of commit messages.
//!
//! Three substitutions run in order: URLs become `<pr url>`, `<issue url>` or
//! `<other url>`; code elements found in the commit's diff become
//! `<file name>`, `<method name>` or `<identifier name>`; newlines become
//! `<enter>`. The result is whitespace-tokenized with placeholders kept as
//! single tokens.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{CommitRecord, METHOD_MARKER};
use crate::embed::Vocab;

pub const DEFAULT_MAX_LEN: usize = 200;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NormalizeError {
    #[error("not a URL: {0:?}")]
    NotUrl(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UrlKind {
    Pr,
    Issue,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodeKind {
    File,
    Method,
    Identifier,
}

/// Every placeholder token the normalizer can emit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placeholder {
    PrUrl,
    IssueUrl,
    OtherUrl,
    FileName,
    MethodName,
    IdentifierName,
    Enter,
}

impl Placeholder {
    pub const ALL: [Placeholder; 7] = [
        Placeholder::PrUrl,
        Placeholder::IssueUrl,
        Placeholder::OtherUrl,
        Placeholder::FileName,
        Placeholder::MethodName,
        Placeholder::IdentifierName,
        Placeholder::Enter,
    ];

    pub fn token(self) -> &'static str {
        match self {
            Placeholder::PrUrl => "<pr url>",
            Placeholder::IssueUrl => "<issue url>",
            Placeholder::OtherUrl => "<other url>",
            Placeholder::FileName => "<file name>",
            Placeholder::MethodName => "<method name>",
            Placeholder::IdentifierName => "<identifier name>",
            Placeholder::Enter => "<enter>",
        }
    }

    pub fn from_token(token: &str) -> Option<Placeholder> {
        Placeholder::ALL.into_iter().find(|p| p.token() == token)
    }
}

impl From<UrlKind> for Placeholder {
    fn from(kind: UrlKind) -> Self {
        match kind {
            UrlKind::Pr => Placeholder::PrUrl,
            UrlKind::Issue => Placeholder::IssueUrl,
            UrlKind::Other => Placeholder::OtherUrl,
        }
    }
}

impl From<CodeKind> for Placeholder {
    fn from(kind: CodeKind) -> Self {
        match kind {
            CodeKind::File => Placeholder::FileName,
            CodeKind::Method => Placeholder::MethodName,
            CodeKind::Identifier => Placeholder::IdentifierName,
        }
    }
}

impl fmt::Display for Placeholder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizedMessage {
    pub sha: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub repo_id: String,
    pub text: String,
    pub tokens: Vec<String>,
    pub placeholder_counts: BTreeMap<Placeholder, usize>,
}

impl NormalizedMessage {
    /// Normalizes free text with no diff context, as a commit hook sees it.
    pub fn from_text(text: &str) -> Self {
        let record = CommitRecord::new("", "", "", text);
        normalize_message(&record)
    }
}

static URL: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)https?://\S*").unwrap());
static PLACEHOLDER: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"<(?:pr|issue|other) url>|<(?:file|method|identifier) name>|<enter>").unwrap()
});

const URL_TRAILING: &[char] = &['.', ',', ';', ':', '!', '?', ')', ']', '}', '\'', '"', '`'];

pub fn classify_url(url: &str) -> Result<UrlKind, NormalizeError> {
    let lower = url.to_ascii_lowercase();
    if !(lower.starts_with("http://") || lower.starts_with("https://")) {
        return Err(NormalizeError::NotUrl(url.to_string()));
    }
    Ok(if lower.contains("/pull/") || lower.contains("/pulls/") {
        UrlKind::Pr
    } else if lower.contains("/issues/") {
        UrlKind::Issue
    } else {
        UrlKind::Other
    })
}

/// Replaces each URL with its kind placeholder. Trailing punctuation that
/// closes a sentence or bracket stays in the text.
pub fn replace_urls(text: &str) -> (String, BTreeMap<UrlKind, usize>) {
    let mut counts = BTreeMap::new();
    let mut out = String::with_capacity(text.len());
    let mut last = 0;
    for m in URL.find_iter(text) {
        let url = m.as_str().trim_end_matches(URL_TRAILING);
        let kind = classify_url(url).expect("regex only matches http(s) URLs");
        *counts.entry(kind).or_insert(0) += 1;
        out.push_str(&text[last..m.start()]);
        out.push_str(Placeholder::from(kind).token());
        last = m.start() + url.len();
    }
    out.push_str(&text[last..]);
    (out, counts)
}

const LEAD_TRIM: &[char] = &['"', '\'', '`', '(', '[', '{', '*'];
const TRAIL_TRIM: &[char] = &['"', '\'', '`', '.', ',', ';', ':', '!', '?', ']', '}', '*'];

/// Byte range of the part of a word that may name a code element.
fn code_core(word: &str) -> (usize, usize) {
    let start = word.len() - word.trim_start_matches(LEAD_TRIM).len();
    let mut end = word.len();
    loop {
        let head = &word[start..end];
        match head.chars().last() {
            Some(c) if TRAIL_TRIM.contains(&c) => end -= c.len_utf8(),
            Some(')') if !head.ends_with("()") => end -= 1,
            _ => break,
        }
    }
    (start, end.max(start))
}

fn basename(path: &str) -> &str {
    path.rsplit(['/', '\\']).next().unwrap_or(path)
}

/// Replaces words that name changed files, methods or identifiers of the diff.
///
/// Matching is case-sensitive. A word equal to a changed path's basename is a
/// file; a word ending in `()`, or naming an identifier the diff declares in
/// a method signature, is a method; any other diff identifier is an
/// identifier.
pub fn replace_code_elements(
    text: &str,
    diff_identifiers: &BTreeSet<String>,
    changed_paths: &[String],
) -> (String, BTreeMap<CodeKind, usize>) {
    let basenames: HashSet<&str> = changed_paths.iter().map(|p| basename(p)).filter(|b| !b.is_empty()).collect();
    let mut counts = BTreeMap::new();
    let mut out = String::with_capacity(text.len());
    let mut last = 0;
    let mut method_key = String::new();
    for (offset, word) in word_spans(text) {
        let (s, e) = code_core(word);
        let core = &word[s..e];
        if core.is_empty() {
            continue;
        }
        method_key.clear();
        method_key.push_str(core);
        method_key.push_str(METHOD_MARKER);
        let kind = if basenames.contains(core) {
            Some(CodeKind::File)
        } else if (core.len() > METHOD_MARKER.len() && core.ends_with(METHOD_MARKER))
            || diff_identifiers.contains(&method_key)
        {
            Some(CodeKind::Method)
        } else if diff_identifiers.contains(core) {
            Some(CodeKind::Identifier)
        } else {
            None
        };
        if let Some(kind) = kind {
            *counts.entry(kind).or_insert(0) += 1;
            out.push_str(&text[last..offset + s]);
            out.push_str(Placeholder::from(kind).token());
            last = offset + e;
        }
    }
    out.push_str(&text[last..]);
    (out, counts)
}

fn word_spans(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.split_whitespace().map(move |w| (w.as_ptr() as usize - text.as_ptr() as usize, w))
}

/// Replaces each `\r\n` or `\n` with a space-padded `<enter>` token.
pub fn replace_newlines(text: &str) -> String {
    let text = text.replace("\r\n", "\n");
    let mut out = String::with_capacity(text.len() + 8);
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        if c == '\n' {
            if !out.is_empty() && !out.ends_with(' ') {
                out.push(' ');
            }
            out.push_str(Placeholder::Enter.token());
            if chars.peek().is_some_and(|&n| n != ' ') {
                out.push(' ');
            }
        } else {
            out.push(c);
        }
    }
    out
}

const WORD_LEAD: &[char] = &['"', '\'', '`', '(', '[', '{', '<', '*', ',', ';', ':', '!', '?', '-', '>'];
const WORD_TRAIL: &[char] = &['"', '\'', '`', '(', ')', ']', '}', '>', '*', ',', ';', ':', '-', '<'];
const SENTENCE_FINAL: &[char] = &['.', '!', '?'];

fn push_word(word: &str, tokens: &mut Vec<String>) {
    let word = word.trim_start_matches(WORD_LEAD);
    let core = word.trim_end_matches(|c| WORD_TRAIL.contains(&c) || SENTENCE_FINAL.contains(&c));
    let marker = word[core.len()..].chars().rfind(|c| SENTENCE_FINAL.contains(c));
    if !core.is_empty() {
        tokens.push(core.to_lowercase());
    }
    if let Some(m) = marker {
        tokens.push(m.to_string());
    }
}

/// Whitespace tokenization keeping placeholders whole. Word tokens are
/// lowercased and stripped of surrounding punctuation; a trailing `.`, `!` or
/// `?` becomes its own token.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut last = 0;
    for m in PLACEHOLDER.find_iter(text) {
        for w in text[last..m.start()].split_whitespace() {
            push_word(w, &mut tokens);
        }
        tokens.push(m.as_str().to_string());
        last = m.end();
    }
    for w in text[last..].split_whitespace() {
        push_word(w, &mut tokens);
    }
    tokens
}

pub fn placeholder_counts(tokens: &[String]) -> BTreeMap<Placeholder, usize> {
    let mut counts = BTreeMap::new();
    for t in tokens {
        if let Some(p) = Placeholder::from_token(t) {
            *counts.entry(p).or_insert(0) += 1;
        }
    }
    counts
}

/// Full pipeline: URLs, then code elements, then newlines, then tokens.
///
/// `placeholder_counts` tallies the placeholder tokens present in the
/// output, so re-normalizing normalized text yields the same counts.
pub fn normalize_message(record: &CommitRecord) -> NormalizedMessage {
    let (text, _) = replace_urls(&record.message_raw);
    let (text, _) = replace_code_elements(&text, &record.diff_identifiers, &record.changed_paths);
    let text = replace_newlines(&text);
    let tokens = tokenize(&text);
    NormalizedMessage {
        sha: record.sha.clone(),
        repo_id: record.repo_id.clone(),
        placeholder_counts: placeholder_counts(&tokens),
        text,
        tokens,
    }
}

/// Maps tokens to ids, truncating or right-padding to exactly `max_len`.
pub fn encode(tokens: &[String], vocab: &Vocab, max_len: usize) -> Vec<usize> {
    let mut ids: Vec<usize> = tokens.iter().take(max_len).map(|t| vocab.id_or_unk(t)).collect();
    ids.resize(max_len, Vocab::PAD);
    ids
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn url_kinds() {
        assert_eq!(classify_url("https://github.com/square/okhttp/pull/55"), Ok(UrlKind::Pr));
        assert_eq!(classify_url("https://github.com/junit-team/junit4/issues/9"), Ok(UrlKind::Issue));
        assert_eq!(classify_url("https://example.com/docs"), Ok(UrlKind::Other));
        assert_eq!(classify_url("http://x/o/r/pulls/3"), Ok(UrlKind::Pr));
        assert!(matches!(classify_url("github.com/x"), Err(NormalizeError::NotUrl(_))));
    }

    #[test]
    fn urls_replaced() {
        let (t, c) = replace_urls("Fixes https://g.h/o/r/pull/1");
        assert_eq!(t, "Fixes <pr url>");
        assert_eq!(c, BTreeMap::from([(UrlKind::Pr, 1)]));

        let (t, c) = replace_urls("no links here");
        assert_eq!(t, "no links here");
        assert!(c.is_empty());

        let (t, c) = replace_urls("See https://x/o/r/issues/1 and (https://x/o/r/issues/2).");
        assert_eq!(t, "See <issue url> and (<issue url>).");
        assert_eq!(c, BTreeMap::from([(UrlKind::Issue, 2)]));
    }

    #[test]
    fn code_elements_replaced() {
        let paths = vec!["okhttp/src/test/java/okhttp3/CallTest.java".to_string()];
        let (t, c) = replace_code_elements("See CallTest.java", &BTreeSet::new(), &paths);
        assert_eq!(t, "See <file name>");
        assert_eq!(c, BTreeMap::from([(CodeKind::File, 1)]));

        let (t, c) = replace_code_elements("call execute()", &BTreeSet::new(), &[]);
        assert_eq!(t, "call <method name>");
        assert_eq!(c, BTreeMap::from([(CodeKind::Method, 1)]));

        let (t, c) = replace_code_elements("nothing to see", &BTreeSet::new(), &[]);
        assert_eq!(t, "nothing to see");
        assert!(c.is_empty());
    }

    #[test]
    fn diff_identifier_kinds() {
        let ids: BTreeSet<String> = ["retryCount", "execute()", "execute"].iter().map(|s| s.to_string()).collect();
        let (t, c) = replace_code_elements("Make `execute` honor retryCount.", &ids, &[]);
        assert_eq!(t, "Make `<method name>` honor <identifier name>.");
        assert_eq!(c, BTreeMap::from([(CodeKind::Method, 1), (CodeKind::Identifier, 1)]));
        // case-sensitive
        let (t, _) = replace_code_elements("retrycount", &ids, &[]);
        assert_eq!(t, "retrycount");
    }

    #[test]
    fn newlines() {
        assert_eq!(replace_newlines("a\nb"), "a <enter> b");
        assert_eq!(replace_newlines("a"), "a");
        assert_eq!(replace_newlines("a\n\nb"), "a <enter> <enter> b");
        assert_eq!(replace_newlines("a\r\nb"), "a <enter> b");
    }

    #[test]
    fn pipeline_examples() {
        let n = NormalizedMessage::from_text("Fix typo a->an");
        assert_eq!(n.tokens, toks(&["fix", "typo", "a->an"]));

        let n = NormalizedMessage::from_text("");
        assert!(n.tokens.is_empty());

        let n = NormalizedMessage::from_text("Fixes https://x/pull/1\nAdd test");
        assert_eq!(n.tokens, toks(&["fixes", "<pr url>", "<enter>", "add", "test"]));
        assert_eq!(
            n.placeholder_counts,
            BTreeMap::from([(Placeholder::PrUrl, 1), (Placeholder::Enter, 1)])
        );
    }

    #[test]
    fn sentence_markers_and_punctuation() {
        assert_eq!(tokenize("Fix bug."), toks(&["fix", "bug", "."]));
        assert_eq!(tokenize("(see #123)"), toks(&["see", "#123"]));
        assert_eq!(tokenize("Polish: docs!"), toks(&["polish", "docs", "!"]));
        assert_eq!(tokenize("(<pr url>)."), toks(&["<pr url>", "."]));
        assert_eq!(tokenize("-> ---"), Vec::<String>::new());
    }

    #[test]
    fn encode_shapes() {
        let vocab = Vocab::from_tokens(["a", "b", "c", "d", "e"]);
        assert_eq!(encode(&[], &vocab, 4), vec![Vocab::PAD; 4]);
        let five = toks(&["a", "b", "c", "d", "e"]);
        let ids = encode(&five, &vocab, 3);
        assert_eq!(ids, five[..3].iter().map(|t| vocab.id(t).unwrap()).collect::<Vec<_>>());
        assert_eq!(encode(&toks(&["zzz-unknown"]), &vocab, 2), vec![Vocab::UNK, Vocab::PAD]);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn message() -> impl Strategy<Value = String> {
            let piece = prop_oneof![
                "[A-Za-z]{1,8}",
                Just("https://github.com/o/r/pull/12".to_string()),
                Just("http://x.org/a/issues/3.".to_string()),
                Just("(https://docs.example.com/x)".to_string()),
                Just("execute()".to_string()),
                Just("Foo.java".to_string()),
                Just("\n".to_string()),
                Just("\r\n".to_string()),
                Just("<enter>".to_string()),
                "[.,;:!?()\\[\\]'\"-]{1,3}",
                "\\PC{1,4}",
            ];
            proptest::collection::vec(piece, 0..16).prop_map(|v| v.join(" "))
        }

        proptest! {
            #[test]
            fn idempotent_and_clean(msg in message()) {
                let mut rec = CommitRecord::new("r", "s", "a", msg);
                rec.changed_paths = vec!["src/Foo.java".into()];
                let first = normalize_message(&rec);
                prop_assert!(!first.text.contains("http://") && !first.text.contains("https://"));
                prop_assert!(!first.text.contains('\n'));
                let placeholder_tokens = first.tokens.iter().filter(|t| Placeholder::from_token(t).is_some()).count();
                prop_assert_eq!(first.placeholder_counts.values().sum::<usize>(), placeholder_tokens);
                prop_assert!(first.tokens.iter().all(|t| !t.is_empty()));
                prop_assert!(first.tokens.iter().all(|t| Placeholder::from_token(t).is_some() || *t == t.to_lowercase()));

                let mut again = rec.clone();
                again.message_raw = first.text.clone();
                let second = normalize_message(&again);
                prop_assert_eq!(&second.text, &first.text);
                prop_assert_eq!(&second.placeholder_counts, &first.placeholder_counts);
            }

            #[test]
            fn encoded_length_fixed(tokens in proptest::collection::vec("[a-z]{1,4}", 0..40), max_len in 1usize..30) {
                let vocab = Vocab::from_tokens(["a", "b"]);
                prop_assert_eq!(encode(&tokens, &vocab, max_len).len(), max_len);
            }
        }
    }
}
