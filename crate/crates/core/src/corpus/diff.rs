use std::collections::{BTreeSet, HashSet};
use std::sync::LazyLock;

use regex::Regex;

/// Suffix marking an identifier seen in a method-signature context.
pub const METHOD_MARKER: &str = "()";

const MIN_IDENT_LEN: usize = 3;

static IDENT: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"[A-Za-z_][A-Za-z0-9_]*").unwrap());

// `<word> <name>(` where the preceding word is a type, modifier or keyword
// such as `void`, `fn`, `def`.
static SIGNATURE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"([A-Za-z_][A-Za-z0-9_<>\[\],]*)\s+([A-Za-z_][A-Za-z0-9_]*)\s*\(").unwrap());

const NOT_DECLARATION_PREFIX: &[&str] = &["return", "new", "throw", "else", "case", "await", "yield", "in", "and", "or", "not"];
const CONTROL_WORDS: &[&str] = &["if", "for", "while", "switch", "catch", "synchronized", "with", "elif", "match"];

fn changed_lines(diff: &str) -> impl Iterator<Item = &str> {
    diff.lines().filter_map(|line| {
        if line.starts_with("+++") || line.starts_with("---") {
            None
        } else {
            line.strip_prefix('+').or_else(|| line.strip_prefix('-'))
        }
    })
}

/// Collects identifiers from the added and removed lines of a unified diff.
///
/// Tokens are split on non-identifier characters and kept when they match
/// `[A-Za-z_][A-Za-z0-9_]*` with at least three characters. A name declared
/// in a method signature is stored with [`METHOD_MARKER`] appended.
pub fn extract_diff_identifiers(diff: &str) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for line in changed_lines(diff) {
        for m in IDENT.find_iter(line) {
            if m.as_str().len() >= MIN_IDENT_LEN {
                out.insert(m.as_str().to_string());
            }
        }
        for caps in SIGNATURE.captures_iter(line) {
            let prefix = &caps[1];
            let name = &caps[2];
            if NOT_DECLARATION_PREFIX.contains(&prefix)
                || CONTROL_WORDS.contains(&name)
                || name.len() < MIN_IDENT_LEN
            {
                continue;
            }
            out.insert(format!("{name}{METHOD_MARKER}"));
        }
    }
    out
}

/// Paths named in `diff --git a/<old> b/<new>` headers, first-seen order,
/// without duplicates.
pub fn changed_paths_from_diff(diff: &str) -> Vec<String> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for line in diff.lines() {
        let Some(rest) = line.strip_prefix("diff --git ") else {
            continue;
        };
        let path = match rest.rfind(" b/") {
            Some(idx) => &rest[idx + 3..],
            None => continue,
        };
        if seen.insert(path.to_string()) {
            out.push(path.to_string());
        }
    }
    out
}
