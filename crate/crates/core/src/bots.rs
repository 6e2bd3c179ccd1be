//! Removal of machine-generated commit messages.
//!
//! Six built-in patterns cover merge records, release-plugin stamps,
//! cherry-pick trailers, version bumps and bot accounts. Matching ignores
//! case. Anchored matchers (starting with `^`) are applied to the first line
//! of the message, the others to the full text.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::BufRead;

use regex::{Regex, RegexBuilder};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{read_jsonl, CommitRecord, Corpus, CorpusError};

/// Id of the author-based built-in pattern.
pub const ACCOUNT_PATTERN_ID: u32 = 6;

pub const DEFAULT_BOT_ACCOUNTS: &[&str] = &["spring operator", "dependabot[bot]"];

#[derive(Debug, Error)]
pub enum BotFilterError {
    #[error("pattern {id}: {source}")]
    Regex { id: u32, source: regex::Error },
    #[error("duplicate pattern id {0}")]
    DuplicateId(u32),
    #[error("no patterns configured")]
    Empty,
    #[error(transparent)]
    Read(#[from] CorpusError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BotPattern {
    pub pattern_id: u32,
    pub description: String,
    /// Case-insensitive regular expression; empty for the account pattern.
    pub matcher: String,
}

pub fn builtin_patterns() -> Vec<BotPattern> {
    let p = |id, description: &str, matcher: &str| BotPattern {
        pattern_id: id,
        description: description.to_string(),
        matcher: matcher.to_string(),
    };
    vec![
        p(1, "merge branch <branch> (of <project url>) (into <branch>)", r"^merge branch \S+( of \S+)?( into \S+)?"),
        p(2, "merge remote-tracking branch <branch> (into <branch>)", r"^merge remote-tracking branch \S+( into \S+)?"),
        p(3, "[maven-release-plugin]", r"\[maven-release-plugin\]"),
        p(4, "...cherry picked from commit <commit url>", r"cherry picked from commit"),
        p(5, "Next development version <version number>", r"^next development version \S+"),
        p(ACCOUNT_PATTERN_ID, "message written by non-human accounts or no author", ""),
    ]
}

#[derive(Debug, Clone)]
struct CompiledPattern {
    id: u32,
    regex: Option<Regex>,
    first_line_only: bool,
}

/// Compiled pattern set plus the bot-account list used by the account pattern.
#[derive(Debug, Clone)]
pub struct BotFilter {
    patterns: Vec<CompiledPattern>,
    bot_accounts: BTreeSet<String>,
}

impl BotFilter {
    pub fn new(
        patterns: &[BotPattern],
        bot_accounts: impl IntoIterator<Item = impl AsRef<str>>,
    ) -> Result<Self, BotFilterError> {
        if patterns.is_empty() {
            return Err(BotFilterError::Empty);
        }
        let mut seen = HashSet::new();
        let mut compiled = Vec::with_capacity(patterns.len());
        for p in patterns {
            if !seen.insert(p.pattern_id) {
                return Err(BotFilterError::DuplicateId(p.pattern_id));
            }
            let regex = if p.matcher.is_empty() {
                None
            } else {
                Some(
                    RegexBuilder::new(&p.matcher)
                        .case_insensitive(true)
                        .build()
                        .map_err(|source| BotFilterError::Regex { id: p.pattern_id, source })?,
                )
            };
            compiled.push(CompiledPattern {
                id: p.pattern_id,
                regex,
                first_line_only: p.matcher.starts_with('^'),
            });
        }
        compiled.sort_by_key(|p| p.id);
        Ok(BotFilter {
            patterns: compiled,
            bot_accounts: bot_accounts.into_iter().map(|a| a.as_ref().to_lowercase()).collect(),
        })
    }

    pub fn builtin() -> Self {
        Self::new(&builtin_patterns(), DEFAULT_BOT_ACCOUNTS).expect("built-in patterns compile")
    }

    /// Built-in patterns plus extra ones read from JSON Lines.
    pub fn with_extra_patterns<R: BufRead>(source: R) -> Result<Self, BotFilterError> {
        let mut patterns = builtin_patterns();
        patterns.extend(read_jsonl::<BotPattern, _>(source)?);
        Self::new(&patterns, DEFAULT_BOT_ACCOUNTS)
    }

    pub fn add_bot_account(&mut self, name: &str) {
        self.bot_accounts.insert(name.to_lowercase());
    }

    fn is_bot_account(&self, record: &CommitRecord) -> bool {
        !record.author_is_account || self.bot_accounts.contains(&record.author_name.to_lowercase())
    }

    /// Lowest-numbered matching pattern id, if any.
    pub fn classify(&self, record: &CommitRecord) -> Option<u32> {
        let first_line = record.first_line();
        self.patterns.iter().find_map(|p| {
            let hit = match &p.regex {
                Some(re) if p.first_line_only => re.is_match(first_line),
                Some(re) => re.is_match(&record.message_raw),
                None => self.is_bot_account(record),
            };
            hit.then_some(p.id)
        })
    }

    pub fn apply(&self, corpus: &Corpus) -> FilterOutcome {
        let mut kept = Vec::new();
        let mut removed = Vec::new();
        let mut stats = BTreeMap::new();
        for record in &corpus.records {
            match self.classify(record) {
                Some(id) => {
                    *stats.entry(id).or_insert(0) += 1;
                    removed.push((record.clone(), id));
                }
                None => kept.push(record.clone()),
            }
        }
        FilterOutcome {
            kept: Corpus { records: kept, provenance: corpus.provenance.clone() },
            removed,
            stats,
        }
    }
}

pub fn classify_bot(record: &CommitRecord, filter: &BotFilter) -> Option<u32> {
    filter.classify(record)
}

pub fn apply_filter(corpus: &Corpus, filter: &BotFilter) -> FilterOutcome {
    filter.apply(corpus)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutcome {
    pub kept: Corpus,
    pub removed: Vec<(CommitRecord, u32)>,
    /// Removal count per pattern id.
    pub stats: BTreeMap<u32, usize>,
}

/// Line of the removed-records file: the commit plus the pattern that hit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RemovedRecord {
    pub pattern_id: u32,
    #[serde(flatten)]
    pub record: CommitRecord,
}

impl FilterOutcome {
    pub fn removed_records(&self) -> Vec<RemovedRecord> {
        self.removed
            .iter()
            .map(|(record, id)| RemovedRecord { pattern_id: *id, record: record.clone() })
            .collect()
    }

    pub fn summary(&self) -> String {
        let mut out = format!(
            "input {}  kept {}  removed {}\n",
            self.kept.len() + self.removed.len(),
            self.kept.len(),
            self.removed.len()
        );
        for (id, n) in &self.stats {
            out.push_str(&format!("  pattern {id}: {n}\n"));
        }
        out
    }
}
