//! Commit records and the line-oriented corpus they are stored in.
//!
//! A [`Corpus`] is an ordered list of [`CommitRecord`]s plus a descriptor of
//! where the records came from. On disk a corpus is JSON Lines, one commit per
//! line; the provenance is not part of the file.

mod diff;
mod english;
pub mod forge;
mod gitlog;

use std::collections::{BTreeSet, HashSet};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use diff::{changed_paths_from_diff, extract_diff_identifiers, METHOD_MARKER};
pub use english::is_english_like;
pub use gitlog::{git_log_command_args, parse_git_log, read_git_repo, GIT_LOG_FORMAT};

/// Field separator used in the git log pretty format.
pub const FIELD_SEP: char = '\u{1f}';
/// Record separator used in the git log pretty format.
pub const RECORD_SEP: char = '\u{1e}';

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("record {ordinal}: {reason}")]
    MalformedRecord { ordinal: usize, reason: String },
    #[error("line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("duplicate sha {0}")]
    DuplicateSha(String),
    #[error("git: {0}")]
    Git(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One mined commit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitRecord {
    pub repo_id: String,
    pub sha: String,
    pub author_name: String,
    /// False when the commit has no linked account ("no author").
    pub author_is_account: bool,
    pub timestamp_utc: i64,
    pub message_raw: String,
    pub changed_paths: Vec<String>,
    /// Identifiers seen in the diff. Identifiers declared in a method
    /// signature carry a trailing [`METHOD_MARKER`].
    pub diff_identifiers: BTreeSet<String>,
}

impl CommitRecord {
    /// Record with only the fields a message-level analysis needs.
    pub fn new(
        repo_id: impl Into<String>,
        sha: impl Into<String>,
        author_name: impl Into<String>,
        message_raw: impl Into<String>,
    ) -> Self {
        let author_name = author_name.into();
        CommitRecord {
            repo_id: repo_id.into(),
            sha: sha.into(),
            author_is_account: !author_name.is_empty(),
            author_name,
            timestamp_utc: 0,
            message_raw: message_raw.into(),
            changed_paths: Vec::new(),
            diff_identifiers: BTreeSet::new(),
        }
    }

    pub fn first_line(&self) -> &str {
        self.message_raw.lines().next().unwrap_or("")
    }

    /// Checks the record-level invariants.
    pub fn validate(&self) -> Result<(), String> {
        if !is_valid_sha(&self.sha) {
            return Err(format!("invalid sha {:?}", self.sha));
        }
        let mut seen = HashSet::new();
        for path in &self.changed_paths {
            if !seen.insert(path.as_str()) {
                return Err(format!("duplicate changed path {path:?}"));
            }
        }
        Ok(())
    }
}

pub fn is_valid_sha(sha: &str) -> bool {
    sha.len() == 40 && sha.bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b))
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Provenance {
    #[default]
    Unknown,
    GitRepo {
        path: String,
    },
    GitLogStream {
        repo_id: String,
    },
    Forge {
        api_url: String,
        since: Option<String>,
        until: Option<String>,
    },
    File {
        path: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Corpus {
    pub records: Vec<CommitRecord>,
    pub provenance: Provenance,
}

impl Corpus {
    pub fn new(records: Vec<CommitRecord>, provenance: Provenance) -> Result<Self, CorpusError> {
        let mut seen = HashSet::with_capacity(records.len());
        for r in &records {
            if !seen.insert(r.sha.as_str()) {
                return Err(CorpusError::DuplicateSha(r.sha.clone()));
            }
        }
        Ok(Corpus { records, provenance })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Concatenates corpora, rejecting sha collisions.
    pub fn merge(corpora: impl IntoIterator<Item = Corpus>) -> Result<Corpus, CorpusError> {
        let records = corpora.into_iter().flat_map(|c| c.records).collect();
        Corpus::new(records, Provenance::Unknown)
    }

    /// Keeps only records whose message passes [`is_english_like`].
    pub fn retain_english(&mut self) -> usize {
        let before = self.records.len();
        self.records.retain(|r| is_english_like(&r.message_raw));
        before - self.records.len()
    }
}

/// Writes one JSON object per record.
pub fn write_corpus<W: Write>(corpus: &Corpus, mut sink: W) -> Result<(), CorpusError> {
    for record in &corpus.records {
        serde_json::to_writer(&mut sink, record).map_err(std::io::Error::from)?;
        sink.write_all(b"\n")?;
    }
    sink.flush()?;
    Ok(())
}

/// Reads a JSON Lines corpus. Blank lines are skipped; line numbers in errors
/// are 1-based.
pub fn read_corpus<R: BufRead>(source: R) -> Result<Corpus, CorpusError> {
    let records = read_jsonl::<CommitRecord, _>(source)?;
    for (i, r) in records.iter().enumerate() {
        r.validate().map_err(|reason| CorpusError::MalformedLine { line: i + 1, reason })?;
    }
    Corpus::new(records, Provenance::Unknown)
}

/// Generic JSON Lines reader shared by every file format in the crate.
pub fn read_jsonl<T, R>(source: R) -> Result<Vec<T>, CorpusError>
where
    T: for<'de> Deserialize<'de>,
    R: BufRead,
{
    let mut out = Vec::new();
    for (i, line) in source.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|e| CorpusError::MalformedLine {
            line: i + 1,
            reason: e.to_string(),
        })?;
        out.push(value);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize, W: Write>(items: &[T], mut sink: W) -> Result<(), CorpusError> {
    for item in items {
        serde_json::to_writer(&mut sink, item).map_err(std::io::Error::from)?;
        sink.write_all(b"\n")?;
    }
    sink.flush()?;
    Ok(())
}
