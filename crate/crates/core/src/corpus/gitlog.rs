use std::path::Path;
use std::process::Command;

use super::{
    changed_paths_from_diff, extract_diff_identifiers, is_valid_sha, CommitRecord, Corpus,
    CorpusError, Provenance, FIELD_SEP, RECORD_SEP,
};

/// Pretty format understood by [`parse_git_log`].
pub const GIT_LOG_FORMAT: &str = "%H%x1f%an%x1f%at%x1f%B%x1e";

/// Arguments for `git log` producing the stream [`parse_git_log`] consumes.
pub fn git_log_command_args() -> Vec<String> {
    vec!["log".into(), format!("--pretty=format:{GIT_LOG_FORMAT}")]
}

/// Parses the output of `git log` run with [`GIT_LOG_FORMAT`].
///
/// Records are separated by U+001E and fields by U+001F. Whitespace between
/// records (git emits a newline after each separator) is ignored, as is the
/// trailing newline git appends to `%B`.
pub fn parse_git_log(stream: &str, repo_id: &str) -> Result<Corpus, CorpusError> {
    let mut records = Vec::new();
    let mut segments: Vec<&str> = stream.split(RECORD_SEP).collect();
    if segments.last().is_some_and(|s| s.trim().is_empty()) {
        segments.pop();
    }
    for (i, segment) in segments.into_iter().enumerate() {
        let ordinal = i + 1;
        let segment = segment.trim_start_matches(['\n', '\r']);
        let fields: Vec<&str> = segment.split(FIELD_SEP).collect();
        if fields.len() != 4 {
            return Err(CorpusError::MalformedRecord {
                ordinal,
                reason: format!("expected 4 fields, found {}", fields.len()),
            });
        }
        let sha = fields[0].trim();
        if !is_valid_sha(sha) {
            return Err(CorpusError::MalformedRecord {
                ordinal,
                reason: format!("invalid sha {sha:?}"),
            });
        }
        let timestamp_utc = fields[2].trim().parse::<i64>().map_err(|e| CorpusError::MalformedRecord {
            ordinal,
            reason: format!("invalid timestamp {:?}: {e}", fields[2]),
        })?;
        let message_raw = fields[3].strip_suffix('\n').unwrap_or(fields[3]);
        let mut record = CommitRecord::new(repo_id, sha, fields[1], message_raw);
        record.timestamp_utc = timestamp_utc;
        records.push(record);
    }
    Corpus::new(records, Provenance::GitLogStream { repo_id: repo_id.to_string() })
}

fn run_git(repo: &Path, args: &[String]) -> Result<String, CorpusError> {
    let output = Command::new("git").arg("-C").arg(repo).args(args).output()?;
    if !output.status.success() {
        return Err(CorpusError::Git(String::from_utf8_lossy(&output.stderr).trim().to_string()));
    }
    Ok(String::from_utf8_lossy(&output.stdout).into_owned())
}

/// Runs `git log` in a local repository and parses its history.
///
/// With `with_diffs`, each commit's diff is fetched to fill `changed_paths`
/// and `diff_identifiers`.
pub fn read_git_repo(
    repo: &Path,
    repo_id: &str,
    extra_args: &[String],
    with_diffs: bool,
) -> Result<Corpus, CorpusError> {
    let mut args = git_log_command_args();
    args.extend(extra_args.iter().cloned());
    let stream = run_git(repo, &args)?;
    let mut corpus = parse_git_log(&stream, repo_id)?;
    if with_diffs {
        for record in &mut corpus.records {
            let diff = run_git(
                repo,
                &[
                    "show".into(),
                    "--format=".into(),
                    "--unified=0".into(),
                    "--no-color".into(),
                    "--no-ext-diff".into(),
                    record.sha.clone(),
                ],
            )?;
            record.changed_paths = changed_paths_from_diff(&diff);
            record.diff_identifiers = extract_diff_identifiers(&diff);
        }
    }
    corpus.provenance = Provenance::GitRepo { path: repo.display().to_string() };
    Ok(corpus)
}
