//! Quality-distribution reports, dataset curation and the commit-hook check.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classify::{compose_good, BiLstmModel, BinaryClassifier, ClassifyError, Hint, QualityLabel};
use crate::corpus::Corpus;
use crate::normalize::{normalize_message, NormalizedMessage};

pub const CWHY_FILE: &str = "cwhy.json";
pub const CWHAT_FILE: &str = "cwhat.json";

/// Detector output for one message; a line of the `classify` output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifiedMessage {
    pub sha: String,
    pub repo_id: String,
    pub quality: QualityLabel,
    pub p_missing_why: f64,
    pub p_missing_what: f64,
}

pub fn classify_messages(
    messages: &[NormalizedMessage],
    cwhy: &dyn BinaryClassifier,
    cwhat: &dyn BinaryClassifier,
) -> Vec<ClassifiedMessage> {
    messages
        .iter()
        .map(|m| {
            let c = compose_good(cwhy, cwhat, m);
            ClassifiedMessage {
                sha: m.sha.clone(),
                repo_id: m.repo_id.clone(),
                quality: QualityLabel::from_flags(c.hints.contains(&Hint::MissingWhy), c.hints.contains(&Hint::MissingWhat)),
                p_missing_why: c.p_missing_why,
                p_missing_what: c.p_missing_what,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepoDistribution {
    pub repo_id: String,
    pub total: usize,
    pub counts: BTreeMap<QualityLabel, usize>,
    pub ratios: BTreeMap<QualityLabel, f64>,
}

impl RepoDistribution {
    pub fn good_ratio(&self) -> f64 {
        self.ratios[&QualityLabel::WhyAndWhat]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistributionReport {
    pub repos: Vec<RepoDistribution>,
    /// Mean of the per-repo good ratios.
    pub macro_good_ratio: f64,
}

/// Counts and ratios of the four labels per repo. `None` on empty input.
pub fn quality_distribution(labeled: &[(String, QualityLabel)]) -> Option<DistributionReport> {
    if labeled.is_empty() {
        return None;
    }
    let mut by_repo: BTreeMap<&str, BTreeMap<QualityLabel, usize>> = BTreeMap::new();
    for (repo, label) in labeled {
        let counts = by_repo.entry(repo).or_insert_with(|| QualityLabel::ALL.iter().map(|&l| (l, 0)).collect());
        *counts.get_mut(label).expect("all labels present") += 1;
    }
    let repos: Vec<RepoDistribution> = by_repo
        .into_iter()
        .map(|(repo, counts)| {
            let total: usize = counts.values().sum();
            let ratios = counts.iter().map(|(&l, &n)| (l, n as f64 / total as f64)).collect();
            RepoDistribution { repo_id: repo.to_string(), total, counts, ratios }
        })
        .collect();
    let macro_good_ratio = repos.iter().map(RepoDistribution::good_ratio).sum::<f64>() / repos.len() as f64;
    Some(DistributionReport { repos, macro_good_ratio })
}

impl DistributionReport {
    pub fn render_text(&self) -> String {
        let w = self.repos.iter().map(|r| r.repo_id.len()).max().unwrap_or(0).max(4);
        let mut out = String::new();
        let _ = write!(out, "{:<w$} {:>7}", "repo", "total");
        for l in QualityLabel::ALL {
            let _ = write!(out, " {:>12}", l.as_str());
        }
        out.push('\n');
        for r in &self.repos {
            let _ = write!(out, "{:<w$} {:>7}", r.repo_id, r.total);
            for l in QualityLabel::ALL {
                let _ = write!(out, " {:>12}", format!("{:.1}%", 100.0 * r.ratios[&l]));
            }
            out.push('\n');
        }
        let _ = writeln!(out, "macro-average good ratio: {:.1}%", 100.0 * self.macro_good_ratio);
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CuratedRecord {
    pub sha: String,
    pub message_raw: String,
    pub message_normalized: String,
    pub p_good: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CuratedDataset {
    pub records: Vec<CuratedRecord>,
    pub threshold: f64,
    pub models: Vec<String>,
}

/// Keeps records both detectors pass whose confidence
/// `min(1 − p_missing_why, 1 − p_missing_what)` reaches `threshold`, most
/// confident first (ties by sha).
pub fn curate(corpus: &Corpus, cwhy: &dyn BinaryClassifier, cwhat: &dyn BinaryClassifier, threshold: f64) -> CuratedDataset {
    let mut records: Vec<CuratedRecord> = corpus
        .records
        .iter()
        .filter_map(|r| {
            let m = normalize_message(r);
            let c = compose_good(cwhy, cwhat, &m);
            let p_good = c.confidence();
            (c.good && p_good >= threshold).then(|| CuratedRecord {
                sha: r.sha.clone(),
                message_raw: r.message_raw.clone(),
                message_normalized: m.text,
                p_good,
            })
        })
        .collect();
    records.sort_by(|a, b| b.p_good.total_cmp(&a.p_good).then_with(|| a.sha.cmp(&b.sha)));
    CuratedDataset { records, threshold, models: Vec::new() }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HookVerdict {
    pub lines: Vec<String>,
    /// 0 ok, 1 something missing, 2 tooling problem.
    pub exit_code: i32,
}

/// Drops git's `#` comment lines and everything below the scissors line.
pub fn strip_comments(message: &str) -> String {
    let mut out = Vec::new();
    for line in message.lines() {
        if line.starts_with("# ") && line.contains(">8") {
            break;
        }
        if !line.starts_with('#') {
            out.push(line);
        }
    }
    out.join("\n").trim().to_string()
}

pub fn hook_verdict(message: &str, cwhy: &dyn BinaryClassifier, cwhat: &dyn BinaryClassifier) -> HookVerdict {
    let normalized = NormalizedMessage::from_text(&strip_comments(message));
    let c = compose_good(cwhy, cwhat, &normalized);
    if c.good {
        return HookVerdict { lines: vec!["OK".into()], exit_code: 0 };
    }
    let hints: BTreeSet<Hint> = c.hints;
    HookVerdict { lines: hints.iter().map(|h| h.line().to_string()).collect(), exit_code: 1 }
}

pub fn model_paths(dir: &Path) -> (PathBuf, PathBuf) {
    (dir.join(CWHY_FILE), dir.join(CWHAT_FILE))
}

pub fn load_detectors(dir: &Path) -> Result<(BiLstmModel, BiLstmModel), ClassifyError> {
    let (why, what) = model_paths(dir);
    Ok((BiLstmModel::load(&why)?, BiLstmModel::load(&what)?))
}

/// Hook check against the models in `dir`. Model problems give exit code 2
/// so the commit is never rejected because of tooling.
pub fn hook_check(message: &str, dir: &Path) -> HookVerdict {
    match load_detectors(dir) {
        Ok((cwhy, cwhat)) => hook_verdict(message, &cwhy, &cwhat),
        Err(e) => HookVerdict {
            lines: vec![format!(
                "commit message check skipped: cannot load {CWHY_FILE} and {CWHAT_FILE} from {} ({e}); train them with `cql train`",
                dir.display()
            )],
            exit_code: 2,
        },
    }
}
