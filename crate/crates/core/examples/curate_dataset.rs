//! Keep only the commits both detectors consider well written. Toy
//! keyword detectors stand in for trained models.

use commit_quality::classify::FnClassifier;
use commit_quality::corpus::{CommitRecord, Corpus, Provenance};
use commit_quality::report::curate;

fn main() -> anyhow::Result<()> {
    let messages = [
        "Fix race in cache eviction\n\nTwo threads could free the same entry because the lock was released early.",
        "wip",
        "Add retry to uploader so that transient errors do not fail the job",
        "Update uploader",
    ];
    let records = messages
        .iter()
        .enumerate()
        .map(|(i, m)| CommitRecord::new("demo", format!("{i:040x}"), "dev", *m))
        .collect();
    let corpus = Corpus::new(records, Provenance::Unknown)?;

    let cwhy = FnClassifier::new(|m: &commit_quality::normalize::NormalizedMessage| {
        if m.tokens.iter().any(|t| t == "because" || t == "so") { 0.1 } else { 0.9 }
    });
    let cwhat = FnClassifier::new(|m: &commit_quality::normalize::NormalizedMessage| if m.tokens.len() > 1 { 0.1 } else { 0.9 });

    let set = curate(&corpus, &cwhy, &cwhat, 0.8);
    for r in &set.records {
        println!("{:.2}  {}", r.p_good, r.message_raw.lines().next().unwrap_or(""));
    }
    println!("kept {} of {}", set.records.len(), corpus.len());
    Ok(())
}
