//! Split a handful of commits into human and bot-generated ones.

use commit_quality::bots::BotFilter;
use commit_quality::corpus::{CommitRecord, Corpus, Provenance};

fn main() -> anyhow::Result<()> {
    let messages = [
        ("alice", "Merge branch 'feature/login' into main"),
        ("alice", "Fix login redirect loop\n\nThe session cookie was dropped on redirect."),
        ("bob", "[maven-release-plugin] prepare release v2.0.0"),
        ("renovate", "Update dependency serde to v1.0.200"),
        ("dependabot[bot]", "Bump tokio from 1.36 to 1.37"),
        ("carol", "Backport parser fix\n\n(cherry picked from commit 1a2b3c4)"),
    ];
    let records = messages
        .iter()
        .enumerate()
        .map(|(i, (author, msg))| CommitRecord::new("demo", format!("{i:040x}"), *author, *msg))
        .collect();
    let corpus = Corpus::new(records, Provenance::Unknown)?;

    let mut filter = BotFilter::builtin();
    filter.add_bot_account("renovate");
    for r in &corpus.records {
        match filter.classify(r) {
            Some(id) => println!("bot (pattern {id}): {}", r.first_line()),
            None => println!("human:           {}", r.first_line()),
        }
    }
    let outcome = filter.apply(&corpus);
    print!("{}", outcome.summary());
    Ok(())
}
