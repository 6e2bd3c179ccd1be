//! Mine a local repository: `cargo run --example mine_git_history -- [PATH]`.

use std::path::PathBuf;

use commit_quality::corpus::{read_git_repo, write_corpus};

fn main() -> anyhow::Result<()> {
    let path = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| ".".into()));
    let mut corpus = read_git_repo(&path, "local", &[], true)?;
    let dropped = corpus.retain_english();
    eprintln!("{} commits, {dropped} non-English dropped", corpus.len());
    for r in corpus.records.iter().take(5) {
        eprintln!("{} {:<20} {} ({} paths, {} identifiers)", &r.sha[..8], r.author_name, r.first_line(), r.changed_paths.len(), r.diff_identifiers.len());
    }
    write_corpus(&corpus, std::io::stdout().lock())?;
    Ok(())
}
