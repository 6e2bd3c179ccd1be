//! Fetch a repository's commits over the REST API:
//! `CQL_FORGE_TOKEN=... cargo run --example fetch_from_forge -- owner/name [API_URL]`.

use commit_quality::corpus::forge::{FetchEvent, FetchWindow, ForgeClient, DEFAULT_API_URL};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let repo = args.next().unwrap_or_else(|| "rust-lang/log".into());
    let api = args.next().unwrap_or_else(|| DEFAULT_API_URL.into());
    let window = FetchWindow { since: Some("2024-01-01T00:00:00Z".into()), until: None };
    let corpus = ForgeClient::from_env(api).fetch_commits(&repo, 100, &window, |e| match e {
        FetchEvent::Page { page, commits } => eprintln!("page {page}: {commits}"),
        FetchEvent::RateLimited { wait, .. } => eprintln!("rate limited, sleeping {}s", wait.as_secs()),
    })?;
    for r in corpus.records.iter().take(10) {
        println!("{} {}", &r.sha[..8], r.first_line());
    }
    println!("{} commits", corpus.len());
    Ok(())
}
