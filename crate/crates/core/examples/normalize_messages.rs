//! Placeholder substitution and tokenization of a commit message.

use commit_quality::corpus::CommitRecord;
use commit_quality::normalize::normalize_message;

fn main() {
    let mut record = CommitRecord::new(
        "demo",
        "0".repeat(40),
        "alice",
        "Fix retryCount overflow in HttpClient.java\n\nparseHeaders() looped forever, see https://github.com/o/r/issues/12 and https://github.com/o/r/pull/13.",
    );
    record.changed_paths = vec!["src/main/java/HttpClient.java".into()];
    record.diff_identifiers = ["retryCount".to_string()].into();

    let m = normalize_message(&record);
    println!("text:   {}", m.text);
    println!("tokens: {:?}", m.tokens);
    for (placeholder, n) in &m.placeholder_counts {
        println!("{:<20} {n}", placeholder.token());
    }
}
