use std::io::{BufRead, BufReader, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use commit_quality::corpus::forge::{FetchEvent, FetchWindow, ForgeClient, ForgeError};
use commit_quality::corpus::Provenance;

struct Reply {
    status: u16,
    headers: Vec<(&'static str, String)>,
    body: String,
}

fn ok(body: String) -> Reply {
    Reply { status: 200, headers: vec![], body }
}

/// Serves `replies` in order, one per connection, and records request targets.
fn serve(replies: Vec<Reply>) -> (String, Arc<Mutex<Vec<String>>>, std::thread::JoinHandle<()>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let base = format!("http://{}", listener.local_addr().unwrap());
    let seen = Arc::new(Mutex::new(Vec::new()));
    let log = seen.clone();
    let handle = std::thread::spawn(move || {
        for reply in replies {
            let (mut stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut request_line = String::new();
            reader.read_line(&mut request_line).unwrap();
            loop {
                let mut line = String::new();
                if reader.read_line(&mut line).unwrap() == 0 || line == "\r\n" {
                    break;
                }
            }
            log.lock().unwrap().push(request_line.split_whitespace().nth(1).unwrap_or("").to_string());
            let mut head = format!(
                "HTTP/1.1 {} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n",
                reply.status,
                reply.body.len()
            );
            for (k, v) in &reply.headers {
                head.push_str(&format!("{k}: {v}\r\n"));
            }
            head.push_str("\r\n");
            stream.write_all(head.as_bytes()).unwrap();
            stream.write_all(reply.body.as_bytes()).unwrap();
        }
    });
    (base, seen, handle)
}

fn commit_json(i: usize, login: Option<&str>) -> serde_json::Value {
    serde_json::json!({
        "sha": format!("{i:040x}"),
        "commit": {
            "message": format!("Fix issue {i}\n\nBecause it broke."),
            "author": {"name": format!("dev{i}"), "date": "2020-01-02T03:04:05Z"}
        },
        "author": login.map(|l| serde_json::json!({"login": l})),
        "files": [{"filename": "src/A.java"}, {"filename": "src/A.java"}]
    })
}

fn page(range: std::ops::Range<usize>) -> String {
    serde_json::Value::Array(range.map(|i| commit_json(i, if i % 2 == 0 { Some("dev") } else { None })).collect())
        .to_string()
}

#[test]
fn paginates_until_short_page() {
    let (base, seen, handle) = serve(vec![ok(page(0..2)), ok(page(2..3))]);
    let mut events = Vec::new();
    let window = FetchWindow { since: Some("2020-01-01T00:00:00Z".into()), until: None };
    let corpus = ForgeClient::new(&base, None).fetch_commits("o/r", 2, &window, |e| events.push(e)).unwrap();
    handle.join().unwrap();
    assert_eq!(corpus.len(), 3);
    let r = &corpus.records[0];
    assert_eq!(r.repo_id, "o/r");
    assert_eq!(r.timestamp_utc, 1577934245);
    assert_eq!(r.changed_paths, vec!["src/A.java".to_string()]);
    assert!(r.author_is_account);
    assert!(!corpus.records[1].author_is_account);
    assert!(matches!(corpus.provenance, Provenance::Forge { .. }));
    let seen = seen.lock().unwrap();
    assert_eq!(seen[0], "/repos/o/r/commits?per_page=2&page=1&since=2020-01-01T00:00:00Z");
    assert_eq!(seen[1], "/repos/o/r/commits?per_page=2&page=2&since=2020-01-01T00:00:00Z");
    assert_eq!(events, vec![FetchEvent::Page { page: 1, commits: 2 }, FetchEvent::Page { page: 2, commits: 1 }]);
}

#[test]
fn rate_limit_waits_then_retries() {
    let limited = Reply { status: 403, headers: vec![("Retry-After", "7".into())], body: "{}".into() };
    let (base, seen, handle) = serve(vec![limited, ok(page(0..1))]);
    let slept = Arc::new(Mutex::new(Vec::new()));
    let s = slept.clone();
    let client = ForgeClient::new(&base, Some("t0k".into())).with_sleeper(move |d| s.lock().unwrap().push(d));
    let mut events = Vec::new();
    let corpus = client.fetch_commits("o/r", 5, &FetchWindow::default(), |e| events.push(e)).unwrap();
    handle.join().unwrap();
    assert_eq!(corpus.len(), 1);
    assert_eq!(*slept.lock().unwrap(), vec![Duration::from_secs(7)]);
    assert_eq!(seen.lock().unwrap().len(), 2);
    assert_eq!(events[0], FetchEvent::RateLimited { page: 1, wait: Duration::from_secs(7) });
}

#[test]
fn unknown_repo_and_auth_errors() {
    let (base, _, handle) = serve(vec![
        Reply { status: 404, headers: vec![], body: "{}".into() },
        Reply { status: 401, headers: vec![], body: "{}".into() },
    ]);
    let client = ForgeClient::new(&base, None);
    assert!(matches!(
        client.fetch_commits("o/missing", 5, &FetchWindow::default(), |_| {}),
        Err(ForgeError::UnknownRepo(r)) if r == "o/missing"
    ));
    assert!(matches!(client.fetch_commits("o/r", 5, &FetchWindow::default(), |_| {}), Err(ForgeError::Auth(401))));
    handle.join().unwrap();
}

#[test]
fn malformed_page_is_a_decode_error() {
    let (base, _, handle) = serve(vec![ok("[{\"sha\": 1}]".into())]);
    let err = ForgeClient::new(&base, None).fetch_commits("o/r", 5, &FetchWindow::default(), |_| {}).unwrap_err();
    handle.join().unwrap();
    assert!(matches!(err, ForgeError::Decode { page: 1, .. }), "{err}");
}
