use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use commit_quality::classify::{BiLstm, BiLstmModel, TrainConfig};
use commit_quality::corpus::{write_corpus, CommitRecord, Corpus, Provenance};
use commit_quality::embed::Vocab;
use commit_quality::report::{CWHAT_FILE, CWHY_FILE};

fn cql(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cql")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json(o: &Output) -> serde_json::Value {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_str(&stdout(o)).unwrap()
}

fn constant_model(p: f64) -> BiLstmModel {
    let vocab = Vocab::from_tokens(["fix"]);
    let config = TrainConfig { embedding_dim: 2, hidden_dim: 2, ..TrainConfig::default() };
    let mut net = BiLstm::new(vocab.len(), 2, 2, 0.1, &mut ChaCha8Rng::seed_from_u64(0));
    net.head_w.iter_mut().for_each(|w| *w = 0.0);
    net.head_b = (p / (1.0 - p)).ln();
    BiLstmModel::new(config, vocab, net)
}

fn models(dir: &Path, p_why: f64, p_what: f64) -> PathBuf {
    std::fs::create_dir_all(dir).unwrap();
    constant_model(p_why).save(&dir.join(CWHY_FILE)).unwrap();
    constant_model(p_what).save(&dir.join(CWHAT_FILE)).unwrap();
    dir.to_path_buf()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn hook_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let msg = tmp.path().join("COMMIT_EDITMSG");
    std::fs::write(&msg, "Fix crash on empty config\n\nThe loader returned null.\n# Please enter the commit message\n").unwrap();

    let good = models(&tmp.path().join("good"), 0.1, 0.1);
    let o = cql(&["hook", s(&msg), "--models", s(&good)]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));

    let bad = models(&tmp.path().join("bad"), 0.9, 0.1);
    let o = cql(&["hook", s(&msg), "--models", s(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("missing: why"), "{}", stdout(&o));
    assert!(!stdout(&o).contains("missing: what"));

    let o = cql(&["--output", "json", "hook", s(&msg), "--models", s(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["exit_code"], 1);

    let o = cql(&["hook", s(&msg), "--models", s(&tmp.path().join("absent"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("cql train"));

    let o = cql(&["hook", s(&tmp.path().join("no-such-file")), "--models", s(&good)]);
    assert_eq!(o.status.code(), Some(2));
}

fn labelled_fixture(dir: &Path) -> (PathBuf, PathBuf) {
    let mut records = Vec::new();
    let mut labels = String::new();
    for i in 0..24 {
        let (msg, quality) = if i % 2 == 0 {
            (format!("Fix loader {i}\n\nIt crashed because the file was empty."), "why_and_what")
        } else {
            (format!("Update loader {i}"), "no_why")
        };
        let sha = format!("{i:040x}");
        records.push(CommitRecord::new("o/r", sha.clone(), "dev", msg));
        labels.push_str(&format!("{{\"sha\":\"{sha}\",\"quality\":\"{quality}\"}}\n"));
    }
    let corpus_path = dir.join("corpus.jsonl");
    write_corpus(&Corpus::new(records, Provenance::Unknown).unwrap(), std::fs::File::create(&corpus_path).unwrap()).unwrap();
    let labels_path = dir.join("labels.jsonl");
    std::fs::write(&labels_path, labels).unwrap();
    let norm = dir.join("normalized.jsonl");
    assert!(cql(&["normalize", "-i", s(&corpus_path), "-o", s(&norm)]).status.success());
    (norm, labels_path)
}

#[test]
fn train_evaluate_classify_curate() {
    let tmp = tempfile::tempdir().unwrap();
    let (norm, labels) = labelled_fixture(tmp.path());
    let cfg = tmp.path().join("small.cfg");
    std::fs::write(&cfg, "embedding_dim = 4\nhidden_dim = 4\nepochs = 3\nbatch_size = 8\n").unwrap();
    let mdir = tmp.path().join("models");
    std::fs::create_dir(&mdir).unwrap();

    for (target, file) in [("why", CWHY_FILE), ("what", CWHAT_FILE)] {
        let o = cql(&[
            "--config", s(&cfg), "--output", "json", "train", "--messages", s(&norm), "--labels", s(&labels),
            "--target", target, "-o", s(&mdir.join(file)),
        ]);
        if target == "what" {
            // every annotation has a what, so the what detector sees one class
            assert!(!o.status.success());
            constant_model(0.3).save(&mdir.join(file)).unwrap();
        } else {
            let rep = json(&o);
            assert!(rep["epochs_run"].as_u64().unwrap() <= 3);
            BiLstmModel::load(&mdir.join(file)).unwrap();
        }
    }

    let o = cql(&[
        "--config", s(&cfg), "--output", "json", "evaluate", "--messages", s(&norm), "--labels", s(&labels),
        "--target", "why", "--folds", "3", "--technique", "logreg",
    ]);
    let rep = json(&o);
    assert_eq!(rep["folds"].as_array().unwrap().len(), 3);
    assert_eq!(rep["k"], 3);

    let classified = tmp.path().join("classified.jsonl");
    assert!(cql(&["classify", "-i", s(&norm), "--models", s(&mdir), "-o", s(&classified)]).status.success());
    assert_eq!(std::fs::read_to_string(&classified).unwrap().lines().count(), 24);
    let rep = json(&cql(&["--output", "json", "report", "-i", s(&classified)]));
    assert_eq!(rep["repos"][0]["repo_id"], "o/r");

    let corpus = tmp.path().join("corpus.jsonl");
    let curated = tmp.path().join("curated.jsonl");
    let always = models(&tmp.path().join("always"), 0.01, 0.01);
    let v = json(&cql(&["--output", "json", "curate", "-i", s(&corpus), "--models", s(&always), "--threshold", "0.9", "-o", s(&curated)]));
    assert_eq!(v["kept"], 24);
    let first: serde_json::Value = serde_json::from_str(std::fs::read_to_string(&curated).unwrap().lines().next().unwrap()).unwrap();
    assert!(first["p_good"].as_f64().unwrap() >= 0.9);
    assert!(!cql(&["curate", "-i", s(&corpus), "--models", s(&always), "--threshold", "0"]).status.success());
}

#[test]
fn sample_with_kappa_and_draw() {
    let tmp = tempfile::tempdir().unwrap();
    let records: Vec<CommitRecord> = (0..300)
        .map(|i| CommitRecord::new(if i < 200 { "a/x" } else { "b/y" }, format!("{i:040x}"), "dev", "Fix it"))
        .collect();
    let corpus = tmp.path().join("c.jsonl");
    write_corpus(&Corpus::new(records, Provenance::Unknown).unwrap(), std::fs::File::create(&corpus).unwrap()).unwrap();
    let pairs = tmp.path().join("pairs.jsonl");
    std::fs::write(&pairs, "{\"item_id\":\"1\",\"rater_a\":\"A\",\"rater_b\":\"A\"}\n{\"item_id\":\"2\",\"rater_a\":\"B\",\"rater_b\":\"B\"}\n").unwrap();
    let drawn = tmp.path().join("drawn.jsonl");
    let v = json(&cql(&["--output", "json", "--seed", "3", "sample", "-i", s(&corpus), "--kappa", s(&pairs), "--draw", s(&drawn)]));
    assert_eq!(v["kappa"], 1.0);
    let total = v["plan"]["total"].as_u64().unwrap();
    assert_eq!(std::fs::read_to_string(&drawn).unwrap().lines().count() as u64, total);
    let again = tmp.path().join("again.jsonl");
    json(&cql(&["--output", "json", "--seed", "3", "sample", "-i", s(&corpus), "--draw", s(&again)]));
    assert_eq!(std::fs::read(&drawn).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn crosstab_report() {
    let tmp = tempfile::tempdir().unwrap();
    let anns = tmp.path().join("anns.jsonl");
    std::fs::write(
        &anns,
        concat!(
            "{\"sha\":\"a\",\"quality\":\"why_and_what\",\"why_tags\":[\"DI1\"],\"maintenance\":\"corrective\"}\n",
            "{\"sha\":\"b\",\"quality\":\"why_and_what\",\"why_tags\":[\"DI2\",\"IN1\"],\"maintenance\":\"perfective\"}\n",
        ),
    )
    .unwrap();
    let o = cql(&["report", "--annotations", s(&anns), "--dimension", "why"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains(" & "), "{}", stdout(&o));
}

#[test]
fn bad_config_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.cfg");
    std::fs::write(&cfg, "epoch = 3\n").unwrap();
    let o = cql(&["--config", s(&cfg), "sample", "-i", "/dev/null"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown key"));
}
