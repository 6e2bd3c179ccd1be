//! Acceptance checks. Prints one line per criterion and exits non-zero if any
//! evaluated criterion fails.

use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use commit_quality::bots::BotFilter;
use commit_quality::classify::{
    adasyn, adasyn_allocation, random_oversample, smote, train_with_report, BiLstm, BiLstmModel, Oversampler,
    QualityLabel, Step, Target, Technique, TrainConfig,
};
use commit_quality::corpus::{CommitRecord, Corpus, Provenance};
use commit_quality::embed::Vocab;
use commit_quality::evaluate::{confusion, cross_validate, kfold_split, metrics, Confusion};
use commit_quality::normalize::{normalize_message, NormalizedMessage, Placeholder};
use commit_quality::report::{CWHAT_FILE, CWHY_FILE};
use commit_quality::sampling::{clustered_sample_plan, cohen_kappa, LabelPair, SampleSpec};
use commit_quality::taxonomy::AnnotatedMessage;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn sha(i: usize) -> String {
    format!("{i:040x}")
}

// 1
fn sampling_replication() -> Check {
    let start = Instant::now();
    let (sizes, total) = clustered_sample_plan(&[21169, 2249, 2817, 2035, 1078], &SampleSpec::default());
    let elapsed = start.elapsed();
    ensure(total == 1649, format!("total {total}, sizes {sizes:?}"))?;
    ensure(elapsed < Duration::from_secs(1), format!("took {elapsed:?}"))?;
    Ok(format!("sizes {sizes:?}, total {total}"))
}

// 2
fn bot_fixture() -> Check {
    let cases: Vec<(&str, &str, Option<u32>)> = vec![
        ("dev", "Merge branch 'main' of https://github.com/o/r into feature", Some(1)),
        ("dev", "merge branch hotfix", Some(1)),
        ("dev", "Merge remote-tracking branch 'origin/main'", Some(2)),
        ("dev", "Merge remote-tracking branch 'upstream/2.x' into 2.x", Some(2)),
        ("dev", "[maven-release-plugin] prepare release v1.2.0", Some(3)),
        ("dev", "[maven-release-plugin] prepare for next development iteration", Some(3)),
        ("dev", "Fix NPE in parser\n\n(cherry picked from commit 0123abc)", Some(4)),
        ("dev", "Backport timeout fix\n\ncherry picked from commit https://github.com/o/r/commit/ab12", Some(4)),
        ("dev", "Next development version 2.3.1-SNAPSHOT", Some(5)),
        ("dev", "next development version 5.0", Some(5)),
        ("dependabot[bot]", "Bump jackson-databind from 2.9.8 to 2.9.9", Some(6)),
        ("", "Update copyright headers", Some(6)),
        ("dev", "Fix NPE when config file is missing because the loader returned null", None),
        ("dev", "Add retry to HTTP client\n\nRequests failed on flaky networks.", None),
        ("dev", "Remove deprecated merge helper", None),
        ("dev", "Polish", None),
        ("dev", "Document the release process", None),
        ("dev", "Upgrade to Gradle 8 since 7 is end of life", None),
        ("dev", "Explain why branch protection is needed", None),
        ("dev", "Rename development version constant", None),
    ];
    ensure(cases.len() == 20, "fixture size")?;
    let filter = BotFilter::builtin();
    let flip = |s: &str| -> String {
        s.chars().map(|c| if c.is_lowercase() { c.to_ascii_uppercase() } else { c.to_ascii_lowercase() }).collect()
    };
    let mut records = Vec::new();
    for (i, (author, msg, expected)) in cases.iter().enumerate() {
        let rec = CommitRecord::new("o/r", sha(i), *author, *msg);
        let got = filter.classify(&rec);
        ensure(got == *expected, format!("case {i} {msg:?}: expected {expected:?}, got {got:?}"))?;
        let flipped = CommitRecord::new("o/r", sha(i), flip(author), flip(msg));
        ensure(filter.classify(&flipped) == got, format!("case {i} verdict changes when case-flipped"))?;
        records.push(rec);
    }
    let out = filter.apply(&Corpus::new(records, Provenance::Unknown).map_err(|e| e.to_string())?);
    ensure(out.kept.len() == 8 && out.removed.len() == 12, "partition sizes")?;
    ensure(out.stats.values().all(|&n| n == 2) && out.stats.len() == 6, format!("stats {:?}", out.stats))?;
    Ok("20/20 verdicts match, case-flipped verdicts identical".into())
}

// 3
fn normalization_fuzz() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let words = ["fix", "the", "crash", "when", "loading", "config", "because", "users", "saw", "errors"];
    let urls = [
        ("https://github.com/o/r/pull/42", Placeholder::PrUrl),
        ("https://github.com/o/r/issues/7", Placeholder::IssueUrl),
        ("http://example.org/docs/page.html", Placeholder::OtherUrl),
        ("(https://forge.example/a/b/pulls/3).", Placeholder::PrUrl),
    ];
    for n in 0..500 {
        let mut expected = std::collections::BTreeMap::new();
        let mut pieces: Vec<String> = Vec::new();
        for _ in 0..rng.gen_range(0..25) {
            let (piece, ph) = match rng.gen_range(0..10) {
                0 => {
                    let (u, p) = urls[rng.gen_range(0..urls.len())];
                    (u.to_string(), Some(p))
                }
                1 => ("\n".to_string(), Some(Placeholder::Enter)),
                2 => ("\r\n".to_string(), Some(Placeholder::Enter)),
                3 => ("Parser.java".to_string(), Some(Placeholder::FileName)),
                4 => ("loadConfig()".to_string(), Some(Placeholder::MethodName)),
                5 => ("retryCount".to_string(), Some(Placeholder::IdentifierName)),
                6 => ("résumé,".to_string(), None),
                _ => (words[rng.gen_range(0..words.len())].to_string(), None),
            };
            if let Some(p) = ph {
                *expected.entry(p).or_insert(0usize) += 1;
            }
            pieces.push(piece);
        }
        let raw = pieces.join(" ");
        let mut rec = CommitRecord::new("r", sha(n), "a", raw.clone());
        rec.changed_paths = vec!["src/main/Parser.java".into()];
        rec.diff_identifiers = BTreeSet::from(["retryCount".to_string()]);
        let first = normalize_message(&rec);
        ensure(!first.text.contains("http://") && !first.text.contains("https://"), format!("URL left in {:?}", first.text))?;
        ensure(!first.text.contains('\n') && !first.text.contains('\r'), format!("newline left in {:?}", first.text))?;
        ensure(first.placeholder_counts == expected, format!("{raw:?}: counts {:?} expected {expected:?}", first.placeholder_counts))?;
        let mut again = rec.clone();
        again.message_raw = first.text.clone();
        let second = normalize_message(&again);
        ensure(second.text == first.text && second.tokens == first.tokens, format!("not idempotent on {raw:?}"))?;
        ensure(second.placeholder_counts == first.placeholder_counts, "counts change on re-normalization")?;
    }
    Ok("500 messages: idempotent, no URLs or newlines left, counts conserved".into())
}

// 4
fn gradient_check() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (v, e, h, l) = (20, 4, 3, 5);
    let net = BiLstm::new(v, e, h, 0.5, &mut rng);
    let seqs: Vec<Vec<Step>> = (0..2)
        .map(|b| {
            let mut s: Vec<Step> = (0..l).map(|_| Step::Token(rng.gen_range(1..v))).collect();
            if b == 1 {
                s[2] = Step::Mix(vec![(rng.gen_range(1..v), 0.3), (rng.gen_range(1..v), 0.7)]);
            }
            s
        })
        .collect();
    let batch: Vec<(&[Step], f64)> = vec![(&seqs[0], 1.0), (&seqs[1], 0.0)];
    let (_, grad) = net.loss_and_grad(&batch);
    let analytic: Vec<(&str, Vec<f64>)> = grad.param_slices().into_iter().map(|(n, s)| (n, s.to_vec())).collect();
    let eps = 1e-5;
    let mut worst: f64 = 0.0;
    let mut probe = net.clone();
    for (g, (name, a)) in analytic.iter().enumerate() {
        #[allow(clippy::needless_range_loop)]
        for k in 0..a.len() {
            let orig = probe.param_slices()[g].1[k];
            probe.param_slices_mut()[g][k] = orig + eps;
            let up = probe.loss(&batch);
            probe.param_slices_mut()[g][k] = orig - eps;
            let down = probe.loss(&batch);
            probe.param_slices_mut()[g][k] = orig;
            let numeric = (up - down) / (2.0 * eps);
            let rel = (a[k] - numeric).abs() / a[k].abs().max(numeric.abs()).max(1e-6);
            ensure(rel < 1e-4, format!("{name}[{k}]: analytic {} numeric {numeric} rel {rel:e}", a[k]))?;
            worst = worst.max(rel);
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(30), format!("took {elapsed:?}"))?;
    Ok(format!("{} parameters in 9 groups, max relative error {worst:.2e}", analytic.iter().map(|(_, a)| a.len()).sum::<usize>()))
}

fn separable_fixture() -> Vec<(NormalizedMessage, bool)> {
    let subjects = ["parser", "cache", "login", "build", "docs", "client", "server", "schema", "logger", "router"];
    let verbs = ["fix", "update", "refactor", "adjust"];
    let mut out = Vec::new();
    for i in 0..40 {
        let s = subjects[i % subjects.len()];
        let v = verbs[(i / 10) % verbs.len()];
        let text = if i % 2 == 0 {
            format!("{v} {s} because it failed")
        } else {
            format!("{v} {s} and tidy it")
        };
        out.push((NormalizedMessage::from_text(&text), i % 2 == 0));
    }
    out
}

fn overfit_config() -> TrainConfig {
    TrainConfig {
        embedding_dim: 16,
        hidden_dim: 16,
        learning_rate: 0.01,
        epochs: 200,
        batch_size: 8,
        oversampler: Oversampler::None,
        validation_fraction: 0.0,
        seed: 5,
        ..TrainConfig::default()
    }
}

// 5
fn overfit() -> Check {
    let data = separable_fixture();
    let config = overfit_config();
    let (a, ra) = train_with_report(&data, &config).map_err(|e| e.to_string())?;
    let (b, _) = train_with_report(&data, &config).map_err(|e| e.to_string())?;
    ensure(ra.epochs_run <= 200, "epoch budget")?;
    ensure(ra.training_accuracy >= 0.95, format!("training accuracy {:.3}", ra.training_accuracy))?;
    ensure(a == b, "two runs with the same seed differ")?;
    Ok(format!("training accuracy {:.1}% after {} epochs, runs identical", 100.0 * ra.training_accuracy, ra.epochs_run))
}

// 6
fn oversamplers() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let labels: Vec<bool> = (0..30).map(|i| i < 8).collect();
    let vectors: Vec<Vec<f64>> = (0..30).map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let r = random_oversample(&vectors, &labels, 1).map_err(|e| e.to_string())?;
    ensure(r.count(true) == r.count(false), "random oversampling left classes unequal")?;
    let s = smote(&vectors, &labels, 3, 1).map_err(|e| e.to_string())?;
    ensure(s.count(true) == s.count(false), "SMOTE left classes unequal")?;
    let mut worst: f64 = 0.0;
    for (x, o) in s.items.iter().zip(&s.origins) {
        if let commit_quality::classify::Origin::Synthetic { base, neighbor, lambda } = *o {
            ensure((0.0..=1.0).contains(&lambda), "lambda out of range")?;
            let (p, q) = (&vectors[base], &vectors[neighbor]);
            let seg: f64 = p.iter().zip(q).map(|(a, b)| (b - a).powi(2)).sum::<f64>().sqrt();
            let d1: f64 = p.iter().zip(x).map(|(a, b)| (b - a).powi(2)).sum::<f64>().sqrt();
            let d2: f64 = x.iter().zip(q).map(|(a, b)| (b - a).powi(2)).sum::<f64>().sqrt();
            worst = worst.max((d1 + d2 - seg).abs());
        }
    }
    ensure(worst < 1e-9, format!("segment residual {worst:e}"))?;
    // minority cluster far from the majority: no point has a majority neighbor
    let far: Vec<Vec<f64>> = (0..10).map(|i| if i < 4 { vec![i as f64 * 0.01] } else { vec![100.0 + i as f64] }).collect();
    let far_labels: Vec<bool> = (0..10).map(|i| i < 4).collect();
    let z = adasyn(&far, &far_labels, 3, 1, 1.0).map_err(|e| e.to_string())?;
    ensure(z.items.len() == 10, format!("ADASYN generated {} points", z.items.len() - 10))?;
    let alloc = adasyn_allocation(&[0.2, 0.6], 8.0);
    ensure(alloc == vec![2, 6], format!("allocation {alloc:?}"))?;
    Ok(format!("balanced, segment residual {worst:.1e}, ADASYN zero case, allocation (2, 6)"))
}

// 7
fn metrics_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for trial in 0..1000 {
        let n = rng.gen_range(1..60);
        let p: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
        let t: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
        let mut c = Confusion::default();
        for i in 0..n {
            if p[i] && t[i] {
                c.tp += 1;
            } else if p[i] {
                c.fp += 1;
            } else if t[i] {
                c.fn_ += 1;
            } else {
                c.tn += 1;
            }
        }
        let m = metrics(&p, &t).map_err(|e| e.to_string())?;
        ensure(m.confusion == c && confusion(&p, &t) == c, format!("trial {trial}: confusion mismatch"))?;
        let prec = if c.tp + c.fp == 0 { 0.0 } else { c.tp as f64 / (c.tp + c.fp) as f64 };
        let acc = (c.tp + c.tn) as f64 / n as f64;
        ensure(m.row.positive.precision == prec && m.row.accuracy == acc, format!("trial {trial}: metric mismatch"))?;
    }
    let mut p = vec![true; 4];
    p.extend([false; 6]);
    let t = [true, true, true, false, true, true, false, false, false, false];
    let m = metrics(&p, &t).map_err(|e| e.to_string())?;
    ensure(m.confusion == Confusion { tp: 3, fp: 1, fn_: 2, tn: 4 }, "hand confusion")?;
    let r = m.row;
    ensure((r.positive.precision - 0.75).abs() < 1e-12 && (r.positive.recall - 0.6).abs() < 1e-12, "hand precision/recall")?;
    ensure((r.positive.f1 - 0.6667).abs() < 1e-4 && (r.accuracy - 0.7).abs() < 1e-12, "hand F1/accuracy")?;
    Ok(format!("1000 random vectors exact; hand case P=0.75 R=0.6 F1={:.4} A=0.7", r.positive.f1))
}

// 8
fn cv_harness() -> Check {
    let mut sizes = kfold_split(1597, 10, 8).map_err(|e| e.to_string())?.fold_sizes();
    sizes.sort_unstable();
    ensure(sizes == [vec![159; 3], vec![160; 7]].concat(), format!("fold sizes {sizes:?}"))?;
    for (n, k, seed) in [(10usize, 10usize, 1u64), (97, 7, 2), (1000, 10, 3)] {
        let plan = kfold_split(n, k, seed).map_err(|e| e.to_string())?;
        let mut seen = BTreeSet::new();
        for f in 0..k {
            for i in plan.test_indices(f) {
                ensure(seen.insert(i), format!("index {i} in two folds"))?;
            }
        }
        ensure(seen.len() == n, "folds do not cover every index")?;
    }
    let data: Vec<(NormalizedMessage, bool)> = (0..60)
        .map(|i| {
            let pos = i % 4 == 0;
            let text = if pos { format!("fix bug {i} because it crashed") } else { format!("update file {i}") };
            (NormalizedMessage::from_text(&text), pos)
        })
        .collect();
    let mut checked = 0;
    for (technique, oversampler, epochs) in
        [(Technique::LogReg, Oversampler::Smote, 5), (Technique::BiLstm, Oversampler::Random, 1), (Technique::BiLstm, Oversampler::Adasyn, 1)]
    {
        let config = TrainConfig {
            embedding_dim: 4,
            hidden_dim: 4,
            epochs,
            smote_k: 3,
            oversampler,
            technique,
            ..TrainConfig::default()
        };
        let rep = cross_validate(&data, &config, 5, 8, true).map_err(|e| e.to_string())?;
        for f in &rep.folds {
            let test: BTreeSet<usize> = f.test_indices.iter().copied().collect();
            ensure(f.source_indices.is_disjoint(&test), format!("fold {} trained on test data", f.fold))?;
            ensure(f.source_indices.len() + f.test_size <= data.len(), "source set too large")?;
            checked += 1;
        }
    }
    Ok(format!("partitions complete, 1597 -> 7x160 + 3x159, {checked} fold trainings free of test indices"))
}

// 9
fn kappa() -> Check {
    let pairs = |a: &[&str], b: &[&str]| -> Vec<LabelPair> {
        a.iter().zip(b).enumerate().map(|(i, (x, y))| LabelPair::new(i.to_string(), *x, *y)).collect()
    };
    let perfect = cohen_kappa(&pairs(&["a", "b", "c", "a"], &["a", "b", "c", "a"])).map_err(|e| e.to_string())?;
    ensure(perfect == 1.0, format!("perfect agreement gives {perfect}"))?;
    let chance = cohen_kappa(&pairs(&["X", "X", "X", "X"], &["X", "X", "Y", "Y"])).map_err(|e| e.to_string())?;
    ensure(chance.abs() < 1e-12, format!("chance construction gives {chance}"))?;
    let a = ["P", "P", "P", "P", "P", "P", "N", "N", "N", "N"];
    let b = ["P", "P", "P", "P", "P", "N", "P", "N", "N", "N"];
    let hand = cohen_kappa(&pairs(&a, &b)).map_err(|e| e.to_string())?;
    ensure((hand - 0.5833).abs() < 1e-4, format!("hand case gives {hand}"))?;
    Ok(format!("1.0, 0.0, {hand:.4}"))
}

// 10
fn replication() -> Result<Option<String>, String> {
    let Some(dir) = std::env::var_os("CQL_REPLICATION_DIR") else {
        return Ok(None);
    };
    let dir = Path::new(&dir);
    let read = |name: &str| std::fs::File::open(dir.join(name)).map(std::io::BufReader::new).map_err(|e| format!("{name}: {e}"));
    let msgs: Vec<NormalizedMessage> = commit_quality::corpus::read_jsonl(read("messages.jsonl")?).map_err(|e| e.to_string())?;
    let anns: Vec<AnnotatedMessage> = commit_quality::corpus::read_jsonl(read("labels.jsonl")?).map_err(|e| e.to_string())?;
    let labels: std::collections::HashMap<&str, QualityLabel> = anns.iter().map(|a| (a.sha.as_str(), a.quality)).collect();
    let mut lines = Vec::new();
    for (target, reference) in [(Target::MissingWhy, 0.847), (Target::MissingWhat, 0.910), (Target::Good, 0.759)] {
        let data: Vec<(NormalizedMessage, bool)> =
            msgs.iter().filter_map(|m| labels.get(m.sha.as_str()).map(|q| (m.clone(), q.target(target)))).collect();
        let mut acc = Vec::new();
        for technique in [Technique::BiLstm, Technique::LogReg] {
            let config = TrainConfig { target, technique, ..TrainConfig::default() };
            acc.push(cross_validate(&data, &config, 10, 0, true).map_err(|e| e.to_string())?.mean.accuracy);
        }
        ensure((acc[0] - reference).abs() <= 0.05, format!("{}: accuracy {:.3} vs {reference}", target.short_name(), acc[0]))?;
        ensure(acc[0] >= acc[1], format!("{}: Bi-LSTM {:.3} below baseline {:.3}", target.short_name(), acc[0], acc[1]))?;
        lines.push(format!("{} {:.1}%", target.short_name(), 100.0 * acc[0]));
    }
    Ok(Some(lines.join(", ")))
}

fn git(dir: &Path, args: &[&str]) -> Result<(), String> {
    let out = Command::new("git")
        .arg("-C")
        .arg(dir)
        .args(args)
        .env("GIT_CONFIG_NOSYSTEM", "1")
        .env("GIT_CONFIG_GLOBAL", "/dev/null")
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), format!("git {args:?}: {}", String::from_utf8_lossy(&out.stderr)))
}

fn cql(args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_cql")).args(args).output().map_err(|e| e.to_string())?;
    ensure(out.status.success(), format!("cql {args:?}: {}", String::from_utf8_lossy(&out.stderr)))?;
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

/// Untrained network whose head always outputs `p`.
fn constant_model(p: f64) -> BiLstmModel {
    let vocab = Vocab::from_tokens(["fix"]);
    let config = TrainConfig { embedding_dim: 2, hidden_dim: 2, ..TrainConfig::default() };
    let mut net = BiLstm::new(vocab.len(), 2, 2, 0.1, &mut ChaCha8Rng::seed_from_u64(0));
    net.head_w.iter_mut().for_each(|w| *w = 0.0);
    net.head_b = (p / (1.0 - p)).ln();
    BiLstmModel::new(config, vocab, net)
}

// 11
fn end_to_end() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let repo = tmp.path().join("fixture");
    std::fs::create_dir(&repo).map_err(|e| e.to_string())?;
    git(&repo, &["init", "-q"])?;
    let bots = [
        ("dev", "Merge branch 'release' into main"),
        ("dev", "Merge remote-tracking branch 'origin/main'"),
        ("dev", "[maven-release-plugin] prepare release v1.0"),
        ("dev", "Fix typo\n\n(cherry picked from commit abc123)"),
        ("dev", "Next development version 1.1-SNAPSHOT"),
        ("dependabot[bot]", "Bump serde from 1.0.1 to 1.0.2"),
    ];
    let start = Instant::now();
    for i in 0..30 {
        let (author, msg) = if i % 5 == 4 { bots[i / 5] } else { ("dev", "") };
        let msg = if msg.is_empty() { format!("Update module {i}\n\nThe old code ignored errors in step {i}.") } else { msg.to_string() };
        std::fs::write(repo.join(format!("f{i}.txt")), format!("{i}\n")).map_err(|e| e.to_string())?;
        git(&repo, &["add", "."])?;
        git(&repo, &["-c", &format!("user.name={author}"), "-c", "user.email=a@example.com", "commit", "-q", "-m", &msg])?;
    }
    let setup = start.elapsed();
    let models = tmp.path().join("models");
    std::fs::create_dir(&models).map_err(|e| e.to_string())?;
    constant_model(0.2).save(&models.join(CWHY_FILE)).map_err(|e| e.to_string())?;
    constant_model(0.7).save(&models.join(CWHAT_FILE)).map_err(|e| e.to_string())?;
    let p = |name: &str| tmp.path().join(name).display().to_string();
    let start = Instant::now();
    cql(&["ingest", "--from-git", &repo.display().to_string(), "--repo-id", "fixture", "--with-diffs", "-o", &p("corpus.jsonl")])?;
    cql(&["filter", "-i", &p("corpus.jsonl"), "-o", &p("kept.jsonl"), "--removed", &p("removed.jsonl")])?;
    cql(&["normalize", "-i", &p("kept.jsonl"), "-o", &p("normalized.jsonl")])?;
    cql(&["classify", "-i", &p("normalized.jsonl"), "--models", &models.display().to_string(), "-o", &p("classified.jsonl")])?;
    let json = cql(&["report", "-i", &p("classified.jsonl"), "--output", "json"])?;
    let elapsed = start.elapsed();
    let count = |f: &str| std::fs::read_to_string(p(f)).map(|s| s.lines().count()).unwrap_or(0);
    ensure(count("corpus.jsonl") == 30, format!("ingested {}", count("corpus.jsonl")))?;
    ensure(count("removed.jsonl") == 6 && count("kept.jsonl") == 24, "bot split is not 6/24")?;
    let report: serde_json::Value = serde_json::from_str(&json).map_err(|e| e.to_string())?;
    let repos = report["repos"].as_array().ok_or("report has no repos")?;
    for r in repos {
        let sum: f64 = r["ratios"].as_object().ok_or("no ratios")?.values().filter_map(|v| v.as_f64()).sum();
        ensure((sum - 1.0).abs() < 1e-9, format!("ratios sum to {sum}"))?;
    }
    let no_what = repos[0]["counts"]["no_what"].as_u64();
    ensure(no_what == Some(24), format!("stub verdicts: no_what = {no_what:?}"))?;
    ensure(elapsed < Duration::from_secs(10), format!("pipeline took {elapsed:?}"))?;
    Ok(format!("30 commits, 6 bots removed, ratios sum to 1, pipeline {:.2}s (fixture setup {:.2}s)", elapsed.as_secs_f64(), setup.as_secs_f64()))
}

fn main() {
    type Criterion = (u32, &'static str, fn() -> Check);
    let checks: Vec<Criterion> = vec![
        (1, "sampling replication", sampling_replication),
        (2, "bot-filter fixture", bot_fixture),
        (3, "normalization properties", normalization_fuzz),
        (4, "gradient check", gradient_check),
        (5, "overfit sanity", overfit),
        (6, "oversampler properties", oversamplers),
        (7, "metrics oracle", metrics_oracle),
        (8, "cross-validation harness", cv_harness),
        (9, "kappa", kappa),
    ];
    let mut failed = 0;
    let mut report = |n: u32, name: &str, result: Check| match result {
        Ok(detail) => println!("criterion {n:>2} {name}: pass ({detail})"),
        Err(why) => {
            failed += 1;
            println!("criterion {n:>2} {name}: FAIL ({why})");
        }
    };
    for (n, name, f) in checks {
        let start = Instant::now();
        let r = f();
        report(n, name, r.map(|d| format!("{d}; {:.2}s", start.elapsed().as_secs_f64())));
    }
    match replication() {
        Ok(None) => println!("criterion 10 reference accuracy: not evaluated: dataset unavailable"),
        Ok(Some(detail)) => report(10, "reference accuracy", Ok(detail)),
        Err(why) => report(10, "reference accuracy", Err(why)),
    }
    report(11, "end-to-end pipeline", end_to_end());
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
