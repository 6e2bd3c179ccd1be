use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use commit_quality::bots::BotFilter;
use commit_quality::classify::{
    compose_good_direct, train_with_report, BiLstmModel, Oversampler, QualityLabel, Target, Technique,
};
use commit_quality::config::Config;
use commit_quality::corpus::forge::{FetchEvent, FetchWindow, ForgeClient};
use commit_quality::corpus::{read_corpus, read_git_repo, read_jsonl, write_corpus, write_jsonl, Corpus};
use commit_quality::evaluate::cross_validate;
use commit_quality::normalize::{normalize_message, NormalizedMessage};
use commit_quality::report::{self, ClassifiedMessage};
use commit_quality::sampling::{cohen_kappa, draw_sample, LabelPair, SamplePlan, SampleSpec};
use commit_quality::taxonomy::{crosstab, AnnotatedMessage, Dimension};

#[derive(Parser)]
#[command(name = "cql", version, about = "Commit message quality toolkit")]
struct Cli {
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// key = value file overriding defaults
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Output::Text)]
    output: Output,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Output {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Mine commits from a local repository or a forge into a corpus file.
    Ingest {
        #[arg(long, conflicts_with = "from_forge")]
        from_git: Option<PathBuf>,
        /// owner/name on the forge REST API
        #[arg(long)]
        from_forge: Option<String>,
        #[arg(long)]
        repo_id: Option<String>,
        #[arg(long)]
        with_diffs: bool,
        #[arg(long)]
        since: Option<String>,
        #[arg(long)]
        until: Option<String>,
        /// Keep messages that are not predominantly English.
        #[arg(long)]
        all_languages: bool,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Drop bot-generated commits.
    Filter {
        #[arg(long, short)]
        input: Option<PathBuf>,
        /// Extra patterns as JSON Lines {pattern_id, description, matcher}
        #[arg(long)]
        patterns: Option<PathBuf>,
        #[arg(long = "bot-account")]
        bot_accounts: Vec<String>,
        #[arg(long)]
        removed: Option<PathBuf>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Replace URLs, code elements and newlines with placeholders and tokenize.
    Normalize {
        #[arg(long, short)]
        input: Option<PathBuf>,
        #[arg(long)]
        max_len: Option<usize>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Per-repository sample sizes, optional draw, optional kappa.
    Sample {
        #[arg(long, short)]
        input: Option<PathBuf>,
        #[arg(long)]
        confidence: Option<f64>,
        #[arg(long)]
        margin: Option<f64>,
        /// Write the drawn sample here.
        #[arg(long)]
        draw: Option<PathBuf>,
        /// JSON Lines of {item_id, rater_a, rater_b}
        #[arg(long)]
        kappa: Option<PathBuf>,
    },
    /// Train a detector from normalized messages and quality annotations.
    Train {
        #[arg(long)]
        messages: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        target: Option<Target>,
        #[arg(long)]
        oversampler: Option<Oversampler>,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// k-fold cross-validation of a detector.
    Evaluate {
        #[arg(long)]
        messages: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        target: Option<Target>,
        #[arg(long)]
        folds: Option<usize>,
        #[arg(long)]
        stratify: Option<bool>,
        #[arg(long)]
        technique: Option<Technique>,
    },
    /// Label normalized messages with the Why and What detectors.
    Classify {
        #[arg(long, short)]
        input: Option<PathBuf>,
        #[arg(long)]
        models: Option<PathBuf>,
        /// Use a single directly trained good/not-good model instead.
        #[arg(long)]
        direct: Option<PathBuf>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Quality distribution per repository, or an annotation cross-tab.
    Report {
        #[arg(long, short, required_unless_present = "annotations")]
        input: Option<PathBuf>,
        #[arg(long, requires = "dimension")]
        annotations: Option<PathBuf>,
        #[arg(long)]
        dimension: Option<Dimension>,
    },
    /// Keep the well-written commits of a corpus.
    Curate {
        #[arg(long, short)]
        input: Option<PathBuf>,
        #[arg(long)]
        models: Option<PathBuf>,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// commit-msg hook: check the message in FILE.
    Hook {
        file: PathBuf,
        #[arg(long)]
        models: Option<PathBuf>,
    },
}

fn open_input(path: &Option<PathBuf>) -> Result<Box<dyn BufRead>> {
    Ok(match path {
        Some(p) => Box::new(BufReader::new(File::open(p).with_context(|| format!("opening {}", p.display()))?)),
        None => Box::new(BufReader::new(io::stdin())),
    })
}

fn open_output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn read_file_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_jsonl(BufReader::new(f)).with_context(|| format!("reading {}", path.display()))
}

/// Status goes to stderr in text mode and stdout in JSON mode, so JSON output
/// is always the only thing on stdout.
fn emit<T: Serialize>(output: Output, text: &str, value: &T) -> Result<()> {
    match output {
        Output::Text => eprint!("{text}"),
        Output::Json => println!("{}", serde_json::to_string(value)?),
    }
    Ok(())
}

fn labeled_dataset(messages: &Path, labels: &Path, target: Target) -> Result<Vec<(NormalizedMessage, bool)>> {
    let msgs: Vec<NormalizedMessage> = read_file_jsonl(messages)?;
    let anns: Vec<AnnotatedMessage> = read_file_jsonl(labels)?;
    let by_sha: HashMap<&str, QualityLabel> = anns.iter().map(|a| (a.sha.as_str(), a.quality)).collect();
    let data: Vec<(NormalizedMessage, bool)> = msgs
        .into_iter()
        .filter_map(|m| by_sha.get(m.sha.as_str()).map(|q| (q.target(target), m)))
        .map(|(y, m)| (m, y))
        .collect();
    if data.is_empty() {
        bail!("no message in {} has an annotation in {}", messages.display(), labels.display());
    }
    Ok(data)
}

fn run(cli: Cli) -> Result<ExitCode> {
    let mut cfg = match &cli.config {
        Some(p) => Config::load(p).with_context(|| format!("config {}", p.display()))?,
        None => Config::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
        cfg.train.seed = seed;
    }
    let out = cli.output;
    match cli.command {
        Command::Ingest { from_git, from_forge, repo_id, with_diffs, since, until, all_languages, out: dest } => {
            let mut corpus = if let Some(path) = from_git {
                let id = repo_id.unwrap_or_else(|| {
                    path.canonicalize()
                        .ok()
                        .and_then(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
                        .unwrap_or_else(|| path.display().to_string())
                });
                let mut extra = Vec::new();
                extra.extend(since.map(|s| format!("--since={s}")));
                extra.extend(until.map(|u| format!("--until={u}")));
                read_git_repo(&path, &id, &extra, with_diffs)?
            } else if let Some(repo) = from_forge {
                let page_size = u32::try_from(cfg.page_size).context("page_size")?;
                let client = ForgeClient::from_env(cfg.api_url.clone());
                client.fetch_commits(&repo, page_size, &FetchWindow { since, until }, |e| match e {
                    FetchEvent::Page { page, commits } => eprintln!("page {page}: {commits} commits"),
                    FetchEvent::RateLimited { page, wait } => eprintln!("page {page}: rate limited, waiting {}s", wait.as_secs()),
                })?
            } else {
                bail!("ingest needs --from-git <path> or --from-forge <owner/name>");
            };
            let dropped = if cfg.english_only && !all_languages { corpus.retain_english() } else { 0 };
            let mut w = open_output(&dest)?;
            write_corpus(&corpus, &mut w)?;
            w.flush()?;
            let text = format!("ingested {} commits ({dropped} non-English dropped)\n", corpus.len());
            emit(out, &text, &serde_json::json!({"commits": corpus.len(), "non_english_dropped": dropped}))?;
        }
        Command::Filter { input, patterns, bot_accounts, removed, out: dest } => {
            let corpus = read_corpus(open_input(&input)?)?;
            let mut filter = match patterns {
                Some(p) => BotFilter::with_extra_patterns(BufReader::new(File::open(&p)?))?,
                None => BotFilter::builtin(),
            };
            for a in &bot_accounts {
                filter.add_bot_account(a);
            }
            let outcome = filter.apply(&corpus);
            let mut w = open_output(&dest)?;
            write_corpus(&outcome.kept, &mut w)?;
            w.flush()?;
            if let Some(p) = removed {
                let mut w = open_output(&Some(p))?;
                write_jsonl(&outcome.removed_records(), &mut w)?;
                w.flush()?;
            }
            let stats: HashMap<String, usize> = outcome.stats.iter().map(|(k, v)| (k.to_string(), *v)).collect();
            emit(
                out,
                &outcome.summary(),
                &serde_json::json!({"kept": outcome.kept.len(), "removed": outcome.removed.len(), "by_pattern": stats}),
            )?;
        }
        Command::Normalize { input, max_len, out: dest } => {
            let corpus = read_corpus(open_input(&input)?)?;
            let max_len = max_len.unwrap_or(cfg.train.max_len);
            let msgs: Vec<NormalizedMessage> = corpus
                .records
                .iter()
                .map(|r| {
                    let mut m = normalize_message(r);
                    m.tokens.truncate(max_len);
                    m
                })
                .collect();
            let mut w = open_output(&dest)?;
            write_jsonl(&msgs, &mut w)?;
            w.flush()?;
            emit(out, &format!("normalized {} messages\n", msgs.len()), &serde_json::json!({"messages": msgs.len()}))?;
        }
        Command::Sample { input, confidence, margin, draw, kappa } => {
            let mut spec = cfg.sample;
            if let Some(c) = confidence {
                spec = SampleSpec::from_confidence(c, spec.margin_e)?;
                spec.proportion_p = cfg.sample.proportion_p;
            }
            if let Some(m) = margin {
                spec.margin_e = m;
            }
            spec.validate()?;
            let corpus = read_corpus(open_input(&input)?)?;
            let plan = SamplePlan::for_corpus(&corpus, &spec)?;
            let k = match kappa {
                Some(p) => Some(cohen_kappa(&read_file_jsonl::<LabelPair>(&p)?)?),
                None => None,
            };
            if let Some(p) = draw {
                let sample = draw_sample(&corpus, &plan, cfg.seed)?;
                let mut w = open_output(&Some(p))?;
                write_corpus(&sample, &mut w)?;
                w.flush()?;
            }
            match out {
                Output::Text => {
                    print!("{}", plan.render());
                    if let Some(k) = k {
                        println!("cohen kappa: {k:.4}");
                    }
                }
                Output::Json => println!("{}", serde_json::to_string(&serde_json::json!({"plan": plan, "kappa": k}))?),
            }
        }
        Command::Train { messages, labels, target, oversampler, out: dest } => {
            let mut tc = cfg.train.clone();
            if let Some(t) = target {
                tc.target = t;
            }
            if let Some(o) = oversampler {
                tc.oversampler = o;
            }
            let data = labeled_dataset(&messages, &labels, tc.target)?;
            let (model, rep) = train_with_report(&data, &tc)?;
            model.save(&dest)?;
            let text = format!(
                "{} trained on {} messages: oversampler {}, {} epochs, validation accuracy {}\n",
                tc.target.short_name(),
                data.len(),
                rep.oversampler,
                rep.epochs_run,
                rep.validation_accuracy.map_or("n/a".into(), |a| format!("{:.1}%", 100.0 * a)),
            );
            emit(out, &text, &rep)?;
        }
        Command::Evaluate { messages, labels, target, folds, stratify, technique } => {
            let mut tc = cfg.train.clone();
            if let Some(t) = target {
                tc.target = t;
            }
            if let Some(t) = technique {
                tc.technique = t;
            }
            let data = labeled_dataset(&messages, &labels, tc.target)?;
            let k = folds.unwrap_or(cfg.folds);
            let rep = cross_validate(&data, &tc, k, cfg.seed, stratify.unwrap_or(cfg.stratify))?;
            match out {
                Output::Text => {
                    println!("{} ({})", tc.target.short_name(), tc.target.caption());
                    print!("{}", rep.render_text());
                }
                Output::Json => println!("{}", serde_json::to_string(&rep)?),
            }
        }
        Command::Classify { input, models, direct, out: dest } => {
            let msgs: Vec<NormalizedMessage> = read_jsonl(open_input(&input)?)?;
            let classified: Vec<ClassifiedMessage> = match direct {
                Some(p) => {
                    let cgood = BiLstmModel::load(&p)?;
                    msgs.iter()
                        .map(|m| {
                            let c = compose_good_direct(&cgood, m);
                            // a direct model only separates good from not good
                            let quality = if c.good { QualityLabel::WhyAndWhat } else { QualityLabel::Neither };
                            ClassifiedMessage {
                                sha: m.sha.clone(),
                                repo_id: m.repo_id.clone(),
                                quality,
                                p_missing_why: c.p_missing_why,
                                p_missing_what: c.p_missing_what,
                            }
                        })
                        .collect()
                }
                None => {
                    let dir = models.unwrap_or(cfg.models_dir.clone());
                    let (cwhy, cwhat) = report::load_detectors(&dir).with_context(|| format!("models in {}", dir.display()))?;
                    report::classify_messages(&msgs, &cwhy, &cwhat)
                }
            };
            let mut w = open_output(&dest)?;
            write_jsonl(&classified, &mut w)?;
            w.flush()?;
            if dest.is_some() {
                emit(out, &format!("classified {} messages\n", classified.len()), &serde_json::json!({"messages": classified.len()}))?;
            }
        }
        Command::Report { input, annotations, dimension } => {
            if let (Some(a), Some(d)) = (annotations, dimension) {
                let anns: Vec<AnnotatedMessage> = read_file_jsonl(&a)?;
                let table = crosstab(&anns, d)?;
                match out {
                    Output::Text => print!("{}", table.render_text()),
                    Output::Json => println!("{}", serde_json::to_string(&table)?),
                }
            } else {
                let rows: Vec<ClassifiedMessage> = read_jsonl(open_input(&input)?)?;
                let labeled: Vec<(String, QualityLabel)> = rows.into_iter().map(|r| (r.repo_id, r.quality)).collect();
                let Some(rep) = report::quality_distribution(&labeled) else {
                    bail!("no classified messages to report on");
                };
                match out {
                    Output::Text => print!("{}", rep.render_text()),
                    Output::Json => println!("{}", serde_json::to_string(&rep)?),
                }
            }
        }
        Command::Curate { input, models, threshold, out: dest } => {
            let corpus: Corpus = read_corpus(open_input(&input)?)?;
            let dir = models.unwrap_or(cfg.models_dir.clone());
            let (cwhy, cwhat) = report::load_detectors(&dir).with_context(|| format!("models in {}", dir.display()))?;
            let threshold = threshold.unwrap_or(cfg.curate_threshold);
            if !(threshold > 0.0 && threshold <= 1.0) {
                bail!("threshold {threshold} not in (0,1]");
            }
            let mut set = report::curate(&corpus, &cwhy, &cwhat, threshold);
            let (a, b) = report::model_paths(&dir);
            set.models = vec![a.display().to_string(), b.display().to_string()];
            let mut w = open_output(&dest)?;
            write_jsonl(&set.records, &mut w)?;
            w.flush()?;
            let text = format!("curated {} of {} commits at threshold {threshold}\n", set.records.len(), corpus.len());
            emit(out, &text, &serde_json::json!({"kept": set.records.len(), "input": corpus.len(), "threshold": threshold, "models": set.models}))?;
        }
        Command::Hook { file, models } => {
            let dir = models.unwrap_or(cfg.models_dir.clone());
            let verdict = match std::fs::read_to_string(&file) {
                Ok(text) => report::hook_check(&text, &dir),
                Err(e) => report::HookVerdict { lines: vec![format!("cannot read {}: {e}", file.display())], exit_code: 2 },
            };
            match out {
                Output::Text => verdict.lines.iter().for_each(|l| println!("{l}")),
                Output::Json => println!("{}", serde_json::json!({"lines": verdict.lines, "exit_code": verdict.exit_code})),
            }
            return Ok(ExitCode::from(verdict.exit_code as u8));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let hook = matches!(cli.command, Command::Hook { .. });
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("cql: {e:#}");
            // a broken hook must not block the commit
            ExitCode::from(if hook { 2 } else { 1 })
        }
    }
}
