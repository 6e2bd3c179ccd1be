//! k-fold cross-validation and binary classification metrics.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::thread;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{ClassifyError, Trainer};
use crate::normalize::NormalizedMessage;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("need at least k={k} ≥ 2 examples, got {n}")]
    TooFewExamples { n: usize, k: usize },
    #[error("predictions ({predictions}) and truths ({truths}) differ in length or are empty")]
    Length { predictions: usize, truths: usize },
    #[error("fold {fold}: training split has a single class; enable stratification")]
    SingleClassFold { fold: usize },
    #[error("fold {fold}: trained model used test indices {indices:?}")]
    Leak { fold: usize, indices: Vec<usize> },
    #[error("fold {fold}: {source}")]
    Train { fold: usize, source: ClassifyError },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    /// Fold id of each example index.
    pub assignments: Vec<usize>,
    pub seed: u64,
}

impl FoldPlan {
    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.assignments {
            sizes[f] += 1;
        }
        sizes
    }

    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len()).filter(|&i| self.assignments[i] == fold).collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len()).filter(|&i| self.assignments[i] != fold).collect()
    }
}

fn check_nk(n: usize, k: usize) -> Result<(), EvalError> {
    if k < 2 || n < k {
        return Err(EvalError::TooFewExamples { n, k });
    }
    Ok(())
}

/// Seeded permutation cut into `k` contiguous blocks; the first `n mod k`
/// blocks get one extra element.
pub fn kfold_split(n: usize, k: usize, seed: u64) -> Result<FoldPlan, EvalError> {
    check_nk(n, k)?;
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (base, extra) = (n / k, n % k);
    let mut assignments = vec![0; n];
    let mut pos = 0;
    for fold in 0..k {
        let size = base + usize::from(fold < extra);
        for &i in &perm[pos..pos + size] {
            assignments[i] = fold;
        }
        pos += size;
    }
    Ok(FoldPlan { k, assignments, seed })
}

/// Each class is shuffled separately, then the classes are dealt round-robin
/// across folds, so every fold gets a near-equal share of each class and fold
/// sizes still differ by at most one.
pub fn stratified_kfold_split(labels: &[bool], k: usize, seed: u64) -> Result<FoldPlan, EvalError> {
    check_nk(labels.len(), k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order = Vec::with_capacity(labels.len());
    for class in [true, false] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        order.extend(idx);
    }
    let mut assignments = vec![0; labels.len()];
    for (pos, &i) in order.iter().enumerate() {
        assignments[i] = pos % k;
    }
    Ok(FoldPlan { k, assignments, seed })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Degenerate denominators give 0.
fn ratio(num: usize, den: usize) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

fn class_metrics(tp: usize, fp: usize, fn_: usize) -> (ClassMetrics, bool) {
    let (precision, d1) = ratio(tp, tp + fp);
    let (recall, d2) = ratio(tp, tp + fn_);
    let (f1, d3) = if precision + recall == 0.0 {
        (0.0, true)
    } else {
        (2.0 * precision * recall / (precision + recall), false)
    };
    (ClassMetrics { precision, recall, f1 }, d1 || d2 || d3)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricsRow {
    pub positive: ClassMetrics,
    pub negative: ClassMetrics,
    pub accuracy: f64,
}

impl MetricsRow {
    pub fn values(&self) -> [f64; 7] {
        [
            self.positive.precision,
            self.positive.recall,
            self.positive.f1,
            self.negative.precision,
            self.negative.recall,
            self.negative.f1,
            self.accuracy,
        ]
    }

    fn from_values(v: [f64; 7]) -> Self {
        MetricsRow {
            positive: ClassMetrics { precision: v[0], recall: v[1], f1: v[2] },
            negative: ClassMetrics { precision: v[3], recall: v[4], f1: v[5] },
            accuracy: v[6],
        }
    }

    /// Arithmetic mean of the rows, metric by metric.
    pub fn mean(rows: &[MetricsRow]) -> MetricsRow {
        let mut acc = [0.0; 7];
        for r in rows {
            for (a, v) in acc.iter_mut().zip(r.values()) {
                *a += v;
            }
        }
        let n = rows.len().max(1) as f64;
        MetricsRow::from_values(acc.map(|a| a / n))
    }
}

pub const METRIC_LABELS: [(&str, &str); 7] = [
    ("Positive", "Precision"),
    ("", "Recall"),
    ("", "F1"),
    ("Negative", "Precision"),
    ("", "Recall"),
    ("", "F1"),
    ("", "Accuracy"),
];

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Metrics {
    pub confusion: Confusion,
    pub row: MetricsRow,
    /// Some denominator was zero and its metric was set to 0.
    pub degenerate: bool,
}

pub fn confusion(predictions: &[bool], truths: &[bool]) -> Confusion {
    let mut c = Confusion::default();
    for (&p, &t) in predictions.iter().zip(truths) {
        match (p, t) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    c
}

pub fn metrics_from_confusion(c: Confusion) -> Metrics {
    let (positive, d1) = class_metrics(c.tp, c.fp, c.fn_);
    let (negative, d2) = class_metrics(c.tn, c.fn_, c.fp);
    let (accuracy, _) = ratio(c.tp + c.tn, c.total());
    Metrics { confusion: c, row: MetricsRow { positive, negative, accuracy }, degenerate: d1 || d2 }
}

pub fn metrics(predictions: &[bool], truths: &[bool]) -> Result<Metrics, EvalError> {
    if predictions.len() != truths.len() || predictions.is_empty() {
        return Err(EvalError::Length { predictions: predictions.len(), truths: truths.len() });
    }
    Ok(metrics_from_confusion(confusion(predictions, truths)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldResult {
    pub fold: usize,
    pub seed: u64,
    pub train_size: usize,
    pub test_size: usize,
    pub metrics: Metrics,
    /// Dataset indices that fed the fold's model.
    pub source_indices: BTreeSet<usize>,
    pub test_indices: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub k: usize,
    pub seed: u64,
    pub stratified: bool,
    pub folds: Vec<FoldResult>,
    pub mean: MetricsRow,
}

fn run_fold(
    dataset: &[(NormalizedMessage, bool)],
    trainer: &dyn Trainer,
    plan: &FoldPlan,
    fold: usize,
    seed: u64,
) -> Result<FoldResult, EvalError> {
    let train_idx = plan.train_indices(fold);
    let test_idx = plan.test_indices(fold);
    let train: Vec<(NormalizedMessage, bool)> = train_idx.iter().map(|&i| dataset[i].clone()).collect();
    if train.iter().all(|(_, l)| *l) || train.iter().all(|(_, l)| !*l) {
        return Err(EvalError::SingleClassFold { fold });
    }
    let fold_seed = seed.wrapping_add(fold as u64);
    let fitted = trainer.fit(&train, fold_seed).map_err(|source| match source {
        ClassifyError::SingleClass(_) => EvalError::SingleClassFold { fold },
        source => EvalError::Train { fold, source },
    })?;
    let bad: Vec<usize> = fitted.source_indices.iter().copied().filter(|&i| i >= train_idx.len()).collect();
    if !bad.is_empty() {
        return Err(EvalError::Leak { fold, indices: bad });
    }
    let source_indices: BTreeSet<usize> = fitted.source_indices.iter().map(|&i| train_idx[i]).collect();
    let leaked: Vec<usize> = test_idx.iter().copied().filter(|i| source_indices.contains(i)).collect();
    if !leaked.is_empty() {
        return Err(EvalError::Leak { fold, indices: leaked });
    }
    let preds: Vec<bool> = test_idx.iter().map(|&i| fitted.model.predict(&dataset[i].0).label).collect();
    let truths: Vec<bool> = test_idx.iter().map(|&i| dataset[i].1).collect();
    Ok(FoldResult {
        fold,
        seed: fold_seed,
        train_size: train_idx.len(),
        test_size: test_idx.len(),
        metrics: metrics(&preds, &truths)?,
        source_indices,
        test_indices: test_idx,
    })
}

/// Trains on `k − 1` folds and tests on the held-out one, for every fold.
///
/// Fold `f` trains with seed `seed + f`. Folds run on separate threads; the
/// result is independent of scheduling.
pub fn cross_validate(
    dataset: &[(NormalizedMessage, bool)],
    trainer: &dyn Trainer,
    k: usize,
    seed: u64,
    stratify: bool,
) -> Result<EvalReport, EvalError> {
    let labels: Vec<bool> = dataset.iter().map(|(_, l)| *l).collect();
    let plan = if stratify { stratified_kfold_split(&labels, k, seed)? } else { kfold_split(dataset.len(), k, seed)? };
    let results: Vec<Result<FoldResult, EvalError>> = thread::scope(|s| {
        let handles: Vec<_> = (0..k).map(|f| {
            let plan = &plan;
            s.spawn(move || run_fold(dataset, trainer, plan, f, seed))
        }).collect();
        handles.into_iter().map(|h| h.join().expect("fold thread panicked")).collect()
    });
    let folds = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let rows: Vec<MetricsRow> = folds.iter().map(|f| f.metrics.row).collect();
    Ok(EvalReport { k, seed, stratified: stratify, mean: MetricsRow::mean(&rows), folds })
}

fn pct(x: f64) -> String {
    format!("{:.2}", 100.0 * x)
}

/// Aligned table of metric rows (in percent), one column per entry.
pub fn render_columns(columns: &[(&str, MetricsRow)]) -> String {
    let mut out = String::new();
    let w = columns.iter().map(|(h, _)| h.len()).max().unwrap_or(0).max(7);
    let _ = write!(out, "{:<9} {:<10}", "", "Metric");
    for (h, _) in columns {
        let _ = write!(out, " {h:>w$}");
    }
    out.push('\n');
    for (r, (group, name)) in METRIC_LABELS.iter().enumerate() {
        let _ = write!(out, "{group:<9} {name:<10}");
        for (_, row) in columns {
            let _ = write!(out, " {:>w$}", pct(row.values()[r]));
        }
        out.push('\n');
    }
    out
}

impl EvalReport {
    pub fn render_text(&self) -> String {
        let names: Vec<String> = self.folds.iter().map(|f| format!("fold{}", f.fold + 1)).collect();
        let mut cols: Vec<(&str, MetricsRow)> =
            self.folds.iter().zip(&names).map(|(f, n)| (n.as_str(), f.metrics.row)).collect();
        cols.push(("mean", self.mean));
        let mut out = render_columns(&cols);
        out.push('\n');
        for f in &self.folds {
            let c = f.metrics.confusion;
            let _ = writeln!(out, "fold{:<3} TP={} FP={} FN={} TN={}", f.fold + 1, c.tp, c.fp, c.fn_, c.tn);
        }
        if self.folds.iter().any(|f| f.metrics.degenerate) {
            out.push_str("* some folds had a zero denominator; those metrics are reported as 0\n");
        }
        out
    }
}
