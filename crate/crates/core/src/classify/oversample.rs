//! Minority-class oversampling: random duplication, SMOTE and ADASYN.
//!
//! All three keep the original examples first, in order, followed by the
//! generated ones. Each output item records its [`Origin`] so callers can
//! trace every synthetic example back to the training indices it came from.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ClassifyError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Origin {
    Original(usize),
    Duplicate(usize),
    /// `base + lambda · (neighbor − base)`
    Synthetic { base: usize, neighbor: usize, lambda: f64 },
}

impl Origin {
    pub fn parents(&self) -> Vec<usize> {
        match *self {
            Origin::Original(i) | Origin::Duplicate(i) => vec![i],
            Origin::Synthetic { base, neighbor, .. } => vec![base, neighbor],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Resampled<T> {
    pub items: Vec<T>,
    pub labels: Vec<bool>,
    pub origins: Vec<Origin>,
}

impl<T> Resampled<T> {
    pub fn count(&self, label: bool) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }
}

struct Split {
    minority_label: bool,
    minority: Vec<usize>,
    majority: usize,
}

fn split(labels: &[bool]) -> Result<Split, ClassifyError> {
    let pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i]).collect();
    let neg: Vec<usize> = (0..labels.len()).filter(|&i| !labels[i]).collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(ClassifyError::SingleClass(labels.len()));
    }
    Ok(if pos.len() <= neg.len() {
        Split { minority_label: true, majority: neg.len(), minority: pos }
    } else {
        Split { minority_label: false, majority: pos.len(), minority: neg }
    })
}

fn originals<T: Clone>(items: &[T], labels: &[bool]) -> Resampled<T> {
    Resampled {
        items: items.to_vec(),
        labels: labels.to_vec(),
        origins: (0..items.len()).map(Origin::Original).collect(),
    }
}

/// Duplicates random minority examples until both classes are equal.
pub fn random_oversample<T: Clone>(items: &[T], labels: &[bool], seed: u64) -> Result<Resampled<T>, ClassifyError> {
    let s = split(labels)?;
    let mut out = originals(items, labels);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..s.majority - s.minority.len() {
        let &i = s.minority.choose(&mut rng).expect("minority non-empty");
        out.items.push(items[i].clone());
        out.labels.push(s.minority_label);
        out.origins.push(Origin::Duplicate(i));
    }
    Ok(out)
}

/// `x + lambda · (neighbor − x)`
pub fn smote_point(x: &[f64], neighbor: &[f64], lambda: f64) -> Vec<f64> {
    x.iter().zip(neighbor).map(|(a, b)| a + lambda * (b - a)).collect()
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// The `k` nearest of `candidates` to `vectors[of]`, excluding itself, ties
/// broken by index.
fn nearest(vectors: &[Vec<f64>], of: usize, candidates: &[usize], k: usize) -> Vec<usize> {
    let mut d: Vec<(f64, usize)> = candidates
        .iter()
        .filter(|&&c| c != of)
        .map(|&c| (sq_dist(&vectors[of], &vectors[c]), c))
        .collect();
    d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    d.into_iter().take(k).map(|(_, c)| c).collect()
}

fn check_k(minority: usize, k: usize) -> Result<(), ClassifyError> {
    if k == 0 || minority <= k {
        return Err(ClassifyError::TooFewMinority { minority, k });
    }
    Ok(())
}

fn push_synthetic(
    out: &mut Resampled<Vec<f64>>,
    vectors: &[Vec<f64>],
    base: usize,
    neighbors: &[usize],
    label: bool,
    rng: &mut ChaCha8Rng,
) {
    let &neighbor = neighbors.choose(rng).expect("k >= 1 neighbours");
    let lambda: f64 = rng.gen_range(0.0..=1.0);
    out.items.push(smote_point(&vectors[base], &vectors[neighbor], lambda));
    out.labels.push(label);
    out.origins.push(Origin::Synthetic { base, neighbor, lambda });
}

/// SMOTE: interpolates between a random minority point and one of its `k`
/// nearest minority neighbours until both classes are equal.
pub fn smote(vectors: &[Vec<f64>], labels: &[bool], k: usize, seed: u64) -> Result<Resampled<Vec<f64>>, ClassifyError> {
    let s = split(labels)?;
    let mut out = originals(vectors, labels);
    let needed = s.majority - s.minority.len();
    if needed == 0 {
        return Ok(out);
    }
    check_k(s.minority.len(), k)?;
    let neighbors: Vec<Vec<usize>> = s.minority.iter().map(|&i| nearest(vectors, i, &s.minority, k)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..needed {
        let m = rng.gen_range(0..s.minority.len());
        push_synthetic(&mut out, vectors, s.minority[m], &neighbors[m], s.minority_label, &mut rng);
    }
    Ok(out)
}

/// Per-point synthetic counts `round(total · r_i / Σ r)`; all zero when every
/// ratio is zero.
pub fn adasyn_allocation(ratios: &[f64], total: f64) -> Vec<usize> {
    let sum: f64 = ratios.iter().sum();
    if sum <= 0.0 {
        return vec![0; ratios.len()];
    }
    ratios.iter().map(|r| (total * r / sum).round() as usize).collect()
}

/// ADASYN: like SMOTE, but minority points surrounded by more majority
/// neighbours get proportionally more synthetic samples. `beta` in (0, 1]
/// sets the target balance level.
pub fn adasyn(
    vectors: &[Vec<f64>],
    labels: &[bool],
    k: usize,
    seed: u64,
    beta: f64,
) -> Result<Resampled<Vec<f64>>, ClassifyError> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(ClassifyError::Config(format!("ADASYN beta {beta} not in (0, 1]")));
    }
    let s = split(labels)?;
    let mut out = originals(vectors, labels);
    let gap = s.majority - s.minority.len();
    if gap == 0 {
        return Ok(out);
    }
    check_k(s.minority.len(), k)?;
    let everyone: Vec<usize> = (0..vectors.len()).collect();
    let ratios: Vec<f64> = s
        .minority
        .iter()
        .map(|&i| {
            let hood = nearest(vectors, i, &everyone, k);
            hood.iter().filter(|&&j| labels[j] != s.minority_label).count() as f64 / k as f64
        })
        .collect();
    let counts = adasyn_allocation(&ratios, beta * gap as f64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (m, &g) in counts.iter().enumerate() {
        if g == 0 {
            continue;
        }
        let neighbors = nearest(vectors, s.minority[m], &s.minority, k);
        for _ in 0..g {
            push_synthetic(&mut out, vectors, s.minority[m], &neighbors, s.minority_label, &mut rng);
        }
    }
    Ok(out)
}
