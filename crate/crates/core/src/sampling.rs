//! Sample sizing for clustered random sampling, sample drawing, and
//! Cohen's kappa for inter-rater agreement.

use std::collections::{BTreeSet, HashMap};

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::corpus::{Corpus, Provenance};

#[derive(Debug, Error, PartialEq)]
pub enum SamplingError {
    #[error("invalid sample spec: {0}")]
    InvalidSpec(String),
    #[error("cluster {cluster:?} has {available} records, plan asks for {planned}")]
    ClusterTooSmall { cluster: String, available: usize, planned: usize },
    #[error("plan names cluster {0:?} which is absent from the corpus")]
    UnknownCluster(String),
    #[error("no label pairs")]
    NoPairs,
    #[error("no clusters")]
    NoClusters,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleSpec {
    pub confidence_z: f64,
    pub margin_e: f64,
    pub proportion_p: f64,
}

impl Default for SampleSpec {
    /// 95% confidence, 5% margin, maximum-variance proportion.
    fn default() -> Self {
        SampleSpec { confidence_z: 1.96, margin_e: 0.05, proportion_p: 0.5 }
    }
}

impl SampleSpec {
    pub fn new(confidence_z: f64, margin_e: f64, proportion_p: f64) -> Result<Self, SamplingError> {
        let spec = SampleSpec { confidence_z, margin_e, proportion_p };
        spec.validate()?;
        Ok(spec)
    }

    /// Spec from a two-sided confidence level such as `0.95`. The common
    /// levels use their conventional z values (0.95 gives 1.96).
    pub fn from_confidence(confidence: f64, margin_e: f64) -> Result<Self, SamplingError> {
        if !(confidence > 0.0 && confidence < 1.0) {
            return Err(SamplingError::InvalidSpec(format!("confidence {confidence} not in (0,1)")));
        }
        let z = match confidence {
            c if (c - 0.90).abs() < 1e-12 => 1.645,
            c if (c - 0.95).abs() < 1e-12 => 1.96,
            c if (c - 0.99).abs() < 1e-12 => 2.576,
            c => Normal::standard().inverse_cdf(1.0 - (1.0 - c) / 2.0),
        };
        Self::new(z, margin_e, 0.5)
    }

    pub fn validate(&self) -> Result<(), SamplingError> {
        if !(self.confidence_z > 0.0 && self.confidence_z.is_finite()) {
            return Err(SamplingError::InvalidSpec(format!("z {} must be positive", self.confidence_z)));
        }
        for (name, v) in [("margin", self.margin_e), ("proportion", self.proportion_p)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(SamplingError::InvalidSpec(format!("{name} {v} not in (0,1)")));
            }
        }
        Ok(())
    }

    /// Sample size for an infinite population.
    pub fn base_size(&self) -> f64 {
        self.confidence_z.powi(2) * self.proportion_p * (1.0 - self.proportion_p) / self.margin_e.powi(2)
    }
}

/// Cochran's sample size with finite-population correction, rounded to the
/// nearest integer and clamped to `1..=population`.
pub fn cochran_sample_size(population: usize, spec: &SampleSpec) -> usize {
    if population == 0 {
        return 0;
    }
    let n0 = spec.base_size();
    let n = n0 / (1.0 + (n0 - 1.0) / population as f64);
    (n.round() as usize).clamp(1, population)
}

pub fn clustered_sample_plan(cluster_sizes: &[usize], spec: &SampleSpec) -> (Vec<usize>, usize) {
    let sizes: Vec<usize> = cluster_sizes.iter().map(|&n| cochran_sample_size(n, spec)).collect();
    let total = sizes.iter().sum();
    (sizes, total)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterPlan {
    pub cluster: String,
    pub population: usize,
    pub sample: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplePlan {
    pub clusters: Vec<ClusterPlan>,
    pub total: usize,
}

impl SamplePlan {
    /// Plans one cluster per `repo_id`, in order of first appearance.
    pub fn for_corpus(corpus: &Corpus, spec: &SampleSpec) -> Result<Self, SamplingError> {
        spec.validate()?;
        let mut order: Vec<String> = Vec::new();
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for r in &corpus.records {
            let c = counts.entry(r.repo_id.as_str()).or_insert(0);
            if *c == 0 {
                order.push(r.repo_id.clone());
            }
            *c += 1;
        }
        if order.is_empty() {
            return Err(SamplingError::NoClusters);
        }
        let clusters: Vec<ClusterPlan> = order
            .into_iter()
            .map(|cluster| {
                let population = counts[cluster.as_str()];
                ClusterPlan { sample: cochran_sample_size(population, spec), population, cluster }
            })
            .collect();
        let total = clusters.iter().map(|c| c.sample).sum();
        Ok(SamplePlan { clusters, total })
    }

    pub fn render(&self) -> String {
        let width = self.clusters.iter().map(|c| c.cluster.len()).max().unwrap_or(7).max(7);
        let mut out = format!("{:<width$}  {:>10}  {:>8}\n", "cluster", "population", "sample");
        for c in &self.clusters {
            out.push_str(&format!("{:<width$}  {:>10}  {:>8}\n", c.cluster, c.population, c.sample));
        }
        let population: usize = self.clusters.iter().map(|c| c.population).sum();
        out.push_str(&format!("{:<width$}  {:>10}  {:>8}\n", "total", population, self.total));
        out
    }
}

/// Uniform sampling without replacement inside each cluster. Sampled records
/// keep their corpus order.
pub fn draw_sample(corpus: &Corpus, plan: &SamplePlan, seed: u64) -> Result<Corpus, SamplingError> {
    let mut by_cluster: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, r) in corpus.records.iter().enumerate() {
        by_cluster.entry(r.repo_id.as_str()).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = BTreeSet::new();
    for c in &plan.clusters {
        let members = by_cluster
            .get(c.cluster.as_str())
            .ok_or_else(|| SamplingError::UnknownCluster(c.cluster.clone()))?;
        if members.len() < c.sample {
            return Err(SamplingError::ClusterTooSmall {
                cluster: c.cluster.clone(),
                available: members.len(),
                planned: c.sample,
            });
        }
        for pick in index::sample(&mut rng, members.len(), c.sample) {
            chosen.insert(members[pick]);
        }
    }
    let records = chosen.into_iter().map(|i| corpus.records[i].clone()).collect();
    Ok(Corpus { records, provenance: Provenance::Unknown })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelPair {
    pub item_id: String,
    pub rater_a: String,
    pub rater_b: String,
}

impl LabelPair {
    pub fn new(item_id: impl Into<String>, a: impl Into<String>, b: impl Into<String>) -> Self {
        LabelPair { item_id: item_id.into(), rater_a: a.into(), rater_b: b.into() }
    }
}

/// Cohen's kappa. When chance agreement is 1 the result is 1 if every pair
/// agrees and 0 otherwise.
pub fn cohen_kappa(pairs: &[LabelPair]) -> Result<f64, SamplingError> {
    if pairs.is_empty() {
        return Err(SamplingError::NoPairs);
    }
    let n = pairs.len() as f64;
    let mut marg_a: HashMap<&str, usize> = HashMap::new();
    let mut marg_b: HashMap<&str, usize> = HashMap::new();
    let mut agree = 0usize;
    for p in pairs {
        *marg_a.entry(&p.rater_a).or_insert(0) += 1;
        *marg_b.entry(&p.rater_b).or_insert(0) += 1;
        if p.rater_a == p.rater_b {
            agree += 1;
        }
    }
    let p_o = agree as f64 / n;
    let mut labels: Vec<&str> = marg_a.keys().copied().collect();
    labels.sort_unstable();
    let p_e: f64 = labels
        .iter()
        .map(|k| (marg_a[k] as f64 / n) * (marg_b.get(k).copied().unwrap_or(0) as f64 / n))
        .sum();
    if (1.0 - p_e).abs() < 1e-15 {
        return Ok(if agree == pairs.len() { 1.0 } else { 0.0 });
    }
    Ok((p_o - p_e) / (1.0 - p_e))
}
