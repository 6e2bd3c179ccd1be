//! Why/What expression categories and maintenance activities for annotated
//! messages, plus the category-by-maintenance cross-tab.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::QualityLabel;

pub const MAX_TAGS_PER_DIMENSION: usize = 2;

#[derive(Debug, Error, PartialEq)]
pub enum TaxonomyError {
    #[error("annotations without a maintenance type: {}", .0.join(", "))]
    MissingMaintenance(Vec<String>),
    #[error("invalid annotation {sha}: {}", .violations.join("; "))]
    Invalid { sha: String, violations: Vec<String> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum WhyCategory {
    DescribeIssue,
    IllustrateRequirement,
    DescribeObjective,
    ImplyNecessity,
    MissingWhy,
}

impl WhyCategory {
    pub const ALL: [WhyCategory; 5] = [
        WhyCategory::DescribeIssue,
        WhyCategory::IllustrateRequirement,
        WhyCategory::DescribeObjective,
        WhyCategory::ImplyNecessity,
        WhyCategory::MissingWhy,
    ];

    pub fn title(self) -> &'static str {
        match self {
            WhyCategory::DescribeIssue => "Describe issue",
            WhyCategory::IllustrateRequirement => "Illustrate requirement",
            WhyCategory::DescribeObjective => "Describe objective",
            WhyCategory::ImplyNecessity => "Imply necessity",
            WhyCategory::MissingWhy => "Missing Why",
        }
    }
}

/// One of the 18 Why subcategories, written as its code (`DI1`, `MW5`, ...).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WhySubcategory {
    pub category: WhyCategory,
    pub number: u8,
}

const WHY_CODES: [(&str, WhyCategory, u8, &str); 5] = [
    ("DI", WhyCategory::DescribeIssue, 3, "error scenario, issue report, shortcoming"),
    ("IR", WhyCategory::IllustrateRequirement, 3, "usage need, out of date, environment change"),
    ("DO", WhyCategory::DescribeObjective, 2, "fix defects, make improvements"),
    ("IN", WhyCategory::ImplyNecessity, 4, "conventions, prior commits, implemented feature, benefits"),
    ("MW", WhyCategory::MissingWhy, 6, "tests, typos, text files, annotations, refactoring, versions"),
];

impl WhySubcategory {
    pub fn all() -> Vec<WhySubcategory> {
        WHY_CODES
            .iter()
            .flat_map(|&(_, category, n, _)| (1..=n).map(move |number| WhySubcategory { category, number }))
            .collect()
    }

    pub fn code(self) -> String {
        let prefix = WHY_CODES.iter().find(|c| c.1 == self.category).map(|c| c.0).unwrap_or("?");
        format!("{prefix}{}", self.number)
    }
}

impl FromStr for WhySubcategory {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let upper = s.trim().to_ascii_uppercase();
        for &(prefix, category, max, _) in &WHY_CODES {
            if let Some(num) = upper.strip_prefix(prefix) {
                if let Ok(number) = num.parse::<u8>() {
                    if (1..=max).contains(&number) {
                        return Ok(WhySubcategory { category, number });
                    }
                }
            }
        }
        Err(format!("unknown why subcategory {s:?}"))
    }
}

impl fmt::Display for WhySubcategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.code())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum WhatCategory {
    /// SC1 characteristics, SC2 object of change, SC3 change list, SC4 contrast.
    SummarizeCodeObjectChange(u8),
    DescribeImplementationPrinciple,
    IllustrateFunction,
    MissingWhat,
}

/// Main What category, ignoring the SC subcategory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum WhatGroup {
    SummarizeCodeObjectChange,
    IllustrateFunction,
    DescribeImplementationPrinciple,
    MissingWhat,
}

impl WhatGroup {
    pub fn title(self) -> &'static str {
        match self {
            WhatGroup::SummarizeCodeObjectChange => "Summarize code object change",
            WhatGroup::IllustrateFunction => "Illustrate function",
            WhatGroup::DescribeImplementationPrinciple => "Describe implementation principle",
            WhatGroup::MissingWhat => "Missing What",
        }
    }
}

impl WhatCategory {
    pub fn group(self) -> WhatGroup {
        match self {
            WhatCategory::SummarizeCodeObjectChange(_) => WhatGroup::SummarizeCodeObjectChange,
            WhatCategory::DescribeImplementationPrinciple => WhatGroup::DescribeImplementationPrinciple,
            WhatCategory::IllustrateFunction => WhatGroup::IllustrateFunction,
            WhatCategory::MissingWhat => WhatGroup::MissingWhat,
        }
    }

    pub fn code(self) -> String {
        match self {
            WhatCategory::SummarizeCodeObjectChange(n) => format!("SC{n}"),
            WhatCategory::DescribeImplementationPrinciple => "describe_implementation_principle".into(),
            WhatCategory::IllustrateFunction => "illustrate_function".into(),
            WhatCategory::MissingWhat => "missing_what".into(),
        }
    }
}

impl FromStr for WhatCategory {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        if let Some(n) = t.to_ascii_uppercase().strip_prefix("SC").and_then(|n| n.parse::<u8>().ok()) {
            if (1..=4).contains(&n) {
                return Ok(WhatCategory::SummarizeCodeObjectChange(n));
            }
        }
        match t.to_ascii_lowercase().as_str() {
            "describe_implementation_principle" => Ok(WhatCategory::DescribeImplementationPrinciple),
            "illustrate_function" => Ok(WhatCategory::IllustrateFunction),
            "missing_what" => Ok(WhatCategory::MissingWhat),
            _ => Err(format!("unknown what category {s:?}")),
        }
    }
}

impl fmt::Display for WhatCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.code())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaintenanceType {
    Corrective,
    Adaptive,
    Perfective,
}

impl MaintenanceType {
    pub const ALL: [MaintenanceType; 3] = [MaintenanceType::Corrective, MaintenanceType::Adaptive, MaintenanceType::Perfective];

    pub fn title(self) -> &'static str {
        match self {
            MaintenanceType::Corrective => "Corrective",
            MaintenanceType::Adaptive => "Adaptive",
            MaintenanceType::Perfective => "Perfective",
        }
    }
}

/// One line of an annotation file. Tags are kept as written so validation
/// can name unknown strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedMessage {
    pub sha: String,
    pub quality: QualityLabel,
    #[serde(default)]
    pub why_tags: Vec<String>,
    #[serde(default)]
    pub what_tags: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub maintenance: Option<MaintenanceType>,
}

impl AnnotatedMessage {
    pub fn why(&self) -> Result<Vec<WhySubcategory>, String> {
        self.why_tags.iter().map(|t| t.parse()).collect()
    }

    pub fn what(&self) -> Result<Vec<WhatCategory>, String> {
        self.what_tags.iter().map(|t| t.parse()).collect()
    }
}

/// All problems with a row, or `Ok` when there are none.
pub fn validate_annotation(row: &AnnotatedMessage) -> Result<(), Vec<String>> {
    let mut v = Vec::new();
    if row.why_tags.len() > MAX_TAGS_PER_DIMENSION {
        v.push(format!("too many why tags ({} > {MAX_TAGS_PER_DIMENSION})", row.why_tags.len()));
    }
    if row.what_tags.len() > MAX_TAGS_PER_DIMENSION {
        v.push(format!("too many what tags ({} > {MAX_TAGS_PER_DIMENSION})", row.what_tags.len()));
    }
    let mut why = Vec::new();
    for t in &row.why_tags {
        match t.parse::<WhySubcategory>() {
            Ok(s) => why.push(s),
            Err(e) => v.push(e),
        }
    }
    let mut what = Vec::new();
    for t in &row.what_tags {
        match t.parse::<WhatCategory>() {
            Ok(c) => what.push(c),
            Err(e) => v.push(e),
        }
    }
    if why.iter().collect::<BTreeSet<_>>().len() < why.len() {
        v.push("duplicate why tag".into());
    }
    if what.iter().collect::<BTreeSet<_>>().len() < what.len() {
        v.push("duplicate what tag".into());
    }
    if why.iter().any(|s| s.category == WhyCategory::MissingWhy) && !row.quality.missing_why() {
        v.push(format!("missing-why tag on a message labeled {}", row.quality));
    }
    if what.contains(&WhatCategory::MissingWhat) && !row.quality.missing_what() {
        v.push(format!("missing-what tag on a message labeled {}", row.quality));
    }
    if v.is_empty() {
        Ok(())
    } else {
        Err(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    Why,
    What,
}

impl FromStr for Dimension {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "why" => Ok(Dimension::Why),
            "what" => Ok(Dimension::What),
            _ => Err(format!("unknown dimension {s:?}; expected why or what")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrosstabRow {
    /// Category title, or titles joined by " & " for combined rows.
    pub category: String,
    pub counts: [usize; 3],
    pub percentages: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Crosstab {
    pub dimension: Dimension,
    /// Messages per maintenance type: corrective, adaptive, perfective.
    pub column_totals: [usize; 3],
    pub rows: Vec<CrosstabRow>,
}

/// Row key: main categories of a message's tags, in category order. Messages
/// with no tag in the dimension are left out.
fn row_key(row: &AnnotatedMessage, dimension: Dimension) -> Result<Option<(Vec<u8>, String)>, String> {
    let (ranks, titles): (Vec<u8>, Vec<&str>) = match dimension {
        Dimension::Why => {
            let set: BTreeSet<WhyCategory> = row.why()?.into_iter().map(|s| s.category).collect();
            set.into_iter().map(|c| (c as u8, c.title())).unzip()
        }
        Dimension::What => {
            let set: BTreeSet<WhatGroup> = row.what()?.into_iter().map(WhatCategory::group).collect();
            set.into_iter().map(|c| (c as u8, c.title())).unzip()
        }
    };
    if ranks.is_empty() {
        return Ok(None);
    }
    Ok(Some((ranks, titles.join(" & "))))
}

/// Column-normalized percentages of expression categories per maintenance
/// type. Single categories come first, then combined ones.
pub fn crosstab(annotations: &[AnnotatedMessage], dimension: Dimension) -> Result<Crosstab, TaxonomyError> {
    let missing: Vec<String> = annotations.iter().filter(|a| a.maintenance.is_none()).map(|a| a.sha.clone()).collect();
    if !missing.is_empty() {
        return Err(TaxonomyError::MissingMaintenance(missing));
    }
    let mut counts: BTreeMap<(usize, Vec<u8>), (String, [usize; 3])> = BTreeMap::new();
    let mut totals = [0usize; 3];
    for a in annotations {
        validate_annotation(a).map_err(|violations| TaxonomyError::Invalid { sha: a.sha.clone(), violations })?;
        let Some((ranks, title)) = row_key(a, dimension).expect("validated") else {
            continue;
        };
        let col = a.maintenance.expect("checked above") as usize;
        totals[col] += 1;
        counts.entry((ranks.len(), ranks)).or_insert_with(|| (title, [0; 3])).1[col] += 1;
    }
    let rows = counts
        .into_values()
        .map(|(category, c)| {
            let percentages = std::array::from_fn(|i| if totals[i] == 0 { 0.0 } else { 100.0 * c[i] as f64 / totals[i] as f64 });
            CrosstabRow { category, counts: c, percentages }
        })
        .collect();
    Ok(Crosstab { dimension, column_totals: totals, rows })
}

impl Crosstab {
    pub fn render_text(&self) -> String {
        let w = self.rows.iter().map(|r| r.category.len()).max().unwrap_or(0).max(8);
        let mut out = String::new();
        let _ = write!(out, "{:<w$}", "Category");
        for (m, n) in MaintenanceType::ALL.iter().zip(self.column_totals) {
            let _ = write!(out, " {:>16}", format!("{} (#{n})", m.title()));
        }
        out.push('\n');
        for r in &self.rows {
            let _ = write!(out, "{:<w$}", r.category);
            for p in r.percentages {
                let _ = write!(out, " {:>15.1}%", p);
            }
            out.push('\n');
        }
        let _ = write!(out, "{:<w$}", "Total");
        for i in 0..3 {
            let sum: f64 = self.rows.iter().map(|r| r.percentages[i]).sum();
            let _ = write!(out, " {:>15.1}%", sum);
        }
        out.push('\n');
        out
    }
}
