//! The nine dataset statistics, grouped by reliability, difficulty and
//! validity. Every kernel is a pure function of its inputs.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, DatasetBundle, EntitySet, SplitKind};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("{0} split is empty")]
    EmptyCorpus(SplitKind),
    #[error("{0} split is required")]
    MissingSplit(SplitKind),
    #[error("{0} split has no entity mentions")]
    NoEntities(SplitKind),
    #[error("at least 2 model scores are required, got {0}")]
    InsufficientScores(usize),
    #[error("model score {0} is not finite")]
    NonFiniteScore(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    HigherBetter,
    LowerBetter,
}

impl Direction {
    pub fn arrow(self) -> char {
        match self {
            Direction::HigherBetter => '↑',
            Direction::LowerBetter => '↓',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dimension {
    Reliability,
    Difficulty,
    Validity,
}

/// Metric identifiers, declared in report column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Metric {
    Red,
    Acc,
    LeakR,
    UnSeenEnR,
    EnAmb,
    EnDen,
    ModDiff,
    EnImBaD,
    EnNullR,
}

impl Metric {
    pub const ALL: [Metric; 9] = [
        Metric::Red,
        Metric::Acc,
        Metric::LeakR,
        Metric::UnSeenEnR,
        Metric::EnAmb,
        Metric::EnDen,
        Metric::ModDiff,
        Metric::EnImBaD,
        Metric::EnNullR,
    ];

    pub fn abbreviation(self) -> &'static str {
        match self {
            Metric::Red => "Red",
            Metric::Acc => "Acc",
            Metric::LeakR => "LeakR",
            Metric::UnSeenEnR => "UnSeenEnR",
            Metric::EnAmb => "EnAmb",
            Metric::EnDen => "EnDen",
            Metric::ModDiff => "ModDiff",
            Metric::EnImBaD => "EnImBaD",
            Metric::EnNullR => "EnNullR",
        }
    }

    pub fn full_name(self) -> &'static str {
        match self {
            Metric::Red => "Redundancy",
            Metric::Acc => "Accuracy",
            Metric::LeakR => "Leakage Ratio",
            Metric::UnSeenEnR => "Unseen Entity Ratio",
            Metric::EnAmb => "Entity Ambiguity Degree",
            Metric::EnDen => "Entity Density",
            Metric::ModDiff => "Model Differentiation",
            Metric::EnImBaD => "Entity Imbalance Degree",
            Metric::EnNullR => "Entity-Null Rate",
        }
    }

    pub fn direction(self) -> Direction {
        match self {
            Metric::Red | Metric::LeakR | Metric::EnImBaD | Metric::EnNullR => Direction::LowerBetter,
            _ => Direction::HigherBetter,
        }
    }

    pub fn dimension(self) -> Dimension {
        match self {
            Metric::Red | Metric::Acc | Metric::LeakR => Dimension::Reliability,
            Metric::UnSeenEnR | Metric::EnAmb | Metric::EnDen | Metric::ModDiff => Dimension::Difficulty,
            Metric::EnImBaD | Metric::EnNullR => Dimension::Validity,
        }
    }

    /// Ratio metrics live in [0, 1]; the rest are standard deviations.
    pub fn is_ratio(self) -> bool {
        !matches!(self, Metric::ModDiff | Metric::EnImBaD)
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.abbreviation())
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Metric::ALL
            .into_iter()
            .find(|m| m.abbreviation().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown metric `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricValue {
    pub metric: Metric,
    pub value: f64,
    /// Splits the value was computed from.
    pub scope: Vec<SplitKind>,
}

impl MetricValue {
    pub fn new(metric: Metric, value: f64, scope: Vec<SplitKind>) -> Self {
        MetricValue { metric, value, scope }
    }

    pub fn direction(&self) -> Direction {
        self.metric.direction()
    }
}

fn non_empty(corpus: &Corpus) -> Result<(), MetricError> {
    if corpus.is_empty() {
        Err(MetricError::EmptyCorpus(corpus.split()))
    } else {
        Ok(())
    }
}

fn require(bundle: &DatasetBundle, split: SplitKind) -> Result<&Corpus, MetricError> {
    bundle.get(split).ok_or(MetricError::MissingSplit(split))
}

/// Population standard deviation (divides by the number of values).
pub fn population_std(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / k;
    var.sqrt()
}

/// Share of instances that repeat an earlier (tokens, labels) pair: `(n - unique) / n`.
pub fn redundancy(corpus: &Corpus) -> Result<MetricValue, MetricError> {
    non_empty(corpus)?;
    let unique: HashSet<_> = corpus.instances().iter().map(|i| i.key()).collect();
    let n = corpus.len();
    let value = (n - unique.len()) as f64 / n as f64;
    Ok(MetricValue::new(Metric::Red, value, vec![corpus.split()]))
}

/// Share of test instances that occur verbatim in train or dev.
pub fn leakage_ratio(bundle: &DatasetBundle) -> Result<MetricValue, MetricError> {
    let test = require(bundle, SplitKind::Test)?;
    let references: Vec<&Corpus> = std::iter::once(bundle.train()).chain(bundle.dev()).collect();
    let value = leakage_against(test, &references)?;
    let mut scope: Vec<SplitKind> = references.iter().map(|c| c.split()).collect();
    scope.push(SplitKind::Test);
    Ok(MetricValue::new(Metric::LeakR, value, scope))
}

/// Share of `corpus` instances that occur verbatim in any of `references`.
pub fn leakage_against(corpus: &Corpus, references: &[&Corpus]) -> Result<f64, MetricError> {
    non_empty(corpus)?;
    let seen = instance_keys(references);
    let leaked = corpus.instances().iter().filter(|i| seen.contains(&i.key())).count();
    Ok(leaked as f64 / corpus.len() as f64)
}

pub(crate) fn instance_keys<'a>(corpora: &[&'a Corpus]) -> HashSet<(&'a [String], &'a [String])> {
    corpora
        .iter()
        .flat_map(|c| c.instances().iter().map(|i| i.key()))
        .collect()
}

/// `|e(test) \ e(train)| / |e(test)|` over unique surfaces.
pub fn unseen_entity_ratio(bundle: &DatasetBundle) -> Result<MetricValue, MetricError> {
    let test = require(bundle, SplitKind::Test)?;
    let test_set = test.entity_set();
    if test_set.is_empty() {
        return Err(MetricError::NoEntities(SplitKind::Test));
    }
    let train_set = bundle.train().entity_set();
    let value = test_set.difference_len(&train_set) as f64 / test_set.len() as f64;
    Ok(MetricValue::new(
        Metric::UnSeenEnR,
        value,
        vec![SplitKind::Train, SplitKind::Test],
    ))
}

/// Share of mention occurrences in `corpus` whose surface is absent from `seen`.
/// `None` when the corpus has no mentions.
pub fn unseen_mention_ratio(corpus: &Corpus, seen: &EntitySet) -> Option<f64> {
    mention_ratio(corpus, |surface| !seen.contains(surface))
}

/// Share of mention occurrences in `corpus` whose surface is in `conflicts`.
pub fn ambiguous_mention_ratio(corpus: &Corpus, conflicts: &BTreeSet<String>) -> Option<f64> {
    mention_ratio(corpus, |surface| conflicts.contains(surface))
}

fn mention_ratio(corpus: &Corpus, positive: impl Fn(&str) -> bool) -> Option<f64> {
    let (mut hits, mut total) = (0usize, 0usize);
    for m in corpus.all_mentions() {
        total += 1;
        if positive(&m.surface) {
            hits += 1;
        }
    }
    (total > 0).then(|| hits as f64 / total as f64)
}

/// Surfaces labeled with at least two distinct entity types.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct ConflictStats {
    pub conflicting_surfaces: BTreeSet<String>,
    pub ambiguous_mentions: usize,
    pub total_mentions: usize,
    pub unique_surfaces: usize,
}

impl ConflictStats {
    /// Number of conflicting surfaces.
    pub fn conflict_count(&self) -> usize {
        self.conflicting_surfaces.len()
    }

    pub fn ambiguous_mention_ratio(&self) -> f64 {
        if self.total_mentions == 0 {
            0.0
        } else {
            self.ambiguous_mentions as f64 / self.total_mentions as f64
        }
    }

    /// `1 - conflicts / n` for a dataset of `instances` instances, the
    /// instance-normalized variant of the degree.
    pub fn complement_conflict_rate(&self, instances: usize) -> f64 {
        1.0 - self.conflict_count() as f64 / instances as f64
    }
}

/// Surfaces that carry two or more types anywhere across `corpora`.
pub fn conflicting_surfaces<'a>(corpora: impl IntoIterator<Item = &'a Corpus>) -> BTreeSet<String> {
    let mut types: HashMap<String, BTreeSet<String>> = HashMap::new();
    for corpus in corpora {
        for m in corpus.all_mentions() {
            types.entry(m.surface).or_default().insert(m.etype);
        }
    }
    types
        .into_iter()
        .filter(|(_, t)| t.len() >= 2)
        .map(|(s, _)| s)
        .collect()
}

/// Primary value is the ambiguous-mention ratio; the conflict set rides along.
pub fn entity_ambiguity(corpus: &Corpus) -> Result<(MetricValue, ConflictStats), MetricError> {
    let mut types: HashMap<String, BTreeSet<String>> = HashMap::new();
    let mut occurrences: HashMap<String, usize> = HashMap::new();
    let mut total = 0;
    for m in corpus.all_mentions() {
        total += 1;
        *occurrences.entry(m.surface.clone()).or_default() += 1;
        types.entry(m.surface).or_default().insert(m.etype);
    }
    if total == 0 {
        return Err(MetricError::NoEntities(corpus.split()));
    }
    let conflicting_surfaces: BTreeSet<String> = types
        .iter()
        .filter(|(_, t)| t.len() >= 2)
        .map(|(s, _)| s.clone())
        .collect();
    let ambiguous_mentions = conflicting_surfaces.iter().map(|s| occurrences[s]).sum();
    let stats = ConflictStats {
        conflicting_surfaces,
        ambiguous_mentions,
        total_mentions: total,
        unique_surfaces: types.len(),
    };
    let value = MetricValue::new(Metric::EnAmb, stats.ambiguous_mention_ratio(), vec![corpus.split()]);
    Ok((value, stats))
}

/// Mean over instances of mentions per token.
pub fn entity_density(corpus: &Corpus) -> Result<MetricValue, MetricError> {
    non_empty(corpus)?;
    let n = corpus.len() as f64;
    let sum: f64 = corpus
        .instances()
        .iter()
        .map(|i| i.mention_count() as f64 / i.len() as f64)
        .sum();
    Ok(MetricValue::new(Metric::EnDen, sum / n, vec![corpus.split()]))
}

/// Scores (typically F1) of at least two models on one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelScores(Vec<f64>);

impl ModelScores {
    pub fn new(scores: Vec<f64>) -> Result<Self, MetricError> {
        if scores.len() < 2 {
            return Err(MetricError::InsufficientScores(scores.len()));
        }
        if let Some(&bad) = scores.iter().find(|s| !s.is_finite()) {
            return Err(MetricError::NonFiniteScore(bad));
        }
        Ok(ModelScores(scores))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl FromStr for ModelScores {
    type Err = String;

    /// Comma-separated list, e.g. `90,92,94`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let scores = s
            .split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|e| format!("bad score `{p}`: {e}")))
            .collect::<Result<Vec<_>, _>>()?;
        ModelScores::new(scores).map_err(|e| e.to_string())
    }
}

pub fn model_differentiation(scores: &ModelScores) -> MetricValue {
    MetricValue::new(Metric::ModDiff, population_std(scores.as_slice()), Vec::new())
}

/// Probability of each entity type over mention occurrences.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TypeDistribution {
    pub probs: BTreeMap<String, f64>,
}

pub fn entity_imbalance(corpus: &Corpus) -> Result<(MetricValue, TypeDistribution), MetricError> {
    let mut counts: BTreeMap<String, usize> = corpus.type_inventory().iter().map(|t| (t.clone(), 0)).collect();
    let mut total = 0usize;
    for inst in corpus.instances() {
        for (_, _, etype) in inst.spans() {
            total += 1;
            *counts.entry(etype.to_owned()).or_default() += 1;
        }
    }
    if total == 0 {
        return Err(MetricError::NoEntities(corpus.split()));
    }
    let probs: BTreeMap<String, f64> = counts.into_iter().map(|(t, c)| (t, c as f64 / total as f64)).collect();
    let values: Vec<f64> = probs.values().copied().collect();
    let value = MetricValue::new(Metric::EnImBaD, population_std(&values), vec![corpus.split()]);
    Ok((value, TypeDistribution { probs }))
}

/// Share of instances without any entity mention.
pub fn entity_null_rate(corpus: &Corpus) -> Result<MetricValue, MetricError> {
    non_empty(corpus)?;
    let null = corpus.instances().iter().filter(|i| !i.has_entity()).count();
    Ok(MetricValue::new(
        Metric::EnNullR,
        null as f64 / corpus.len() as f64,
        vec![corpus.split()],
    ))
}
