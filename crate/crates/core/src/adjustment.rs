//! Controlled dataset variants: equal-size, disjoint subsets of one split
//! whose value on a single target metric is pinned to chosen ratios
//! (e.g. 80% vs. 20% unseen entities in two test sets).
//!
//! Instance-level targets (`leakage`, `ennullr`) are hit exactly by
//! counting. Mention-level targets (`unseen`, `ambiguity`) are approached
//! greedily and accepted within a tolerance. In both cases the achieved
//! ratios are measured again with the [`crate::metrics`] kernels before a
//! result is returned.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::canonical;
use crate::corpus::{Corpus, DatasetBundle, EntitySet, SplitKind};
use crate::metrics::{self, MetricError};

pub const DEFAULT_TARGETS: [f64; 2] = [0.8, 0.2];
pub const DEFAULT_TOLERANCE: f64 = 0.02;
/// Smallest subset size accepted from the greedy constructor.
pub const DEFAULT_MIN_SIZE: usize = 50;

const MAX_DENOMINATOR: usize = 10_000;
const AUDIT_SLACK: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum AdjustmentError {
    #[error("{0} split is required")]
    MissingSplit(SplitKind),
    #[error("invalid adjustment spec: {0}")]
    InvalidSpec(String),
    #[error("{operation} does not support target metric {metric}")]
    UnsupportedMetric {
        operation: &'static str,
        metric: TargetMetric,
    },
    #[error(
        "unreachable {metric} targets on {split}: positives={positives} negatives={negatives} \
         max_feasible_size={max_feasible} (minimum {min_size})"
    )]
    UnreachableTarget {
        metric: TargetMetric,
        split: SplitKind,
        positives: usize,
        negatives: usize,
        max_feasible: usize,
        min_size: usize,
    },
    #[error("achieved {achieved} misses target {target} by more than {tolerance}")]
    AuditFailed { target: f64, achieved: f64, tolerance: f64 },
    #[error(transparent)]
    Metric(#[from] MetricError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetMetric {
    Unseen,
    Ambiguity,
    Leakage,
    EnNullR,
}

impl TargetMetric {
    pub fn as_str(self) -> &'static str {
        match self {
            TargetMetric::Unseen => "unseen",
            TargetMetric::Ambiguity => "ambiguity",
            TargetMetric::Leakage => "leakage",
            TargetMetric::EnNullR => "ennullr",
        }
    }

    /// Whether the target ratio counts mentions rather than instances.
    pub fn mention_level(self) -> bool {
        matches!(self, TargetMetric::Unseen | TargetMetric::Ambiguity)
    }
}

impl fmt::Display for TargetMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TargetMetric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "unseen" | "unseenenr" => Ok(TargetMetric::Unseen),
            "ambiguity" | "enamb" => Ok(TargetMetric::Ambiguity),
            "leakage" | "leakr" => Ok(TargetMetric::Leakage),
            "ennullr" | "ennull" => Ok(TargetMetric::EnNullR),
            other => Err(format!("unknown target metric `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdjustmentSpec {
    pub target_metric: TargetMetric,
    pub targets: Vec<f64>,
    pub seed: u64,
    pub tolerance: f64,
    pub min_size: usize,
}

impl AdjustmentSpec {
    pub fn new(target_metric: TargetMetric, targets: Vec<f64>) -> Result<Self, AdjustmentError> {
        if targets.is_empty() {
            return Err(AdjustmentError::InvalidSpec("no targets".into()));
        }
        if let Some(t) = targets.iter().find(|t| !(0.0..=1.0).contains(*t)) {
            return Err(AdjustmentError::InvalidSpec(format!("target {t} outside [0, 1]")));
        }
        Ok(AdjustmentSpec {
            target_metric,
            targets,
            seed: 0,
            tolerance: DEFAULT_TOLERANCE,
            min_size: DEFAULT_MIN_SIZE,
        })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_min_size(mut self, min_size: usize) -> Self {
        self.min_size = min_size;
        self
    }
}

/// Per-instance view used by the constructors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InstanceFeature {
    pub id: usize,
    pub positive: bool,
    pub positive_mentions: usize,
    pub mentions: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassifiedPool {
    pub split: SplitKind,
    pub features: Vec<InstanceFeature>,
}

/// Reduces the target metric to per-instance indicators.
///
/// `unseen`, `ambiguity` and `leakage` classify the test split; `ennullr`
/// classifies train and, when present, dev.
pub fn classify_instances(
    bundle: &DatasetBundle,
    metric: TargetMetric,
) -> Result<Vec<ClassifiedPool>, AdjustmentError> {
    let test = || bundle.test().ok_or(AdjustmentError::MissingSplit(SplitKind::Test));
    let pools = match metric {
        TargetMetric::Unseen => {
            let seen = bundle.train().entity_set();
            vec![mention_pool(test()?, |s| !seen.contains(s))]
        }
        TargetMetric::Ambiguity => {
            let conflicts = metrics::conflicting_surfaces(bundle.splits());
            vec![mention_pool(test()?, |s| conflicts.contains(s))]
        }
        TargetMetric::Leakage => {
            let test = test()?;
            let references: Vec<&Corpus> = std::iter::once(bundle.train()).chain(bundle.dev()).collect();
            let seen = metrics::instance_keys(&references);
            let features = test
                .instances()
                .iter()
                .map(|inst| InstanceFeature {
                    id: inst.id(),
                    positive: seen.contains(&inst.key()),
                    positive_mentions: 0,
                    mentions: inst.mention_count(),
                })
                .collect();
            vec![ClassifiedPool {
                split: SplitKind::Test,
                features,
            }]
        }
        TargetMetric::EnNullR => std::iter::once(bundle.train())
            .chain(bundle.dev())
            .map(|corpus| ClassifiedPool {
                split: corpus.split(),
                features: corpus
                    .instances()
                    .iter()
                    .map(|inst| {
                        let mentions = inst.mention_count();
                        InstanceFeature {
                            id: inst.id(),
                            positive: mentions == 0,
                            positive_mentions: 0,
                            mentions,
                        }
                    })
                    .collect(),
            })
            .collect(),
    };
    Ok(pools)
}

fn mention_pool(corpus: &Corpus, positive: impl Fn(&str) -> bool) -> ClassifiedPool {
    let features = corpus
        .instances()
        .iter()
        .map(|inst| {
            let mentions = corpus.mentions(inst);
            let positive_mentions = mentions.iter().filter(|m| positive(&m.surface)).count();
            InstanceFeature {
                id: inst.id(),
                positive: positive_mentions > 0,
                positive_mentions,
                mentions: mentions.len(),
            }
        })
        .collect();
    ClassifiedPool {
        split: corpus.split(),
        features,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdjustmentResult {
    pub metric: TargetMetric,
    pub split: SplitKind,
    pub seed: u64,
    pub tolerance: f64,
    pub targets: Vec<f64>,
    /// Common subset size.
    pub size: usize,
    pub subsets: Vec<Corpus>,
    /// Re-measured ratio per subset.
    pub achieved: Vec<f64>,
    /// Set when a zero-rate subset had to reuse instances of the other subsets.
    pub reused_instances: bool,
}

impl AdjustmentResult {
    pub fn member_ids(&self, subset: usize) -> Vec<usize> {
        self.subsets[subset].instances().iter().map(|i| i.id()).collect()
    }

    pub fn file_name(&self, subset: usize) -> String {
        let pct = (self.targets[subset] * 100.0).round() as i64;
        format!("{}_{}_{}_{pct}.conll", self.split, self.metric, subset)
    }

    pub fn manifest_name(&self) -> String {
        format!("{}_{}_manifest.json", self.split, self.metric)
    }

    pub fn manifest_json(&self) -> String {
        let subsets: Vec<_> = (0..self.subsets.len())
            .map(|i| {
                json!({
                    "target": self.targets[i],
                    "achieved": self.achieved[i],
                    "file": self.file_name(i),
                    "instance_ids": self.member_ids(i),
                })
            })
            .collect();
        canonical::to_string(&json!({
            "schema_version": 1,
            "metric": self.metric.as_str(),
            "split": self.split.as_str(),
            "seed": self.seed,
            "size": self.size,
            "tolerance": self.tolerance,
            "reused_instances": self.reused_instances,
            "subsets": subsets,
        }))
    }

    /// Writes one CoNLL file per subset plus the manifest; returns written paths.
    pub fn write_to(&self, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for (i, subset) in self.subsets.iter().enumerate() {
            let path = dir.join(self.file_name(i));
            fs::write(&path, subset.to_conll())?;
            written.push(path);
        }
        let path = dir.join(self.manifest_name());
        fs::write(&path, self.manifest_json())?;
        written.push(path);
        Ok(written)
    }
}

/// Builds equal-size test subsets with the requested `unseen`, `ambiguity`
/// or `leakage` ratios.
pub fn adjust_test_sets(bundle: &DatasetBundle, spec: &AdjustmentSpec) -> Result<AdjustmentResult, AdjustmentError> {
    if spec.target_metric == TargetMetric::EnNullR {
        return Err(AdjustmentError::UnsupportedMetric {
            operation: "adjust_test_sets",
            metric: spec.target_metric,
        });
    }
    let test = bundle.test().ok_or(AdjustmentError::MissingSplit(SplitKind::Test))?;
    let pool = classify_instances(bundle, spec.target_metric)?
        .pop()
        .expect("one test pool");

    let (groups, reused) = if spec.target_metric.mention_level() {
        (greedy_construction(&pool, spec)?, false)
    } else {
        exact_construction(&pool, spec, false)?
    };
    let subsets: Vec<Corpus> = groups.iter().map(|ids| test.select(ids)).collect();

    let achieved = match spec.target_metric {
        TargetMetric::Unseen => {
            let seen: EntitySet = bundle.train().entity_set();
            measure(&subsets, |c| {
                metrics::unseen_mention_ratio(c, &seen).ok_or(MetricError::NoEntities(c.split()))
            })?
        }
        TargetMetric::Ambiguity => {
            let conflicts: BTreeSet<String> = metrics::conflicting_surfaces(bundle.splits());
            measure(&subsets, |c| {
                metrics::ambiguous_mention_ratio(c, &conflicts).ok_or(MetricError::NoEntities(c.split()))
            })?
        }
        TargetMetric::Leakage => {
            let references: Vec<&Corpus> = std::iter::once(bundle.train()).chain(bundle.dev()).collect();
            measure(&subsets, |c| metrics::leakage_against(c, &references))?
        }
        TargetMetric::EnNullR => unreachable!("rejected above"),
    };
    finish(spec, pool.split, subsets, achieved, reused)
}

/// Train (and dev, when present) subsets with the requested entity-null rates.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainDevAdjustment {
    pub train: AdjustmentResult,
    pub dev: Option<AdjustmentResult>,
}

pub fn adjust_traindev_ennullr(
    bundle: &DatasetBundle,
    spec: &AdjustmentSpec,
) -> Result<TrainDevAdjustment, AdjustmentError> {
    if spec.target_metric != TargetMetric::EnNullR {
        return Err(AdjustmentError::UnsupportedMetric {
            operation: "adjust_traindev_ennullr",
            metric: spec.target_metric,
        });
    }
    let mut results = classify_instances(bundle, TargetMetric::EnNullR)?
        .into_iter()
        .map(|pool| {
            let corpus = bundle.get(pool.split).expect("pool comes from bundle");
            let (groups, reused) = exact_construction(&pool, spec, true)?;
            let subsets: Vec<Corpus> = groups.iter().map(|ids| corpus.select(ids)).collect();
            let achieved = measure(&subsets, |c| metrics::entity_null_rate(c).map(|v| v.value))?;
            finish(spec, pool.split, subsets, achieved, reused)
        })
        .collect::<Result<Vec<_>, _>>()?
        .into_iter();
    Ok(TrainDevAdjustment {
        train: results.next().expect("train pool"),
        dev: results.next(),
    })
}

fn measure(subsets: &[Corpus], f: impl Fn(&Corpus) -> Result<f64, MetricError>) -> Result<Vec<f64>, MetricError> {
    subsets.iter().map(f).collect()
}

fn finish(
    spec: &AdjustmentSpec,
    split: SplitKind,
    subsets: Vec<Corpus>,
    achieved: Vec<f64>,
    reused_instances: bool,
) -> Result<AdjustmentResult, AdjustmentError> {
    for (&target, &got) in spec.targets.iter().zip(&achieved) {
        if (got - target).abs() > spec.tolerance + AUDIT_SLACK {
            return Err(AdjustmentError::AuditFailed {
                target,
                achieved: got,
                tolerance: spec.tolerance,
            });
        }
    }
    Ok(AdjustmentResult {
        metric: spec.target_metric,
        split,
        seed: spec.seed,
        tolerance: spec.tolerance,
        targets: spec.targets.clone(),
        size: subsets.first().map_or(0, Corpus::len),
        subsets,
        achieved,
        reused_instances,
    })
}

/// Smallest `d` such that every target is a multiple of `1/d`.
fn common_denominator(targets: &[f64]) -> Result<usize, AdjustmentError> {
    fn gcd(a: usize, b: usize) -> usize {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    let mut lcm = 1usize;
    for &t in targets {
        let d = (1..=MAX_DENOMINATOR)
            .find(|&d| {
                let scaled = t * d as f64;
                (scaled - scaled.round()).abs() < 1e-9
            })
            .ok_or_else(|| AdjustmentError::InvalidSpec(format!("target {t} is not a simple fraction")))?;
        lcm = lcm / gcd(lcm, d) * d;
        if lcm > MAX_DENOMINATOR {
            return Err(AdjustmentError::InvalidSpec(
                "targets share no small common denominator".into(),
            ));
        }
    }
    Ok(lcm)
}

fn seeded_order(ids: &[usize], rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut ids = ids.to_vec();
    ids.shuffle(rng);
    ids
}

/// Exact construction for instance-level indicators.
///
/// With `d` the targets' common denominator and target `i` equal to
/// `a_i / d`, a subset of size `N` (a multiple of `d`) takes `a_i N / d`
/// positives and `(d - a_i) N / d` negatives. `N` is the largest size the
/// pool can supply for all subsets at once. With `zero_from_remainder`,
/// zero targets are left out of that budget and filled with negatives left
/// over by the other subsets, or drawn afresh when too few remain.
fn exact_construction(
    pool: &ClassifiedPool,
    spec: &AdjustmentSpec,
    zero_from_remainder: bool,
) -> Result<(Vec<Vec<usize>>, bool), AdjustmentError> {
    let d = common_denominator(&spec.targets)?;
    let numerators: Vec<usize> = spec.targets.iter().map(|t| (t * d as f64).round() as usize).collect();
    let special_zero = zero_from_remainder && numerators.iter().any(|&a| a > 0);
    let budgeted: Vec<usize> = numerators
        .iter()
        .copied()
        .filter(|&a| !(special_zero && a == 0))
        .collect();

    let positives: Vec<usize> = pool.features.iter().filter(|f| f.positive).map(|f| f.id).collect();
    let negatives: Vec<usize> = pool.features.iter().filter(|f| !f.positive).map(|f| f.id).collect();
    let (p, q) = (positives.len(), negatives.len());

    let pos_need: usize = budgeted.iter().sum();
    let neg_need: usize = budgeted.iter().map(|a| d - a).sum();
    let cap = |have: usize, need: usize| (have * d).checked_div(need).unwrap_or(usize::MAX);
    let mut raw = cap(p, pos_need).min(cap(q, neg_need));
    if special_zero {
        // zero-rate subsets still need `size` negatives, if only by reuse
        raw = raw.min(q);
    }
    let size = raw - raw % d;
    if size == 0 {
        return Err(AdjustmentError::UnreachableTarget {
            metric: spec.target_metric,
            split: pool.split,
            positives: p,
            negatives: q,
            max_feasible: 0,
            min_size: d,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut pos_iter = seeded_order(&positives, &mut rng).into_iter();
    let mut neg_iter = seeded_order(&negatives, &mut rng).into_iter();

    let mut groups: Vec<Option<Vec<usize>>> = numerators
        .iter()
        .map(|&a| {
            if special_zero && a == 0 {
                return None;
            }
            let take_pos = a * size / d;
            let mut ids: Vec<usize> = pos_iter.by_ref().take(take_pos).collect();
            ids.extend(neg_iter.by_ref().take(size - take_pos));
            Some(ids)
        })
        .collect();

    let mut reused = false;
    let mut remainder: Vec<usize> = neg_iter.collect();
    for group in groups.iter_mut().filter(|g| g.is_none()) {
        let ids = if remainder.len() >= size {
            remainder.drain(..size).collect()
        } else {
            reused = true;
            seeded_order(&negatives, &mut rng).into_iter().take(size).collect()
        };
        *group = Some(ids);
    }

    Ok((
        groups
            .into_iter()
            .map(|g| {
                let mut ids = g.expect("every group filled");
                ids.sort_unstable();
                ids
            })
            .collect(),
        reused,
    ))
}

/// Instances with identical (positive, total) mention counts are
/// interchangeable for the ratio, so candidates are bucketed by that pair;
/// within a bucket, and between equally good buckets, seeded shuffle order
/// decides.
#[derive(Clone)]
struct Buckets {
    /// (positive mentions, mentions) -> (shuffle rank, id), ascending rank.
    queues: BTreeMap<(usize, usize), VecDeque<(usize, usize)>>,
}

impl Buckets {
    fn new(pool: &ClassifiedPool, seed: u64) -> Self {
        let mut order: Vec<&InstanceFeature> = pool.features.iter().collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let mut queues: BTreeMap<(usize, usize), VecDeque<(usize, usize)>> = BTreeMap::new();
        for (rank, f) in order.into_iter().enumerate() {
            queues
                .entry((f.positive_mentions, f.mentions))
                .or_default()
                .push_back((rank, f.id));
        }
        Buckets { queues }
    }

    /// Removes and returns the instance moving `hits / total` closest to `target`.
    fn take_best(&mut self, hits: usize, total: usize, target: f64) -> Option<(usize, (usize, usize))> {
        let mut best: Option<(f64, usize, (usize, usize))> = None;
        for (&key, queue) in &self.queues {
            let Some(&(rank, _)) = queue.front() else { continue };
            let (pos, tot) = key;
            let new_total = total + tot;
            // An instance that leaves the ratio undefined ranks behind any defined move.
            let distance = if new_total == 0 {
                2.0
            } else {
                ((hits + pos) as f64 / new_total as f64 - target).abs()
            };
            let better = match best {
                None => true,
                Some((bd, br, _)) => distance < bd || (distance == bd && rank < br),
            };
            if better {
                best = Some((distance, rank, key));
            }
        }
        let (_, _, key) = best?;
        let queue = self.queues.get_mut(&key).expect("key from map");
        let (_, id) = queue.pop_front().expect("non-empty queue");
        if queue.is_empty() {
            self.queues.remove(&key);
        }
        Some((id, key))
    }
}

/// Round-robin greedy fill of `k` subsets of `size` instances each.
/// Returns the groups when every subset ends within tolerance.
fn greedy_fill(buckets: &Buckets, targets: &[f64], size: usize, tolerance: f64) -> Option<Vec<Vec<usize>>> {
    let mut buckets = buckets.clone();
    let k = targets.len();
    let mut groups = vec![Vec::with_capacity(size); k];
    let mut counts = vec![(0usize, 0usize); k];
    for _ in 0..size {
        for i in 0..k {
            let (hits, total) = counts[i];
            let (id, (pos, tot)) = buckets.take_best(hits, total, targets[i])?;
            groups[i].push(id);
            counts[i] = (hits + pos, total + tot);
        }
    }
    let within = counts
        .iter()
        .zip(targets)
        .all(|(&(hits, total), &t)| total > 0 && (hits as f64 / total as f64 - t).abs() <= tolerance + AUDIT_SLACK);
    within.then(|| {
        for g in &mut groups {
            g.sort_unstable();
        }
        groups
    })
}

fn greedy_construction(pool: &ClassifiedPool, spec: &AdjustmentSpec) -> Result<Vec<Vec<usize>>, AdjustmentError> {
    let buckets = Buckets::new(pool, spec.seed);
    let k = spec.targets.len();
    let upper = pool.features.len() / k;
    let attempt = |n: usize| greedy_fill(&buckets, &spec.targets, n, spec.tolerance);

    // Largest feasible size by bisection over [1, upper].
    let mut best: Option<(usize, Vec<Vec<usize>>)> = None;
    if upper > 0 {
        if let Some(groups) = attempt(upper) {
            best = Some((upper, groups));
        } else {
            let (mut lo, mut hi) = (0usize, upper);
            while hi - lo > 1 {
                let mid = lo + (hi - lo) / 2;
                match attempt(mid) {
                    Some(groups) => {
                        lo = mid;
                        best = Some((mid, groups));
                    }
                    None => hi = mid,
                }
            }
        }
    }

    let max_feasible = best.as_ref().map_or(0, |(n, _)| *n);
    match best {
        Some((n, groups)) if n >= spec.min_size.max(1) => Ok(groups),
        _ => {
            let positives = pool.features.iter().map(|f| f.positive_mentions).sum();
            let total: usize = pool.features.iter().map(|f| f.mentions).sum();
            Err(AdjustmentError::UnreachableTarget {
                metric: spec.target_metric,
                split: pool.split,
                positives,
                negatives: total - positives,
                max_feasible,
                min_size: spec.min_size,
            })
        }
    }
}
