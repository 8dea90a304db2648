//! Human-judged accuracy: sampling instances for review, agreement between
//! annotators and the aggregated accuracy score.

use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, SplitKind};
use crate::metrics::{Metric, MetricValue};

/// Instances reviewed per split unless configured otherwise.
pub const DEFAULT_SAMPLE_SIZE: usize = 100;

/// Minimum Cohen's kappa for annotations to be trusted; values at or below fail.
pub const KAPPA_THRESHOLD: f64 = 0.75;

/// Annotator count below which a warning is raised.
pub const RECOMMENDED_ANNOTATORS: usize = 3;

#[derive(Debug, Error)]
pub enum AnnotationError {
    #[error("{0} split is empty")]
    EmptyCorpus(SplitKind),
    #[error("sample size must be at least 1")]
    ZeroSampleSize,
    #[error("no judgments supplied")]
    EmptyJudgments,
    #[error("annotators {a:?} and {b:?} judged different instance sets")]
    KeyMismatch { a: String, b: String },
    #[error("line {line}: invalid judgment record: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("line {line}: annotator {annotator:?} judged instance {instance_id} twice")]
    DuplicateJudgment {
        line: usize,
        annotator: String,
        instance_id: usize,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationSample {
    pub split: SplitKind,
    pub seed: u64,
    pub requested: usize,
    /// Sorted, distinct instance ids.
    pub instance_ids: Vec<usize>,
    /// Set when the split had fewer instances than requested.
    pub short: bool,
}

/// Uniform sample of `min(size, n)` instance ids without replacement.
pub fn sample_for_annotation(corpus: &Corpus, size: usize, seed: u64) -> Result<AnnotationSample, AnnotationError> {
    if size == 0 {
        return Err(AnnotationError::ZeroSampleSize);
    }
    if corpus.is_empty() {
        return Err(AnnotationError::EmptyCorpus(corpus.split()));
    }
    let n = corpus.len();
    let amount = size.min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut positions = rand::seq::index::sample(&mut rng, n, amount).into_vec();
    positions.sort_unstable();
    Ok(AnnotationSample {
        split: corpus.split(),
        seed,
        requested: size,
        instance_ids: positions.into_iter().map(|p| corpus.instances()[p].id()).collect(),
        short: n < size,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Judgment {
    Accurate,
    Inaccurate,
}

/// One annotator's verdicts, keyed by instance id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgmentSet {
    pub annotator: String,
    pub judgments: BTreeMap<usize, Judgment>,
}

impl JudgmentSet {
    pub fn new(annotator: impl Into<String>, judgments: impl IntoIterator<Item = (usize, Judgment)>) -> Self {
        JudgmentSet {
            annotator: annotator.into(),
            judgments: judgments.into_iter().collect(),
        }
    }

    pub fn accurate_fraction(&self) -> f64 {
        let acc = self.judgments.values().filter(|j| **j == Judgment::Accurate).count();
        acc as f64 / self.judgments.len() as f64
    }
}

#[derive(Deserialize)]
struct JudgmentRecord {
    annotator: String,
    instance_id: usize,
    judgment: Judgment,
}

/// Reads judgment JSONL records, grouped by annotator in order of first appearance.
pub fn read_judgments<R: BufRead>(reader: R) -> Result<Vec<JudgmentSet>, AnnotationError> {
    let mut sets: Vec<JudgmentSet> = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: JudgmentRecord =
            serde_json::from_str(&line).map_err(|source| AnnotationError::Json { line: idx + 1, source })?;
        let pos = match sets.iter().position(|s| s.annotator == record.annotator) {
            Some(p) => p,
            None => {
                sets.push(JudgmentSet::new(record.annotator.clone(), []));
                sets.len() - 1
            }
        };
        if sets[pos]
            .judgments
            .insert(record.instance_id, record.judgment)
            .is_some()
        {
            return Err(AnnotationError::DuplicateJudgment {
                line: idx + 1,
                annotator: record.annotator,
                instance_id: record.instance_id,
            });
        }
    }
    Ok(sets)
}

pub fn parse_judgments(text: &str) -> Result<Vec<JudgmentSet>, AnnotationError> {
    read_judgments(text.as_bytes())
}

fn same_keys(a: &JudgmentSet, b: &JudgmentSet) -> Result<(), AnnotationError> {
    if a.judgments.keys().eq(b.judgments.keys()) {
        Ok(())
    } else {
        Err(AnnotationError::KeyMismatch {
            a: a.annotator.clone(),
            b: b.annotator.clone(),
        })
    }
}

/// Cohen's kappa between two annotators over the same instances.
///
/// When chance agreement is total (both annotators used a single category)
/// the statistic is undefined; 1.0 is returned if they agree everywhere and
/// 0.0 otherwise.
pub fn cohen_kappa(a: &JudgmentSet, b: &JudgmentSet) -> Result<f64, AnnotationError> {
    if a.judgments.is_empty() || b.judgments.is_empty() {
        return Err(AnnotationError::EmptyJudgments);
    }
    same_keys(a, b)?;
    let n = a.judgments.len();
    let (mut agree, mut a_acc, mut b_acc) = (0usize, 0usize, 0usize);
    for (ja, jb) in a.judgments.values().zip(b.judgments.values()) {
        agree += usize::from(ja == jb);
        a_acc += usize::from(*ja == Judgment::Accurate);
        b_acc += usize::from(*jb == Judgment::Accurate);
    }
    // Chance agreement numerator over n^2, kept integral to detect p_e == 1 exactly.
    let chance = a_acc * b_acc + (n - a_acc) * (n - b_acc);
    if chance == n * n {
        return Ok(if agree == n { 1.0 } else { 0.0 });
    }
    let nf = n as f64;
    let p_o = agree as f64 / nf;
    let p_e = chance as f64 / (nf * nf);
    Ok((p_o - p_e) / (1.0 - p_e))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairwiseKappa {
    pub a: String,
    pub b: String,
    pub kappa: f64,
}

/// Kappa for every annotator pair `(i, j)` with `i < j`.
pub fn pairwise_kappa(sets: &[JudgmentSet]) -> Result<Vec<PairwiseKappa>, AnnotationError> {
    let mut out = Vec::new();
    for (i, a) in sets.iter().enumerate() {
        for b in &sets[i + 1..] {
            out.push(PairwiseKappa {
                a: a.annotator.clone(),
                b: b.annotator.clone(),
                kappa: cohen_kappa(a, b)?,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccuracyResult {
    pub value: MetricValue,
    pub judged: usize,
    pub annotators: usize,
    /// `None` with a single annotator.
    pub min_pairwise_kappa: Option<f64>,
    /// Min pairwise kappa is at or below [`KAPPA_THRESHOLD`].
    pub below_threshold: bool,
    pub warnings: Vec<String>,
}

/// Accuracy by strict-majority vote per instance; ties count as inaccurate.
pub fn accuracy_from_annotations(sets: &[JudgmentSet]) -> Result<AccuracyResult, AnnotationError> {
    let first = sets.first().ok_or(AnnotationError::EmptyJudgments)?;
    if first.judgments.is_empty() {
        return Err(AnnotationError::EmptyJudgments);
    }
    for other in &sets[1..] {
        same_keys(first, other)?;
    }
    let judged = first.judgments.len();
    let accurate = first
        .judgments
        .keys()
        .filter(|id| {
            let votes = sets.iter().filter(|s| s.judgments[*id] == Judgment::Accurate).count();
            2 * votes > sets.len()
        })
        .count();

    let min_pairwise_kappa = pairwise_kappa(sets)?.into_iter().map(|p| p.kappa).reduce(f64::min);
    let below_threshold = min_pairwise_kappa.is_some_and(|k| k <= KAPPA_THRESHOLD);

    let mut warnings = Vec::new();
    if let Some(k) = min_pairwise_kappa.filter(|_| below_threshold) {
        warnings.push(format!(
            "minimum pairwise Cohen's kappa {k:.4} does not exceed {KAPPA_THRESHOLD}"
        ));
    }
    if sets.len() < RECOMMENDED_ANNOTATORS {
        warnings.push(format!(
            "{} annotator(s); at least {RECOMMENDED_ANNOTATORS} are recommended",
            sets.len()
        ));
    }

    Ok(AccuracyResult {
        value: MetricValue::new(Metric::Acc, accurate as f64 / judged as f64, Vec::new()),
        judged,
        annotators: sets.len(),
        min_pairwise_kappa,
        below_threshold,
        warnings,
    })
}

/// Ids judged by any annotator that were not part of `sample`.
pub fn unsampled_ids(sample: &AnnotationSample, sets: &[JudgmentSet]) -> BTreeSet<usize> {
    let sampled: BTreeSet<usize> = sample.instance_ids.iter().copied().collect();
    sets.iter()
        .flat_map(|s| s.judgments.keys().copied())
        .filter(|id| !sampled.contains(id))
        .collect()
}
