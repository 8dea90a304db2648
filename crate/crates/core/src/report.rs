//! Dataset-level report: per-split values, their aggregation, and
//! Markdown / canonical JSON renderings.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::annotation::{AccuracyResult, DEFAULT_SAMPLE_SIZE};
use crate::canonical;
use crate::corpus::{Corpus, DatasetBundle, SplitKind};
use crate::metrics::{self, Metric, MetricError, ModelScores};

pub const SCHEMA_VERSION: u64 = 1;

const ABSENT_CELL: &str = "−";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AggregationRule {
    /// Arithmetic mean over the splits present.
    MeanOverSplits,
    /// Computed once from the test split against train (and dev).
    TestVsTrain,
    /// Supplied from outside the corpus (model scores).
    External,
}

impl AggregationRule {
    pub fn for_metric(metric: Metric) -> Self {
        match metric {
            Metric::LeakR | Metric::UnSeenEnR => AggregationRule::TestVsTrain,
            Metric::ModDiff => AggregationRule::External,
            _ => AggregationRule::MeanOverSplits,
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            AggregationRule::MeanOverSplits => "mean-over-splits",
            AggregationRule::TestVsTrain => "test-vs-train",
            AggregationRule::External => "external",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        [
            AggregationRule::MeanOverSplits,
            AggregationRule::TestVsTrain,
            AggregationRule::External,
        ]
        .into_iter()
        .find(|r| r.as_str() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Aggregate {
    Value(f64),
    Absent(String),
}

impl Aggregate {
    pub fn value(&self) -> Option<f64> {
        match self {
            Aggregate::Value(v) => Some(*v),
            Aggregate::Absent(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub dataset_name: String,
    pub per_split: BTreeMap<SplitKind, BTreeMap<Metric, f64>>,
    /// Always holds all nine metrics.
    pub aggregated: BTreeMap<Metric, Aggregate>,
    pub rules: BTreeMap<Metric, AggregationRule>,
    pub warnings: Vec<String>,
}

/// Inputs that do not come from the corpus itself.
#[derive(Debug, Clone, Default)]
pub struct ExternalInputs {
    pub model_scores: Option<ModelScores>,
    pub accuracy: BTreeMap<SplitKind, AccuracyResult>,
}

/// Metrics computed on a single split.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SplitMetrics {
    pub values: BTreeMap<Metric, f64>,
    pub warnings: Vec<String>,
}

pub fn split_metrics(corpus: &Corpus) -> SplitMetrics {
    let mut out = SplitMetrics::default();
    let split = corpus.split();
    let mut record = |metric: Metric, result: Result<f64, MetricError>| match result {
        Ok(v) => {
            out.values.insert(metric, v);
        }
        Err(e) => out.warnings.push(format!("{split}: {metric} undefined: {e}")),
    };
    record(Metric::Red, metrics::redundancy(corpus).map(|v| v.value));
    record(Metric::EnAmb, metrics::entity_ambiguity(corpus).map(|(v, _)| v.value));
    record(Metric::EnDen, metrics::entity_density(corpus).map(|v| v.value));
    record(Metric::EnImBaD, metrics::entity_imbalance(corpus).map(|(v, _)| v.value));
    record(Metric::EnNullR, metrics::entity_null_rate(corpus).map(|v| v.value));
    if corpus.repaired_tags() > 0 {
        out.warnings.push(format!(
            "{split}: {} inconsistent tags repaired",
            corpus.repaired_tags()
        ));
    }
    out
}

/// Computes per-split metrics (one thread per split) and aggregates them.
pub fn evaluate(name: &str, bundle: &DatasetBundle, external: &ExternalInputs) -> MetricReport {
    let per_split: BTreeMap<SplitKind, SplitMetrics> = std::thread::scope(|scope| {
        let handles: Vec<_> = bundle
            .splits()
            .map(|corpus| (corpus.split(), scope.spawn(move || split_metrics(corpus))))
            .collect();
        handles
            .into_iter()
            .map(|(split, h)| (split, h.join().expect("metric thread panicked")))
            .collect()
    });
    aggregate_report(name, bundle, &per_split, external)
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

pub fn aggregate_report(
    name: &str,
    bundle: &DatasetBundle,
    per_split: &BTreeMap<SplitKind, SplitMetrics>,
    external: &ExternalInputs,
) -> MetricReport {
    let mut warnings: Vec<String> = per_split.values().flat_map(|s| s.warnings.clone()).collect();
    let mut table: BTreeMap<SplitKind, BTreeMap<Metric, f64>> =
        per_split.iter().map(|(k, s)| (*k, s.values.clone())).collect();

    for (split, acc) in &external.accuracy {
        table.entry(*split).or_default().insert(Metric::Acc, acc.value.value);
        warnings.extend(acc.warnings.iter().map(|w| format!("{split}: {w}")));
        if acc.judged < DEFAULT_SAMPLE_SIZE {
            warnings.push(format!(
                "{split}: only {} instances judged ({DEFAULT_SAMPLE_SIZE} recommended)",
                acc.judged
            ));
        }
    }

    let mut aggregated = BTreeMap::new();
    for metric in Metric::ALL {
        let agg = match AggregationRule::for_metric(metric) {
            AggregationRule::MeanOverSplits => {
                let values: Vec<f64> = table.values().filter_map(|m| m.get(&metric).copied()).collect();
                if values.is_empty() {
                    let reason = if metric == Metric::Acc {
                        "no annotation judgments supplied"
                    } else {
                        "undefined on every split"
                    };
                    Aggregate::Absent(reason.into())
                } else {
                    Aggregate::Value(mean(&values))
                }
            }
            AggregationRule::TestVsTrain => {
                let result = match metric {
                    Metric::LeakR => metrics::leakage_ratio(bundle),
                    _ => metrics::unseen_entity_ratio(bundle),
                };
                match result {
                    Ok(v) => Aggregate::Value(v.value),
                    Err(e) => Aggregate::Absent(e.to_string()),
                }
            }
            AggregationRule::External => match &external.model_scores {
                Some(scores) => Aggregate::Value(metrics::model_differentiation(scores).value),
                None => Aggregate::Absent("no model scores supplied".into()),
            },
        };
        aggregated.insert(metric, agg);
    }

    MetricReport {
        dataset_name: name.to_owned(),
        per_split: table,
        aggregated,
        rules: Metric::ALL
            .into_iter()
            .map(|m| (m, AggregationRule::for_metric(m)))
            .collect(),
        warnings,
    }
}

/// Fixed-point rendering with ties rounded away from zero, applied to the
/// shortest decimal form of `value` (so 0.285 renders as 0.29).
pub fn round_half_up(value: f64, decimals: usize) -> String {
    if !value.is_finite() {
        return value.to_string();
    }
    let repr = format!("{}", value.abs());
    let (int_part, frac_part) = repr.split_once('.').unwrap_or((&repr, ""));
    let mut digits: Vec<u8> = int_part
        .bytes()
        .chain(frac_part.bytes().chain(std::iter::repeat(b'0')).take(decimals))
        .collect();
    let round_up = frac_part.as_bytes().get(decimals).is_some_and(|d| *d >= b'5');
    if round_up {
        let mut i = digits.len();
        loop {
            if i == 0 {
                digits.insert(0, b'1');
                break;
            }
            i -= 1;
            if digits[i] == b'9' {
                digits[i] = b'0';
            } else {
                digits[i] += 1;
                break;
            }
        }
    }
    let split_at = digits.len() - decimals;
    let mut out = String::new();
    let is_zero = digits.iter().all(|d| *d == b'0');
    if value.is_sign_negative() && !is_zero {
        out.push('-');
    }
    out.push_str(std::str::from_utf8(&digits[..split_at]).expect("ascii digits"));
    if decimals > 0 {
        out.push('.');
        out.push_str(std::str::from_utf8(&digits[split_at..]).expect("ascii digits"));
    }
    out
}

/// One table row per report, columns in the standard metric order.
pub fn render_markdown_table(reports: &[MetricReport]) -> String {
    let mut out = String::from("| Dataset |");
    for m in Metric::ALL {
        let _ = write!(out, " {}{} |", m.abbreviation(), m.direction().arrow());
    }
    out.push_str("\n|---|");
    out.push_str(&"---:|".repeat(Metric::ALL.len()));
    out.push('\n');
    for report in reports {
        let _ = write!(out, "| {} |", report.dataset_name);
        for m in Metric::ALL {
            let cell = match report.aggregated.get(&m).and_then(Aggregate::value) {
                Some(v) => round_half_up(v, 2),
                None => ABSENT_CELL.to_owned(),
            };
            let _ = write!(out, " {cell} |");
        }
        out.push('\n');
    }
    let warned: Vec<&MetricReport> = reports.iter().filter(|r| !r.warnings.is_empty()).collect();
    if !warned.is_empty() {
        out.push_str("\n### Warnings\n\n");
        for report in warned {
            for w in &report.warnings {
                let _ = writeln!(out, "- {}: {w}", report.dataset_name);
            }
        }
    }
    out
}

pub fn render_markdown(report: &MetricReport) -> String {
    render_markdown_table(std::slice::from_ref(report))
}

fn to_value(report: &MetricReport) -> Value {
    let aggregated: Map<String, Value> = report
        .aggregated
        .iter()
        .map(|(m, agg)| {
            let rule = report.rules.get(m).copied().unwrap_or(AggregationRule::for_metric(*m));
            let entry = match agg {
                Aggregate::Value(v) => json!({"value": v, "rule": rule.as_str()}),
                Aggregate::Absent(reason) => json!({"absent": reason, "rule": rule.as_str()}),
            };
            (m.abbreviation().to_owned(), entry)
        })
        .collect();
    let per_split: Map<String, Value> = report
        .per_split
        .iter()
        .map(|(split, values)| {
            let values: Map<String, Value> = values
                .iter()
                .map(|(m, v)| (m.abbreviation().to_owned(), json!(v)))
                .collect();
            (split.as_str().to_owned(), Value::Object(values))
        })
        .collect();
    json!({
        "schema_version": SCHEMA_VERSION,
        "dataset": report.dataset_name,
        "std": "population",
        "aggregated": aggregated,
        "per_split": per_split,
        "warnings": report.warnings,
    })
}

pub fn render_json(report: &MetricReport) -> String {
    canonical::to_string(&to_value(report))
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("invalid report JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid report: {0}")]
    Schema(String),
}

fn schema(msg: impl Into<String>) -> ReportError {
    ReportError::Schema(msg.into())
}

/// Parses JSON produced by [`render_json`].
pub fn parse_json(text: &str) -> Result<MetricReport, ReportError> {
    let root: Value = serde_json::from_str(text)?;
    let version = root["schema_version"]
        .as_u64()
        .ok_or_else(|| schema("missing schema_version"))?;
    if version != SCHEMA_VERSION {
        return Err(schema(format!("unsupported schema_version {version}")));
    }
    let dataset_name = root["dataset"]
        .as_str()
        .ok_or_else(|| schema("missing dataset"))?
        .to_owned();
    let metric = |k: &str| k.parse::<Metric>().map_err(schema);

    let mut aggregated = BTreeMap::new();
    let mut rules = BTreeMap::new();
    for (k, entry) in root["aggregated"]
        .as_object()
        .ok_or_else(|| schema("missing aggregated"))?
    {
        let m = metric(k)?;
        let rule = entry["rule"]
            .as_str()
            .and_then(AggregationRule::parse)
            .ok_or_else(|| schema(format!("{k}: bad rule")))?;
        let agg = match (entry["value"].as_f64(), entry["absent"].as_str()) {
            (Some(v), _) => Aggregate::Value(v),
            (None, Some(reason)) => Aggregate::Absent(reason.to_owned()),
            _ => return Err(schema(format!("{k}: neither value nor absent"))),
        };
        aggregated.insert(m, agg);
        rules.insert(m, rule);
    }

    let mut per_split = BTreeMap::new();
    for (split, values) in root["per_split"]
        .as_object()
        .ok_or_else(|| schema("missing per_split"))?
    {
        let split: SplitKind = split.parse().map_err(schema)?;
        let values = values
            .as_object()
            .ok_or_else(|| schema("per_split entry is not an object"))?
            .iter()
            .map(|(k, v)| {
                Ok((
                    metric(k)?,
                    v.as_f64().ok_or_else(|| schema(format!("{k}: not a number")))?,
                ))
            })
            .collect::<Result<BTreeMap<_, _>, ReportError>>()?;
        per_split.insert(split, values);
    }

    let warnings = root["warnings"]
        .as_array()
        .ok_or_else(|| schema("missing warnings"))?
        .iter()
        .map(|w| {
            w.as_str()
                .map(str::to_owned)
                .ok_or_else(|| schema("warning is not a string"))
        })
        .collect::<Result<Vec<_>, _>>()?;

    Ok(MetricReport {
        dataset_name,
        per_split,
        aggregated,
        rules,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotation::{accuracy_from_annotations, Judgment, JudgmentSet};
    use crate::corpus::{CorpusBuilder, ParseOptions};

    fn corpus(split: SplitKind, rows: &[(&str, &str)]) -> Corpus {
        let mut b = CorpusBuilder::new(split, ParseOptions::default());
        for (toks, labs) in rows {
            b.push(
                toks.split(' ').map(String::from).collect(),
                labs.split(' ').map(String::from).collect(),
            )
            .unwrap();
        }
        b.build()
    }

    fn with_red(values: &[(SplitKind, f64)]) -> BTreeMap<SplitKind, SplitMetrics> {
        values
            .iter()
            .map(|(s, v)| {
                (
                    *s,
                    SplitMetrics {
                        values: [(Metric::Red, *v)].into_iter().collect(),
                        warnings: vec![],
                    },
                )
            })
            .collect()
    }

    fn small_bundle(with_dev: bool) -> DatasetBundle {
        DatasetBundle::new(
            corpus(SplitKind::Train, &[("A x", "B-P O"), ("y", "O")]),
            with_dev.then(|| corpus(SplitKind::Dev, &[("B", "B-L")])),
            Some(corpus(SplitKind::Test, &[("A x", "B-P O"), ("C", "B-P")])),
        )
        .unwrap()
    }

    #[test]
    fn mean_over_three_splits() {
        let per = with_red(&[(SplitKind::Train, 0.0), (SplitKind::Dev, 0.0), (SplitKind::Test, 0.3)]);
        let r = aggregate_report("d", &small_bundle(true), &per, &ExternalInputs::default());
        assert!((r.aggregated[&Metric::Red].value().unwrap() - 0.1).abs() < 1e-12);
        assert_eq!(r.aggregated.len(), 9);
    }

    #[test]
    fn mean_over_available_splits() {
        let per = with_red(&[(SplitKind::Train, 0.2), (SplitKind::Test, 0.4)]);
        let r = aggregate_report("d", &small_bundle(false), &per, &ExternalInputs::default());
        assert!((r.aggregated[&Metric::Red].value().unwrap() - 0.3).abs() < 1e-12);
        assert_eq!(r.rules[&Metric::Red], AggregationRule::MeanOverSplits);
    }

    #[test]
    fn leakage_computed_once() {
        let r = evaluate("d", &small_bundle(true), &ExternalInputs::default());
        assert_eq!(r.rules[&Metric::LeakR], AggregationRule::TestVsTrain);
        assert_eq!(r.aggregated[&Metric::LeakR], Aggregate::Value(0.5));
        assert!(r.per_split.values().all(|m| !m.contains_key(&Metric::LeakR)));
        assert_eq!(r.aggregated[&Metric::UnSeenEnR], Aggregate::Value(0.5));
        assert!(matches!(r.aggregated[&Metric::ModDiff], Aggregate::Absent(_)));
        assert!(matches!(r.aggregated[&Metric::Acc], Aggregate::Absent(_)));
    }

    #[test]
    fn external_inputs_flow_through() {
        let judges: Vec<JudgmentSet> = (0..3)
            .map(|a| JudgmentSet::new(format!("a{a}"), (0..4).map(|i| (i, Judgment::Accurate))))
            .collect();
        let external = ExternalInputs {
            model_scores: Some("90,92,94".parse().unwrap()),
            accuracy: [(SplitKind::Dev, accuracy_from_annotations(&judges).unwrap())]
                .into_iter()
                .collect(),
        };
        let r = evaluate("d", &small_bundle(true), &external);
        assert_eq!(r.aggregated[&Metric::Acc], Aggregate::Value(1.0));
        assert!(r.warnings.iter().any(|w| w.contains("only 4 instances judged")));
        let md = render_markdown(&r);
        assert!(md.contains(" 1.63 |"), "{md}");
    }

    #[test]
    fn rounding() {
        assert_eq!(round_half_up(0.456, 2), "0.46");
        assert_eq!(round_half_up(0.125, 2), "0.13");
        assert_eq!(round_half_up(0.285, 2), "0.29");
        assert_eq!(round_half_up(0.994, 2), "0.99");
        assert_eq!(round_half_up(0.995, 2), "1.00");
        assert_eq!(round_half_up(9.999, 2), "10.00");
        assert_eq!(round_half_up(0.0, 2), "0.00");
        assert_eq!(round_half_up(2.0, 2), "2.00");
        assert_eq!(round_half_up(1.632993161855452, 2), "1.63");
        assert_eq!(round_half_up(1e-7, 2), "0.00");
    }

    #[test]
    fn markdown_layout() {
        let r = evaluate("Toy", &small_bundle(true), &ExternalInputs::default());
        let md = render_markdown(&r);
        let mut lines = md.lines();
        assert_eq!(
            lines.next().unwrap(),
            "| Dataset | Red↓ | Acc↑ | LeakR↓ | UnSeenEnR↑ | EnAmb↑ | EnDen↑ | ModDiff↑ | EnImBaD↓ | EnNullR↓ |"
        );
        let row = lines.nth(1).unwrap();
        assert!(row.starts_with("| Toy | 0.00 | − | 0.50 | 0.50 |"), "{row}");
        assert!(!md.contains("Warnings"));
    }

    #[test]
    fn markdown_warnings_section() {
        let mut r = evaluate("Toy", &small_bundle(true), &ExternalInputs::default());
        r.warnings.push("dev: kappa gate failed".into());
        assert!(render_markdown(&r).contains("### Warnings\n\n- Toy: dev: kappa gate failed\n"));
    }

    #[test]
    fn json_round_trip_is_fixed_point() {
        let external = ExternalInputs {
            model_scores: Some("90,92,94".parse().unwrap()),
            ..Default::default()
        };
        let r = evaluate("Toy", &small_bundle(true), &external);
        let text = render_json(&r);
        assert_eq!(text, render_json(&evaluate("Toy", &small_bundle(true), &external)));
        let parsed = parse_json(&text).unwrap();
        assert_eq!(render_json(&parsed), text);
        let v: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["warnings"], json!([]));
        assert_eq!(v["per_split"]["dev"]["EnNullR"], json!(0.0));
        assert!(text.contains("\"value\": 1.632993"));
    }

    #[test]
    fn undefined_split_metric_is_warned_not_imputed() {
        let b = DatasetBundle::new(
            corpus(SplitKind::Train, &[("A", "B-P"), ("B", "B-Q")]),
            None,
            Some(corpus(SplitKind::Test, &[("x", "O")])),
        )
        .unwrap();
        let r = evaluate("d", &b, &ExternalInputs::default());
        assert_eq!(r.aggregated[&Metric::EnImBaD], Aggregate::Value(0.0));
        assert_eq!(r.aggregated[&Metric::EnNullR], Aggregate::Value(0.5));
        assert!(r.warnings.iter().any(|w| w.starts_with("test: EnAmb undefined")));
        assert!(matches!(r.aggregated[&Metric::UnSeenEnR], Aggregate::Absent(_)));
    }
}
