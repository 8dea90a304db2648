//! Statistical quality auditing for named entity recognition datasets.
//!
//! The crate parses CoNLL-style and JSONL span corpora ([`corpus`]),
//! computes nine dataset statistics grouped into reliability, difficulty and
//! validity ([`metrics`]), supports human accuracy checks with annotator
//! agreement ([`annotation`]), builds controlled subsets with pinned metric
//! values ([`adjustment`]) and renders dataset-level reports ([`report`]).
//!
//! See the `examples/` directory of this crate for one runnable program per
//! capability, and the `nerqa` binary ([`cli`]) for command-line use.

pub mod adjustment;
pub mod annotation;
mod canonical;
pub mod cli;
pub mod corpus;
pub mod metrics;
pub mod report;
pub mod synthetic;

pub use corpus::{Corpus, DatasetBundle, Instance, ParseOptions, Scheme, SplitKind};
pub use metrics::{Metric, MetricValue};
pub use report::MetricReport;
