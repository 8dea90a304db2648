//! The `nerqa` command line: `eval`, `adjust`, `sample`, `kappa` and
//! `accuracy`.
//!
//! Exit codes: 0 on success, 1 on error, 2 when `--strict` is set and the
//! run produced warnings. Diagnostics go to stderr as
//! `nerqa: <level>: <message>` lines.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::adjustment::{self, AdjustmentResult, AdjustmentSpec, TargetMetric};
use crate::annotation::{self, JudgmentSet, DEFAULT_SAMPLE_SIZE};
use crate::canonical;
use crate::corpus::{self, Corpus, DatasetBundle, ParseError, ParseOptions, Scheme, SplitKind};
use crate::metrics::ModelScores;
use crate::report::{self, ExternalInputs};

#[derive(Debug, Parser)]
#[command(name = "nerqa", version, about = "Statistical quality audit for NER datasets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute the nine dataset metrics and write a report.
    Eval(EvalArgs),
    /// Build equal-size subsets with pinned metric ratios.
    Adjust(AdjustArgs),
    /// Sample instance ids for manual accuracy review.
    Sample(SampleArgs),
    /// Pairwise Cohen's kappa between annotators.
    Kappa(JudgmentArgs),
    /// Majority-vote accuracy with the agreement gate.
    Accuracy(JudgmentArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Conll,
    Jsonl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportFormat {
    Json,
    Md,
}

#[derive(Debug, Args)]
struct InputArgs {
    #[arg(long, value_enum, default_value = "conll")]
    format: Format,
    /// Tagging scheme of CoNLL input: bio2, bioes or iob1.
    #[arg(long, default_value = "bio2")]
    scheme: Scheme,
    /// Reject scheme violations; warnings turn the exit code into 2.
    #[arg(long)]
    strict: bool,
    /// Tokens are characters (mention surfaces are joined without spaces).
    #[arg(long)]
    char_tokenized: bool,
}

#[derive(Debug, Args)]
struct SplitPaths {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    dev: Option<PathBuf>,
    #[arg(long)]
    test: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[command(flatten)]
    paths: SplitPaths,
    #[command(flatten)]
    input: InputArgs,
    /// Dataset name used in the report.
    #[arg(long)]
    name: Option<String>,
    /// Comma-separated model scores for ModDiff, e.g. `90,92,94`.
    #[arg(long)]
    scores: Option<ModelScores>,
    /// Judgment file for a split, as `SPLIT=PATH`; repeatable.
    #[arg(long = "annotations", value_name = "SPLIT=PATH")]
    annotations: Vec<String>,
    #[arg(long, value_enum, default_value = "json")]
    report: ReportFormat,
    /// Write the report here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Fail when no test split is given.
    #[arg(long)]
    require_test: bool,
}

#[derive(Debug, Args)]
struct AdjustArgs {
    #[command(flatten)]
    paths: SplitPaths,
    #[command(flatten)]
    input: InputArgs,
    /// unseen, ambiguity, leakage or ennullr.
    #[arg(long)]
    metric: TargetMetric,
    #[arg(long, value_delimiter = ',', default_values_t = adjustment::DEFAULT_TARGETS)]
    targets: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = adjustment::DEFAULT_TOLERANCE)]
    tolerance: f64,
    #[arg(long, default_value_t = adjustment::DEFAULT_MIN_SIZE)]
    min_size: usize,
    /// Directory for subset files and manifests.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct SampleArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    format: InputArgs,
    #[arg(long, default_value = "train")]
    split: SplitKind,
    #[arg(long, default_value_t = DEFAULT_SAMPLE_SIZE)]
    size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct JudgmentArgs {
    /// Judgment JSONL files; annotators are grouped by their `annotator` field.
    #[arg(required = true)]
    files: Vec<PathBuf>,
    #[arg(long)]
    strict: bool,
}

struct Console<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
    color: bool,
    warned: bool,
}

impl Console<'_> {
    fn diagnostic(&mut self, level: &str, ansi: &str, msg: &str) {
        let level = if self.color {
            format!("\x1b[{ansi}m{level}\x1b[0m")
        } else {
            level.to_owned()
        };
        let _ = writeln!(self.err, "nerqa: {level}: {msg}");
    }

    fn warn(&mut self, msg: &str) {
        self.warned = true;
        self.diagnostic("warning", "33", msg);
    }

    fn error(&mut self, msg: &str) {
        self.diagnostic("error", "31", msg);
    }
}

/// Runs the command line with explicit streams; returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write, color: bool) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let rendered = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{rendered}");
            } else {
                let _ = write!(err, "{rendered}");
            }
            return code;
        }
    };
    let mut console = Console {
        out,
        err,
        color,
        warned: false,
    };
    let strict = match &cli.command {
        Command::Eval(a) => a.input.strict,
        Command::Adjust(a) => a.input.strict,
        Command::Sample(a) => a.format.strict,
        Command::Kappa(a) | Command::Accuracy(a) => a.strict,
    };
    let result = match cli.command {
        Command::Eval(args) => cmd_eval(args, &mut console),
        Command::Adjust(args) => cmd_adjust(args, &mut console),
        Command::Sample(args) => cmd_sample(args, &mut console),
        Command::Kappa(args) => cmd_kappa(args, &mut console),
        Command::Accuracy(args) => cmd_accuracy(args, &mut console),
    };
    match result {
        Err(e) => {
            console.error(&format!("{e:#}"));
            1
        }
        Ok(()) if strict && console.warned => 2,
        Ok(()) => 0,
    }
}

fn parse_options(input: &InputArgs) -> ParseOptions {
    ParseOptions {
        scheme: input.scheme,
        strict: input.strict,
        char_tokenized: input.char_tokenized || input.format == Format::Jsonl,
    }
}

fn located(path: &Path, e: ParseError) -> anyhow::Error {
    match e.line() {
        Some(line) => {
            let msg = e.to_string();
            let msg = msg.strip_prefix(&format!("line {line}: ")).unwrap_or(&msg).to_owned();
            anyhow!("{}:{line}: {msg}", path.display())
        }
        None => anyhow!("{}: {e}", path.display()),
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    let file = File::open(path).with_context(|| format!("{}: cannot open", path.display()))?;
    Ok(BufReader::new(file))
}

fn load_corpus(path: &Path, split: SplitKind, input: &InputArgs) -> Result<Corpus> {
    let reader = open(path)?;
    let corpus = match input.format {
        Format::Conll => corpus::read_conll(reader, split, parse_options(input)),
        Format::Jsonl => corpus::read_jsonl_spans(reader, split),
    };
    corpus.map_err(|e| located(path, e))
}

fn load_bundle(paths: &SplitPaths, input: &InputArgs) -> Result<DatasetBundle> {
    let train = load_corpus(&paths.train, SplitKind::Train, input)?;
    let dev = paths
        .dev
        .as_deref()
        .map(|p| load_corpus(p, SplitKind::Dev, input))
        .transpose()?;
    let test = paths
        .test
        .as_deref()
        .map(|p| load_corpus(p, SplitKind::Test, input))
        .transpose()?;
    Ok(DatasetBundle::new(train, dev, test)?)
}

/// Loads judgment files. Sets sharing an annotator name are merged when they
/// cover disjoint instances; a set that re-judges instances (for example the
/// same file passed twice) is kept as a separate annotator tagged with its path.
fn load_judgments(files: &[PathBuf]) -> Result<Vec<JudgmentSet>> {
    let mut merged: Vec<JudgmentSet> = Vec::new();
    for path in files {
        let sets = annotation::read_judgments(open(path)?).with_context(|| path.display().to_string())?;
        for mut set in sets {
            let existing = merged.iter_mut().find(|m| m.annotator == set.annotator);
            match existing {
                Some(existing) if set.judgments.keys().all(|id| !existing.judgments.contains_key(id)) => {
                    existing.judgments.append(&mut set.judgments);
                }
                Some(_) => {
                    set.annotator = format!("{}@{}", set.annotator, path.display());
                    if merged.iter().any(|m| m.annotator == set.annotator) {
                        bail!("{}: annotator {:?} repeated", path.display(), set.annotator);
                    }
                    merged.push(set);
                }
                None => merged.push(set),
            }
        }
    }
    Ok(merged)
}

fn emit(console: &mut Console<'_>, output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(path) => std::fs::write(path, text).with_context(|| format!("{}: cannot write", path.display())),
        None => console.out.write_all(text.as_bytes()).context("writing to stdout"),
    }
}

fn cmd_eval(args: EvalArgs, console: &mut Console<'_>) -> Result<()> {
    if args.require_test && args.paths.test.is_none() {
        bail!("--require-test given but no --test split supplied");
    }
    let bundle = load_bundle(&args.paths, &args.input)?;

    let mut by_split: BTreeMap<SplitKind, Vec<PathBuf>> = BTreeMap::new();
    for spec in &args.annotations {
        let (split, path) = spec
            .split_once('=')
            .ok_or_else(|| anyhow!("--annotations expects SPLIT=PATH, got `{spec}`"))?;
        let split: SplitKind = split.parse().map_err(|e: String| anyhow!(e))?;
        by_split.entry(split).or_default().push(PathBuf::from(path));
    }
    let mut external = ExternalInputs {
        model_scores: args.scores,
        accuracy: BTreeMap::new(),
    };
    for (split, files) in by_split {
        let sets = load_judgments(&files)?;
        let result = annotation::accuracy_from_annotations(&sets).with_context(|| format!("{split} annotations"))?;
        external.accuracy.insert(split, result);
    }

    let name = args.name.clone().unwrap_or_else(|| {
        args.paths
            .train
            .parent()
            .and_then(Path::file_name)
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".into())
    });
    let report = report::evaluate(&name, &bundle, &external);
    for w in &report.warnings {
        console.warn(w);
    }
    let text = match args.report {
        ReportFormat::Json => report::render_json(&report),
        ReportFormat::Md => report::render_markdown(&report),
    };
    emit(console, args.output.as_deref(), &text)
}

fn cmd_adjust(args: AdjustArgs, console: &mut Console<'_>) -> Result<()> {
    let bundle = load_bundle(&args.paths, &args.input)?;
    let spec = AdjustmentSpec::new(args.metric, args.targets)?
        .with_seed(args.seed)
        .with_tolerance(args.tolerance)
        .with_min_size(args.min_size);
    let results: Vec<AdjustmentResult> = if args.metric == TargetMetric::EnNullR {
        let r = adjustment::adjust_traindev_ennullr(&bundle, &spec)?;
        std::iter::once(r.train).chain(r.dev).collect()
    } else {
        vec![adjustment::adjust_test_sets(&bundle, &spec)?]
    };
    for result in &results {
        let written = result.write_to(&args.out_dir)?;
        if result.reused_instances {
            console.warn(&format!(
                "{}: zero-rate subset reuses instances of the other subsets",
                result.split
            ));
        }
        let (manifest, files) = written.split_last().expect("manifest is always written");
        for ((target, achieved), path) in result.targets.iter().zip(&result.achieved).zip(files) {
            writeln!(
                console.out,
                "{} {} target={target:.2} achieved={achieved:.4} size={} -> {}",
                result.split,
                result.metric,
                result.size,
                path.display()
            )?;
        }
        writeln!(console.out, "manifest -> {}", manifest.display())?;
    }
    Ok(())
}

fn cmd_sample(args: SampleArgs, console: &mut Console<'_>) -> Result<()> {
    let corpus = load_corpus(&args.input, args.split, &args.format)?;
    let sample = annotation::sample_for_annotation(&corpus, args.size, args.seed)?;
    if sample.short {
        console.warn(&format!(
            "{}: only {} instances available, {} requested",
            sample.split,
            sample.instance_ids.len(),
            sample.requested
        ));
    }
    let text = canonical::to_string(&json!({
        "split": sample.split.as_str(),
        "seed": sample.seed,
        "requested": sample.requested,
        "short": sample.short,
        "instance_ids": sample.instance_ids,
    }));
    emit(console, args.output.as_deref(), &text)
}

fn cmd_kappa(args: JudgmentArgs, console: &mut Console<'_>) -> Result<()> {
    let sets = load_judgments(&args.files)?;
    if sets.len() < 2 {
        bail!("kappa needs at least two annotators, found {}", sets.len());
    }
    let pairs = annotation::pairwise_kappa(&sets)?;
    let lookup: BTreeMap<(&str, &str), f64> = pairs
        .iter()
        .flat_map(|p| {
            [
                ((p.a.as_str(), p.b.as_str()), p.kappa),
                ((p.b.as_str(), p.a.as_str()), p.kappa),
            ]
        })
        .collect();
    let names: Vec<&str> = sets.iter().map(|s| s.annotator.as_str()).collect();
    let width = names.iter().map(|n| n.len()).max().unwrap_or(0).max(6);
    write!(console.out, "{:width$}", "")?;
    for n in &names {
        write!(console.out, "  {n:>width$}")?;
    }
    writeln!(console.out)?;
    for a in &names {
        write!(console.out, "{a:width$}")?;
        for b in &names {
            let k = if a == b { 1.0 } else { lookup[&(*a, *b)] };
            write!(console.out, "  {:>width$}", format!("{k:.4}"))?;
        }
        writeln!(console.out)?;
    }
    for p in pairs.iter().filter(|p| p.kappa <= annotation::KAPPA_THRESHOLD) {
        console.warn(&format!(
            "kappa({}, {}) = {:.4} does not exceed {}",
            p.a,
            p.b,
            p.kappa,
            annotation::KAPPA_THRESHOLD
        ));
    }
    Ok(())
}

fn cmd_accuracy(args: JudgmentArgs, console: &mut Console<'_>) -> Result<()> {
    let sets = load_judgments(&args.files)?;
    let result = annotation::accuracy_from_annotations(&sets)?;
    let kappa = result
        .min_pairwise_kappa
        .map_or_else(|| "n/a".to_owned(), |k| format!("{k:.4}"));
    writeln!(
        console.out,
        "Acc={:.4} judged={} annotators={} min_kappa={kappa}",
        result.value.value, result.judged, result.annotators
    )?;
    for w in &result.warnings {
        console.warn(w);
    }
    Ok(())
}
