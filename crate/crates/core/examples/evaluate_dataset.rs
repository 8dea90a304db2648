//! Evaluate a train/dev/test bundle on all nine quality metrics and print
//! the Markdown and JSON reports.
//!
//! ```text
//! cargo run --example evaluate_dataset
//! ```

use std::path::Path;

use nerqa::corpus::{self, DatasetBundle, ParseOptions, SplitKind};
use nerqa::metrics::ModelScores;
use nerqa::report::{self, ExternalInputs};

fn load(dir: &Path, split: SplitKind) -> anyhow::Result<nerqa::Corpus> {
    let text = std::fs::read_to_string(dir.join(format!("{split}.conll")))?;
    Ok(corpus::parse_conll(&text, split, ParseOptions::default())?)
}

fn main() -> anyhow::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data/news");
    let bundle = DatasetBundle::new(
        load(&dir, SplitKind::Train)?,
        Some(load(&dir, SplitKind::Dev)?),
        Some(load(&dir, SplitKind::Test)?),
    )?;

    // model scores are external: F1 of several models trained on this data
    let external = ExternalInputs {
        model_scores: Some(ModelScores::new(vec![90.0, 92.0, 94.0])?),
        ..Default::default()
    };
    let report = report::evaluate("news", &bundle, &external);

    print!("{}", report::render_markdown(&report));
    println!();
    for (split, values) in &report.per_split {
        let row: Vec<String> = values.iter().map(|(m, v)| format!("{m}={v:.3}")).collect();
        println!("{:>5}: {}", split.as_str(), row.join(" "));
    }
    println!();
    print!("{}", report::render_json(&report));
    Ok(())
}
