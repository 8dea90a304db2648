//! Load a character-level JSONL span corpus (as used by Chinese NER
//! datasets) and report its metrics. Surfaces join characters without spaces.
//!
//! ```text
//! cargo run --example jsonl_spans
//! ```

use nerqa::corpus::{self, DatasetBundle, SplitKind};
use nerqa::report::{self, ExternalInputs};

fn main() -> anyhow::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/spans.jsonl");
    let file = std::io::BufReader::new(std::fs::File::open(path)?);
    let train = corpus::read_jsonl_spans(file, SplitKind::Train)?;

    for inst in train.instances() {
        let mentions: Vec<String> = train
            .mentions(inst)
            .iter()
            .map(|m| format!("{}:{}", m.surface, m.etype))
            .collect();
        println!("#{} {:>2} chars  {}", inst.id(), inst.len(), mentions.join(" "));
    }

    // "北京" is an address in one sentence and an organization in another
    let bundle = DatasetBundle::new(train, None, None)?;
    let r = report::evaluate("spans", &bundle, &ExternalInputs::default());
    print!("\n{}", report::render_markdown(&r));
    Ok(())
}
