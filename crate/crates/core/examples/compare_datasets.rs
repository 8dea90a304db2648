//! Compare several datasets side by side in one Markdown table, the way a
//! benchmark survey would.
//!
//! ```text
//! cargo run --example compare_datasets
//! ```

use nerqa::report::{self, ExternalInputs};
use nerqa::synthetic::{synthetic_bundle, SyntheticSpec};

fn main() {
    let variants = [
        (
            "clean",
            SyntheticSpec {
                leak_rate: 0.0,
                type_noise: 0.0,
                null_rate: 0.1,
                seed: 1,
                ..Default::default()
            },
        ),
        (
            "leaky",
            SyntheticSpec {
                leak_rate: 0.2,
                seed: 2,
                ..Default::default()
            },
        ),
        (
            "sparse",
            SyntheticSpec {
                null_rate: 0.7,
                mean_tokens: 40,
                seed: 3,
                ..Default::default()
            },
        ),
        (
            "noisy",
            SyntheticSpec {
                type_noise: 0.4,
                entity_types: 12,
                seed: 4,
                ..Default::default()
            },
        ),
    ];
    let reports: Vec<_> = variants
        .iter()
        .map(|(name, spec)| report::evaluate(name, &synthetic_bundle(spec), &ExternalInputs::default()))
        .collect();
    print!("{}", report::render_markdown_table(&reports));
}
