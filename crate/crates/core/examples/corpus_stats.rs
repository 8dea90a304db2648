//! Parse a CoNLL split and inspect its mentions, entity set and tag repairs.
//!
//! ```text
//! cargo run --example corpus_stats [path/to/file.conll]
//! ```

use std::path::PathBuf;

use nerqa::corpus::{self, ParseOptions, Scheme, SplitKind};

fn main() -> anyhow::Result<()> {
    let path = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/data/news/train.conll")));
    let file = std::io::BufReader::new(std::fs::File::open(&path)?);
    let corpus = corpus::read_conll(file, SplitKind::Train, ParseOptions::default())?;

    println!(
        "{}: {} instances, {} tokens",
        path.display(),
        corpus.len(),
        corpus.token_count()
    );
    println!("types: {:?}", corpus.type_inventory());

    let mentions: Vec<_> = corpus.all_mentions().collect();
    println!(
        "{} mentions, {} distinct surfaces",
        mentions.len(),
        corpus.entity_set().len()
    );
    for m in mentions.iter().take(8) {
        println!(
            "  #{:<2} [{}, {}) {:<6} {}",
            m.instance_id, m.start, m.end, m.etype, m.surface
        );
    }

    let null = corpus.instances().iter().filter(|i| !i.has_entity()).count();
    println!("{null} instances without entities");

    // lenient parsing repairs a dangling I- tag; strict parsing rejects it
    let sloppy = "New\tI-LOC\nYork\tI-LOC\n";
    let lenient = corpus::parse_conll(sloppy, SplitKind::Dev, ParseOptions::default())?;
    println!(
        "lenient: {} repaired tag(s), labels {:?}",
        lenient.repaired_tags(),
        lenient.instances()[0].labels()
    );
    let strict = ParseOptions {
        scheme: Scheme::Bio2,
        strict: true,
        ..Default::default()
    };
    if let Err(e) = corpus::parse_conll(sloppy, SplitKind::Dev, strict) {
        println!("strict:  {e}");
    }

    // BIOES spans decode to the same mentions as their BIO2 equivalent
    let bioes = "New\tB-LOC\nYork\tE-LOC\nis\tO\nbig\tS-MISC\n";
    let opts = ParseOptions {
        scheme: Scheme::Bioes,
        ..Default::default()
    };
    let parsed = corpus::parse_conll(bioes, SplitKind::Dev, opts)?;
    let spans: Vec<_> = parsed
        .all_mentions()
        .map(|m| format!("{} ({})", m.surface, m.etype))
        .collect();
    println!("BIOES {:?} -> {spans:?}", parsed.instances()[0].labels());
    Ok(())
}
