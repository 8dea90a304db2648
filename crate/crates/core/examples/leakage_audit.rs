//! Audit train/test overlap on a synthetic bundle: leaked instances, unseen
//! test entities and surfaces that carry conflicting types.
//!
//! ```text
//! cargo run --example leakage_audit
//! ```

use nerqa::metrics;
use nerqa::synthetic::{synthetic_bundle, SyntheticSpec};

fn main() -> anyhow::Result<()> {
    let bundle = synthetic_bundle(&SyntheticSpec {
        train: 2000,
        dev: 200,
        test: 500,
        leak_rate: 0.05,
        novel_rate: 0.4,
        type_noise: 0.1,
        seed: 42,
        ..Default::default()
    });
    let test = bundle.test().expect("synthetic bundle has a test split");

    let leak = metrics::leakage_ratio(&bundle)?;
    println!("LeakR     {:.4}  (scope {:?})", leak.value, leak.scope);

    let train_keys: std::collections::HashSet<_> = bundle.train().instances().iter().map(|i| i.key()).collect();
    let leaked: Vec<usize> = test
        .instances()
        .iter()
        .filter(|i| train_keys.contains(&i.key()))
        .map(|i| i.id())
        .collect();
    println!(
        "          leaked test ids: {:?}{}",
        &leaked[..leaked.len().min(10)],
        if leaked.len() > 10 { " ..." } else { "" }
    );

    let unseen = metrics::unseen_entity_ratio(&bundle)?;
    let mention_level = metrics::unseen_mention_ratio(test, &bundle.train().entity_set()).unwrap_or(0.0);
    println!("UnSeenEnR {:.4}  (mention level {:.4})", unseen.value, mention_level);

    let (amb, stats) = metrics::entity_ambiguity(bundle.train())?;
    println!(
        "EnAmb     {:.4}  ({} of {} surfaces conflict, {} of {} mentions)",
        amb.value,
        stats.conflict_count(),
        stats.unique_surfaces,
        stats.ambiguous_mentions,
        stats.total_mentions
    );
    for surface in stats.conflicting_surfaces.iter().take(5) {
        let types: std::collections::BTreeSet<_> = bundle
            .train()
            .all_mentions()
            .filter(|m| &m.surface == surface)
            .map(|m| m.etype)
            .collect();
        println!("          {surface}: {types:?}");
    }

    // the same ratios across all splits at once
    let all = metrics::conflicting_surfaces(bundle.splits());
    println!("{} surfaces conflict across train+dev+test", all.len());
    Ok(())
}
