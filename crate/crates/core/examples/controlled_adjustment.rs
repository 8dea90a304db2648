//! Build equal-size subsets that differ only in one metric: test subsets
//! with high and low unseen-entity ratios, and train subsets with high and
//! low entity-null rates. Output goes to a directory under the system temp dir.
//!
//! ```text
//! cargo run --example controlled_adjustment
//! ```

use nerqa::adjustment::{self, AdjustmentResult, AdjustmentSpec, TargetMetric};
use nerqa::synthetic::{synthetic_bundle, SyntheticSpec};

fn show(result: &AdjustmentResult) {
    println!(
        "{} / {}: N = {} per subset (seed {})",
        result.split, result.metric, result.size, result.seed
    );
    for (target, achieved) in result.targets.iter().zip(&result.achieved) {
        println!("  target {target:.2} -> achieved {achieved:.4}");
    }
}

fn main() -> anyhow::Result<()> {
    let bundle = synthetic_bundle(&SyntheticSpec {
        train: 3000,
        test: 1500,
        novel_rate: 0.5,
        null_rate: 0.4,
        seed: 9,
        ..Default::default()
    });

    let unseen = AdjustmentSpec::new(TargetMetric::Unseen, vec![0.8, 0.2])?.with_seed(1);
    let result = adjustment::adjust_test_sets(&bundle, &unseen)?;
    show(&result);

    let null = AdjustmentSpec::new(TargetMetric::EnNullR, vec![0.8, 0.2])?.with_seed(1);
    let traindev = adjustment::adjust_traindev_ennullr(&bundle, &null)?;
    show(&traindev.train);
    if let Some(dev) = &traindev.dev {
        show(dev);
    }

    // leaked instances are scarce, so leakage subsets come out small; a pool
    // that cannot support the targets is reported rather than approximated
    for targets in [vec![0.9, 0.1], vec![0.99, 0.01]] {
        let spec = AdjustmentSpec::new(TargetMetric::Leakage, targets.clone())?;
        match adjustment::adjust_test_sets(&bundle, &spec) {
            Ok(r) => show(&r),
            Err(e) => println!("leakage {targets:?}: {e}"),
        }
    }

    let dir = std::env::temp_dir().join("nerqa-adjustment-example");
    let written = result.write_to(&dir)?;
    println!("\nwrote {} files to {}", written.len(), dir.display());
    print!(
        "{}",
        std::fs::read_to_string(written.last().expect("manifest"))?
            .lines()
            .take(8)
            .collect::<Vec<_>>()
            .join("\n")
    );
    println!("\n  ...");
    Ok(())
}
