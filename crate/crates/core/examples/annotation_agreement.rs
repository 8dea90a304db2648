//! Draw an annotation sample, simulate three annotators, then compute
//! pairwise Cohen's kappa and majority-vote accuracy.
//!
//! ```text
//! cargo run --example annotation_agreement
//! ```

use nerqa::annotation::{self, Judgment, JudgmentSet};
use nerqa::synthetic::{synthetic_bundle, SyntheticSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> anyhow::Result<()> {
    let bundle = synthetic_bundle(&SyntheticSpec::default());
    let sample = annotation::sample_for_annotation(bundle.train(), annotation::DEFAULT_SAMPLE_SIZE, 7)?;
    println!(
        "sampled {} of {} train instances (seed {})",
        sample.instance_ids.len(),
        bundle.train().len(),
        sample.seed
    );

    // hidden truth: about 85% of the sampled labels are correct
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let truth: Vec<bool> = sample.instance_ids.iter().map(|_| rng.random_bool(0.85)).collect();

    let annotator = |name: &str, flip: f64, rng: &mut ChaCha8Rng| {
        let judgments = sample.instance_ids.iter().zip(&truth).map(|(&id, &ok)| {
            let seen = if rng.random_bool(flip) { !ok } else { ok };
            (id, if seen { Judgment::Accurate } else { Judgment::Inaccurate })
        });
        JudgmentSet::new(name, judgments)
    };
    let careful = vec![
        annotator("ann1", 0.02, &mut rng),
        annotator("ann2", 0.03, &mut rng),
        annotator("ann3", 0.02, &mut rng),
    ];
    report("careful annotators", &careful)?;

    let mut noisy = careful.clone();
    noisy[2] = annotator("ann3", 0.25, &mut rng);
    report("one noisy annotator", &noisy)?;
    Ok(())
}

fn report(title: &str, sets: &[JudgmentSet]) -> anyhow::Result<()> {
    println!("\n{title}");
    for p in annotation::pairwise_kappa(sets)? {
        println!("  kappa({}, {}) = {:.4}", p.a, p.b, p.kappa);
    }
    let acc = annotation::accuracy_from_annotations(sets)?;
    println!("  Acc = {:.2} over {} judged instances", acc.value.value, acc.judged);
    if acc.below_threshold {
        println!(
            "  agreement gate failed (kappa must exceed {})",
            annotation::KAPPA_THRESHOLD
        );
    }
    for w in &acc.warnings {
        println!("  warning: {w}");
    }
    Ok(())
}
