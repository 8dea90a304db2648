mod common;

use nerqa::adjustment::{self, AdjustmentSpec, TargetMetric};
use nerqa::annotation::{self, Judgment, JudgmentSet};
use nerqa::corpus::{parse_conll, Corpus, DatasetBundle, ParseOptions, SplitKind};
use nerqa::metrics::{self, ModelScores};
use proptest::prelude::*;

type Rows = Vec<(Vec<String>, Vec<String>)>;

fn rows(max_instances: usize) -> impl Strategy<Value = Rows> {
    any::<u64>().prop_map(move |seed| common::random_rows(&mut common::rng(seed), max_instances, 12))
}

fn rows_of(c: &Corpus) -> Rows {
    c.instances()
        .iter()
        .map(|i| (i.tokens().to_vec(), i.labels().to_vec()))
        .collect()
}

fn tagged_tokens() -> impl Strategy<Value = Rows> {
    let token = "[^\\s]{1,6}".prop_filter("docstart marker", |t| !t.starts_with("-DOCSTART-"));
    let label = prop_oneof![
        Just("O".to_owned()),
        Just("B-PER".to_owned()),
        Just("I-PER".to_owned()),
        Just("B-LOC".to_owned()),
    ];
    prop::collection::vec(prop::collection::vec((token, label), 1..8), 0..10).prop_map(|instances| {
        instances
            .into_iter()
            .map(|pairs| {
                let (tokens, mut labels): (Vec<String>, Vec<String>) = pairs.into_iter().unzip();
                // make the sequence valid BIO2 so strict parsing accepts it
                for i in 0..labels.len() {
                    if labels[i] == "I-PER" && (i == 0 || labels[i - 1].ends_with("LOC") || labels[i - 1] == "O") {
                        labels[i] = "B-PER".to_owned();
                    }
                }
                (tokens, labels)
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn ratios_stay_in_unit_interval(seed in any::<u64>()) {
        let bundle = common::random_bundle(&mut common::rng(seed), 30, 12);
        for c in bundle.splits() {
            for v in [
                metrics::redundancy(c).map(|v| v.value),
                metrics::entity_density(c).map(|v| v.value),
                metrics::entity_null_rate(c).map(|v| v.value),
                metrics::entity_ambiguity(c).map(|(v, _)| v.value),
            ].into_iter().flatten() {
                prop_assert!((0.0..=1.0).contains(&v));
            }
            if let Ok((v, _)) = metrics::entity_imbalance(c) {
                prop_assert!(v.value >= 0.0);
            }
        }
        for v in [metrics::leakage_ratio(&bundle), metrics::unseen_entity_ratio(&bundle)].into_iter().flatten() {
            prop_assert!((0.0..=1.0).contains(&v.value));
        }
    }

    #[test]
    fn model_differentiation_ignores_order(
        scores in prop::collection::vec(0.0f64..100.0, 2..8).prop_shuffle(),
        rotate in 0usize..8,
    ) {
        let mut rotated = scores.clone();
        rotated.rotate_left(rotate % scores.len());
        let a = metrics::model_differentiation(&ModelScores::new(scores).unwrap()).value;
        let b = metrics::model_differentiation(&ModelScores::new(rotated).unwrap()).value;
        prop_assert!(a >= 0.0);
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
    }

    #[test]
    fn instance_order_does_not_matter(r in rows(30), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let mut shuffled = r.clone();
        shuffled.shuffle(&mut common::rng(seed));
        let a = common::build(SplitKind::Test, &r);
        let b = common::build(SplitKind::Test, &shuffled);
        prop_assert_eq!(metrics::redundancy(&a).ok().map(|v| v.value), metrics::redundancy(&b).ok().map(|v| v.value));
        prop_assert_eq!(metrics::entity_imbalance(&a).ok().map(|v| v.0.value), metrics::entity_imbalance(&b).ok().map(|v| v.0.value));
        prop_assert_eq!(metrics::entity_ambiguity(&a).ok().map(|v| v.1), metrics::entity_ambiguity(&b).ok().map(|v| v.1));
    }

    #[test]
    fn doubled_corpus_is_at_least_half_redundant(r in rows(30)) {
        prop_assume!(!r.is_empty());
        let doubled: Rows = r.iter().chain(r.iter()).cloned().collect();
        let c = common::build(SplitKind::Train, &doubled);
        prop_assert!(metrics::redundancy(&c).unwrap().value >= 0.5);
    }

    #[test]
    fn duplicating_corpus_keeps_ambiguity(r in rows(30)) {
        let single = common::build(SplitKind::Train, &r);
        let doubled: Rows = r.iter().chain(r.iter()).cloned().collect();
        let doubled = common::build(SplitKind::Train, &doubled);
        prop_assert_eq!(
            metrics::entity_ambiguity(&single).ok().map(|v| v.0.value),
            metrics::entity_ambiguity(&doubled).ok().map(|v| v.0.value)
        );
    }

    #[test]
    fn conll_round_trip(r in tagged_tokens()) {
        let strict = ParseOptions { strict: true, ..Default::default() };
        let c = common::build(SplitKind::Dev, &r);
        let back = parse_conll(&c.to_conll(), SplitKind::Dev, strict).unwrap();
        prop_assert_eq!(back, c);
    }

    #[test]
    fn mention_count_matches_begin_tags(r in rows(20)) {
        let c = common::build(SplitKind::Train, &r);
        for inst in c.instances() {
            let begins = inst.labels().iter().filter(|l| l.starts_with("B-")).count();
            prop_assert_eq!(inst.mention_count(), begins);
            prop_assert_eq!(c.mentions(inst).len(), begins);
        }
    }

    #[test]
    fn unseen_ratio_is_monotone(r_train in rows(20), r_test in rows(20)) {
        let test = common::build(SplitKind::Test, &r_test);
        prop_assume!(!test.entity_set().is_empty());
        let base = DatasetBundle::new(common::build(SplitKind::Train, &r_train), None, Some(test)).unwrap();
        let before = metrics::unseen_entity_ratio(&base).unwrap().value;

        let novel = (vec!["zz_novel".to_owned()], vec!["B-ORG".to_owned()]);
        let mut grown_test = r_test.clone();
        grown_test.push(novel.clone());
        let more_test = DatasetBundle::new(
            common::build(SplitKind::Train, &r_train), None, Some(common::build(SplitKind::Test, &grown_test)),
        ).unwrap();
        prop_assert!(metrics::unseen_entity_ratio(&more_test).unwrap().value >= before);

        // teaching train one of the test surfaces cannot raise the ratio
        let mut grown_train = r_train.clone();
        grown_train.extend(r_test.iter().filter(|(_, l)| l.iter().any(|x| x != "O")).take(1).cloned());
        let more_train = DatasetBundle::new(
            common::build(SplitKind::Train, &grown_train), None, Some(common::build(SplitKind::Test, &r_test)),
        ).unwrap();
        prop_assert!(metrics::unseen_entity_ratio(&more_train).unwrap().value <= before);
    }

    #[test]
    fn kappa_is_symmetric_and_bounded(a in prop::collection::vec(any::<bool>(), 1..40), flips in prop::collection::vec(any::<bool>(), 40)) {
        let to_j = |x: bool| if x { Judgment::Accurate } else { Judgment::Inaccurate };
        let x = JudgmentSet::new("x", a.iter().enumerate().map(|(i, &v)| (i, to_j(v))));
        let y = JudgmentSet::new("y", a.iter().enumerate().map(|(i, &v)| (i, to_j(v ^ flips[i]))));
        let k1 = annotation::cohen_kappa(&x, &y).unwrap();
        let k2 = annotation::cohen_kappa(&y, &x).unwrap();
        prop_assert_eq!(k1, k2);
        prop_assert!((-1.0..=1.0).contains(&k1));
        prop_assert_eq!(annotation::cohen_kappa(&x, &x).unwrap(), 1.0);
        let acc = annotation::accuracy_from_annotations(&[x, y]).unwrap().value.value;
        prop_assert!((0.0..=1.0).contains(&acc));
    }

    #[test]
    fn leakage_subsets_are_disjoint_and_exact(seed in any::<u64>(), pos in 10usize..40, neg in 10usize..40) {
        let mut rng = common::rng(seed);
        let train = common::random_rows(&mut rng, 40, 6);
        prop_assume!(!train.is_empty());
        let mut test: Rows = (0..pos).map(|i| train[i % train.len()].clone()).collect();
        test.extend((0..neg).map(|i| (vec![format!("fresh{i}")], vec!["O".to_owned()])));
        let bundle = DatasetBundle::new(
            common::build(SplitKind::Train, &train), None, Some(common::build(SplitKind::Test, &test)),
        ).unwrap();
        let spec = AdjustmentSpec::new(TargetMetric::Leakage, vec![0.8, 0.2]).unwrap().with_seed(seed);
        match adjustment::adjust_test_sets(&bundle, &spec) {
            Ok(res) => {
                let a = res.member_ids(0);
                let b = res.member_ids(1);
                prop_assert_eq!(a.len(), res.size);
                prop_assert_eq!(b.len(), res.size);
                prop_assert!(a.iter().all(|id| !b.contains(id)));
                prop_assert_eq!(&res.achieved, &vec![0.8, 0.2]);
                let refs = [bundle.train()];
                for (i, sub) in res.subsets.iter().enumerate() {
                    prop_assert_eq!(metrics::leakage_against(sub, &refs).unwrap(), res.achieved[i]);
                }
                prop_assert_eq!(rows_of(&res.subsets[0]).len(), res.size);
            }
            Err(e) => prop_assert!(matches!(e, adjustment::AdjustmentError::UnreachableTarget { .. }), "{e}"),
        }
    }
}
