//! Seeded synthetic NER datasets for benchmarks, demos and tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Corpus, CorpusBuilder, DatasetBundle, ParseOptions, SplitKind};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub train: usize,
    pub dev: usize,
    pub test: usize,
    /// Average tokens per instance; lengths are uniform in `[mean/2, 3*mean/2]`.
    pub mean_tokens: usize,
    /// Probability that an instance carries no entity.
    pub null_rate: f64,
    pub entity_types: usize,
    /// Number of distinct entity surfaces shared by all splits.
    pub vocabulary: usize,
    /// Probability that a test mention uses a surface never seen in train.
    pub novel_rate: f64,
    /// Probability that a surface gets a random type instead of its usual one.
    pub type_noise: f64,
    /// Probability that a test instance is a verbatim copy of a train instance.
    pub leak_rate: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            train: 800,
            dev: 100,
            test: 100,
            mean_tokens: 20,
            null_rate: 0.3,
            entity_types: 4,
            vocabulary: 500,
            novel_rate: 0.3,
            type_noise: 0.05,
            leak_rate: 0.02,
            seed: 0,
        }
    }
}

struct Generator<'a> {
    spec: &'a SyntheticSpec,
    rng: ChaCha8Rng,
}

impl Generator<'_> {
    fn instance(&mut self, novel_rate: f64) -> (Vec<String>, Vec<String>) {
        let spec = self.spec;
        let mean = spec.mean_tokens.max(2);
        let len = self.rng.random_range(mean / 2..=mean + mean / 2).max(1);
        let mut tokens: Vec<String> = (0..len)
            .map(|_| format!("w{}", self.rng.random_range(0..5000u32)))
            .collect();
        let mut labels = vec!["O".to_owned(); len];
        if self.rng.random_bool(spec.null_rate) {
            return (tokens, labels);
        }
        let mentions = self.rng.random_range(1..=3usize);
        for _ in 0..mentions {
            let width = self.rng.random_range(1..=2usize).min(len);
            let start = self.rng.random_range(0..=len - width);
            if labels[start..start + width].iter().any(|l| l != "O") {
                continue;
            }
            let novel = self.rng.random_bool(novel_rate);
            let surface = if novel {
                spec.vocabulary + self.rng.random_range(0..spec.vocabulary.max(1) * 4)
            } else {
                self.rng.random_range(0..spec.vocabulary.max(1))
            };
            let etype = if self.rng.random_bool(spec.type_noise) {
                self.rng.random_range(0..spec.entity_types.max(1))
            } else {
                surface % spec.entity_types.max(1)
            };
            for k in 0..width {
                tokens[start + k] = format!("E{surface}_{k}");
                let prefix = if k == 0 { 'B' } else { 'I' };
                labels[start + k] = format!("{prefix}-T{etype}");
            }
        }
        (tokens, labels)
    }

    fn corpus(&mut self, split: SplitKind, n: usize, novel_rate: f64, leak_from: Option<&Corpus>) -> Corpus {
        let mut builder = CorpusBuilder::new(split, ParseOptions::default());
        for _ in 0..n {
            let (tokens, labels) = match leak_from.filter(|c| !c.is_empty()) {
                Some(src) if self.rng.random_bool(self.spec.leak_rate) => {
                    let inst = &src.instances()[self.rng.random_range(0..src.len())];
                    (inst.tokens().to_vec(), inst.labels().to_vec())
                }
                _ => self.instance(novel_rate),
            };
            builder.push(tokens, labels).expect("generated labels are valid BIO2");
        }
        builder.build()
    }
}

/// Generates a train/dev/test bundle; splits with zero size are omitted
/// (train is always present).
pub fn synthetic_bundle(spec: &SyntheticSpec) -> DatasetBundle {
    let mut generator = Generator {
        spec,
        rng: ChaCha8Rng::seed_from_u64(spec.seed),
    };
    let train = generator.corpus(SplitKind::Train, spec.train, 0.0, None);
    let dev = (spec.dev > 0).then(|| generator.corpus(SplitKind::Dev, spec.dev, spec.novel_rate, None));
    let test = (spec.test > 0).then(|| generator.corpus(SplitKind::Test, spec.test, spec.novel_rate, Some(&train)));
    DatasetBundle::new(train, dev, test).expect("splits share one scheme")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_sized() {
        let spec = SyntheticSpec::default();
        let a = synthetic_bundle(&spec);
        let b = synthetic_bundle(&spec);
        assert_eq!(a.train(), b.train());
        assert_eq!(a.test(), b.test());
        assert_eq!(a.train().len(), 800);
        assert_eq!(a.dev().unwrap().len(), 100);
    }

    #[test]
    fn zero_sized_splits_are_absent() {
        let b = synthetic_bundle(&SyntheticSpec {
            dev: 0,
            test: 0,
            ..Default::default()
        });
        assert!(b.dev().is_none() && b.test().is_none());
    }
}
