//! Stratified train/validation/test splitting.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::funcdata::FunctionalDataset;

/// Disjoint index lists covering a dataset exactly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

/// Stratified split with global part sizes `floor(ratio * n)` for validation
/// and test, remainder to train. Deterministic given `seed`.
///
/// Within each class the validation/test quotas follow a largest-remainder
/// allocation so every class stays balanced within +-1 of its share.
pub fn split_dataset(
    dataset: &FunctionalDataset,
    ratios: (f64, f64, f64),
    seed: u64,
) -> Result<SplitIndices> {
    let (r_train, r_val, r_test) = ratios;
    if r_train <= 0.0 || r_val <= 0.0 || r_test <= 0.0 {
        return Err(Error::Invalid("split ratios must be positive".into()));
    }
    if (r_train + r_val + r_test - 1.0).abs() > 1e-9 {
        return Err(Error::Invalid("split ratios must sum to 1".into()));
    }
    if dataset.is_empty() {
        return Err(Error::Invalid("cannot split an empty dataset".into()));
    }
    let n = dataset.len();
    let k = dataset.k();

    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, &y) in dataset.labels().iter().enumerate() {
        by_class[y - 1].push(i);
    }
    for (c, members) in by_class.iter().enumerate() {
        if members.len() < 3 {
            return Err(Error::Stratification(format!(
                "class {} has {} samples; need at least one per split part",
                c + 1,
                members.len()
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for members in &mut by_class {
        members.shuffle(&mut rng);
    }

    let target_val = (r_val * n as f64).floor() as usize;
    let target_test = (r_test * n as f64).floor() as usize;

    let class_sizes: Vec<usize> = by_class.iter().map(|m| m.len()).collect();
    let val_quota = allocate(&class_sizes, r_val, target_val);
    let test_quota = allocate(&class_sizes, r_test, target_test);

    let mut split = SplitIndices {
        train: Vec::new(),
        validation: Vec::new(),
        test: Vec::new(),
    };
    for (c, members) in by_class.iter().enumerate() {
        let nv = val_quota[c];
        let nt = test_quota[c];
        if nv + nt >= members.len() {
            return Err(Error::Stratification(format!(
                "class {} too small for the requested ratios",
                c + 1
            )));
        }
        split.validation.extend(&members[..nv]);
        split.test.extend(&members[nv..nv + nt]);
        split.train.extend(&members[nv + nt..]);
    }
    split.train.sort_unstable();
    split.validation.sort_unstable();
    split.test.sort_unstable();
    Ok(split)
}

/// Largest-remainder allocation of `target` slots across classes
/// proportionally to `ratio * size`.
fn allocate(class_sizes: &[usize], ratio: f64, target: usize) -> Vec<usize> {
    let mut quotas: Vec<usize> = Vec::with_capacity(class_sizes.len());
    let mut remainders: Vec<(usize, f64)> = Vec::with_capacity(class_sizes.len());
    for (c, &nk) in class_sizes.iter().enumerate() {
        let share = ratio * nk as f64;
        let q = share.floor() as usize;
        quotas.push(q);
        remainders.push((c, share - q as f64));
    }
    let assigned: usize = quotas.iter().sum();
    let deficit = target.saturating_sub(assigned);
    // Ties break toward the lower class index.
    remainders.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    for &(c, _) in remainders.iter().take(deficit) {
        quotas[c] += 1;
    }
    quotas
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcdata::{FunctionalSample, GridSpec};

    fn toy_dataset(labels: Vec<usize>, k: usize) -> FunctionalDataset {
        let grid = GridSpec::unit(vec![2]).unwrap();
        let samples = labels
            .iter()
            .map(|&y| FunctionalSample::new(vec![vec![y as f64, 0.0]]))
            .collect();
        FunctionalDataset::new(samples, labels, vec![grid], k).unwrap()
    }

    #[test]
    fn sizes_follow_floor_rule() {
        let ds = toy_dataset(vec![1, 1, 1, 1, 1, 2, 2, 2, 2, 2], 2);
        let s = split_dataset(&ds, (0.6, 0.2, 0.2), 7).unwrap();
        assert_eq!(s.train.len(), 6);
        assert_eq!(s.validation.len(), 2);
        assert_eq!(s.test.len(), 2);
    }

    #[test]
    fn deterministic_given_seed() {
        let ds = toy_dataset((0..60).map(|i| i % 3 + 1).collect(), 3);
        let a = split_dataset(&ds, (0.6, 0.2, 0.2), 42).unwrap();
        let b = split_dataset(&ds, (0.6, 0.2, 0.2), 42).unwrap();
        assert_eq!(a, b);
        let c = split_dataset(&ds, (0.6, 0.2, 0.2), 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn balanced_three_class_split_is_balanced() {
        let ds = toy_dataset((0..300).map(|i| i % 3 + 1).collect(), 3);
        let s = split_dataset(&ds, (0.6, 0.2, 0.2), 1).unwrap();
        for part in [&s.train, &s.validation, &s.test] {
            let mut counts = [0usize; 3];
            for &i in part.iter() {
                counts[ds.labels()[i] - 1] += 1;
            }
            let max = counts.iter().max().unwrap();
            let min = counts.iter().min().unwrap();
            assert!(max - min <= 1, "counts {counts:?}");
        }
    }

    #[test]
    fn disjoint_and_exhaustive() {
        for n in [9usize, 10, 37, 100] {
            let ds = toy_dataset((0..n).map(|i| i % 3 + 1).collect(), 3);
            let s = split_dataset(&ds, (0.5, 0.3, 0.2), 5).unwrap();
            let mut all: Vec<usize> = s
                .train
                .iter()
                .chain(&s.validation)
                .chain(&s.test)
                .copied()
                .collect();
            all.sort_unstable();
            assert_eq!(all, (0..n).collect::<Vec<_>>(), "n={n}");
        }
    }

    #[test]
    fn tiny_class_is_rejected() {
        let ds = toy_dataset(vec![1, 1, 1, 1, 2, 2], 2);
        // class 2 has 2 samples < 3 parts
        assert!(matches!(
            split_dataset(&ds, (0.6, 0.2, 0.2), 0),
            Err(Error::Stratification(_))
        ));
    }
}
