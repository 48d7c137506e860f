use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::seed::rng_from_seed;
use crate::error::{Error, Result};

/// Assignment of every row to one of `fold_count` folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldSplit {
    pub fold_count: usize,
    pub assignments: Vec<usize>,
    pub seed: u64,
}

impl FoldSplit {
    pub fn test_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&r| self.assignments[r] == fold)
            .collect()
    }

    pub fn train_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&r| self.assignments[r] != fold)
            .collect()
    }
}

/// Stratified k-fold assignment.
///
/// Each class is shuffled and dealt round-robin across folds; the dealing
/// offset carries over between classes so fold sizes also stay balanced.
pub fn stratified_kfold(labels: &[u8], k: usize, seed: u64) -> Result<FoldSplit> {
    if k < 2 {
        return Err(Error::domain(format!("k must be at least 2, got {k}")));
    }
    let mut rng = rng_from_seed(seed);
    let mut assignments = vec![0usize; labels.len()];
    let mut offset = 0;
    for class in 0..2u8 {
        let mut rows: Vec<usize> = (0..labels.len()).filter(|&r| labels[r] == class).collect();
        if rows.len() < k {
            return Err(Error::domain(format!(
                "class {class} has {} examples, fewer than k = {k}",
                rows.len()
            )));
        }
        rows.shuffle(&mut rng);
        for (j, &r) in rows.iter().enumerate() {
            assignments[r] = (offset + j) % k;
        }
        offset = (offset + rows.len()) % k;
    }
    Ok(FoldSplit {
        fold_count: k,
        assignments,
        seed,
    })
}

/// Stratified two-way split of `rows`: returns `(kept, held_out)` where the
/// held-out part takes `round(fraction * class_size)` rows of each class,
/// clamped so both parts keep at least one row of each class.
pub fn stratified_split(
    rows: &[usize],
    labels: &[u8],
    fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::domain(format!("split fraction {fraction} not in (0, 1)")));
    }
    let mut rng = rng_from_seed(seed);
    let mut kept = Vec::new();
    let mut held = Vec::new();
    for class in 0..2u8 {
        let mut members: Vec<usize> = rows.iter().copied().filter(|&r| labels[r] == class).collect();
        if members.len() < 2 {
            return Err(Error::domain(format!(
                "class {class} has {} rows; a stratified split needs 2",
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        let h = ((fraction * members.len() as f64).round() as usize).clamp(1, members.len() - 1);
        held.extend_from_slice(&members[..h]);
        kept.extend_from_slice(&members[h..]);
    }
    kept.sort_unstable();
    held.sort_unstable();
    Ok((kept, held))
}

/// Draws one row of each class uniformly from `pool`; returns `(class0_row, class1_row)`.
pub fn sample_initial_labels(pool: &[usize], labels: &[u8], seed: u64) -> Result<(usize, usize)> {
    let mut rng = rng_from_seed(seed);
    let mut pick = |class: u8| -> Result<usize> {
        let members: Vec<usize> = pool.iter().copied().filter(|&r| labels[r] == class).collect();
        if members.is_empty() {
            return Err(Error::domain(format!("pool has no example of class {class}")));
        }
        Ok(members[rng.gen_range(0..members.len())])
    };
    let a = pick(0)?;
    let b = pick(1)?;
    Ok((a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::seed::derive_seed;
    use proptest::prelude::*;

    #[test]
    fn ten_rows_five_folds_one_per_class() {
        let labels: Vec<u8> = (0..10).map(|i| (i % 2) as u8).collect();
        let s = stratified_kfold(&labels, 5, 3).unwrap();
        for f in 0..5 {
            let rows = s.test_rows(f);
            assert_eq!(rows.len(), 2);
            let ones = rows.iter().filter(|&&r| labels[r] == 1).count();
            assert_eq!(ones, 1);
        }
    }

    #[test]
    fn same_seed_same_assignments() {
        let labels: Vec<u8> = (0..50).map(|i| u8::from(i % 3 == 0)).collect();
        assert_eq!(
            stratified_kfold(&labels, 5, 11).unwrap(),
            stratified_kfold(&labels, 5, 11).unwrap()
        );
    }

    #[test]
    fn imbalanced_540_rows() {
        // 46 minority rows out of 540 (8.52 %)
        let labels: Vec<u8> = (0..540).map(|i| u8::from(i < 46)).collect();
        let s = stratified_kfold(&labels, 5, 0).unwrap();
        for f in 0..5 {
            let m = s.test_rows(f).iter().filter(|&&r| labels[r] == 1).count();
            assert!(m == 9 || m == 10, "fold {f} has {m}");
        }
    }

    #[test]
    fn too_few_per_class() {
        let labels = vec![0, 0, 0, 0, 0, 1, 1, 1, 1];
        assert!(stratified_kfold(&labels, 5, 0).is_err());
        assert!(stratified_kfold(&labels, 1, 0).is_err());
    }

    #[test]
    fn initial_labels_only_choice() {
        assert_eq!(sample_initial_labels(&[0, 1], &[0, 1], 9).unwrap(), (0, 1));
        assert!(sample_initial_labels(&[0, 2], &[0, 1, 0], 9).is_err());
    }

    #[test]
    fn initial_labels_uniform_within_class() {
        // class 0 = rows 0..4, class 1 = row 4
        let labels = [0u8, 0, 0, 0, 1];
        let pool: Vec<usize> = (0..5).collect();
        let draws = 1000;
        let mut counts = [0usize; 4];
        for t in 0..draws {
            let (a, _) = sample_initial_labels(&pool, &labels, derive_seed(99, &[t])).unwrap();
            counts[a] += 1;
        }
        let p = 0.25;
        let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - draws as f64 * p).abs() < 3.0 * sigma, "{counts:?}");
        }
    }

    proptest! {
        #[test]
        fn folds_partition_and_stratify(n0 in 5usize..80, n1 in 5usize..80, k in 2usize..6, seed: u64) {
            let mut labels = vec![0u8; n0];
            labels.extend(std::iter::repeat_n(1u8, n1));
            let s = stratified_kfold(&labels, k, seed).unwrap();
            prop_assert_eq!(s.assignments.len(), n0 + n1);
            prop_assert!(s.assignments.iter().all(|&f| f < k));
            let n = (n0 + n1) as f64;
            for f in 0..k {
                let rows = s.test_rows(f);
                let ones = rows.iter().filter(|&&r| labels[r] == 1).count() as f64;
                let expected = rows.len() as f64 * n1 as f64 / n;
                prop_assert!((ones - expected).abs() <= 1.0 + 1e-9);
            }
        }
    }
}
