use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::seed;
use crate::Label;

/// Fold index for every sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldAssignment {
    pub k: usize,
    pub fold_of: Vec<usize>,
}

impl FoldAssignment {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len()).filter(|&i| self.fold_of[i] == fold).collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len()).filter(|&i| self.fold_of[i] != fold).collect()
    }

    /// `(controls, pd)` held out in `fold`.
    pub fn class_counts(&self, fold: usize, labels: &[Label]) -> (usize, usize) {
        self.test_indices(fold).iter().fold((0, 0), |(c, p), &i| match labels[i] {
            Label::Control => (c + 1, p),
            Label::Pd => (c, p + 1),
        })
    }
}

/// Shuffles each class with `derive(seed, "stratify", class)` and deals its
/// members round-robin over the folds. The dealing position carries over
/// from one class to the next so fold sizes also stay within one.
pub fn stratified_folds(labels: &[Label], k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("k = {k}: need at least two folds")));
    }
    let mut fold_of = vec![0; labels.len()];
    let mut next = 0;
    for class in [Label::Control, Label::Pd] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if members.len() < k {
            return Err(Error::InvalidArgument(format!(
                "class {class} has {} samples, fewer than {k} folds",
                members.len()
            )));
        }
        members.shuffle(&mut seed::derived_rng(seed, "stratify", class.index() as u64));
        for i in members {
            fold_of[i] = next % k;
            next += 1;
        }
    }
    Ok(FoldAssignment { k, fold_of })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cohort(control: usize, pd: usize) -> Vec<Label> {
        let mut v = vec![Label::Control; control];
        v.extend(vec![Label::Pd; pd]);
        v
    }

    #[test]
    fn cohort_fold_counts() {
        let labels = cohort(194, 448);
        let f = stratified_folds(&labels, 10, 1).unwrap();
        for fold in 0..10 {
            let (c, p) = f.class_counts(fold, &labels);
            assert!((19..=20).contains(&c), "fold {fold}: {c} controls");
            assert!((44..=45).contains(&p), "fold {fold}: {p} pd");
        }
        assert_eq!(f, stratified_folds(&labels, 10, 1).unwrap());
        assert_ne!(f, stratified_folds(&labels, 10, 2).unwrap());
    }

    #[test]
    fn degenerate_requests() {
        let labels = cohort(20, 20);
        assert!(stratified_folds(&labels, 1, 0).is_err());
        assert!(stratified_folds(&cohort(3, 20), 5, 0).is_err());
    }

    #[test]
    fn train_and_test_partition() {
        let labels = cohort(13, 27);
        let f = stratified_folds(&labels, 4, 3).unwrap();
        for fold in 0..4 {
            let mut all = f.test_indices(fold);
            all.extend(f.train_indices(fold));
            all.sort();
            assert_eq!(all, (0..40).collect::<Vec<_>>());
        }
    }
}
