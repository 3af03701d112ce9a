//! Allocates ground-truth lines into N folds and derives the N
//! leave-one-fold-out train/test splits.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Error;
use crate::evaluation::corpus_cer;
use crate::Result;

/// One leave-one-fold-out split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub fold: usize,
    /// Sorted line indices used for training (everything outside the fold,
    /// plus any test lines moved over by `train_extra`).
    pub train: Vec<usize>,
    /// Sorted line indices used for testing.
    pub test: Vec<usize>,
}

/// Assignment of line indices to folds plus the derived splits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub n_folds: usize,
    /// `assignment[line] == fold`.
    pub assignment: Vec<usize>,
    pub splits: Vec<Split>,
    /// Test lines moved into training per split (0 = none).
    pub train_extra: usize,
}

impl FoldPlan {
    /// One `line_id TAB fold_id` pair per line, 0-based, trailing newline.
    pub fn render_tsv(&self) -> String {
        let mut out = String::new();
        for (line, fold) in self.assignment.iter().enumerate() {
            let _ = writeln!(out, "{line}\t{fold}");
        }
        out
    }

    pub fn fold_size(&self, fold: usize) -> usize {
        self.assignment.iter().filter(|&&f| f == fold).count()
    }
}

/// Plans `n_folds` folds over `n_lines` lines. Without a seed the folds are
/// contiguous blocks in input order, remainders going to the earliest
/// folds; with a seed a deterministic permutation precedes the blocking.
/// `train_extra` moves that many test lines (the lowest indices) into the
/// train side of every split.
pub fn make_fold_plan(
    n_lines: usize,
    n_folds: usize,
    shuffle_seed: Option<u64>,
    train_extra: usize,
) -> Result<FoldPlan> {
    if n_folds < 2 {
        return Err(Error::InvalidArgument("need at least 2 folds".to_string()));
    }
    if n_lines < n_folds {
        return Err(Error::InvalidArgument(format!(
            "cannot split {n_lines} lines into {n_folds} folds"
        )));
    }
    let smallest_fold = n_lines / n_folds;
    if train_extra >= smallest_fold {
        return Err(Error::InvalidArgument(format!(
            "train_extra {train_extra} must be smaller than the smallest fold ({smallest_fold})"
        )));
    }

    let mut order: Vec<usize> = (0..n_lines).collect();
    if let Some(seed) = shuffle_seed {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        order.shuffle(&mut rng);
    }

    let base = n_lines / n_folds;
    let remainder = n_lines % n_folds;
    let mut assignment = alloc::vec![0usize; n_lines];
    let mut cursor = 0usize;
    for fold in 0..n_folds {
        let size = base + usize::from(fold < remainder);
        for &line in &order[cursor..cursor + size] {
            assignment[line] = fold;
        }
        cursor += size;
    }

    let splits = (0..n_folds)
        .map(|fold| {
            let mut train: Vec<usize> = Vec::with_capacity(n_lines);
            let mut test: Vec<usize> = Vec::new();
            for (line, &f) in assignment.iter().enumerate() {
                if f == fold {
                    test.push(line);
                } else {
                    train.push(line);
                }
            }
            // both are ascending already; move the lowest test ids over
            let moved: Vec<usize> = test.drain(..train_extra).collect();
            train.extend(moved);
            train.sort_unstable();
            Split { fold, train, test }
        })
        .collect();

    Ok(FoldPlan {
        n_folds,
        assignment,
        splits,
        train_extra,
    })
}

/// Index of the model with the lowest corpus CER on the test fold; ties go
/// to the lowest index.
pub fn select_best_model<G: AsRef<str>>(
    test_gt: &[G],
    per_model_test_preds: &[Vec<String>],
) -> Result<usize> {
    if per_model_test_preds.is_empty() {
        return Err(Error::InvalidArgument(
            "no models to select from".to_string(),
        ));
    }
    let mut best = 0usize;
    let mut best_cer = corpus_cer(test_gt, &per_model_test_preds[0])?.cer;
    for (i, preds) in per_model_test_preds.iter().enumerate().skip(1) {
        let cer = corpus_cer(test_gt, preds)?.cer;
        if cer < best_cer {
            best = i;
            best_cer = cer;
        }
    }
    Ok(best)
}
