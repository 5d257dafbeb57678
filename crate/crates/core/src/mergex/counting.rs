//! Closed-form candidate and execution counts over search-space sizes.

use crate::mergex::MergeError;

/// Every combination of versions: `∏ N_i`.
pub fn count_candidates_upper(sizes: &[usize]) -> u64 {
    sizes.iter().map(|&n| n as u64).product()
}

/// Candidate counts when only the slot pair `(j, j+1)` restricts
/// compatibility.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PrunedBounds {
    /// `∏_{i<j} N_i · Σ_v n_v · ∏_{i>j+1} N_i`.
    pub exact: u64,
    /// The count if each version of `j` kept a single successor:
    /// `∏_{i≤j} N_i · ∏_{i≥j+2} N_i`.
    pub lower: u64,
    /// Most candidates pruning can remove: `∏ N_i − lower`.
    pub upper_removed: u64,
}

/// `j` is the 0-based slot whose versions differ in output schema;
/// `n_compat[v]` counts the versions of slot `j+1` compatible with the
/// `v`-th version of slot `j`.
pub fn pruned_count_bounds(sizes: &[usize], j: usize, n_compat: &[usize]) -> Result<PrunedBounds, MergeError> {
    if j + 1 >= sizes.len() {
        return Err(MergeError::OutOfRange(format!(
            "slot {j} has no successor among {} slots",
            sizes.len()
        )));
    }
    if n_compat.len() != sizes[j] {
        return Err(MergeError::OutOfRange(format!(
            "{} compatible-successor counts for {} versions",
            n_compat.len(),
            sizes[j]
        )));
    }
    if let Some(&bad) = n_compat.iter().find(|&&n| n == 0 || n > sizes[j + 1]) {
        return Err(MergeError::OutOfRange(format!(
            "compatible-successor count {bad} outside 1..={}",
            sizes[j + 1]
        )));
    }
    let before = count_candidates_upper(&sizes[..j]);
    let after = count_candidates_upper(&sizes[j + 2..]);
    let exact = before * n_compat.iter().map(|&n| n as u64).sum::<u64>() * after;
    let lower = before * sizes[j] as u64 * after;
    Ok(PrunedBounds {
        exact,
        lower,
        upper_removed: count_candidates_upper(sizes) - lower,
    })
}

/// Component executions for a full merge search: without reuse every
/// candidate runs all `N_f` slots (`∏ N_i · N_f`); with reuse each tree
/// node runs once (`Σ_j ∏_{i≤j} N_i`).
pub fn execution_counts(sizes: &[usize]) -> (u64, u64) {
    let without = count_candidates_upper(sizes) * sizes.len() as u64;
    let mut with = 0;
    let mut level = 1u64;
    for &n in sizes {
        level *= n as u64;
        with += level;
    }
    (without, with)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reference_sizes() {
        assert_eq!(count_candidates_upper(&[1, 2, 2, 5]), 20);
        assert_eq!(count_candidates_upper(&[1, 1, 1]), 1);
        assert_eq!(count_candidates_upper(&[3, 3]), 9);
        assert_eq!(execution_counts(&[1, 2, 2, 5]), (80, 27));
        assert_eq!(execution_counts(&[1]), (1, 1));
        assert_eq!(execution_counts(&[2, 2]), (8, 6));
        let b = pruned_count_bounds(&[1, 2, 2, 5], 2, &[3, 2]).unwrap();
        assert_eq!(b, PrunedBounds { exact: 10, lower: 4, upper_removed: 16 });
    }

    #[test]
    fn single_successor_hits_lower_bound() {
        let b = pruned_count_bounds(&[2, 2], 0, &[1, 1]).unwrap();
        assert_eq!(b.exact, b.lower);
        let full = pruned_count_bounds(&[2, 3, 4], 1, &[4, 4, 4]).unwrap();
        assert_eq!(full.exact, 24);
    }

    #[test]
    fn out_of_range_inputs() {
        assert!(pruned_count_bounds(&[2, 2], 1, &[1, 1]).is_err());
        assert!(pruned_count_bounds(&[2, 2], 0, &[1]).is_err());
        assert!(pruned_count_bounds(&[2, 2], 0, &[0, 1]).is_err());
        assert!(pruned_count_bounds(&[2, 2], 0, &[3, 1]).is_err());
    }

    proptest! {
        #[test]
        fn bounds_bracket_exact(sizes in prop::collection::vec(1usize..5, 2..6), j_seed in 0usize..100, picks in prop::collection::vec(1usize..5, 5)) {
            let j = j_seed % (sizes.len() - 1);
            let n: Vec<usize> = (0..sizes[j]).map(|v| 1 + (picks[v] - 1) % sizes[j + 1]).collect();
            let b = pruned_count_bounds(&sizes, j, &n).unwrap();
            let total = count_candidates_upper(&sizes);
            prop_assert!(b.lower <= b.exact && b.exact <= total);
            prop_assert!(total - b.exact <= b.upper_removed);
        }

        #[test]
        fn reuse_never_costs_more(sizes in prop::collection::vec(1usize..6, 1..6)) {
            let (without, with) = execution_counts(&sizes);
            prop_assert!(with <= without);
            prop_assert_eq!(with >= count_candidates_upper(&sizes), true);
        }
    }
}
