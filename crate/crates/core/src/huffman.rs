//! Frequency-based vocabulary trees.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::corpus::Vocabulary;
use crate::error::{Error, Result};
use crate::tree::{TreeBuilder, VocabTree};

/// Build the Huffman tree of `vocab` by repeatedly merging the two
/// lowest-frequency subtrees.
///
/// Subtrees are ordered by `(frequency, smallest token id inside)`, which
/// is a total order, so the result is fully determined by the counts. At
/// each merge the smaller of the two becomes the left child.
pub fn build_huffman(vocab: &Vocabulary) -> Result<VocabTree> {
    huffman_from_counts(vocab.counts())
}

/// [`build_huffman`] over raw counts indexed by token id.
pub fn huffman_from_counts(counts: &[u64]) -> Result<VocabTree> {
    let n = counts.len();
    if n < 2 {
        return Err(Error::VocabularyTooSmall(n));
    }
    if let Some(t) = counts.iter().position(|&c| c == 0) {
        return Err(Error::InvalidCount {
            token: t.to_string(),
            reason: "count must be positive".into(),
        });
    }
    let mut builder = TreeBuilder::with_leaves(n);
    // (weight, min token id, node id)
    let mut heap: BinaryHeap<Reverse<(u128, usize, usize)>> = counts
        .iter()
        .enumerate()
        .map(|(t, &c)| Reverse((u128::from(c), t, t)))
        .collect();
    loop {
        let Reverse((w1, m1, left)) = heap.pop().expect("heap holds at least two");
        let Some(Reverse((w2, m2, right))) = heap.pop() else {
            return builder.finish(left);
        };
        let id = builder.join(left, right);
        heap.push(Reverse((w1 + w2, m1.min(m2), id)));
    }
}

/// `Σ count_t · depth_t`, the expected code length times the total count.
pub fn weighted_path_length(tree: &VocabTree, counts: &[u64]) -> u128 {
    tree.depths()
        .iter()
        .zip(counts)
        .map(|(&d, &c)| d as u128 * u128::from(c))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use vocab_tree_testkit::huffman_min_cost as brute_force_cost;

    #[test]
    fn three_token_example() {
        let t = huffman_from_counts(&[5, 2, 1]).unwrap();
        assert_eq!(t.depths(), vec![1, 2, 2]);
        assert_eq!(weighted_path_length(&t, &[5, 2, 1]), 11);
        assert_eq!(brute_force_cost(&[5, 2, 1]), 11);
    }

    #[test]
    fn two_and_four_uniform() {
        assert_eq!(huffman_from_counts(&[1, 1]).unwrap().depths(), vec![1, 1]);
        assert_eq!(
            huffman_from_counts(&[1, 1, 1, 1]).unwrap().depths(),
            vec![2, 2, 2, 2]
        );
        assert_eq!(brute_force_cost(&[1, 1, 1, 1]), 8);
    }

    #[test]
    fn too_small() {
        assert!(matches!(
            huffman_from_counts(&[3]),
            Err(Error::VocabularyTooSmall(1))
        ));
        assert!(huffman_from_counts(&[3, 0]).is_err());
    }

    #[test]
    fn tie_break_fixes_left_right() {
        // all equal: (0,1) merge first with 0 on the left, then (2,3), then
        // the two pairs ordered by their smallest token id.
        let t = huffman_from_counts(&[1, 1, 1, 1]).unwrap();
        assert_eq!(t.shape(), "((0,1),(2,3))");
        let t = huffman_from_counts(&[5, 2, 1]).unwrap();
        assert_eq!(t.shape(), "((2,1),0)");
    }

    proptest! {
        #[test]
        fn optimal_for_small_vocabularies(counts in prop::collection::vec(1u64..=8, 2..=8)) {
            let t = huffman_from_counts(&counts).unwrap();
            prop_assert_eq!(weighted_path_length(&t, &counts), brute_force_cost(&counts));
        }

        #[test]
        fn deterministic_and_monotone(counts in prop::collection::vec(1u64..=50, 2..=40)) {
            let a = huffman_from_counts(&counts).unwrap();
            let b = huffman_from_counts(&counts).unwrap();
            prop_assert_eq!(&a, &b);
            let d = a.depths();
            for i in 0..counts.len() {
                for j in 0..counts.len() {
                    if counts[i] > counts[j] {
                        prop_assert!(d[i] <= d[j]);
                    }
                }
            }
        }
    }
}
