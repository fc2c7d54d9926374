mod common;

use common::{normal_vec, random_tree};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vocab_tree::hsoftmax::{
    derive_codes, leaf_prob, leaf_prob_counted, log_probs_vectorized, nll_grad, NodeParams, SignBias,
};
use vocab_tree::huffman::huffman_from_counts;
use vocab_tree::VocabTree;
use vocab_tree_testkit::central_gradient;

fn instance(seed: u64, n: usize, hidden: usize, scale: f64) -> (VocabTree, NodeParams, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tree = random_tree(n, &mut rng);
    let data = normal_vec((n - 1) * hidden, &mut rng).into_iter().map(|x| scale * x).collect();
    let params = NodeParams::from_flat(n - 1, hidden, data).unwrap();
    (tree, params, normal_vec(hidden, &mut rng))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn probabilities_sum_to_one(seed in any::<u64>(), n in 2usize..300, hidden in 1usize..12) {
        let (tree, params, h) = instance(seed, n, hidden, 1.0);
        let codes = derive_codes(&tree);
        let total: f64 = (0..n).map(|t| leaf_prob(&h, &params, &codes, t).unwrap()).sum();
        prop_assert!((total - 1.0).abs() <= 1e-9);
        let log_total: f64 = log_probs_vectorized(&h, &params, &SignBias::from_codes(&codes))
            .unwrap()
            .iter()
            .map(|l| l.exp())
            .sum();
        prop_assert!((log_total - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn padding_never_changes_probabilities(seed in any::<u64>(), n in 2usize..64, extra in 1usize..5) {
        let (tree, params, h) = instance(seed, n, 4, 1.0);
        let codes = derive_codes(&tree);
        let tight = log_probs_vectorized(&h, &params, &SignBias::from_codes(&codes)).unwrap();
        let padded = SignBias::padded(&codes, codes.max_depth() + extra);
        prop_assert_eq!(log_probs_vectorized(&h, &params, &padded).unwrap(), tight);
    }

    #[test]
    fn vectorized_is_finite_for_large_scores(seed in any::<u64>(), n in 2usize..64) {
        // Node scores reach several hundred in magnitude.
        let (tree, params, h) = instance(seed, n, 3, 150.0);
        let lp = log_probs_vectorized(&h, &params, &SignBias::from_codes(&derive_codes(&tree))).unwrap();
        prop_assert!(lp.iter().all(|l| l.is_finite() && *l <= 0.0));
    }

    #[test]
    fn gradient_matches_central_differences(seed in any::<u64>(), n in 2usize..40, hidden in 1usize..6) {
        let (tree, params, h) = instance(seed, n, hidden, 1.0);
        let codes = derive_codes(&tree);
        let target = (seed % n as u64) as usize;
        let g = nll_grad(&h, &params, &codes, target).unwrap();
        prop_assert!((g.loss + leaf_prob(&h, &params, &codes, target).unwrap().ln()).abs() <= 1e-12);
        let numeric = central_gradient(|x| nll_grad(x, &params, &codes, target).unwrap().loss, &h, 1e-5);
        for (a, b) in g.grad_h.iter().zip(&numeric) {
            prop_assert!((a - b).abs() <= 1e-5 * a.abs().max(b.abs()).max(1e-4));
        }
    }
}

#[test]
fn balanced_trees_need_ceil_log2_inner_products() {
    for n in 2..=300usize {
        let tree = huffman_from_counts(&vec![1; n]).unwrap();
        let codes = derive_codes(&tree);
        let params = NodeParams::zeros(n - 1, 2);
        let worst = (0..n)
            .map(|t| {
                let (_, products) = leaf_prob_counted(&[0.3, -0.2], &params, &codes, t).unwrap();
                assert_eq!(products, tree.depth(t));
                products
            })
            .max()
            .unwrap();
        assert_eq!(worst, (n as f64).log2().ceil() as usize, "N = {n}");
    }
}

#[test]
fn internal_nodes_are_numbered_breadth_first() {
    let tree = huffman_from_counts(&[8, 4, 2, 1, 1]).unwrap();
    let codes = derive_codes(&tree);
    // Root first; the deepest token's path visits ever larger indices.
    for t in 0..5 {
        assert_eq!(codes.path_nodes(t)[0], 0);
        assert!(codes.path_nodes(t).windows(2).all(|w| w[0] < w[1]));
    }
    assert_eq!(codes.path_nodes(3), &[0, 1, 2, 3]);
}
