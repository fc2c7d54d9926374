//! Helpers shared by the integration tests.

#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use vocab_tree::{EmbeddingMatrix, MetricKind, Node, VocabTree};
use vocab_tree_testkit::{column_std, Metric};

pub fn normal_vec(len: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..len).map(|_| rng.sample(StandardNormal)).collect()
}

pub fn normal_points(n: usize, dim: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    (0..n).map(|_| normal_vec(dim, rng)).collect()
}

pub fn matrix(points: &[Vec<f64>]) -> EmbeddingMatrix {
    EmbeddingMatrix::from_rows(points).unwrap()
}

/// A tree grown by joining uniformly chosen pairs of roots.
pub fn random_tree(n: usize, rng: &mut ChaCha8Rng) -> VocabTree {
    let mut nodes: Vec<Node> = (0..n).map(|token| Node::Leaf { token }).collect();
    let mut roots: Vec<usize> = (0..n).collect();
    while roots.len() > 1 {
        let a = roots.swap_remove(rng.gen_range(0..roots.len()));
        let b = roots.swap_remove(rng.gen_range(0..roots.len()));
        nodes.push(Node::Internal { left: a, right: b });
        roots.push(nodes.len() - 1);
    }
    VocabTree::new(nodes, roots[0]).unwrap()
}

pub fn oracle_metric(kind: MetricKind, points: &[Vec<f64>]) -> Metric {
    match kind {
        MetricKind::Euclidean => Metric::Euclidean,
        MetricKind::StandardizedEuclidean => Metric::StdEuclidean(column_std(points)),
        MetricKind::Cityblock => Metric::Cityblock,
        MetricKind::Cosine => Metric::Cosine,
        MetricKind::Correlation => Metric::Correlation,
    }
}

/// `(token, depth below node)` for every leaf under `node`.
pub fn leaf_depths(tree: &VocabTree, node: usize) -> Vec<(usize, i32)> {
    let mut out = Vec::new();
    let mut stack = vec![(node, 0)];
    while let Some((id, d)) = stack.pop() {
        match tree.node(id) {
            Node::Leaf { token } => out.push((token, d)),
            Node::Internal { left, right } => {
                stack.push((left, d + 1));
                stack.push((right, d + 1));
            }
        }
    }
    out
}
