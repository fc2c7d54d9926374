//! Bottom-up clustering with Lance–Williams distance updates.
//!
//! Average and weighted linkage update the metric distances directly.
//! Centroid, median and Ward work on squared Euclidean distances between
//! cluster centres (centroids, or recursive medians), which obey exact
//! update rules; the merge criterion is then the centre distance itself
//! or, for Ward, the variance increase `|A||B| / (|A|+|B|) · D²`.

use super::metric::squared_euclidean;
use super::{DistanceMetric, Linkage, LinkageSpec, Method, TIE_RELATIVE};
use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::tree::{TreeBuilder, VocabTree};

/// One merge step: the two node ids joined (left holds the smaller token
/// id), the criterion value that selected them and the merged size.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub value: f64,
    pub size: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Agglomeration {
    pub tree: VocabTree,
    /// In merge order; merge `k` created node `N + k`.
    pub merges: Vec<Merge>,
    /// Embedding pairs whose distance fell back to the degenerate rule.
    pub degenerate_pairs: usize,
}

pub fn agglomerate(e: &EmbeddingMatrix, spec: LinkageSpec) -> Result<VocabTree> {
    agglomerate_detailed(e, spec).map(|a| a.tree)
}

pub fn agglomerate_detailed(e: &EmbeddingMatrix, spec: LinkageSpec) -> Result<Agglomeration> {
    let Method::Agglomerative(linkage) = spec.method() else {
        return Err(Error::InvalidSpec {
            given: spec.to_string(),
            valid: LinkageSpec::all()
                .iter()
                .filter(|s| matches!(s.method(), Method::Agglomerative(_)))
                .map(ToString::to_string)
                .collect(),
        });
    };
    let n = e.len();
    if n < 2 {
        return Err(Error::VocabularyTooSmall(n));
    }
    let squared = matches!(linkage, Linkage::Centroid | Linkage::Median | Linkage::Ward);
    let metric = DistanceMetric::for_embeddings(spec.metric(), e);

    let mut dist = vec![0.0; n * n];
    let mut degenerate_pairs = 0;
    for i in 0..n {
        for j in i + 1..n {
            let d = if squared {
                squared_euclidean(e.row(i), e.row(j))
            } else {
                let m = metric.measure(e.row(i), e.row(j));
                degenerate_pairs += usize::from(m.degenerate);
                m.value
            };
            dist[i * n + j] = d;
            dist[j * n + i] = d;
        }
    }

    let mut size = vec![1usize; n];
    let min_id: Vec<usize> = (0..n).collect();
    let mut node: Vec<usize> = (0..n).collect();
    let mut active: Vec<usize> = (0..n).collect();
    let mut builder = TreeBuilder::with_leaves(n);
    let mut merges = Vec::with_capacity(n - 1);

    let criterion = |d: f64, na: usize, nb: usize| -> f64 {
        match linkage {
            Linkage::Average | Linkage::Weighted => d,
            Linkage::Centroid | Linkage::Median => d.max(0.0).sqrt(),
            Linkage::Ward => {
                let (na, nb) = (na as f64, nb as f64);
                na * nb / (na + nb) * d.max(0.0)
            }
        }
    };

    while active.len() > 1 {
        let mut min = f64::INFINITY;
        for (x, &i) in active.iter().enumerate() {
            for &j in &active[x + 1..] {
                min = min.min(criterion(dist[i * n + j], size[i], size[j]));
            }
        }
        let bound = min + TIE_RELATIVE * min.abs();
        let mut best: Option<((usize, usize), usize, usize)> = None;
        for (x, &i) in active.iter().enumerate() {
            for &j in &active[x + 1..] {
                if criterion(dist[i * n + j], size[i], size[j]) <= bound {
                    let key = (min_id[i].min(min_id[j]), min_id[i].max(min_id[j]));
                    if best.is_none_or(|(k, _, _)| key < k) {
                        best = Some((key, i, j));
                    }
                }
            }
        }
        let (_, i, j) = best.expect("at least one active pair");
        let (keep, gone) = if min_id[i] < min_id[j] { (i, j) } else { (j, i) };
        let (nk, ng) = (size[keep] as f64, size[gone] as f64);
        let d_kg = dist[keep * n + gone];
        for &k in &active {
            if k == keep || k == gone {
                continue;
            }
            let (a, b) = (dist[k * n + keep], dist[k * n + gone]);
            let updated = match linkage {
                Linkage::Average => (nk * a + ng * b) / (nk + ng),
                Linkage::Weighted => 0.5 * (a + b),
                Linkage::Centroid | Linkage::Ward => {
                    let s = nk + ng;
                    (nk * a + ng * b) / s - nk * ng * d_kg / (s * s)
                }
                Linkage::Median => 0.5 * a + 0.5 * b - 0.25 * d_kg,
            };
            dist[k * n + keep] = updated;
            dist[keep * n + k] = updated;
        }
        let id = builder.join(node[keep], node[gone]);
        merges.push(Merge {
            left: node[keep],
            right: node[gone],
            value: criterion(d_kg, size[keep], size[gone]),
            size: size[keep] + size[gone],
        });
        size[keep] += size[gone];
        node[keep] = id;
        active.retain(|&s| s != gone);
    }

    Ok(Agglomeration {
        tree: builder.finish(node[active[0]])?,
        merges,
        degenerate_pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> EmbeddingMatrix {
        let rows: Vec<[f64; 1]> = xs.iter().map(|&x| [x]).collect();
        EmbeddingMatrix::from_rows(&rows).unwrap()
    }

    fn spec(s: &str) -> LinkageSpec {
        s.parse().unwrap()
    }

    #[test]
    fn average_on_a_line() {
        let t = agglomerate(&line(&[0.0, 1.0, 10.0]), spec("agglomerative.average.euclidean"))
            .unwrap();
        assert_eq!(t.shape(), "((0,1),2)");
    }

    #[test]
    fn two_points_give_one_merge_for_every_spec() {
        let e = EmbeddingMatrix::from_rows(&[[0.0, 1.0], [2.0, 0.5]]).unwrap();
        for s in LinkageSpec::all() {
            if matches!(s.method(), Method::Agglomerative(_)) {
                assert_eq!(agglomerate(&e, s).unwrap().shape(), "(0,1)", "{s}");
            }
        }
    }

    #[test]
    fn ward_increase_of_two_singletons() {
        let a = agglomerate_detailed(&line(&[0.0, 2.0]), spec("agglomerative.ward.euclidean"))
            .unwrap();
        assert_eq!(a.merges[0].value, 2.0);
    }

    #[test]
    fn divisive_spec_is_rejected() {
        assert!(matches!(
            agglomerate(&line(&[0.0, 1.0]), spec("divisive.2-means.euclidean")),
            Err(Error::InvalidSpec { .. })
        ));
    }

    #[test]
    fn single_embedding_is_too_small() {
        assert!(matches!(
            agglomerate(&line(&[0.0]), spec("agglomerative.ward.euclidean")),
            Err(Error::VocabularyTooSmall(1))
        ));
    }

    #[test]
    fn ties_resolve_to_smallest_ids() {
        // equally spaced: (0,1), (1,2), (2,3) all tie at distance 1, then
        // (2,3) beats ({0,1},2) at 1.5
        let t = agglomerate(&line(&[0.0, 1.0, 2.0, 3.0]), spec("agglomerative.weighted.cityblock"))
            .unwrap();
        assert_eq!(t.shape(), "((0,1),(2,3))");
        let a = agglomerate_detailed(&line(&[0.0, 1.0, 2.0, 3.0]), spec("agglomerative.weighted.cityblock"))
            .unwrap();
        assert_eq!((a.merges[0].left, a.merges[0].right), (0, 1));
        // the left child always holds the smallest token id
        let t = agglomerate(&line(&[5.0, 0.0, 0.1, 5.2]), spec("agglomerative.average.euclidean"))
            .unwrap();
        assert_eq!(t.shape(), "((0,3),(1,2))");
    }

    #[test]
    fn degenerate_pairs_are_counted() {
        let e = EmbeddingMatrix::from_rows(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        let a = agglomerate_detailed(&e, spec("agglomerative.average.cosine")).unwrap();
        assert_eq!(a.degenerate_pairs, 2);
    }
}
