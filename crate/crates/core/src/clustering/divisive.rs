//! Top-down clustering by repeated two-way splits.
//!
//! Clusters of at most [`EXACT_SPLIT_LIMIT`] members are split optimally
//! by trying every bipartition. Larger clusters use an alternating
//! heuristic seeded with the farthest pair of members:
//!
//! * 2-means: Lloyd sweeps, then single-point moves while any move lowers
//!   the within-cluster sum of squares;
//! * spherical: Lloyd sweeps with cosine distance to the cluster mean;
//! * 2-medoids: alternate nearest-medoid assignment and medoid update.
//!
//! Each phase stops after [`MAX_SWEEPS`] sweeps or when nothing changes.
//! An empty side is refilled with the member farthest from its centre.

use super::metric::squared_euclidean;
use super::{canonical_argmin, DistanceMetric, LinkageSpec, Method, MetricKind, SplitRule, TIE_RELATIVE};
use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::tree::{TreeBuilder, VocabTree};

/// Largest cluster that is split by exhaustive search.
pub const EXACT_SPLIT_LIMIT: usize = 12;
pub const MAX_SWEEPS: usize = 100;

/// One split: token ids of both children (left holds the smallest id) and
/// the objective value of the split.
#[derive(Clone, Debug, PartialEq)]
pub struct Split {
    pub left: Vec<usize>,
    pub right: Vec<usize>,
    pub objective: f64,
    pub exhaustive: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Division {
    pub tree: VocabTree,
    /// Parents before children, left subtree before right.
    pub splits: Vec<Split>,
    pub degenerate_pairs: usize,
}

pub fn divide(e: &EmbeddingMatrix, spec: LinkageSpec) -> Result<VocabTree> {
    divide_detailed(e, spec).map(|d| d.tree)
}

pub fn divide_detailed(e: &EmbeddingMatrix, spec: LinkageSpec) -> Result<Division> {
    let Method::Divisive(rule) = spec.method() else {
        return Err(Error::InvalidSpec {
            given: spec.to_string(),
            valid: LinkageSpec::all()
                .iter()
                .filter(|s| matches!(s.method(), Method::Divisive(_)))
                .map(ToString::to_string)
                .collect(),
        });
    };
    let n = e.len();
    if n < 2 {
        return Err(Error::VocabularyTooSmall(n));
    }
    let mut splitter = Splitter::new(e, rule, DistanceMetric::for_embeddings(spec.metric(), e));
    let mut builder = TreeBuilder::with_leaves(n);
    let mut splits = Vec::with_capacity(n - 1);
    let members: Vec<usize> = (0..n).collect();
    let root = build(&mut splitter, &members, &mut builder, &mut splits)?;
    Ok(Division {
        tree: builder.finish(root)?,
        splits,
        degenerate_pairs: splitter.degenerate_pairs,
    })
}

fn build(
    splitter: &mut Splitter<'_>,
    members: &[usize],
    builder: &mut TreeBuilder,
    splits: &mut Vec<Split>,
) -> Result<usize> {
    if let [only] = members {
        return Ok(*only);
    }
    let split = splitter.split(members)?;
    let (left, right) = (split.left.clone(), split.right.clone());
    splits.push(split);
    let l = build(splitter, &left, builder, splits)?;
    let r = build(splitter, &right, builder, splits)?;
    Ok(builder.join(l, r))
}

struct Splitter<'a> {
    e: &'a EmbeddingMatrix,
    rule: SplitRule,
    /// Full pairwise distance matrix, only kept for 2-medoids.
    pairwise: Vec<f64>,
    degenerate_pairs: usize,
}

impl<'a> Splitter<'a> {
    fn new(e: &'a EmbeddingMatrix, rule: SplitRule, metric: DistanceMetric) -> Self {
        let n = e.len();
        let keep = rule == SplitRule::TwoMedoids;
        let count = matches!(metric.kind(), MetricKind::Cosine | MetricKind::Correlation);
        let mut pairwise = if keep { vec![0.0; n * n] } else { Vec::new() };
        let mut degenerate_pairs = 0;
        if keep || count {
            for i in 0..n {
                for j in i + 1..n {
                    let m = metric.measure(e.row(i), e.row(j));
                    degenerate_pairs += usize::from(m.degenerate);
                    if keep {
                        pairwise[i * n + j] = m.value;
                        pairwise[j * n + i] = m.value;
                    }
                }
            }
        }
        Splitter {
            e,
            rule,
            pairwise,
            degenerate_pairs,
        }
    }

    fn pair(&self, i: usize, j: usize) -> f64 {
        match self.rule {
            SplitRule::TwoMeans => squared_euclidean(self.e.row(i), self.e.row(j)).sqrt(),
            SplitRule::Spherical => DistanceMetric::Cosine.distance(self.e.row(i), self.e.row(j)),
            SplitRule::TwoMedoids => self.pairwise[i * self.e.len() + j],
        }
    }

    fn mean(&self, members: &[usize]) -> Vec<f64> {
        let mut c = vec![0.0; self.e.dim()];
        for &i in members {
            for (c, x) in c.iter_mut().zip(self.e.row(i)) {
                *c += x;
            }
        }
        let k = members.len() as f64;
        c.iter_mut().for_each(|c| *c /= k);
        c
    }

    /// Medoid of `members`, ties to the earliest member.
    fn medoid(&self, members: &[usize]) -> (usize, f64) {
        let mut best = (members[0], f64::INFINITY);
        for &m in members {
            let total: f64 = members.iter().map(|&j| self.pair(m, j)).sum();
            if total < best.1 {
                best = (m, total);
            }
        }
        best
    }

    /// The objective contribution of one cluster.
    fn cost(&self, members: &[usize]) -> f64 {
        match self.rule {
            SplitRule::TwoMeans => {
                let c = self.mean(members);
                members
                    .iter()
                    .map(|&i| squared_euclidean(self.e.row(i), &c))
                    .sum()
            }
            SplitRule::Spherical => {
                let c = self.mean(members);
                members
                    .iter()
                    .map(|&i| DistanceMetric::Cosine.distance(self.e.row(i), &c))
                    .sum()
            }
            SplitRule::TwoMedoids => self.medoid(members).1,
        }
    }

    /// Split `members` (ascending token ids, at least two) in two.
    fn split(&self, members: &[usize]) -> Result<Split> {
        let exhaustive = members.len() <= EXACT_SPLIT_LIMIT;
        let (mut a, mut b) = if exhaustive {
            self.exhaustive(members)
        } else {
            self.heuristic(members)
        };
        if a.is_empty() || b.is_empty() {
            return Err(Error::DegenerateSplit(members.len()));
        }
        if b[0] < a[0] {
            std::mem::swap(&mut a, &mut b);
        }
        let objective = self.cost(&a) + self.cost(&b);
        Ok(Split {
            left: a,
            right: b,
            objective,
            exhaustive,
        })
    }

    fn exhaustive(&self, members: &[usize]) -> (Vec<usize>, Vec<usize>) {
        let (first, rest) = members.split_first().expect("at least two members");
        let sides = |mask: u32| {
            let mut a = vec![*first];
            let mut b = Vec::new();
            for (k, &m) in rest.iter().enumerate() {
                if mask >> k & 1 == 1 {
                    b.push(m);
                } else {
                    a.push(m);
                }
            }
            (a, b)
        };
        let masks: Vec<u32> = (1..1u32 << rest.len()).collect();
        let values: Vec<f64> = masks
            .iter()
            .map(|&mask| {
                let (a, b) = sides(mask);
                self.cost(&a) + self.cost(&b)
            })
            .collect();
        let best = canonical_argmin(values.iter().copied(), |i| sides(masks[i]).1)
            .expect("at least one bipartition");
        sides(masks[best])
    }

    fn heuristic(&self, members: &[usize]) -> (Vec<usize>, Vec<usize>) {
        let (si, sj) = self.farthest_pair(members);
        // side[k]: whether members[k] is in the second cluster
        let mut side: Vec<bool> = members.iter().map(|&m| m == sj).collect();
        match self.rule {
            SplitRule::TwoMeans | SplitRule::Spherical => {
                let mut centres = [self.e.row(si).to_vec(), self.e.row(sj).to_vec()];
                for _ in 0..MAX_SWEEPS {
                    let changed = self.assign(members, &mut side, |m, c| {
                        self.to_centre(m, &centres[usize::from(c)])
                    });
                    self.repair(members, &mut side, |m, c| {
                        self.to_centre(m, &centres[usize::from(c)])
                    });
                    let (a, b) = partition(members, &side);
                    centres = [self.mean(&a), self.mean(&b)];
                    if !changed {
                        break;
                    }
                }
                if self.rule == SplitRule::TwoMeans {
                    self.single_moves(members, &mut side);
                }
            }
            SplitRule::TwoMedoids => {
                let mut medoids = [si, sj];
                for _ in 0..MAX_SWEEPS {
                    let changed = self.assign(members, &mut side, |m, c| {
                        self.pair(m, medoids[usize::from(c)])
                    });
                    self.repair(members, &mut side, |m, c| self.pair(m, medoids[usize::from(c)]));
                    let (a, b) = partition(members, &side);
                    let next = [self.medoid(&a).0, self.medoid(&b).0];
                    if !changed && next == medoids {
                        break;
                    }
                    medoids = next;
                }
            }
        }
        partition(members, &side)
    }

    fn to_centre(&self, m: usize, centre: &[f64]) -> f64 {
        match self.rule {
            SplitRule::Spherical => DistanceMetric::Cosine.distance(self.e.row(m), centre),
            _ => squared_euclidean(self.e.row(m), centre),
        }
    }

    /// Farthest pair under the split rule's distance; the earliest pair wins ties.
    fn farthest_pair(&self, members: &[usize]) -> (usize, usize) {
        let mut best = (members[0], members[1], f64::NEG_INFINITY);
        for (x, &i) in members.iter().enumerate() {
            for &j in &members[x + 1..] {
                let d = self.pair(i, j);
                if d > best.2 {
                    best = (i, j, d);
                }
            }
        }
        (best.0, best.1)
    }

    /// Nearest-centre assignment, ties to the first cluster. Returns whether
    /// anything moved.
    fn assign(&self, members: &[usize], side: &mut [bool], dist: impl Fn(usize, bool) -> f64) -> bool {
        let mut changed = false;
        for (k, &m) in members.iter().enumerate() {
            let to_second = dist(m, true) < dist(m, false);
            changed |= to_second != side[k];
            side[k] = to_second;
        }
        changed
    }

    fn repair(&self, members: &[usize], side: &mut [bool], dist: impl Fn(usize, bool) -> f64) {
        for empty in [false, true] {
            if side.iter().all(|&s| s != empty) {
                let far = (0..members.len())
                    .max_by(|&x, &y| {
                        dist(members[x], !empty)
                            .total_cmp(&dist(members[y], !empty))
                            .then(y.cmp(&x))
                    })
                    .expect("nonempty cluster");
                side[far] = empty;
            }
        }
    }

    /// Move single points between the two 2-means clusters while a move
    /// strictly lowers the sum of squares.
    fn single_moves(&self, members: &[usize], side: &mut [bool]) {
        let dim = self.e.dim();
        let mut sums = [vec![0.0; dim], vec![0.0; dim]];
        let mut counts = [0usize; 2];
        for (k, &m) in members.iter().enumerate() {
            let c = usize::from(side[k]);
            counts[c] += 1;
            for (s, x) in sums[c].iter_mut().zip(self.e.row(m)) {
                *s += x;
            }
        }
        let centre = |sums: &[Vec<f64>; 2], counts: &[usize; 2], c: usize| -> Vec<f64> {
            sums[c].iter().map(|s| s / counts[c] as f64).collect()
        };
        for _ in 0..MAX_SWEEPS {
            let mut moved = false;
            for (k, &m) in members.iter().enumerate() {
                let from = usize::from(side[k]);
                let to = 1 - from;
                if counts[from] < 2 {
                    continue;
                }
                let x = self.e.row(m);
                let (nf, nt) = (counts[from] as f64, counts[to] as f64);
                let leave = nf / (nf - 1.0) * squared_euclidean(x, &centre(&sums, &counts, from));
                let join = nt / (nt + 1.0) * squared_euclidean(x, &centre(&sums, &counts, to));
                if join < leave - TIE_RELATIVE * leave {
                    side[k] = to == 1;
                    counts[from] -= 1;
                    counts[to] += 1;
                    for (d, &v) in x.iter().enumerate() {
                        sums[from][d] -= v;
                        sums[to][d] += v;
                    }
                    moved = true;
                }
            }
            if !moved {
                break;
            }
        }
    }
}

fn partition(members: &[usize], side: &[bool]) -> (Vec<usize>, Vec<usize>) {
    let mut a = Vec::new();
    let mut b = Vec::new();
    for (&m, &s) in members.iter().zip(side) {
        if s {
            b.push(m);
        } else {
            a.push(m);
        }
    }
    (a, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(s: &str) -> LinkageSpec {
        s.parse().unwrap()
    }

    fn line(xs: &[f64]) -> EmbeddingMatrix {
        let rows: Vec<[f64; 1]> = xs.iter().map(|&x| [x]).collect();
        EmbeddingMatrix::from_rows(&rows).unwrap()
    }

    #[test]
    fn two_means_first_split() {
        let d = divide_detailed(&line(&[0.0, 1.0, 10.0, 11.0]), spec("divisive.2-means.euclidean"))
            .unwrap();
        assert_eq!(d.splits[0].left, vec![0, 1]);
        assert_eq!(d.splits[0].right, vec![2, 3]);
        assert_eq!(d.tree.shape(), "((0,1),(2,3))");
    }

    #[test]
    fn spherical_first_split() {
        let rows: Vec<[f64; 2]> = [0.0f64, 5.0, 90.0]
            .iter()
            .map(|deg| [deg.to_radians().cos(), deg.to_radians().sin()])
            .collect();
        let d = divide_detailed(
            &EmbeddingMatrix::from_rows(&rows).unwrap(),
            spec("divisive.spherical.cosine"),
        )
        .unwrap();
        assert_eq!((d.splits[0].left.clone(), d.splits[0].right.clone()), (vec![0, 1], vec![2]));
    }

    #[test]
    fn medoids_first_split() {
        let d = divide_detailed(&line(&[0.0, 1.0, 10.0]), spec("divisive.2-medoids.euclidean"))
            .unwrap();
        assert_eq!((d.splits[0].left.clone(), d.splits[0].right.clone()), (vec![0, 1], vec![2]));
        assert_eq!(d.splits[0].objective, 1.0);
    }

    #[test]
    fn heuristic_path_handles_clear_clusters() {
        // 20 points in two well separated groups, interleaved ids
        let xs: Vec<f64> = (0..20)
            .map(|i| if i % 2 == 0 { i as f64 * 0.01 } else { 100.0 + i as f64 * 0.01 })
            .collect();
        for s in ["divisive.2-means.euclidean", "divisive.2-medoids.cityblock"] {
            let d = divide_detailed(&line(&xs), spec(s)).unwrap();
            assert!(!d.splits[0].exhaustive);
            assert_eq!(d.splits[0].left, (0..20).step_by(2).collect::<Vec<_>>(), "{s}");
        }
    }

    #[test]
    fn identical_points_still_split() {
        let e = EmbeddingMatrix::from_rows(&vec![[1.0, 1.0]; 15]).unwrap();
        for s in ["divisive.2-means.euclidean", "divisive.2-medoids.euclidean", "divisive.spherical.cosine"] {
            let t = divide(&e, spec(s)).unwrap();
            assert_eq!(t.num_tokens(), 15);
        }
    }

    #[test]
    fn agglomerative_spec_is_rejected() {
        assert!(matches!(
            divide(&line(&[0.0, 1.0]), spec("agglomerative.ward.euclidean")),
            Err(Error::InvalidSpec { .. })
        ));
    }
}
