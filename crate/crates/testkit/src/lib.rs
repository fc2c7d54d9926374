//! Slow, obviously-correct reference implementations.
//!
//! Nothing here depends on `vocab-tree`: inputs and outputs are plain
//! slices and vectors so the checks stay independent of the code under
//! test. Complexity is deliberately naive.

use std::collections::HashMap;

/// Relative slack under which two objective values count as tied.
pub const TIE_RELATIVE: f64 = 1e-12;

/// Minimum of `Σ count·depth` over every strict binary tree with these
/// leaves, by recursion over all root bipartitions (memoized on subsets).
pub fn huffman_min_cost(counts: &[u64]) -> u128 {
    fn best(mask: u32, counts: &[u64], memo: &mut HashMap<u32, u128>) -> u128 {
        if mask.count_ones() == 1 {
            return 0;
        }
        if let Some(&v) = memo.get(&mask) {
            return v;
        }
        let total: u128 = (0..counts.len())
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| u128::from(counts[i]))
            .sum();
        let low = mask & mask.wrapping_neg();
        let rest = mask ^ low;
        let mut min = u128::MAX;
        let mut sub = rest;
        loop {
            let a = low | sub;
            let b = mask ^ a;
            if b != 0 {
                min = min.min(best(a, counts, memo) + best(b, counts, memo));
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & rest;
        }
        memo.insert(mask, total + min);
        total + min
    }
    assert!(counts.len() >= 2 && counts.len() <= 20);
    best((1 << counts.len()) - 1, counts, &mut HashMap::new())
}

/// Distance functions written straight from their textbook definitions.
#[derive(Clone, Debug)]
pub enum Metric {
    Euclidean,
    /// Per-dimension standard deviations; zero entries are skipped.
    StdEuclidean(Vec<f64>),
    Cityblock,
    Cosine,
    Correlation,
}

impl Metric {
    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        assert_eq!(a.len(), b.len());
        match self {
            Metric::Euclidean => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
            Metric::StdEuclidean(s) => a
                .iter()
                .zip(b)
                .zip(s)
                .filter(|(_, &s)| s > 0.0)
                .map(|((x, y), s)| ((x - y) / s).powi(2))
                .sum::<f64>()
                .sqrt(),
            Metric::Cityblock => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
            Metric::Cosine => {
                if a == b {
                    return 0.0;
                }
                let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
                let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
                if na == 0.0 || nb == 0.0 {
                    return 2.0;
                }
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                (1.0 - dot / (na * nb)).clamp(0.0, 2.0)
            }
            Metric::Correlation => {
                if a == b {
                    return 0.0;
                }
                let n = a.len() as f64;
                let ma = a.iter().sum::<f64>() / n;
                let mb = b.iter().sum::<f64>() / n;
                let mut sab = 0.0;
                let mut saa = 0.0;
                let mut sbb = 0.0;
                for (x, y) in a.iter().zip(b) {
                    sab += (x - ma) * (y - mb);
                    saa += (x - ma) * (x - ma);
                    sbb += (y - mb) * (y - mb);
                }
                if saa == 0.0 || sbb == 0.0 {
                    return 2.0;
                }
                (1.0 - sab / (saa * sbb).sqrt()).clamp(0.0, 2.0)
            }
        }
    }
}

/// Population standard deviation of every column.
pub fn column_std(points: &[Vec<f64>]) -> Vec<f64> {
    let n = points.len() as f64;
    let m = points[0].len();
    (0..m)
        .map(|k| {
            let mean = points.iter().map(|p| p[k]).sum::<f64>() / n;
            (points.iter().map(|p| (p[k] - mean).powi(2)).sum::<f64>() / n).sqrt()
        })
        .collect()
}

fn mean_of(points: &[Vec<f64>], members: &[usize]) -> Vec<f64> {
    let mut c = vec![0.0; points[0].len()];
    for &i in members {
        for (c, x) in c.iter_mut().zip(&points[i]) {
            *c += x;
        }
    }
    c.iter_mut().for_each(|c| *c /= members.len() as f64);
    c
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Pick the entry with the smallest value; entries within
/// [`TIE_RELATIVE`] of the minimum are ordered by `key`.
fn canonical_min<K: Ord + Clone, T>(cands: Vec<(f64, K, T)>) -> (f64, T) {
    let min = cands.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
    let slack = TIE_RELATIVE * min.abs();
    let (v, _, t) = cands
        .into_iter()
        .filter(|c| c.0 <= min + slack)
        .min_by(|a, b| a.1.cmp(&b.1))
        .expect("nonempty candidate list");
    (v, t)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NaiveLinkage {
    Average,
    Weighted,
    Centroid,
    Median,
    Ward,
}

/// A cluster and the history needed by the recursive linkages.
#[derive(Clone, Debug)]
enum Cluster {
    Single(usize),
    Pair(Box<Cluster>, Box<Cluster>),
}

impl Cluster {
    fn members(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.collect(&mut out);
        out.sort_unstable();
        out
    }

    fn collect(&self, out: &mut Vec<usize>) {
        match self {
            Cluster::Single(i) => out.push(*i),
            Cluster::Pair(a, b) => {
                a.collect(out);
                b.collect(out);
            }
        }
    }

    fn median(&self, points: &[Vec<f64>]) -> Vec<f64> {
        match self {
            Cluster::Single(i) => points[*i].clone(),
            Cluster::Pair(a, b) => a
                .median(points)
                .iter()
                .zip(b.median(points))
                .map(|(x, y)| 0.5 * (x + y))
                .collect(),
        }
    }
}

fn weighted_linkage(a: &Cluster, b: &Cluster, points: &[Vec<f64>], metric: &Metric) -> f64 {
    match (a, b) {
        (Cluster::Single(i), Cluster::Single(j)) => metric.distance(&points[*i], &points[*j]),
        (Cluster::Pair(k, l), _) => {
            0.5 * (weighted_linkage(k, b, points, metric) + weighted_linkage(l, b, points, metric))
        }
        (_, Cluster::Pair(k, l)) => {
            0.5 * (weighted_linkage(a, k, points, metric) + weighted_linkage(a, l, points, metric))
        }
    }
}

fn naive_linkage(
    kind: NaiveLinkage,
    a: &Cluster,
    b: &Cluster,
    points: &[Vec<f64>],
    metric: &Metric,
) -> f64 {
    let (ma, mb) = (a.members(), b.members());
    match kind {
        NaiveLinkage::Average => {
            let mut s = 0.0;
            for &i in &ma {
                for &j in &mb {
                    s += metric.distance(&points[i], &points[j]);
                }
            }
            s / (ma.len() * mb.len()) as f64
        }
        NaiveLinkage::Weighted => weighted_linkage(a, b, points, metric),
        NaiveLinkage::Centroid => sq_dist(&mean_of(points, &ma), &mean_of(points, &mb)).sqrt(),
        NaiveLinkage::Median => sq_dist(&a.median(points), &b.median(points)).sqrt(),
        NaiveLinkage::Ward => {
            let (na, nb) = (ma.len() as f64, mb.len() as f64);
            na * nb / (na + nb) * sq_dist(&mean_of(points, &ma), &mean_of(points, &mb))
        }
    }
}

/// One merge: member lists of the left and right child (left holds the
/// smaller token id) and the linkage value.
pub type NaiveMerge = (Vec<usize>, Vec<usize>, f64);

/// Agglomerative clustering that recomputes every linkage from the member
/// sets at every step.
pub fn naive_agglomerative(
    points: &[Vec<f64>],
    kind: NaiveLinkage,
    metric: &Metric,
) -> Vec<NaiveMerge> {
    let mut clusters: Vec<Cluster> = (0..points.len()).map(Cluster::Single).collect();
    let mut merges = Vec::new();
    while clusters.len() > 1 {
        let mut cands = Vec::new();
        for i in 0..clusters.len() {
            for j in i + 1..clusters.len() {
                let d = naive_linkage(kind, &clusters[i], &clusters[j], points, metric);
                let (mi, mj) = (clusters[i].members()[0], clusters[j].members()[0]);
                cands.push((d, (mi.min(mj), mi.max(mj)), (i, j)));
            }
        }
        let (d, (i, j)) = canonical_min(cands);
        let b = clusters.remove(j);
        let a = clusters.remove(i);
        let (a, b) = if a.members()[0] < b.members()[0] { (a, b) } else { (b, a) };
        merges.push((a.members(), b.members(), d));
        clusters.push(Cluster::Pair(Box::new(a), Box::new(b)));
    }
    merges
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NaiveSplit {
    TwoMeans,
    Spherical,
    TwoMedoids,
}

/// Objective of one cluster under a divisive criterion.
pub fn split_cost(kind: NaiveSplit, points: &[Vec<f64>], members: &[usize], metric: &Metric) -> f64 {
    match kind {
        NaiveSplit::TwoMeans => {
            let c = mean_of(points, members);
            members.iter().map(|&i| sq_dist(&points[i], &c)).sum()
        }
        NaiveSplit::Spherical => {
            let c = mean_of(points, members);
            members
                .iter()
                .map(|&i| Metric::Cosine.distance(&points[i], &c))
                .sum()
        }
        NaiveSplit::TwoMedoids => members
            .iter()
            .map(|&m| {
                members
                    .iter()
                    .map(|&j| metric.distance(&points[m], &points[j]))
                    .sum::<f64>()
            })
            .fold(f64::INFINITY, f64::min),
    }
}

/// Best bipartition of `members` (sorted ascending) by trying every one.
/// Returns `(side with the smallest id, other side, objective)`; ties go to
/// the lexicographically smallest other side.
pub fn exhaustive_split(
    kind: NaiveSplit,
    points: &[Vec<f64>],
    members: &[usize],
    metric: &Metric,
) -> (Vec<usize>, Vec<usize>, f64) {
    fn enumerate(rest: &[usize], a: &mut Vec<usize>, b: &mut Vec<usize>, out: &mut Vec<(Vec<usize>, Vec<usize>)>) {
        match rest.split_first() {
            None => {
                if !b.is_empty() {
                    out.push((a.clone(), b.clone()));
                }
            }
            Some((&x, tail)) => {
                a.push(x);
                enumerate(tail, a, b, out);
                a.pop();
                b.push(x);
                enumerate(tail, a, b, out);
                b.pop();
            }
        }
    }
    let mut all = Vec::new();
    enumerate(&members[1..], &mut vec![members[0]], &mut Vec::new(), &mut all);
    let cands = all
        .into_iter()
        .map(|(a, b)| {
            let j = split_cost(kind, points, &a, metric) + split_cost(kind, points, &b, metric);
            (j, b.clone(), (a, b))
        })
        .collect();
    let (j, (a, b)) = canonical_min(cands);
    (a, b, j)
}

/// Every split of the fully divided tree, parents before children, each as
/// `(left members, right members)`.
pub fn exhaustive_divisive(
    kind: NaiveSplit,
    points: &[Vec<f64>],
    metric: &Metric,
) -> Vec<(Vec<usize>, Vec<usize>)> {
    let mut out = Vec::new();
    let mut stack = vec![(0..points.len()).collect::<Vec<_>>()];
    while let Some(members) = stack.pop() {
        if members.len() < 2 {
            continue;
        }
        let (a, b, _) = exhaustive_split(kind, points, &members, metric);
        out.push((a.clone(), b.clone()));
        stack.push(b);
        stack.push(a);
    }
    out
}

/// Central differences of `f` at `x` with step `eps`.
pub fn central_gradient(mut f: impl FnMut(&[f64]) -> f64, x: &[f64], eps: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|k| {
            probe[k] = x[k] + eps;
            let up = f(&probe);
            probe[k] = x[k] - eps;
            let down = f(&probe);
            probe[k] = x[k];
            (up - down) / (2.0 * eps)
        })
        .collect()
}

/// Index of the candidate closest to `query`; ties go to the lower index.
pub fn nearest(query: &[f64], candidates: &[Vec<f64>], metric: &Metric) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in candidates.iter().enumerate() {
        let d = metric.distance(query, c);
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    best
}

/// Levenshtein distance by filling the full DP table.
pub fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut t = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in t.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in t[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = t[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            t[i][j] = sub.min(t[i - 1][j] + 1).min(t[i][j - 1] + 1);
        }
    }
    t[a.len()][b.len()]
}
