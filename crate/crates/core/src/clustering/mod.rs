//! Embedding-based vocabulary trees by hierarchical clustering.
//!
//! A [`LinkageSpec`] names the construction as `family.method.metric`,
//! e.g. `agglomerative.average.cityblock` or `divisive.2-medoids.s-euclidean`.
//! Only the combinations below are accepted:
//!
//! | family        | method                | metrics           |
//! |---------------|-----------------------|-------------------|
//! | agglomerative | average, weighted     | all five          |
//! | agglomerative | centroid, median, ward| euclidean         |
//! | divisive      | 2-means               | euclidean         |
//! | divisive      | spherical             | cosine            |
//! | divisive      | 2-medoids             | all five          |
//!
//! Ties between equally good merges or splits (within a relative `1e-12`)
//! are resolved towards the cluster pair with the lexicographically
//! smallest `(smallest token id, second smallest token id)`. The child
//! holding the smallest token id always becomes the left child.

mod agglomerative;
mod divisive;
mod metric;

use std::fmt;
use std::str::FromStr;

use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::tree::VocabTree;

pub use self::agglomerative::{agglomerate, agglomerate_detailed, Agglomeration, Merge};
pub use self::divisive::{divide, divide_detailed, Division, Split, EXACT_SPLIT_LIMIT, MAX_SWEEPS};
pub use self::metric::{pairwise_distance, population_std, DistanceMetric, Measured, MetricKind};

/// Relative slack under which two objective values count as tied.
pub const TIE_RELATIVE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Linkage {
    Average,
    Weighted,
    Centroid,
    Median,
    Ward,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SplitRule {
    TwoMeans,
    Spherical,
    TwoMedoids,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    Agglomerative(Linkage),
    Divisive(SplitRule),
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::Agglomerative(Linkage::Average),
        Method::Agglomerative(Linkage::Weighted),
        Method::Agglomerative(Linkage::Centroid),
        Method::Agglomerative(Linkage::Median),
        Method::Agglomerative(Linkage::Ward),
        Method::Divisive(SplitRule::TwoMeans),
        Method::Divisive(SplitRule::Spherical),
        Method::Divisive(SplitRule::TwoMedoids),
    ];

    fn label(self) -> &'static str {
        match self {
            Method::Agglomerative(Linkage::Average) => "agglomerative.average",
            Method::Agglomerative(Linkage::Weighted) => "agglomerative.weighted",
            Method::Agglomerative(Linkage::Centroid) => "agglomerative.centroid",
            Method::Agglomerative(Linkage::Median) => "agglomerative.median",
            Method::Agglomerative(Linkage::Ward) => "agglomerative.ward",
            Method::Divisive(SplitRule::TwoMeans) => "divisive.2-means",
            Method::Divisive(SplitRule::Spherical) => "divisive.spherical",
            Method::Divisive(SplitRule::TwoMedoids) => "divisive.2-medoids",
        }
    }

    fn supports(self, metric: MetricKind) -> bool {
        match self {
            Method::Agglomerative(Linkage::Average | Linkage::Weighted)
            | Method::Divisive(SplitRule::TwoMedoids) => true,
            Method::Agglomerative(Linkage::Centroid | Linkage::Median | Linkage::Ward)
            | Method::Divisive(SplitRule::TwoMeans) => metric == MetricKind::Euclidean,
            Method::Divisive(SplitRule::Spherical) => metric == MetricKind::Cosine,
        }
    }
}

/// A validated clustering method and metric pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LinkageSpec {
    method: Method,
    metric: MetricKind,
}

impl LinkageSpec {
    pub fn new(method: Method, metric: MetricKind) -> Result<Self> {
        if method.supports(metric) {
            Ok(LinkageSpec { method, metric })
        } else {
            Err(Self::invalid(format!("{}.{}", method.label(), metric.label())))
        }
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn metric(&self) -> MetricKind {
        self.metric
    }

    /// Every supported combination, in table order.
    pub fn all() -> Vec<LinkageSpec> {
        Method::ALL
            .iter()
            .flat_map(|&method| {
                MetricKind::ALL
                    .iter()
                    .filter(move |&&m| method.supports(m))
                    .map(move |&metric| LinkageSpec { method, metric })
            })
            .collect()
    }

    fn invalid(given: String) -> Error {
        Error::InvalidSpec {
            given,
            valid: LinkageSpec::all().iter().map(ToString::to_string).collect(),
        }
    }
}

impl fmt::Display for LinkageSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.method.label(), self.metric.label())
    }
}

impl FromStr for LinkageSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LinkageSpec::all()
            .into_iter()
            .find(|spec| spec.to_string() == s)
            .ok_or_else(|| Self::invalid(s.to_string()))
    }
}

/// Build a vocabulary tree over the rows of `e` with whichever family
/// `spec` names.
pub fn cluster_tree(e: &EmbeddingMatrix, spec: LinkageSpec) -> Result<VocabTree> {
    match spec.method {
        Method::Agglomerative(_) => agglomerate(e, spec),
        Method::Divisive(_) => divide(e, spec),
    }
}

/// Index of the best candidate: smallest value, with values within
/// [`TIE_RELATIVE`] of the minimum ordered by `key`.
pub(crate) fn canonical_argmin<K: Ord>(
    values: impl Iterator<Item = f64> + Clone,
    key: impl Fn(usize) -> K,
) -> Option<usize> {
    let min = values.clone().fold(f64::INFINITY, f64::min);
    if !min.is_finite() {
        return None;
    }
    let bound = min + TIE_RELATIVE * min.abs();
    values
        .enumerate()
        .filter(|&(_, v)| v <= bound)
        .map(|(i, _)| i)
        .min_by_key(|&i| key(i))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twenty_supported_specs() {
        let all = LinkageSpec::all();
        assert_eq!(all.len(), 20);
        for spec in &all {
            assert_eq!(spec.to_string().parse::<LinkageSpec>().unwrap(), *spec);
        }
        assert_eq!(
            all[0].to_string(),
            "agglomerative.average.euclidean"
        );
        assert!(all
            .iter()
            .any(|s| s.to_string() == "divisive.2-medoids.s-euclidean"));
        assert!(all
            .iter()
            .any(|s| s.to_string() == "agglomerative.average.cityblock"));
    }

    #[test]
    fn unsupported_combinations_are_rejected() {
        for bad in [
            "agglomerative.ward.cosine",
            "agglomerative.centroid.cityblock",
            "divisive.2-means.cosine",
            "divisive.spherical.euclidean",
            "agglomerative.single.euclidean",
            "average.euclidean",
            "",
        ] {
            let err = bad.parse::<LinkageSpec>().unwrap_err();
            let msg = err.to_string();
            assert!(msg.contains("agglomerative.average.cityblock"), "{msg}");
        }
        assert!(LinkageSpec::new(Method::Divisive(SplitRule::Spherical), MetricKind::Cosine).is_ok());
        assert!(LinkageSpec::new(
            Method::Agglomerative(Linkage::Median),
            MetricKind::Correlation
        )
        .is_err());
    }

    #[test]
    fn canonical_argmin_prefers_small_keys_among_ties() {
        let v = [3.0, 1.0, 1.0 + 1e-15, 2.0];
        assert_eq!(canonical_argmin(v.iter().copied(), |i| [9, 5, 1, 0][i]), Some(2));
        assert_eq!(canonical_argmin(v.iter().copied(), |i| i), Some(1));
        assert_eq!(canonical_argmin(std::iter::empty(), |i: usize| i), None);
    }
}
