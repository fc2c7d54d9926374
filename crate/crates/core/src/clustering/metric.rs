use std::fmt;
use std::str::FromStr;

use crate::embedding::{dot, EmbeddingMatrix};

/// Which distance to use between two embeddings.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MetricKind {
    Euclidean,
    StandardizedEuclidean,
    Cityblock,
    Cosine,
    Correlation,
}

impl MetricKind {
    pub const ALL: [MetricKind; 5] = [
        MetricKind::Euclidean,
        MetricKind::StandardizedEuclidean,
        MetricKind::Cityblock,
        MetricKind::Cosine,
        MetricKind::Correlation,
    ];

    pub fn label(self) -> &'static str {
        match self {
            MetricKind::Euclidean => "euclidean",
            MetricKind::StandardizedEuclidean => "s-euclidean",
            MetricKind::Cityblock => "cityblock",
            MetricKind::Cosine => "cosine",
            MetricKind::Correlation => "correlation",
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for MetricKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MetricKind::ALL
            .into_iter()
            .find(|k| k.label() == s)
            .ok_or_else(|| {
                let valid: Vec<_> = MetricKind::ALL.iter().map(|k| k.label()).collect();
                format!("unknown metric {s:?}; expected one of {}", valid.join(", "))
            })
    }
}

/// A ready-to-use distance. The standardized Euclidean variant carries the
/// per-dimension standard deviations it divides by.
#[derive(Clone, Debug, PartialEq)]
pub enum DistanceMetric {
    Euclidean,
    StandardizedEuclidean { sigma: Vec<f64> },
    Cityblock,
    Cosine,
    Correlation,
}

/// A distance value plus whether the degenerate-input rule produced it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Measured {
    pub value: f64,
    pub degenerate: bool,
}

impl Measured {
    fn plain(value: f64) -> Self {
        Measured {
            value,
            degenerate: false,
        }
    }
}

impl DistanceMetric {
    /// Instantiate `kind` for the embedding set `e`. For the standardized
    /// Euclidean distance the deviations are computed once over all of `e`.
    pub fn for_embeddings(kind: MetricKind, e: &EmbeddingMatrix) -> Self {
        match kind {
            MetricKind::Euclidean => DistanceMetric::Euclidean,
            MetricKind::StandardizedEuclidean => DistanceMetric::StandardizedEuclidean {
                sigma: population_std(e),
            },
            MetricKind::Cityblock => DistanceMetric::Cityblock,
            MetricKind::Cosine => DistanceMetric::Cosine,
            MetricKind::Correlation => DistanceMetric::Correlation,
        }
    }

    pub fn kind(&self) -> MetricKind {
        match self {
            DistanceMetric::Euclidean => MetricKind::Euclidean,
            DistanceMetric::StandardizedEuclidean { .. } => MetricKind::StandardizedEuclidean,
            DistanceMetric::Cityblock => MetricKind::Cityblock,
            DistanceMetric::Cosine => MetricKind::Cosine,
            DistanceMetric::Correlation => MetricKind::Correlation,
        }
    }

    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        self.measure(a, b).value
    }

    /// Distance with degeneracy reporting.
    ///
    /// Cosine with a zero vector and correlation with a constant vector
    /// are undefined; those pairs get 0 when the operands are identical
    /// and the maximal distance 2 otherwise, and are flagged.
    pub fn measure(&self, a: &[f64], b: &[f64]) -> Measured {
        debug_assert_eq!(a.len(), b.len(), "embedding dimensions differ");
        match self {
            DistanceMetric::Euclidean => Measured::plain(squared_euclidean(a, b).sqrt()),
            DistanceMetric::StandardizedEuclidean { sigma } => {
                let s: f64 = a
                    .iter()
                    .zip(b)
                    .zip(sigma)
                    .filter(|(_, &s)| s > 0.0)
                    .map(|((x, y), s)| {
                        let z = (x - y) / s;
                        z * z
                    })
                    .sum();
                Measured::plain(s.sqrt())
            }
            DistanceMetric::Cityblock => {
                Measured::plain(a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum())
            }
            DistanceMetric::Cosine => {
                let na = dot(a, a).sqrt();
                let nb = dot(b, b).sqrt();
                if na == 0.0 || nb == 0.0 {
                    return degenerate(a, b);
                }
                if a == b {
                    return Measured::plain(0.0);
                }
                Measured::plain((1.0 - dot(a, b) / (na * nb)).clamp(0.0, 2.0))
            }
            DistanceMetric::Correlation => {
                let n = a.len() as f64;
                let ma = a.iter().sum::<f64>() / n;
                let mb = b.iter().sum::<f64>() / n;
                let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
                for (x, y) in a.iter().zip(b) {
                    let (dx, dy) = (x - ma, y - mb);
                    sab += dx * dy;
                    saa += dx * dx;
                    sbb += dy * dy;
                }
                if saa == 0.0 || sbb == 0.0 {
                    return degenerate(a, b);
                }
                if a == b {
                    return Measured::plain(0.0);
                }
                Measured::plain((1.0 - sab / (saa * sbb).sqrt()).clamp(0.0, 2.0))
            }
        }
    }
}

fn degenerate(a: &[f64], b: &[f64]) -> Measured {
    Measured {
        value: if a == b { 0.0 } else { 2.0 },
        degenerate: true,
    }
}

/// Distance between two embeddings under `metric`.
pub fn pairwise_distance(a: &[f64], b: &[f64], metric: &DistanceMetric) -> f64 {
    metric.distance(a, b)
}

pub(crate) fn squared_euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Population standard deviation of each column of `e`.
pub fn population_std(e: &EmbeddingMatrix) -> Vec<f64> {
    let n = e.len() as f64;
    let mut mean = vec![0.0; e.dim()];
    for row in e.rows() {
        for (m, x) in mean.iter_mut().zip(row) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; e.dim()];
    for row in e.rows() {
        for ((v, x), m) in var.iter_mut().zip(row).zip(&mean) {
            *v += (x - m) * (x - m);
        }
    }
    var.into_iter().map(|v| (v / n).sqrt()).collect()
}
