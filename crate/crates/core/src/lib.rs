//! Vocabulary trees for hierarchical softmax.
//!
//! A vocabulary tree is a strict binary tree whose leaves are tokens. This
//! crate builds such trees either by Huffman coding over token frequencies
//! or by hierarchical clustering of (cross-lingual) token embeddings, and
//! evaluates the hierarchical softmax output layer defined over them:
//! per-path leaf probabilities, the padded sign/bias formulation used for
//! vectorized log-probabilities, analytic gradients and a small SGD trainer.
//!
//! The evaluation helpers cover character error rate and bilingual lexicon
//! induction with character-averaged word embeddings.

pub mod clustering;
pub mod corpus;
pub mod embedding;
mod error;
pub mod eval;
pub mod hsoftmax;
pub mod huffman;
pub mod jsonfmt;
pub mod text;
pub mod tree;

pub use crate::clustering::{agglomerate, divide, DistanceMetric, LinkageSpec, MetricKind};
pub use crate::corpus::{build_vocabulary, downsampling_ratios, LanguageProportions, Vocabulary};
pub use crate::embedding::EmbeddingMatrix;
pub use crate::error::{Error, Result};
pub use crate::huffman::build_huffman;
pub use crate::tree::{Node, VocabTree};
