//! Hierarchical softmax over a vocabulary tree.
//!
//! Internal nodes are numbered in breadth-first order from the root (left
//! child first); row `i` of [`NodeParams`] is the vector `r_i` of internal
//! node `i`. Taking the left branch at a node with score `x = r·h` has
//! probability `σ(x)`, the right branch `1 − σ(x)`. In a path code, bit `0`
//! is a left step and bit `1` a right step.
//!
//! Two evaluation routes are provided: [`leaf_prob`] multiplies branch
//! probabilities along one root-to-leaf path, while
//! [`log_probs_vectorized`] scores every internal node once and sums
//! `log(Sign ∘ σ(p) + Bias)` over the padded columns of a [`SignBias`].

mod train;

use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::embedding::dot;
use crate::error::{Error, Result};
use crate::jsonfmt;
use crate::text::escape_token;
use crate::tree::{Node, VocabTree};

pub use self::train::{
    accuracy, gaussian_blobs, predict, train_flat_softmax, train_toy, BlobConfig, FlatSoftmax,
    Sample, TrainConfig, TrainOutcome,
};

/// Root-to-leaf codes and the internal nodes visited, per token.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathCodeTable {
    codes: Vec<Vec<bool>>,
    nodes: Vec<Vec<usize>>,
}

impl PathCodeTable {
    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    /// Branch bits of `token`, `true` meaning a right step.
    pub fn code(&self, token: usize) -> &[bool] {
        &self.codes[token]
    }

    /// Breadth-first indices of the internal nodes on the path of `token`.
    pub fn path_nodes(&self, token: usize) -> &[usize] {
        &self.nodes[token]
    }

    pub fn depth(&self, token: usize) -> usize {
        self.codes[token].len()
    }

    pub fn max_depth(&self) -> usize {
        self.codes.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn bitstring(&self, token: usize) -> String {
        self.codes[token]
            .iter()
            .map(|&right| if right { '1' } else { '0' })
            .collect()
    }

    /// True when no code is a prefix of another.
    pub fn is_prefix_free(&self) -> bool {
        let mut sorted: Vec<&Vec<bool>> = self.codes.iter().collect();
        sorted.sort();
        sorted.windows(2).all(|w| !w[1].starts_with(w[0]))
    }

    /// `token<TAB>bitstring` lines in depth-first leaf order.
    pub fn write_tsv<W: Write>(&self, tree: &VocabTree, labels: &[char], mut out: W) -> Result<()> {
        for token in tree.tokens_depth_first() {
            writeln!(out, "{}\t{}", escape_token(labels[token]), self.bitstring(token))?;
        }
        Ok(())
    }
}

/// Walk every root-to-leaf path of `tree`.
pub fn derive_codes(tree: &VocabTree) -> PathCodeTable {
    let n = tree.num_tokens();
    let mut bfs_index = vec![usize::MAX; tree.nodes().len()];
    for (i, id) in tree.internal_bfs().into_iter().enumerate() {
        bfs_index[id] = i;
    }
    let mut codes = vec![Vec::new(); n];
    let mut nodes = vec![Vec::new(); n];
    let mut stack = vec![(tree.root(), Vec::new(), Vec::new())];
    while let Some((id, code, path)) = stack.pop() {
        match tree.node(id) {
            Node::Leaf { token } => {
                codes[token] = code;
                nodes[token] = path;
            }
            Node::Internal { left, right } => {
                let mut path = path;
                path.push(bfs_index[id]);
                let mut right_code = code.clone();
                right_code.push(true);
                let mut left_code = code;
                left_code.push(false);
                stack.push((right, right_code, path.clone()));
                stack.push((left, left_code, path));
            }
        }
    }
    PathCodeTable { codes, nodes }
}

/// Padded per-token branch matrices, all `N x D` with `D` the maximum
/// depth. A left step stores `(Sign, Bias) = (+1, 0)`, a right step
/// `(-1, 1)`, and cells past the end of a path `(0, 1)`, which contributes
/// `log 1 = 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignBias {
    rows: usize,
    depth: usize,
    sign: Vec<i8>,
    bias: Vec<u8>,
    column_node: Vec<Option<usize>>,
}

pub fn build_sign_bias(tree: &VocabTree) -> SignBias {
    SignBias::from_codes(&derive_codes(tree))
}

impl SignBias {
    pub fn from_codes(codes: &PathCodeTable) -> Self {
        Self::padded(codes, codes.max_depth())
    }

    /// As [`SignBias::from_codes`] with `depth >= max depth` columns.
    pub fn padded(codes: &PathCodeTable, depth: usize) -> Self {
        assert!(depth >= codes.max_depth(), "depth {depth} cuts paths short");
        let rows = codes.len();
        let mut sign = vec![0i8; rows * depth];
        let mut bias = vec![1u8; rows * depth];
        let mut column_node = vec![None; rows * depth];
        for t in 0..rows {
            for (k, (&right, &node)) in codes.code(t).iter().zip(codes.path_nodes(t)).enumerate() {
                let cell = t * depth + k;
                sign[cell] = if right { -1 } else { 1 };
                bias[cell] = u8::from(right);
                column_node[cell] = Some(node);
            }
        }
        SignBias {
            rows,
            depth,
            sign,
            bias,
            column_node,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn sign(&self, row: usize, col: usize) -> i8 {
        self.sign[row * self.depth + col]
    }

    pub fn bias(&self, row: usize, col: usize) -> u8 {
        self.bias[row * self.depth + col]
    }

    pub fn column_node(&self, row: usize, col: usize) -> Option<usize> {
        self.column_node[row * self.depth + col]
    }

    pub fn sign_matrix(&self) -> Vec<Vec<i8>> {
        self.sign.chunks(self.depth.max(1)).map(<[i8]>::to_vec).collect()
    }

    pub fn bias_matrix(&self) -> Vec<Vec<u8>> {
        self.bias.chunks(self.depth.max(1)).map(<[u8]>::to_vec).collect()
    }

    /// JSON export; padding cells have node index `-1`.
    pub fn to_json(&self, labels: &[char]) -> Result<String> {
        #[derive(Serialize)]
        struct Export<'a> {
            rows: usize,
            depth: usize,
            tokens: Vec<String>,
            sign: Vec<Vec<i8>>,
            bias: Vec<Vec<u8>>,
            column_node: Vec<&'a [i64]>,
        }
        let nodes: Vec<i64> = self
            .column_node
            .iter()
            .map(|n| n.map_or(-1, |n| n as i64))
            .collect();
        Ok(jsonfmt::to_string(&Export {
            rows: self.rows,
            depth: self.depth,
            tokens: labels.iter().map(|c| c.to_string()).collect(),
            sign: self.sign_matrix(),
            bias: self.bias_matrix(),
            column_node: nodes.chunks(self.depth.max(1)).collect(),
        })?)
    }
}

/// Trainable internal-node vectors, row-major `(N-1) x H`.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeParams {
    rows: usize,
    hidden: usize,
    data: Vec<f64>,
}

/// Header of the binary parameter file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamsHeader {
    #[serde(rename = "N")]
    pub tokens: usize,
    #[serde(rename = "H")]
    pub hidden: usize,
    #[serde(rename = "tree-hash")]
    pub tree_hash: String,
}

impl NodeParams {
    pub fn zeros(rows: usize, hidden: usize) -> Self {
        NodeParams {
            rows,
            hidden,
            data: vec![0.0; rows * hidden],
        }
    }

    pub fn from_flat(rows: usize, hidden: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * hidden {
            return Err(Error::DimensionMismatch {
                expected: rows * hidden,
                found: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("node parameters".into()));
        }
        Ok(NodeParams { rows, hidden, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.hidden..(i + 1) * self.hidden]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.hidden..(i + 1) * self.hidden]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// One JSON header line followed by the rows as little-endian `f64`.
    pub fn write_binary<W: Write>(&self, mut out: W, tree_hash: &str) -> Result<()> {
        let header = ParamsHeader {
            tokens: self.rows + 1,
            hidden: self.hidden,
            tree_hash: tree_hash.to_string(),
        };
        out.write_all(serde_json::to_string(&header)?.as_bytes())?;
        out.write_all(b"\n")?;
        for v in &self.data {
            out.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: BufRead>(mut input: R) -> Result<(ParamsHeader, Self)> {
        let mut line = String::new();
        input.read_line(&mut line)?;
        let header: ParamsHeader = serde_json::from_str(line.trim_end())?;
        if header.tokens < 2 {
            return Err(Error::VocabularyTooSmall(header.tokens));
        }
        let rows = header.tokens - 1;
        let mut bytes = vec![0u8; rows * header.hidden * 8];
        input.read_exact(&mut bytes)?;
        if input.read(&mut [0u8])? != 0 {
            return Err(Error::Io(io::Error::new(
                io::ErrorKind::InvalidData,
                "trailing bytes after parameter rows",
            )));
        }
        let data = bytes
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk")))
            .collect();
        let params = NodeParams::from_flat(rows, header.hidden, data)?;
        Ok((header, params))
    }
}

/// `ln(1 + e^x)` without overflow.
pub(crate) fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn check_dims(h: &[f64], params: &NodeParams, internal: usize) -> Result<()> {
    if h.len() != params.hidden {
        return Err(Error::DimensionMismatch {
            expected: params.hidden,
            found: h.len(),
        });
    }
    if params.rows != internal {
        return Err(Error::DimensionMismatch {
            expected: internal,
            found: params.rows,
        });
    }
    Ok(())
}

/// Probability of `token` as the product of branch probabilities along its
/// path.
pub fn leaf_prob(h: &[f64], params: &NodeParams, codes: &PathCodeTable, token: usize) -> Result<f64> {
    leaf_prob_counted(h, params, codes, token).map(|(p, _)| p)
}

/// [`leaf_prob`] plus the number of inner products it evaluated.
pub fn leaf_prob_counted(
    h: &[f64],
    params: &NodeParams,
    codes: &PathCodeTable,
    token: usize,
) -> Result<(f64, usize)> {
    if token >= codes.len() {
        return Err(Error::UnknownToken(token));
    }
    check_dims(h, params, codes.len() - 1)?;
    let mut p = 1.0;
    let mut products = 0;
    for (&right, &node) in codes.code(token).iter().zip(codes.path_nodes(token)) {
        let x = dot(params.row(node), h);
        products += 1;
        p *= if right { sigmoid(-x) } else { sigmoid(x) };
    }
    Ok((p, products))
}

/// Node scores `p_i = r_iᵀ h` for every internal node.
pub fn node_scores(h: &[f64], params: &NodeParams) -> Vec<f64> {
    (0..params.rows).map(|i| dot(params.row(i), h)).collect()
}

/// Log-probabilities of every token: `Σ_col log(Sign ∘ σ(p) + Bias)`.
///
/// The logarithm is evaluated as `log σ(x) = −softplus(−x)` for
/// `(Sign, Bias) = (1, 0)` and `log(1 − σ(x)) = −softplus(x)` for
/// `(−1, 1)`, which stays finite for large `|x|`.
pub fn log_probs_vectorized(h: &[f64], params: &NodeParams, sb: &SignBias) -> Result<Vec<f64>> {
    check_dims(h, params, sb.rows.saturating_sub(1))?;
    let p = node_scores(h, params);
    Ok(log_probs_from_scores(&p, sb))
}

pub(crate) fn log_probs_from_scores(p: &[f64], sb: &SignBias) -> Vec<f64> {
    (0..sb.rows)
        .map(|t| {
            (0..sb.depth)
                .map(|k| {
                    let cell = t * sb.depth + k;
                    match (sb.sign[cell], sb.bias[cell], sb.column_node[cell]) {
                        (1, 0, Some(n)) => -softplus(-p[n]),
                        (-1, 1, Some(n)) => -softplus(p[n]),
                        (0, 1, _) => 0.0,
                        (s, b, _) => unreachable!("invalid sign/bias cell ({s}, {b})"),
                    }
                })
                .sum()
        })
        .collect()
}

/// Loss `−log P(target)` and its exact gradients.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradient {
    pub loss: f64,
    pub grad_h: Vec<f64>,
    /// Row-major like [`NodeParams`]; rows off the target path are zero.
    pub grad_r: Vec<f64>,
}

/// Negative log-likelihood of `target` and its gradients with respect to
/// the hidden state and every node vector.
///
/// For a path node with score `x`, `d loss / dx = σ(x) − 1` on a left step
/// and `σ(x)` on a right step.
pub fn nll_grad(h: &[f64], params: &NodeParams, codes: &PathCodeTable, target: usize) -> Result<Gradient> {
    if target >= codes.len() {
        return Err(Error::UnknownToken(target));
    }
    check_dims(h, params, codes.len() - 1)?;
    let hidden = params.hidden;
    let mut loss = 0.0;
    let mut grad_h = vec![0.0; hidden];
    let mut grad_r = vec![0.0; params.data.len()];
    for (&right, &node) in codes.code(target).iter().zip(codes.path_nodes(target)) {
        let r = params.row(node);
        let x = dot(r, h);
        let g = if right {
            loss += softplus(x);
            sigmoid(x)
        } else {
            loss += softplus(-x);
            sigmoid(x) - 1.0
        };
        for (gh, rv) in grad_h.iter_mut().zip(r) {
            *gh += g * rv;
        }
        for (gr, hv) in grad_r[node * hidden..(node + 1) * hidden].iter_mut().zip(h) {
            *gr += g * hv;
        }
    }
    Ok(Gradient {
        loss,
        grad_h,
        grad_r,
    })
}
