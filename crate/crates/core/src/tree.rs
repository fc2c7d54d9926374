//! Strict binary vocabulary trees and their JSON form.
//!
//! Node ids index [`VocabTree::nodes`]. The builders in this crate put the
//! leaf of token `t` at node id `t` and number internal nodes from `N` in
//! creation order, but any numbering is accepted on input.
//!
//! JSON layout:
//! `{"root": 4, "nodes": [{"id": 0, "token": "a"}, ..., {"id": 4, "left": 3, "right": 2}]}`

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jsonfmt;
use crate::text::unescape_token;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Node {
    Leaf { token: usize },
    Internal { left: usize, right: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VocabTree {
    nodes: Vec<Node>,
    root: usize,
    parent: Vec<Option<usize>>,
    leaf_of_token: Vec<usize>,
}

impl VocabTree {
    /// Validate and wrap a node table: strict binary, single root, acyclic,
    /// and leaves carrying token ids `0..N` exactly once with `N >= 2`.
    pub fn new(nodes: Vec<Node>, root: usize) -> Result<Self> {
        let malformed = |m: String| Err(Error::MalformedTree(m));
        let m = nodes.len();
        if root >= m {
            return malformed(format!("root {root} out of range ({m} nodes)"));
        }
        let n_leaves = nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count();
        if n_leaves < 2 {
            return malformed(format!("{n_leaves} leaves; need at least 2"));
        }
        if m != 2 * n_leaves - 1 {
            return malformed(format!(
                "{n_leaves} leaves need {} internal nodes, found {}",
                n_leaves - 1,
                m - n_leaves
            ));
        }
        let mut parent = vec![None; m];
        let mut leaf_of_token = vec![usize::MAX; n_leaves];
        for (id, node) in nodes.iter().enumerate() {
            match *node {
                Node::Leaf { token } => {
                    if token >= n_leaves {
                        return malformed(format!("token id {token} out of range 0..{n_leaves}"));
                    }
                    if leaf_of_token[token] != usize::MAX {
                        return malformed(format!("token {token} appears on two leaves"));
                    }
                    leaf_of_token[token] = id;
                }
                Node::Internal { left, right } => {
                    for child in [left, right] {
                        if child >= m {
                            return malformed(format!("node {id} has missing child {child}"));
                        }
                        if child == root {
                            return malformed(format!("node {id} points back at the root"));
                        }
                        if let Some(p) = parent[child] {
                            return malformed(format!("node {child} has two parents ({p}, {id})"));
                        }
                        parent[child] = Some(id);
                    }
                }
            }
        }
        // Every non-root node has exactly one parent; reaching all of them
        // from the root rules out detached cycles.
        let mut seen = vec![false; m];
        let mut stack = vec![root];
        let mut reached = 0;
        while let Some(id) = stack.pop() {
            if std::mem::replace(&mut seen[id], true) {
                return malformed(format!("cycle through node {id}"));
            }
            reached += 1;
            if let Node::Internal { left, right } = nodes[id] {
                stack.push(right);
                stack.push(left);
            }
        }
        if reached != m {
            return malformed(format!("{} nodes unreachable from the root", m - reached));
        }
        Ok(VocabTree {
            nodes,
            root,
            parent,
            leaf_of_token,
        })
    }

    pub fn num_tokens(&self) -> usize {
        self.leaf_of_token.len()
    }

    pub fn num_internal(&self) -> usize {
        self.nodes.len() - self.num_tokens()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> Node {
        self.nodes[id]
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn parent(&self, id: usize) -> Option<usize> {
        self.parent[id]
    }

    pub fn leaf_of(&self, token: usize) -> usize {
        self.leaf_of_token[token]
    }

    /// Number of edges from the root to the leaf of `token`.
    pub fn depth(&self, token: usize) -> usize {
        let mut id = self.leaf_of_token[token];
        let mut depth = 0;
        while let Some(p) = self.parent[id] {
            depth += 1;
            id = p;
        }
        depth
    }

    pub fn depths(&self) -> Vec<usize> {
        (0..self.num_tokens()).map(|t| self.depth(t)).collect()
    }

    /// Internal node ids in breadth-first order from the root, left child
    /// before right.
    pub fn internal_bfs(&self) -> Vec<usize> {
        let mut order = Vec::with_capacity(self.num_internal());
        let mut queue = VecDeque::from([self.root]);
        while let Some(id) = queue.pop_front() {
            if let Node::Internal { left, right } = self.nodes[id] {
                order.push(id);
                queue.push_back(left);
                queue.push_back(right);
            }
        }
        order
    }

    /// Tokens in depth-first order, left subtree first.
    pub fn tokens_depth_first(&self) -> Vec<usize> {
        self.tokens_under(self.root)
    }

    /// Tokens below `id` in depth-first order.
    pub fn tokens_under(&self, id: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(id) = stack.pop() {
            match self.nodes[id] {
                Node::Leaf { token } => out.push(token),
                Node::Internal { left, right } => {
                    stack.push(right);
                    stack.push(left);
                }
            }
        }
        out
    }

    /// Nested-parenthesis rendering with token ids, e.g. `((0,1),2)`.
    pub fn shape(&self) -> String {
        fn go(t: &VocabTree, id: usize, out: &mut String) {
            match t.nodes[id] {
                Node::Leaf { token } => out.push_str(&token.to_string()),
                Node::Internal { left, right } => {
                    out.push('(');
                    go(t, left, out);
                    out.push(',');
                    go(t, right, out);
                    out.push(')');
                }
            }
        }
        let mut s = String::new();
        go(self, self.root, &mut s);
        s
    }

    /// Serialize with `tokens[t]` as the label of token id `t`.
    pub fn to_json(&self, tokens: &[char]) -> Result<String> {
        assert_eq!(tokens.len(), self.num_tokens(), "one label per token");
        let nodes = self
            .nodes
            .iter()
            .enumerate()
            .map(|(id, node)| match *node {
                Node::Leaf { token } => NodeRecord::Leaf {
                    id,
                    token: tokens[token].to_string(),
                },
                Node::Internal { left, right } => NodeRecord::Internal { id, left, right },
            })
            .collect();
        Ok(jsonfmt::to_string(&TreeRecord {
            root: self.root,
            nodes,
        })?)
    }

    /// Parse the JSON form. Token ids are assigned to leaves in ascending
    /// node-id order; the returned labels are indexed by token id.
    pub fn from_json(text: &str) -> Result<(Self, Vec<char>)> {
        let record: TreeRecord = serde_json::from_str(text)?;
        let m = record.nodes.len();
        let mut slots: Vec<Option<&NodeRecord>> = vec![None; m];
        for rec in &record.nodes {
            let id = rec.id();
            if id >= m {
                return Err(Error::MalformedTree(format!("node id {id} out of range 0..{m}")));
            }
            if slots[id].replace(rec).is_some() {
                return Err(Error::MalformedTree(format!("duplicate node id {id}")));
            }
        }
        let mut labels = Vec::new();
        let mut seen = HashMap::new();
        let mut nodes = Vec::with_capacity(m);
        for rec in slots.into_iter().map(|s| s.expect("ids form 0..m")) {
            nodes.push(match rec {
                NodeRecord::Leaf { token, .. } => {
                    let c = unescape_token(token).ok_or_else(|| {
                        Error::MalformedTree(format!("leaf label {token:?} is not one character"))
                    })?;
                    if seen.insert(c, labels.len()).is_some() {
                        return Err(Error::MalformedTree(format!("label {token:?} repeated")));
                    }
                    labels.push(c);
                    Node::Leaf {
                        token: labels.len() - 1,
                    }
                }
                &NodeRecord::Internal { left, right, .. } => Node::Internal { left, right },
            });
        }
        Ok((VocabTree::new(nodes, record.root)?, labels))
    }
}

/// Incremental construction: leaf `t` gets node id `t`, internal nodes are
/// appended after the leaves.
#[derive(Debug)]
pub(crate) struct TreeBuilder {
    nodes: Vec<Node>,
}

impl TreeBuilder {
    pub(crate) fn with_leaves(n: usize) -> Self {
        let mut nodes = Vec::with_capacity(2 * n.max(1) - 1);
        nodes.extend((0..n).map(|token| Node::Leaf { token }));
        TreeBuilder { nodes }
    }

    pub(crate) fn join(&mut self, left: usize, right: usize) -> usize {
        self.nodes.push(Node::Internal { left, right });
        self.nodes.len() - 1
    }

    pub(crate) fn finish(self, root: usize) -> Result<VocabTree> {
        VocabTree::new(self.nodes, root)
    }
}

#[derive(Serialize, Deserialize)]
struct TreeRecord {
    root: usize,
    nodes: Vec<NodeRecord>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
enum NodeRecord {
    Leaf { id: usize, token: String },
    Internal { id: usize, left: usize, right: usize },
}

impl NodeRecord {
    fn id(&self) -> usize {
        match *self {
            NodeRecord::Leaf { id, .. } | NodeRecord::Internal { id, .. } => id,
        }
    }
}
