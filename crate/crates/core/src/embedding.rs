//! Token embedding matrices, their text format, Mono-Map and shared-token
//! averaging.
//!
//! Text format: a header line `N m`, then `N` lines `token v_1 ... v_m`
//! separated by single spaces. Whitespace and control tokens are written as
//! `U+XXXX`.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::corpus::Vocabulary;
use crate::error::{Error, Result};
use crate::text::{escape_token, unescape_token};

/// Similarities below `-NEGATIVE_TOLERANCE` count as genuinely negative
/// when clamping in [`mono_map`].
pub const NEGATIVE_TOLERANCE: f64 = 1e-9;

/// Row-major `N x m` matrix of finite values; row `i` belongs to token id `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingMatrix {
    rows: usize,
    dim: usize,
    data: Vec<f64>,
}

impl EmbeddingMatrix {
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let first = rows.first().ok_or(Error::EmptyEmbeddings)?;
        let dim = first.as_ref().len();
        if dim == 0 {
            return Err(Error::EmptyEmbeddings);
        }
        let mut data = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("row {i}")));
            }
            data.extend_from_slice(row);
        }
        Ok(EmbeddingMatrix {
            rows: rows.len(),
            dim,
            data,
        })
    }

    pub fn from_flat(rows: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || dim == 0 {
            return Err(Error::EmptyEmbeddings);
        }
        if data.len() != rows * dim {
            return Err(Error::DimensionMismatch {
                expected: rows * dim,
                found: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix".into()));
        }
        Ok(EmbeddingMatrix { rows, dim, data })
    }

    pub fn len(&self) -> usize {
        self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Multiply every entry by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        EmbeddingMatrix {
            rows: self.rows,
            dim: self.dim,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    /// Matrix whose rows are `self`'s rows picked by `order`.
    pub fn select_rows(&self, order: &[usize]) -> Self {
        let mut data = Vec::with_capacity(order.len() * self.dim);
        for &i in order {
            data.extend_from_slice(self.row(i));
        }
        EmbeddingMatrix {
            rows: order.len(),
            dim: self.dim,
            data,
        }
    }

    /// Left-pad every row with zeros up to `dim` columns.
    ///
    /// Mono-Map rows are sorted ascending and nonnegative, so leading zeros
    /// keep them sorted; this is how maps of languages with different
    /// vocabulary sizes are brought to a common width.
    pub fn left_padded(&self, dim: usize) -> Self {
        assert!(dim >= self.dim, "cannot pad {} columns down to {dim}", self.dim);
        let pad = dim - self.dim;
        let mut data = Vec::with_capacity(self.rows * dim);
        for row in self.rows() {
            data.extend(std::iter::repeat_n(0.0, pad));
            data.extend_from_slice(row);
        }
        EmbeddingMatrix {
            rows: self.rows,
            dim,
            data,
        }
    }
}

/// An embedding file as read from disk: token strings in file order plus
/// their vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct TokenEmbeddings {
    pub tokens: Vec<String>,
    pub matrix: EmbeddingMatrix,
}

impl TokenEmbeddings {
    pub fn read<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines().enumerate();
        let (rows, dim) = loop {
            let Some((i, line)) = lines.next() else {
                return Err(Error::EmptyEmbeddings);
            };
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let mut header = || -> Option<usize> { parts.next()?.parse().ok() };
            match (header(), header(), parts.next()) {
                (Some(n), Some(m), None) if n > 0 && m > 0 => break (n, m),
                _ => return Err(Error::parse(i + 1, "expected header `N m`")),
            }
        };
        let mut tokens = Vec::with_capacity(rows);
        let mut data = Vec::with_capacity(rows * dim);
        for (i, line) in lines {
            let line = line?;
            let line = line.strip_suffix('\r').unwrap_or(&line);
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split(' ').filter(|f| !f.is_empty());
            let token = fields.next().expect("non-blank line has a field");
            let before = data.len();
            for f in fields {
                let v: f64 = f
                    .parse()
                    .map_err(|e| Error::parse(i + 1, format!("bad value {f:?}: {e}")))?;
                if !v.is_finite() {
                    return Err(Error::NonFinite(token.to_string()));
                }
                data.push(v);
            }
            if data.len() - before != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: data.len() - before,
                });
            }
            tokens.push(token.to_string());
        }
        if tokens.len() != rows {
            return Err(Error::parse(
                0,
                format!("header declares {rows} rows, found {}", tokens.len()),
            ));
        }
        Ok(TokenEmbeddings {
            tokens,
            matrix: EmbeddingMatrix::from_flat(rows, dim, data)?,
        })
    }

    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        Self::read(BufReader::new(File::open(path)?))
    }

    /// Character tokens in file order, rejecting entries that are not a
    /// single (possibly escaped) character.
    pub fn char_tokens(&self) -> Result<Vec<char>> {
        self.tokens
            .iter()
            .enumerate()
            .map(|(i, t)| {
                unescape_token(t).ok_or_else(|| {
                    Error::parse(i + 2, format!("not a single-character token: {t:?}"))
                })
            })
            .collect()
    }

    /// Map from character token to vector. Multi-character entries are
    /// ignored; a repeated character is an error.
    pub fn char_map(&self) -> Result<HashMap<char, Vec<f64>>> {
        let mut map = HashMap::with_capacity(self.tokens.len());
        for (tok, row) in self.tokens.iter().zip(self.matrix.rows()) {
            if let Some(c) = unescape_token(tok) {
                if map.insert(c, row.to_vec()).is_some() {
                    return Err(Error::DuplicateToken(tok.clone()));
                }
            }
        }
        Ok(map)
    }

    /// Rows for every vocabulary token, in vocabulary id order. Extra tokens
    /// in the file are ignored; every missing token is reported.
    pub fn for_vocabulary(&self, vocab: &Vocabulary) -> Result<EmbeddingMatrix> {
        let map = self.char_map()?;
        let missing: Vec<String> = vocab
            .tokens()
            .iter()
            .filter(|c| !map.contains_key(c))
            .map(|&c| escape_token(c))
            .collect();
        if !missing.is_empty() {
            return Err(Error::MissingTokens(missing));
        }
        let rows: Vec<&[f64]> = vocab.tokens().iter().map(|c| map[c].as_slice()).collect();
        EmbeddingMatrix::from_rows(&rows)
    }
}

/// Load the embedding rows of `vocab` from a text embedding file.
pub fn load_embeddings(path: impl AsRef<Path>, vocab: &Vocabulary) -> Result<EmbeddingMatrix> {
    TokenEmbeddings::open(path)?.for_vocabulary(vocab)
}

/// Write character-token embeddings in the text format.
pub fn write_embeddings<W: Write>(
    mut out: W,
    tokens: &[char],
    matrix: &EmbeddingMatrix,
) -> Result<()> {
    assert_eq!(tokens.len(), matrix.len(), "one token per row");
    writeln!(out, "{} {}", matrix.len(), matrix.dim())?;
    for (&c, row) in tokens.iter().zip(matrix.rows()) {
        write!(out, "{}", escape_token(c))?;
        for v in row {
            write!(out, " {v}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Result of [`mono_map`].
#[derive(Clone, Debug, PartialEq)]
pub struct MonoMap {
    pub matrix: EmbeddingMatrix,
    /// Similarities below `-NEGATIVE_TOLERANCE` that were clamped to zero.
    pub clamped: usize,
}

/// Mono-Map initialization: `sorted(sqrt(X Xᵀ))`.
///
/// The square root is element-wise. Each row of the result is sorted
/// ascending, so the representation of a token no longer depends on the
/// order of the other tokens, which makes maps of different languages
/// comparable column by column.
pub fn mono_map(x: &EmbeddingMatrix) -> MonoMap {
    let n = x.len();
    let mut sim = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let d = dot(x.row(i), x.row(j));
            sim[i * n + j] = d;
            sim[j * n + i] = d;
        }
    }
    let mut clamped = 0;
    for v in &mut sim {
        if *v < 0.0 {
            if *v < -NEGATIVE_TOLERANCE {
                clamped += 1;
            }
            *v = 0.0;
        }
        *v = v.sqrt();
    }
    for row in sim.chunks_exact_mut(n) {
        row.sort_by(f64::total_cmp);
    }
    MonoMap {
        matrix: EmbeddingMatrix {
            rows: n,
            dim: n,
            data: sim,
        },
        clamped,
    }
}

/// Average the vectors of tokens shared by several languages.
///
/// The row for a token is the mean of its vectors over every language that
/// has it. Contributions are summed in a canonical order so the result does
/// not depend on the order in which languages are listed.
pub fn average_shared<L>(
    per_language: &[(L, HashMap<char, Vec<f64>>)],
    vocab: &Vocabulary,
) -> Result<EmbeddingMatrix> {
    let mut dim = None;
    for (_, map) in per_language {
        for v in map.values() {
            match dim {
                None => dim = Some(v.len()),
                Some(d) if d != v.len() => {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        found: v.len(),
                    })
                }
                _ => {}
            }
        }
    }
    let dim = dim.ok_or(Error::EmptyEmbeddings)?;
    let mut rows = Vec::with_capacity(vocab.len());
    for &c in vocab.tokens() {
        let mut found: Vec<&[f64]> = per_language
            .iter()
            .filter_map(|(_, map)| map.get(&c).map(Vec::as_slice))
            .collect();
        if found.is_empty() {
            return Err(Error::TokenAbsent(escape_token(c)));
        }
        found.sort_by(|a, b| lexicographic(a, b));
        let mut mean = vec![0.0; dim];
        for v in &found {
            for (m, x) in mean.iter_mut().zip(v.iter()) {
                *m += x;
            }
        }
        let k = found.len() as f64;
        mean.iter_mut().for_each(|m| *m /= k);
        rows.push(mean);
    }
    EmbeddingMatrix::from_rows(&rows)
}

fn lexicographic(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
