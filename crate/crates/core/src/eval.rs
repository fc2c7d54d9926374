//! Character error rate and bilingual lexicon induction.

use std::io::BufRead;

use serde::Serialize;

use crate::clustering::DistanceMetric;
use crate::corpus::Vocabulary;
use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};

/// Unit-cost edit distance (substitution, insertion, deletion) between two
/// character sequences.
pub fn levenshtein(a: &[char], b: &[char]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Edit distance over reference length, in characters.
pub fn cer(reference: &str, hypothesis: &str) -> Result<f64> {
    let mut stats = CerStats::default();
    stats.add(reference, hypothesis)?;
    Ok(stats.rate())
}

/// Corpus-level accumulator: total edits over total reference characters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CerStats {
    pub edits: usize,
    pub reference_chars: usize,
    pub lines: usize,
}

impl CerStats {
    pub fn add(&mut self, reference: &str, hypothesis: &str) -> Result<()> {
        let r: Vec<char> = reference.chars().collect();
        if r.is_empty() {
            return Err(Error::EmptyReference);
        }
        let h: Vec<char> = hypothesis.chars().collect();
        self.edits += levenshtein(&r, &h);
        self.reference_chars += r.len();
        self.lines += 1;
        Ok(())
    }

    pub fn rate(&self) -> f64 {
        self.edits as f64 / self.reference_chars as f64
    }
}

/// Mean of the character embeddings of `word`, counting repeats.
pub fn word_embed(word: &str, e: &EmbeddingMatrix, vocab: &Vocabulary) -> Result<Vec<f64>> {
    let mut sum = vec![0.0; e.dim()];
    let mut n = 0usize;
    for c in word.chars() {
        let id = vocab.id_of(c).ok_or(Error::OutOfVocabulary(c))?;
        for (s, x) in sum.iter_mut().zip(e.row(id)) {
            *s += x;
        }
        n += 1;
    }
    if n == 0 {
        return Err(Error::parse(0, "empty word"));
    }
    sum.iter_mut().for_each(|s| *s /= n as f64);
    Ok(sum)
}

/// Gold translation pairs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lexicon {
    pairs: Vec<(String, String)>,
}

impl Lexicon {
    pub fn new(pairs: Vec<(String, String)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::EmptyLexicon);
        }
        if let Some(i) = pairs.iter().position(|(s, t)| s.is_empty() || t.is_empty()) {
            return Err(Error::parse(i + 1, "empty word in lexicon"));
        }
        Ok(Lexicon { pairs })
    }

    /// `source<TAB>target` per line; blank lines are skipped.
    pub fn read_tsv<R: BufRead>(input: R) -> Result<Self> {
        let mut pairs = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            let line = line.strip_suffix('\r').unwrap_or(&line);
            if line.is_empty() {
                continue;
            }
            let (s, t) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(i + 1, "expected source<TAB>target"))?;
            if s.is_empty() || t.is_empty() {
                return Err(Error::parse(i + 1, "empty word in lexicon"));
            }
            pairs.push((s.to_string(), t.to_string()));
        }
        Lexicon::new(pairs)
    }

    pub fn pairs(&self) -> &[(String, String)] {
        &self.pairs
    }

    /// Distinct target words in first-appearance order.
    pub fn targets(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for (_, t) in &self.pairs {
            if !out.contains(t) {
                out.push(t.clone());
            }
        }
        out
    }
}

/// Character embeddings of one language.
#[derive(Clone, Copy, Debug)]
pub struct EmbeddingSpace<'a> {
    pub embeddings: &'a EmbeddingMatrix,
    pub vocab: &'a Vocabulary,
}

impl EmbeddingSpace<'_> {
    pub fn embed(&self, word: &str) -> Result<Vec<f64>> {
        word_embed(word, self.embeddings, self.vocab)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BliReport {
    pub p_at_1: f64,
    pub evaluated: usize,
    pub skipped: usize,
}

/// Precision at rank 1: the share of lexicon pairs whose nearest candidate
/// target word (ties to the earlier candidate) is the gold translation.
///
/// Candidates that cannot be embedded are dropped from the pool. Pairs
/// whose source or gold target cannot be embedded are skipped and counted.
pub fn bli_p_at_1(
    source: EmbeddingSpace<'_>,
    target: EmbeddingSpace<'_>,
    candidates: &[String],
    lexicon: &Lexicon,
    metric: &DistanceMetric,
) -> Result<BliReport> {
    let pool: Vec<(&str, Vec<f64>)> = candidates
        .iter()
        .filter_map(|w| target.embed(w).ok().map(|v| (w.as_str(), v)))
        .collect();
    if pool.is_empty() {
        return Err(Error::InvalidConfig("no embeddable target candidates".into()));
    }
    let mut hits = 0;
    let mut evaluated = 0;
    let mut skipped = 0;
    for (src, gold) in lexicon.pairs() {
        let Ok(query) = source.embed(src) else {
            skipped += 1;
            continue;
        };
        if target.embed(gold).is_err() {
            skipped += 1;
            continue;
        }
        evaluated += 1;
        let mut best = (f64::INFINITY, "");
        for (word, v) in &pool {
            let d = metric.distance(&query, v);
            if d < best.0 {
                best = (d, word);
            }
        }
        hits += usize::from(best.1 == gold);
    }
    if evaluated == 0 {
        return Err(Error::AllSkipped(skipped));
    }
    Ok(BliReport {
        p_at_1: hits as f64 / evaluated as f64,
        evaluated,
        skipped,
    })
}
