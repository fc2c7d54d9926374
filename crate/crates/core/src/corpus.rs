//! Multilingual character vocabularies and per-language downsampling.
//!
//! Tokens are Unicode scalar values taken verbatim from the text: no case
//! folding and no normalization. Identical characters coming from different
//! languages collapse into one token whose count is the total over all
//! languages. Token ids follow first appearance.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::text::{escape_token, unescape_token};

/// A single character token and its id.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Token {
    pub id: usize,
    pub text: char,
}

/// Token inventory with merged occurrence counts.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<char>,
    counts: Vec<u64>,
    index: HashMap<char, usize>,
}

impl Vocabulary {
    /// Build a vocabulary from `(token, count)` pairs in id order.
    pub fn from_counts<I>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (char, u64)>,
    {
        let mut vocab = Vocabulary::default();
        for (c, count) in pairs {
            if count == 0 {
                return Err(Error::InvalidCount {
                    token: c.to_string(),
                    reason: "count must be positive".into(),
                });
            }
            if vocab.index.contains_key(&c) {
                return Err(Error::DuplicateToken(c.to_string()));
            }
            vocab.index.insert(c, vocab.tokens.len());
            vocab.tokens.push(c);
            vocab.counts.push(count);
        }
        Ok(vocab)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[char] {
        &self.tokens
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn token(&self, id: usize) -> Option<Token> {
        self.tokens.get(id).map(|&text| Token { id, text })
    }

    pub fn count(&self, id: usize) -> u64 {
        self.counts[id]
    }

    pub fn id_of(&self, c: char) -> Option<usize> {
        self.index.get(&c).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Token, u64)> + '_ {
        self.tokens
            .iter()
            .zip(&self.counts)
            .enumerate()
            .map(|(id, (&text, &count))| (Token { id, text }, count))
    }

    /// Relative frequencies, summing to one.
    pub fn probabilities(&self) -> Vec<f64> {
        let total: u64 = self.counts.iter().sum();
        self.counts
            .iter()
            .map(|&c| c as f64 / total as f64)
            .collect()
    }

    /// Write `token<TAB>count` lines in id order.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        for (token, count) in self.iter() {
            writeln!(out, "{}\t{}", escape_token(token.text), count)?;
        }
        Ok(())
    }

    /// Read the format produced by [`Vocabulary::write_tsv`]. Blank lines
    /// are skipped.
    pub fn read_tsv<R: BufRead>(input: R) -> Result<Self> {
        let mut pairs = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            let line = line.strip_suffix('\r').unwrap_or(&line);
            if line.is_empty() {
                continue;
            }
            let (tok, count) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(i + 1, "expected token<TAB>count"))?;
            let c = unescape_token(tok)
                .ok_or_else(|| Error::parse(i + 1, format!("not a single-character token: {tok:?}")))?;
            let count = count
                .trim()
                .parse::<u64>()
                .map_err(|e| Error::parse(i + 1, format!("bad count {count:?}: {e}")))?;
            pairs.push((c, count));
        }
        Vocabulary::from_counts(pairs)
    }
}

/// Merge the characters of every line into one vocabulary.
///
/// Language tags only identify where a line came from; identical characters
/// from different languages are the same token.
pub fn build_vocabulary<I, L, T>(lines: I) -> Result<Vocabulary>
where
    I: IntoIterator<Item = (L, T)>,
    T: AsRef<str>,
{
    let mut tokens = Vec::new();
    let mut counts: Vec<u64> = Vec::new();
    let mut index = HashMap::new();
    for (_, text) in lines {
        for c in text.as_ref().chars().filter(|&c| c != '\n') {
            let id = *index.entry(c).or_insert_with(|| {
                tokens.push(c);
                counts.push(0);
                tokens.len() - 1
            });
            counts[id] += 1;
        }
    }
    if tokens.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Ok(Vocabulary {
        tokens,
        counts,
        index,
    })
}

/// Parse `lang<TAB>text` lines. Empty lines are skipped; a trailing `\r` is
/// dropped.
pub fn read_corpus<R: BufRead>(input: R) -> Result<Vec<(String, String)>> {
    let mut lines = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.is_empty() {
            continue;
        }
        let (lang, text) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(i + 1, "expected lang<TAB>text"))?;
        lines.push((lang.to_string(), text.to_string()));
    }
    Ok(lines)
}

/// Per-language share of the corpus, measured in lines (utterances), in
/// order of first appearance.
pub fn language_shares<L: AsRef<str>, T>(lines: &[(L, T)]) -> Vec<(String, f64)> {
    let mut order: Vec<String> = Vec::new();
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for (lang, _) in lines {
        let lang = lang.as_ref();
        let n = counts.entry(lang).or_insert(0);
        if *n == 0 {
            order.push(lang.to_string());
        }
        *n += 1;
    }
    let total = lines.len() as f64;
    order
        .into_iter()
        .map(|lang| {
            let share = counts[lang.as_str()] as f64 / total;
            (lang, share)
        })
        .collect()
}

/// Language proportions `p_i` with smoothing exponent `alpha` and global
/// downsampling ratio `lambda`.
#[derive(Clone, Debug, PartialEq)]
pub struct LanguageProportions {
    proportions: Vec<f64>,
    alpha: f64,
    lambda: f64,
}

impl LanguageProportions {
    pub const SUM_TOLERANCE: f64 = 1e-9;

    pub fn new(proportions: Vec<f64>, alpha: f64, lambda: f64) -> Result<Self> {
        if proportions.is_empty() {
            return Err(Error::InvalidProportion("no languages".into()));
        }
        if let Some((i, p)) = proportions
            .iter()
            .enumerate()
            .find(|(_, &p)| !(p > 0.0 && p <= 1.0))
        {
            return Err(Error::InvalidProportion(format!(
                "p[{i}] = {p} is outside (0, 1]"
            )));
        }
        let sum: f64 = proportions.iter().sum();
        if (sum - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(Error::InvalidProportion(format!(
                "proportions sum to {sum}, not 1"
            )));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidProportion(format!("alpha = {alpha} must be > 0")));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidProportion(format!("lambda = {lambda} must be > 0")));
        }
        Ok(LanguageProportions {
            proportions,
            alpha,
            lambda,
        })
    }

    /// Normalize nonnegative sizes (hours, utterances, ...) into proportions.
    pub fn from_sizes(sizes: &[f64], alpha: f64, lambda: f64) -> Result<Self> {
        let total: f64 = sizes.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::InvalidProportion(format!("total size {total}")));
        }
        Self::new(sizes.iter().map(|s| s / total).collect(), alpha, lambda)
    }

    pub fn proportions(&self) -> &[f64] {
        &self.proportions
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

/// Per-language ratios `λ_i = p_i^(α-1) / Σ_j p_j^α · λ`.
///
/// Small languages are kept at a higher rate than large ones when `α < 1`,
/// while the overall kept fraction `Σ_i λ_i p_i` stays equal to `λ`.
pub fn downsampling_ratios(props: &LanguageProportions) -> Vec<f64> {
    let alpha = props.alpha;
    let norm: f64 = props.proportions.iter().map(|p| p.powf(alpha)).sum();
    props
        .proportions
        .iter()
        .map(|p| p.powf(alpha - 1.0) / norm * props.lambda)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts_of(v: &Vocabulary) -> Vec<(char, u64)> {
        v.iter().map(|(t, c)| (t.text, c)).collect()
    }

    #[test]
    fn merges_identical_tokens_across_languages() {
        let v = build_vocabulary([("L1", "ab"), ("L2", "ba")]).unwrap();
        assert_eq!(counts_of(&v), vec![('a', 2), ('b', 2)]);
    }

    #[test]
    fn single_token_corpus() {
        let v = build_vocabulary([("L1", "aa")]).unwrap();
        assert_eq!(counts_of(&v), vec![('a', 2)]);
    }

    #[test]
    fn latin_and_cyrillic_are_distinct() {
        let v = build_vocabulary([("fr", "ab"), ("ru", "аб")]).unwrap();
        assert_eq!(v.len(), 4);
    }

    #[test]
    fn no_normalization_is_applied() {
        let v = build_vocabulary([("fr", "Éé"), ("fr", "e\u{301}")]).unwrap();
        assert_eq!(v.tokens(), &['É', 'é', 'e', '\u{301}']);
    }

    #[test]
    fn spaces_are_tokens_newlines_are_not() {
        let v = build_vocabulary([("en", "a b\n")]).unwrap();
        assert_eq!(v.tokens(), &['a', ' ', 'b']);
    }

    #[test]
    fn empty_corpus_is_an_error() {
        let empty: [(&str, &str); 0] = [];
        assert!(matches!(build_vocabulary(empty), Err(Error::EmptyCorpus)));
        assert!(matches!(
            build_vocabulary([("en", ""), ("fr", "")]),
            Err(Error::EmptyCorpus)
        ));
    }

    #[test]
    fn tsv_round_trip_escapes_whitespace() {
        let v = build_vocabulary([("en", "a b\tc")]).unwrap();
        let mut buf = Vec::new();
        v.write_tsv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text, "a\t1\nU+0020\t1\nb\t1\nU+0009\t1\nc\t1\n");
        assert_eq!(Vocabulary::read_tsv(&buf[..]).unwrap(), v);
    }

    #[test]
    fn read_tsv_rejects_zero_counts() {
        assert!(matches!(
            Vocabulary::read_tsv(&b"a\t0\n"[..]),
            Err(Error::InvalidCount { .. })
        ));
        assert!(matches!(
            Vocabulary::read_tsv(&b"a\t1\na\t2\n"[..]),
            Err(Error::DuplicateToken(_))
        ));
        assert!(matches!(
            Vocabulary::read_tsv(&b"ab\t1\n"[..]),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn read_corpus_parses_tagged_lines() {
        let lines = read_corpus(&b"fr\tbonjour\r\n\nru\t\xd0\xb4\xd0\xb0\n"[..]).unwrap();
        assert_eq!(
            lines,
            vec![("fr".into(), "bonjour".into()), ("ru".into(), "да".into())]
        );
        assert!(read_corpus(&b"no tab here\n"[..]).is_err());
    }

    #[test]
    fn language_shares_follow_line_counts() {
        let lines = [("a", "x"), ("b", "y"), ("a", "z"), ("a", "w")];
        assert_eq!(
            language_shares(&lines),
            vec![("a".to_string(), 0.75), ("b".to_string(), 0.25)]
        );
    }

    #[test]
    fn uniform_proportions_give_lambda() {
        let p = LanguageProportions::new(vec![0.25; 4], 0.5, 0.082).unwrap();
        for r in downsampling_ratios(&p) {
            assert!((r - 0.082).abs() < 1e-15);
        }
    }

    #[test]
    fn alpha_one_gives_lambda() {
        let p = LanguageProportions::new(vec![0.5, 0.3, 0.15, 0.05], 1.0, 0.082).unwrap();
        for r in downsampling_ratios(&p) {
            assert!((r - 0.082).abs() < 1e-15);
        }
    }

    #[test]
    fn two_language_example() {
        // sqrt(0.8) + sqrt(0.2) = 3 / sqrt(5); the ratios are
        // 0.082 * sqrt(5) / (3 sqrt(p_i)).
        let p = LanguageProportions::new(vec![0.8, 0.2], 0.5, 0.082).unwrap();
        let r = downsampling_ratios(&p);
        let expect = |pi: f64| 0.082 * 5f64.sqrt() / (3.0 * pi.sqrt());
        assert!((r[0] - expect(0.8)).abs() < 1e-15);
        assert!((r[1] - expect(0.2)).abs() < 1e-15);
        assert!((r[0] - 0.068333).abs() < 1e-6);
        assert!((r[1] - 0.136667).abs() < 1e-6);
        let mass: f64 = r.iter().zip(p.proportions()).map(|(a, b)| a * b).sum();
        assert!((mass - 0.082).abs() < 1e-12);
    }

    #[test]
    fn invalid_proportions_are_rejected() {
        for bad in [vec![1.2, -0.2], vec![0.0, 1.0], vec![0.5, 0.4], vec![]] {
            assert!(matches!(
                LanguageProportions::new(bad, 0.5, 0.082),
                Err(Error::InvalidProportion(_))
            ));
        }
        assert!(LanguageProportions::new(vec![1.0], 0.0, 0.082).is_err());
        assert!(LanguageProportions::new(vec![1.0], 0.5, 0.0).is_err());
    }
}
