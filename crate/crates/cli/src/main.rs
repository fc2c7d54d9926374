//! `vocab-tree`: build vocabulary trees for hierarchical softmax and
//! evaluate them.
//!
//! Exit status is 0 on success, 1 when an input cannot be read or is
//! invalid, and 2 when the command line itself is wrong.

mod config;

use std::collections::HashMap;
use std::fmt;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};
use vocab_tree::clustering::cluster_tree;
use vocab_tree::corpus::{language_shares, read_corpus};
use vocab_tree::embedding::{average_shared, mono_map, write_embeddings, TokenEmbeddings};
use vocab_tree::eval::{bli_p_at_1, CerStats, EmbeddingSpace, Lexicon};
use vocab_tree::hsoftmax::{
    derive_codes, gaussian_blobs, log_probs_vectorized, train_flat_softmax, train_toy, BlobConfig,
    NodeParams, SignBias, TrainConfig,
};
use vocab_tree::huffman::huffman_from_counts;
use vocab_tree::{
    build_huffman, build_vocabulary, downsampling_ratios, jsonfmt, DistanceMetric, EmbeddingMatrix,
    LanguageProportions, LinkageSpec, MetricKind, VocabTree, Vocabulary,
};

#[derive(Debug, Parser)]
#[command(name = "vocab-tree", version, about = "Vocabulary trees for hierarchical softmax")]
struct Cli {
    /// Read default option values from a `key = value` file; options given
    /// on the command line take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Count characters of a `lang<TAB>text` corpus into a frequency TSV.
    BuildVocab {
        /// Corpus with one `lang<TAB>text` utterance per line.
        #[arg(long, value_name = "FILE")]
        corpus: PathBuf,
        /// Frequency TSV (`token<TAB>count`); standard output if omitted.
        #[arg(short, long, value_name = "FILE")]
        output: Option<PathBuf>,
        /// Also write per-language downsampling ratios as JSON.
        #[arg(long, value_name = "FILE")]
        ratios: Option<PathBuf>,
        /// Smoothing exponent for the downsampling ratios.
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        /// Overall downsampling ratio.
        #[arg(long, default_value_t = 0.082)]
        lambda: f64,
    },
    /// Build a vocabulary tree by Huffman coding or embedding clustering.
    BuildTree {
        #[arg(long, value_enum)]
        method: TreeMethod,
        /// Frequency TSV; required for huffman, fixes token order for cluster.
        #[arg(long, value_name = "FILE")]
        freq: Option<PathBuf>,
        /// Clustering method as `family.linkage.metric`, for example
        /// `agglomerative.average.cityblock`.
        #[arg(long)]
        spec: Option<LinkageSpec>,
        /// Embedding file (`N m` header, then `token v1 .. vm`).
        #[arg(long, value_name = "FILE")]
        embeddings: Option<PathBuf>,
        /// Tree JSON; standard output if omitted.
        #[arg(short, long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Write the path code of every token (`token<TAB>bits`, 0 = left).
    Codes {
        #[arg(long, value_name = "FILE")]
        tree: PathBuf,
        #[arg(short, long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Write the padded Sign/Bias matrices of a tree as JSON.
    SignBias {
        #[arg(long, value_name = "FILE")]
        tree: PathBuf,
        /// Pad to this many columns instead of the tree's maximum depth.
        #[arg(long)]
        depth: Option<usize>,
        #[arg(short, long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Log-probabilities of every token for one hidden state.
    Probs {
        #[arg(long, value_name = "FILE")]
        tree: PathBuf,
        /// Node parameter file written by `train-toy`.
        #[arg(long, value_name = "FILE", conflicts_with = "zero_params")]
        params: Option<PathBuf>,
        /// Use all-zero node parameters.
        #[arg(long)]
        zero_params: bool,
        /// Hidden state as comma-separated numbers.
        #[arg(long, value_name = "V1,V2,..", allow_hyphen_values = true)]
        hidden_state: Option<String>,
        /// Hidden size for --zero-params when no hidden state is given.
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(short, long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Train an H-Softmax head on synthetic Gaussian blobs.
    TrainToy {
        #[arg(long, default_value_t = 64)]
        classes: usize,
        #[arg(long, default_value_t = 16)]
        dim: usize,
        #[arg(long, default_value_t = 5000)]
        samples: usize,
        /// Class sizes follow weights 1/(k+1)^zipf; 0 gives equal classes.
        #[arg(long, default_value_t = 0.0)]
        zipf: f64,
        /// Standard deviation of samples around their class centre.
        #[arg(long, default_value_t = 0.1)]
        spread: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        epochs: usize,
        #[arg(long, default_value_t = 0.1)]
        learning_rate: f64,
        #[arg(long, default_value_t = 0.01)]
        init_scale: f64,
        /// Huffman over class sizes, or clustering of the class centres.
        #[arg(long, value_enum, default_value_t = TreeMethod::Cluster)]
        tree_method: TreeMethod,
        #[arg(long, default_value = "agglomerative.ward.euclidean")]
        spec: LinkageSpec,
        /// Also train a flat softmax under the same schedule.
        #[arg(long)]
        baseline: bool,
        /// Write the trained node parameters here.
        #[arg(long, value_name = "FILE")]
        params_out: Option<PathBuf>,
        /// Write the tree used for training here.
        #[arg(long, value_name = "FILE")]
        tree_out: Option<PathBuf>,
        /// Metrics JSON; standard output if omitted.
        #[arg(short, long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Character error rate of line-aligned reference and hypothesis files.
    EvalCer {
        #[arg(long, value_name = "FILE")]
        reference: PathBuf,
        #[arg(long, value_name = "FILE")]
        hypothesis: PathBuf,
        #[arg(short, long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Bilingual lexicon induction precision at 1 with word vectors
    /// averaged from character embeddings.
    EvalBli {
        #[arg(long, value_name = "FILE")]
        source_embeddings: PathBuf,
        #[arg(long, value_name = "FILE")]
        target_embeddings: PathBuf,
        /// `source<TAB>target` word pairs.
        #[arg(long, value_name = "FILE")]
        lexicon: PathBuf,
        /// Rank against a target word list or the lexicon's target words.
        #[arg(long, value_enum, default_value_t = CandidatePool::Targets)]
        candidates: CandidatePool,
        /// One target word per line; required with `--candidates targets`.
        #[arg(long, value_name = "FILE")]
        target_words: Option<PathBuf>,
        #[arg(long, default_value = "cosine")]
        metric: MetricKind,
        #[arg(short, long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Mono-Map embeddings from one or more monolingual embedding files;
    /// tokens shared by several files are averaged.
    MonoMap {
        #[arg(long = "embeddings", value_name = "FILE", required = true)]
        embeddings: Vec<PathBuf>,
        #[arg(short, long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum TreeMethod {
    Huffman,
    Cluster,
}

impl TreeMethod {
    fn label(self) -> &'static str {
        match self {
            TreeMethod::Huffman => "huffman",
            TreeMethod::Cluster => "cluster",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum CandidatePool {
    Targets,
    Lexicon,
}

/// A command line that is well-formed for clap but inconsistent.
#[derive(Debug)]
struct Usage(String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(message: impl Into<String>) -> anyhow::Error {
    Usage(message.into()).into()
}

fn main() -> ExitCode {
    let args = match config::expand(std::env::args_os().collect()) {
        Ok(args) => args,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(u8::try_from(e.exit_code()).unwrap_or(2));
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if e.is::<Usage>() { 2 } else { 1 })
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::BuildVocab {
            corpus,
            output,
            ratios,
            alpha,
            lambda,
        } => build_vocab(&corpus, output.as_deref(), ratios.as_deref(), alpha, lambda),
        Command::BuildTree {
            method,
            freq,
            spec,
            embeddings,
            output,
        } => build_tree(method, freq.as_deref(), spec, embeddings.as_deref(), output.as_deref()),
        Command::Codes { tree, output } => {
            let (tree, labels, _) = read_tree(&tree)?;
            let mut out = Vec::new();
            derive_codes(&tree).write_tsv(&tree, &labels, &mut out)?;
            emit(output.as_deref(), &out)
        }
        Command::SignBias {
            tree,
            depth,
            output,
        } => {
            let (tree, labels, _) = read_tree(&tree)?;
            let codes = derive_codes(&tree);
            let depth = depth.unwrap_or(codes.max_depth());
            if depth < codes.max_depth() {
                return Err(usage(format!(
                    "--depth {depth} is below the tree's maximum depth {}",
                    codes.max_depth()
                )));
            }
            let sb = SignBias::padded(&codes, depth);
            emit(output.as_deref(), sb.to_json(&labels)?.as_bytes())
        }
        Command::Probs {
            tree,
            params,
            zero_params,
            hidden_state,
            dim,
            output,
        } => probs(&tree, params.as_deref(), zero_params, hidden_state.as_deref(), dim, output.as_deref()),
        Command::TrainToy {
            classes,
            dim,
            samples,
            zipf,
            spread,
            seed,
            epochs,
            learning_rate,
            init_scale,
            tree_method,
            spec,
            baseline,
            params_out,
            tree_out,
            output,
        } => {
            let toy = ToyRun {
                classes,
                dim,
                samples,
                zipf,
                spread,
                train: TrainConfig {
                    learning_rate,
                    epochs,
                    seed,
                    init_scale,
                    bias: true,
                },
                tree_method,
                spec,
                baseline,
            };
            train_toy_cmd(&toy, params_out.as_deref(), tree_out.as_deref(), output.as_deref())
        }
        Command::EvalCer {
            reference,
            hypothesis,
            output,
        } => eval_cer(&reference, &hypothesis, output.as_deref()),
        Command::EvalBli {
            source_embeddings,
            target_embeddings,
            lexicon,
            candidates,
            target_words,
            metric,
            output,
        } => {
            let bli = BliRun {
                source: &source_embeddings,
                target: &target_embeddings,
                lexicon: &lexicon,
                candidates,
                target_words: target_words.as_deref(),
                metric,
            };
            eval_bli(&bli, output.as_deref())
        }
        Command::MonoMap { embeddings, output } => mono_map_cmd(&embeddings, output.as_deref()),
    }
}

/// Write to `path`, or to standard output when no path is given.
fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(BufReader::new(file))
}

fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Parse a tree file; also returns the hash of its bytes.
fn read_tree(path: &Path) -> Result<(VocabTree, Vec<char>, String)> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let (tree, labels) =
        VocabTree::from_json(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok((tree, labels, sha256_hex(text.as_bytes())))
}

fn read_vocabulary(path: &Path) -> Result<Vocabulary> {
    Vocabulary::read_tsv(open(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn read_embeddings(path: &Path) -> Result<TokenEmbeddings> {
    TokenEmbeddings::read(open(path)?).with_context(|| format!("parsing {}", path.display()))
}

#[derive(Serialize)]
struct RatioReport {
    alpha: f64,
    lambda: f64,
    languages: Vec<LanguageRatio>,
}

#[derive(Serialize)]
struct LanguageRatio {
    language: String,
    share: f64,
    ratio: f64,
}

fn build_vocab(
    corpus: &Path,
    output: Option<&Path>,
    ratios: Option<&Path>,
    alpha: f64,
    lambda: f64,
) -> Result<()> {
    let lines = read_corpus(open(corpus)?).with_context(|| format!("parsing {}", corpus.display()))?;
    let vocab = build_vocabulary(lines.iter().map(|(l, t)| (l.as_str(), t.as_str())))?;
    if let Some(path) = ratios {
        let shares = language_shares(&lines);
        let props = LanguageProportions::new(shares.iter().map(|(_, p)| *p).collect(), alpha, lambda)
            .map_err(|e| usage(e.to_string()))?;
        let report = RatioReport {
            alpha,
            lambda,
            languages: shares
                .into_iter()
                .zip(downsampling_ratios(&props))
                .map(|((language, share), ratio)| LanguageRatio {
                    language,
                    share,
                    ratio,
                })
                .collect(),
        };
        emit(Some(path), jsonfmt::to_string(&report)?.as_bytes())?;
    }
    let mut out = Vec::new();
    vocab.write_tsv(&mut out)?;
    emit(output, &out)
}

fn build_tree(
    method: TreeMethod,
    freq: Option<&Path>,
    spec: Option<LinkageSpec>,
    embeddings: Option<&Path>,
    output: Option<&Path>,
) -> Result<()> {
    let (tree, labels) = match method {
        TreeMethod::Huffman => {
            let freq = freq.ok_or_else(|| usage("--method huffman requires --freq"))?;
            if spec.is_some() || embeddings.is_some() {
                return Err(usage("--spec and --embeddings apply to --method cluster"));
            }
            let vocab = read_vocabulary(freq)?;
            (build_huffman(&vocab)?, vocab.tokens().to_vec())
        }
        TreeMethod::Cluster => {
            let spec = spec.ok_or_else(|| usage("--method cluster requires --spec"))?;
            let path = embeddings.ok_or_else(|| usage("--method cluster requires --embeddings"))?;
            let file = read_embeddings(path)?;
            let (matrix, labels) = match freq {
                Some(freq) => {
                    let vocab = read_vocabulary(freq)?;
                    (file.for_vocabulary(&vocab)?, vocab.tokens().to_vec())
                }
                None => (file.matrix.clone(), file.char_tokens()?),
            };
            (cluster_tree(&matrix, spec)?, labels)
        }
    };
    emit(output, tree.to_json(&labels)?.as_bytes())
}

fn parse_vector(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|f| {
            let f = f.trim();
            let v: f64 = f.parse().map_err(|_| usage(format!("bad number {f:?} in --hidden-state")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(usage(format!("non-finite value {f:?} in --hidden-state")))
            }
        })
        .collect()
}

#[derive(Serialize)]
struct ProbsReport {
    tokens: Vec<String>,
    log_probs: Vec<f64>,
    probs: Vec<f64>,
}

fn probs(
    tree_path: &Path,
    params_path: Option<&Path>,
    zero_params: bool,
    hidden_state: Option<&str>,
    dim: usize,
    output: Option<&Path>,
) -> Result<()> {
    let (tree, labels, hash) = read_tree(tree_path)?;
    let h = hidden_state.map(parse_vector).transpose()?;
    let (params, h) = if zero_params {
        let h = h.unwrap_or_else(|| vec![0.0; dim]);
        (NodeParams::zeros(tree.num_internal(), h.len()), h)
    } else {
        let path = params_path.ok_or_else(|| usage("give --params FILE or --zero-params"))?;
        let h = h.ok_or_else(|| usage("--params requires --hidden-state"))?;
        let (header, params) = NodeParams::read_binary(open(path)?)
            .with_context(|| format!("parsing {}", path.display()))?;
        if header.tree_hash != hash {
            anyhow::bail!(
                "{} was trained on a different tree (hash {}, tree file hash {hash})",
                path.display(),
                header.tree_hash
            );
        }
        (params, h)
    };
    let log_probs = log_probs_vectorized(&h, &params, &SignBias::from_codes(&derive_codes(&tree)))?;
    let report = ProbsReport {
        tokens: labels.iter().map(|c| c.to_string()).collect(),
        probs: log_probs.iter().map(|l| l.exp()).collect(),
        log_probs,
    };
    emit(output, jsonfmt::to_string(&report)?.as_bytes())
}

struct ToyRun {
    classes: usize,
    dim: usize,
    samples: usize,
    zipf: f64,
    spread: f64,
    train: TrainConfig,
    tree_method: TreeMethod,
    spec: LinkageSpec,
    baseline: bool,
}

#[derive(Serialize)]
struct ToyMetrics {
    seed: u64,
    classes: usize,
    dim: usize,
    samples: usize,
    zipf: f64,
    epochs: usize,
    learning_rate: f64,
    tree_method: &'static str,
    spec: Option<String>,
    tree_hash: String,
    max_depth: usize,
    accuracy: f64,
    epoch_losses: Vec<f64>,
    flat_accuracy: Option<f64>,
}

/// Tree labels for synthetic classes: consecutive non-whitespace
/// characters starting at U+0100.
fn class_labels(classes: usize) -> Result<Vec<char>> {
    (0..classes)
        .map(|k| {
            u32::try_from(k)
                .ok()
                .and_then(|k| char::from_u32(0x100 + k))
                .ok_or_else(|| usage(format!("too many classes: {classes}")))
        })
        .collect()
}

fn train_toy_cmd(
    toy: &ToyRun,
    params_out: Option<&Path>,
    tree_out: Option<&Path>,
    output: Option<&Path>,
) -> Result<()> {
    if toy.classes < 2 || toy.dim == 0 || toy.samples < toy.classes {
        return Err(usage("need --classes >= 2, --dim >= 1 and --samples >= --classes"));
    }
    if !(toy.zipf >= 0.0 && toy.zipf.is_finite()) || !(toy.spread >= 0.0 && toy.spread.is_finite()) {
        return Err(usage("--zipf and --spread must be finite and nonnegative"));
    }
    let weights: Vec<f64> = (0..toy.classes).map(|k| (k as f64 + 1.0).powf(-toy.zipf)).collect();
    let blobs = BlobConfig {
        spread: toy.spread,
        ..BlobConfig::weighted(&weights, toy.samples, toy.dim, toy.train.seed)
    };
    let (data, centres) = gaussian_blobs(&blobs);
    let tree = match toy.tree_method {
        TreeMethod::Huffman => {
            let counts: Vec<u64> = blobs.class_sizes.iter().map(|&n| n as u64).collect();
            huffman_from_counts(&counts)?
        }
        TreeMethod::Cluster => cluster_tree(&EmbeddingMatrix::from_rows(&centres)?, toy.spec)?,
    };
    let tree_json = tree.to_json(&class_labels(toy.classes)?)?;
    let tree_hash = sha256_hex(tree_json.as_bytes());
    let outcome = train_toy(&data, &tree, &toy.train)?;
    let flat_accuracy = if toy.baseline {
        Some(train_flat_softmax(&data, toy.classes, &toy.train)?.accuracy)
    } else {
        None
    };
    if let Some(path) = tree_out {
        emit(Some(path), tree_json.as_bytes())?;
    }
    if let Some(path) = params_out {
        let mut bytes = Vec::new();
        outcome.params.write_binary(&mut bytes, &tree_hash)?;
        emit(Some(path), &bytes)?;
    }
    let metrics = ToyMetrics {
        seed: toy.train.seed,
        classes: toy.classes,
        dim: toy.dim,
        samples: toy.samples,
        zipf: toy.zipf,
        epochs: toy.train.epochs,
        learning_rate: toy.train.learning_rate,
        tree_method: toy.tree_method.label(),
        spec: (toy.tree_method == TreeMethod::Cluster).then(|| toy.spec.to_string()),
        tree_hash,
        max_depth: derive_codes(&tree).max_depth(),
        accuracy: outcome.accuracy,
        epoch_losses: outcome.epoch_losses,
        flat_accuracy,
    };
    emit(output, jsonfmt::to_string(&metrics)?.as_bytes())
}

#[derive(Serialize)]
struct CerReport {
    cer: f64,
    edits: usize,
    reference_chars: usize,
    lines: usize,
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    open(path)?
        .lines()
        .map(|l| {
            let l = l.with_context(|| format!("reading {}", path.display()))?;
            Ok(l.strip_suffix('\r').map(str::to_string).unwrap_or(l))
        })
        .collect()
}

fn eval_cer(reference: &Path, hypothesis: &Path, output: Option<&Path>) -> Result<()> {
    let refs = read_lines(reference)?;
    let hyps = read_lines(hypothesis)?;
    if refs.len() != hyps.len() {
        anyhow::bail!(
            "{} has {} lines but {} has {}",
            reference.display(),
            refs.len(),
            hypothesis.display(),
            hyps.len()
        );
    }
    let mut stats = CerStats::default();
    for (i, (r, h)) in refs.iter().zip(&hyps).enumerate() {
        stats
            .add(r, h)
            .with_context(|| format!("line {} of {}", i + 1, reference.display()))?;
    }
    let report = CerReport {
        cer: stats.rate(),
        edits: stats.edits,
        reference_chars: stats.reference_chars,
        lines: stats.lines,
    };
    emit(output, jsonfmt::to_string(&report)?.as_bytes())
}

struct BliRun<'a> {
    source: &'a Path,
    target: &'a Path,
    lexicon: &'a Path,
    candidates: CandidatePool,
    target_words: Option<&'a Path>,
    metric: MetricKind,
}

/// The vocabulary of an embedding file: its character tokens in file order.
fn file_vocabulary(file: &TokenEmbeddings) -> Result<Vocabulary> {
    Ok(Vocabulary::from_counts(file.char_tokens()?.into_iter().map(|c| (c, 1)))?)
}

fn eval_bli(run: &BliRun<'_>, output: Option<&Path>) -> Result<()> {
    let source = read_embeddings(run.source)?;
    let target = read_embeddings(run.target)?;
    let source_vocab = file_vocabulary(&source)?;
    let target_vocab = file_vocabulary(&target)?;
    let lexicon = Lexicon::read_tsv(open(run.lexicon)?)
        .with_context(|| format!("parsing {}", run.lexicon.display()))?;
    let candidates = match run.candidates {
        CandidatePool::Lexicon => {
            if run.target_words.is_some() {
                return Err(usage("--target-words applies to --candidates targets"));
            }
            lexicon.targets()
        }
        CandidatePool::Targets => {
            let path = run
                .target_words
                .ok_or_else(|| usage("--candidates targets requires --target-words"))?;
            read_lines(path)?
                .into_iter()
                .filter(|w| !w.is_empty())
                .collect()
        }
    };
    let metric = DistanceMetric::for_embeddings(run.metric, &target.matrix);
    let report = bli_p_at_1(
        EmbeddingSpace {
            embeddings: &source.matrix,
            vocab: &source_vocab,
        },
        EmbeddingSpace {
            embeddings: &target.matrix,
            vocab: &target_vocab,
        },
        &candidates,
        &lexicon,
        &metric,
    )?;
    emit(output, jsonfmt::to_string(&report)?.as_bytes())
}

fn mono_map_cmd(paths: &[PathBuf], output: Option<&Path>) -> Result<()> {
    let mut maps = Vec::with_capacity(paths.len());
    for path in paths {
        let file = read_embeddings(path)?;
        let tokens = file.char_tokens()?;
        let mapped = mono_map(&file.matrix);
        if mapped.clamped > 0 {
            eprintln!(
                "warning: {}: {} negative similarities clamped to zero",
                path.display(),
                mapped.clamped
            );
        }
        maps.push((path.display().to_string(), tokens, mapped.matrix));
    }
    let width = maps.iter().map(|(_, _, m)| m.dim()).max().unwrap_or(0);
    let mut union: Vec<char> = Vec::new();
    let mut languages: HashMap<char, u64> = HashMap::new();
    let mut per_language = Vec::with_capacity(maps.len());
    for (name, tokens, matrix) in &maps {
        let padded = matrix.left_padded(width);
        let mut rows = HashMap::with_capacity(tokens.len());
        for (&c, row) in tokens.iter().zip(padded.rows()) {
            if rows.insert(c, row.to_vec()).is_some() {
                anyhow::bail!("{name}: token {c:?} listed twice");
            }
            let n = languages.entry(c).or_insert(0);
            if *n == 0 {
                union.push(c);
            }
            *n += 1;
        }
        per_language.push((name.clone(), rows));
    }
    let vocab = Vocabulary::from_counts(union.iter().map(|&c| (c, languages[&c])))?;
    let averaged = average_shared(&per_language, &vocab)?;
    let mut out = Vec::new();
    write_embeddings(&mut out, vocab.tokens(), &averaged)?;
    emit(output, &out)
}
