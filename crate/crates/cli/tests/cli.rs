use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;
use vocab_tree::{Node, VocabTree};
use vocab_tree_testkit::{naive_agglomerative, Metric, NaiveLinkage};

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new() -> Self {
        Workspace {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn file(&self, name: &str, text: &str) -> String {
        let p = self.path(name);
        fs::write(&p, text).unwrap();
        p.to_str().unwrap().to_string()
    }

    fn out(&self, name: &str) -> String {
        self.path(name).to_str().unwrap().to_string()
    }
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vocab-tree")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().unwrap()
}

fn read_tree(path: &Path) -> (VocabTree, Vec<char>) {
    VocabTree::from_json(&fs::read_to_string(path).unwrap()).unwrap()
}

const THREE_LEAF: &str = "{\"root\":4,\"nodes\":[{\"id\":0,\"token\":\"a\"},{\"id\":1,\"token\":\"b\"},{\"id\":2,\"token\":\"c\"},{\"id\":3,\"left\":0,\"right\":1},{\"id\":4,\"left\":3,\"right\":2}]}\n";

#[test]
fn huffman_tree_from_three_token_tsv() {
    let ws = Workspace::new();
    let freq = ws.file("f.tsv", "a\t5\nb\t2\nc\t1\n");
    let out = ws.out("t.json");
    ok(&["build-tree", "--method", "huffman", "--freq", &freq, "-o", &out]);
    let (tree, labels) = read_tree(Path::new(&out));
    assert_eq!(tree.num_tokens(), 3);
    let codes = ok(&["codes", "--tree", &out]);
    assert_eq!(codes, "c\t00\nb\t01\na\t1\n");
    assert_eq!(labels.len(), 3);
}

#[test]
fn cluster_tree_matches_naive_oracle() {
    let ws = Workspace::new();
    let points: Vec<Vec<f64>> = vec![
        vec![0.0, 1.0, 2.0],
        vec![4.0, -1.0, 0.5],
        vec![0.2, 1.1, 2.2],
        vec![3.0, 3.0, -3.0],
        vec![4.1, -0.8, 0.4],
        vec![-2.0, 0.0, 1.0],
    ];
    let tokens = ['p', 'q', 'r', 's', 't', 'u'];
    let mut text = format!("{} 3\n", points.len());
    for (t, p) in tokens.iter().zip(&points) {
        text.push_str(&format!("{t} {} {} {}\n", p[0], p[1], p[2]));
    }
    let emb = ws.file("e.txt", &text);
    let out = ws.out("t.json");
    ok(&[
        "build-tree", "--method", "cluster", "--spec", "agglomerative.average.cityblock",
        "--embeddings", &emb, "-o", &out,
    ]);
    let (tree, labels) = read_tree(Path::new(&out));
    assert_eq!(labels, tokens);
    let split = |id: usize| {
        let Node::Internal { left, right } = tree.node(id) else {
            unreachable!()
        };
        let mut l = tree.tokens_under(left);
        let mut r = tree.tokens_under(right);
        l.sort_unstable();
        r.sort_unstable();
        (l, r)
    };
    let got: BTreeSet<_> = tree.internal_bfs().into_iter().map(split).collect();
    let want: BTreeSet<_> = naive_agglomerative(&points, NaiveLinkage::Average, &Metric::Cityblock)
        .into_iter()
        .map(|(l, r, _)| (l, r))
        .collect();
    assert_eq!(got, want);
}

#[test]
fn tree_files_round_trip() {
    let ws = Workspace::new();
    let freq = ws.file("f.tsv", "a\t5\nU+0020\t3\nb\t2\nc\t1\né\t1\n");
    let out = ws.out("t.json");
    ok(&["build-tree", "--method", "huffman", "--freq", &freq, "-o", &out]);
    let text = fs::read_to_string(&out).unwrap();
    let (tree, labels) = VocabTree::from_json(&text).unwrap();
    assert!(labels.contains(&' '));
    assert_eq!(tree.to_json(&labels).unwrap(), text);
}

#[test]
fn unknown_spec_is_a_usage_error_listing_valid_specs() {
    let ws = Workspace::new();
    let emb = ws.file("e.txt", "2 1\na 0\nb 1\n");
    let out = run(&["build-tree", "--method", "cluster", "--spec", "agglomerative.ward.cosine", "--embeddings", &emb]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("agglomerative.ward.euclidean"), "{err}");
    assert!(err.contains("divisive.2-medoids.s-euclidean"), "{err}");
}

#[test]
fn exit_codes_separate_usage_and_data_errors() {
    let ws = Workspace::new();
    let emb = ws.file("e.txt", "2 1\na 0\nb 1\n");
    let bad_freq = ws.file("bad.tsv", "a\tmany\n");
    assert_eq!(code(&["build-tree", "--method", "huffman"]), 2);
    assert_eq!(code(&["build-tree", "--method", "cluster", "--embeddings", &emb]), 2);
    assert_eq!(code(&["no-such-command"]), 2);
    assert_eq!(code(&["codes", "--tree", &ws.out("missing.json")]), 1);
    assert_eq!(code(&["build-tree", "--method", "huffman", "--freq", &bad_freq]), 1);
    assert_eq!(code(&["--help"]), 0);
}

#[test]
fn three_leaf_codes_and_sign_bias() {
    let ws = Workspace::new();
    let tree = ws.file("three.json", THREE_LEAF);
    assert_eq!(ok(&["codes", "--tree", &tree]), "a\t00\nb\t01\nc\t1\n");
    let sb: serde_json::Value = serde_json::from_str(&ok(&["sign-bias", "--tree", &tree])).unwrap();
    assert_eq!(sb["sign"], serde_json::json!([[1, 1], [1, -1], [-1, 0]]));
    assert_eq!(sb["bias"], serde_json::json!([[0, 0], [0, 1], [1, 1]]));
    assert_eq!(code(&["sign-bias", "--tree", &tree, "--depth", "1"]), 2);
}

#[test]
fn zero_params_give_two_to_the_minus_depth() {
    let ws = Workspace::new();
    let tree = ws.file("three.json", THREE_LEAF);
    let report: serde_json::Value =
        serde_json::from_str(&ok(&["probs", "--tree", &tree, "--zero-params", "--dim", "4"])).unwrap();
    let probs: Vec<f64> = report["probs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert_eq!(probs, vec![0.25, 0.25, 0.5]);
}

#[test]
fn trained_parameters_are_tied_to_their_tree() {
    let ws = Workspace::new();
    let (params, tree) = (ws.out("p.bin"), ws.out("t.json"));
    let args = [
        "train-toy", "--classes", "6", "--dim", "3", "--samples", "120", "--epochs", "3",
        "--params-out", &params, "--tree-out", &tree,
    ];
    let first = ok(&args);
    assert_eq!(ok(&args), first);
    let metrics: serde_json::Value = serde_json::from_str(&first).unwrap();
    assert_eq!(metrics["epoch_losses"].as_array().unwrap().len(), 3);

    let report: serde_json::Value = serde_json::from_str(&ok(&[
        "probs", "--tree", &tree, "--params", &params, "--hidden-state", "0.1,-0.2,0.3,1",
    ]))
    .unwrap();
    let total: f64 = report["probs"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-12);

    let other = ws.file("three.json", THREE_LEAF);
    assert_eq!(code(&["probs", "--tree", &other, "--params", &params, "--hidden-state", "1,2,3,1"]), 1);
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let ws = Workspace::new();
    let config = ws.file("run.conf", "# toy run\nclasses = 4\ndim = 2\nsamples = 40\nepochs = 2\nseed = 7\nbaseline = true\n");
    let from_config: serde_json::Value = serde_json::from_str(&ok(&["train-toy", "--config", &config])).unwrap();
    assert_eq!(from_config["seed"], 7);
    assert_eq!(from_config["classes"], 4);
    assert!(from_config["flat_accuracy"].is_number());
    let overridden: serde_json::Value =
        serde_json::from_str(&ok(&["train-toy", "--config", &config, "--seed", "3"])).unwrap();
    assert_eq!(overridden["seed"], 3);
    let bad = ws.file("bad.conf", "no equals sign\n");
    assert_eq!(code(&["train-toy", "--config", &bad]), 2);
}

#[test]
fn build_vocab_counts_and_ratios() {
    let ws = Workspace::new();
    let corpus = ws.file("c.tsv", "en\tab a\nen\tb\nde\tä\nfr\ta\n");
    let ratios = ws.out("r.json");
    let vocab = ok(&["build-vocab", "--corpus", &corpus, "--ratios", &ratios]);
    assert_eq!(vocab, "a\t3\nb\t2\nU+0020\t1\nä\t1\n");
    let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(&ratios).unwrap()).unwrap();
    let mass: f64 = r["languages"]
        .as_array()
        .unwrap()
        .iter()
        .map(|l| l["share"].as_f64().unwrap() * l["ratio"].as_f64().unwrap())
        .sum();
    assert!((mass - 0.082).abs() < 1e-12);
    assert_eq!(code(&["build-vocab", "--corpus", &corpus, "--ratios", &ratios, "--alpha", "0"]), 2);
}

#[test]
fn cer_report() {
    let ws = Workspace::new();
    let r = ws.file("r.txt", "abcd\nef\n");
    let h = ws.file("h.txt", "abxd\n\n");
    let report: serde_json::Value =
        serde_json::from_str(&ok(&["eval-cer", "--reference", &r, "--hypothesis", &h])).unwrap();
    assert_eq!(report["cer"], 0.5);
    assert_eq!(report["edits"], 3);
    let short = ws.file("s.txt", "abcd\n");
    assert_eq!(code(&["eval-cer", "--reference", &r, "--hypothesis", &short]), 1);
}

#[test]
fn bli_report_for_both_candidate_pools() {
    let ws = Workspace::new();
    let emb = ws.file("e.txt", "3 2\na 1 0\nb 0 1\nc -1 0.2\n");
    let lexicon = ws.file("lex.tsv", "ab\tab\nc\tc\nzz\tc\n");
    let words = ws.file("w.txt", "ab\nc\nba\nca\n");
    let targets: serde_json::Value = serde_json::from_str(&ok(&[
        "eval-bli", "--source-embeddings", &emb, "--target-embeddings", &emb, "--lexicon", &lexicon,
        "--target-words", &words,
    ]))
    .unwrap();
    // "ab" and "ba" share an embedding; the earlier candidate wins.
    assert_eq!(targets, serde_json::json!({"p_at_1": 1.0, "evaluated": 2, "skipped": 1}));
    let lexicon_pool: serde_json::Value = serde_json::from_str(&ok(&[
        "eval-bli", "--source-embeddings", &emb, "--target-embeddings", &emb, "--lexicon", &lexicon,
        "--candidates", "lexicon", "--metric", "euclidean",
    ]))
    .unwrap();
    assert_eq!(lexicon_pool["p_at_1"], 1.0);
    assert_eq!(
        code(&["eval-bli", "--source-embeddings", &emb, "--target-embeddings", &emb, "--lexicon", &lexicon]),
        2
    );
}

#[test]
fn mono_map_of_identity_and_shared_tokens() {
    let ws = Workspace::new();
    let a = ws.file("a.txt", "2 2\nx 1 0\ny 0 1\n");
    assert_eq!(ok(&["mono-map", "--embeddings", &a]), "2 2\nx 0 1\ny 0 1\n");
    let b = ws.file("b.txt", "1 3\ny 2 0 0\n");
    // b maps y to [2]; padded to width 2 it is [0, 2], averaged with [0, 1].
    assert_eq!(
        ok(&["mono-map", "--embeddings", &a, "--embeddings", &b]),
        "2 2\nx 0 1\ny 0 1.5\n"
    );
}
