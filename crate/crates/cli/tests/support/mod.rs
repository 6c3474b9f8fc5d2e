//! Running the binary and comparing against golden transcripts.

#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Command;

pub fn tests_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests")
}

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn run(args: &[&str]) -> Run {
    let out =
        Command::new(env!("CARGO_BIN_EXE_edcone")).args(args).current_dir(tests_dir()).output().expect("binary runs");
    Run {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

pub fn transcript(r: &Run) -> String {
    format!("{}--- stderr ---\n{}--- exit {} ---\n", r.stdout, r.stderr, r.code)
}

/// Runs `args` twice and compares with `tests/golden/<name>.txt`.
/// `UPDATE_GOLDEN=1` rewrites the file instead.
pub fn check_golden(name: &str, args: &[&str], expected_code: i32) -> Result<(), String> {
    let first = run(args);
    if first.code != expected_code {
        return Err(format!("{name}: exit {} (wanted {expected_code}): {}", first.code, first.stderr));
    }
    let got = transcript(&first);
    if got != transcript(&run(args)) {
        return Err(format!("{name}: output differs between runs"));
    }
    let path = tests_dir().join("golden").join(format!("{name}.txt"));
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, &got).map_err(|e| e.to_string())?;
        return Ok(());
    }
    let want = std::fs::read_to_string(&path).map_err(|_| format!("missing golden file {}", path.display()))?;
    if got != want {
        return Err(format!("{name}: differs from {}\n--- got ---\n{got}", path.display()));
    }
    Ok(())
}

const THREE: [&str; 6] = [
    "--embeddings",
    "fixtures/three_level/emb.jsonl",
    "--labels",
    "fixtures/three_level/labels.tsv",
    "--level-order",
    "fixtures/three_level/levels.txt",
];

const ONE_PAIR: [&str; 6] = [
    "--embeddings",
    "fixtures/one_pair/emb.jsonl",
    "--labels",
    "fixtures/one_pair/labels.tsv",
    "--level-order",
    "fixtures/one_pair/levels.txt",
];

const DEGENERATE: [&str; 6] = [
    "--embeddings",
    "fixtures/degenerate/emb.jsonl",
    "--labels",
    "fixtures/degenerate/labels.tsv",
    "--level-order",
    "fixtures/degenerate/levels.txt",
];

fn with(cmd: &'static str, base: &[&'static str], extra: &[&'static str]) -> Vec<&'static str> {
    let mut v = vec![cmd];
    v.extend_from_slice(base);
    v.extend_from_slice(extra);
    v
}

pub struct GoldenCase {
    pub name: &'static str,
    pub args: Vec<&'static str>,
    pub code: i32,
}

/// Every golden case whose inputs live under `tests/fixtures`.
pub fn golden_cases() -> Vec<GoldenCase> {
    let case = |name, args, code| GoldenCase { name, args, code };
    vec![
        case("fit_one_pair", with("fit", &ONE_PAIR, &["--format", "table"]), 0),
        case("fit_adjacent", with("fit", &THREE, &["--mode", "adjacent", "--precision", "4", "--format", "tsv"]), 0),
        case("fit_degenerate", with("fit", &DEGENERATE, &[]), 5),
        case("score_three_level", with("score", &THREE, &["--format", "tsv"]), 0),
        case("score_pairs_table", with("score", &THREE, &["--pairs", "A1:B1,A2:B1", "--format", "table"]), 0),
        case(
            "score_word2vec",
            vec![
                "score",
                "--embeddings",
                "fixtures/three_level/emb.w2v",
                "--emb-format",
                "word2vec",
                "--labels",
                "fixtures/three_level/labels.tsv",
                "--level-order",
                "fixtures/three_level/levels.txt",
                "--model-name",
                "skewed",
                "--format",
                "tsv",
            ],
            0,
        ),
        case("score_degenerate", with("score", &DEGENERATE, &["--format", "tsv"]), 0),
        case(
            "rank_table",
            vec![
                "rank",
                "--model",
                "toy=fixtures/three_level/emb.jsonl",
                "--model",
                "flat=fixtures/three_level/emb_flat.jsonl",
                "--labels",
                "fixtures/three_level/labels.tsv",
                "--level-order",
                "fixtures/three_level/levels.txt",
                "--precision",
                "4",
                "--format",
                "table",
            ],
            0,
        ),
        case(
            "item_consistency",
            with(
                "item-consistency",
                &THREE,
                &[
                    "--anchor-level",
                    "B1",
                    "--correlate-with",
                    "fixtures/three_level/grades.tsv",
                    "--n-perm",
                    "999",
                    "--format",
                    "tsv",
                ],
            ),
            0,
        ),
        case(
            "correlate",
            vec![
                "correlate",
                "fixtures/three_level/grades.tsv",
                "fixtures/three_level/freq.tsv",
                "--n-perm",
                "999",
                "--seed",
                "7",
                "--format",
                "tsv",
            ],
            0,
        ),
        case("err_missing_file", vec!["score", "--embeddings", "nope.jsonl", "--labels", "x", "--level-order", "y"], 3),
        case(
            "err_bad_jsonl",
            vec![
                "score",
                "--embeddings",
                "fixtures/bad/emb.jsonl",
                "--labels",
                "fixtures/degenerate/labels.tsv",
                "--level-order",
                "fixtures/degenerate/levels.txt",
            ],
            4,
        ),
        case("err_reversed_pair", with("score", &THREE, &["--pairs", "B1:A1"]), 6),
    ]
}

/// Runs `synth` into `dir` and then `baseline` on the result; both outputs are golden.
pub fn check_synth_pipeline(dir: &Path) -> Result<(), String> {
    let out = dir.to_str().unwrap();
    let synth = ["synth", "--dim", "8", "--per-level", "30", "--seed", "5", "--out-dir", out, "--format", "tsv"];
    check_golden("synth_pipeline", &synth, 0)?;
    let p = |f: &str| dir.join(f).to_str().unwrap().to_string();
    let (emb, labels, levels) = (p("embeddings.jsonl"), p("labels.tsv"), p("levels.txt"));
    let args = [
        "baseline",
        "--embeddings",
        &emb,
        "--labels",
        &labels,
        "--level-order",
        &levels,
        "--train-pair",
        "L1:L4",
        "--test-pair",
        "L2:L3",
        "--format",
        "tsv",
    ];
    check_golden("baseline_synth", &args, 0)
}
