//! End-to-end tests of the `toxprep` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use toxprep::corpus::write_records;
use toxprep::synth::{generate, SynthConfig};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_toxprep"));
    c.env_remove("TOXPREP_LEXICON_DIR");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn toxprep")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn synth_csv(dir: &Path, n: usize) -> PathBuf {
    let path = dir.join("corpus.csv");
    let recs = generate(&SynthConfig {
        n_docs: n,
        ..SynthConfig::default()
    });
    write_records(std::fs::File::create(&path).unwrap(), &recs).unwrap();
    path
}

#[test]
fn stats_golden_on_tiny_fixture() {
    let o = run(&["stats", "--corpus", fixture("tiny.csv").to_str().unwrap(), "--top-k", "3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let got: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    // Tokens: the x3, cat x2, The, dog, sat.
    let want = serde_json::json!({
        "singleton_fraction": 0.6,
        "le5_fraction": 1.0,
        "vocab_size": 5,
        "total_tokens": 8,
        "top_k": [
            {"word": "the", "count": 3},
            {"word": "cat", "count": 2},
            {"word": "The", "count": 1}
        ]
    });
    assert_eq!(got, want);
}

#[test]
fn stats_writes_histogram() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "stats",
        "--corpus",
        fixture("tiny.csv").to_str().unwrap(),
        "--output-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let hist = std::fs::read_to_string(dir.path().join("histogram.csv")).unwrap();
    assert_eq!(hist, "occurrence_count,num_words\n1,3\n2,1\n3,1\n");
    assert!(dir.path().join("stats.json").is_file());
}

#[test]
fn transform_ppo11_golden() {
    let o = run(&["transform", "--pipeline", "PPO-11-LWTN-CoAcBkPrCm", "I CAN'T believe this s**t \x07"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "i cannot believe this shit\n");
}

#[test]
fn transform_empty_text_is_empty() {
    let o = run(&["transform", "--pipeline", "PPO-11-LWTN-CoAcBkPrCm", ""]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "\n");
}

#[test]
fn unknown_pipeline_is_usage_error() {
    let o = run(&["transform", "--pipeline", "PPO-99", "x"]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("PPO-99"));
    assert!(err.contains("PPO-11-LWTN-CoAcBkPrCm") && err.contains("Raw"));
}

#[test]
fn empty_corpus_is_data_error() {
    let o = run(&["stats", "--corpus", fixture("empty.csv").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bench_rejects_empty_model_list_and_missing_seed() {
    let c = fixture("tiny.csv");
    let c = c.to_str().unwrap();
    let o = run(&["bench", "--corpus", c, "--models", "", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["bench", "--corpus", c, "--models", "logit"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn bench_cache_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synth_csv(dir.path(), 400);
    let out = dir.path().join("out");
    let args = [
        "bench",
        "--corpus",
        corpus.to_str().unwrap(),
        "--pipelines",
        "Raw,PPO-3-LWTN",
        "--models",
        "logit,nbsvm",
        "-k",
        "3",
        "--seed",
        "11",
        "--output-dir",
        out.to_str().unwrap(),
    ];
    let first = run(&args);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    assert!(stdout(&first).contains("4 cells: 4 completed (0 cached), 0 failed"));
    let report = std::fs::read_to_string(out.join("report.csv")).unwrap();
    let comparison = std::fs::read_to_string(out.join("comparison.json")).unwrap();
    assert!(report.lines().nth(1).unwrap().starts_with("Raw,"));

    // Dropping one cached cell recomputes only that cell.
    let mut cells: Vec<PathBuf> = std::fs::read_dir(out.join("cells"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    cells.sort();
    assert_eq!(cells.len(), 4);
    std::fs::remove_file(&cells[0]).unwrap();
    let second = run(&args);
    assert!(second.status.success());
    assert!(stdout(&second).contains("4 cells: 4 completed (3 cached), 0 failed"), "{}", stdout(&second));
    assert_eq!(std::fs::read_to_string(out.join("report.csv")).unwrap(), report);

    // The report subcommand re-renders the same files from the cache.
    std::fs::remove_file(out.join("report.csv")).unwrap();
    std::fs::remove_file(out.join("comparison.json")).unwrap();
    let o = run(&["report", "--output-dir", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read_to_string(out.join("report.csv")).unwrap(), report);
    assert_eq!(std::fs::read_to_string(out.join("comparison.json")).unwrap(), comparison);
    assert_eq!(std::fs::read_dir(out.join("reports")).unwrap().count(), 4);
}

#[test]
fn report_without_cells_is_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["report", "--output-dir", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}
