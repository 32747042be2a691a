use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dialogue_discourse::dataio::{read_mvec, write_mvec, EmbeddingTable};
use serde_json::Value;
use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dialogue-discourse"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().expect("exit code")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn corpus(dir: &TempDir, dialogues: usize) -> PathBuf {
    let path = dir.path().join("corpus.jsonl");
    let n = dialogues.to_string();
    assert_eq!(code(&["synth", "--seed", "5", "--dialogues", &n, "--topics", "3", "--out", s(&path)]), 0);
    path
}

fn lines(path: &Path) -> Vec<Value> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn synth_writes_one_line_per_dialogue() {
    let dir = TempDir::new().unwrap();
    let path = corpus(&dir, 50);
    let records = lines(&path);
    assert_eq!(records.len(), 50);
    assert!(records.iter().all(|r| r["candidates"].as_array().unwrap().len() == 10));
}

#[test]
fn usage_errors() {
    assert_eq!(code(&["synth", "--seed", "42", "--dialogues", "50"]), 64);
    assert_eq!(code(&[]), 64);
    assert_eq!(code(&["rank", "--data", "x.jsonl", "--out", "y"]), 64);
    assert_eq!(code(&["eval", "--data", "x", "--rankings", "r", "--out", "o", "--k", "one"]), 64);
    assert_eq!(code(&["--version"]), 0);
}

#[test]
fn rank_outputs_permutations() {
    let dir = TempDir::new().unwrap();
    let data = corpus(&dir, 12);
    let out = dir.path().join("ranks.jsonl");
    assert_eq!(code(&["rank", "--data", s(&data), "--hashed", "--seed", "9", "--out", s(&out)]), 0);
    let ranks = lines(&out);
    assert_eq!(ranks.len(), 12);
    for r in ranks {
        let mut idx: Vec<u64> = r["ranked_indices"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).collect();
        let scores: Vec<f64> = r["scores"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
        assert!(scores.windows(2).all(|w| w[0] >= w[1]));
        idx.sort_unstable();
        assert_eq!(idx, (0..10).collect::<Vec<u64>>());
    }
    assert!(dir.path().join("ranks.config.json").exists());
}

#[test]
fn input_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let data = corpus(&dir, 3);
    let out = dir.path().join("o");
    let missing = dir.path().join("missing.mvec");
    assert_eq!(code(&["rank", "--data", s(&data), "--emb", s(&missing), "--out", s(&out)]), 2);
    assert_eq!(code(&["rank", "--data", s(&missing), "--hashed", "--out", s(&out)]), 2);

    let bad = dir.path().join("bad.jsonl");
    fs::write(&bad, "{\"dialogue_id\": \"a\", \"context\": [], \"candidates\": [\"x\"], \"positive_index\": 0}\n").unwrap();
    let result = run(&["rank", "--data", s(&bad), "--hashed", "--out", s(&out)]);
    assert_eq!(result.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&result.stderr).contains(":1:"));
}

#[test]
fn missing_embedding_exits_3_and_names_the_key() {
    let dir = TempDir::new().unwrap();
    let data = corpus(&dir, 2);
    let emb = dir.path().join("partial.mvec");
    let mut table = EmbeddingTable::new(8);
    table.insert("synth-00000:0:0", &[1.0; 8]).unwrap();
    write_mvec(&table, &emb).unwrap();
    let result = run(&["rank", "--data", s(&data), "--emb", s(&emb), "--out", s(&dir.path().join("o"))]);
    assert_eq!(result.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&result.stderr).contains("synth-00000:0:1"));
}

#[test]
fn encode_dimensions_and_cache_reuse() {
    let dir = TempDir::new().unwrap();
    let data = corpus(&dir, 6);
    let mvec = dir.path().join("enc.mvec");
    assert_eq!(code(&["encode", "--data", s(&data), "--hashed", "--k", "12", "--out", s(&mvec)]), 0);
    assert_eq!(read_mvec(&mvec).unwrap().dim(), 12);

    let fresh = dir.path().join("fresh.jsonl");
    let cached = dir.path().join("cached.jsonl");
    assert_eq!(code(&["rank", "--data", s(&data), "--hashed", "--k", "12", "--out", s(&fresh)]), 0);
    assert_eq!(
        code(&["rank", "--data", s(&data), "--hashed", "--k", "12", "--cache", s(&mvec), "--out", s(&cached)]),
        0
    );
    assert_eq!(fs::read(&fresh).unwrap(), fs::read(&cached).unwrap());

    // a cache of the wrong width is rejected
    assert_eq!(
        code(&["rank", "--data", s(&data), "--hashed", "--cache", s(&mvec), "--out", s(&cached)]),
        2
    );
}

#[test]
fn encode_empty_dataset() {
    let dir = TempDir::new().unwrap();
    let data = dir.path().join("empty.jsonl");
    fs::write(&data, "").unwrap();
    let mvec = dir.path().join("e.mvec");
    assert_eq!(code(&["encode", "--data", s(&data), "--hashed", "--out", s(&mvec)]), 0);
    let table = read_mvec(&mvec).unwrap();
    assert_eq!((table.len(), table.dim()), (0, 17));
}

fn oracle_rankings(data: &Path, out: &Path) {
    let body: String = lines(data)
        .iter()
        .map(|r| {
            let pos = r["positive_index"].as_u64().unwrap() as usize;
            let n = r["candidates"].as_array().unwrap().len();
            let mut order = vec![pos];
            order.extend((0..n).filter(|&i| i != pos));
            let line = serde_json::json!({
                "dialogue_id": r["dialogue_id"],
                "ranked_indices": order,
                "scores": vec![0.0; n],
            });
            format!("{line}\n")
        })
        .collect();
    fs::write(out, body).unwrap();
}

#[test]
fn eval_with_oracle_rankings() {
    let dir = TempDir::new().unwrap();
    let data = corpus(&dir, 8);
    let ranks = dir.path().join("oracle.jsonl");
    oracle_rankings(&data, &ranks);
    let report = dir.path().join("report.json");
    assert_eq!(
        code(&["eval", "--data", s(&data), "--rankings", s(&ranks), "--k", "1,3,10", "--out", s(&report)]),
        0
    );
    let json: Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    for k in ["1", "3", "10"] {
        assert_eq!(json["recall"][k], 1.0);
    }
    for key in ["bleu", "rouge1_f", "rougeL_f", "distinct1", "distinct2", "perplexity", "n_examples", "per_dialogue"] {
        assert!(!json[key].is_null(), "{key}");
    }
    assert!((json["bleu"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert_eq!(json["config"]["ks"], serde_json::json!([1, 3, 10]));

    let md = fs::read_to_string(dir.path().join("report.md")).unwrap();
    for col in ["R@1", "R@3", "R@10"] {
        assert!(md.contains(col), "{md}");
    }
}

#[test]
fn eval_rejects_mismatched_rankings() {
    let dir = TempDir::new().unwrap();
    let data = corpus(&dir, 4);
    let ranks = dir.path().join("r.jsonl");
    oracle_rankings(&data, &ranks);
    let text = fs::read_to_string(&ranks).unwrap();
    let first_three: String = text.lines().take(3).map(|l| format!("{l}\n")).collect();
    fs::write(&ranks, first_three).unwrap();
    let out = dir.path().join("report.json");
    assert_eq!(code(&["eval", "--data", s(&data), "--rankings", s(&ranks), "--out", s(&out)]), 2);
}
