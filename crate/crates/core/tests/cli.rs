use std::path::Path;
use std::process::{Command, Output};

fn teamvec(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_teamvec"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Small synthetic corpus plus its DA training file.
fn seeded_dir() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let o = teamvec(
        &[
            "synth", "-o", "corpus.jsonl", "--da-output", "da.tsv", "--teams", "12", "--min-utterances", "30",
            "--max-utterances", "40", "--seed", "3",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    dir
}

#[test]
fn usage_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec![],
        vec!["frobnicate"],
        vec!["featurize", "-i", "x.jsonl", "--feature", "prosody"],
        vec!["featurize", "-i", "x.jsonl", "--feature", "da", "--phase", "closing"],
        vec!["stats", "ks", "--a", "x.txt"],
        vec!["synth", "-o", "c.jsonl", "--teams", "7"],
    ] {
        assert_eq!(code(&teamvec(&args, dir.path())), 1, "{args:?}");
    }
    std::fs::write(dir.path().join("bad.toml"), "dimension = 3\n").unwrap();
    assert_eq!(code(&teamvec(&["report", "-c", "bad.toml"], dir.path())), 1);
    assert_eq!(code(&teamvec(&["report"], dir.path())), 1);
}

#[test]
fn help_and_version_exit_0() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&teamvec(&["--help"], dir.path())), 0);
    assert_eq!(code(&teamvec(&["--version"], dir.path())), 0);
}

#[test]
fn data_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert_eq!(code(&teamvec(&["ingest", "-i", "missing.jsonl"], p)), 2);
    std::fs::write(p.join("broken.jsonl"), "{not json\n").unwrap();
    assert_eq!(code(&teamvec(&["ingest", "-i", "broken.jsonl"], p)), 2);
    std::fs::write(p.join("few.txt"), "0.5\n0.6\n0.7\n").unwrap();
    assert_eq!(code(&teamvec(&["stats", "normality", "--values", "few.txt"], p)), 2);
    std::fs::write(p.join("nan.txt"), "0.5\nabc\n").unwrap();
    assert_eq!(code(&teamvec(&["stats", "ks", "--a", "nan.txt", "--b", "few.txt"], p)), 2);
}

#[test]
fn staged_commands_chain() {
    let dir = seeded_dir();
    let p = dir.path();
    let o = teamvec(&["ingest", "-i", "corpus.jsonl", "-o", "clean.jsonl"], p);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("transcripts=12 "));

    let o = teamvec(
        &[
            "featurize", "-i", "clean.jsonl", "--feature", "entrainment", "--phase", "middle", "-o", "ent.jsonl",
            "--graphs", "graphs",
        ],
        p,
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let docs = std::fs::read_to_string(p.join("ent.jsonl")).unwrap();
    assert_eq!(docs.lines().count(), 12);
    assert!(p.join("graphs/team000_s1_middle.dot").exists());
    let json = std::fs::read_to_string(p.join("graphs/team000_s1_middle.json")).unwrap();
    let _: serde_json::Value = serde_json::from_str(&json).unwrap();

    let o = teamvec(&["embed", "-i", "ent.jsonl", "-o", "ent.csv", "--dim", "8", "--model", "m.json"], p);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(p.join("ent.csv")).unwrap();
    assert_eq!(csv.lines().count(), 13);

    let o = teamvec(&["evaluate", "-e", "ent.csv", "-i", "clean.jsonl", "--folds", "3"], p);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let acc = v["accuracy"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&acc));

    let o = teamvec(&["project", "-e", "ent.csv", "-o", "proj.csv", "--labels", "clean.jsonl"], p);
    assert_eq!(code(&o), 0);
    let proj = std::fs::read_to_string(p.join("proj.csv")).unwrap();
    assert!(proj.starts_with("team_id,session_id,x,y,label\n"));
    assert_eq!(proj.lines().count(), 13);

    let o = teamvec(&["train-da", "-c", "da.tsv", "-o", "da.json"], p);
    assert_eq!(code(&o), 0);
    let o = teamvec(&["featurize", "-i", "clean.jsonl", "--feature", "da", "--da-model", "da.json"], p);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).lines().count(), 12);
}

#[test]
fn report_and_stats() {
    let dir = seeded_dir();
    let p = dir.path();
    std::fs::write(
        p.join("run.toml"),
        "input = \"corpus.jsonl\"\noutput_dir = \"out\"\ndim = 8\nruns = 20\nfeatures = [\"da\", \"sentiment\"]\nphases = [\"whole\"]\n",
    )
    .unwrap();
    let o = teamvec(&["report", "-c", "run.toml"], p);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let table = std::fs::read_to_string(p.join("out/report.csv")).unwrap();
    assert_eq!(stdout(&o), table);
    assert!(table.lines().nth(1).unwrap() == "phase,DA,Sentiment");
    assert!(p.join("out/report.json").exists());
    assert!(p.join("out/embeddings_da_whole.csv").exists());

    let o = teamvec(
        &["stats", "ks", "--runs", "out/runs.csv", "--first", "da:whole", "--second", "sentiment:whole"],
        p,
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["p_value"].as_f64().unwrap() <= 1.0);

    let o = teamvec(&["stats", "normality", "--runs", "out/runs.csv", "--cell", "da:whole"], p);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["statistic"].as_f64().unwrap() >= 0.0);
    assert!((0.0..=1.0).contains(&v["p_value"].as_f64().unwrap()));
    // Cell not in the report.
    let o = teamvec(&["stats", "normality", "--runs", "out/runs.csv", "--cell", "entrainment:whole"], p);
    assert_eq!(code(&o), 2);
    let o = teamvec(&["stats", "normality", "--runs", "out/runs.csv", "--cell", "da"], p);
    assert_eq!(code(&o), 1);
}
