use std::path::Path;
use std::process::{Command, Output};

use flowmotif_core::report::ZSCORES_HEADER;

const WORKED_EXAMPLE: &str = "\
match_id,team_id,passer,receiver,timestamp_s
M1,T1,2,4,0
M1,T1,4,5,1
M1,T1,5,6,2
M1,T1,6,4,3
M1,T1,4,6,4
";

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flowmotif"))
        .current_dir(dir)
        .env("FLOWMOTIF_THREADS", "2")
        .args(args)
        .output()
        .unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

#[test]
fn motifs_of_worked_example() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("m.csv"), WORKED_EXAMPLE).unwrap();
    let out = run(dir.path(), &["motifs", "m.csv"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(
        stdout(&out),
        "match_id,team_id,k,pattern,count\n\
         M1,T1,3,ABAB,0\nM1,T1,3,ABAC,0\nM1,T1,3,ABCA,1\nM1,T1,3,ABCB,1\nM1,T1,3,ABCD,1\n"
    );
}

#[test]
fn jsonl_input_matches_csv() {
    let dir = tempfile::tempdir().unwrap();
    let mut jsonl = String::new();
    for (i, (a, b)) in [("2", "4"), ("4", "5"), ("5", "6"), ("6", "4"), ("4", "6")]
        .iter()
        .enumerate()
    {
        jsonl += &format!(
            "{{\"match_id\":\"M1\",\"team_id\":\"T1\",\"passer\":\"{a}\",\"receiver\":\"{b}\",\"timestamp_s\":{i}}}\n"
        );
    }
    std::fs::write(dir.path().join("m.jsonl"), jsonl).unwrap();
    std::fs::write(dir.path().join("m.csv"), WORKED_EXAMPLE).unwrap();
    let a = run(dir.path(), &["motifs", "m.jsonl"]);
    let b = run(dir.path(), &["motifs", "m.csv"]);
    assert!(a.status.success(), "{}", stderr(&a));
    assert_eq!(stdout(&a), stdout(&b));
}

#[test]
fn empty_directory_gives_header_only() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::create_dir(dir.path().join("empty")).unwrap();
    let out = run(dir.path(), &["motifs", "empty", "--out", "o"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = std::fs::read_to_string(dir.path().join("o/motifs.csv")).unwrap();
    assert_eq!(csv, "match_id,team_id,k,pattern,count\n");
    assert!(dir.path().join("o/manifest.json").exists());
}

#[test]
fn corrupt_file_exits_2_with_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    std::fs::create_dir(&data).unwrap();
    std::fs::write(data.join("a.csv"), WORKED_EXAMPLE).unwrap();
    std::fs::write(
        data.join("b.csv"),
        "match_id,team_id,passer,receiver,timestamp_s\nM2,T1,3,3,0\nM2,T1,3,4,oops\n",
    )
    .unwrap();
    let out = run(dir.path(), &["motifs", "data"]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("line=2 reason="), "{err}");
    assert!(err.contains("line=3 reason="), "{err}");
    assert!(stdout(&out).is_empty());
}

#[test]
fn missing_column_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("m.csv"),
        "match_id,team_id,passer,timestamp_s\nM,T,a,0\n",
    )
    .unwrap();
    let out = run(dir.path(), &["motifs", "m.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("receiver"));
}

#[test]
fn bad_flags_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("m.csv"), WORKED_EXAMPLE).unwrap();
    for args in [
        &["motifs", "m.csv", "--k", "0"][..],
        &["motifs", "m.csv", "--tmax", "-1"],
        &["zscores", "m.csv", "--replicates", "0"],
        &["motifs", "missing.csv"],
    ] {
        assert_eq!(run(dir.path(), args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn single_replicate_rows_are_degenerate() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("m.csv"), WORKED_EXAMPLE).unwrap();
    let out = run(dir.path(), &["zscores", "m.csv", "--replicates", "1"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), ZSCORES_HEADER.join(","));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 5);
    assert!(rows.iter().all(|r| r.ends_with(",true")), "{text}");
}

#[test]
fn zscores_rerun_is_identical() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("m.csv"), WORKED_EXAMPLE).unwrap();
    let a = run(
        dir.path(),
        &["zscores", "m.csv", "--seed", "3", "--replicates", "200"],
    );
    let b = run(
        dir.path(),
        &["zscores", "m.csv", "--seed", "3", "--replicates", "200"],
    );
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

fn write_fingerprints(dir: &Path, rows: &[(&str, [f64; 5])]) {
    let mut csv = String::from("team_id,k,matches_used,ABAB,ABAC,ABCA,ABCB,ABCD\n");
    for (team, f) in rows {
        csv += &format!("{team},3,38,{},{},{},{},{}\n", f[0], f[1], f[2], f[3], f[4]);
    }
    std::fs::write(dir.join("fp.csv"), csv).unwrap();
}

#[test]
fn single_team_cluster_is_domain_error() {
    let dir = tempfile::tempdir().unwrap();
    write_fingerprints(dir.path(), &[("A", [1.0, 2.0, 3.0, 4.0, 5.0])]);
    let out = run(
        dir.path(),
        &["cluster", "fp.csv", "--clusters", "1", "--out", "c"],
    );
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    let out = run(dir.path(), &["cluster", "fp.csv", "--out", "c"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn identical_fingerprints_have_no_between_ss() {
    let dir = tempfile::tempdir().unwrap();
    let f = [0.5, -1.0, 2.0, 0.0, 1.5];
    write_fingerprints(
        dir.path(),
        &[("A", f), ("B", f), ("C", f), ("D", f), ("E", f)],
    );
    let out = run(
        dir.path(),
        &["cluster", "fp.csv", "--clusters", "2", "--out", "c"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("c/cluster_summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["between_over_total"], 0.0);
    assert_eq!(summary["total_ss"], 0.0);
}

#[test]
fn four_separated_groups_are_recovered() {
    let dir = tempfile::tempdir().unwrap();
    let centers = [
        [10.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, 10.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 10.0, 0.0, 0.0],
        [0.0; 5],
    ];
    let names: Vec<String> = (0..16).map(|i| format!("T{i:02}")).collect();
    let rows: Vec<(&str, [f64; 5])> = names
        .iter()
        .enumerate()
        .map(|(i, n)| {
            let mut f = centers[i % 4];
            f[3] += 0.1 * (i / 4) as f64;
            f[4] -= 0.05 * (i / 4) as f64;
            (n.as_str(), f)
        })
        .collect();
    write_fingerprints(dir.path(), &rows);
    let out = run(
        dir.path(),
        &["cluster", "fp.csv", "--clusters", "4", "--out", "c"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = std::fs::read_to_string(dir.path().join("c/clusters.csv")).unwrap();
    let labels: Vec<usize> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(labels.len(), 16);
    for i in 0..16 {
        for j in 0..16 {
            assert_eq!(labels[i] == labels[j], i % 4 == j % 4, "{csv}");
        }
    }
    for name in [
        "dendrogram.json",
        "dendrogram.svg",
        "pca.csv",
        "pca_variance.csv",
        "pca.svg",
        "manifest.json",
    ] {
        assert!(dir.path().join("c").join(name).exists(), "{name}");
    }
    let pca = std::fs::read_to_string(dir.path().join("c/pca.csv")).unwrap();
    assert!(pca.starts_with("team_id,pc1,pc2\n"));
}

#[test]
fn synth_then_zscores_chain() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("teams.json"),
        r#"[{"team_id": "Alpha", "squad_size": 11, "possessions_per_match": 30,
             "mean_possession_length": 4.0, "back_pass_bias": 0.5, "matches": 3},
            {"squad_size": 11, "possessions_per_match": 30,
             "mean_possession_length": 4.0, "back_pass_bias": 0.0, "matches": 2}]"#,
    )
    .unwrap();
    let out = run(
        dir.path(),
        &[
            "synth",
            "--teams",
            "teams.json",
            "--seed",
            "1",
            "--out",
            "league",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(dir.path().join("league/Alpha.csv").exists());
    assert!(dir.path().join("league/T02.csv").exists());

    let out = run(
        dir.path(),
        &["zscores", "league", "--replicates", "50", "--out", "z"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let z = std::fs::read_to_string(dir.path().join("z/zscores.csv")).unwrap();
    assert_eq!(z.lines().count(), 1 + 5 * 5);

    let out = run(dir.path(), &["fingerprint", "z/zscores.csv"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let fp = stdout(&out);
    assert!(fp.contains("\nAlpha,3,3,"), "{fp}");
    assert!(fp.contains("\nT02,3,2,"), "{fp}");

    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("z/manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["command"], "zscores");
    assert_eq!(manifest["config"]["replicates"], 50);
    assert_eq!(manifest["inputs"].as_object().unwrap().len(), 2);
}

#[test]
fn cluster_requires_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    write_fingerprints(dir.path(), &[("A", [0.0; 5]), ("B", [1.0; 5])]);
    let out = run(dir.path(), &["cluster", "fp.csv", "--clusters", "2"]);
    assert_eq!(out.status.code(), Some(2));
}
