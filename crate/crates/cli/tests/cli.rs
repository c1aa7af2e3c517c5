use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn xldrift(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_xldrift"))
        .current_dir(dir)
        .args(args)
        .env_remove("XLD_CONFIG")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = xldrift(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// Small synthetic corpus in `data/` with pair noise `noise`.
fn corpus(noise: &str) -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    ok(
        dir.path(),
        &[
            "synth",
            "--pairs",
            "120",
            "--pool-points",
            "600",
            "--topics",
            "12",
            "--pair-noise",
            noise,
            "--out",
            "data",
        ],
    );
    dir
}

const INPUTS: [&str; 4] = [
    "--records",
    "data/records.jsonl",
    "--vectors",
    "data/vectors.xldv",
];

fn with_inputs<'a>(args: &[&'a str]) -> Vec<&'a str> {
    args.iter().copied().chain(INPUTS).collect()
}

fn jsonl(path: PathBuf) -> Vec<serde_json::Value> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn listing(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    names
}

#[test]
fn help_succeeds_and_bad_usage_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(xldrift(dir.path(), &["--help"]).status.code(), Some(0));
    assert_eq!(
        xldrift(dir.path(), &["analyze", "--bogus"]).status.code(),
        Some(1)
    );
    assert_eq!(
        xldrift(dir.path(), &["analyze", "--k", "0"]).status.code(),
        Some(1)
    );
    assert_eq!(
        xldrift(dir.path(), &["analyze", "--pair", "MtEn,MtEn"])
            .status
            .code(),
        Some(1)
    );
    let no_records = xldrift(dir.path(), &["ingest"]);
    assert_eq!(no_records.status.code(), Some(1));
}

#[test]
fn missing_file_is_a_data_error_on_stderr() {
    let dir = tempfile::tempdir().unwrap();
    let out = xldrift(
        dir.path(),
        &[
            "analyze",
            "--records",
            "absent.jsonl",
            "--vectors",
            "absent.xldv",
            "--out",
            "o",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("load failed"), "{stderr}");
    assert!(stderr.contains("absent.jsonl"), "{stderr}");
    assert!(out.stdout.is_empty());
    assert!(!dir.path().join("o").exists());
}

#[test]
fn ingest_lists_every_agency() {
    let dir = corpus("0.024");
    let stdout = ok(dir.path(), &with_inputs(&["ingest", "--out", "o"]));
    for agency in ["KAKENHI", "NIH", "NSF", "UKRI"] {
        assert!(stdout.contains(agency), "{stdout}");
    }
    let summary: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(dir.path().join("o/ingest_summary.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(summary["agencies"]["KAKENHI"]["projects"], 120);
    assert_eq!(summary["agencies"]["KAKENHI"]["records"], 240);
    assert_eq!(summary["records"], 840);
    assert_eq!(summary["vectors"], 840);
    assert_eq!(
        listing(&dir.path().join("o")),
        ["ingest.manifest.json", "ingest_summary.json"]
    );
}

#[test]
fn index_is_deterministic_and_loadable() {
    let dir = corpus("0.024");
    let d = dir.path();
    let stdout = ok(d, &with_inputs(&["index", "--out", "i1"]));
    assert!(
        stdout.starts_with("points 600 degree 16 seconds "),
        "{stdout}"
    );
    ok(d, &with_inputs(&["index", "--out", "i2"]));
    for name in ["index.xlgi", "index.meta.json", "index.manifest.json"] {
        assert_eq!(
            fs::read(d.join("i1").join(name)).unwrap(),
            fs::read(d.join("i2").join(name)).unwrap(),
            "{name}"
        );
    }

    // A saved graph answers exactly like the same graph built in memory.
    ok(
        d,
        &with_inputs(&[
            "analyze",
            "--n",
            "50",
            "--index",
            "i1/index.xlgi",
            "--out",
            "loaded",
        ]),
    );
    ok(d, &with_inputs(&["analyze", "--n", "50", "--out", "built"]));
    for name in [
        "distance_report.jsonl",
        "overlap_report.jsonl",
        "histogram_left.tsv",
    ] {
        assert_eq!(
            fs::read(d.join("loaded").join(name)).unwrap(),
            fs::read(d.join("built").join(name)).unwrap(),
            "{name}"
        );
    }

    // A graph paired with a different pool is rejected.
    let wrong = xldrift(
        d,
        &with_inputs(&[
            "analyze",
            "--pool",
            "NSF",
            "--index",
            "i1/index.xlgi",
            "--out",
            "w",
        ]),
    );
    assert_eq!(wrong.status.code(), Some(2));
}

#[test]
fn exact_mode_records_the_oracle() {
    let dir = corpus("0.024");
    ok(
        dir.path(),
        &with_inputs(&["index", "--exact", "--out", "e"]),
    );
    assert_eq!(
        listing(&dir.path().join("e")),
        ["index.manifest.json", "index.meta.json"]
    );
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("e/index.meta.json")).unwrap())
            .unwrap();
    assert_eq!(meta["mode"], "exact");
    assert_eq!(meta["points"], 600);
}

#[test]
fn underfull_graph_is_a_compute_error() {
    let dir = corpus("0.024");
    let out = xldrift(
        dir.path(),
        &with_inputs(&[
            "index",
            "--degree",
            "700",
            "--pool-size",
            "800",
            "--out",
            "u",
        ]),
    );
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("index failed"));
    assert!(!dir.path().join("u").exists());
}

#[test]
fn identical_pairs_overlap_fully() {
    let dir = corpus("0");
    ok(
        dir.path(),
        &with_inputs(&["analyze", "--n", "60", "--out", "o"]),
    );
    let lines = jsonl(dir.path().join("o/overlap_report.jsonl"));
    assert_eq!(lines[1]["kind"], "average");
    assert_eq!(lines[1]["average"], 10.0);
    assert_eq!(lines[1]["n"], 60);
}

#[test]
fn calibrated_corpus_puts_pairs_nearest() {
    let dir = corpus("0.024");
    ok(
        dir.path(),
        &with_inputs(&["analyze", "--n", "100", "--out", "o"]),
    );
    let lines = jsonl(dir.path().join("o/distance_report.jsonl"));
    let mean = |i: usize| lines[i]["mean"].as_f64().unwrap();
    assert!(mean(1) < mean(2) && mean(1) < mean(3), "{:?}", &lines[1..4]);
    let table = fs::read_to_string(dir.path().join("o/distance_report.txt")).unwrap();
    assert!(table.contains("(same project)"));
}

#[test]
fn analyze_is_byte_identical_across_thread_counts() {
    let dir = corpus("0.024");
    let d = dir.path();
    ok(
        d,
        &with_inputs(&["analyze", "--n", "80", "--threads", "1", "--out", "t1"]),
    );
    ok(
        d,
        &with_inputs(&["analyze", "--n", "80", "--threads", "8", "--out", "t8"]),
    );
    ok(
        d,
        &with_inputs(&["analyze", "--n", "80", "--threads", "8", "--out", "t8b"]),
    );
    let names = listing(&d.join("t1"));
    assert_eq!(names.len(), 8);
    for other in ["t8", "t8b"] {
        assert_eq!(listing(&d.join(other)), names);
        for name in &names {
            assert_eq!(
                fs::read(d.join("t1").join(name)).unwrap(),
                fs::read(d.join(other).join(name)).unwrap(),
                "{name}"
            );
        }
    }
}

#[test]
fn env_and_config_file_feed_the_run() {
    let dir = corpus("0.024");
    let d = dir.path();
    fs::write(d.join("run.toml"), "n = 7\nseed = 9\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_xldrift"))
        .current_dir(d)
        .args(["sample", "--config", "run.toml", "--out", "s"])
        .env("XLD_RECORDS", "data/records.jsonl")
        .env("XLD_VECTORS", "data/vectors.xldv")
        .env("XLD_N", "5")
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let ids = fs::read_to_string(d.join("s/sample.txt")).unwrap();
    assert_eq!(ids.lines().count(), 5);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.join("s/sample.manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["config"]["seed"], 9);
    assert_eq!(manifest["config"]["n"], 5);
}

#[test]
fn project_writes_both_series() {
    let dir = corpus("0.024");
    ok(
        dir.path(),
        &with_inputs(&["project", "--n", "40", "--out", "p"]),
    );
    let text = fs::read_to_string(dir.path().join("p/plot_data.tsv")).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "key\tseries\tx\ty");
    assert_eq!(rows.len(), 81);
    assert_eq!(
        rows.iter().filter(|r| r.contains("\tNativeJa\t")).count(),
        40
    );
    assert_eq!(rows.iter().filter(|r| r.contains("\tMtEn\t")).count(), 40);

    let few = xldrift(
        dir.path(),
        &with_inputs(&["project", "--n", "1", "--out", "q"]),
    );
    assert_eq!(few.status.code(), Some(3));
}

#[test]
fn failed_commit_leaves_no_partial_outputs() {
    let dir = corpus("0.024");
    let out = dir.path().join("o");
    // A directory squatting on one output name makes the final rename fail.
    fs::create_dir_all(out.join("overlap_report.txt/blocker")).unwrap();
    let run = xldrift(
        dir.path(),
        &with_inputs(&["analyze", "--n", "30", "--out", "o"]),
    );
    assert_eq!(run.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&run.stderr).contains("write failed"));
    assert_eq!(listing(&out), ["overlap_report.txt"]);
}

#[test]
fn ingest_reports_full_scale_project_counts() {
    use std::io::Write;

    let dir = tempfile::tempdir().unwrap();
    let counts = [
        ("KAKENHI", 264_881),
        ("NIH", 137_102),
        ("NSF", 107_250),
        ("UKRI", 83_336),
    ];
    {
        let file = fs::File::create(dir.path().join("records.jsonl")).unwrap();
        let mut w = std::io::BufWriter::new(file);
        for (agency, n) in counts {
            let ct = if agency == "KAKENHI" {
                "NativeJa"
            } else {
                "NativeEn"
            };
            for i in 0..n {
                writeln!(
                    w,
                    r#"{{"id":"{agency}-{i}","agency":"{agency}","coordinate_type":"{ct}","title":"t","abstract":"a"}}"#
                )
                .unwrap();
            }
        }
    }
    let stdout = ok(
        dir.path(),
        &["ingest", "--records", "records.jsonl", "--out", "o"],
    );
    let summary: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(dir.path().join("o/ingest_summary.json")).unwrap(),
    )
    .unwrap();
    for (agency, n) in counts {
        assert_eq!(summary["agencies"][agency]["projects"], n, "{stdout}");
    }
    assert_eq!(summary["records"], 592_569);
}
