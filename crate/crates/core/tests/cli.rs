use std::path::Path;
use std::process::{Command, Output};

use specdet::dataset::{labels_to_text, read_label_file, write_prediction_file, Detection};

fn specdet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_specdet"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = specdet(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn count_files(dir: &Path, ext: &str) -> usize {
    std::fs::read_dir(dir)
        .unwrap()
        .filter(|e| {
            e.as_ref()
                .unwrap()
                .path()
                .extension()
                .is_some_and(|x| x == ext)
        })
        .count()
}

fn read(path: impl AsRef<Path>) -> Vec<u8> {
    std::fs::read(path).unwrap()
}

#[test]
fn full_workflow_on_one_scene_per_combination() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("ds");
    let o = out.to_str().unwrap();
    ok(&[
        "generate",
        "--seed",
        "7",
        "--combos-per-k",
        "all",
        "--configs",
        "1",
        "--realizations",
        "1",
        "--out",
        o,
    ]);
    assert_eq!(count_files(&out.join("images"), "png"), 56);
    assert_eq!(count_files(&out.join("labels"), "txt"), 56);
    assert_eq!(count_files(&out.join("provenance"), "txt"), 56);
    assert_eq!(
        std::fs::read_to_string(out.join("manifest.txt"))
            .unwrap()
            .lines()
            .count(),
        56
    );
    assert!(out.join("split.txt").exists() && out.join("config.txt").exists());

    let summary = ok(&["stats", "--out", o]);
    assert!(summary.contains("min_ratio="), "{summary}");
    let csv = std::fs::read_to_string(out.join("stats/aspect_ratio_hist.csv")).unwrap();
    assert!(csv.starts_with("bin_lo,bin_hi,count\n"));
    assert_eq!(csv.lines().count(), 65);

    ok(&[
        "anchors", "--out", o, "--mode", "kmeans", "--k", "9", "--seed", "1",
    ]);
    let first = read(out.join("anchors/kmeans_anchors.txt"));
    ok(&[
        "anchors", "--out", o, "--mode", "kmeans", "--k", "9", "--seed", "1",
    ]);
    assert_eq!(first, read(out.join("anchors/kmeans_anchors.txt")));
    assert_eq!(String::from_utf8(first).unwrap().lines().count(), 9);
    ok(&["anchors", "--out", o, "--mode", "default-report"]);
    assert!(out.join("anchors/default-report_report.txt").exists());
    assert!(!specdet(&["anchors", "--out", o, "--k", "100000"])
        .status
        .success());

    ok(&["detect-baseline", "--out", o, "--jobs", "1"]);
    let preds = out.join("predictions");
    assert_eq!(count_files(&preds, "txt"), 56);
    let snapshot: Vec<_> = std::fs::read_dir(&preds)
        .unwrap()
        .map(|e| read(e.unwrap().path()))
        .collect();
    ok(&["detect-baseline", "--out", o]);
    let again: Vec<_> = std::fs::read_dir(&preds)
        .unwrap()
        .map(|e| read(e.unwrap().path()))
        .collect();
    let (mut a, mut b) = (snapshot, again);
    a.sort();
    b.sort();
    assert_eq!(a, b);

    let report = ok(&["evaluate", "--out", o, "--class-agnostic"]);
    assert!(report.contains("map_50_95 = ") && report.contains("ground_truths = "));
    let csv = std::fs::read_to_string(out.join("eval/summary.csv")).unwrap();
    assert!(csv.starts_with("metric,value\n"));

    // Labels as predictions with score 1.
    let perfect = tmp.path().join("perfect");
    for line in std::fs::read_to_string(out.join("manifest.txt"))
        .unwrap()
        .lines()
    {
        let gt = read_label_file(out.join("labels").join(format!("{line}.txt"))).unwrap();
        let dets: Vec<Detection> = gt
            .iter()
            .map(|g| Detection {
                class_id: g.class_id,
                bbox: g.bbox,
                score: 1.0,
            })
            .collect();
        write_prediction_file(&dets, perfect.join(format!("{line}.txt"))).unwrap();
    }
    let report = ok(&[
        "evaluate",
        "--out",
        o,
        "--predictions",
        perfect.to_str().unwrap(),
    ]);
    assert!(
        report.contains("map_50_95 = 1.000000") && report.contains("ar_100 = 1.000000"),
        "{report}"
    );

    let empty = tmp.path().join("empty");
    std::fs::create_dir_all(&empty).unwrap();
    let report = ok(&[
        "evaluate",
        "--out",
        o,
        "--predictions",
        empty.to_str().unwrap(),
    ]);
    assert!(
        report.contains("map_50_95 = 0.000000") && report.contains("ar_100 = 0.000000"),
        "{report}"
    );
}

#[test]
fn regenerating_gives_identical_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for dir in [&a, &b] {
        ok(&[
            "generate",
            "--seed",
            "3",
            "--combos-per-k",
            "1",
            "--configs",
            "1",
            "--realizations",
            "1",
            "--out",
            dir.to_str().unwrap(),
        ]);
    }
    let ids = std::fs::read_to_string(a.join("manifest.txt")).unwrap();
    assert_eq!(ids.lines().count(), 4);
    let mut files = vec!["manifest.txt".to_string(), "split.txt".to_string()];
    for id in ids.lines() {
        files.push(format!("images/{id}.png"));
        files.push(format!("labels/{id}.txt"));
        files.push(format!("provenance/{id}.txt"));
    }
    for f in files {
        assert_eq!(read(a.join(&f)), read(b.join(&f)), "{f}");
    }
}

#[test]
fn printed_config_reproduces_itself() {
    let tmp = tempfile::tempdir().unwrap();
    let printed = ok(&[
        "generate",
        "--print-config",
        "--seed",
        "19",
        "--configs",
        "3",
        "--set",
        "snr_db=10,30",
    ]);
    assert!(printed.contains("seed = 19") && printed.contains("configs = 3"));
    let path = tmp.path().join("run.cfg");
    std::fs::write(&path, &printed).unwrap();
    let again = ok(&[
        "generate",
        "--print-config",
        "--config",
        path.to_str().unwrap(),
    ]);
    assert_eq!(printed, again);
    // Flags override the file.
    let over = ok(&[
        "generate",
        "--print-config",
        "--config",
        path.to_str().unwrap(),
        "--seed",
        "2",
    ]);
    assert!(over.contains("seed = 2\n"));
}

#[test]
fn errors_exit_nonzero_with_a_message() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    std::fs::create_dir_all(root.join("labels")).unwrap();
    std::fs::write(root.join("manifest.txt"), "00_00_00\n").unwrap();
    std::fs::write(root.join("labels/00_00_00.txt"), labels_to_text(&[])).unwrap();
    let out = specdet(&["stats", "--out", root.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("no annotations"));

    std::fs::write(root.join("manifest.txt"), "00_00_00\n07_01_02\n").unwrap();
    let out = specdet(&["stats", "--out", root.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("07_01_02"));

    let out = specdet(&[
        "generate",
        "--configs",
        "0",
        "--out",
        root.join("x").to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    let out = specdet(&["generate", "--set", "bogus=1", "--print-config"]);
    assert!(!out.status.success());
}
