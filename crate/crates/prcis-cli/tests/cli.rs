use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command as Process;

use clap::Parser;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use prcis_cli::{
    AnomalyArgs, ClassifyArgs, Cli, ClusterArgs, Command, DictArgs, DistArgs, SweepArgs,
};

fn run_ok(command: Command) {
    prcis_cli::run(Cli {
        workers: 0,
        command,
    })
    .expect("command should succeed");
}

fn run_err(command: Command) -> anyhow::Error {
    prcis_cli::run(Cli {
        workers: 0,
        command,
    })
    .expect_err("command should fail")
}

/// Two distinguishable periodic shapes with per-series noise.
fn write_labeled_series(dir: &Path, n_per_class: usize, len: usize) -> PathBuf {
    let mut rng = ChaCha8Rng::seed_from_u64(1234);
    let mut manifest = String::new();
    for class in 0..2 {
        for idx in 0..n_per_class {
            let id = format!("c{class}s{idx}");
            let values: Vec<f64> = (0..len)
                .map(|i| {
                    let phase = 2.0 * std::f64::consts::PI * (i % 40) as f64 / 40.0;
                    let base = match class {
                        0 => phase.sin(),
                        _ => {
                            if (i % 40) < 20 {
                                1.0
                            } else {
                                -1.0
                            }
                        }
                    };
                    base + rng.random_range(-0.05..0.05)
                })
                .collect();
            let series = prcis::TimeSeries::new(&id, values).unwrap();
            prcis::save_series(&series, dir.join(format!("{id}.txt"))).unwrap();
            manifest.push_str(&format!("{id}.txt\tclass{class}\n"));
        }
    }
    let path = dir.join("manifest.tsv");
    fs::write(&path, manifest).unwrap();
    path
}

fn dict_args(manifest: &Path, out: &Path) -> DictArgs {
    DictArgs {
        manifest: manifest.to_path_buf(),
        out: out.to_path_buf(),
        method: "yeh".to_string(),
        size: Some(2),
        length: Some(40),
        seed: None,
        delta_factor: 0.3,
        ranges: None,
    }
}

#[test]
fn full_pipeline_end_to_end() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path();
    let manifest = write_labeled_series(data, 3, 600);
    let dict_dir = data.join("dicts");

    run_ok(Command::Dict(dict_args(&manifest, &dict_dir)));
    for class in 0..2 {
        for idx in 0..3 {
            assert!(dict_dir.join(format!("c{class}s{idx}.dict.json")).exists());
        }
    }
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dict_dir.join("run_summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["command"], "dict");
    assert_eq!(summary["method"], "yeh");
    assert_eq!(summary["S"], 2);
    assert_eq!(summary["L"], 40);
    assert_eq!(summary["series"].as_array().unwrap().len(), 6);

    let matrix_path = data.join("matrix.csv");
    run_ok(Command::Dist(DistArgs {
        dict_dir: dict_dir.clone(),
        out: matrix_path.clone(),
    }));
    let matrix = prcis::DistanceMatrix::load(&matrix_path).unwrap();
    assert_eq!(matrix.size(), 6);
    for i in 0..6 {
        assert_eq!(matrix.get(i, i), 0.0);
        for j in 0..6 {
            assert_eq!(matrix.get(i, j).to_bits(), matrix.get(j, i).to_bits());
        }
    }

    let dendro_path = data.join("dendro.json");
    run_ok(Command::Cluster(ClusterArgs {
        matrix: matrix_path.clone(),
        linkage: "single".to_string(),
        out: dendro_path.clone(),
    }));
    let dendro: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&dendro_path).unwrap()).unwrap();
    assert_eq!(dendro["leaf_ids"].as_array().unwrap().len(), 6);
    assert_eq!(dendro["merges"].as_array().unwrap().len(), 5);
    let newick = fs::read_to_string(data.join("dendro.nwk")).unwrap();
    assert!(newick.starts_with('('));
    assert!(newick.trim_end().ends_with(';'));

    let report_path = data.join("report.json");
    run_ok(Command::Classify(ClassifyArgs {
        matrix: matrix_path.clone(),
        manifest: manifest.clone(),
        out: report_path.clone(),
    }));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report["accuracy"], 1.0, "well-separated classes: {report}");
    assert_eq!(report["predictions"].as_array().unwrap().len(), 6);
    assert_eq!(report["confusion"][0][0], 3);
    assert_eq!(report["confusion"][1][1], 3);

    let anomaly_path = data.join("anomaly.csv");
    run_ok(Command::Anomaly(AnomalyArgs {
        dict: dict_dir.join("c0s0.dict.json"),
        series: data.join("c0s1.txt"),
        smooth_window: None,
        out: anomaly_path.clone(),
    }));
    let anomaly_text = fs::read_to_string(&anomaly_path).unwrap();
    let mut lines = anomaly_text.lines();
    assert_eq!(lines.next(), Some("index,score"));
    assert!(lines.clone().count() > 500);
    for line in lines.take(5) {
        let (idx, score) = line.split_once(',').unwrap();
        idx.parse::<usize>().unwrap();
        score.parse::<f64>().unwrap();
    }

    let sweep_path = data.join("sweep.csv");
    run_ok(Command::Sweep(SweepArgs {
        manifest: manifest.clone(),
        sizes: vec![1, 2],
        length: 40,
        method: "yeh".to_string(),
        seed: None,
        delta_factor: 0.3,
        out: sweep_path.clone(),
    }));
    let sweep_text = fs::read_to_string(&sweep_path).unwrap();
    let lines: Vec<&str> = sweep_text.lines().collect();
    assert_eq!(lines[0], "S,accuracy");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("1,"));
    assert!(lines[2].starts_with("2,"));
}

#[test]
fn dict_rerun_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = write_labeled_series(tmp.path(), 2, 400);
    let out = tmp.path().join("dicts");

    let mut args = dict_args(&manifest, &out);
    args.method = "random".to_string();
    args.seed = Some(7);
    run_ok(Command::Dict(args));

    let snapshot: Vec<(PathBuf, Vec<u8>)> = fs::read_dir(&out)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            let bytes = fs::read(&p).unwrap();
            (p, bytes)
        })
        .collect();
    assert_eq!(snapshot.len(), 5, "4 dictionaries + run summary");

    let mut args = dict_args(&manifest, &out);
    args.method = "random".to_string();
    args.seed = Some(7);
    run_ok(Command::Dict(args));

    for (path, bytes) in snapshot {
        assert_eq!(fs::read(&path).unwrap(), bytes, "{} changed", path.display());
    }
}

#[test]
fn different_seeds_move_random_patterns() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = write_labeled_series(tmp.path(), 1, 400);
    let out7 = tmp.path().join("d7");
    let out8 = tmp.path().join("d8");
    for (out, seed) in [(&out7, 7), (&out8, 8)] {
        let mut args = dict_args(&manifest, out);
        args.method = "random".to_string();
        args.seed = Some(seed);
        run_ok(Command::Dict(args));
    }
    let a = fs::read_to_string(out7.join("c0s0.dict.json")).unwrap();
    let b = fs::read_to_string(out8.join("c0s0.dict.json")).unwrap();
    assert_ne!(a, b);
}

#[test]
fn worker_count_does_not_change_output_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = write_labeled_series(tmp.path(), 2, 400);
    let dict_dir = tmp.path().join("dicts");
    run_ok(Command::Dict(dict_args(&manifest, &dict_dir)));

    let out1 = tmp.path().join("m1.csv");
    let out4 = tmp.path().join("m4.csv");
    for (out, workers) in [(&out1, 1), (&out4, 4)] {
        prcis_cli::run(Cli {
            workers,
            command: Command::Dist(DistArgs {
                dict_dir: dict_dir.clone(),
                out: out.clone(),
            }),
        })
        .unwrap();
    }
    assert_eq!(fs::read(&out1).unwrap(), fs::read(&out4).unwrap());
}

#[test]
fn cluster_two_items_writes_single_merge_newick() {
    let tmp = tempfile::tempdir().unwrap();
    let matrix_path = tmp.path().join("m.csv");
    let m = prcis::DistanceMatrix::new(
        vec!["a".into(), "b".into()],
        vec![vec![0.0, 2.25], vec![2.25, 0.0]],
    )
    .unwrap();
    m.save(&matrix_path).unwrap();
    let out = tmp.path().join("two.json");
    run_ok(Command::Cluster(ClusterArgs {
        matrix: matrix_path,
        linkage: "average".to_string(),
        out: out.clone(),
    }));
    let newick = fs::read_to_string(tmp.path().join("two.nwk")).unwrap();
    assert_eq!(newick.trim_end(), "(a:2.25,b:2.25);");
}

#[test]
fn anomaly_window_one_matches_library_profile() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = write_labeled_series(tmp.path(), 1, 500);
    let dict_dir = tmp.path().join("dicts");
    run_ok(Command::Dict(dict_args(&manifest, &dict_dir)));

    let out = tmp.path().join("scores.csv");
    run_ok(Command::Anomaly(AnomalyArgs {
        dict: dict_dir.join("c0s0.dict.json"),
        series: tmp.path().join("c1s0.txt"),
        smooth_window: Some(1),
        out: out.clone(),
    }));

    let dict = prcis::Dictionary::load(dict_dir.join("c0s0.dict.json")).unwrap();
    let series = prcis::load_series(
        tmp.path().join("c1s0.txt"),
        &prcis::IngestOptions::default(),
    )
    .unwrap();
    let expected = prcis::prcis_dist_prof(&dict, &series, Some(1)).unwrap();

    let text = fs::read_to_string(&out).unwrap();
    let scores: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split_once(',').unwrap().1.parse().unwrap())
        .collect();
    assert_eq!(scores.len(), expected.scores().len());
    for (got, want) in scores.iter().zip(expected.scores()) {
        assert_eq!(got.to_bits(), want.to_bits(), "round trip must be exact");
    }
}

#[test]
fn classify_rejects_unlabeled_matrix_id() {
    let tmp = tempfile::tempdir().unwrap();
    let matrix_path = tmp.path().join("m.csv");
    prcis::DistanceMatrix::new(
        vec!["known".into(), "mystery".into()],
        vec![vec![0.0, 1.0], vec![1.0, 0.0]],
    )
    .unwrap()
    .save(&matrix_path)
    .unwrap();
    let series = prcis::TimeSeries::new("known", vec![1.0, 2.0, 3.0]).unwrap();
    prcis::save_series(&series, tmp.path().join("known.txt")).unwrap();
    fs::write(tmp.path().join("manifest.tsv"), "known.txt\tx\n").unwrap();
    let err = run_err(Command::Classify(ClassifyArgs {
        matrix: matrix_path,
        manifest: tmp.path().join("manifest.tsv"),
        out: tmp.path().join("r.json"),
    }));
    assert!(err.to_string().contains("mystery"), "{err}");
}

#[test]
fn dict_flag_validation() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = write_labeled_series(tmp.path(), 1, 300);

    let mut missing_seed = dict_args(&manifest, &tmp.path().join("o1"));
    missing_seed.method = "random".to_string();
    let err = run_err(Command::Dict(missing_seed));
    assert!(err.to_string().contains("--seed"), "{err}");

    let mut missing_size = dict_args(&manifest, &tmp.path().join("o2"));
    missing_size.size = None;
    let err = run_err(Command::Dict(missing_size));
    assert!(err.to_string().contains("--size"), "{err}");

    let mut missing_ranges = dict_args(&manifest, &tmp.path().join("o3"));
    missing_ranges.method = "manual".to_string();
    let err = run_err(Command::Dict(missing_ranges));
    assert!(err.to_string().contains("--ranges"), "{err}");

    let mut bad_method = dict_args(&manifest, &tmp.path().join("o4"));
    bad_method.method = "snippets".to_string();
    let err = run_err(Command::Dict(bad_method));
    assert!(err.to_string().contains("snippets"), "{err}");
}

#[test]
fn manual_dict_through_cli() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = write_labeled_series(tmp.path(), 1, 300);
    let out = tmp.path().join("manual");
    let mut args = dict_args(&manifest, &out);
    args.method = "manual".to_string();
    args.size = None;
    args.length = None;
    args.ranges = Some("0:50, 100:80".to_string());
    run_ok(Command::Dict(args));
    let dict = prcis::Dictionary::load(out.join("c0s0.dict.json")).unwrap();
    assert_eq!(dict.len(), 2);
    assert_eq!(dict.patterns()[0].len(), 50);
    assert_eq!(dict.patterns()[1].source_start(), 100);
}

#[test]
fn cli_parses_documented_flags() {
    let cli = Cli::try_parse_from([
        "prcis", "dict", "--manifest", "m.tsv", "--out", "d", "--method", "yeh", "-S", "4", "-L",
        "32", "--delta-factor", "0.25", "--workers", "2",
    ])
    .unwrap();
    assert_eq!(cli.workers, 2);
    match cli.command {
        Command::Dict(args) => {
            assert_eq!(args.size, Some(4));
            assert_eq!(args.length, Some(32));
            assert_eq!(args.delta_factor, 0.25);
        }
        other => panic!("wrong subcommand: {other:?}"),
    }

    let cli = Cli::try_parse_from([
        "prcis", "sweep", "--manifest", "m.tsv", "-S", "1,2,4,6", "-L", "25", "--out", "s.csv",
    ])
    .unwrap();
    match cli.command {
        Command::Sweep(args) => assert_eq!(args.sizes, vec![1, 2, 4, 6]),
        other => panic!("wrong subcommand: {other:?}"),
    }

    assert!(Cli::try_parse_from(["prcis", "frobnicate"]).is_err());
}

#[test]
fn binary_reports_usage_errors_with_nonzero_exit() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = write_labeled_series(tmp.path(), 1, 300);

    // L=1 violates the window precondition deep in the builder
    let out = Process::new(env!("CARGO_BIN_EXE_prcis"))
        .args(["dict", "--method", "yeh", "-S", "2", "-L", "1"])
        .arg("--manifest")
        .arg(&manifest)
        .arg("--out")
        .arg(tmp.path().join("dicts"))
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("window length 1"), "stderr: {stderr}");

    let out = Process::new(env!("CARGO_BIN_EXE_prcis"))
        .args(["dist", "--dict-dir"])
        .arg(tmp.path().join("does-not-exist"))
        .arg("--out")
        .arg(tmp.path().join("m.csv"))
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(!out.stderr.is_empty());
}

#[test]
fn binary_happy_path_writes_files_and_exits_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = write_labeled_series(tmp.path(), 2, 400);
    let dict_dir = tmp.path().join("dicts");
    let status = Process::new(env!("CARGO_BIN_EXE_prcis"))
        .args(["dict", "--method", "yeh", "-S", "2", "-L", "40"])
        .arg("--manifest")
        .arg(&manifest)
        .arg("--out")
        .arg(&dict_dir)
        .status()
        .unwrap();
    assert!(status.success());

    let matrix_path = tmp.path().join("m.csv");
    let status = Process::new(env!("CARGO_BIN_EXE_prcis"))
        .arg("dist")
        .arg("--dict-dir")
        .arg(&dict_dir)
        .arg("--out")
        .arg(&matrix_path)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(prcis::DistanceMatrix::load(&matrix_path).unwrap().size() == 4);
}

#[test]
fn dist_requires_two_dictionaries() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = write_labeled_series(tmp.path(), 1, 300);
    let only_dir = tmp.path().join("one");
    {
        let mut args = dict_args(&manifest, &only_dir);
        args.size = Some(1);
        run_ok(Command::Dict(args));
        // the manifest held two series; drop one dictionary, keep the summary
        fs::remove_file(only_dir.join("c1s0.dict.json")).unwrap();
    }
    let err = run_err(Command::Dist(DistArgs {
        dict_dir: only_dir,
        out: tmp.path().join("m.csv"),
    }));
    assert!(err.to_string().contains("at least 2"), "{err}");
}

#[test]
fn yeh_dict_on_two_regime_series_has_two_patterns() {
    // bursts of two distinct templates separated by fresh noise; the greedy
    // builder must dedicate one pattern to each template
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let len = 64;
    let template_a: Vec<f64> = (0..len)
        .map(|i| (2.0 * std::f64::consts::PI * i as f64 / 16.0).sin())
        .collect();
    let template_b: Vec<f64> = (0..len)
        .map(|i| {
            let x = i as f64 / len as f64;
            8.0 * (x - 0.5).powi(2) - 1.0 + 0.6 * (2.0 * std::f64::consts::PI * x * 3.0).cos()
        })
        .collect();
    let mut values = Vec::new();
    let mut planted = Vec::new();
    for burst in 0..8 {
        let gap = rng.random_range(40..90);
        for _ in 0..gap {
            values.push(rng.random_range(-1.5..1.5));
        }
        let template = if burst % 2 == 0 { &template_a } else { &template_b };
        planted.push((values.len(), burst % 2));
        for &v in template {
            values.push(v + rng.random_range(-0.03..0.03));
        }
    }
    let tmp = tempfile::tempdir().unwrap();
    let series = prcis::TimeSeries::new("regimes", values).unwrap();
    prcis::save_series(&series, tmp.path().join("regimes.txt")).unwrap();
    fs::write(tmp.path().join("manifest.tsv"), "regimes.txt\tx\n").unwrap();

    let out = tmp.path().join("dicts");
    let mut args = dict_args(&tmp.path().join("manifest.tsv"), &out);
    args.size = Some(2);
    args.length = Some(len);
    run_ok(Command::Dict(args));

    let dict = prcis::Dictionary::load(out.join("regimes.dict.json")).unwrap();
    assert_eq!(dict.len(), 2, "one pattern per regime");
    let kinds: Vec<usize> = dict
        .patterns()
        .iter()
        .map(|p| {
            planted
                .iter()
                .find(|(at, _)| p.source_start().abs_diff(*at) <= 3)
                .unwrap_or_else(|| panic!("pattern at {} matches no planted burst", p.source_start()))
                .1
        })
        .collect();
    assert!(kinds.contains(&0) && kinds.contains(&1), "kinds: {kinds:?}");
}
