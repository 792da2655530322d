use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use retest_core::evaluation::{write_evaluation, EvaluationConfig};
use retest_core::records::{write_labels, write_records, RecordFormat};
use retest_core::report::{read_json, write_json};
use retest_core::simlab::experiment::Manifest;
use retest_core::simlab::sweep::write_sweep_csv;
use retest_core::simlab::{
    generate_cohort, mc_sweep, predict_records, simulate, CohortConfig, ExperimentConfig, MlpConfig, MlpModel,
    Optimizer, Split,
};
use retest_core::{compare_reports, evaluate, EvaluationReport, HeadKind, Inference};

fn retest(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_retest"))
        .args(args)
        .env_clear()
        .output()
        .expect("run retest")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Records of an untrained dropout model on a small cohort: 20 MC rows plus
/// a deterministic row per image.
fn fixture(dir: &Path) -> (PathBuf, PathBuf) {
    let cohort = generate_cohort(&CohortConfig {
        n_subjects: 60,
        ..CohortConfig::with_classes(3)
    })
    .unwrap();
    let head = HeadKind::MultiClass(3);
    let model = MlpModel::new(
        &MlpConfig {
            input_dim: 16,
            hidden: vec![12],
            dropout_rate: 0.3,
            seed: 5,
        },
        head,
    )
    .unwrap();
    let records = predict_records(&model, &cohort, Split::Test, 20, 11, true).unwrap();
    let (rp, lp) = (dir.join("records.csv"), dir.join("labels.csv"));
    write_records(&rp, RecordFormat::Csv, &records).unwrap();
    write_labels(&lp, &cohort.labels(Split::Test, head)).unwrap();
    (rp, lp)
}

fn read_tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().replace('\\', "/");
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

#[test]
fn evaluate_matches_the_library_and_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let (rp, lp) = fixture(tmp.path());
    let run = |out: &Path| {
        ok(&retest(&[
            "evaluate",
            "--predictions",
            s(&rp),
            "--labels",
            s(&lp),
            "--n-mc",
            "20",
            "--bootstrap-iters",
            "60",
            "--seed",
            "4",
            "--out",
            s(out),
        ]))
    };
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    run(&a);
    run(&b);
    assert_eq!(read_tree(&a), read_tree(&b));

    let records = retest_core::load_records(&rp, RecordFormat::Csv).unwrap();
    let labels = retest_core::load_labels(&lp).unwrap();
    let lib = tmp.path().join("lib");
    let evaluation = evaluate(
        &records,
        &labels,
        &EvaluationConfig {
            inference: Inference::MonteCarlo(20),
            bootstrap_iterations: 60,
            seed: 4,
            ..EvaluationConfig::default()
        },
    )
    .unwrap();
    write_evaluation(&lib, &evaluation).unwrap();
    let cli_tree = read_tree(&a);
    assert_eq!(cli_tree, read_tree(&lib));
    assert_eq!(cli_tree.len(), 3);
}

#[test]
fn compare_and_sweep_match_the_library() {
    let tmp = tempfile::tempdir().unwrap();
    let (rp, lp) = fixture(tmp.path());
    let eval = |extra: &[&str], out: &Path| {
        let mut args = vec!["evaluate", "--predictions", s(&rp), "--labels", s(&lp), "--bootstrap-iters", "40"];
        args.extend_from_slice(extra);
        args.extend_from_slice(&["--seed", "2", "--out", s(out)]);
        ok(&retest(&args));
    };
    let (mc, det) = (tmp.path().join("mc"), tmp.path().join("det"));
    eval(&["--n-mc", "20"], &mc);
    eval(&["--deterministic"], &det);

    let cmp = tmp.path().join("cmp.json");
    ok(&retest(&["compare", s(&mc.join("report.json")), s(&det.join("report.json")), "--out", s(&cmp)]));
    let ra: EvaluationReport = read_json(mc.join("report.json")).unwrap();
    let rb: EvaluationReport = read_json(det.join("report.json")).unwrap();
    let lib_cmp = tmp.path().join("lib_cmp.json");
    write_json(&lib_cmp, &compare_reports(&ra, &rb).unwrap()).unwrap();
    assert_eq!(std::fs::read(&cmp).unwrap(), std::fs::read(&lib_cmp).unwrap());

    // A report against itself: every p-value is 1.
    let same = tmp.path().join("same.json");
    ok(&retest(&["compare", s(&mc.join("report.json")), s(&mc.join("report.json")), "--out", s(&same)]));
    let text = std::fs::read_to_string(&same).unwrap();
    assert_eq!(text.matches("\"p_value\": 1").count(), 5, "{text}");

    let sweep = tmp.path().join("out/sweep.csv");
    ok(&retest(&["sweep", "--predictions", s(&rp), "--labels", s(&lp), "--ns", "1,5,20", "--out", s(&sweep)]));
    let records = retest_core::load_records(&rp, RecordFormat::Csv).unwrap();
    let labels = retest_core::load_labels(&lp).unwrap();
    let lib_sweep = tmp.path().join("lib_sweep.csv");
    write_sweep_csv(&lib_sweep, &mc_sweep(&records, &labels, &[1, 5, 20]).unwrap()).unwrap();
    let text = std::fs::read_to_string(&sweep).unwrap();
    assert_eq!(text, std::fs::read_to_string(&lib_sweep).unwrap());
    assert_eq!(text.lines().count(), 5);
}

fn tiny_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::with_classes(3);
    cfg.cohort.n_subjects = 60;
    cfg.heads = vec!["binary".into(), "ordinal".into()];
    cfg.optimizer = Optimizer {
        epochs: 3,
        ..Optimizer::default()
    };
    cfg.n_mc = 10;
    cfg.sweep = vec![1, 5, 10];
    cfg.bootstrap_iterations = 30;
    cfg
}

#[test]
fn simulate_is_reproducible_and_complete() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("config.json");
    write_json(&config, &tiny_config()).unwrap();
    let run = |out: &Path| {
        let o = retest(&["simulate", "--config", s(&config), "--seed", "7", "--out", s(out)]);
        ok(&o);
        String::from_utf8(o.stdout).unwrap()
    };
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let (sa, sb) = (run(&a), run(&b));
    assert_eq!(sa.lines().last(), sb.lines().last(), "manifest hashes differ");
    let tree = read_tree(&a);
    assert_eq!(tree, read_tree(&b));

    let manifest: Manifest = read_json(a.join("manifest.json")).unwrap();
    let listed: Vec<&str> = manifest.files.iter().map(|f| f.path.as_str()).collect();
    let on_disk: Vec<&str> = tree.keys().map(String::as_str).filter(|k| *k != "manifest.json").collect();
    let mut listed_sorted = listed.clone();
    listed_sorted.sort_unstable();
    assert_eq!(listed_sorted, on_disk);
    assert_eq!(manifest.tasks.len(), 2);

    let lib = tmp.path().join("lib");
    simulate(&tiny_config(), &lib).unwrap();
    assert_eq!(read_tree(&lib), tree);
}

#[test]
fn errors_are_single_coded_lines() {
    let tmp = tempfile::tempdir().unwrap();
    let (rp, lp) = fixture(tmp.path());
    let out = tmp.path().join("o");
    let o = retest(&[
        "evaluate",
        "--predictions",
        s(&rp),
        "--labels",
        s(&lp),
        "--n-mc",
        "21",
        "--seed",
        "1",
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8(o.stderr).unwrap();
    assert_eq!(err.lines().count(), 1);
    assert!(err.starts_with("error[insufficient_samples]: "), "{err}");

    let empty_labels = tmp.path().join("empty.csv");
    std::fs::write(&empty_labels, "subject_id,session_id,image_id,label\n").unwrap();
    let o = retest(&["sweep", "--predictions", s(&rp), "--labels", s(&empty_labels), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8(o.stderr).unwrap().starts_with("error[missing_labels]: "));

    let o = retest(&["evaluate", "--labels", s(&lp)]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8(o.stderr).unwrap();
    assert_eq!(err.lines().count(), 1);
    assert!(err.starts_with("error[usage]: "), "{err}");
}

#[test]
fn environment_overrides_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let (rp, lp) = fixture(tmp.path());
    let out = tmp.path().join("env");
    let o = Command::new(env!("CARGO_BIN_EXE_retest"))
        .args(["evaluate", "--n-mc", "20"])
        .env_clear()
        .env("RETEST_PREDICTIONS", &rp)
        .env("RETEST_LABELS", &lp)
        .env("RETEST_SEED", "4")
        .env("RETEST_BOOTSTRAP_ITERS", "60")
        .env("RETEST_OUT", &out)
        .output()
        .unwrap();
    ok(&o);
    let flags = tmp.path().join("flags");
    ok(&retest(&[
        "evaluate",
        "--predictions",
        s(&rp),
        "--labels",
        s(&lp),
        "--n-mc",
        "20",
        "--bootstrap-iters",
        "60",
        "--seed",
        "4",
        "--out",
        s(&flags),
    ]));
    assert_eq!(read_tree(&out), read_tree(&flags));
}
