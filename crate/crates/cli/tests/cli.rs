use std::path::Path;
use std::process::Command;

use pbmin::commands::{run, Cli};
use pbmin::experiment::{heatmap, HeatmapConfig, Spacing};
use pbmin::io::{parse_dataset, write_dataset, Format};
use pbmin::model::ModelFile;
use pbmin::pipeline::{fit_pipeline, LearnerChoice, PipelineConfig};
use pbmin::synth::two_gaussian;
use pbmin_core::ensemble::child_rng;
use pbmin_core::predict::predict_all;
use pbmin_core::{pac_bayes_lambda_bound, BoundConfig64, LossProfile64, PosteriorWeights, PredictionMode};
use rand::Rng;

fn pbmin(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_pbmin")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap())
}

fn lib(args: &[&str]) -> String {
    use clap::Parser;
    let cli = Cli::try_parse_from(std::iter::once("pbmin").chain(args.iter().copied())).unwrap();
    let mut out = Vec::new();
    run(cli, &mut out).unwrap();
    String::from_utf8(out).unwrap()
}

fn value(text: &str, key: &str) -> String {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("no {key} in {text}"))
        .to_string()
}

fn write_synthetic(dir: &Path, name: &str, n: usize, seed: u64) -> String {
    let data = two_gaussian(n, 6, 1.0, &mut child_rng(seed, 0));
    let path = dir.join(name);
    write_dataset(&path, Format::Svmlight, &data).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn dataset_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = child_rng(1, 0);
    let points: Vec<Vec<f64>> = (0..100).map(|_| (0..4).map(|_| rng.random::<f64>() - 0.5).collect()).collect();
    let names: Vec<&str> = (0..100).map(|i| if i % 3 == 0 { "-1" } else { "+1" }).collect();
    let data = pbmin_core::Dataset64::from_named(points, &names).unwrap();
    for (format, file) in [(Format::Svmlight, "d.svm"), (Format::Csv, "d.csv")] {
        let path = dir.path().join(file);
        write_dataset(&path, format, &data).unwrap();
        assert_eq!(parse_dataset(&path, format).unwrap(), data);
    }
}

#[test]
fn train_is_deterministic_and_reloads_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let train = write_synthetic(dir.path(), "train.svm", 300, 2);
    let test = write_synthetic(dir.path(), "test.svm", 200, 3);
    let m1 = dir.path().join("a.json");
    let m2 = dir.path().join("b.json");
    let args = |out: &Path| {
        vec!["train", "--data", &train, "--m", "30", "--seed", "4", "--out"]
            .into_iter()
            .map(String::from)
            .chain([out.to_str().unwrap().to_string()])
            .collect::<Vec<_>>()
    };
    let a: Vec<String> = args(&m1);
    let (code, summary) = pbmin(&a.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(code, 0);
    let one_thread =
        Command::new(env!("CARGO_BIN_EXE_pbmin")).args(args(&m2)).env("PBMIN_THREADS", "1").output().unwrap();
    assert!(one_thread.status.success());
    assert_eq!(std::fs::read(&m1).unwrap(), std::fs::read(&m2).unwrap());
    let kl: f64 = value(&summary, "pb_kl_bound").parse().unwrap();
    let lambda_bound: f64 = value(&summary, "bound").parse().unwrap();
    assert!(kl <= lambda_bound);

    let model = ModelFile::load(&m1).unwrap();
    let (ens, rho) = model.ensemble().unwrap();
    let data = parse_dataset(Path::new(&train), Format::Svmlight).unwrap();
    let pc = PipelineConfig {
        m: 30,
        r: model.summary.r,
        delta: 0.05,
        seed: 4,
        learner: LearnerChoice::KernelPerceptron,
        gamma: None,
        epochs: pbmin_core::learners::DEFAULT_EPOCHS,
    };
    let fitted = fit_pipeline(&data, &pc).unwrap();
    let test_data = parse_dataset(Path::new(&test), Format::Svmlight).unwrap();
    for mode in [PredictionMode::Majority, PredictionMode::Randomized { seed: 5 }, PredictionMode::BestH] {
        assert_eq!(
            predict_all(&ens, &rho, mode, &test_data).unwrap(),
            predict_all(&fitted.ensemble, &fitted.trace.final_posterior, mode, &test_data).unwrap()
        );
    }
    let (code, out) = pbmin(&["predict", "--model", m1.to_str().unwrap(), "--data", &test]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().count(), 201);
    assert!(value(&out, "test_loss").parse::<f64>().unwrap() < 0.5);
}

#[test]
fn single_hypothesis_training_has_no_kl() {
    let data = two_gaussian(100, 3, 1.0, &mut child_rng(7, 0));
    let pc =
        PipelineConfig { m: 1, r: 10, delta: 0.05, seed: 1, learner: LearnerChoice::Stump, gamma: None, epochs: 1 };
    let f = fit_pipeline(&data, &pc).unwrap();
    assert_eq!(f.trace.last().kl, 0.0);
    assert_eq!(f.trace.final_posterior.weights(), &[1.0]);
}

#[test]
fn bound_command_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let losses = dir.path().join("l.txt");
    std::fs::write(&losses, "0\n0.5\n").unwrap();
    let out =
        lib(&["bound", "--losses", losses.to_str().unwrap(), "--n-eval", "100", "--delta", "0.01", "--lambda", "0.5"]);
    let p = LossProfile64::uniform(&[0.0, 0.5], 100).unwrap();
    let cfg = BoundConfig64::new(100, 0.01).unwrap();
    let expect = pac_bayes_lambda_bound(&p, &PosteriorWeights::prior(&p), 0.5, &cfg).unwrap().value;
    assert_eq!(value(&out, "bound").parse::<f64>().unwrap(), expect);
    assert!((expect - 0.536024).abs() < 1e-6);

    let out = lib(&["bound", "--losses", losses.to_str().unwrap(), "--n-eval", "100", "--delta", "0.01"]);
    let trace = pbmin_core::alternate_minimize(&p, &cfg).unwrap();
    assert_eq!(value(&out, "bound").parse::<f64>().unwrap(), trace.final_bound());
}

#[test]
fn scan_and_certify_examples() {
    let out = lib(&["scan", "--example", "two-minima", "--grid", "2000"]);
    assert!(out.lines().next().unwrap() == "lambda,F");
    assert_eq!(value(&out, "local_minima"), "2");

    let dir = tempfile::tempdir().unwrap();
    let losses = dir.path().join("one.txt");
    std::fs::write(&losses, "0.3\n").unwrap();
    let out = lib(&["certify", "--losses", losses.to_str().unwrap(), "--n-eval", "200"]);
    assert_eq!(value(&out, "verdict"), "certified");
    let out = lib(&["certify", "--losses", losses.to_str().unwrap(), "--n-eval", "5"]);
    assert_eq!(value(&out, "method"), "runtime_conditions");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let losses = dir.path().join("l.txt");
    std::fs::write(&losses, "0.1\n").unwrap();
    let l = losses.to_str().unwrap();
    assert_eq!(pbmin(&["--help"]).0, 0);
    assert_eq!(pbmin(&["frobnicate"]).0, 1);
    assert_eq!(pbmin(&["bound", "--losses", l]).0, 1);
    let bad = dir.path().join("bad.svm");
    std::fs::write(&bad, "1 1:0.5\n1 1:zz\n").unwrap();
    let m = dir.path().join("m.json");
    assert_eq!(pbmin(&["train", "--data", bad.to_str().unwrap(), "--m", "2", "--out", m.to_str().unwrap()]).0, 2);
    assert_eq!(pbmin(&["bound", "--losses", l, "--n-eval", "10", "--lambda", "2.5"]).0, 3);
    assert_eq!(pbmin(&["bound", "--losses", l, "--n-eval", "10", "--delta", "1.5"]).0, 3);
    let code = Command::new(env!("CARGO_BIN_EXE_pbmin"))
        .args(["bound", "--losses", l, "--n-eval", "10"])
        .env("PBMIN_THREADS", "zero")
        .status()
        .unwrap()
        .code();
    assert_eq!(code, Some(1));
}

#[test]
fn heatmap_shape() {
    let train = two_gaussian(80, 3, 1.0, &mut child_rng(11, 0));
    let test = two_gaussian(50, 3, 1.0, &mut child_rng(11, 1));
    let hc = HeatmapConfig {
        m_count: 20,
        r_count: 20,
        spacing: Spacing::Linear,
        r_max: None,
        delta: 0.05,
        seed: 3,
        learner: LearnerChoice::Stump,
        gamma: None,
        epochs: 1,
        baseline: Some(0.1),
    };
    let h = heatmap(&train, &test, &hc).unwrap();
    assert_eq!(h.cells.len(), 20);
    assert!(h.cells.iter().all(|row| row.len() == 20));
    assert_eq!(h.to_csv().lines().count(), 21);
    assert_eq!(h, heatmap(&train, &test, &hc).unwrap());
}

#[test]
fn compare_reports_every_mode() {
    let out = lib(&["experiment", "predictor-compare", "--n", "300", "--d", "4", "--m", "20", "--seed", "2"]);
    for mode in ["randomized", "randomized_expected", "majority", "uniform", "best_h"] {
        assert!(out.lines().any(|l| l.starts_with(&format!("{mode},"))), "{mode} missing");
    }
    assert!(value(&out, "mass50_count").parse::<usize>().unwrap() >= 1);
}
