use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;
use trboost::engine::{evaluate, fit, write_report};
use trboost::{load_csv, model, BaselineKind, BoostConfig, LabelColumn, LossKind};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trboost"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Fixture {
    dir: TempDir,
}

impl Fixture {
    fn new() -> Self {
        Fixture {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn generate(&self, kind: &str, name: &str, n: &str) -> PathBuf {
        let p = self.path(name);
        ok(&["generate", kind, "--n", n, "--dims", "3", "--seed", "5", "--out", s(&p)]);
        p
    }
}

#[test]
fn newton_on_l1_reports_missing_curvature() {
    let f = Fixture::new();
    let data = f.generate("noisy-regression", "r.csv", "100");
    let out = run(&[
        "train",
        "--data",
        s(&data),
        "--loss",
        "l1",
        "--baseline",
        "newton",
        "--out",
        s(&f.path("m.json")),
    ]);
    assert_eq!(out.status.code(), Some(4));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("Hessian not positive"), "{err}");
    assert_eq!(err.lines().count(), 1);
}

#[test]
fn cli_model_matches_library_model() {
    let f = Fixture::new();
    let data = f.generate("two-gaussians", "g.csv", "200");
    let m = f.path("m.json");
    let report = ok(&[
        "train",
        "--data",
        s(&data),
        "--loss",
        "logloss",
        "--estimators",
        "12",
        "--alpha",
        "0.5",
        "--out",
        s(&m),
    ]);

    let ds = load_csv(&data, &LabelColumn::Name("y".into()), true).unwrap();
    let cfg = BoostConfig {
        loss: LossKind::Logistic,
        n_estimators: 12,
        alpha: 0.5,
        ..BoostConfig::default()
    };
    let api = fit(&ds, BaselineKind::TrBoost, &cfg).unwrap();
    assert_eq!(
        std::fs::read_to_string(&m).unwrap(),
        model::to_string(&api).unwrap() + "\n"
    );

    let mut expected = Vec::new();
    write_report(&evaluate(&api, &ds).unwrap(), &mut expected).unwrap();
    let expected = String::from_utf8(expected).unwrap();
    assert_eq!(report, expected);
    assert_eq!(ok(&["evaluate", "--model", s(&m), "--data", s(&data)]), expected);

    let preds = ok(&["predict", "--model", s(&m), "--data", s(&data), "--label", "y"]);
    let raw = api.predict(&ds.features).unwrap();
    let parsed: Vec<f64> = preds.lines().map(|l| l.parse().unwrap()).collect();
    assert_eq!(parsed.len(), raw.len());
    assert!(parsed.iter().zip(&raw).all(|(a, b)| a.to_bits() == b.to_bits()));

    let proba = ok(&[
        "predict",
        "--model",
        s(&m),
        "--data",
        s(&data),
        "--label",
        "y",
        "--proba",
    ]);
    assert!(proba.lines().all(|l| (0.0..=1.0).contains(&l.parse::<f64>().unwrap())));
}

#[test]
fn curves_have_one_row_per_iteration() {
    let f = Fixture::new();
    let data = f.generate("noisy-regression", "r.csv", "120");
    let test = f.generate("noisy-regression", "t.csv", "40");
    let curves = f.path("c.csv");
    ok(&[
        "train",
        "--data",
        s(&data),
        "--test-data",
        s(&test),
        "--estimators",
        "17",
        "--out",
        s(&f.path("m.json")),
        "--curves-out",
        s(&curves),
    ]);
    let text = std::fs::read_to_string(&curves).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("iteration,train_loss,val_metric,rho,admitted,mu_or_alpha,beta")
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 17);
    assert!(rows
        .iter()
        .all(|r| r.split(',').count() == 7 && !r.split(',').nth(2).unwrap().is_empty()));
}

#[test]
fn single_class_auc_is_undefined() {
    let f = Fixture::new();
    let data = f.generate("two-gaussians", "g.csv", "40");
    let m = f.path("m.json");
    ok(&[
        "train",
        "--data",
        s(&data),
        "--loss",
        "logloss",
        "--estimators",
        "3",
        "--out",
        s(&m),
    ]);
    let text = std::fs::read_to_string(&data).unwrap();
    let mut lines = text.lines();
    let mut one = format!("{}\n", lines.next().unwrap());
    for l in lines {
        let (features, _) = l.rsplit_once(',').unwrap();
        one.push_str(&format!("{features},1\n"));
    }
    let single = f.path("one.csv");
    std::fs::write(&single, one).unwrap();
    let out = run(&["evaluate", "--model", s(&m), "--data", s(&single)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("AUC undefined"));
}

#[test]
fn training_is_deterministic() {
    let f = Fixture::new();
    let data = f.generate("noisy-regression", "r.csv", "150");
    let (a, b) = (f.path("a.json"), f.path("b.json"));
    for (out, extra) in [(&a, "--sequential"), (&b, "--seed=0")] {
        ok(&[
            "train",
            "--data",
            s(&data),
            "--loss",
            "huber:0.5",
            "--estimators",
            "15",
            extra,
            "--out",
            s(out),
        ]);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let again = f.path("r2.csv");
    ok(&[
        "generate",
        "noisy-regression",
        "--n",
        "150",
        "--dims",
        "3",
        "--seed",
        "5",
        "--out",
        s(&again),
    ]);
    assert_eq!(std::fs::read(&data).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn single_point_grid_equals_train() {
    let f = Fixture::new();
    let data = f.generate("noisy-regression", "r.csv", "100");
    let (t, g) = (f.path("t.json"), f.path("g.json"));
    let common = ["--data", s(&data), "--loss", "l1", "--estimators", "8", "--alpha", "1"];
    ok(&[&["train"], &common[..], &["--out", s(&t)]].concat());
    let table = ok(&[&["grid"], &common[..], &["--out", s(&g)]].concat());
    assert_eq!(std::fs::read(&t).unwrap(), std::fs::read(&g).unwrap());
    assert_eq!(table.lines().next(), Some("alpha,estimators,loss"));
    assert_eq!(table.lines().count(), 2);
}

#[test]
fn grid_accepts_lists_and_logs_ties() {
    let f = Fixture::new();
    let data = f.generate("noisy-regression", "r.csv", "100");
    let out = run(&["grid", "--data", s(&data), "--estimators", "4", "--eta", "0,0.01,0.1"]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 4);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("best: estimators=4 eta=0"), "{err}");
}

#[test]
fn usage_and_data_errors_have_distinct_codes() {
    let f = Fixture::new();
    let data = f.generate("noisy-regression", "r.csv", "50");
    let m = f.path("m.json");
    assert_eq!(
        run(&["train", "--data", s(&data), "--loss", "bogus", "--out", s(&m)])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["train", "--data", s(&data), "--alpha", "1,2", "--out", s(&m)])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["train", "--data", s(&f.path("missing.csv")), "--out", s(&m)])
            .status
            .code(),
        Some(3)
    );
    assert_eq!(
        run(&["train", "--data", s(&data), "--eta", "0.95", "--out", s(&m)])
            .status
            .code(),
        Some(3)
    );

    ok(&["train", "--data", s(&data), "--estimators", "2", "--out", s(&m)]);
    let wide = f.path("wide.csv");
    std::fs::write(&wide, "a,b\n1,2\n").unwrap();
    let out = run(&["predict", "--model", s(&m), "--data", s(&wide)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("features"));
}

#[test]
fn converge_emits_trace_and_verdicts() {
    let out = run(&["converge", "--loss", "l1", "--mu", "10", "--iters", "9"]);
    assert!(out.status.success());
    let trace = String::from_utf8(out.stdout).unwrap();
    assert_eq!(trace.lines().next(), Some("iteration,loss"));
    assert_eq!(trace.lines().count(), 11);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("sublinear: PASS"), "{err}");

    let out = run(&["converge", "--loss", "l1", "--method", "newton"]);
    assert_eq!(out.status.code(), Some(4));
}
