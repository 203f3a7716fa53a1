use std::path::Path;

use serde_json::Value;

struct Output {
    code: u8,
    stdout: Vec<u8>,
    stderr: Vec<u8>,
}

impl Output {
    fn success(&self) -> bool {
        self.code == 0
    }
}

/// Runs the CLI in-process with file arguments resolved against `dir`.
fn spectral(dir: &Path, args: &[&str]) -> Output {
    let resolved = args.iter().map(|a| {
        if [".csv", ".json", ".bin"].iter().any(|ext| a.ends_with(ext)) {
            dir.join(a).into_os_string()
        } else {
            a.into()
        }
    });
    let (mut stdout, mut stderr) = (Vec::new(), Vec::new());
    let code = crate::run(std::iter::once("spectral".into()).chain(resolved), &mut stdout, &mut stderr);
    Output { code, stdout, stderr }
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

/// 40 samples over 64 points in a fresh directory.
fn small_dataset() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let out = spectral(dir.path(), &["synth", "--n", "40", "--dim", "64", "--seed", "7", "--out", "d.csv"]);
    assert!(out.success(), "{}", stderr(&out));
    dir
}

#[test]
fn synth_writes_csv_and_summary() {
    let dir = small_dataset();
    let csv = std::fs::read_to_string(dir.path().join("d.csv")).unwrap();
    assert_eq!(csv.lines().count(), 41);
    let summary: Value = serde_json::from_str(&stdout(&spectral(
        dir.path(),
        &["synth", "--n", "40", "--dim", "64", "--seed", "7", "--out", "e.csv"],
    )))
    .unwrap();
    assert_eq!(summary["samples"], 40);
    assert_eq!(summary["dimensions"], 64);
    assert_eq!(csv, std::fs::read_to_string(dir.path().join("e.csv")).unwrap());
}

#[test]
fn synth_rejects_zero_samples() {
    let dir = tempfile::tempdir().unwrap();
    let out = spectral(dir.path(), &["synth", "--n", "0", "--out", "d.csv"]);
    assert_eq!(out.code, 2);
    assert!(!dir.path().join("d.csv").exists());
}

#[test]
fn run_emits_report_schema() {
    let dir = small_dataset();
    let out = spectral(dir.path(), &["run", "--data", "d.csv", "--strategy", "Non>PLS", "--folds", "4", "--seed", "1"]);
    assert!(out.success(), "{}", stderr(&out));
    let report: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let keys: Vec<&str> = report.as_object().unwrap().keys().map(String::as_str).collect();
    for k in ["strategy", "folds", "seed", "per_fold_rmse", "rmsecv", "r2_mean", "std", "closeness_pct"] {
        assert!(keys.contains(&k), "missing {k}");
    }
    assert!(!keys.contains(&"ga_trace") && !keys.contains(&"nn_loss_trace"));
    assert_eq!(report["folds"], 4);
    assert_eq!(report["per_fold_rmse"].as_array().unwrap().len(), 4);
    let closeness = report["closeness_pct"].as_f64().unwrap();
    let ratio = 100.0 * report["rmsecv"].as_f64().unwrap() / report["std"].as_f64().unwrap();
    assert!((closeness - ratio).abs() < 1e-9);
}

#[test]
fn run_network_report_has_traces() {
    let dir = small_dataset();
    let out = spectral(
        dir.path(),
        &[
            "run", "--data", "d.csv", "--strategy", "SNV>WD(32)>GA(16)>MLP-CNN", "--seed", "2", "--epochs", "5",
            "--optimizer", "adam", "--mlp-widths", "4,4", "--conv-channels", "2,2", "--ga-population", "40",
            "--ga-generations", "2", "--ga-folds", "3",
        ],
    );
    assert!(out.success(), "{}", stderr(&out));
    let report: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["folds"], 5, "networks default to 5 folds");
    let ga = report["ga_trace"].as_array().unwrap();
    assert_eq!(ga.len(), 5);
    assert_eq!(ga[0].as_array().unwrap().len(), 2);
    let nn = report["nn_loss_trace"].as_array().unwrap();
    assert_eq!(nn.len(), 5);
    assert_eq!(nn[0].as_array().unwrap().len(), 6);
}

#[test]
fn bad_strategy_points_at_token() {
    let dir = small_dataset();
    let out = spectral(dir.path(), &["run", "--data", "d.csv", "--strategy", "SG>FOO>PLS"]);
    assert_eq!(out.code, 2);
    let err = stderr(&out);
    assert!(err.contains("FOO") && err.contains('^'), "{err}");
}

#[test]
fn missing_data_file_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = spectral(dir.path(), &["run", "--data", "nope.csv", "--strategy", "Non>PLS"]);
    assert_eq!(out.code, 1);
    assert!(stderr(&out).contains("nope.csv"));
}

#[test]
fn compare_table_rows_in_order() {
    let dir = small_dataset();
    let out = spectral(
        dir.path(),
        &["compare", "--data", "d.csv", "--strategy", "Non>PLS", "--strategy", "SG>SNV>PLS", "--folds", "4"],
    );
    assert!(out.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[0].starts_with("Strategy"));
    assert!(lines[2].starts_with("Non>PLS") && lines[3].starts_with("SG>SNV>PLS"));
    assert!(lines.iter().all(|l| l.len() == lines[0].len()), "columns not aligned:\n{text}");
}

#[test]
fn single_strategy_compare_matches_run() {
    let dir = small_dataset();
    let base = ["--data", "d.csv", "--strategy", "SG>MSC>PLS", "--folds", "4", "--seed", "3", "--format", "table"];
    let run = spectral(dir.path(), &[&["run"][..], &base].concat());
    let cmp = spectral(dir.path(), &[&["compare"][..], &base].concat());
    assert!(run.success() && cmp.success());
    assert_eq!(stdout(&run), stdout(&cmp));
}

#[test]
fn compare_records_failing_rows() {
    let dir = small_dataset();
    // 32 features do not wrap into a square map.
    let out = spectral(
        dir.path(),
        &["compare", "--data", "d.csv", "--strategy", "Non>PLS", "--strategy", "SNV>WD(32)>CNN", "--folds", "4", "--epochs", "2"],
    );
    assert_eq!(out.code, 1);
    let text = stdout(&out);
    assert!(text.lines().nth(2).unwrap().starts_with("Non>PLS"));
    assert!(text.contains("error:"), "{text}");
}

#[test]
fn anova_report_and_threshold_order() {
    let dir = small_dataset();
    let out = spectral(dir.path(), &["anova", "--data", "d.csv", "--repeats", "3", "--out", "a.json"]);
    assert!(out.success(), "{}", stderr(&out));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("a.json")).unwrap()).unwrap();
    let sizes: Vec<u64> = report["group_sizes"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).collect();
    assert_eq!(sizes.iter().sum::<u64>(), 40);
    assert_eq!(report["between"].as_array().unwrap().len(), 3);
    assert_eq!(report["within"].as_array().unwrap().len(), 3);

    let bad = spectral(dir.path(), &["anova", "--data", "d.csv", "--t1", "13.5", "--t2", "11.0"]);
    assert_eq!(bad.code, 2);
    let half = spectral(dir.path(), &["anova", "--data", "d.csv", "--t1", "11.0"]);
    assert_eq!(half.code, 2);
}

#[test]
fn fit_saves_loadable_parameters() {
    let dir = small_dataset();
    let out = spectral(
        dir.path(),
        &[
            "fit", "--data", "d.csv", "--strategy", "SNV>WD(16)>MLP", "--epochs", "10", "--mlp-widths", "4,3",
            "--params-out", "w.bin",
        ],
    );
    assert!(out.success(), "{}", stderr(&out));
    let summary: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let params = spectral_core::nn::load_params(dir.path().join("w.bin")).unwrap();
    assert_eq!(summary["parameters"].as_u64().unwrap() as usize, params.len());
    assert_eq!(params.arch().input_dim, 16);
    assert_eq!(params.arch().mlp_widths, vec![4, 3]);
}
