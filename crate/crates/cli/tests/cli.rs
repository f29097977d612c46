use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use alphacast::eval::nmae;
use alphacast::traffic::{generate_synthetic, ingest_csv, IngestOptions, ScenarioSpec};
use alphacast::TrafficMatrix;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_alphacast"));
    c.env_remove("ALPHACAST_SEED");
    c
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = run(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    rdr.records().map(|r| r.unwrap().iter().map(str::to_string).collect()).collect()
}

fn column(rows: &[Vec<String>], i: usize) -> Vec<f64> {
    rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

fn generated(dir: &Path, extra: &[&str]) -> (PathBuf, PathBuf) {
    let mut args = vec!["generate", "-o", "t.csv", "--cells", "c.csv"];
    args.extend_from_slice(extra);
    ok(dir, &args);
    (dir.join("t.csv"), dir.join("c.csv"))
}

fn assert_single_line_error(o: &Output, code: i32, kind: &str) {
    assert_eq!(o.status.code(), Some(code), "{}", stderr(o));
    let err = stderr(o);
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");
    assert!(err.starts_with(&format!("error[{kind}]: ")), "{err}");
}

#[test]
fn help_and_version_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    let help = ok(dir.path(), &["--help"]);
    let text = String::from_utf8_lossy(&help.stdout);
    for sub in ["fit-stable", "generate", "predict", "eval", "sparsity", "--config"] {
        assert!(text.contains(sub), "{sub} missing from help");
    }
    let eval_help = String::from_utf8_lossy(&ok(dir.path(), &["eval", "--help"]).stdout).into_owned();
    for flag in ["--lambda1", "--sweep", "--timestamps", "--traffic", "--seed", "--set"] {
        assert!(eval_help.contains(flag), "{flag} missing from eval help");
    }
    ok(dir.path(), &["--version"]);
}

#[test]
fn generate_matches_library_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let (t, c) = generated(d, &["--scenario", "web", "--n-cells", "15", "--n-intervals", "60", "--seed", "8", "--wide", "w.csv"]);
    let back: TrafficMatrix = ingest_csv(&t, &c, &IngestOptions::default()).unwrap();
    let spec = ScenarioSpec { n_cells: 15, n_intervals: 60, ..ScenarioSpec::web() };
    let expected = generate_synthetic::<f64>(&spec, 8).unwrap().matrix;
    assert_eq!(back, expected);
    let first = std::fs::read(&t).unwrap();
    ok(d, &["generate", "-o", "t2.csv", "--cells", "c2.csv", "--scenario", "web", "--n-cells", "15", "--n-intervals", "60", "--seed", "8"]);
    assert_eq!(first, std::fs::read(d.join("t2.csv")).unwrap());
    ok(d, &["generate", "-o", "t3.csv", "--cells", "c3.csv", "--scenario", "web", "--n-cells", "15", "--n-intervals", "60", "--seed", "9"]);
    assert_ne!(first, std::fs::read(d.join("t3.csv")).unwrap());
    assert_eq!(read_csv(&d.join("w.csv")).len(), 15);
}

#[test]
fn generated_files_feed_fit_and_predict() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    generated(d, &["--n-cells", "25", "--n-intervals", "100"]);
    ok(d, &["fit-stable", "--traffic", "t.csv", "--cells", "c.csv", "-o", "fit.csv", "--json", "fit.json"]);
    assert_eq!(read_csv(&d.join("fit.csv")).len(), 26);
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(d.join("fit.json")).unwrap()).unwrap();
    assert!(json["pooled"]["params"]["alpha"].is_number());
    ok(d, &["predict", "--traffic", "t.csv", "--cells", "c.csv", "--method", "adm-lars", "-o", "p.csv"]);
    let rows = read_csv(&d.join("p.csv"));
    assert_eq!(rows.len(), 25);
    assert!(column(&rows, 2).iter().all(|v| v.is_finite() && *v >= 0.0));
}

#[test]
fn fit_stable_recovers_im_exponent_from_pooled_data() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["fit-stable", "-o", "fit.csv"]);
    let rows = read_csv(&dir.path().join("fit.csv"));
    let header = csv::Reader::from_path(dir.path().join("fit.csv")).unwrap().headers().unwrap().clone();
    assert_eq!(
        header.iter().collect::<Vec<_>>(),
        ["cell_id", "alpha", "beta", "sigma", "mu", "ks_stat", "ks_thresh", "psi_err", "estimator_used"]
    );
    let pooled = rows.iter().find(|r| r[0] == "(pooled)").unwrap();
    let alpha: f64 = pooled[1].parse().unwrap();
    assert!((alpha - 1.61).abs() <= 0.25, "{alpha}");
}

#[test]
fn fit_stable_threshold_for_672_video_intervals() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    generated(d, &["--scenario", "video", "--n-cells", "10", "--n-intervals", "672"]);
    ok(d, &["fit-stable", "--traffic", "t.csv", "--cells", "c.csv", "-o", "fit.csv"]);
    let rows = read_csv(&d.join("fit.csv"));
    for r in rows.iter().filter(|r| r[0] != "(pooled)") {
        let thresh: f64 = r[6].parse().unwrap();
        assert_eq!(format!("{thresh:.4}"), "0.0524");
    }
}

#[test]
fn empty_traffic_file_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    generated(d, &["--n-cells", "5", "--n-intervals", "10"]);
    std::fs::write(d.join("empty.csv"), "").unwrap();
    let o = run(d, &["fit-stable", "--traffic", "empty.csv", "--cells", "c.csv"]);
    assert_single_line_error(&o, 3, "data");
}

#[test]
fn mixed_services_need_a_filter() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("c.csv"), "cell_id,lat,lon\na,30.0,120.0\nb,30.1,120.1\nc,30.05,120.2\n").unwrap();
    let mut traffic = String::from("timestamp,cell_id,service,bytes\n");
    for t in 0..3 {
        for cell in ["a", "b", "c"] {
            traffic.push_str(&format!("{},{cell},IM,{}\n", 300 * t, 10 + t));
            traffic.push_str(&format!("{},{cell},video,{}\n", 300 * t, 100 + t));
        }
    }
    std::fs::write(d.join("t.csv"), traffic).unwrap();
    let o = run(d, &["sparsity", "--traffic", "t.csv", "--cells", "c.csv", "--timestamp", "1"]);
    assert_single_line_error(&o, 3, "data");
    let o = ok(d, &["sparsity", "--traffic", "t.csv", "--cells", "c.csv", "--timestamp", "1", "--service", "video"]);
    let rows: Vec<&str> = std::str::from_utf8(&o.stdout).unwrap().lines().collect();
    assert_eq!(rows[0], "cell_id,density,voronoi_area");
    assert_eq!(rows.len(), 4);
}

#[test]
fn linear_method_follows_an_ar1_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("c.csv"), "cell_id,lat,lon\na,30.0,120.0\nb,30.1,120.1\n").unwrap();
    let mut traffic = String::from("timestamp,cell_id,service,bytes\n");
    let (mut a, mut b) = (5000.0f64, 800.0f64);
    for t in 0..40 {
        traffic.push_str(&format!("{},a,IM,{a}\n{},b,IM,{b}\n", 300 * t, 300 * t));
        a *= 0.9;
        b *= 0.75;
    }
    std::fs::write(d.join("t.csv"), traffic).unwrap();
    ok(d, &[
        "predict", "--traffic", "t.csv", "--cells", "c.csv", "--method", "linear", "--n", "20", "--m", "1",
        "--alpha-source", "fixed", "--alpha", "1.5", "-o", "p.csv",
    ]);
    let rows = read_csv(&d.join("p.csv"));
    let (last_a, last_b) = (5000.0 * 0.9f64.powi(39), 800.0 * 0.75f64.powi(39));
    let p = column(&rows, 2);
    assert!((p[0] - 0.9 * last_a).abs() < 1e-6 * last_a, "{} vs {}", p[0], 0.9 * last_a);
    assert!((p[1] - 0.75 * last_b).abs() < 1e-6 * last_b, "{} vs {}", p[1], 0.75 * last_b);
}

#[test]
fn lars_and_omp_forecasts_agree_on_im() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let truth = generate_synthetic::<f64>(&ScenarioSpec::im(), 0).unwrap().matrix.column(144).to_vec();
    let score = |method: &str| {
        let out = format!("{method}.csv");
        ok(d, &["predict", "--method", method, "--t-end", "144", "-o", &out]);
        nmae(&column(&read_csv(&d.join(&out)), 2), &truth).unwrap()
    };
    let (lars, omp) = (score("adm-lars"), score("adm-omp"));
    assert!((lars - omp).abs() < 0.05, "lars {lars} omp {omp}");
}

#[test]
fn invalid_method_is_a_usage_error_listing_methods() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["predict", "--method", "magic"]);
    assert_single_line_error(&o, 2, "usage");
    for m in ["adm-lars", "adm-omp", "linear", "ls-ar"] {
        assert!(stderr(&o).contains(m));
    }
    std::fs::write(dir.path().join("run.conf"), "method = magic\n").unwrap();
    let o = run(dir.path(), &["predict", "--config", "run.conf"]);
    assert_single_line_error(&o, 2, "usage");
    assert!(stderr(&o).contains("ls-ar"), "{}", stderr(&o));
}

#[test]
fn config_errors_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("bad.conf"), "lambda3 = 1\n").unwrap();
    assert_single_line_error(&run(d, &["eval", "--config", "bad.conf"]), 2, "usage");
    std::fs::write(d.join("dup.conf"), "n = 20\nn = 30\n").unwrap();
    assert_single_line_error(&run(d, &["eval", "--config", "dup.conf"]), 2, "usage");
    assert_single_line_error(&run(d, &["eval", "--config", "missing.conf"]), 2, "usage");
    assert_single_line_error(&run(d, &["eval", "--set", "rho=0.5"]), 2, "usage");
    assert_single_line_error(&run(d, &["eval", "--lambda1", "abc"]), 2, "usage");
    assert_single_line_error(&run(d, &["sparsity", "--timestamp", "5000"]), 2, "usage");
}

fn eval_json(d: &Path, args: &[&str], env_seed: Option<&str>) -> serde_json::Value {
    let mut c = bin();
    c.current_dir(d).args(["eval", "--n-cells", "20", "--timestamps", "144", "--methods", "linear", "--json", "r.json"]);
    c.args(args);
    if let Some(s) = env_seed {
        c.env("ALPHACAST_SEED", s);
    }
    let o = c.output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    serde_json::from_slice(&std::fs::read(d.join("r.json")).unwrap()).unwrap()
}

#[test]
fn configuration_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("run.conf"), "# tuned\nseed = 5\nlambda1 = 2   # noise weight\nn = 30\n").unwrap();
    let r = eval_json(d, &["--config", "run.conf", "--n", "24"], Some("9"));
    assert_eq!(r["seed"], 5);
    assert_eq!(r["config"]["lambda1"], "2");
    assert_eq!(r["config"]["n"], "24");
    assert_eq!(eval_json(d, &[], Some("9"))["seed"], 9);
    assert_eq!(eval_json(d, &["--seed", "3"], Some("9"))["seed"], 3);
    assert_eq!(eval_json(d, &["--set", "seed=4", "--seed", "6"], None)["seed"], 6);
    assert_eq!(eval_json(d, &[], None)["seed"], 0);
}

#[test]
fn eval_report_echoes_config_and_per_cell_errors() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["eval", "--n-cells", "20", "--timestamps", "84,144", "-o", "r.csv", "--json", "r.json", "--errors", "e.csv"]);
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(d.join("r.json")).unwrap()).unwrap();
    let config = json["config"].as_object().unwrap();
    for key in ["lambda1", "lambda2", "eta0", "rho", "n", "m", "k", "alpha", "scenario", "n_cells", "seed", "timestamps"] {
        assert!(config.contains_key(key), "{key}");
    }
    assert_eq!(config["n_cells"], "20");
    let methods = json["mean_nmae"].as_object().unwrap();
    for key in ["adm_lars", "adm_omp", "linear_baseline", "ls_ar_baseline"] {
        assert!(methods[key].as_f64().unwrap() >= 0.0);
    }
    let results = json["results"].as_array().unwrap();
    assert_eq!(results.len(), 2);
    assert_eq!(results[0]["methods"][0]["abs_errors"].as_array().unwrap().len(), 20);
    assert_eq!(read_csv(&d.join("r.csv")).len(), 2 * 4 + 4);
    assert_eq!(read_csv(&d.join("e.csv")).len(), 2 * 4 * 20);
    let entries: Vec<_> = std::fs::read_dir(d).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(entries.len(), 3, "temporary files left behind: {entries:?}");
}

#[test]
fn eval_sweep_and_timing() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &[
        "eval", "--n-cells", "20", "--timestamps", "144", "--methods", "adm-omp,linear", "--sweep", "outer",
        "--sweep-values", "4,20", "--timing", "-o", "s.csv", "--json", "s.json",
    ]);
    let rows = read_csv(&d.join("s.csv"));
    assert_eq!(rows.len(), 2 * (2 + 2));
    assert!(rows.iter().all(|r| r[0] == "outer"));
    assert!(rows.iter().filter(|r| r[2] != "mean").all(|r| r[5].parse::<f64>().unwrap() >= 0.0));
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(d.join("s.json")).unwrap()).unwrap();
    assert_eq!(json["sweep"]["points"].as_array().unwrap().len(), 2);
    let bad = run(d, &["eval", "--sweep", "n", "--sweep-values", "2.5"]);
    assert_single_line_error(&bad, 2, "usage");
    let missing = run(d, &["eval", "--sweep", "n"]);
    assert_single_line_error(&missing, 2, "usage");
}

#[test]
fn sparsity_report_areas_and_gini() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = ok(d, &["sparsity", "--n-cells", "30", "--timestamp", "144", "-o", "s.csv", "--json", "s.json"]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    let gini: f64 = stdout.trim().strip_prefix("gini ").unwrap().parse().unwrap();
    assert!((0.0..=1.0).contains(&gini));
    let rows = read_csv(&d.join("s.csv"));
    assert_eq!(rows.len(), 30);
    assert!(column(&rows, 1).iter().all(|v| *v >= 0.0));
    assert!(column(&rows, 2).iter().all(|v| *v > 0.0));
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(d.join("s.json")).unwrap()).unwrap();
    assert!((json["gini"].as_f64().unwrap() - gini).abs() < 1e-15);
}
