use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eigenmotion"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    let mut full: Vec<&str> = args.to_vec();
    let out = dir.to_str().unwrap();
    full.extend(["--out", out]);
    run(&full)
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr_json(o: &Output) -> Value {
    let text = String::from_utf8_lossy(&o.stderr);
    let line = text.lines().last().expect("stderr has a line");
    serde_json::from_str(line).unwrap_or_else(|e| panic!("stderr `{line}` is not JSON: {e}"))
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

fn count_class(doc: &roxmltree::Document<'_>, class: &str) -> usize {
    doc.descendants().filter(|n| n.attribute("class") == Some(class)).count()
}

#[test]
fn single_step_gives_two_samples() {
    let dir = TempDir::new().unwrap();
    let svg = dir.path().join("plot.svg");
    let o = run_in(
        dir.path(),
        &["simulate", "--steps", "1", "--seed", "5", "--lines", "--svg", svg.to_str().unwrap()],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&dir.path().join("trajectory.csv"));
    assert_eq!(rows.len(), 2 * 16);
    let steps: Vec<&str> = rows.iter().map(|r| r[0].as_str()).collect();
    assert!(steps.iter().all(|s| *s == "0" || *s == "1"));

    let text = fs::read_to_string(&svg).unwrap();
    let doc = roxmltree::Document::parse(&text).unwrap();
    assert_eq!(count_class(&doc, "dot"), 2 * 16);
    assert_eq!(count_class(&doc, "track"), 16);
    for line in doc.descendants().filter(|n| n.attribute("class") == Some("track")) {
        assert_eq!(line.attribute("points").unwrap().split(' ').count(), 2);
    }
}

#[test]
fn interpolation_plot_layout() {
    let dir = TempDir::new().unwrap();
    let svg = dir.path().join("ex1.svg");
    let o = run_in(
        dir.path(),
        &[
            "simulate", "--path", "interp", "--m1", "antisym", "--m2", "hn:g=-0.4", "--n", "16", "--steps", "40",
            "--seed", "1", "--svg", svg.to_str().unwrap(),
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    let text = fs::read_to_string(&svg).unwrap();
    let doc = roxmltree::Document::parse(&text).expect("valid XML");
    assert_eq!(doc.root_element().tag_name().name(), "svg");
    assert_eq!(count_class(&doc, "dot"), 41 * 16);
    assert_eq!(count_class(&doc, "start"), 16);
    assert_eq!(count_class(&doc, "end"), 16);

    let fills: Vec<&str> = doc
        .descendants()
        .filter(|n| n.attribute("class") == Some("dot"))
        .map(|n| n.attribute("fill").unwrap())
        .collect();
    assert_eq!(fills[0], "rgb(255,255,255)");
    assert_eq!(*fills.last().unwrap(), "rgb(0,0,0)");
    for n in doc.descendants().filter(|n| n.attribute("class") == Some("start")) {
        assert_eq!(n.attribute("fill"), Some("rgb(220,0,0)"));
    }
    for n in doc.descendants().filter(|n| n.attribute("class") == Some("end")) {
        assert_eq!(n.tag_name().name(), "polygon");
        assert_eq!(n.attribute("fill"), Some("rgb(0,0,220)"));
    }

    // The antisymmetric start has a purely imaginary spectrum: all start
    // markers share one horizontal coordinate.
    let xs: Vec<&str> = doc
        .descendants()
        .filter(|n| n.attribute("class") == Some("start"))
        .map(|n| n.attribute("cx").unwrap())
        .collect();
    assert!(xs.iter().all(|x| *x == xs[0]));

    let rows = csv_rows(&dir.path().join("trajectory.csv"));
    for r in rows.iter().filter(|r| r[0] == "0") {
        assert!(r[3].parse::<f64>().unwrap().abs() < 1e-12);
    }
}

#[test]
fn outputs_are_deterministic() {
    let args = [
        "simulate", "--path", "perturb", "--m1", "orthogonal", "--m2", "ginibre", "--n", "12", "--tmax", "1.5",
        "--steps", "60", "--seed", "99", "--refine",
    ];
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    assert_eq!(code(&run_in(a.path(), &args)), 0);
    assert_eq!(code(&run_in(b.path(), &args)), 0);
    for f in ["trajectory.csv", "events.json"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }

    let expect = ["expect", "--n", "6", "--samples", "3000", "--seed", "4"];
    assert_eq!(code(&run_in(a.path(), &expect)), 0);
    assert_eq!(code(&run_in(b.path(), &[&expect[..], &["--threads", "1"]].concat())), 0);
    assert_eq!(
        fs::read(a.path().join("expect.json")).unwrap(),
        fs::read(b.path().join("expect.json")).unwrap()
    );
}

#[test]
fn omitted_seed_is_generated_and_reproducible() {
    let a = TempDir::new().unwrap();
    let o = run_in(a.path(), &["simulate", "--path", "drift", "--n", "5", "--steps", "5"]);
    assert_eq!(code(&o), 0);
    let err = String::from_utf8_lossy(&o.stderr);
    let echoed: u64 = err
        .lines()
        .find_map(|l| l.strip_prefix("seed: "))
        .expect("seed echoed")
        .parse()
        .unwrap();
    assert_eq!(read_json(&a.path().join("config.json"))["seed"], echoed);

    let b = TempDir::new().unwrap();
    let seed = echoed.to_string();
    let o = run_in(b.path(), &["simulate", "--path", "drift", "--n", "5", "--steps", "5", "--seed", &seed]);
    assert_eq!(code(&o), 0);
    assert!(o.stderr.is_empty());
    assert_eq!(
        fs::read(a.path().join("trajectory.csv")).unwrap(),
        fs::read(b.path().join("trajectory.csv")).unwrap()
    );
}

#[test]
fn flags_override_config_file() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"path": "drift", "n": 8, "steps": 4, "seed": 3, "tmax": 0.5}"#).unwrap();
    let out = dir.path().join("run");
    let o = run_in(&out, &["simulate", "--config", cfg.to_str().unwrap(), "--n", "6"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let resolved = read_json(&out.join("config.json"));
    assert_eq!(resolved["n"], 6);
    assert_eq!(resolved["steps"], 4);
    assert_eq!(resolved["seed"], 3);
    assert_eq!(resolved["path"], "drift");
    assert_eq!(resolved["tmax"], 0.5);
    assert_eq!(csv_rows(&out.join("trajectory.csv")).len(), 5 * 6);
}

#[test]
fn configuration_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"bogus": 1}"#).unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["simulate", "--config", bad.to_str().unwrap()],
        vec!["simulate", "--n", "1", "--seed", "1"],
        vec!["simulate", "--steps", "0", "--seed", "1"],
        vec!["simulate", "--m1", "hn:g=x", "--seed", "1"],
        vec!["simulate", "--path", "interp", "--tmax", "2", "--seed", "1"],
        vec!["simulate", "--path", "smoothed", "--epsilon", "0.2", "--seed", "1"],
        vec!["expect", "--impulse", "cauchy", "--seed", "1"],
    ];
    for args in cases {
        let o = run_in(dir.path(), &args);
        assert_eq!(code(&o), 2, "{args:?}");
        assert_eq!(stderr_json(&o)["error"], "config", "{args:?}");
    }
    assert_eq!(code(&run(&["simulate", "--path", "nowhere"])), 2);
}

#[test]
fn numerical_failure_exits_3_with_time() {
    let dir = TempDir::new().unwrap();
    // Halfway between HN(-g) and HN(g) the matrix is symmetric with double
    // eigenvalues.
    let o = run_in(
        dir.path(),
        &["forces", "--path", "interp", "--m1", "hn:g=-0.3", "--m2", "hn:g=0.3", "--t", "0.5", "--seed", "1"],
    );
    assert_eq!(code(&o), 3);
    let detail = stderr_json(&o);
    assert_eq!(detail["error"], "numerical");
    assert_eq!(detail["kind"], "DegenerateSpectrum");
    assert_eq!(detail["t"], 0.5);
    assert!(!dir.path().join("forces.json").exists());
}

#[test]
fn unwritable_output_fails_before_computing() {
    let dir = TempDir::new().unwrap();
    let file = dir.path().join("occupied");
    fs::write(&file, "x").unwrap();
    let target = file.join("sub");
    let o = run(&[
        "simulate", "--path", "hn-demo1", "--n", "64", "--seed", "1", "--out", target.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 2);
    assert!(o.stdout.is_empty());
    assert_eq!(stderr_json(&o)["error"], "io");
}

#[test]
fn forces_report_fields() {
    let dir = TempDir::new().unwrap();
    let o = run_in(dir.path(), &["forces", "--path", "hn-demo1", "--n", "8", "--t", "0.3", "--seed", "2"]);
    assert_eq!(code(&o), 0);
    let report = read_json(&dir.path().join("forces.json"));
    let records = report.as_array().unwrap();
    assert_eq!(records.len(), 8);
    for r in records {
        for key in ["lambda_re", "velocity_re", "inertial_re", "cc_re", "other_re", "total_re"] {
            assert!(r[key].is_number(), "{key}");
        }
        let total = r["total_re"].as_f64().unwrap();
        let parts = r["inertial_re"].as_f64().unwrap() + r["cc_re"].as_f64().unwrap() + r["other_re"].as_f64().unwrap();
        assert!((total - parts).abs() <= 1e-12 * total.abs().max(1.0));
    }
}

#[test]
fn expect_report_matches_monte_carlo() {
    let dir = TempDir::new().unwrap();
    let o = run_in(dir.path(), &["expect", "--n", "6", "--samples", "20000", "--seed", "11"]);
    assert_eq!(code(&o), 0);
    let report = read_json(&dir.path().join("expect.json"));
    let records = report.as_array().unwrap();
    assert_eq!(records.len(), 6);
    let mut worst: f64 = 0.0;
    for r in records {
        for key in [
            "lambda",
            "cc_expected",
            "other_expected",
            "sigma1_sq",
            "variance_breakdown",
            "mc_estimate",
            "mc_stderr",
            "n_samples",
        ] {
            assert!(r.get(key).is_some(), "missing {key}");
        }
        assert_eq!(r["n_samples"], 20000);
        let re = |v: &Value| v[0].as_f64().unwrap();
        let im = |v: &Value| v[1].as_f64().unwrap();
        let cc = &r["cc_expected"];
        let (cc_re, cc_im) = if cc.is_null() { (0.0, 0.0) } else { (re(cc), im(cc)) };
        let dx = re(&r["mc_estimate"]) - cc_re - re(&r["other_expected"]);
        let dy = im(&r["mc_estimate"]) - cc_im - im(&r["other_expected"]);
        worst = worst.max(dx.hypot(dy) / r["mc_stderr"].as_f64().unwrap());
    }
    assert!(worst < 5.0, "worst z {worst}");
}

#[test]
fn census_report() {
    let dir = TempDir::new().unwrap();
    let svg = dir.path().join("scatter.svg");
    let o = run_in(
        dir.path(),
        &["census", "--n", "10", "--samples", "500", "--seed", "3", "--svg", svg.to_str().unwrap()],
    );
    assert_eq!(code(&o), 0);
    let stats = read_json(&dir.path().join("census.json"));
    assert_eq!(stats["draws"], 500);
    let counts = stats["counts"].as_array().unwrap();
    assert_eq!(counts.len(), 500);
    assert!(counts.iter().all(|c| c.as_u64().unwrap() % 2 == 0));
    assert!(stats["mean"].as_f64().unwrap() > 0.0);

    let text = fs::read_to_string(&svg).unwrap();
    let doc = roxmltree::Document::parse(&text).unwrap();
    assert_eq!(count_class(&doc, "dot"), 500 * 10);
    // Points within 1e-9 of the real axis share the axis row.
    let axis_y: f64 = doc
        .descendants()
        .find(|n| n.attribute("class") == Some("axis") && n.attribute("y1") == n.attribute("y2"))
        .and_then(|n| n.attribute("y1"))
        .unwrap()
        .parse()
        .unwrap();
    let on_axis = doc
        .descendants()
        .filter(|n| n.attribute("class") == Some("dot"))
        .filter(|n| (n.attribute("cy").unwrap().parse::<f64>().unwrap() - axis_y).abs() < 0.01)
        .count();
    let total: u64 = counts.iter().map(|c| c.as_u64().unwrap()).sum();
    assert!(on_axis as u64 >= total);
}

#[test]
fn window_table() {
    let dir = TempDir::new().unwrap();
    let o = run_in(dir.path(), &["window", "--epsilon", "0.1", "--tmax", "1", "--spacing", "0.5", "--steps", "100"]);
    assert_eq!(code(&o), 0);
    let rows = csv_rows(&dir.path().join("window.csv"));
    // 101 points, the shared grid point at 0.5 listed for both intervals.
    assert_eq!(rows.len(), 102);
    for r in &rows {
        let t: f64 = r[0].parse().unwrap();
        let w: f64 = r[2].parse().unwrap();
        assert!((0.0..=1.0).contains(&w));
        let local = t - if r[1] == "0" { 0.0 } else { 0.5 };
        if (0.1..=0.4).contains(&local) {
            assert_eq!(w, 1.0);
        }
        if local.abs() < 1e-12 || (local - 0.5).abs() < 1e-12 {
            assert_eq!(w, 0.0);
        }
    }
}

#[test]
fn hatano_nelson_sweep() {
    let dir = TempDir::new().unwrap();
    let svg = dir.path().join("hn.svg");
    let o = run_in(dir.path(), &["hn", "--n", "12", "--g", "1", "--steps", "20", "--svg", svg.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let rows = csv_rows(&dir.path().join("hn.csv"));
    assert_eq!(rows.len(), 21 * 12);
    for r in rows.iter().filter(|r| r[0] == "0") {
        assert!(r[3].parse::<f64>().unwrap().abs() < 1e-10);
    }
    let text = fs::read_to_string(&svg).unwrap();
    let doc = roxmltree::Document::parse(&text).unwrap();
    assert_eq!(count_class(&doc, "dot"), 21 * 12);
}

#[test]
fn demo1_real_count_grows() {
    let dir = TempDir::new().unwrap();
    let o = run_in(
        dir.path(),
        &["simulate", "--path", "hn-demo1", "--n", "64", "--g", "0.2", "--tmax", "2", "--steps", "100", "--seed", "7"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("real 2 -> 26"), "{}", stdout(&o));
}
