use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn conevol(dir: &Path, args: &[&str], config: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_conevol"));
    cmd.current_dir(dir)
        .args(args)
        .arg("--out")
        .arg(dir.join("out"));
    if let Some(text) = config {
        let path = dir.join("config.toml");
        fs::write(&path, text).unwrap();
        cmd.arg("--config").arg(path);
    }
    cmd.output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

const PERTURBED_TEN: &str = r#"
[corpus]
seed = 42
balls = { radii = [] }
perturbed = { count = 10 }
"#;

#[test]
fn corpus_generation_is_deterministic() {
    let t = TempDir::new().unwrap();
    let o = conevol(
        t.path(),
        &["gen-corpus", "--degree", "16"],
        Some(PERTURBED_TEN),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let manifest = t.path().join("out/corpus/manifest.json");
    let first = fs::read(&manifest).unwrap();
    assert_eq!(json(&manifest)["entries"].as_array().unwrap().len(), 10);
    assert_eq!(
        code(&conevol(
            t.path(),
            &["gen-corpus", "--degree", "16"],
            Some(PERTURBED_TEN)
        )),
        0
    );
    assert_eq!(fs::read(&manifest).unwrap(), first);
    let o = conevol(
        t.path(),
        &["gen-corpus", "--degree", "16", "--seed", "43"],
        Some(PERTURBED_TEN),
    );
    assert_eq!(code(&o), 0);
    assert_ne!(fs::read(&manifest).unwrap(), first);
}

#[test]
fn ellipse_family_has_positive_margins() {
    let t = TempDir::new().unwrap();
    let cfg = r#"
        dimension = 1
        [corpus]
        balls = { radii = [] }
        ellipsoids = { explicit = [[1.1, 1.0], [1.2, 1.0], [1.3, 1.0], [1.4, 1.0], [1.5, 1.0]] }
    "#;
    assert_eq!(code(&conevol(t.path(), &["gen-corpus"], Some(cfg))), 0);
    let m = json(&t.path().join("out/corpus/manifest.json"));
    let entries = m["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 5);
    assert!(entries.iter().all(|e| e["margin"].as_f64().unwrap() > 0.0));
}

#[test]
fn empty_corpus_is_fine() {
    let t = TempDir::new().unwrap();
    let cfg = "[corpus]\nballs = { radii = [] }\n";
    assert_eq!(code(&conevol(t.path(), &["gen-corpus"], Some(cfg))), 0);
    assert!(json(&t.path().join("out/corpus/manifest.json"))["entries"]
        .as_array()
        .unwrap()
        .is_empty());
    assert_eq!(code(&conevol(t.path(), &["verify"], Some(cfg))), 0);
}

#[test]
fn verify_unit_ball_passes() {
    let t = TempDir::new().unwrap();
    let cfg = "[corpus]\nballs = { radii = [1.0] }\n";
    for dim in ["1", "2"] {
        assert_eq!(
            code(&conevol(t.path(), &["gen-corpus", "--dim", dim], Some(cfg))),
            0
        );
        let o = conevol(t.path(), &["verify", "--dim", dim], Some(cfg));
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let rows = csv_rows(&t.path().join("out/verify.csv"));
        assert!(rows.iter().all(|r| r[6] != "false"));
    }
}

#[test]
fn verify_names_corrupt_file() {
    let t = TempDir::new().unwrap();
    assert_eq!(
        code(&conevol(t.path(), &["gen-corpus", "--degree", "8"], None)),
        0
    );
    let victim = t.path().join("out/corpus/perturbed-001.json");
    fs::write(&victim, "{\"format\": ").unwrap();
    let o = conevol(t.path(), &["verify"], None);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("perturbed-001.json"));

    let missing = TempDir::new().unwrap();
    let o = conevol(missing.path(), &["verify"], None);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("manifest.json"));
}

#[test]
fn verify_writes_one_row_per_applicable_check() {
    let t = TempDir::new().unwrap();
    assert_eq!(
        code(&conevol(t.path(), &["gen-corpus", "--seed", "5"], None)),
        0
    );
    let o = conevol(t.path(), &["verify"], None);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(t.path().join("out/verify.csv")).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "body_id,check,lhs,rhs,slack,tol,pass"
    );
    let checks = conevol::verify::SweepConfig::default().check_names(2).len();
    assert_eq!(text.lines().count() - 1, 20 * checks);
    let report = json(&t.path().join("out/verify.json"));
    assert_eq!(report["summary"]["failed"], 0);
    assert!(report["summary"]["alpha_hat_min"].as_f64().unwrap() > 0.0);

    let first = fs::read(t.path().join("out/verify.csv")).unwrap();
    assert_eq!(code(&conevol(t.path(), &["verify"], None)), 0);
    assert_eq!(fs::read(t.path().join("out/verify.csv")).unwrap(), first);
}

#[test]
fn verify_respects_check_selection() {
    let t = TempDir::new().unwrap();
    let cfg = "[verify]\nchecks = [\"poincare\", \"ibp-identity\"]\n";
    assert_eq!(
        code(&conevol(
            t.path(),
            &["gen-corpus", "--degree", "12"],
            Some(cfg)
        )),
        0
    );
    assert_eq!(code(&conevol(t.path(), &["verify"], Some(cfg))), 0);
    let rows = csv_rows(&t.path().join("out/verify.csv"));
    assert_eq!(rows.len(), 20 * 6);
    assert!(rows
        .iter()
        .all(|r| r[1] == "poincare" || r[1].starts_with("ibp-identity[")));
    let bad = conevol(
        t.path(),
        &["verify"],
        Some("[verify]\nchecks = [\"nope\"]\n"),
    );
    assert_eq!(code(&bad), 2);
}

#[test]
fn solve_ball_needs_no_iterations() {
    let t = TempDir::new().unwrap();
    let cfg = "[solve]\ninitial = { kind = \"ball\" }\n";
    let o = conevol(t.path(), &["solve", "--degree", "12"], Some(cfg));
    assert_eq!(code(&o), 0);
    let r = json(&t.path().join("out/solve.json"));
    assert_eq!(r["iterations"], 0);
    assert_eq!(r["converged"], true);
    assert_eq!(r["final"]["degree"], 12);
}

#[test]
fn solve_failure_still_writes_history() {
    let t = TempDir::new().unwrap();
    let cfg = r#"
        [solve]
        initial = { kind = "perturbed", terms = [[2, 2, 0.2]] }
        settings = { max_iterations = 1 }
    "#;
    let o = conevol(t.path(), &["solve", "--degree", "12"], Some(cfg));
    assert_eq!(code(&o), 1);
    let r = json(&t.path().join("out/solve.json"));
    assert_eq!(r["converged"], false);
    assert_eq!(r["failure"], "max-iterations");
    assert_eq!(r["history"].as_array().unwrap().len(), 2);
}

#[test]
fn solve_recovers_translated_ball() {
    let t = TempDir::new().unwrap();
    let cfg = r#"
        dimension = 1
        [solve]
        target = { kind = "linear", offset = [0.1, -0.05, 0.0] }
        initial = { kind = "ball" }
    "#;
    assert_eq!(
        code(&conevol(t.path(), &["solve", "--degree", "16"], Some(cfg))),
        0
    );
    let r = json(&t.path().join("out/solve.json"));
    let c: Vec<f64> = r["final"]["coefficients"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    // The solution is the unit ball translated by c; on S¹ the degree-1 coefficients of <c, x> have norm |c| √π.
    let expected = (0.1f64.powi(2) + 0.05f64.powi(2)).sqrt() * std::f64::consts::PI.sqrt();
    assert!(((c[1] * c[1] + c[2] * c[2]).sqrt() - expected).abs() < 1e-7);
    assert!((c[0] - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-7);
}

#[test]
fn probe_reports_all_pairs() {
    let t = TempDir::new().unwrap();
    let o = conevol(t.path(), &["probe-uniqueness", "--degree", "12"], None);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&t.path().join("out/probe.json"));
    assert_eq!(r["pairwise"].as_array().unwrap().len(), 3);
    assert_eq!(r["uniqueness_consistent"], true);
    assert!((r["target_deviation"].as_f64().unwrap() - 0.05).abs() < 1e-12);
}

#[test]
fn sweep_returns_to_the_ball() {
    let t = TempDir::new().unwrap();
    let o = conevol(t.path(), &["sweep", "--degree", "16"], None);
    assert_eq!(code(&o), 0);
    let rows = csv_rows(&t.path().join("out/sweep.csv"));
    assert_eq!(rows.len(), 5);
    for r in &rows {
        assert_eq!(r[2], "true");
        assert!(r[5].parse::<f64>().unwrap() <= 1e-6, "{r:?}");
    }
    // Exponents outside the range still get a row, with the reason.
    let o = conevol(t.path(), &["sweep", "--dim", "1"], None);
    assert_eq!(code(&o), 0);
    let rows = csv_rows(&t.path().join("out/sweep.csv"));
    assert_eq!(rows.len(), 5);
    assert_eq!(rows[0][2], "false");
    assert!(rows[0][6].contains("p = -2.5"), "{:?}", rows[0]);
}

#[test]
fn convergence_study_decreases() {
    let t = TempDir::new().unwrap();
    let o = conevol(t.path(), &["convergence-study", "--dim", "1"], None);
    assert_eq!(code(&o), 0);
    let rows = csv_rows(&t.path().join("out/convergence.csv"));
    let errors = |q: &str| -> Vec<f64> {
        rows.iter()
            .filter(|r| r[2] == q)
            .map(|r| r[5].parse().unwrap())
            .collect()
    };
    let curv = errors("curvature");
    assert_eq!(curv.len(), 3);
    assert!(curv[0] > curv[1] && curv[1] > curv[2]);
    let div = errors("divergence-identity");
    assert!(
        div[0] > div[1] && div[1] > div[2] && div[2] <= 1e-10,
        "{div:?}"
    );
    assert!(json(&t.path().join("out/convergence.json"))["non_monotone"]
        .as_array()
        .unwrap()
        .is_empty());

    let ball = "[convergence]\nsemiaxes = [1.0, 1.0, 1.0]\noffset = [0.0, 0.0, 0.0]\n";
    assert_eq!(
        code(&conevol(t.path(), &["convergence-study"], Some(ball))),
        0
    );
    let rows = csv_rows(&t.path().join("out/convergence.csv"));
    assert!(
        rows.iter().all(|r| r[5].parse::<f64>().unwrap() < 1e-10),
        "{rows:?}"
    );
}

#[test]
fn bad_configs_exit_with_two() {
    let t = TempDir::new().unwrap();
    assert_eq!(
        code(&conevol(t.path(), &["solve"], Some("dimenson = 1"))),
        2
    );
    assert_eq!(
        code(&conevol(t.path(), &["solve"], Some("schema_version = 9"))),
        2
    );
    assert_eq!(
        code(&conevol(t.path(), &["solve"], Some("[solve]\np = 1.5"))),
        2
    );
}
