use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const HEADER: &str = "experiment_id,group,delta_log2,n_a_cover,n_a_pack,n_aaa_cover,n_aaa_pack,tripling_ratio,away_score,sigma_est,lp_exponent,torus_exponent,wall_ms";

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_growthlab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn grow(dir: &Path, extra: &[&str]) -> String {
    let out = dir.to_str().unwrap();
    let mut args = vec!["grow", "--out", out];
    args.extend_from_slice(extra);
    let o = lab(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    fs::read_to_string(dir.join("report.csv")).unwrap()
}

#[test]
fn csv_header_is_exact() {
    let t = tempfile::tempdir().unwrap();
    let csv = grow(t.path(), &["--generator", "torus_net", "--delta-log2", "-7"]);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(HEADER));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row.len(), 13);
    assert_eq!(row[2], "-7");
    assert!(lines.next().is_none());
}

#[test]
fn identical_configs_give_identical_csv() {
    let t = tempfile::tempdir().unwrap();
    let args = ["--generator", "word_ball", "--delta-log2", "-7", "--seed", "11"];
    let a = grow(&t.path().join("a"), &args);
    let b = grow(&t.path().join("b"), &args);
    assert_eq!(a, b);
    let c = grow(&t.path().join("c"), &["--generator", "word_ball", "--delta-log2", "-7", "--seed", "12"]);
    assert_ne!(a, c);
}

#[test]
fn report_recomputes_from_saved_net_and_config() {
    let t = tempfile::tempdir().unwrap();
    let dir = t.path().join("run");
    let csv = grow(&dir, &["--generator", "cantor_net", "--delta-log2", "-7"]);
    let o = lab(&["report", dir.to_str().unwrap()]);
    assert!(o.status.success());
    let again = String::from_utf8(o.stdout).unwrap();
    let row = |t: &str| -> Vec<String> { t.lines().nth(1).unwrap().split(',').map(String::from).collect() };
    let (a, b) = (row(&csv), row(&again));
    // Counts and labels exactly; floats up to the rounding of the matrix entries.
    for i in [0, 1, 2, 3, 4, 5, 6, 12] {
        assert_eq!(a[i], b[i], "column {i}");
    }
    for i in 7..12 {
        let (x, y): (f64, f64) = (a[i].parse().unwrap(), b[i].parse().unwrap());
        assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0), "column {i}: {x} vs {y}");
    }
}

#[test]
fn config_file_is_read_and_flags_override_it() {
    let t = tempfile::tempdir().unwrap();
    let cfg = t.path().join("exp.cfg");
    fs::write(&cfg, "# torus run\ngenerator = torus_net\ndelta_log2 = -6\nstages = products\n").unwrap();
    let csv = grow(&t.path().join("out"), &["--config", cfg.to_str().unwrap(), "--delta-log2", "-7"]);
    let row: Vec<String> = csv.lines().nth(1).unwrap().split(',').map(String::from).collect();
    assert_eq!(row[2], "-7");
    assert_eq!(row[10], "NaN");
    let saved = fs::read_to_string(t.path().join("out/config.txt")).unwrap();
    assert!(saved.contains("generator = torus_net"));
}

#[test]
fn bad_configs_exit_nonzero() {
    let t = tempfile::tempdir().unwrap();
    let cfg = t.path().join("bad.cfg");
    fs::write(&cfg, "colour = blue\n").unwrap();
    let o = lab(&["gen", "--config", cfg.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown key"));

    assert!(!lab(&["gen", "--delta-log2", "-2"]).status.success());
    assert!(!lab(&["gen", "--group", "su2", "--generator", "nilpotent_net"]).status.success());
}

#[test]
fn missing_regular_element_is_not_an_error() {
    let t = tempfile::tempdir().unwrap();
    let csv = grow(t.path(), &["--generator", "nilpotent_net", "--delta-log2", "-6"]);
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[11], "NaN");
    let txt = fs::read_to_string(t.path().join("report.txt")).unwrap();
    assert!(txt.contains("rich_torus.status: no regular element"));
}

#[test]
fn product_budget_names_the_stage() {
    let o = lab(&["grow", "--set", "max_products=5", "--delta-log2", "-6"]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("stage products") && err.contains("budget"), "{err}");
}

#[test]
fn diagnostic_subcommands_run() {
    for args in [
        vec!["escape", "--generator", "word_ball", "--delta-log2", "-6"],
        vec!["torus", "--generator", "torus_net", "--delta-log2", "-6", "--samples", "200"],
        vec!["audit", "--rho", "0.2", "--samples", "200"],
        vec!["descend", "--generator", "torus_net", "--delta-log2", "-6"],
    ] {
        let o = lab(&args);
        assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        let text = String::from_utf8(o.stdout).unwrap();
        assert!(text.lines().all(|l| l.contains(": ")), "{text}");
    }
}

#[test]
fn gen_writes_a_readable_net() {
    let t = tempfile::tempdir().unwrap();
    let o = lab(&["gen", "--generator", "ball_net", "--delta-log2", "-6", "--out", t.path().to_str().unwrap()]);
    assert!(o.status.success());
    let net = t.path().join("set.net");
    let o = lab(&["escape", "--net", net.to_str().unwrap()]);
    assert!(o.status.success());
}
