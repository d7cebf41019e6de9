use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_manifold-prox");

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn cmd(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN).args(args).current_dir(dir).env_remove("MANIFOLD_PROX_SEED").output().unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run_config(dir: &Path, text: &str) -> Output {
    let p = write_config(dir, "run.conf", text);
    cmd(dir, &["run", p.to_str().unwrap()])
}

fn summary(dir: &Path, name: &str) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join(name)).unwrap()).unwrap()
}

#[test]
fn example_one_config_converges_with_trace_and_summary() {
    let dir = TempDir::new().unwrap();
    let conf = configs_dir().join("example1.conf");
    let out = cmd(dir.path(), &["run", conf.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let s = summary(dir.path(), "example1_summary.json");
    assert_eq!(s["verdict"], "converged_stationary");
    assert!((s["final_point"][0].as_f64().unwrap() - 1.0).abs() <= 1e-6);
    assert!(s["final_f"].as_f64().unwrap() <= 1e-9);
    assert_eq!(s["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(s["config"]["problem"], "example1");
    assert!(s["level_entry"].as_u64().is_some());

    let trace = std::fs::read_to_string(dir.path().join("example1_trace.csv")).unwrap();
    let mut lines = trace.lines();
    assert_eq!(lines.next(), Some("k,f,step_dist,lambda,kkt_residual,stationarity,inner_iters"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len() as u64, s["iterations"].as_u64().unwrap());
    for (i, row) in rows.iter().enumerate() {
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!(cols.len(), 7);
        assert_eq!(cols[0], (i + 1).to_string());
        for c in &cols[1..6] {
            let mantissa = c.split('e').next().unwrap().trim_start_matches('-');
            assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17, "{c}");
            c.parse::<f64>().unwrap();
        }
        cols[6].parse::<usize>().unwrap();
    }
    assert!(!trace.contains('\r'));
}

#[test]
fn summary_is_byte_stable() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let conf = configs_dir().join("example2.conf");
    for d in [&a, &b] {
        let out = cmd(d.path(), &["run", conf.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for f in ["example2_summary.json", "example2_trace.csv"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap());
    }
    let s = summary(a.path(), "example2_summary.json");
    let x: Vec<f64> = s["final_point"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    let off: f64 = (0..3)
        .flat_map(|i| (0..3).map(move |j| (i, j)))
        .map(|(i, j)| {
            let target = if i == j { 1.0 } else { 0.0 };
            (x[i * 3 + j] - target).abs()
        })
        .fold(0.0, f64::max);
    assert!(off < 1e-4);
}

#[test]
fn seed_environment_variable_overrides_config() {
    let dir = TempDir::new().unwrap();
    let text =
        "problem = example2\nstart.random.scale = 0.3\nseed = 1\nsolver.max_outer = 1\noutput.summary = s.json\n";
    let p = write_config(dir.path(), "seeded.conf", text);
    let run = |seed: Option<&str>| {
        let mut c = Command::new(BIN);
        c.args(["run", p.to_str().unwrap()]).current_dir(dir.path()).env_remove("MANIFOLD_PROX_SEED");
        if let Some(s) = seed {
            c.env("MANIFOLD_PROX_SEED", s);
        }
        let out = c.output().unwrap();
        assert!(matches!(out.status.code(), Some(0 | 2)));
        summary(dir.path(), "s.json")
    };
    let base = run(None);
    let same = run(Some("1"));
    let other = run(Some("2"));
    assert_eq!(base["start_f"], same["start_f"]);
    assert_ne!(base["start_f"], other["start_f"]);
    assert_eq!(other["config"]["seed"], "2");
}

#[test]
fn lambda_below_lipschitz_bound_exits_3() {
    let dir = TempDir::new().unwrap();
    let out = run_config(dir.path(), "problem = example1\nstart = 0.5\nsolver.lambda = 0.1\n");
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("lambda"));
}

#[test]
fn iteration_cap_exits_2() {
    let dir = TempDir::new().unwrap();
    let out = run_config(dir.path(), "problem = example1\nstart = 2.5\nsolver.lambda = 50\nsolver.max_outer = 1\n");
    assert_eq!(out.status.code(), Some(2));
    let s: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(s["verdict"], "max_iterations");
    assert_eq!(s["iterations"], 1);
}

#[test]
fn start_outside_level_set_exits_3() {
    let dir = TempDir::new().unwrap();
    let out = run_config(dir.path(), "problem = example1\nstart = 0.1\n");
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn config_errors_exit_3() {
    let dir = TempDir::new().unwrap();
    for text in [
        "problem = example1\n",
        "problem = example1\nstart = 0.5\nsolver.tol_step = 0\n",
        "problem = example2\nstart = 1, 0, 0\n",
        "problem = example2\nstart = 1, 2, 3, 1\n",
        "problem = example1\nstart = 0.5\nbogus = 1\n",
    ] {
        assert_eq!(run_config(dir.path(), text).status.code(), Some(3), "{text:?}");
    }
    assert_eq!(cmd(dir.path(), &["run", "missing.conf"]).status.code(), Some(3));
    assert_eq!(cmd(dir.path(), &["frobnicate"]).status.code(), Some(3));
}

#[test]
fn custom_problem_runs() {
    let dir = TempDir::new().unwrap();
    // max{x1 + x2, 1/2 |x - (1, -1)|^2 - 1}
    let text = "problem = custom\ncustom.dim = 2\ncustom.components = 2\n\
                custom.0.type = affine\ncustom.0.a = 1, 1\n\
                custom.1.type = quadratic\ncustom.1.c = 1, -1\ncustom.1.b = -1\n\
                start = 3, 2\n";
    let out = run_config(dir.path(), text);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let s: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(s["lipschitz"], serde_json::json!([0.0, 1.0]));
    let x: Vec<f64> = s["final_point"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    let f1 = x[0] + x[1];
    let f2 = 0.5 * ((x[0] - 1.0).powi(2) + (x[1] + 1.0).powi(2)) - 1.0;
    assert!((f1.max(f2) - s["final_f"].as_f64().unwrap()).abs() < 1e-12);
    // The minimizer lies on the kink f1 = f2 inside the disc.
    assert!((f1 - f2).abs() < 1e-6);
}

#[test]
fn estimate_lipschitz_on_example_one_interval() {
    let dir = TempDir::new().unwrap();
    let conf = configs_dir().join("example1_interval.conf");
    let out = cmd(dir.path(), &["estimate-lipschitz", conf.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let value =
        |prefix: &str| -> f64 { text.lines().find_map(|l| l.strip_prefix(prefix)).unwrap().trim().parse().unwrap() };
    assert!(value("L[0] = ") <= 1e-8);
    let l1 = value("L[1] = ");
    assert!(l1 > 0.2 && l1 < 0.4);
    assert!((value("lambda = ") - 1.1 * l1).abs() < 1e-12);
}

#[test]
fn estimate_lipschitz_of_constant_gradients_is_zero() {
    let dir = TempDir::new().unwrap();
    let text = "problem = custom\ncustom.dim = 3\ncustom.components = 2\n\
                custom.0.type = affine\ncustom.0.a = 1, 2, 3\n\
                custom.1.type = affine\ncustom.1.a = -1, 0, 0.5\n\
                start = 0, 0, 0\nlipschitz.radius = 4\n";
    let p = write_config(dir.path(), "affine.conf", text);
    let out = cmd(dir.path(), &["estimate-lipschitz", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("L[0] = 0.0000000000000000e0"));
    assert!(text.contains("L[1] = 0.0000000000000000e0"));
}

#[test]
fn estimate_lipschitz_rejects_negative_radius() {
    let dir = TempDir::new().unwrap();
    let p = write_config(dir.path(), "neg.conf", "problem = example1\nstart = 1\nlipschitz.radius = -1\n");
    assert_eq!(cmd(dir.path(), &["estimate-lipschitz", p.to_str().unwrap()]).status.code(), Some(3));
}

#[test]
fn check_default_suite_passes() {
    let dir = TempDir::new().unwrap();
    let out = cmd(dir.path(), &["check"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.ends_with("PASS")).count(), 24);
}

#[test]
fn check_argument_errors_exit_3() {
    let dir = TempDir::new().unwrap();
    assert_eq!(cmd(dir.path(), &["check", "--trials", "0"]).status.code(), Some(3));
    assert_eq!(cmd(dir.path(), &["check", "--kind", "sphere"]).status.code(), Some(3));
    assert_eq!(cmd(dir.path(), &["check", "--trials", "-4"]).status.code(), Some(3));
}

#[test]
fn check_single_kind_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let a = cmd(dir.path(), &["check", "--kind", "spd2", "--trials", "50", "--seed", "3"]);
    let b = cmd(dir.path(), &["check", "--kind", "spd2", "--trials", "50", "--seed", "3"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert!(String::from_utf8(a.stdout).unwrap().lines().all(|l| l.starts_with("spd2/") || l == "all probes passed"));
}
