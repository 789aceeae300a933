use std::path::Path;
use std::process::{Command, Output};

fn fhl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fhl")).args(args).env_remove("FHL_CACHE_DIR").output().unwrap()
}

fn stderr_error(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().find(|l| l.contains("\"error\"")).unwrap_or_else(|| panic!("no error JSON in {text}"));
    serde_json::from_str(line).unwrap()
}

const SMALL: &str = "schema_version=1\nregime=subcritical\nn=1\ns=0.3\ndomain.kind=interval\ndomain.a=0\ndomain.b=1\n\
                     modes=64\ngrid=256\n";

fn write_config(dir: &Path, extra: &str) -> String {
    let path = dir.join("run.cfg");
    std::fs::write(&path, format!("{SMALL}{extra}")).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn selftest_exits_zero() {
    let out = fhl(&["selftest"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(!String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

#[test]
fn missing_config_is_a_validation_error() {
    let out = fhl(&["solve", "--config", "missing.cfg"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_error(&out)["error"], "Io");
}

#[test]
fn config_errors_exit_one_with_kind() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "eps=0.1\ns=two\n");
    let out = fhl(&["solve", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_error(&out)["error"], "TypeError");
    let cfg = write_config(dir.path(), "eps=0.1\ncolour=red\n");
    assert_eq!(stderr_error(&fhl(&["solve", "--config", &cfg]))["error"], "UnknownKey");
    // subcritical needs n < 6s
    let cfg = write_config(dir.path(), "eps=0.1\nn=2\n");
    let out = fhl(&["solve", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_error(&out)["error"], "OutOfRange");
}

#[test]
fn unconverged_solve_exits_two_but_writes_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "eps=0.1\nmax_iter=2\n");
    let out_dir = dir.path().join("out");
    let out = fhl(&["solve", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_error(&out)["error"], "NoConvergence");
    let record: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(record["record"]["status"], "NoConvergence");
    assert!(out_dir.join("solution.csv").exists());
}

#[test]
fn solve_writes_record_and_samples() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "eps=0.2\n");
    let out_dir = dir.path().join("out");
    let out = fhl(&["solve", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let record: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("record.json")).unwrap()).unwrap();
    assert_eq!(record["record"]["status"], "Converged");
    assert!(record["wall_time_s"].as_f64().unwrap() >= 0.0);
    assert!(record["config"].as_str().unwrap().contains("eps=0.2"));
    let csv = std::fs::read_to_string(out_dir.join("solution.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("x,u"));
    assert_eq!(csv.lines().count(), 258);
    assert!(out_dir.join("cache").read_dir().unwrap().next().is_some());
}

#[test]
fn constants_json_has_tag_keys() {
    let out = fhl(&["constants", "--n", "2", "--s", "0.5", "--mu", "1", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let c = v["C_ns"].as_f64().unwrap();
    assert!((c - 2f64.sqrt()).abs() < 1e-12);
    assert!(v.get("Kappa_s").is_some());
    let table = String::from_utf8(fhl(&["constants", "--n", "2", "--s", "0.5", "--mu", "1"]).stdout).unwrap();
    assert!(table.lines().any(|l| l.starts_with("C_ns") && l.ends_with("1.41421356237")));
}

#[test]
fn bubble_commands() {
    let out = fhl(&["bubble", "check", "--n", "1", "--s", "0.3", "--mu", "0.4", "--points", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("x,lhs,rhs,residual"));
    for row in text.lines().skip(1) {
        let residual: f64 = row.rsplit(',').next().unwrap().parse().unwrap();
        assert!(residual < 1e-5, "{row}");
    }
    let out = fhl(&["bubble", "quotient", "--n", "2", "--s", "0.5", "--mu", "1"]);
    assert!(String::from_utf8(out.stdout).unwrap().contains("1.16244735"));
    // mu outside (0, n)
    assert_eq!(fhl(&["bubble", "quotient", "--n", "1", "--s", "0.3", "--mu", "1.5"]).status.code(), Some(1));
}

#[test]
fn robin_table_is_symmetric() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("robin.csv");
    let out = fhl(&[
        "robin",
        "--domain",
        "interval",
        "--a",
        "0",
        "--b",
        "1",
        "--s",
        "0.3",
        "--modes",
        "2000",
        "--grid",
        "16",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(path).unwrap();
    let phi: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(phi.len(), 15);
    for i in 0..phi.len() {
        assert!((phi[i] - phi[phi.len() - 1 - i]).abs() < 1e-6 * phi[i].abs());
    }
    // the Robin function is smallest in the middle
    assert!(phi[7] < phi[0]);
    assert_eq!(
        fhl(&["robin", "--domain", "rectangle", "--a", "0", "--b", "1", "--s", "0.3", "--modes", "20", "--grid", "16"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn continuation_archive_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "eps_list=0.9\n");
    let arch = dir.path().join("arch");
    let out = fhl(&["continuation", "--config", &cfg, "--eps", "0.4,0.2", "--out", arch.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["config.cfg", "report.json", "summary.csv", "fields/u_000.csv", "fields/u_001.csv"] {
        assert!(arch.join(f).exists(), "{f}");
    }
    assert!(arch.join("cache").read_dir().unwrap().next().is_some());
    let summary = std::fs::read_to_string(arch.join("summary.csv")).unwrap();
    let mut lines = summary.lines();
    assert_eq!(lines.next(), Some("eps,mu_eps,mu_eps_pow_eps,x_eps,profile_dist,rate_lhs,boundary_sup,interior_L1"));
    assert_eq!(lines.count(), 2);
    // the archived config carries the sweep actually run and reproduces it
    let echo = std::fs::read_to_string(arch.join("config.cfg")).unwrap();
    assert!(echo.contains("eps_list=0.4,0.2"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(arch.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["report"]["records"].as_array().unwrap().len(), 2);
    assert!(report["robin_at_x0"]["value"].as_f64().unwrap() > 0.0);
    assert!(report["diagnostics"]["rate_law"]["rhs"].as_f64().unwrap() > 0.0);

    let plots = dir.path().join("plots");
    let out = fhl(&["report", "--in", arch.to_str().unwrap(), "--out", plots.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["mu_eps.csv", "mu_eps.svg", "rate_lhs.csv", "boundary.svg", "pohozaev.csv", "last_field.csv"] {
        assert!(plots.join(f).exists(), "{f}");
    }
    let mu = std::fs::read_to_string(plots.join("mu_eps.csv")).unwrap();
    assert_eq!(mu.lines().count(), 3);
}

#[test]
fn continuation_rejects_increasing_eps() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let arch = dir.path().join("arch");
    let out = fhl(&["continuation", "--config", &cfg, "--eps", "0.1,0.2", "--out", arch.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_error(&out)["error"], "Precondition");
    let out = fhl(&["continuation", "--config", &cfg, "--out", arch.to_str().unwrap()]);
    assert_eq!(stderr_error(&out)["error"], "MissingRequired");
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(fhl(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(fhl(&["--help"]).status.code(), Some(0));
}
