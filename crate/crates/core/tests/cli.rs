use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn spfl(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spfl"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) {
    fs::write(dir.join(name), text).unwrap();
}

fn value(csv: &str, key: &str) -> String {
    csv.lines()
        .find_map(|l| l.strip_prefix(&format!("{key},")))
        .unwrap_or_else(|| panic!("no row {key} in\n{csv}"))
        .to_string()
}

#[test]
fn flow_run_writes_result_csv() {
    let dir = TempDir::new().unwrap();
    write(
        dir.path(),
        "run.cfg",
        "task = flow\nfamily = generator_loop\n[family]\ndim = 3\n",
    );
    let o = spfl(dir.path(), &["flow", "--config", "run.cfg", "--out", "gen", "--quiet"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).is_empty());
    let csv = fs::read_to_string(dir.path().join("gen_result.csv")).unwrap();
    assert!(csv.starts_with("quantity,value\n"));
    assert_eq!(value(&csv, "flow"), "1");
}

#[test]
fn winding_subcommand_reports_both_sides() {
    let dir = TempDir::new().unwrap();
    write(
        dir.path(),
        "w.cfg",
        "task = winding\nfamily = linear_segment\n[family]\nstart = -1, -2, 3\nend = 1, 2, 3\n",
    );
    let o = spfl(dir.path(), &["winding", "--config", "w.cfg", "--out", "w"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("w_result.csv")).unwrap();
    assert_eq!(value(&csv, "flow"), "2");
    assert_eq!(value(&csv, "winding"), "2");
}

#[test]
fn missing_config_file_fails_with_module_name() {
    let dir = TempDir::new().unwrap();
    let o = spfl(dir.path(), &["flow", "--config", "absent.cfg"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("spfl: error ["), "{}", stderr(&o));
}

#[test]
fn mu_key_is_rejected_with_line_number() {
    let dir = TempDir::new().unwrap();
    write(
        dir.path(),
        "mu.cfg",
        "task = flow\nfamily = generator_loop\n[solver]\nmu = 0.5\n",
    );
    let o = spfl(dir.path(), &["flow", "--config", "mu.cfg"]);
    assert_eq!(o.status.code(), Some(1));
    let msg = stderr(&o);
    assert!(
        msg.contains("[cli]") && msg.contains("line 4") && msg.contains("chosen by the engine"),
        "{msg}"
    );
}

#[test]
fn task_must_match_subcommand_family() {
    let dir = TempDir::new().unwrap();
    write(
        dir.path(),
        "s.cfg",
        "task = flow\nfamily = schrodinger_pair\n[grid]\nhalf_width = 10\npoints = 160\n",
    );
    let o = spfl(dir.path(), &["flow", "--config", "s.cfg"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("schrodinger_pair"), "{}", stderr(&o));
}

#[test]
fn malformed_path_file_reports_byte_offset() {
    let dir = TempDir::new().unwrap();
    write(dir.path(), "bad.path", "dim 1\nsamples 2\ninterval 0 1\n1,0\noops\n");
    write(
        dir.path(),
        "m.cfg",
        "task = flow\nfamily = matrix_file\n[family]\npath = bad.path\n",
    );
    let o = spfl(dir.path(), &["flow", "--config", "m.cfg"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("byte offset 33"), "{}", stderr(&o));
}

#[test]
fn seed_flag_overrides_configuration() {
    let dir = TempDir::new().unwrap();
    let body = "family = projection_pair\n[family]\ndim = 6\nrank_p = 3\nrank_q = 3\n";
    write(dir.path(), "p.cfg", &format!("task = eigentraj\nseed = 5\n{body}"));
    write(dir.path(), "q.cfg", &format!("task = eigentraj\nseed = 9\n{body}"));
    let run = |cfg: &str, out: &str, seed: Option<&str>| {
        let mut args = vec!["eigentraj", "--config", cfg, "--out", out, "--quiet"];
        if let Some(s) = seed {
            args.extend(["--seed", s]);
        }
        let o = spfl(dir.path(), &args);
        assert!(o.status.success(), "{}", stderr(&o));
        fs::read(dir.path().join(format!("{out}_eigentraj.csv"))).unwrap()
    };
    let five = run("p.cfg", "a", None);
    let overridden = run("q.cfg", "b", Some("5"));
    let nine = run("q.cfg", "c", None);
    assert_eq!(five, overridden);
    assert_ne!(five, nine);
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let o = spfl(dir.path(), &["integrate"]);
    assert!(!o.status.success());
}
