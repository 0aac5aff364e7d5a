use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn fdsec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fdsec")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("exp.cfg");
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

const SMALL: &str = "experiment_id=small\nmethods=robust,projection\nsweep=p_tot_dbm\nsweep_value=0\nsweep_value=10\n";

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let mut outputs = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("run{k}"));
        let o = fdsec(&["run", "--config", &cfg, "--trials", "1", "--seed", "5", "--jobs", "1", "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        outputs.push((
            fs::read(out.join("small_trials.csv")).unwrap(),
            fs::read(out.join("small_aggregate.csv")).unwrap(),
        ));
    }
    assert_eq!(outputs[0], outputs[1]);
    let text = String::from_utf8(outputs[0].0.clone()).unwrap();
    assert_eq!(text.lines().count(), 5);
    assert!(text.lines().skip(1).all(|l| l.starts_with("small,p_tot_dbm,") && l.contains(",5,")));
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.cfg");
    assert_eq!(fdsec(&["run", "--config", missing.to_str().unwrap()]).status.code(), Some(2));
    let bad = write_config(dir.path(), "colour=blue\n");
    assert_eq!(fdsec(&["run", "--config", &bad]).status.code(), Some(2));
    let good = write_config(dir.path(), SMALL);
    assert_eq!(fdsec(&["run", "--config", &good, "--trials", "0"]).status.code(), Some(2));
    assert_eq!(fdsec(&["run"]).status.code(), Some(2));
    assert_eq!(fdsec(&["verify", "--filter", "no-such-check"]).status.code(), Some(2));
}

#[test]
fn io_errors_exit_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let out = blocker.join("sub");
    let o = fdsec(&["run", "--config", &cfg, "--trials", "1", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn trace_writes_monotone_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "experiment_id=tr\nmethods=robust\nsweep=p_tot_dbm\nsweep_value=5\n");
    let o = fdsec(&["trace", "--config", &cfg, "--trials", "2", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(dir.path().join("tr_trace.csv")).unwrap();
    let rows: Vec<(usize, f64)> = text
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[3].parse().unwrap(), f[6].parse().unwrap())
        })
        .collect();
    assert!(rows.len() > 2);
    for w in rows.windows(2) {
        if w[0].0 == w[1].0 {
            assert!(w[1].1 >= w[0].1 - 1e-6);
        }
    }
}

#[test]
fn verify_reports_each_check() {
    let o = fdsec(&["verify", "--filter", "kronecker"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("PASS kronecker_identities"));
}
