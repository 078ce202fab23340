use std::process::{Command, Output};

fn vacfric(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vacfric")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn json_output_is_one_document_with_schema_version() {
    for args in [
        &["--format", "json", "force", "--compare", "--samples", "2000"][..],
        &["--format", "json", "trap", "--trap-mhz", "1.3"],
        &["--format", "json", "decay", "--branch", "constant-velocity", "--ion", "yb171", "--lifetimes", "1"],
        &["--format", "json", "sweep", "--var", "beta", "--from", "0", "--to", "1e-3", "--points", "3", "--samples", "100"],
    ] {
        let o = vacfric(args);
        assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
        assert_eq!(doc["schema_version"], "1", "{args:?}");
    }
}

#[test]
fn seeded_monte_carlo_is_byte_identical() {
    let args = ["--seed", "42", "force", "--method", "mc", "--samples", "200000"];
    let a = vacfric(&args);
    let b = vacfric(&[&args[..], &["--threads", "3"]].concat());
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn missing_seed_is_recorded_in_header() {
    let o = vacfric(&["force"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let seed_line = text.lines().find(|l| l.starts_with("# seed: ")).unwrap();
    seed_line["# seed: ".len()..].parse::<u64>().unwrap();
}

#[test]
fn output_flag_writes_file_and_keeps_stdout_clean() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trap.csv");
    let o = vacfric(&["--output", path.to_str().unwrap(), "trap", "--trap-mhz", "1.3", "--published-epsilon"]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.contains("quantity,first_order,exact"));
    assert!(text.contains("period_count,7.35"));
}

#[test]
fn required_trap_invocation_still_accepted() {
    let o = vacfric(&["--format", "json", "trap", "--ion", "yb171", "--trap-mhz", "1.3", "--paper-epsilon"]);
    assert!(o.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(doc["report"]["epsilon"].as_f64().unwrap(), 1.36e-11);
}

#[test]
fn exit_codes_and_error_stream() {
    let bad = vacfric(&["force", "--beta", "2"]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(bad.stdout.is_empty());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("beta"));

    let unknown = vacfric(&["trap", "--ion", "ca40", "--trap-mhz", "1"]);
    assert_eq!(unknown.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("yb171"));

    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("forward.csv");
    let tau = std::f64::consts::TAU;
    std::fs::write(
        &table,
        format!("cos_theta_lo,cos_theta_hi,phi_lo,phi_hi,weight\n-1,0,0,{tau},0.2\n0,1,0,{tau},0.8\n"),
    )
    .unwrap();
    let asym = vacfric(&["force", "--pattern", "table", "--table", table.to_str().unwrap()]);
    assert_eq!(asym.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&asym.stderr).contains("parity"));

    let usage = vacfric(&["force", "--no-such-flag"]);
    assert_eq!(usage.status.code(), Some(2));
}

#[test]
fn selftest_single_criterion() {
    let o = vacfric(&["selftest", "--criterion", "7"]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("PASS  7"));
}
