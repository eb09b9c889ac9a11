use std::path::Path;
use std::process::{Command, Output};

fn augcg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_augcg"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

const SMALL: &str = "
[problem]
spectrum = fastdecay
dim = 40

[run]
sketch = 3
t_max = 6

[methods]
list = bcg, cg, nystrom:s=2
";

#[test]
fn compare_writes_the_fixed_header_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.cfg", SMALL);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for out in [&a, &b] {
        let res = augcg(&["compare", "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert!(
            res.status.success(),
            "{}",
            String::from_utf8_lossy(&res.stderr)
        );
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "experiment,method,s,l,t,matrix_loads,matvecs,mu,rel_err_anorm,residual_norm,kappa_actual,seed"
    );
    assert_eq!(text.lines().count(), 1 + 3 * 7);
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());

    let res = augcg(&["compare", "--config", &cfg, "--seed", "5"]);
    assert!(res.status.success());
    let other = String::from_utf8(res.stdout).unwrap();
    assert_ne!(text, other);
    assert!(other.lines().nth(1).unwrap().ends_with(",5"));
}

#[test]
fn gen_matrix_feeds_an_oracle_free_run() {
    let dir = tempfile::tempdir().unwrap();
    let matrix = dir.path().join("a.bin");
    let cfg = write(dir.path(), "small.cfg", SMALL);
    let res = augcg(&[
        "gen-matrix",
        "--config",
        &cfg,
        "--out",
        matrix.to_str().unwrap(),
        "--chunk-rows",
        "7",
    ]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let spectrum = std::fs::read_to_string(dir.path().join("a.bin.spectrum.csv")).unwrap();
    assert_eq!(spectrum.lines().count(), 41);
    let dense = augcg::operator::read_dense(&matrix).unwrap();
    assert_eq!(dense.nrows(), 40);

    let run = write(
        dir.path(),
        "chunked.cfg",
        &format!(
            "[problem]\nmatrix = {}\n[run]\nsketch = 3\nt_max = 4\n[methods]\nlist = bcg, cg\n",
            matrix.display()
        ),
    );
    let res = augcg(&["compare", "--config", &run]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let rows = augcg_harness::output::read_rows(res.stdout.as_slice()).unwrap();
    assert_eq!(rows.len(), 2 * 5);
    assert!(rows.iter().all(|r| r.rel_err_anorm.is_none()));
    assert_eq!(rows[4].matrix_loads, Some(4));
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.cfg", "[run]\nunknown = 1\n");
    assert_eq!(augcg(&["compare", "--config", &bad]).status.code(), Some(2));
    assert_eq!(
        augcg(&["compare", "--preset", "nope"]).status.code(),
        Some(2)
    );
    let missing = dir.path().join("missing.cfg");
    let res = augcg(&["regpath", "--config", missing.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn numerical_failures_exit_with_3_and_keep_other_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "deep.cfg",
        "[problem]\ndim = 30\n[run]\nsketch = 4\nt_max = 3\n[methods]\nlist = nystrom:s=10, cg\n",
    );
    let res = augcg(&["compare", "--config", &cfg]);
    assert_eq!(res.status.code(), Some(3));
    let rows = augcg_harness::output::read_rows(res.stdout.as_slice()).unwrap();
    assert!(rows[0].is_error());
    assert_eq!(rows.iter().filter(|r| r.method == "cg").count(), 4);
}
