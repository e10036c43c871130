use std::path::Path;
use std::process::{Command, Output};

fn kb(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kb"))
        .args(args)
        .output()
        .expect("kb runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Data rows of a CSV written by `kb`, after the config comment and header.
fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn predict_writes_config_header_and_rows() {
    let o = kb(&["predict", "--degree", "10", "--steps", "3"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    let first = lines.next().unwrap();
    assert!(first.starts_with("# config: {"));
    assert!(first.contains("\"system\":\"van_der_pol\""));
    assert_eq!(lines.next().unwrap(), "step,pred_x1,pred_x2,true_x1,true_x2,error");
    let r = rows(&text);
    assert_eq!(r.len(), 4);
    let e1: f64 = r[1][5].parse().unwrap();
    assert!((e1 - 0.029).abs() < 1e-3, "{e1}");
    let stderr = String::from_utf8(o.stderr).unwrap();
    assert!(stderr.contains("step 1"));
}

#[test]
fn output_is_deterministic_across_thread_counts() {
    let args = ["table2", "--sweep", "10", "--sigmas", "0,0.01", "--seeds", "8", "--seed", "3"];
    let a = kb(&args);
    let b = Command::new(env!("CARGO_BIN_EXE_kb"))
        .args(args)
        .env("KB_THREADS", "1")
        .output()
        .unwrap();
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("approx.csv");
    let o = kb(&[
        "approximate",
        "--system",
        "scalar_logistic",
        "--observable",
        "x1^2/2",
        "--degree",
        "100",
        "--out",
        path_str(&out),
    ]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("# config:"));
    let sup: f64 = String::from_utf8(o.stderr)
        .unwrap()
        .trim()
        .strip_prefix("sup_error: ")
        .unwrap()
        .parse()
        .unwrap();
    assert!(sup > 0.0 && sup <= 0.0114, "{sup}");
}

#[test]
fn native_frame_start() {
    let o = kb(&["predict", "--degree", "10", "--steps", "1", "--x0", "0,0", "--x0-frame", "native"]);
    assert!(o.status.success());
    let r = rows(&stdout(&o));
    assert_eq!(r[0][1], "0.5");
    let e: f64 = r[1][5].parse().unwrap();
    assert!(e < 1e-10, "the origin is an equilibrium, error {e}");
}

#[test]
fn config_errors_exit_with_2() {
    for args in [
        vec!["predict", "--system", "nope"],
        vec!["predict", "--degree", "ten"],
        vec!["approximate", "--observable", "x1+"],
        vec!["bounds", "--system", "scalar_logistic", "--bounds", "T9"],
        vec!["bounds", "--system", "scalar_logistic", "--bounds", "DataFull"],
        vec!["datadriven", "--data", "/no/such/file.csv"],
        vec!["predict", "--unknown-flag"],
    ] {
        let o = kb(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn numeric_failures_exit_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("escape.csv");
    // The second pair maps outside the hull of the inputs.
    std::fs::write(&data, "x1,y1\n0,0.1\n0.5,1.5\n1,0.9\n").unwrap();
    let o = kb(&["datadriven", "--system", "none", "--degree", "2", "--data", path_str(&data)]);
    assert_eq!(o.status.code(), Some(3));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("pair 2"), "{err}");
}

#[test]
fn help_documents_exit_codes_and_threads() {
    let o = kb(&["--help"]);
    let text = stdout(&o);
    assert!(text.contains("Exit codes"));
    assert!(text.contains("KB_THREADS"));
    for sub in ["approximate", "predict", "bounds", "datadriven", "table2", "gen-data"] {
        assert!(text.contains(sub), "{sub}");
    }
}

#[test]
fn regular_lattice_data_reproduces_model_prediction() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("lattice.csv");
    let g = kb(&["gen-data", "--system", "lotka_volterra", "--degree", "6", "--jitter", "0", "--out", path_str(&data)]);
    assert!(g.status.success());
    let dd = kb(&[
        "datadriven",
        "--data",
        path_str(&data),
        "--degree",
        "6",
        "--steps",
        "4",
        "--data-route",
        "monomial",
    ]);
    let pr = kb(&["predict", "--system", "lotka_volterra", "--degree", "6", "--x0", "0.4,0.3", "--steps", "4"]);
    assert!(dd.status.success() && pr.status.success());
    let dd_rows: Vec<Vec<String>> = rows(&stdout(&dd)).into_iter().filter(|r| r[2] == "bernstein").collect();
    let pr_rows = rows(&stdout(&pr));
    for (a, b) in dd_rows.iter().zip(&pr_rows[1..]) {
        assert_eq!(a[3..], b[1..], "rows differ");
    }
}

#[test]
fn permutation_file_is_honoured() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("pts.csv");
    let perm = dir.path().join("perm.txt");
    // Points listed in decreasing order; a decreasing 1-D pairing is valid too.
    std::fs::write(&data, "x1,y1\n1,0.8\n0.5,0.4\n0,0\n").unwrap();
    std::fs::write(&perm, "1\n2\n3\n").unwrap();
    let base = ["datadriven", "--system", "none", "--degree", "2", "--steps", "1", "--data", path_str(&data)];
    let auto = kb(&base);
    assert!(auto.status.success());
    let mut with_perm = base.to_vec();
    with_perm.extend(["--perm", path_str(&perm)]);
    let o = kb(&with_perm);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    std::fs::write(&perm, "1\n1\n3\n").unwrap();
    assert_eq!(kb(&with_perm).status.code(), Some(2));
}

#[test]
fn bounds_for_constant_observable_vanish() {
    let o = kb(&["bounds", "--system", "scalar_logistic", "--observable", "3", "--sweep", "10,20"]);
    assert!(o.status.success());
    for r in rows(&stdout(&o)) {
        let v: f64 = r[4].parse().unwrap();
        if r[0] == "measured" {
            assert!(v < 1e-13, "{r:?}");
        } else {
            assert_eq!(v, 0.0, "{r:?}");
        }
    }
}

#[test]
fn user_system_file() {
    let dir = tempfile::tempdir().unwrap();
    let sys = dir.path().join("decay.json");
    std::fs::write(
        &sys,
        r#"{"name":"decay","dim":1,"field":["-x1"],"flow":["x1*2.718281828459045^(-t)"],"horizon":0.5,"box":[[0,1]]}"#,
    )
    .unwrap();
    let o = kb(&["predict", "--system", path_str(&sys), "--degree", "8", "--steps", "2", "--x0", "0.6"]);
    assert!(o.status.success());
    let r = rows(&stdout(&o));
    // A linear map is reproduced exactly by the Bernstein operator.
    let e: f64 = r[2][3].parse().unwrap();
    assert!(e < 1e-12, "{e}");
}
