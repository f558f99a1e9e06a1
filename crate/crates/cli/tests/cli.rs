use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn qg(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qg")).current_dir(dir).args(args).output().unwrap()
}

fn write_config(dir: &Path, name: &str, v: &Value) {
    fs::write(dir.join(name), serde_json::to_string_pretty(v).unwrap()).unwrap();
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn five_edge() -> Value {
    json!({
        "graph": {
            "source": [1, 1, 1, 2, 2],
            "target": [1, 1, 2, 2, 3],
            "length": [std::f64::consts::PI, 2.0 * std::f64::consts::PI, 1, 2.0 * std::f64::consts::PI, 2],
            "weight": [1, 1, 2, 1, 1],
            "robin": [1, 1, "dirichlet"],
            "nx": 20,
            "potential": ["2*cos(2*x)", 0, 0, 0, 0]
        },
        "f": ["-sin(3*x)", "2*cos(2*x)", -4, "-sin(x)", "sech(x) - 2*sech(x)^3"],
        "phi": [8, 3, 1.0 / 2f64.cosh()],
        "exact": ["sin(x)", "sin(x)^2", "3*x - 2*x^2", "1 + sin(x)", "sech(x)"],
        "out": "run"
    })
}

#[test]
fn poisson_reports_the_five_edge_error() {
    let tmp = tempfile::tempdir().unwrap();
    write_config(tmp.path(), "poisson.json", &five_edge());
    let o = qg(tmp.path(), &["poisson", "--config", "poisson.json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let run = tmp.path().join("run");
    let err = read_json(&run.join("error.json"));
    let max = err["max_error"].as_f64().unwrap();
    assert!((max / 1.02e-3 - 1.0).abs() <= 0.1, "{max}");
    assert_eq!(err["per_edge"].as_array().unwrap().len(), 5);
    let rec = read_json(&run.join("run.json"));
    assert_eq!(rec["command"], "poisson");
    assert_eq!(rec["scheme"], "uniform");
    assert_eq!(rec["config"]["f"], five_edge()["f"]);
    assert!(run.join("solution.csv").exists());

    // the destination is never overwritten
    let again = qg(tmp.path(), &["poisson", "--config", "poisson.json"]);
    assert_eq!(again.status.code(), Some(2));
    let o = qg(tmp.path(), &["poisson", "--config", "poisson.json", "--scheme", "chebyshev", "--set", "graph.nx=16", "--out", "cheb"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let max = read_json(&tmp.path().join("cheb/error.json"))["max_error"].as_f64().unwrap();
    assert!(max <= 5e-7, "{max}");
}

#[test]
fn zero_data_gives_zero_solution() {
    let tmp = tempfile::tempdir().unwrap();
    let graph = r#"graph={"source":[1,2],"target":[2,3],"length":[1,2],"robin":[0,0.5,"dirichlet"]}"#;
    let o = qg(tmp.path(), &["poisson", "--set", graph, "--set", "f=0", "--out", "zero"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(tmp.path().join("zero/solution.csv")).unwrap();
    for line in text.lines().skip(1) {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(cols[2], 0.0, "{line}");
    }
}

#[test]
fn missing_length_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = five_edge();
    cfg["graph"].as_object_mut().unwrap().remove("length");
    write_config(tmp.path(), "bad.json", &cfg);
    let o = qg(tmp.path(), &["poisson", "--config", "bad.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("'length'"), "{}", stderr(&o));
    assert!(!tmp.path().join("run").exists());
    let o = qg(tmp.path(), &["poisson", "--config", "bad.json", "--set", "colour=3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("'colour'"));
}

#[test]
fn solver_errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let o = qg(tmp.path(), &["poisson", "--set", r#"graph={"template":"ring"}"#, "--set", "f=1", "--out", "r"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(!tmp.path().join("r").exists());
    let left: Vec<_> = fs::read_dir(tmp.path()).unwrap().collect();
    assert!(left.is_empty());
}

#[test]
fn eigs_on_the_y_graph() {
    let tmp = tempfile::tempdir().unwrap();
    write_config(tmp.path(), "y.json", &json!({"graph": {"template": "Y", "overrides": {"nx": 40}}, "m": 4, "out": "y"}));
    let o = qg(tmp.path(), &["eigs", "--config", "y.json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let spec = read_json(&tmp.path().join("y/spectrum.json"));
    let spec = spec.as_array().unwrap();
    assert_eq!(spec.len(), 4);
    let c1 = (33f64.sqrt() + 3.0) / 12.0;
    let c2 = -(33f64.sqrt() - 3.0) / 12.0;
    let pi = std::f64::consts::PI;
    let exact = [c1.acos(), c2.acos(), pi, pi].map(|k| -k * k);
    let table = [1.687e-5, 5.486e-4, 5.072e-3, 5.072e-3];
    for j in 0..4 {
        let l = spec[j]["lambda"].as_f64().unwrap();
        let err = (l - exact[j]).abs();
        assert!((err / table[j] - 1.0).abs() <= 0.1, "eigenvalue {j}: {l}, error {err:e}");
        assert!(tmp.path().join(format!("y/eigenvector_{:03}.csv", j + 1)).exists());
    }
}

#[test]
fn secdet_finds_dirichlet_zeros() {
    let tmp = tempfile::tempdir().unwrap();
    let graph = r#"graph={"source":[1],"target":[2],"length":3.141592653589793,"robin":["dirichlet","dirichlet"]}"#;
    let o = qg(tmp.path(), &["secdet", "--set", graph, "--set", "k_max=7", "--out", "s"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let zeros = read_json(&tmp.path().join("s/zeros.json"));
    let k: Vec<f64> = zeros.as_array().unwrap().iter().map(|z| z["k"].as_f64().unwrap()).collect();
    assert_eq!(k.len(), 6, "{k:?}");
    for (j, k) in k.iter().enumerate() {
        assert!((k - (j + 1) as f64).abs() <= 1e-8, "{k}");
    }
    let table = fs::read_to_string(tmp.path().join("s/secdet.csv")).unwrap();
    assert_eq!(table.lines().count(), 2001);
}

fn continue_dumbbell(dir: &Path, out: &str) -> Output {
    qg(
        dir,
        &[
            "continue",
            "--set",
            r#"graph={"template":"dumbbell"}"#,
            "--set",
            "tag=dumbbell",
            "--set",
            r#"from={"eig":1}"#,
            "--set",
            "options.maxPoints=50",
            "--seed",
            "3",
            "--out",
            out,
        ],
    )
}

#[test]
fn continuation_from_the_first_eigenfunction() {
    let tmp = tempfile::tempdir().unwrap();
    let o = continue_dumbbell(tmp.path(), "a");
    assert!(o.status.success(), "{}", stderr(&o));
    let diagram = tmp.path().join("a/dumbbell/001");
    let lambda = fs::read_to_string(diagram.join("branch001/lambda.csv")).unwrap();
    let points = lambda.lines().filter(|l| l.parse::<f64>().is_ok()).count();
    assert!((1..=50).contains(&points), "{points}");
    let log = fs::read_to_string(diagram.join("logfile.txt")).unwrap();
    assert!(log.lines().any(|l| l.starts_with("branch001:")), "{log}");
    assert!(diagram.join("diagram.csv").exists());

    let o = continue_dumbbell(tmp.path(), "b");
    assert!(o.status.success(), "{}", stderr(&o));
    let again = fs::read(tmp.path().join("b/dumbbell/001/branch001/lambda.csv")).unwrap();
    assert_eq!(lambda.as_bytes(), &again[..]);

    // a second invocation in place appends a branch and an invocation record
    let bp: Value = read_json(&diagram.join("branch001/branchpoints.json"));
    let point = bp[0]["index"].as_u64().unwrap() + 1;
    let from = format!(r#"from={{"branch":1,"point":{point},"sign":-1}}"#);
    let run = diagram.to_string_lossy().into_owned();
    let o = qg(tmp.path(), &["continue", "--set", &format!("run=\"{run}\""), "--set", &from, "--set", "options.maxPoints=10"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(diagram.join("branch002/lambda.csv").exists());
    let rec = read_json(&diagram.join("run.json"));
    assert_eq!(rec["invocations"].as_array().unwrap().len(), 2);
}

#[test]
fn continuation_options_are_checked() {
    let tmp = tempfile::tempdir().unwrap();
    let o = qg(
        tmp.path(),
        &["continue", "--set", r#"graph={"template":"dumbbell"}"#, "--set", r#"from={"eig":1}"#, "--set", "options.maxPointz=5", "--out", "x"],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("maxPointz"), "{}", stderr(&o));
}

#[test]
fn evolve_writes_a_reproducible_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = json!({
        "graph": {"template": "star", "overrides": {"LVec": 10, "nx": 8}},
        "method": "imex_euler",
        "mu": [0, 1],
        "f": "2*i*z*z*conj(z)",
        "u0": "0.5*sech(x)",
        "tau": 0.01,
        "t_final": 0.1,
        "n_skip": 5,
        "noise": 1e-3,
        "quantities": ["mass", "energy"]
    });
    write_config(tmp.path(), "ev.json", &cfg);
    for out in ["a", "b"] {
        let o = qg(tmp.path(), &["evolve", "--config", "ev.json", "--seed", "11", "--out", out]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let rec = read_json(&tmp.path().join("a/run.json"));
    assert_eq!(rec["command"], "evolve");
    assert_eq!(rec["seed"], 11);
    assert_eq!(rec["steps"], 10);
    assert_eq!(rec["config"]["method"], "imex_euler");
    for f in ["times.csv", "state_0003.csv", "conservation.csv"] {
        assert_eq!(fs::read(tmp.path().join("a").join(f)).unwrap(), fs::read(tmp.path().join("b").join(f)).unwrap());
    }
    let o = qg(tmp.path(), &["evolve", "--config", "ev.json", "--seed", "12", "--out", "c"]);
    assert!(o.status.success());
    assert_ne!(fs::read(tmp.path().join("a/state_0001.csv")).unwrap(), fs::read(tmp.path().join("c/state_0001.csv")).unwrap());
}

#[test]
fn heat_and_wave_methods_run() {
    let tmp = tempfile::tempdir().unwrap();
    let graph = r#"graph={"template":"dumbbell","overrides":{"nx":6}}"#;
    let o = qg(tmp.path(), &["evolve", "--set", graph, "--set", "method=crank_nicolson", "--set", "u0=\"cos(x)\"", "--set", "tau=0.1", "--set", "t_final=1", "--out", "heat"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = qg(tmp.path(), &["evolve", "--set", graph, "--set", "method=leapfrog", "--set", "g=\"sin(u)\"", "--set", "u0=0", "--set", "v0=0.1", "--set", "tau=0.05", "--set", "t_final=1", "--out", "wave"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = qg(tmp.path(), &["evolve", "--set", graph, "--set", "method=leapfrog", "--set", "mu=[0,1]", "--set", "u0=0", "--set", "tau=0.05", "--set", "t_final=1", "--out", "bad"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn template_gallery() {
    let tmp = tempfile::tempdir().unwrap();
    let o = qg(tmp.path(), &["template", "list"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    for tag in ["interval", "dumbbell", "tetrahedron", "ring"] {
        assert!(text.lines().any(|l| l.starts_with(tag)), "{tag}");
    }
    let o = qg(tmp.path(), &["template", "show", "dumbbell"]);
    let doc: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["tag"], "dumbbell");
    assert!(doc["parameters"].get("circumference").is_some());
    assert_eq!(qg(tmp.path(), &["template", "show", "pretzel"]).status.code(), Some(2));
}
