use evalsim::io::{read_profile, write_profile, ScaleHint};
use serde_json::Value;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_evalsim"));
    c.env_remove("EVALSIM_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn evalsim")
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

const IID_BETA52: &str = r#"{"model":"iid","marginal":{"family":"beta","alpha":5,"beta":2},"m":3}"#;

#[test]
fn simulate_smoke_and_determinism() {
    let dir = TempDir::new().unwrap();
    let model = write(dir.path(), "iid_beta52.json", IID_BETA52);
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    ok(&["simulate", "--model", s(&model), "--voters", "1000", "--seed", "7", "--out", s(&a)]);
    ok(&["simulate", "--model", s(&model), "--voters", "1000", "--seed", "7", "--out", s(&b)]);
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text.lines().count(), 1001);
    assert!(text.starts_with("voter,cand_1,cand_2,cand_3\n"));
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let c = dir.path().join("c.csv");
    ok(&["simulate", "--model", s(&model), "--voters", "1000", "--seed", "8", "--out", s(&c)]);
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
}

#[test]
fn seed_sources_and_threads() {
    let dir = TempDir::new().unwrap();
    let model = write(dir.path(), "m.json", IID_BETA52);
    let flag = ok(&["simulate", "--model", s(&model), "--voters", "9000", "--seed", "7"]).stdout;
    let env = bin().args(["simulate", "--model", s(&model), "--voters", "9000"]).env("EVALSIM_SEED", "7").output().unwrap();
    assert_eq!(flag, env.stdout);
    let both = bin().args(["simulate", "--model", s(&model), "--voters", "9000", "--seed", "7"]).env("EVALSIM_SEED", "99").output().unwrap();
    assert_eq!(flag, both.stdout);
    let default = ok(&["simulate", "--model", s(&model), "--voters", "9000"]).stdout;
    let zero = ok(&["simulate", "--model", s(&model), "--voters", "9000", "--seed", "0"]).stdout;
    assert_eq!(default, zero);
    for t in ["1", "3", "8"] {
        let threaded = ok(&["--threads", t, "simulate", "--model", s(&model), "--voters", "9000", "--seed", "7"]).stdout;
        assert_eq!(flag, threaded, "threads {t}");
    }
}

#[test]
fn model_errors_name_the_path() {
    let dir = TempDir::new().unwrap();
    let cases = [
        (r#"{"model":"multinomial","K":6,"p":[0.5,0.3,0.3]}"#, "p"),
        (r#"{"model":"idd","marginals":[{"family":"uniform"},{"family":"beta","alpha":-1,"beta":2}]}"#, "marginals[1].alpha"),
        (r#"{"model":"dirichlet","alpha":[1,0]}"#, "alpha[1]"),
    ];
    for (text, path) in cases {
        let m = write(dir.path(), "bad.json", text);
        let out = run(&["simulate", "--model", s(&m), "--voters", "10"]);
        assert_eq!(out.status.code(), Some(2), "{text}");
        assert!(stderr(&out).contains(path), "{text}: {}", stderr(&out));
    }
    let m = write(dir.path(), "typo.json", r#"{"model":"dirichlet","alpha":[1,"x"]}"#);
    let out = run(&["simulate", "--model", s(&m), "--voters", "10"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["simulate", "--model", "/nonexistent.json", "--voters", "10"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn csv_round_trip_is_byte_exact() {
    let dir = TempDir::new().unwrap();
    let models = [
        IID_BETA52,
        r#"{"model":"multinomial","K":6,"p":[0.5,0.3,0.2]}"#,
        r#"{"model":"dirichlet","alpha":[5,3,2]}"#,
        r#"{"model":"iid","marginal":{"family":"beta_binomial","K":10,"alpha":1,"beta":3},"m":2}"#,
    ];
    for (i, text) in models.iter().enumerate() {
        let m = write(dir.path(), "m.json", text);
        for transpose in [false, true] {
            let mut args = vec!["simulate", "--model", s(&m), "--voters", "500", "--seed", "3"];
            if transpose {
                args.push("--transpose");
            }
            let bytes = ok(&args).stdout;
            let text = String::from_utf8(bytes.clone()).unwrap();
            let p = read_profile(&text, ScaleHint::Auto, transpose).unwrap();
            assert_eq!(write_profile(&p, transpose), bytes, "model {i} transpose {transpose}");
        }
    }
}

#[test]
fn spatial_simulation_writes_positions() {
    let dir = TempDir::new().unwrap();
    let m = write(
        dir.path(),
        "sp.json",
        r#"{"model":"spatial","d":2,"voters":{"dist":"uniform"},"candidates":[[0.2,0.3],[0.7,0.8]],"link":{"type":"sigmoid","lambda":5,"beta":2},"K":null}"#,
    );
    let out = dir.path().join("s.csv");
    ok(&["simulate", "--model", s(&m), "--voters", "50", "--out", s(&out)]);
    let pos = fs::read_to_string(dir.path().join("s.positions.csv")).unwrap();
    let lines: Vec<&str> = pos.lines().collect();
    assert_eq!(lines[0], "point,kind,x_1,x_2");
    assert_eq!(lines.len(), 1 + 50 + 2);
    assert!(lines[51].starts_with("cand_1,candidate,0.20000000000000001,"));
}

#[test]
fn fit_round_trip_and_histograms() {
    let dir = TempDir::new().unwrap();
    let m = write(dir.path(), "m.json", IID_BETA52);
    let p = dir.path().join("p.csv");
    ok(&["simulate", "--model", s(&m), "--voters", "3000", "--seed", "11", "--out", s(&p)]);
    let r = dir.path().join("r.json");
    ok(&["fit", "-i", s(&p), "--out", s(&r), "--hist", "20"]);
    let report = json(&r);
    for c in report["candidates"].as_array().unwrap() {
        assert_eq!(c["best"], "beta");
        assert_eq!(c["histogram"]["G"], 20);
    }
    assert!(report["kruskal_wallis"]["H"].is_number());
    assert!(report["bartlett"]["stat"].is_number());
    assert_eq!(report["pearson"][0][0], 1.0);
    assert!(report["model"]["model"].is_string());
    let hist = fs::read_to_string(dir.path().join("r.hist.tsv")).unwrap();
    assert_eq!(hist.lines().count(), 1 + 3 * 20);
    assert!(hist.starts_with("candidate\tbin\tlower\tupper\tmass\n"));
    // the emitted model simulates again
    let again = dir.path().join("model.json");
    fs::write(&again, serde_json::to_string(&report["model"]).unwrap()).unwrap();
    ok(&["simulate", "--model", s(&again), "--voters", "10"]);
}

#[test]
fn k_plus_one_estimator_switch() {
    let dir = TempDir::new().unwrap();
    let m = write(dir.path(), "m.json", r#"{"model":"iid","marginal":{"family":"binomial","K":6,"p":0.5},"m":2}"#);
    let p = dir.path().join("p.csv");
    ok(&["simulate", "--model", s(&m), "--voters", "20000", "--seed", "5", "--out", s(&p)]);
    let p_hat = |extra: &[&str]| -> f64 {
        let mut args = vec!["fit", "-i", s(&p), "--scale", "discrete:6", "--families", "binomial"];
        args.extend_from_slice(extra);
        let v: Value = serde_json::from_slice(&ok(&args).stdout).unwrap();
        v["candidates"][0]["fits"][0]["params"]["p"].as_f64().unwrap()
    };
    let default = p_hat(&[]);
    let plus_one = p_hat(&["--paper-estimator"]);
    assert!((default - 0.5).abs() < 0.01, "{default}");
    assert!((plus_one - default * 6.0 / 7.0).abs() < 1e-12, "{plus_one}");
}

#[test]
fn fit_input_errors() {
    let dir = TempDir::new().unwrap();
    let empty = write(dir.path(), "e.csv", "");
    assert_eq!(run(&["fit", "-i", s(&empty)]).status.code(), Some(2));
    let bad = write(dir.path(), "b.csv", "voter,a,b\n1,0.5,0.2\n2,0.1,oops\n");
    let out = run(&["fit", "-i", s(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 3, column 3"), "{}", stderr(&out));
    let small = write(dir.path(), "s.csv", "voter,a,b\n1,0.5,0.2\n2,0.1,0.3\n");
    assert_eq!(run(&["fit", "-i", s(&small)]).status.code(), Some(2));
    let good = write(dir.path(), "g.csv", "voter,a\n1,0.5\n");
    assert_eq!(run(&["fit", "-i", s(&good), "--families", "gamma"]).status.code(), Some(2));
    assert_eq!(run(&["fit", "-i", s(&good), "--copula", "clayton"]).status.code(), Some(2));
    assert_eq!(run(&["fit", "-i", s(&good), "--bogus"]).status.code(), Some(2));
}

#[test]
fn jitter_ingestion() {
    let dir = TempDir::new().unwrap();
    let m = write(dir.path(), "m.json", r#"{"model":"iid","marginal":{"family":"beta_binomial","K":100,"alpha":4,"beta":2},"m":2}"#);
    let p = dir.path().join("p.csv");
    ok(&["simulate", "--model", s(&m), "--voters", "2000", "--out", s(&p)]);
    let a = ok(&["fit", "-i", s(&p), "--jitter", "100", "--seed", "1"]).stdout;
    let b = ok(&["fit", "-i", s(&p), "--jitter", "100", "--seed", "1"]).stdout;
    assert_eq!(a, b);
    let v: Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(v["scale"]["kind"], "continuous");
    assert_eq!(v["candidates"][0]["best"], "beta");
}

#[test]
fn embed_spatial_profile() {
    let dir = TempDir::new().unwrap();
    let m = write(
        dir.path(),
        "sp.json",
        r#"{"model":"spatial","d":2,"voters":{"dist":"uniform"},"candidates":[[0.2,0.3],[0.7,0.8],[0.5,0.1],[0.9,0.4]],"link":{"type":"linear","ell":0.5},"K":null}"#,
    );
    let p = dir.path().join("p.csv");
    ok(&["simulate", "--model", s(&m), "--voters", "400", "--seed", "2", "--out", s(&p)]);
    let mut last = f64::INFINITY;
    for d in ["1", "2", "3"] {
        let r = dir.path().join(format!("e{d}.json"));
        ok(&["embed", "-i", s(&p), "-d", d, "--link", "linear:0.5", "--out", s(&r), "--seed", "4"]);
        let v = json(&r);
        let stress = v["stress"].as_f64().unwrap();
        assert!(stress <= last, "d={d}: {stress} > {last}");
        last = stress;
        if d == "2" {
            assert!(v["normalized_stress"].as_f64().unwrap() < 0.05);
            let trace: Vec<f64> = v["trace"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
            assert!(trace.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        }
    }
    let pos = fs::read_to_string(dir.path().join("e3.positions.csv")).unwrap();
    assert_eq!(pos.lines().next().unwrap(), "point,kind,x_1,x_2,x_3");
    assert_eq!(pos.lines().count(), 1 + 400 + 4);
    // default transform and refit
    let v: Value = serde_json::from_slice(&ok(&["embed", "-i", s(&p), "--refit", "gaussian"]).stdout).unwrap();
    assert_eq!(v["dissimilarity"]["type"], "one_minus_e");
    assert_eq!(v["refit"]["mean"].as_array().unwrap().len(), 2);
    assert_eq!(v["refit"]["cov"].as_array().unwrap().len(), 2);
    let regen = dir.path().join("regen.json");
    fs::write(&regen, serde_json::to_string(&v["refit"]["model"]).unwrap()).unwrap();
    ok(&["simulate", "--model", s(&regen), "--voters", "20"]);
    let v: Value = serde_json::from_slice(&ok(&["embed", "-i", s(&p), "--refit", "mixture:2"]).stdout).unwrap();
    assert_eq!(v["refit"]["components"].as_array().unwrap().len(), 2);
    assert_eq!(run(&["embed", "-i", s(&p), "--refit", "kde"]).status.code(), Some(2));
    assert_eq!(run(&["embed", "-i", s(&p), "--link", "cubic:1"]).status.code(), Some(2));
    assert_eq!(run(&["embed", "-i", s(&p), "-d", "0"]).status.code(), Some(2));
}

#[test]
fn elect_examples() {
    let dir = TempDir::new().unwrap();
    let two = write(dir.path(), "two.csv", "voter,cand_1,cand_2\n1,0.2,0.8\n2,0.4,0.6\n");
    let v: Value = serde_json::from_slice(&ok(&["elect", "-i", s(&two), "--rule", "range"]).stdout).unwrap();
    assert_eq!(v["winner"], "cand_2");
    assert_eq!(v["rule"], "range");
    let scores: Vec<f64> = v["scores"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert!((scores[0] - 0.3).abs() < 1e-15 && (scores[1] - 0.7).abs() < 1e-15);
    let v: Value = serde_json::from_slice(&ok(&["elect", "-i", s(&two), "--rule", "approval:0.5"]).stdout).unwrap();
    assert_eq!(v["scores"], serde_json::json!([0.0, 2.0]));
    assert_eq!(v["winner"], "cand_2");

    let flat = write(dir.path(), "flat.csv", "voter,cand_1,cand_2,cand_3\n1,0.5,0.5,0.5\n2,0.5,0.5,0.5\n");
    for rule in ["range", "mj"] {
        let v: Value = serde_json::from_slice(&ok(&["elect", "-i", s(&flat), "--rule", rule]).stdout).unwrap();
        assert_eq!(v["winner"], "cand_1");
        assert!(!v["tie_trace"].as_array().unwrap().is_empty(), "{rule}");
    }
    let out = run(&["elect", "-i", s(&two), "--rule", "approval:1.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(run(&["elect", "-i", s(&two), "--rule", "borda"]).status.code(), Some(2));
}

#[test]
fn summary_reports_rankings() {
    let dir = TempDir::new().unwrap();
    let m = write(dir.path(), "m.json", r#"{"model":"iid","marginal":{"family":"uniform"},"m":3}"#);
    let p = dir.path().join("p.csv");
    ok(&["simulate", "--model", s(&m), "--voters", "6000", "--out", s(&p)]);
    let v: Value = serde_json::from_slice(&ok(&["summary", "-i", s(&p)]).stdout).unwrap();
    assert_eq!(v["n"], 6000);
    assert_eq!(v["rankings"]["orders"], 6);
    assert!(v["rankings"]["chi2"].as_f64().unwrap() < 20.5);
    let mean = v["candidates"][1]["mean"].as_f64().unwrap();
    assert!((mean - 0.5).abs() < 0.02);
    let d = write(dir.path(), "d.csv", "voter,a,b\n1,0,6\n2,6,6\n");
    let v: Value = serde_json::from_slice(&ok(&["summary", "-i", s(&d)]).stdout).unwrap();
    assert_eq!(v["candidates"][1]["grade_counts"], serde_json::json!([0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 2.0]));
    assert!(v["rankings"]["skipped"].is_string());
}
