use std::path::Path;
use std::process::{Command, Output};

fn luo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_luo"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn generate(dir: &Path, name: &str, seed: u64) -> std::path::PathBuf {
    let out = dir.join(name);
    let o = luo(&[
        "generate",
        "--seed",
        &seed.to_string(),
        "--rows",
        "8",
        "--cols",
        "8",
        "--out",
        p(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

#[test]
fn generate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = std::fs::read(generate(dir.path(), "a.json", 5)).unwrap();
    let b = std::fs::read(generate(dir.path(), "b.json", 5)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn run_then_front_dump() {
    let dir = tempfile::tempdir().unwrap();
    let inst = generate(dir.path(), "i.json", 1);
    let rec = dir.path().join("r.json");
    let o = luo(&[
        "run",
        "--instance",
        p(&inst),
        "--engine",
        "NSGA-II",
        "--crossover",
        "DRC",
        "--pop",
        "8",
        "--budget",
        "80",
        "--seed",
        "4",
        "--tel-mode",
        "literal",
        "--out",
        p(&rec),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(&rec).unwrap()).unwrap();
    assert_eq!(json["ffe_used"], 80);
    assert_eq!(json["config"]["tel_mode"], "literal");

    let o = luo(&["front-dump", "--record", p(&rec)]);
    assert!(o.status.success());
    let csv = String::from_utf8(o.stdout).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("lap,tel"));
    let rows: Vec<_> = lines.collect();
    assert_eq!(rows.len(), json["front"].as_array().unwrap().len());
    for r in rows {
        let v: Vec<f64> = r.split(',').map(|x| x.parse().unwrap()).collect();
        assert_eq!(v.len(), 2);
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let inst = generate(dir.path(), "i.json", 2);
    assert_eq!(
        luo(&["run", "--instance", p(&inst), "--p-mut", "1.5"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        luo(&["run", "--instance", p(&inst), "--repair", "XYZ"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(luo(&["frobnicate"]).status.code(), Some(1));
    let missing = dir.path().join("missing.json");
    assert_eq!(
        luo(&["run", "--instance", p(&missing)]).status.code(),
        Some(2)
    );
    std::fs::write(&missing, "{ not json").unwrap();
    assert_eq!(
        luo(&["run", "--instance", p(&missing)]).status.code(),
        Some(1)
    );
    assert_eq!(
        luo(&["compare", "--archive", p(dir.path())]).status.code(),
        Some(2)
    );
    assert_eq!(luo(&["--help"]).status.code(), Some(0));
}

#[test]
fn experiment_then_compare() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), "x.json", 7);
    generate(dir.path(), "y.json", 8);
    let cfg = |cx: &str| {
        serde_json::json!({
            "engine": "MOEA/D",
            "pop_size": 6,
            "operators": {
                "crossover": cx, "mutation": "MutC", "repair": "RRM", "init": "SP-I",
                "p_cross": 0.5, "p_mut": 0.5
            },
            "seed": 0,
            "tel_mode": "boundary"
        })
    };
    let plan = serde_json::json!({
        "instances": ["x.json", "y.json"],
        "configs": [{"name": "ac", "config": cfg("AC")}, {"name": "drc", "config": cfg("DRC")}],
        "seeds": 5,
        "budget": 60,
        "output_dir": "unused"
    });
    let plan_path = dir.path().join("plan.json");
    std::fs::write(&plan_path, plan.to_string()).unwrap();
    let out = dir.path().join("archive");
    let o = luo(&[
        "experiment",
        "--plan",
        p(&plan_path),
        "--workers",
        "2",
        "--out",
        p(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("manifest.json").exists());

    let report = dir.path().join("report.json");
    let o = luo(&["compare", "--archive", p(&out), "--out", p(&report)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r: serde_json::Value = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    assert_eq!(r["optimizers"], serde_json::json!(["ac", "drc"]));
    let joined: Vec<f64> = r["joined_rank"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert!((joined.iter().sum::<f64>() - 3.0).abs() < 1e-12);
    assert!(r["pairs"][0]["tests"][0]["hv"].is_object());

    // a deleted record makes the archive incomplete
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap();
    let first = manifest["entries"][0]["record"].as_str().unwrap();
    std::fs::remove_file(out.join(first)).unwrap();
    assert_eq!(
        luo(&["compare", "--archive", p(&out)]).status.code(),
        Some(2)
    );
}

#[test]
fn tune_emits_a_loadable_config() {
    let dir = tempfile::tempdir().unwrap();
    let inst = generate(dir.path(), "i.json", 3);
    let cfg = dir.path().join("tuned.json");
    let rep = dir.path().join("trace.json");
    let o = luo(&[
        "tune",
        "--instances",
        p(&inst),
        "--engine",
        "moead",
        "--pop",
        "4",
        "--budget",
        "8",
        "--seeds",
        "1",
        "--out",
        p(&cfg),
        "--report",
        p(&rep),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let c: serde_json::Value = serde_json::from_slice(&std::fs::read(&cfg).unwrap()).unwrap();
    assert_eq!(c["engine"], "MOEA/D");
    let t: serde_json::Value = serde_json::from_slice(&std::fs::read(&rep).unwrap()).unwrap();
    assert_eq!(t["starts"].as_array().unwrap().len(), 2);
}
