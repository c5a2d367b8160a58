use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn sas_sim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sas-sim"))
        .args(args)
        .env_remove("SAS_SIM_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn classify_json(args: &[&str]) -> Value {
    let mut all = vec!["classify"];
    all.extend_from_slice(args);
    all.push("--json");
    let out = sas_sim(&all);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn state(doc: &Value, agent: &str, class: &str) -> (String, String, u64, u64) {
    let row = doc["agents"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["agent"] == agent && r["class"] == class)
        .unwrap_or_else(|| panic!("no row {agent}/{class}"));
    (
        row["state"].as_str().unwrap().to_string(),
        row["cross"].as_str().unwrap().to_string(),
        row["required"].as_u64().unwrap(),
        row["available"].as_u64().unwrap(),
    )
}

#[test]
fn classify_richard_iii() {
    let doc = classify_json(&["richard_iii"]);
    // |{horse}| = 1 > 0 = |{}| and |{}| = 0 < 1 = |{kingship}|
    let (s, _, r, a) = state(&doc, "richard", "goods");
    assert_eq!((s.as_str(), r, a), ("scarcity", 1, 0));
    let (s, _, r, a) = state(&doc, "richard", "status");
    assert_eq!((s.as_str(), r, a), ("abundance", 0, 1));
}

#[test]
fn classify_table_names_states() {
    let out = sas_sim(&["classify", "richard_iii"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let goods = text
        .lines()
        .find(|l| l.starts_with("richard") && l.contains("goods"))
        .unwrap();
    assert!(goods.contains("scarcity"), "{goods}");
    let status = text
        .lines()
        .find(|l| l.starts_with("richard") && l.contains("status"))
        .unwrap();
    assert!(status.contains("abundance"), "{status}");
}

#[test]
fn classify_protestant_variants() {
    let doc = classify_json(&["protestant"]);
    let (s, cross, r, a) = state(&doc, "protestant", "goods");
    assert_eq!(
        (s.as_str(), cross.as_str(), r, a),
        ("abundance", "absolute_abundance", 2, 3)
    );

    let doc = classify_json(&["protestant", "--variant", "system-scarcity"]);
    let (s, cross, _, _) = state(&doc, "protestant", "goods");
    assert_eq!(
        (s.as_str(), cross.as_str()),
        ("abundance", "quasi_abundance")
    );
    let system = &doc["system"][0];
    assert_eq!(system["class"], "goods");
    assert_eq!(system["state"], "scarcity");
}

#[test]
fn classify_famine() {
    let doc = classify_json(&["famine"]);
    let system = &doc["system"][0];
    assert_eq!(
        (system["required"].as_u64(), system["available"].as_u64()),
        (Some(10), Some(16))
    );
    assert_eq!(system["state"], "abundance");
    for p in ["p01", "p02", "p03", "m01", "m02"] {
        let (s, cross, _, _) = state(&doc, p, "goods");
        assert_eq!(
            (s.as_str(), cross.as_str()),
            ("scarcity", "quasi_scarcity"),
            "{p}"
        );
    }
}

#[test]
fn emitted_fixture_classifies_the_same() {
    let dir = tempfile::tempdir().unwrap();
    let out = sas_sim(&["fixtures", "emit", "protestant"]);
    assert!(out.status.success());
    let file = dir.path().join("protestant.json");
    std::fs::write(&file, &out.stdout).unwrap();
    let doc = classify_json(&[file.to_str().unwrap()]);
    let (s, _, r, a) = state(&doc, "protestant", "goods");
    assert_eq!((s.as_str(), r, a), ("abundance", 2, 3));
    assert!(sas_sim(&["validate", file.to_str().unwrap()])
        .status
        .success());
}

#[test]
fn fixtures_list() {
    let out = sas_sim(&["fixtures", "list"]);
    assert!(out.status.success());
    let text = stdout(&out);
    for name in ["richard_iii", "protestant", "famine"] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name} missing");
    }
}

fn run_to(dir: &Path, extra: &[&str]) -> (Vec<u8>, Vec<u8>) {
    let mut args = vec![
        "run",
        "famine",
        "--ticks",
        "1",
        "--seed",
        "7",
        "--out",
        dir.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    let out = sas_sim(&args);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    (
        std::fs::read(dir.join("report.json")).unwrap(),
        std::fs::read(dir.join("states.csv")).unwrap(),
    )
}

#[test]
fn run_twice_identical_files() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(run_to(a.path(), &[]), run_to(b.path(), &[]));
}

#[test]
fn run_report_contents() {
    let dir = tempfile::tempdir().unwrap();
    let (json, csv) = run_to(dir.path(), &[]);
    let report: Value = serde_json::from_slice(&json).unwrap();
    assert_eq!(report["seed"], 7);
    assert_eq!(report["ticks_run"], 1);
    let csv = String::from_utf8(csv).unwrap();
    assert!(csv
        .starts_with("tick,agent,class,state,cross,extrapolated,entitlement,required,available\n"));
    assert!(
        csv.contains("1,p01,goods,scarcity,quasi_scarcity,false,E-,1,0"),
        "{csv}"
    );
    assert!(
        csv.contains("1,m01,goods,sufficiency,quasi_sufficiency,true,E+,1,1"),
        "{csv}"
    );

    let (_, csv) = run_to(dir.path(), &["--food-coupons"]);
    let csv = String::from_utf8(csv).unwrap();
    assert!(
        !csv.lines().any(|l| l.starts_with("1,") && l.contains("E-")),
        "{csv}"
    );
}

#[test]
fn seed_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    let seed_of = |cmd: &mut Command| {
        let out = cmd.output().unwrap();
        assert!(out.status.success());
        let report: Value =
            serde_json::from_slice(&std::fs::read(dir.path().join("report.json")).unwrap())
                .unwrap();
        report["seed"].as_u64().unwrap()
    };
    let bin = env!("CARGO_BIN_EXE_sas-sim");
    assert_eq!(
        seed_of(
            Command::new(bin)
                .args(["run", "richard_iii", "--out", out_dir])
                .env_remove("SAS_SIM_SEED")
        ),
        0
    );
    assert_eq!(
        seed_of(
            Command::new(bin)
                .args(["run", "richard_iii", "--out", out_dir])
                .env("SAS_SIM_SEED", "11")
        ),
        11
    );
    assert_eq!(
        seed_of(
            Command::new(bin)
                .args(["run", "richard_iii", "--seed", "3", "--out", out_dir])
                .env("SAS_SIM_SEED", "11")
        ),
        3
    );
    let bad = Command::new(bin)
        .args(["run", "richard_iii"])
        .env("SAS_SIM_SEED", "lots")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn exit_codes() {
    assert_eq!(sas_sim(&["validate", "richard_iii"]).status.code(), Some(0));
    assert_eq!(
        sas_sim(&["validate", "no_such_thing"]).status.code(),
        Some(1)
    );
    assert_eq!(
        sas_sim(&["run", "richard_iii", "--ticks", "0"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        sas_sim(&["classify", "richard_iii", "--variant", "system-scarcity"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(sas_sim(&["bogus"]).status.code(), Some(1));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"schema_version": 1, "agents": [{"id": "a"}], "rules": [{"id": "r", "type": "gift", "holder": {"ids": ["ghost"]}, "obtain": {"class": "goods", "kind": "x", "count": 1}}]}"#).unwrap();
    let out = sas_sim(&["validate", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ghost"));

    // A file where the output directory should go.
    let blocker = dir.path().join("blocker");
    std::fs::write(&blocker, "").unwrap();
    let out = sas_sim(&["run", "richard_iii", "--out", blocker.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn run_from_file_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("p.json");
    std::fs::write(&file, stdout(&sas_sim(&["fixtures", "emit", "protestant"]))).unwrap();
    let out_dir = dir.path().join("out");
    let out = sas_sim(&[
        "run",
        file.to_str().unwrap(),
        "--ticks",
        "2",
        "--mode",
        "coverage",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: Value =
        serde_json::from_slice(&std::fs::read(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["ticks_run"], 2);
    assert_eq!(report["mode"], "coverage");
}
