use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn tcf(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tcf")).current_dir(dir).args(args).output().expect("run tcf")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn synth(dir: &Path, extra: &[&str]) {
    let mut args = vec!["synth", "--out-dir", "in"];
    args.extend_from_slice(extra);
    let o = tcf(dir, &args);
    assert!(o.status.success(), "{}", stderr(&o));
}

fn compute(dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "compute",
        "--period",
        "2024-01",
        "--input-dir",
        "in",
        "--models",
        "in/models.csv",
        "--equivalencies",
        "in/equivalencies.toml",
    ];
    args.extend_from_slice(extra);
    tcf(dir, &args)
}

const SAMPLES_HEADER: &str = "# schema_version: 1\n\
    device_model,cpu_utilization,cache_moved,dram_accessed,disk_moved,measured_energy_wh\n";

#[test]
fn calibrate_two_models() {
    let tmp = TempDir::new().unwrap();
    synth(tmp.path(), &[]);
    let all = fs::read_to_string(tmp.path().join("in/calibration.csv")).unwrap();
    let two: Vec<&str> = all.lines().filter(|l| !l.starts_with("RACK_B200")).collect();
    fs::write(tmp.path().join("two.csv"), two.join("\n")).unwrap();

    let o = tcf(tmp.path(), &["calibrate", "--samples", "two.csv", "--models", "m.csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let models = fs::read_to_string(tmp.path().join("m.csv")).unwrap();
    assert_eq!(models.lines().count(), 4, "{models}");
    let out = stdout(&o);
    assert_eq!(out.matches("1.0000").count(), 2, "{out}");
}

#[test]
fn calibrate_constant_cpu_is_singular() {
    let tmp = TempDir::new().unwrap();
    let rows: String = (0..8).map(|i| format!("M,0.5,{},{},{},{}\n", i * i, 3 * i + 1, (i * 7) % 5, 10 + i)).collect();
    fs::write(tmp.path().join("s.csv"), format!("{SAMPLES_HEADER}{rows}")).unwrap();
    let o = tcf(tmp.path(), &["calibrate", "--samples", "s.csv", "--models", "m.csv"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("SingularDesign"), "{}", stderr(&o));
    assert!(!tmp.path().join("m.csv").exists());
}

#[test]
fn compute_missing_model_names_it() {
    let tmp = TempDir::new().unwrap();
    synth(tmp.path(), &["--tenants", "2", "--datacenters", "1", "--seed", "3"]);
    let path = tmp.path().join("in/servers.csv");
    let servers = fs::read_to_string(&path).unwrap();
    let (head, rest) = servers.split_at(servers.find("\nDC_").unwrap() + 1);
    let (first, tail) = rest.split_at(rest.find('\n').unwrap());
    let mut cells: Vec<&str> = first.split(',').collect();
    cells[2] = "UNCALIBRATED_X9";
    fs::write(&path, format!("{head}{}{tail}", cells.join(","))).unwrap();

    let o = compute(tmp.path(), &[]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("UNCALIBRATED_X9"), "{}", stderr(&o));
}

#[test]
fn compute_unknown_tenant_reports_line() {
    let tmp = TempDir::new().unwrap();
    synth(tmp.path(), &["--tenants", "2", "--datacenters", "1", "--seed", "3"]);
    let path = tmp.path().join("in/network.csv");
    let mut network = fs::read_to_string(&path).unwrap();
    network.push_str("DC_00,NET_00_0,router,GHOST,10,10\n");
    let line = network.lines().count();
    fs::write(&path, network).unwrap();

    let o = compute(tmp.path(), &[]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains(&format!("network.csv:{line}")) && err.contains("GHOST"), "{err}");
}

#[test]
fn compute_lists_every_validation_error() {
    let tmp = TempDir::new().unwrap();
    synth(tmp.path(), &["--tenants", "2", "--datacenters", "1", "--seed", "3"]);
    for file in ["network.csv", "servers.csv"] {
        let path = tmp.path().join("in").join(file);
        let mut text = fs::read_to_string(&path).unwrap();
        text.push_str(if file == "network.csv" {
            "DC_00,NET_00_0,router,GHOST_A,10,10\n"
        } else {
            "DC_00,SRV_X,RACK_A100,GHOST_B,0.5,1,1,1\n"
        });
        fs::write(&path, text).unwrap();
    }
    let o = compute(tmp.path(), &[]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("GHOST_A") && err.contains("GHOST_B"), "{err}");
}

#[test]
fn synth_is_deterministic() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    synth(a.path(), &["--seed", "9"]);
    synth(b.path(), &["--seed", "9"]);
    for entry in fs::read_dir(a.path().join("in")).unwrap() {
        let name = entry.unwrap().file_name();
        let x = fs::read(a.path().join("in").join(&name)).unwrap();
        let y = fs::read(b.path().join("in").join(&name)).unwrap();
        assert_eq!(x, y, "{name:?} differs");
    }
}

#[test]
fn single_tenant_takes_whole_datacenter() {
    let tmp = TempDir::new().unwrap();
    synth(tmp.path(), &["--tenants", "1", "--datacenters", "1"]);
    let o = compute(tmp.path(), &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(tmp.path().join("reports/T000/2024-01.json")).unwrap()).unwrap();
    assert_eq!(report["datacenters"][0]["lambda"], 1.0);
}

#[test]
fn compute_is_idempotent_and_replaces_history() {
    let tmp = TempDir::new().unwrap();
    synth(tmp.path(), &["--tenants", "3", "--datacenters", "2"]);
    assert!(compute(tmp.path(), &[]).status.success());
    let first = fs::read(tmp.path().join("reports/T001/2024-01.json")).unwrap();
    let stored = fs::read(tmp.path().join("history/T001/2024-01.json")).unwrap();
    assert_eq!(first, stored);

    let o = compute(tmp.path(), &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read(tmp.path().join("reports/T001/2024-01.json")).unwrap(), first);
    assert_eq!(fs::read_dir(tmp.path().join("history/T001")).unwrap().count(), 1);
}

#[test]
fn audit_clean_then_tampered() {
    let tmp = TempDir::new().unwrap();
    synth(tmp.path(), &["--tenants", "2", "--datacenters", "2"]);
    assert!(compute(tmp.path(), &[]).status.success());
    let audit = |report: &str| {
        tcf(
            tmp.path(),
            &[
                "audit",
                "--report",
                report,
                "--input-dir",
                "in",
                "--models",
                "in/models.csv",
                "--equivalencies",
                "in/equivalencies.toml",
                "--history-dir",
                "history",
            ],
        )
    };
    let o = audit("reports/T000/2024-01.json");
    assert!(o.status.success(), "{}{}", stdout(&o), stderr(&o));

    let text = fs::read_to_string(tmp.path().join("reports/T000/2024-01.json")).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let gross = v["summary"]["grossEmissions"].as_f64().unwrap();
    v["summary"]["grossEmissions"] = serde_json::json!(gross + 1.0);
    fs::write(tmp.path().join("t.json"), serde_json::to_string_pretty(&v).unwrap()).unwrap();
    let o = audit("t.json");
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).contains("$.summary.grossEmissions:"), "{}", stdout(&o));
}

#[test]
fn report_rerenders_html() {
    let tmp = TempDir::new().unwrap();
    synth(tmp.path(), &["--tenants", "1", "--datacenters", "2"]);
    assert!(compute(tmp.path(), &[]).status.success());
    let html = fs::read(tmp.path().join("reports/T000/2024-01.html")).unwrap();
    let o = tcf(tmp.path(), &["report", "--report", "reports/T000/2024-01.json", "--out-dir", "again"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read(tmp.path().join("again/T000/2024-01.html")).unwrap(), html);
}

#[test]
fn bad_thresholds_rejected() {
    let tmp = TempDir::new().unwrap();
    synth(tmp.path(), &[]);
    let o = compute(tmp.path(), &["--trend-thresholds", "5,-5"]);
    assert!(!o.status.success());
}
