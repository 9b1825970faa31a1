use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cairo-qec"))
}

fn run(args: &[&str], dir: &Path) -> Output {
    bin().args(args).current_dir(dir).output().expect("spawn")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn verify_reports_all_flows() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["verify"], dir.path());
    assert!(o.status.success());
    assert!(stdout(&o).contains("16/16 flows pass"));
}

#[test]
fn even_width_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["gen", "--d", "4", "--out", "c.txt"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("width must be odd"));
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["frobnicate"], dir.path()).status.code(), Some(2));
}

#[test]
fn missing_input_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["noisify", "--p", "0.001", "--in", "nope.txt"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn version_flag() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["--version"], dir.path());
    assert!(o.status.success());
    assert!(stdout(&o).contains(env!("CARGO_PKG_VERSION")));
}

#[test]
fn circuit_pipeline_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert!(run(&["gen", "--d", "3", "--rounds", "3", "--basis", "X", "--out", "c.txt"], p).status.success());
    assert!(run(&["noisify", "--p", "0.002", "--in", "c.txt", "--out", "n.txt"], p).status.success());
    assert!(run(&["dem", "--in", "n.txt", "--out", "m.dem"], p).status.success());
    for name in ["a.bin", "b.bin"] {
        assert!(run(&["sample", "--in", "n.txt", "--shots", "3000", "--seed", "5", "--out", name], p).status.success());
    }
    assert_eq!(fs::read(p.join("a.bin")).unwrap(), fs::read(p.join("b.bin")).unwrap());
    let o = run(&["decode", "--dem", "m.dem", "--events", "a.bin", "--out", "pred.txt"], p);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let pred = fs::read_to_string(p.join("pred.txt")).unwrap();
    assert_eq!(pred.lines().count(), 3000);
    assert!(pred.lines().all(|l| l == "0" || l == "1"));
    let o = run(&["distance", "--dem", "m.dem"], p);
    assert_eq!(stdout(&o).trim(), "2");
}

#[test]
fn collect_fit_footprint_on_demo_config() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../demo/campaign.cfg");
    fs::copy(&cfg, p.join("campaign.cfg")).unwrap();
    let o = run(&["collect", "--tasks", "campaign.cfg", "--max-shots", "4000"], p);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = fs::read_to_string(p.join("stats.csv")).unwrap();
    assert!(table.starts_with("construction,basis,d,rounds,p,q,shots,errors,seconds\n"));
    assert_eq!(table.lines().count(), 1 + 8);
    // Resuming adds shots to every row.
    assert!(run(&["collect", "--tasks", "campaign.cfg", "--max-shots", "1000"], p).status.success());
    let again = fs::read_to_string(p.join("stats.csv")).unwrap();
    assert_eq!(again.lines().count(), 1 + 8);
    assert!(again.lines().skip(1).all(|l| l.split(',').nth(6) == Some("5000")));
    let o = run(&["fit", "--stats", "stats.csv", "--group-by", "construction,basis,p", "--out", "fit.json"], p);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(p.join("fit.json")).unwrap()).unwrap();
    assert_eq!(v["groups"].as_array().unwrap().len(), 4);
    assert!(v["version"].as_str().unwrap().contains(env!("CARGO_PKG_VERSION")));
    let o = run(&["footprint", "--fit", "fit.json", "--out", "footprint.csv"], p);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let fp = fs::read_to_string(p.join("footprint.csv")).unwrap();
    assert!(fp.starts_with("construction,basis,p,q_low,q_mle,q_high\n"));
    assert_eq!(fp.lines().count(), 1 + 4);
}

#[test]
fn fit_rejects_unknown_group_field() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("s.csv"), "construction,basis,d,rounds,p,q,shots,errors,seconds\n").unwrap();
    let o = run(&["fit", "--stats", "s.csv", "--group-by", "colour"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}
