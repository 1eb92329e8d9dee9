use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use delone_approx::config::ConfigFile;
use delone_approx::montecarlo::DichotomyStats;
use delone_approx::numerics::{Precision, Scalar};
use delone_approx::psi::Regime;
use serde_json::Value;
use sha2::{Digest, Sha256};

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(format!("{name}.json"))
}

fn run(config: &Path, out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_delone-approx"))
        .arg("--config")
        .arg(config)
        .arg("--output-dir")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn read_csv(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path)
        .unwrap()
        .records()
        .map(Result::unwrap)
        .collect()
}

fn exact(s: &str) -> Scalar {
    Scalar::parse(s, Precision::new(64)).unwrap()
}

#[test]
fn verify_passes_on_the_lattice_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&config("integer-lattice"), dir.path(), &["verify"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.lines().count() >= 8);
    assert!(stdout.lines().all(|l| l.contains("  pass  ")), "{stdout}");
    let rows = read_csv(&dir.path().join("verify.csv"));
    assert!(rows.iter().all(|r| &r[1] == "pass"));
}

#[test]
fn malformed_psi_variant_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(config("integer-lattice")).unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, text.replace("\"variant\": \"power\"", "\"variant\": \"powr\"")).unwrap();
    let out = run(&bad, &dir.path().join("out"), &["measure-table"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("powr"));
}

#[test]
fn missing_config_exits_2() {
    let out = Command::new(env!("CARGO_BIN_EXE_delone-approx"))
        .arg("verify")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn window_beyond_point_budget_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &config("integer-lattice"),
        dir.path(),
        &["--point-budget", "5", "gen-points", "--lo", "-20", "--hi", "20"],
    );
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("up to 41 points") && stderr.contains("budget is 5"), "{stderr}");
}

#[test]
fn precision_below_policy_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&config("integer-lattice"), dir.path(), &["--precision-bits", "100", "verify"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn independence_outputs_regenerate_the_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&config("integer-lattice"), dir.path(), &["independence", "--n", "12"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let measures: Vec<Scalar> = read_csv(&dir.path().join("measures.csv"))
        .iter()
        .map(|r| exact(&r[3]))
        .collect();
    let mut pair_sum = Scalar::zero();
    for r in read_csv(&dir.path().join("intersections.csv")) {
        let v = exact(&r[3]);
        pair_sum = if r[0] == r[1] { pair_sum + &v } else { pair_sum + &v + &v };
    }
    let total = measures.iter().fold(Scalar::zero(), |acc, m| acc + m);
    let ratio = &total * &total / &pair_sum;
    let summary = read_json(&dir.path().join("summary.json"));
    assert_eq!(summary["chung_erdos_ratio"]["exact"].as_str().unwrap(), ratio.to_exact_string());
    let trajectory = read_csv(&dir.path().join("ratio.csv"));
    assert_eq!(&trajectory.last().unwrap()[2], ratio.to_exact_string());
    assert_eq!(summary["quasi_independence_constant"]["exact"], "13/4");
}

#[test]
fn dichotomy_outputs_regenerate_the_statistics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("integer-lattice");
    let out = run(&cfg, dir.path(), &["--seed", "11", "dichotomy", "--samples", "500", "--checkpoints", "20,60"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let hits = read_csv(&dir.path().join("hits.csv"));
    let stats = read_json(&dir.path().join("stats.json"));
    let prec = Precision::new(read_json(&dir.path().join("manifest.json"))["precision_bits"].as_u64().unwrap() as u32);
    for (slot, entry) in stats["checkpoints"].as_array().unwrap().iter().enumerate() {
        let counts: Vec<u64> = hits.iter().map(|r| r[3 + slot].parse().unwrap()).collect();
        let expected = exact(entry["expected_hits"]["exact"].as_str().unwrap());
        let big_n = entry["N"].as_u64().unwrap();
        let again = DichotomyStats::from_counts(&counts, big_n, expected, 0, Regime::Divergent, prec);
        assert_eq!(entry["mean_hits"]["exact"].as_str().unwrap(), again.mean_hits.to_exact_string());
        assert_eq!(entry["std_dev"]["decimal"].as_str().unwrap(), again.std_dev.to_decimal_string(20));
        for (pct, v) in &again.quantiles {
            assert_eq!(entry["quantiles"][format!("p{pct}")].as_u64(), Some(*v));
        }
        for (k, v) in &again.histogram {
            assert_eq!(entry["histogram"][k.to_string()].as_u64(), Some(*v));
        }
    }
    // Same seed, same samples.
    let dir2 = tempfile::tempdir().unwrap();
    run(&cfg, dir2.path(), &["--seed", "11", "dichotomy", "--samples", "500", "--checkpoints", "20,60"]);
    assert_eq!(
        fs::read(dir.path().join("hits.csv")).unwrap(),
        fs::read(dir2.path().join("hits.csv")).unwrap()
    );
}

#[test]
fn manifest_hashes_the_effective_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("fibonacci-chain");
    let out = run(&cfg, dir.path(), &["--seed", "5", "gen-points", "--lo", "-5", "--hi", "5"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest = read_json(&dir.path().join("manifest.json"));
    let mut file = ConfigFile::load(&cfg).unwrap();
    file.seed = 5;
    let digest = hex::encode(Sha256::digest(file.canonical_json().as_bytes()));
    assert_eq!(manifest["config_sha256"].as_str().unwrap(), digest);
    assert_eq!(manifest["seed"], 5);
    assert_eq!(manifest["command"], "gen-points");
    assert_eq!(manifest["files"][0], "points.csv");
    let points = read_csv(&dir.path().join("points.csv"));
    assert_eq!(points.len(), 7);
}

#[test]
fn measure_table_and_zoom_write_tidy_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("integer-lattice");
    let out = run(&cfg, &dir.path().join("m"), &["measure-table", "--n", "6"]);
    assert_eq!(out.status.code(), Some(0));
    let rows = read_csv(&dir.path().join("m/measures.csv"));
    assert_eq!(rows.len(), 6);
    assert_eq!(&rows[1][7], "13/64");
    let out = run(&cfg, &dir.path().join("z"), &["zoom", "--n1", "3", "--n2", "10"]);
    assert_eq!(out.status.code(), Some(0));
    let rows = read_csv(&dir.path().join("z/zoom.csv"));
    assert_eq!(rows.len(), 6);
    assert_eq!(&rows[0][1], "1/8");
}
