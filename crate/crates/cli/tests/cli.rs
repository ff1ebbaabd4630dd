use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};

fn hkdiss(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hkdiss"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], out: &Path) {
    let o = hkdiss(args, out);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
}

struct Table {
    hash: String,
    manifest: String,
    columns: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl Table {
    fn read(path: &Path) -> Self {
        let text = fs::read_to_string(path).unwrap();
        let mut lines = text.lines();
        let hash = lines.next().unwrap().strip_prefix("# manifest_sha256 = ").unwrap().to_string();
        let manifest = lines.next().unwrap().strip_prefix("# manifest = ").unwrap().to_string();
        let columns = lines.next().unwrap().split(',').map(String::from).collect();
        let rows = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
        Self { hash, manifest, columns, rows }
    }

    fn col(&self, name: &str) -> usize {
        self.columns.iter().position(|c| c == name).unwrap()
    }
}

fn sha256(s: &str) -> String {
    Sha256::digest(s.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

/// `|G(j,t)|^2` keyed by `(j, t index)` at the last time.
fn last_profile(t: &Table) -> HashMap<i64, f64> {
    let (cj, ct, ca) = (t.col("j"), t.col("t"), t.col("abs2_g"));
    let t_last = t.rows.last().unwrap()[ct];
    t.rows.iter().filter(|r| r[ct] == t_last).map(|r| (r[cj] as i64, r[ca])).collect()
}

#[test]
fn green_files_reference_their_manifest() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["green", "--preset", "fig1c", "--t-max", "4", "--dt", "0.5"], dir.path());
    let m = manifest(dir.path());
    let outputs: Vec<&str> = m["outputs"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert_eq!(outputs, ["green_k_t.csv", "green_j_t.csv", "xp.csv"]);
    for name in outputs {
        let t = Table::read(&dir.path().join(name));
        assert_eq!(t.hash, sha256(&t.manifest));
        assert_eq!(t.hash, m["manifest_sha256"].as_str().unwrap());
        assert!(!t.rows.is_empty());
    }
    let gk = Table::read(&dir.path().join("green_k_t.csv"));
    assert_eq!(gk.columns, ["k", "t", "re_g", "im_g"]);
    assert_eq!(gk.rows.len(), 128 * 9);
    // G(k, 0) = -i
    assert!(gk.rows.iter().filter(|r| r[1] == 0.0).all(|r| r[2].abs() < 1e-15 && (r[3] + 1.0).abs() < 1e-15));
    let xp = Table::read(&dir.path().join("xp.csv"));
    assert!(xp.rows.last().unwrap()[1] > 1.0);
    assert!(m["wall_clock_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn free_cone_is_symmetric_and_interacting_cone_leans_right() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["green", "--preset", "fig1b", "--t-max", "8", "--dt", "1"], dir.path());
    let free = last_profile(&Table::read(&dir.path().join("green_j_t.csv")));
    for j in 1..64 {
        assert!((free[&j] - free[&-j]).abs() < 1e-12);
    }
    ok(&["green", "--preset", "fig1c", "--t-max", "8", "--dt", "1"], dir.path());
    let p = last_profile(&Table::read(&dir.path().join("green_j_t.csv")));
    let right: f64 = (1..64).map(|j| p[&j]).sum();
    let left: f64 = (1..64).map(|j| p[&-j]).sum();
    assert!(right > left);
}

#[test]
fn identical_runs_give_identical_csv_bytes() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        ok(&["relax", "--preset", "fig3", "--t-max", "3", "--dt", "0.5", "--threads", "1"], d.path());
    }
    for name in ["density.csv", "xn.csv"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap());
    }
}

#[test]
fn config_file_matches_preset_and_reports_missing_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(
        &cfg,
        "# same values as the fig3 preset\nL = 128\nJ = 1\nU = 4\nkappa_down = 1.5\ngamma_down = 0.5\n\
         loss_topology_down = nonreciprocal\n",
    )
    .unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&["relax", "--config", cfg.to_str().unwrap(), "--t-max", "2"], &a);
    ok(&["relax", "--preset", "fig3", "--t-max", "2"], &b);
    let (ta, tb) = (Table::read(&a.join("density.csv")), Table::read(&b.join("density.csv")));
    assert_eq!(ta.rows, tb.rows);
    assert_ne!(ta.hash, tb.hash);

    fs::write(&cfg, "J = 1\nU = 0\n").unwrap();
    let o = hkdiss(&["green", "--config", cfg.to_str().unwrap()], &a);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing required key `L`"));

    fs::write(&cfg, "L = 8\nJ = 1\nU = 0\ngamma_up = fast\n").unwrap();
    let o = hkdiss(&["green", "--config", cfg.to_str().unwrap()], &a);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 4: key `gamma_up`"));
}

#[test]
fn relax_drifts_right_and_rejects_empty_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["relax", "--preset", "fig3"], dir.path());
    let xn = Table::read(&dir.path().join("xn.csv"));
    let last = xn.rows.last().unwrap();
    assert_eq!(last[0], 10.0);
    assert!((last[1] - 1.366).abs() < 1e-3);
    let density = Table::read(&dir.path().join("density.csv"));
    assert_eq!(density.columns, ["t", "j", "n"]);
    assert_eq!(density.rows.len(), 101 * 128);

    let o = Command::new(env!("CARGO_BIN_EXE_hkdiss"))
        .args(["relax", "--preset", "fig3", "--out", ""])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--out"));
}

#[test]
fn spectral_map_covers_grid_and_is_non_negative() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["spectral", "--preset", "fig2c", "--omega-points", "256"], dir.path());
    let t = Table::read(&dir.path().join("spectral.csv"));
    assert_eq!(t.columns, ["k", "omega", "a"]);
    assert_eq!(t.rows.len(), 128 * 256);
    assert!(t.rows.iter().all(|r| r[2] >= 0.0));
    let (w0, w1) = (t.rows[0][1], t.rows[255][1]);
    assert_eq!((w0, w1), (-6.0, 10.0));
    assert!(manifest(dir.path())["grids"]["broadening"].is_null());
}

#[test]
fn hubbard_outputs_and_eta_override() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        &["hubbard", "--preset", "fig4", "--omega-points", "256", "--eta", "0.01", "--t-max", "2", "--dt", "1"],
        dir.path(),
    );
    let m = manifest(dir.path());
    assert_eq!(m["grids"]["omega"]["eta"].as_f64(), Some(0.01));
    assert_eq!(m["grids"]["hartree"].as_bool(), Some(false));
    let sigma = Table::read(&dir.path().join("sigma.csv"));
    assert_eq!(sigma.columns, ["k", "omega", "re_sigma", "im_sigma"]);
    assert!(sigma.rows.iter().all(|r| r[3] <= 0.0));
    let g = Table::read(&dir.path().join("green_j_t.csv"));
    assert_eq!(g.columns, ["j", "t", "abs2_g"]);
    let at_zero: Vec<&Vec<f64>> = g.rows.iter().filter(|r| r[1] == 0.0).collect();
    assert!(at_zero.iter().all(|r| (r[2] - if r[0] == 0.0 { 1.0 } else { 0.0 }).abs() < 2e-3));

    let cfg = dir.path().join("free.cfg");
    fs::write(&cfg, "L = 16\nJ = 1\nU = 0\nkappa_down = 0.2\ngamma_down = 2\nloss_topology_down = nonreciprocal\n")
        .unwrap();
    let free = dir.path().join("free");
    ok(&["hubbard", "--config", cfg.to_str().unwrap(), "--omega-points", "64", "--t-max", "1"], &free);
    let sigma = Table::read(&free.join("sigma.csv"));
    assert!(sigma.rows.iter().all(|r| r[2] == 0.0 && r[3] == 0.0));
}

#[test]
fn oracle_suite_passes_and_wrong_sign_fails() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["oracle-check", "--preset", "fig2b", "--sites", "4"], dir.path());
    let report: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("oracle_report.json")).unwrap()).unwrap();
    assert_eq!(report["manifest_sha256"], manifest(dir.path())["manifest_sha256"]);
    let results = report["results"].as_array().unwrap();
    assert_eq!(results.len(), 6);
    for r in results {
        let keys: Vec<&str> = r.as_object().unwrap().keys().map(String::as_str).collect();
        assert_eq!(keys, ["max_error", "pass", "test", "tolerance"]);
        assert_eq!(r["pass"], Value::Bool(true), "{r}");
    }

    let o = hkdiss(&["oracle-check", "--xi", "1"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let report: Value = serde_json::from_slice(&o.stdout).unwrap();
    let failed: Vec<&str> = report["results"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|r| r["pass"] == Value::Bool(false))
        .map(|r| r["test"].as_str().unwrap())
        .collect();
    assert_eq!(failed, ["qrt_green", "free_decay_law"]);

    let o = hkdiss(&["oracle-check", "--sites", "7"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}
