//! Closed forms against the brute-force oracle.

use std::fs;
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use hkdiss_core::oracle::{build_block_hk, full_chain_evolution, two_momentum_block, MAX_SITES};
use hkdiss_core::relaxation::{density_trajectory, initial_state_localized, pair_propagator};
use hkdiss_core::response::green_k_time;
use hkdiss_core::{Model, Spin, C64};
use serde::Serialize;

use crate::config::RunConfig;
use crate::manifest::RunManifest;

pub const REPORT_FILE: &str = "oracle_report.json";

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub test: &'static str,
    pub max_error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckResult {
    fn new(test: &'static str, max_error: f64, tolerance: f64) -> Self {
        // NaN must fail.
        Self { test, max_error, tolerance, pass: max_error <= tolerance }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct OracleOptions {
    pub sites: usize,
    /// Sign of the jump term on fermion-odd operators; -1 is physical.
    pub xi: f64,
}

fn qrt(model: &Model, xi: f64, times: &[f64]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for k in model.lattice.momenta() {
        let closed = green_k_time(k, times, model)?;
        let oracle = build_block_hk(k, model)?.green(times, xi)?;
        for (a, b) in closed.iter().zip(&oracle) {
            worst = worst.max((a - b).norm());
        }
    }
    Ok(worst)
}

fn free_decay(model: &Model, xi: f64, times: &[f64]) -> Result<f64> {
    let free = model.with_interaction(0.0);
    let mut worst: f64 = 0.0;
    for k in free.lattice.momenta() {
        let eps = free.lattice.dispersion(k);
        let half = 0.5 * free.bath.total_rate(k, Spin::Up);
        let oracle = build_block_hk(k, &free)?.green(times, xi)?;
        for (&t, g) in times.iter().zip(&oracle) {
            let law = C64::new(0.0, -1.0) * C64::new(-half * t, -eps * t).exp();
            worst = worst.max((g - law).norm());
        }
    }
    Ok(worst)
}

fn steady_occupations(model: &Model) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for k in model.lattice.momenta() {
        let block = build_block_hk(k, model)?;
        let rho = block.reference_state()?;
        let occ = |mode: usize| (&rho * block.ops.number(mode).to_dense()).trace().re;
        let down = model.bath.steady_occupation(k, Spin::Down)?;
        worst = worst.max((occ(1) - down).abs());
        let up = if model.bath.up.is_closed() { 0.0 } else { model.bath.steady_occupation(k, Spin::Up)? };
        worst = worst.max((occ(0) - up).abs());
    }
    Ok(worst)
}

fn hierarchy(model: &Model) -> Result<(f64, f64)> {
    let l = model.sites();
    let lat = &model.lattice;
    let pairs = [(0, l / 2), (l / 4, (3 * l) / 4), (1, l - 1)];
    let (mut resid, mut err): (f64, f64) = (0.0, 0.0);
    for (a, b) in pairs {
        if a == b {
            continue;
        }
        let (k, q) = (lat.momentum(a), lat.momentum(b));
        let block = two_momentum_block(k, q, model)?;
        for t in [0.5, 2.0] {
            let (rows, r) = block.propagator(t);
            resid = resid.max(r);
            let closed = pair_propagator(k, q, t, model)?;
            for (x, y) in rows.iter().flatten().zip(closed.iter().flatten()) {
                err = err.max((x - y).norm());
            }
        }
    }
    Ok((resid, err))
}

fn chain(model: &Model, sites: usize) -> Result<f64> {
    let mut small = *model;
    small.lattice.sites = sites;
    let times = [0.0, 1.0, 2.5, 5.0];
    let initial = initial_state_localized(&small)?;
    let mut psi = vec![C64::new(0.0, 0.0); sites];
    psi[0] = C64::new(1.0, 0.0);
    let oracle = full_chain_evolution(&small, &psi, &times, 1e-12)?;
    let closed = density_trajectory(&initial, &times, &small)?;
    let mut worst: f64 = 0.0;
    for (o, c) in oracle.densities.iter().zip(&closed) {
        for (a, b) in o.iter().zip(&c.density) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok(worst)
}

pub fn run_suite(model: &Model, opts: OracleOptions) -> Result<Vec<CheckResult>> {
    if opts.sites < 2 || opts.sites > MAX_SITES {
        bail!("--sites must lie in 2..={MAX_SITES}, got {}", opts.sites);
    }
    if opts.xi != 1.0 && opts.xi != -1.0 {
        bail!("--xi must be -1 or 1, got {}", opts.xi);
    }
    let times: Vec<f64> = (0..=40).map(|i| 0.5 * i as f64).collect();
    let (resid, err) = hierarchy(model)?;
    Ok(vec![
        CheckResult::new("qrt_green", qrt(model, opts.xi, &times)?, 1e-8),
        CheckResult::new("free_decay_law", free_decay(model, opts.xi, &times)?, 1e-10),
        CheckResult::new("steady_state_occupations", steady_occupations(model)?, 1e-10),
        CheckResult::new("hierarchy_residual", resid, 1e-12),
        CheckResult::new("hierarchy_propagator", err, 1e-8),
        CheckResult::new("chain_density", chain(model, opts.sites)?, 1e-7),
    ])
}

#[derive(Serialize)]
struct Report<'a> {
    manifest_sha256: String,
    results: &'a [CheckResult],
}

/// Runs the suite, writes the report and returns whether every check passed.
pub fn oracle_check(cfg: &RunConfig, opts: OracleOptions, dir: &Path) -> Result<bool> {
    let start = Instant::now();
    let results = run_suite(&cfg.model, opts)?;
    let mut manifest = RunManifest::new("oracle-check", cfg.parameters.clone());
    manifest.grid("sites", opts.sites);
    manifest.grid("xi", opts.xi);
    manifest.outputs = vec![REPORT_FILE.into()];
    let report = Report { manifest_sha256: manifest.hash(), results: &results };
    let text = serde_json::to_string_pretty(&report)? + "\n";
    let path = dir.join(REPORT_FILE);
    fs::write(&path, &text).with_context(|| format!("writing {}", path.display()))?;
    print!("{text}");
    manifest.write_json(dir, start.elapsed().as_secs_f64())?;
    Ok(results.iter().all(|r| r.pass))
}
