//! One function per subcommand. Each computes everything first, then
//! writes its files and the manifest.

use std::fs;
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use hkdiss_core::hubbard::{FrequencyGrid, HubbardPt2, TransformWarning};
use hkdiss_core::relaxation::{density_trajectory, drift_xn, initial_state_localized};
use hkdiss_core::response::{default_omegas, green_k_time, green_real_space, spectral_function};
use serde::Serialize;

use crate::config::RunConfig;
use crate::manifest::{write_csv, RunManifest};

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TimeGrid {
    pub t_max: f64,
    pub dt: f64,
}

impl TimeGrid {
    pub fn times(&self) -> Result<Vec<f64>> {
        if !(self.dt > 0.0 && self.t_max >= 0.0 && self.t_max.is_finite()) {
            bail!("time grid needs dt > 0 and a finite t_max >= 0");
        }
        let n = (self.t_max / self.dt).round() as usize;
        Ok((0..=n).map(|i| i as f64 * self.dt).collect())
    }
}

pub fn prepare_out(dir: &Path) -> Result<()> {
    if dir.as_os_str().is_empty() {
        bail!("output directory is empty");
    }
    fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))
}

fn finish(manifest: &RunManifest, dir: &Path, start: Instant) -> Result<()> {
    manifest.write_json(dir, start.elapsed().as_secs_f64())?;
    Ok(())
}

pub fn green(cfg: &RunConfig, grid: TimeGrid, dir: &Path) -> Result<()> {
    let start = Instant::now();
    let model = &cfg.model;
    let times = grid.times()?;
    let momenta = model.lattice.momenta();
    let gk = momenta
        .iter()
        .map(|&k| green_k_time(k, &times, model))
        .collect::<hkdiss_core::Result<Vec<_>>>()?;
    let map = green_real_space(&times, model)?;
    let xp = map.drift()?;

    let mut manifest = RunManifest::new("green", cfg.parameters.clone());
    manifest.grid("time", grid);
    manifest.outputs = vec!["green_k_t.csv".into(), "green_j_t.csv".into(), "xp.csv".into()];
    let k_rows = momenta
        .iter()
        .zip(&gk)
        .flat_map(|(&k, series)| times.iter().zip(series).map(move |(&t, g)| [k, t, g.re, g.im]));
    write_csv(dir, "green_k_t.csv", &manifest, &["k", "t", "re_g", "im_g"], k_rows)?;
    let j_rows = (0..times.len()).flat_map(|ti| {
        let t = times[ti];
        map.sites.iter().zip(map.row(ti)).map(move |(&j, g)| [j as f64, t, g.re, g.im, g.norm_sqr()])
    });
    write_csv(dir, "green_j_t.csv", &manifest, &["j", "t", "re_g", "im_g", "abs2_g"], j_rows)?;
    let xp_rows = times.iter().zip(&xp).map(|(&t, &x)| [t, x]);
    write_csv(dir, "xp.csv", &manifest, &["t", "xp"], xp_rows)?;
    finish(&manifest, dir, start)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct OmegaOverride {
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub points: Option<usize>,
}

pub fn spectral(cfg: &RunConfig, over: OmegaOverride, dir: &Path) -> Result<()> {
    let start = Instant::now();
    let model = &cfg.model;
    let default = default_omegas(model);
    let min = over.min.unwrap_or(default[0]);
    let max = over.max.unwrap_or(default[default.len() - 1]);
    let points = over.points.unwrap_or(default.len());
    if points < 2 || min.is_nan() || max.is_nan() || max <= min {
        bail!("frequency grid needs at least two points and omega_max > omega_min");
    }
    let omegas: Vec<f64> = (0..points).map(|i| min + (max - min) * i as f64 / (points - 1) as f64).collect();
    let map = spectral_function(&omegas, model)?;

    let mut manifest = RunManifest::new("spectral", cfg.parameters.clone());
    manifest.grid("omega", serde_json::json!({ "min": min, "max": max, "points": points }));
    manifest.grid("broadening", map.broadening);
    manifest.outputs = vec!["spectral.csv".into()];
    let rows = map.momenta.iter().enumerate().flat_map(|(ki, &k)| {
        map.omegas.iter().zip(map.row(ki)).map(move |(&w, &a)| [k, w, a])
    });
    write_csv(dir, "spectral.csv", &manifest, &["k", "omega", "a"], rows)?;
    finish(&manifest, dir, start)
}

pub fn relax(cfg: &RunConfig, grid: TimeGrid, dir: &Path) -> Result<()> {
    let start = Instant::now();
    let model = &cfg.model;
    let times = grid.times()?;
    let profiles = density_trajectory(&initial_state_localized(model)?, &times, model)?;
    let xn = drift_xn(&profiles, model)?;

    let mut manifest = RunManifest::new("relax", cfg.parameters.clone());
    manifest.grid("time", grid);
    manifest.grid("initial_state", "one spin-up particle on site 0");
    manifest.outputs = vec!["density.csv".into(), "xn.csv".into()];
    let rows = profiles
        .iter()
        .flat_map(|p| p.sites.iter().zip(&p.density).map(move |(&j, &n)| [p.time, j as f64, n]));
    write_csv(dir, "density.csv", &manifest, &["t", "j", "n"], rows)?;
    write_csv(dir, "xn.csv", &manifest, &["t", "xn"], times.iter().zip(&xn).map(|(&t, &x)| [t, x]))?;
    finish(&manifest, dir, start)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct HubbardOptions {
    pub hartree: bool,
    pub omega_span: Option<f64>,
    pub omega_points: Option<usize>,
    pub eta: Option<f64>,
}

pub fn hubbard(cfg: &RunConfig, opts: HubbardOptions, grid: TimeGrid, dir: &Path) -> Result<()> {
    let start = Instant::now();
    let model = &cfg.model;
    let mut freq = FrequencyGrid::for_model(model);
    if let Some(span) = opts.omega_span {
        freq.min = -span;
        freq.max = span;
    }
    if let Some(points) = opts.omega_points {
        freq.points = points;
    }
    if let Some(eta) = opts.eta {
        freq.eta = eta;
    }
    let omegas = freq.omegas()?;
    let times = grid.times()?;
    let pt2 = HubbardPt2::new(model)?;
    let spec = pt2.green_freq(&omegas, freq.eta, opts.hartree)?;
    let real_time = pt2.green_real_time(&freq, &times, opts.hartree)?;
    for w in &real_time.warnings {
        match w {
            TransformWarning::EdgeWeight { k, ratio } => {
                eprintln!("warning: k = {k:.4}: spectral weight at the grid edge is {ratio:.2e} of the peak")
            }
            TransformWarning::Unresolved { k, half_width } => {
                eprintln!("warning: k = {k:.4}: line half-width {half_width:.2e} is below the grid spacing")
            }
        }
    }

    let mut manifest = RunManifest::new("hubbard", cfg.parameters.clone());
    manifest.grid(
        "omega",
        serde_json::json!({ "min": freq.min, "max": freq.max, "points": freq.points, "eta": freq.eta }),
    );
    manifest.grid("time", grid);
    manifest.grid("hartree", opts.hartree);
    manifest.grid("transform_warnings", real_time.warnings.len());
    manifest.outputs = vec!["sigma.csv".into(), "spectral.csv".into(), "green_j_t.csv".into()];
    let sigma = &spec.sigma;
    let rows = sigma.momenta.iter().enumerate().flat_map(|(m, &k)| {
        sigma.omegas.iter().zip(sigma.row(m)).map(move |(&w, s)| [k, w, s.re, s.im])
    });
    write_csv(dir, "sigma.csv", &manifest, &["k", "omega", "re_sigma", "im_sigma"], rows)?;
    let rows = sigma.momenta.iter().enumerate().flat_map(|(m, &k)| {
        sigma.omegas.iter().zip(spec.spectral_row(m)).map(move |(&w, &a)| [k, w, a])
    });
    write_csv(dir, "spectral.csv", &manifest, &["k", "omega", "a"], rows)?;
    let map = &real_time.map;
    let rows = (0..times.len()).flat_map(|ti| {
        let t = times[ti];
        map.sites.iter().zip(map.row(ti)).map(move |(&j, g)| [j as f64, t, g.norm_sqr()])
    });
    write_csv(dir, "green_j_t.csv", &manifest, &["j", "t", "abs2_g"], rows)?;
    finish(&manifest, dir, start)
}
