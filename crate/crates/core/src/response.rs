//! Single-particle response of the spin-up sector.
//!
//! Within one momentum block the two operators `c_k` and `c_k n_k↓` close
//! under the adjoint Lindbladian, so the retarded Green's function follows
//! from a 2x2 non-Hermitian matrix
//!
//! ```text
//! D_k = [ -i eps - G↑/2        -i U                    ]
//!       [  kappa↓              -i (eps + U) - G↑/2 - G↓ ]
//! ```
//!
//! with `G(k, t) = -i [exp(D_k t) (1, n↓)]_0`.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64 as C64;

use crate::linalg::{unit_roots, Mat2};
use crate::math::abs;
use crate::model::{Model, Spin};
use crate::{map_indices, Error, Result};

const I: C64 = C64::new(0.0, 1.0);

/// Broadening used when a pole sits on the real axis.
pub const AXIS_BROADENING: f64 = 1e-6;

/// Relative size of `sqrt(Delta)` below which the two modes are treated
/// as coalesced.
const EXCEPTIONAL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynMatrix2 {
    pub k: f64,
    pub matrix: Mat2,
}

/// Eigenvalues of `D_k`, ordered so `lambda[0]` continues to the
/// non-interacting pole as `U -> 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModePair {
    pub lambda: [C64; 2],
    pub sqrt_delta: C64,
    pub exceptional: bool,
}

struct Block {
    eps: f64,
    rate_up: f64,
    rate_down: f64,
    n_down: f64,
    u: f64,
}

fn block(k: f64, model: &Model) -> Result<Block> {
    let bath = &model.bath;
    Ok(Block {
        eps: model.lattice.dispersion(k),
        rate_up: bath.total_rate(k, Spin::Up),
        rate_down: bath.total_rate(k, Spin::Down),
        n_down: bath.steady_occupation(k, Spin::Down)?,
        u: model.u(),
    })
}

pub fn build_dyn2(k: f64, model: &Model) -> DynMatrix2 {
    let bath = &model.bath;
    let eps = model.lattice.dispersion(k);
    let u = model.u();
    let half_up = 0.5 * bath.total_rate(k, Spin::Up);
    let rate_down = bath.total_rate(k, Spin::Down);
    let matrix = Mat2::new(
        C64::new(-half_up, -eps),
        C64::new(0.0, -u),
        C64::new(bath.down.gain, 0.0),
        C64::new(-half_up - rate_down, -(eps + u)),
    );
    DynMatrix2 { k, matrix }
}

/// Closed-form eigenvalues `(tr D ± sqrt(Delta)) / 2` with
/// `Delta = (G↓ + iU)^2 - 4 i U kappa↓`.
///
/// The root of `Delta` is the one aligned with `G↓ + iU`, which is the
/// continuous continuation of `sqrt(Delta) = G↓` at `U = 0`. The principal
/// root would swap the labels wherever `Re Delta < 0`.
pub fn eigen_closed_form(k: f64, model: &Model) -> ModePair {
    let bath = &model.bath;
    let u = model.u();
    let rate_down = bath.total_rate(k, Spin::Down);
    let tr = build_dyn2(k, model).matrix.trace();
    let b = C64::new(rate_down, u);
    let delta = b * b - I * (4.0 * u * bath.down.gain);
    let mut sd = delta.sqrt();
    if (sd * b.conj()).re < 0.0 {
        sd = -sd;
    }
    let scale = rate_down + abs(u) + bath.down.gain;
    let exceptional = sd.norm() <= EXCEPTIONAL_TOL * scale;
    ModePair { lambda: [(tr + sd) * 0.5, (tr - sd) * 0.5], sqrt_delta: sd, exceptional }
}

/// Weights `z_1, z_2` of the two exponentials in `G(k, t)`; they sum to one.
pub fn residues(k: f64, model: &Model) -> Result<[C64; 2]> {
    let b = block(k, model)?;
    let modes = eigen_closed_form(k, model);
    if modes.exceptional {
        return Err(Error::ExceptionalPoint { k });
    }
    let num = C64::new(b.rate_down, b.u * (1.0 - 2.0 * b.n_down));
    let z1 = (C64::new(1.0, 0.0) + num / modes.sqrt_delta) * 0.5;
    Ok([z1, C64::new(1.0, 0.0) - z1])
}

/// `G(k, t)` for each `t`, from the two-pole form, or from the matrix
/// exponential at an exceptional point.
pub fn green_k_time(k: f64, times: &[f64], model: &Model) -> Result<Vec<C64>> {
    match residues(k, model) {
        Ok(z) => {
            let lam = eigen_closed_form(k, model).lambda;
            Ok(times
                .iter()
                .map(|&t| -I * (z[0] * (lam[0] * t).exp() + z[1] * (lam[1] * t).exp()))
                .collect())
        }
        Err(Error::ExceptionalPoint { .. }) => green_k_time_propagated(k, times, model),
        Err(e) => Err(e),
    }
}

/// `G(k, t) = -i [exp(D_k t) (1, n↓)]_0`, regular everywhere.
pub fn green_k_time_propagated(k: f64, times: &[f64], model: &Model) -> Result<Vec<C64>> {
    let n = block(k, model)?.n_down;
    let d = build_dyn2(k, model).matrix;
    Ok(times
        .iter()
        .map(|&t| -I * d.exp_t(t).apply([C64::new(1.0, 0.0), C64::new(n, 0.0)])[0])
        .collect())
}

/// A complex field on (time, site), time-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GreenMap {
    pub sites: Vec<i64>,
    pub times: Vec<f64>,
    pub values: Vec<C64>,
}

impl GreenMap {
    pub fn row(&self, ti: usize) -> &[C64] {
        let l = self.sites.len();
        &self.values[ti * l..(ti + 1) * l]
    }

    /// Mean position `sum j |G|^2 / sum |G|^2` at every time.
    pub fn drift(&self) -> Result<Vec<f64>> {
        self.times
            .iter()
            .enumerate()
            .map(|(ti, &t)| {
                let (mut num, mut den) = (0.0, 0.0);
                for (&j, g) in self.sites.iter().zip(self.row(ti)) {
                    let w = g.norm_sqr();
                    num += j as f64 * w;
                    den += w;
                }
                if den == 0.0 {
                    return Err(Error::VanishingNorm { t });
                }
                Ok(num / den)
            })
            .collect()
    }
}

/// `G(j, t) = (1/L) sum_k e^{ikj} G(k, t)` from per-momentum time series
/// laid out `gk[m][ti]`.
pub(crate) fn momentum_to_sites(model: &Model, times: &[f64], gk: &[Vec<C64>]) -> GreenMap {
    let lat = &model.lattice;
    let l = lat.sites;
    let roots = unit_roots(l);
    let sites = lat.signed_sites();
    let mut values = vec![C64::new(0.0, 0.0); times.len() * l];
    for (ji, &j) in sites.iter().enumerate() {
        // e^{i k_m j} = (-1)^j e^{2 pi i m j / L}
        let sign = if j.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        let jm = j.rem_euclid(l as i64) as usize;
        for (m, series) in gk.iter().enumerate() {
            let phase = roots[(m * jm) % l] * sign;
            for (ti, g) in series.iter().enumerate() {
                values[ti * l + ji] += phase * g;
            }
        }
    }
    let norm = 1.0 / l as f64;
    values.iter_mut().for_each(|v| *v *= norm);
    GreenMap { sites, times: times.to_vec(), values }
}

pub fn green_real_space(times: &[f64], model: &Model) -> Result<GreenMap> {
    let lat = &model.lattice;
    let gk = map_indices(lat.sites, |m| green_k_time(lat.momentum(m), times, model))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(momentum_to_sites(model, times, &gk))
}

/// Drift `X_p(t)` of a particle injected at the origin.
pub fn drift_xp(times: &[f64], model: &Model) -> Result<Vec<f64>> {
    green_real_space(times, model)?.drift()
}

fn poles_on_axis(k: f64, model: &Model) -> bool {
    let m = eigen_closed_form(k, model);
    let scale = 1.0 + abs(model.u()) + model.lattice.hopping;
    m.lambda.iter().any(|l| l.re >= -1e-12 * scale)
}

/// `G(k, omega)` on the real axis. Fails if a pole lies on the axis.
pub fn green_k_freq(k: f64, omegas: &[f64], model: &Model) -> Result<Vec<C64>> {
    if poles_on_axis(k, model) {
        return Err(Error::PoleOnAxis { k });
    }
    green_k_freq_broadened(k, omegas, model, 0.0)
}

/// `G(k, omega + i eta)`:
/// `[z - eps - U(1 - n) + i(G↑/2 + G↓)] / ((z - i lambda_1)(z - i lambda_2))`.
pub fn green_k_freq_broadened(k: f64, omegas: &[f64], model: &Model, eta: f64) -> Result<Vec<C64>> {
    let b = block(k, model)?;
    let lam = eigen_closed_form(k, model).lambda;
    let shift = C64::new(b.eps + b.u * (1.0 - b.n_down), -(0.5 * b.rate_up + b.rate_down));
    Ok(omegas
        .iter()
        .map(|&w| {
            let z = C64::new(w, eta);
            (z - shift) / ((z - I * lam[0]) * (z - I * lam[1]))
        })
        .collect())
}

/// `A(k, omega) = -2 Im G` on a momentum by frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMap {
    pub momenta: Vec<f64>,
    pub omegas: Vec<f64>,
    /// Row-major: `values[ki * omegas.len() + wi]`.
    pub values: Vec<f64>,
    /// Set when some pole was on the real axis and a broadening was added.
    pub broadening: Option<f64>,
}

impl SpectralMap {
    pub fn row(&self, ki: usize) -> &[f64] {
        let w = self.omegas.len();
        &self.values[ki * w..(ki + 1) * w]
    }
}

/// `omega` in `[-6 J, U + 6 J]` (or `[U - 6 J, 6 J]` for `U < 0`) with
/// 2048 points.
pub fn default_omegas(model: &Model) -> Vec<f64> {
    let j = model.lattice.hopping;
    let u = model.u();
    let (lo, hi) = (u.min(0.0) - 6.0 * j, u.max(0.0) + 6.0 * j);
    let n = 2048;
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Spectral function on the whole momentum grid. If any pole is on the
/// real axis every row is evaluated at `omega + i AXIS_BROADENING J`.
pub fn spectral_function(omegas: &[f64], model: &Model) -> Result<SpectralMap> {
    let lat = &model.lattice;
    let momenta = lat.momenta();
    let broadening = if momenta.iter().any(|&k| poles_on_axis(k, model)) {
        Some(AXIS_BROADENING * lat.hopping)
    } else {
        None
    };
    let eta = broadening.unwrap_or(0.0);
    let rows = map_indices(lat.sites, |m| green_k_freq_broadened(momenta[m], omegas, model, eta))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let values = rows.iter().flatten().map(|g| -2.0 * g.im).collect();
    Ok(SpectralMap { momenta, omegas: omegas.to_vec(), values, broadening })
}

/// Trapezoid rule on a possibly non-uniform grid.
pub fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2).zip(ys.windows(2)).map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1])).sum()
}

/// `int A(k, omega) d omega / 2 pi`: trapezoid on `omegas` plus the exact
/// integral of the pole form outside `[omegas[0], omegas[last]]`.
/// The grid has to resolve the narrowest line for this to approach one.
pub fn spectral_weight(k: f64, omegas: &[f64], model: &Model, eta: f64) -> Result<f64> {
    if omegas.len() < 2 {
        return Err(Error::InvalidGrid("need at least two frequencies"));
    }
    let g = green_k_freq_broadened(k, omegas, model, eta)?;
    let a: Vec<f64> = g.iter().map(|g| -2.0 * g.im).collect();
    let inner = trapezoid(omegas, &a) / (2.0 * crate::math::PI);

    let lo = omegas[0];
    let hi = omegas[omegas.len() - 1];
    let f_lo = antiderivative(k, lo, model, eta)?;
    let f_hi = antiderivative(k, hi, model, eta)?;
    let pi = crate::math::PI;
    // Im F -> 0 at +inf and -> pi at -inf, since the weights sum to one.
    Ok(inner + f_hi.im / pi + (1.0 - f_lo.im / pi))
}

/// Antiderivative of `G(omega + i eta)` in `omega`, on the branch where
/// `Im F` is continuous along the real axis.
fn antiderivative(k: f64, w: f64, model: &Model, eta: f64) -> Result<C64> {
    let b = block(k, model)?;
    let modes = eigen_closed_form(k, model);
    let z = C64::new(w, eta);
    match residues(k, model) {
        Ok(res) => Ok(res
            .iter()
            .zip(modes.lambda.iter())
            .map(|(r, l)| r * (z - I * l).ln())
            .sum()),
        Err(Error::ExceptionalPoint { .. }) => {
            // G = 1/(z - p) + (p - r)/(z - p)^2 for a double pole p.
            let p = I * (modes.lambda[0] + modes.lambda[1]) * 0.5;
            let r = C64::new(b.eps + b.u * (1.0 - b.n_down), -(0.5 * b.rate_up + b.rate_down));
            Ok((z - p).ln() - (p - r) / (z - p))
        }
        Err(e) => Err(e),
    }
}

/// Exact self-energy of the dissipative HK model,
/// `-i G↑/2 + U n + U^2 n (1 - n) / (w + i G↑/2 - eps - U(1 - n) + i G↓)`.
/// With the spin-up bath closed the leading term vanishes.
pub fn self_energy_hk(k: f64, omega: C64, model: &Model) -> Result<C64> {
    let b = block(k, model)?;
    let half_up = I * (0.5 * b.rate_up);
    let n = b.n_down;
    let den = omega + half_up - b.eps - b.u * (1.0 - n) + I * b.rate_down;
    Ok(-half_up + b.u * n + b.u * b.u * n * (1.0 - n) / den)
}

/// `Sigma = omega - eps - 1/G`.
pub fn self_energy_from_green(k: f64, omega: f64, model: &Model) -> Result<C64> {
    let g = green_k_freq_broadened(k, &[omega], model, 0.0)?[0];
    if g.norm() == 0.0 || !g.is_finite() {
        return Err(Error::ZeroGreen { k, omega });
    }
    Ok(C64::new(omega - model.lattice.dispersion(k), 0.0) - g.inv())
}

/// Second-order truncation of [`self_energy_hk`]: the `U(1 - n)` shift in
/// the denominator is dropped.
pub fn self_energy_small_u(k: f64, omega: C64, model: &Model) -> Result<C64> {
    let b = block(k, model)?;
    let half_up = I * (0.5 * b.rate_up);
    let n = b.n_down;
    let den = omega + half_up - b.eps + I * b.rate_down;
    Ok(-half_up + b.u * n + b.u * b.u * n * (1.0 - n) / den)
}
