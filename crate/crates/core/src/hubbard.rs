//! Second-order self-energy of the driven-dissipative Hubbard chain.
//!
//! A spin-up particle scatters off spin-down particle-hole pairs of the
//! dissipative steady state:
//!
//! ```text
//! Sigma(k, w) = 1/L^2 sum_{q,p} U(q) U(-q) n_p (1 - n_{p-q})
//!               / (w - eps_{k+q} + eps_p - eps_{p-q} + i (G_p + G_{p-q}) / 2)
//! ```
//!
//! The spin-down background is taken as fixed: the spin-up excitation
//! does not act back on it. The spin-up sector itself has no bath here.
//! Momentum transfers `q` run over `2 pi d / L`, `d = 0..L`, so odd `L` works.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64 as C64;

use crate::linalg::{unit_roots, Kahan};
use crate::math::{abs, sqrt, PI};
use crate::model::{Model, Spin};
use crate::response::{momentum_to_sites, self_energy_small_u, GreenMap};
use crate::{map_indices, Error, Result};

const I: C64 = C64::new(0.0, 1.0);
const RESONANCE: f64 = 1e-12;

/// Default regulator for the frequency to time transform, in units of `J`.
pub const DEFAULT_ETA: f64 = 1e-3;

/// One term of the `p` sum at fixed transfer: weight and the frequency
/// offset `eps_p - eps_{p-q} + i G_pq / 2`.
#[derive(Debug, Clone, Copy)]
struct Channel {
    p: usize,
    weight: f64,
    offset: C64,
}

#[derive(Debug, Clone)]
pub struct HubbardPt2 {
    model: Model,
    eps: Vec<f64>,
    occ: Vec<f64>,
    /// `U(q) U(-q)` per transfer index.
    coupling: Vec<f64>,
    hartree_coupling: f64,
    channels: Vec<Vec<Channel>>,
}

impl HubbardPt2 {
    /// Contact interaction `U(q) = U`.
    pub fn new(model: &Model) -> Result<Self> {
        let u = model.u();
        Self::with_kernel(model, &vec![u; model.sites()])
    }

    /// Tabulated interaction `U(q_d)` on transfers `q_d = 2 pi d / L`.
    pub fn with_kernel(model: &Model, kernel: &[f64]) -> Result<Self> {
        let lat = &model.lattice;
        let l = lat.sites;
        if kernel.len() != l {
            return Err(Error::InvalidParameter { name: "U(q)", reason: "one value per momentum transfer" });
        }
        if kernel.iter().any(|u| !u.is_finite()) {
            return Err(Error::InvalidParameter { name: "U(q)", reason: "must be finite" });
        }
        if !model.bath.up.is_closed() {
            return Err(Error::InvalidParameter {
                name: "kappa_up/gamma_up",
                reason: "the spin-up bath must be closed for the perturbative self-energy",
            });
        }
        let down = &model.bath.down;
        if down.gain + down.loss == 0.0 {
            return Err(Error::InvalidParameter {
                name: "kappa_down/gamma_down",
                reason: "spin-down bath must be open",
            });
        }
        let eps: Vec<f64> = (0..l).map(|m| lat.dispersion(lat.momentum(m))).collect();
        let rate: Vec<f64> = (0..l).map(|m| model.bath.total_rate(lat.momentum(m), Spin::Down)).collect();
        // Rates vanish only where gain does too, and there n = 0.
        let occ: Vec<f64> = rate.iter().map(|&r| if r == 0.0 { 0.0 } else { down.gain / r }).collect();
        let coupling: Vec<f64> = (0..l).map(|d| kernel[d] * kernel[(l - d) % l]).collect();

        let channels = (0..l)
            .map(|d| {
                (0..l)
                    .filter_map(|p| {
                        let pq = lat.unshift(p, d);
                        let weight = occ[p] * (1.0 - occ[pq]);
                        (weight != 0.0).then(|| Channel {
                            p,
                            weight,
                            offset: C64::new(eps[p] - eps[pq], 0.5 * (rate[p] + rate[pq])),
                        })
                    })
                    .collect()
            })
            .collect();
        Ok(Self { model: *model, eps, occ, coupling, hartree_coupling: kernel[0], channels })
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    /// `U(0)/L sum_p n_p`.
    pub fn hartree(&self) -> f64 {
        self.hartree_coupling * self.occ.iter().sum::<f64>() / self.eps.len() as f64
    }

    /// `Sigma(k_m, z)` for complex frequency `z`.
    pub fn self_energy(&self, m: usize, z: C64, include_hartree: bool) -> Result<C64> {
        let lat = &self.model.lattice;
        let l = self.eps.len();
        let mut total = C64::new(0.0, 0.0);
        for (d, chans) in self.channels.iter().enumerate() {
            let g = self.coupling[d];
            if g == 0.0 || chans.is_empty() {
                continue;
            }
            let x = z - self.eps[lat.shift(m, d)];
            // Kahan sums of w / den = w conj(den) / |den|^2, per component.
            let (mut re, mut im) = (Kahan::default(), Kahan::default());
            for c in chans {
                let den = x + c.offset;
                let n2 = den.norm_sqr();
                if n2 < RESONANCE * RESONANCE {
                    return Err(Error::Resonance { k: lat.momentum(m), omega: z.re });
                }
                let f = c.weight / n2;
                re.add(f * den.re);
                im.add(-f * den.im);
            }
            let acc = C64::new(re.total(), im.total());
            total += acc * g;
        }
        let mut sigma = total / (l * l) as f64;
        if include_hartree {
            sigma += self.hartree();
        }
        Ok(sigma)
    }

    /// High-frequency moment `lim z (Sigma - Hartree)`.
    pub fn first_moment(&self) -> f64 {
        let l = self.eps.len() as f64;
        let s: f64 = self
            .channels
            .iter()
            .zip(&self.coupling)
            .map(|(ch, g)| g * ch.iter().map(|c| c.weight).sum::<f64>())
            .sum();
        s / (l * l)
    }

    /// The single `q = 0, p = k` term with the HK vertex (`U/L -> U`), next
    /// to the dynamical part of the small-`U` HK self-energy. The two agree
    /// identically.
    pub fn hk_limit_check(&self, m: usize, omega: f64) -> Result<(C64, C64)> {
        let u = self.model.u();
        let k = self.model.lattice.momentum(m);
        let n = self.occ[m];
        // Zero-weight channels are not stored, hence the default.
        let restricted = self.channels[0]
            .iter()
            .find(|c| c.p == m)
            .map(|c| self.coupling[0] * c.weight / (C64::new(omega - self.eps[m], 0.0) + c.offset))
            .unwrap_or_default();
        let hk = self_energy_small_u(k, C64::new(omega, 0.0), &self.model)? - u * n;
        Ok((restricted, hk))
    }

    /// `Sigma` on every grid momentum and every `omega + i eta`.
    pub fn self_energy_grid(&self, omegas: &[f64], eta: f64, include_hartree: bool) -> Result<SelfEnergyGrid> {
        let l = self.eps.len();
        let rows = map_indices(l, |m| {
            omegas
                .iter()
                .map(|&w| self.self_energy(m, C64::new(w, eta), include_hartree))
                .collect::<Result<Vec<_>>>()
        });
        let mut values = Vec::with_capacity(l * omegas.len());
        for r in rows {
            values.extend(r?);
        }
        Ok(SelfEnergyGrid {
            momenta: self.model.lattice.momenta(),
            omegas: omegas.to_vec(),
            eta,
            hartree: include_hartree,
            values,
        })
    }

    /// Dyson Green's function `1/(z - eps_k - Sigma)` and `A = -2 Im G`.
    pub fn green_freq(&self, omegas: &[f64], eta: f64, include_hartree: bool) -> Result<HubbardSpectrum> {
        let sigma = self.self_energy_grid(omegas, eta, include_hartree)?;
        let w = omegas.len();
        let green: Vec<C64> = sigma
            .values
            .iter()
            .enumerate()
            .map(|(i, s)| (C64::new(omegas[i % w], eta) - self.eps[i / w] - s).inv())
            .collect();
        let spectral = green.iter().map(|g| -2.0 * g.im).collect();
        Ok(HubbardSpectrum { sigma, green, spectral })
    }

    /// Real-space retarded propagator `G(j, t)`.
    ///
    /// Each `G(k, omega + i eta)` is split into a two-pole model with the
    /// same `1/z` and `1/z^3` tails, whose transform is exact, and a
    /// remainder falling as `1/z^4`, which is integrated by the trapezoid
    /// rule on the uniform `omega` grid.
    pub fn green_real_time(
        &self,
        grid: &FrequencyGrid,
        times: &[f64],
        include_hartree: bool,
    ) -> Result<RealTimeGreen> {
        let omegas = grid.omegas()?;
        let h = grid.spacing();
        let eta = grid.eta;
        let l = self.eps.len();
        let lat = &self.model.lattice;
        let free = self.coupling.iter().all(|&g| g == 0.0);
        let shift = if include_hartree { self.hartree() } else { 0.0 };
        let width = sqrt(self.first_moment() / 2.0).max(4.0 * h);

        let per_k = map_indices(l, |m| -> Result<(Vec<C64>, Vec<TransformWarning>)> {
            let centre = self.eps[m] + shift;
            let model_pole = |t: f64| {
                let osc = C64::new(-eta * t, -centre * t).exp();
                if free {
                    -I * osc
                } else {
                    -I * osc * (2.0 * libm::exp(-width * t) - libm::exp(-2.0 * width * t))
                }
            };
            if free {
                return Ok((times.iter().map(|&t| model_pole(t)).collect(), Vec::new()));
            }
            let mut resid = Vec::with_capacity(omegas.len());
            let mut peak: f64 = 0.0;
            let mut a_edge: f64 = 0.0;
            for (i, &w) in omegas.iter().enumerate() {
                let z = C64::new(w, eta);
                let s = self.self_energy(m, z, include_hartree)?;
                let g = (z - self.eps[m] - s).inv();
                let x = z - centre;
                let tail = 2.0 / (x + I * width) - 1.0 / (x + I * (2.0 * width));
                resid.push(g - tail);
                let a = -2.0 * g.im;
                peak = peak.max(a);
                if i == 0 || i == omegas.len() - 1 {
                    a_edge = a_edge.max(a);
                }
            }
            let mut warnings = Vec::new();
            let k = lat.momentum(m);
            if a_edge > 1e-4 * peak {
                warnings.push(TransformWarning::EdgeWeight { k, ratio: a_edge / peak });
            }
            // A Lorentzian of half-width g peaks at 2/g.
            if 2.0 / peak < 2.0 * h {
                warnings.push(TransformWarning::Unresolved { k, half_width: 2.0 / peak });
            }
            let series = times
                .iter()
                .map(|&t| {
                    let step = C64::new(0.0, -h * t).exp();
                    let mut phase = C64::new(0.0, -omegas[0] * t).exp();
                    let mut acc = C64::new(0.0, 0.0);
                    let last = resid.len() - 1;
                    for (i, r) in resid.iter().enumerate() {
                        let wgt = if i == 0 || i == last { 0.5 } else { 1.0 };
                        acc += r * phase * wgt;
                        phase *= step;
                    }
                    model_pole(t) + acc * (h / (2.0 * PI))
                })
                .collect();
            Ok((series, warnings))
        });
        let mut gk = Vec::with_capacity(l);
        let mut warnings = Vec::new();
        for r in per_k {
            let (s, w) = r?;
            gk.push(s);
            warnings.extend(w);
        }
        Ok(RealTimeGreen { map: momentum_to_sites(&self.model, times, &gk), eta, warnings })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelfEnergyGrid {
    pub momenta: Vec<f64>,
    pub omegas: Vec<f64>,
    pub eta: f64,
    pub hartree: bool,
    /// Row-major over (k, omega).
    pub values: Vec<C64>,
}

impl SelfEnergyGrid {
    pub fn row(&self, m: usize) -> &[C64] {
        let w = self.omegas.len();
        &self.values[m * w..(m + 1) * w]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HubbardSpectrum {
    pub sigma: SelfEnergyGrid,
    pub green: Vec<C64>,
    pub spectral: Vec<f64>,
}

impl HubbardSpectrum {
    pub fn spectral_row(&self, m: usize) -> &[f64] {
        let w = self.sigma.omegas.len();
        &self.spectral[m * w..(m + 1) * w]
    }
}

/// Uniform real-frequency grid for the time transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
    pub eta: f64,
}

impl FrequencyGrid {
    /// `omega` in `±(8 J + |U|)` with 2048 points and `eta = 1e-3 J`.
    pub fn for_model(model: &Model) -> Self {
        let j = model.lattice.hopping;
        let span = 8.0 * j + abs(model.u());
        Self { min: -span, max: span, points: 2048, eta: DEFAULT_ETA * j }
    }

    pub fn spacing(&self) -> f64 {
        (self.max - self.min) / (self.points - 1) as f64
    }

    pub fn omegas(&self) -> Result<Vec<f64>> {
        if self.points < 2 || self.min.is_nan() || self.max.is_nan() || self.max <= self.min {
            return Err(Error::InvalidGrid("frequency grid needs two points and max > min"));
        }
        if self.eta.is_nan() || self.eta < 0.0 {
            return Err(Error::InvalidGrid("eta must be non-negative"));
        }
        let h = self.spacing();
        Ok((0..self.points).map(|i| self.min + h * i as f64).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TransformWarning {
    /// Spectral weight at the grid edge relative to the peak.
    EdgeWeight { k: f64, ratio: f64 },
    /// The sharpest line is narrower than the grid spacing.
    Unresolved { k: f64, half_width: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealTimeGreen {
    pub map: GreenMap,
    pub eta: f64,
    pub warnings: Vec<TransformWarning>,
}

/// Full width at half maximum of the highest peak, by linear
/// interpolation; `None` if the half-maximum is not crossed on both sides.
pub fn peak_fwhm(omegas: &[f64], values: &[f64]) -> Option<f64> {
    let (imax, &vmax) = values.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1))?;
    let half = 0.5 * vmax;
    let cross = |i: usize, j: usize| {
        let t = (half - values[i]) / (values[j] - values[i]);
        omegas[i] + t * (omegas[j] - omegas[i])
    };
    let left = (1..=imax).rev().find(|&i| values[i - 1] < half).map(|i| cross(i - 1, i))?;
    let right = (imax..values.len() - 1).find(|&i| values[i + 1] < half).map(|i| cross(i, i + 1))?;
    Some(right - left)
}

/// `U(q_d)` tabulated from a function of the transfer folded into
/// `(-pi, pi]`.
pub fn tabulate_kernel<F: Fn(f64) -> f64>(sites: usize, f: F) -> Vec<f64> {
    let roots = unit_roots(sites);
    roots.iter().map(|r| f(libm::atan2(r.im, r.re))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BathSpec, LatticeConfig, LossTopology, SpinBath};
    use proptest::prelude::*;

    fn model(l: usize, u: f64, kappa: f64, gamma: f64, topo: LossTopology) -> Model {
        let lattice = LatticeConfig::new(l, 1.0, u).unwrap();
        let down = SpinBath::new(kappa, gamma, topo).unwrap();
        Model::new(lattice, BathSpec { up: SpinBath::closed(), down })
    }

    /// Direct transcription of the double sum with grid momenta.
    fn brute(m: &Model, k: usize, z: C64) -> C64 {
        let lat = &m.lattice;
        let l = lat.sites;
        let u = m.u();
        let bath = &m.bath.down;
        let mut s = C64::new(0.0, 0.0);
        for d in 0..l {
            let q = 2.0 * PI * d as f64 / l as f64;
            for pi in 0..l {
                let p = lat.momentum(pi);
                let kq = lat.momentum(k) + q;
                let pq = p - q;
                let np = bath.steady_occupation(p).unwrap_or(0.0);
                let npq = bath.steady_occupation(pq).unwrap_or(0.0);
                let den = z - (lat.dispersion(kq) - lat.dispersion(p) + lat.dispersion(pq))
                    + I * (0.5 * (bath.total_rate(p) + bath.total_rate(pq)));
                s += np * (1.0 - npq) / den;
            }
        }
        s * (u * u / (l * l) as f64)
    }

    #[test]
    fn matches_direct_double_sum() {
        let m = model(9, 1.3, 0.4, 0.7, LossTopology::NonReciprocal);
        let h = HubbardPt2::new(&m).unwrap();
        for k in [0, 3, 8] {
            let z = C64::new(0.37, 0.01);
            let got = h.self_energy(k, z, false).unwrap();
            assert!((got - brute(&m, k, z)).norm() < 1e-13, "k = {k}");
        }
    }

    #[test]
    fn trivial_limits() {
        let h = HubbardPt2::new(&model(8, 0.0, 0.3, 0.2, LossTopology::Uniform)).unwrap();
        assert_eq!(h.self_energy(2, C64::new(0.1, 0.0), true).unwrap(), C64::new(0.0, 0.0));
        let h = HubbardPt2::new(&model(8, 2.0, 0.0, 0.5, LossTopology::Uniform)).unwrap();
        assert_eq!(h.self_energy(2, C64::new(0.1, 0.0), true).unwrap(), C64::new(0.0, 0.0));
    }

    #[test]
    fn rejects_open_up_bath_and_closed_down_bath() {
        let mut m = model(8, 1.0, 0.3, 0.2, LossTopology::Uniform);
        m.bath.up = SpinBath::new(0.1, 0.0, LossTopology::Uniform).unwrap();
        assert!(HubbardPt2::new(&m).is_err());
        assert!(HubbardPt2::new(&model(8, 1.0, 0.0, 0.0, LossTopology::Uniform)).is_err());
    }

    #[test]
    fn constant_kernel_reproduces_contact_interaction() {
        let m = model(12, 1.7, 0.2, 2.0, LossTopology::NonReciprocal);
        let a = HubbardPt2::new(&m).unwrap();
        let b = HubbardPt2::with_kernel(&m, &tabulate_kernel(12, |_| 1.7)).unwrap();
        for k in 0..12 {
            let z = C64::new(-0.4 + 0.1 * k as f64, 0.0);
            let (x, y) = (a.self_energy(k, z, true).unwrap(), b.self_energy(k, z, true).unwrap());
            assert!((x - y).norm() <= 1e-14 * x.norm().max(1.0));
        }
    }

    #[test]
    fn uniform_loss_is_inversion_symmetric() {
        let m = model(10, 2.0, 0.2, 4.0, LossTopology::Uniform);
        let h = HubbardPt2::new(&m).unwrap();
        let lat = m.lattice;
        for k in 1..10 {
            let z = C64::new(0.3, 0.0);
            let a = h.self_energy(k, z, false).unwrap();
            let b = h.self_energy(lat.negate(k), z, false).unwrap();
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn free_transform_is_exact() {
        let m = model(8, 0.0, 0.5, 0.5, LossTopology::Uniform);
        let h = HubbardPt2::new(&m).unwrap();
        let grid = FrequencyGrid::for_model(&m);
        let rt = h.green_real_time(&grid, &[0.0, 1.0], false).unwrap();
        let g0 = rt.map.row(0);
        for (&j, g) in rt.map.sites.iter().zip(g0) {
            let want = if j == 0 { -I } else { C64::new(0.0, 0.0) };
            assert!((g - want).norm() < 1e-14);
        }
    }

    #[test]
    fn fwhm_of_a_lorentzian() {
        let omegas: Vec<f64> = (0..20001).map(|i| -10.0 + 0.001 * i as f64).collect();
        let g = 0.3;
        let a: Vec<f64> = omegas.iter().map(|w| 2.0 * g / (w * w + g * g)).collect();
        let f = peak_fwhm(&omegas, &a).unwrap();
        assert!((f - 2.0 * g).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn self_energy_is_retarded(
            u in 0.0f64..4.0,
            kappa in 0.0f64..1.0,
            gamma in 0.01f64..3.0,
            k in 0usize..8,
            w in -8.0f64..8.0,
        ) {
            let h = HubbardPt2::new(&model(8, u, kappa, gamma, LossTopology::NonReciprocal)).unwrap();
            let s = h.self_energy(k, C64::new(w, 0.0), true).unwrap();
            prop_assert!(s.im <= 0.0);
        }

        #[test]
        fn hk_limit_agrees(
            u in 0.0f64..6.0,
            kappa in 0.01f64..2.0,
            gamma in 0.0f64..3.0,
            k in 0usize..8,
            w in -8.0f64..8.0,
        ) {
            let h = HubbardPt2::new(&model(8, u, kappa, gamma, LossTopology::NonReciprocal)).unwrap();
            let (a, b) = h.hk_limit_check(k, w).unwrap();
            prop_assert!((a - b).norm() <= 1e-12 * a.norm().max(1.0));
        }
    }
}
