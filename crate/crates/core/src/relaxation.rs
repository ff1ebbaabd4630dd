//! Relaxation of a spin-up density inhomogeneity.
//!
//! For `k != q` the four operators `c†_k c_q · {1, n_k↓, n_q↓, n_k↓ n_q↓}`
//! close under the adjoint Lindbladian. Their generator is a Kronecker sum
//!
//! ```text
//! M_kq = (i (eps_k - eps_q) - (G_k↑ + G_q↑)/2) I + I ⊗ A_k + B_q ⊗ I
//! A_k  = [[0, iU], [kappa↓, iU - G_k↓]]      (acts on the n_k↓ slot)
//! B_q  = [[0, -iU], [kappa↓, -iU - G_q↓]]    (acts on the n_q↓ slot)
//! ```
//!
//! with component index `a + 2 b`, so `exp(M_kq t)` factorises into two
//! 2x2 exponentials that are cached per momentum. Diagonal occupations
//! relax independently of `U`.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64 as C64;

use crate::linalg::{unit_roots, Mat2};
use crate::math::exp;
use crate::model::{Model, Spin};
use crate::{map_indices, Error, Result};

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynMatrix4 {
    pub k: f64,
    pub q: f64,
    pub matrix: [[C64; 4]; 4],
}

fn block_a(k: f64, model: &Model) -> Mat2 {
    let u = model.u();
    Mat2::new(
        ZERO,
        C64::new(0.0, u),
        C64::new(model.bath.down.gain, 0.0),
        C64::new(-model.bath.total_rate(k, Spin::Down), u),
    )
}

fn pair_rate(k: f64, q: f64, model: &Model) -> C64 {
    let lat = &model.lattice;
    let up = &model.bath.up;
    C64::new(-0.5 * (up.total_rate(k) + up.total_rate(q)), lat.dispersion(k) - lat.dispersion(q))
}

pub fn build_dyn4(k: f64, q: f64, model: &Model) -> Result<DynMatrix4> {
    if k == q {
        return Err(Error::SameMomentum);
    }
    let a = block_a(k, model).0;
    let b = block_a(q, model).conj().0;
    let c = pair_rate(k, q, model);
    let mut matrix = [[ZERO; 4]; 4];
    for (i, row) in matrix.iter_mut().enumerate() {
        for (j, m) in row.iter_mut().enumerate() {
            let (ai, bi, aj, bj) = (i % 2, i / 2, j % 2, j / 2);
            if i == j {
                *m += c;
            }
            if bi == bj {
                *m += a[ai][aj];
            }
            if ai == aj {
                *m += b[bi][bj];
            }
        }
    }
    Ok(DynMatrix4 { k, q, matrix })
}

/// `exp(M_kq t)` from the two cached-size factors,
/// `P[a + 2b][a' + 2b'] = e^{ct} exp(A_k t)[a][a'] exp(B_q t)[b][b']`.
pub fn pair_propagator(k: f64, q: f64, t: f64, model: &Model) -> Result<[[C64; 4]; 4]> {
    if k == q {
        return Err(Error::SameMomentum);
    }
    let ea = block_a(k, model).exp_t(t).0;
    let eb = block_a(q, model).exp_t(t).conj().0;
    let phase = (pair_rate(k, q, model) * t).exp();
    let mut p = [[ZERO; 4]; 4];
    for (i, row) in p.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            *x = phase * ea[i % 2][j % 2] * eb[i / 2][j / 2];
        }
    }
    Ok(p)
}

/// Spin-up one-body correlations dressed by the spin-down steady state.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationState {
    pub sites: usize,
    pub time: f64,
    /// `<c†_k c_q {1, n_k↓, n_q↓, n_k↓ n_q↓}>` for `k < q`, packed row by row.
    pub pairs: Vec<[C64; 4]>,
    /// `<n_k↑>`.
    pub occupations: Vec<f64>,
}

fn pair_index(l: usize, k: usize, q: usize) -> usize {
    debug_assert!(k < q && q < l);
    k * l - k * (k + 1) / 2 + (q - k - 1)
}

impl CorrelationState {
    /// Builds the state from spin-up correlations `<c†_k c_q>` and the
    /// spin-down steady state, assuming the two are uncorrelated.
    pub fn from_correlations<F>(model: &Model, corr: F) -> Result<Self>
    where
        F: Fn(usize, usize) -> C64,
    {
        let l = model.sites();
        let n = model.down_occupations()?;
        let mut pairs = Vec::with_capacity(l * (l - 1) / 2);
        for k in 0..l {
            for q in k + 1..l {
                let c = corr(k, q);
                pairs.push([c, c * n[k], c * n[q], c * (n[k] * n[q])]);
            }
        }
        let occupations = (0..l).map(|k| corr(k, k).re).collect();
        Ok(Self { sites: l, time: 0.0, pairs, occupations })
    }

    /// One spin-up particle in the single-particle state `psi`, indexed by
    /// lattice position `0..L`.
    pub fn from_wavefunction(model: &Model, psi: &[C64]) -> Result<Self> {
        let l = model.sites();
        if psi.len() != l {
            return Err(Error::InvalidParameter { name: "psi", reason: "length must equal L" });
        }
        let lat = &model.lattice;
        // c†_j = L^{-1/2} sum_k e^{-ikj} c†_k
        let amp: Vec<C64> = (0..l)
            .map(|m| {
                let k = lat.momentum(m);
                let s: C64 = psi
                    .iter()
                    .enumerate()
                    .map(|(j, p)| p * C64::new(0.0, -k * j as f64).exp())
                    .sum();
                s / libm::sqrt(l as f64)
            })
            .collect();
        Self::from_correlations(model, |k, q| amp[k].conj() * amp[q])
    }

    pub fn coherence(&self, k: usize, q: usize) -> C64 {
        use core::cmp::Ordering::*;
        match k.cmp(&q) {
            Equal => C64::new(self.occupations[k], 0.0),
            Less => self.pairs[pair_index(self.sites, k, q)][0],
            Greater => self.pairs[pair_index(self.sites, q, k)][0].conj(),
        }
    }

    pub fn total_number(&self) -> f64 {
        self.occupations.iter().sum()
    }
}

/// A particle on lattice site 0.
pub fn initial_state_localized(model: &Model) -> Result<CorrelationState> {
    let mut psi = vec![ZERO; model.sites()];
    psi[0] = C64::new(1.0, 0.0);
    CorrelationState::from_wavefunction(model, &psi)
}

/// Advances `state` by `dt`.
pub fn evolve(state: &CorrelationState, dt: f64, model: &Model) -> Result<CorrelationState> {
    let l = model.sites();
    if state.sites != l {
        return Err(Error::InvalidParameter { name: "state", reason: "size does not match the model" });
    }
    model.down_occupations()?;
    let lat = &model.lattice;
    let prop: Vec<Mat2> = (0..l).map(|m| block_a(lat.momentum(m), model).exp_t(dt)).collect();
    let rows = map_indices(l, |k| {
        let ea = prop[k].0;
        let kk = lat.momentum(k);
        (k + 1..l)
            .map(|q| {
                let eb = prop[q].conj().0;
                let v = &state.pairs[pair_index(l, k, q)];
                let phase = (pair_rate(kk, lat.momentum(q), model) * dt).exp();
                let mut w = [ZERO; 4];
                for (i, wi) in w.iter_mut().enumerate() {
                    let (a, b) = (i % 2, i / 2);
                    let mut s = ZERO;
                    for (j, vj) in v.iter().enumerate() {
                        s += ea[a][j % 2] * eb[b][j / 2] * vj;
                    }
                    *wi = s * phase;
                }
                w
            })
            .collect::<Vec<_>>()
    });
    let pairs = rows.into_iter().flatten().collect();
    let up = &model.bath.up;
    let occupations = state
        .occupations
        .iter()
        .enumerate()
        .map(|(m, &n0)| {
            let rate = up.total_rate(lat.momentum(m));
            if rate == 0.0 {
                n0
            } else {
                let ss = up.gain / rate;
                ss + (n0 - ss) * exp(-rate * dt)
            }
        })
        .collect();
    Ok(CorrelationState { sites: l, time: state.time + dt, pairs, occupations })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityProfile {
    pub time: f64,
    /// Signed site labels.
    pub sites: Vec<i64>,
    pub density: Vec<f64>,
}

/// Imaginary residue above which a density is rejected.
const IMAG_LIMIT: f64 = 1e-8;

/// `n_j = (1/L) sum_{k,q} e^{-i(k-q)j} <c†_k c_q>`, evaluated through the
/// sums along each momentum difference followed by one length-L transform.
pub fn density_profile(state: &CorrelationState, model: &Model) -> Result<DensityProfile> {
    let l = state.sites;
    let mut diag = vec![ZERO; l];
    for &n in &state.occupations {
        diag[0] += n;
    }
    for k in 0..l {
        for q in k + 1..l {
            let c = state.pairs[pair_index(l, k, q)][0];
            diag[(k + l - q) % l] += c;
            diag[q - k] += c.conj();
        }
    }
    let roots = unit_roots(l);
    let sites = model.lattice.signed_sites();
    let mut density = Vec::with_capacity(l);
    for &j in &sites {
        let jm = j.rem_euclid(l as i64) as usize;
        let s: C64 = diag.iter().enumerate().map(|(d, x)| roots[(d * jm) % l].conj() * x).sum();
        let n = s / l as f64;
        if n.im.abs() > IMAG_LIMIT {
            return Err(Error::HermiticityViolation { imag: n.im });
        }
        density.push(n.re);
    }
    Ok(DensityProfile { time: state.time, sites, density })
}

/// Spin-up steady density per site that the inhomogeneity is measured
/// against. Modes with zero total rate have no gain and stay empty.
pub fn reference_density(model: &Model) -> f64 {
    let lat = &model.lattice;
    let up = &model.bath.up;
    let total: f64 = (0..lat.sites)
        .map(|m| up.steady_occupation(lat.momentum(m)).unwrap_or(0.0))
        .sum();
    total / lat.sites as f64
}

/// Centre of mass `X_n = sum j dn_j / sum dn_j` with
/// `dn_j = n_j - reference_density`.
pub fn drift_xn(profiles: &[DensityProfile], model: &Model) -> Result<Vec<f64>> {
    let reference = reference_density(model);
    profiles
        .iter()
        .map(|p| {
            let (mut num, mut den, mut mag) = (0.0, 0.0, 0.0);
            for (&j, &n) in p.sites.iter().zip(&p.density) {
                let dn = n - reference;
                num += j as f64 * dn;
                den += dn;
                mag += dn.abs();
            }
            if mag == 0.0 || den.abs() <= 1e-12 * mag {
                return Err(Error::VanishingInhomogeneity { t: p.time });
            }
            Ok(num / den)
        })
        .collect()
}

/// Density profiles at `times` (ascending, starting at or after zero),
/// stepping the state from `initial`.
pub fn density_trajectory(
    initial: &CorrelationState,
    times: &[f64],
    model: &Model,
) -> Result<Vec<DensityProfile>> {
    let mut state = initial.clone();
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let dt = t - state.time;
        if dt < 0.0 {
            return Err(Error::InvalidGrid("times must be ascending"));
        }
        if dt > 0.0 {
            state = evolve(&state, dt, model)?;
        }
        out.push(density_profile(&state, model)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::expm;
    use crate::model::{BathSpec, LatticeConfig, LossTopology, SpinBath};
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    fn model(l: usize, u: f64, up: SpinBath) -> Model {
        let lattice = LatticeConfig::new(l, 1.0, u).unwrap();
        let down = SpinBath::new(1.5, 0.5, LossTopology::NonReciprocal).unwrap();
        Model::new(lattice, BathSpec { up, down })
    }

    #[test]
    fn kronecker_propagation_matches_dense_exponential() {
        let m = model(8, 2.5, SpinBath::new(0.1, 0.3, LossTopology::Uniform).unwrap());
        let mut psi = vec![ZERO; 8];
        psi[0] = C64::new(0.6, 0.0);
        psi[1] = C64::new(0.0, 0.8);
        let s0 = CorrelationState::from_wavefunction(&m, &psi).unwrap();
        let t = 1.7;
        let s1 = evolve(&s0, t, &m).unwrap();
        let lat = &m.lattice;
        for (k, q) in [(0, 1), (2, 7), (3, 5)] {
            let d = build_dyn4(lat.momentum(k), lat.momentum(q), &m).unwrap();
            let flat: Vec<C64> = d.matrix.iter().flatten().map(|z| z * t).collect();
            let e = expm(&DMatrix::from_row_slice(4, 4, &flat));
            let v = nalgebra::DVector::from_row_slice(&s0.pairs[pair_index(8, k, q)]);
            let want = e * v;
            for i in 0..4 {
                assert!((want[i] - s1.pairs[pair_index(8, k, q)][i]).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn reversed_pair_is_the_conjugate() {
        // Evolving (q, k) with M_qk gives the conjugate of (k, q), with the
        // two single-occupation slots swapped.
        let m = model(6, 3.0, SpinBath::closed());
        let s0 = initial_state_localized(&m).unwrap();
        let s1 = evolve(&s0, 2.0, &m).unwrap();
        let lat = &m.lattice;
        let (k, q) = (1, 4);
        let d = build_dyn4(lat.momentum(q), lat.momentum(k), &m).unwrap();
        let flat: Vec<C64> = d.matrix.iter().flatten().map(|z| z * 2.0).collect();
        let e = expm(&DMatrix::from_row_slice(4, 4, &flat));
        let v0 = s0.pairs[pair_index(6, k, q)];
        let rev = nalgebra::DVector::from_row_slice(&[v0[0].conj(), v0[2].conj(), v0[1].conj(), v0[3].conj()]);
        let w = e * rev;
        let fwd = s1.pairs[pair_index(6, k, q)];
        assert!((w[0] - fwd[0].conj()).norm() < 1e-13);
        assert!((w[1] - fwd[2].conj()).norm() < 1e-13);
        assert!((w[3] - fwd[3].conj()).norm() < 1e-13);
    }

    #[test]
    fn localized_state_sits_at_origin() {
        let m = model(10, 0.0, SpinBath::closed());
        let s = initial_state_localized(&m).unwrap();
        let p = density_profile(&s, &m).unwrap();
        for (&j, &n) in p.sites.iter().zip(&p.density) {
            assert!((n - if j == 0 { 1.0 } else { 0.0 }).abs() < 1e-14);
        }
    }

    #[test]
    fn same_momentum_is_rejected() {
        let m = model(4, 1.0, SpinBath::closed());
        assert_eq!(build_dyn4(0.5, 0.5, &m), Err(Error::SameMomentum));
    }

    #[test]
    fn open_up_bath_relaxes_to_reference() {
        let m = model(8, 2.0, SpinBath::new(0.3, 0.5, LossTopology::Uniform).unwrap());
        let s = evolve(&initial_state_localized(&m).unwrap(), 80.0, &m).unwrap();
        let p = density_profile(&s, &m).unwrap();
        let r = reference_density(&m);
        assert!((r - 0.375).abs() < 1e-15);
        for n in p.density {
            assert!((n - r).abs() < 1e-10);
        }
    }

    proptest! {
        #[test]
        fn closed_up_sector_conserves_number(
            u in 0.0f64..6.0,
            t in 0.0f64..15.0,
            site in 0usize..12,
        ) {
            let m = model(12, u, SpinBath::closed());
            let mut psi = vec![ZERO; 12];
            psi[site] = C64::new(1.0, 0.0);
            let s0 = CorrelationState::from_wavefunction(&m, &psi).unwrap();
            let p = density_profile(&evolve(&s0, t, &m).unwrap(), &m).unwrap();
            let total: f64 = p.density.iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }

        #[test]
        fn evolution_is_a_semigroup(u in 0.0f64..5.0, s in 0.0f64..3.0, t in 0.0f64..3.0) {
            let m = model(6, u, SpinBath::new(0.2, 0.1, LossTopology::NonReciprocal).unwrap());
            let s0 = initial_state_localized(&m).unwrap();
            let once = evolve(&s0, s + t, &m).unwrap();
            let twice = evolve(&evolve(&s0, s, &m).unwrap(), t, &m).unwrap();
            for (a, b) in once.pairs.iter().zip(&twice.pairs) {
                for i in 0..4 {
                    prop_assert!((a[i] - b[i]).norm() < 1e-13);
                }
            }
        }
    }
}
