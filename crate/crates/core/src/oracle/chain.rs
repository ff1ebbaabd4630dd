//! Many-body density-matrix evolution of a short chain in real space.
//!
//! Modes are `(0↑ .. (L-1)↑, 0↓ .. (L-1)↓)`. The HK interaction is written
//! as `U/L sum c†_{j1↑} c_{j2↑} c†_{j3↓} c_{j4↓}` over `j1 + j3 = j2 + j4`
//! (mod L), hopping is periodic, and the baths act through on-site gain
//! `sqrt(kappa) c†_j` and loss `sqrt(gamma) c_j` (uniform) or
//! `sqrt(gamma) (c_j + i c_{j+1})` (non-reciprocal).
//!
//! The momentum grid `-pi + 2 pi m / L` makes `c_{j+L} = (-1)^L c_j`, so for
//! odd `L` every term crossing the boundary picks up a sign.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::fock::{FockOperators, SparseMatrix};
use crate::model::{LossTopology, Model, SpinBath};
use crate::{Error, Result};

const I: C64 = C64::new(0.0, 1.0);
const ZERO: C64 = C64::new(0.0, 0.0);

/// Largest chain the oracle accepts with a closed spin-up bath.
pub const MAX_SITES: usize = 6;
/// Largest chain with an open spin-up bath, where particle number is not
/// conserved and the full Fock space is needed.
pub const MAX_SITES_OPEN: usize = 5;

/// `d rho / dt = -i H_eff rho + h.c. + sum L rho L†` on a fixed basis.
#[derive(Debug, Clone)]
pub struct SparseLindblad {
    effective: SparseMatrix,
    jumps: Vec<SparseMatrix>,
    norm: f64,
}

impl SparseLindblad {
    pub fn new(hamiltonian: &SparseMatrix, jumps: &[SparseMatrix]) -> Self {
        let mut decay = SparseMatrix::zeros(hamiltonian.dim);
        let mut norm = 0.0;
        for l in jumps {
            decay = decay.add(&l.adjoint().mul(l));
            let b = l.norm_bound();
            norm += b * b;
        }
        let effective = hamiltonian.sub(&decay.scale(C64::new(0.0, 0.5)));
        norm += 2.0 * effective.norm_bound();
        Self { effective, jumps: jumps.to_vec(), norm }
    }

    pub fn dim(&self) -> usize {
        self.effective.dim
    }

    /// `L(x)` for Hermitian `x`.
    pub fn apply(&self, x: &DMatrix<C64>) -> DMatrix<C64> {
        let y = self.effective.apply(x) * (-I);
        let mut out = &y + y.adjoint();
        for l in &self.jumps {
            l.sandwich_add(x, &mut out);
        }
        out
    }

    /// Advances `rho` by `t` with a truncated Taylor series on steps of
    /// length at most `2 / |L|`, adding terms until they fall below `tol`
    /// relative to `rho`.
    pub fn propagate(&self, rho: &DMatrix<C64>, t: f64, tol: f64) -> DMatrix<C64> {
        let hmax = if self.norm > 0.0 { 2.0 / self.norm } else { t.max(1.0) };
        let steps = libm::ceil(t / hmax).max(1.0) as usize;
        let h = t / steps as f64;
        let mut rho = rho.clone();
        for _ in 0..steps {
            let scale = max_abs(&rho).max(f64::MIN_POSITIVE);
            let mut term = rho.clone();
            let mut next = rho.clone();
            for n in 1..=200 {
                term = self.apply(&term) * C64::new(h / n as f64, 0.0);
                next += &term;
                if max_abs(&term) <= tol * scale {
                    break;
                }
            }
            rho = (&next + next.adjoint()) * C64::new(0.5, 0.0);
        }
        rho
    }

    pub fn residual(&self, rho: &DMatrix<C64>) -> f64 {
        max_abs(&self.apply(rho))
    }
}

fn max_abs(x: &DMatrix<C64>) -> f64 {
    x.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `c_{j+1}` on the ring, with the boundary sign of the momentum grid.
fn next_site(ops: &FockOperators, sites: usize, j: usize, mode: &impl Fn(usize) -> usize) -> SparseMatrix {
    let c = ops.annihilator(mode((j + 1) % sites));
    if j + 1 == sites && sites % 2 == 1 {
        c.scale(C64::new(-1.0, 0.0))
    } else {
        c.clone()
    }
}

/// Jump operators of one spin species on sites given by `mode(j)`.
fn bath_jumps(ops: &FockOperators, bath: &SpinBath, sites: usize, mode: impl Fn(usize) -> usize) -> Vec<SparseMatrix> {
    let mut out = Vec::new();
    let g = C64::new(libm::sqrt(bath.gain), 0.0);
    let l = C64::new(libm::sqrt(bath.loss), 0.0);
    for j in 0..sites {
        if bath.gain > 0.0 {
            out.push(ops.creator(mode(j)).scale(g));
        }
        if bath.loss > 0.0 {
            let c = ops.annihilator(mode(j)).clone();
            let jump = match bath.topology {
                LossTopology::Uniform => c,
                LossTopology::NonReciprocal => c.add(&next_site(ops, sites, j, &mode).scale(I)),
            };
            out.push(jump.scale(l));
        }
    }
    out
}

fn hopping(ops: &FockOperators, sites: usize, j: f64, mode: impl Fn(usize) -> usize) -> SparseMatrix {
    let mut h = SparseMatrix::zeros(ops.dim());
    for s in 0..sites {
        let hop = ops.creator(mode(s)).mul(&next_site(ops, sites, s, &mode));
        h = h.add(&hop.add(&hop.adjoint()).scale(C64::new(-j, 0.0)));
    }
    h
}

/// Spin-down steady state of an `L`-site chain, reached by evolving the
/// vacuum until the generator annihilates it. Basis: `L` spin-down modes.
pub fn down_steady_state(model: &Model, tol: f64) -> Result<DMatrix<C64>> {
    let l = model.sites();
    let ops = FockOperators::new(l)?;
    let h = hopping(&ops, l, model.lattice.hopping, |j| j);
    let jumps = bath_jumps(&ops, &model.bath.down, l, |j| j);
    if jumps.is_empty() {
        return Err(Error::DegenerateKernel { dim: ops.dim() });
    }
    let gen = SparseLindblad::new(&h, &jumps);
    let d = ops.dim();
    let mut rho = DMatrix::zeros(d, d);
    rho[(0, 0)] = C64::new(1.0, 0.0);
    for _ in 0..200 {
        rho = gen.propagate(&rho, 5.0, 1e-15);
        if gen.residual(&rho) < tol {
            return Ok(rho);
        }
    }
    Err(Error::DegenerateKernel { dim: 0 })
}

/// Output of [`full_chain_evolution`].
#[derive(Debug, Clone)]
pub struct ChainTrajectory {
    pub times: Vec<f64>,
    /// Signed site labels, as in the closed-form density profiles.
    pub sites: Vec<i64>,
    /// `<n_j↑>` per time, ordered like `sites`.
    pub densities: Vec<Vec<f64>>,
    /// `<c†_i↑ c_j↑>` on lattice positions `0..L`, per time.
    pub correlations: Vec<DMatrix<C64>>,
    pub traces: Vec<f64>,
    pub min_eigenvalues: Vec<f64>,
}

/// Evolves one spin-up particle in `psi` (amplitudes on positions `0..L`)
/// on top of the spin-down steady state.
pub fn full_chain_evolution(model: &Model, psi: &[C64], times: &[f64], tol: f64) -> Result<ChainTrajectory> {
    let l = model.sites();
    let closed = model.bath.up.is_closed();
    let max = if closed { MAX_SITES } else { MAX_SITES_OPEN };
    if l > max {
        return Err(Error::DimensionLimit { sites: l, max });
    }
    if psi.len() != l {
        return Err(Error::InvalidParameter { name: "psi", reason: "length must equal L" });
    }
    let rho_down = down_steady_state(model, 1e-13)?;

    let ops = FockOperators::new(2 * l)?;
    let up = |j: usize| j;
    let down = |j: usize| l + j;
    let mut h = hopping(&ops, l, model.lattice.hopping, up).add(&hopping(&ops, l, model.lattice.hopping, down));
    let u = model.u();
    if u != 0.0 {
        let bil = |a: usize, b: usize| ops.creator(a).mul(ops.annihilator(b));
        let up_bil: Vec<Vec<SparseMatrix>> = (0..l).map(|a| (0..l).map(|b| bil(up(a), up(b))).collect()).collect();
        let down_bil: Vec<Vec<SparseMatrix>> =
            (0..l).map(|a| (0..l).map(|b| bil(down(a), down(b))).collect()).collect();
        for (j1, row) in up_bil.iter().enumerate() {
            for (j2, hop_up) in row.iter().enumerate() {
                for (j3, hops_down) in down_bil.iter().enumerate() {
                    let j4 = (j1 + j3 + l - j2) % l;
                    let scale = C64::new(u / l as f64 * hk_sign(j1, j2, j3, j4), 0.0);
                    h = h.add(&hop_up.mul(&hops_down[j4]).scale(scale));
                }
            }
        }
    }
    let mut jumps = bath_jumps(&ops, &model.bath.down, l, down);
    jumps.extend(bath_jumps(&ops, &model.bath.up, l, up));

    // Basis: one spin-up particle when the spin-up bath is closed.
    let states: Vec<usize> = if closed {
        (0..l).flat_map(|a| (0..1usize << l).map(move |s| (1 << a) | (s << l))).collect()
    } else {
        (0..ops.dim()).collect()
    };
    let h = h.restrict(&states)?;
    let jumps = jumps.iter().map(|j| j.restrict(&states)).collect::<Result<Vec<_>>>()?;
    let gen = SparseLindblad::new(&h, &jumps);

    // rho = |psi><psi| ⊗ rho_down, embedded into the chosen basis.
    let d = states.len();
    let mut local = vec![usize::MAX; ops.dim()];
    for (i, &s) in states.iter().enumerate() {
        local[s] = i;
    }
    let mut rho = DMatrix::zeros(d, d);
    let dd = 1usize << l;
    for a in 0..l {
        for b in 0..l {
            let amp = psi[a] * psi[b].conj();
            if amp == ZERO {
                continue;
            }
            for s in 0..dd {
                for t in 0..dd {
                    let (i, j) = (local[(1 << a) | (s << l)], local[(1 << b) | (t << l)]);
                    rho[(i, j)] = amp * rho_down[(s, t)];
                }
            }
        }
    }

    // <c†_a c_b> = Tr[rho c†_a c_b], restricted.
    let corr_ops: Vec<Vec<SparseMatrix>> = (0..l)
        .map(|a| {
            (0..l)
                .map(|b| ops.creator(up(a)).mul(ops.annihilator(up(b))).restrict(&states))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let sites = model.lattice.signed_sites();
    let mut out = ChainTrajectory {
        times: times.to_vec(),
        sites: sites.clone(),
        densities: Vec::new(),
        correlations: Vec::new(),
        traces: Vec::new(),
        min_eigenvalues: Vec::new(),
    };
    let mut now = 0.0;
    for &t in times {
        if t < now {
            return Err(Error::InvalidGrid("times must be ascending"));
        }
        if t > now {
            rho = gen.propagate(&rho, t - now, tol);
            now = t;
        }
        let corr = DMatrix::from_fn(l, l, |a, b| trace_product(&corr_ops[a][b], &rho));
        out.densities.push(sites.iter().map(|&j| corr[(j.rem_euclid(l as i64) as usize, j.rem_euclid(l as i64) as usize)].re).collect());
        out.correlations.push(corr);
        out.traces.push(rho.trace().re);
        let eig = rho.clone().symmetric_eigenvalues();
        out.min_eigenvalues.push(eig.iter().copied().fold(f64::INFINITY, f64::min));
    }
    Ok(out)
}

/// `sum_k e^{ik(j1 - j2 + j3 - j4)} = L (-1)^(j1 - j2 + j3 - j4)` on the grid.
fn hk_sign(j1: usize, j2: usize, j3: usize, j4: usize) -> f64 {
    if (j1 + j3 + j2 + j4).is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// `Tr[A rho]` for sparse `A`.
fn trace_product(a: &SparseMatrix, rho: &DMatrix<C64>) -> C64 {
    let mut s = ZERO;
    for (i, row) in a.rows.iter().enumerate() {
        for &(j, v) in row {
            s += v * rho[(j, i)];
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BathSpec, LatticeConfig};

    fn model(l: usize, u: f64) -> Model {
        let lattice = LatticeConfig::new(l, 1.0, u).unwrap();
        let down = SpinBath::new(1.5, 0.5, LossTopology::NonReciprocal).unwrap();
        Model::new(lattice, BathSpec { up: SpinBath::closed(), down })
    }

    #[test]
    fn down_state_has_momentum_occupations() {
        let m = model(4, 0.0);
        let rho = down_steady_state(&m, 1e-13).unwrap();
        let ops = FockOperators::new(4).unwrap();
        let lat = &m.lattice;
        for km in 0..4 {
            let k = lat.momentum(km);
            // n_k = (1/L) sum e^{ik(a-b)} c†_a c_b
            let mut n = ZERO;
            for a in 0..4 {
                for b in 0..4 {
                    let op = ops.creator(a).mul(ops.annihilator(b));
                    let phase = C64::new(0.0, k * (a as f64 - b as f64)).exp();
                    n += phase * trace_product(&op, &rho) / 4.0;
                }
            }
            let want = m.bath.down.steady_occupation(k).unwrap();
            assert!((n.re - want).abs() < 1e-11 && n.im.abs() < 1e-11, "k = {k}: {n}");
        }
    }

    #[test]
    fn rejects_long_chains() {
        let m = model(7, 1.0);
        let psi = vec![ZERO; 7];
        assert!(matches!(full_chain_evolution(&m, &psi, &[0.0], 1e-12), Err(Error::DimensionLimit { .. })));
    }

    #[test]
    fn real_space_interaction_is_hk() {
        // The real-space quartic sum equals U sum_k n_k↑ n_k↓.
        let l = 3;
        let u = 1.7;
        let ops = FockOperators::new(2 * l).unwrap();
        let mut real = SparseMatrix::zeros(ops.dim());
        for j1 in 0..l {
            for j2 in 0..l {
                for j3 in 0..l {
                    let j4 = (j1 + j3 + l - j2) % l;
                    let t = ops
                        .creator(j1)
                        .mul(ops.annihilator(j2))
                        .mul(&ops.creator(l + j3).mul(ops.annihilator(l + j4)));
                    real = real.add(&t.scale(C64::new(u / l as f64 * hk_sign(j1, j2, j3, j4), 0.0)));
                }
            }
        }
        let lat = LatticeConfig::new(l, 1.0, u).unwrap();
        let mut mom = SparseMatrix::zeros(ops.dim());
        for km in 0..l {
            let k = lat.momentum(km);
            let ck = |off: usize| {
                let mut c = SparseMatrix::zeros(ops.dim());
                for j in 0..l {
                    let ph = C64::new(0.0, -k * j as f64).exp() / libm::sqrt(l as f64);
                    c = c.add(&ops.annihilator(off + j).scale(ph));
                }
                c
            };
            let (cu, cd) = (ck(0), ck(l));
            let nu = cu.adjoint().mul(&cu);
            let nd = cd.adjoint().mul(&cd);
            mom = mom.add(&nu.mul(&nd).scale(C64::new(u, 0.0)));
        }
        let diff = real.sub(&mom).to_dense();
        assert!(diff.iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn trace_and_positivity_are_kept() {
        let m = model(3, 2.0);
        let mut psi = vec![ZERO; 3];
        psi[0] = C64::new(1.0, 0.0);
        let tr = full_chain_evolution(&m, &psi, &[0.0, 1.0, 3.0], 1e-12).unwrap();
        for (t, e) in tr.traces.iter().zip(&tr.min_eigenvalues) {
            assert!((t - 1.0).abs() < 1e-10);
            assert!(*e > -1e-10);
        }
        let total: f64 = tr.densities[2].iter().sum();
        assert!((total - 1.0).abs() < 1e-10);
    }
}
