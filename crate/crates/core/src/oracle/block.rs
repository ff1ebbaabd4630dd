//! Momentum blocks built from explicit fermion operators.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use super::fock::FockOperators;
use super::liouvillian::{steady_state_where_zero, two_time_green, vectorize, AdjointLiouvillian, OpenSystem};
use crate::model::{Model, Spin};
use crate::{Error, Result};

fn sqrt_c(x: f64) -> C64 {
    C64::new(libm::sqrt(x), 0.0)
}

/// Gain and loss jumps for one mode, skipping zero rates.
fn mode_jumps(ops: &FockOperators, mode: usize, gain: f64, loss: f64, out: &mut Vec<DMatrix<C64>>) {
    let c = ops.annihilator(mode).to_dense();
    if gain > 0.0 {
        out.push(c.adjoint() * sqrt_c(gain));
    }
    if loss > 0.0 {
        out.push(c * sqrt_c(loss));
    }
}

/// Modes `(k↑, k↓)`; `H = eps (n↑ + n↓) + U n↑ n↓`.
#[derive(Debug, Clone)]
pub struct HkBlock {
    pub k: f64,
    pub ops: FockOperators,
    pub system: OpenSystem,
}

pub const UP: usize = 0;
pub const DOWN: usize = 1;

pub fn build_block_hk(k: f64, model: &Model) -> Result<HkBlock> {
    let ops = FockOperators::new(2)?;
    let eps = model.lattice.dispersion(k);
    let nu = ops.number(UP).to_dense();
    let nd = ops.number(DOWN).to_dense();
    let hamiltonian = (&nu + &nd) * C64::new(eps, 0.0) + (&nu * &nd) * C64::new(model.u(), 0.0);
    let mut jumps = Vec::new();
    for (mode, spin) in [(UP, Spin::Up), (DOWN, Spin::Down)] {
        let bath = model.bath.spin(spin);
        mode_jumps(&ops, mode, bath.gain, bath.loss_rate(k), &mut jumps);
    }
    Ok(HkBlock { k, ops, system: OpenSystem { hamiltonian, jumps } })
}

impl HkBlock {
    /// The steady state, or with a closed spin-up bath the one with the
    /// spin-up mode empty.
    pub fn reference_state(&self) -> Result<DMatrix<C64>> {
        steady_state_where_zero(&self.system, &self.ops.number(UP).to_dense())
    }

    /// Retarded `G(k, t)` by the regression theorem. `xi` is the sign of
    /// the jump term for the odd operator `c_k↑`; the physical value is -1.
    pub fn green(&self, times: &[f64], xi: f64) -> Result<Vec<C64>> {
        let adj = if xi < 0.0 {
            AdjointLiouvillian::new(&self.system)
        } else {
            AdjointLiouvillian::with_wrong_odd_sign(&self.system)
        };
        let rho = self.reference_state()?;
        let c = self.ops.annihilator(UP).to_dense();
        Ok(two_time_green(&adj, &c, &rho, times))
    }

    /// Heisenberg evolution of `n_k↑` projected on `{1, n_k↑}`: returns the
    /// coefficients and the relative residual of the projection.
    pub fn occupation_flow(&self, t: f64) -> ([C64; 2], f64) {
        let adj = AdjointLiouvillian::new(&self.system);
        let n = self.ops.number(UP).to_dense();
        let d = self.system.dim();
        let id = DMatrix::<C64>::identity(d, d);
        let nt = adj.evolve(&n, t, false);
        let (coef, resid) = project(&vectorize(&nt), &[vectorize(&id), vectorize(&n)]);
        ([coef[0], coef[1]], resid)
    }
}

/// Least-squares coefficients of `target` in `span(basis)` and the
/// relative residual.
pub fn project(target: &DVector<C64>, basis: &[DVector<C64>]) -> (Vec<C64>, f64) {
    let n = basis.len();
    let gram = DMatrix::from_fn(n, n, |i, j| basis[i].dotc(&basis[j]));
    let rhs = DVector::from_fn(n, |i, _| basis[i].dotc(target));
    let coef = gram.lu().solve(&rhs).expect("basis operators are independent");
    let mut fit = DVector::zeros(target.len());
    for (c, b) in coef.iter().zip(basis) {
        fit += b * *c;
    }
    let scale = target.norm().max(f64::MIN_POSITIVE);
    (coef.iter().copied().collect(), (target - fit).norm() / scale)
}

/// Modes `(k↑, q↑, k↓, q↓)`.
#[derive(Debug, Clone)]
pub struct PairBlock {
    pub k: f64,
    pub q: f64,
    pub ops: FockOperators,
    pub system: OpenSystem,
}

pub fn two_momentum_block(k: f64, q: f64, model: &Model) -> Result<PairBlock> {
    if k == q {
        return Err(Error::SameMomentum);
    }
    let ops = FockOperators::new(4)?;
    let n: Vec<DMatrix<C64>> = (0..4).map(|a| ops.number(a).to_dense()).collect();
    let lat = &model.lattice;
    let (ek, eq) = (lat.dispersion(k), lat.dispersion(q));
    let u = C64::new(model.u(), 0.0);
    let hamiltonian = (&n[0] + &n[2]) * C64::new(ek, 0.0)
        + (&n[1] + &n[3]) * C64::new(eq, 0.0)
        + (&n[0] * &n[2] + &n[1] * &n[3]) * u;
    let mut jumps = Vec::new();
    for (mode, spin, mom) in [(0, Spin::Up, k), (1, Spin::Up, q), (2, Spin::Down, k), (3, Spin::Down, q)] {
        let bath = model.bath.spin(spin);
        mode_jumps(&ops, mode, bath.gain, bath.loss_rate(mom), &mut jumps);
    }
    Ok(PairBlock { k, q, ops, system: OpenSystem { hamiltonian, jumps } })
}

impl PairBlock {
    /// `c†_k↑ c_q↑ · {1, n_k↓, n_q↓, n_k↓ n_q↓}`.
    pub fn hierarchy(&self) -> [DMatrix<C64>; 4] {
        let o = self.ops.creator(0).mul(self.ops.annihilator(1)).to_dense();
        let nk = self.ops.number(2).to_dense();
        let nq = self.ops.number(3).to_dense();
        [o.clone(), &o * &nk, &o * &nq, &o * &nk * &nq]
    }

    /// Rows `a_i` with `Psi_i(t) = sum_j a_ij Psi_j`, fitted to the exact
    /// Heisenberg evolution, and the largest relative projection residual.
    pub fn propagator(&self, t: f64) -> ([[C64; 4]; 4], f64) {
        let adj = AdjointLiouvillian::new(&self.system);
        let psi = self.hierarchy();
        let basis: Vec<DVector<C64>> = psi.iter().map(vectorize).collect();
        let gen = adj.even_sector * C64::new(t, 0.0);
        let e = crate::linalg::expm(&gen);
        let mut rows = [[C64::new(0.0, 0.0); 4]; 4];
        let mut worst: f64 = 0.0;
        for (i, b) in basis.iter().enumerate() {
            let (coef, resid) = project(&(&e * b), &basis);
            rows[i].copy_from_slice(&coef);
            worst = worst.max(resid);
        }
        (rows, worst)
    }
}
