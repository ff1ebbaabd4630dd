//! Dense superoperators for few-mode blocks.
//!
//! Operators are vectorised row-major, `vec(X)[i D + j] = X[i, j]`, so
//! `vec(A X B) = (A ⊗ B^T) vec(X)`.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::linalg::expm;
use crate::{Error, Result};

const I: C64 = C64::new(0.0, 1.0);

pub fn vectorize(x: &DMatrix<C64>) -> DVector<C64> {
    DVector::from_iterator(x.len(), x.transpose().iter().copied())
}

pub fn unvectorize(v: &DVector<C64>, dim: usize) -> DMatrix<C64> {
    DMatrix::from_row_slice(dim, dim, v.as_slice())
}

/// A Hamiltonian with its jump operators.
#[derive(Debug, Clone)]
pub struct OpenSystem {
    pub hamiltonian: DMatrix<C64>,
    pub jumps: Vec<DMatrix<C64>>,
}

impl OpenSystem {
    pub fn dim(&self) -> usize {
        self.hamiltonian.nrows()
    }

    /// Schrodinger-picture generator
    /// `-i[H, rho] + sum (L rho L† - {L†L, rho}/2)`.
    pub fn liouvillian(&self) -> DMatrix<C64> {
        let d = self.dim();
        let id = DMatrix::<C64>::identity(d, d);
        let h = &self.hamiltonian;
        let mut sup = (h.kronecker(&id) - id.kronecker(&h.transpose())) * (-I);
        for l in &self.jumps {
            let ldl = l.adjoint() * l;
            sup += l.kronecker(&l.conjugate());
            sup -= (ldl.kronecker(&id) + id.kronecker(&ldl.transpose())) * C64::new(0.5, 0.0);
        }
        sup
    }

    /// Heisenberg-picture generator
    /// `i[H, O] + sum (xi L† O L - {L†L, O}/2)`; `xi = -1` on fermion-odd `O`.
    pub fn adjoint_liouvillian(&self, xi: f64) -> DMatrix<C64> {
        let d = self.dim();
        let id = DMatrix::<C64>::identity(d, d);
        let h = &self.hamiltonian;
        let mut sup = (h.kronecker(&id) - id.kronecker(&h.transpose())) * I;
        for l in &self.jumps {
            let ldl = l.adjoint() * l;
            sup += l.adjoint().kronecker(&l.transpose()) * C64::new(xi, 0.0);
            sup -= (ldl.kronecker(&id) + id.kronecker(&ldl.transpose())) * C64::new(0.5, 0.0);
        }
        sup
    }
}

/// Adjoint generator split by fermion parity of the evolved operator.
#[derive(Debug, Clone)]
pub struct AdjointLiouvillian {
    pub dim: usize,
    pub even_sector: DMatrix<C64>,
    pub odd_sector: DMatrix<C64>,
}

impl AdjointLiouvillian {
    pub fn new(system: &OpenSystem) -> Self {
        Self {
            dim: system.dim(),
            even_sector: system.adjoint_liouvillian(1.0),
            odd_sector: system.adjoint_liouvillian(-1.0),
        }
    }

    /// The odd sector with the wrong sign on the jump term.
    pub fn with_wrong_odd_sign(system: &OpenSystem) -> Self {
        let mut s = Self::new(system);
        s.odd_sector = s.even_sector.clone();
        s
    }

    /// `|L†(1)|`, zero for a trace-preserving generator.
    pub fn identity_residual(&self) -> f64 {
        let id = vectorize(&DMatrix::identity(self.dim, self.dim));
        (&self.even_sector * id).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn evolve(&self, op: &DMatrix<C64>, t: f64, odd: bool) -> DMatrix<C64> {
        let gen = if odd { &self.odd_sector } else { &self.even_sector };
        let v = expm(&(gen * C64::new(t, 0.0))) * vectorize(op);
        unvectorize(&v, self.dim)
    }
}

/// Singular values below this fraction of the largest span the kernel.
const KERNEL_TOL: f64 = 1e-10;

/// Orthonormal basis of the steady states, as density matrices with unit
/// trace where possible.
pub fn steady_states(system: &OpenSystem) -> Result<Vec<DMatrix<C64>>> {
    let d = system.dim();
    let sup = system.liouvillian();
    let svd = sup.svd(false, true);
    let v_t = svd.v_t.as_ref().expect("requested right singular vectors");
    let smax = svd.singular_values.max();
    let basis: Vec<DMatrix<C64>> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s <= KERNEL_TOL * smax)
        .map(|(i, _)| {
            let v: DVector<C64> = v_t.row(i).adjoint();
            let m = unvectorize(&v, d);
            let tr = m.trace();
            if tr.norm() > 1e-8 {
                let m = m / tr;
                (&m + m.adjoint()) * C64::new(0.5, 0.0)
            } else {
                m
            }
        })
        .collect();
    if basis.is_empty() {
        return Err(Error::DegenerateKernel { dim: 0 });
    }
    Ok(basis)
}

/// The unique steady state.
pub fn steady_state(system: &OpenSystem) -> Result<DMatrix<C64>> {
    let mut basis = steady_states(system)?;
    if basis.len() != 1 {
        return Err(Error::DegenerateKernel { dim: basis.len() });
    }
    Ok(basis.remove(0))
}

/// The steady state inside the block where a conserved, diagonal
/// observable `P` vanishes. Falls back to the unique steady state when
/// there is one.
pub fn steady_state_where_zero(system: &OpenSystem, observable: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let basis = steady_states(system)?;
    if basis.len() == 1 {
        return Ok(basis[0].clone());
    }
    let d = system.dim();
    let keep: Vec<usize> = (0..d).filter(|&i| observable[(i, i)].norm() < 1e-12).collect();
    if keep.is_empty() || keep.len() == d {
        return Err(Error::DegenerateKernel { dim: basis.len() });
    }
    let sub = |m: &DMatrix<C64>| DMatrix::from_fn(keep.len(), keep.len(), |i, j| m[(keep[i], keep[j])]);
    let block = OpenSystem { hamiltonian: sub(&system.hamiltonian), jumps: system.jumps.iter().map(sub).collect() };
    let rho_block = steady_state(&block)?;
    let mut rho = DMatrix::zeros(d, d);
    for (i, &a) in keep.iter().enumerate() {
        for (j, &b) in keep.iter().enumerate() {
            rho[(a, b)] = rho_block[(i, j)];
        }
    }
    Ok(rho)
}

/// `G(t) = -i Tr[{c(t), c†} rho]` with `c(t)` evolved by the odd sector.
pub fn two_time_green(
    adjoint: &AdjointLiouvillian,
    c: &DMatrix<C64>,
    rho: &DMatrix<C64>,
    times: &[f64],
) -> Vec<C64> {
    let cd = c.adjoint();
    times
        .iter()
        .map(|&t| {
            let ct = adjoint.evolve(c, t, true);
            -I * ((&ct * &cd + &cd * &ct) * rho).trace()
        })
        .collect()
}
