//! Fermionic Fock space with Jordan-Wigner strings.
//!
//! Basis state `s` is the bit string of occupations, mode `a` on bit `a`,
//! and stands for `prod_a (c†_a)^{n_a} |0>` with modes in ascending order.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::{Error, Result};

const ZERO: C64 = C64::new(0.0, 0.0);

/// Row-compressed complex matrix: `rows[i]` lists `(column, value)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    pub dim: usize,
    pub rows: Vec<Vec<(usize, C64)>>,
}

impl SparseMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, rows: vec![Vec::new(); dim] }
    }

    pub fn identity(dim: usize) -> Self {
        Self { dim, rows: (0..dim).map(|i| vec![(i, C64::new(1.0, 0.0))]).collect() }
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn adjoint(&self) -> Self {
        let mut rows = vec![Vec::new(); self.dim];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                rows[j].push((i, v.conj()));
            }
        }
        Self { dim: self.dim, rows }
    }

    pub fn scale(&self, s: C64) -> Self {
        let rows = self.rows.iter().map(|r| r.iter().map(|&(j, v)| (j, v * s)).collect()).collect();
        Self { dim: self.dim, rows }
    }

    fn combine(&self, other: &Self, sign: f64) -> Self {
        assert_eq!(self.dim, other.dim);
        let mut scratch = Scratch::new(self.dim);
        let rows = self
            .rows
            .iter()
            .zip(&other.rows)
            .map(|(a, b)| {
                for &(j, v) in a {
                    scratch.add(j, v);
                }
                for &(j, v) in b {
                    scratch.add(j, v * sign);
                }
                scratch.drain()
            })
            .collect();
        Self { dim: self.dim, rows }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.combine(other, 1.0)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.combine(other, -1.0)
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let mut scratch = Scratch::new(self.dim);
        let rows = self
            .rows
            .iter()
            .map(|row| {
                for &(k, a) in row {
                    for &(j, b) in &other.rows[k] {
                        scratch.add(j, a * b);
                    }
                }
                scratch.drain()
            })
            .collect();
        Self { dim: self.dim, rows }
    }

    /// `self * x` for a dense `x`.
    pub fn apply(&self, x: &DMatrix<C64>) -> DMatrix<C64> {
        assert_eq!(self.dim, x.nrows());
        let mut out = DMatrix::zeros(self.dim, x.ncols());
        for c in 0..x.ncols() {
            let col = x.column(c);
            for (i, row) in self.rows.iter().enumerate() {
                let mut s = ZERO;
                for &(j, v) in row {
                    s += v * col[j];
                }
                out[(i, c)] = s;
            }
        }
        out
    }

    /// `out += self * x * self†`.
    pub fn sandwich_add(&self, x: &DMatrix<C64>, out: &mut DMatrix<C64>) {
        assert_eq!(self.dim, x.nrows());
        for (j, row_j) in self.rows.iter().enumerate() {
            for &(b, w) in row_j {
                let w = w.conj();
                let xb = x.column(b);
                let mut oj = out.column_mut(j);
                for (i, row_i) in self.rows.iter().enumerate() {
                    let mut s = ZERO;
                    for &(a, v) in row_i {
                        s += v * xb[a];
                    }
                    oj[i] += s * w;
                }
            }
        }
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut d = DMatrix::zeros(self.dim, self.dim);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                d[(i, j)] += v;
            }
        }
        d
    }

    pub fn max_abs(&self) -> f64 {
        self.rows.iter().flatten().map(|(_, v)| v.norm()).fold(0.0, f64::max)
    }

    /// Upper bound on the spectral norm, `sqrt(|A|_1 |A|_inf)`.
    pub fn norm_bound(&self) -> f64 {
        let mut cols = vec![0.0; self.dim];
        let mut row_max: f64 = 0.0;
        for row in &self.rows {
            let mut s = 0.0;
            for &(j, v) in row {
                let a = v.norm();
                s += a;
                cols[j] += a;
            }
            row_max = row_max.max(s);
        }
        let col_max = cols.into_iter().fold(0.0, f64::max);
        libm::sqrt(row_max * col_max)
    }

    /// Restriction to the basis states `states` (full-space indices).
    /// Fails if the operator connects the subspace to its complement.
    pub fn restrict(&self, states: &[usize]) -> Result<Self> {
        let mut local = vec![usize::MAX; self.dim];
        for (i, &s) in states.iter().enumerate() {
            local[s] = i;
        }
        let mut rows = vec![Vec::new(); states.len()];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                match (local[i], local[j]) {
                    (usize::MAX, usize::MAX) => {}
                    (a, b) if a != usize::MAX && b != usize::MAX => rows[a].push((b, v)),
                    _ => return Err(Error::SectorLeak),
                }
            }
        }
        Ok(Self { dim: states.len(), rows })
    }
}

/// Dense accumulator for one sparse row.
struct Scratch {
    values: Vec<C64>,
    touched: Vec<usize>,
    seen: Vec<bool>,
}

impl Scratch {
    fn new(dim: usize) -> Self {
        Self { values: vec![ZERO; dim], touched: Vec::new(), seen: vec![false; dim] }
    }

    fn add(&mut self, j: usize, v: C64) {
        if !self.seen[j] {
            self.seen[j] = true;
            self.touched.push(j);
        }
        self.values[j] += v;
    }

    fn drain(&mut self) -> Vec<(usize, C64)> {
        self.touched.sort_unstable();
        let out = self
            .touched
            .iter()
            .filter(|&&j| self.values[j] != ZERO)
            .map(|&j| (j, self.values[j]))
            .collect();
        for &j in &self.touched {
            self.values[j] = ZERO;
            self.seen[j] = false;
        }
        self.touched.clear();
        out
    }
}

#[derive(Debug, Clone)]
pub struct FockOperators {
    pub n_modes: usize,
    pub annihilators: Vec<SparseMatrix>,
    /// `(-1)^N` on each basis state.
    pub parity: Vec<f64>,
}

/// Largest mode count the oracle builds.
pub const MAX_MODES: usize = 12;

impl FockOperators {
    /// Builds `c_a` for every mode and checks the anticommutation relations.
    pub fn new(n_modes: usize) -> Result<Self> {
        if n_modes == 0 || n_modes > MAX_MODES {
            return Err(Error::DimensionLimit { sites: n_modes, max: MAX_MODES });
        }
        let dim = 1usize << n_modes;
        let annihilators: Vec<SparseMatrix> = (0..n_modes)
            .map(|a| {
                let mut m = SparseMatrix::zeros(dim);
                for s in 0..dim {
                    if s >> a & 1 == 1 {
                        let below = (s & ((1 << a) - 1)).count_ones();
                        let sign = if below % 2 == 0 { 1.0 } else { -1.0 };
                        m.rows[s & !(1 << a)].push((s, C64::new(sign, 0.0)));
                    }
                }
                m
            })
            .collect();
        let parity = (0..dim).map(|s: usize| if s.count_ones().is_multiple_of(2) { 1.0 } else { -1.0 }).collect();
        let ops = Self { n_modes, annihilators, parity };
        let err = ops.anticommutation_error();
        if err > 1e-14 {
            return Err(Error::Anticommutation { error: err });
        }
        Ok(ops)
    }

    pub fn dim(&self) -> usize {
        1 << self.n_modes
    }

    pub fn annihilator(&self, a: usize) -> &SparseMatrix {
        &self.annihilators[a]
    }

    pub fn creator(&self, a: usize) -> SparseMatrix {
        self.annihilators[a].adjoint()
    }

    pub fn number(&self, a: usize) -> SparseMatrix {
        self.creator(a).mul(&self.annihilators[a])
    }

    /// Largest entry of `{c_a, c†_b} - delta_ab` and `{c_a, c_b}` over all pairs.
    pub fn anticommutation_error(&self) -> f64 {
        let id = SparseMatrix::identity(self.dim());
        let mut worst: f64 = 0.0;
        for a in 0..self.n_modes {
            let ca = &self.annihilators[a];
            for b in 0..self.n_modes {
                let cb = &self.annihilators[b];
                let cbd = cb.adjoint();
                let mut mixed = ca.mul(&cbd).add(&cbd.mul(ca));
                if a == b {
                    mixed = mixed.sub(&id);
                }
                let pure = ca.mul(cb).add(&cb.mul(ca));
                worst = worst.max(mixed.max_abs()).max(pure.max_abs());
            }
        }
        worst
    }
}
