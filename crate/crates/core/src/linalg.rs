//! Small dense kernels: closed-form 2x2 exponentials, a Pade matrix
//! exponential for the oracle, compensated sums and lattice phases.

use alloc::vec::Vec;
use core::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::math::{cos, sin, PI};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Row-major 2x2 complex matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2(pub [[C64; 2]; 2]);

impl Mat2 {
    pub const fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        Self([[a, b], [c, d]])
    }

    pub const fn identity() -> Self {
        Self::new(ONE, ZERO, ZERO, ONE)
    }

    pub fn trace(&self) -> C64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn det(&self) -> C64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn scale(&self, s: C64) -> Self {
        let m = self.0;
        Self::new(m[0][0] * s, m[0][1] * s, m[1][0] * s, m[1][1] * s)
    }

    pub fn conj(&self) -> Self {
        let m = self.0;
        Self::new(m[0][0].conj(), m[0][1].conj(), m[1][0].conj(), m[1][1].conj())
    }

    pub fn apply(&self, v: [C64; 2]) -> [C64; 2] {
        let m = self.0;
        [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
    }

    /// `exp(A)` by Cayley-Hamilton. With `N = A - (tr A / 2) I` one has
    /// `N^2 = s^2 I`, so `exp(A) = e^mu (cosh s + sinh(s)/s N)`. Both
    /// functions of `s` are even, so the branch of `s` never matters and
    /// the formula stays regular when the eigenvalues coalesce.
    pub fn exp(&self) -> Self {
        let mu = self.trace() * 0.5;
        let n = *self - Self::identity().scale(mu);
        let s2 = n.0[0][0] * n.0[0][0] + n.0[0][1] * n.0[1][0];
        let (ch, shc) = cosh_sinhc(s2);
        let e = mu.exp();
        (Self::identity().scale(ch) + n.scale(shc)).scale(e)
    }

    pub fn exp_t(&self, t: f64) -> Self {
        self.scale(C64::new(t, 0.0)).exp()
    }

    pub fn to_dmatrix(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(2, 2, &[self.0[0][0], self.0[0][1], self.0[1][0], self.0[1][1]])
    }
}

/// `(cosh s, sinh(s)/s)` as functions of `s^2`.
fn cosh_sinhc(s2: C64) -> (C64, C64) {
    if s2.norm() < 1e-8 {
        let s4 = s2 * s2;
        let s6 = s4 * s2;
        (
            ONE + s2 / 2.0 + s4 / 24.0 + s6 / 720.0,
            ONE + s2 / 6.0 + s4 / 120.0 + s6 / 5040.0,
        )
    } else {
        let s = s2.sqrt();
        (s.cosh(), s.sinh() / s)
    }
}

impl Add for Mat2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let (a, b) = (self.0, o.0);
        Self::new(a[0][0] + b[0][0], a[0][1] + b[0][1], a[1][0] + b[1][0], a[1][1] + b[1][1])
    }
}

impl Sub for Mat2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        let (a, b) = (self.0, o.0);
        Self::new(a[0][0] - b[0][0], a[0][1] - b[0][1], a[1][0] - b[1][0], a[1][1] - b[1][1])
    }
}

impl Mul for Mat2 {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let (a, b) = (self.0, o.0);
        Self::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

fn norm1(a: &DMatrix<C64>) -> f64 {
    a.column_iter().map(|c| c.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// Dense matrix exponential, degree-13 Pade with scaling and squaring
/// (Higham 2005). Used by the oracle, where matrices are at most 256 wide.
pub fn expm(a: &DMatrix<C64>) -> DMatrix<C64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm needs a square matrix");
    let norm = norm1(a);
    let mut squarings = 0u32;
    if norm > THETA13 {
        squarings = libm::ceil(libm::log2(norm / THETA13)) as u32;
    }
    let a = a * C64::new(libm::pow(2.0, -(squarings as f64)), 0.0);
    let id = DMatrix::<C64>::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = |i: usize| C64::new(PADE13[i], 0.0);

    let inner_u = &a6 * (&a6 * b(13) + &a4 * b(11) + &a2 * b(9));
    let u = &a * (inner_u + &a6 * b(7) + &a4 * b(5) + &a2 * b(3) + &id * b(1));
    let inner_v = &a6 * (&a6 * b(12) + &a4 * b(10) + &a2 * b(8));
    let v = inner_v + &a6 * b(6) + &a4 * b(4) + &a2 * b(2) + &id * b(0);

    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.lu().solve(&p).expect("Pade denominator is singular");
    for _ in 0..squarings {
        r = &r * &r;
    }
    r
}

/// Neumaier-compensated complex accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: C64,
    carry: C64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: C64) {
        self.sum.re = neumaier(self.sum.re, x.re, &mut self.carry.re);
        self.sum.im = neumaier(self.sum.im, x.im, &mut self.carry.im);
    }

    pub fn total(&self) -> C64 {
        self.sum + self.carry
    }
}

fn neumaier(sum: f64, x: f64, carry: &mut f64) -> f64 {
    let t = sum + x;
    if libm::fabs(sum) >= libm::fabs(x) {
        *carry += (sum - t) + x;
    } else {
        *carry += (x - t) + sum;
    }
    t
}

/// Plain Kahan accumulator, for hot loops where the Neumaier branch costs
/// too much.
#[derive(Debug, Clone, Copy, Default)]
pub struct Kahan {
    sum: f64,
    carry: f64,
}

impl Kahan {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum
    }
}

/// `e^{2 pi i m / L}` for `m = 0..L`, each from its own argument so the
/// table does not drift.
pub fn unit_roots(l: usize) -> Vec<C64> {
    (0..l)
        .map(|m| {
            let x = 2.0 * PI * m as f64 / l as f64;
            C64::new(cos(x), sin(x))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn close(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn mat2_exp_of_diagonal() {
        let m = Mat2::new(c(-1.0, 2.0), ZERO, ZERO, c(0.5, -3.0));
        let e = m.exp();
        assert!((e.0[0][0] - c(-1.0, 2.0).exp()).norm() < 1e-15);
        assert!((e.0[1][1] - c(0.5, -3.0).exp()).norm() < 1e-14);
        assert_eq!(e.0[0][1], ZERO);
    }

    #[test]
    fn mat2_exp_of_jordan_block() {
        // Defective: [[a, 1], [0, a]] -> e^a [[1, 1], [0, 1]].
        let a = c(-0.3, 1.1);
        let e = Mat2::new(a, ONE, ZERO, a).exp();
        let ea = a.exp();
        assert!((e.0[0][0] - ea).norm() < 1e-15);
        assert!((e.0[0][1] - ea).norm() < 1e-15);
        assert!(e.0[1][0].norm() < 1e-15);
    }

    #[test]
    fn pade_matches_nilpotent_series() {
        let mut a = DMatrix::<C64>::zeros(4, 4);
        a[(0, 1)] = c(2.0, 0.0);
        a[(1, 2)] = c(0.0, 3.0);
        a[(2, 3)] = c(1.0, 1.0);
        let mut want = DMatrix::<C64>::identity(4, 4);
        let mut term = DMatrix::<C64>::identity(4, 4);
        for j in 1..4 {
            term = &term * &a / c(j as f64, 0.0);
            want += &term;
        }
        assert!(close(&expm(&a), &want) < 1e-13);
    }

    #[test]
    fn pade_handles_large_norm() {
        // Rotation generator with a big angle; exp is exactly periodic.
        let theta = 40.0;
        let a = DMatrix::from_row_slice(2, 2, &[ZERO, c(-theta, 0.0), c(theta, 0.0), ZERO]);
        let e = expm(&a);
        assert!((e[(0, 0)] - c(libm::cos(theta), 0.0)).norm() < 1e-12);
        assert!((e[(1, 0)] - c(libm::sin(theta), 0.0)).norm() < 1e-12);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = CompensatedSum::new();
        s.add(c(1e16, 0.0));
        for _ in 0..10 {
            s.add(c(1.0, 1.0));
        }
        s.add(c(-1e16, 0.0));
        assert_eq!(s.total(), c(10.0, 10.0));
    }

    fn arb_mat2() -> impl Strategy<Value = Mat2> {
        proptest::collection::vec(-2.0f64..2.0, 8).prop_map(|v| {
            Mat2::new(c(v[0], v[1]), c(v[2], v[3]), c(v[4], v[5]), c(v[6], v[7]))
        })
    }

    proptest! {
        #[test]
        fn mat2_exp_agrees_with_pade(m in arb_mat2(), t in 0.0f64..5.0) {
            let got = m.exp_t(t).to_dmatrix();
            let want = expm(&(m.to_dmatrix() * c(t, 0.0)));
            let scale = want.iter().map(|z| z.norm()).fold(1.0, f64::max);
            prop_assert!(close(&got, &want) < 1e-12 * scale);
        }

        #[test]
        fn mat2_exp_is_a_semigroup(m in arb_mat2(), s in 0.0f64..2.0, t in 0.0f64..2.0) {
            let lhs = m.exp_t(s + t);
            let rhs = m.exp_t(s) * m.exp_t(t);
            let d = lhs - rhs;
            let err = d.0.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);
            let scale = lhs.0.iter().flatten().map(|z| z.norm()).fold(1.0, f64::max);
            prop_assert!(err < 1e-12 * scale);
        }
    }
}
