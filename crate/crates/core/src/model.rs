//! Lattice, dispersion and bath parameters.

use alloc::vec::Vec;

use crate::math::{cos, sin, PI};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Spin {
    Up,
    Down,
}

/// Spatial structure of the single-particle loss channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum LossTopology {
    /// On-site jumps `sqrt(gamma) c_j`, giving `gamma_k = gamma`.
    #[default]
    Uniform,
    /// Bond jumps `sqrt(gamma) (c_j + i c_{j+1})`, giving
    /// `gamma_k = 2 gamma (1 - sin k)`.
    NonReciprocal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeConfig {
    pub sites: usize,
    pub hopping: f64,
    pub interaction: f64,
}

impl LatticeConfig {
    pub fn new(sites: usize, hopping: f64, interaction: f64) -> Result<Self> {
        if sites < 2 {
            return Err(Error::InvalidParameter { name: "L", reason: "need at least two sites" });
        }
        if !(hopping.is_finite() && hopping > 0.0) {
            return Err(Error::InvalidParameter { name: "J", reason: "must be positive and finite" });
        }
        if !interaction.is_finite() {
            return Err(Error::InvalidParameter { name: "U", reason: "must be finite" });
        }
        Ok(Self { sites, hopping, interaction })
    }

    /// `k_m = -pi + 2 pi m / L`.
    pub fn momentum(&self, m: usize) -> f64 {
        -PI + 2.0 * PI * m as f64 / self.sites as f64
    }

    pub fn momenta(&self) -> Vec<f64> {
        (0..self.sites).map(|m| self.momentum(m)).collect()
    }

    /// Grid index of `k_m + 2 pi d / L`.
    pub fn shift(&self, m: usize, d: usize) -> usize {
        (m + d) % self.sites
    }

    /// Grid index of `k_m - 2 pi d / L`.
    pub fn unshift(&self, m: usize, d: usize) -> usize {
        (m + self.sites - d % self.sites) % self.sites
    }

    /// Grid index of `-k_m`.
    pub fn negate(&self, m: usize) -> usize {
        (self.sites - m) % self.sites
    }

    /// `eps_k = -2 J cos k`.
    pub fn dispersion(&self, k: f64) -> f64 {
        -2.0 * self.hopping * cos(k)
    }

    /// Signed site labels `-floor(L/2) ..= L - 1 - floor(L/2)`.
    pub fn signed_sites(&self) -> Vec<i64> {
        let half = (self.sites / 2) as i64;
        (0..self.sites as i64).map(|j| j - half).collect()
    }
}

/// Gain `kappa` and loss `gamma` acting on one spin species.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SpinBath {
    pub gain: f64,
    pub loss: f64,
    pub topology: LossTopology,
}

impl SpinBath {
    pub fn new(gain: f64, loss: f64, topology: LossTopology) -> Result<Self> {
        if !(gain.is_finite() && gain >= 0.0) {
            return Err(Error::InvalidParameter { name: "kappa", reason: "must be finite and non-negative" });
        }
        if !(loss.is_finite() && loss >= 0.0) {
            return Err(Error::InvalidParameter { name: "gamma", reason: "must be finite and non-negative" });
        }
        Ok(Self { gain, loss, topology })
    }

    pub const fn closed() -> Self {
        Self { gain: 0.0, loss: 0.0, topology: LossTopology::Uniform }
    }

    pub fn is_closed(&self) -> bool {
        self.gain == 0.0 && self.loss == 0.0
    }

    pub fn loss_rate(&self, k: f64) -> f64 {
        match self.topology {
            LossTopology::Uniform => self.loss,
            LossTopology::NonReciprocal => 2.0 * self.loss * (1.0 - sin(k)),
        }
    }

    pub fn total_rate(&self, k: f64) -> f64 {
        self.gain + self.loss_rate(k)
    }

    /// `n_k = kappa / Gamma_k`.
    pub fn steady_occupation(&self, k: f64) -> Result<f64> {
        let rate = self.total_rate(k);
        if rate == 0.0 {
            return Err(Error::DegenerateBath { k });
        }
        Ok(self.gain / rate)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BathSpec {
    pub up: SpinBath,
    pub down: SpinBath,
}

impl BathSpec {
    pub fn spin(&self, spin: Spin) -> &SpinBath {
        match spin {
            Spin::Up => &self.up,
            Spin::Down => &self.down,
        }
    }

    pub fn loss_rate(&self, k: f64, spin: Spin) -> f64 {
        self.spin(spin).loss_rate(k)
    }

    pub fn total_rate(&self, k: f64, spin: Spin) -> f64 {
        self.spin(spin).total_rate(k)
    }

    pub fn steady_occupation(&self, k: f64, spin: Spin) -> Result<f64> {
        self.spin(spin).steady_occupation(k)
    }
}

/// Lattice plus baths; the argument every solver takes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Model {
    pub lattice: LatticeConfig,
    pub bath: BathSpec,
}

impl Model {
    pub fn new(lattice: LatticeConfig, bath: BathSpec) -> Self {
        Self { lattice, bath }
    }

    pub fn sites(&self) -> usize {
        self.lattice.sites
    }

    pub fn u(&self) -> f64 {
        self.lattice.interaction
    }

    pub fn with_interaction(mut self, u: f64) -> Self {
        self.lattice.interaction = u;
        self
    }

    /// The spin-down steady occupation on every grid momentum.
    pub fn down_occupations(&self) -> Result<Vec<f64>> {
        (0..self.sites())
            .map(|m| self.bath.down.steady_occupation(self.lattice.momentum(m)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn grid_arithmetic() {
        let lat = LatticeConfig::new(8, 1.0, 0.0).unwrap();
        assert_eq!(lat.momentum(0), -PI);
        assert_eq!(lat.momentum(4), 0.0);
        for m in 0..8 {
            let k = lat.momentum(m);
            let minus = lat.momentum(lat.negate(m));
            assert!(((k + minus) / (2.0 * PI)).fract().abs() < 1e-15 || m == 0);
            assert_eq!(lat.unshift(lat.shift(m, 5), 5), m);
        }
        assert_eq!(lat.signed_sites(), [-4, -3, -2, -1, 0, 1, 2, 3]);
    }

    #[test]
    fn nonreciprocal_loss_vanishes_at_right_mover() {
        let b = SpinBath::new(0.0, 0.5, LossTopology::NonReciprocal).unwrap();
        assert_eq!(b.loss_rate(PI / 2.0), 0.0);
        assert_eq!(b.loss_rate(-PI / 2.0), 2.0);
        assert!(matches!(b.steady_occupation(PI / 2.0), Err(Error::DegenerateBath { .. })));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(LatticeConfig::new(1, 1.0, 0.0).is_err());
        assert!(LatticeConfig::new(4, 0.0, 0.0).is_err());
        assert!(LatticeConfig::new(4, 1.0, f64::NAN).is_err());
        assert!(SpinBath::new(-1.0, 0.0, LossTopology::Uniform).is_err());
    }

    proptest! {
        #[test]
        fn occupation_is_a_probability(
            kappa in 0.0f64..5.0,
            gamma in 0.0f64..5.0,
            k in -PI..PI,
            nr in any::<bool>(),
        ) {
            let topo = if nr { LossTopology::NonReciprocal } else { LossTopology::Uniform };
            let bath = SpinBath::new(kappa, gamma, topo).unwrap();
            match bath.steady_occupation(k) {
                Ok(n) => prop_assert!((0.0..=1.0).contains(&n)),
                Err(_) => prop_assert_eq!(bath.total_rate(k), 0.0),
            }
        }
    }
}
