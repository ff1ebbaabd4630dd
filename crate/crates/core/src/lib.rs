//! Exact open-system dynamics of the Hatsugai-Kohmoto chain coupled to
//! Markovian particle baths, plus the second-order self-energy of the
//! driven-dissipative Hubbard chain.
//!
//! Everything here works on a periodic momentum grid `k_m = -pi + 2 pi m / L`.
//! The crate builds without `std` (it needs `alloc`); the `std` feature only
//! forwards to the dependencies and the `parallel` feature adds rayon loops
//! over momenta.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

mod error;
pub mod linalg;
mod math;
pub mod model;
pub mod presets;
pub mod response;
pub mod relaxation;
pub mod hubbard;
pub mod oracle;

pub use error::{Error, Result};
pub use model::{BathSpec, LatticeConfig, LossTopology, Model, Spin, SpinBath};
pub use num_complex::Complex64 as C64;

/// Evaluates `f` on `0..n`, in parallel when the `parallel` feature is on.
/// Output order never depends on scheduling.
#[cfg(feature = "parallel")]
pub(crate) fn map_indices<T, F>(n: usize, f: F) -> alloc::vec::Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_indices<T, F>(n: usize, f: F) -> alloc::vec::Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}
