//! Brute-force reference built from explicit fermion operators.
//!
//! Nothing here uses the closed forms of the other modules: each check
//! constructs the Lindbladian of a few modes (or of a whole short chain)
//! and evolves it directly.

pub mod block;
pub mod chain;
pub mod fock;
pub mod liouvillian;

pub use block::{build_block_hk, two_momentum_block, HkBlock, PairBlock};
pub use chain::{down_steady_state, full_chain_evolution, ChainTrajectory, MAX_SITES, MAX_SITES_OPEN};
pub use fock::{FockOperators, SparseMatrix};
pub use liouvillian::{steady_state, two_time_green, AdjointLiouvillian, OpenSystem};
