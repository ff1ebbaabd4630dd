use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: &'static str },

    #[error("total rate vanishes at k = {k}; steady occupation undefined")]
    DegenerateBath { k: f64 },

    #[error("exceptional point at k = {k}; residues diverge")]
    ExceptionalPoint { k: f64 },

    #[error("pole on the real axis at k = {k}; supply a broadening")]
    PoleOnAxis { k: f64 },

    #[error("Green's function vanishes at k = {k}, omega = {omega}")]
    ZeroGreen { k: f64, omega: f64 },

    #[error("real-space norm vanishes at t = {t}")]
    VanishingNorm { t: f64 },

    #[error("density reference cancels the total signal at t = {t}")]
    VanishingInhomogeneity { t: f64 },

    #[error("momenta coincide; pair dynamics needs k != q")]
    SameMomentum,

    #[error("density has imaginary residue {imag:e}")]
    HermiticityViolation { imag: f64 },

    #[error("resonant denominator at k = {k}, omega = {omega}")]
    Resonance { k: f64, omega: f64 },

    #[error("{sites} sites exceeds the dense oracle limit of {max}")]
    DimensionLimit { sites: usize, max: usize },

    #[error("steady-state kernel has dimension {dim}")]
    DegenerateKernel { dim: usize },

    #[error("fermionic operators violate anticommutation by {error:e}")]
    Anticommutation { error: f64 },

    #[error("operator leaves the particle-number sector")]
    SectorLeak,

    #[error("invalid grid: {0}")]
    InvalidGrid(&'static str),
}
