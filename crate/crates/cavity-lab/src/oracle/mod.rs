//! Exact quantum evolution of the cavity-array Hamiltonian on tiny instances
//! (truncated Fock ⊗ Dicke product basis), used to validate the semiclassical
//! reduction at short times and to verify the collective-spin operator
//! algebra.
//!
//! Each cavity couples only to the symmetric collective operators of its
//! ensemble, so the dynamics stays in the maximal-spin sector `S = N/2`;
//! that collapses `2^N` ensemble states to `N + 1` per site.

mod basis;
mod evolve;
mod ops;
mod states;

pub use basis::QuantumBasis;
pub use evolve::{evolve_krylov, evolve_quantum, expectation, Propagator, QuantumState, DENSE_DIM_LIMIT};
pub use ops::{
    build_hamiltonian, dicke_ladder_element, dicke_lowering, dicke_raising, dicke_z,
    photon_annihilation, photon_creation, photon_number, total_excitation, SparseOp,
};
pub use states::{
    coherent_spin_coherent_state, cutoff_population, CUTOFF_POPULATION_ALARM,
    TRUNCATION_WEIGHT_BOUND,
};

/// Errors of the quantum reference path.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("quantum basis dimension {dim} exceeds the desk-scale cap {max}")]
    DimensionOverflow { dim: usize, max: usize },
    #[error("initial truncation weight {weight:.3e} exceeds {bound:.1e}; raise the photon cutoff")]
    TruncationWeight { weight: f64, bound: f64 },
    #[error("ensemble tilt gives |<S->| = {requested:.3} beyond the spin length {max:.3}")]
    TiltTooLarge { requested: f64, max: f64 },
    #[error("state norm {norm} departs from unity")]
    NormViolation { norm: f64 },
    #[error("spin projection {m} out of range for spin {spin}")]
    LadderRange { m: f64, spin: f64 },
    #[error("population {population:.3e} at the photon cutoff exceeds the {alarm:.1e} alarm")]
    CutoffPopulation { population: f64, alarm: f64 },
    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("model parameters and quantum basis disagree on sites or atoms")]
    BasisMismatch,
}
