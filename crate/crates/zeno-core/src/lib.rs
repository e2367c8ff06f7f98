//! Simulation library for the measurement-induced multi-qubit Zeno gate:
//! ideal projective construction, finite-measurement-strength fidelities
//! (heralded and unheralded), dispersive and longitudinal circuit-QED readout
//! models, and full qudit ⊗ cavity master-equation simulations.
//!
//! All internal frequencies and rates are angular (rad/µs) and times are in
//! µs; unit conversion happens only at the configuration boundary.

pub mod dispersive;
pub mod evolve;
pub mod finite_meas;
pub mod fullsim;
pub mod gate;
pub mod haar;
pub mod linalg;
pub mod operator;
pub mod scenario;

pub use evolve::{
    evolve_lindblad, evolve_nonhermitian, expm_liouvillian, EvolveError, IntegratorConfig,
    LindbladSpec,
};
pub use gate::{
    ideal_unitary, ncphase_target, projector_n, rabi_hamiltonian, zeno_hamiltonian,
    ZenoSystemSpec,
};
pub use operator::{partial_trace, tensor, DensityMatrix, Operator, OperatorError};
