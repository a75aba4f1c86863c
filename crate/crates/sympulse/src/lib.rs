//! Implicit symplectic integrators built from discretization maps.
//!
//! A discretization map sends a tangent vector to a pair of nearby
//! configuration points and encodes a one-step numerical scheme as a
//! correspondence of endpoint pairs.  Lifting such a map to covectors turns
//! the differential of a Hamiltonian into an implicit stepping rule that is
//! symplectic by construction, and that conserves the momentum function of
//! any linear symmetry the map commutes with.
//!
//! The crate is organised around that pipeline:
//!
//! - [`geometry`]: chart-level bundle points, the canonical
//!   antisymplectomorphism, complete lifts, the pairing identity;
//! - [`discretization`]: map families (the theta methods, a matrix-group
//!   midpoint), the adjoint combinator, axiom and equivariance sweeps;
//! - [`lift`]: the pointwise cotangent lift and the Hamiltonian/Lagrangian
//!   step schemes it induces;
//! - [`integrator`]: Newton stepping, adjoint steps, composition schemes,
//!   trajectories;
//! - [`symmetry`]: linear group actions, momentum maps, conservation
//!   diagnostics;
//! - [`diagnostics`]: symplectic-defect probes, drift series, empirical
//!   convergence order.

pub mod diagnostics;
pub mod discretization;
pub mod error;
pub mod geometry;
pub mod integrator;
pub mod lift;
pub mod symmetry;

mod numeric;

pub use diagnostics::{
    convergence_order, default_probe_eps, energy_drift, flow_jacobian_fd, symplectic_defect,
    OrderEstimate,
};
pub use discretization::{
    adjoint_map, check_axioms, check_symmetry_preservation, custom_map, lie_group_midpoint,
    lie_group_midpoint_map, matrix_exp, matrix_exp_so3, midpoint_map, theta_map, AxiomReport,
    DefectReport, DiscretizationMap,
};
pub use error::{Error, Result};
pub use geometry::{
    canonical_symplectic_matrix, pairing_residual, to_cotangent_covector, to_tangent_covector,
    CotangentOfCotangent, CotangentOfTangent, PhasePoint, ProductCovector, TangentPoint,
    VectorField,
};
pub use integrator::{
    adjoint_step, composed_step, integrate, newton_solve, step, triple_jump, CompositionScheme,
    IntegrationError, NewtonConfig, NewtonSolution, Trajectory,
};
pub use lift::{
    build_hamiltonian_step, build_lagrangian_step, cotangent_lift_point, hamiltonian_generator,
    HamiltonianSystem, LagrangianSystem, StepScheme,
};
pub use symmetry::{
    cotangent_lift_action, hamiltonian_invariance_check, infinitesimal_generator, momentum,
    momentum_drift, so2_generator, AlgebraElement, LinearGroupAction,
};
