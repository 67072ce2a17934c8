//! Composite-pulse toolkit for a driven three-level transmon ladder:
//! exact segment propagators, sequence composition, transfer/gate figures of
//! merit, a catalog of published robust sequences, error sweeps, and a
//! derivative-free sequence optimizer.

pub mod catalog;
pub mod error;
pub mod metrics;
pub mod model;
pub mod optimize;
pub mod scan;
pub mod sequence;

pub use catalog::{
    catalog_entry, load_catalog, regime_defaults, CatalogEntry, CatalogTarget, RegimeDefaults,
};
pub use error::{Error, Result};
pub use metrics::{
    block_fidelity, gate_fidelity, populations_from_ground, single_pulse_reference,
    standard_gate, transfer_cost, PopulationTriple, TargetGate, TransferTarget,
};
pub use optimize::{
    objective, objective_report, optimize, polish, Budget, Mode, ObjectiveReport,
    OptimizationProblem, OptimizationResult, RunReport,
};
pub use scan::{
    robustness_summary, scan_fidelity, scan_populations, EpsilonGrid, EpsilonProfile,
    ProfileData, ProfileMeta, RobustnessSummary,
};
pub use sequence::CompositeSequence;
pub use model::{
    build_hamiltonian, level_frequency, phase_frame, propagate, unitarity_defect, Hamiltonian3,
    Propagator3, Pulse, SystemParams, HERMITICITY_TOL, UNITARITY_TOL,
};
