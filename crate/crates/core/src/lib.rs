//! Quantum Drude oscillator assemblies: dispersion energies, Gaussian
//! ground-state entanglement and a truncated qubit comparator.

pub mod coupling;
pub mod energy;
pub mod entanglement;
pub mod error;
pub mod gaussian;
pub mod geometry;
pub mod io;
pub mod linalg;
pub mod qubit;
pub mod scan;
pub mod tolerances;

pub use coupling::{build_coupling, build_potential, build_potential_general, CouplingMatrix, PotentialMatrix, QdoParamSet};
pub use energy::{binding_energy, energy_breakdown, series_terms, spectrum, EnergyBreakdown, ModeSpectrum};
pub use error::{QdoError, Result};
pub use geometry::{build_chain, build_lattice, build_trimer, GeometryKind, LatticeKind, SiteSet};
pub use entanglement::{
    edi, mixed_pair_tangle, mode_tangle, monogamy_audit, pair_bound, reference_tangle, MixedTangle, TangleReport,
};
pub use gaussian::{reduce_two_mode, symplectic_spectrum, GroundStateCM, TwoModeStandardForm};
pub use qubit::{build_qubit_model, ground_state, qubit_binding, QubitBinding, QubitGroundState, QubitModel};
pub use scan::{find_boundary, BoundaryMode, BoundaryResult, BoundaryTarget, Range, ScanKind, ScanOutput, ScanSpec};
