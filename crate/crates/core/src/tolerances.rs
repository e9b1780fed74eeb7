//! Numerical thresholds shared across modules.

/// Relative tolerance for the nearest-neighbour distance normalisation.
pub const GEOMETRY_REL: f64 = 1e-12;

/// Separations below this are treated as coincident sites.
pub const COINCIDENT_SITE: f64 = 1e-9;

/// Eigenvalues of V at or below this floor make the ground state undefined.
pub const EIGENVALUE_FLOOR: f64 = 1e-12;

/// Margin on `min eig(W) > -1` for the positive-definite flag.
pub const PD_MARGIN: f64 = 1e-12;

/// Binding energies in `(-ENERGY_CLAMP, 0)` are snapped to zero.
pub const ENERGY_CLAMP: f64 = 1e-12;

/// Largest series order evaluated.
pub const SERIES_K_CAP: usize = 200;

/// Relative size of the last series term that counts as converged.
pub const SERIES_CONVERGED_REL: f64 = 1e-14;

/// Standard-form discriminant below which `c+^2 = c-^2`.
pub const STANDARD_FORM_DISC: f64 = 1e-9;

/// Slack on the two-mode physicality conditions.
pub const PHYSICALITY: f64 = 1e-9;

/// `eta*` at or below this switches to the degenerate branch.
pub const ETA_DEGENERATE: f64 = 1e-14;

/// Grid resolution of the phase minimisation.
pub const PHI_GRID: usize = 3600;

/// Golden-section stopping width in phase.
pub const PHI_REFINE: f64 = 1e-10;

/// Reference tangles below this are treated as zero in the EDI denominator.
pub const EDI_DENOMINATOR: f64 = 1e-300;

/// Slack on the monogamy and reduced-tangle inequalities.
pub const INEQUALITY: f64 = 1e-10;

/// Bisection stopping width for boundary searches.
pub const BISECTION: f64 = 1e-8;

/// Residual required of iterative qubit ground states.
pub const QUBIT_RESIDUAL: f64 = 1e-9;

/// Largest qubit register handled.
pub const QUBIT_MAX: usize = 14;

/// Largest register solved with a dense eigendecomposition.
pub const QUBIT_DENSE_MAX: usize = 10;

/// Default cap on the mode count `3N` of scanned assemblies.
pub const MODE_BUDGET: usize = 4500;
