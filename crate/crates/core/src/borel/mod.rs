//! Exponent semigroups, the map to multivariate Taylor grids, `log Γ` and
//! the `Γ`-normalized coefficient diagnostics.

pub mod diagnostics;
pub mod gamma;
pub mod grid;
pub mod semigroup;

pub use diagnostics::{
    borel_normalize, growth_fit, radius_estimate, root_decay, weighted_norm, BorelTable, GevreyDiagnostics,
    GrowthFit, NormValue, NormalizedTerm, RadiusEstimate,
};
pub use gamma::LogGamma;
pub use grid::{delta_on_grid, index_weight, sigma_inverse, sigma_map, TaylorGrid};
pub use semigroup::{independent_basis, semigroup_generators, support_generators, SemigroupBasis};
