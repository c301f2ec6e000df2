//! Quantities on the periodicity cell: the principal eigenpair `μ(x₁)`,
//! `Ψ(x₁,·)` and its `x₁`-derivatives, correctors, and the effective
//! coefficients of the limit oscillator.

mod corrector;
mod effective;
mod principal;

pub use corrector::{
    corrector_case1, corrector_weighted, corrector_weighted_field, AeffWeighting, CorrectorField,
    CorrectorKind, WeightedCorrectors,
};
pub use effective::{build_effective_model, c_effective, EffectiveConfig, EffectiveModel, Provenance, PSI_STEP};
pub use principal::{
    cell_pencil, mu_prime, mu_second_at_zero, mu_values, principal_cell_eig, rho_psi_average,
    CellEigenpair, MuSecond, COEFFICIENT_FD_STEP, MU2_STEP,
};
