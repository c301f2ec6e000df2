//! Sparse symmetric eigensolvers.
//!
//! Everything reduces to two kernels: an envelope Cholesky factorization and a
//! restarted Lanczos iteration with full reorthogonalization. Smallest
//! eigenvalues use shift-invert on `A + σM`; the positive branch of an
//! indefinite pencil uses `L⁻¹ B L⁻ᵀ` for a factored `A − σB`.

mod cholesky;
pub mod dense;
mod lanczos;
mod pencil;

pub use cholesky::Cholesky;
pub use pencil::{
    alpha1, negative_branch_probe, positive_pencil_spectrum, principal_positive, smallest_eigs,
    Alpha1, EigOptions, EigResult, PencilSpec, Principal, MU_MAX,
};

