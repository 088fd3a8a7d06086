//! Fisher information and structure tensors of randomized densities.
//!
//! A nonnegative density `f` mixed over the heat kernel gives the solution
//! `u(x, t)` of the heat Cauchy problem; mixed over the half-plane Poisson
//! kernel it gives the harmonic extension `u(x, y)`. Normalizing the integrand
//! yields a two-parameter family of densities
//!
//! ```text
//! p(ξ; θ) = Φ(θ, ξ) f(ξ) / u(θ)
//! ```
//!
//! whose Fisher metric `g_ij = E[∂_i ln p ∂_j ln p]` and skewness tensor
//! `T_ijk = -½ E[∂_i ln p ∂_j ln p ∂_k ln p]` this crate computes two ways:
//! closed forms in the log-partials of `u`, and direct quadrature of the
//! expectations. The [`verify`] module checks the kernel identities the
//! closed forms rest on.
//!
//! | module         | contents                                              |
//! |----------------|-------------------------------------------------------|
//! | [`kernels`]    | heat / Poisson kernels and partials to order 3        |
//! | [`sources`]    | source densities and the descriptor grammar           |
//! | [`quadrature`] | adaptive Gauss–Kronrod on finite and infinite ranges  |
//! | [`field`]      | `u`, its partials, `ln u` partials, PDE residuals     |
//! | [`geometry`]   | closed-form and direct metric / tensor, comparisons   |
//! | [`verify`]     | identity and consistency suites                       |
//! | [`cli`]        | the `randens` batch front-end                         |

// `!(a > b)` is used on purpose so NaN falls into the error branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod field;
pub mod geometry;
pub mod grid;
pub mod kernels;
pub mod quadrature;
pub mod sources;
pub mod verify;

pub use error::{Error, Result};
pub use field::{field_derivs, log_derivs, pde_residual, DerivBundle, LogDerivBundle, ParamPoint};
pub use geometry::{
    compare, fisher_closed, fisher_direct, pd_check, structure_closed, structure_direct, Component,
    ComparisonReport, FisherMatrix, FormulaMode, StructureTensor,
};
pub use grid::GridSpec;
pub use kernels::{FamilyTag, KernelPoint, MultiIndex};
pub use quadrature::{default_config, integrate, QuadResult, QuadratureConfig, Transform};
pub use sources::{effective_support, source_pdf, Interval, SourceSpec};
pub use verify::{IdentityId, IdentityOrder, ResidualReport};
