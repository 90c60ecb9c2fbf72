//! Numerical toolkit for nonlinear eigenvalue problems of Hammerstein type,
//!
//! ```text
//! u(t) = λ ∫₀¹ k(t,s) f(s, u(s), H[u]) ds,
//! ```
//!
//! where `k` is a nonnegative kernel (typically the Green's function of a
//! two-point boundary value problem), `f` may change sign, and `H` is a
//! scalar functional of the whole unknown.
//!
//! The crate is organised bottom-up:
//!
//! - [`kernels`]: the mixed and Dirichlet Green's functions plus user kernels.
//! - [`quadrature`]: adaptive Gauss–Kronrod integration with breakpoints.
//! - [`bounds`]: problem definitions and the integrated bound functions
//!   `F_low`/`F_up` built from pointwise envelopes of the nonlinearity.
//! - [`conditions`]: sign checks on the bound functions, the extremizer,
//!   the eigenvalue localization half-width and threshold scans in `ρ`.
//! - [`oracles`]: closed forms for the two built-in worked problems.
//! - [`eigensolver`]: Nyström discretization and the eigenpair solver on the
//!   sphere `‖u‖∞ = ρ`.

pub mod bounds;
pub mod conditions;
pub mod eigensolver;
mod error;
pub mod kernels;
pub mod optimize;
pub mod oracles;
pub mod quadrature;

pub use bounds::{BoundPair, Functional, Nonlinearity, ProblemSpec, SignChangingWeight};
pub use conditions::{check_conditions, localization, ConditionReport, Which};
pub use eigensolver::{DiscreteOperator, EigenPair, Sign, SolveOptions};
pub use error::{Error, NoConvergence, Result};
pub use kernels::Kernel;
pub use oracles::ExampleId;
pub use quadrature::QuadratureConfig;
