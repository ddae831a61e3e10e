//! hesslab-core: a desk-scale numerical laboratory for the complex
//! m-Hessian equation σ_m(u_{z_j z̄_k}) = f.
//!
//! The crate is organized along the pipeline of the problem:
//!
//! * [`symmfunc`] — elementary symmetric polynomials and Γ_m cone algebra
//!   on eigenvalue vectors;
//! * [`hermlin`] — dense Hermitian linear algebra at dimensions 1..4:
//!   eigenvalues, metric-relative eigenvalues, polarized mixed σ_m, and
//!   the derivative (cominor) matrix of σ_m;
//! * [`field`] — uniform grids over domains in ℂ^n and the flat torus,
//!   discrete complex Hessians, ball averages and the T_ε operator,
//!   mollification, radial closed forms, integral norms, and the
//!   HESSFIELD file format;
//! * [`solver`] — damped-Newton Dirichlet solver for σ_m(u) = f and the
//!   periodic solver on the flat torus, plus the radial ODE oracle;
//! * [`potential`] — capacity computation and the experiment harness for
//!   comparison, stability, integrability, and interior-regularity
//!   measurements.

pub mod error;
pub mod field;
pub mod hermlin;
pub mod potential;
pub mod rng;
pub mod solver;
pub mod symmfunc;

pub use error::{Error, Result};
