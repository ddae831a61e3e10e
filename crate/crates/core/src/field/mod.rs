//! Grid representation of functions on domains in ℂ^n and the flat
//! torus: domains and masks, sampled fields, discrete complex Hessians,
//! averaging operators, radial closed forms, and the HESSFIELD format.

pub mod average;
pub mod domain;
pub mod grid;
pub mod hessian;
pub mod io;
pub mod radial;

pub use average::{ball_average, ball_second_moment, bump_second_moment, mollify, t_epsilon};
pub use domain::{DomainKind, GridDomain, PointClass, MAX_AXES};
pub use grid::GridField;
pub use hessian::{
    complex_hessian, hessian_at, hessian_density, msh_certificate, radius_sq_of,
    shifted_hessian_density, shifted_msh_certificate, HessianField, Normalization,
};
pub use io::{load_field, read_field, save_field, write_field};
pub use radial::{radial_hessian_eigenvalues, RadialProfile};
