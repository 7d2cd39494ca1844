//! N-dimensional exterior calculus on masked cubical grids.
//!
//! The crate builds the discrete de Rham complex of a cubical domain
//! (`d`, its adjoint `delta`, the vector-analytic `grad`/`curl`/`div` and
//! their row-wise tensor versions), computes Hodge-Helmholtz
//! decompositions, Poincare and Maxwell constants and harmonic Dirichlet
//! forms, and checks Korn-type inequalities for tensor fields with
//! vanishing tangential trace:
//!
//! ```text
//! |T| <= c_hat (|sym T|^2 + |Curl T|^2)^(1/2),   c_hat = max{2, sqrt(5) c_m}
//! ```

pub mod analysis;
pub mod cli;
pub mod domain;
pub mod error;
pub mod exterior;
pub mod field;
pub mod ops;
pub mod snapshot;
pub mod solvers;
pub mod summation;

pub use domain::{make_domain, unit_domain, BcMode, DomainKind, DomainMask, Geometry, VertexClass};
pub use error::{Error, Result};
pub use field::{random_field, CurlField, FormField, TensorField};
