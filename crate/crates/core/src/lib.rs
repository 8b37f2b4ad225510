//! Nondecreasing (ND) rank toolchain for matrices and tensors indexed by
//! products of finite posets.
//!
//! The crate is organised bottom-up:
//!
//! - [`poset`]: finite posets stored through their Hasse diagram, with the
//!   combinatorics the cone geometry needs (connected upsets, antichains,
//!   colliders, products, linear extensions).
//! - [`tensor`]: dense row-major tensors, Möbius transforms, Kronecker maps
//!   and mode differencing.
//! - [`cone`]: order cones and the cone of finite ND rank tensors, in both
//!   generator and halfspace form, with membership certificates.
//! - [`isotonic`]: exact Euclidean projection onto an order cone.
//! - [`factor`]: ND-HALS, closed-form rank-one solvers, the exact rank-two
//!   matrix path, rank bounds and tri-factorization checks.
//! - [`io`], [`fixtures`], [`cli`]: file formats, embedded datasets and the
//!   `ndrank` command line front end.

pub mod cli;
pub mod cone;
pub mod error;
pub mod factor;
pub mod fixtures;
pub mod io;
pub mod isotonic;
pub mod poset;
pub mod tensor;

pub use cone::{
    double_description, finite_rank_hrep, finite_rank_vrep, is_monotone, membership_finite_rank,
    order_cone_vrep, sample_finite_rank_probability, CertificateMethod, ConeHRep,
    MembershipCertificate, OrderConeVRep, Verdict,
};
pub use error::{NdError, Result};
pub use factor::{hals, FitConfig, FitReport, InitStrategy, NDFactorization};
pub use isotonic::{pava_chain, project_order_cone, ProjectionProblem};
pub use poset::Poset;
pub use tensor::{mobius_inverse_matrix, mobius_matrix, LinearMap, Tensor};
