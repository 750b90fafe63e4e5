//! Convex versus non-convex initialization-based meta-learning on a
//! one-dimensional shared-subspace regression family.
//!
//! The crate is organized bottom-up:
//!
//! - [`linalg`]: small dense symmetric linear algebra (Jacobi eigensolver,
//!   pseudo-inverse, Cholesky) and the structured [`SpikedIdentity`] matrix.
//! - [`rand`]: seedable, stream-splittable Gaussian and sign sampling.
//! - [`tasks`]: the two-task instance `{ρ_{+w*}, ρ_{-w*}}`, dataset sampling and losses.
//! - [`convex`]: within-task gradient methods for linear regression and the
//!   closed-form solutions of linear gradient dynamics.
//! - [`twolayer`]: population gradient flow for the two-layer linear network and
//!   second-layer ridge regression.
//! - [`meta`]: Reptile and RepLearn meta-learners.
//! - [`risk`]: Monte-Carlo excess risk, bias/variance split, exact convex lower
//!   bounds and sample-complexity search.
//! - [`experiments`]: named experiment runners used by the `metasep` binary.
//! - [`oracle`]: independent numerical oracles (explicit iteration, RK4 flows)
//!   used by the `verify` suites and the tests.

pub mod convex;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod meta;
pub mod ode;
pub mod oracle;
pub mod rand;
pub mod risk;
pub mod tasks;
pub mod twolayer;

pub use error::{Error, Result};
pub use linalg::{EigenDecomposition, Matrix, SpikedIdentity, SymMatrix, Vector};
pub use rand::{SeedSpec, Sign};
pub use tasks::{Dataset, MetaInstance, Task};
pub use twolayer::{FirstLayer, ScalarPair, TwoLayerParams};
