//! Numerical toolkit for the purity / reference-Gaussian-purity / Gaussian-overlap
//! bound of single-mode bosonic states.
//!
//! States live in a truncated Fock basis ([`FockDensityMatrix`]). Their position
//! in the `{μ, μ_G, T}` space comes from [`metrics::summarize`]. The bound
//! itself is assembled from a minimum-purity sheet ([`region1`]) and a
//! maximum-purity sheet built from low-rank families ([`region2`]). Brute-force
//! cross-checks live in [`oracle`].

// `!(x > a)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

/// Library version, echoed into CLI manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod bound;
mod dd;
pub mod error;
pub mod fock;
pub mod metrics;
pub mod oracle;
pub mod region1;
pub mod region2;
pub mod roots;
pub mod wigner;

pub use bound::{BoundPoint, Family, Region};
pub use error::{NgbError, Result};
pub use fock::{Covariance, FockDensityMatrix, Moments, StateJson};
pub use metrics::{summarize, OverlapMethod, StateSummary};
pub use oracle::{OracleReport, Scenario};
pub use region2::{BoundSurface, ExtremalStateDescriptor, SurfaceSpec};
pub use wigner::{min_wigner, GridSpec, WignerEvaluator, WignerGrid, WignerMin};
