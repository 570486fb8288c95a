//! Matrix-free spectral-element Poisson operator.
//!
//! This crate holds the algorithmic core: Gauss-Lobatto-Legendre bases, the
//! box mesh and its geometric factors, the element-local tensor-product
//! operator in three storage variants, direct stiffness summation, the
//! unpreconditioned conjugate gradient solve and the analytic cost model.
//!
//! It is `no_std` (with `alloc`) and single threaded. Every kernel is exposed
//! at element-range granularity so that a host crate can drive it from a
//! thread pool; see `sem-bench` for the rayon driver, the bandwidth probe and
//! the command-line harness.
#![cfg_attr(not(test), no_std)]
// Index loops mirror the tensor notation; negated comparisons reject NaN too.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod assembly;
pub mod ax;
pub mod basis;
pub mod cg;
pub mod counters;
mod error;
pub mod field;
pub mod geom;
pub mod mesh;
pub mod perf_model;
pub mod rng;

pub use assembly::{apply_global, dssum, mask, GlobalOperator, Topology};
pub use ax::{apply_ax, flops_per_apply, AxWorkspace, KernelVariant};
pub use basis::{build_basis, PolynomialBasis};
pub use cg::{cg_solve, weighted_dot, CgConfig, CgResult, LinearOperator, SerialOps, VectorOps};
pub use counters::{TrafficCounters, TrafficSnapshot};
pub use error::{Error, Result};
pub use field::ElementField;
pub use geom::{build_geom, GeomFactors};
pub use mesh::{build_mesh, BoxMesh};
pub use perf_model::{CostModel, RooflineResult};
