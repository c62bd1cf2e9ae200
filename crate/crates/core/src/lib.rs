//! Bounded-depth nonnegative C2 interpolation of scattered planar data.
//!
//! The pipeline: a Calderon-Zygmund style quadtree adapted to the data
//! ([`czdecomp`]), per-square local extensions anchored at prescribed jets
//! ([`extension`]), and a partition of unity gluing them into one queryable
//! function ([`patch`]). Every derivative returned by a query depends only on
//! the data indices reported alongside it.

// NaN-rejecting `!(x >= 0.0)` tests and index loops over coupled arrays are deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::should_implement_trait)]

pub mod convexgeom;
pub mod czdecomp;
pub mod error;
pub mod extension;
pub mod jetcore;
pub mod linalg;
pub mod oned;
pub mod patch;
pub mod spatial;
pub mod tracenorm;

pub use convexgeom::DepthSet;
pub use czdecomp::{build_decomposition, CZDecomposition, DyadicSquare, Label};
pub use error::{Error, Result};
pub use extension::{LocalPiece, SecondJet};
pub use jetcore::{Config, ExtReal, Jet, Point2, WhitneyField};
pub use patch::{build_interpolant, depth_audit, AuditReport, EvalResult, Interpolant};
pub use tracenorm::{estimate_norm, oracle_norm, NormEstimate};
