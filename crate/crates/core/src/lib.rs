//! Optimal transport and martingale optimal transport between finitely
//! supported measures on ℝ^d, plus the experiments showing that martingale
//! transport is unstable in the plane.
//!
//! Every value is obtained from one small dense simplex solver ([`lp`]); the
//! measures and couplings of the planar counterexample live in
//! [`constructions`], and [`experiments`] turns them into checked reports.

pub mod constructions;
pub mod error;
pub mod experiments;
pub mod io;
pub mod lp;
pub mod measure;
pub mod transport;

pub use error::{Error, Result};
pub use measure::{AffineMap, AtomicKernel, DiscreteMeasure, Point};
pub use transport::{Coupling, Norm};
