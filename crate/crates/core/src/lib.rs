//! Plane-aware TSDF reconstruction: depth fusion into a hashed voxel grid,
//! local plane fitting on the SDF, global plane merging, plane-based
//! de-noising / hole filling, semantic labels and object segmentation, plus a
//! synthetic scene harness and evaluation metrics.

// `!(x > 0.0)` style guards are meant to reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::type_complexity)]

pub mod config;
pub mod detect;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod merge;
pub mod pipeline;
pub mod refine;
pub mod io;
pub mod sdf;
pub mod segment;
pub mod synth;

pub use error::{Error, Result};
