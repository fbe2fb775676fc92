//! Multi-view consensus placement of 3D landmarks on triangle meshes.
//!
//! A mesh is rendered from many orthographic views, 2D landmark candidates
//! are detected per view, each detection is back-projected to a 3D ray, and
//! the rays of each landmark are fused by least squares inside RANSAC. The
//! fused point is finally snapped to the closest point on the surface.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod mesh;
pub mod curvature;
pub mod linalg;
pub mod camera;
pub mod render;
pub mod export;
pub mod detector;
pub mod consensus;
pub mod pipeline;
mod rng;
