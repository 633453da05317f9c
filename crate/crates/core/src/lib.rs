//! Attractors of piecewise-linear maps of the line and the plane, measured
//! and compared in the Hausdorff metric.

pub mod analytic;
pub mod attractor;
pub mod continuation;
pub mod geometry;
pub mod maps;
pub mod symbolic;
