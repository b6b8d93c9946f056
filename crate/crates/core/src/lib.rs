//! Design and evaluation of uniform sparse MIMO antenna arrays.
//!
//! Layouts place TX and RX elements on integer nodes of a reference grid. The coordinate
//! sums of all TX/RX pairs form the virtual array, whose sine-space pattern is scored by
//! peak-to-side-lobe ratio, beamwidth and grating-lobe metrics. [`optimizer`] searches
//! element positions under size, forbidden-zone and enforced-position constraints.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the aliases at the crate
//! root fix the common `f64` instantiation.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod beamforming;
mod error;
pub mod geometry;
pub mod metrics;
pub mod optimizer;
mod scalar;

pub use error::{Error, Result};
pub use scalar::{ratio_db, serde_float, Scalar};

pub type GridSpec = geometry::GridSpec<f64>;
pub type ElementSize = geometry::ElementSize<f64>;
pub type ForbiddenZone = geometry::ForbiddenZone<f64>;
pub type ArrayLayout = geometry::ArrayLayout<f64>;
pub type VirtualArray = geometry::VirtualArray<f64>;
pub type UvGrid = beamforming::UvGrid<f64>;
pub type Pattern = beamforming::Pattern<f64>;
pub type Snapshot = beamforming::Snapshot<f64>;
pub type Target = beamforming::Target<f64>;
pub type MetricsReport = metrics::MetricsReport<f64>;
pub type DesignSpec = optimizer::DesignSpec<f64>;
pub type OptimizerTrace = optimizer::OptimizerTrace<f64>;
pub type Design = optimizer::Design<f64>;

/// Single-precision instantiations.
pub mod f32 {
    pub type GridSpec = crate::geometry::GridSpec<f32>;
    pub type ArrayLayout = crate::geometry::ArrayLayout<f32>;
    pub type VirtualArray = crate::geometry::VirtualArray<f32>;
    pub type UvGrid = crate::beamforming::UvGrid<f32>;
    pub type Pattern = crate::beamforming::Pattern<f32>;
}
