//! Color-coding treelet counting primitives.
//!
//! This crate holds everything that is pure computation: graph storage and
//! partitioning, tree templates and their sub-template plans, color-subset
//! indexing, count-table kernels, the ring exchange schedule and packet codec,
//! the analytic cost model, the brute-force oracle and the median-of-means
//! estimator. It is `no_std` and only needs `alloc`; transports, threads and
//! file formats live in the `treelet` crate.

#![no_std]
#![warn(rust_2018_idioms, unused_qualifications)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod codec;
pub mod coloring;
pub mod cost;
mod error;
pub mod estimator;
pub mod graph;
pub mod hash;
pub mod kernel;
pub mod oracle;
pub mod partition;
pub mod plan;
pub mod rmat;
pub mod schedule;
pub mod subset;
pub mod table;
pub mod tasks;
pub mod template;

pub use coloring::Coloring;
pub use cost::{CostModel, HockneyParams, IndexSet};
pub use error::{Error, Result};
pub use estimator::{Estimate, EstimatorConfig};
pub use graph::{Graph, VertexId};
pub use partition::{LocalView, Partition};
pub use plan::{SubTemplate, TemplatePlan};
pub use schedule::{ExchangePlan, Mode, ModePolicy, RingSchedule};
pub use table::CountTable;
pub use template::Template;
