//! Enumeration and counting of integral metric graphs on possibly
//! non-orientable surfaces, tracked by a refinement parameter `b`.

pub mod bpoly;
pub mod cache;
pub mod enumerate;
pub mod error;
pub mod euler;
pub mod lattice;
pub(crate) mod lp;
pub mod mpoly;
pub mod mon;
pub mod quasipoly;
pub mod rational;
pub mod recursion;
pub mod surface_graph;
pub mod verify;
pub mod volume;
pub mod weber_series;

pub use bpoly::BPoly;
pub use error::{Error, Result};
pub use rational::Q;
pub use surface_graph::MoebiusGraph;
