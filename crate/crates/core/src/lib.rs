//! Contact-guided dexterous grasp synthesis and geometry-based expert
//! selection.

pub mod error;
pub mod fixtures;
pub mod cluster_gate;
pub mod contact;
pub mod dataset;
pub mod geometry;
pub mod hand;
pub mod refine;
pub mod pipeline;
pub mod retarget;
pub mod reward;

pub use error::{Error, Result};
