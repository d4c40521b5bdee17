pub mod env;
pub mod geometry;
pub mod grid;
pub mod harness;
pub mod metrics;
pub mod physics;
pub mod planners;
