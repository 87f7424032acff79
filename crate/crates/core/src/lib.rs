//! Multifloor mapping and elevator-aware trajectory planning.
//!
//! The pipeline turns LiDAR scans, barometric pressure and odometry into a
//! single optimised multifloor map, voxelises it into a traversable set of
//! corridor, stair and elevator voxels, and plans time-optimal routes over
//! that set with an A* search whose cost accounts for elevator waiting time.

pub mod baro;
pub mod config;
pub mod error;
pub mod graph;
pub mod loopdet;
pub mod mapping;
pub mod plan;
pub mod scan;
pub mod scanproc;
pub mod synth;
pub mod voxel;

pub use error::{Error, Result};
