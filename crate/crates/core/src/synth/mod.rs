//! Synthetic multifloor buildings and sensor sessions.
//!
//! Buildings are corridors, a switchback stairwell and elevator shafts built
//! from axis-aligned boxes on a voxel-aligned grid. Sessions walk a route
//! through them and record ray-cast scans, barometric pressure, noisy
//! odometry and ground truth, deterministically per seed.

mod building;
mod geometry;
mod io;
mod session;
mod spec;

pub use building::{generate_building, Building, Surface, SurfaceKind};
pub use geometry::{raycast, Aabb};
pub use io::{read_ground_truth_csv, read_manifest, read_odometry_csv, read_session, write_session};
pub use session::{
    generate_session, generate_session_in, sample_route, Manifest, OdometryEdge, Session, CAB_HEIGHT, POSE_PERIOD,
    POSE_SPACING, SENSOR_HEIGHT,
};
pub use spec::{
    parse_session_spec, read_session_spec, BuildingSpec, ElevatorSpec, NoiseSpec, Rect, SessionSpec, StairSpec, SLAB,
};
