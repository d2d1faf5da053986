//! Microscopic simulation of a single-lane freeway merge with an on-ramp and
//! acceleration lane, run either uncontrolled or under coordinative merging
//! control (a facilitating mainline vehicle opens a gap that a released
//! ramp platoon fills).

pub mod arrivals;
pub mod car_following;
pub mod controller;
pub mod engine;
pub mod error;
pub mod geometry;
pub mod metrics;
pub mod vehicle;

pub use arrivals::{generate_arrivals, ArrivalSchedule};
pub use car_following::{Driver, Leader, Target};
pub use controller::DecelerationAnchor;
pub use engine::{run, run_with_arrivals, Mode, RunOutput, Scenario, SimConfig};
pub use error::SimError;
pub use geometry::RoadGeometry;
pub use metrics::{
    average_contours, ClassStats, CycleRecord, Metrics, SpeedContour, TrajectoryLog,
    TrajectoryRow, CONTOUR_HEADER, TRAJECTORY_HEADER,
};
pub use vehicle::{Origin, Role};
