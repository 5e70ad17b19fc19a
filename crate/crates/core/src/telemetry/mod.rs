//! Logged drives: gap filling, GPS/IMU fusion and scoring with the planner's
//! metrics.

mod fusion;
mod log;
mod score;
pub mod synth;

pub use fusion::{fuse, AxisKalman, Cov2, FusedSample, FusedTrajectory, FusionParams};
pub use log::{interpolate_gaps, GapInterval, GpsFix, ImuSample, TelemetryLog};
pub use score::{score_drive, vehicle_frame_segments, HEADING_FROM_YAW_BELOW};
