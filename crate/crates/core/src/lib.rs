//! Comfort-oriented path and speed planning on a lane-following route.
//!
//! A route is a chain of lines and circular arcs ([`road_geometry`]). A plan
//! assigns every station a lateral offset and a speed
//! ([`trajectory_kinematics`]); its cost trades passenger comfort, measured
//! either as raw acceleration energy or as band-pass weighted energy
//! ([`frequency_weighting`]), against travel time ([`objective`]). The
//! [`planner`] optimizes whole routes at once or in a receding horizon,
//! [`telemetry`] scores recorded drives on the same scale and [`harness`]
//! runs experiment grids.

pub mod autodiff;
pub mod error;
pub mod frequency_weighting;
pub mod harness;
pub mod objective;
pub mod planner;
pub mod road_geometry;
pub mod telemetry;
pub mod trajectory_kinematics;

pub use error::{Error, Result};

#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/roads.md")]
    mod roads {}
    #[doc = include_str!("../../../book/src/kinematics.md")]
    mod kinematics {}
    #[doc = include_str!("../../../book/src/frequency_weighting.md")]
    mod frequency_weighting {}
    #[doc = include_str!("../../../book/src/objectives.md")]
    mod objectives {}
    #[doc = include_str!("../../../book/src/planning.md")]
    mod planning {}
    #[doc = include_str!("../../../book/src/telemetry.md")]
    mod telemetry {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
