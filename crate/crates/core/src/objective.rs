//! Scalar costs trading comfort against travel time.
//!
//! * `J_MS = D_MS + W T`, where `D_MS` is the band-pass weighted acceleration
//!   energy including the zero-input tail (the squared motion sickness dose
//!   value).
//! * `J_MA = D_MA + W T`, where `D_MA` is the unweighted acceleration energy.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::autodiff::Real;
use crate::error::{Error, Result};
use crate::frequency_weighting::{weighted_energy, AxisFilters, CarryState};
use crate::road_geometry::Vec2;
use crate::trajectory_kinematics::{evaluate_kinematics, segment_terms, MotionPlan, SegmentTerms};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectiveKind {
    /// Frequency-weighted (motion sickness) energy.
    Ms,
    /// Raw acceleration energy.
    Ma,
}

impl fmt::Display for ObjectiveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ObjectiveKind::Ms => "ms",
            ObjectiveKind::Ma => "ma",
        })
    }
}

impl FromStr for ObjectiveKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ms" => Ok(ObjectiveKind::Ms),
            "ma" => Ok(ObjectiveKind::Ma),
            other => Err(Error::InvalidConfig(format!("unknown objective `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveSpec {
    pub kind: ObjectiveKind,
    /// Travel-time weight, >= 0.
    pub w: f64,
    pub filters: AxisFilters,
    /// Filter states at the first waypoint (receding horizon only).
    pub carry_in: CarryState,
}

impl ObjectiveSpec {
    pub fn new(kind: ObjectiveKind, w: f64) -> Self {
        Self {
            kind,
            w,
            filters: AxisFilters::default(),
            carry_in: CarryState::default(),
        }
    }

    pub fn with_filters(mut self, filters: AxisFilters) -> Self {
        self.filters = filters;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.w >= 0.0) || !self.w.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "time weight must be finite and >= 0, got {}",
                self.w
            )));
        }
        Ok(())
    }
}

/// Energy accumulated over the segments, generic over the scalar type.
pub(crate) fn comfort_energy<T: Real>(
    terms: &[SegmentTerms<T>],
    kind: ObjectiveKind,
    filters: &AxisFilters,
    carry: CarryState,
) -> T {
    let mut energy = T::cst(0.0);
    match kind {
        ObjectiveKind::Ma => {
            for t in terms {
                energy = energy + (t.a_x * t.a_x + t.a_y * t.a_y) * t.dt;
            }
        }
        ObjectiveKind::Ms => {
            let fl = &filters.longitudinal;
            let ft = &filters.lateral;
            let mut xl = carry.longitudinal.map(T::cst);
            let mut xt = carry.lateral.map(T::cst);
            for t in terms {
                xl = fl.propagate(xl, t.a_x, t.dt);
                xt = ft.propagate(xt, t.a_y, t.dt);
                let ol = fl.output(xl);
                let ot = ft.output(xt);
                energy = energy + (ol * ol + ot * ot) * t.dt;
            }
            energy = energy + fl.tail_quadratic(xl) + ft.tail_quadratic(xt);
        }
    }
    energy
}

/// Full cost `D + W T` of a waypoint sequence, generic over the scalar type.
pub(crate) fn waypoint_cost<T: Real>(
    waypoints: &[[T; 2]],
    v: &[T],
    initial_heading: Vec2,
    spec: &ObjectiveSpec,
    scratch: &mut Vec<SegmentTerms<T>>,
) -> T {
    segment_terms(waypoints, v, initial_heading, scratch);
    let mut time = T::cst(0.0);
    for t in scratch.iter() {
        time = time + t.dt;
    }
    comfort_energy(scratch, spec.kind, &spec.filters, spec.carry_in) + time * spec.w
}

fn plan_cost(plan: &MotionPlan, spec: &ObjectiveSpec) -> Result<f64> {
    spec.validate()?;
    evaluate_kinematics(plan)?;
    let wp = plan.waypoints();
    let mut scratch = Vec::with_capacity(wp.len());
    Ok(waypoint_cost(&wp, &plan.v, plan.initial_heading, spec, &mut scratch))
}

/// `D_MS + W T` with the tail term included.
pub fn cost_ms(plan: &MotionPlan, spec: &ObjectiveSpec) -> Result<f64> {
    plan_cost(
        plan,
        &ObjectiveSpec {
            kind: ObjectiveKind::Ms,
            ..spec.clone()
        },
    )
}

/// `D_MA + W T`.
pub fn cost_ma(plan: &MotionPlan, spec: &ObjectiveSpec) -> Result<f64> {
    plan_cost(
        plan,
        &ObjectiveSpec {
            kind: ObjectiveKind::Ma,
            ..spec.clone()
        },
    )
}

/// Cost for `spec.kind`.
pub fn cost(plan: &MotionPlan, spec: &ObjectiveSpec) -> Result<f64> {
    plan_cost(plan, spec)
}

/// Comfort and efficiency summary of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Metrics {
    pub travel_time: f64,
    pub d_ms: f64,
    pub d_ma: f64,
    pub squared_msdv: f64,
    pub peak_ax: f64,
    pub peak_ay: f64,
    pub peak_combined: f64,
}

/// Metrics of a held-input `(a_x, a_y, dt)` sequence starting from rest
/// filter states. Shared by planner output and logged drives.
pub fn metrics_from_segments(filters: &AxisFilters, seq: &[(f64, f64, f64)]) -> Result<Metrics> {
    let weighted = weighted_energy(filters, seq, None)?;
    let mut m = Metrics {
        d_ms: weighted.total(),
        squared_msdv: weighted.total(),
        ..Default::default()
    };
    for &(ax, ay, dt) in seq {
        m.travel_time += dt;
        m.d_ma += (ax * ax + ay * ay) * dt;
        m.peak_ax = m.peak_ax.max(ax.abs());
        m.peak_ay = m.peak_ay.max(ay.abs());
        m.peak_combined = m.peak_combined.max((ax * ax + ay * ay).sqrt());
    }
    Ok(m)
}

pub fn metrics(plan: &MotionPlan, filters: &AxisFilters) -> Result<Metrics> {
    let seq: Vec<_> = evaluate_kinematics(plan)?
        .iter()
        .map(|s| (s.a_x, s.a_y, s.dt))
        .collect();
    metrics_from_segments(filters, &seq)
}
