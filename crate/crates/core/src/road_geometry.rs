//! Lane centerline model: chained line segments and circular arcs.
//!
//! A [`RoadProfile`] is built from an initial pose plus an ordered list of
//! [`RoadPrimitive`]s; the start pose of every primitive after the first is
//! obtained by integrating the previous one, so the centerline is G1
//! continuous by construction. Stations are sampled along the centerline at a
//! nominal interval and carry a local frame (unit tangent, unit left normal)
//! used to place waypoints at a lateral offset.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Planar vector, `[x, y]`.
pub type Vec2 = [f64; 2];

/// Shape of a single centerline primitive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PrimitiveKind {
    Line,
    /// Signed curvature in 1/m; positive turns left.
    Arc { curvature: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoadPrimitive {
    pub kind: PrimitiveKind,
    pub length: f64,
    /// Free-form tag grouping primitives, e.g. `"roundabout-1"`.
    pub section: Option<String>,
}

impl RoadPrimitive {
    pub fn line(length: f64) -> Self {
        Self {
            kind: PrimitiveKind::Line,
            length,
            section: None,
        }
    }

    pub fn arc(length: f64, curvature: f64) -> Self {
        Self {
            kind: PrimitiveKind::Arc { curvature },
            length,
            section: None,
        }
    }

    pub fn with_section(mut self, section: impl Into<String>) -> Self {
        self.section = Some(section.into());
        self
    }

    pub fn curvature(&self) -> f64 {
        match self.kind {
            PrimitiveKind::Line => 0.0,
            PrimitiveKind::Arc { curvature } => curvature,
        }
    }
}

/// Position and heading on the centerline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub position: Vec2,
    pub heading: f64,
}

impl Pose {
    /// Pose reached after travelling `ds` along a primitive of curvature `k`.
    fn advance(&self, k: f64, ds: f64) -> Pose {
        let (s0, c0) = self.heading.sin_cos();
        if k == 0.0 {
            return Pose {
                position: [self.position[0] + ds * c0, self.position[1] + ds * s0],
                heading: self.heading,
            };
        }
        let heading = self.heading + k * ds;
        let (s1, c1) = heading.sin_cos();
        Pose {
            position: [
                self.position[0] + (s1 - s0) / k,
                self.position[1] - (c1 - c0) / k,
            ],
            heading,
        }
    }
}

/// Speed bounds over an arclength interval `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedZone {
    pub start: f64,
    pub end: f64,
    pub min: f64,
    pub max: f64,
}

/// Lane centerline with lateral and speed bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct RoadProfile {
    start: Pose,
    primitives: Vec<RoadPrimitive>,
    /// Start pose of each primitive.
    poses: Vec<Pose>,
    /// Arclength at the start of each primitive, plus the total at the end.
    offsets: Vec<f64>,
    pub lane_offset_min: f64,
    pub lane_offset_max: f64,
    pub speed_min: f64,
    pub speed_max: f64,
    pub zones: Vec<SpeedZone>,
    pub d_nom: f64,
    pub entry_speed: Option<f64>,
    pub exit_speed: Option<f64>,
}

/// A sample point on the centerline with its local frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Station {
    pub s: f64,
    pub center: Vec2,
    pub tangent: Vec2,
    pub normal: Vec2,
}

impl Station {
    fn from_pose(s: f64, pose: Pose) -> Self {
        let (sn, cs) = pose.heading.sin_cos();
        Station {
            s,
            center: pose.position,
            tangent: [cs, sn],
            normal: [-sn, cs],
        }
    }

    pub fn heading(&self) -> f64 {
        self.tangent[1].atan2(self.tangent[0])
    }
}

/// Waypoint location for a station displaced by `y` along its left normal.
pub fn station_to_global(station: &Station, y: f64) -> Vec2 {
    [
        station.center[0] + y * station.normal[0],
        station.center[1] + y * station.normal[1],
    ]
}

/// Builder-style parameters for [`RoadProfile::new`].
#[derive(Debug, Clone)]
pub struct RoadBounds {
    pub lane_offset_min: f64,
    pub lane_offset_max: f64,
    pub speed_min: f64,
    pub speed_max: f64,
    pub d_nom: f64,
}

impl Default for RoadBounds {
    fn default() -> Self {
        Self {
            lane_offset_min: -1.0,
            lane_offset_max: 1.0,
            speed_min: 2.0,
            speed_max: 30.0,
            d_nom: 5.0,
        }
    }
}

impl RoadProfile {
    pub fn new(start: Pose, primitives: Vec<RoadPrimitive>, bounds: RoadBounds) -> Result<Self> {
        if primitives.is_empty() {
            return Err(Error::NoPrimitives);
        }
        for (index, p) in primitives.iter().enumerate() {
            if !(p.length > 0.0) || !p.length.is_finite() {
                return Err(Error::InvalidPrimitive {
                    index,
                    reason: format!("length must be positive, got {}", p.length),
                });
            }
            if let PrimitiveKind::Arc { curvature } = p.kind {
                if curvature == 0.0 || !curvature.is_finite() {
                    return Err(Error::InvalidPrimitive {
                        index,
                        reason: format!("arc curvature must be nonzero, got {curvature}"),
                    });
                }
            }
        }
        if !(bounds.lane_offset_min < 0.0 && 0.0 < bounds.lane_offset_max) {
            return Err(Error::InvalidRoad(format!(
                "lane offsets must satisfy y_min < 0 < y_max, got [{}, {}]",
                bounds.lane_offset_min, bounds.lane_offset_max
            )));
        }
        if !(0.0 < bounds.speed_min && bounds.speed_min < bounds.speed_max) {
            return Err(Error::InvalidRoad(format!(
                "speed bounds must satisfy 0 < v_min < v_max, got [{}, {}]",
                bounds.speed_min, bounds.speed_max
            )));
        }
        if !(bounds.d_nom > 0.0) {
            return Err(Error::InvalidRoad(format!(
                "station interval must be positive, got {}",
                bounds.d_nom
            )));
        }
        let mut poses = Vec::with_capacity(primitives.len());
        let mut offsets = Vec::with_capacity(primitives.len() + 1);
        let mut pose = start;
        let mut s = 0.0;
        for p in &primitives {
            poses.push(pose);
            offsets.push(s);
            pose = pose.advance(p.curvature(), p.length);
            s += p.length;
        }
        offsets.push(s);
        Ok(Self {
            start,
            primitives,
            poses,
            offsets,
            lane_offset_min: bounds.lane_offset_min,
            lane_offset_max: bounds.lane_offset_max,
            speed_min: bounds.speed_min,
            speed_max: bounds.speed_max,
            zones: Vec::new(),
            d_nom: bounds.d_nom,
            entry_speed: None,
            exit_speed: None,
        })
    }

    pub fn with_zones(mut self, zones: Vec<SpeedZone>) -> Result<Self> {
        for (i, z) in zones.iter().enumerate() {
            if !(z.start < z.end) || !(0.0 < z.min && z.min < z.max) {
                return Err(Error::InvalidRoad(format!(
                    "speed zone {i}: need start < end and 0 < min < max, got {z:?}"
                )));
            }
        }
        self.zones = zones;
        Ok(self)
    }

    pub fn with_boundary_speeds(mut self, entry: Option<f64>, exit: Option<f64>) -> Self {
        self.entry_speed = entry;
        self.exit_speed = exit;
        self
    }

    pub fn primitives(&self) -> &[RoadPrimitive] {
        &self.primitives
    }

    pub fn start_pose(&self) -> Pose {
        self.start
    }

    pub fn total_length(&self) -> f64 {
        *self.offsets.last().expect("nonempty")
    }

    /// Pose at arclength `s`; outside `[0, L]` the route is extended straight.
    pub fn pose_at(&self, s: f64) -> Pose {
        let total = self.total_length();
        if s <= 0.0 {
            return self.start.advance(0.0, s);
        }
        if s >= total {
            let end = self.end_pose();
            return end.advance(0.0, s - total);
        }
        let idx = self.primitive_index(s);
        self.poses[idx].advance(self.primitives[idx].curvature(), s - self.offsets[idx])
    }

    /// Centerline curvature at `s`; zero on the straight extensions.
    pub fn curvature_at(&self, s: f64) -> f64 {
        if s < 0.0 || s >= self.total_length() {
            return 0.0;
        }
        self.primitives[self.primitive_index(s)].curvature()
    }

    // last primitive whose start offset is <= s
    fn primitive_index(&self, s: f64) -> usize {
        match self.offsets[..self.primitives.len()]
            .binary_search_by(|o| o.partial_cmp(&s).expect("finite"))
        {
            Ok(i) => i,
            Err(i) => i - 1,
        }
    }

    pub fn end_pose(&self) -> Pose {
        let last = self.primitives.len() - 1;
        self.poses[last].advance(self.primitives[last].curvature(), self.primitives[last].length)
    }

    /// Station at an arbitrary arclength, extrapolating beyond either end.
    pub fn station_at(&self, s: f64) -> Station {
        Station::from_pose(s, self.pose_at(s))
    }

    /// Speed bounds `(min, max)` in force at arclength `s`.
    pub fn speed_bounds(&self, s: f64) -> (f64, f64) {
        let s = s.clamp(0.0, self.total_length());
        let total = self.total_length();
        self.zones
            .iter()
            .find(|z| z.start <= s && (s < z.end || (z.end >= total && s >= z.end)))
            .map(|z| (z.min, z.max))
            .unwrap_or((self.speed_min, self.speed_max))
    }

    pub fn entry_speed(&self) -> f64 {
        self.entry_speed.unwrap_or_else(|| self.speed_bounds(0.0).1)
    }

    pub fn exit_speed(&self) -> f64 {
        self.exit_speed
            .unwrap_or_else(|| self.speed_bounds(self.total_length()).1)
    }

    /// Number of arcs turning left and right.
    pub fn turn_counts(&self) -> (usize, usize) {
        let left = self.primitives.iter().filter(|p| p.curvature() > 0.0).count();
        let right = self.primitives.iter().filter(|p| p.curvature() < 0.0).count();
        (left, right)
    }

    /// Number of contiguous runs of primitives tagged with a section name
    /// starting with `prefix`.
    pub fn section_count(&self, prefix: &str) -> usize {
        let mut count = 0;
        let mut prev: Option<&str> = None;
        for p in &self.primitives {
            let cur = p.section.as_deref().filter(|s| s.starts_with(prefix));
            if cur.is_some() && cur != prev {
                count += 1;
            }
            prev = cur;
        }
        count
    }

    /// Copy of this road with every curvature negated (mirror image about
    /// the initial heading).
    pub fn mirrored(&self) -> Self {
        let start = self.start;
        let primitives = self
            .primitives
            .iter()
            .map(|p| RoadPrimitive {
                kind: match p.kind {
                    PrimitiveKind::Line => PrimitiveKind::Line,
                    PrimitiveKind::Arc { curvature } => PrimitiveKind::Arc {
                        curvature: -curvature,
                    },
                },
                ..p.clone()
            })
            .collect();
        let mut out = RoadProfile::new(start, primitives, self.bounds()).expect("mirror of valid road");
        out.zones = self.zones.clone();
        out.entry_speed = self.entry_speed;
        out.exit_speed = self.exit_speed;
        out
    }

    pub fn bounds(&self) -> RoadBounds {
        RoadBounds {
            lane_offset_min: self.lane_offset_min,
            lane_offset_max: self.lane_offset_max,
            speed_min: self.speed_min,
            speed_max: self.speed_max,
            d_nom: self.d_nom,
        }
    }
}

/// Stations at `0, d_nom, 2 d_nom, ...` plus exactly one at the route end.
pub fn build_stations(road: &RoadProfile) -> Result<Vec<Station>> {
    build_stations_with_interval(road, road.d_nom)
}

pub fn build_stations_with_interval(road: &RoadProfile, d_nom: f64) -> Result<Vec<Station>> {
    if road.primitives.is_empty() {
        return Err(Error::NoPrimitives);
    }
    let total = road.total_length();
    let tol = 1e-9 * total.max(1.0);
    let mut out = Vec::new();
    let mut k = 0usize;
    loop {
        let s = k as f64 * d_nom;
        if s >= total - tol {
            break;
        }
        out.push(road.station_at(s));
        k += 1;
    }
    out.push(road.station_at(total));
    Ok(out)
}

// ---------------------------------------------------------------------------
// File format

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
struct RoadFile {
    start_x: f64,
    start_y: f64,
    start_heading: f64,
    y_min: f64,
    y_max: f64,
    d_nom: f64,
    speed_min: f64,
    speed_max: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    entry_speed: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    exit_speed: Option<f64>,
    #[serde(default, rename = "speed_zone", skip_serializing_if = "Vec::is_empty")]
    speed_zones: Vec<SpeedZone>,
    #[serde(rename = "primitive")]
    primitives: Vec<PrimitiveRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
struct PrimitiveRecord {
    kind: RecordKind,
    length: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    curvature: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    section: Option<String>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "lowercase")]
enum RecordKind {
    Line,
    Arc,
}

/// Parses road text; `origin` names the source in error messages.
pub fn parse_road(text: &str, origin: &Path) -> Result<RoadProfile> {
    let file: RoadFile = toml::from_str(text).map_err(|e| Error::Parse {
        path: origin.to_path_buf(),
        message: e.to_string(),
    })?;
    let mut primitives = Vec::with_capacity(file.primitives.len());
    for (index, rec) in file.primitives.iter().enumerate() {
        let kind = match (rec.kind, rec.curvature) {
            (RecordKind::Line, None) => PrimitiveKind::Line,
            (RecordKind::Line, Some(_)) => {
                return Err(Error::InvalidPrimitive {
                    index,
                    reason: "line primitive must not carry a curvature".into(),
                })
            }
            (RecordKind::Arc, Some(curvature)) => PrimitiveKind::Arc { curvature },
            (RecordKind::Arc, None) => {
                return Err(Error::InvalidPrimitive {
                    index,
                    reason: "arc primitive is missing field `curvature`".into(),
                })
            }
        };
        primitives.push(RoadPrimitive {
            kind,
            length: rec.length,
            section: rec.section.clone(),
        });
    }
    let start = Pose {
        position: [file.start_x, file.start_y],
        heading: file.start_heading,
    };
    let bounds = RoadBounds {
        lane_offset_min: file.y_min,
        lane_offset_max: file.y_max,
        speed_min: file.speed_min,
        speed_max: file.speed_max,
        d_nom: file.d_nom,
    };
    Ok(RoadProfile::new(start, primitives, bounds)?
        .with_zones(file.speed_zones)?
        .with_boundary_speeds(file.entry_speed, file.exit_speed))
}

pub fn load_road(path: impl AsRef<Path>) -> Result<RoadProfile> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_road(&text, path)
}

pub fn road_to_string(road: &RoadProfile) -> String {
    let file = RoadFile {
        start_x: road.start.position[0],
        start_y: road.start.position[1],
        start_heading: road.start.heading,
        y_min: road.lane_offset_min,
        y_max: road.lane_offset_max,
        d_nom: road.d_nom,
        speed_min: road.speed_min,
        speed_max: road.speed_max,
        entry_speed: road.entry_speed,
        exit_speed: road.exit_speed,
        speed_zones: road.zones.clone(),
        primitives: road
            .primitives
            .iter()
            .map(|p| PrimitiveRecord {
                kind: match p.kind {
                    PrimitiveKind::Line => RecordKind::Line,
                    PrimitiveKind::Arc { .. } => RecordKind::Arc,
                },
                length: p.length,
                curvature: match p.kind {
                    PrimitiveKind::Line => None,
                    PrimitiveKind::Arc { curvature } => Some(curvature),
                },
                section: p.section.clone(),
            })
            .collect(),
    };
    toml::to_string(&file).expect("road file serializes")
}

pub fn save_road(road: &RoadProfile, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, road_to_string(road)).map_err(|e| Error::io(path, e))
}
