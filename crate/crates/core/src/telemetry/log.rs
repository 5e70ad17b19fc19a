//! Logged drive data and its CSV form.
//!
//! One file holds both streams. Rows carry `t, source, X, Y, ax_body,
//! ay_body, yaw`; GPS rows fill `X, Y` and IMU rows fill the other three.
//! Intervals with invalid GPS are declared in comment lines ahead of the
//! header:
//!
//! ```text
//! # gap,12.0,27.0
//! t,source,X,Y,ax_body,ay_body,yaw
//! 0,gps,0.0,0.0,,,
//! 0,imu,,,0.1,0.0,0.0
//! ```

use std::f64::consts::PI;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpsFix {
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

/// Body-frame accelerations (forward, left) and yaw, radians counterclockwise
/// from the global X axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImuSample {
    pub t: f64,
    pub ax_body: f64,
    pub ay_body: f64,
    pub yaw: f64,
}

/// Interval `[start, end]` during which GPS fixes are invalid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapInterval {
    pub start: f64,
    pub end: f64,
}

impl GapInterval {
    fn contains(&self, t: f64) -> bool {
        t > self.start && t < self.end
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TelemetryLog {
    pub gps: Vec<GpsFix>,
    pub imu: Vec<ImuSample>,
    pub gaps: Vec<GapInterval>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    t: f64,
    source: String,
    #[serde(rename = "X")]
    x: Option<f64>,
    #[serde(rename = "Y")]
    y: Option<f64>,
    ax_body: Option<f64>,
    ay_body: Option<f64>,
    yaw: Option<f64>,
}

fn increasing<I: Iterator<Item = f64>>(name: &str, times: I) -> Result<()> {
    let mut last = f64::NEG_INFINITY;
    for (i, t) in times.enumerate() {
        if !t.is_finite() || t <= last {
            return Err(Error::Telemetry(format!(
                "{name} timestamps not strictly increasing at sample {i} (t = {t})"
            )));
        }
        last = t;
    }
    Ok(())
}

impl TelemetryLog {
    /// Checks timestamps, yaw continuity and gap intervals.
    pub fn validate(&self) -> Result<()> {
        increasing("gps", self.gps.iter().map(|f| f.t))?;
        increasing("imu", self.imu.iter().map(|s| s.t))?;
        for (i, w) in self.imu.windows(2).enumerate() {
            if (w[1].yaw - w[0].yaw).abs() > PI {
                return Err(Error::Telemetry(format!(
                    "yaw jumps by more than pi between imu samples {i} and {}",
                    i + 1
                )));
            }
        }
        for g in &self.gaps {
            if !(g.end > g.start) {
                return Err(Error::Telemetry(format!(
                    "gap [{}, {}] is empty or reversed",
                    g.start, g.end
                )));
            }
        }
        Ok(())
    }

    /// First and last instant covered by both streams.
    pub fn overlap(&self) -> Option<(f64, f64)> {
        let start = self.gps.first()?.t.max(self.imu.first()?.t);
        let end = self.gps.last()?.t.min(self.imu.last()?.t);
        (end > start).then_some((start, end))
    }

    pub fn read<R: Read>(reader: R) -> Result<Self> {
        let mut header_lines = Vec::new();
        let mut body = String::new();
        for line in BufReader::new(reader).lines() {
            let line = line.map_err(|e| Error::io("telemetry", e))?;
            if let Some(rest) = line.trim_start().strip_prefix('#') {
                header_lines.push(rest.trim().to_string());
            } else {
                body.push_str(&line);
                body.push('\n');
            }
        }
        let mut log = TelemetryLog::default();
        for meta in header_lines {
            let fields: Vec<&str> = meta.split(',').map(str::trim).collect();
            if fields.first() != Some(&"gap") {
                continue;
            }
            let parse = |i: usize| -> Result<f64> {
                fields
                    .get(i)
                    .and_then(|f| f.parse().ok())
                    .ok_or_else(|| Error::Telemetry(format!("malformed gap line `# {meta}`")))
            };
            log.gaps.push(GapInterval {
                start: parse(1)?,
                end: parse(2)?,
            });
        }
        let mut csv = csv::Reader::from_reader(body.as_bytes());
        for (i, row) in csv.deserialize::<Row>().enumerate() {
            let row = row?;
            let missing = |name: &str| Error::Telemetry(format!("row {}: {name} missing", i + 1));
            match row.source.as_str() {
                "gps" => log.gps.push(GpsFix {
                    t: row.t,
                    x: row.x.ok_or_else(|| missing("X"))?,
                    y: row.y.ok_or_else(|| missing("Y"))?,
                }),
                "imu" => log.imu.push(ImuSample {
                    t: row.t,
                    ax_body: row.ax_body.ok_or_else(|| missing("ax_body"))?,
                    ay_body: row.ay_body.ok_or_else(|| missing("ay_body"))?,
                    yaw: row.yaw.ok_or_else(|| missing("yaw"))?,
                }),
                other => {
                    return Err(Error::Telemetry(format!(
                        "row {}: unknown source `{other}`",
                        i + 1
                    )))
                }
            }
        }
        log.validate()?;
        Ok(log)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read(file)
    }

    /// Writes the log, merging both streams by time (GPS first on ties).
    pub fn write<W: Write>(&self, mut out: W, comments: &[&str]) -> Result<()> {
        let io = |e| Error::io("telemetry", e);
        for c in comments {
            writeln!(out, "# {c}").map_err(io)?;
        }
        for g in &self.gaps {
            writeln!(out, "# gap,{},{}", g.start, g.end).map_err(io)?;
        }
        let mut w = csv::Writer::from_writer(out);
        let (mut i, mut j) = (0, 0);
        while i < self.gps.len() || j < self.imu.len() {
            let take_gps = match (self.gps.get(i), self.imu.get(j)) {
                (Some(g), Some(m)) => g.t <= m.t,
                (Some(_), None) => true,
                _ => false,
            };
            let row = if take_gps {
                let g = self.gps[i];
                i += 1;
                Row {
                    t: g.t,
                    source: "gps".into(),
                    x: Some(g.x),
                    y: Some(g.y),
                    ax_body: None,
                    ay_body: None,
                    yaw: None,
                }
            } else {
                let m = self.imu[j];
                j += 1;
                Row {
                    t: m.t,
                    source: "imu".into(),
                    x: None,
                    y: None,
                    ax_body: Some(m.ax_body),
                    ay_body: Some(m.ay_body),
                    yaw: Some(m.yaw),
                }
            };
            w.serialize(row)?;
        }
        w.flush().map_err(io)?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>, comments: &[&str]) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write(std::io::BufWriter::new(file), comments)
    }
}

/// Replaces GPS fixes inside each declared gap by linear interpolation
/// between the last valid fix before and the first valid fix after it.
///
/// Gaps that swallowed every fix are refilled at the median fix interval.
/// The gap list is kept: accelerations reconstructed there are biased toward
/// the chord between the two valid fixes.
pub fn interpolate_gaps(log: &TelemetryLog) -> Result<TelemetryLog> {
    let mut out = log.clone();
    if log.gaps.is_empty() {
        return Ok(out);
    }
    let mut intervals: Vec<f64> = log.gps.windows(2).map(|w| w[1].t - w[0].t).collect();
    intervals.sort_by(f64::total_cmp);
    let spacing = intervals.get(intervals.len() / 2).copied().unwrap_or(1.0);

    let valid = |f: &GpsFix| !log.gaps.iter().any(|g| g.contains(f.t));
    for gap in &log.gaps {
        let before = log.gps.iter().rev().find(|f| f.t <= gap.start && valid(f));
        let after = log.gps.iter().find(|f| f.t >= gap.end && valid(f));
        let (Some(&a), Some(&b)) = (before, after) else {
            return Err(Error::GapAtStreamEdge {
                start: gap.start,
                end: gap.end,
            });
        };
        let lerp = |t: f64| {
            let u = (t - a.t) / (b.t - a.t);
            GpsFix {
                t,
                x: a.x + u * (b.x - a.x),
                y: a.y + u * (b.y - a.y),
            }
        };
        let inside: Vec<f64> = out
            .gps
            .iter()
            .filter(|f| f.t > a.t && f.t < b.t)
            .map(|f| f.t)
            .collect();
        out.gps.retain(|f| !(f.t > a.t && f.t < b.t));
        let times = if inside.is_empty() {
            let n = ((b.t - a.t) / spacing).round().max(1.0) as usize;
            (1..n).map(|k| a.t + (b.t - a.t) * k as f64 / n as f64).collect()
        } else {
            inside
        };
        out.gps.extend(times.into_iter().map(lerp));
        out.gps.sort_by(|p, q| p.t.total_cmp(&q.t));
    }
    Ok(out)
}
