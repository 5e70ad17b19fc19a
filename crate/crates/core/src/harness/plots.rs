//! Figure data from an experiment directory.
//!
//! Every file lands in `<results>/plots/`:
//!
//! | file | columns |
//! |---|---|
//! | `motion_profiles.csv` | `target_time, objective, t, s, v, a_x, a_y` |
//! | `pareto.csv` | `mode, preview_time, horizon, objective, w, travel_time, d_ms, d_ma`, rising `travel_time` |
//! | `peak_accel.csv` | `objective, w, travel_time, peak_ax, peak_ay, peak_combined` |
//! | `rh_comfort.csv` | `preview_time, horizon, sampling_time, objective, w, target_time, travel_time, d_ms, d_ma` |
//! | `timing.csv` | the benchmark's `timing_summary.csv` rows |
//! | `human_vs_planner.csv` | `source, label, objective, travel_time, d_ms, d_ma` |

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::harness::bench::TimingPoint;
use crate::harness::{create_dir, read_csv, write_csv, HumanScore, MetricsRow};
use crate::objective::ObjectiveKind;
use crate::planner::PlannerMode;

#[derive(Debug, Serialize)]
struct ProfileRow {
    target_time: f64,
    objective: ObjectiveKind,
    t: f64,
    s: f64,
    v: f64,
    a_x: f64,
    a_y: f64,
}

#[derive(Debug, Deserialize)]
struct DumpRow {
    s: f64,
    v: f64,
    a_x: f64,
    a_y: f64,
    t: f64,
}

#[derive(Debug, Serialize)]
struct ParetoRow {
    mode: PlannerMode,
    preview_time: Option<f64>,
    horizon: Option<usize>,
    objective: ObjectiveKind,
    w: f64,
    travel_time: f64,
    d_ms: f64,
    d_ma: f64,
}

#[derive(Debug, Serialize)]
struct PeakRow {
    objective: ObjectiveKind,
    w: f64,
    travel_time: f64,
    peak_ax: f64,
    peak_ay: f64,
    peak_combined: f64,
}

#[derive(Debug, Serialize)]
struct RhRow {
    preview_time: Option<f64>,
    horizon: Option<usize>,
    sampling_time: Option<f64>,
    objective: ObjectiveKind,
    w: f64,
    target_time: Option<f64>,
    travel_time: f64,
    d_ms: f64,
    d_ma: f64,
}

#[derive(Debug, Serialize)]
struct ScatterRow {
    source: &'static str,
    label: String,
    objective: Option<ObjectiveKind>,
    travel_time: f64,
    d_ms: f64,
    d_ma: f64,
}

fn optional<T: for<'de> Deserialize<'de>>(path: &Path) -> Option<Vec<T>> {
    if !path.is_file() {
        log::warn!("{} missing; skipping dependent plot data", path.display());
        return None;
    }
    match read_csv(path) {
        Ok(rows) => Some(rows),
        Err(e) => {
            log::warn!("{} unreadable ({e}); skipping dependent plot data", path.display());
            None
        }
    }
}

/// Writes one table per figure from the results in `results_dir` and
/// returns the files written. Missing inputs skip their tables.
pub fn emit_plot_data(results_dir: &Path) -> Result<Vec<PathBuf>> {
    let plots = results_dir.join("plots");
    create_dir(&plots)?;
    let mut written = Vec::new();
    let metrics: Option<Vec<MetricsRow>> = optional(&results_dir.join("metrics.csv"));

    if let Some(rows) = &metrics {
        let mut profiles = Vec::new();
        for r in rows.iter().filter(|r| r.mode == PlannerMode::Integral) {
            let Some(target) = r.target_time else { continue };
            let dump = results_dir.join("trajectories").join(format!("{}.csv", r.run_id));
            let Some(points) = optional::<DumpRow>(&dump) else { continue };
            profiles.extend(points.into_iter().map(|p| ProfileRow {
                target_time: target,
                objective: r.objective,
                t: p.t,
                s: p.s,
                v: p.v,
                a_x: p.a_x,
                a_y: p.a_y,
            }));
        }
        if !profiles.is_empty() {
            let path = plots.join("motion_profiles.csv");
            write_csv(&path, &profiles)?;
            written.push(path);
        }

        let mut sweep: Vec<&MetricsRow> = rows.iter().filter(|r| r.target_time.is_none()).collect();
        sweep.sort_by(|a, b| a.travel_time.total_cmp(&b.travel_time).then_with(|| a.run_id.cmp(&b.run_id)));
        let pareto: Vec<ParetoRow> = sweep
            .iter()
            .map(|r| ParetoRow {
                mode: r.mode,
                preview_time: r.preview_time,
                horizon: r.horizon,
                objective: r.objective,
                w: r.w,
                travel_time: r.travel_time,
                d_ms: r.d_ms,
                d_ma: r.d_ma,
            })
            .collect();
        let path = plots.join("pareto.csv");
        write_csv(&path, &pareto)?;
        written.push(path);

        let mut peaks: Vec<PeakRow> = sweep
            .iter()
            .filter(|r| r.mode == PlannerMode::Integral)
            .map(|r| PeakRow {
                objective: r.objective,
                w: r.w,
                travel_time: r.travel_time,
                peak_ax: r.peak_ax,
                peak_ay: r.peak_ay,
                peak_combined: r.peak_combined,
            })
            .collect();
        peaks.sort_by(|a, b| a.objective.cmp(&b.objective).then(a.w.total_cmp(&b.w)));
        let path = plots.join("peak_accel.csv");
        write_csv(&path, &peaks)?;
        written.push(path);

        let rh: Vec<RhRow> = rows
            .iter()
            .filter(|r| r.mode == PlannerMode::RecedingHorizon)
            .map(|r| RhRow {
                preview_time: r.preview_time,
                horizon: r.horizon,
                sampling_time: r.sampling_time,
                objective: r.objective,
                w: r.w,
                target_time: r.target_time,
                travel_time: r.travel_time,
                d_ms: r.d_ms,
                d_ma: r.d_ma,
            })
            .collect();
        if !rh.is_empty() {
            let path = plots.join("rh_comfort.csv");
            write_csv(&path, &rh)?;
            written.push(path);
        }
    }

    let timing = results_dir.join("timing_summary.csv");
    if timing.is_file() {
        if let Some(rows) = optional::<TimingPoint>(&timing) {
            let path = plots.join("timing.csv");
            write_csv(&path, &rows)?;
            written.push(path);
        }
    } else {
        log::warn!("{} missing; run the benchmark for timing plot data", timing.display());
    }

    let human_path = results_dir.join("human_scores.csv");
    let human: Option<Vec<HumanScore>> = if human_path.is_file() { optional(&human_path) } else { None };
    if let (Some(human), Some(rows)) = (human, &metrics) {
        let mut scatter: Vec<ScatterRow> = human
            .into_iter()
            .map(|h| ScatterRow {
                source: "human",
                label: h.log,
                objective: None,
                travel_time: h.travel_time,
                d_ms: h.d_ms,
                d_ma: h.d_ma,
            })
            .collect();
        let mut planner: Vec<&MetricsRow> = rows
            .iter()
            .filter(|r| r.mode == PlannerMode::Integral && r.target_time.is_none())
            .collect();
        planner.sort_by(|a, b| a.travel_time.total_cmp(&b.travel_time));
        scatter.extend(planner.into_iter().map(|r| ScatterRow {
            source: "planner",
            label: r.run_id.clone(),
            objective: Some(r.objective),
            travel_time: r.travel_time,
            d_ms: r.d_ms,
            d_ma: r.d_ma,
        }));
        let path = plots.join("human_vs_planner.csv");
        write_csv(&path, &scatter)?;
        written.push(path);
    }
    Ok(written)
}
