//! Receding-horizon solve-time benchmark.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::harness::config::ScenarioConfig;
use crate::harness::{create_dir, load_scenario, planner_config, timing_rows, write_csv, TimingRow};
use crate::objective::ObjectiveKind;
use crate::planner::solve_receding_horizon;

/// Per-step solve-time statistics at one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingPoint {
    pub preview_time: f64,
    pub horizon: usize,
    pub sampling_time: f64,
    pub objective: ObjectiveKind,
    pub steps: usize,
    pub mean_ms: f64,
    pub p95_ms: f64,
    pub max_ms: f64,
    pub mean_iterations: f64,
    /// Mean solve time below the sampling time.
    pub real_time: bool,
}

/// Mean solve-time factor between two sampling times at one preview time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRatio {
    pub preview_time: f64,
    pub objective: ObjectiveKind,
    pub from_sampling_time: f64,
    pub to_sampling_time: f64,
    /// `mean(from) / mean(to)`.
    pub factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaMsRatio {
    pub preview_time: f64,
    pub horizon: usize,
    /// `mean(MA) / mean(MS)`.
    pub ratio: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TimingReport {
    pub points: Vec<TimingPoint>,
    pub ratios: Vec<TimingRatio>,
    pub ma_over_ms: Vec<MaMsRatio>,
    pub output_dir: PathBuf,
}

impl TimingReport {
    pub fn point(&self, preview_time: f64, horizon: usize, objective: ObjectiveKind) -> Option<&TimingPoint> {
        self.points
            .iter()
            .find(|p| p.preview_time == preview_time && p.horizon == horizon && p.objective == objective)
    }
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Times every receding-horizon solve at each grid point and objective,
/// sequentially on the calling thread, at `config.bench_w`.
///
/// Writes `timing/bench_<grid>.csv` per grid point plus
/// `timing_summary.csv`, `timing_ratios.csv` and `timing_ma_ms.csv`.
pub fn benchmark_timing(config: &ScenarioConfig) -> Result<TimingReport> {
    let (road, filters) = load_scenario(config)?;
    let out = &config.output_dir;
    create_dir(&out.join("timing"))?;
    let mut report = TimingReport {
        output_dir: out.clone(),
        ..Default::default()
    };
    for g in &config.grid {
        let mut rows: Vec<TimingRow> = Vec::new();
        for &kind in &config.objectives {
            let cfg = planner_config(config, &filters, kind, config.bench_w, Some(*g));
            let mut times = Vec::new();
            let mut iterations = 0usize;
            for rep in 0..config.bench_repeats {
                let r = solve_receding_horizon(&road, &cfg, None)?;
                let id = format!("bench_{}_{}_r{rep}", g.label(), kind);
                rows.extend(timing_rows(&id, kind, *g, &r.steps));
                times.extend(r.steps.iter().map(|s| s.solve_ms));
                iterations += r.steps.iter().map(|s| s.iterations).sum::<usize>();
            }
            let mean = times.iter().sum::<f64>() / times.len() as f64;
            let steps = times.len();
            times.sort_by(f64::total_cmp);
            log::info!("{} {kind}: mean {mean:.3} ms over {steps} solves", g.label());
            report.points.push(TimingPoint {
                preview_time: g.preview_time,
                horizon: g.horizon,
                sampling_time: g.sampling_time(),
                objective: kind,
                steps,
                mean_ms: mean,
                p95_ms: percentile(&times, 0.95),
                max_ms: times.last().copied().unwrap_or(f64::NAN),
                mean_iterations: iterations as f64 / steps as f64,
                real_time: mean < g.sampling_time() * 1e3,
            });
        }
        write_csv(&out.join(format!("timing/bench_{}.csv", g.label())), &rows)?;
    }

    // consecutive sampling times at each preview time, finest first
    let mut previews: Vec<f64> = config.grid.iter().map(|g| g.preview_time).collect();
    previews.sort_by(f64::total_cmp);
    previews.dedup();
    for &tp in &previews {
        for &kind in &config.objectives {
            let mut pts: Vec<&TimingPoint> = report
                .points
                .iter()
                .filter(|p| p.preview_time == tp && p.objective == kind)
                .collect();
            pts.sort_by(|a, b| a.sampling_time.total_cmp(&b.sampling_time));
            for w in pts.windows(2) {
                report.ratios.push(TimingRatio {
                    preview_time: tp,
                    objective: kind,
                    from_sampling_time: w[0].sampling_time,
                    to_sampling_time: w[1].sampling_time,
                    factor: w[0].mean_ms / w[1].mean_ms,
                });
            }
        }
    }
    for g in &config.grid {
        let ms = report.point(g.preview_time, g.horizon, ObjectiveKind::Ms);
        let ma = report.point(g.preview_time, g.horizon, ObjectiveKind::Ma);
        if let (Some(ms), Some(ma)) = (ms, ma) {
            report.ma_over_ms.push(MaMsRatio {
                preview_time: g.preview_time,
                horizon: g.horizon,
                ratio: ma.mean_ms / ms.mean_ms,
            });
        }
    }
    write_csv(&out.join("timing_summary.csv"), &report.points)?;
    write_csv(&out.join("timing_ratios.csv"), &report.ratios)?;
    write_csv(&out.join("timing_ma_ms.csv"), &report.ma_over_ms)?;
    Ok(report)
}
