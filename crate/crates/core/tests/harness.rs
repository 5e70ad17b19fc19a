mod common;

use std::fs;
use std::path::Path;

use common::*;
use comfort_planner::harness::*;
use comfort_planner::objective::ObjectiveKind;
use comfort_planner::planner::PlannerMode;
use comfort_planner::road_geometry::load_road;
use comfort_planner::Error;

fn small(out: &Path) -> ScenarioConfig {
    let root = workspace_root();
    ScenarioConfig {
        road: bundled_route(),
        output_dir: out.to_path_buf(),
        w_grid: vec![5.0, 20.0],
        grid: vec![GridPoint {
            preview_time: 3.0,
            horizon: 6,
        }],
        matched: Vec::new(),
        telemetry: vec![root.join("data/sample_drive.csv")],
        ..Default::default()
    }
}

fn metrics_rows(dir: &Path, file: &str) -> Vec<MetricsRow> {
    csv::Reader::from_path(dir.join(file))
        .unwrap()
        .deserialize()
        .map(|r| r.unwrap())
        .collect()
}

#[test]
fn default_configuration_plans_the_full_grid() {
    let runs = plan_runs(&ScenarioConfig::default());
    // 15 weights x 2 objectives x (integral + 9 grid points), then 2 targets
    assert_eq!(runs.len(), 15 * 2 * 10 + 2 * 2 * 10);
    let mut ids: Vec<_> = runs.iter().map(|r| r.id.clone()).collect();
    ids.sort();
    ids.dedup();
    assert_eq!(ids.len(), runs.len());
    let w = log_w_grid(0.05, 50.0, 15);
    assert_eq!((w[0], w[14]), (0.05, 50.0));
    assert!(w.windows(2).all(|p| (p[1] / p[0] - w[1] / w[0]).abs() < 1e-12));
}

#[test]
fn empty_weight_grid_fails_before_solving() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never");
    let mut cfg = small(&out);
    cfg.w_grid.clear();
    assert!(matches!(run_experiment(&cfg), Err(Error::InvalidConfig(m)) if m.contains("W grid")));
    assert!(!out.exists());
    cfg.w_grid = vec![-1.0];
    assert!(run_experiment(&cfg).is_err());
}

#[test]
fn missing_road_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(dir.path());
    cfg.road = dir.path().join("nowhere.road");
    assert!(matches!(cfg.validate(), Err(Error::InvalidConfig(_))));
}

#[test]
fn experiment_outputs_are_reproducible_and_auditable() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let first = run_experiment(&small(&a)).unwrap();
    run_experiment(&small(&b)).unwrap();
    assert!(first.failures.is_empty(), "{:?}", first.failures);
    assert_eq!(first.records.len(), 2 * 2 * 2);

    for f in ["metrics.csv", "pareto.csv", "deltas.csv", "human_scores.csv"] {
        assert!(fs::read(a.join(f)).unwrap() == fs::read(b.join(f)).unwrap(), "{f} differs");
    }

    // every emitted row rescored from its trajectory dump
    let road = load_road(bundled_route()).unwrap();
    let filters = FilterBands::default().build().unwrap();
    let rows = metrics_rows(&a, "metrics.csv");
    assert_eq!(rows.len(), first.records.len());
    for r in &rows {
        let m = rescore_dump(&road, &filters, &a.join(format!("trajectories/{}.csv", r.run_id))).unwrap();
        assert!(rel_err(m.d_ms, r.d_ms) < 1e-6, "{}: {} vs {}", r.run_id, m.d_ms, r.d_ms);
        assert!(rel_err(m.d_ma, r.d_ma) < 1e-6, "{}", r.run_id);
        assert!(rel_err(m.travel_time, r.travel_time) < 1e-6, "{}", r.run_id);
    }

    let pareto = metrics_rows(&a, "pareto.csv");
    assert_eq!(pareto.len(), rows.len());
    assert!(pareto.windows(2).all(|p| p[0].travel_time <= p[1].travel_time));

    let mut timing = csv::Reader::from_path(a.join("timing/rh_tp3_np6.csv")).unwrap();
    assert!(timing.headers().unwrap().iter().any(|h| h == "run_id"));
    assert!(timing.records().count() > 100);

    assert_eq!(first.human.len(), 1);
    assert_eq!(first.human[0].log, "sample_drive.csv");

    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["runs"], 8);
    assert_eq!(manifest["config_hash"], config_hash(&small(&a)));

    let plots = emit_plot_data(&a).unwrap();
    for name in ["pareto.csv", "peak_accel.csv", "rh_comfort.csv", "human_vs_planner.csv"] {
        assert!(plots.contains(&a.join("plots").join(name)), "{name} missing");
    }
}

#[test]
fn plot_data_skips_missing_inputs() {
    let dir = tempfile::tempdir().unwrap();
    assert!(emit_plot_data(dir.path()).unwrap().is_empty());
    assert!(dir.path().join("plots").is_dir());
}

#[test]
fn higher_weight_gives_faster_plan_in_a_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(dir.path());
    cfg.modes = vec![PlannerMode::Integral];
    cfg.objectives = vec![ObjectiveKind::Ma];
    cfg.telemetry.clear();
    let s = run_experiment(&cfg).unwrap();
    let t = |id: &str| s.record(id).unwrap().metrics.travel_time;
    assert!(t("integral_ma_w20") < t("integral_ma_w5"));
    assert!(!dir.path().join("human_scores.csv").exists());
}

#[test]
fn single_grid_point_benchmark() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(dir.path());
    cfg.objectives = vec![ObjectiveKind::Ma];
    let report = benchmark_timing(&cfg).unwrap();
    assert_eq!(report.points.len(), 1);
    assert!(report.ratios.is_empty() && report.ma_over_ms.is_empty());
    let p = &report.points[0];
    assert!((p.sampling_time - 0.5).abs() < 1e-12);
    assert!(p.steps > 50 && p.mean_ms > 0.0 && p.max_ms >= p.mean_ms);
    assert!(dir.path().join("timing/bench_tp3_np6.csv").is_file());
    assert_eq!(csv::Reader::from_path(dir.path().join("timing_summary.csv")).unwrap().records().count(), 1);
}

#[test]
fn scenario_file_overrides_given_values() {
    let dir = tempfile::tempdir().unwrap();
    let base = ScenarioConfig {
        seed: 7,
        workers: 3,
        bench_w: 4.0,
        ..Default::default()
    };
    let path = dir.path().join("s.toml");
    fs::write(&path, "seed = 11\nroad = \"r.road\"\nw_grid = [1.0]\n").unwrap();
    let merged = base.overridden_by(&path).unwrap();
    assert_eq!(merged.seed, 11);
    assert_eq!(merged.w_grid, vec![1.0]);
    assert_eq!(merged.road, dir.path().join("r.road"));
    assert_eq!((merged.workers, merged.bench_w), (3, 4.0));
    assert_eq!(merged.output_dir, base.output_dir);

    fs::write(&path, "sed = 11\n").unwrap();
    assert!(base.overridden_by(&path).is_err());
}

#[test]
fn bundled_scenarios_load() {
    let root = workspace_root();
    for name in ["default", "quick"] {
        let cfg = ScenarioConfig::load(root.join(format!("scenarios/{name}.toml"))).unwrap();
        cfg.validate().unwrap();
    }
    let d = ScenarioConfig::load(root.join("scenarios/default.toml")).unwrap();
    assert_eq!(d.grid, table_grid());
    assert_eq!(d.w_grid.len(), 15);
}

#[test]
fn config_hash_tracks_content() {
    let a = ScenarioConfig::default();
    let mut b = a.clone();
    assert_eq!(config_hash(&a), config_hash(&b));
    b.seed = 1;
    assert_ne!(config_hash(&a), config_hash(&b));
}
