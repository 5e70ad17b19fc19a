//! Regenerates `data/sample_drive.csv`, the synthetic drive shipped with the
//! crate.
//!
//! `cargo run --release --example synth_sample_log -- [route] [output] [seed]`

use comfort_planner::frequency_weighting::AxisFilters;
use comfort_planner::road_geometry::load_road;
use comfort_planner::telemetry::synth::{
    calibrate_route_drive, route_drive, sample_log, DriveTargets, RouteDriveParams, SensorModel,
};
use comfort_planner::telemetry::{fuse, interpolate_gaps, score_drive, FusionParams, GapInterval};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().collect();
    let route = args.get(1).map_or("routes/waarder_a12.road", String::as_str);
    let output = args.get(2).map_or("data/sample_drive.csv", String::as_str);
    let seed: u64 = args.get(3).map_or(Ok(7), |s| s.parse())?;

    let road = load_road(route)?;
    let filters = AxisFilters::default();
    let targets = DriveTargets {
        duration: 73.8,
        d_ma: 259.8,
        squared_msdv: 177.9,
    };
    let start = RouteDriveParams {
        speed_scale: 1.03,
        slow_amplitude: 0.03,
        fast_amplitude: 0.01,
        path_smoothing: 10.0,
        ..Default::default()
    };
    let (params, truth_metrics) = calibrate_route_drive(&road, start, targets, &filters)?;
    println!("calibrated {params:?}");
    println!("truth {truth_metrics:?}");

    let truth = route_drive(&road, &params)?;
    let sensors = SensorModel {
        gps_every: 10,
        gps_sigma: 0.5,
        gaps: vec![GapInterval { start: START_GAP, end: START_GAP + 15.0 }],
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let log = sample_log(&truth, &sensors, &mut rng)?;
    let fused = fuse(&interpolate_gaps(&log)?, &FusionParams::default())?;
    println!("fused {:?}", score_drive(&fused, &filters)?);

    let header = [
        "synthetic drive, not recorded data",
        "calibrated to duration 73.8 s, raw acceleration energy 259.8 m^2/s^3, squared MSDV 177.9 m^2/s^3",
        "imu 100 Hz clean, gps 10 Hz with 0.5 m noise, one 15 s gps outage",
    ];
    log.save(output, &header)?;
    println!("wrote {output}");
    Ok(())
}

const START_GAP: f64 = 40.0;
