mod common;

use common::*;
use comfort_planner::frequency_weighting::AxisFilters;
use comfort_planner::objective::*;
use comfort_planner::road_geometry::*;
use comfort_planner::trajectory_kinematics::*;
use proptest::prelude::*;

fn straight(len: f64, d_nom: f64) -> RoadProfile {
    RoadProfile::new(
        Pose {
            position: [0.0, 0.0],
            heading: 0.0,
        },
        vec![RoadPrimitive::line(len)],
        RoadBounds {
            d_nom,
            ..Default::default()
        },
    )
    .unwrap()
}

fn route_plan(y: impl Fn(f64) -> f64, v: impl Fn(f64) -> f64) -> MotionPlan {
    let r = load_road(bundled_route()).unwrap();
    let st = build_stations(&r).unwrap();
    let ys = st.iter().map(|s| y(s.s)).collect();
    let vs = st.iter().map(|s| v(s.s)).collect();
    MotionPlan::along(st, ys, vs).unwrap()
}

fn reference_sequence(p: &MotionPlan) -> Vec<(f64, f64, f64)> {
    segment_reference(&p.waypoints(), &p.v, p.initial_heading)
        .into_iter()
        .map(|(_, ax, ay, dt)| (ax, ay, dt))
        .collect()
}

#[test]
fn constant_speed_straight_costs_only_time() {
    let st = build_stations(&straight(300.0, 5.0)).unwrap();
    let n = st.len();
    let p = MotionPlan::along(st, vec![0.0; n], vec![25.0; n]).unwrap();
    let spec = ObjectiveSpec::new(ObjectiveKind::Ms, 3.0);
    assert!((cost_ms(&p, &spec).unwrap() - 3.0 * 300.0 / 25.0).abs() < 1e-12);
    assert!((cost_ma(&p, &spec).unwrap() - 36.0).abs() < 1e-12);
    let m = metrics(&p, &spec.filters).unwrap();
    assert_eq!((m.d_ms, m.d_ma, m.peak_combined), (0.0, 0.0, 0.0));
    assert!((m.travel_time - 12.0).abs() < 1e-12);
}

#[test]
fn zero_weight_leaves_comfort_alone() {
    let p = route_plan(|s| 0.3 * (s / 40.0).sin(), |s| 14.0 + 4.0 * (s / 70.0).sin());
    let spec = ObjectiveSpec::new(ObjectiveKind::Ms, 0.0);
    let m = metrics(&p, &spec.filters).unwrap();
    assert!(rel_err(cost(&p, &spec).unwrap(), m.d_ms) < 1e-12);
    let spec = ObjectiveSpec::new(ObjectiveKind::Ma, 0.0);
    assert!(rel_err(cost(&p, &spec).unwrap(), m.d_ma) < 1e-12);
}

#[test]
fn route_cost_matches_dense_end_to_end_reference() {
    let p = route_plan(|s| 0.6 * (s / 55.0).sin(), |s| 13.0 + 5.0 * (s / 120.0).cos());
    let w = 4.0;
    let seq = reference_sequence(&p);
    let time: f64 = seq.iter().map(|s| s.2).sum();
    let expected = dense_squared_msdv(&seq, 400) + w * time;
    let got = cost_ms(&p, &ObjectiveSpec::new(ObjectiveKind::Ms, w)).unwrap();
    assert!(rel_err(got, expected) < 1e-5, "{got} vs {expected}");
}

#[test]
fn single_constant_acceleration_segment() {
    // 9 -> 11 m/s over 10 m takes one second at 2 m/s^2, then cruise
    let st = build_stations(&straight(20.0, 10.0)).unwrap();
    let p = MotionPlan::along(st, vec![0.0; 3], vec![9.0, 11.0, 11.0]).unwrap();
    let m = metrics(&p, &AxisFilters::default()).unwrap();
    assert!((m.d_ma - 4.0).abs() < 1e-12);
    assert!((m.peak_ax - 2.0).abs() < 1e-12 && m.peak_ay == 0.0);
}

#[test]
fn raw_energy_cost_equals_unfiltered_sum() {
    let p = route_plan(|s| -0.4 * (s / 33.0).cos(), |s| 11.0 + 6.0 * (s / 90.0).sin());
    let w = 2.5;
    let seq = reference_sequence(&p);
    let expected: f64 = seq.iter().map(|&(ax, ay, dt)| (ax * ax + ay * ay) * dt + w * dt).sum();
    let got = cost_ma(&p, &ObjectiveSpec::new(ObjectiveKind::Ma, w)).unwrap();
    assert!(rel_err(got, expected) < 1e-9, "{got} vs {expected}");
}

#[test]
fn lateral_pulse_sets_combined_peak() {
    let seq = [(0.0, 0.0, 1.0), (0.0, 1.7, 2.0), (0.0, 0.0, 1.0)];
    let m = metrics_from_segments(&AxisFilters::default(), &seq).unwrap();
    assert_eq!(m.peak_combined, 1.7);
    assert_eq!(m.peak_ay, 1.7);
    assert_eq!(m.travel_time, 4.0);
    assert!(m.d_ms > 0.0);
    assert_eq!(m.d_ms, m.squared_msdv);
}

#[test]
fn negative_weight_is_rejected() {
    let p = route_plan(|_| 0.0, |_| 10.0);
    assert!(cost(&p, &ObjectiveSpec::new(ObjectiveKind::Ms, -1.0)).is_err());
    assert!(cost(&p, &ObjectiveSpec::new(ObjectiveKind::Ma, f64::NAN)).is_err());
}

#[test]
fn objective_names_round_trip() {
    for k in [ObjectiveKind::Ms, ObjectiveKind::Ma] {
        assert_eq!(k.to_string().parse::<ObjectiveKind>().unwrap(), k);
    }
    assert!("msdv".parse::<ObjectiveKind>().is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn comfort_cost_never_below_time_cost(
        amp in 0.0f64..1.0,
        wave in 10.0f64..200.0,
        base in 5.0f64..25.0,
        swing in 0.0f64..4.0,
        w in 0.0f64..50.0,
    ) {
        let p = route_plan(|s| amp * (s / wave).sin(), |s| base + swing * (s / wave).cos());
        let t = travel_time(&p).unwrap();
        for kind in [ObjectiveKind::Ms, ObjectiveKind::Ma] {
            let c = cost(&p, &ObjectiveSpec::new(kind, w)).unwrap();
            prop_assert!(c >= w * t - 1e-9 * c.abs());
        }
    }
}
