mod common;

use common::*;
use comfort_planner::frequency_weighting::*;
use proptest::prelude::*;

fn lateral() -> DiagonalizedTransition {
    DiagonalizedTransition::new(FilterSpec::default_for(Axis::Lateral)).unwrap()
}

#[test]
fn default_band_time_constants() {
    let spec = FilterSpec::default_for(Axis::Lateral);
    assert!((spec.tau1 * 2.0 * std::f64::consts::PI * 0.0315 - 1.0).abs() < 1e-12);
    assert!((spec.tau2 * 2.0 * std::f64::consts::PI * 0.2 - 1.0).abs() < 1e-12);
    assert!((spec.tau1 - 5.05).abs() < 5e-3 && (spec.tau2 - 0.796).abs() < 5e-4);
    assert_eq!(spec.gain_normalization, spec.tau1 + spec.tau2);
}

#[test]
fn eigenvalues_are_reciprocal_time_constants() {
    let t = DiagonalizedTransition::new(FilterSpec::new(5.05, 0.796, Axis::Lateral)).unwrap();
    let mut l = t.eigenvalues;
    l.sort_by(f64::total_cmp);
    assert!((l[0] + 1.0 / 0.796).abs() < 1e-12);
    assert!((l[1] + 1.0 / 5.05).abs() < 1e-12);
    assert!((l[1] + 0.198).abs() < 5e-4 && (l[0] + 1.256).abs() < 5e-4);
}

#[test]
fn state_matrices_realize_the_transfer_function() {
    let t = lateral();
    let (a, b) = filter_matrices(t.spec.tau1, t.spec.tau2);
    for i in 0..2 {
        for j in 0..2 {
            assert!((t.a()[i][j] - a[i][j]).abs() < 1e-14);
        }
        assert!((t.b()[i] - b[i]).abs() < 1e-14);
    }
}

#[test]
fn sinusoid_at_peak_frequency_keeps_amplitude() {
    let spec = FilterSpec::default_for(Axis::Lateral);
    let trans = DiagonalizedTransition::new(spec).unwrap();
    let w = spec.peak_frequency();
    let dt = 0.01;
    let mut s = FilterState::default();
    let mut peak: f64 = 0.0;
    let steps = (400.0 / dt) as usize;
    for k in 0..steps {
        // hold the midpoint value so the held input has no phase lag
        let u = (w * (k as f64 + 0.5) * dt).sin();
        let (n, out) = step(&s, &trans, u, dt).unwrap();
        s = n;
        if k * 2 > steps {
            peak = peak.max(out.abs());
        }
    }
    // holding a sampled sine attenuates it by sinc(w dt / 2)
    let hold = (w * dt / 2.0).sin() / (w * dt / 2.0);
    assert!((peak - hold).abs() < 1e-4, "peak {peak}");
}

#[test]
fn step_input_output_returns_to_zero() {
    let t = lateral();
    let mut s = FilterState::default();
    let mut outs = Vec::new();
    for _ in 0..1000 {
        let (n, o) = step(&s, &t, 1.0, 0.1).unwrap();
        s = n;
        outs.push(o);
    }
    assert!(outs[10] > 0.1);
    assert!(outs.last().unwrap().abs() < 1e-6);
}

#[test]
fn discretization_matches_augmented_exponential() {
    let t = lateral();
    for &dt in &[1e-3, 0.01, 0.1, 0.2, 0.5, 1.0, 3.0, 10.0] {
        let (ad, bd) = t.discretize(dt);
        let (ar, br) = zoh_reference(t.spec.tau1, t.spec.tau2, dt);
        for i in 0..2 {
            for j in 0..2 {
                assert!((ad[i][j] - ar[i][j]).abs() < 1e-10, "dt {dt} A[{i}][{j}]");
            }
            assert!((bd[i] - br[i]).abs() < 1e-10, "dt {dt} B[{i}]");
        }
    }
}

#[test]
fn tail_matches_two_exponential_closed_form() {
    let t = lateral();
    let x0 = [1.0, 0.0];
    let lib = tail_energy(&FilterState { x: x0, a_fil: 0.0 }, &t);
    let oracle = two_exponential_tail(t.spec.tau1, t.spec.tau2, x0, TAIL_STEPS, TAIL_DT);
    assert!(rel_err(lib, oracle) < 1e-4, "{lib} vs {oracle}");
    assert!(rel_err(lib, oracle) < 1e-10);
}

#[test]
fn tail_captures_nearly_all_zero_input_energy() {
    let t = lateral();
    for x0 in [[1.0, 0.0], [0.0, 1.0], [0.3, -0.2]] {
        let truncated = tail_energy(&FilterState { x: x0, a_fil: 0.0 }, &t);
        let mut s = FilterState { x: x0, a_fil: 0.0 };
        let mut long = 0.0;
        for _ in 0..1500 {
            let (n, o) = step(&s, &t, 0.0, TAIL_DT).unwrap();
            long += o * o * TAIL_DT;
            s = n;
        }
        assert!(truncated >= 0.99 * long, "{truncated} of {long}");
    }
    assert_eq!(tail_energy(&FilterState::default(), &t), 0.0);
}

#[test]
fn passband_sinusoid_outweighs_stopband() {
    let f = AxisFilters::default();
    let sine = |hz: f64| -> Vec<(f64, f64, f64)> {
        let dt = 0.02;
        (0..3000)
            .map(|k| (0.0, (2.0 * std::f64::consts::PI * hz * (k as f64 + 0.5) * dt).sin(), dt))
            .collect()
    };
    let slow = weighted_energy(&f, &sine(0.2), None).unwrap().total();
    let fast = weighted_energy(&f, &sine(2.0), None).unwrap().total();
    assert!(slow > 10.0 * fast, "{slow} vs {fast}");
}

#[test]
fn boxcar_pulse_matches_dense_integration() {
    let f = AxisFilters::default();
    let seq = vec![(0.0, 2.0, 5.0)];
    let lib = weighted_energy(&f, &seq, None).unwrap().total();
    let oracle = dense_squared_msdv(&seq, 20_000);
    assert!(rel_err(lib, oracle) < 1e-4, "{lib} vs {oracle}");
}

#[test]
fn leading_silence_changes_nothing() {
    let f = AxisFilters::default();
    let seq = vec![(1.0, -0.5, 0.7), (0.2, 1.5, 0.4), (-2.0, 0.1, 1.1)];
    let mut padded = vec![(0.0, 0.0, 2.5); 4];
    padded.extend(&seq);
    let a = weighted_energy(&f, &seq, None).unwrap().total();
    let b = weighted_energy(&f, &padded, None).unwrap().total();
    assert!((a - b).abs() < 1e-9 * a);
}

#[test]
fn rejects_inverted_cutoffs() {
    assert!(AxisFilters::new(
        FilterSpec::new(0.5, 2.0, Axis::Longitudinal),
        FilterSpec::default_for(Axis::Lateral)
    )
    .is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn step_matches_dense_integration(
        tau2 in 0.2f64..3.0,
        ratio in 1.05f64..10.0,
        dt in 0.01f64..5.0,
        u in -5.0f64..5.0,
        x0 in -2.0f64..2.0,
        x1 in -2.0f64..2.0,
    ) {
        let tau1 = tau2 * ratio;
        let t = DiagonalizedTransition::new(FilterSpec::new(tau1, tau2, Axis::Lateral)).unwrap();
        let (s, out) = step(&FilterState { x: [x0, x1], a_fil: 0.0 }, &t, u, dt).unwrap();
        let r = rk4_filter(tau1, tau2, [x0, x1], u, dt, 10_000);
        let scale = r[0].abs().max(r[1].abs()).max(1e-3);
        prop_assert!((s.x[0] - r[0]).abs() < 1e-6 * scale);
        prop_assert!((s.x[1] - r[1]).abs() < 1e-6 * scale);
        prop_assert!((out - (tau1 + tau2) * r[0]).abs() < 1e-6 * (tau1 + tau2) * scale);
    }

    #[test]
    fn transition_matches_series_exponential(
        tau2 in 0.05f64..3.0,
        ratio in 1.01f64..20.0,
        dt in 1e-3f64..10.0,
    ) {
        let tau1 = tau2 * ratio;
        let t = DiagonalizedTransition::new(FilterSpec::new(tau1, tau2, Axis::Lateral)).unwrap();
        let (ad, _) = t.discretize(dt);
        let (a, _) = filter_matrices(tau1, tau2);
        let e = expm(&a.iter().map(|r| r.iter().map(|x| x * dt).collect()).collect());
        for i in 0..2 {
            for j in 0..2 {
                prop_assert!((ad[i][j] - e[i][j]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn energy_scales_quadratically(
        seq in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0, 0.05f64..2.0), 1..30),
        c in -4.0f64..4.0,
    ) {
        let f = AxisFilters::default();
        let e = weighted_energy(&f, &seq, None).unwrap().total();
        let scaled: Vec<_> = seq.iter().map(|&(x, y, dt)| (c * x, c * y, dt)).collect();
        let es = weighted_energy(&f, &scaled, None).unwrap().total();
        prop_assert!((es - c * c * e).abs() <= 1e-10 * (c * c * e).max(1e-12));
        prop_assert!(e >= 0.0);
    }

    #[test]
    fn motion_energy_splits_at_carried_state(
        seq in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0, 0.05f64..2.0), 2..30),
        cut in 1usize..29,
    ) {
        let cut = cut.min(seq.len() - 1);
        let f = AxisFilters::default();
        let whole = weighted_energy(&f, &seq, None).unwrap();
        let head = weighted_energy(&f, &seq[..cut], None).unwrap();
        let rest = weighted_energy(&f, &seq[cut..], Some(head.end_state)).unwrap();
        prop_assert!((whole.motion - head.motion - rest.motion).abs() < 1e-9 * whole.motion.max(1.0));
        prop_assert!((whole.tail - rest.tail).abs() < 1e-9 * whole.tail.max(1.0));
    }

    #[test]
    fn zero_input_decays_in_eigenbasis(x0 in -2.0f64..2.0, x1 in -2.0f64..2.0, dt in 0.01f64..2.0) {
        let t = lateral();
        let modal = |x: [f64; 2]| {
            let m = [
                t.p_inv[0][0] * x[0] + t.p_inv[0][1] * x[1],
                t.p_inv[1][0] * x[0] + t.p_inv[1][1] * x[1],
            ];
            m[0].abs().max(m[1].abs())
        };
        let mut s = FilterState { x: [x0, x1], a_fil: 0.0 };
        for _ in 0..50 {
            let (n, _) = step(&s, &t, 0.0, dt).unwrap();
            prop_assert!(modal(n.x) <= modal(s.x) + 1e-15);
            s = n;
        }
    }
}
