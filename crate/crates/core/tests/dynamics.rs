use std::f64::consts::PI;

use friedrichs::dispersion_analysis::Region;
use friedrichs::dynamics::*;
use friedrichs::model::{massless_flat, waveguide};
use friedrichs::spectral::resonances;
use friedrichs::{Error, C64};

fn one() -> Vec<C64> {
    vec![C64::new(1.0, 0.0)]
}

#[test]
fn zero_coupling_is_a_phase_rotation() {
    let m = massless_flat(0.0, vec![0.0, 1.0], vec![1.0, 2.0]).unwrap();
    let a0 = vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)];
    let ts: Vec<f64> = (0..=20).map(|i| i as f64 * 0.5).collect();
    let grid = FieldGrid::uniform(4.0, 41).unwrap();
    let tr =
        evolve_ode(&m, &ExcitationState::atomic(a0.clone(), &grid), &ts, &grid, &EvolveOptions::default()).unwrap();
    let br = survival_amplitude_bromwich(&m, &a0, &ts, &BromwichConfig::default()).unwrap();
    for (i, &t) in ts.iter().enumerate() {
        let exact = C64::new(0.0, -t).exp() * 0.36 + C64::new(0.0, -2.0 * t).exp() * 0.64;
        assert!((tr.survival[i] - exact).norm() < 1e-8);
        assert!((br.values[i] - exact).norm() < 1e-12);
        assert!((tr.norm[i] - 1.0).abs() < 1e-6);
    }
    let single = massless_flat(0.0, vec![0.0], vec![1.0]).unwrap();
    let dec = mode_decompose(&single, &one(), &[C64::new(1.0, 0.0)], &ts, &BromwichConfig::default(), None).unwrap();
    assert!((dec.weights[0] - 1.0).norm() < 1e-12);
    assert!(dec.remainder.iter().all(|r| r.norm() < 1e-12));
    let z = C64::new(0.3, 0.7);
    let r = resolvent_amplitude(&m, &a0, None, z).unwrap();
    assert!((r[0] - a0[0] / (1.0 - z)).norm() < 1e-14 && (r[1] - a0[1] / (2.0 - z)).norm() < 1e-14);
}

#[test]
fn resolvent_at_i_matches_closed_form() {
    let g = 0.7;
    let m = massless_flat(g, vec![0.0], vec![1.0]).unwrap();
    let z = C64::i();
    // Σ(z) = ig²/(2√z) with the root in the upper half-plane.
    let sigma = C64::i() * g * g / (2.0 * z.sqrt());
    let r = resolvent_amplitude(&m, &one(), None, z).unwrap();
    assert!((r[0] - 1.0 / (1.0 - z - sigma)).norm() < 1e-12);
    assert!(resolvent_amplitude(&m, &one(), None, C64::new(1.0, -0.1)).is_err());
}

fn benchmark(horizon: f64, spec: GridSpec) -> (Vec<f64>, Trajectory, BromwichResult) {
    let m = massless_flat(0.5, vec![0.0], vec![1.0]).unwrap();
    let ts: Vec<f64> = (0..=(horizon * 4.0) as usize).map(|i| i as f64 * 0.25).collect();
    let grid = FieldGrid::graded(&m, &GridSpec { horizon, ..spec }).unwrap();
    let tr = evolve_ode(&m, &ExcitationState::atomic(one(), &grid), &ts, &grid, &EvolveOptions::default()).unwrap();
    let br = survival_amplitude_bromwich(&m, &one(), &ts, &BromwichConfig::default()).unwrap();
    (ts, tr, br)
}

fn max_diff(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

#[test]
fn ode_and_bromwich_agree_and_converge_under_refinement() {
    let coarse = GridSpec { cutoff: 5.0, panel_phase: 4.0 * PI, ..Default::default() };
    let fine = GridSpec { cutoff: 10.0, panel_phase: 2.0 * PI, ..Default::default() };
    let (_, tc, bc) = benchmark(5.0, coarse);
    let (_, tf, bf) = benchmark(5.0, fine);
    let dc = max_diff(&tc.survival, &bc.values);
    let df = max_diff(&tf.survival, &bf.values);
    assert!(df < 1e-3, "fine discrepancy {df}");
    assert!(df < dc, "refinement did not tighten: {dc} -> {df}");
    assert!(tf.max_norm_drift() < 1e-6);
    assert!(!tf.grid_too_coarse);
    assert!(tf.survival.iter().chain(&bf.values).all(|a| a.norm() <= 1.0 + 1e-6));
    assert!((bf.values[0] - 1.0).norm() < 1e-3);
}

#[test]
fn forward_laplace_of_trajectory_matches_resolvent() {
    let m = massless_flat(0.5, vec![0.0], vec![1.0]).unwrap();
    let horizon = 14.0;
    let ts: Vec<f64> = (0..=1400).map(|i| i as f64 * 0.01).collect();
    let grid = FieldGrid::graded(&m, &GridSpec { horizon, ..Default::default() }).unwrap();
    let tr = evolve_ode(&m, &ExcitationState::atomic(one(), &grid), &ts, &grid, &EvolveOptions::default()).unwrap();
    let a: Vec<C64> = tr.atoms.iter().map(|v| v[0]).collect();
    // |a| ≤ 1, so the neglected tail is at most e^{−T·Im z}/Im z.
    let truncation = (-horizon).exp();
    for x in [0.5, 1.0, 2.0] {
        let z = C64::new(x, 1.0);
        let fwd = forward_laplace(&ts, &a, z);
        let res = resolvent_amplitude(&m, &one(), None, z).unwrap()[0];
        assert!((fwd - res).norm() < truncation + 1e-4, "z = {z}: {fwd} vs {res}");
    }
}

#[test]
fn field_initial_state_enters_the_source_term() {
    let m = massless_flat(0.5, vec![0.0], vec![1.0]).unwrap();
    let packet = gaussian_packet(C64::new(0.3, 0.0), 2.0, 0.4, -3.0);
    let horizon = 14.0;
    let ts: Vec<f64> = (0..=1400).map(|i| i as f64 * 0.01).collect();
    let grid = FieldGrid::graded(&m, &GridSpec { horizon, ..Default::default() }).unwrap();
    let a0 = vec![C64::new(0.5, 0.0)];
    let s0 = ExcitationState::with_field(a0.clone(), &grid, &packet);
    let tr = evolve_ode(&m, &s0, &ts, &grid, &EvolveOptions::default()).unwrap();
    assert!(tr.max_norm_drift() < 1e-6 * s0.norm(&grid));
    let a: Vec<C64> = tr.atoms.iter().map(|v| v[0]).collect();
    for x in [0.5, 1.5, 4.0] {
        let z = C64::new(x, 1.0);
        let fwd = forward_laplace(&ts, &a, z);
        let res = resolvent_amplitude(&m, &a0, Some(&packet), z).unwrap()[0];
        assert!((fwd - res).norm() < (-horizon).exp() + 1e-4, "z = {z}: {fwd} vs {res}");
    }
}

#[test]
fn mode_decomposition_of_the_benchmark() {
    let g: f64 = 0.5;
    let m = massless_flat(g, vec![0.0], vec![1.0]).unwrap();
    let res = resonances(&m, &Region::new((0.0, 2.0), (-1.0, 0.1)), &[]);
    let z = res.roots[0].z;
    let ts: Vec<f64> = (0..=20).map(|i| i as f64 * 0.5).collect();
    let dec = mode_decompose(&m, &one(), &[z], &ts, &BromwichConfig::default(), None).unwrap();
    let w = dec.weights[0];
    assert!((w.norm() - 1.0).abs() < g * g, "W = {w}");
    // Reconstruction identity at t = 0.
    assert!((dec.pole_part(0.0) + dec.remainder[0] - dec.bromwich[0]).norm() < 1e-14);
    let early = dec.remainder[2..6].iter().map(|r| r.norm()).fold(0.0, f64::max);
    let late = dec.remainder[16..].iter().map(|r| r.norm()).fold(0.0, f64::max);
    println!("W = {w}, early {early}, late {late}");
    assert!(early < 0.1 && late < early, "early {early}, late {late}");
    let mut bad = massless_flat(g, vec![0.0], vec![1.0]).unwrap();
    bad = bad.with_label("bad-radius");
    assert!(matches!(
        mode_decompose(&bad, &one(), &[z], &ts, &BromwichConfig::default(), Some(0.5)),
        Err(Error::PoleCircleCrossesCut { .. })
    ));
}

#[test]
fn bromwich_truncation_is_reported() {
    let m = massless_flat(0.5, vec![0.0], vec![1.0]).unwrap();
    let cfg = BromwichConfig { half_width: 5.0, tolerance: 1e-8, ..Default::default() };
    assert!(matches!(
        survival_amplitude_bromwich(&m, &one(), &[0.0, 1.0], &cfg),
        Err(Error::TruncationDominated { .. })
    ));
    assert!(survival_amplitude_bromwich(&m, &[], &[0.0], &BromwichConfig::default()).is_err());
}

#[test]
fn trajectory_csv_and_default_height() {
    let m = massless_flat(0.0, vec![0.0], vec![1.0]).unwrap();
    assert!((default_delta(&m) - 0.5).abs() < 1e-15);
    let w = waveguide(1.0, 1.0, vec![0.0], vec![1.0005]).unwrap();
    assert!((default_delta(&w) - 1e-3).abs() < 1e-15);
    let grid = FieldGrid::uniform(2.0, 5).unwrap();
    let tr =
        evolve_ode(&m, &ExcitationState::atomic(one(), &grid), &[0.0, 0.1], &grid, &EvolveOptions::default()).unwrap();
    let csv = tr.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,re,im,abs2,norm"));
    let row: Vec<f64> = lines.nth(1).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(row[0], 0.1);
    assert_eq!(row[1], tr.survival[1].re);
    assert!(evolve_ode(&m, &ExcitationState::atomic(one(), &grid), &[], &grid, &EvolveOptions::default()).is_err());
}

#[test]
fn discretization_echo_is_flagged() {
    let m = massless_flat(0.5, vec![0.0], vec![1.0]).unwrap();
    // Nodes 0.2 apart; within 0.5 of k = 1 the widest gap in ω = k² is
    // between 1.4 and 1.6, so the first echo is at 2π/0.6.
    let grid = FieldGrid::uniform(4.0, 41).unwrap();
    let echo = echo_time(&m, &grid, 0.5);
    assert!((echo - 2.0 * PI / 0.6).abs() < 1e-9, "{echo}");
    let state = ExcitationState::atomic(one(), &grid);
    let short: Vec<f64> = (0..=8).map(|i| i as f64).collect();
    let long: Vec<f64> = (0..=20).map(|i| i as f64).collect();
    let a = evolve_ode(&m, &state, &short, &grid, &EvolveOptions::default()).unwrap();
    let b = evolve_ode(&m, &state, &long, &grid, &EvolveOptions::default()).unwrap();
    assert!((a.recurrence_time - echo).abs() < 1e-12);
    assert!(!a.grid_too_coarse && b.grid_too_coarse);
}
