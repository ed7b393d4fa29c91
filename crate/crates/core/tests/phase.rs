use std::f64::consts::{PI, SQRT_2};

use friedrichs::linalg::{determinant, CMatrix};
use friedrichs::phase::{
    char_poly, closes_after, commensurate_period, cosine_sine_split, det_closed, eigenvalues, min_return_distance,
    phase_matrix, trajectory_sweep, PhaseError, SweepConfig,
};
use friedrichs::C64;
use num_complex::Complex;
use proptest::prelude::*;

fn positions_from(gaps: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0];
    for g in gaps {
        x.push(x.last().unwrap() + g);
    }
    x
}

fn shifted_det(x: &[f64], lambda: C64, kappa: C64) -> C64 {
    let mut m = phase_matrix(x, kappa).matrix;
    for j in 0..x.len() {
        m[(j, j)] -= lambda;
    }
    determinant(&m)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn recurrence_matches_lu(gaps in prop::collection::vec(0.05f64..2.0, 1..10),
                             lr in -2.0f64..2.0, li in -2.0f64..2.0, k in -6.0f64..6.0, eta in 0.0f64..1.0) {
        let x = positions_from(&gaps);
        let (lambda, kappa) = (C64::new(lr, li), C64::new(k, eta));
        let p = char_poly(&x, lambda, kappa);
        let d = shifted_det(&x, lambda, kappa);
        let scale = 1.0 + (1.0 + lambda.norm()).powi(x.len() as i32);
        prop_assert!((p.value - d).norm() <= 1e-9 * scale);
        prop_assert!((p.sequence[0] - (C64::new(1.0, 0.0) - lambda)).norm() == 0.0);
        let p0 = char_poly(&x, C64::new(0.0, 0.0), kappa).value;
        let closed = det_closed(&x, kappa);
        prop_assert!((p0 - closed).norm() <= 1e-9 * (1.0 + closed.norm()));
        prop_assert!((shifted_det(&x, C64::new(0.0, 0.0), kappa) - closed).norm() <= 1e-9 * 2f64.powi(x.len() as i32));
    }

    #[test]
    fn spectrum_identities_and_location(gaps in prop::collection::vec(0.05f64..2.0, 1..6), k in 0.0f64..30.0) {
        let x = positions_from(&gaps);
        let n = x.len() as f64;
        let spec = eigenvalues(&x, C64::new(k, 0.0), false).unwrap();
        let trace: C64 = spec.eigenvalues.iter().sum();
        prop_assert!((trace - n).norm() <= 1e-9);
        let prod: C64 = spec.eigenvalues.iter().product();
        let det = det_closed(&x, C64::new(k, 0.0));
        prop_assert!((prod - det).norm() <= 1e-8 * (1.0 + det.norm()));
        // The cosine matrix is positive semidefinite and bounded by the
        // all-ones matrix, so 0 ≤ Re λ(Φ) ≤ n; for −iΦ this reads −n ≤ Im ≤ 0.
        for l in &spec.eigenvalues {
            prop_assert!(l.re >= -1e-9 && l.re <= n + 1e-9);
            let rotated = l * C64::new(0.0, -1.0);
            prop_assert!(rotated.im <= 1e-9 && rotated.im >= -n - 1e-9);
        }
    }

    #[test]
    fn eta_collapse_gershgorin(gaps in prop::collection::vec(0.1f64..2.0, 1..5), k in 0.0f64..30.0, eta in 0.0f64..4.0) {
        let x = positions_from(&gaps);
        let min_gap = gaps.iter().copied().fold(f64::INFINITY, f64::min);
        let bound = (x.len() - 1) as f64 * (-eta * min_gap).exp();
        let spec = eigenvalues(&x, C64::new(k, eta), false).unwrap();
        for l in &spec.eigenvalues {
            let rotated = l * C64::new(0.0, -1.0);
            prop_assert!((rotated + C64::new(0.0, 1.0)).norm() <= bound + 1e-9);
        }
    }

    #[test]
    fn cosine_sine_split_reassembles(gaps in prop::collection::vec(0.1f64..2.0, 1..5), k in -10.0f64..10.0, eta in 0.0f64..2.0) {
        let x = positions_from(&gaps);
        let (c, s) = cosine_sine_split(&x, k, eta);
        let phi = phase_matrix(&x, C64::new(k, eta)).matrix;
        for j in 0..x.len() {
            for l in 0..x.len() {
                prop_assert!((phi[(j, l)] - C64::new(c[(j, l)], s[(j, l)])).norm() <= 1e-14);
            }
        }
        prop_assert!(c.symmetric_eigenvalues().iter().all(|&v| v >= -1e-12 || eta > 0.0 && v > 0.0));
    }
}

#[test]
fn zero_eigenvalues_only_at_resonant_momenta() {
    let x = [0.0, 1.0, 2.0];
    let spec = eigenvalues(&x, C64::new(PI, 0.0), true).unwrap();
    let mut sorted: Vec<f64> = spec.eigenvalues.iter().map(|l| l.re).collect();
    sorted.sort_by(f64::total_cmp);
    assert!(spec.eigenvalues.iter().all(|l| l.im.abs() < 1e-8));
    assert!(sorted[0].abs() < 1e-8 && sorted[1].abs() < 1e-8 && (sorted[2] - 3.0).abs() < 1e-8);
    assert_eq!(spec.null_count(1e-8), 2);
    // Null vectors satisfy a1 − a2 + a3 = 0 for odd ν.
    for (l, v) in spec.eigenvalues.iter().zip(spec.eigenvectors.as_ref().unwrap()) {
        if l.norm() < 1e-8 {
            assert!((v[0] - v[1] + v[2]).norm() < 1e-8);
        }
    }
    for i in 1..400 {
        let k = i as f64 * 0.05;
        let resonant = (k / PI - (k / PI).round()).abs() < 1e-9;
        let spec = eigenvalues(&x, C64::new(k, 0.0), false).unwrap();
        let min_re = spec.eigenvalues.iter().map(|l| l.re.abs()).fold(f64::INFINITY, f64::min);
        assert!(resonant || min_re > 1e-8, "k = {k}");
    }
}

#[test]
fn closure_for_commensurable_gaps() {
    let x = [0.0, 0.5, 1.5];
    let period = commensurate_period(&x, 64, 1e-12).unwrap();
    assert!((period - 4.0 * PI).abs() < 1e-12);
    for k in [0.0, 0.37, 2.0, 11.1] {
        assert!(closes_after(&x, k, 0.0, period, 1e-6).unwrap());
        assert!(closes_after(&x, k, 0.3, period, 1e-6).unwrap());
    }
    let irr = [0.0, 1.0 / SQRT_2, 1.0 / SQRT_2 + 1.0];
    assert!(commensurate_period(&irr, 64, 1e-12).is_none());
    let traj = trajectory_sweep(&irr, &SweepConfig::new(0.0, 200.0, 0.05, 0.0)).unwrap();
    assert!(min_return_distance(&traj, 0, 1.0) > 1e-6);
}

#[test]
fn sweep_errors_and_csv() {
    assert_eq!(
        trajectory_sweep(&[1.0, 0.0], &SweepConfig::new(0.0, 1.0, 0.1, 0.0)),
        Err(PhaseError::UnsortedPositions)
    );
    assert_eq!(trajectory_sweep::<f64>(&[], &SweepConfig::new(0.0, 1.0, 0.1, 0.0)), Err(PhaseError::Empty));
    assert!(matches!(
        trajectory_sweep(&[0.0], &SweepConfig::new(0.0, 1.0, 0.0, 0.0)),
        Err(PhaseError::InvalidSweep(_))
    ));
    let traj = trajectory_sweep(&[0.0, 1.0], &SweepConfig::new(0.0, 1.0, 0.5, 0.0)).unwrap();
    let csv = traj.to_csv();
    assert_eq!(csv.lines().count(), 1 + 3 * 2);
    assert!(csv.starts_with("k,branch,re,im,ambiguous\n"));
}

#[test]
fn single_precision_agrees_with_double() {
    let x64 = [0.0, 0.3, 1.1, 1.6];
    let x32: Vec<f32> = x64.iter().map(|&v| v as f32).collect();
    let k = 2.3;
    let a = eigenvalues(&x64, C64::new(k, 0.1), false).unwrap();
    let b = eigenvalues(&x32, Complex::new(k as f32, 0.1), false).unwrap();
    let b64: Vec<C64> = b.eigenvalues.iter().map(|l| C64::new(l.re as f64, l.im as f64)).collect();
    assert!(friedrichs::phase::spectral_distance(&a.eigenvalues, &b64) < 1e-4);
    let m: CMatrix<f32> = phase_matrix(&x32, Complex::new(k as f32, 0.1)).matrix;
    let p = char_poly(&x32, Complex::new(0.0, 0.0), Complex::new(k as f32, 0.1)).value;
    assert!((determinant(&m) - p).norm() < 1e-5);
}
