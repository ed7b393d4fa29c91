use std::f64::consts::PI;

use friedrichs::linalg::{hermitian_eigenvalues, imaginary_part, max_abs, max_abs_diff};
use friedrichs::model::{massless_flat, waveguide, Model};
use friedrichs::self_energy::{
    contour_term, residue, sigma_boundary, sigma_continuation, sigma_decomposed, sigma_direct, Side,
};
use friedrichs::{principal_sqrt, QuadConfig64, C64};

fn quad() -> QuadConfig64 {
    QuadConfig64::new(1e-11, 1e-11)
}

fn wg(x: Vec<f64>) -> Model {
    let n = x.len();
    waveguide(1.0, 2.0 * PI, x, vec![1.5; n]).unwrap()
}

fn mf(x: Vec<f64>) -> Model {
    let n = x.len();
    massless_flat(1.0, x, vec![1.0; n]).unwrap()
}

fn z_grid() -> Vec<C64> {
    let mut zs = Vec::new();
    for im in [1e-2, 1e-1, 1.0] {
        for re in [-0.7, 0.4, 0.9, 1.6, 2.5, 4.0, 7.0] {
            zs.push(C64::new(re, im));
        }
    }
    zs
}

#[test]
fn decomposition_matches_quadrature() {
    for model in [
        wg(vec![0.0]),
        wg(vec![0.0, 1.0]),
        wg(vec![0.0, 0.6, 1.9]),
        mf(vec![0.0]),
        mf(vec![0.0, 1.0]),
        mf(vec![0.0, 0.5, 1.7]),
    ] {
        for z in z_grid() {
            let a = sigma_decomposed(&model, z).unwrap();
            let b = sigma_direct(&model, z, &quad()).unwrap();
            let diff = max_abs_diff(&a.matrix, &b.matrix);
            assert!(diff <= 1e-6 * (1.0 + max_abs(&b.matrix)), "{} z={z} diff={diff:e}", model.label());
        }
    }
}

#[test]
fn off_diagonal_pole_term_massless_flat() {
    let m = mf(vec![0.0, 1.0]);
    let z = C64::i();
    let k = principal_sqrt(z);
    let expected = C64::i() * (C64::i() * k).exp() / (2.0 * k);
    let s = sigma_decomposed(&m, z).unwrap();
    assert!((s.matrix[(1, 0)] - expected).norm() < 1e-13);
    let d = sigma_direct(&m, z, &quad()).unwrap();
    assert!((d.matrix[(1, 0)] - expected).norm() < 1e-8);
}

#[test]
fn waveguide_decomposition_near_axis() {
    let m = wg(vec![0.0]);
    let s = sigma_decomposed(&m, C64::new(0.5, 1e-6)).unwrap();
    assert!((s.matrix[(0, 0)].re - 8.0 * PI / (3.0 * 3f64.sqrt())).abs() < 1e-5);
    let b = s.parts.unwrap().contour[(0, 0)];
    assert!((b.re + 4.0 * PI / (3.0 * 3f64.sqrt())).abs() < 1e-5);
}

#[test]
fn residue_examples() {
    let m = mf(vec![0.0]);
    let r = residue(&m, C64::new(2.0, 0.0)).unwrap();
    assert!((r.value - 1.0 / (8.0 * PI)).norm() < 1e-15);
    assert!(residue(&m, C64::new(0.0, 0.0)).is_err());
    let w = wg(vec![0.0]);
    let k = C64::new(0.0, 0.75f64.sqrt());
    let r = residue(&w, k).unwrap();
    assert!((C64::new(0.0, 2.0 * PI) * r.value - 4.0 * PI / 3f64.sqrt()).norm() < 1e-12);
    let kc = C64::new(0.8, 0.3);
    let a = residue(&w, kc).unwrap().value;
    let b = residue(&w, kc.conj()).unwrap().value;
    assert!((a.conj() - b).norm() < 1e-14);
}

#[test]
fn boundary_values() {
    let m = wg(vec![0.0]);
    let exact = 8.0 * PI / (3.0 * 3f64.sqrt());
    let a = sigma_boundary(&m, 0.5, Side::Above).unwrap();
    let b = sigma_boundary(&m, 0.5, Side::Below).unwrap();
    assert!((a.matrix[(0, 0)] - exact).norm() < 1e-10);
    assert!(max_abs_diff(&a.matrix, &b.matrix) < 1e-14);
    let gamma = 2.0 * PI;
    let a = sigma_boundary(&m, 2.0, Side::Above).unwrap();
    let b = sigma_boundary(&m, 2.0, Side::Below).unwrap();
    let anti = imaginary_part(&a.matrix)[(0, 0)].re;
    assert!((anti - gamma / 3f64.sqrt()).abs() < 1e-10);
    let jump = a.matrix[(0, 0)] - b.matrix[(0, 0)];
    assert!((jump - C64::new(0.0, 2.0 * gamma / 3f64.sqrt())).norm() < 1e-10);
}

#[test]
fn boundary_is_limit_from_above() {
    for model in [wg(vec![0.0, 1.0]), mf(vec![0.0, 0.8])] {
        for e in [0.4, 2.0, 3.3] {
            let b = sigma_boundary(&model, e, Side::Above).unwrap().matrix;
            let s: Vec<_> =
                [1e-4, 1e-5, 1e-6].iter().map(|&h| sigma_decomposed(&model, C64::new(e, h)).unwrap().matrix).collect();
            let d: Vec<f64> = s.iter().map(|m| max_abs_diff(m, &b)).collect();
            // Linear approach: each tenfold step shrinks the gap about tenfold.
            assert!(d[1] <= 0.2 * d[0] + 1e-12 && d[2] <= 0.2 * d[1] + 1e-12, "{d:?}");
            // Richardson extrapolation δ → 0 from the two smallest heights.
            let r = (&s[2] * C64::new(10.0, 0.0) - &s[1]) / C64::new(9.0, 0.0);
            assert!(max_abs_diff(&r, &b) <= 1e-6, "{e}: {:e}", max_abs_diff(&r, &b));
        }
    }
}

#[test]
fn continuation_examples() {
    let m = wg(vec![0.0]);
    let z = C64::new(2.0, -0.05);
    let s = sigma_continuation(&m, z).unwrap();
    let parts = s.parts.as_ref().unwrap();
    let k = parts.poles[0].kappa;
    assert!(k.im < 0.0);
    assert!((k * k - (z * z - 1.0)).norm() < 1e-12);
    let expected = C64::new(0.0, 2.0 * PI) / k + contour_term(&m, z).unwrap()[(0, 0)];
    assert!((s.matrix[(0, 0)] - expected).norm() < 1e-12);
    // Approaching the real axis from below reproduces the upper boundary value.
    let above = sigma_boundary(&m, 2.0, Side::Above).unwrap().matrix[(0, 0)];
    let below = sigma_boundary(&m, 2.0, Side::Below).unwrap().matrix[(0, 0)];
    let near = sigma_continuation(&m, C64::new(2.0, -1e-7)).unwrap().matrix[(0, 0)];
    assert!((near - above).norm() < 1e-5 && (near - below).norm() > 1.0);

    let f = mf(vec![0.0]);
    let z = C64::new(1.0, -0.1);
    let s = sigma_continuation(&f, z).unwrap();
    let k = s.parts.as_ref().unwrap().poles[0].kappa;
    assert!(k.im < 0.0 && (k * k - z).norm() < 1e-12);
    assert!((s.matrix[(0, 0)] - C64::i() / (2.0 * PI) * PI / k).norm() < 1e-12);

    let z = C64::new(1.3, 0.2);
    let a = sigma_continuation(&f, z).unwrap();
    let b = sigma_decomposed(&f, z).unwrap();
    assert_eq!(a.matrix, b.matrix);
}

#[test]
fn symmetry_and_herglotz() {
    for model in [wg(vec![0.0, 0.4, 1.3]), mf(vec![0.0, 0.4, 1.3])] {
        for z in z_grid() {
            let s = sigma_decomposed(&model, z).unwrap().matrix;
            assert!(max_abs_diff(&s, &s.transpose()) < 1e-12);
            let c = sigma_decomposed(&model, z.conj()).unwrap().matrix;
            assert!(max_abs_diff(&c, &s.adjoint()) < 1e-12);
            let ev = hermitian_eigenvalues(&imaginary_part(&s));
            assert!(ev[0] >= -1e-10, "{z}: {ev:?}");
        }
    }
}

#[test]
fn contour_term_suppression() {
    let m = wg(vec![0.0, 0.5, 1.5, 3.0]);
    for e in [0.3, 0.8, 2.0, 5.0] {
        let b = contour_term(&m, C64::new(e, 0.0)).unwrap();
        let x = m.atoms().positions();
        for j in 0..4 {
            for l in 0..4 {
                assert!(b[(j, l)].norm() <= b[(0, 0)].norm() * (-(x[j] - x[l]).abs()).exp() * (1.0 + 1e-12));
            }
        }
    }
    let f = mf(vec![0.0, 1.0]);
    assert_eq!(max_abs(&contour_term(&f, C64::new(0.3, 0.2)).unwrap()), 0.0);
}
