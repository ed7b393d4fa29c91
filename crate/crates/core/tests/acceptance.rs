//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Runs without the libtest harness so the report is always shown.

use std::f64::consts::{PI, SQRT_2};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use friedrichs::dispersion_analysis::{complex_solutions, straight_path, track_solution, Region};
use friedrichs::dynamics::{
    evolve_ode, survival_amplitude_bromwich, BromwichConfig, EvolveOptions, ExcitationState, FieldGrid, GridSpec,
};
use friedrichs::linalg::{determinant, max_abs, max_abs_diff, singular_values};
use friedrichs::model::{massless_flat, validate_hypotheses, waveguide, Model, ValidationGrid};
use friedrichs::phase::{
    char_poly, closes_after, commensurate_period, det_closed, disc_exclusion_margin, eigenvalues, min_return_distance,
    phase_matrix, trajectory_sweep, SweepConfig,
};
use friedrichs::self_energy::{sigma_boundary, sigma_decomposed, sigma_direct, Side};
use friedrichs::spectral::{
    bound_states, characteristic_matrix, dominant_split, resonances, weak_coupling_resonances, Corrections,
};
use friedrichs::{QuadConfig64, C64};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    };
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let quad = QuadConfig64::new(1e-11, 1e-11);
    let mut zs = Vec::new();
    for im in [1e-2, 1e-1, 1.0] {
        for re in [-0.7, 0.4, 0.9, 1.6, 2.5, 4.0, 7.0] {
            zs.push(C64::new(re, im));
        }
    }
    let mut worst = 0.0f64;
    let mut count = 0;
    for x in [vec![0.0], vec![0.0, 1.0], vec![0.0, 0.6, 1.9]] {
        let n = x.len();
        for model in [
            waveguide(1.0, 2.0 * PI, x.clone(), vec![1.5; n]).map_err(err)?,
            massless_flat(1.0, x.clone(), vec![1.0; n]).map_err(err)?,
        ] {
            for &z in &zs {
                let a = sigma_decomposed(&model, z).map_err(err)?;
                let b = sigma_direct(&model, z, &quad).map_err(err)?;
                let rel = max_abs_diff(&a.matrix, &b.matrix) / (1.0 + max_abs(&b.matrix));
                ensure!(rel <= 1e-6, "{} n={n} z={z}: relative discrepancy {rel:.3e}", model.label());
                worst = worst.max(rel);
                count += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure!(secs < 60.0, "took {secs:.1} s");
    Ok(format!("{count} evaluations, worst {worst:.2e}, {secs:.1} s"))
}

fn waveguide_benchmark() -> Outcome {
    let m = waveguide(1.0, 2.0 * PI, vec![0.0], vec![1.0]).map_err(err)?;
    let s = sigma_boundary(&m, 0.5, Side::Above).map_err(err)?;
    let total = s.matrix[(0, 0)];
    let exact = 8.0 * PI / (3.0 * 3f64.sqrt());
    let parts = sigma_decomposed(&m, C64::new(0.5, 1e-12)).map_err(err)?.parts.ok_or("no parts")?;
    let pole = parts.poles.iter().map(|p| p.contribution[(0, 0)]).sum::<C64>();
    let contour = parts.contour[(0, 0)];
    ensure!((total - exact).norm() <= 1e-6, "Σ = {total}, expected {exact}");
    ensure!((pole - 4.0 * PI / 3f64.sqrt()).norm() <= 1e-6, "pole term {pole}");
    ensure!((contour + 4.0 * PI / (3.0 * 3f64.sqrt())).norm() <= 1e-6, "contour term {contour}");
    Ok(format!("Σ(0.5) = {:.10} (closed form {exact:.10}), pole {:.8}, contour {:.8}", total.re, pole.re, contour.re))
}

fn normalization() -> Outcome {
    let (mass, gamma) = (1.0, 2.0 * PI);
    let m = waveguide(mass, gamma, vec![0.0], vec![1.0]).map_err(err)?;
    let report = validate_hypotheses(&m, &ValidationGrid::default());
    let v = report.normalization_omega.ok_or("∫|F|²/ω not computed")?;
    let d = (v - gamma / (2.0 * mass)).abs();
    ensure!(d <= 1e-8, "∫|F|²/ω = {v}, off by {d:.3e}");
    ensure!(report.passed(), "hypothesis checks failed");
    Ok(format!("∫|F|²/ω = {v:.12} (γ/2m = {:.12}), deviation {d:.1e}", gamma / (2.0 * mass)))
}

fn recurrence_vs_lu() -> Outcome {
    let mut rng = StdRng::seed_from_u64(4);
    let mut worst = 0.0f64;
    let mut worst_closed = 0.0f64;
    for draw in 0..50 {
        let n = rng.gen_range(2..=10);
        let mut x = vec![0.0];
        for _ in 1..n {
            x.push(x.last().unwrap() + rng.gen_range(0.05..2.0));
        }
        let kappa = C64::new(rng.gen_range(-6.0..6.0), rng.gen_range(0.0..1.0));
        let lambda = C64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let mut shifted = phase_matrix(&x, kappa).matrix;
        for j in 0..n {
            shifted[(j, j)] -= lambda;
        }
        let lu = determinant(&shifted);
        let p = char_poly(&x, lambda, kappa).value;
        let rel = (p - lu).norm() / lu.norm().max(1e-300);
        ensure!(rel <= 1e-9, "draw {draw} (n={n}): relative error {rel:.3e}");
        let closed = det_closed(&x, kappa);
        let lu0 = determinant(&phase_matrix(&x, kappa).matrix);
        let rel0 = (closed - lu0).norm() / closed.norm().max(1e-300);
        ensure!(rel0 <= 1e-9, "draw {draw} (n={n}): closed-form determinant relative error {rel0:.3e}");
        worst = worst.max(rel);
        worst_closed = worst_closed.max(rel0);
    }
    Ok(format!("50 draws, worst recurrence {worst:.1e}, closed form {worst_closed:.1e}"))
}

fn phase_spectrum() -> Outcome {
    let mut worst_trace = 0.0f64;
    let mut literal_violation: Option<(f64, C64)> = None;
    for x in [vec![0.0, 0.5, 1.5], vec![0.0, 0.3, 1.0, 1.4], vec![0.0, 1.0 / SQRT_2, 1.0 / SQRT_2 + 1.0]] {
        let n = x.len() as f64;
        let min_gap = x.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        for i in 0..=400 {
            let k = i as f64 * 0.5;
            let spec = eigenvalues(&x, C64::new(k, 0.0), false).map_err(err)?;
            let tr: C64 = spec.eigenvalues.iter().sum();
            worst_trace = worst_trace.max((tr - n).norm());
            ensure!((tr - n).norm() <= 1e-9, "trace {tr} at k={k}");
            for l in &spec.eigenvalues {
                let rotated = l * C64::new(0.0, -1.0);
                ensure!(l.re >= -1e-9 && l.re <= n + 1e-9, "Re λ(Φ) = {} at k={k}", l.re);
                if literal_violation.is_none() && !(rotated.re >= -1e-9 && rotated.re <= n + 1e-9) {
                    literal_violation = Some((k, rotated));
                }
            }
            for eta in [0.1, 0.5, 1.0, 3.0] {
                let bound = (n - 1.0) * (-eta * min_gap).exp();
                let spec = eigenvalues(&x, C64::new(k, eta), false).map_err(err)?;
                for l in &spec.eigenvalues {
                    let d = (l * C64::new(0.0, -1.0) + C64::new(0.0, 1.0)).norm();
                    ensure!(d <= bound + 1e-9, "η-collapse violated at k={k}, η={eta}: {d} > {bound}");
                }
            }
        }
    }
    let spec = eigenvalues(&[0.0, 1.0, 2.0], C64::new(PI, 0.0), true).map_err(err)?;
    let mut re: Vec<f64> = spec.eigenvalues.iter().map(|l| l.re).collect();
    re.sort_by(f64::total_cmp);
    let expect = [0.0, 0.0, 3.0];
    ensure!(re.iter().zip(expect).all(|(a, b)| (a - b).abs() <= 1e-8), "spectrum {:?}", spec.eigenvalues);
    ensure!(spec.eigenvalues.iter().all(|l| l.im.abs() <= 1e-8), "complex spectrum {:?}", spec.eigenvalues);
    ensure!(spec.null_count(1e-8) == 2, "nullspace dimension {}", spec.null_count(1e-8));
    if let Some((k, l)) = literal_violation {
        println!(
            "NOTE     criterion 5: the box is asserted as 0 ≤ Re λ(Φ) ≤ n (equivalently −n ≤ Im λ(−iΦ) ≤ 0); \
             read literally on −iΦ it fails, e.g. λ(−iΦ) = {:.4}{:+.4}i at k = {k}",
            l.re, l.im
        );
    }
    Ok(format!("trace error ≤ {worst_trace:.1e}; box and η-collapse hold; κ=π spectrum {{0,0,3}} with 2-dim nullspace"))
}

fn bic_reproduction() -> Outcome {
    let mut lines = Vec::new();
    for nu in [1i32, 2] {
        let e = ((nu * nu) as f64 * PI * PI + 1.0).sqrt();
        let m = waveguide(1.0, 1.0, vec![0.0, 1.0], vec![e, e]).map_err(err)?;
        let r = bound_states(&m, (e - 0.3, e + 0.3), 61, Corrections::Neglect).map_err(err)?;
        ensure!(r.states.len() == 1, "ν={nu}: {} states", r.states.len());
        let s = &r.states[0];
        ensure!((s.z.re - e).abs() <= 1e-6, "ν={nu}: E = {} vs {e}", s.z.re);
        // Odd ν: Σ(−1)^j a_j = 0; even ν: Σ a_j = 0.
        let sign = if nu % 2 == 1 { -1.0 } else { 1.0 };
        for v in &s.nullspace {
            let c = v[0] * sign + v[1];
            ensure!(c.norm() <= 1e-8, "ν={nu}: constraint residual {:.3e}", c.norm());
        }
        lines.push(format!("E_{nu} = {:.10}", s.z.re));
    }
    Ok(lines.join(", "))
}

fn degeneracy_lifting() -> Outcome {
    let e1 = (PI * PI + 1.0).sqrt();
    let x = vec![0.0, 1.0, 2.0];
    let probe = waveguide(1.0, 1.0, x.clone(), vec![e1; 3]).map_err(err)?;
    let delta = dominant_split(&probe, e1).map_err(err)?.delta;
    let m = waveguide(1.0, 1.0, x, vec![e1 + delta.re; 3]).map_err(err)?;
    let scale = 1.0 + e1;
    let diag =
        singular_values(&characteristic_matrix(&m, C64::new(e1, 0.0), false, Corrections::DiagonalOnly).map_err(err)?);
    ensure!(diag[0] < 1e-10 * scale && diag[1] < 1e-10 * scale, "diagonal-only problem not degenerate: {diag:?}");
    let full = singular_values(&characteristic_matrix(&m, C64::new(e1, 0.0), false, Corrections::Full).map_err(err)?);
    ensure!(full[1] > 1e-10 * scale, "second singular value {:.3e} not lifted", full[1]);
    Ok(format!("σ₂ diagonal-only {:.1e} → full {:.3e}", diag[1], full[1]))
}

fn weak_coupling() -> Outcome {
    let mut errors = Vec::new();
    for g in [0.2, 0.1, 0.05] {
        let m = massless_flat(g, vec![0.0], vec![1.0]).map_err(err)?;
        let res = resonances(&m, &Region::new((0.0, 2.0), (-1.0, 0.1)), &[]);
        ensure!(res.roots.len() == 1, "g={g}: {} resonances", res.roots.len());
        let first = weak_coupling_resonances(&m, 1.0).map_err(err)?[0];
        errors.push((res.roots[0].z - first).norm());
    }
    let ratios: Vec<f64> = errors.windows(2).map(|w| w[0] / w[1]).collect();
    for r in &ratios {
        ensure!((12.0..=20.0).contains(r), "Richardson ratio {r:.3} (errors {errors:?})");
    }
    Ok(format!(
        "errors {:.2e}, {:.2e}, {:.2e}; ratios {:.3}, {:.3}",
        errors[0], errors[1], errors[2], ratios[0], ratios[1]
    ))
}

fn dynamics_cross_method() -> Outcome {
    let m = massless_flat(0.5, vec![0.0], vec![1.0]).map_err(err)?;
    let res = resonances(&m, &Region::new((0.0, 2.0), (-1.0, 0.1)), &[]);
    ensure!(res.roots.len() == 1, "{} resonances", res.roots.len());
    let gamma = 2.0 * res.roots[0].z.im.abs();
    let horizon = (3.0 / gamma).max(10.0);
    let dt = 0.05;
    let steps = (horizon / dt).ceil() as usize;
    let ts: Vec<f64> = (0..=steps).map(|i| (i as f64 * dt).min(horizon)).collect();
    let one = vec![C64::new(1.0, 0.0)];
    let grid = FieldGrid::graded(&m, &GridSpec { horizon, ..Default::default() }).map_err(err)?;
    let tr = evolve_ode(&m, &ExcitationState::atomic(one.clone(), &grid), &ts, &grid, &EvolveOptions::default())
        .map_err(err)?;
    let br = survival_amplitude_bromwich(&m, &one, &ts, &BromwichConfig::default()).map_err(err)?;
    let mut diff = 0.0f64;
    for (i, &t) in ts.iter().enumerate() {
        if t <= 10.0 {
            diff = diff.max((tr.survival[i] - br.values[i]).norm());
        }
    }
    let drift = tr.max_norm_drift();
    let peak = tr.survival.iter().chain(&br.values).map(|a| a.norm()).fold(0.0, f64::max);
    ensure!(diff <= 1e-3, "ODE vs Bromwich {diff:.3e}");
    ensure!(drift <= 1e-6, "norm drift {drift:.3e}");
    ensure!(peak <= 1.0 + 1e-6, "max |A| = {peak}");
    ensure!(tr.recurrence_time > horizon && !tr.grid_too_coarse, "grid echo at t = {:.2}", tr.recurrence_time);
    // Least-squares slope of ln|A|² over [1, 3/Γ].
    let pts: Vec<(f64, f64)> = ts
        .iter()
        .zip(&tr.survival)
        .filter(|(t, _)| **t >= 1.0 && **t <= 3.0 / gamma)
        .map(|(t, a)| (*t, a.norm_sqr().ln()))
        .collect();
    let nf = pts.len() as f64;
    let (st, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (t, y)| (a + t, b + y));
    let (mt, my) = (st / nf, sy / nf);
    let (num, den) = pts.iter().fold((0.0, 0.0), |(a, b), (t, y)| (a + (t - mt) * (y - my), b + (t - mt) * (t - mt)));
    let rate = -num / den;
    let rel = (rate - gamma).abs() / gamma;
    ensure!(rel <= 0.05, "fitted decay rate {rate:.5} vs 2|Im ẑ| = {gamma:.5}");
    Ok(format!(
        "max|ΔA| {diff:.1e} on [0,10], drift {drift:.1e}, max|A| {peak:.9}, echo time {:.0}, decay {rate:.5} vs {gamma:.5} ({:.1}%), horizon {horizon:.2}",
        tr.recurrence_time,
        100.0 * rel
    ))
}

fn pole_tracking() -> Outcome {
    let mut rng = StdRng::seed_from_u64(10);
    let models: [(Model, f64); 2] = [
        (waveguide(1.0, 2.0 * PI, vec![0.0], vec![1.0]).map_err(err)?, 0.05),
        (massless_flat(1.0, vec![0.0], vec![1.0]).map_err(err)?, -3.0),
    ];
    let mut steps = 0usize;
    for p in 0..100 {
        let (m, re_min) = &models[p % 2];
        let mut pts: Vec<C64> =
            (0..4).map(|_| C64::new(rng.gen_range(*re_min..5.0), rng.gen_range(0.01..3.0))).collect();
        let start = pts.remove(0);
        let k0 = complex_solutions(m, start).map_err(err)?.solutions[0];
        let mut path = Vec::new();
        let mut from = start;
        for q in pts {
            path.extend(straight_path(from, q, 100));
            from = q;
        }
        let tracked = track_solution(m, (start, k0), &path).map_err(err)?;
        ensure!(k0.im > 0.0, "path {p}: initial Im κ̂ = {}", k0.im);
        ensure!(tracked.momenta.iter().all(|k| k.im > 0.0), "path {p}: Im κ̂ changed sign");
        steps += tracked.momenta.len();
    }
    let mut worst = 0.0f64;
    for (m, _) in &models {
        for e0 in [0.3, 1.2, 2.5, 4.0] {
            let z0 = C64::new(e0, 2.5);
            let k0 = complex_solutions(m, z0).map_err(err)?.solutions[0];
            let tracked = track_solution(m, (z0, k0), &straight_path(z0, C64::new(e0, 1e-3), 250)).map_err(err)?;
            for u in &tracked.u {
                worst = worst.max((u - e0).abs());
            }
        }
    }
    ensure!(worst <= 1e-9, "equipotential deviation {worst:.3e}");
    Ok(format!("100 random paths ({steps} steps) keep Im κ̂ > 0; equipotential deviation ≤ {worst:.1e}"))
}

fn write_sweep(name: &str, positions: &[f64], eta: f64) -> Result<friedrichs::phase::Trajectory<f64>, String> {
    let traj = trajectory_sweep(positions, &SweepConfig::new(0.0, 200.0, 0.02, eta)).map_err(err)?;
    let path = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join(format!("{name}.csv"));
    std::fs::write(&path, traj.to_csv()).map_err(err)?;
    Ok(traj)
}

fn figure_closure() -> Outcome {
    // Gap ratios x = 0.5 (three atoms), η = 0.1π, and x = x' = 1/3 (four atoms).
    let cases: [(&str, Vec<f64>, f64); 3] = [
        ("fig1_x0.5", vec![0.0, 0.5, 1.5], 0.0),
        ("fig2_x0.1_eta0.1pi", vec![0.0, 0.1, 1.1], 0.1 * PI),
        ("fig3_x1_3_x1_3", vec![0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0], 0.0),
    ];
    let mut out = Vec::new();
    for (name, x, eta) in cases {
        let period = commensurate_period(&x, 64, 1e-12).ok_or(format!("{name}: no period"))?;
        let traj = write_sweep(name, &x, eta)?;
        if eta == 0.0 {
            println!("NOTE     {name}: unit-circle margin about −i (diagnostic) {:.3e}", disc_exclusion_margin(&traj));
        }
        for k in [0.0, 0.77, 3.1, 25.0] {
            ensure!(closes_after(&x, k, eta, period, 1e-6).map_err(err)?, "{name}: no closure at k={k}");
        }
        let steps = (period / 0.02).round() as usize;
        if (steps as f64 * 0.02 - period).abs() < 1e-9 && steps < traj.ks.len() {
            let d = friedrichs::phase::spectral_distance(&traj.spectrum_at(0), &traj.spectrum_at(steps));
            ensure!(d <= 1e-6, "{name}: sweep returns within {d:.3e}");
        }
        out.push(format!("{name} period {period:.6}"));
    }
    Ok(out.join(", "))
}

fn figure_non_closure() -> Outcome {
    let mut out = Vec::new();
    for (name, x) in [
        ("fig1_x1_sqrt2", vec![0.0, 1.0 / SQRT_2, 1.0 / SQRT_2 + 1.0]),
        ("fig3_x1_sqrt5_x1_sqrt7", {
            let (a, b) = (1.0 / 5f64.sqrt(), 1.0 / 7f64.sqrt());
            vec![0.0, a, a + b, 1.0]
        }),
    ] {
        ensure!(commensurate_period(&x, 64, 1e-12).is_none(), "{name}: spurious period");
        let traj = write_sweep(name, &x, 0.0)?;
        let d = min_return_distance(&traj, 0, 1.0);
        ensure!(d > 1e-6, "{name}: returns within {d:.3e}");
        out.push(format!("{name} min return distance {d:.2e}"));
    }
    Ok(out.join(", "))
}

fn main() {
    let criteria: Vec<Criterion> = vec![
        ("1 decomposed vs direct self-energy", oracle_equivalence),
        ("2 waveguide scalar benchmark", waveguide_benchmark),
        ("3 waveguide normalization", normalization),
        ("4 recurrence vs LU determinant", recurrence_vs_lu),
        ("5 phase-spectrum properties", phase_spectrum),
        ("6 bound states in the continuum", bic_reproduction),
        ("7 degeneracy lifting", degeneracy_lifting),
        ("8 weak-coupling scaling", weak_coupling),
        ("9 dynamics cross-method", dynamics_cross_method),
        ("10 pole-tracking invariants", pole_tracking),
        ("F trajectory closure", figure_closure),
        ("F trajectory non-closure", figure_non_closure),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default())
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS     {name}: {detail} [{secs:.1} s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL     {name}: {detail} [{secs:.1} s]");
            }
        }
    }
    println!("trajectory CSVs written to {}", env!("CARGO_TARGET_TMPDIR"));
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
