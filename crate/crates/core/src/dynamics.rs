//! Single-excitation dynamics.
//!
//! Three routes to the survival amplitude `𝒜(t) = ⟨ψ₀|ψ(t)⟩`:
//! direct integration of the discretized atom–field system, Bromwich
//! inversion of the Fourier–Laplace solution along `Im z = δ`, and a
//! decomposition into resonance exponentials plus a remainder.
//!
//! Laplace convention: `â(z) = i∫₀^∞ a(t) e^{izt} dt`, for which
//! `â(z) = [ℰ − zI − Σ(z)]^{−1}[a₀ − ∫ξ₀(k)F(k)/(ω(k) − z) dk]` and
//! `a(t) = (1/2πi)∫_{Im z = δ} â(z) e^{−izt} dz`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dispersion_analysis::real_solutions;
use crate::error::{Error, Result};
use crate::linalg::{singular_values, Lu};
use crate::model::{ContourKind, Model};
use crate::ode::{dormand_prince_observed, OdeConfig, OdeError, OdeStats};
use crate::quadrature::{gauss_legendre, integrate_to_infinity, oscillatory_tail, QuadConfig};
use crate::self_energy::{sigma_continuation, sigma_physical};
use crate::{CMatrix64, C64};

/// Symmetric momentum grid with quadrature weights.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldGrid {
    pub k: Vec<f64>,
    pub w: Vec<f64>,
}

/// Panel layout for [`FieldGrid::graded`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    /// Momentum cutoff `K`; modes with `|k| > K` enter only through a static
    /// self-energy shift.
    pub cutoff: f64,
    /// Time horizon the grid has to resolve.
    pub horizon: f64,
    /// Largest phase `|ω′(k)|·h·T` accumulated across one panel.
    pub panel_phase: f64,
    pub nodes_per_panel: usize,
    pub max_panel: f64,
    /// Half-width of the refined window around each resonant momentum.
    pub resonance_window: f64,
    pub resonance_panel: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            cutoff: 10.0,
            horizon: 10.0,
            panel_phase: 2.0 * PI,
            nodes_per_panel: 8,
            max_panel: 0.1,
            resonance_window: 0.5,
            resonance_panel: 0.02,
        }
    }
}

impl FieldGrid {
    /// Composite trapezoid on `n ≥ 2` equispaced points of `[−k_max, k_max]`.
    pub fn uniform(k_max: f64, n: usize) -> Result<Self> {
        if n < 2 || k_max <= 0.0 {
            return Err(Error::InvalidInput("uniform grid needs k_max > 0 and at least 2 points".into()));
        }
        let h = 2.0 * k_max / (n - 1) as f64;
        let k = (0..n).map(|i| -k_max + h * i as f64).collect();
        let mut w = vec![h; n];
        w[0] *= 0.5;
        w[n - 1] *= 0.5;
        Ok(FieldGrid { k, w })
    }

    /// Gauss–Legendre panels on `[0, K]` mirrored to `[−K, 0]`, refined
    /// where `ω` varies fast (so a panel never accumulates more than
    /// `panel_phase` over the horizon) and around the real solutions of
    /// `ω(k) = ε_j`.
    pub fn graded(model: &Model, spec: &GridSpec) -> Result<Self> {
        if !(spec.cutoff > 0.0 && spec.horizon > 0.0 && spec.panel_phase > 0.0 && spec.max_panel > 0.0)
            || spec.nodes_per_panel == 0
            || spec.resonance_panel <= 0.0
        {
            return Err(Error::InvalidInput("grid spec entries must be positive".into()));
        }
        let mut centers: Vec<f64> = Vec::new();
        for &e in model.atoms().energies() {
            for k in real_solutions(model, e, Some((0.0, spec.cutoff))).unwrap_or_default() {
                if k > 0.0 {
                    centers.push(k);
                }
            }
        }
        let width = |k: f64| {
            let slope = model.omega_prime(C64::new(k, 0.0)).norm();
            let mut h = spec.max_panel.min(spec.panel_phase / (slope * spec.horizon).max(1e-300));
            if centers.iter().any(|c| (k - c).abs() < spec.resonance_window) {
                h = h.min(spec.resonance_panel);
            }
            h
        };
        let mut edges = vec![0.0];
        let mut k = 0.0;
        while k < spec.cutoff {
            let h0 = width(k);
            let h = h0.min(width((k + h0).min(spec.cutoff)));
            k = (k + h).min(spec.cutoff);
            if spec.cutoff - k < 1e-12 * spec.cutoff {
                k = spec.cutoff;
            }
            edges.push(k);
        }
        let (x, wq) = gauss_legendre::<f64>(spec.nodes_per_panel);
        let mut pos_k = Vec::new();
        let mut pos_w = Vec::new();
        for e in edges.windows(2) {
            let (mid, half) = (0.5 * (e[0] + e[1]), 0.5 * (e[1] - e[0]));
            for (xi, wi) in x.iter().zip(&wq) {
                pos_k.push(mid + half * xi);
                pos_w.push(half * wi);
            }
        }
        let mut k: Vec<f64> = pos_k.iter().rev().map(|v| -v).collect();
        let mut w: Vec<f64> = pos_w.iter().rev().copied().collect();
        k.extend(pos_k);
        w.extend(pos_w);
        Ok(FieldGrid { k, w })
    }

    pub fn len(&self) -> usize {
        self.k.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k.is_empty()
    }

    pub fn cutoff(&self) -> f64 {
        self.k.iter().map(|k| k.abs()).fold(0.0, f64::max)
    }

    /// `2π/Δω_max`, with `Δω_max` the largest frequency spacing between
    /// adjacent positive nodes within `window` of `k_center`: the earliest
    /// time a discretization echo of the resonance can appear.
    pub fn recurrence_time(&self, model: &Model, k_center: f64, window: f64) -> f64 {
        let mut worst: f64 = 0.0;
        let pos: Vec<f64> = self.k.iter().copied().filter(|k| *k > 0.0).collect();
        for p in pos.windows(2) {
            if (p[0] - k_center).abs() <= window {
                let d = (model.omega(C64::new(p[1], 0.0)) - model.omega(C64::new(p[0], 0.0))).norm();
                worst = worst.max(d);
            }
        }
        if worst == 0.0 {
            f64::INFINITY
        } else {
            2.0 * PI / worst
        }
    }
}

/// Atomic amplitudes and field samples `ξ(k_i)` on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ExcitationState {
    pub a: Vec<C64>,
    pub field: Vec<C64>,
}

impl ExcitationState {
    /// Purely atomic state with an empty field.
    pub fn atomic(a: Vec<C64>, grid: &FieldGrid) -> Self {
        ExcitationState { a, field: vec![C64::new(0.0, 0.0); grid.len()] }
    }

    pub fn with_field(a: Vec<C64>, grid: &FieldGrid, xi: impl Fn(f64) -> C64) -> Self {
        ExcitationState { a, field: grid.k.iter().map(|&k| xi(k)).collect() }
    }

    /// `Σ|a_j|² + Σ w_i|ξ_i|²`.
    pub fn norm(&self, grid: &FieldGrid) -> f64 {
        self.a.iter().map(|a| a.norm_sqr()).sum::<f64>()
            + self.field.iter().zip(&grid.w).map(|(x, w)| w * x.norm_sqr()).sum::<f64>()
    }

    /// `⟨self|other⟩` with the grid weights.
    pub fn overlap(&self, other: &ExcitationState, grid: &FieldGrid) -> C64 {
        self.a.iter().zip(&other.a).map(|(x, y)| x.conj() * y).sum::<C64>()
            + self.field.iter().zip(&other.field).zip(&grid.w).map(|((x, y), w)| x.conj() * y * *w).sum::<C64>()
    }
}

/// Gaussian packet `A·exp(−(k − k₀)²/(4σ²) − ikx₀)`.
pub fn gaussian_packet(amplitude: C64, k0: f64, sigma: f64, x0: f64) -> impl Fn(f64) -> C64 {
    move |k| amplitude * (C64::new(-(k - k0).powi(2) / (4.0 * sigma * sigma), -k * x0)).exp()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvolveOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Replace `ℰ` by `ℰ − ∫_{|k|>K} F F†/(ω − ε̄) dk`, the level shift from
    /// the modes beyond the cutoff.
    pub tail_shift: bool,
    /// Keep the field at every output time.
    pub keep_field: bool,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions { rel_tol: 1e-10, abs_tol: 1e-12, tail_shift: true, keep_field: false }
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub atoms: Vec<Vec<C64>>,
    /// Overlap with the initial state.
    pub survival: Vec<C64>,
    pub norm: Vec<f64>,
    pub fields: Option<Vec<Vec<C64>>>,
    pub final_state: ExcitationState,
    pub tail_shift: CMatrix64,
    /// Earliest discretization echo of the resonant modes, `2π/Δω`.
    pub recurrence_time: f64,
    /// Norm drift exceeded ten times the tolerance, or an echo can reach
    /// the last output time.
    pub grid_too_coarse: bool,
    pub stats: OdeStats,
}

impl Trajectory {
    pub fn max_norm_drift(&self) -> f64 {
        let n0 = self.norm.first().copied().unwrap_or(0.0);
        self.norm.iter().map(|n| (n - n0).abs()).fold(0.0, f64::max)
    }

    /// CSV with header `t,re,im,abs2,norm`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,re,im,abs2,norm\n");
        for i in 0..self.times.len() {
            let a = self.survival[i];
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                fmt17(self.times[i]),
                fmt17(a.re),
                fmt17(a.im),
                fmt17(a.norm_sqr()),
                fmt17(self.norm[i])
            ));
        }
        s
    }
}

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Static self-energy of the modes beyond the cutoff, evaluated at `e`.
pub fn tail_self_energy(model: &Model, cutoff: f64, e: f64) -> Result<CMatrix64> {
    let w_cut = model.omega(C64::new(cutoff, 0.0)).re;
    let slope = model.omega_prime(C64::new(cutoff, 0.0)).re;
    if w_cut <= e || slope <= 0.0 {
        return Err(Error::InvalidInput(format!("cutoff {cutoff} does not lie above the resonance at {e}")));
    }
    let x = model.atoms().positions();
    let n = x.len();
    let cfg = QuadConfig::new(1e-14, 1e-12);
    let mut out = CMatrix64::zeros(n, n);
    for j in 0..n {
        for l in j..n {
            let d = (x[j] - x[l]).abs();
            let f = |k: f64| {
                let kc = C64::new(k, 0.0);
                model.g(kc) * 2.0 * (k * d).cos() / (model.omega(kc).re - e)
            };
            let v = if d == 0.0 {
                integrate_to_infinity(f, cutoff, &cfg)?.value
            } else {
                oscillatory_tail(f, cutoff, PI / d, &cfg)?.value
            };
            out[(j, l)] = v;
            out[(l, j)] = v;
        }
    }
    Ok(out)
}

/// Smallest [`FieldGrid::recurrence_time`] around the real momenta of each
/// `ε_j`; infinite when no `ε_j` lies in the continuum.
pub fn echo_time(model: &Model, grid: &FieldGrid, window: f64) -> f64 {
    let mut best = f64::INFINITY;
    for &e in model.atoms().energies() {
        for k in real_solutions(model, e, None).unwrap_or_default() {
            best = best.min(grid.recurrence_time(model, k.abs(), window));
        }
    }
    best
}

/// Integrates `i ȧ = ℰa + Σ_i w_i F(k_i) ξ_i`, `i ξ̇_i = ω(k_i) ξ_i + F(k_i)†a`
/// with Dormand–Prince 5(4). The field is carried as `η_i = e^{iω_i t}√w_i ξ_i`
/// so the explicit steps are not limited by the largest grid frequency.
pub fn evolve_ode(
    model: &Model,
    initial: &ExcitationState,
    t_grid: &[f64],
    grid: &FieldGrid,
    opts: &EvolveOptions,
) -> Result<Trajectory> {
    let n = model.n();
    let m = grid.len();
    if initial.a.len() != n || initial.field.len() != m {
        return Err(Error::InvalidInput("initial state does not match the model and grid".into()));
    }
    if t_grid.is_empty() || t_grid[0] < 0.0 || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("time grid must be nonempty, nonnegative and increasing".into()));
    }
    let x = model.atoms().positions().to_vec();
    let omega: Vec<f64> = grid.k.iter().map(|&k| model.omega(C64::new(k, 0.0)).re).collect();
    // v[i·n + j] = √w_i F_j(k_i), F_j(k) = f(k) e^{ikx_j}.
    let mut v = vec![C64::new(0.0, 0.0); m * n];
    for i in 0..m {
        let f = model.form_factor().profile(grid.k[i]) * grid.w[i].sqrt();
        for j in 0..n {
            v[i * n + j] = f * C64::new(0.0, grid.k[i] * x[j]).exp();
        }
    }
    let mut h_atom = model.atoms().energy_matrix();
    let tail = if opts.tail_shift && model.form_factor().coupling() != 0.0 {
        let e_ref = model.atoms().energies().iter().sum::<f64>() / n as f64;
        tail_self_energy(model, grid.cutoff(), e_ref)?
    } else {
        CMatrix64::zeros(n, n)
    };
    h_atom -= &tail;
    let mut y0 = initial.a.clone();
    for i in 0..m {
        y0.push(initial.field[i] * grid.w[i].sqrt());
    }
    let zeta0: Vec<C64> = y0.clone();
    let rhs = |t: f64, y: &[C64], dy: &mut [C64]| {
        let (a, eta) = y.split_at(n);
        let (da, deta) = dy.split_at_mut(n);
        for j in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            for l in 0..n {
                acc += h_atom[(j, l)] * a[l];
            }
            da[j] = acc;
        }
        for i in 0..m {
            let (sn, cs) = (omega[i] * t).sin_cos();
            let ph = C64::new(cs, sn);
            let vi = &v[i * n..(i + 1) * n];
            let zeta = eta[i] * ph.conj();
            let mut src = C64::new(0.0, 0.0);
            for j in 0..n {
                da[j] += vi[j] * zeta;
                src += vi[j].conj() * a[j];
            }
            deta[i] = -C64::i() * ph * src;
        }
        for d in da.iter_mut() {
            *d *= -C64::i();
        }
    };
    let mut cfg = OdeConfig::new(opts.rel_tol, opts.abs_tol);
    cfg.max_steps = 50_000_000;
    let t0 = 0.0;
    let mut atoms = Vec::with_capacity(t_grid.len());
    let mut survival = Vec::with_capacity(t_grid.len());
    let mut norms = Vec::with_capacity(t_grid.len());
    let mut fields = opts.keep_field.then(Vec::new);
    let mut last = Vec::new();
    // The interaction picture starts at t = 0 with η(0) = √w ξ₀.
    let observe = |_: usize, t: f64, y: &[C64]| {
        let (a, eta) = y.split_at(n);
        let zeta: Vec<C64> = eta.iter().zip(&omega).map(|(e, w)| e * C64::new(0.0, -w * t).exp()).collect();
        let mut s: C64 = initial.a.iter().zip(a).map(|(p, q)| p.conj() * q).sum();
        s += zeta0[n..].iter().zip(&zeta).map(|(p, q)| p.conj() * q).sum::<C64>();
        survival.push(s);
        norms.push(y.iter().map(|c| c.norm_sqr()).sum());
        atoms.push(a.to_vec());
        if let Some(f) = fields.as_mut() {
            f.push(zeta.iter().zip(&grid.w).map(|(z, w)| z / w.sqrt()).collect());
        }
        last = zeta.iter().zip(&grid.w).map(|(z, w)| z / w.sqrt()).collect();
    };
    let stats = dormand_prince_observed(rhs, t0, &y0, t_grid, &cfg, observe).map_err(|e| match e {
        OdeError::StepUnderflow(t) | OdeError::StepLimit { t, .. } => Error::IntegratorStepUnderflow(t),
        OdeError::BadOutputTimes => Error::InvalidInput("bad output times".into()),
    })?;
    let initial_norm = initial.norm(grid);
    let drift = norms.iter().map(|v: &f64| (v - initial_norm).abs()).fold(0.0, f64::max);
    let echo = echo_time(model, grid, GridSpec::default().resonance_window);
    let final_state = ExcitationState { a: atoms.last().cloned().unwrap_or_default(), field: last };
    Ok(Trajectory {
        times: t_grid.to_vec(),
        atoms,
        survival,
        norm: norms,
        fields,
        final_state,
        tail_shift: tail,
        recurrence_time: echo,
        grid_too_coarse: drift > 10.0 * opts.rel_tol.max(opts.abs_tol) || echo <= t_grid[t_grid.len() - 1],
        stats,
    })
}

fn source_integral(model: &Model, xi0: &dyn Fn(f64) -> C64, z: C64) -> Result<Vec<C64>> {
    let x = model.atoms().positions();
    let cfg = QuadConfig::new(1e-12, 1e-10);
    x.iter()
        .map(|&xj| {
            let f = |k: f64| {
                let kc = C64::new(k, 0.0);
                xi0(k) * model.form_factor().profile(k) * C64::new(0.0, k * xj).exp() / (model.omega(kc) - z)
            };
            let right = integrate_to_infinity(f, 0.0, &cfg)?.value;
            let left = integrate_to_infinity(|k: f64| f(-k), 0.0, &cfg)?.value;
            Ok(right + left)
        })
        .collect()
}

/// `[ℰ − zI − Σ(z)]^{−1}[a₀ − ∫ξ₀(k)F(k)/(ω(k) − z) dk]` for `Im z > 0`.
pub fn resolvent_amplitude(model: &Model, a0: &[C64], xi0: Option<&dyn Fn(f64) -> C64>, z: C64) -> Result<Vec<C64>> {
    if z.im <= 0.0 {
        return Err(Error::InvalidInput("the resolvent amplitude needs Im z > 0".into()));
    }
    let n = model.n();
    if a0.len() != n {
        return Err(Error::InvalidInput("initial amplitudes do not match the model".into()));
    }
    let mut m = model.atoms().energy_matrix() - sigma_physical(model, z)?.matrix;
    for i in 0..n {
        m[(i, i)] -= z;
    }
    let s = singular_values(&m);
    let cond = s[n - 1] / s[0];
    if !(cond <= 1e12) {
        return Err(Error::NearSingular(cond));
    }
    let mut rhs = a0.to_vec();
    if let Some(xi) = xi0 {
        for (r, s) in rhs.iter_mut().zip(source_integral(model, xi, z)?) {
            *r -= s;
        }
    }
    Lu::new(&m).solve(&rhs).ok_or(Error::NearSingular(f64::INFINITY))
}

/// `i∫ a(t) e^{izt} dt` over the samples by the trapezoid rule, the forward
/// transform matching [`resolvent_amplitude`].
pub fn forward_laplace(times: &[f64], samples: &[C64], z: C64) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for i in 1..times.len() {
        let h = times[i] - times[i - 1];
        let f0 = samples[i - 1] * (C64::i() * z * times[i - 1]).exp();
        let f1 = samples[i] * (C64::i() * z * times[i]).exp();
        acc += (f0 + f1) * (0.5 * h);
    }
    C64::i() * acc
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BromwichConfig {
    /// Contour height; defaults to half the spectral gap scale, clamped to `[1e−3, 1]`.
    pub delta: Option<f64>,
    /// Truncation `|Re z| ≤ R`.
    pub half_width: f64,
    /// Trapezoid step; defaults to `min(π/(4 t_max), δ/4)`.
    pub step: Option<f64>,
    pub tolerance: f64,
}

impl Default for BromwichConfig {
    fn default() -> Self {
        BromwichConfig { delta: None, half_width: 4000.0, step: None, tolerance: 1e-4 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BromwichResult {
    pub times: Vec<f64>,
    pub values: Vec<C64>,
    pub delta: f64,
    pub step: f64,
    pub nodes: usize,
    /// Largest estimated contribution from `|Re z| > R`.
    pub tail_estimate: f64,
}

/// `0.5·s` clamped to `[1e−3, 1]`, where `s` is the smallest nonzero
/// distance among the atomic energies and the bottom of the band.
pub fn default_delta(model: &Model) -> f64 {
    let eps = model.atoms().energies();
    let bottom = model.dispersion().minimum();
    let mut s = f64::INFINITY;
    for (i, a) in eps.iter().enumerate() {
        let d = (a - bottom).abs();
        if d > 0.0 {
            s = s.min(d);
        }
        for b in &eps[i + 1..] {
            let d = (a - b).abs();
            if d > 0.0 {
                s = s.min(d);
            }
        }
    }
    if !s.is_finite() {
        s = 1.0;
    }
    (0.5 * s).clamp(1e-3, 1.0)
}

fn resolvent_quadratic(model: &Model, a0: &[C64], z: C64, continued: bool) -> Result<C64> {
    let n = model.n();
    let sigma = if continued && z.im < 0.0 { sigma_continuation(model, z)? } else { sigma_physical(model, z)? };
    let mut m = model.atoms().energy_matrix() - sigma.matrix;
    for i in 0..n {
        m[(i, i)] -= z;
    }
    let x = Lu::new(&m).solve(a0).ok_or(Error::NearSingular(f64::INFINITY))?;
    Ok(a0.iter().zip(&x).map(|(p, q)| p.conj() * q).sum())
}

/// `𝒜(t) = (1/2πi)∫ a₀†[ℰ − zI − Σ(z)]^{−1}a₀ e^{−izt} dz` along
/// `Im z = δ`. The free resolvent `a₀†(ℰ − zI)^{−1}a₀` is inverted exactly
/// and only the remainder, decaying like `|z|^{−2}`, is summed numerically.
pub fn survival_amplitude_bromwich(
    model: &Model,
    a0: &[C64],
    t_grid: &[f64],
    cfg: &BromwichConfig,
) -> Result<BromwichResult> {
    let n = model.n();
    if a0.len() != n {
        return Err(Error::InvalidInput("initial amplitudes do not match the model".into()));
    }
    if t_grid.is_empty() || t_grid.iter().any(|t| *t < 0.0 || !t.is_finite()) {
        return Err(Error::InvalidInput("time grid must be nonempty and nonnegative".into()));
    }
    let delta = cfg.delta.unwrap_or_else(|| default_delta(model));
    if !(delta > 0.0) || !(cfg.half_width > 0.0) {
        return Err(Error::InvalidInput("Bromwich height and half-width must be positive".into()));
    }
    let t_max = t_grid.iter().copied().fold(0.0, f64::max).max(1.0);
    let h = cfg.step.unwrap_or((PI / (4.0 * t_max)).min(delta / 4.0));
    let half = (cfg.half_width / h).ceil() as i64;
    let eps = model.atoms().energies();
    let weights: Vec<f64> = a0.iter().map(|a| a.norm_sqr()).collect();
    let xs: Vec<f64> = (-half..=half).map(|i| i as f64 * h).collect();
    let rem: Vec<C64> = xs
        .par_iter()
        .map(|&x| {
            let z = C64::new(x, delta);
            let full = resolvent_quadratic(model, a0, z, false)?;
            let free: C64 = weights.iter().zip(eps).map(|(w, e)| *w / (e - z)).sum();
            Ok(full - free)
        })
        .collect::<Result<_>>()?;
    let edge = rem[0].norm() + rem[rem.len() - 1].norm();
    let values: Vec<C64> = t_grid
        .par_iter()
        .map(|&t| {
            let mut acc = C64::new(0.0, 0.0);
            for (x, r) in xs.iter().zip(&rem) {
                acc += r * C64::new(delta * t, -x * t).exp();
            }
            let free: C64 = weights.iter().zip(eps).map(|(w, e)| C64::new(0.0, -e * t).exp() * *w).sum();
            free + acc * h / (2.0 * PI * C64::i())
        })
        .collect();
    let tail_estimate = (delta * t_max).exp() / (2.0 * PI) * cfg.half_width * edge;
    if tail_estimate > cfg.tolerance {
        return Err(Error::TruncationDominated { estimate: tail_estimate, tolerance: cfg.tolerance });
    }
    Ok(BromwichResult { times: t_grid.to_vec(), values, delta, step: h, nodes: xs.len(), tail_estimate })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModeDecomposition {
    pub poles: Vec<C64>,
    pub weights: Vec<C64>,
    pub radii: Vec<f64>,
    pub times: Vec<f64>,
    pub bromwich: Vec<C64>,
    /// `𝒜_bromwich(t) − Σ_s W_s e^{−iẑ_s t}`.
    pub remainder: Vec<C64>,
}

impl ModeDecomposition {
    pub fn pole_part(&self, t: f64) -> C64 {
        self.poles.iter().zip(&self.weights).map(|(z, w)| w * (-C64::i() * z * t).exp()).sum()
    }
}

fn default_radius(model: &Model, pole: C64, others: &[C64]) -> f64 {
    let mut r: f64 = 0.1 * (1.0 + pole.norm());
    if pole.im < 0.0 {
        r = r.min(0.5 * pole.im.abs());
    } else if model.form_factor().coupling() != 0.0 {
        r = r.min(0.5 * (model.dispersion().minimum() - pole.re).abs());
    }
    for o in others {
        if *o != pole {
            r = r.min(0.25 * (o - pole).norm());
        }
    }
    r
}

fn check_circle(model: &Model, pole: C64, rho: f64) -> Result<()> {
    if model.form_factor().coupling() == 0.0 {
        return Ok(());
    }
    if pole.im.abs() < rho {
        let half = (rho * rho - pole.im * pole.im).sqrt();
        if pole.re + half >= model.dispersion().minimum() {
            return Err(Error::PoleCircleCrossesCut { pole, reason: "circle meets the real continuum".into() });
        }
    }
    if matches!(model.contour(), ContourKind::WaveguideCut { .. }) && pole.re.abs() <= rho {
        return Err(Error::PoleCircleCrossesCut { pole, reason: "circle meets the imaginary-axis cut".into() });
    }
    Ok(())
}

/// Weights `W_s = −Res_{ẑ_s} a₀†[ℰ − zI − Σ^{II}(z)]^{−1}a₀` from a 64-point
/// circle of radius `ρ_s`, and the remainder against the Bromwich amplitude.
pub fn mode_decompose(
    model: &Model,
    a0: &[C64],
    poles: &[C64],
    t_grid: &[f64],
    cfg: &BromwichConfig,
    radius: Option<f64>,
) -> Result<ModeDecomposition> {
    let points = 64;
    let mut weights = Vec::with_capacity(poles.len());
    let mut radii = Vec::with_capacity(poles.len());
    for &p in poles {
        let rho = radius.unwrap_or_else(|| default_radius(model, p, poles));
        check_circle(model, p, rho)?;
        let vals: Vec<C64> = (0..points)
            .into_par_iter()
            .map(|k| {
                let e = C64::new(0.0, 2.0 * PI * k as f64 / points as f64).exp();
                Ok(resolvent_quadratic(model, a0, p + e * rho, true)? * e)
            })
            .collect::<Result<_>>()?;
        let sum: C64 = vals.iter().sum();
        weights.push(-sum * rho / points as f64);
        radii.push(rho);
    }
    let br = survival_amplitude_bromwich(model, a0, t_grid, cfg)?;
    let mut dec = ModeDecomposition {
        poles: poles.to_vec(),
        weights,
        radii,
        times: br.times.clone(),
        bromwich: br.values.clone(),
        remainder: Vec::new(),
    };
    dec.remainder = br.times.iter().zip(&br.values).map(|(t, a)| a - dec.pole_part(*t)).collect();
    Ok(dec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::massless_flat;

    #[test]
    fn graded_grid_integrates_smooth_functions() {
        let m = massless_flat(0.3, vec![0.0], vec![1.0]).unwrap();
        let g = FieldGrid::graded(&m, &GridSpec { cutoff: 5.0, horizon: 2.0, ..Default::default() }).unwrap();
        let s: f64 = g.k.iter().zip(&g.w).map(|(k, w)| w * (-k * k).exp()).sum();
        assert!((s - PI.sqrt()).abs() < 1e-10);
        assert!(g.k.windows(2).all(|p| p[1] > p[0]));
        assert!((g.k[0] + g.k[g.len() - 1]).abs() < 1e-14);
    }

    #[test]
    fn zero_coupling_evolution() {
        let m = massless_flat(0.0, vec![0.0], vec![1.0]).unwrap();
        let g = FieldGrid::uniform(3.0, 11).unwrap();
        let ts: Vec<f64> = (0..=10).map(|i| i as f64).collect();
        let tr =
            evolve_ode(&m, &ExcitationState::atomic(vec![C64::new(1.0, 0.0)], &g), &ts, &g, &EvolveOptions::default())
                .unwrap();
        for (t, a) in ts.iter().zip(&tr.survival) {
            assert!((a - C64::new(0.0, -t).exp()).norm() < 1e-8);
        }
        let br = survival_amplitude_bromwich(&m, &[C64::new(1.0, 0.0)], &ts, &BromwichConfig::default()).unwrap();
        for (t, a) in ts.iter().zip(&br.values) {
            assert!((a - C64::new(0.0, -t).exp()).norm() < 1e-12);
        }
    }
}
