//! Solutions `κ̂_s(z)` of `ω(κ) = z`: real roots, complex solution sets with
//! family labels, critical points of `ω` and predictor-corrector tracking of
//! a solution along a path of energies.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Model;
use crate::C64;

/// Family of a solution at real energy: `Plus` for `Im κ̂ > 0`, `Zero` for
/// real `κ̂`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    Plus,
    Zero,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionSet {
    pub z: C64,
    /// One representative per `±κ̂` pair: `Im κ̂ > 0`, or `Re κ̂ > 0` when real.
    pub solutions: Vec<C64>,
    /// Family tags; populated only when `z` is real.
    pub families: Option<Vec<Family>>,
}

impl SolutionSet {
    pub fn len(&self) -> usize {
        self.solutions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.solutions.is_empty()
    }

    fn family_members(&self, fam: Family) -> Vec<C64> {
        match &self.families {
            Some(tags) => self.solutions.iter().zip(tags).filter(|(_, t)| **t == fam).map(|(k, _)| *k).collect(),
            None => Vec::new(),
        }
    }

    /// Real solutions (`I⁰`) at real energy.
    pub fn zero_family(&self) -> Vec<C64> {
        self.family_members(Family::Zero)
    }

    /// Upper half-plane solutions (`I⁺`) at real energy.
    pub fn plus_family(&self) -> Vec<C64> {
        self.family_members(Family::Plus)
    }
}

/// Axis-aligned rectangle in the complex plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub re: (f64, f64),
    pub im: (f64, f64),
}

impl Region {
    pub fn new(re: (f64, f64), im: (f64, f64)) -> Self {
        Region { re, im }
    }

    /// Search box for critical points: a square of half-width
    /// `5·(1 + |cut anchors|)` around the origin.
    pub fn default_for(model: &Model) -> Self {
        let scale = model.upper_cuts().iter().map(|c| c.anchor.norm()).fold(1.0, f64::max);
        let h = 5.0 * scale;
        Region { re: (-h, h), im: (-h, h) }
    }

    pub fn contains(&self, z: C64) -> bool {
        z.re >= self.re.0 && z.re <= self.re.1 && z.im >= self.im.0 && z.im <= self.im.1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub kappa: C64,
    pub value: C64,
    /// Multiplicity of `κ₀` as a root of `ω(κ) − ω(κ₀)`.
    pub order: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CriticalSet {
    pub points: Vec<CriticalPoint>,
}

impl CriticalSet {
    pub fn values(&self) -> Vec<C64> {
        self.points.iter().map(|p| p.value).collect()
    }
}

/// Tolerance below which `z` counts as a critical value.
pub fn collision_tolerance(value: C64) -> f64 {
    1e-6 * (1.0 + value.norm())
}

fn residual_tolerance(z: C64) -> f64 {
    1e-10 * (1.0 + z.norm())
}

/// Whether `κ` lies on (or within `tol` of) one of the model's cuts.
fn near_cut(model: &Model, kappa: C64, tol: f64) -> bool {
    let cuts = model.dispersion().branch_cuts();
    let ff_cuts = model.form_factor().branch_cuts();
    cuts.iter().chain(&ff_cuts).any(|c| {
        let d = c.direction / c.direction.norm();
        let rel = (kappa - c.anchor) / d;
        rel.re >= -tol && rel.im.abs() <= tol
    })
}

/// Newton's method on `ω(κ) − z`.
fn newton(model: &Model, z: C64, mut kappa: C64, max_iter: usize) -> Option<C64> {
    for _ in 0..max_iter {
        let f = model.omega(kappa) - z;
        let d = model.omega_prime(kappa);
        if d.norm() == 0.0 || !d.re.is_finite() || !d.im.is_finite() {
            return None;
        }
        let step = f / d;
        kappa -= step;
        if !kappa.re.is_finite() || !kappa.im.is_finite() {
            return None;
        }
        if step.norm() <= 1e-15 * (1.0 + kappa.norm()) {
            break;
        }
    }
    ((model.omega(kappa) - z).norm() <= residual_tolerance(z)).then_some(kappa)
}

/// Canonical representative of the pair `±κ`.
pub fn representative(kappa: C64) -> C64 {
    let tol = 1e-13 * (1.0 + kappa.norm());
    if kappa.im < -tol || (kappa.im.abs() <= tol && kappa.re < 0.0) {
        -kappa
    } else {
        kappa
    }
}

fn push_unique(list: &mut Vec<C64>, kappa: C64) {
    let k = representative(kappa);
    if !list.iter().any(|q| (*q - k).norm() <= 1e-9 * (1.0 + k.norm())) {
        list.push(k);
    }
}

/// All `k ≥ 0` in the window with `ω(k) = E`, by sign-change bisection on
/// a sample grid followed by Newton polish. Without an explicit window the
/// upper end is grown until `ω` exceeds `E` (monotone dispersions) or to a
/// generous multiple of the energy scale.
pub fn real_solutions(model: &Model, e: f64, window: Option<(f64, f64)>) -> Result<Vec<f64>> {
    let disp = model.dispersion();
    let w = |k: f64| disp.eval(C64::new(k, 0.0)).re - e;
    let (lo, hi) = match window {
        Some(win) => win,
        None => {
            let mut hi = 1.0;
            while w(hi) <= 0.0 && hi < 1e8 {
                hi *= 2.0;
            }
            (0.0, hi * 1.5)
        }
    };
    if disp.monotone_half_line() && e > disp.minimum() && w(lo) < 0.0 && w(hi) < 0.0 {
        return Err(Error::WindowTooSmall { lo, hi });
    }
    if disp.monotone_half_line() && window.is_none() {
        return Ok(monotone_root(model, e, hi).into_iter().collect());
    }
    let samples = 4000usize;
    let mut roots: Vec<f64> = Vec::new();
    let mut prev_k = lo;
    let mut prev_v = w(lo);
    if prev_v == 0.0 && lo > 0.0 {
        roots.push(lo);
    }
    for i in 1..=samples {
        let k = lo + (hi - lo) * i as f64 / samples as f64;
        let v = w(k);
        if v == 0.0 {
            roots.push(k);
        } else if prev_v != 0.0 && (v > 0.0) != (prev_v > 0.0) {
            let (mut a, mut b, mut fa) = (prev_k, k, prev_v);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                let fm = w(m);
                if fm == 0.0 || (b - a) <= 1e-15 * (1.0 + m.abs()) {
                    a = m;
                    b = m;
                    break;
                }
                if (fm > 0.0) == (fa > 0.0) {
                    a = m;
                    fa = fm;
                } else {
                    b = m;
                }
            }
            let mut root = 0.5 * (a + b);
            for _ in 0..3 {
                let d = disp.derivative(C64::new(root, 0.0)).re;
                if d == 0.0 {
                    break;
                }
                let next = root - w(root) / d;
                if next >= prev_k && next <= k {
                    root = next;
                }
            }
            roots.push(root);
        }
        prev_k = k;
        prev_v = v;
    }
    roots.retain(|k| *k > 0.0 || window.is_some());
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-9);
    Ok(roots)
}

/// The single positive root on `(0, hi]` of a dispersion increasing on the
/// half line, if any.
fn monotone_root(model: &Model, e: f64, hi: f64) -> Option<f64> {
    let disp = model.dispersion();
    let w = |k: f64| disp.eval(C64::new(k, 0.0)).re - e;
    if w(0.0) >= 0.0 || w(hi) <= 0.0 {
        return None;
    }
    let (mut a, mut b) = (0.0f64, hi);
    let mut k = 0.5 * hi;
    for _ in 0..200 {
        let fk = w(k);
        if fk == 0.0 {
            return Some(k);
        }
        if fk < 0.0 {
            a = k;
        } else {
            b = k;
        }
        // Newton inside the bracket, bisection otherwise.
        let d = disp.derivative(C64::new(k, 0.0)).re;
        let next = if d > 0.0 { k - fk / d } else { f64::NAN };
        let next = if next > a && next < b { next } else { 0.5 * (a + b) };
        if (next - k).abs() <= 1e-16 * (1.0 + k.abs()) || b - a <= 1e-16 * (1.0 + b) {
            return Some(next);
        }
        k = next;
    }
    Some(k)
}

/// Roots `κ = iη`, `η > 0`, with real `ω(iη) = E`, scanning up to the
/// lowest cut anchor on the positive imaginary axis.
fn imaginary_axis_solutions(model: &Model, e: f64) -> Vec<C64> {
    let eta_max = model
        .upper_cuts()
        .iter()
        .filter(|c| c.anchor.re.abs() < 1e-14 && c.direction.re.abs() < 1e-14)
        .map(|c| c.anchor.im)
        .fold(50.0 * (1.0 + e.abs()).sqrt().max(1.0), f64::min);
    let f = |eta: f64| {
        let v = model.omega(C64::new(0.0, eta));
        (v.im.abs() <= 1e-12 * (1.0 + v.norm())).then_some(v.re - e)
    };
    let samples = 800usize;
    let mut out = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for i in 1..samples {
        let eta = eta_max * i as f64 / samples as f64;
        let Some(v) = f(eta) else {
            prev = None;
            continue;
        };
        if let Some((pe, pv)) = prev {
            if (v > 0.0) != (pv > 0.0) {
                let (mut a, mut b, mut fa) = (pe, eta, pv);
                for _ in 0..200 {
                    let m = 0.5 * (a + b);
                    let Some(fm) = f(m) else { break };
                    if (b - a) <= 1e-16 * (1.0 + m) {
                        break;
                    }
                    if (fm > 0.0) == (fa > 0.0) {
                        a = m;
                        fa = fm;
                    } else {
                        b = m;
                    }
                }
                out.push(C64::new(0.0, 0.5 * (a + b)));
            }
        }
        prev = Some((eta, v));
    }
    out
}

/// Newton from a grid of seeds in the upper half of a box scaled to `|z|`.
fn grid_solutions(model: &Model, z: C64) -> Vec<C64> {
    let b = 2.0 * (1.0 + z.norm());
    let m = 24usize;
    let mut out = Vec::new();
    for i in 0..m {
        for j in 0..m {
            let seed = C64::new(
                -b + 2.0 * b * (i as f64 + 0.37) / m as f64,
                -0.1 * b + 1.1 * b * (j as f64 + 0.61) / m as f64,
            );
            if let Some(k) = newton(model, z, seed, 60) {
                if !near_cut(model, k, 1e-10) {
                    push_unique(&mut out, k);
                }
            }
        }
    }
    out
}

/// Errors with `NearCriticalValue` when `z` is within the collision
/// tolerance of a critical value of `ω`.
pub fn check_critical_distance(model: &Model, z: C64) -> Result<()> {
    for p in &model.critical_set().points {
        let d = (z - p.value).norm();
        if d < collision_tolerance(p.value) {
            return Err(Error::NearCriticalValue { z, value: p.value, distance: d });
        }
    }
    Ok(())
}

/// Whether a solution should be tagged as real at real energy.
fn is_real_momentum(k: C64) -> bool {
    k.im.abs() <= 1e-10 * (1.0 + k.norm())
}

/// All `r` solution representatives of `ω(κ) = z`.
///
/// Seeds are the real and imaginary-axis solutions at `E₀ = Re z`, tracked
/// vertically to `z`; a grid-seeded Newton search fills in any solution the
/// seeds miss. Each returned momentum satisfies `|ω(κ̂) − z| ≤ 1e−10(1 + |z|)`.
pub fn complex_solutions(model: &Model, z: C64) -> Result<SolutionSet> {
    check_critical_distance(model, z)?;
    let r = model.solution_pairs(z);
    let mut sols: Vec<C64> = Vec::with_capacity(r);
    if r > 0 {
        let e0 = z.re;
        let mut seeds: Vec<C64> =
            real_solutions(model, e0, None).unwrap_or_default().into_iter().map(|k| C64::new(k, 0.0)).collect();
        seeds.extend(imaginary_axis_solutions(model, e0));
        let base = C64::new(e0, 0.0);
        for seed in seeds {
            let found = if z.im == 0.0 {
                newton(model, z, seed, 8)
                    .or(Some(seed).filter(|s| (model.omega(*s) - z).norm() <= residual_tolerance(z)))
            } else {
                let steps = 16;
                let path: Vec<C64> =
                    (1..=steps).map(|i| base + C64::new(0.0, z.im * i as f64 / steps as f64)).collect();
                track_solution(model, (base, seed), &path).ok().and_then(|p| p.momenta.last().copied())
            };
            if let Some(k) = found {
                if !near_cut(model, k, 1e-12) {
                    push_unique(&mut sols, k);
                }
            }
        }
        if sols.len() < r {
            for k in grid_solutions(model, z) {
                push_unique(&mut sols, k);
            }
        }
    }
    if sols.len() != r {
        return Err(Error::SolutionCount { z, expected: r, found: sols.len() });
    }
    for k in &sols {
        if (model.omega(*k) - z).norm() > residual_tolerance(z) {
            return Err(Error::SeedFailure { seed: *k });
        }
    }
    let families = (z.im == 0.0)
        .then(|| sols.iter().map(|k| if is_real_momentum(*k) { Family::Zero } else { Family::Plus }).collect());
    if families.is_some() {
        for k in sols.iter_mut() {
            if is_real_momentum(*k) {
                *k = C64::new(k.re.abs(), 0.0);
            }
        }
    }
    Ok(SolutionSet { z, solutions: sols, families })
}

/// Taylor coefficient `c_j` of `ω` at `κ₀` by the trapezoid rule on a circle.
fn taylor_coefficient(model: &Model, k0: C64, rho: f64, j: usize) -> C64 {
    let m = 64usize;
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..m {
        let theta = std::f64::consts::TAU * i as f64 / m as f64;
        let e = C64::from_polar(1.0, theta);
        acc += model.omega(k0 + e * rho) * e.powu(j as u32).inv();
    }
    acc / (m as f64 * rho.powi(j as i32))
}

/// Zeros of `ω′` in the region, by Newton from a seed grid, each with an
/// order estimate from the Taylor coefficients of `ω`.
pub fn critical_points(model: &Model, region: &Region) -> CriticalSet {
    let disp = model.dispersion();
    let second = |k: C64| {
        let h = 1e-5 * (1.0 + k.norm());
        (disp.derivative(k + h) - disp.derivative(k - h)) / (2.0 * h)
    };
    let mut found: Vec<C64> = Vec::new();
    let m = 16usize;
    for i in 0..m {
        for j in 0..m {
            let mut k = C64::new(
                region.re.0 + (region.re.1 - region.re.0) * (i as f64 + 0.5) / m as f64,
                region.im.0 + (region.im.1 - region.im.0) * (j as f64 + 0.5) / m as f64,
            );
            let mut ok = false;
            for _ in 0..80 {
                let d = disp.derivative(k);
                let dd = second(k);
                if dd.norm() == 0.0 || !d.re.is_finite() || !d.im.is_finite() {
                    break;
                }
                let step = d / dd;
                k -= step;
                if !k.re.is_finite() || !k.im.is_finite() {
                    break;
                }
                if step.norm() <= 1e-14 * (1.0 + k.norm()) {
                    ok = true;
                    break;
                }
            }
            if !ok || !region.contains(k) || near_cut(model, k, 1e-6) {
                continue;
            }
            // Newton on ω′ stalls near a high-order zero; accept by the
            // derivative scale of the neighbourhood.
            let scale = 1.0 + disp.derivative(k + 1e-3).norm() + disp.derivative(k - 1e-3).norm();
            if disp.derivative(k).norm() <= 1e-10 * scale {
                let k =
                    C64::new(if k.re.abs() < 1e-13 { 0.0 } else { k.re }, if k.im.abs() < 1e-13 { 0.0 } else { k.im });
                if !found.iter().any(|q| (*q - k).norm() <= 1e-8 * (1.0 + k.norm())) {
                    found.push(k);
                }
            }
        }
    }
    let cut_distance = |k: C64| {
        model
            .upper_cuts()
            .iter()
            .map(|c| (c.anchor - k).norm().min((c.anchor + k).norm()))
            .fold(f64::INFINITY, f64::min)
    };
    let points = found
        .into_iter()
        .map(|k| {
            let rho = (0.1f64).min(0.5 * cut_distance(k));
            let c1 = taylor_coefficient(model, k, rho, 1).norm();
            let scale = (2..=8)
                .map(|j| taylor_coefficient(model, k, rho, j).norm() * rho.powi(j as i32))
                .fold(c1 * rho, f64::max);
            let order = (2..=8)
                .find(|&j| taylor_coefficient(model, k, rho, j).norm() * rho.powi(j as i32) > 1e-8 * scale)
                .unwrap_or(8);
            CriticalPoint { kappa: k, value: model.omega(k), order }
        })
        .collect();
    CriticalSet { points }
}

/// Momenta matched to a path of energies, with `u = Re ω` and `v = Im ω`
/// sampled at each point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionPath {
    pub energies: Vec<C64>,
    pub momenta: Vec<C64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    /// Largest momentum change between consecutive path points.
    pub max_step: f64,
}

impl SolutionPath {
    /// CSV with columns `re_z,im_z,re_kappa,im_kappa`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("re_z,im_z,re_kappa,im_kappa\n");
        for (z, k) in self.energies.iter().zip(&self.momenta) {
            out.push_str(&format!("{:.16e},{:.16e},{:.16e},{:.16e}\n", z.re, z.im, k.re, k.im));
        }
        out
    }
}

const MIN_FRACTION: f64 = 1e-12;

/// Continues the solution `κ̂₀` of `ω(κ) = z₀` along `path`.
///
/// Each leg uses the predictor `κ += Δz/ω′(κ)` and at most five Newton
/// corrections; a leg that fails to converge, or jumps much farther than
/// predicted, is retried with half the step.
pub fn track_solution(model: &Model, start: (C64, C64), path: &[C64]) -> Result<SolutionPath> {
    let (z0, k0) = start;
    if (model.omega(k0) - z0).norm() > 1e-8 * (1.0 + z0.norm()) {
        return Err(Error::SeedFailure { seed: k0 });
    }
    let mut z = z0;
    let mut k = k0;
    let mut energies = Vec::with_capacity(path.len());
    let mut momenta = Vec::with_capacity(path.len());
    let mut u = Vec::with_capacity(path.len());
    let mut v = Vec::with_capacity(path.len());
    let mut max_step = 0.0f64;
    for &target in path {
        let k_before = k;
        let mut frac = 1.0f64;
        while z != target {
            let dz = (target - z) * frac;
            let z_next = if frac >= 1.0 { target } else { z + dz };
            let d = model.omega_prime(k);
            if d.norm() < 1e-9 * (1.0 + k.norm()) {
                return Err(Error::CriticalCollision { z, derivative: d.norm() });
            }
            let predicted = k + dz / d;
            let mut kc = predicted;
            let mut ok = false;
            for _ in 0..5 {
                let dd = model.omega_prime(kc);
                if dd.norm() == 0.0 {
                    break;
                }
                let step = (model.omega(kc) - z_next) / dd;
                kc -= step;
                if step.norm() <= 1e-14 * (1.0 + kc.norm())
                    && (model.omega(kc) - z_next).norm() <= 1e-12 * (1.0 + z_next.norm())
                {
                    ok = true;
                    break;
                }
            }
            if ok && (model.omega(kc) - z_next).norm() > 1e-12 * (1.0 + z_next.norm()) {
                ok = false;
            }
            let predicted_len = (predicted - k).norm();
            if ok && (kc - predicted).norm() > 0.5 * predicted_len + 1e-12 * (1.0 + k.norm()) {
                ok = false;
            }
            if ok {
                z = z_next;
                k = kc;
                frac = (frac * 2.0).min(1.0);
            } else {
                frac *= 0.5;
                if frac < MIN_FRACTION {
                    return Err(Error::StepUnderflow { z });
                }
            }
        }
        max_step = max_step.max((k - k_before).norm());
        let w = model.omega(k);
        energies.push(target);
        momenta.push(k);
        u.push(w.re);
        v.push(w.im);
    }
    Ok(SolutionPath { energies, momenta, u, v, max_step })
}

/// Straight path of `steps` points from `a` (exclusive) to `b` (inclusive).
pub fn straight_path(a: C64, b: C64, steps: usize) -> Vec<C64> {
    (1..=steps).map(|i| a + (b - a) * (i as f64 / steps as f64)).collect()
}
