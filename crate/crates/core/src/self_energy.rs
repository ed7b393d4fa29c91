//! The self-energy matrix `Σ_{jl}(z) = ∫ G(k) e^{ik(x_j − x_l)}/(ω(k) − z) dk`.
//!
//! Two independent evaluations are provided: brute-force quadrature over the
//! real line ([`sigma_direct`]) and the residue decomposition
//! `Σ(z) = b(z) + 2πi Σ_s Z(κ̂_s) Φ(κ̂_s)` with `Z = G/ω′` and the contour
//! term `b(z)` along the cut-wrapping contour `Γ⁺` ([`sigma_decomposed`]).
//! Boundary values on the real axis and the continuation into the lower
//! half-plane reuse the same assembly.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dispersion_analysis::{
    check_critical_distance, complex_solutions, real_solutions, straight_path, track_solution, Family, SolutionSet,
};
use crate::error::{Error, Result};
use crate::linalg::{to_pairs, CMatrix};
use crate::model::{ContourKind, Model};
use crate::phase::phase_matrix;
use crate::quadrature::{
    gauss_kronrod, gauss_kronrod_points, integrate_to_infinity, oscillatory_tail, segment, tanh_sinh,
};
use crate::scalar::expi;
use crate::{CMatrix64, QuadConfig64, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    DirectQuadrature,
    Decomposition,
    Continuation,
    BoundaryAbove,
    BoundaryBelow,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    Above,
    Below,
}

/// `Z(κ) = G(κ)/ω′(κ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidueTerm {
    pub kappa: C64,
    pub value: C64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PoleTerm {
    pub kappa: C64,
    pub residue: C64,
    /// Real-axis family at real energy.
    pub family: Option<Family>,
    /// `2πi·Z(κ̂)·Φ(κ̂)` (or its adjoint for real poles on the lower side).
    pub contribution: CMatrix64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SelfEnergyParts {
    pub contour: CMatrix64,
    pub poles: Vec<PoleTerm>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SelfEnergyMatrix {
    pub z: C64,
    pub matrix: CMatrix64,
    pub method: Method,
    pub parts: Option<SelfEnergyParts>,
    /// Largest per-entry quadrature error estimate (direct method).
    pub error_estimate: Option<f64>,
}

/// JSON layout of a self-energy evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelfEnergyRecord {
    pub z: [f64; 2],
    pub method: Method,
    pub matrix: Vec<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parts: Option<PartsRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_estimate: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartsRecord {
    pub contour: Vec<Vec<[f64; 2]>>,
    pub poles: Vec<PoleRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoleRecord {
    pub kappa: [f64; 2],
    pub residue: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<Family>,
    pub contribution: Vec<Vec<[f64; 2]>>,
}

impl SelfEnergyMatrix {
    pub fn to_record(&self, with_parts: bool) -> SelfEnergyRecord {
        SelfEnergyRecord {
            z: [self.z.re, self.z.im],
            method: self.method,
            matrix: to_pairs(&self.matrix),
            parts: self.parts.as_ref().filter(|_| with_parts).map(|p| PartsRecord {
                contour: to_pairs(&p.contour),
                poles: p
                    .poles
                    .iter()
                    .map(|t| PoleRecord {
                        kappa: [t.kappa.re, t.kappa.im],
                        residue: [t.residue.re, t.residue.im],
                        family: t.family,
                        contribution: to_pairs(&t.contribution),
                    })
                    .collect(),
            }),
            error_estimate: self.error_estimate,
        }
    }

    /// Sum of the pole contributions.
    pub fn pole_sum(&self) -> Option<CMatrix64> {
        let p = self.parts.as_ref()?;
        let n = self.matrix.nrows();
        Some(p.poles.iter().fold(CMatrix::zeros(n, n), |acc, t| acc + &t.contribution))
    }
}

fn zeros(n: usize) -> CMatrix64 {
    CMatrix64::zeros(n, n)
}

/// `Z(κ) = G(κ)/ω′(κ)`; fails at critical momenta.
pub fn residue(model: &Model, kappa: C64) -> Result<ResidueTerm> {
    let d = model.omega_prime(kappa);
    if d.norm() <= 1e-10 * (1.0 + kappa.norm()) || !d.re.is_finite() || !d.im.is_finite() {
        return Err(Error::CriticalMomentum(kappa));
    }
    Ok(ResidueTerm { kappa, value: model.g(kappa) / d })
}

fn pole_contribution(model: &Model, kappa: C64, z: Option<Family>) -> Result<PoleTerm> {
    let res = residue(model, kappa)?;
    let phi = phase_matrix(model.atoms().positions(), kappa).matrix;
    let contribution = phi * (C64::new(0.0, 2.0 * PI) * res.value);
    Ok(PoleTerm { kappa, residue: res.value, family: z, contribution })
}

/// Distinct separations `|x_j − x_l|` and, for each lower-triangle entry,
/// the index of its separation.
fn separations(model: &Model) -> (Vec<f64>, Vec<(usize, usize, usize)>) {
    let x = model.atoms().positions();
    let mut ds: Vec<f64> = Vec::new();
    let mut entries = Vec::new();
    for j in 0..x.len() {
        for l in 0..=j {
            let d = (x[j] - x[l]).abs();
            let idx = match ds.iter().position(|v| *v == d) {
                Some(i) => i,
                None => {
                    ds.push(d);
                    ds.len() - 1
                }
            };
            entries.push((j, l, idx));
        }
    }
    (ds, entries)
}

fn fill_symmetric(n: usize, entries: &[(usize, usize, usize)], values: &[C64]) -> CMatrix64 {
    let mut m = zeros(n);
    for &(j, l, idx) in entries {
        m[(j, l)] = values[idx];
        m[(l, j)] = values[idx];
    }
    m
}

fn contour_quad() -> QuadConfig64 {
    QuadConfig64::new(1e-13, 1e-12)
}

/// Contour term for the waveguide pair: with `η = m·cosh v` the cut
/// discontinuity integral becomes
/// `b_{jl}(z) = −(γ/π) ∫_0^∞ z e^{−m d cosh v}/(z² + m² sinh² v) dv`.
fn waveguide_cut(m: f64, gamma: f64, d: f64, z: C64) -> Result<C64> {
    let f = |v: f64| {
        let s = m * v.sinh();
        let damp = (-m * d * v.cosh()).exp();
        z * damp / (z * z + s * s)
    };
    let cfg = contour_quad();
    // The integrand peaks where m·sinh v = |Im z|.
    let v_star = (z.im.abs() / m).asinh();
    let v_end = (2.0 * v_star).max(6.0);
    let mut points = vec![0.0];
    if v_star > 0.0 && v_star < v_end {
        let w = (z.re.abs() / (m * v_star.cosh())).max(1e-12);
        for p in [v_star - 10.0 * w, v_star - w, v_star, v_star + w, v_star + 10.0 * w] {
            if p > *points.last().unwrap_or(&0.0) && p < v_end {
                points.push(p);
            }
        }
    }
    points.push(v_end);
    let head = gauss_kronrod_points(f, &points, &cfg)?;
    let tail = integrate_to_infinity(f, v_end, &cfg)?;
    Ok((head.value + tail.value) * (-gamma / PI))
}

/// Distance from `p` to the ray `a + t·u`, `t ≥ 0` (`u` unit).
fn distance_to_ray(p: C64, a: C64, u: C64) -> f64 {
    let rel = (p - a) / u;
    if rel.re <= 0.0 {
        (p - a).norm()
    } else {
        rel.im.abs()
    }
}

/// Hairpin integral around every upper cut, offset shrunk so that no pole
/// lies between the hairpin and the cut.
fn hairpin_term(model: &Model, z: C64, offset: f64, poles: &[C64], d: f64) -> Result<C64> {
    let cfg = contour_quad();
    let f = |k: C64| model.g(k) * expi(k * d) / (model.omega(k) - z);
    let mut total = C64::new(0.0, 0.0);
    for cut in model.upper_cuts() {
        let u = cut.direction / cut.direction.norm();
        let mut delta = offset;
        for p in poles.iter().flat_map(|p| [*p, -*p]) {
            let dist = distance_to_ray(p, cut.anchor, u);
            while dist <= 2.0 * delta && delta > 1e-9 * cut.anchor.norm() {
                delta *= 0.5;
            }
        }
        let normal = C64::i() * u;
        let left0 = cut.anchor + normal * delta;
        let right0 = cut.anchor - normal * delta;
        let bottom = cut.anchor - u * delta;
        let cap1 = segment(f, left0, bottom, &cfg)?;
        let cap2 = segment(f, bottom, right0, &cfg)?;
        let legs = integrate_to_infinity(|t: f64| (f(right0 + u * t) - f(left0 + u * t)) * u, 0.0, &cfg)?;
        total += cap1.value + cap2.value + legs.value;
    }
    Ok(total)
}

/// Minimum of `|ω(κ) − z|` over the two sides of each upper cut.
fn cut_image_distance(model: &Model, z: C64) -> f64 {
    let mut best = f64::INFINITY;
    for cut in model.upper_cuts() {
        let u = cut.direction / cut.direction.norm();
        let side = C64::i() * u * 1e-12 * (1.0 + cut.anchor.norm());
        for i in 0..400 {
            let t = (i as f64 / 20.0).exp() - 1.0;
            for s in [side, -side] {
                let w = model.omega(cut.anchor + u * t + s);
                best = best.min((w - z).norm());
            }
        }
    }
    best
}

/// `b(z)` using the given pole set for hairpin sizing.
pub fn contour_term_with(model: &Model, z: C64, poles: &[C64]) -> Result<CMatrix64> {
    let n = model.n();
    match model.contour() {
        ContourKind::Entire => Ok(zeros(n)),
        ContourKind::WaveguideCut { m, gamma } => {
            if z == C64::new(0.0, 0.0) {
                return Ok(zeros(n));
            }
            // ω maps the cut onto the imaginary axis.
            if z.re.abs() < 1e-8 {
                return Err(Error::ContourTooClose { z, distance: z.re.abs() });
            }
            let (ds, entries) = separations(model);
            let values: Vec<C64> = ds.par_iter().map(|&d| waveguide_cut(m, gamma, d, z)).collect::<Result<_>>()?;
            Ok(fill_symmetric(n, &entries, &values))
        }
        ContourKind::Hairpin { offset } => {
            let dist = cut_image_distance(model, z);
            if dist < 1e-8 * (1.0 + z.norm()) {
                return Err(Error::ContourTooClose { z, distance: dist });
            }
            let (ds, entries) = separations(model);
            let values: Vec<C64> =
                ds.par_iter().map(|&d| hairpin_term(model, z, offset, poles, d)).collect::<Result<_>>()?;
            Ok(fill_symmetric(n, &entries, &values))
        }
    }
}

/// Contour term `b(z) = ∫_{Γ⁺} G(κ) Φ(κ)/(ω(κ) − z) dκ`.
pub fn contour_term(model: &Model, z: C64) -> Result<CMatrix64> {
    let poles = match model.contour() {
        ContourKind::Hairpin { .. } => complex_solutions(model, z).map(|s| s.solutions).unwrap_or_default(),
        _ => Vec::new(),
    };
    contour_term_with(model, z, &poles)
}

fn assemble(model: &Model, z: C64, set: &SolutionSet, method: Method) -> Result<SelfEnergyMatrix> {
    let contour = contour_term_with(model, z, &set.solutions)?;
    let mut matrix = contour.clone();
    let mut poles = Vec::with_capacity(set.len());
    for (i, &k) in set.solutions.iter().enumerate() {
        let fam = set.families.as_ref().map(|f| f[i]);
        let term = pole_contribution(model, k, fam)?;
        matrix += &term.contribution;
        poles.push(term);
    }
    Ok(SelfEnergyMatrix { z, matrix, method, parts: Some(SelfEnergyParts { contour, poles }), error_estimate: None })
}

fn adjoint_of(s: SelfEnergyMatrix, z: C64) -> SelfEnergyMatrix {
    SelfEnergyMatrix {
        z,
        matrix: s.matrix.adjoint(),
        method: s.method,
        parts: s.parts.map(|p| SelfEnergyParts {
            contour: p.contour.adjoint(),
            poles: p.poles.into_iter().map(|t| PoleTerm { contribution: t.contribution.adjoint(), ..t }).collect(),
        }),
        error_estimate: s.error_estimate,
    }
}

/// Residue decomposition `b(z) + 2πi Σ_s Z(κ̂_s)Φ(κ̂_s)` on the physical
/// sheet. For `Im z < 0` the value follows from `Σ(z) = Σ(conj z)†`.
pub fn sigma_decomposed(model: &Model, z: C64) -> Result<SelfEnergyMatrix> {
    if z.im < 0.0 {
        return Ok(adjoint_of(sigma_decomposed(model, z.conj())?, z));
    }
    let set = complex_solutions(model, z)?;
    assemble(model, z, &set, Method::Decomposition)
}

/// Physical-sheet `Σ(z)` for non-real `z`: the decomposition, or direct
/// quadrature where `z` sits on the contour image `ω(Γ)` (the decomposition
/// breaks down there while `Σ` itself stays analytic).
pub fn sigma_physical(model: &Model, z: C64) -> Result<SelfEnergyMatrix> {
    match sigma_decomposed(model, z) {
        Err(Error::ContourTooClose { .. }) => sigma_direct(model, z, &QuadConfig64::new(1e-13, 1e-11)),
        other => other,
    }
}

/// Boundary value `Σ(E ± i0)`. On the lower side every real-pole term is
/// replaced by its adjoint: the poles `−κ̂_s` take over.
pub fn sigma_boundary(model: &Model, e: f64, side: Side) -> Result<SelfEnergyMatrix> {
    let z = C64::new(e, 0.0);
    check_critical_distance(model, z).map_err(|_| Error::CriticalValue(e))?;
    let set = complex_solutions(model, z)?;
    let mut s = assemble(model, z, &set, Method::BoundaryAbove)?;
    if side == Side::Below {
        s.method = Method::BoundaryBelow;
        let parts = s.parts.as_mut().expect("assembled with parts");
        let mut matrix = parts.contour.clone();
        for t in parts.poles.iter_mut() {
            if t.family == Some(Family::Zero) {
                t.contribution = t.contribution.adjoint();
            }
            matrix += &t.contribution;
        }
        s.matrix = matrix;
    }
    Ok(s)
}

/// Second-sheet continuation `Σ^{II}(z) = b(z) + 2πi Σ_s Z(κ̂_s(z))Φ(κ̂_s(z))`
/// with the solutions carried from the upper half-plane across the real axis
/// at `Re z`. Equal to [`sigma_decomposed`] for `Im z ≥ 0`.
pub fn sigma_continuation(model: &Model, z: C64) -> Result<SelfEnergyMatrix> {
    if z.im >= 0.0 {
        let mut s = sigma_decomposed(model, z)?;
        s.method = Method::Continuation;
        return Ok(s);
    }
    let momenta = continued_solutions(model, z)?;
    let set = SolutionSet { z, solutions: momenta, families: None };
    assemble(model, z, &set, Method::Continuation)
}

/// Solutions at `z` (lower half-plane) continued vertically from
/// `Re z + i|Im z|`.
pub fn continued_solutions(model: &Model, z: C64) -> Result<Vec<C64>> {
    let start = C64::new(z.re, z.im.abs().max(1e-3));
    check_critical_distance(model, C64::new(z.re, 0.0))?;
    let set = complex_solutions(model, start)?;
    let steps = 24;
    let path = straight_path(start, z, steps);
    let mut out = Vec::with_capacity(set.len());
    for &k in &set.solutions {
        let p = track_solution(model, (start, k), &path)?;
        out.push(*p.momenta.last().expect("nonempty path"));
    }
    Ok(out)
}

/// Brute-force quadrature of each entry over the real line, folded onto
/// `[0, ∞)` as `∫_0^∞ 2G(k) cos(kd)/(ω(k) − z) dk`.
///
/// The half line is split at the real solutions of `ω(k) = Re z` with
/// tanh-sinh panels on both sides of each near-pole; the tail beyond the
/// last pole uses the rational map (`d = 0`) or half-period cells with
/// Wynn acceleration (`d > 0`).
pub fn sigma_direct(model: &Model, z: C64, cfg: &QuadConfig64) -> Result<SelfEnergyMatrix> {
    let disp = model.dispersion();
    let poles: Vec<f64> = real_solutions(model, z.re, None)?;
    if z.im == 0.0 && (!poles.is_empty() || z.re > disp.minimum()) {
        return Err(Error::PoleOnPath(z.re));
    }
    let (ds, entries) = separations(model);
    let results: Vec<(C64, f64)> =
        ds.par_iter().map(|&d| direct_entry(model, z, d, &poles, cfg)).collect::<Result<_>>()?;
    let values: Vec<C64> = results.iter().map(|r| r.0).collect();
    let err = results.iter().map(|r| r.1).fold(0.0, f64::max);
    Ok(SelfEnergyMatrix {
        z,
        matrix: fill_symmetric(model.n(), &entries, &values),
        method: Method::DirectQuadrature,
        parts: None,
        error_estimate: Some(err),
    })
}

fn direct_entry(model: &Model, z: C64, d: f64, poles: &[f64], cfg: &QuadConfig64) -> Result<(C64, f64)> {
    let f = |k: f64| {
        let kc = C64::new(k, 0.0);
        model.g(kc) * (2.0 * (k * d).cos()) / (model.omega(kc) - z)
    };
    // Cut point beyond every near-pole where ω has clearly outgrown |z|.
    let mut cut = 1.0f64;
    let kmax = poles.iter().copied().fold(0.0, f64::max);
    cut = cut.max(2.0 * kmax + 1.0);
    while model.omega(C64::new(cut, 0.0)).re < 2.0 * (z.norm() + 1.0) && cut < 1e7 {
        cut *= 2.0;
    }
    if d > 0.0 {
        // Align the tail start with a zero of cos(kd).
        let period = PI / d;
        cut = ((cut * d / PI - 0.5).ceil() + 0.5) * period;
    }
    let mut value = C64::new(0.0, 0.0);
    let mut error = 0.0;
    let mut points = vec![0.0];
    for &k in poles {
        let w = (z.im.abs() / model.omega_prime(C64::new(k, 0.0)).norm()).max(1e-14 * (1.0 + k));
        let a = (0.5 * k).min(50.0 * w.max(1e-3 * k)).min(cut - k);
        // Near-pole panels [k − a, k] and [k, k + a] by tanh-sinh, whose
        // nodes cluster at the peak.
        for (lo, hi) in [(k - a, k), (k, k + a)] {
            let r = tanh_sinh(f, lo, hi, cfg).or_else(|_| gauss_kronrod(f, lo, hi, cfg))?;
            value += r.value;
            error += r.error;
        }
        points.push(k - a);
        points.push(f64::NAN);
        points.push(k + a);
    }
    points.push(cut);
    // Smooth pieces between the near-pole panels.
    let mut lo = points[0];
    let mut i = 1;
    while i < points.len() {
        let p = points[i];
        if p.is_nan() {
            lo = points[i + 1];
            i += 2;
            continue;
        }
        if p > lo {
            let r = gauss_kronrod(f, lo, p, cfg)?;
            value += r.value;
            error += r.error;
        }
        lo = p;
        i += 1;
    }
    let tail = if d == 0.0 { integrate_to_infinity(f, cut, cfg)? } else { oscillatory_tail(f, cut, PI / d, cfg)? };
    value += tail.value;
    error += tail.error;
    Ok((value, error))
}
