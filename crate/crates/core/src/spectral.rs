//! Bound states and resonances: zeros of `det(ℰ − zI − Σ(z))` on the real
//! axis (boundary value from above) and in the lower half-plane (second
//! sheet), the dominant/suppressed split of `Σ(E + i0)` for identical atoms,
//! the first-order weak-coupling resonances and the resonant momenta of an
//! array.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dispersion_analysis::{complex_solutions, Family};
use crate::error::{Error, Result};
use crate::linalg::{determinant, singular_pairs, CMatrix};
use crate::model::{ContourKind, Model};
use crate::phase::{eigenvalues, phase_matrix};
use crate::quadrature::{gauss_kronrod, integrate_to_infinity, segment, QuadConfig};
use crate::self_energy::{residue, sigma_boundary, sigma_continuation, sigma_physical, SelfEnergyMatrix, Side};
use crate::{CMatrix64, C64};

/// Which parts of `Σ(E + i0)` enter the characteristic matrix at real energy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Corrections {
    /// The full self-energy.
    #[default]
    Full,
    /// Real-pole terms plus the diagonal of the remainder (the shift `Δ`);
    /// the suppressed off-diagonal matrix `B` is dropped.
    DiagonalOnly,
    /// Real-pole terms only: both `Δ` and `B` are dropped.
    Neglect,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    BoundState,
    Resonance,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CharacteristicValue {
    pub z: C64,
    pub kind: Kind,
    /// Unit amplitude vector spanning (part of) the nullspace.
    pub amplitude: Vec<C64>,
    /// `‖(ℰ − zI − Σ)a‖`.
    pub residual: f64,
    pub degeneracy: usize,
    /// Basis of the numerical nullspace.
    pub nullspace: Vec<Vec<C64>>,
    /// Singular values of the characteristic matrix, ascending.
    pub singular_values: Vec<f64>,
}

/// JSON layout of a characteristic value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicRecord {
    pub z: [f64; 2],
    pub kind: Kind,
    pub amplitude: Vec<[f64; 2]>,
    pub residual: f64,
    pub degeneracy: usize,
}

impl CharacteristicValue {
    pub fn to_record(&self) -> CharacteristicRecord {
        CharacteristicRecord {
            z: [self.z.re, self.z.im],
            kind: self.kind,
            amplitude: self.amplitude.iter().map(|a| [a.re, a.im]).collect(),
            residual: self.residual,
            degeneracy: self.degeneracy,
        }
    }
}

fn restrict(s: &SelfEnergyMatrix, corrections: Corrections) -> Result<CMatrix64> {
    if corrections == Corrections::Full {
        return Ok(s.matrix.clone());
    }
    let parts = s.parts.as_ref().ok_or_else(|| Error::InvalidInput("self-energy parts unavailable".into()))?;
    let n = s.matrix.nrows();
    let mut dominant = CMatrix::zeros(n, n);
    for t in &parts.poles {
        if t.family == Some(Family::Zero) {
            dominant += &t.contribution;
        }
    }
    if corrections == Corrections::DiagonalOnly {
        let rest = &s.matrix - &dominant;
        for i in 0..n {
            dominant[(i, i)] += rest[(i, i)];
        }
    }
    Ok(dominant)
}

/// `ℰ − zI − Σ(z)` with `Σ` chosen by the position of `z`: boundary value
/// from above on the real axis, physical sheet for `Im z > 0`, and for
/// `Im z < 0` either the physical sheet or (with `continuation`) the
/// second sheet. Corrections other than `Full` require real `z`.
pub fn characteristic_matrix(model: &Model, z: C64, continuation: bool, corrections: Corrections) -> Result<CMatrix64> {
    let sigma = if z.im == 0.0 {
        sigma_boundary(model, z.re, Side::Above)?
    } else if z.im < 0.0 && continuation {
        sigma_continuation(model, z)?
    } else {
        sigma_physical(model, z)?
    };
    if corrections != Corrections::Full && z.im != 0.0 {
        return Err(Error::InvalidInput("corrections can only be restricted at real energy".into()));
    }
    let s = restrict(&sigma, corrections)?;
    let n = model.n();
    let mut m = model.atoms().energy_matrix() - s;
    for i in 0..n {
        m[(i, i)] -= z;
    }
    Ok(m)
}

/// `det(ℰ − zI − Σ(z))` by LU.
pub fn characteristic_det(model: &Model, z: C64, continuation: bool) -> Result<C64> {
    Ok(determinant(&characteristic_matrix(model, z, continuation, Corrections::Full)?))
}

fn matrix_scale(model: &Model, m: &CMatrix64) -> f64 {
    let e = model.atoms().energies().iter().map(|v| v.abs()).fold(0.0, f64::max);
    1.0f64.max(e).max(m.iter().map(|v| v.norm()).fold(0.0, f64::max))
}

fn characterize(model: &Model, z: C64, m: &CMatrix64, kind: Kind) -> CharacteristicValue {
    let pairs = singular_pairs(m);
    let scale = matrix_scale(model, m);
    let thresh = 1e-8 * scale;
    let nullspace: Vec<Vec<C64>> = pairs.iter().filter(|p| p.0 < thresh).map(|p| p.1.clone()).collect();
    let amplitude = pairs[0].1.clone();
    let n = m.nrows();
    let av = nalgebra::DVector::from_vec(amplitude.clone());
    let residual = (m * av).norm();
    let _ = n;
    CharacteristicValue {
        z,
        kind,
        amplitude,
        residual,
        degeneracy: nullspace.len().max(1),
        nullspace,
        singular_values: pairs.iter().map(|p| p.0).collect(),
    }
}

/// Real-energy candidates that stayed above the acceptance threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NearMiss {
    pub energy: f64,
    pub smallest_singular_value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundStateReport {
    pub states: Vec<CharacteristicValue>,
    pub near_misses: Vec<NearMiss>,
}

fn sigma_min(model: &Model, e: f64, corrections: Corrections) -> f64 {
    match characteristic_matrix(model, C64::new(e, 0.0), false, corrections) {
        Ok(m) => singular_pairs(&m)[0].0 / matrix_scale(model, &m),
        Err(_) => f64::INFINITY,
    }
}

/// Golden-section minimization of `f` on `[a, b]`.
fn golden_min(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-15 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Real zeros of `E ↦ σ_min(ℰ − EI − Σ(E + i0))` in `range`: local minima
/// on a uniform grid of `grid` points, polished by golden-section search and
/// accepted when the smallest singular value falls below `1e−8` of the
/// matrix scale.
pub fn bound_states(
    model: &Model,
    range: (f64, f64),
    grid: usize,
    corrections: Corrections,
) -> Result<BoundStateReport> {
    let (lo, hi) = range;
    if !(hi > lo) || grid < 3 {
        return Err(Error::InvalidInput("bound-state range must be nonempty with at least 3 grid points".into()));
    }
    let es: Vec<f64> = (0..grid).map(|i| lo + (hi - lo) * i as f64 / (grid - 1) as f64).collect();
    let vals: Vec<f64> = es.par_iter().map(|&e| sigma_min(model, e, corrections)).collect();
    let f = |e: f64| sigma_min(model, e, corrections);
    let mut candidates: Vec<(f64, f64)> = Vec::new();
    for i in 0..grid {
        let left = if i == 0 { f64::INFINITY } else { vals[i - 1] };
        let right = if i + 1 == grid { f64::INFINITY } else { vals[i + 1] };
        if vals[i].is_finite() && vals[i] <= left && vals[i] <= right {
            let a = es[i.saturating_sub(1)];
            let b = es[(i + 1).min(grid - 1)];
            candidates.push(golden_min(&f, a, b));
        }
    }
    let mut states: Vec<CharacteristicValue> = Vec::new();
    let mut near_misses = Vec::new();
    for (e, s) in candidates {
        if s < 1e-8 {
            if states.iter().any(|st| (st.z.re - e).abs() <= 1e-9 * (1.0 + e.abs())) {
                continue;
            }
            let m = characteristic_matrix(model, C64::new(e, 0.0), false, corrections)?;
            states.push(characterize(model, C64::new(e, 0.0), &m, Kind::BoundState));
        } else {
            near_misses.push(NearMiss { energy: e, smallest_singular_value: s });
        }
    }
    states.sort_by(|a, b| a.z.re.total_cmp(&b.z.re));
    Ok(BoundStateReport { states, near_misses })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResonanceReport {
    pub roots: Vec<CharacteristicValue>,
    /// Seeds whose Newton iteration did not converge, with the reason.
    pub failures: Vec<(C64, String)>,
}

fn det_scale(model: &Model, z: C64) -> f64 {
    let e = model.atoms().energies().iter().map(|v| v.abs()).fold(0.0, f64::max);
    (1.0 + e + z.norm()).powi(model.n() as i32)
}

fn newton_det(model: &Model, seed: C64) -> Result<C64> {
    let f = |z: C64| characteristic_det(model, z, true);
    let mut z = seed;
    for _ in 0..100 {
        let fz = f(z)?;
        if fz.norm() == 0.0 {
            return Ok(z);
        }
        let h = 1e-6 * (1.0 + z.norm());
        let d = (f(z + h)? - f(z - h)?) / (2.0 * h);
        if d.norm() == 0.0 {
            return Err(Error::NonConvergent(format!("vanishing derivative at {z}")));
        }
        let mut step = fz / d;
        let cap = 0.25 * (1.0 + z.norm());
        if step.norm() > cap {
            step *= cap / step.norm();
        }
        z -= step;
        if step.norm() <= 1e-14 * (1.0 + z.norm()) {
            return Ok(z);
        }
    }
    let fz = f(z)?;
    if fz.norm() <= 1e-12 * det_scale(model, z) {
        Ok(z)
    } else {
        Err(Error::NonConvergent(format!("Newton did not settle near {z}")))
    }
}

/// Zeros of `det(ℰ − zI − Σ^{II}(z))` inside `region`, by Newton with a
/// central-difference derivative from the atomic energies, the first-order
/// predictions (identical atoms) and `extra_seeds`.
pub fn resonances(model: &Model, region: &crate::dispersion_analysis::Region, extra_seeds: &[C64]) -> ResonanceReport {
    let mut seeds: Vec<C64> = model.atoms().energies().iter().map(|e| C64::new(*e, 0.0)).collect();
    seeds.dedup();
    let eps = model.atoms().energies();
    if eps.iter().all(|e| *e == eps[0]) {
        if let Ok(w) = weak_coupling_resonances(model, eps[0]) {
            seeds.extend(w);
        }
    }
    seeds.extend_from_slice(extra_seeds);
    let results: Vec<(C64, Result<C64>)> = seeds.par_iter().map(|&s| (s, newton_det(model, s))).collect();
    let mut roots: Vec<CharacteristicValue> = Vec::new();
    let mut failures = Vec::new();
    for (seed, r) in results {
        match r {
            Ok(z) => {
                if z.im > 1e-9 {
                    failures.push((seed, format!("converged to {z} in the upper half-plane")));
                    continue;
                }
                if !region.contains(z) {
                    failures.push((seed, format!("converged to {z} outside the region")));
                    continue;
                }
                let z = if z.im.abs() <= 1e-12 * (1.0 + z.norm()) { C64::new(z.re, 0.0) } else { z };
                if roots.iter().any(|r| (r.z - z).norm() <= 1e-8 * (1.0 + z.norm())) {
                    continue;
                }
                let Ok(m) = characteristic_matrix(model, z, true, Corrections::Full) else {
                    failures.push((seed, "characteristic matrix unavailable at root".into()));
                    continue;
                };
                if determinant(&m).norm() > 1e-8 * det_scale(model, z) {
                    failures.push((seed, format!("determinant not small at {z}")));
                    continue;
                }
                let kind = if z.im.abs() <= 1e-9 { Kind::BoundState } else { Kind::Resonance };
                roots.push(characterize(model, z, &m, kind));
            }
            Err(e) => failures.push((seed, e.to_string())),
        }
    }
    roots.sort_by(|a, b| a.z.re.total_cmp(&b.z.re).then(a.z.im.total_cmp(&b.z.im)));
    ResonanceReport { roots, failures }
}

/// Dominant/suppressed decomposition of `Σ(E + i0)` for identical atoms:
/// `ε − E − Σ = −i Z_tot [Σ_s z_s Φ(κ̂_s) + B − iΛ I]`.
#[derive(Clone, Debug, PartialEq)]
pub struct DominantSplit {
    pub energy: f64,
    /// `2π Σ_{I⁰} Z(κ̂_s)`.
    pub z_tot: C64,
    /// Real-pole momenta and normalized weights `z_s = 2πZ_s/Z_tot`.
    pub momenta: Vec<C64>,
    pub weights: Vec<C64>,
    /// `b(E) + 2πi Σ_{I⁺} Z(κ̂_s)` (diagonal entry).
    pub delta: C64,
    /// `(E − ε + Δ)/Z_tot`.
    pub lambda: C64,
    /// Off-diagonal remainder `(b + 2πi Σ_{I⁺} ZΦ)/(i Z_tot)`, zero diagonal.
    pub b_matrix: CMatrix64,
    pub alpha: f64,
    /// Decay rate `min(m_Γ, m′)` of the bound `|B_{jl}| ≤ α e^{−M|x_j − x_l|}`.
    pub decay: f64,
    /// `min Im κ` on the contour.
    pub m_gamma: f64,
    /// `min Im κ̂_s` over `I⁺`.
    pub m_prime: f64,
    pub bound_holds: bool,
    /// Largest entry of the reassembly residual against `Σ(E + i0)`.
    pub reassembly_error: f64,
}

/// `∫_{Γ⁺} |G(κ)/(ω(κ) − E)| |dκ|`, the `d = 0` bound on `|b_{jl}|`.
fn contour_abs_integral(model: &Model, e: f64) -> Result<(f64, f64)> {
    let cfg = QuadConfig::new(1e-12, 1e-10);
    match model.contour() {
        ContourKind::Entire => Ok((0.0, f64::INFINITY)),
        ContourKind::WaveguideCut { m, gamma } => {
            let f = |v: f64| {
                let s = m * v.sinh();
                C64::new(e.abs() / (e * e + s * s), 0.0)
            };
            let head = gauss_kronrod(f, 0.0, 6.0, &cfg)?;
            let tail = integrate_to_infinity(f, 6.0, &cfg)?;
            Ok(((head.value.re + tail.value.re) * gamma / PI, m))
        }
        ContourKind::Hairpin { offset } => {
            let z = C64::new(e, 0.0);
            let f = |k: C64| C64::new((model.g(k) / (model.omega(k) - z)).norm(), 0.0);
            let mut total = 0.0;
            let mut m_gamma = f64::INFINITY;
            for cut in model.upper_cuts() {
                let u = cut.direction / cut.direction.norm();
                let normal = C64::i() * u;
                let left0 = cut.anchor + normal * offset;
                let right0 = cut.anchor - normal * offset;
                let bottom = cut.anchor - u * offset;
                let caps =
                    segment(|k| f(k) * (left0 - bottom).norm() / (left0 - bottom), left0, bottom, &cfg)?.value.re.abs()
                        + segment(|k| f(k) * (right0 - bottom).norm() / (right0 - bottom), bottom, right0, &cfg)?
                            .value
                            .re
                            .abs();
                let legs = integrate_to_infinity(|t: f64| f(right0 + u * t) + f(left0 + u * t), 0.0, &cfg)?;
                total += caps + legs.value.re;
                m_gamma = m_gamma.min(bottom.im);
            }
            Ok((total, m_gamma))
        }
    }
}

fn common_energy(model: &Model) -> Result<f64> {
    let eps = model.atoms().energies();
    if eps.iter().any(|e| *e != eps[0]) {
        return Err(Error::InvalidInput("identical atoms (equal excitation energies) required".into()));
    }
    Ok(eps[0])
}

pub fn dominant_split(model: &Model, e: f64) -> Result<DominantSplit> {
    let eps = common_energy(model)?;
    let sigma = sigma_boundary(model, e, Side::Above)?;
    let parts = sigma.parts.as_ref().expect("boundary value carries parts");
    let n = model.n();
    let zero_terms: Vec<_> = parts.poles.iter().filter(|t| t.family == Some(Family::Zero)).collect();
    if zero_terms.is_empty() {
        return Err(Error::EmptyRealPoleSet(e));
    }
    let z_tot: C64 = zero_terms.iter().map(|t| t.residue).sum::<C64>() * (2.0 * PI);
    let scale = zero_terms.iter().map(|t| t.residue.norm()).fold(0.0, f64::max) * 2.0 * PI;
    if z_tot.norm() <= 1e-12 * scale.max(f64::MIN_POSITIVE) || z_tot.norm() < 1e-300 {
        return Err(Error::VanishingResidue(e));
    }
    let weights: Vec<C64> = zero_terms.iter().map(|t| t.residue * (2.0 * PI) / z_tot).collect();
    let momenta: Vec<C64> = zero_terms.iter().map(|t| t.kappa).collect();
    let mut rest = parts.contour.clone();
    let mut plus_residues = C64::new(0.0, 0.0);
    let mut plus_abs = 0.0;
    let mut m_prime = f64::INFINITY;
    for t in parts.poles.iter().filter(|t| t.family == Some(Family::Plus)) {
        rest += &t.contribution;
        plus_residues += t.residue;
        plus_abs += 2.0 * PI * t.residue.norm();
        m_prime = m_prime.min(t.kappa.im);
    }
    let delta = parts.contour[(0, 0)] + C64::new(0.0, 2.0 * PI) * plus_residues;
    let lambda = (C64::new(e - eps, 0.0) + delta) / z_tot;
    let mut b_matrix = rest / (C64::i() * z_tot);
    for i in 0..n {
        b_matrix[(i, i)] = C64::new(0.0, 0.0);
    }
    let (b_abs, m_gamma) = contour_abs_integral(model, e)?;
    let alpha = (b_abs + plus_abs) / z_tot.norm();
    let decay = m_gamma.min(m_prime);
    let x = model.atoms().positions();
    let mut bound_holds = true;
    for j in 0..n {
        for l in 0..n {
            if j != l {
                let d = (x[j] - x[l]).abs();
                let bound = if decay.is_finite() { alpha * (-decay * d).exp() } else { alpha };
                if b_matrix[(j, l)].norm() > bound * (1.0 + 1e-9) + 1e-300 {
                    bound_holds = false;
                }
            }
        }
    }
    // Reassembly: −iZ_tot[Σ z_s Φ_s + B − iΛI] must equal ε − E − Σ.
    let mut inner = b_matrix.clone();
    for (w, k) in weights.iter().zip(&momenta) {
        inner += phase_matrix(x, *k).matrix * *w;
    }
    for i in 0..n {
        inner[(i, i)] -= C64::i() * lambda;
    }
    let rebuilt = inner * (-C64::i() * z_tot);
    let mut target = -sigma.matrix.clone();
    for i in 0..n {
        target[(i, i)] += C64::new(eps - e, 0.0);
    }
    let reassembly_error = crate::linalg::max_abs_diff(&rebuilt, &target);
    Ok(DominantSplit {
        energy: e,
        z_tot,
        momenta,
        weights,
        delta,
        lambda,
        b_matrix,
        alpha,
        decay,
        m_gamma,
        m_prime,
        bound_holds,
        reassembly_error,
    })
}

/// First-order resonances `E_j ≈ ε − i·2πZ(κ̂(ε))·λ_j(κ̂(ε))`, with `λ_j`
/// the eigenvalues of `Φ(κ̂(ε))`, for a single real pole pair at `ε`.
pub fn weak_coupling_resonances(model: &Model, eps: f64) -> Result<Vec<C64>> {
    let set = complex_solutions(model, C64::new(eps, 0.0))?;
    let real = set.zero_family();
    if real.len() != 1 {
        return Err(Error::NotSingleDominantPole { energy: eps, count: real.len() });
    }
    let k = real[0];
    let z = residue(model, k)?.value;
    let spec = eigenvalues(model.atoms().positions(), k, false)?;
    let mut out: Vec<C64> = spec
        .eigenvalues
        .iter()
        .map(|l| {
            let v = C64::new(eps, 0.0) - C64::new(0.0, 2.0 * PI) * z * l;
            // A vanishing eigenvalue gives an exactly real prediction.
            if l.norm() <= 1e-10 {
                C64::new(eps, 0.0)
            } else {
                v
            }
        })
        .collect();
    out.sort_by(|a, b| a.im.total_cmp(&b.im).reverse());
    Ok(out)
}

/// A momentum `k = νπ/(x_j − x_l)` at which atoms `j` and `l` resonate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResonantMomentum {
    pub nu: i64,
    pub k: f64,
    /// For equally spaced arrays: the `n − 1` basis vectors
    /// `e_j + (−1)^{ν+1} e_{j+1}` of the degenerate subspace.
    pub lattice_basis: Option<Vec<Vec<f64>>>,
    /// For equally spaced arrays: coefficients `c` of the constraint
    /// `Σ_j c_j a_j = 0` (`c_j = (−1)^{νj}`).
    pub constraint: Option<Vec<f64>>,
}

/// Resonant momenta of the pair `(j, l)`, `j > l` (zero-based), for
/// `ν ∈ [nu_min, nu_max]`; `ν = 0` is skipped unless `allow_zero`.
pub fn resonant_momenta(
    positions: &[f64],
    pair: (usize, usize),
    nu_range: (i64, i64),
    allow_zero: bool,
) -> Result<Vec<ResonantMomentum>> {
    let (j, l) = pair;
    if j <= l || j >= positions.len() {
        return Err(Error::InvalidInput(format!("pair ({j}, {l}) must satisfy n > j > l")));
    }
    let sep = positions[j] - positions[l];
    if sep <= 0.0 {
        return Err(Error::InvalidInput("coincident atoms have no resonant momentum".into()));
    }
    let n = positions.len();
    let gaps: Vec<f64> = positions.windows(2).map(|w| w[1] - w[0]).collect();
    let lattice =
        !gaps.is_empty() && gaps.iter().all(|g| (g - gaps[0]).abs() <= 1e-12 * gaps[0].abs().max(1.0)) && gaps[0] > 0.0;
    let mut out = Vec::new();
    for nu in nu_range.0..=nu_range.1 {
        if nu == 0 && !allow_zero {
            continue;
        }
        let k = nu as f64 * PI / sep;
        let sign = |p: i64| if p.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        // On a lattice the momentum is resonant for all neighbours only when
        // it is a multiple of π/d.
        let lattice_nu = if lattice {
            let t = k * gaps[0] / PI;
            ((t - t.round()).abs() <= 1e-12 * (1.0 + t.abs())).then_some(t.round() as i64)
        } else {
            None
        };
        let (basis, constraint) = match lattice_nu {
            Some(mu) => {
                let basis = (0..n - 1)
                    .map(|i| {
                        let mut v = vec![0.0; n];
                        v[i] = 1.0;
                        v[i + 1] = sign(mu + 1);
                        v
                    })
                    .collect();
                let constraint = (0..n as i64).map(|i| sign(mu * i)).collect();
                (Some(basis), Some(constraint))
            }
            None => (None, None),
        };
        out.push(ResonantMomentum { nu, k, lattice_basis: basis, constraint });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion_analysis::Region;
    use crate::model::{massless_flat, waveguide};

    #[test]
    fn zero_coupling_roots() {
        let m = massless_flat(0.0, vec![0.0, 1.0], vec![1.0, 2.0]).unwrap();
        let r = bound_states(&m, (0.5, 2.5), 201, Corrections::Full).unwrap();
        assert_eq!(r.states.len(), 2);
        assert!((r.states[0].z.re - 1.0).abs() < 1e-12 && (r.states[1].z.re - 2.0).abs() < 1e-12);
        assert!(r.states.iter().all(|s| s.degeneracy == 1));
        let res = resonances(&m, &Region::new((0.0, 3.0), (-1.0, 0.1)), &[]);
        assert_eq!(res.roots.len(), 2);
        assert!((res.roots[0].z - 1.0).norm() < 1e-12);
    }

    #[test]
    fn massless_flat_resonance_first_order() {
        let g = 0.1;
        let m = massless_flat(g, vec![0.0], vec![1.0]).unwrap();
        let res = resonances(&m, &Region::new((0.0, 2.0), (-1.0, 0.1)), &[]);
        assert_eq!(res.roots.len(), 1);
        let z = res.roots[0].z;
        assert!(z.im < 0.0);
        let first = weak_coupling_resonances(&m, 1.0).unwrap()[0];
        assert!((first - C64::new(1.0, -g * g / 2.0)).norm() < 1e-14);
        assert!((z - first).norm() < g.powi(4));
    }

    #[test]
    fn waveguide_lattice_bic() {
        let e1 = (PI * PI + 1.0).sqrt();
        let m = waveguide(1.0, 1.0, vec![0.0, 1.0], vec![e1, e1]).unwrap();
        let r = bound_states(&m, (e1 - 0.5, e1 + 0.5), 101, Corrections::Neglect).unwrap();
        assert_eq!(r.states.len(), 1);
        let s = &r.states[0];
        assert!((s.z.re - e1).abs() < 1e-6);
        let a = &s.amplitude;
        assert!((a[0] - a[1]).norm() < 1e-8);
        let split = dominant_split(&m, 2.0).unwrap();
        assert!(split.bound_holds && split.reassembly_error < 1e-12);
        assert!((split.weights[0] - 1.0).norm() < 1e-15);
    }
}
