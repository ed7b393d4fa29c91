//! Phase matrix `[Φ(κ)]_{jl} = e^{iκ|x_j − x_l|}` of an array of identical
//! emitters: three-term characteristic-polynomial recurrence, closed-form
//! determinant, Aberth-Ehrlich eigenvalues, the cosine/sine split and
//! eigenvalue trajectory sweeps in the complex plane.

use nalgebra::DMatrix;
use num_complex::Complex;
use rayon::prelude::*;
use thiserror::Error;

use crate::linalg::{vector_norm, CMatrix, Lu};
use crate::scalar::{expi, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhaseError {
    #[error("eigenvalue search stalled: residual {residual:.3e} at λ = {re}{im:+}i")]
    RootFindingStall { re: f64, im: f64, residual: f64 },
    #[error("positions must be finite and sorted ascending")]
    UnsortedPositions,
    #[error("need at least one position")]
    Empty,
    #[error("invalid sweep: {0}")]
    InvalidSweep(&'static str),
}

fn check_positions<T: Real>(x: &[T]) -> Result<(), PhaseError> {
    if x.is_empty() {
        return Err(PhaseError::Empty);
    }
    if x.iter().any(|v| !v.is_finite()) || x.windows(2).any(|w| w[1] < w[0]) {
        return Err(PhaseError::UnsortedPositions);
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhaseMatrix<T: Real> {
    pub kappa: Complex<T>,
    pub positions: Vec<T>,
    pub matrix: CMatrix<T>,
}

/// Builds `Φ(κ)` for the given positions.
pub fn phase_matrix<T: Real>(positions: &[T], kappa: Complex<T>) -> PhaseMatrix<T> {
    let n = positions.len();
    let one = Complex::new(T::one(), T::zero());
    let mut m = CMatrix::from_element(n, n, one);
    for j in 0..n {
        for l in 0..j {
            let d = (positions[j] - positions[l]).abs();
            let v = expi(kappa * d);
            m[(j, l)] = v;
            m[(l, j)] = v;
        }
    }
    PhaseMatrix { kappa, positions: positions.to_vec(), matrix: m }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CharPolyEvaluation<T> {
    pub lambda: Complex<T>,
    pub kappa: Complex<T>,
    pub value: Complex<T>,
    /// `p_1, …, p_n`.
    pub sequence: Vec<Complex<T>>,
}

/// `q_m = e^{2iκ(x_m − x_{m−1})}` for m = 2..n.
fn gap_factors<T: Real>(positions: &[T], kappa: Complex<T>) -> Vec<Complex<T>> {
    let two = T::lit(2.0);
    positions.windows(2).map(|w| expi(kappa * ((w[1] - w[0]) * two))).collect()
}

/// `p_n(λ) = det(Φ − λI)` through the recurrence
/// `p_m = [(1−λ) − (1+λ)q_m] p_{m−1} − λ² q_m p_{m−2}`, `p_0 = 1`, `p_1 = 1 − λ`.
pub fn char_poly<T: Real>(positions: &[T], lambda: Complex<T>, kappa: Complex<T>) -> CharPolyEvaluation<T> {
    let one = Complex::new(T::one(), T::zero());
    let q = gap_factors(positions, kappa);
    let mut seq = Vec::with_capacity(positions.len());
    let mut prev2 = one;
    let mut prev = one - lambda;
    seq.push(prev);
    for &qm in &q {
        let next = ((one - lambda) - (one + lambda) * qm) * prev - lambda * lambda * qm * prev2;
        prev2 = prev;
        prev = next;
        seq.push(next);
    }
    CharPolyEvaluation { lambda, kappa, value: prev, sequence: seq }
}

/// Value and λ-derivative of `p_n` from precomputed gap factors.
fn char_poly_and_derivative<T: Real>(q: &[Complex<T>], lambda: Complex<T>) -> (Complex<T>, Complex<T>) {
    let one = Complex::new(T::one(), T::zero());
    let zero = Complex::new(T::zero(), T::zero());
    let two = T::lit(2.0);
    let (mut p2, mut p1) = (one, one - lambda);
    let (mut d2, mut d1) = (zero, -one);
    for &qm in q {
        let a = (one - lambda) - (one + lambda) * qm;
        let p = a * p1 - lambda * lambda * qm * p2;
        let d = (-one - qm) * p1 + a * d1 - lambda * qm * p2 * two - lambda * lambda * qm * d2;
        p2 = p1;
        p1 = p;
        d2 = d1;
        d1 = d;
    }
    (p1, d1)
}

/// `det Φ(κ) = Π_j [1 − e^{2iκ(x_{j+1} − x_j)}]`.
pub fn det_closed<T: Real>(positions: &[T], kappa: Complex<T>) -> Complex<T> {
    let one = Complex::new(T::one(), T::zero());
    gap_factors(positions, kappa).into_iter().fold(one, |acc, q| acc * (one - q))
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhaseSpectrum<T> {
    pub eigenvalues: Vec<Complex<T>>,
    /// Unit eigenvectors, one per eigenvalue, when requested.
    pub eigenvectors: Option<Vec<Vec<Complex<T>>>>,
    /// `‖(Φ − λI)v‖` for a unit inverse-iteration vector `v`.
    pub residuals: Vec<T>,
}

impl<T: Real> PhaseSpectrum<T> {
    /// Number of eigenvalues with modulus at most `tol`.
    pub fn null_count(&self, tol: T) -> usize {
        self.eigenvalues.iter().filter(|l| l.norm() <= tol).count()
    }
}

fn max_row_sum<T: Real>(m: &CMatrix<T>) -> T {
    (0..m.nrows()).map(|i| m.row(i).iter().fold(T::zero(), |acc, v| acc + v.norm())).fold(T::zero(), T::max)
}

/// Aberth-Ehrlich iteration on the recurrence polynomial.
fn aberth<T: Real>(q: &[Complex<T>], n: usize, radius: T) -> Vec<Complex<T>> {
    let one = Complex::new(T::one(), T::zero());
    let tau = T::TAU();
    let mut z: Vec<Complex<T>> = (0..n)
        .map(|j| {
            let theta = tau * T::from_usize(j) / T::from_usize(n) + T::lit(0.4);
            Complex::from_polar(radius, theta)
        })
        .collect();
    let eps = T::epsilon();
    let mut converged = vec![false; n];
    for _ in 0..500 {
        let mut all = true;
        for i in 0..n {
            if converged[i] {
                continue;
            }
            let (p, dp) = char_poly_and_derivative(q, z[i]);
            if p.norm() == T::zero() {
                converged[i] = true;
                continue;
            }
            let w = p / dp;
            let mut s = Complex::new(T::zero(), T::zero());
            for j in 0..n {
                if j != i {
                    let d = z[i] - z[j];
                    if d.norm() > T::zero() {
                        s += one / d;
                    }
                }
            }
            let step = w / (one - w * s);
            if !(step.re.is_finite() && step.im.is_finite()) {
                continue;
            }
            z[i] -= step;
            if step.norm() <= T::lit(4.0) * eps * (T::one() + z[i].norm()) {
                converged[i] = true;
            } else {
                all = false;
            }
        }
        if all {
            break;
        }
    }
    z
}

/// Replaces each tight cluster of roots (a numerically multiple root) by its
/// centroid; the centroid of a perturbed m-fold root is accurate to roughly
/// machine precision while the individual members are only good to `ε^{1/m}`.
fn merge_clusters<T: Real>(z: &mut [Complex<T>], radius: T) -> Vec<Vec<usize>> {
    let n = z.len();
    let mut label: Vec<Option<usize>> = vec![None; n];
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        if label[i].is_some() {
            continue;
        }
        let c = clusters.len();
        label[i] = Some(c);
        let mut members = vec![i];
        let mut k = 0;
        while k < members.len() {
            let a = z[members[k]];
            for j in 0..n {
                if label[j].is_none() && (z[j] - a).norm() <= radius * (T::one() + a.norm()) {
                    label[j] = Some(c);
                    members.push(j);
                }
            }
            k += 1;
        }
        clusters.push(members);
    }
    for members in &clusters {
        if members.len() > 1 {
            let sum = members.iter().fold(Complex::new(T::zero(), T::zero()), |acc, &i| acc + z[i]);
            let mean = sum / T::from_usize(members.len());
            for &i in members {
                z[i] = mean;
            }
        }
    }
    clusters
}

/// Deterministic, well-spread start vectors for inverse iteration.
fn start_vector<T: Real>(n: usize, seed: usize) -> Vec<Complex<T>> {
    let phi = T::lit(0.618_033_988_749_894_9);
    (0..n)
        .map(|l| {
            let t = phi * T::from_usize((seed + 1) * (l + 1)) + T::lit(0.1) * T::from_usize(seed);
            Complex::new(T::one() + (T::TAU() * t).cos() * T::lit(0.5), (T::TAU() * t).sin())
        })
        .collect()
}

fn normalize<T: Real>(v: &mut [Complex<T>]) -> T {
    let nrm = vector_norm(v);
    if nrm > T::zero() {
        for x in v.iter_mut() {
            *x /= nrm;
        }
    }
    nrm
}

fn residual<T: Real>(m: &CMatrix<T>, lambda: Complex<T>, v: &[Complex<T>]) -> T {
    let n = m.nrows();
    let mut acc = T::zero();
    for i in 0..n {
        let mut s = -lambda * v[i];
        for j in 0..n {
            s += m[(i, j)] * v[j];
        }
        acc += s.norm_sqr();
    }
    acc.sqrt()
}

/// Eigenvectors for one eigenvalue of multiplicity `count` by shifted
/// inverse iteration with Gram-Schmidt inside the cluster.
fn inverse_iteration<T: Real>(m: &CMatrix<T>, lambda: Complex<T>, count: usize) -> Vec<Vec<Complex<T>>> {
    let n = m.nrows();
    let scale = T::one() + lambda.norm() + max_row_sum(m);
    let mut shifted = m.clone();
    let mut lu = None;
    for attempt in 0..6 {
        let mu = lambda
            + Complex::new(T::lit(1.3), T::lit(0.7)) * (T::epsilon() * scale * T::lit(10f64.powi(2 + 2 * attempt)));
        for i in 0..n {
            shifted[(i, i)] = m[(i, i)] - mu;
        }
        let candidate = Lu::new(&shifted);
        if candidate.solve(&vec![Complex::new(T::one(), T::zero()); n]).is_some() {
            lu = Some(candidate);
            break;
        }
    }
    let mut basis: Vec<Vec<Complex<T>>> = Vec::with_capacity(count);
    let Some(lu) = lu else {
        return basis;
    };
    let mut seed = 0;
    while basis.len() < count && seed < count + n + 4 {
        let mut v = start_vector::<T>(n, seed);
        seed += 1;
        for _ in 0..3 {
            let Some(w) = lu.solve(&v) else { break };
            v = w;
            for b in &basis {
                let proj =
                    b.iter().zip(&v).fold(Complex::new(T::zero(), T::zero()), |acc, (bi, vi)| acc + bi.conj() * vi);
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi -= proj * bi;
                }
            }
            if normalize(&mut v) == T::zero() {
                break;
            }
        }
        if vector_norm(&v) > T::lit(0.5) {
            basis.push(v);
        }
    }
    basis
}

/// Eigenvalues of `Φ(κ)` as the roots of the recurrence polynomial, with
/// residuals (and optionally eigenvectors) from inverse iteration.
pub fn eigenvalues<T: Real>(
    positions: &[T],
    kappa: Complex<T>,
    want_vectors: bool,
) -> Result<PhaseSpectrum<T>, PhaseError> {
    check_positions(positions)?;
    let n = positions.len();
    let pm = phase_matrix(positions, kappa);
    if n == 1 {
        let one = Complex::new(T::one(), T::zero());
        return Ok(PhaseSpectrum {
            eigenvalues: vec![one],
            eigenvectors: want_vectors.then(|| vec![vec![one]]),
            residuals: vec![T::zero()],
        });
    }
    let q = gap_factors(positions, kappa);
    let radius = T::one() + max_row_sum(&pm.matrix);
    let mut z = aberth(&q, n, radius);
    // One Newton polish per root; harmless for clusters, which are
    // re-centred afterwards.
    for zi in z.iter_mut() {
        let (p, dp) = char_poly_and_derivative(&q, *zi);
        let step = p / dp;
        if step.re.is_finite() && step.im.is_finite() && step.norm() < T::lit(1e-6) * (T::one() + zi.norm()) {
            *zi -= step;
        }
    }
    let cluster_radius = T::epsilon().powf(T::lit(0.25)) * T::lit(0.1);
    let clusters = merge_clusters(&mut z, cluster_radius);

    let mut vectors: Vec<Vec<Complex<T>>> = vec![Vec::new(); n];
    let mut residuals = vec![T::zero(); n];
    let tol = T::epsilon().sqrt() * T::lit(0.5) * (T::one() + max_row_sum(&pm.matrix));
    for members in &clusters {
        let lambda = z[members[0]];
        let basis = inverse_iteration(&pm.matrix, lambda, members.len());
        for (slot, &i) in members.iter().enumerate() {
            let v = basis.get(slot).or_else(|| basis.last()).cloned();
            let r = match &v {
                Some(v) => residual(&pm.matrix, lambda, v),
                None => T::infinity(),
            };
            if !(r <= tol) {
                return Err(PhaseError::RootFindingStall {
                    re: lambda.re.to_f64_lossy(),
                    im: lambda.im.to_f64_lossy(),
                    residual: r.to_f64_lossy(),
                });
            }
            residuals[i] = r;
            vectors[i] = v.unwrap_or_default();
        }
    }
    Ok(PhaseSpectrum { eigenvalues: z, eigenvectors: want_vectors.then_some(vectors), residuals })
}

/// Real and imaginary parts of `Φ(k + iη)`: `C_{jl} = e^{−η|Δx|} cos(kΔx)`,
/// `S_{jl} = e^{−η|Δx|} sin(k|Δx|)`.
pub fn cosine_sine_split<T: Real>(positions: &[T], k: T, eta: T) -> (DMatrix<T>, DMatrix<T>) {
    let n = positions.len();
    let mut c = DMatrix::from_element(n, n, T::zero());
    let mut s = DMatrix::from_element(n, n, T::zero());
    for j in 0..n {
        c[(j, j)] = T::one();
        for l in 0..j {
            let d = (positions[j] - positions[l]).abs();
            let damp = (-eta * d).exp();
            let cv = damp * (k * d).cos();
            let sv = damp * (k * d).sin();
            c[(j, l)] = cv;
            c[(l, j)] = cv;
            s[(j, l)] = sv;
            s[(l, j)] = sv;
        }
    }
    (c, s)
}

#[derive(Clone, Copy, Debug)]
pub struct SweepConfig<T> {
    pub k_start: T,
    pub k_end: T,
    pub step: T,
    pub eta: T,
    /// Distance below which two candidate assignments count as a tie.
    pub match_tol: T,
    /// Maximum number of step halvings used to resolve a tie.
    pub max_refinements: usize,
}

impl<T: Real> SweepConfig<T> {
    pub fn new(k_start: T, k_end: T, step: T, eta: T) -> Self {
        SweepConfig { k_start, k_end, step, eta, match_tol: T::lit(1e-6), max_refinements: 6 }
    }
}

/// Eigenvalue branches of `−iΦ(k + iη)` over a k-grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<T> {
    pub ks: Vec<T>,
    /// `branches[b][i]` is branch `b` at `ks[i]`.
    pub branches: Vec<Vec<Complex<T>>>,
    /// Set where the nearest-neighbour assignment stayed ambiguous.
    pub ambiguous: Vec<bool>,
}

impl<T: Real> Trajectory<T> {
    /// CSV with columns `k,branch,re,im,ambiguous`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,branch,re,im,ambiguous\n");
        for (i, k) in self.ks.iter().enumerate() {
            for (b, branch) in self.branches.iter().enumerate() {
                let v = branch[i];
                out.push_str(&format!(
                    "{:.16e},{},{:.16e},{:.16e},{}\n",
                    k.to_f64_lossy(),
                    b,
                    v.re.to_f64_lossy(),
                    v.im.to_f64_lossy(),
                    u8::from(self.ambiguous[i])
                ));
            }
        }
        out
    }

    /// Eigenvalue multiset at grid index `i`.
    pub fn spectrum_at(&self, i: usize) -> Vec<Complex<T>> {
        self.branches.iter().map(|b| b[i]).collect()
    }
}

fn rotated_spectrum<T: Real>(positions: &[T], k: T, eta: T) -> Result<Vec<Complex<T>>, PhaseError> {
    let minus_i = Complex::new(T::zero(), -T::one());
    Ok(eigenvalues(positions, Complex::new(k, eta), false)?.eigenvalues.into_iter().map(|l| l * minus_i).collect())
}

/// Greedy nearest-neighbour assignment: `perm[b]` is the index in `next`
/// continuing branch `b`. The flag reports a near-tie.
fn greedy_match<T: Real>(prev: &[Complex<T>], next: &[Complex<T>], tol: T) -> (Vec<usize>, bool) {
    let n = prev.len();
    let mut pairs: Vec<(T, usize, usize)> = Vec::with_capacity(n * n);
    for (b, p) in prev.iter().enumerate() {
        for (j, q) in next.iter().enumerate() {
            pairs.push(((*p - *q).norm(), b, j));
        }
    }
    pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(std::cmp::Ordering::Equal));
    let mut perm = vec![usize::MAX; n];
    let mut used = vec![false; n];
    for &(_, b, j) in &pairs {
        if perm[b] == usize::MAX && !used[j] {
            perm[b] = j;
            used[j] = true;
        }
    }
    // A tie: some branch has a second candidate (distinct eigenvalue) about
    // as close as its chosen one.
    let mut ambiguous = false;
    for (b, p) in prev.iter().enumerate() {
        let chosen = (*p - next[perm[b]]).norm();
        for (j, q) in next.iter().enumerate() {
            if j != perm[b] && (next[perm[b]] - *q).norm() > tol && ((*p - *q).norm() - chosen).abs() <= tol {
                ambiguous = true;
            }
        }
    }
    (perm, ambiguous)
}

/// Tracks the eigenvalues of `−iΦ(k + iη)` along `k ∈ [k_start, k_end]`.
/// Spectra are computed in parallel; branch matching is a sequential pass
/// that halves the step locally while the assignment is a near-tie.
pub fn trajectory_sweep<T: Real>(positions: &[T], cfg: &SweepConfig<T>) -> Result<Trajectory<T>, PhaseError> {
    check_positions(positions)?;
    if !(cfg.step > T::zero()) || !(cfg.k_end >= cfg.k_start) {
        return Err(PhaseError::InvalidSweep("step must be positive and the range nonempty"));
    }
    let count = ((cfg.k_end - cfg.k_start) / cfg.step).floor().to_usize().unwrap_or(0) + 1;
    let ks: Vec<T> = (0..count).map(|i| cfg.k_start + cfg.step * T::from_usize(i)).collect();
    let spectra: Vec<Vec<Complex<T>>> =
        ks.par_iter().map(|&k| rotated_spectrum(positions, k, cfg.eta)).collect::<Result<_, _>>()?;
    let n = positions.len();
    let mut branches: Vec<Vec<Complex<T>>> = (0..n).map(|b| vec![spectra[0][b]]).collect();
    let mut ambiguous = vec![false; count];
    for i in 1..count {
        let prev: Vec<Complex<T>> = branches.iter().map(|b| b[i - 1]).collect();
        let (perm, tie) = greedy_match(&prev, &spectra[i], cfg.match_tol);
        let (perm, tie) =
            if tie { refine_match(positions, cfg, ks[i - 1], ks[i], &prev, &spectra[i], 0)? } else { (perm, false) };
        ambiguous[i] = tie;
        for (b, branch) in branches.iter_mut().enumerate() {
            branch.push(spectra[i][perm[b]]);
        }
    }
    Ok(Trajectory { ks, branches, ambiguous })
}

/// Resolves a near-tie by matching through the midpoint of `[k0, k1]`.
fn refine_match<T: Real>(
    positions: &[T],
    cfg: &SweepConfig<T>,
    k0: T,
    k1: T,
    prev: &[Complex<T>],
    target: &[Complex<T>],
    depth: usize,
) -> Result<(Vec<usize>, bool), PhaseError> {
    if depth >= cfg.max_refinements {
        let (perm, _) = greedy_match(prev, target, cfg.match_tol);
        return Ok((perm, true));
    }
    let km = T::lit(0.5) * (k0 + k1);
    let mid = rotated_spectrum(positions, km, cfg.eta)?;
    let (p1, t1) = greedy_match(prev, &mid, cfg.match_tol);
    let (p1, t1) = if t1 { refine_match(positions, cfg, k0, km, prev, &mid, depth + 1)? } else { (p1, false) };
    let mid_ordered: Vec<Complex<T>> = p1.iter().map(|&j| mid[j]).collect();
    let (p2, t2) = greedy_match(&mid_ordered, target, cfg.match_tol);
    let (p2, t2) =
        if t2 { refine_match(positions, cfg, km, k1, &mid_ordered, target, depth + 1)? } else { (p2, false) };
    Ok((p2, t1 || t2))
}

/// Largest pairwise distance after optimally (greedily) matching two
/// eigenvalue multisets.
pub fn spectral_distance<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> T {
    let (perm, _) = greedy_match(a, b, T::zero());
    a.iter().enumerate().map(|(i, x)| (*x - b[perm[i]]).norm()).fold(T::zero(), T::max)
}

/// Best rational approximation `p/q` of `x` with `q ≤ max_den`, from the
/// continued-fraction convergents.
fn rational_approx<T: Real>(x: T, max_den: u64) -> (i64, u64) {
    let (mut h0, mut h1) = (0i64, 1i64);
    let (mut k0, mut k1) = (1u64, 0u64);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        let ai = a.to_i64().unwrap_or(0);
        let h2 = ai.saturating_mul(h1).saturating_add(h0);
        let k2 = (ai.max(0) as u64).saturating_mul(k1).saturating_add(k0);
        if k2 > max_den || k2 == 0 && k1 != 0 {
            break;
        }
        h0 = h1;
        h1 = h2;
        k0 = k1;
        k1 = k2;
        let frac = r - a;
        if frac <= T::epsilon() * T::lit(16.0) {
            break;
        }
        r = T::one() / frac;
    }
    (h1, k1.max(1))
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Period in k of `Φ(k)` for commensurable gaps: every nonzero gap must be
/// an integer multiple of a common unit `u` (ratios rational with
/// denominators up to `max_den`, matched within `tol`), giving `P = 2π/u`.
/// Returns `None` for incommensurable gaps.
pub fn commensurate_period<T: Real>(positions: &[T], max_den: u64, tol: T) -> Option<T> {
    let gaps: Vec<T> = positions.windows(2).map(|w| w[1] - w[0]).filter(|g| *g > T::zero()).collect();
    let Some(&g0) = gaps.first() else {
        return Some(T::TAU());
    };
    let mut fracs = Vec::with_capacity(gaps.len());
    for &g in &gaps {
        let ratio = g / g0;
        let (p, q) = rational_approx(ratio, max_den);
        let approx = T::lit(p as f64) / T::lit(q as f64);
        if (approx - ratio).abs() > tol * (T::one() + ratio.abs()) || p <= 0 {
            return None;
        }
        fracs.push((p as u64, q));
    }
    let lcm = fracs.iter().fold(1u64, |l, &(_, q)| l / gcd(l, q) * q);
    let numerators: Vec<u64> = fracs.iter().map(|&(p, q)| p * (lcm / q)).collect();
    let g = numerators.iter().fold(0u64, |acc, &v| gcd(acc, v));
    let unit = g0 * T::lit(g as f64) / T::lit(lcm as f64);
    Some(T::TAU() / unit)
}

/// Whether the spectrum of `−iΦ(k + iη)` at `k` and at `k + period` agree
/// as multisets within `tol`.
pub fn closes_after<T: Real>(positions: &[T], k: T, eta: T, period: T, tol: T) -> Result<bool, PhaseError> {
    let a = rotated_spectrum(positions, k, eta)?;
    let b = rotated_spectrum(positions, k + period, eta)?;
    Ok(spectral_distance(&a, &b) <= tol)
}

/// Smallest `|λ + i| − 1` over a sweep of `−iΦ`: the signed distance of the
/// trajectory from the unit circle about `−i` (the image of the circle about
/// 1 for `Φ`). Negative values mean some eigenvalue lies inside. Reported as
/// a diagnostic only.
pub fn disc_exclusion_margin<T: Real>(traj: &Trajectory<T>) -> T {
    let centre = Complex::new(T::zero(), -T::one());
    traj.branches.iter().flatten().map(|l| (*l - centre).norm() - T::one()).fold(T::infinity(), T::min)
}

/// Smallest spectral distance between grid point `from` and any later grid
/// point at least `min_separation` away in k.
pub fn min_return_distance<T: Real>(traj: &Trajectory<T>, from: usize, min_separation: T) -> T {
    let start = traj.spectrum_at(from);
    let k0 = traj.ks[from];
    (from + 1..traj.ks.len())
        .filter(|&i| traj.ks[i] - k0 >= min_separation)
        .map(|i| spectral_distance(&start, &traj.spectrum_at(i)))
        .fold(T::infinity(), T::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::determinant;
    use std::f64::consts::PI;

    type C = Complex<f64>;

    #[test]
    fn small_matrices_by_hand() {
        let m = phase_matrix(&[0.0, 1.0], C::new(PI, 0.0)).matrix;
        assert!((m[(0, 1)] - C::new(-1.0, 0.0)).norm() < 1e-15);
        let m = phase_matrix(&[0.0, 1.0, 2.0], C::new(PI / 2.0, 0.0)).matrix;
        assert!((m[(0, 1)] - C::i()).norm() < 1e-15);
        assert!((m[(0, 2)] + 1.0).norm() < 1e-15);
    }

    #[test]
    fn recurrence_hand_values() {
        assert!((char_poly(&[0.0], C::new(0.3, 0.0), C::new(1.0, 0.0)).value - 0.7).norm() < 1e-15);
        assert!(char_poly(&[0.0, 1.0], C::new(0.0, 0.0), C::new(PI, 0.0)).value.norm() < 1e-15);
        let x = [0.0, 1.0, 2.0];
        let k = C::new(PI / 2.0, 0.0);
        let p = char_poly(&x, C::new(1.0, 0.0), k);
        assert!((p.value - 2.0).norm() < 1e-14);
        assert!((det_closed(&x, k) - 4.0).norm() < 1e-14);
        assert!((determinant(&phase_matrix(&x, k).matrix) - 4.0).norm() < 1e-13);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let x = [0.0, 0.7, 1.1, 2.9];
        let q = gap_factors(&x, C::new(1.3, 0.2));
        let l = C::new(0.4, -0.3);
        let h = 1e-6;
        let (_, d) = char_poly_and_derivative(&q, l);
        let fd = (char_poly_and_derivative(&q, l + h).0 - char_poly_and_derivative(&q, l - h).0) / (2.0 * h);
        assert!((d - fd).norm() < 1e-7);
    }

    #[test]
    fn resonant_spectra() {
        let s = eigenvalues(&[0.0, 1.0], C::new(PI, 0.0), true).unwrap();
        let mut ev = s.eigenvalues.clone();
        ev.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        assert!(ev[0].norm() < 1e-12 && (ev[1] - 2.0).norm() < 1e-12);
        let s = eigenvalues(&[0.0, 1.0, 2.0], C::new(PI, 0.0), true).unwrap();
        assert_eq!(s.null_count(1e-8), 2);
        assert!(s.eigenvalues.iter().any(|l| (l - 3.0).norm() < 1e-8));
    }

    #[test]
    fn rational_period() {
        let p = commensurate_period(&[0.0, 1.0, 1.5], 1000, 1e-12).unwrap();
        assert!((p - 4.0 * PI).abs() < 1e-12);
        assert!(commensurate_period(&[0.0, 1.0, 1.0 + 0.5f64.sqrt()], 1000, 1e-12).is_none());
    }

    #[test]
    fn single_precision_spectrum() {
        let s = eigenvalues(&[0.0f32, 1.0], Complex::new(1.0f32, 0.0), false).unwrap();
        let sum: Complex<f32> = s.eigenvalues.iter().sum();
        assert!((sum - 2.0).norm() < 1e-5);
    }
}
