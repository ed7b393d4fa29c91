//! Adaptive quadrature for complex-valued integrands.
//!
//! Globally adaptive 21-point Gauss-Kronrod on finite intervals, tanh-sinh
//! panels for integrands peaked at an endpoint, a rational map for
//! semi-infinite ranges, and cycle summation with Wynn's epsilon algorithm
//! for oscillatory tails. Straight segments and rays in the complex plane are
//! handled by parametrization.

use num_complex::Complex;
use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadError {
    #[error("subdivision limit reached (error estimate {error:.3e}, target {target:.3e})")]
    SubdivisionLimit { error: f64, target: f64 },
    #[error("roundoff prevents reaching the target (error estimate {error:.3e}, target {target:.3e})")]
    Roundoff { error: f64, target: f64 },
    #[error("integrand returned a non-finite value at x = {0}")]
    NonFinite(f64),
    #[error("{0} did not converge (last change {1:.3e})")]
    NoConvergence(&'static str, f64),
}

#[derive(Clone, Copy, Debug)]
pub struct QuadConfig<T> {
    pub abs_tol: T,
    pub rel_tol: T,
    pub max_subdivisions: usize,
}

impl<T: Real> QuadConfig<T> {
    pub fn new(abs_tol: T, rel_tol: T) -> Self {
        QuadConfig { abs_tol, rel_tol, max_subdivisions: 4000 }
    }

    fn target(&self, value: Complex<T>) -> T {
        self.abs_tol.max(self.rel_tol * value.norm())
    }
}

impl<T: Real> Default for QuadConfig<T> {
    fn default() -> Self {
        let eps = T::epsilon();
        QuadConfig::new(eps * T::lit(1e4), eps * T::lit(1e4))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadResult<T> {
    pub value: Complex<T>,
    pub error: T,
    pub evaluations: usize,
}

const XGK: [f64; 11] = [
    0.995657163025808080735527280689003,
    0.973906528517171720077964012084452,
    0.930157491355708226001207180059508,
    0.865063366688984510732096688423493,
    0.780817726586416897063717578345042,
    0.679409568299024406234327365114874,
    0.562757134668604683339000099272694,
    0.433395394129247190799265943165784,
    0.294392862701460198131126603103866,
    0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
];

const WGK: [f64; 11] = [
    0.011694638867371874278064396062192,
    0.032558162307964727478818972459390,
    0.054755896574351996031381300244580,
    0.075039674810919952767043140916190,
    0.093125454583697605535065465083366,
    0.109387158802297641899210590325805,
    0.123491976262065851077600525452054,
    0.134709217311473325928054001771707,
    0.142775938577060080797094273138717,
    0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
];

const WG: [f64; 5] = [
    0.066671344308688137593568809893332,
    0.149451349150580593145776339657697,
    0.219086362515982043995534934228163,
    0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
];

#[derive(Clone, Copy, Debug)]
struct Panel<T> {
    a: T,
    b: T,
    value: Complex<T>,
    error: T,
    splittable: bool,
}

fn finite<T: Real>(v: Complex<T>) -> bool {
    v.re.is_finite() && v.im.is_finite()
}

/// One 21-point Kronrod panel with the QUADPACK error heuristic.
fn kronrod21<T: Real, F: FnMut(T) -> Complex<T>>(f: &mut F, a: T, b: T) -> Result<(Complex<T>, T), QuadError> {
    let half = T::lit(0.5);
    let center = half * (a + b);
    let h = half * (b - a);
    let zero = Complex::new(T::zero(), T::zero());
    let fc = f(center);
    if !finite(fc) {
        return Err(QuadError::NonFinite(center.to_f64_lossy()));
    }
    let mut kron = fc * T::lit(WGK[10]);
    let mut gauss = zero;
    let mut resabs = fc.norm() * T::lit(WGK[10]);
    let mut values = [(zero, zero); 10];
    for j in 0..10 {
        let dx = h * T::lit(XGK[j]);
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        if !finite(f1) || !finite(f2) {
            return Err(QuadError::NonFinite((center + dx).to_f64_lossy()));
        }
        let w = T::lit(WGK[j]);
        kron += (f1 + f2) * w;
        resabs += (f1.norm() + f2.norm()) * w;
        if j % 2 == 1 {
            gauss += (f1 + f2) * T::lit(WG[j / 2]);
        }
        values[j] = (f1, f2);
    }
    let mean = kron * half;
    let mut resasc = (fc - mean).norm() * T::lit(WGK[10]);
    for j in 0..10 {
        let (f1, f2) = values[j];
        resasc += ((f1 - mean).norm() + (f2 - mean).norm()) * T::lit(WGK[j]);
    }
    let habs = h.abs();
    let value = kron * h;
    resabs *= habs;
    resasc *= habs;
    let mut err = ((kron - gauss) * h).norm();
    if resasc != T::zero() && err != T::zero() {
        let scale = (T::lit(200.0) * err / resasc).powf(T::lit(1.5));
        err = resasc * scale.min(T::one());
    }
    let floor = T::lit(50.0) * T::epsilon() * resabs;
    if resabs > T::min_positive_value() / (T::lit(50.0) * T::epsilon()) {
        err = err.max(floor);
    }
    Ok((value, err))
}

/// Globally adaptive Gauss-Kronrod over the union of consecutive intervals
/// `[p₀,p₁] ∪ [p₁,p₂] ∪ …` given by `points`.
pub fn gauss_kronrod_points<T: Real, F: FnMut(T) -> Complex<T>>(
    mut f: F,
    points: &[T],
    cfg: &QuadConfig<T>,
) -> Result<QuadResult<T>, QuadError> {
    assert!(points.len() >= 2, "need at least one interval");
    let mut panels = Vec::with_capacity(points.len() + 64);
    let mut evaluations = 0;
    for w in points.windows(2) {
        if w[0] == w[1] {
            continue;
        }
        let (value, error) = kronrod21(&mut f, w[0], w[1])?;
        evaluations += 21;
        panels.push(Panel { a: w[0], b: w[1], value, error, splittable: true });
    }
    let zero = Complex::new(T::zero(), T::zero());
    loop {
        let total: Complex<T> = panels.iter().fold(zero, |acc, p| acc + p.value);
        let error: T = panels.iter().fold(T::zero(), |acc, p| acc + p.error);
        let target = cfg.target(total);
        if error <= target {
            return Ok(QuadResult { value: total, error, evaluations });
        }
        let worst = panels
            .iter()
            .enumerate()
            .filter(|(_, p)| p.splittable)
            .max_by(|x, y| x.1.error.partial_cmp(&y.1.error).unwrap_or(std::cmp::Ordering::Equal))
            .map(|(i, _)| i);
        let Some(i) = worst else {
            return Err(QuadError::Roundoff { error: error.to_f64_lossy(), target: target.to_f64_lossy() });
        };
        if panels.len() >= cfg.max_subdivisions {
            return Err(QuadError::SubdivisionLimit { error: error.to_f64_lossy(), target: target.to_f64_lossy() });
        }
        let p = panels[i];
        let mid = T::lit(0.5) * (p.a + p.b);
        let tiny = T::lit(100.0) * T::epsilon() * (p.a.abs() + p.b.abs() + T::min_positive_value());
        if (p.b - p.a).abs() <= tiny {
            panels[i].splittable = false;
            continue;
        }
        let (v1, e1) = kronrod21(&mut f, p.a, mid)?;
        let (v2, e2) = kronrod21(&mut f, mid, p.b)?;
        evaluations += 42;
        panels[i] = Panel { a: p.a, b: mid, value: v1, error: e1, splittable: true };
        panels.push(Panel { a: mid, b: p.b, value: v2, error: e2, splittable: true });
    }
}

/// Adaptive Gauss-Kronrod on `[a, b]`.
pub fn gauss_kronrod<T: Real, F: FnMut(T) -> Complex<T>>(
    f: F,
    a: T,
    b: T,
    cfg: &QuadConfig<T>,
) -> Result<QuadResult<T>, QuadError> {
    gauss_kronrod_points(f, &[a, b], cfg)
}

/// Tanh-sinh (double exponential) rule on `[a, b]`, refined level by level
/// until two successive estimates agree. Nodes cluster double-exponentially
/// at both endpoints, so integrands singular or sharply peaked there are
/// handled without subdivision.
pub fn tanh_sinh<T: Real, F: FnMut(T) -> Complex<T>>(
    mut f: F,
    a: T,
    b: T,
    cfg: &QuadConfig<T>,
) -> Result<QuadResult<T>, QuadError> {
    let half = T::lit(0.5);
    let hw = half * (b - a);
    let center = half * (a + b);
    let pi2 = T::FRAC_PI_2();
    let t_max = if T::epsilon() < T::lit(1e-10) { T::lit(4.0) } else { T::lit(3.0) };
    let zero = Complex::new(T::zero(), T::zero());
    let mut evaluations = 0usize;

    // Node at parameter t: returns (x, weight) with the distance to the
    // nearest endpoint computed without cancellation.
    let node = |t: T| -> Option<(T, T)> {
        let u = pi2 * t.sinh();
        let e = (-T::lit(2.0) * u.abs()).exp();
        let delta = T::lit(2.0) * e / (T::one() + e);
        let c = u.cosh();
        let w = pi2 * t.cosh() / (c * c);
        let offset = hw * delta;
        if offset.abs() <= T::zero() || !w.is_finite() {
            return None;
        }
        let x = if t >= T::zero() { b - offset } else { a + offset };
        if x == a || x == b {
            return None;
        }
        Some((x, w))
    };

    let mut step = T::one();
    let mut sum = f(center) * pi2;
    evaluations += 1;
    let mut k = T::one();
    while k <= t_max {
        for t in [k, -k] {
            if let Some((x, w)) = node(t) {
                let v = f(x);
                evaluations += 1;
                if !finite(v) {
                    return Err(QuadError::NonFinite(x.to_f64_lossy()));
                }
                sum += v * w;
            }
        }
        k += step;
    }
    let mut estimate = sum * step * hw;
    for _level in 0..12 {
        step *= half;
        let mut t = step;
        let mut added = zero;
        while t <= t_max {
            for s in [t, -t] {
                if let Some((x, w)) = node(s) {
                    let v = f(x);
                    evaluations += 1;
                    if !finite(v) {
                        return Err(QuadError::NonFinite(x.to_f64_lossy()));
                    }
                    added += v * w;
                }
            }
            t += step + step;
        }
        sum += added;
        let next = sum * step * hw;
        let change = (next - estimate).norm();
        estimate = next;
        if change <= cfg.target(estimate) {
            return Ok(QuadResult { value: estimate, error: change, evaluations });
        }
    }
    Err(QuadError::NoConvergence("tanh-sinh", f64::NAN))
}

/// `∫_a^∞ f(x) dx` through the map `x = a + (1 − t)/t`, `t ∈ (0, 1]`.
pub fn integrate_to_infinity<T: Real, F: FnMut(T) -> Complex<T>>(
    mut f: F,
    a: T,
    cfg: &QuadConfig<T>,
) -> Result<QuadResult<T>, QuadError> {
    let g = |t: T| {
        let x = a + (T::one() - t) / t;
        let v = f(x) / (t * t);
        if finite(v) {
            v
        } else {
            Complex::new(T::zero(), T::zero())
        }
    };
    gauss_kronrod(g, T::zero(), T::one(), cfg)
}

/// Wynn's epsilon extrapolation of a sequence of partial sums. Returns the
/// accelerated limit and the change between the last two even-column
/// estimates.
pub fn wynn_epsilon<T: Real>(sums: &[Complex<T>]) -> (Complex<T>, T) {
    let n = sums.len();
    assert!(n > 0);
    if n < 3 {
        let last = sums[n - 1];
        let err = if n == 2 { (sums[1] - sums[0]).norm() } else { T::infinity() };
        return (last, err);
    }
    let zero = Complex::new(T::zero(), T::zero());
    let mut prev = vec![zero; n + 1];
    let mut cur: Vec<Complex<T>> = sums.to_vec();
    let mut best = cur[cur.len() - 1];
    let mut best_prev = cur[cur.len() - 2];
    let mut column = 0usize;
    while cur.len() > 1 {
        let mut next = Vec::with_capacity(cur.len() - 1);
        for i in 0..cur.len() - 1 {
            let d = cur[i + 1] - cur[i];
            if d.norm() == T::zero() {
                return (cur[i + 1], T::zero());
            }
            next.push(prev[i + 1] + Complex::new(T::one(), T::zero()) / d);
        }
        prev = cur;
        cur = next;
        column += 1;
        if column.is_multiple_of(2) && cur.len() >= 2 {
            best = cur[cur.len() - 1];
            best_prev = cur[cur.len() - 2];
        } else if column.is_multiple_of(2) {
            best_prev = best;
            best = cur[0];
        }
    }
    (best, (best - best_prev).norm())
}

/// `∫_a^∞ f(x) dx` for an integrand whose sign alternates with the given half
/// period (for example `h(x)·cos(d·x)` with `h` slowly decaying). The range is
/// cut into half-period cells, each integrated adaptively, and the partial
/// sums are accelerated with [`wynn_epsilon`].
pub fn oscillatory_tail<T: Real, F: FnMut(T) -> Complex<T>>(
    mut f: F,
    a: T,
    half_period: T,
    cfg: &QuadConfig<T>,
) -> Result<QuadResult<T>, QuadError> {
    let max_cells = 200usize;
    let cell_cfg = QuadConfig {
        abs_tol: cfg.abs_tol * T::lit(0.05),
        rel_tol: cfg.rel_tol * T::lit(0.05),
        max_subdivisions: cfg.max_subdivisions,
    };
    let mut sums: Vec<Complex<T>> = Vec::with_capacity(max_cells);
    let mut total = Complex::new(T::zero(), T::zero());
    let mut evaluations = 0;
    let mut last_estimate: Option<Complex<T>> = None;
    for j in 0..max_cells {
        let lo = a + half_period * T::from_usize(j);
        let hi = lo + half_period;
        let cell = gauss_kronrod(&mut f, lo, hi, &cell_cfg)?;
        evaluations += cell.evaluations;
        total += cell.value;
        sums.push(total);
        if cell.value.norm() <= cfg.abs_tol * T::lit(1e-3) {
            return Ok(QuadResult { value: total, error: cell.value.norm(), evaluations });
        }
        if sums.len() >= 6 {
            let start = sums.len().saturating_sub(24);
            let (estimate, change) = wynn_epsilon(&sums[start..]);
            if let Some(prev) = last_estimate {
                let drift = (estimate - prev).norm().max(change);
                if drift <= cfg.target(estimate) {
                    return Ok(QuadResult { value: estimate, error: drift, evaluations });
                }
            }
            last_estimate = Some(estimate);
        }
    }
    Err(QuadError::NoConvergence("oscillatory tail", f64::NAN))
}

/// Line integral `∫ f(z) dz` along the straight segment from `z0` to `z1`.
pub fn segment<T: Real, F: FnMut(Complex<T>) -> Complex<T>>(
    mut f: F,
    z0: Complex<T>,
    z1: Complex<T>,
    cfg: &QuadConfig<T>,
) -> Result<QuadResult<T>, QuadError> {
    let dz = z1 - z0;
    gauss_kronrod(|t: T| f(z0 + dz * t) * dz, T::zero(), T::one(), cfg)
}

/// Line integral `∫ f(z) dz` along the ray `z0 + s·dir`, `s ∈ [0, ∞)`.
pub fn ray<T: Real, F: FnMut(Complex<T>) -> Complex<T>>(
    mut f: F,
    z0: Complex<T>,
    dir: Complex<T>,
    cfg: &QuadConfig<T>,
) -> Result<QuadResult<T>, QuadError> {
    integrate_to_infinity(|s: T| f(z0 + dir * s) * dir, T::zero(), cfg)
}

/// Nodes and weights of the `p`-point Gauss-Legendre rule on `[−1, 1]`,
/// by Newton iteration on the three-term recurrence.
pub fn gauss_legendre<T: Real>(p: usize) -> (Vec<T>, Vec<T>) {
    let mut nodes = vec![T::zero(); p];
    let mut weights = vec![T::zero(); p];
    let pi = T::PI();
    let np = T::from_usize(p);
    let half = T::lit(0.5);
    for i in 0..p.div_ceil(2) {
        let mut x = (pi * (T::from_usize(i) + T::lit(0.75)) / (np + half)).cos();
        let mut dp = T::one();
        for _ in 0..100 {
            let (mut p0, mut p1) = (T::one(), x);
            for k in 2..=p {
                let kf = T::from_usize(k);
                let p2 = ((kf + kf - T::one()) * x * p1 - (kf - T::one()) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = np * (x * p1 - p0) / (x * x - T::one());
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() <= T::epsilon() * T::lit(4.0) {
                break;
            }
        }
        let w = T::lit(2.0) / ((T::one() - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[p - 1 - i] = x;
        weights[i] = w;
        weights[p - 1 - i] = w;
    }
    (nodes, weights)
}
