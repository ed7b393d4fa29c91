//! Dormand–Prince 5(4) for complex linear or nonlinear systems `y' = f(t, y)`.

use num_complex::Complex;
use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error("step size underflow at t = {0}")]
    StepUnderflow(f64),
    #[error("step limit {limit} reached at t = {t}")]
    StepLimit { t: f64, limit: usize },
    #[error("output times must be nondecreasing and start at or after t0")]
    BadOutputTimes,
}

#[derive(Clone, Copy, Debug)]
pub struct OdeConfig<T> {
    pub rel_tol: T,
    pub abs_tol: T,
    pub initial_step: Option<T>,
    pub max_step: Option<T>,
    pub max_steps: usize,
}

impl<T: Real> OdeConfig<T> {
    pub fn new(rel_tol: T, abs_tol: T) -> Self {
        OdeConfig { rel_tol, abs_tol, initial_step: None, max_step: None, max_steps: 10_000_000 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order weights minus the embedded fourth-order weights.
const E: [f64; 7] =
    [71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0];

/// States at the requested output times plus step statistics.
pub type Solution<T> = (Vec<Vec<Complex<T>>>, OdeStats);

/// Integrates from `t0` and returns the state at each of `t_out`; steps are
/// clipped to land exactly on the output times. Error control uses the RMS
/// of `err_i/(abs_tol + rel_tol·max(|y_i|, |y_i^new|))`.
pub fn dormand_prince<T, F>(
    f: F,
    t0: T,
    y0: &[Complex<T>],
    t_out: &[T],
    cfg: &OdeConfig<T>,
) -> Result<Solution<T>, OdeError>
where
    T: Real,
    F: FnMut(T, &[Complex<T>], &mut [Complex<T>]),
{
    let mut out = Vec::with_capacity(t_out.len());
    let stats = dormand_prince_observed(f, t0, y0, t_out, cfg, |_, _, y| out.push(y.to_vec()))?;
    Ok((out, stats))
}

/// As [`dormand_prince`], handing each output state to `observe` instead of
/// collecting it.
pub fn dormand_prince_observed<T, F, O>(
    mut f: F,
    t0: T,
    y0: &[Complex<T>],
    t_out: &[T],
    cfg: &OdeConfig<T>,
    mut observe: O,
) -> Result<OdeStats, OdeError>
where
    T: Real,
    F: FnMut(T, &[Complex<T>], &mut [Complex<T>]),
    O: FnMut(usize, T, &[Complex<T>]),
{
    if t_out.first().is_some_and(|t| *t < t0) || t_out.windows(2).any(|w| w[1] < w[0]) {
        return Err(OdeError::BadOutputTimes);
    }
    let n = y0.len();
    let zero = Complex::new(T::zero(), T::zero());
    let mut k: Vec<Vec<Complex<T>>> = vec![vec![zero; n]; 7];
    let mut stage = vec![zero; n];
    let mut y = y0.to_vec();
    let mut y_new = vec![zero; n];
    let mut t = t0;
    let mut stats = OdeStats::default();
    let span = t_out.last().map_or(T::one(), |te| (*te - t0).abs().max(T::one()));
    let mut h = cfg.initial_step.unwrap_or(span * T::lit(1e-4));
    let h_max = cfg.max_step.unwrap_or(span);
    f(t, &y, &mut k[0]);
    stats.evaluations += 1;
    for (idx, &target) in t_out.iter().enumerate() {
        while t < target {
            if stats.accepted + stats.rejected >= cfg.max_steps {
                return Err(OdeError::StepLimit { t: t.to_f64_lossy(), limit: cfg.max_steps });
            }
            let last = h >= target - t;
            let step = if last { target - t } else { h.min(h_max) };
            if step <= T::epsilon() * T::lit(16.0) * t.abs().max(T::one()) && !last {
                return Err(OdeError::StepUnderflow(t.to_f64_lossy()));
            }
            for s in 1..7 {
                for i in 0..n {
                    let mut acc = y[i];
                    for (j, kj) in k.iter().enumerate().take(s) {
                        let a = A[s][j];
                        if a != 0.0 {
                            acc += kj[i] * (step * T::lit(a));
                        }
                    }
                    stage[i] = acc;
                }
                f(t + step * T::lit(C[s]), &stage, &mut k[s]);
                stats.evaluations += 1;
            }
            // Stage 7 is evaluated at the fifth-order solution (FSAL).
            y_new.copy_from_slice(&stage);
            let mut err = T::zero();
            for i in 0..n {
                let mut e = zero;
                for (j, kj) in k.iter().enumerate() {
                    if E[j] != 0.0 {
                        e += kj[i] * T::lit(E[j]);
                    }
                }
                let sc = cfg.abs_tol + cfg.rel_tol * y[i].norm().max(y_new[i].norm());
                let r = (e * step).norm() / sc;
                err += r * r;
            }
            let err = (err / T::from_usize(n.max(1))).sqrt();
            if err <= T::one() {
                t = if last { target } else { t + step };
                std::mem::swap(&mut y, &mut y_new);
                k.swap(0, 6);
                stats.accepted += 1;
            } else {
                stats.rejected += 1;
            }
            let factor = if err == T::zero() {
                T::lit(5.0)
            } else {
                (T::lit(0.9) * err.powf(T::lit(-0.2))).min(T::lit(5.0)).max(T::lit(0.2))
            };
            // A step clipped to an output time says little about the scale.
            if !(last && err <= T::one()) {
                h = step * factor;
            }
            if h <= T::epsilon() * T::lit(16.0) * t.abs().max(T::one()) {
                return Err(OdeError::StepUnderflow(t.to_f64_lossy()));
            }
        }
        observe(idx, target, &y);
    }
    Ok(stats)
}
