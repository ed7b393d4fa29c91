//! Built-in dispersion relations and form factors.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::scalar::principal_sqrt;
use crate::C64;

/// A branch cut of `ω` in the complex momentum plane: the ray
/// `anchor + t·direction`, `t ≥ 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchCut {
    pub anchor: C64,
    pub direction: C64,
}

/// Dispersion relation `ω(κ)` continued into the complex momentum plane.
pub trait Dispersion: Send + Sync + std::fmt::Debug {
    fn eval(&self, kappa: C64) -> C64;
    fn derivative(&self, kappa: C64) -> C64;
    /// Cuts bounding the analyticity region; empty for entire dispersions.
    fn branch_cuts(&self) -> Vec<BranchCut>;
    /// `min_k ω(k)` over the real line.
    fn minimum(&self) -> f64;
    /// Number of solution pairs `±κ̂` of `ω(κ) = z` on the physical sheet.
    fn solution_pairs(&self, z: C64) -> usize;
    fn name(&self) -> String;
    /// Whether `ω` is increasing on `[0, ∞)`.
    fn monotone_half_line(&self) -> bool {
        false
    }
    fn is_entire(&self) -> bool {
        self.branch_cuts().is_empty()
    }
}

/// Form factor profile `F(k)` and its squared modulus `G = |F|²`
/// continued analytically off the real axis.
pub trait FormFactor: Send + Sync + std::fmt::Debug {
    /// `F(k)` for real `k` (complex-valued in general).
    fn profile(&self, k: f64) -> C64;
    /// Analytic continuation of `G(k) = |F(k)|²`.
    fn g(&self, kappa: C64) -> C64;
    /// Overall coupling strength (γ or g).
    fn coupling(&self) -> f64;
    fn name(&self) -> String;
    /// Cuts of the continued `G`; empty when `G` is entire.
    fn branch_cuts(&self) -> Vec<BranchCut>;
}

/// Catalog of dispersion relations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DispersionKind {
    /// `ω = √(κ² + m²)`, principal branch, cuts `±i[m, ∞)`.
    Relativistic { m: f64 },
    /// `ω = a·κ² + c`.
    Quadratic { a: f64, c: f64 },
    /// `ω = a·κ⁴ + b·κ² + c`.
    Quartic { a: f64, b: f64, c: f64 },
    /// `ω = c·κ`; odd, so it violates the evenness hypothesis.
    Linear { c: f64 },
}

impl Dispersion for DispersionKind {
    fn eval(&self, k: C64) -> C64 {
        match *self {
            DispersionKind::Relativistic { m } => principal_sqrt(k * k + m * m),
            DispersionKind::Quadratic { a, c } => k * k * a + c,
            DispersionKind::Quartic { a, b, c } => {
                let k2 = k * k;
                k2 * k2 * a + k2 * b + c
            }
            DispersionKind::Linear { c } => k * c,
        }
    }

    fn derivative(&self, k: C64) -> C64 {
        match *self {
            DispersionKind::Relativistic { m } => k / principal_sqrt(k * k + m * m),
            DispersionKind::Quadratic { a, .. } => k * (2.0 * a),
            DispersionKind::Quartic { a, b, .. } => k * k * k * (4.0 * a) + k * (2.0 * b),
            DispersionKind::Linear { c } => C64::new(c, 0.0),
        }
    }

    fn branch_cuts(&self) -> Vec<BranchCut> {
        match *self {
            DispersionKind::Relativistic { m } => vec![
                BranchCut { anchor: C64::new(0.0, m), direction: C64::i() },
                BranchCut { anchor: C64::new(0.0, -m), direction: -C64::i() },
            ],
            _ => Vec::new(),
        }
    }

    fn minimum(&self) -> f64 {
        match *self {
            DispersionKind::Relativistic { m } => m,
            DispersionKind::Quadratic { c, .. } => c,
            DispersionKind::Quartic { a, b, c } => {
                if b >= 0.0 {
                    c
                } else {
                    c - b * b / (4.0 * a)
                }
            }
            DispersionKind::Linear { .. } => f64::NEG_INFINITY,
        }
    }

    fn solution_pairs(&self, z: C64) -> usize {
        match *self {
            // The principal root has nonnegative real part, so ω(κ) = z has
            // no solution on the physical sheet when Re z < 0.
            DispersionKind::Relativistic { .. } => usize::from(z.re > 0.0),
            DispersionKind::Quadratic { .. } | DispersionKind::Linear { .. } => 1,
            DispersionKind::Quartic { .. } => 2,
        }
    }

    fn name(&self) -> String {
        match self {
            DispersionKind::Relativistic { .. } => "relativistic",
            DispersionKind::Quadratic { .. } => "quadratic",
            DispersionKind::Quartic { .. } => "quartic",
            DispersionKind::Linear { .. } => "linear",
        }
        .to_string()
    }

    fn monotone_half_line(&self) -> bool {
        match *self {
            DispersionKind::Relativistic { .. } => true,
            DispersionKind::Quadratic { a, .. } => a > 0.0,
            DispersionKind::Quartic { a, b, .. } => a > 0.0 && b >= 0.0,
            DispersionKind::Linear { c } => c > 0.0,
        }
    }
}

/// Catalog of form factors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FormFactorKind {
    /// `F = g/√(2π)`, so `G = g²/(2π)`.
    Flat { g: f64 },
    /// `F = √(γ/2π)·(k² + m²)^{−1/4}`, so `G = γ/(2π√(κ² + m²))`.
    Relativistic { gamma: f64, m: f64 },
}

impl FormFactor for FormFactorKind {
    fn profile(&self, k: f64) -> C64 {
        match *self {
            FormFactorKind::Flat { g } => C64::new(g / (2.0 * PI).sqrt(), 0.0),
            FormFactorKind::Relativistic { gamma, m } => {
                C64::new((gamma / (2.0 * PI)).sqrt() * (k * k + m * m).powf(-0.25), 0.0)
            }
        }
    }

    fn g(&self, k: C64) -> C64 {
        match *self {
            FormFactorKind::Flat { g } => C64::new(g * g / (2.0 * PI), 0.0),
            FormFactorKind::Relativistic { gamma, m } => gamma / (2.0 * PI * principal_sqrt(k * k + m * m)),
        }
    }

    fn coupling(&self) -> f64 {
        match *self {
            FormFactorKind::Flat { g } => g,
            FormFactorKind::Relativistic { gamma, .. } => gamma,
        }
    }

    fn name(&self) -> String {
        match self {
            FormFactorKind::Flat { .. } => "flat",
            FormFactorKind::Relativistic { .. } => "relativistic",
        }
        .to_string()
    }

    fn branch_cuts(&self) -> Vec<BranchCut> {
        match *self {
            FormFactorKind::Flat { .. } => Vec::new(),
            FormFactorKind::Relativistic { m, .. } => vec![
                BranchCut { anchor: C64::new(0.0, m), direction: C64::i() },
                BranchCut { anchor: C64::new(0.0, -m), direction: -C64::i() },
            ],
        }
    }
}
