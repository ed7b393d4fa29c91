use thiserror::Error;

use crate::phase::PhaseError;
use crate::quadrature::QuadError;
use crate::C64;

/// Errors raised by the physical layers of the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: String, reason: String },
    #[error("invalid atom array: {0}")]
    InvalidAtoms(String),
    #[error("normalization integral does not converge: {0}")]
    NonConvergent(String),
    #[error("hypothesis {hypothesis} violated (worst violation {violation:.3e})")]
    HypothesisViolated { hypothesis: u8, violation: f64 },

    #[error("window too small: ω(k) − E keeps one sign on [{lo}, {hi}] but a solution must exist")]
    WindowTooSmall { lo: f64, hi: f64 },
    #[error("z = {z} lies within {distance:.3e} of the critical value {value}")]
    NearCriticalValue { z: C64, value: C64, distance: f64 },
    #[error("Newton iteration failed from seed {seed}")]
    SeedFailure { seed: C64 },
    #[error("expected {expected} solution pairs of ω(κ) = {z}, found {found}")]
    SolutionCount { z: C64, expected: usize, found: usize },
    #[error("continuation hit a critical point (|ω′| = {derivative:.3e}) near z = {z}")]
    CriticalCollision { z: C64, derivative: f64 },
    #[error("continuation step underflow near z = {z}")]
    StepUnderflow { z: C64 },

    #[error("quadrature failed: {0}")]
    Quadrature(#[from] QuadError),
    #[error("real z = {0} lies inside the continuous spectrum; use the boundary values")]
    PoleOnPath(f64),
    #[error("ω′(κ) vanishes at κ = {0}")]
    CriticalMomentum(C64),
    #[error("z = {z} lies within {distance:.3e} of the contour image ω(Γ)")]
    ContourTooClose { z: C64, distance: f64 },
    #[error("E = {0} is a critical value of the dispersion")]
    CriticalValue(f64),

    #[error("phase matrix: {0}")]
    Phase(#[from] PhaseError),
    #[error("no real pole at E = {0}")]
    EmptyRealPoleSet(f64),
    #[error("expected a single dominant pole at E = {energy}, found {count}")]
    NotSingleDominantPole { energy: f64, count: usize },
    #[error("total real-pole residue vanishes at E = {0}")]
    VanishingResidue(f64),

    #[error("linear system is nearly singular (condition number {0:.3e})")]
    NearSingular(f64),
    #[error("Bromwich truncation error {estimate:.3e} exceeds tolerance {tolerance:.3e}")]
    TruncationDominated { estimate: f64, tolerance: f64 },
    #[error("residue circle around {pole} leaves the continuation domain: {reason}")]
    PoleCircleCrossesCut { pole: C64, reason: String },
    #[error("integrator step underflow at t = {0}")]
    IntegratorStepUnderflow(f64),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    /// Whether the failure is a numerical one (non-convergence, underflow,
    /// proximity to singular sets) rather than a malformed request.
    pub fn is_numerical(&self) -> bool {
        !matches!(
            self,
            Error::UnknownPreset(_)
                | Error::InvalidParam { .. }
                | Error::InvalidAtoms(_)
                | Error::InvalidInput(_)
                | Error::HypothesisViolated { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
