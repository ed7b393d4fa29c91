//! Model records: dispersion, form factor and atom array, the two built-in
//! presets, the coupling matrix and numerical checks of the structural
//! hypotheses the self-energy decomposition relies on.

mod catalog;
mod document;
mod validation;

use std::collections::BTreeMap;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

pub use catalog::{BranchCut, Dispersion, DispersionKind, FormFactor, FormFactorKind};
pub use document::{CustomDocument, ModelDocument, PresetDocument};
pub use validation::{validate_hypotheses, HypothesisCheck, ValidationGrid, ValidationReport};

use crate::dispersion_analysis::{critical_points, CriticalSet, Region};
use crate::error::{Error, Result};
use crate::scalar::expi;
use crate::{CMatrix64, C64};

/// Default cap on the number of atoms.
pub const DEFAULT_MAX_ATOMS: usize = 64;

/// Sorted positions `x_1 ≤ … ≤ x_n` with excitation energies `ε_j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomArray {
    positions: Vec<f64>,
    energies: Vec<f64>,
}

impl AtomArray {
    pub fn new(positions: Vec<f64>, energies: Vec<f64>) -> Result<Self> {
        Self::with_cap(positions, energies, DEFAULT_MAX_ATOMS)
    }

    pub fn with_cap(positions: Vec<f64>, energies: Vec<f64>, max_atoms: usize) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::InvalidAtoms("at least one atom is required".into()));
        }
        if positions.len() != energies.len() {
            return Err(Error::InvalidAtoms(format!(
                "{} positions but {} excitation energies",
                positions.len(),
                energies.len()
            )));
        }
        if positions.len() > max_atoms {
            return Err(Error::InvalidAtoms(format!("{} atoms exceed the cap of {max_atoms}", positions.len())));
        }
        if positions.iter().chain(&energies).any(|v| !v.is_finite()) {
            return Err(Error::InvalidAtoms("positions and energies must be finite".into()));
        }
        if positions.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidAtoms("positions must be sorted ascending".into()));
        }
        Ok(AtomArray { positions, energies })
    }

    /// `n` identical atoms with spacing `d` starting at 0, all at energy `ε`.
    pub fn lattice(n: usize, d: f64, epsilon: f64) -> Result<Self> {
        Self::new((0..n).map(|j| j as f64 * d).collect(), vec![epsilon; n])
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// Diagonal matrix `ℰ = diag(ε_j)`.
    pub fn energy_matrix(&self) -> CMatrix64 {
        let n = self.len();
        CMatrix64::from_fn(n, n, |i, j| if i == j { C64::new(self.energies[i], 0.0) } else { C64::new(0.0, 0.0) })
    }

    /// Smallest nonzero spacing, or `None` when all atoms coincide.
    pub fn min_gap(&self) -> Option<f64> {
        self.positions.windows(2).map(|w| w[1] - w[0]).filter(|g| *g > 0.0).reduce(f64::min)
    }
}

/// How the contour contribution `b(z)` is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ContourKind {
    /// No cuts: the contour term vanishes.
    Entire,
    /// Relativistic dispersion with the matching relativistic form factor:
    /// the cut discontinuity is integrated in closed form along `[im, i∞)`.
    WaveguideCut { m: f64, gamma: f64 },
    /// Numerical integral along a hairpin wrapped around each upper cut at
    /// the given distance (shrunk automatically to exclude nearby poles).
    Hairpin { offset: f64 },
}

/// Complete physical configuration. Immutable after construction.
#[derive(Clone, Debug)]
pub struct Model {
    dispersion: Arc<dyn Dispersion>,
    form_factor: Arc<dyn FormFactor>,
    atoms: AtomArray,
    contour: ContourKind,
    solution_pairs: Option<usize>,
    label: String,
    critical: Arc<OnceLock<CriticalSet>>,
}

impl Model {
    /// Builds a model from arbitrary dispersion/form-factor implementations.
    /// The contour defaults to `Entire` when neither carries branch cuts and
    /// to a hairpin around each upper cut otherwise.
    pub fn new(dispersion: Arc<dyn Dispersion>, form_factor: Arc<dyn FormFactor>, atoms: AtomArray) -> Self {
        let contour = if dispersion.branch_cuts().is_empty() && form_factor.branch_cuts().is_empty() {
            ContourKind::Entire
        } else {
            let scale = dispersion
                .branch_cuts()
                .iter()
                .chain(&form_factor.branch_cuts())
                .map(|c| c.anchor.norm())
                .fold(f64::INFINITY, f64::min);
            ContourKind::Hairpin { offset: 0.25 * scale.max(1e-3) }
        };
        let label = format!("{}/{}", dispersion.name(), form_factor.name());
        Model { dispersion, form_factor, atoms, contour, solution_pairs: None, label, critical: Arc::default() }
    }

    /// Builds a model from catalog entries, selecting the closed-form cut
    /// integral when the pair matches the waveguide structure.
    pub fn from_catalog(dispersion: DispersionKind, form_factor: FormFactorKind, atoms: AtomArray) -> Result<Self> {
        check_catalog(&dispersion, &form_factor)?;
        let mut model = Model::new(Arc::new(dispersion), Arc::new(form_factor), atoms);
        if let (DispersionKind::Relativistic { m }, FormFactorKind::Relativistic { gamma, m: mf }) =
            (dispersion, form_factor)
        {
            if (m - mf).abs() <= 1e-15 * m {
                model.contour = ContourKind::WaveguideCut { m, gamma };
            }
        }
        Ok(model)
    }

    pub fn with_contour(mut self, contour: ContourKind) -> Self {
        self.contour = contour;
        self
    }

    /// Overrides the number of solution pairs `r` reported by the dispersion.
    pub fn with_solution_pairs(mut self, r: usize) -> Self {
        self.solution_pairs = Some(r);
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Same physics, different atoms.
    pub fn with_atoms(&self, atoms: AtomArray) -> Self {
        Model { atoms, ..self.clone() }
    }

    pub fn dispersion(&self) -> &dyn Dispersion {
        self.dispersion.as_ref()
    }

    pub fn form_factor(&self) -> &dyn FormFactor {
        self.form_factor.as_ref()
    }

    pub fn atoms(&self) -> &AtomArray {
        &self.atoms
    }

    pub fn contour(&self) -> ContourKind {
        self.contour
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn n(&self) -> usize {
        self.atoms.len()
    }

    pub fn omega(&self, kappa: C64) -> C64 {
        self.dispersion.eval(kappa)
    }

    pub fn omega_prime(&self, kappa: C64) -> C64 {
        self.dispersion.derivative(kappa)
    }

    pub fn g(&self, kappa: C64) -> C64 {
        self.form_factor.g(kappa)
    }

    /// `r`: number of solution pairs of `ω(κ) = z`.
    pub fn solution_pairs(&self, z: C64) -> usize {
        self.solution_pairs.unwrap_or_else(|| self.dispersion.solution_pairs(z))
    }

    /// Critical points of `ω` in the default search box, computed once and
    /// shared by clones of this model.
    pub fn critical_set(&self) -> &CriticalSet {
        self.critical.get_or_init(|| critical_points(self, &Region::default_for(self)))
    }

    /// Whether both `ω` and `G` are entire (no contour contribution).
    pub fn is_entire(&self) -> bool {
        matches!(self.contour, ContourKind::Entire)
    }

    /// Upper-half-plane cuts of the integrand, one per direction (the one
    /// with the lowest anchor).
    pub fn upper_cuts(&self) -> Vec<BranchCut> {
        let mut cuts: Vec<BranchCut> = Vec::new();
        for c in self.dispersion.branch_cuts().into_iter().chain(self.form_factor.branch_cuts()) {
            if c.anchor.im < 0.0 || (c.anchor.im == 0.0 && c.direction.im <= 0.0) {
                continue;
            }
            let dir = c.direction / c.direction.norm();
            match cuts.iter_mut().find(|e| (e.direction / e.direction.norm() - dir).norm() < 1e-12) {
                Some(e) if c.anchor.norm() < e.anchor.norm() => *e = c,
                Some(_) => {}
                None => cuts.push(c),
            }
        }
        cuts
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParam { name: name.into(), reason: format!("must be positive, got {v}") })
    }
}

fn check_catalog(d: &DispersionKind, f: &FormFactorKind) -> Result<()> {
    match *d {
        DispersionKind::Relativistic { m } => positive("m", m)?,
        DispersionKind::Quadratic { a, c } => {
            positive("a", a)?;
            if !c.is_finite() {
                return Err(Error::InvalidParam { name: "c".into(), reason: "must be finite".into() });
            }
        }
        DispersionKind::Quartic { a, b, c } => {
            positive("a", a)?;
            if !(b.is_finite() && c.is_finite()) {
                return Err(Error::InvalidParam { name: "b, c".into(), reason: "must be finite".into() });
            }
        }
        DispersionKind::Linear { c } => {
            if !c.is_finite() || c == 0.0 {
                return Err(Error::InvalidParam { name: "c".into(), reason: "must be finite and nonzero".into() });
            }
        }
    }
    match *f {
        FormFactorKind::Flat { g } => {
            if !(g.is_finite() && g >= 0.0) {
                return Err(Error::InvalidParam { name: "g".into(), reason: format!("must be nonnegative, got {g}") });
            }
        }
        FormFactorKind::Relativistic { gamma, m } => {
            positive("gamma", gamma)?;
            positive("m", m)?;
        }
    }
    Ok(())
}

fn param(params: &BTreeMap<String, f64>, name: &str) -> Result<f64> {
    params.get(name).copied().ok_or_else(|| Error::InvalidParam { name: name.into(), reason: "missing".into() })
}

/// Built-in presets.
///
/// * `waveguide` (params `m`, `gamma`): `ω = √(κ² + m²)`,
///   `F = √(γ/2π)(k² + m²)^{−1/4}`.
/// * `massless-flat` (param `g`): `ω = κ²`, `G = g²/(2π)`.
pub fn preset(name: &str, params: &BTreeMap<String, f64>, positions: Vec<f64>, epsilon: Vec<f64>) -> Result<Model> {
    preset_with_cap(name, params, positions, epsilon, DEFAULT_MAX_ATOMS)
}

pub fn preset_with_cap(
    name: &str,
    params: &BTreeMap<String, f64>,
    positions: Vec<f64>,
    epsilon: Vec<f64>,
    max_atoms: usize,
) -> Result<Model> {
    let allowed: &[&str] = match name {
        "waveguide" => &["m", "gamma"],
        "massless-flat" => &["g"],
        other => return Err(Error::UnknownPreset(other.to_string())),
    };
    if let Some(extra) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(Error::InvalidParam { name: extra.clone(), reason: format!("not a parameter of `{name}`") });
    }
    let atoms = AtomArray::with_cap(positions, epsilon, max_atoms)?;
    let model = match name {
        "waveguide" => {
            let m = param(params, "m")?;
            let gamma = param(params, "gamma")?;
            positive("m", m)?;
            positive("gamma", gamma)?;
            Model::from_catalog(DispersionKind::Relativistic { m }, FormFactorKind::Relativistic { gamma, m }, atoms)?
        }
        _ => {
            let g = param(params, "g")?;
            Model::from_catalog(DispersionKind::Quadratic { a: 1.0, c: 0.0 }, FormFactorKind::Flat { g }, atoms)?
        }
    };
    Ok(model.with_label(name))
}

/// Waveguide preset.
pub fn waveguide(m: f64, gamma: f64, positions: Vec<f64>, epsilon: Vec<f64>) -> Result<Model> {
    let params = BTreeMap::from([("m".to_string(), m), ("gamma".to_string(), gamma)]);
    preset("waveguide", &params, positions, epsilon)
}

/// Massless-flat preset.
pub fn massless_flat(g: f64, positions: Vec<f64>, epsilon: Vec<f64>) -> Result<Model> {
    let params = BTreeMap::from([("g".to_string(), g)]);
    preset("massless-flat", &params, positions, epsilon)
}

/// `G_{jl}(k) = G(k)·e^{ik(x_j − x_l)}` at real momentum `k`.
pub fn coupling_matrix(model: &Model, k: f64) -> CMatrix64 {
    let x = model.atoms().positions();
    let g = model.g(C64::new(k, 0.0)).re;
    let n = x.len();
    CMatrix64::from_fn(n, n, |j, l| expi(C64::new(k * (x[j] - x[l]), 0.0)) * g)
}
