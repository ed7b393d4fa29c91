//! Run configuration: a model document plus one section per subcommand.

use serde::Deserialize;

use friedrichs::dispersion_analysis::Region;
use friedrichs::dynamics::{BromwichConfig, GridSpec};
use friedrichs::model::ModelDocument;
use friedrichs::spectral::Corrections;
use friedrichs::C64;

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub model: Option<ModelDocument>,
    #[serde(default)]
    pub sigma: Option<SigmaConfig>,
    #[serde(default)]
    pub modes: Option<ModesConfig>,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub evolve: Option<EvolveConfig>,
    #[serde(default)]
    pub check: Option<CheckConfig>,
}

#[derive(Debug, Deserialize, Clone, Copy, PartialEq, Eq, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SideName {
    #[default]
    Above,
    Below,
}

#[derive(Debug, Deserialize, Clone, Copy, PartialEq, Eq, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Sheet {
    #[default]
    Physical,
    Second,
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SigmaConfig {
    /// Complex points `[re, im]`.
    #[serde(default)]
    pub z: Vec<[f64; 2]>,
    /// Real energies, evaluated as boundary values.
    #[serde(default)]
    pub energies: Vec<f64>,
    #[serde(default)]
    pub side: SideName,
    /// Sheet used for `Im z < 0`.
    #[serde(default)]
    pub sheet: Sheet,
    #[serde(default)]
    pub parts: bool,
}

fn default_grid() -> usize {
    401
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ModesConfig {
    /// Real-axis search range for bound states; omitted means no scan.
    #[serde(default)]
    pub bound_range: Option<[f64; 2]>,
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default)]
    pub corrections: Corrections,
    #[serde(default = "default_true")]
    pub resonances: bool,
    /// Resonance search window `{"re": [lo, hi], "im": [lo, hi]}`.
    #[serde(default)]
    pub region: Option<RegionConfig>,
    #[serde(default)]
    pub seeds: Vec<[f64; 2]>,
}

#[derive(Debug, Deserialize, Clone, Copy)]
#[serde(deny_unknown_fields)]
pub struct RegionConfig {
    pub re: [f64; 2],
    pub im: [f64; 2],
}

impl RegionConfig {
    pub fn region(&self) -> Result<Region, CliError> {
        if !(self.re[1] > self.re[0] && self.im[1] > self.im[0]) {
            return Err(CliError::Config("region ranges must be nonempty".into()));
        }
        Ok(Region::new((self.re[0], self.re[1]), (self.im[0], self.im[1])))
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Defaults to the model positions.
    #[serde(default)]
    pub positions: Option<Vec<f64>>,
    pub k_start: f64,
    pub k_end: f64,
    pub step: f64,
    #[serde(default)]
    pub eta: f64,
    #[serde(default)]
    pub match_tol: Option<f64>,
}

#[derive(Debug, Deserialize, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum EvolveMethod {
    #[default]
    Ode,
    Bromwich,
    Both,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketConfig {
    pub amplitude: [f64; 2],
    pub k0: f64,
    pub sigma: f64,
    #[serde(default)]
    pub x0: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveConfig {
    /// Initial atomic amplitudes `[re, im]`.
    pub a0: Vec<[f64; 2]>,
    /// Explicit output times, or a uniform grid from `t_end` and `dt`.
    #[serde(default)]
    pub times: Option<Vec<f64>>,
    #[serde(default)]
    pub t_end: Option<f64>,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub method: Option<EvolveMethod>,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub bromwich: Option<BromwichConfig>,
    /// Initial field packet (direct integration only).
    #[serde(default)]
    pub field: Option<PacketConfig>,
    #[serde(default)]
    pub tail_shift: Option<bool>,
}

impl EvolveConfig {
    pub fn amplitudes(&self) -> Vec<C64> {
        self.a0.iter().map(|p| C64::new(p[0], p[1])).collect()
    }

    pub fn time_grid(&self) -> Result<Vec<f64>, CliError> {
        let ts = match (&self.times, self.t_end, self.dt) {
            (Some(ts), None, None) => ts.clone(),
            (None, Some(end), Some(dt)) if end >= 0.0 && dt > 0.0 => {
                let n = (end / dt).round() as usize;
                (0..=n).map(|i| i as f64 * dt).collect()
            }
            _ => return Err(CliError::Config("give either `times` or both `t_end` and a positive `dt`".into())),
        };
        if ts.is_empty() {
            return Err(CliError::Config("time grid is empty".into()));
        }
        if ts[0] < 0.0 || ts.windows(2).any(|w| w[1] <= w[0]) || ts.iter().any(|t| !t.is_finite()) {
            return Err(CliError::Config("times must be finite, nonnegative and increasing".into()));
        }
        Ok(ts)
    }
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct CheckConfig {
    #[serde(default)]
    pub k_max: Option<f64>,
    #[serde(default)]
    pub samples: Option<usize>,
}

pub fn parse(text: &str) -> Result<RunConfig, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
}
