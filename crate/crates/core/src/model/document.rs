//! JSON model descriptions.
//!
//! A preset document names a built-in preset:
//! `{"preset": "waveguide", "params": {"m": 1, "gamma": 6.28}, "positions": [0, 1], "epsilon": [2, 2]}`.
//! A custom document combines catalog entries:
//! `{"dispersion": {"kind": "quartic", "a": 1, "b": 1, "c": 0}, "form_factor": {"kind": "flat", "g": 0.5},
//!   "positions": [0], "epsilon": [1], "solution_pairs": 2}`.

use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize};

use super::{preset_with_cap, AtomArray, ContourKind, DispersionKind, FormFactorKind, Model, DEFAULT_MAX_ATOMS};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PresetDocument {
    pub preset: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    pub positions: Vec<f64>,
    pub epsilon: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_atoms: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomDocument {
    pub dispersion: DispersionKind,
    pub form_factor: FormFactorKind,
    pub positions: Vec<f64>,
    pub epsilon: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solution_pairs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contour: Option<ContourKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_atoms: Option<usize>,
}

/// Either document form; the presence of a `preset` key selects the form.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ModelDocument {
    Preset(PresetDocument),
    Custom(CustomDocument),
}

impl<'de> Deserialize<'de> for ModelDocument {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let value = serde_json::Value::deserialize(deserializer)?;
        ModelDocument::from_value(value).map_err(serde::de::Error::custom)
    }
}

impl ModelDocument {
    pub fn from_value(value: serde_json::Value) -> std::result::Result<Self, serde_json::Error> {
        if value.get("preset").is_some() {
            serde_json::from_value(value).map(ModelDocument::Preset)
        } else {
            serde_json::from_value(value).map(ModelDocument::Custom)
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::InvalidInput(e.to_string()))?;
        Self::from_value(value).map_err(|e| Error::InvalidInput(e.to_string()))
    }

    pub fn build(&self) -> Result<Model> {
        match self {
            ModelDocument::Preset(p) => preset_with_cap(
                &p.preset,
                &p.params,
                p.positions.clone(),
                p.epsilon.clone(),
                p.max_atoms.unwrap_or(DEFAULT_MAX_ATOMS),
            ),
            ModelDocument::Custom(c) => {
                let atoms = AtomArray::with_cap(
                    c.positions.clone(),
                    c.epsilon.clone(),
                    c.max_atoms.unwrap_or(DEFAULT_MAX_ATOMS),
                )?;
                let mut model = Model::from_catalog(c.dispersion, c.form_factor, atoms)?;
                if let Some(r) = c.solution_pairs {
                    model = model.with_solution_pairs(r);
                }
                if let Some(contour) = c.contour {
                    model = model.with_contour(contour);
                }
                Ok(model)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_both_forms() {
        let p = ModelDocument::from_json(
            r#"{"preset":"waveguide","params":{"m":1,"gamma":2},"positions":[0,1],"epsilon":[2,2]}"#,
        )
        .unwrap();
        assert_eq!(p.build().unwrap().n(), 2);
        let c = ModelDocument::from_json(
            r#"{"dispersion":{"kind":"quartic","a":1,"b":1,"c":0},"form_factor":{"kind":"flat","g":0.5},
                "positions":[0],"epsilon":[1],"solution_pairs":2}"#,
        )
        .unwrap();
        let m = c.build().unwrap();
        assert_eq!(m.solution_pairs(crate::C64::new(1.0, 1.0)), 2);
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(ModelDocument::from_json(&text).unwrap(), c);
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(ModelDocument::from_json(r#"{"preset":"waveguide","positions":[0],"epsilon":[1],"colour":1}"#).is_err());
        assert!(ModelDocument::from_json(
            r#"{"dispersion":{"kind":"linear","c":1,"d":2},"form_factor":{"kind":"flat","g":1},"positions":[0],"epsilon":[1]}"#
        )
        .is_err());
        assert!(ModelDocument::from_json("{not json").is_err());
    }
}
