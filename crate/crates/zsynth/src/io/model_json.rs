//! JSON (de)serialization of pole/residue models and reference circuits.

use crate::brune::{BruneCircuit, BruneStage};
use crate::ratmodel::{PoleResidueModel, RatError};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum ModelIoError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{field}: {msg}")]
    Schema { field: String, msg: String },
    #[error("invalid model: {0}")]
    Model(#[from] RatError),
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
struct C {
    re: f64,
    im: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    poles: Vec<C>,
    residues: Vec<C>,
    d: f64,
    e: f64,
    freq_unit: String,
}

/// Frequency unit of pole values in a model file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FreqUnit {
    /// Listed value is `s/2π` in GHz.
    Ghz2Pi,
    /// Listed value is `s` in rad/ns.
    RadPerNs,
}

impl FreqUnit {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "GHz_2pi" => Some(FreqUnit::Ghz2Pi),
            "rad_per_ns" => Some(FreqUnit::RadPerNs),
            _ => None,
        }
    }
    pub fn name(self) -> &'static str {
        match self {
            FreqUnit::Ghz2Pi => "GHz_2pi",
            FreqUnit::RadPerNs => "rad_per_ns",
        }
    }
}

fn schema(field: impl Into<String>, msg: impl Into<String>) -> ModelIoError {
    ModelIoError::Schema { field: field.into(), msg: msg.into() }
}

pub fn model_from_str(text: &str) -> Result<PoleResidueModel, ModelIoError> {
    let v: serde_json::Value = serde_json::from_str(text).map_err(|e| schema("$", e.to_string()))?;
    let obj = v.as_object().ok_or_else(|| schema("$", "expected an object"))?;
    for key in obj.keys() {
        if !["poles", "residues", "d", "e", "freq_unit"].contains(&key.as_str()) {
            return Err(schema(format!("$.{key}"), "unknown field"));
        }
    }
    let unit_s = obj.get("freq_unit").and_then(|u| u.as_str()).ok_or_else(|| schema("$.freq_unit", "missing string"))?;
    let unit = FreqUnit::parse(unit_s).ok_or_else(|| schema("$.freq_unit", format!("unknown unit {unit_s:?}")))?;
    let num = |k: &str| -> Result<f64, ModelIoError> {
        obj.get(k).and_then(|x| x.as_f64()).ok_or_else(|| schema(format!("$.{k}"), "missing number"))
    };
    let list = |k: &str| -> Result<Vec<Complex64>, ModelIoError> {
        let arr = obj.get(k).and_then(|x| x.as_array()).ok_or_else(|| schema(format!("$.{k}"), "missing array"))?;
        arr.iter()
            .enumerate()
            .map(|(i, x)| {
                let c: C = serde_json::from_value(x.clone()).map_err(|e| schema(format!("$.{k}[{i}]"), e.to_string()))?;
                Ok(Complex64::new(c.re, c.im))
            })
            .collect()
    };
    let (poles, residues, d, e) = (list("poles")?, list("residues")?, num("d")?, num("e")?);
    Ok(match unit {
        FreqUnit::Ghz2Pi => PoleResidueModel::from_ghz(poles, residues, d, e)?,
        FreqUnit::RadPerNs => PoleResidueModel::new(poles, residues, d, e)?,
    })
}

/// Listed GHz value whose product with 2π reproduces `w` exactly, so that a
/// save/load cycle is the identity.
fn ghz_exact(w: f64) -> f64 {
    let g = w / TAU;
    if g * TAU == w || !g.is_finite() || g == 0.0 {
        return g;
    }
    for cand in [g.next_up(), g.next_down(), g.next_up().next_up(), g.next_down().next_down()] {
        if cand * TAU == w {
            return cand;
        }
    }
    g
}

pub fn model_to_string(model: &PoleResidueModel, unit: FreqUnit) -> String {
    let conv = |p: &Complex64| match unit {
        FreqUnit::Ghz2Pi => C { re: ghz_exact(p.re), im: ghz_exact(p.im) },
        FreqUnit::RadPerNs => C { re: p.re, im: p.im },
    };
    let doc = ModelDoc {
        poles: model.poles().iter().map(conv).collect(),
        residues: model.residues().iter().map(|r| C { re: r.re, im: r.im }).collect(),
        d: model.d(),
        e: model.e(),
        freq_unit: unit.name().into(),
    };
    serde_json::to_string_pretty(&doc).expect("serializable")
}

fn read(path: &Path) -> Result<String, ModelIoError> {
    std::fs::read_to_string(path).map_err(|source| ModelIoError::Io { path: path.display().to_string(), source })
}

pub fn load_model(path: &Path) -> Result<PoleResidueModel, ModelIoError> {
    model_from_str(&read(path)?)
}

/// Writes `GHz_2pi` if that representation round-trips exactly, otherwise
/// `rad_per_ns`.
pub fn save_model(path: &Path, model: &PoleResidueModel) -> Result<(), ModelIoError> {
    let mut text = model_to_string(model, FreqUnit::Ghz2Pi);
    if model_from_str(&text).ok().as_ref() != Some(model) {
        text = model_to_string(model, FreqUnit::RadPerNs);
    }
    std::fs::write(path, text).map_err(|source| ModelIoError::Io { path: path.display().to_string(), source })
}

/// Reference circuit as usually tabulated: per-stage `R, C, L11, L22`, tight
/// coupling implied.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RefStage {
    r: f64,
    c: f64,
    l11: f64,
    l22: f64,
    degenerate: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RefCircuit {
    stages: Vec<RefStage>,
    r_terminal: f64,
}

pub fn reference_circuit_from_str(text: &str) -> Result<BruneCircuit, ModelIoError> {
    let doc: RefCircuit = serde_json::from_str(text).map_err(|e| schema("$", e.to_string()))?;
    let stages = doc
        .stages
        .iter()
        .map(|s| if s.degenerate { BruneStage::capacitive(s.r, s.c) } else { BruneStage::from_coupled(s.r, s.c, s.l11, s.l22) })
        .collect();
    Ok(BruneCircuit::new(stages, doc.r_terminal))
}

/// Reads either a reference circuit (`stages` with `l11/l22` only) or a full
/// serialized [`BruneCircuit`].
pub fn load_circuit(path: &Path) -> Result<BruneCircuit, ModelIoError> {
    let text = read(path)?;
    if let Ok(c) = serde_json::from_str::<BruneCircuit>(&text) {
        return Ok(c);
    }
    reference_circuit_from_str(&text)
}

pub const TABLE1_JSON: &str = include_str!("../../data/table1.json");
pub const TABLE2_JSON: &str = include_str!("../../data/table2.json");

/// The bundled fitted impedance.
pub fn table1() -> PoleResidueModel {
    model_from_str(TABLE1_JSON).expect("bundled model is valid")
}

/// The bundled published Brune circuit.
pub fn table2() -> BruneCircuit {
    reference_circuit_from_str(TABLE2_JSON).expect("bundled circuit is valid")
}
