//! Run configuration (JSON file, environment overrides).

use crate::foster::FosterConfig;
use crate::response::{PoleSearch, SweepConfig};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const ENV_OUTPUT_DIR: &str = "ZSYNTH_OUTPUT_DIR";
pub const ENV_PRECISION: &str = "ZSYNTH_PRECISION";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("config: {0}")]
    Parse(String),
    #[error("config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LjSweep {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Default for LjSweep {
    fn default() -> Self {
        LjSweep { start: 4.0, stop: 6.5, points: 26 }
    }
}

impl LjSweep {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.start];
        }
        (0..self.points).map(|i| self.start + (self.stop - self.start) * i as f64 / (self.points - 1) as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// GHz
    pub band: [f64; 2],
    pub precision: u32,
    pub cancel_tol: f64,
    pub pr_tol: f64,
    pub root_tol: f64,
    pub foster: FosterConfig,
    pub lj_sweep: LjSweep,
    pub sweep: SweepConfig,
    pub pole_search: PoleSearch,
    /// nF
    pub c_j: f64,
    /// K
    pub temperature: f64,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let ps = PoleSearch::default();
        RunConfig {
            band: [3.0, 15.0],
            precision: crate::mp::DEFAULT_PREC,
            cancel_tol: 1e-10,
            pr_tol: 1e-2,
            root_tol: ps.rel_tol,
            foster: FosterConfig::default(),
            lj_sweep: LjSweep::default(),
            sweep: SweepConfig::default(),
            pole_search: ps,
            c_j: 1e-6,
            temperature: 0.0,
            output_dir: PathBuf::from("zsynth-out"),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }

    /// Output directory and precision may be overridden from the environment.
    pub fn apply_env(&mut self, get: impl Fn(&str) -> Option<String>) -> Result<(), ConfigError> {
        if let Some(dir) = get(ENV_OUTPUT_DIR) {
            self.output_dir = PathBuf::from(dir);
        }
        if let Some(p) = get(ENV_PRECISION) {
            self.precision = p.trim().parse().map_err(|_| ConfigError::Invalid(format!("{ENV_PRECISION}={p:?} is not an integer")))?;
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if !(self.band[0] > 0.0 && self.band[1] > self.band[0]) {
            return bad(format!("band {:?} is empty", self.band));
        }
        for (name, v) in [("cancel_tol", self.cancel_tol), ("pr_tol", self.pr_tol), ("root_tol", self.root_tol)] {
            if !(v > 0.0) {
                return bad(format!("{name} must be positive (got {v})"));
            }
        }
        if self.precision < 64 {
            return bad(format!("precision {} bits is below 64", self.precision));
        }
        if !(self.c_j >= 0.0) || !(self.temperature >= 0.0) {
            return bad("C_J and temperature must be non-negative".into());
        }
        if self.lj_sweep.points == 0 || !(self.lj_sweep.start > 0.0) || self.lj_sweep.stop < self.lj_sweep.start {
            return bad("L_J sweep must be nonempty, positive and increasing".into());
        }
        Ok(())
    }

    pub fn pole_search(&self) -> PoleSearch {
        PoleSearch { rel_tol: self.root_tol, ..self.pole_search }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_overrides() {
        let mut c = RunConfig::from_json("{}").unwrap();
        assert_eq!(c, RunConfig::default());
        c.apply_env(|k| match k {
            ENV_OUTPUT_DIR => Some("/tmp/x".into()),
            ENV_PRECISION => Some("512".into()),
            _ => None,
        })
        .unwrap();
        assert_eq!((c.output_dir.to_str().unwrap(), c.precision), ("/tmp/x", 512));
        assert!(RunConfig::from_json(r#"{"band":[5,3]}"#).is_err());
        assert!(RunConfig::from_json(r#"{"pr_tol":0}"#).is_err());
        assert!(RunConfig::from_json(r#"{"nope":1}"#).is_err());
        let v = LjSweep::default().values();
        assert_eq!((v.len(), v[0], v[25]), (26, 4.0, 6.5));
    }
}
