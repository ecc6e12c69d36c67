//! Approximate "lossy Foster" realization: one parallel RLC block per
//! retained conjugate pole pair, all blocks in series.

use crate::ratmodel::{PoleResidueModel, Term};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum FosterError {
    #[error("real part of residue is not positive (a = {0})")]
    NegativeRealResidue(f64),
    #[error("pole is not in the open left half-plane (ξ = {0})")]
    UnstablePole(f64),
    #[error("pole frequency must be positive (ω = {0})")]
    NonPositiveFrequency(f64),
    #[error("Re Y(ω) = {0} is negative; not a damped mode")]
    InvalidMode(f64),
}

/// Parallel RLC block. Units: Ω, nH, nF, rad/ns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FosterStage {
    pub r: f64,
    pub l: f64,
    pub c: f64,
    pub omega0: f64,
    pub q: f64,
    /// Indices into the model's pole list (upper, lower member of the pair).
    pub source_pole_indices: (usize, usize),
    /// Imaginary residue part, dropped by the small-loss approximation.
    pub b: f64,
}

impl FosterStage {
    pub fn impedance(&self, s: Complex64) -> Complex64 {
        1.0 / (1.0 / self.r + 1.0 / (s * self.l) + s * self.c)
    }

    /// `|b/a|`, a measure of how much the approximation discards.
    pub fn residue_ratio(&self) -> f64 {
        // a = ω0·R/(2Q) under the mapping below
        let a = self.omega0 * self.r / (2.0 * self.q);
        (self.b / a).abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DropReason {
    NegativeRealResidue,
    DcTerm,
    OutOfBand,
    RealPole,
    UnstablePole,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dropped {
    pub pole_indices: Vec<usize>,
    pub reason: DropReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FosterCircuit {
    pub stages: Vec<FosterStage>,
    pub dropped: Vec<Dropped>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl FosterCircuit {
    pub fn impedance(&self, s: Complex64) -> Complex64 {
        self.stages.iter().map(|st| st.impedance(s)).sum()
    }
}

/// Drop rules. Real poles below `band_ghz.0` count as dc terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FosterConfig {
    pub band_ghz: (f64, f64),
    pub keep_negative_residues: bool,
}

impl Default for FosterConfig {
    fn default() -> Self {
        FosterConfig { band_ghz: (3.0, 15.0), keep_negative_residues: false }
    }
}

/// Maps one damped pole pair `ξ ± jω` with residue `a ± jb` to a parallel
/// RLC block (small-loss approximation; `b` is recorded but unused).
pub fn stage_from_pair(xi: f64, omega: f64, a: f64, b: f64) -> Result<FosterStage, FosterError> {
    if xi >= 0.0 {
        return Err(FosterError::UnstablePole(xi));
    }
    if omega <= 0.0 {
        return Err(FosterError::NonPositiveFrequency(omega));
    }
    if a <= 0.0 {
        return Err(FosterError::NegativeRealResidue(a));
    }
    let r = -a / xi;
    let q = -omega / (2.0 * xi);
    let c = q / (omega * r);
    let l = 1.0 / (omega * omega * c);
    Ok(FosterStage { r, l, c, omega0: omega, q, source_pole_indices: (0, 0), b })
}

pub fn build_foster(model: &PoleResidueModel, cfg: &FosterConfig) -> FosterCircuit {
    let (lo, hi) = (cfg.band_ghz.0 * TAU, cfg.band_ghz.1 * TAU);
    let mut stages = Vec::new();
    let mut dropped = Vec::new();
    for t in model.terms() {
        match *t {
            Term::Real { index } => {
                let reason = if model.poles()[index].norm() < lo { DropReason::DcTerm } else { DropReason::RealPole };
                dropped.push(Dropped { pole_indices: vec![index], reason });
            }
            Term::Pair { upper, lower } => {
                let p = model.poles()[upper];
                let r = model.residues()[upper];
                let idx = vec![upper.min(lower), upper.max(lower)];
                if p.im < lo || p.im > hi {
                    dropped.push(Dropped { pole_indices: idx, reason: DropReason::OutOfBand });
                    continue;
                }
                let a = if cfg.keep_negative_residues { r.re.abs() } else { r.re };
                match stage_from_pair(p.re, p.im, a, r.im) {
                    Ok(mut st) => {
                        st.source_pole_indices = (idx[0], idx[1]);
                        stages.push(st);
                    }
                    Err(FosterError::NegativeRealResidue(_)) => {
                        dropped.push(Dropped { pole_indices: idx, reason: DropReason::NegativeRealResidue })
                    }
                    Err(_) => dropped.push(Dropped { pole_indices: idx, reason: DropReason::UnstablePole }),
                }
            }
        }
    }
    let mut warnings = Vec::new();
    if stages.is_empty() {
        warnings.push("no pole pair retained; the Foster circuit is empty".into());
    }
    FosterCircuit { stages, dropped, warnings }
}

/// `Q = (ω/2)·Im Y′(ω)/Re Y(ω)` with `Y′` by central difference.
/// A lossless mode (`Re Y = 0`) gives `+∞`.
pub fn q_factor(y: impl Fn(f64) -> Complex64, omega_p: f64, rel_step: f64) -> Result<f64, FosterError> {
    let h = omega_p * rel_step;
    let dy = (y(omega_p + h) - y(omega_p - h)) / (2.0 * h);
    let y0 = y(omega_p);
    if y0.re < 0.0 {
        return Err(FosterError::InvalidMode(y0.re));
    }
    if y0.re == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(0.5 * omega_p * dy.im / y0.re)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn direct_formulas() {
        let st = stage_from_pair(-0.5, 10.0, 2.0, 0.0).unwrap();
        assert!((st.r - 4.0).abs() < 1e-15);
        assert!((st.q - 10.0).abs() < 1e-15);
        assert!((st.c - 0.25).abs() < 1e-15);
        assert!((st.l - 0.04).abs() < 1e-15);
        assert!((st.omega0 - 10.0).abs() < 1e-15);
        let st = stage_from_pair(-1.0, 1.0, 1.0, 0.0).unwrap();
        assert_eq!((st.q, st.r), (0.5, 1.0));
        assert_eq!(stage_from_pair(-1.0, 1.0, -1.0, 0.0), Err(FosterError::NegativeRealResidue(-1.0)));
        assert_eq!(stage_from_pair(0.0, 1.0, 1.0, 0.0), Err(FosterError::UnstablePole(0.0)));
    }

    #[test]
    fn invariants_hold() {
        let st = stage_from_pair(-0.0069, 43.2, 5.7, 0.004).unwrap();
        let w2 = 1.0 / (st.l * st.c);
        assert!((w2 - st.omega0 * st.omega0).abs() <= 1e-12 * w2);
        assert!((st.q - st.omega0 * st.r * st.c).abs() <= 1e-12 * st.q);
        // small-loss consistency
        let z = st.impedance(Complex64::new(0.0, st.omega0));
        assert!((z - st.r).norm() <= st.r / st.q);
    }

    #[test]
    fn single_pair_models() {
        let c = |re, im| Complex64::new(re, im);
        let m = PoleResidueModel::new(vec![c(-0.5, 10.0), c(-0.5, -10.0)], vec![c(2.0, 0.0), c(2.0, 0.0)], 0.0, 0.0).unwrap();
        let f = build_foster(&m, &FosterConfig { band_ghz: (1.0, 2.0), ..Default::default() });
        assert_eq!((f.stages.len(), f.dropped.len()), (1, 0));
        let m = PoleResidueModel::new(vec![c(-0.5, 10.0), c(-0.5, -10.0)], vec![c(-2.0, 0.0), c(-2.0, 0.0)], 0.0, 0.0).unwrap();
        let f = build_foster(&m, &FosterConfig { band_ghz: (1.0, 2.0), ..Default::default() });
        assert_eq!(f.stages.len(), 0);
        assert_eq!(f.dropped[0].reason, DropReason::NegativeRealResidue);
        assert!(!f.warnings.is_empty());
    }

    #[test]
    fn q_of_parallel_rlc() {
        let (r, l, c) = (50.0, 2.0, 0.5);
        let w0 = 1.0 / (l * c as f64).sqrt();
        let y = |w: f64| {
            let s = Complex64::new(0.0, w);
            1.0 / r + 1.0 / (s * l) + s * c
        };
        let q = q_factor(y, w0, 1e-6).unwrap();
        assert!((q - w0 * r * c).abs() < 1e-6 * q);
        let lossless = |w: f64| {
            let s = Complex64::new(0.0, w);
            1.0 / (s * l) + s * c
        };
        assert_eq!(q_factor(lossless, w0, 1e-6).unwrap(), f64::INFINITY);
    }
}
