//! Impedance of synthesized networks, junction shunting, and tracking of the
//! complex qubit pole.

use crate::brune::{
    BruneCircuit, BruneStage, ExactElement, ExactPreamble, ExactTermination, PreambleKind, StageKind, SynthesisLog,
    Termination,
};
use crate::foster::FosterCircuit;
use crate::mp::{self, MpComplex};
use crate::ratmodel::{PoleResidueModel, RatError};
use num_complex::Complex64;
use rug::Float;
use serde::Serialize;
use std::f64::consts::TAU;
use std::ops::{Add, Div, Mul, Sub};

#[derive(Debug, thiserror::Error)]
pub enum ResponseError {
    #[error("evaluation at a pole of the network (s = {0})")]
    AtPole(Complex64),
    #[error(transparent)]
    Model(#[from] RatError),
    #[error("L_J must be positive (got {0})")]
    InvalidInductance(f64),
    #[error("pole search did not converge after {iterations} iterations; last |Y| = {last_residual:e}")]
    NoConvergence { iterations: usize, last_residual: f64, trajectory: Vec<Complex64> },
    #[error("empty L_J list")]
    EmptySweep,
}

/// Complex value with a first derivative carried alongside.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual {
    pub v: Complex64,
    pub d: Complex64,
}

impl Dual {
    pub fn var(s: Complex64) -> Self {
        Dual { v: s, d: Complex64::new(1.0, 0.0) }
    }
}

impl Add for Dual {
    type Output = Dual;
    fn add(self, o: Dual) -> Dual {
        Dual { v: self.v + o.v, d: self.d + o.d }
    }
}
impl Sub for Dual {
    type Output = Dual;
    fn sub(self, o: Dual) -> Dual {
        Dual { v: self.v - o.v, d: self.d - o.d }
    }
}
impl Mul for Dual {
    type Output = Dual;
    fn mul(self, o: Dual) -> Dual {
        Dual { v: self.v * o.v, d: self.d * o.v + self.v * o.d }
    }
}
impl Div for Dual {
    type Output = Dual;
    fn div(self, o: Dual) -> Dual {
        let inv = 1.0 / o.v;
        Dual { v: self.v * inv, d: (self.d * o.v - self.v * o.d) * inv * inv }
    }
}

/// Field operations needed by the ladder recursion.
pub trait Field: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self> {
    fn real(x: f64) -> Self;
    fn value(&self) -> Complex64;
}

impl Field for Complex64 {
    fn real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn value(&self) -> Complex64 {
        *self
    }
}

impl Field for Dual {
    fn real(x: f64) -> Self {
        Dual { v: Complex64::new(x, 0.0), d: Complex64::new(0.0, 0.0) }
    }
    fn value(&self) -> Complex64 {
        self.v
    }
}

/// Load seen looking into the remainder of a ladder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Load<T> {
    Finite(T),
    Open,
}

fn series<T: Field>(z: Load<T>, x: T) -> Load<T> {
    match z {
        Load::Finite(z) => Load::Finite(z + x),
        Load::Open => Load::Open,
    }
}

fn shunt<T: Field>(z: Load<T>, y: T) -> Load<T> {
    match z {
        Load::Finite(z) => Load::Finite(z / (T::real(1.0) + z * y)),
        Load::Open => Load::Finite(T::real(1.0) / y),
    }
}

/// Which equivalent form of a regular Brune stage to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageForm {
    /// `L1` series, `L2`–`C` shunt branch, `L3` series.
    TEquivalent,
    /// Tightly coupled pair `L11`, `L22`, `M` with `C` from the common node.
    Coupled,
}

fn stage<T: Field>(st: &BruneStage, z: Load<T>, s: T, form: StageForm) -> Load<T> {
    let one = T::real(1.0);
    let r = T::real(st.r);
    let out = match st.kind {
        StageKind::CapacitiveDegenerate => series(shunt(z, s * T::real(st.c)), r),
        StageKind::InductiveDegenerate => {
            let l = st.shunt_l.unwrap_or(0.0);
            series(shunt(z, one / (s * T::real(l))), r)
        }
        StageKind::Regular => {
            let cap = one / (s * T::real(st.c));
            match form {
                StageForm::TEquivalent => {
                    let (l1, l2, l3) = st.t_equivalent();
                    let branch = s * T::real(l2) + cap;
                    let par = match z {
                        Load::Finite(z) => {
                            let arm = s * T::real(l3) + z;
                            branch * arm / (branch + arm)
                        }
                        Load::Open => branch,
                    };
                    Load::Finite(r + s * T::real(l1) + par)
                }
                StageForm::Coupled => {
                    // Z = sL11 + 1/(sC) − (sM + 1/(sC))² / (Z_L + sL22 + 1/(sC))
                    let base = r + s * T::real(st.l11) + cap;
                    match z {
                        Load::Finite(z) => {
                            let x = s * T::real(st.m) + cap;
                            Load::Finite(base - x * x / (z + s * T::real(st.l22) + cap))
                        }
                        Load::Open => Load::Finite(base),
                    }
                }
            }
        }
    };
    out
}

fn preamble<T: Field>(kind: &PreambleKind, z: Load<T>, s: T) -> Load<T> {
    let one = T::real(1.0);
    match *kind {
        PreambleKind::SeriesInductor { l } => series(z, s * T::real(l)),
        PreambleKind::SeriesCapacitor { c } => series(z, one / (s * T::real(c))),
        PreambleKind::SeriesParallelLc { l, c } => {
            let sl = s * T::real(l);
            series(z, sl / (one + sl * s * T::real(c)))
        }
        PreambleKind::ShuntCapacitor { c } => shunt(z, s * T::real(c)),
        PreambleKind::ShuntInductor { l } => shunt(z, one / (s * T::real(l))),
        PreambleKind::ShuntSeriesLc { l, c } => {
            let sc = s * T::real(c);
            shunt(z, sc / (one + sc * s * T::real(l)))
        }
    }
}

/// Right-to-left recursion over the ladder.
pub fn brune_load<T: Field>(c: &BruneCircuit, s: T, form: StageForm) -> Load<T> {
    let mut z = match c.termination {
        Termination::Resistor if c.r_terminal == f64::INFINITY => Load::Open,
        Termination::Resistor => Load::Finite(T::real(c.r_terminal)),
        Termination::Short => Load::Finite(T::real(0.0)),
        Termination::Open => Load::Open,
    };
    for pos in (0..=c.stages.len()).rev() {
        for el in c.preamble.iter().rev().filter(|e| e.position == pos) {
            z = preamble(&el.kind, z, s);
        }
        if pos > 0 {
            z = stage(&c.stages[pos - 1], z, s, form);
        }
    }
    z
}

fn finite(z: Load<Complex64>, s: Complex64) -> Result<Complex64, ResponseError> {
    match z {
        Load::Finite(v) if v.re.is_finite() && v.im.is_finite() => Ok(v),
        _ => Err(ResponseError::AtPole(s)),
    }
}

/// Brune ladder input impedance (T-equivalent form).
pub fn ladder_impedance(c: &BruneCircuit, s: Complex64) -> Result<Complex64, ResponseError> {
    finite(brune_load(c, s, StageForm::TEquivalent), s)
}

/// Brune ladder input impedance via the coupled-inductor relations.
pub fn ladder_impedance_coupled(c: &BruneCircuit, s: Complex64) -> Result<Complex64, ResponseError> {
    finite(brune_load(c, s, StageForm::Coupled), s)
}

/// Impedance and `dZ/ds` of a Brune ladder.
pub fn ladder_impedance_d(c: &BruneCircuit, s: Complex64) -> Result<(Complex64, Complex64), ResponseError> {
    match brune_load(c, Dual::var(s), StageForm::TEquivalent) {
        Load::Finite(z) if z.v.re.is_finite() && z.v.im.is_finite() => Ok((z.v, z.d)),
        _ => Err(ResponseError::AtPole(s)),
    }
}

/// Foster network impedance and derivative (sum of parallel-RLC blocks).
pub fn foster_impedance_d(c: &FosterCircuit, s: Complex64) -> Result<(Complex64, Complex64), ResponseError> {
    let mut z = Complex64::new(0.0, 0.0);
    let mut dz = Complex64::new(0.0, 0.0);
    for st in &c.stages {
        let y = 1.0 / st.r + 1.0 / (s * st.l) + s * st.c;
        let dy = -1.0 / (s * s * st.l) + st.c;
        z += 1.0 / y;
        dz -= dy / (y * y);
    }
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(ResponseError::AtPole(s));
    }
    Ok((z, dz))
}

/// Extended-precision ladder evaluation straight from the synthesis log.
pub fn ladder_impedance_mp(log: &SynthesisLog, s: &MpComplex) -> Option<MpComplex> {
    let prec = s.prec();
    let one = MpComplex::from_real(mp::f(prec, 1.0));
    let c = |x: &Float| MpComplex::from_real(x.clone());
    let ser = |z: Option<MpComplex>, x: MpComplex| z.map(|z| z + x);
    let sh = |z: Option<MpComplex>, y: MpComplex| match z {
        Some(z) => Some(&z / &(&one + &(&z * &y))),
        None => Some(y.recip()),
    };
    let mut z = match &log.termination {
        ExactTermination::Resistor(r) => Some(c(r)),
        ExactTermination::Short => Some(MpComplex::zero(prec)),
        ExactTermination::Open => None,
    };
    for el in log.elements.iter().rev() {
        z = match el {
            ExactElement::Preamble { kind, .. } => match kind {
                ExactPreamble::SeriesL(l) => ser(z, s * &c(l)),
                ExactPreamble::SeriesC(cap) => ser(z, (s * &c(cap)).recip()),
                ExactPreamble::SeriesParallelLc(l, cap) => {
                    let sl = s * &c(l);
                    let den = &one + &(&(&sl * s) * &c(cap));
                    ser(z, &sl / &den)
                }
                ExactPreamble::ShuntC(cap) => sh(z, s * &c(cap)),
                ExactPreamble::ShuntL(l) => sh(z, (s * &c(l)).recip()),
                ExactPreamble::ShuntSeriesLc(l, cap) => {
                    let sc = s * &c(cap);
                    let den = &one + &(&(&sc * s) * &c(l));
                    sh(z, &sc / &den)
                }
            },
            ExactElement::Stage { r, l1, l2, c2, l3, .. } => {
                let branch = &(s * &c(l2)) + &(s * &c(c2)).recip();
                let par = match z {
                    Some(z) => {
                        let arm = &(s * &c(l3)) + &z;
                        &(&branch * &arm) / &(&branch + &arm)
                    }
                    None => branch,
                };
                Some(&(&c(r) + &(s * &c(l1))) + &par)
            }
            ExactElement::Capacitive { r, c: cap } => ser(sh(z, s * &c(cap)), c(r)),
            ExactElement::Inductive { r, l } => ser(sh(z, (s * &c(l)).recip()), c(r)),
        };
    }
    z
}

/// Anything with an impedance `Z(s)` and derivative.
#[derive(Debug, Clone, Copy)]
pub enum Network<'a> {
    Model(&'a PoleResidueModel),
    Brune(&'a BruneCircuit),
    Foster(&'a FosterCircuit),
}

impl Network<'_> {
    pub fn impedance(&self, s: Complex64) -> Result<Complex64, ResponseError> {
        match self {
            Network::Model(m) => Ok(m.evaluate(s)?),
            Network::Brune(c) => ladder_impedance(c, s),
            Network::Foster(f) => Ok(foster_impedance_d(f, s)?.0),
        }
    }

    pub fn impedance_d(&self, s: Complex64) -> Result<(Complex64, Complex64), ResponseError> {
        match self {
            Network::Model(m) => Ok(m.evaluate_d(s)?),
            Network::Brune(c) => ladder_impedance_d(c, s),
            Network::Foster(f) => foster_impedance_d(f, s),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Network::Model(_) => "fit",
            Network::Brune(_) => "brune",
            Network::Foster(_) => "foster",
        }
    }
}

/// `Y_tot(s) = 1/(s·L_J) + 1/Z(s)`.
pub fn shunted_response(net: Network<'_>, lj: f64, s: Complex64) -> Result<Complex64, ResponseError> {
    if !(lj > 0.0) {
        return Err(ResponseError::InvalidInductance(lj));
    }
    Ok(1.0 / (s * lj) + 1.0 / net.impedance(s)?)
}

fn shunted_d(net: Network<'_>, lj: f64, cj: f64, s: Complex64) -> Result<(Complex64, Complex64), ResponseError> {
    let (z, dz) = net.impedance_d(s)?;
    let y = 1.0 / (s * lj) + s * cj + 1.0 / z;
    let dy = -1.0 / (s * s * lj) + cj - dz / (z * z);
    Ok((y, dy))
}

#[derive(Debug, Clone, Serialize)]
pub struct QubitPole {
    /// rad/ns
    #[serde(serialize_with = "crate::io::ser_c64")]
    pub s_qb: Complex64,
    pub xi_qb: f64,
    pub omega_qb: f64,
    pub f_qb: f64,
    #[serde(rename = "Q_qb")]
    pub q_qb: f64,
    /// ns
    #[serde(rename = "T1")]
    pub t1: f64,
    pub iterations: usize,
    pub used_muller: bool,
    pub warnings: Vec<String>,
}

impl QubitPole {
    pub fn from_s(s: Complex64) -> Self {
        let xi = s.re;
        let omega = s.im;
        QubitPole {
            s_qb: s,
            xi_qb: xi,
            omega_qb: omega,
            f_qb: omega / TAU,
            q_qb: omega.abs() / xi.abs(),
            t1: 1.0 / xi.abs(),
            iterations: 0,
            used_muller: false,
            warnings: vec![],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PoleSearch {
    pub rel_tol: f64,
    pub max_iter: usize,
    /// Largest Newton step as a fraction of `|s|`.
    pub max_step: f64,
    /// Cavity mode that a qubit pole may be confused with, GHz.
    pub cavity_ghz: f64,
    pub cavity_window_ghz: f64,
}

impl Default for PoleSearch {
    fn default() -> Self {
        PoleSearch { rel_tol: 1e-12, max_iter: 100, max_step: 0.05, cavity_ghz: 6.875, cavity_window_ghz: 0.05 }
    }
}

/// Zero of `Y_tot` near `j·2π·f_guess` by damped Newton, falling back to
/// Muller's method if Newton stalls.
pub fn find_qubit_pole(net: Network<'_>, lj: f64, f_guess: f64, cfg: &PoleSearch) -> Result<QubitPole, ResponseError> {
    find_pole_from(net, lj, Complex64::new(0.0, TAU * f_guess), cfg)
}

pub fn find_pole_from(net: Network<'_>, lj: f64, s0: Complex64, cfg: &PoleSearch) -> Result<QubitPole, ResponseError> {
    find_pole_shunted(net, lj, 0.0, s0, cfg)
}

/// As [`find_pole_from`] with an extra junction capacitance `cj` (nF) in
/// parallel with `L_J`.
pub fn find_pole_shunted(
    net: Network<'_>,
    lj: f64,
    cj: f64,
    s0: Complex64,
    cfg: &PoleSearch,
) -> Result<QubitPole, ResponseError> {
    if !(lj > 0.0) {
        return Err(ResponseError::InvalidInductance(lj));
    }
    let mut s = s0;
    let mut traj = vec![s];
    let (mut y, mut dy) = shunted_d(net, lj, cj, s)?;
    let mut converged = false;
    let mut iters = 0;
    let mut stalls = 0;
    while iters < cfg.max_iter {
        iters += 1;
        let mut step = y / dy;
        let cap = cfg.max_step * s.norm();
        if step.norm() > cap {
            step *= cap / step.norm();
        }
        // backtrack until |Y| decreases
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..30 {
            let cand = s - step * lambda;
            if let Ok((yc, dyc)) = shunted_d(net, lj, cj, cand) {
                if yc.norm() < y.norm() || (step * lambda).norm() <= cfg.rel_tol * s.norm() {
                    accepted = Some((cand, yc, dyc));
                    break;
                }
            }
            lambda *= 0.5;
        }
        let Some((cand, yc, dyc)) = accepted else {
            stalls += 1;
            if stalls > 2 {
                break;
            }
            continue;
        };
        let moved = (cand - s).norm();
        s = cand;
        y = yc;
        dy = dyc;
        traj.push(s);
        if moved <= cfg.rel_tol * s.norm() || y.norm() == 0.0 {
            converged = true;
            break;
        }
    }
    let mut used_muller = false;
    if !converged {
        used_muller = true;
        let h = 1e-4 * s.norm();
        let (root, it) = muller(|z| Ok(shunted_d(net, lj, cj, z)?.0), s - h, s + h, s, cfg)?;
        iters += it;
        s = root;
        traj.push(s);
        let y = shunted_d(net, lj, cj, s)?.0;
        if !(y.norm().is_finite()) {
            return Err(ResponseError::NoConvergence { iterations: iters, last_residual: y.norm(), trajectory: traj });
        }
    }
    let mut pole = QubitPole::from_s(s);
    pole.iterations = iters;
    pole.used_muller = used_muller;
    if (pole.f_qb.abs() - cfg.cavity_ghz).abs() < cfg.cavity_window_ghz {
        pole.warnings.push(format!(
            "pole at {:.6} GHz lies within {} MHz of the cavity mode at {} GHz; it may be mislabelled",
            pole.f_qb.abs(),
            cfg.cavity_window_ghz * 1e3,
            cfg.cavity_ghz
        ));
    }
    Ok(pole)
}

/// Muller's method on three starting points.
pub fn muller(
    f: impl Fn(Complex64) -> Result<Complex64, ResponseError>,
    mut x0: Complex64,
    mut x1: Complex64,
    mut x2: Complex64,
    cfg: &PoleSearch,
) -> Result<(Complex64, usize), ResponseError> {
    let (mut f0, mut f1, mut f2) = (f(x0)?, f(x1)?, f(x2)?);
    let mut traj = vec![x2];
    for it in 1..=cfg.max_iter {
        let h1 = x1 - x0;
        let h2 = x2 - x1;
        let d1 = (f1 - f0) / h1;
        let d2 = (f2 - f1) / h2;
        let a = (d2 - d1) / (h2 + h1);
        let b = a * h2 + d2;
        let disc = (b * b - 4.0 * a * f2).sqrt();
        let den = if (b + disc).norm() > (b - disc).norm() { b + disc } else { b - disc };
        let dx = if den.norm() == 0.0 { Complex64::new(1e-8 * x2.norm(), 0.0) } else { -2.0 * f2 / den };
        let x3 = x2 + dx;
        traj.push(x3);
        if dx.norm() <= cfg.rel_tol * x3.norm() {
            return Ok((x3, it));
        }
        x0 = x1;
        f0 = f1;
        x1 = x2;
        f1 = f2;
        x2 = x3;
        f2 = f(x2)?;
    }
    Err(ResponseError::NoConvergence { iterations: cfg.max_iter, last_residual: f2.norm(), trajectory: traj })
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub lj: f64,
    pub pole: Option<QubitPole>,
    pub error: Option<String>,
    /// Frequency jumped by more than the branch threshold from the previous row.
    pub flagged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// `(L_J, f)` where the tracked branch is anchored, nH and GHz.
    pub seed_lj: f64,
    pub seed_f_ghz: f64,
    /// Largest L_J increment between continuation solves, nH.
    pub max_substep: f64,
    pub branch_jump_ghz: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig { seed_lj: 4.5, seed_f_ghz: 6.7, max_substep: 0.02, branch_jump_ghz: 0.5 }
    }
}

/// Tracks the pole along `lj` by continuation from the anchor; each solve
/// is seeded by the previous one.
pub fn sweep_lj(net: Network<'_>, lj: &[f64], sweep: &SweepConfig, cfg: &PoleSearch) -> Result<Vec<SweepRow>, ResponseError> {
    if lj.is_empty() {
        return Err(ResponseError::EmptySweep);
    }
    let anchor = find_qubit_pole(net, sweep.seed_lj, sweep.seed_f_ghz, cfg)?;
    // start from the list entry closest to the anchor and walk outwards
    let start = (0..lj.len())
        .min_by(|&a, &b| (lj[a] - sweep.seed_lj).abs().total_cmp(&(lj[b] - sweep.seed_lj).abs()))
        .unwrap();
    let mut rows: Vec<Option<SweepRow>> = vec![None; lj.len()];
    let walk = |from_lj: f64, from_s: Complex64, to: f64| -> Result<QubitPole, ResponseError> {
        let n = ((to - from_lj).abs() / sweep.max_substep).ceil().max(1.0) as usize;
        let mut s = from_s;
        let mut last = None;
        for k in 1..=n {
            let l = from_lj + (to - from_lj) * k as f64 / n as f64;
            let p = find_pole_from(net, l, s, cfg)?;
            s = p.s_qb;
            last = Some(p);
        }
        Ok(last.unwrap())
    };
    let solve_chain = |order: Vec<usize>, rows: &mut Vec<Option<SweepRow>>| {
        let mut prev: Option<(f64, Complex64)> = Some((sweep.seed_lj, anchor.s_qb));
        for i in order {
            let res = match prev {
                Some((l0, s0)) => walk(l0, s0, lj[i]),
                None => Err(ResponseError::EmptySweep),
            };
            match res {
                Ok(p) => {
                    prev = Some((lj[i], p.s_qb));
                    rows[i] = Some(SweepRow { lj: lj[i], pole: Some(p), error: None, flagged: false });
                }
                Err(e) => {
                    rows[i] = Some(SweepRow { lj: lj[i], pole: None, error: Some(e.to_string()), flagged: true });
                }
            }
        }
    };
    solve_chain((start..lj.len()).collect(), &mut rows);
    solve_chain((0..start).rev().collect(), &mut rows);
    let mut out: Vec<SweepRow> = rows.into_iter().map(|r| r.unwrap()).collect();
    for i in 1..out.len() {
        if let (Some(a), Some(b)) = (&out[i - 1].pole, &out[i].pole) {
            if (a.f_qb - b.f_qb).abs() > sweep.branch_jump_ghz {
                out[i].flagged = true;
            }
        }
    }
    Ok(out)
}
