//! Brune synthesis of a positive-real impedance into a cascade of
//! resistor / tightly-coupled-transformer / capacitor stages.
//!
//! All arithmetic runs on [`RationalFunction`]s in extended precision. The
//! exact element values of every extraction are kept in a [`SynthesisLog`],
//! and the double-precision [`BruneCircuit`] is derived from it.

use crate::mp::{self, MpComplex};
use crate::poly::{Poly, PolyError};
use crate::ratmodel::{PoleResidueModel, RationalFunction};
use rug::ops::Pow;
use rug::Float;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

#[derive(Debug, thiserror::Error)]
pub enum BruneError {
    #[error("not positive-real: {0}")]
    NotPr(String),
    #[error("cancellation failed at step {step}: {what} leaves relative residue {residue:e} (tolerance {tol:e})")]
    Cancellation { step: usize, what: &'static str, residue: f64, tol: f64 },
    #[error("remainder after step {step} fails the positive-real screen: {reason}")]
    Conditioning { step: usize, reason: String, log: Box<SynthesisLog> },
    #[error("no convergence within {0} stages")]
    Divergence(usize),
    #[error("minimum search disagrees with grid scan: roots give {roots:e} Ω, grid gives {grid:e} Ω at {omega:e} rad/ns")]
    MissedMinimum { roots: f64, grid: f64, omega: f64 },
    #[error(transparent)]
    Poly(#[from] PolyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageKind {
    Regular,
    /// Extraction at ω₁ = ∞: series R, shunt C.
    CapacitiveDegenerate,
    /// Extraction at ω₁ = 0: series R, shunt L.
    InductiveDegenerate,
}

/// One Brune section. Units: Ω, nF, nH; `omega1` in rad/ns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BruneStage {
    pub r: f64,
    pub c: f64,
    pub l11: f64,
    pub l22: f64,
    pub m: f64,
    pub t: f64,
    pub degenerate: bool,
    pub kind: StageKind,
    /// `(L1, L2, L3)` before conversion to the coupled form.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_triple: Option<[f64; 3]>,
    /// Shunt inductance of an inductive-degenerate stage.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shunt_l: Option<f64>,
    /// Frequency of the real-part minimum that produced this stage
    /// (`None` means ω₁ = ∞).
    #[serde(default)]
    pub omega1: Option<f64>,
}

impl BruneStage {
    /// Coupled-inductor stage from its T-equivalent.
    pub fn from_t_triple(r: f64, c: f64, l1: f64, l2: f64, l3: f64) -> Self {
        let l11 = l1 + l2;
        let l22 = l3 + l2;
        BruneStage {
            r,
            c,
            l11,
            l22,
            m: l2,
            t: (l11 / l22).sqrt(),
            degenerate: false,
            kind: StageKind::Regular,
            t_triple: Some([l1, l2, l3]),
            shunt_l: None,
            omega1: None,
        }
    }

    /// Coupled-inductor stage from self inductances, assuming tight coupling.
    pub fn from_coupled(r: f64, c: f64, l11: f64, l22: f64) -> Self {
        let m = (l11 * l22).sqrt();
        let mut st = BruneStage::from_t_triple(r, c, l11 - m, m, l22 - m);
        st.l11 = l11;
        st.l22 = l22;
        st.t = (l11 / l22).sqrt();
        st
    }

    pub fn capacitive(r: f64, c: f64) -> Self {
        BruneStage {
            r,
            c,
            l11: 0.0,
            l22: 0.0,
            m: 0.0,
            t: 0.0,
            degenerate: true,
            kind: StageKind::CapacitiveDegenerate,
            t_triple: None,
            shunt_l: None,
            omega1: None,
        }
    }

    /// T-equivalent inductances `(L1, L2, L3)` of a regular stage.
    pub fn t_equivalent(&self) -> (f64, f64, f64) {
        match self.t_triple {
            Some([a, b, c]) => (a, b, c),
            None => (self.l11 - self.m, self.m, self.l22 - self.m),
        }
    }
}

/// Element removed while clearing j-axis poles of Z (series) or Y (shunt).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PreambleKind {
    SeriesInductor { l: f64 },
    SeriesCapacitor { c: f64 },
    SeriesParallelLc { l: f64, c: f64 },
    ShuntCapacitor { c: f64 },
    ShuntInductor { l: f64 },
    ShuntSeriesLc { l: f64, c: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreambleElement {
    #[serde(flatten)]
    pub kind: PreambleKind,
    /// Number of Brune stages that precede this element in the ladder.
    pub position: usize,
    /// Set when a near-axis pole was forced onto the axis.
    #[serde(default)]
    pub approximate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Resistor,
    Short,
    Open,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BruneCircuit {
    pub stages: Vec<BruneStage>,
    pub r_terminal: f64,
    pub termination: Termination,
    #[serde(default)]
    pub preamble: Vec<PreambleElement>,
}

impl BruneCircuit {
    pub fn new(stages: Vec<BruneStage>, r_terminal: f64) -> Self {
        BruneCircuit { stages, r_terminal, termination: Termination::Resistor, preamble: vec![] }
    }

    pub fn degenerate_indices(&self) -> Vec<usize> {
        self.stages.iter().enumerate().filter(|(_, s)| s.degenerate).map(|(i, _)| i).collect()
    }
}

/// Exact element values, in extraction order.
#[derive(Debug, Clone, PartialEq)]
pub enum ExactElement {
    Preamble { kind: ExactPreamble, approximate: bool },
    Stage { omega1: Float, r: Float, l1: Float, l2: Float, c2: Float, l3: Float },
    Capacitive { r: Float, c: Float },
    Inductive { r: Float, l: Float },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExactPreamble {
    SeriesL(Float),
    SeriesC(Float),
    SeriesParallelLc(Float, Float),
    ShuntC(Float),
    ShuntL(Float),
    ShuntSeriesLc(Float, Float),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExactTermination {
    Resistor(Float),
    Short,
    Open,
}

/// Extraction history; doubles as an extended-precision description of the
/// synthesized ladder.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisLog {
    pub elements: Vec<ExactElement>,
    pub termination: ExactTermination,
    /// `(deg n, deg d)` before each extraction and at the end.
    pub degrees: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthesisOptions {
    pub prec: u32,
    /// Relative size of a coefficient that must cancel analytically.
    pub cancel_tol: f64,
    /// Negative real-part minima down to `-pr_tol` Ω are realized with a
    /// negative series resistor and reported, rather than rejected.
    pub pr_tol: f64,
    /// Poles with `|Re p| ≤ preamble_tol·|p|` are removed as j-axis poles.
    pub preamble_tol: f64,
    /// Coefficients that cancel only to the accuracy of a rounded input
    /// (relative `snap_tol`) are set to zero, exposing a pole of the
    /// reciprocal at 0 or ∞; interior minima of `Re Z` that undercut the
    /// endpoint values by less than this are treated as ties.
    pub snap_tol: f64,
    pub max_stages: usize,
    /// Grid cross-check of each minimum: band in GHz and number of points
    /// (0 disables it).
    pub check_band_ghz: (f64, f64),
    pub check_points: usize,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        SynthesisOptions {
            prec: mp::DEFAULT_PREC,
            cancel_tol: 1e-10,
            pr_tol: 1e-2,
            preamble_tol: 1e-30,
            snap_tol: 1e-6,
            max_stages: 64,
            check_band_ghz: (0.01, 100.0),
            check_points: 2000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Synthesis {
    pub circuit: BruneCircuit,
    pub log: SynthesisLog,
    pub warnings: Vec<String>,
}

/// Where `Re Z(jω)` attains its minimum.
#[derive(Debug, Clone, PartialEq)]
pub enum MinLocation {
    Zero,
    Finite(Float),
    Infinity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinRealPart {
    pub location: MinLocation,
    pub r1: Float,
}

fn rel(x: &Float, scale: &Float) -> f64 {
    if scale.is_zero() {
        return x.to_f64().abs();
    }
    (Float::with_val(x.prec(), x.abs_ref()) / scale).to_f64()
}

fn check_cancel(step: usize, what: &'static str, residue: &Float, scale: &Float, tol: f64) -> Result<(), BruneError> {
    let r = rel(residue, scale);
    if r > tol {
        return Err(BruneError::Cancellation { step, what, residue: r, tol });
    }
    Ok(())
}

/// Relative size of coefficient `i` of `rest = a − b` against the terms it
/// came from, if it is at most `tol`.
fn cancelled(rest: &Poly, i: usize, a: &Poly, b: &Poly, tol: f64) -> Option<f64> {
    let (ai, bi) = (a.coeff(i).abs(), b.coeff(i).abs());
    let scale = if ai > bi { ai } else { bi };
    if scale.is_zero() {
        return None;
    }
    let r = rel(&rest.coeff(i), &scale);
    (r <= tol).then_some(r)
}

fn s2_plus(prec: u32, w2: &Float) -> Poly {
    Poly::new(prec, vec![w2.clone(), Float::new(prec), mp::f(prec, 1.0)])
}

/// Removes poles of Z and of 1/Z on the imaginary axis (including 0 and ∞).
/// Returns the removed elements in ladder order and the reduced impedance;
/// `None` means the remainder is a short (`Some(Open)` is signalled through
/// the termination).
pub fn remove_jaxis_poles(
    z: &RationalFunction,
    tol: f64,
    cancel_tol: f64,
    snap_tol: f64,
) -> Result<(Vec<(ExactPreamble, bool)>, Remainder), BruneError> {
    let prec = z.prec();
    let mut num = z.num.clone();
    let mut den = z.den.clone();
    let mut out = Vec::new();
    // `flipped` means (num, den) currently hold Y rather than Z.
    // After every removal restart from the Z side, so series elements are
    // preferred over equivalent shunt ones at the end of the ladder.
    'outer: loop {
        for flipped in [false, true] {
            let (n, d) = if flipped { (&mut den, &mut num) } else { (&mut num, &mut den) };
            if n.is_zero() {
                return Ok((out, if flipped { Remainder::Open } else { Remainder::Short }));
            }
            if d.is_zero() {
                return Ok((out, if flipped { Remainder::Short } else { Remainder::Open }));
            }
            // pole at infinity
            if n.degree() > d.degree() {
                if n.degree() > d.degree() + 1 {
                    return Err(BruneError::NotPr("pole of order > 1 at infinity".into()));
                }
                let k = Float::with_val(prec, n.lead() / d.lead());
                if k <= 0 {
                    return Err(BruneError::NotPr("negative residue at infinity".into()));
                }
                let mut rest = n.sub(&d.shift(1).scale(&k));
                let top = rest.truncate(n.degree());
                check_cancel(0, "pole at infinity", &top, &n.max_abs(), cancel_tol)?;
                let kd = d.shift(1).scale(&k);
                let mut approximate = false;
                if rest.degree() >= 1 {
                    if let Some(r) = cancelled(&rest, rest.degree(), n, &kd, snap_tol) {
                        // the reciprocal has a pole at infinity, obscured by rounding of the input
                        rest.drop_lead();
                        approximate = r > cancel_tol;
                    }
                }
                *n = rest;
                out.push((if flipped { ExactPreamble::ShuntC(k) } else { ExactPreamble::SeriesL(k) }, approximate));
                continue 'outer;
            }
            // pole at zero
            let d0 = d.coeff(0);
            if d.degree() > 0 && rel(&d0, &d.max_abs()) <= tol {
                let (d1, _) = d.unshift();
                let k = Float::with_val(prec, &n.coeff(0) / &d1.coeff(0));
                if k <= 0 {
                    return Err(BruneError::NotPr("non-positive residue at s = 0".into()));
                }
                let kd = d1.scale(&k);
                let rest = n.sub(&kd);
                let (mut n2, c0) = rest.unshift();
                check_cancel(0, "pole at zero", &c0, &n.max_abs(), cancel_tol)?;
                let mut approximate = !d0.is_zero();
                if n2.degree() >= 1 {
                    if let Some(r) = cancelled(&rest, 1, n, &kd, snap_tol) {
                        // likewise for a pole of the reciprocal at zero
                        let mut c = n2.coeffs().to_vec();
                        c[0] = Float::new(prec);
                        n2 = Poly::new(prec, c);
                        approximate |= r > cancel_tol;
                    }
                }
                *n = n2;
                *d = d1;
                let el = Float::with_val(prec, 1) / k;
                out.push((if flipped { ExactPreamble::ShuntL(el) } else { ExactPreamble::SeriesC(el) }, approximate));
                continue 'outer;
            }
            // finite j-axis poles
            if d.degree() >= 2 {
                let roots = d.roots()?;
                let hit = roots.iter().find(|r| {
                    r.im > 0 && rel(&r.re, &r.abs()) <= tol
                });
                if let Some(r) = hit {
                    let w2 = Float::with_val(prec, r.im.square_ref());
                    let quad = s2_plus(prec, &w2);
                    let (d1, rem) = d.div_rem(&quad)?;
                    let approximate = !r.re.is_zero();
                    if !approximate {
                        check_cancel(0, "j-axis pole deflation", &rem.max_abs(), &d.max_abs(), cancel_tol)?;
                    }
                    let jw = MpComplex::j(prec, &r.im);
                    // 2k = n(jω)/(jω·d1(jω))
                    let k2c = &n.eval_c(&jw) / &(&jw * &d1.eval_c(&jw));
                    let k2 = k2c.re.clone();
                    if k2 <= 0 || rel(&k2c.im, &k2c.abs()) > 1e-6 {
                        return Err(BruneError::NotPr("j-axis pole with non-positive-real residue".into()));
                    }
                    let rest = n.sub(&d1.shift(1).scale(&k2));
                    let (n2, rem2) = rest.div_rem(&quad)?;
                    if !approximate {
                        check_cancel(0, "j-axis residue removal", &rem2.max_abs(), &rest.max_abs(), cancel_tol)?;
                    }
                    *n = n2;
                    *d = d1;
                    let one = mp::f(prec, 1.0);
                    let el = if flipped {
                        // Y-block 2k·s/(s²+ω²): series L = 1/(2k), C = 2k/ω²
                        let l = Float::with_val(prec, &one / &k2);
                        let c = Float::with_val(prec, &k2 / &w2);
                        ExactPreamble::ShuntSeriesLc(l, c)
                    } else {
                        // Z-block: parallel C = 1/(2k), L = 2k/ω²
                        let l = Float::with_val(prec, &k2 / &w2);
                        let c = Float::with_val(prec, &one / &k2);
                        ExactPreamble::SeriesParallelLc(l, c)
                    };
                    out.push((el, approximate));
                    continue 'outer;
                }
            }
        }
        break;
    }
    Ok((out, Remainder::Function(RationalFunction::new(num, den))))
}

#[derive(Debug, Clone, PartialEq)]
pub enum Remainder {
    Function(RationalFunction),
    Short,
    Open,
}

/// Global minimum of `Re Z(jω)` over `ω ∈ [0, ∞]`.
///
/// Writing `Re Z(jω) = E(x)/D(x)` with `x = ω²`, interior extrema are the
/// positive real roots of `E′D − ED′`; these are found to working precision,
/// which the exact cancellation of the subsequent extraction requires.
/// An interior extremum must undercut the best value so far by more than
/// `tie_tol` (relative) to be preferred; otherwise rounding in the input can
/// turn a minimum at infinity into a spurious one at huge `ω`.
pub fn find_min_real_part(z: &RationalFunction, tie_tol: f64) -> Result<MinRealPart, BruneError> {
    let prec = z.prec();
    let (ne, no) = z.num.even_odd_jw();
    let (de, dn) = z.den.even_odd_jw();
    let x = Poly::monomial(prec, 1);
    let e = ne.mul(&de).add(&x.mul(&no).mul(&dn));
    let d = de.mul(&de).add(&x.mul(&dn).mul(&dn));
    let ratio = |xv: &Float| Float::with_val(prec, e.eval(xv) / d.eval(xv));

    let at_inf = if z.num.degree() == z.den.degree() {
        Float::with_val(prec, z.num.lead() / z.den.lead())
    } else {
        Float::new(prec)
    };
    let mut best = MinRealPart { location: MinLocation::Infinity, r1: at_inf };
    let zero = Float::new(prec);
    let at_zero = ratio(&zero);
    if at_zero < best.r1 {
        best = MinRealPart { location: MinLocation::Zero, r1: at_zero };
    }
    let p = e.derivative().mul(&d).sub(&e.mul(&d.derivative()));
    let scale = p.max_abs();
    if p.is_zero() || scale.is_zero() {
        return Ok(best);
    }
    let snap = mp::f(prec, 2.0).pow(-(prec as i32) / 4);
    let pd = p.derivative();
    for r in p.roots()? {
        if r.re <= 0 || Float::with_val(prec, r.im.abs_ref()) > Float::with_val(prec, r.abs() * &snap) {
            continue;
        }
        let mut xr = r.re.clone();
        for _ in 0..3 {
            let der = pd.eval(&xr);
            if der.is_zero() {
                break;
            }
            xr -= Float::with_val(prec, p.eval(&xr) / der);
        }
        let v = ratio(&xr);
        let scale = Float::with_val(prec, v.abs_ref()).max(&Float::with_val(prec, best.r1.abs_ref()));
        if v < Float::with_val(prec, &best.r1 - scale * tie_tol) {
            best = MinRealPart { location: MinLocation::Finite(xr.sqrt()), r1: v };
        }
    }
    Ok(best)
}

/// Dense log-grid scan of `Re Z(jω)` used to cross-check the root-based
/// minimum. Returns `(ω, value)` of the smallest sample.
pub fn grid_min_real_part(z: &RationalFunction, band_ghz: (f64, f64), points: usize) -> (f64, f64) {
    let prec = z.prec();
    let (ne, no) = z.num.even_odd_jw();
    let (de, dn) = z.den.even_odd_jw();
    let (lo, hi) = (band_ghz.0.ln(), band_ghz.1.ln());
    let mut best = (f64::NAN, f64::INFINITY);
    for i in 0..points {
        let w = TAU * (lo + (hi - lo) * i as f64 / (points.max(2) - 1) as f64).exp();
        let x = mp::f(prec, w * w);
        let (a, b, c, d) = (ne.eval(&x), no.eval(&x), de.eval(&x), dn.eval(&x));
        let num = Float::with_val(prec, &a * &c) + Float::with_val(prec, &b * &d) * &x;
        let den = Float::with_val(prec, c.square_ref()) + Float::with_val(prec, d.square_ref()) * &x;
        let v = (num / den).to_f64();
        if v < best.1 {
            best = (w, v);
        }
    }
    best
}

/// One regular Brune cycle at finite, nonzero `ω₁`.
pub fn extract_stage(
    z: &RationalFunction,
    omega1: &Float,
    r1: &Float,
    cancel_tol: f64,
    step: usize,
) -> Result<(ExactElement, RationalFunction), BruneError> {
    let prec = z.prec();
    let (n, d) = (&z.num, &z.den);
    let big_n = d.degree();
    let n1 = n.sub(&d.scale(r1));
    let jw = MpComplex::j(prec, omega1);
    let z1 = &n1.eval_c(&jw) / &d.eval_c(&jw);
    let l1c = &z1 / &jw;
    let l1 = l1c.re.clone();
    check_cancel(step, "Re Z1(jω1)", &z1.re, &z1.abs(), cancel_tol)?;

    let w2 = Float::with_val(prec, omega1.square_ref());
    let quad = s2_plus(prec, &w2);
    let a = n1.sub(&d.shift(1).scale(&l1));
    let (q, rem) = a.div_rem(&quad)?;
    check_cancel(step, "Z1 − L1·s zero at jω1", &rem.max_abs(), &a.max_abs(), cancel_tol)?;

    let l2c = &(&jw * &q.eval_c(&jw)) / &d.eval_c(&jw);
    let l2 = l2c.re.clone();
    check_cancel(step, "shunt residue reality", &l2c.im, &l2c.abs(), cancel_tol)?;
    if l2 <= 0 {
        return Err(BruneError::NotPr(format!("step {step}: non-positive shunt inductance L2")));
    }
    let c2 = Float::with_val(prec, Float::with_val(prec, &l2 * &w2).recip_ref());

    let b = d.scale(&l2).sub(&q.shift(1));
    let (r, rem2) = b.div_rem(&quad)?;
    check_cancel(step, "shunt branch removal", &rem2.max_abs(), &b.max_abs(), cancel_tol)?;

    let sum = Float::with_val(prec, &l1 + &l2);
    let l3 = -Float::with_val(prec, &l1 * &l2) / sum;
    let mut num2 = q.scale(&l2).sub(&r.shift(1).scale(&l3));
    let scale = num2.max_abs();
    let top = num2.truncate(r.degree() + 1);
    check_cancel(step, "series L3 removal", &top, &scale, cancel_tol)?;
    debug_assert_eq!(r.degree() + 2, big_n);

    let el = ExactElement::Stage { omega1: omega1.clone(), r: r1.clone(), l1, l2, c2, l3 };
    Ok((el, RationalFunction::new(num2, r)))
}

/// Extraction at `ω₁ = ∞`: series `R₁`, shunt `C = lim 1/(s(Z − R₁))`.
pub fn extract_degenerate_stage(
    z: &RationalFunction,
    cancel_tol: f64,
    snap_tol: f64,
    step: usize,
) -> Result<(ExactElement, Remainder), BruneError> {
    let prec = z.prec();
    let (n, d) = (&z.num, &z.den);
    let big_n = d.degree();
    let r1 = if n.degree() == big_n { Float::with_val(prec, n.lead() / d.lead()) } else { Float::new(prec) };
    let mut n1 = n.sub(&d.scale(&r1));
    let top = n1.truncate(big_n);
    check_cancel(step, "resistive limit", &top, &n.max_abs(), cancel_tol)?;
    if n1.is_zero() || n1.degree() + 1 != big_n {
        return Err(BruneError::NotPr(format!("step {step}: Z − R has no simple zero at infinity")));
    }
    let c = Float::with_val(prec, d.lead() / n1.lead());
    if c <= 0 {
        return Err(BruneError::NotPr(format!("step {step}: non-positive degenerate capacitance")));
    }
    let cn = n1.shift(1).scale(&c);
    let mut d2 = d.sub(&cn);
    let top = d2.truncate(big_n);
    check_cancel(step, "shunt capacitance removal", &top, &d.max_abs(), cancel_tol)?;
    if d2.degree() >= 1 && cancelled(&d2, d2.degree(), d, &cn, snap_tol).is_some() {
        // remainder starts with a series inductor
        d2.drop_lead();
    }
    let el = ExactElement::Capacitive { r: r1, c };
    if d2.is_zero() || rel(&d2.max_abs(), &d.max_abs()) <= cancel_tol {
        return Ok((el, Remainder::Open));
    }
    Ok((el, Remainder::Function(RationalFunction::new(n1, d2))))
}

/// Extraction at `ω₁ = 0`: series `R₁ = Z(0)`, shunt `L = lim (Z − R₁)/s`.
pub fn extract_inductive_stage(
    z: &RationalFunction,
    cancel_tol: f64,
    step: usize,
) -> Result<(ExactElement, RationalFunction), BruneError> {
    let prec = z.prec();
    let (n, d) = (&z.num, &z.den);
    let r1 = Float::with_val(prec, &n.coeff(0) / &d.coeff(0));
    let n1 = n.sub(&d.scale(&r1));
    let (n1s, c0) = n1.unshift();
    check_cancel(step, "resistive value at dc", &c0, &n.max_abs(), cancel_tol)?;
    let l = Float::with_val(prec, &n1s.coeff(0) / &d.coeff(0));
    if l <= 0 {
        return Err(BruneError::NotPr(format!("step {step}: non-positive degenerate inductance")));
    }
    let m = d.scale(&l).sub(&n1s);
    let (ms, c0) = m.unshift();
    check_cancel(step, "shunt inductance removal", &c0, &m.max_abs(), cancel_tol)?;
    Ok((ExactElement::Inductive { r: r1, l: l.clone() }, RationalFunction::new(n1s.scale(&l), ms)))
}

/// Necessary condition for a PR remainder: Hurwitz-type sign pattern.
fn pr_screen(z: &RationalFunction, cancel_tol: f64) -> Result<(), String> {
    let nmax = z.num.max_abs();
    let dmax = z.den.max_abs();
    for (k, c) in z.den.coeffs().iter().enumerate() {
        if c.is_sign_negative() && rel(c, &dmax) > cancel_tol {
            return Err(format!("denominator coefficient {k} is negative"));
        }
    }
    for (k, c) in z.num.coeffs().iter().enumerate() {
        if c.is_sign_negative() && rel(c, &nmax) > cancel_tol {
            return Err(format!("numerator coefficient {k} is negative"));
        }
    }
    Ok(())
}

/// Runs the full Brune procedure on a pole/residue model.
pub fn synthesize(model: &PoleResidueModel, opts: &SynthesisOptions) -> Result<Synthesis, BruneError> {
    synthesize_rational(&model.to_rational(opts.prec), opts)
}

pub fn synthesize_rational(z0: &RationalFunction, opts: &SynthesisOptions) -> Result<Synthesis, BruneError> {
    let prec = z0.prec();
    let mut z = z0.clone();
    let mut log = SynthesisLog { elements: vec![], termination: ExactTermination::Short, degrees: vec![] };
    let mut warnings = Vec::new();
    let mut stages = 0usize;
    loop {
        let (pre, rest) = remove_jaxis_poles(&z, opts.preamble_tol, opts.cancel_tol, opts.snap_tol)?;
        for (kind, approximate) in pre {
            if approximate {
                warnings.push(format!("near-axis pole forced into the preamble after stage {stages}"));
            }
            log.elements.push(ExactElement::Preamble { kind, approximate });
        }
        z = match rest {
            Remainder::Function(f) => f,
            Remainder::Short => {
                log.termination = ExactTermination::Short;
                warnings.push("remainder is a short circuit".into());
                break;
            }
            Remainder::Open => {
                log.termination = ExactTermination::Open;
                warnings.push("remainder is an open circuit".into());
                break;
            }
        };
        log.degrees.push((z.num.degree(), z.den.degree()));
        if z.den.degree() == 0 {
            let r = Float::with_val(prec, &z.num.coeff(0) / &z.den.coeff(0));
            if r < -opts.pr_tol {
                return Err(BruneError::NotPr(format!("negative terminal resistance {:e}", r.to_f64())));
            }
            log.termination = ExactTermination::Resistor(r);
            break;
        }
        if stages >= opts.max_stages {
            return Err(BruneError::Divergence(opts.max_stages));
        }
        let step = stages + 1;
        let min = find_min_real_part(&z, opts.snap_tol)?;
        if opts.check_points > 0 {
            let (w, g) = grid_min_real_part(&z, opts.check_band_ghz, opts.check_points);
            let r1 = min.r1.to_f64();
            let slack = opts.cancel_tol.sqrt() * r1.abs().max(g.abs()) + f64::MIN_POSITIVE;
            if g < r1 - slack {
                return Err(BruneError::MissedMinimum { roots: r1, grid: g, omega: w });
            }
        }
        if min.r1 < -opts.pr_tol {
            return Err(BruneError::NotPr(format!(
                "Re Z(jω) reaches {:e} Ω at stage {step} (tolerance {:e} Ω)",
                min.r1.to_f64(),
                opts.pr_tol
            )));
        }
        if min.r1.is_sign_negative() && !min.r1.is_zero() {
            warnings.push(format!(
                "stage {step}: Re Z(jω) minimum is {:e} Ω; realized with a negative series resistor",
                min.r1.to_f64()
            ));
        }
        let (el, next) = match &min.location {
            MinLocation::Finite(w) => extract_stage(&z, w, &min.r1, opts.cancel_tol, step)?,
            MinLocation::Infinity => match extract_degenerate_stage(&z, opts.cancel_tol, opts.snap_tol, step)? {
                (el, Remainder::Function(f)) => (el, f),
                (el, _) => {
                    log.elements.push(el);
                    log.termination = ExactTermination::Open;
                    warnings.push("remainder is an open circuit".into());
                    break;
                }
            },
            MinLocation::Zero => {
                warnings.push(format!("stage {step} is inductive-degenerate (minimum at dc)"));
                extract_inductive_stage(&z, opts.cancel_tol, step)?
            }
        };
        log.elements.push(el);
        stages += 1;
        if let Err(reason) = pr_screen(&next, opts.cancel_tol) {
            return Err(BruneError::Conditioning { step, reason, log: Box::new(log) });
        }
        z = next;
    }
    let end = match log.termination {
        ExactTermination::Resistor(_) => (z.num.degree(), z.den.degree()),
        _ => (0, 0),
    };
    if log.degrees.last() != Some(&end) {
        log.degrees.push(end);
    }
    let circuit = circuit_from_log(&log);
    Ok(Synthesis { circuit, log, warnings })
}

/// Rounds an exact log to the double-precision circuit description.
pub fn circuit_from_log(log: &SynthesisLog) -> BruneCircuit {
    let mut stages = Vec::new();
    let mut preamble = Vec::new();
    for el in &log.elements {
        match el {
            ExactElement::Preamble { kind, approximate } => {
                let g = |x: &Float| x.to_f64();
                let kind = match kind {
                    ExactPreamble::SeriesL(l) => PreambleKind::SeriesInductor { l: g(l) },
                    ExactPreamble::SeriesC(c) => PreambleKind::SeriesCapacitor { c: g(c) },
                    ExactPreamble::SeriesParallelLc(l, c) => PreambleKind::SeriesParallelLc { l: g(l), c: g(c) },
                    ExactPreamble::ShuntC(c) => PreambleKind::ShuntCapacitor { c: g(c) },
                    ExactPreamble::ShuntL(l) => PreambleKind::ShuntInductor { l: g(l) },
                    ExactPreamble::ShuntSeriesLc(l, c) => PreambleKind::ShuntSeriesLc { l: g(l), c: g(c) },
                };
                preamble.push(PreambleElement { kind, position: stages.len(), approximate: *approximate });
            }
            ExactElement::Stage { omega1, r, l1, l2, c2, l3 } => {
                let prec = l1.prec();
                let l11 = Float::with_val(prec, l1 + l2);
                let l22 = Float::with_val(prec, l3 + l2);
                let t = Float::with_val(prec, &l11 / &l22).sqrt();
                stages.push(BruneStage {
                    r: r.to_f64(),
                    c: c2.to_f64(),
                    l11: l11.to_f64(),
                    l22: l22.to_f64(),
                    m: l2.to_f64(),
                    t: t.to_f64(),
                    degenerate: false,
                    kind: StageKind::Regular,
                    t_triple: Some([l1.to_f64(), l2.to_f64(), l3.to_f64()]),
                    shunt_l: None,
                    omega1: Some(omega1.to_f64()),
                });
            }
            ExactElement::Capacitive { r, c } => stages.push(BruneStage::capacitive(r.to_f64(), c.to_f64())),
            ExactElement::Inductive { r, l } => stages.push(BruneStage {
                r: r.to_f64(),
                c: 0.0,
                l11: 0.0,
                l22: 0.0,
                m: 0.0,
                t: 0.0,
                degenerate: true,
                kind: StageKind::InductiveDegenerate,
                t_triple: None,
                shunt_l: Some(l.to_f64()),
                omega1: Some(0.0),
            }),
        }
    }
    let (r_terminal, termination) = match &log.termination {
        ExactTermination::Resistor(r) => (r.to_f64(), Termination::Resistor),
        ExactTermination::Short => (0.0, Termination::Short),
        ExactTermination::Open => (0.0, Termination::Open),
    };
    BruneCircuit { stages, r_terminal, termination, preamble }
}
