//! Pole/residue impedance models, their polynomial-ratio form, and the
//! positive-real (passivity) checker.
//!
//! Frequencies are angular and measured in rad/ns, so a pole listed as `g`
//! in "GHz" (i.e. `s/2π` in GHz) is stored as `2π·g`. Impedances are in Ω,
//! inductances in nH and capacitances in nF, which keeps `s·L` and `1/(s·C)`
//! in Ω without any scale factors.

use crate::mp::{self, MpComplex};
use crate::poly::{Poly, PolyError};
use num_complex::Complex64;
use rug::ops::Pow;
use rug::Float;
use serde::Serialize;
use std::f64::consts::TAU;

#[derive(Debug, thiserror::Error)]
pub enum RatError {
    #[error("poles and residues differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("negative super-linear coefficient e = {0}")]
    NegativeE(f64),
    #[error("pole {0} has no conjugate partner (or the partner's residue is not conjugate)")]
    Unpaired(usize),
    #[error("real pole {0} carries a complex residue")]
    ComplexResidueOnRealPole(usize),
    #[error("poles {0} and {1} coincide")]
    DuplicatePole(usize, usize),
    #[error("evaluation at pole {index}")]
    AtPole { index: usize },
    #[error("empty scan grid")]
    EmptyScan,
    #[error("improper rational function: numerator degree exceeds denominator degree by {0}")]
    Improper(usize),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// One partial-fraction term as stored after pairing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Term {
    Real { index: usize },
    /// `upper` has positive imaginary part; `lower` is its conjugate.
    Pair { upper: usize, lower: usize },
}

/// `Z(s) = Σ r_k/(s − p_k) + d + e·s`.
#[derive(Debug, Clone, PartialEq)]
pub struct PoleResidueModel {
    poles: Vec<Complex64>,
    residues: Vec<Complex64>,
    d: f64,
    e: f64,
    terms: Vec<Term>,
}

/// Relative tolerance used to match conjugate partners.
const PAIR_TOL: f64 = 1e-12;

impl PoleResidueModel {
    pub fn new(poles: Vec<Complex64>, residues: Vec<Complex64>, d: f64, e: f64) -> Result<Self, RatError> {
        if poles.len() != residues.len() {
            return Err(RatError::LengthMismatch(poles.len(), residues.len()));
        }
        for (i, (p, r)) in poles.iter().zip(&residues).enumerate() {
            if !(p.re.is_finite() && p.im.is_finite() && r.re.is_finite() && r.im.is_finite()) {
                return Err(RatError::NonFinite(i));
            }
        }
        if !d.is_finite() || !e.is_finite() {
            return Err(RatError::NonFinite(poles.len()));
        }
        if e < 0.0 {
            return Err(RatError::NegativeE(e));
        }
        for i in 0..poles.len() {
            for j in i + 1..poles.len() {
                if poles[i] == poles[j] {
                    return Err(RatError::DuplicatePole(i, j));
                }
            }
        }
        let terms = pair_terms(&poles, &residues)?;
        Ok(PoleResidueModel { poles, residues, d, e, terms })
    }

    /// Builds a model from poles listed as `s/2π` in GHz; residues are kept
    /// as given.
    pub fn from_ghz(poles_ghz: Vec<Complex64>, residues: Vec<Complex64>, d: f64, e: f64) -> Result<Self, RatError> {
        let poles = poles_ghz.into_iter().map(|p| p * TAU).collect();
        PoleResidueModel::new(poles, residues, d, e)
    }

    pub fn constant(d: f64) -> Self {
        PoleResidueModel { poles: vec![], residues: vec![], d, e: 0.0, terms: vec![] }
    }

    pub fn poles(&self) -> &[Complex64] {
        &self.poles
    }
    pub fn residues(&self) -> &[Complex64] {
        &self.residues
    }
    pub fn d(&self) -> f64 {
        self.d
    }
    pub fn e(&self) -> f64 {
        self.e
    }
    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn evaluate(&self, s: Complex64) -> Result<Complex64, RatError> {
        let mut z = Complex64::new(self.d, 0.0) + s * self.e;
        for (k, (p, r)) in self.poles.iter().zip(&self.residues).enumerate() {
            if s == *p {
                return Err(RatError::AtPole { index: k });
            }
            z += r / (s - p);
        }
        Ok(z)
    }

    /// Value and derivative `dZ/ds`.
    pub fn evaluate_d(&self, s: Complex64) -> Result<(Complex64, Complex64), RatError> {
        let mut z = Complex64::new(self.d, 0.0) + s * self.e;
        let mut dz = Complex64::new(self.e, 0.0);
        for (k, (p, r)) in self.poles.iter().zip(&self.residues).enumerate() {
            if s == *p {
                return Err(RatError::AtPole { index: k });
            }
            let inv = 1.0 / (s - p);
            z += r * inv;
            dz -= r * inv * inv;
        }
        Ok((z, dz))
    }

    pub fn evaluate_mp(&self, s: &MpComplex) -> Result<MpComplex, RatError> {
        let prec = s.prec();
        let mut z = MpComplex::from_real(mp::f(prec, self.d)) + s.scale(&mp::f(prec, self.e));
        for (k, (p, r)) in self.poles.iter().zip(&self.residues).enumerate() {
            let diff = s - &MpComplex::from_c64(prec, *p);
            if diff.is_zero() {
                return Err(RatError::AtPole { index: k });
            }
            z = z + &(&MpComplex::from_c64(prec, *r) / &diff);
        }
        Ok(z)
    }

    /// Expands into `n(s)/d(s)` with conjugate pairs combined into real
    /// quadratics first.
    pub fn to_rational(&self, prec: u32) -> RationalFunction {
        let one = Poly::from_f64(prec, &[1.0]);
        let mut factors = Vec::new();
        let mut numers = Vec::new();
        for t in &self.terms {
            match *t {
                Term::Real { index } => {
                    let p = self.poles[index].re;
                    factors.push(Poly::from_f64(prec, &[-p, 1.0]));
                    numers.push(Poly::from_f64(prec, &[self.residues[index].re]));
                }
                Term::Pair { upper, .. } => {
                    // r/(s−p) + r̄/(s−p̄) = (2a·s − 2(aξ + bω)) / (s² − 2ξs + |p|²)
                    let (xi, om) = (mp::f(prec, self.poles[upper].re), mp::f(prec, self.poles[upper].im));
                    let (a, b) = (mp::f(prec, self.residues[upper].re), mp::f(prec, self.residues[upper].im));
                    let c0 = Float::with_val(prec, xi.square_ref()) + Float::with_val(prec, om.square_ref());
                    let c1 = Float::with_val(prec, &xi * -2i32);
                    factors.push(Poly::new(prec, vec![c0, c1, mp::f(prec, 1.0)]));
                    let n0 = (Float::with_val(prec, &a * &xi) + Float::with_val(prec, &b * &om)) * -2i32;
                    let n1 = Float::with_val(prec, &a * 2u32);
                    numers.push(Poly::new(prec, vec![n0, n1]));
                }
            }
        }
        let den = factors.iter().fold(one.clone(), |acc, f| acc.mul(f));
        let mut num = den.scale(&mp::f(prec, self.d)).add(&den.shift(1).scale(&mp::f(prec, self.e)));
        for (i, n) in numers.iter().enumerate() {
            let others = factors
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .fold(one.clone(), |acc, (_, f)| acc.mul(f));
            num = num.add(&n.mul(&others));
        }
        RationalFunction::new(num, den)
    }
}

fn pair_terms(poles: &[Complex64], residues: &[Complex64]) -> Result<Vec<Term>, RatError> {
    let n = poles.len();
    let mut used = vec![false; n];
    let mut terms = Vec::new();
    for i in 0..n {
        if used[i] {
            continue;
        }
        let p = poles[i];
        if p.im == 0.0 {
            if residues[i].im != 0.0 {
                return Err(RatError::ComplexResidueOnRealPole(i));
            }
            used[i] = true;
            terms.push(Term::Real { index: i });
            continue;
        }
        let scale = p.norm();
        let partner = (0..n).find(|&j| {
            j != i
                && !used[j]
                && (poles[j] - p.conj()).norm() <= PAIR_TOL * scale
                && (residues[j] - residues[i].conj()).norm() <= PAIR_TOL * residues[i].norm().max(f64::MIN_POSITIVE)
        });
        let j = partner.ok_or(RatError::Unpaired(i))?;
        used[i] = true;
        used[j] = true;
        let (upper, lower) = if p.im > 0.0 { (i, j) } else { (j, i) };
        terms.push(Term::Pair { upper, lower });
    }
    Ok(terms)
}

/// `Z(s) = n(s)/d(s)` with monic denominator.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalFunction {
    pub num: Poly,
    pub den: Poly,
}

impl RationalFunction {
    /// Normalises the denominator to be monic.
    pub fn new(num: Poly, den: Poly) -> Self {
        let lead = den.lead().clone();
        let inv = Float::with_val(den.prec(), 1) / lead;
        RationalFunction { num: num.scale(&inv), den: den.scale(&inv) }
    }

    pub fn constant(prec: u32, r: f64) -> Self {
        RationalFunction { num: Poly::from_f64(prec, &[r]), den: Poly::from_f64(prec, &[1.0]) }
    }

    pub fn prec(&self) -> u32 {
        self.den.prec()
    }

    pub fn eval(&self, s: &MpComplex) -> MpComplex {
        &self.num.eval_c(s) / &self.den.eval_c(s)
    }

    pub fn eval_c64(&self, s: Complex64) -> Complex64 {
        self.eval(&MpComplex::from_c64(self.prec(), s)).to_c64()
    }

    /// Partial-fraction form via the roots of the denominator.
    pub fn to_pole_residue(&self) -> Result<PoleResidueModel, RatError> {
        let prec = self.prec();
        let (q, r) = self.num.div_rem(&self.den)?;
        if q.degree() > 1 {
            return Err(RatError::Improper(q.degree()));
        }
        let d = q.coeff(0).to_f64();
        let e = q.coeff(1).to_f64();
        let dd = self.den.derivative();
        let roots = self.den.roots()?;
        let snap = mp::f(prec, 2.0).pow(-(prec as i32) / 3);
        let mut poles = Vec::new();
        let mut residues = Vec::new();
        for z in &roots {
            let real = Float::with_val(prec, z.im.abs_ref()) <= Float::with_val(prec, z.abs() * &snap);
            if real {
                let zr = MpComplex::from_real(z.re.clone());
                let res = &r.eval_c(&zr) / &dd.eval_c(&zr);
                poles.push(Complex64::new(zr.re.to_f64(), 0.0));
                residues.push(Complex64::new(res.re.to_f64(), 0.0));
            } else if z.im.is_sign_positive() {
                let res = (&r.eval_c(z) / &dd.eval_c(z)).to_c64();
                let p = z.to_c64();
                poles.push(p);
                residues.push(res);
                poles.push(p.conj());
                residues.push(res.conj());
            }
        }
        PoleResidueModel::new(poles, residues, d, e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ViolationKind {
    RhpPole,
    JaxisResidue,
    NegativeRealPart,
    NonSimplePole,
}

#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    /// Complex frequency, rad/ns.
    #[serde(serialize_with = "crate::io::ser_c64")]
    pub location: Complex64,
    pub magnitude: f64,
}

/// Location and value of the smallest `Re Z(jω)` found by the scan.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MinRealPart {
    /// rad/ns; `f64::INFINITY` for the high-frequency limit.
    pub omega: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PrReport {
    pub is_pr: bool,
    pub violations: Vec<Violation>,
    pub min_real_part: Option<MinRealPart>,
    /// Threshold below which a negative minimum is treated as rounding noise.
    pub negative_tolerance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct ScanConfig {
    pub f_lo_ghz: f64,
    pub f_hi_ghz: f64,
    pub points: usize,
    pub refine_rel_width: f64,
    /// Poles with `|Re p| ≤ jaxis_rel_tol·|p|` are treated as lying on the axis.
    pub jaxis_rel_tol: f64,
    /// Negative minima smaller than `neg_rel_tol·max|Z|` over the grid are ignored.
    pub neg_rel_tol: f64,
    /// Relative pole distance under which two poles count as coincident.
    pub coincide_rel_tol: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            f_lo_ghz: 0.01,
            f_hi_ghz: 100.0,
            points: 20_000,
            refine_rel_width: 1e-12,
            jaxis_rel_tol: 1e-12,
            neg_rel_tol: 1e-12,
            coincide_rel_tol: 1e-9,
        }
    }
}

pub fn check_pr(model: &PoleResidueModel, scan: &ScanConfig) -> Result<PrReport, RatError> {
    if scan.points < 2 || !(scan.f_lo_ghz > 0.0 && scan.f_hi_ghz > scan.f_lo_ghz) {
        return Err(RatError::EmptyScan);
    }
    let mut violations = Vec::new();
    let poles = model.poles();
    let residues = model.residues();
    for (i, p) in poles.iter().enumerate() {
        let on_axis = p.re.abs() <= scan.jaxis_rel_tol * p.norm();
        if on_axis {
            let r = residues[i];
            if !(r.re > 0.0 && r.im.abs() <= 1e-9 * r.norm()) {
                violations.push(Violation { kind: ViolationKind::JaxisResidue, location: *p, magnitude: r.norm() });
            }
        } else if p.re > 0.0 {
            violations.push(Violation { kind: ViolationKind::RhpPole, location: *p, magnitude: p.re });
        }
        for q in &poles[i + 1..] {
            let dist = (p - q).norm();
            if dist <= scan.coincide_rel_tol * p.norm().max(q.norm()) {
                violations.push(Violation { kind: ViolationKind::NonSimplePole, location: *p, magnitude: dist });
            }
        }
    }

    let re_at = |w: f64| model.evaluate(Complex64::new(0.0, w)).ok().map(|z| (z.re, z.norm()));
    let (lo, hi) = (scan.f_lo_ghz.ln(), scan.f_hi_ghz.ln());
    let n = scan.points;
    let grid: Vec<f64> = (0..n).map(|i| TAU * (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp()).collect();
    let vals: Vec<Option<(f64, f64)>> = grid.iter().map(|&w| re_at(w)).collect();
    let zmax = vals.iter().flatten().map(|v| v.1).fold(0.0, f64::max);
    let mut best: Option<MinRealPart> = None;
    let mut consider = |omega: f64, value: f64| {
        if value.is_finite() && best.is_none_or(|b| value < b.value) {
            best = Some(MinRealPart { omega, value });
        }
    };
    for i in 0..n {
        let Some((v, _)) = vals[i] else { continue };
        let left = if i > 0 { vals[i - 1].map(|x| x.0) } else { None };
        let right = if i + 1 < n { vals[i + 1].map(|x| x.0) } else { None };
        let is_local = left.is_none_or(|l| v <= l) && right.is_none_or(|r| v <= r);
        if !is_local {
            continue;
        }
        if i == 0 || i == n - 1 || left.is_none() || right.is_none() {
            consider(grid[i], v);
            continue;
        }
        let (w, val) = golden_min(|w| re_at(w).map_or(f64::INFINITY, |x| x.0), grid[i - 1], grid[i + 1], scan.refine_rel_width);
        consider(w, val.min(v));
    }
    // analytic limits
    if let Ok(z0) = model.evaluate(Complex64::new(0.0, 0.0)) {
        consider(0.0, z0.re);
    }
    consider(f64::INFINITY, model.d());

    let neg_tol = scan.neg_rel_tol * zmax.max(model.d().abs());
    if let Some(b) = best {
        if b.value < -neg_tol {
            violations.push(Violation {
                kind: ViolationKind::NegativeRealPart,
                location: Complex64::new(0.0, b.omega),
                magnitude: -b.value,
            });
        }
    }
    Ok(PrReport { is_pr: violations.is_empty(), violations, min_real_part: best, negative_tolerance: neg_tol })
}

/// Golden-section search for a minimum of `f` on `[a, b]`.
pub fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, rel_width: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..400 {
        if (b - a).abs() <= rel_width * 0.5 * (a.abs() + b.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    if fc < fd { (c, fc) } else { (d, fd) }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn trivial_evaluations() {
        let m = PoleResidueModel::constant(2.0);
        assert_eq!(m.evaluate(c(0.3, 7.0)).unwrap(), c(2.0, 0.0));
        let m = PoleResidueModel::new(vec![c(-1.0, 0.0)], vec![c(1.0, 0.0)], 0.0, 0.0).unwrap();
        assert_eq!(m.evaluate(c(0.0, 0.0)).unwrap(), c(1.0, 0.0));
        assert!(matches!(m.evaluate(c(-1.0, 0.0)), Err(RatError::AtPole { index: 0 })));
    }

    #[test]
    fn conjugate_pair_expansion() {
        let m = PoleResidueModel::new(vec![c(-1.0, 1.0), c(-1.0, -1.0)], vec![c(1.0, 0.0), c(1.0, 0.0)], 0.0, 0.0).unwrap();
        let r = m.to_rational(128);
        let n: Vec<f64> = r.num.coeffs().iter().map(|x| x.to_f64()).collect();
        let d: Vec<f64> = r.den.coeffs().iter().map(|x| x.to_f64()).collect();
        assert_eq!(n, vec![2.0, 2.0]);
        assert_eq!(d, vec![2.0, 2.0, 1.0]);
        let single = PoleResidueModel::new(vec![c(-1.0, 0.0)], vec![c(1.0, 0.0)], 0.0, 0.0).unwrap().to_rational(64);
        assert_eq!(single.num.coeffs()[0].to_f64(), 1.0);
        assert_eq!(single.den.degree(), 1);
    }

    #[test]
    fn rejects_bad_models() {
        assert!(matches!(
            PoleResidueModel::new(vec![c(-1.0, 2.0)], vec![c(1.0, 0.0)], 0.0, 0.0),
            Err(RatError::Unpaired(0))
        ));
        assert!(matches!(PoleResidueModel::new(vec![], vec![], 0.0, -1.0), Err(RatError::NegativeE(_))));
        assert!(matches!(
            PoleResidueModel::new(vec![c(-1.0, 0.0)], vec![c(1.0, 1.0)], 0.0, 0.0),
            Err(RatError::ComplexResidueOnRealPole(0))
        ));
    }

    #[test]
    fn pr_fixtures() {
        let cfg = ScanConfig::default();
        let m = PoleResidueModel::new(vec![], vec![], 1.0, 1.0).unwrap();
        assert!(check_pr(&m, &cfg).unwrap().is_pr);
        let m = PoleResidueModel::new(vec![c(1.0, 0.0)], vec![c(1.0, 0.0)], 0.0, 0.0).unwrap();
        let rep = check_pr(&m, &cfg).unwrap();
        assert!(!rep.is_pr);
        assert!(rep.violations.iter().any(|v| v.kind == ViolationKind::RhpPole && v.location == c(1.0, 0.0)));
        let m = PoleResidueModel::new(vec![c(0.0, 0.0)], vec![c(1.0, 0.0)], 0.0, 1.0).unwrap();
        assert!(check_pr(&m, &cfg).unwrap().is_pr);
        let bad = ScanConfig { points: 0, ..cfg };
        assert!(matches!(check_pr(&m, &bad), Err(RatError::EmptyScan)));
    }

    #[test]
    fn negative_jaxis_residue_is_flagged() {
        let m = PoleResidueModel::new(vec![c(0.0, 3.0), c(0.0, -3.0)], vec![c(-1.0, 0.0), c(-1.0, 0.0)], 1.0, 0.0).unwrap();
        let rep = check_pr(&m, &ScanConfig::default()).unwrap();
        assert!(rep.violations.iter().any(|v| v.kind == ViolationKind::JaxisResidue));
    }

    #[test]
    fn rational_round_trip_through_roots() {
        let m = PoleResidueModel::new(
            vec![c(-0.5, 4.0), c(-0.5, -4.0), c(-2.0, 0.0)],
            vec![c(1.0, 0.2), c(1.0, -0.2), c(3.0, 0.0)],
            0.5,
            0.1,
        )
        .unwrap();
        let back = m.to_rational(256).to_pole_residue().unwrap();
        for w in [0.1, 1.0, 4.0, 30.0] {
            let s = c(0.01, w);
            let (a, b) = (m.evaluate(s).unwrap(), back.evaluate(s).unwrap());
            assert!((a - b).norm() < 1e-12 * a.norm());
        }
    }
}
