//! Real-coefficient polynomials in extended precision.

use crate::mp::{self, MpComplex};
use num_complex::Complex64;
use rug::ops::Pow;
use rug::Float;
use std::fmt;

#[derive(Debug, thiserror::Error)]
pub enum PolyError {
    #[error("division by the zero polynomial")]
    DivByZero,
    #[error("root finder did not converge after {iterations} iterations ({unconverged} roots left)")]
    NoConvergence { iterations: usize, unconverged: usize },
}

/// Coefficients in ascending order: `c[k]` multiplies `s^k`.
#[derive(Clone, PartialEq)]
pub struct Poly {
    c: Vec<Float>,
    prec: u32,
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v: Vec<f64> = self.c.iter().map(|x| x.to_f64()).collect();
        write!(f, "Poly{:?}", v)
    }
}

impl Poly {
    pub fn new(prec: u32, mut c: Vec<Float>) -> Self {
        for x in c.iter_mut() {
            x.set_prec(prec);
        }
        let mut p = Poly { c, prec };
        p.trim();
        p
    }

    pub fn from_f64(prec: u32, c: &[f64]) -> Self {
        Poly::new(prec, c.iter().map(|&x| mp::f(prec, x)).collect())
    }

    pub fn zero(prec: u32) -> Self {
        Poly { c: vec![Float::new(prec)], prec }
    }

    pub fn constant(x: Float) -> Self {
        let prec = x.prec();
        Poly { c: vec![x], prec }
    }

    /// `s^k`
    pub fn monomial(prec: u32, k: usize) -> Self {
        let mut c = vec![Float::new(prec); k + 1];
        c[k] = mp::f(prec, 1.0);
        Poly { c, prec }
    }

    fn trim(&mut self) {
        while self.c.len() > 1 && self.c.last().is_some_and(|x| x.is_zero()) {
            self.c.pop();
        }
        if self.c.is_empty() {
            self.c.push(Float::new(self.prec));
        }
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn coeffs(&self) -> &[Float] {
        &self.c
    }

    pub fn coeff(&self, k: usize) -> Float {
        self.c.get(k).cloned().unwrap_or_else(|| Float::new(self.prec))
    }

    pub fn degree(&self) -> usize {
        self.c.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.c.len() == 1 && self.c[0].is_zero()
    }

    pub fn lead(&self) -> &Float {
        self.c.last().expect("non-empty")
    }

    pub fn max_abs(&self) -> Float {
        let mut m = Float::new(self.prec);
        for x in &self.c {
            let a = Float::with_val(self.prec, x.abs_ref());
            if a > m {
                m = a;
            }
        }
        m
    }

    /// Removes the leading coefficient and returns it. Used after a step that
    /// is known to cancel the top term analytically.
    pub fn drop_lead(&mut self) -> Float {
        let top = if self.c.len() > 1 { self.c.pop().unwrap() } else {
            std::mem::replace(&mut self.c[0], Float::new(self.prec))
        };
        self.trim();
        top
    }

    /// Truncates to at most `len` coefficients, returning the largest
    /// magnitude removed.
    pub fn truncate(&mut self, len: usize) -> Float {
        let mut m = Float::new(self.prec);
        while self.c.len() > len.max(1) {
            let x = self.c.pop().unwrap();
            let a = x.abs();
            if a > m {
                m = a;
            }
        }
        self.trim();
        m
    }

    pub fn add(&self, o: &Poly) -> Poly {
        let n = self.c.len().max(o.c.len());
        let c = (0..n)
            .map(|k| Float::with_val(self.prec, &self.coeff(k) + &o.coeff(k)))
            .collect();
        Poly::new(self.prec, c)
    }

    pub fn sub(&self, o: &Poly) -> Poly {
        let n = self.c.len().max(o.c.len());
        let c = (0..n)
            .map(|k| Float::with_val(self.prec, &self.coeff(k) - &o.coeff(k)))
            .collect();
        Poly::new(self.prec, c)
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        if self.is_zero() || o.is_zero() {
            return Poly::zero(self.prec);
        }
        let mut c = vec![Float::new(self.prec); self.c.len() + o.c.len() - 1];
        for (i, a) in self.c.iter().enumerate() {
            for (j, b) in o.c.iter().enumerate() {
                c[i + j] += Float::with_val(self.prec, a * b);
            }
        }
        Poly::new(self.prec, c)
    }

    pub fn scale(&self, k: &Float) -> Poly {
        Poly::new(self.prec, self.c.iter().map(|x| Float::with_val(self.prec, x * k)).collect())
    }

    /// Multiplies by `s^k`.
    pub fn shift(&self, k: usize) -> Poly {
        if self.is_zero() {
            return self.clone();
        }
        let mut c = vec![Float::new(self.prec); k];
        c.extend(self.c.iter().cloned());
        Poly::new(self.prec, c)
    }

    /// Divides by `s` assuming the constant term is (numerically) zero;
    /// returns the discarded constant.
    pub fn unshift(&self) -> (Poly, Float) {
        if self.c.len() == 1 {
            return (Poly::zero(self.prec), self.c[0].clone());
        }
        (Poly::new(self.prec, self.c[1..].to_vec()), self.c[0].clone())
    }

    pub fn derivative(&self) -> Poly {
        if self.c.len() == 1 {
            return Poly::zero(self.prec);
        }
        let c = self.c[1..]
            .iter()
            .enumerate()
            .map(|(k, x)| Float::with_val(self.prec, x * (k as u32 + 1)))
            .collect();
        Poly::new(self.prec, c)
    }

    /// Long division: `self = q·d + r`, `deg r < deg d`.
    pub fn div_rem(&self, d: &Poly) -> Result<(Poly, Poly), PolyError> {
        if d.is_zero() {
            return Err(PolyError::DivByZero);
        }
        let dn = d.degree();
        if self.degree() < dn {
            return Ok((Poly::zero(self.prec), self.clone()));
        }
        let mut r = self.c.clone();
        let qn = self.degree() - dn;
        let mut q = vec![Float::new(self.prec); qn + 1];
        let lead = d.lead();
        for k in (0..=qn).rev() {
            let coef = Float::with_val(self.prec, &r[k + dn] / lead);
            for (i, dc) in d.c.iter().enumerate() {
                r[k + i] -= Float::with_val(self.prec, &coef * dc);
            }
            r[k + dn] = Float::new(self.prec);
            q[k] = coef;
        }
        r.truncate(dn.max(1));
        Ok((Poly::new(self.prec, q), Poly::new(self.prec, r)))
    }

    pub fn eval(&self, x: &Float) -> Float {
        let mut acc = Float::new(self.prec);
        for c in self.c.iter().rev() {
            acc *= x;
            acc += c;
        }
        acc
    }

    pub fn eval_c(&self, z: &MpComplex) -> MpComplex {
        let mut acc = MpComplex::zero(self.prec);
        for c in self.c.iter().rev() {
            acc = &acc * z;
            acc.re += c;
        }
        acc
    }

    /// Value and first derivative at a complex point.
    pub fn eval_c_d(&self, z: &MpComplex) -> (MpComplex, MpComplex) {
        let mut p = MpComplex::zero(self.prec);
        let mut dp = MpComplex::zero(self.prec);
        for c in self.c.iter().rev() {
            dp = &(&dp * z) + &p;
            p = &p * z;
            p.re += c;
        }
        (p, dp)
    }

    pub fn eval_c64(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for c in self.c.iter().rev() {
            acc = acc * z + c.to_f64();
        }
        acc
    }

    /// Splits `p(jω) = E(ω²) + jω·O(ω²)`.
    pub fn even_odd_jw(&self) -> (Poly, Poly) {
        let mut e = Vec::new();
        let mut o = Vec::new();
        for (k, c) in self.c.iter().enumerate() {
            let neg = (k / 2) % 2 == 1;
            let v = if neg { Float::with_val(self.prec, -c) } else { c.clone() };
            if k % 2 == 0 {
                e.push(v);
            } else {
                o.push(v);
            }
        }
        if o.is_empty() {
            o.push(Float::new(self.prec));
        }
        (Poly::new(self.prec, e), Poly::new(self.prec, o))
    }

    /// All complex roots via Aberth–Ehrlich iteration seeded from the Newton
    /// polygon of the coefficient magnitudes.
    pub fn roots(&self) -> Result<Vec<MpComplex>, PolyError> {
        let prec = self.prec;
        let mut out = Vec::new();
        let mut c = self.c.clone();
        while c.len() > 1 && c[0].is_zero() {
            out.push(MpComplex::zero(prec));
            c.remove(0);
        }
        let n = c.len() - 1;
        if n == 0 {
            return Ok(out);
        }
        let p = Poly::new(prec, c);
        let mut z = p.initial_guesses();
        let abs_c: Vec<Float> = p.c.iter().map(|x| x.clone().abs()).collect();
        let abs_p = Poly::new(prec, abs_c);
        let tol = mp::eps(prec) * (4 * n as u32 + 4);
        let mut done = vec![false; n];
        let max_iter = 2000;
        for _ in 0..max_iter {
            let mut all = true;
            for i in 0..n {
                if done[i] {
                    continue;
                }
                let (pv, dpv) = p.eval_c_d(&z[i]);
                // Stop once the residual is at the rounding-error level.
                let bound = abs_p.eval(&z[i].abs()) * &tol;
                if pv.abs() <= bound {
                    done[i] = true;
                    continue;
                }
                all = false;
                let ratio = &pv / &dpv;
                let mut sum = MpComplex::zero(prec);
                for (k, zk) in z.iter().enumerate() {
                    if k != i {
                        sum = &sum + &(&z[i] - zk).recip();
                    }
                }
                let mut den = &ratio * &sum;
                den.re = Float::with_val(prec, 1) - den.re;
                den.im = -den.im;
                let w = &ratio / &den;
                let step_small = w.abs() <= Float::with_val(prec, z[i].abs() * &tol);
                z[i] = &z[i] - &w;
                if step_small {
                    done[i] = true;
                }
            }
            if all {
                out.extend(z);
                return Ok(out);
            }
        }
        let unconverged = done.iter().filter(|d| !**d).count();
        if unconverged == 0 {
            out.extend(z);
            return Ok(out);
        }
        Err(PolyError::NoConvergence { iterations: max_iter, unconverged })
    }

    fn initial_guesses(&self) -> Vec<MpComplex> {
        let prec = self.prec;
        let n = self.degree();
        let pts: Vec<(usize, f64)> = self
            .c
            .iter()
            .enumerate()
            .filter(|(_, x)| !x.is_zero())
            .map(|(k, x)| (k, x.clone().abs().log2().to_f64()))
            .collect();
        // upper convex hull
        let mut hull: Vec<(usize, f64)> = Vec::new();
        for &p in &pts {
            while hull.len() >= 2 {
                let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
                let cross = (b.0 as f64 - a.0 as f64) * (p.1 - a.1) - (b.1 - a.1) * (p.0 as f64 - a.0 as f64);
                if cross >= 0.0 {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(p);
        }
        let mut z = Vec::with_capacity(n);
        let tau = std::f64::consts::TAU;
        for w in hull.windows(2) {
            let (i, hi) = w[0];
            let (j, hj) = w[1];
            let m = j - i;
            let log_r = (hi - hj) / m as f64;
            let r = mp::f(prec, 2.0).pow(mp::f(prec, log_r));
            for k in 0..m {
                let ang = tau * k as f64 / m as f64 + tau * i as f64 / n as f64 + 0.4;
                z.push(MpComplex::new(
                    Float::with_val(prec, &r * ang.cos()),
                    Float::with_val(prec, &r * ang.sin()),
                ));
            }
        }
        z
    }
}
