#![allow(dead_code)]

use num_complex::Complex64;
use rand::Rng;
use zsynth::brune::{BruneCircuit, BruneStage};
use zsynth::mp;
use zsynth::poly::Poly;
use zsynth::ratmodel::{PoleResidueModel, RationalFunction};

pub fn log_uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

/// RLC ladder `(R_t) ← [series R+sL, shunt C]*`, input at the last shunt C.
#[derive(Debug, Clone)]
pub struct Ladder {
    pub r_term: f64,
    /// `(R, L, C)` from the termination towards the input.
    pub sections: Vec<(f64, f64, f64)>,
}

impl Ladder {
    pub fn random(rng: &mut impl Rng, sections: usize) -> Self {
        Ladder {
            r_term: log_uniform(rng, 0.5, 50.0),
            sections: (0..sections)
                .map(|_| (log_uniform(rng, 0.01, 5.0), log_uniform(rng, 0.2, 5.0), log_uniform(rng, 0.2, 5.0)))
                .collect(),
        }
    }

    /// Direct complex evaluation (independent of the polynomial path).
    pub fn eval(&self, s: Complex64) -> Complex64 {
        let mut z = Complex64::new(self.r_term, 0.0);
        for &(r, l, c) in &self.sections {
            z += r + s * l;
            z = z / (1.0 + s * c * z);
        }
        z
    }

    pub fn rational(&self, prec: u32) -> RationalFunction {
        let f = |x: f64| mp::f(prec, x);
        let mut n = Poly::constant(f(self.r_term));
        let mut d = Poly::constant(f(1.0));
        for &(r, l, c) in &self.sections {
            let series = Poly::new(prec, vec![f(r), f(l)]);
            n = n.add(&series.mul(&d));
            let sc = Poly::new(prec, vec![f(0.0), f(c)]);
            d = d.add(&sc.mul(&n));
        }
        RationalFunction::new(n, d)
    }

    pub fn model(&self) -> PoleResidueModel {
        self.rational(256).to_pole_residue().expect("ladder has simple poles")
    }
}

/// Adds a conjugate pair of right-half-plane poles.
pub fn inject_rhp(model: &PoleResidueModel, rng: &mut impl Rng) -> PoleResidueModel {
    let p = Complex64::new(log_uniform(rng, 0.01, 1.0), log_uniform(rng, 0.5, 5.0));
    let r = Complex64::new(log_uniform(rng, 0.1, 2.0), 0.0);
    let mut poles = model.poles().to_vec();
    let mut res = model.residues().to_vec();
    poles.extend([p, p.conj()]);
    res.extend([r, r.conj()]);
    PoleResidueModel::new(poles, res, model.d(), model.e()).expect("valid model")
}

/// Random Brune circuit with `m` stages; `degenerate` is a 0-based stage index.
pub fn random_brune(rng: &mut impl Rng, m: usize, degenerate: Option<usize>) -> BruneCircuit {
    let stages = (0..m)
        .map(|i| {
            let r = log_uniform(rng, 1.0, 1e3);
            let c = log_uniform(rng, 0.1, 1.0);
            if Some(i) == degenerate {
                return BruneStage::capacitive(r, c);
            }
            let l22 = log_uniform(rng, 0.5, 10.0);
            // keep t away from 1
            let t: f64 = if rng.gen_bool(0.5) { rng.gen_range(0.05..0.9) } else { rng.gen_range(1.1..3.0) };
            BruneStage::from_coupled(r, c, t * t * l22, l22)
        })
        .collect();
    BruneCircuit::new(stages, log_uniform(rng, 10.0, 1e4))
}

pub fn max_rel_diff(a: &nalgebra::DMatrix<f64>, b: &nalgebra::DMatrix<f64>) -> f64 {
    (a - b).abs().max() / b.abs().max()
}
