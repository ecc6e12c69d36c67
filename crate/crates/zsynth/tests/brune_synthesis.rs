mod common;

use common::*;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;
use zsynth::brune::{self, BruneError, PreambleKind, SynthesisOptions, Termination};
use zsynth::io::model_json::{table1, table2};
use zsynth::ratmodel::PoleResidueModel;
use zsynth::response::{ladder_impedance, ladder_impedance_coupled};

#[test]
fn random_ladders_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let opts = SynthesisOptions::default();
    for case in 0..30 {
        let lad = Ladder::random(&mut rng, 1 + case % 4);
        let syn = brune::synthesize(&lad.model(), &opts).unwrap_or_else(|e| panic!("case {case}: {e}"));
        for w in [0.02, 0.4, 1.3, 6.0, 25.0] {
            let s = Complex64::new(0.0, w);
            let want = lad.eval(s);
            let got = ladder_impedance(&syn.circuit, s).unwrap();
            let got2 = ladder_impedance_coupled(&syn.circuit, s).unwrap();
            assert!((got - want).norm() <= 1e-7 * want.norm(), "case {case} w={w}: {got} vs {want}");
            assert!((got2 - want).norm() <= 1e-7 * want.norm(), "case {case} w={w}: coupled form {got2}");
        }
    }
}

#[test]
fn degrees_fall_with_every_stage() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for n in 2..=4 {
        let lad = Ladder::random(&mut rng, n);
        let syn = brune::synthesize(&lad.model(), &SynthesisOptions::default()).unwrap();
        let deg = &syn.log.degrees;
        // one entry before each stage, one for the terminal remainder
        assert_eq!(deg.len(), syn.circuit.stages.len() + 1, "{deg:?}");
        for w in deg.windows(2) {
            assert!(w[1].0 < w[0].0 && w[1].1 < w[0].1, "{deg:?}");
        }
        assert_eq!(*deg.last().unwrap(), (0, 0));
        assert!(deg[0].1 <= 2 * n);
    }
}

#[test]
fn lossless_input_becomes_a_preamble() {
    let c = Complex64::new;
    // (s^2 + 1)/s = s + 1/s
    let m = PoleResidueModel::new(vec![c(0.0, 0.0)], vec![c(1.0, 0.0)], 0.0, 1.0).unwrap();
    let syn = brune::synthesize(&m, &SynthesisOptions::default()).unwrap();
    assert!(syn.circuit.stages.is_empty());
    let kinds: Vec<_> = syn.circuit.preamble.iter().map(|p| p.kind).collect();
    assert!(kinds.contains(&PreambleKind::SeriesInductor { l: 1.0 }), "{kinds:?}");
    assert!(kinds.contains(&PreambleKind::SeriesCapacitor { c: 1.0 }), "{kinds:?}");
    assert_eq!(syn.circuit.termination, Termination::Short);
    let s = c(0.0, 2.0);
    assert!((ladder_impedance(&syn.circuit, s).unwrap() - m.evaluate(s).unwrap()).norm() < 1e-12);
}

#[test]
fn active_models_are_rejected() {
    let c = Complex64::new;
    let m = PoleResidueModel::new(vec![c(1.0, 0.0)], vec![c(1.0, 0.0)], 0.0, 0.0).unwrap();
    assert!(matches!(brune::synthesize(&m, &SynthesisOptions::default()), Err(BruneError::NotPr(_))));
    // negative real part beyond the tolerance
    let m = PoleResidueModel::new(vec![c(-1.0, 0.0)], vec![c(1.0, 0.0)], -0.5, 0.0).unwrap();
    assert!(brune::synthesize(&m, &SynthesisOptions::default()).is_err());
}

#[test]
fn bundled_fit_synthesis_structure() {
    let syn = brune::synthesize(&table1(), &SynthesisOptions::default()).unwrap();
    let c = &syn.circuit;
    assert_eq!(c.stages.len(), 9);
    assert_eq!(c.degenerate_indices(), vec![4]);
    assert_eq!(c.termination, Termination::Resistor);
    assert!(c.preamble.is_empty());
    // the fit dips slightly below zero real part; that is realized as R1 < 0
    assert!(c.stages[0].r < 0.0 && c.stages[0].r > -1e-3);
    assert!(syn.warnings.iter().any(|w| w.contains("negative")), "{:?}", syn.warnings);
    assert!(c.stages[1..].iter().all(|s| s.r > 0.0) && c.r_terminal > 0.0);
}

#[test]
fn published_circuit_approximates_the_fit_in_band() {
    let m = table1();
    let c = table2();
    let mut worst: f64 = 0.0;
    for i in 0..200 {
        let s = Complex64::new(0.0, TAU * (3.0 + 12.0 * i as f64 / 199.0));
        let (a, b) = (ladder_impedance(&c, s).unwrap(), m.evaluate(s).unwrap());
        worst = worst.max((a - b).norm() / b.norm());
    }
    // printed element values carry ~3 significant digits
    assert!(worst < 0.05, "{worst}");
}
