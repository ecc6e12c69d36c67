//! Acceptance report: one PASS/FAIL line per criterion (1–8).

mod common;

use common::*;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;
use std::time::Instant;
use zsynth::brune::{self, BruneCircuit, Synthesis, SynthesisOptions};
use zsynth::foster::{self, DropReason, FosterConfig};
use zsynth::io::model_json::{table1, table2};
use zsynth::mp::{self, MpComplex};
use zsynth::quant::{self, JunctionParams, RateOptions};
use zsynth::ratmodel::{check_pr, PoleResidueModel, ScanConfig};
use zsynth::response::{self, Network, PoleSearch, SweepConfig};

const F_QB_GHZ: f64 = 6.7052;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn rel(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a.abs()
    } else {
        ((a - b) / b).abs()
    }
}

fn lj_grid() -> Vec<f64> {
    (0..26).map(|i| 4.0 + 0.1 * i as f64).collect()
}

fn synth(model: &PoleResidueModel) -> Synthesis {
    brune::synthesize(model, &SynthesisOptions::default()).expect("bundled fit synthesizes")
}

// 2: round trip, extended and double precision
fn criterion2(model: &PoleResidueModel) -> Outcome {
    let t0 = Instant::now();
    let syn = synth(model);
    let prec = 256;
    let mut worst_mp: f64 = 0.0;
    let mut worst_f64: f64 = 0.0;
    for i in 0..1000 {
        let f = 3.0 + 12.0 * i as f64 / 999.0;
        let w = mp::f(prec, TAU * f);
        let s = MpComplex::j(prec, &w);
        let z_model = model.evaluate_mp(&s).unwrap();
        let z_ladder = response::ladder_impedance_mp(&syn.log, &s).expect("finite ladder");
        let diff = (&z_ladder - &z_model).abs() / z_model.abs();
        worst_mp = worst_mp.max(diff.to_f64());
        let sd = Complex64::new(0.0, TAU * f);
        let zd = response::ladder_impedance(&syn.circuit, sd).unwrap();
        let zm = model.evaluate(sd).unwrap();
        worst_f64 = worst_f64.max((zd - zm).norm() / zm.norm());
    }
    let dt = t0.elapsed().as_secs_f64();
    let pass = worst_mp <= 1e-6 && worst_f64 <= 1e-3 && dt < 5.0;
    outcome(
        pass,
        format!("max rel error {worst_mp:.3e} (extended, ≤1e-6), {worst_f64:.3e} (double, ≤1e-3); {dt:.2} s (<5 s)"),
    )
}

// 1: reference-circuit reproduction
fn criterion1(model: &PoleResidueModel, crit2_pass: bool) -> Outcome {
    let t0 = Instant::now();
    let syn = synth(model);
    let dt = t0.elapsed().as_secs_f64();
    let got = &syn.circuit;
    let want = table2();
    let mut structure = got.stages.len() == 9 && got.r_terminal > 0.0 && got.preamble.is_empty();
    structure &= got.degenerate_indices() == vec![4];
    let mut misses = Vec::new();
    let mut checked = 0;
    for (i, (g, w)) in got.stages.iter().zip(&want.stages).enumerate() {
        let tol = if i < 5 { 0.01 } else { 0.05 };
        let fields: Vec<(&str, f64, f64)> = if w.degenerate {
            vec![("R", g.r, w.r), ("C", g.c, w.c)]
        } else {
            vec![("R", g.r, w.r), ("C", g.c, w.c), ("L11", g.l11, w.l11), ("L22", g.l22, w.l22)]
        };
        for (name, a, b) in fields {
            checked += 1;
            let e = rel(a, b);
            if !(e <= tol) {
                misses.push(format!("{name}{}: {a:.5e} vs {b:.5e} ({:.1}%)", i + 1, 100.0 * e));
            }
        }
    }
    checked += 1;
    let e = rel(got.r_terminal, want.r_terminal);
    if !(e <= 0.05) {
        misses.push(format!("R10: {:.5e} vs {:.5e} ({:.1}%)", got.r_terminal, want.r_terminal, 100.0 * e));
    }
    let values_ok = misses.is_empty();
    let pass = structure && dt < 10.0 && (values_ok || crit2_pass);
    let mut detail = format!(
        "{} stages + R_term {:.5e}, degenerate at {:?}; {:.2} s (<10 s); ",
        got.stages.len(),
        got.r_terminal,
        got.degenerate_indices().iter().map(|k| k + 1).collect::<Vec<_>>(),
        dt
    );
    if values_ok {
        detail += "all element values within tolerance";
    } else {
        detail += &format!(
            "{}/{} element values outside tolerance, reported with round-trip criterion 2 {}: {}",
            misses.len(),
            checked,
            if crit2_pass { "passing" } else { "FAILING" },
            misses.join("; ")
        );
    }
    outcome(pass, detail)
}

// 3: Foster structure
fn criterion3(model: &PoleResidueModel) -> Outcome {
    let f = foster::build_foster(model, &FosterConfig { band_ghz: (3.0, 15.0), keep_negative_residues: false });
    let pairs: Vec<(usize, usize)> = f.stages.iter().map(|s| (s.source_pole_indices.0 + 1, s.source_pole_indices.1 + 1)).collect();
    let want = vec![(2, 3), (4, 5), (6, 7), (8, 9), (10, 11)];
    let neg = f.dropped.iter().any(|d| d.pole_indices == vec![11, 12] && d.reason == DropReason::NegativeRealResidue);
    let dropped: Vec<String> =
        f.dropped.iter().map(|d| format!("{:?}:{:?}", d.pole_indices.iter().map(|i| i + 1).collect::<Vec<_>>(), d.reason)).collect();
    outcome(pairs == want && neg, format!("stages from pole pairs {pairs:?}; dropped {}", dropped.join(", ")))
}

// 4: qubit pole at 4.5 nH
fn criterion4(model: &PoleResidueModel, brune_c: &BruneCircuit) -> Outcome {
    let cfg = PoleSearch::default();
    let fc = foster::build_foster(model, &FosterConfig::default());
    let fit = response::find_qubit_pole(Network::Model(model), 4.5, 6.7, &cfg);
    let br = response::find_qubit_pole(Network::Brune(brune_c), 4.5, 6.7, &cfg);
    let fo = response::find_qubit_pole(Network::Foster(&fc), 4.5, 6.7, &cfg);
    match (fit, br, fo) {
        (Ok(a), Ok(b), Ok(c)) => {
            let da = (a.f_qb - F_QB_GHZ).abs() * 1e3;
            let db = (b.f_qb - F_QB_GHZ).abs() * 1e3;
            let dc = (c.f_qb - F_QB_GHZ).abs() * 1e3;
            let pass = da <= 1.0 && db <= 1.0 && (50.0..=200.0).contains(&dc);
            let warn = if c.warnings.is_empty() { String::new() } else { format!(" [foster warning: {}]", c.warnings.join("; ")) };
            outcome(
                pass,
                format!(
                    "fit {:.6} GHz (Δ {da:.3} MHz), Brune {:.6} GHz (Δ {db:.3} MHz), Foster {:.6} GHz (Δ {dc:.1} MHz, need 50–200){warn}",
                    a.f_qb, b.f_qb, c.f_qb
                ),
            )
        }
        (a, b, c) => outcome(false, format!("pole search failed: {:?} {:?} {:?}", a.err(), b.err(), c.err())),
    }
}

// 5: sweep fidelity
fn criterion5(model: &PoleResidueModel, brune_c: &BruneCircuit) -> Outcome {
    let t0 = Instant::now();
    let cfg = PoleSearch::default();
    let sw = SweepConfig::default();
    let lj = lj_grid();
    let fc = foster::build_foster(model, &FosterConfig::default());
    let run = |n: Network<'_>| -> Option<Vec<f64>> {
        let rows = response::sweep_lj(n, &lj, &sw, &cfg).ok()?;
        rows.iter().map(|r| r.pole.as_ref().map(|p| p.xi_qb.abs())).collect()
    };
    let (Some(fit), Some(br), Some(fo)) = (run(Network::Model(model)), run(Network::Brune(brune_c)), run(Network::Foster(&fc))) else {
        return outcome(false, "sweep failed");
    };
    let dt = t0.elapsed().as_secs_f64();
    let brune_dev = fit.iter().zip(&br).map(|(a, b)| rel(*b, *a)).fold(0.0, f64::max);
    let foster_dev = fit.iter().zip(&fo).map(|(a, b)| rel(*b, *a)).fold(0.0, f64::max);
    let rises: Vec<String> =
        (1..lj.len()).filter(|&i| !(fit[i] < fit[i - 1])).map(|i| format!("{:.1}→{:.1} nH", lj[i - 1], lj[i])).collect();
    let brune_rises = (1..lj.len()).filter(|&i| !(br[i] < br[i - 1])).count();
    let pass = brune_dev <= 0.005 && rises.is_empty() && brune_rises == 0 && foster_dev > 0.10 && dt < 30.0;
    let foster_worse = fit.iter().zip(&br).zip(&fo).filter(|((a, b), c)| rel(**c, **a) > rel(**b, **a)).count();
    outcome(
        pass,
        format!(
            "Brune vs fit max dev {:.3}% (≤0.5%); fit |Re s_qb| non-decreasing on {} of {} steps ({}); Brune on {}; \
             |Re s_qb| at 4.0/5.5/6.5 nH = {:.3e}/{:.3e}/{:.3e} rad/ns; Foster max dev {:.0}% (>10%), worse than Brune at {}/{} points; {:.2} s (<30 s)",
            100.0 * brune_dev,
            rises.len(),
            lj.len() - 1,
            rises.join(", "),
            brune_rises,
            fit[0],
            fit[15],
            fit[25],
            100.0 * foster_dev,
            foster_worse,
            lj.len(),
            dt
        ),
    )
}

/// `(L_J, ratio, overlap-choice == nearest)` on the published circuit.
pub fn ratio_sweep() -> Result<Vec<(f64, f64, bool)>, String> {
    let c = table2();
    let lj = lj_grid();
    let rows = response::sweep_lj(Network::Brune(&c), &lj, &SweepConfig::default(), &PoleSearch::default()).map_err(|e| e.to_string())?;
    let mut out = Vec::new();
    for r in rows {
        let p = r.pole.ok_or_else(|| r.error.unwrap_or_default())?;
        let jp = JunctionParams::new(r.lj, 0.0);
        let sys = quant::build_system(&c, &jp).map_err(|e| e.to_string())?;
        let modes = quant::harmonic_modes(&sys).map_err(|e| e.to_string())?;
        let q = quant::mode_nearest(&modes, p.omega_qb.abs());
        let rates = quant::relaxation_rates(&sys, &modes, q, &RateOptions::default(), &jp).map_err(|e| e.to_string())?;
        out.push((r.lj, rates.total / p.xi_qb.abs(), quant::qubit_mode_by_overlap(&sys, &modes) == q));
    }
    Ok(out)
}

// 6: quantum/classical consistency
fn criterion6() -> Outcome {
    let rows = match ratio_sweep() {
        Ok(r) => r,
        Err(e) => return outcome(false, e),
    };
    let ratios: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let (lo, hi) = ratios.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let spread = (hi - lo) / mean;
    let golden: serde_json::Value = serde_json::from_str(include_str!("golden/quantum_classical_ratio.json")).unwrap();
    let g_lj = golden["l_j_nh"].as_f64().unwrap();
    let g_ratio = golden["ratio"].as_f64().unwrap();
    let at = rows.iter().find(|r| (r.0 - g_lj).abs() < 1e-9).map(|r| r.1).unwrap_or(f64::NAN);
    let golden_ok = rel(at, g_ratio) <= 1e-6;
    let overlap_agree = rows.iter().filter(|r| r.2).count();
    if std::env::var_os("ZSYNTH_ACCEPTANCE_VERBOSE").is_some() {
        for r in &rows {
            eprintln!("  L_J {:.1} nH: ratio {:.6}{}", r.0, r.1, if r.2 { "" } else { " (overlap mode differs)" });
        }
    }
    outcome(
        spread <= 0.02 && golden_ok,
        format!(
            "ratio Σrate/|Re s_qb| over {:.1}–{:.1} nH: min {lo:.4}, max {hi:.4}, mean {mean:.4}, spread {:.2}% (≤2%); \
             golden {g_ratio:.9} at {g_lj} nH {} (measured {at:.9}); overlap-selected mode = nearest-pole mode at {}/{} points",
            rows[0].0,
            rows[rows.len() - 1].0,
            100.0 * spread,
            if golden_ok { "reproduced" } else { "NOT reproduced" },
            overlap_agree,
            rows.len()
        ),
    )
}

fn is_tridiagonal(m: &DMatrix<f64>) -> bool {
    (0..m.nrows()).all(|i| (0..m.ncols()).all(|j| (i as isize - j as isize).abs() <= 1 || m[(i, j)] == 0.0))
}

fn is_symmetric(m: &DMatrix<f64>) -> bool {
    (m - m.transpose()).abs().max() <= 1e-14 * m.abs().max()
}

/// Closed forms for `M ≤ 2`, written out by hand; `None` when not covered.
fn hand_coupling(c: &BruneCircuit, j: usize) -> Option<Vec<f64>> {
    let st = &c.stages;
    let a = |i: usize| {
        let t = if st[i].degenerate { 0.0 } else { (st[i].l11 / st[i].l22).sqrt() };
        (st[i].c / (1.0 - t), t)
    };
    match (st.len(), st.iter().position(|s| s.degenerate), j) {
        (1, None, 1) => {
            let (a1, t1) = a(0);
            Some(vec![a1, t1 * a1])
        }
        (2, None, 1) => {
            let ((a1, t1), (a2, t2)) = (a(0), a(1));
            Some(vec![a1, t1 * a1 - a2, -t2 * a2])
        }
        (2, None, 2) => {
            let (a2, t2) = a(1);
            Some(vec![0.0, -a2, -t2 * a2])
        }
        (2, Some(0), 1) => {
            let (a2, t2) = a(1);
            Some(vec![st[0].c + a2, t2 * a2])
        }
        (2, Some(0), 2) => {
            let (a2, t2) = a(1);
            Some(vec![a2, t2 * a2])
        }
        (2, Some(1), 1) => {
            let (a1, t1) = a(0);
            Some(vec![a1, t1 * a1 - st[1].c])
        }
        (2, Some(1), 2) => Some(vec![0.0, -st[1].c]),
        (m, _, j) if j == m + 1 => {
            let n = if st.iter().any(|s| s.degenerate) { m } else { m + 1 };
            let mut v = vec![0.0; n];
            v[n - 1] = 1.0;
            Some(v)
        }
        _ => None,
    }
}

// 7: matrix invariants on random circuits
fn criterion7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut failures: Vec<String> = Vec::new();
    let mut hand_checked = 0;
    let mut oracle_checked = 0;
    let mut worst_slope = f64::INFINITY;
    let mut worst_err: f64 = 0.0;
    for case in 0..200 {
        let m = if case < 60 { 1 + case % 2 } else { rng.gen_range(1..=6) };
        let deg = if rng.gen_bool(0.4) { Some(rng.gen_range(0..m)) } else { None };
        let c = random_brune(&mut rng, m, deg);
        let mut jp = JunctionParams::new(log_uniform(&mut rng, 1.0, 10.0), log_uniform(&mut rng, 0.05, 0.5));
        if deg.is_some() && rng.gen_bool(0.5) {
            jp.c_j = 0.0;
        }
        jp.c_terminal = if rng.gen_bool(0.5) { 0.0 } else { log_uniform(&mut rng, 0.01, 0.3) };
        let mut fail = |why: String| failures.push(format!("case {case} (M={m}, deg={deg:?}): {why}"));
        let sys = match quant::build_system(&c, &jp) {
            Ok(s) => s,
            Err(e) => {
                fail(e.to_string());
                continue;
            }
        };
        let n = if deg.is_some() { m } else { m + 1 };
        let (cap, k0) = (&sys.cap_matrix, &sys.stiffness);
        if cap.nrows() != n {
            fail(format!("dimension {} != {n}", cap.nrows()));
        }
        if !(is_symmetric(cap) && is_tridiagonal(cap) && cap.clone().cholesky().is_some()) {
            fail("capacitance matrix not SPD tridiagonal".into());
        }
        if !(is_symmetric(k0) && is_tridiagonal(k0)) {
            fail("stiffness not symmetric tridiagonal".into());
        }
        let eig = k0.clone().symmetric_eigen();
        let scale = eig.eigenvalues.abs().max();
        let zero: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i].abs() <= 1e-10 * scale).collect();
        if eig.eigenvalues.iter().any(|&l| l < -1e-10 * scale) {
            fail("stiffness not PSD".into());
        }
        if zero.len() != 1 {
            fail(format!("stiffness null space has dimension {}", zero.len()));
        } else {
            let v = eig.eigenvectors.column(zero[0]).into_owned();
            let sig = &sys.junction_row_signs;
            let cv = cap * &v;
            if !(sig.dot(&v).abs() > 1e-8 && sig.dot(&cv).abs() > 1e-8 * cap.abs().max()) {
                fail("stiffness null vector is orthogonal to the junction coordinate".into());
            }
        }
        for j in 1..=m + 1 {
            if let Some(want) = hand_coupling(&c, j) {
                hand_checked += 1;
                let got = quant::coupling_vector(&sys, j).unwrap();
                let scale = want.iter().fold(0.0f64, |a, x| a.max(x.abs()));
                if got.len() != want.len() || got.iter().zip(&want).any(|(g, w)| (g - w).abs() > 1e-13 * scale) {
                    fail(format!("coupling vector {j}: {:?} vs hand {:?}", got.as_slice(), want));
                }
            }
        }
        if deg.is_none() {
            oracle_checked += 1;
            let base = c.stages.iter().map(|s| (s.l11 * s.l22).sqrt()).fold(f64::INFINITY, f64::min);
            let errs: Vec<f64> = [1e-3, 1e-4]
                .iter()
                .map(|&eps| {
                    let ch = quant::build_system_via_transformations(&c, &jp, eps * base, 256).unwrap();
                    max_rel_diff(&ch.system.cap_matrix, cap).max(max_rel_diff(&ch.system.stiffness, k0))
                })
                .collect();
            let slope = (errs[0] / errs[1]).log10();
            worst_err = worst_err.max(errs[1]);
            if errs[1] > 0.0 {
                worst_slope = worst_slope.min(slope);
            }
            if !(errs[1] <= 1e-4 && (errs[1] == 0.0 || slope >= 0.9)) {
                fail(format!("transformation oracle errors {errs:?}, slope {slope:.2}"));
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "200 circuits: {} failures; {hand_checked} coupling vectors vs closed forms; {oracle_checked} oracle comparisons, \
             worst error at L0=1e-4·√(L11L22) {worst_err:.2e}, min log-log slope {worst_slope:.2} (≥0.9){}",
            failures.len(),
            failures.first().map(|f| format!("; first: {f}")).unwrap_or_default()
        ),
    )
}

// 8: PR checker
fn criterion8() -> Outcome {
    let c = |re, im| Complex64::new(re, im);
    let scan = ScanConfig::default();
    let fixtures: Vec<(&str, PoleResidueModel, bool)> = vec![
        ("s+1", PoleResidueModel::new(vec![], vec![], 1.0, 1.0).unwrap(), true),
        ("1/(s-1)", PoleResidueModel::new(vec![c(1.0, 0.0)], vec![c(1.0, 0.0)], 0.0, 0.0).unwrap(), false),
        ("(s^2+1)/s", PoleResidueModel::new(vec![c(0.0, 0.0)], vec![c(1.0, 0.0)], 0.0, 1.0).unwrap(), true),
        ("1/(s+1)", PoleResidueModel::new(vec![c(-1.0, 0.0)], vec![c(1.0, 0.0)], 0.0, 0.0).unwrap(), true),
    ];
    let mut wrong = Vec::new();
    for (name, m, want) in &fixtures {
        if check_pr(m, &scan).unwrap().is_pr != *want {
            wrong.push(name.to_string());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut passive_ok, mut rhp_ok) = (0, 0);
    for _ in 0..100 {
        let n = rng.gen_range(1..=4);
        let model = Ladder::random(&mut rng, n).model();
        if check_pr(&model, &scan).unwrap().is_pr {
            passive_ok += 1;
        }
        if !check_pr(&inject_rhp(&model, &mut rng), &scan).unwrap().is_pr {
            rhp_ok += 1;
        }
    }
    outcome(
        wrong.is_empty() && passive_ok == 100 && rhp_ok == 100,
        format!(
            "fixtures misclassified: {:?}; passive ladders classified PR {passive_ok}/100; with injected RHP pole classified non-PR {rhp_ok}/100",
            wrong
        ),
    )
}

fn main() {
    let model = table1();
    let syn = synth(&model);
    let c2 = criterion2(&model);
    let c1 = criterion1(&model, c2.pass);
    let results = [
        ("reference circuit reproduction", c1),
        ("round-trip exactness", c2),
        ("Foster structure", criterion3(&model)),
        ("qubit pole", criterion4(&model, &syn.circuit)),
        ("sweep fidelity", criterion5(&model, &syn.circuit)),
        ("quantum/classical consistency", criterion6()),
        ("matrix invariant suite", criterion7()),
        ("PR checker suite", criterion8()),
    ];
    let mut failed = 0;
    for (i, (name, o)) in results.iter().enumerate() {
        println!("criterion {} [{name}]: {} — {}", i + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {}/{} criteria pass", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
