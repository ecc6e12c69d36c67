//! Quantization of a junction-shunted Brune ladder: capacitance and
//! stiffness matrices, resistor coupling vectors, harmonic modes and
//! Caldeira–Leggett relaxation rates.
//!
//! Node-flux coordinates: `Φ₁` is the junction flux, `Φ_{j+1}` the flux on
//! the far side of stage `j`. With tight coupling each regular stage
//! contributes `C′_j (Φ_j + t_j Φ_{j+1})²/2` and `(Φ_j + Φ_{j+1})²/(2L′_j)`.

use crate::brune::{BruneCircuit, StageKind, Termination};
use crate::mp;
use nalgebra::{DMatrix, DVector};
use rug::Float;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum QuantError {
    #[error("stage {0} is inductive-degenerate; no quantization recipe exists for it")]
    InductiveDegenerate(usize),
    #[error("more than one degenerate stage ({0:?}); only a single degenerate stage is supported")]
    MultipleDegenerate(Vec<usize>),
    #[error("capacitance matrix is singular; set a nonzero C_J (junction shunt capacitance)")]
    SingularCapacitance,
    #[error("invalid junction parameters: {0}")]
    InvalidJunction(String),
    #[error("unsupported circuit: {0}")]
    Unsupported(String),
    #[error("resistor index {j} out of range 1..={max}")]
    IndexOutOfRange { j: usize, max: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid mode frequency {0}")]
    InvalidMode(f64),
    #[error("resistor {j} is negative (R = {r}); pass allow_negative for a diagnostic rate")]
    NegativeResistance { j: usize, r: f64 },
    #[error("conditioning: {0}")]
    Conditioning(String),
}

/// Junction and environment. Units: nH, nF, K; constants in SI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JunctionParams {
    pub l_j: f64,
    pub c_j: f64,
    /// Placeholder capacitance `C_{M+1}` at the terminal resistor.
    #[serde(default)]
    pub c_terminal: f64,
    pub flux_quantum: f64,
    pub hbar: f64,
    pub k_b: f64,
    pub temperature: f64,
}

impl JunctionParams {
    pub fn new(l_j: f64, c_j: f64) -> Self {
        JunctionParams {
            l_j,
            c_j,
            c_terminal: 0.0,
            flux_quantum: 2.067_833_848e-15,
            hbar: 1.054_571_817e-34,
            k_b: 1.380_649e-23,
            temperature: 0.0,
        }
    }

    fn validate(&self) -> Result<(), QuantError> {
        if !(self.l_j > 0.0) {
            return Err(QuantError::InvalidJunction(format!("L_J must be positive (got {})", self.l_j)));
        }
        if !(self.c_j >= 0.0) || !(self.c_terminal >= 0.0) {
            return Err(QuantError::InvalidJunction("C_J and C_{M+1} must be non-negative".into()));
        }
        if !(self.temperature >= 0.0) {
            return Err(QuantError::InvalidJunction(format!("temperature {} is negative", self.temperature)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SpectralKind {
    MidLadder,
    Terminal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralDensity {
    pub kind: SpectralKind,
    pub r: f64,
    /// `Σ_{k≥j} C_k`, nF; unused for the terminal resistor.
    pub c_tail: f64,
}

/// `J(ω)`; odd in ω.
pub fn spectral_density(sd: &SpectralDensity, omega: f64) -> Result<f64, QuantError> {
    if !(sd.r > 0.0) {
        return Err(QuantError::InvalidParameter(format!("R must be positive (got {})", sd.r)));
    }
    Ok(density_unchecked(sd, omega))
}

fn density_unchecked(sd: &SpectralDensity, omega: f64) -> f64 {
    match sd.kind {
        SpectralKind::MidLadder => {
            let x = omega * sd.r * sd.c_tail;
            omega.powi(3) * sd.r / (1.0 + x * x)
        }
        SpectralKind::Terminal => omega / sd.r,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedSystem {
    /// `𝒞`, nF.
    pub cap_matrix: DMatrix<f64>,
    /// `M₀`, 1/nH.
    pub stiffness: DMatrix<f64>,
    /// `m̄_j`, `j = 1..=M+1`.
    pub coupling_vectors: Vec<DVector<f64>>,
    pub resistor_params: Vec<SpectralDensity>,
    /// Maps the coordinates to the junction flux.
    pub junction_row_signs: DVector<f64>,
    /// 1-based stage index of the degenerate stage.
    pub degenerate_index: Option<usize>,
    pub l_j: f64,
    pub t: Vec<f64>,
    pub c_prime: Vec<f64>,
    pub l_prime: Vec<f64>,
}

struct Prepared {
    m: usize,
    t: Vec<f64>,
    c: Vec<f64>,
    c_prime: Vec<f64>,
    l_prime: Vec<f64>,
    regular: Vec<bool>,
    degenerate: Option<usize>,
}

fn prepare(circuit: &BruneCircuit) -> Result<Prepared, QuantError> {
    if !circuit.preamble.is_empty() {
        return Err(QuantError::Unsupported("preamble (j-axis) elements are not part of the quantized ladder".into()));
    }
    if circuit.termination == Termination::Short {
        return Err(QuantError::Unsupported("short-circuit termination".into()));
    }
    let mut deg = Vec::new();
    for (i, st) in circuit.stages.iter().enumerate() {
        match st.kind {
            StageKind::InductiveDegenerate => return Err(QuantError::InductiveDegenerate(i + 1)),
            StageKind::CapacitiveDegenerate => deg.push(i + 1),
            StageKind::Regular => {}
        }
    }
    if deg.len() > 1 {
        return Err(QuantError::MultipleDegenerate(deg));
    }
    let m = circuit.stages.len();
    let mut p = Prepared {
        m,
        t: vec![],
        c: vec![],
        c_prime: vec![],
        l_prime: vec![],
        regular: vec![],
        degenerate: deg.first().copied(),
    };
    for (i, st) in circuit.stages.iter().enumerate() {
        if !(st.c > 0.0) {
            return Err(QuantError::InvalidParameter(format!("stage {} capacitance {} is not positive", i + 1, st.c)));
        }
        p.c.push(st.c);
        if st.kind == StageKind::CapacitiveDegenerate {
            p.t.push(0.0);
            p.c_prime.push(st.c);
            p.l_prime.push(0.0);
            p.regular.push(false);
            continue;
        }
        if !(st.l11 > 0.0 && st.l22 > 0.0) {
            return Err(QuantError::InvalidParameter(format!("stage {} needs positive L11, L22", i + 1)));
        }
        let t = (st.l11 / st.l22).sqrt();
        let g = 1.0 - t;
        if g.abs() < 1e-12 {
            return Err(QuantError::Conditioning(format!("stage {} has t = 1 (L11 = L22)", i + 1)));
        }
        p.t.push(t);
        p.c_prime.push(st.c / (g * g));
        p.l_prime.push(st.l22 * g * g);
        p.regular.push(true);
    }
    Ok(p)
}

/// `Φ = T_d Φ̃` for a degenerate stage `k` (1-based); coordinate `k+1` of
/// `Φ̃` is then dropped.
pub fn degenerate_transform(n: usize, k: usize) -> DMatrix<f64> {
    let mut td = DMatrix::zeros(n, n);
    for i in 0..k {
        td[(i, i)] = 1.0;
    }
    td[(k, k - 1)] = -1.0;
    td[(k, k)] = -1.0;
    for i in k + 1..n {
        td[(i, i)] = -1.0;
    }
    td
}

fn drop_index(m: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    m.clone().remove_row(k).remove_column(k)
}

/// `m̄_j` on the full `M+1` coordinates.
fn full_coupling(p: &Prepared, j: usize) -> DVector<f64> {
    let n = p.m + 1;
    let mut v = DVector::zeros(n);
    for i in j..=p.m {
        let sign = if (i - 1) % 2 == 0 { 1.0 } else { -1.0 };
        let a = p.c[i - 1] / (1.0 - p.t[i - 1]);
        v[i - 1] += sign * a;
        v[i] += sign * p.t[i - 1] * a;
    }
    v
}

pub fn build_system(circuit: &BruneCircuit, jp: &JunctionParams) -> Result<QuantizedSystem, QuantError> {
    jp.validate()?;
    let p = prepare(circuit)?;
    let n = p.m + 1;
    let mut cap = DMatrix::zeros(n, n);
    let mut k0 = DMatrix::zeros(n, n);
    cap[(0, 0)] += jp.c_j;
    cap[(n - 1, n - 1)] += jp.c_terminal;
    for j in 0..p.m {
        cap[(j, j)] += p.c_prime[j];
        cap[(j, j + 1)] += p.c_prime[j] * p.t[j];
        cap[(j + 1, j)] += p.c_prime[j] * p.t[j];
        cap[(j + 1, j + 1)] += p.c_prime[j] * p.t[j] * p.t[j];
        if p.regular[j] {
            let y = 1.0 / p.l_prime[j];
            k0[(j, j)] += y;
            k0[(j, j + 1)] += y;
            k0[(j + 1, j)] += y;
            k0[(j + 1, j + 1)] += y;
        }
    }
    let mut sigma = DVector::zeros(n);
    sigma[0] = 1.0;
    let mut couplings: Vec<DVector<f64>> = (1..=p.m).map(|j| full_coupling(&p, j)).collect();
    let mut terminal = DVector::zeros(n);
    terminal[n - 1] = 1.0;
    if let Some(k) = p.degenerate {
        let td = degenerate_transform(n, k);
        cap = drop_index(&(td.transpose() * &cap * &td), k);
        k0 = drop_index(&(td.transpose() * &k0 * &td), k);
        sigma = (td.transpose() * sigma).remove_row(k);
        for v in couplings.iter_mut() {
            *v = (td.transpose() * &*v).remove_row(k);
        }
        terminal = DVector::zeros(n - 1);
        terminal[n - 2] = 1.0;
    }
    couplings.push(terminal);
    if cap.clone().cholesky().is_none() {
        return Err(QuantError::SingularCapacitance);
    }
    let mut params: Vec<SpectralDensity> = (0..p.m)
        .map(|j| SpectralDensity { kind: SpectralKind::MidLadder, r: circuit.stages[j].r, c_tail: p.c[j..].iter().sum() })
        .collect();
    let r_term = if circuit.termination == Termination::Open { f64::INFINITY } else { circuit.r_terminal };
    params.push(SpectralDensity { kind: SpectralKind::Terminal, r: r_term, c_tail: 0.0 });
    Ok(QuantizedSystem {
        cap_matrix: cap,
        stiffness: k0,
        coupling_vectors: couplings,
        resistor_params: params,
        junction_row_signs: sigma,
        degenerate_index: p.degenerate,
        l_j: jp.l_j,
        t: p.t,
        c_prime: p.c_prime,
        l_prime: p.l_prime,
    })
}

/// `m̄_j`, 1-based `j` in `1..=M+1`.
pub fn coupling_vector(sys: &QuantizedSystem, j: usize) -> Result<&DVector<f64>, QuantError> {
    let max = sys.coupling_vectors.len();
    if j == 0 || j > max {
        return Err(QuantError::IndexOutOfRange { j, max });
    }
    Ok(&sys.coupling_vectors[j - 1])
}

/// `½ ΦᵀM₀Φ`.
pub fn potential_energy(sys: &QuantizedSystem, phi: &DVector<f64>) -> f64 {
    0.5 * phi.dot(&(&sys.stiffness * phi))
}

type MpMat = Vec<Vec<Float>>;

fn mp_zeros(prec: u32, r: usize, c: usize) -> MpMat {
    vec![vec![mp::zero(prec); c]; r]
}

fn mp_mul(a: &MpMat, b: &MpMat) -> MpMat {
    let prec = a[0][0].prec();
    let mut out = mp_zeros(prec, a.len(), b[0].len());
    for i in 0..a.len() {
        for k in 0..b.len() {
            if a[i][k].is_zero() {
                continue;
            }
            for j in 0..b[0].len() {
                let t = Float::with_val(prec, &a[i][k] * &b[k][j]);
                out[i][j] += t;
            }
        }
    }
    out
}

fn mp_t(a: &MpMat) -> MpMat {
    (0..a[0].len()).map(|j| a.iter().map(|row| row[j].clone()).collect()).collect()
}

fn mp_to_f64(a: &MpMat, n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| a[i][j].to_f64())
}

/// Intermediate matrices of the step-by-step construction.
#[derive(Debug, Clone)]
pub struct TransformationChain {
    /// Branch-to-capacitor incidence, `(2M+1) × (M+2)`.
    pub f_c: DMatrix<f64>,
    /// Rotation separating the large-eigenvalue sector, `(2M+1)²`.
    pub u: DMatrix<f64>,
    pub system: QuantizedSystem,
}

/// Oracle path: finite mutual-inductance margin `L0`, rotation, truncation
/// and rescaling, all in extended precision. Converges to [`build_system`]
/// as `L0 → 0`.
pub fn build_system_via_transformations(
    circuit: &BruneCircuit,
    jp: &JunctionParams,
    l0: f64,
    prec: u32,
) -> Result<TransformationChain, QuantError> {
    jp.validate()?;
    let p = prepare(circuit)?;
    if p.degenerate.is_some() {
        return Err(QuantError::Unsupported("the transformation path needs a non-degenerate circuit".into()));
    }
    let m = p.m;
    let n = 2 * m + 1;
    let nn = m + 1;
    let f = |x: f64| mp::f(prec, x);
    let l1: Vec<f64> = circuit.stages.iter().map(|s| s.l11).collect();
    let l2: Vec<f64> = circuit.stages.iter().map(|s| s.l22).collect();
    let min_prod = l1.iter().zip(&l2).map(|(a, b)| a * b).fold(f64::INFINITY, f64::min);
    if !(l0 > 0.0) || l0 * l0 >= 1e-2 * min_prod {
        return Err(QuantError::Conditioning(format!(
            "L0 = {l0} does not separate the eigen-sectors (need 0 < L0² < 1e-2·min L1·L2)"
        )));
    }

    let mut fc = mp_zeros(prec, n, m + 2);
    for c in 0..m + 2 {
        fc[0][c] = f(1.0);
    }
    for j in 1..=m {
        for c in j + 1..m + 2 {
            fc[j][c] = f(1.0);
        }
        for c in j..m + 2 {
            fc[m + j][c] = f(1.0);
        }
    }
    let mut cd = mp_zeros(prec, m + 2, m + 2);
    cd[0][0] = f(jp.c_j);
    for j in 0..m {
        cd[j + 1][j + 1] = f(p.c[j]);
    }
    cd[m + 1][m + 1] = f(jp.c_terminal);
    let c0 = mp_mul(&mp_mul(&fc, &cd), &mp_t(&fc));

    let l0sq = f(l0).square();
    let mut m0 = mp_zeros(prec, n, n);
    for j in 0..m {
        let a = f(l1[j]);
        let b = f(l2[j]);
        let mj = (Float::with_val(prec, &a * &b) - &l0sq).sqrt();
        m0[1 + j][1 + j] = Float::with_val(prec, &a / &l0sq);
        m0[1 + m + j][1 + m + j] = Float::with_val(prec, &b / &l0sq);
        let off = Float::with_val(prec, &mj / &l0sq);
        m0[1 + j][1 + m + j] = off.clone();
        m0[1 + m + j][1 + j] = off;
    }

    let mut u = mp_zeros(prec, n, n);
    u[0][0] = f(1.0);
    for j in 0..m {
        let t = (f(l1[j]) / f(l2[j])).sqrt();
        let r = (Float::with_val(prec, 1 + t.clone().square())).sqrt();
        let inv = Float::with_val(prec, 1 / &r);
        let tr = Float::with_val(prec, &t / &r);
        u[1 + j][1 + j] = inv.clone();
        u[1 + j][1 + m + j] = tr.clone();
        u[1 + m + j][1 + j] = -tr;
        u[1 + m + j][1 + m + j] = inv;
    }
    let ut = mp_t(&u);
    let cr = mp_mul(&mp_mul(&ut, &c0), &u);
    let mr = mp_mul(&mp_mul(&ut, &m0), &u);
    let trunc = |a: &MpMat| -> MpMat { a[..nn].iter().map(|row| row[..nn].to_vec()).collect() };
    let (cr, mr) = (trunc(&cr), trunc(&mr));

    let mut tm = mp_zeros(prec, nn, nn);
    tm[0][0] = f(1.0);
    for j in 0..m {
        let t = (f(l1[j]) / f(l2[j])).sqrt();
        let r = (Float::with_val(prec, 1 + t.clone().square())).sqrt();
        let mut c = Float::with_val(prec, &r / (1 - t));
        if j % 2 == 0 {
            c = -c;
        }
        tm[j + 1][j] = c.clone();
        tm[j + 1][j + 1] = c;
    }
    let tt = mp_t(&tm);
    let cap = mp_to_f64(&mp_mul(&mp_mul(&tt, &cr), &tm), nn);
    let k0 = mp_to_f64(&mp_mul(&mp_mul(&tt, &mr), &tm), nn);

    let mut sys = build_system(circuit, jp)?;
    sys.cap_matrix = cap;
    sys.stiffness = k0;
    let fc64 = DMatrix::from_fn(n, m + 2, |i, j| fc[i][j].to_f64());
    let u64 = mp_to_f64(&u, n);
    Ok(TransformationChain { f_c: fc64, u: u64, system: sys })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mode {
    /// rad/ns
    pub omega: f64,
    /// `vᵀ𝒞v = 1`.
    pub vector: DVector<f64>,
}

/// Solves `(M₀ + σσᵀ/L_J) v = ω² 𝒞 v`; modes sorted by ω.
pub fn harmonic_modes(sys: &QuantizedSystem) -> Result<Vec<Mode>, QuantError> {
    if !(sys.l_j > 0.0) {
        return Err(QuantError::InvalidJunction(format!("L_J must be positive (got {})", sys.l_j)));
    }
    let n = sys.cap_matrix.nrows();
    let sigma = &sys.junction_row_signs;
    let a = &sys.stiffness + sigma * sigma.transpose() / sys.l_j;
    // diagonal scaling before the factorization
    let d = DVector::from_fn(n, |i, _| 1.0 / sys.cap_matrix[(i, i)].sqrt());
    if d.iter().any(|x| !x.is_finite()) {
        return Err(QuantError::SingularCapacitance);
    }
    let dm = DMatrix::from_diagonal(&d);
    let cs = &dm * &sys.cap_matrix * &dm;
    let as_ = &dm * a * &dm;
    let chol = cs.cholesky().ok_or(QuantError::SingularCapacitance)?;
    let l = chol.l();
    let linv = l.clone().try_inverse().ok_or(QuantError::SingularCapacitance)?;
    let b = &linv * as_ * linv.transpose();
    let b = (&b + b.transpose()) * 0.5;
    let eig = b.symmetric_eigen();
    let back = &dm * linv.transpose();
    let mut modes: Vec<Mode> = (0..n)
        .map(|i| {
            let lam = eig.eigenvalues[i];
            let omega = if lam >= 0.0 { lam.sqrt() } else { -(-lam).sqrt() };
            let mut v = &back * eig.eigenvectors.column(i);
            let norm = v.dot(&(&sys.cap_matrix * &v)).sqrt();
            v /= norm;
            // deterministic sign: largest component positive
            let imax = v.iamax();
            if v[imax] < 0.0 {
                v = -v;
            }
            Mode { omega, vector: v }
        })
        .collect();
    modes.sort_by(|a, b| a.omega.total_cmp(&b.omega));
    Ok(modes)
}

/// Index of the mode with the largest junction-charge overlap `|σᵀ𝒞v|`.
pub fn qubit_mode_by_overlap(sys: &QuantizedSystem, modes: &[Mode]) -> usize {
    let q = &sys.cap_matrix * &sys.junction_row_signs;
    (0..modes.len()).max_by(|&a, &b| q.dot(&modes[a].vector).abs().total_cmp(&q.dot(&modes[b].vector).abs())).unwrap_or(0)
}

/// Index of the mode closest in frequency to `omega` (rad/ns).
pub fn mode_nearest(modes: &[Mode], omega: f64) -> usize {
    (0..modes.len()).min_by(|&a, &b| (modes[a].omega - omega).abs().total_cmp(&(modes[b].omega - omega).abs())).unwrap_or(0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateOptions {
    /// K; 0 gives coth → 1.
    pub temperature: f64,
    /// Evaluate negative resistors with the same formulas (diagnostic only).
    pub allow_negative: bool,
}

impl Default for RateOptions {
    fn default() -> Self {
        RateOptions { temperature: 0.0, allow_negative: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    pub omega_qb: f64,
    pub mode_index: usize,
    /// 1/ns, resistors `1..=M+1`.
    pub per_resistor: Vec<f64>,
    pub total: f64,
}

/// `Γ_j = 4 |m̄_j·v|² (1/2ω) J_j(ω) coth(ħω/2k_BT)` with `v` 𝒞-normalized.
pub fn relaxation_rates(
    sys: &QuantizedSystem,
    modes: &[Mode],
    qubit_mode_index: usize,
    opts: &RateOptions,
    jp: &JunctionParams,
) -> Result<RateReport, QuantError> {
    let mode = modes.get(qubit_mode_index).ok_or(QuantError::IndexOutOfRange { j: qubit_mode_index, max: modes.len() })?;
    let w = mode.omega;
    if !(w > 0.0) {
        return Err(QuantError::InvalidMode(w));
    }
    let thermal = if opts.temperature > 0.0 {
        let x = jp.hbar * w * 1e9 / (2.0 * jp.k_b * opts.temperature);
        1.0 / x.tanh()
    } else {
        1.0
    };
    let mut rates = Vec::with_capacity(sys.resistor_params.len());
    for (i, (sd, m)) in sys.resistor_params.iter().zip(&sys.coupling_vectors).enumerate() {
        let rate = if sd.r.is_infinite() && sd.kind == SpectralKind::Terminal {
            0.0
        } else if sd.r == 0.0 && sd.kind == SpectralKind::MidLadder {
            0.0
        } else if sd.r < 0.0 && !opts.allow_negative {
            return Err(QuantError::NegativeResistance { j: i + 1, r: sd.r });
        } else {
            let ov = m.dot(&mode.vector);
            4.0 * ov * ov * density_unchecked(sd, w) / (2.0 * w) * thermal
        };
        rates.push(rate);
    }
    let total = rates.iter().sum();
    Ok(RateReport { omega_qb: w, mode_index: qubit_mode_index, per_resistor: rates, total })
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

/// JSON export: row-major matrices with units.
pub fn system_to_json(sys: &QuantizedSystem) -> serde_json::Value {
    serde_json::json!({
        "cap_matrix": { "unit": "nF", "rows": rows(&sys.cap_matrix) },
        "stiffness": { "unit": "1/nH", "rows": rows(&sys.stiffness) },
        "coupling_vectors": sys.coupling_vectors.iter().map(|v| v.iter().copied().collect::<Vec<_>>()).collect::<Vec<_>>(),
        "resistor_params": sys.resistor_params,
        "junction_row_signs": sys.junction_row_signs.iter().copied().collect::<Vec<_>>(),
        "degenerate_index": sys.degenerate_index,
        "L_J": sys.l_j,
        "t": sys.t,
    })
}
