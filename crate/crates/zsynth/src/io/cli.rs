//! Command-line driver. Exit codes: 0 success, 2 invalid input, 3 numerical
//! failure, 64 usage error.

use crate::brune::{self, BruneCircuit, BruneError, SynthesisOptions};
use crate::foster::{self, FosterCircuit};
use crate::io::config::{ConfigError, RunConfig};
use crate::io::model_json::{self, ModelIoError};
use crate::io::provenance::{hash_file, Provenance};
use crate::io::touchstone::{self, TouchstoneError};
use crate::io::{csv, netlist};
use crate::quant::{self, JunctionParams, QuantError, RateOptions};
use crate::ratmodel::{self, PoleResidueModel, RatError, ScanConfig};
use crate::response::{self, Network, ResponseError};
use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use std::f64::consts::TAU;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => EXIT_INVALID,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl From<ModelIoError> for CliError {
    fn from(e: ModelIoError) -> Self {
        CliError::Invalid(e.to_string())
    }
}
impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Invalid(e.to_string())
    }
}
impl From<TouchstoneError> for CliError {
    fn from(e: TouchstoneError) -> Self {
        CliError::Invalid(e.to_string())
    }
}
impl From<RatError> for CliError {
    fn from(e: RatError) -> Self {
        CliError::Invalid(e.to_string())
    }
}
impl From<BruneError> for CliError {
    fn from(e: BruneError) -> Self {
        match e {
            BruneError::NotPr(_) => CliError::Invalid(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}
impl From<QuantError> for CliError {
    fn from(e: QuantError) -> Self {
        match e {
            QuantError::InvalidMode(_) | QuantError::Conditioning(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Invalid(e.to_string()),
        }
    }
}
impl From<ResponseError> for CliError {
    fn from(e: ResponseError) -> Self {
        match e {
            ResponseError::AtPole(_) | ResponseError::NoConvergence { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Invalid(format!("{}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(name = "zsynth", version, about = "Impedance synthesis, quantization and qubit-pole analysis")]
struct Cli {
    /// JSON run configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides config and ZSYNTH_OUTPUT_DIR)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Working precision in bits (overrides config and ZSYNTH_PRECISION)
    #[arg(long, global = true)]
    precision: Option<u32>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum NetKind {
    Fit,
    Brune,
    Foster,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Positive-real check of a pole/residue model
    CheckPr { model: PathBuf },
    /// Brune synthesis: circuit JSON, netlist and report
    SynthBrune {
        model: PathBuf,
        /// Compare against a reference circuit JSON
        #[arg(long)]
        compare: Option<PathBuf>,
    },
    /// Lossy-Foster realization
    SynthFoster {
        model: PathBuf,
        #[arg(long, num_args = 2, value_names = ["F_LO", "F_HI"])]
        band: Option<Vec<f64>>,
        #[arg(long)]
        keep_negative: bool,
    },
    /// Capacitance/stiffness matrices and modes of the junction-shunted ladder
    Quantize {
        input: PathBuf,
        #[arg(long)]
        lj: f64,
        #[arg(long)]
        cj: Option<f64>,
    },
    /// Per-resistor relaxation rates and the classical pole comparison
    T1 {
        input: PathBuf,
        #[arg(long)]
        lj: f64,
        #[arg(long)]
        cj: Option<f64>,
        #[arg(long)]
        temperature: Option<f64>,
        #[arg(long, default_value_t = 6.7)]
        f_guess: f64,
        /// Evaluate negative resistors instead of rejecting them (diagnostic)
        #[arg(long)]
        allow_negative: bool,
    },
    /// Complex pole of the L_J-shunted network
    QubitPole {
        input: PathBuf,
        #[arg(long)]
        lj: f64,
        #[arg(long, default_value_t = 6.7)]
        f_guess: f64,
        /// Network derived from a model input
        #[arg(long, value_enum, default_value_t = NetKind::Fit)]
        network: NetKind,
    },
    /// Qubit pole versus L_J for the fit, Brune and Foster networks
    SweepLj {
        model: PathBuf,
        #[arg(long)]
        from: Option<f64>,
        #[arg(long)]
        to: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
    },
    /// Touchstone S-parameters to port impedance
    S2z {
        touchstone: PathBuf,
        /// 1-based port
        #[arg(long, default_value_t = 1)]
        port: usize,
        /// Port count (default: from the .sNp extension)
        #[arg(long)]
        ports: Option<usize>,
    },
    /// SPICE netlist of a Brune or Foster circuit JSON
    ExportNetlist { circuit: PathBuf },
}

impl Cmd {
    fn name(&self) -> &'static str {
        match self {
            Cmd::CheckPr { .. } => "check-pr",
            Cmd::SynthBrune { .. } => "synth-brune",
            Cmd::SynthFoster { .. } => "synth-foster",
            Cmd::Quantize { .. } => "quantize",
            Cmd::T1 { .. } => "t1",
            Cmd::QubitPole { .. } => "qubit-pole",
            Cmd::SweepLj { .. } => "sweep-lj",
            Cmd::S2z { .. } => "s2z",
            Cmd::ExportNetlist { .. } => "export-netlist",
        }
    }
}

enum Loaded {
    Model(PoleResidueModel),
    Brune(BruneCircuit),
    Foster(FosterCircuit),
}

fn load_any(path: &Path) -> Result<Loaded, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let v: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
    if v.get("poles").is_some() {
        return Ok(Loaded::Model(model_json::model_from_str(&text)?));
    }
    if let Ok(c) = serde_json::from_value::<BruneCircuit>(v.clone()) {
        return Ok(Loaded::Brune(c));
    }
    if let Ok(c) = serde_json::from_value::<FosterCircuit>(v) {
        return Ok(Loaded::Foster(c));
    }
    Ok(Loaded::Brune(model_json::reference_circuit_from_str(&text)?))
}

fn load_model(path: &Path) -> Result<PoleResidueModel, CliError> {
    match load_any(path)? {
        Loaded::Model(m) => Ok(m),
        _ => Err(CliError::Invalid(format!("{}: expected a pole/residue model", path.display()))),
    }
}

fn synth_opts(cfg: &RunConfig) -> SynthesisOptions {
    SynthesisOptions {
        prec: cfg.precision,
        cancel_tol: cfg.cancel_tol,
        pr_tol: cfg.pr_tol,
        ..SynthesisOptions::default()
    }
}

fn brune_of(loaded: Loaded, cfg: &RunConfig) -> Result<(BruneCircuit, Vec<String>), CliError> {
    match loaded {
        Loaded::Brune(c) => Ok((c, vec![])),
        Loaded::Model(m) => {
            let s = brune::synthesize(&m, &synth_opts(cfg))?;
            Ok((s.circuit, s.warnings))
        }
        Loaded::Foster(_) => Err(CliError::Invalid("a Brune circuit or model is required".into())),
    }
}

/// Max relative deviation of `net` from the model over the band, double path.
pub fn round_trip_error(model: &PoleResidueModel, net: Network<'_>, band: [f64; 2], points: usize) -> Result<f64, ResponseError> {
    let mut worst: f64 = 0.0;
    for i in 0..points {
        let f = band[0] + (band[1] - band[0]) * i as f64 / (points - 1).max(1) as f64;
        let s = Complex64::new(0.0, TAU * f);
        let z0 = model.evaluate(s)?;
        let z1 = net.impedance(s)?;
        worst = worst.max((z1 - z0).norm() / z0.norm());
    }
    Ok(worst)
}

struct Ctx<'a> {
    cfg: RunConfig,
    prov: Provenance,
    stdout: &'a mut dyn Write,
}

impl Ctx<'_> {
    fn input(&mut self, path: &Path) -> Result<(), CliError> {
        self.prov.inputs.push(hash_file(path).map_err(|e| io_err(path, e))?);
        Ok(())
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let dir = &self.cfg.output_dir;
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        let path = dir.join(name);
        std::fs::write(&path, contents).map_err(|e| io_err(&path, e))?;
        self.prov.outputs.push(name.to_string());
        Ok(())
    }

    fn report(&mut self, name: &str, value: &serde_json::Value) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(value).expect("serializable") + "\n";
        self.write(name, &text)?;
        let _ = self.stdout.write_all(text.as_bytes());
        Ok(())
    }
}

fn json<T: serde::Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("serializable")
}

fn execute(cmd: &Cmd, ctx: &mut Ctx<'_>) -> Result<(), CliError> {
    match cmd {
        Cmd::CheckPr { model } => {
            ctx.input(model)?;
            let m = load_model(model)?;
            let rep = ratmodel::check_pr(&m, &ScanConfig::default())?;
            ctx.report("pr_report.json", &json(&rep))
        }
        Cmd::SynthBrune { model, compare } => {
            ctx.input(model)?;
            let m = load_model(model)?;
            let syn = brune::synthesize(&m, &synth_opts(&ctx.cfg))?;
            let err = round_trip_error(&m, Network::Brune(&syn.circuit), ctx.cfg.band, 1000)?;
            let mut rep = serde_json::json!({
                "stages": syn.circuit.stages.len(),
                "degenerate_stages": syn.circuit.degenerate_indices(),
                "r_terminal": syn.circuit.r_terminal,
                "degrees": syn.log.degrees,
                "warnings": syn.warnings,
                "round_trip_max_rel_error_double": err,
            });
            if let Some(path) = compare {
                ctx.input(path)?;
                let reference = model_json::load_circuit(path)?;
                rep["comparison"] = compare_circuits(&syn.circuit, &reference);
            }
            ctx.write("brune_circuit.json", &(serde_json::to_string_pretty(&syn.circuit).expect("serializable") + "\n"))?;
            ctx.write("brune.cir", &netlist::brune_netlist(&syn.circuit))?;
            ctx.report("synth_brune_report.json", &rep)
        }
        Cmd::SynthFoster { model, band, keep_negative } => {
            ctx.input(model)?;
            let m = load_model(model)?;
            let mut fc = ctx.cfg.foster;
            if let Some(b) = band {
                fc.band_ghz = (b[0], b[1]);
            }
            fc.keep_negative_residues |= *keep_negative;
            let f = foster::build_foster(&m, &fc);
            ctx.write("foster.cir", &netlist::foster_netlist(&f))?;
            ctx.report("foster_circuit.json", &json(&f))
        }
        Cmd::Quantize { input, lj, cj } => {
            ctx.input(input)?;
            let (c, warnings) = brune_of(load_any(input)?, &ctx.cfg)?;
            let jp = JunctionParams::new(*lj, cj.unwrap_or(ctx.cfg.c_j));
            let sys = quant::build_system(&c, &jp)?;
            let modes = quant::harmonic_modes(&sys)?;
            let mut v = quant::system_to_json(&sys);
            v["mode_frequencies_ghz"] = json(&modes.iter().map(|m| m.omega / TAU).collect::<Vec<_>>());
            v["qubit_mode_by_overlap"] = json(&quant::qubit_mode_by_overlap(&sys, &modes));
            v["warnings"] = json(&warnings);
            ctx.report("quantized_system.json", &v)
        }
        Cmd::T1 { input, lj, cj, temperature, f_guess, allow_negative } => {
            ctx.input(input)?;
            let (c, warnings) = brune_of(load_any(input)?, &ctx.cfg)?;
            let mut jp = JunctionParams::new(*lj, cj.unwrap_or(ctx.cfg.c_j));
            jp.temperature = temperature.unwrap_or(ctx.cfg.temperature);
            let opts = RateOptions { temperature: jp.temperature, allow_negative: *allow_negative };
            let search = ctx.cfg.pole_search();
            let (pole, rates, overlap) = t1_analysis(&c, &jp, *f_guess, &opts, &search)?;
            // C_J is a regularizer; report how much the result leans on it
            let sensitivity = [0.0, 2.0 * jp.c_j]
                .iter()
                .filter_map(|&cj| {
                    let jp2 = JunctionParams { c_j: cj, ..jp };
                    t1_analysis(&c, &jp2, *f_guess, &opts, &search)
                        .ok()
                        .map(|(p, r, _)| serde_json::json!({ "c_j": cj, "ratio": r.total / p.xi_qb.abs() }))
                })
                .collect::<Vec<_>>();
            let v = serde_json::json!({
                "c_j": jp.c_j,
                "classical_pole": pole,
                "quantum": rates,
                "qubit_mode_by_overlap": overlap,
                "ratio_total_rate_to_abs_re_s": rates.total / pole.xi_qb.abs(),
                "t1_quantum_ns": 1.0 / rates.total,
                "c_j_sensitivity": sensitivity,
                "warnings": warnings,
            });
            ctx.report("t1_report.json", &v)
        }
        Cmd::QubitPole { input, lj, f_guess, network } => {
            ctx.input(input)?;
            let loaded = load_any(input)?;
            let search = ctx.cfg.pole_search();
            let (pole, label) = match loaded {
                Loaded::Brune(c) => (response::find_qubit_pole(Network::Brune(&c), *lj, *f_guess, &search)?, "brune"),
                Loaded::Foster(f) => (response::find_qubit_pole(Network::Foster(&f), *lj, *f_guess, &search)?, "foster"),
                Loaded::Model(m) => match network {
                    NetKind::Fit => (response::find_qubit_pole(Network::Model(&m), *lj, *f_guess, &search)?, "fit"),
                    NetKind::Brune => {
                        let c = brune::synthesize(&m, &synth_opts(&ctx.cfg))?.circuit;
                        (response::find_qubit_pole(Network::Brune(&c), *lj, *f_guess, &search)?, "brune")
                    }
                    NetKind::Foster => {
                        let f = foster::build_foster(&m, &ctx.cfg.foster);
                        (response::find_qubit_pole(Network::Foster(&f), *lj, *f_guess, &search)?, "foster")
                    }
                },
            };
            ctx.report("qubit_pole.json", &serde_json::json!({ "network": label, "L_J": lj, "pole": pole }))
        }
        Cmd::SweepLj { model, from, to, points } => {
            ctx.input(model)?;
            let m = load_model(model)?;
            let mut sw = ctx.cfg.lj_sweep.clone();
            sw.start = from.unwrap_or(sw.start);
            sw.stop = to.unwrap_or(sw.stop);
            sw.points = points.unwrap_or(sw.points);
            let probe = RunConfig { lj_sweep: sw.clone(), ..ctx.cfg.clone() };
            probe.validate()?;
            let lj = sw.values();
            let brune_c = brune::synthesize(&m, &synth_opts(&ctx.cfg))?.circuit;
            let foster_c = foster::build_foster(&m, &ctx.cfg.foster);
            let search = ctx.cfg.pole_search();
            let mut text = format!("{}\n", csv::SWEEP_HEADER);
            let mut flagged = 0;
            for net in [Network::Model(&m), Network::Brune(&brune_c), Network::Foster(&foster_c)] {
                let rows = response::sweep_lj(net, &lj, &ctx.cfg.sweep, &search)?;
                flagged += rows.iter().filter(|r| r.flagged).count();
                text.push_str(&csv::sweep_rows(net.label(), &rows));
            }
            ctx.write("sweep_lj.csv", &text)?;
            let _ = ctx.stdout.write_all(text.as_bytes());
            if flagged > 0 {
                eprintln!("warning: {flagged} sweep rows flagged (branch jump or failed solve)");
            }
            Ok(())
        }
        Cmd::S2z { touchstone: path, port, ports } => {
            ctx.input(path)?;
            let n = match ports {
                Some(n) => *n,
                None => ports_from_extension(path)?,
            };
            let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
            let ts = touchstone::parse(&text, n)?;
            if *port == 0 {
                return Err(CliError::Invalid("ports are numbered from 1".into()));
            }
            let z = touchstone::s_to_z(&ts, port - 1)?;
            let table = csv::impedance_table(&z);
            ctx.write("s2z.csv", &table)?;
            let _ = ctx.stdout.write_all(table.as_bytes());
            Ok(())
        }
        Cmd::ExportNetlist { circuit } => {
            ctx.input(circuit)?;
            let text = match load_any(circuit)? {
                Loaded::Brune(c) => netlist::brune_netlist(&c),
                Loaded::Foster(f) => netlist::foster_netlist(&f),
                Loaded::Model(_) => return Err(CliError::Invalid("export-netlist needs a circuit, not a model".into())),
            };
            ctx.write("circuit.cir", &text)?;
            let _ = ctx.stdout.write_all(text.as_bytes());
            Ok(())
        }
    }
}

/// Classical pole (with `C_J` in the shunt) and harmonic rates of the mode
/// nearest to it; also returns the overlap-selected mode index.
pub fn t1_analysis(
    c: &BruneCircuit,
    jp: &JunctionParams,
    f_guess: f64,
    opts: &RateOptions,
    search: &response::PoleSearch,
) -> Result<(response::QubitPole, quant::RateReport, usize), CliError> {
    let s0 = Complex64::new(0.0, TAU * f_guess);
    let pole = response::find_pole_shunted(Network::Brune(c), jp.l_j, jp.c_j, s0, search)?;
    let sys = quant::build_system(c, jp)?;
    let modes = quant::harmonic_modes(&sys)?;
    let nearest = quant::mode_nearest(&modes, pole.omega_qb.abs());
    let overlap = quant::qubit_mode_by_overlap(&sys, &modes);
    let rates = quant::relaxation_rates(&sys, &modes, nearest, opts, jp)?;
    Ok((pole, rates, overlap))
}

fn ports_from_extension(path: &Path) -> Result<usize, CliError> {
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
    ext.strip_prefix('s')
        .and_then(|r| r.strip_suffix('p'))
        .and_then(|n| n.parse().ok())
        .ok_or_else(|| CliError::Invalid(format!("{}: cannot infer port count; pass --ports", path.display())))
}

/// Per-element relative differences against a reference circuit.
pub fn compare_circuits(got: &BruneCircuit, reference: &BruneCircuit) -> serde_json::Value {
    let rel = |a: f64, b: f64| if b == 0.0 { (a - b).abs() } else { ((a - b) / b).abs() };
    let stages: Vec<_> = got
        .stages
        .iter()
        .zip(&reference.stages)
        .enumerate()
        .map(|(i, (g, r))| {
            serde_json::json!({
                "stage": i + 1,
                "degenerate": [g.degenerate, r.degenerate],
                "rel_r": rel(g.r, r.r),
                "rel_c": rel(g.c, r.c),
                "rel_l11": rel(g.l11, r.l11),
                "rel_l22": rel(g.l22, r.l22),
            })
        })
        .collect();
    serde_json::json!({
        "stage_count": [got.stages.len(), reference.stages.len()],
        "stages": stages,
        "rel_r_terminal": rel(got.r_terminal, reference.r_terminal),
    })
}

/// Runs the CLI on `args` (including the program name).
pub fn run(args: &[String], stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = stdout.write_all(text.as_bytes());
                    EXIT_OK
                }
                _ => {
                    let _ = stderr.write_all(text.as_bytes());
                    EXIT_USAGE
                }
            };
        }
    };
    let result = (|| -> Result<i32, CliError> {
        let mut cfg = match &cli.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        cfg.apply_env(|k| std::env::var(k).ok())?;
        if let Some(o) = &cli.out {
            cfg.output_dir = o.clone();
        }
        if let Some(p) = cli.precision {
            cfg.precision = p;
        }
        cfg.validate()?;
        let mut prov = Provenance::new(cli.cmd.name(), &args[1..], &cfg);
        if let Some(p) = &cli.config {
            prov.inputs.push(hash_file(p).map_err(|e| io_err(p, e))?);
        }
        let mut ctx = Ctx { cfg, prov, stdout };
        execute(&cli.cmd, &mut ctx)?;
        let prov_text = serde_json::to_string_pretty(&ctx.prov).expect("serializable") + "\n";
        let dir = ctx.cfg.output_dir.clone();
        std::fs::write(dir.join("provenance.json"), prov_text).map_err(|e| io_err(&dir, e))?;
        Ok(EXIT_OK)
    })();
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
