mod manifest;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use uwcqpe::costmodel::{self, CostConfig};
use uwcqpe::integrals::{format_fcidump, read_fcidump, ElectronIntegrals};
use uwcqpe::pauli_lcu::{extract_coefficients, jw_matrix, CoefficientTable};
use uwcqpe::rpesim::{self, CircuitBackend, RpeConfig, RpeRun, SignalBackend, SpectralSignal};
use uwcqpe::smm::{self, SettingChoice, SmmCalibration, SmmConfig};
use uwcqpe::uwc::{self, GradientMode, Objective, UwcConfig, UwcHistory};
use uwcqpe::Error;

use manifest::Recorder;

const CALIBRATION_ENV: &str = "UWCQPE_CALIBRATION_DIR";
const CALIBRATION_FILE: &str = "smm_calibration.csv";

#[derive(Parser)]
#[command(name = "uwcqpe", version, about = "Partially randomized phase-estimation cost pipeline")]
struct Cli {
    /// Worker threads for internal parallelism (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the Pauli coefficient table and its statistics.
    Ingest(IngestArgs),
    /// Run weight concentration and write the transformed Hamiltonian.
    Optimize(OptimizeArgs),
    /// Gate counts and physical resources under the SMM architecture.
    Estimate(EstimateArgs),
    /// Simulate robust phase estimation on a small Hamiltonian.
    RpeSim(RpeSimArgs),
    /// Re-run the command recorded in a manifest and compare output digests.
    Replay(ReplayArgs),
}

#[derive(Args, Serialize)]
struct CostArgs {
    /// Target energy precision in Hartree.
    #[arg(long, default_value_t = 1.6e-3)]
    epsilon: f64,
    /// RPE infidelity parameter.
    #[arg(long, default_value_t = 0.01)]
    xi: f64,
    /// Lower bound on the ground-state overlap.
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
    /// Hoeffding confidence exponent for the per-round shot counts.
    #[arg(long, default_value_t = 10.0)]
    alpha: f64,
}

impl CostArgs {
    fn config(&self) -> CostConfig {
        CostConfig { epsilon: self.epsilon, xi: self.xi, eta: self.eta, alpha_hoeffding: self.alpha, ..Default::default() }
    }
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum ObjectiveArg {
    Uwc,
    L1,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum GradientArg {
    Fd,
    Analytic,
}

#[derive(Args, Serialize)]
struct UwcArgs {
    #[arg(long, value_enum, default_value_t = ObjectiveArg::Uwc)]
    objective: ObjectiveArg,
    #[arg(long, default_value_t = 1e-4)]
    epsilon_soft: f64,
    #[arg(long, default_value_t = 1e-3)]
    delta_th: f64,
    #[arg(long, default_value_t = 10)]
    max_iters: usize,
    #[arg(long, value_enum, default_value_t = GradientArg::Fd)]
    gradient: GradientArg,
    /// Include the spin-resolved shift block (output becomes spin-resolved).
    #[arg(long)]
    spin_bliss: bool,
    /// Skip the Cholesky-basis initial guess.
    #[arg(long)]
    no_cholesky_init: bool,
}

impl UwcArgs {
    fn config(&self, objective: ObjectiveArg) -> UwcConfig {
        UwcConfig {
            epsilon_soft: self.epsilon_soft,
            delta_th: self.delta_th,
            n_iter_max: self.max_iters,
            objective: match objective {
                ObjectiveArg::Uwc => Objective::SoftGateCost,
                ObjectiveArg::L1 => Objective::L1Norm,
            },
            gradient_mode: match self.gradient {
                GradientArg::Fd => GradientMode::FiniteDifference,
                GradientArg::Analytic => GradientMode::Analytic,
            },
            spin_bliss: self.spin_bliss,
            cholesky_init: !self.no_cholesky_init,
            ..Default::default()
        }
    }
}

#[derive(Args)]
struct IngestArgs {
    /// FCIDUMP file.
    input: PathBuf,
    #[arg(long, default_value = "uwcqpe-out")]
    out: PathBuf,
    /// Drop the smallest terms whose cumulative weight stays below this.
    #[arg(long)]
    truncate: Option<f64>,
    /// Number of largest coefficients listed in the statistics.
    #[arg(long, default_value_t = 20)]
    top_k: usize,
}

#[derive(Args)]
struct OptimizeArgs {
    input: PathBuf,
    #[arg(long, default_value = "uwcqpe-out")]
    out: PathBuf,
    #[command(flatten)]
    cost: CostArgs,
    #[command(flatten)]
    uwc: UwcArgs,
    /// Also run the other objective and write a comparison.
    #[arg(long)]
    compare: bool,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum SettingArg {
    Accuracy,
    Speed,
    Auto,
}

#[derive(Args)]
struct EstimateArgs {
    /// FCIDUMP file or coefficient-table CSV.
    input: PathBuf,
    #[arg(long, default_value = "uwcqpe-out")]
    out: PathBuf,
    #[command(flatten)]
    cost: CostArgs,
    /// Physical error rate.
    #[arg(long, default_value_t = 1e-3)]
    p_ph: f64,
    /// Physical-qubit budget across all QPUs.
    #[arg(long, default_value_t = 500_000)]
    budget: u64,
    /// Calibration CSV (default: $UWCQPE_CALIBRATION_DIR/smm_calibration.csv, then the bundled synthetic curves).
    #[arg(long)]
    calibration: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = SettingArg::Auto)]
    setting: SettingArg,
    /// Clamp angles outside the calibrated range to its endpoints.
    #[arg(long)]
    clamp_calibration: bool,
    #[arg(long, default_value_t = 1.0)]
    cycle_time_us: f64,
    /// Multiplier on the summed per-shot runtimes.
    #[arg(long, default_value_t = std::f64::consts::E)]
    repetition_factor: f64,
    /// Largest code distance searched.
    #[arg(long, default_value_t = 51)]
    d_max: u32,
    /// Also emit the Trotter / partial-random / partial-random+UWC gate-count comparison.
    #[arg(long)]
    baseline: bool,
    #[command(flatten)]
    uwc: UwcArgs,
}

#[derive(Clone, Copy, ValueEnum, Serialize, PartialEq)]
#[serde(rename_all = "snake_case")]
enum ModeArg {
    Exact,
    Sampled,
    Circuit,
}

#[derive(Args)]
struct RpeSimArgs {
    input: PathBuf,
    #[arg(long, default_value = "uwcqpe-out")]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = ModeArg::Sampled)]
    mode: ModeArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    trials: u64,
    /// Ground-state weight p0 of the initial state.
    #[arg(long, default_value_t = 0.95)]
    overlap: f64,
    #[arg(long, default_value_t = 0.1)]
    xi: f64,
    #[arg(long, default_value_t = 0.95)]
    eta: f64,
    #[arg(long, default_value_t = 10.0)]
    alpha: f64,
    /// Final round index M.
    #[arg(long, default_value_t = 6)]
    rounds: u32,
    /// Trotter step for circuit mode (default keeps every phase inside (−π, π)).
    #[arg(long)]
    delta: Option<f64>,
}

#[derive(Args)]
struct ReplayArgs {
    manifest: PathBuf,
    /// Output directory for the re-run (default: `replay/` next to the manifest).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Lib(Error),
    Statistical(String),
    Child(u8),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Lib(Error::Io(e))
    }
}

type CliResult = Result<(), Failure>;

fn exit_code(f: &Failure) -> u8 {
    match f {
        Failure::Lib(Error::Infeasible(_)) => 3,
        Failure::Lib(Error::RoundFailure { .. }) | Failure::Statistical(_) => 4,
        Failure::Lib(_) => 2,
        Failure::Child(code) => *code,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("uwcqpe: cannot configure {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    let argv: Vec<String> = std::env::args().collect();
    let result = match &cli.command {
        Command::Ingest(a) => ingest(a, &argv),
        Command::Optimize(a) => optimize(a, &argv),
        Command::Estimate(a) => estimate(a, &argv),
        Command::RpeSim(a) => rpe_sim(a, &argv),
        Command::Replay(a) => replay(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Lib(e) => eprintln!("uwcqpe: {e}"),
                Failure::Statistical(msg) => eprintln!("uwcqpe: statistical check failed: {msg}"),
                Failure::Child(code) => eprintln!("uwcqpe: replayed command exited with status {code}"),
            }
            ExitCode::from(exit_code(&f))
        }
    }
}

fn stage<T>(label: &str, r: uwcqpe::Result<T>) -> uwcqpe::Result<T> {
    r.map_err(|e| match e {
        Error::Infeasible(m) => Error::Infeasible(format!("{label}: {m}")),
        Error::Config(m) => Error::Config(format!("{label}: {m}")),
        Error::Domain(m) => Error::Domain(format!("{label}: {m}")),
        Error::Calibration(m) => Error::Calibration(format!("{label}: {m}")),
        other => other,
    })
}

fn print_json<T: Serialize>(v: &T) {
    use std::io::Write;
    // A closed pipe (e.g. `| head`) is not an error for the run itself.
    let _ = writeln!(std::io::stdout(), "{}", serde_json::to_string_pretty(v).expect("serializable"));
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn load_table(path: &Path) -> uwcqpe::Result<(CoefficientTable, Option<ElectronIntegrals>)> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
        Ok((CoefficientTable::from_csv(&text)?, None))
    } else {
        let x = read_fcidump(path)?;
        Ok((extract_coefficients(&x), Some(x)))
    }
}

fn distribution_csv(columns: &[(&str, Vec<f64>)]) -> String {
    let mut s = String::from("rank");
    for (name, _) in columns {
        write!(s, ",{name}").unwrap();
    }
    s.push('\n');
    let rows = columns.iter().map(|(_, v)| v.len()).max().unwrap_or(0);
    for i in 0..rows {
        write!(s, "{}", i + 1).unwrap();
        for (_, v) in columns {
            match v.get(i) {
                Some(x) => write!(s, ",{x:e}").unwrap(),
                None => s.push(','),
            }
        }
        s.push('\n');
    }
    s
}

#[derive(Serialize)]
struct TableStats {
    #[serde(rename = "L")]
    n_terms: usize,
    lambda: f64,
    constant: f64,
    n_qubits: usize,
    top_coefficients: Vec<TopTerm>,
}

#[derive(Serialize)]
struct TopTerm {
    pauli: String,
    coefficient: f64,
}

fn table_stats(t: &CoefficientTable, top_k: usize) -> TableStats {
    TableStats {
        n_terms: t.len(),
        lambda: t.l1_norm(),
        constant: t.constant(),
        n_qubits: t.n_qubits(),
        top_coefficients: t
            .terms()
            .iter()
            .take(top_k)
            .map(|p| TopTerm { pauli: p.pauli.label(t.n_qubits()), coefficient: p.coefficient })
            .collect(),
    }
}

fn ingest(a: &IngestArgs, argv: &[String]) -> CliResult {
    let mut rec = Recorder::new("ingest", argv, &a.out)?;
    rec.input(&a.input)?;
    let (table, _) = stage("ingest", load_table(&a.input))?;
    let mut table = table.prepare_sorted();
    if let Some(t) = a.truncate {
        table = stage("truncate", table.truncate_tail(t))?;
    }
    let stats = table_stats(&table, a.top_k);
    rec.write("table.csv", &table.to_csv())?;
    rec.write("stats.json", &to_json(&stats))?;
    rec.write("distribution.csv", &distribution_csv(&[("magnitude", table.magnitudes())]))?;
    rec.finish(json!({ "input": a.input, "truncate": a.truncate, "top_k": a.top_k }))?;
    print_json(&stats);
    Ok(())
}

#[derive(Serialize)]
struct OptimizeSummary {
    objective: Objective,
    initial_lambda: f64,
    final_lambda: f64,
    #[serde(rename = "initial_G_M")]
    initial_g_m: u64,
    #[serde(rename = "final_G_M")]
    final_g_m: u64,
    iterations: usize,
    termination: uwc::Termination,
    spin_resolved_output: bool,
}

fn summary(h: &UwcHistory, y: &ElectronIntegrals) -> OptimizeSummary {
    OptimizeSummary {
        objective: h.objective,
        initial_lambda: h.input_lambda,
        final_lambda: h.final_lambda,
        initial_g_m: h.initial_g_m,
        final_g_m: h.final_g_m,
        iterations: h.iterations.len(),
        termination: h.termination,
        spin_resolved_output: !y.is_restricted(),
    }
}

fn optimize(a: &OptimizeArgs, argv: &[String]) -> CliResult {
    let mut rec = Recorder::new("optimize", argv, &a.out)?;
    rec.input(&a.input)?;
    let x = read_fcidump(&a.input)?;
    let cost = a.cost.config();
    let cfg = a.uwc.config(a.uwc.objective);
    let (y, hist) = stage("optimize", uwc::uwc_optimize(&x, &cost, &cfg))?;
    let before = extract_coefficients(&x).prepare_sorted();
    let after = extract_coefficients(&y).prepare_sorted();
    if y.is_restricted() {
        rec.write("optimized.fcidump", &format_fcidump(&y)?)?;
    }
    rec.write("optimized_table.csv", &after.to_csv())?;
    rec.write("history.jsonl", &hist.to_json_lines())?;
    rec.write("distribution.csv", &distribution_csv(&[("before", before.magnitudes()), ("after", after.magnitudes())]))?;
    let s = summary(&hist, &y);
    rec.write("summary.json", &to_json(&s))?;
    let mut out = json!({ "summary": s });
    if a.compare {
        let other = match a.uwc.objective {
            ObjectiveArg::Uwc => ObjectiveArg::L1,
            ObjectiveArg::L1 => ObjectiveArg::Uwc,
        };
        let (y2, h2) = stage("optimize (comparison)", uwc::uwc_optimize(&x, &cost, &a.uwc.config(other)))?;
        let (uwc_h, l1_h) = match a.uwc.objective {
            ObjectiveArg::Uwc => (&hist, &h2),
            ObjectiveArg::L1 => (&h2, &hist),
        };
        rec.write(&format!("history_{}.jsonl", objective_tag(other)), &h2.to_json_lines())?;
        let cmp = json!({
            "uwc": summary(uwc_h, if matches!(a.uwc.objective, ObjectiveArg::Uwc) { &y } else { &y2 }),
            "l1": summary(l1_h, if matches!(a.uwc.objective, ObjectiveArg::L1) { &y } else { &y2 }),
            "lambda_ratio": uwc_h.final_lambda / l1_h.final_lambda,
            "G_M_ratio": uwc_h.final_g_m as f64 / l1_h.final_g_m as f64,
        });
        rec.write("comparison.json", &to_json(&cmp))?;
        out["comparison"] = cmp;
    }
    rec.finish(json!({ "input": a.input, "cost": a.cost, "uwc": a.uwc, "compare": a.compare }))?;
    print_json(&out);
    Ok(())
}

fn objective_tag(o: ObjectiveArg) -> &'static str {
    match o {
        ObjectiveArg::Uwc => "uwc",
        ObjectiveArg::L1 => "l1",
    }
}

fn resolve_calibration(explicit: Option<&Path>) -> uwcqpe::Result<(SmmCalibration, Option<PathBuf>)> {
    if let Some(p) = explicit {
        return Ok((SmmCalibration::from_path(p)?, Some(p.to_path_buf())));
    }
    if let Some(dir) = std::env::var_os(CALIBRATION_ENV) {
        let p = PathBuf::from(dir).join(CALIBRATION_FILE);
        if p.exists() {
            return Ok((SmmCalibration::from_path(&p)?, Some(p)));
        }
        eprintln!("uwcqpe: {} not found, using bundled synthetic calibration", p.display());
    }
    Ok((SmmCalibration::synthetic_default(), None))
}

fn estimate(a: &EstimateArgs, argv: &[String]) -> CliResult {
    let mut rec = Recorder::new("estimate", argv, &a.out)?;
    rec.input(&a.input)?;
    let (table, integrals) = stage("ingest", load_table(&a.input))?;
    let cost = a.cost.config();
    let (cal, cal_path) = stage("calibration", resolve_calibration(a.calibration.as_deref()))?;
    if let Some(p) = &cal_path {
        rec.input(p)?;
    }
    if a.clamp_calibration {
        eprintln!("uwcqpe: calibration clamping enabled; out-of-range angles use endpoint values");
    }
    let smm_cfg = SmmConfig {
        p_ph: a.p_ph,
        q_budget: a.budget,
        setting: match a.setting {
            SettingArg::Accuracy => SettingChoice::Accuracy,
            SettingArg::Speed => SettingChoice::Speed,
            SettingArg::Auto => SettingChoice::Auto,
        },
        clamp_calibration: a.clamp_calibration,
        cycle_time_us: a.cycle_time_us,
        repetition_factor: a.repetition_factor,
        d_max: a.d_max,
    };
    let breakdown = stage("cost", costmodel::total_cost(&table, &cost))?;
    rec.write("cost.json", &to_json(&breakdown))?;
    let report = stage("estimate", smm::estimate(&table, &cost, &cal, &smm_cfg))?;
    rec.write("report.json", &to_json(&report))?;
    rec.write("report_table.csv", &format!("{}\n{}\n", smm::ResourceReport::table_header(), report.table_row()))?;
    let mut config = json!({
        "input": a.input,
        "epsilon": cost.epsilon,
        "xi": cost.xi,
        "eta": cost.eta,
        "alpha": cost.alpha_hoeffding,
        "p_ph": a.p_ph,
        "budget": a.budget,
        "setting": a.setting,
        "clamp_calibration": a.clamp_calibration,
        "cycle_time_us": a.cycle_time_us,
        "repetition_factor": a.repetition_factor,
        "d_max": a.d_max,
        "calibration": cal.provenance,
    });
    if a.baseline {
        let x = integrals.ok_or_else(|| Error::Config("--baseline needs FCIDUMP input".into()))?;
        let (y, _) = stage("optimize", uwc::uwc_optimize(&x, &cost, &a.uwc.config(a.uwc.objective)))?;
        let opt = stage("cost", costmodel::total_cost(&extract_coefficients(&y), &cost))?;
        let cmp = json!({
            "trotter_G_total": breakdown.baseline_g_total,
            "partial_random_G_total": breakdown.g_total,
            "partial_random_uwc_G_total": opt.g_total,
        });
        rec.write("comparison.json", &to_json(&cmp))?;
        config["uwc"] = json!(a.uwc);
    }
    rec.finish(config)?;
    print_json(&report);
    Ok(())
}

#[derive(Serialize)]
struct RpeAggregate {
    mode: ModeArg,
    trials: u64,
    reference_energy: f64,
    reference_phase: f64,
    rmse_phase: f64,
    rmse_energy: f64,
    bound_phase: f64,
    rho: f64,
    pass: bool,
}

fn rpe_sim(a: &RpeSimArgs, argv: &[String]) -> CliResult {
    let mut rec = Recorder::new("rpe-sim", argv, &a.out)?;
    rec.input(&a.input)?;
    let x = read_fcidump(&a.input)?;
    let table = extract_coefficients(&x).prepare_sorted();
    let limit = if a.mode == ModeArg::Circuit { rpesim::MAX_CIRCUIT_QUBITS } else { rpesim::MAX_SPECTRAL_QUBITS };
    if table.n_qubits() > limit {
        return Err(Error::Domain(format!("{} qubits exceeds the {limit}-qubit simulator limit", table.n_qubits())).into());
    }
    let h = jw_matrix(&table)?;
    let sector = rpesim::sector_basis(x.n_orbitals, x.n_alpha, x.n_beta);
    let psi = stage("state", rpesim::mixed_eigenstate(&h, &sector, a.overlap))?;
    let sub = nalgebra::DMatrix::from_fn(sector.len(), sector.len(), |i, j| h[(sector[i], sector[j])]);
    let e0 = sub.symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);

    let backend = match a.mode {
        ModeArg::Exact => SignalBackend::Exact(SpectralSignal::from_matrix_auto(&h, &psi, rpesim::DEFAULT_MARGIN)?),
        ModeArg::Sampled => SignalBackend::SampledExact(SpectralSignal::from_matrix_auto(&h, &psi, rpesim::DEFAULT_MARGIN)?),
        ModeArg::Circuit => {
            let cost = CostConfig { xi: a.xi, eta: a.eta, alpha_hoeffding: a.alpha, ..Default::default() };
            let delta = match a.delta {
                Some(d) => d,
                None => {
                    let plan = stage("cost", costmodel::plan(table.l1_norm(), &cost))?;
                    plan.step.delta.min(0.9 * std::f64::consts::PI / table.l1_norm())
                }
            };
            SignalBackend::Circuit(CircuitBackend::from_cost_model(&table, psi, delta, a.rounds, &cost)?)
        }
    };
    let map = backend.map();
    let ref_phase = map.to_phase(e0);
    let mut trials = String::new();
    let (mut se_phase, mut se_energy) = (0.0, 0.0);
    for k in 0..a.trials {
        let cfg = RpeConfig { xi: a.xi, eta: a.eta, alpha_hoeffding: a.alpha, m_final: a.rounds, seed: a.seed + k };
        let run: RpeRun = stage("rpe", rpesim::rpe_run(&backend, &cfg))?;
        se_phase += rpesim::modular_distance(run.theta_star, ref_phase).powi(2);
        se_energy += (run.energy - e0).powi(2);
        trials.push_str(&serde_json::to_string(&run).expect("serializable"));
        trials.push('\n');
    }
    let n = a.trials.max(1) as f64;
    let rho = (16.0 * std::f64::consts::PI / 3.0).powi(2) / (4f64.powf(a.alpha - 1.0) - 1.0);
    let bound = (1.0 + rho).sqrt() * a.xi * 2f64.powi(-(a.rounds as i32));
    let rmse_phase = (se_phase / n).sqrt();
    let agg = RpeAggregate {
        mode: a.mode,
        trials: a.trials,
        reference_energy: e0,
        reference_phase: ref_phase,
        rmse_phase,
        rmse_energy: (se_energy / n).sqrt(),
        bound_phase: bound,
        rho,
        pass: rmse_phase <= bound,
    };
    rec.write("trials.jsonl", &trials)?;
    rec.write("aggregate.json", &to_json(&agg))?;
    rec.finish(json!({
        "input": a.input,
        "mode": a.mode,
        "seed": a.seed,
        "trials": a.trials,
        "overlap": a.overlap,
        "xi": a.xi,
        "eta": a.eta,
        "alpha": a.alpha,
        "rounds": a.rounds,
        "delta": a.delta,
    }))?;
    print_json(&agg);
    if !agg.pass {
        return Err(Failure::Statistical(format!("RMSE {:e} exceeds bound {:e}", agg.rmse_phase, agg.bound_phase)));
    }
    Ok(())
}

fn replay(a: &ReplayArgs) -> CliResult {
    let text = std::fs::read_to_string(&a.manifest)
        .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", a.manifest.display())))?;
    let m = manifest::Recorded::parse(&text)?;
    if m.argv.len() < 2 || m.argv[1..].iter().any(|a| a == "replay") {
        return Err(Error::Config("manifest does not record a replayable command".into()).into());
    }
    for f in &m.inputs {
        let now = manifest::file_digest(&f.path)?;
        if now != f.sha256 {
            return Err(Error::Config(format!("input {} changed since the manifest was written", f.path.display())).into());
        }
    }
    let out = match &a.out {
        Some(o) => o.clone(),
        None => a.manifest.parent().unwrap_or(Path::new(".")).join("replay"),
    };
    let args = manifest::with_out_dir(&m.argv[1..], &out);
    let exe = std::env::current_exe()?;
    let status = std::process::Command::new(exe).args(&args).stdout(std::process::Stdio::null()).status()?;
    if !status.success() {
        return Err(Failure::Child(status.code().and_then(|c| u8::try_from(c).ok()).unwrap_or(1)));
    }
    let again = manifest::Recorded::parse(&std::fs::read_to_string(out.join("manifest.json"))?)?;
    let files: Vec<_> = m
        .outputs
        .iter()
        .map(|f| {
            let replayed = again.outputs.iter().find(|g| g.path == f.path).map(|g| g.sha256.clone());
            json!({
                "path": f.path,
                "original": f.sha256,
                "identical": replayed.as_deref() == Some(f.sha256.as_str()),
                "replayed": replayed,
            })
        })
        .collect();
    let identical = files.iter().all(|f| f["identical"] == true) && again.outputs.len() == m.outputs.len();
    print_json(&json!({ "manifest": a.manifest, "out": out, "files": files, "identical": identical }));
    if !identical {
        return Err(Failure::Statistical("replayed outputs differ from the manifest".into()));
    }
    Ok(())
}
