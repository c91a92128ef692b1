//! Physical resources on a STAR-magic-mutation style early fault-tolerant
//! architecture: analog rotations with angle-dependent logical error and
//! clock cost, surface-code distance selection, error-mitigation overhead,
//! and parallel QPUs under a qubit budget.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::costmodel::{self, CostConfig, RoundCost, SortedMagnitudes};
use crate::pauli_lcu::CoefficientTable;
use crate::{par, Error, Result};

const DEFAULT_CALIBRATION: &str = include_str!("../data/smm_synthetic.csv");
const CALIBRATION_HEADER: [&str; 5] = ["setting", "p_ph", "theta", "alpha_rus", "c_smm_clocks"];
const MIN_KNOTS: usize = 4;
const P_PH_KEY_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Setting {
    Accuracy,
    Speed,
}

impl Setting {
    pub const ALL: [Setting; 2] = [Setting::Accuracy, Setting::Speed];

    pub fn as_str(self) -> &'static str {
        match self {
            Setting::Accuracy => "accuracy",
            Setting::Speed => "speed",
        }
    }
}

impl std::str::FromStr for Setting {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "accuracy" => Ok(Setting::Accuracy),
            "speed" => Ok(Setting::Speed),
            other => Err(Error::Calibration(format!("unknown setting `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SettingChoice {
    Accuracy,
    Speed,
    #[default]
    Auto,
}

impl SettingChoice {
    fn settings(self) -> Vec<Setting> {
        match self {
            SettingChoice::Accuracy => vec![Setting::Accuracy],
            SettingChoice::Speed => vec![Setting::Speed],
            SettingChoice::Auto => Setting::ALL.to_vec(),
        }
    }
}

/// Shape-preserving piecewise cubic Hermite interpolant (Fritsch–Carlson
/// slopes, three-point endpoints).
#[derive(Clone, Debug)]
pub struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl Pchip {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n < 2 || y.len() != n {
            return Err(Error::Domain("interpolant needs at least two matching samples".into()));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("interpolation knots must be strictly increasing".into()));
        }
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let s: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
        let mut d = vec![0.0; n];
        if n == 2 {
            d.fill(s[0]);
            return Ok(Self { x, y, d });
        }
        for k in 1..n - 1 {
            if s[k - 1] * s[k] > 0.0 {
                let w1 = 2.0 * h[k] + h[k - 1];
                let w2 = h[k] + 2.0 * h[k - 1];
                d[k] = (w1 + w2) / (w1 / s[k - 1] + w2 / s[k]);
            }
        }
        d[0] = end_slope(h[0], h[1], s[0], s[1]);
        d[n - 1] = end_slope(h[n - 2], h[n - 3], s[n - 2], s[n - 3]);
        Ok(Self { x, y, d })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.x[0], self.x[self.x.len() - 1])
    }

    /// Evaluates inside the knot range; callers handle extrapolation.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        let k = self.x.partition_point(|&xk| xk <= t).clamp(1, n - 1) - 1;
        let h = self.x[k + 1] - self.x[k];
        let u = (t - self.x[k]) / h;
        let (u2, u3) = (u * u, u * u * u);
        let h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
        let h10 = u3 - 2.0 * u2 + u;
        let h01 = -2.0 * u3 + 3.0 * u2;
        let h11 = u3 - u2;
        h00 * self.y[k] + h10 * h * self.d[k] + h01 * self.y[k + 1] + h11 * h * self.d[k + 1]
    }
}

fn end_slope(h0: f64, h1: f64, s0: f64, s1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * s0 - h0 * s1) / (h0 + h1);
    if d.signum() != s0.signum() || s0 == 0.0 {
        0.0
    } else if s0.signum() != s1.signum() && d.abs() > 3.0 * s0.abs() {
        3.0 * s0
    } else {
        d
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSample {
    pub theta: f64,
    pub alpha_rus: f64,
    pub c_smm: f64,
}

/// One calibration curve: `α_RUS(θ)` and `C_smm(θ)` interpolated in `log θ`.
#[derive(Clone, Debug)]
pub struct CalibrationCurve {
    pub setting: Setting,
    pub p_ph: f64,
    samples: Vec<CalibrationSample>,
    alpha: Pchip,
    clocks: Pchip,
}

impl CalibrationCurve {
    pub fn new(setting: Setting, p_ph: f64, samples: Vec<CalibrationSample>) -> Result<Self> {
        let tag = format!("{}/{p_ph:e}", setting.as_str());
        if !(p_ph > 0.0) {
            return Err(Error::Calibration(format!("{tag}: p_ph must be positive")));
        }
        if samples.len() < MIN_KNOTS {
            return Err(Error::Calibration(format!("{tag}: {} samples, need at least {MIN_KNOTS}", samples.len())));
        }
        for s in &samples {
            if !(s.theta > 0.0 && s.alpha_rus > 0.0 && s.c_smm > 0.0) || !s.theta.is_finite() {
                return Err(Error::Calibration(format!("{tag}: non-positive sample at theta={:e}", s.theta)));
            }
        }
        if samples.windows(2).any(|w| !(w[1].theta > w[0].theta)) {
            return Err(Error::Calibration(format!("{tag}: theta samples must be strictly increasing")));
        }
        let lx: Vec<f64> = samples.iter().map(|s| s.theta.ln()).collect();
        let alpha = Pchip::new(lx.clone(), samples.iter().map(|s| s.alpha_rus).collect())?;
        let clocks = Pchip::new(lx, samples.iter().map(|s| s.c_smm).collect())?;
        Ok(Self { setting, p_ph, samples, alpha, clocks })
    }

    pub fn samples(&self) -> &[CalibrationSample] {
        &self.samples
    }

    pub fn theta_range(&self) -> (f64, f64) {
        (self.samples[0].theta, self.samples[self.samples.len() - 1].theta)
    }

    /// `(α_RUS, C_smm)` at `|θ|`. Out-of-range angles error unless `clamp`.
    pub fn eval(&self, theta: f64, clamp: bool) -> Result<(f64, f64)> {
        let th = theta.abs();
        let (lo, hi) = self.theta_range();
        let lt = if th < lo || th > hi {
            if !clamp {
                return Err(Error::Calibration(format!(
                    "angle {th:e} outside calibrated range [{lo:e}, {hi:e}] for {}/{:e}",
                    self.setting.as_str(),
                    self.p_ph
                )));
            }
            th.clamp(lo, hi).ln()
        } else {
            th.ln()
        };
        let (a0, a1) = self.alpha.domain();
        let lt = lt.clamp(a0, a1);
        Ok((self.alpha.eval(lt), self.clocks.eval(lt)))
    }
}

#[derive(Clone, Debug)]
pub struct SmmCalibration {
    pub provenance: String,
    curves: Vec<CalibrationCurve>,
}

impl SmmCalibration {
    pub fn new(provenance: impl Into<String>, curves: Vec<CalibrationCurve>) -> Self {
        Self { provenance: provenance.into(), curves }
    }

    /// Labeled synthetic curves bundled with the crate.
    pub fn synthetic_default() -> Self {
        Self::from_csv(DEFAULT_CALIBRATION, "bundled synthetic calibration").expect("bundled calibration parses")
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_csv(&text, path.display().to_string())
    }

    /// Parses `setting,p_ph,theta,alpha_rus,c_smm_clocks` rows; each curve's
    /// rows must be contiguous. Lines starting with `#` are comments.
    pub fn from_csv(text: &str, provenance: impl Into<String>) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes());
        let header = rdr.headers().map_err(|e| Error::Parse { line: 1, msg: e.to_string() })?.clone();
        if header.iter().ne(CALIBRATION_HEADER.iter().copied()) {
            return Err(Error::Parse { line: 1, msg: format!("expected header `{}`", CALIBRATION_HEADER.join(",")) });
        }
        let mut groups: Vec<((Setting, f64), Vec<CalibrationSample>)> = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::Parse { line: e.position().map_or(0, |p| p.line() as usize), msg: e.to_string() })?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            let pe = |msg: String| Error::Parse { line, msg };
            let setting: Setting = rec[0].parse().map_err(|e: Error| pe(e.to_string()))?;
            let num = |i: usize| rec[i].parse::<f64>().map_err(|_| pe(format!("bad {} `{}`", CALIBRATION_HEADER[i], &rec[i])));
            let p_ph = num(1)?;
            let sample = CalibrationSample { theta: num(2)?, alpha_rus: num(3)?, c_smm: num(4)? };
            match groups.last_mut() {
                Some((key, v)) if key.0 == setting && key.1 == p_ph => v.push(sample),
                _ => {
                    if groups.iter().any(|(k, _)| k.0 == setting && k.1 == p_ph) {
                        return Err(pe(format!("rows for {}/{p_ph:e} are not contiguous", setting.as_str())));
                    }
                    groups.push(((setting, p_ph), vec![sample]));
                }
            }
        }
        let curves = groups
            .into_iter()
            .map(|((s, p), v)| CalibrationCurve::new(s, p, v))
            .collect::<Result<Vec<_>>>()?;
        if curves.is_empty() {
            return Err(Error::Calibration("no calibration rows".into()));
        }
        Ok(Self::new(provenance, curves))
    }

    pub fn curves(&self) -> &[CalibrationCurve] {
        &self.curves
    }

    pub fn curve(&self, setting: Setting, p_ph: f64) -> Result<&CalibrationCurve> {
        self.curves
            .iter()
            .find(|c| c.setting == setting && (c.p_ph - p_ph).abs() <= P_PH_KEY_TOL * p_ph.abs())
            .ok_or_else(|| Error::Calibration(format!("no {} curve for p_ph={p_ph:e}", setting.as_str())))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngleCount {
    pub theta: f64,
    pub count: u64,
}

/// Fixed angle of the randomized rotations at round `m`.
pub fn random_angle(lambda_r: f64, delta: f64, m: u32) -> f64 {
    (1.0 / (2.0 * lambda_r * delta * 2f64.powi(m as i32))).atan()
}

/// Rotation angles of one round's circuit with multiplicities. Deterministic
/// terms appear `2^m` times each; the randomized part is a single entry.
pub fn rotation_angle_multiset(mags: &SortedMagnitudes, round: &RoundCost, delta: f64) -> Vec<AngleCount> {
    let reps = 1u64 << round.m;
    let mut out: Vec<AngleCount> =
        mags.magnitudes()[..round.l_d].iter().map(|&c| AngleCount { theta: c * delta / 2.0, count: reps }).collect();
    if round.g_rand > 0 {
        out.push(AngleCount { theta: random_angle(round.lambda_r, delta, round.m), count: round.g_rand });
    }
    out
}

pub fn total_count(angles: &[AngleCount]) -> u64 {
    angles.iter().map(|a| a.count).sum()
}

pub fn total_logical_error(angles: &[AngleCount], curve: &CalibrationCurve, p_ph: f64, clamp: bool) -> Result<f64> {
    angles.iter().try_fold(0.0, |acc, a| {
        let (alpha, _) = curve.eval(a.theta, clamp)?;
        Ok(acc + alpha * a.theta.abs() * p_ph * a.count as f64)
    })
}

pub fn total_clocks(angles: &[AngleCount], curve: &CalibrationCurve, clamp: bool) -> Result<f64> {
    angles.iter().try_fold(0.0, |acc, a| {
        let (_, c) = curve.eval(a.theta, clamp)?;
        Ok(acc + c * a.count as f64)
    })
}

/// Probabilistic-error-cancellation sampling overhead `γ²`.
pub fn pec_overhead(p_total: f64) -> f64 {
    (4.0 * p_total).exp()
}

/// Surface-code logical error per cycle.
pub fn clifford_error(p_ph: f64, d: u32) -> Result<f64> {
    if d < 3 || d % 2 == 0 {
        return Err(Error::Domain(format!("code distance must be odd and >= 3, got {d}")));
    }
    if !(p_ph > 0.0 && p_ph <= 0.01) {
        return Err(Error::Domain(format!("physical error rate {p_ph:e} outside (0, 0.01]")));
    }
    Ok(0.1 * (100.0 * p_ph).powf(f64::from(d + 1) / 2.0))
}

/// Whether one logical Clifford error over the whole circuit stays below 1%.
pub fn distance_condition(n_patch: u64, c_total: f64, p_ph: f64, d: u32) -> Result<bool> {
    Ok(1.0 / clifford_error(p_ph, d)? >= 100.0 * f64::from(d) * n_patch as f64 * c_total)
}

pub fn choose_distance(n_patch: u64, c_total: f64, p_ph: f64, d_max: u32) -> Result<u32> {
    if !(c_total > 0.0) {
        return Err(Error::Domain("circuit has no clocks".into()));
    }
    let mut d = 3;
    while d <= d_max {
        if distance_condition(n_patch, c_total, p_ph, d)? {
            return Ok(d);
        }
        d += 2;
    }
    Err(Error::Infeasible(format!(
        "no odd code distance <= {d_max} suppresses Clifford errors (N_patch={n_patch}, C_total={c_total:e}, p_ph={p_ph:e})"
    )))
}

/// Logical qubits: one per spin orbital plus the Hadamard-test ancilla.
pub fn logical_qubits(n_qubits: usize) -> u64 {
    n_qubits as u64 + 1
}

/// Fast-block layout plus ten ancilla-supply patches.
pub fn patches(n_l: u64) -> u64 {
    let r = (8 * n_l).isqrt();
    let ceil = if r * r == 8 * n_l { r } else { r + 1 };
    2 * n_l + ceil + 11
}

pub fn physical_qubits(n_patch: u64, d: u32) -> u64 {
    n_patch * 2 * u64::from(d) * u64::from(d)
}

pub fn patches_and_qubits(n_l: u64, d: u32) -> (u64, u64) {
    let n_patch = patches(n_l);
    (n_patch, physical_qubits(n_patch, d))
}

pub fn parallelism(q_budget: u64, q_qpu: u64, t_total: f64) -> Result<(u64, f64)> {
    if q_qpu == 0 {
        return Err(Error::Domain("QPU needs at least one qubit".into()));
    }
    let k = q_budget / q_qpu;
    if k == 0 {
        return Err(Error::Infeasible(format!("one QPU needs {q_qpu} qubits, budget is {q_budget}")));
    }
    Ok((k, t_total / k as f64))
}

/// Per-round inputs to the runtime sum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundRuntimeInput {
    pub c_total: f64,
    pub d: u32,
    pub n_m: u64,
    pub gamma_sq: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Runtimes {
    pub per_round_us: Vec<f64>,
    pub t_max_us: f64,
    pub t_total_us: f64,
}

/// Per-shot times `C·d·t_cycle` and `T_total = Σ r·γ²·N·T` with repetition
/// factor `r` (e by default).
pub fn runtimes(rounds: &[RoundRuntimeInput], cycle_time_us: f64, repetition: f64) -> Runtimes {
    let per_round_us: Vec<f64> = rounds.iter().map(|r| r.c_total * f64::from(r.d) * cycle_time_us).collect();
    let t_total_us =
        rounds.iter().zip(&per_round_us).map(|(r, t)| repetition * r.gamma_sq * r.n_m as f64 * t).sum();
    Runtimes { t_max_us: per_round_us.last().copied().unwrap_or(0.0), per_round_us, t_total_us }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SmmConfig {
    pub p_ph: f64,
    pub q_budget: u64,
    pub setting: SettingChoice,
    pub d_max: u32,
    pub clamp_calibration: bool,
    pub cycle_time_us: f64,
    pub repetition_factor: f64,
}

impl Default for SmmConfig {
    fn default() -> Self {
        Self {
            p_ph: 1e-3,
            q_budget: 500_000,
            setting: SettingChoice::Auto,
            d_max: 51,
            clamp_calibration: false,
            cycle_time_us: 1.0,
            repetition_factor: std::f64::consts::E,
        }
    }
}

impl SmmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.p_ph > 0.0 && self.p_ph < 0.01) {
            return Err(Error::Config(format!("p_ph must lie in (0, 0.01), got {:e}", self.p_ph)));
        }
        if self.d_max < 3 {
            return Err(Error::Config("d_max must be at least 3".into()));
        }
        if !(self.cycle_time_us > 0.0) {
            return Err(Error::Config("cycle time must be positive".into()));
        }
        if !(self.repetition_factor >= 1.0 && self.repetition_factor.is_finite()) {
            return Err(Error::Config("repetition factor must be finite and at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundResources {
    pub m: u32,
    #[serde(rename = "N_m")]
    pub n_m: u64,
    #[serde(rename = "G_m")]
    pub g_m: u64,
    #[serde(rename = "L_D")]
    pub l_d: usize,
    #[serde(rename = "lambda_R")]
    pub lambda_r: f64,
    pub random_angle: Option<f64>,
    #[serde(rename = "C_total")]
    pub c_total: f64,
    #[serde(rename = "P_total")]
    pub p_total: f64,
    pub gamma_sq: f64,
    pub d: u32,
    #[serde(rename = "T_m_us")]
    pub t_m_us: f64,
}

/// Outcome of one SMM setting; failures are kept so auto mode can report them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SettingOutcome {
    pub setting: Setting,
    pub time_to_solution_single_qpu_s: Option<f64>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResourceReport {
    // Hamiltonian
    #[serde(rename = "L_D")]
    pub l_d: usize,
    #[serde(rename = "lambda_R")]
    pub lambda_r: f64,
    pub lambda: f64,
    // Logical circuit
    #[serde(rename = "N_L")]
    pub n_l: u64,
    #[serde(rename = "G_M")]
    pub g_m: u64,
    #[serde(rename = "M")]
    pub m_final: u32,
    // Error correction
    pub smm_priority: Setting,
    pub d: u32,
    pub theta_bar_l: f64,
    #[serde(rename = "P_total")]
    pub p_total: f64,
    #[serde(rename = "gamma_sq_total")]
    pub gamma_sq: f64,
    // Physical
    #[serde(rename = "N_patch")]
    pub n_patch: u64,
    pub physical_qubits_per_qpu: u64,
    pub maximum_per_shot_runtime_s: f64,
    pub time_to_solution_single_qpu_s: f64,
    pub time_to_solution_single_qpu_days: f64,
    pub qpu_parallelism_k_star: u64,
    pub time_to_solution_k_star_qpus_days: f64,
    pub rounds: Vec<RoundResources>,
    pub settings_considered: Vec<SettingOutcome>,
    // Echoes
    pub epsilon: f64,
    pub xi: f64,
    pub delta: f64,
    pub p_ph: f64,
    pub q_budget: u64,
    pub cycle_time_us: f64,
    pub repetition_factor: f64,
    pub clamp_calibration: bool,
    pub calibration_provenance: String,
}

const SECONDS_PER_DAY: f64 = 86_400.0;

const TABLE_COLUMNS: [&str; 16] = [
    "L_D",
    "lambda_R",
    "lambda",
    "N_L",
    "G_M",
    "smm_priority",
    "d",
    "theta_bar_L",
    "P_total",
    "physical_qubits_per_qpu",
    "maximum_per_shot_runtime_s",
    "time_to_solution_single_qpu_days",
    "qpu_parallelism_k_star",
    "time_to_solution_k_star_qpus_days",
    "gamma_sq_total",
    "M",
];

impl ResourceReport {
    pub fn table_header() -> String {
        TABLE_COLUMNS.join(",")
    }

    /// One row in the logical/physical table layout.
    pub fn table_row(&self) -> String {
        let mut s = String::new();
        write!(
            s,
            "{},{:e},{:e},{},{},{},{},{:e},{:e},{},{:e},{:e},{},{:e},{:e},{}",
            self.l_d,
            self.lambda_r,
            self.lambda,
            self.n_l,
            self.g_m,
            self.smm_priority.as_str(),
            self.d,
            self.theta_bar_l,
            self.p_total,
            self.physical_qubits_per_qpu,
            self.maximum_per_shot_runtime_s,
            self.time_to_solution_single_qpu_days,
            self.qpu_parallelism_k_star,
            self.time_to_solution_k_star_qpus_days,
            self.gamma_sq,
            self.m_final,
        )
        .unwrap();
        s
    }
}

struct Prepared {
    n_qubits: usize,
    mags: SortedMagnitudes,
    plan: costmodel::Plan,
    rounds: Vec<RoundCost>,
}

fn prepare(table: &CoefficientTable, cost: &CostConfig) -> Result<Prepared> {
    if cost.c_gate != 1.0 {
        return Err(Error::Config("physical estimates count one rotation per gate; set c_gate = 1".into()));
    }
    let sorted = if table.is_sorted() { table.clone() } else { table.prepare_sorted() };
    let mags = SortedMagnitudes::from_table(&sorted)?;
    let plan = costmodel::plan(mags.lambda(), cost)?;
    let schedule = costmodel::sample_schedule(cost, plan.m_final)?;
    let rounds = schedule
        .iter()
        .enumerate()
        .map(|(m, &n_m)| RoundCost { n_m, ..costmodel::round_cost_sorted(&mags, m as u32, plan.step.delta, cost) })
        .collect();
    Ok(Prepared { n_qubits: sorted.n_qubits(), mags, plan, rounds })
}

fn estimate_setting(
    prep: &Prepared,
    cost: &CostConfig,
    calibration: &SmmCalibration,
    cfg: &SmmConfig,
    setting: Setting,
) -> Result<ResourceReport> {
    let curve = calibration.curve(setting, cfg.p_ph)?;
    let delta = prep.plan.step.delta;
    let n_l = logical_qubits(prep.n_qubits);
    let n_patch = patches(n_l);
    let per_round: Vec<Result<(RoundResources, f64)>> = par::map_indexed(prep.rounds.len(), |i| {
        let r = &prep.rounds[i];
        let angles = rotation_angle_multiset(&prep.mags, r, delta);
        debug_assert_eq!(total_count(&angles), r.g_m);
        let p_total = total_logical_error(&angles, curve, cfg.p_ph, cfg.clamp_calibration)?;
        let c_total = total_clocks(&angles, curve, cfg.clamp_calibration)?;
        let d = choose_distance(n_patch, c_total, cfg.p_ph, cfg.d_max)
            .map_err(|e| Error::Infeasible(format!("round {}: {e}", r.m)))?;
        let weighted: f64 = angles.iter().map(|a| a.theta * a.count as f64).sum();
        let res = RoundResources {
            m: r.m,
            n_m: r.n_m,
            g_m: r.g_m,
            l_d: r.l_d,
            lambda_r: r.lambda_r,
            random_angle: (r.g_rand > 0).then(|| random_angle(r.lambda_r, delta, r.m)),
            c_total,
            p_total,
            gamma_sq: pec_overhead(p_total),
            d,
            t_m_us: c_total * f64::from(d) * cfg.cycle_time_us,
        };
        Ok((res, weighted / r.g_m.max(1) as f64))
    });
    let mut rounds = Vec::with_capacity(per_round.len());
    let mut theta_bar = 0.0;
    for r in per_round {
        let (res, mean) = r?;
        theta_bar = mean;
        rounds.push(res);
    }
    let inputs: Vec<RoundRuntimeInput> = rounds
        .iter()
        .map(|r| RoundRuntimeInput { c_total: r.c_total, d: r.d, n_m: r.n_m, gamma_sq: r.gamma_sq })
        .collect();
    let times = runtimes(&inputs, cfg.cycle_time_us, cfg.repetition_factor);
    let last = rounds.last().expect("at least one round");
    let q_qpu = physical_qubits(n_patch, last.d);
    let t_total_s = times.t_total_us * 1e-6;
    let (k, t_par_s) = parallelism(cfg.q_budget, q_qpu, t_total_s)?;
    Ok(ResourceReport {
        l_d: last.l_d,
        lambda_r: last.lambda_r,
        lambda: prep.plan.lambda,
        n_l,
        g_m: last.g_m,
        m_final: prep.plan.m_final,
        smm_priority: setting,
        d: last.d,
        theta_bar_l: theta_bar,
        p_total: last.p_total,
        gamma_sq: last.gamma_sq,
        n_patch,
        physical_qubits_per_qpu: q_qpu,
        maximum_per_shot_runtime_s: times.t_max_us * 1e-6,
        time_to_solution_single_qpu_s: t_total_s,
        time_to_solution_single_qpu_days: t_total_s / SECONDS_PER_DAY,
        qpu_parallelism_k_star: k,
        time_to_solution_k_star_qpus_days: t_par_s / SECONDS_PER_DAY,
        settings_considered: Vec::new(),
        rounds,
        epsilon: cost.epsilon,
        xi: cost.xi,
        delta,
        p_ph: cfg.p_ph,
        q_budget: cfg.q_budget,
        cycle_time_us: cfg.cycle_time_us,
        repetition_factor: cfg.repetition_factor,
        clamp_calibration: cfg.clamp_calibration,
        calibration_provenance: calibration.provenance.clone(),
    })
}

/// End-to-end physical estimate. In auto mode both settings run and the
/// shorter single-QPU time-to-solution wins; per-setting failures are listed.
pub fn estimate(
    table: &CoefficientTable,
    cost: &CostConfig,
    calibration: &SmmCalibration,
    cfg: &SmmConfig,
) -> Result<ResourceReport> {
    cfg.validate()?;
    let prep = prepare(table, cost)?;
    let settings = cfg.setting.settings();
    let results = par::map_indexed(settings.len(), |i| estimate_setting(&prep, cost, calibration, cfg, settings[i]));
    let outcomes: Vec<SettingOutcome> = settings
        .iter()
        .zip(&results)
        .map(|(&setting, r)| match r {
            Ok(rep) => SettingOutcome {
                setting,
                time_to_solution_single_qpu_s: Some(rep.time_to_solution_single_qpu_s),
                error: None,
            },
            Err(e) => SettingOutcome { setting, time_to_solution_single_qpu_s: None, error: Some(e.to_string()) },
        })
        .collect();
    let mut best: Option<ResourceReport> = None;
    let mut first_err = None;
    for r in results {
        match r {
            Ok(rep) => {
                if best.as_ref().is_none_or(|b| rep.time_to_solution_single_qpu_s < b.time_to_solution_single_qpu_s) {
                    best = Some(rep);
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    match best {
        Some(mut rep) => {
            rep.settings_considered = outcomes;
            Ok(rep)
        }
        None => Err(first_err.expect("at least one setting")),
    }
}
