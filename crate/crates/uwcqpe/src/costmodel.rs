//! Logical gate counts for phase estimation with partially randomized
//! second-order product formulas.

use serde::{Deserialize, Serialize};

use crate::pauli_lcu::CoefficientTable;
use crate::{par, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CostConfig {
    /// Target precision in Hartree.
    pub epsilon: f64,
    pub xi: f64,
    /// Lower bound on the ground-state overlap.
    pub eta: f64,
    pub order_p: u32,
    /// Randomized-protocol constant (1 for qDRIFT).
    pub gamma: f64,
    pub c_gate: f64,
    pub alpha_hoeffding: f64,
    pub trotter_a: f64,
    pub trotter_b: f64,
    /// Tail weight dropped from the deterministic baseline.
    pub baseline_truncation: f64,
}

impl Default for CostConfig {
    fn default() -> Self {
        Self {
            epsilon: 1.6e-3,
            xi: 0.01,
            eta: 1.0,
            order_p: 2,
            gamma: 1.0,
            c_gate: 1.0,
            alpha_hoeffding: 10.0,
            trotter_a: 3.41e-5,
            trotter_b: 2.09,
            baseline_truncation: 1e-3,
        }
    }
}

impl CostConfig {
    pub fn validate(&self) -> Result<()> {
        if self.order_p != 2 {
            return Err(Error::Config(format!("only second-order formulas are supported (got p={})", self.order_p)));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Config("epsilon must be positive".into()));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::Config("eta must lie in (0, 1]".into()));
        }
        let ratio = (1.0 - self.eta) / self.eta;
        if ratio > 1.0 {
            return Err(Error::Config(format!("eta={} is too small for phase estimation", self.eta)));
        }
        let xi_min = 3.0 / std::f64::consts::PI * ratio.asin();
        if !(self.xi < 1.0 && self.xi > xi_min) {
            return Err(Error::Config(format!("xi={} must lie in ({xi_min:.6}, 1) for eta={}", self.xi, self.eta)));
        }
        for (v, name) in [(self.gamma, "gamma"), (self.c_gate, "c_gate"), (self.alpha_hoeffding, "alpha_hoeffding")] {
            if !(v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if !(self.trotter_a > 0.0) || !self.trotter_b.is_finite() {
            return Err(Error::Config("invalid Trotter heuristic constants".into()));
        }
        Ok(())
    }

    pub fn trotter_constant(&self, lambda: f64) -> f64 {
        trotter_constant(lambda, self.trotter_a, self.trotter_b)
    }
}

/// `C_gs = a·λ^b`.
pub fn trotter_constant(lambda: f64, a: f64, b: f64) -> f64 {
    a * lambda.powf(b)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepSize {
    pub delta: f64,
    pub epsilon_qpe: f64,
    pub epsilon_trot: f64,
}

pub fn optimal_step(epsilon: f64, c_gs: f64, p: u32) -> Result<StepSize> {
    if p != 2 {
        return Err(Error::Config(format!("only p=2 is supported (got {p})")));
    }
    if !(c_gs > 0.0) {
        return Err(Error::Config("Trotter constant must be positive".into()));
    }
    let p = p as f64;
    let delta = (epsilon / c_gs).powf(1.0 / p) * (1.0 / (1.0 + p)).powf(1.0 / (2.0 * p));
    Ok(StepSize {
        delta,
        epsilon_qpe: epsilon * (p / (1.0 + p)).sqrt(),
        epsilon_trot: epsilon / (1.0 + p).sqrt(),
    })
}

/// `M = ⌈log2(ξ / (ε_qpe·δ))⌉`.
pub fn rounds(xi: f64, epsilon_qpe: f64, delta: f64) -> Result<u32> {
    let ratio = xi / (epsilon_qpe * delta);
    if !ratio.is_finite() || ratio <= 0.0 {
        return Err(Error::Config("degenerate precision target".into()));
    }
    let m = ratio.log2().ceil();
    if m < 0.0 {
        return Err(Error::Config(format!("precision target needs M={m} < 0 rounds")));
    }
    Ok(m as u32)
}

// Ceiling that ignores representation noise just above an integer.
fn ceil_tol(x: f64) -> f64 {
    (x - x.abs() * 1e-12).ceil()
}

fn ceil_even(x: f64) -> u64 {
    let c = ceil_tol(x).max(0.0) as u64;
    c + c % 2
}

/// Shot counts `N_0 … N_M`.
pub fn sample_schedule(cfg: &CostConfig, m_final: u32) -> Result<Vec<u64>> {
    let beta = cfg.eta * (1.0 + (std::f64::consts::PI / 3.0).sin()) - 1.0;
    if !(beta > 0.0) {
        return Err(Error::Config(format!("eta={} gives non-positive beta", cfg.eta)));
    }
    let ln2 = std::f64::consts::LN_2;
    let mut out: Vec<u64> = (0..m_final)
        .map(|m| {
            let x = 2.0 / (beta * beta) * ((1.0 / cfg.xi).ln() + ln2 * (cfg.alpha_hoeffding * (m_final - m) as f64 + 1.0));
            ceil_even(x)
        })
        .collect();
    out.push(ceil_even(2.0 / (cfg.xi * cfg.xi)));
    Ok(out)
}

/// Descending magnitudes with suffix sums, `suffix[k] = Σ_{ℓ ≥ k} |c_ℓ|` (zero-based).
#[derive(Clone, Debug)]
pub struct SortedMagnitudes {
    mags: Vec<f64>,
    suffix: Vec<f64>,
}

impl SortedMagnitudes {
    pub fn from_table(table: &CoefficientTable) -> Result<Self> {
        if !table.is_sorted() {
            return Err(Error::Domain("coefficient table must be sorted by magnitude".into()));
        }
        Ok(Self::from_sorted(table.magnitudes()))
    }

    /// Sort arbitrary magnitudes (absolute values taken).
    pub fn from_unsorted(values: &[f64]) -> Self {
        let mut mags: Vec<f64> = values.iter().map(|v| v.abs()).collect();
        mags.sort_by(|a, b| b.total_cmp(a));
        Self::from_sorted(mags)
    }

    fn from_sorted(mags: Vec<f64>) -> Self {
        let mut suffix = vec![0.0; mags.len() + 1];
        for k in (0..mags.len()).rev() {
            suffix[k] = suffix[k + 1] + mags[k];
        }
        Self { mags, suffix }
    }

    pub fn magnitudes(&self) -> &[f64] {
        &self.mags
    }

    pub fn len(&self) -> usize {
        self.mags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mags.is_empty()
    }

    pub fn lambda(&self) -> f64 {
        self.suffix[0]
    }

    /// Weight left to the randomized part when the first `l_d` terms are deterministic.
    pub fn lambda_r(&self, l_d: usize) -> f64 {
        self.suffix[l_d]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundFactors {
    pub g_det: f64,
    pub g_rand: f64,
}

/// Per-term deterministic and per-unit-weight² randomized gate factors at round `m`.
pub fn round_factors(m: u32, delta: f64, cfg: &CostConfig) -> RoundFactors {
    // p = 2 has two stages; the halving trick removes one of them.
    let t = 2f64.powi(m as i32);
    RoundFactors { g_det: cfg.c_gate * t, g_rand: cfg.c_gate * cfg.gamma * delta * delta * t * t }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundCost {
    pub m: u32,
    pub t_m: u64,
    #[serde(rename = "N_m")]
    pub n_m: u64,
    #[serde(rename = "L_D")]
    pub l_d: usize,
    #[serde(rename = "lambda_R")]
    pub lambda_r: f64,
    #[serde(rename = "G_det")]
    pub g_det: u64,
    #[serde(rename = "G_rand")]
    pub g_rand: u64,
    #[serde(rename = "G_m")]
    pub g_m: u64,
}

/// Optimal partition for fixed gate factors: smallest `L_D` on ties.
pub fn best_partition(mags: &SortedMagnitudes, f: RoundFactors) -> (usize, f64) {
    let mut best = (0usize, f64::INFINITY);
    for l_d in 0..=mags.len() {
        let lr = mags.lambda_r(l_d);
        let cost = f.g_det * l_d as f64 + f.g_rand * lr * lr;
        if cost < best.1 {
            best = (l_d, cost);
        }
    }
    best
}

pub fn round_cost_sorted(mags: &SortedMagnitudes, m: u32, delta: f64, cfg: &CostConfig) -> RoundCost {
    let f = round_factors(m, delta, cfg);
    let (l_d, _) = best_partition(mags, f);
    let lambda_r = mags.lambda_r(l_d);
    let g_det = ceil_tol(f.g_det * l_d as f64) as u64;
    let g_rand = ceil_tol(f.g_rand * lambda_r * lambda_r) as u64;
    RoundCost { m, t_m: 1u64 << m, n_m: 0, l_d, lambda_r, g_det, g_rand, g_m: g_det + g_rand }
}

pub fn round_cost(table: &CoefficientTable, m: u32, delta: f64, cfg: &CostConfig) -> Result<RoundCost> {
    Ok(round_cost_sorted(&SortedMagnitudes::from_table(table)?, m, delta, cfg))
}

/// Step size and round count implied by `λ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub lambda: f64,
    pub c_gs: f64,
    pub step: StepSize,
    pub m_final: u32,
}

pub fn plan(lambda: f64, cfg: &CostConfig) -> Result<Plan> {
    cfg.validate()?;
    if !(lambda > 0.0) {
        return Err(Error::Domain("Hamiltonian has zero l1 norm".into()));
    }
    let c_gs = cfg.trotter_constant(lambda);
    let step = optimal_step(cfg.epsilon, c_gs, cfg.order_p)?;
    let m_final = rounds(cfg.xi, step.epsilon_qpe, step.delta)?;
    Ok(Plan { lambda, c_gs, step, m_final })
}

/// Final-round cost `G_M` with the step size re-derived from the magnitudes' own `λ`.
pub fn final_round_cost(mags: &SortedMagnitudes, cfg: &CostConfig) -> Result<(Plan, RoundCost)> {
    let p = plan(mags.lambda(), cfg)?;
    Ok((p, round_cost_sorted(mags, p.m_final, p.step.delta, cfg)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineCost {
    pub lambda: f64,
    #[serde(rename = "L")]
    pub n_terms: usize,
    pub delta: f64,
    #[serde(rename = "M")]
    pub m_final: u32,
    pub rounds: Vec<RoundCost>,
    #[serde(rename = "G_total")]
    pub g_total: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub lambda: f64,
    #[serde(rename = "C_gs")]
    pub c_gs: f64,
    pub delta: f64,
    pub epsilon_qpe: f64,
    pub epsilon_trot: f64,
    #[serde(rename = "M")]
    pub m_final: u32,
    pub rounds: Vec<RoundCost>,
    #[serde(rename = "G_total")]
    pub g_total: f64,
    #[serde(rename = "baseline_G_total")]
    pub baseline_g_total: f64,
    pub baseline: BaselineCost,
}

fn schedule_total(rounds: &[RoundCost]) -> f64 {
    rounds.iter().map(|r| std::f64::consts::E * r.n_m as f64 * r.g_m as f64).sum()
}

/// Deterministic Trotter reference: truncated table, every term deterministic.
pub fn baseline_cost(table: &CoefficientTable, cfg: &CostConfig) -> Result<BaselineCost> {
    let trunc = table.truncate_tail(cfg.baseline_truncation)?;
    let p = plan(trunc.l1_norm(), cfg)?;
    let schedule = sample_schedule(cfg, p.m_final)?;
    let l = trunc.len();
    let rounds: Vec<RoundCost> = schedule
        .iter()
        .enumerate()
        .map(|(m, &n_m)| {
            let f = round_factors(m as u32, p.step.delta, cfg);
            let g_det = ceil_tol(f.g_det * l as f64) as u64;
            RoundCost { m: m as u32, t_m: 1 << m, n_m, l_d: l, lambda_r: 0.0, g_det, g_rand: 0, g_m: g_det }
        })
        .collect();
    Ok(BaselineCost {
        lambda: p.lambda,
        n_terms: l,
        delta: p.step.delta,
        m_final: p.m_final,
        g_total: schedule_total(&rounds),
        rounds,
    })
}

/// Per-round costs, `G_total = Σ e·N_m·G_m`, and the deterministic baseline.
pub fn total_cost(table: &CoefficientTable, cfg: &CostConfig) -> Result<CostBreakdown> {
    let sorted = if table.is_sorted() { table.clone() } else { table.prepare_sorted() };
    let mags = SortedMagnitudes::from_table(&sorted)?;
    let p = plan(mags.lambda(), cfg)?;
    let schedule = sample_schedule(cfg, p.m_final)?;
    let rounds: Vec<RoundCost> = par::map_indexed(schedule.len(), |m| {
        let mut r = round_cost_sorted(&mags, m as u32, p.step.delta, cfg);
        r.n_m = schedule[m];
        r
    });
    let baseline = baseline_cost(&sorted, cfg)?;
    Ok(CostBreakdown {
        lambda: p.lambda,
        c_gs: p.c_gs,
        delta: p.step.delta,
        epsilon_qpe: p.step.epsilon_qpe,
        epsilon_trot: p.step.epsilon_trot,
        m_final: p.m_final,
        g_total: schedule_total(&rounds),
        rounds,
        baseline_g_total: baseline.g_total,
        baseline,
    })
}
