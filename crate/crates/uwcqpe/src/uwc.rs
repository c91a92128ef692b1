//! Unitary weight concentration: reshape the coefficient distribution with
//! orbital rotations and BLISS shifts so that the partially randomized gate
//! count drops.
//!
//! The discrete cost `g_det·L_D + g_rand·λ_R²` is replaced by a sigmoid-smoothed
//! surrogate around a threshold weight `w_soft`, minimized block by block with
//! BFGS, and the outer loop accepts a sweep only when the discrete cost at the
//! final round does not get worse.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::costmodel::{self, CostConfig, Plan, RoundCost, RoundFactors, SortedMagnitudes};
use crate::integrals::ElectronIntegrals;
use crate::pauli_lcu::{monomials, COEFFICIENT_FLOOR};
use crate::transforms::{cholesky_basis_candidates, select_min_l1, Block, CHOLESKY_TOL};
use crate::{par, Error, Result};

/// Margin applied to `|c₁|` when every term is randomized.
pub const W_SOFT_MARGIN: f64 = 1.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    #[default]
    SoftGateCost,
    L1Norm,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GradientMode {
    #[default]
    FiniteDifference,
    Analytic,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    pub shrink: f64,
    pub max_shrinks: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self { max_iterations: 200, gradient_tolerance: 1e-8, shrink: 0.5, max_shrinks: 40 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UwcConfig {
    pub epsilon_soft: f64,
    pub delta_th: f64,
    pub n_iter_max: usize,
    pub objective: Objective,
    pub optimizer: OptimizerConfig,
    pub gradient_mode: GradientMode,
    pub spin_bliss: bool,
    pub cholesky_init: bool,
}

impl Default for UwcConfig {
    fn default() -> Self {
        Self {
            epsilon_soft: 1e-4,
            delta_th: 1e-3,
            n_iter_max: 10,
            objective: Objective::SoftGateCost,
            optimizer: OptimizerConfig::default(),
            gradient_mode: GradientMode::FiniteDifference,
            spin_bliss: true,
            cholesky_init: true,
        }
    }
}

impl UwcConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon_soft > 0.0) {
            return Err(Error::Config("epsilon_soft must be positive".into()));
        }
        if !(self.delta_th > 0.0) {
            return Err(Error::Config("delta_th must be positive".into()));
        }
        let o = &self.optimizer;
        if !(o.shrink > 0.0 && o.shrink < 1.0) {
            return Err(Error::Config("line-search shrink factor must lie in (0, 1)".into()));
        }
        if !(o.gradient_tolerance >= 0.0) {
            return Err(Error::Config("gradient tolerance must be non-negative".into()));
        }
        Ok(())
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Threshold weight between the last deterministic and first randomized magnitude.
pub fn w_soft_at(mags: &SortedMagnitudes, l_d: usize) -> Result<f64> {
    let c = mags.magnitudes();
    if c.is_empty() {
        return Err(Error::Domain("w_soft needs at least one coefficient".into()));
    }
    Ok(match l_d {
        0 => c[0] * W_SOFT_MARGIN,
        l if l >= c.len() => c[c.len() - 1] / 2.0,
        l => 0.5 * (c[l - 1] + c[l]),
    })
}

/// Optimal partition for `f` and the matching `w_soft`.
pub fn w_soft_from(mags: &SortedMagnitudes, f: RoundFactors) -> Result<(usize, f64)> {
    let (l_d, _) = costmodel::best_partition(mags, f);
    Ok((l_d, w_soft_at(mags, l_d)?))
}

// Subgradient of |c|, zero for coefficients at the numerical-noise floor.
fn sign0(c: f64) -> f64 {
    if c.abs() <= COEFFICIENT_FLOOR {
        0.0
    } else {
        c.signum()
    }
}

/// Unnormalized smoothed gate count.
pub fn soft_cost(coeffs: &[f64], w_soft: f64, epsilon_soft: f64, g_det: f64, g_rand: f64) -> f64 {
    let mut count = 0.0;
    let mut rand = 0.0;
    for &c in coeffs {
        let a = c.abs();
        let s = sigmoid((a - w_soft) / epsilon_soft);
        count += s;
        rand += a * (1.0 - s);
    }
    g_det * count + g_rand * rand * rand
}

/// Value and gradient with respect to the signed coefficients.
pub fn soft_cost_grad(coeffs: &[f64], w_soft: f64, epsilon_soft: f64, g_det: f64, g_rand: f64) -> (f64, Vec<f64>) {
    let mut count = 0.0;
    let mut rand = 0.0;
    let mut parts = Vec::with_capacity(coeffs.len());
    for &c in coeffs {
        let a = c.abs();
        let s = sigmoid((a - w_soft) / epsilon_soft);
        let ds = s * (1.0 - s) / epsilon_soft;
        count += s;
        rand += a * (1.0 - s);
        parts.push((sign0(c), ds, s, a));
    }
    let value = g_det * count + g_rand * rand * rand;
    let grad = parts
        .into_iter()
        .map(|(sign, ds, s, a)| sign * (g_det * ds + 2.0 * g_rand * rand * ((1.0 - s) - a * ds)))
        .collect();
    (value, grad)
}

/// Everything the block objective needs besides the parameters.
#[derive(Clone, Debug)]
pub struct ObjectiveSpec {
    pub kind: Objective,
    pub w_soft: f64,
    pub epsilon_soft: f64,
    pub factors: RoundFactors,
    /// Values are divided by this.
    pub scale: f64,
}

impl ObjectiveSpec {
    fn eval_values(&self, v: &[f64]) -> f64 {
        match self.kind {
            Objective::SoftGateCost => {
                soft_cost(v, self.w_soft, self.epsilon_soft, self.factors.g_det, self.factors.g_rand) / self.scale
            }
            Objective::L1Norm => v.iter().map(|c| c.abs()).sum::<f64>() / self.scale,
        }
    }

    fn grad_values(&self, v: &[f64]) -> (f64, Vec<f64>) {
        match self.kind {
            Objective::SoftGateCost => {
                let (f, mut g) = soft_cost_grad(v, self.w_soft, self.epsilon_soft, self.factors.g_det, self.factors.g_rand);
                g.iter_mut().for_each(|x| *x /= self.scale);
                (f / self.scale, g)
            }
            Objective::L1Norm => {
                let f = v.iter().map(|c| c.abs()).sum::<f64>() / self.scale;
                (f, v.iter().map(|&c| sign0(c) / self.scale).collect())
            }
        }
    }

    pub fn value_of(&self, x: &ElectronIntegrals) -> f64 {
        self.eval_values(&monomials::values(&x.view()))
    }
}

/// Objective of one block as a function of its parameters.
pub struct BlockObjective<'a> {
    pub base: &'a ElectronIntegrals,
    pub block: Block,
    pub spec: &'a ObjectiveSpec,
}

impl BlockObjective<'_> {
    pub fn n_params(&self) -> usize {
        self.block.n_params(self.base.n_orbitals)
    }

    pub fn value(&self, theta: &[f64]) -> Result<f64> {
        let x = self.block.apply(self.base, theta)?;
        let f = self.spec.value_of(&x);
        if !f.is_finite() {
            return Err(Error::Domain("non-finite objective".into()));
        }
        Ok(f)
    }

    pub fn gradient(&self, theta: &[f64], mode: GradientMode) -> Result<Vec<f64>> {
        match mode {
            GradientMode::FiniteDifference => {
                let parts = par::map_indexed(theta.len(), |i| {
                    let h = 1e-6 * theta[i].abs().max(1.0);
                    let mut t = theta.to_vec();
                    t[i] = theta[i] + h;
                    let fp = self.value(&t)?;
                    t[i] = theta[i] - h;
                    let fm = self.value(&t)?;
                    Ok((fp - fm) / (2.0 * h))
                });
                parts.into_iter().collect()
            }
            GradientMode::Analytic => {
                let x = self.block.apply(self.base, theta)?;
                let (f, bar) = self.spec.grad_values(&monomials::values(&x.view()));
                if !f.is_finite() {
                    return Err(Error::Domain("non-finite objective".into()));
                }
                let ig = monomials::adjoint(self.base.n_orbitals, &bar);
                self.block.pullback(self.base, theta, &ig)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizeOutcome {
    pub theta: Vec<f64>,
    pub value: f64,
    pub start_value: f64,
    pub iterations: usize,
    pub converged: bool,
    pub warning: Option<String>,
}

/// BFGS with Armijo backtracking; never returns a point worse than `x0`.
pub fn bfgs(
    f: impl Fn(&[f64]) -> Result<f64>,
    grad: impl Fn(&[f64]) -> Result<Vec<f64>>,
    x0: &[f64],
    cfg: &OptimizerConfig,
) -> Result<OptimizeOutcome> {
    let n = x0.len();
    let mut x = DVector::from_column_slice(x0);
    let start_value = f(x0)?;
    let mut fx = start_value;
    let mut out = OptimizeOutcome {
        theta: x0.to_vec(),
        value: start_value,
        start_value,
        iterations: 0,
        converged: n == 0,
        warning: None,
    };
    if n == 0 {
        return Ok(out);
    }
    let mut g = DVector::from_vec(grad(x.as_slice())?);
    let mut h_inv = DMatrix::<f64>::identity(n, n);
    let mut first = true;
    for it in 0..cfg.max_iterations {
        out.iterations = it + 1;
        if g.amax() <= cfg.gradient_tolerance {
            out.converged = true;
            break;
        }
        let mut d = -(&h_inv * &g);
        let mut slope = g.dot(&d);
        if !(slope < 0.0) {
            h_inv = DMatrix::identity(n, n);
            d = -g.clone();
            slope = -g.norm_squared();
        }
        let mut step = if first { (1.0 / g.amax()).min(1.0) } else { 1.0 };
        let mut accepted = None;
        for _ in 0..cfg.max_shrinks {
            let trial = &x + &d * step;
            if let Ok(ft) = f(trial.as_slice()) {
                if ft <= fx + 1e-4 * step * slope {
                    accepted = Some((trial, ft));
                    break;
                }
            }
            step *= cfg.shrink;
        }
        let Some((x_new, f_new)) = accepted else {
            out.warning = Some(format!("line search failed after {} shrinks at iteration {}", cfg.max_shrinks, it + 1));
            break;
        };
        let g_new = DVector::from_vec(grad(x_new.as_slice())?);
        let s = &x_new - &x;
        let y = &g_new - &g;
        let ys = y.dot(&s);
        if ys > 1e-14 * s.norm() * y.norm() && ys > 0.0 {
            if first {
                h_inv *= ys / y.norm_squared();
            }
            let rho = 1.0 / ys;
            let hy = &h_inv * &y;
            let yhy = y.dot(&hy);
            h_inv += (&s * s.transpose()) * (rho * rho * yhy + rho) - (&hy * s.transpose() + &s * hy.transpose()) * rho;
            first = false;
        }
        let decrease = fx - f_new;
        x = x_new;
        fx = f_new;
        g = g_new;
        if decrease <= 1e-15 * fx.abs().max(1.0) {
            out.converged = true;
            break;
        }
    }
    if fx <= start_value {
        out.theta = x.as_slice().to_vec();
        out.value = fx;
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct BlockOutcome {
    pub integrals: ElectronIntegrals,
    pub theta: Vec<f64>,
    pub value: f64,
    pub start_value: f64,
    pub warning: Option<String>,
}

/// Minimize one block from zero parameters.
pub fn minimize_block(
    x: &ElectronIntegrals,
    block: Block,
    spec: &ObjectiveSpec,
    cfg: &UwcConfig,
) -> Result<BlockOutcome> {
    let obj = BlockObjective { base: x, block, spec };
    let theta0 = vec![0.0; obj.n_params()];
    let res = bfgs(|t| obj.value(t), |t| obj.gradient(t, cfg.gradient_mode), &theta0, &cfg.optimizer)?;
    let integrals = if res.value < res.start_value { block.apply(x, &res.theta)? } else { x.clone() };
    Ok(BlockOutcome {
        integrals,
        theta: res.theta,
        value: res.value,
        start_value: res.start_value,
        warning: res.warning.map(|w| format!("{block:?}: {w}")),
    })
}

/// Discrete final-round cost of `x` with its own step size and round count.
#[derive(Clone, Debug)]
pub struct DiscreteCost {
    pub plan: Plan,
    pub round: RoundCost,
    pub mags: SortedMagnitudes,
}

pub fn discrete_cost(x: &ElectronIntegrals, cost: &CostConfig) -> Result<DiscreteCost> {
    let vals: Vec<f64> = monomials::values(&x.view()).into_iter().filter(|v| v.abs() > COEFFICIENT_FLOOR).collect();
    let mags = SortedMagnitudes::from_unsorted(&vals);
    let (plan, round) = costmodel::final_round_cost(&mags, cost)?;
    Ok(DiscreteCost { plan, round, mags })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    #[serde(rename = "G_M")]
    pub g_m: u64,
    #[serde(rename = "G_soft")]
    pub g_soft: f64,
    pub lambda: f64,
    #[serde(rename = "L_D")]
    pub l_d: usize,
    #[serde(rename = "M")]
    pub m_final: u32,
    pub w_soft: f64,
    pub accepted: bool,
    pub warnings: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    CostIncreased,
    MaxIterations,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UwcHistory {
    pub objective: Objective,
    /// Index into the Cholesky-basis candidates (0 is the input basis).
    pub initial_basis: usize,
    pub input_lambda: f64,
    #[serde(rename = "initial_G_M")]
    pub initial_g_m: u64,
    pub initial_lambda: f64,
    pub iterations: Vec<IterationRecord>,
    #[serde(rename = "final_G_M")]
    pub final_g_m: u64,
    pub final_lambda: f64,
    pub termination: Termination,
}

impl UwcHistory {
    /// One JSON object per iteration.
    pub fn to_json_lines(&self) -> String {
        self.iterations.iter().map(|r| serde_json::to_string(r).expect("record serializes") + "\n").collect()
    }
}

fn metric(kind: Objective, d: &DiscreteCost) -> f64 {
    match kind {
        Objective::SoftGateCost => d.round.g_m as f64,
        Objective::L1Norm => d.plan.lambda,
    }
}

/// Iterative UWC: Cholesky-basis start, then OO → BLISS → spin-BLISS sweeps
/// until the discrete cost stops improving.
pub fn uwc_optimize(
    x: &ElectronIntegrals,
    cost: &CostConfig,
    cfg: &UwcConfig,
) -> Result<(ElectronIntegrals, UwcHistory)> {
    cfg.validate()?;
    cost.validate()?;
    if !x.is_restricted() {
        return Err(Error::Unsupported("UWC expects restricted integrals".into()));
    }
    let input_lambda = discrete_cost(x, cost)?.plan.lambda;
    let (mut h, initial_basis) = if cfg.cholesky_init {
        let cands = cholesky_basis_candidates(x, CHOLESKY_TOL)?;
        let lambdas: Vec<f64> = cands.iter().map(|c| c.lambda).collect();
        let best = select_min_l1(&lambdas)?;
        (cands.into_iter().nth(best).expect("index in range").integrals, best)
    } else {
        (x.clone(), 0)
    };
    let mut cur = discrete_cost(&h, cost)?;
    let mut history = UwcHistory {
        objective: cfg.objective,
        initial_basis,
        input_lambda,
        initial_g_m: cur.round.g_m,
        initial_lambda: cur.plan.lambda,
        iterations: Vec::new(),
        final_g_m: cur.round.g_m,
        final_lambda: cur.plan.lambda,
        termination: Termination::MaxIterations,
    };
    let mut blocks = vec![Block::OrbitalRotation, Block::Bliss];
    if cfg.spin_bliss {
        blocks.push(Block::SpinBliss);
    }

    for iteration in 1..=cfg.n_iter_max {
        let factors = costmodel::round_factors(cur.plan.m_final, cur.plan.step.delta, cost);
        let (l_d, w_soft) = w_soft_from(&cur.mags, factors)?;
        let scale = match cfg.objective {
            Objective::SoftGateCost => (cur.round.g_m as f64).max(1.0),
            Objective::L1Norm => cur.plan.lambda,
        };
        let spec = ObjectiveSpec { kind: cfg.objective, w_soft, epsilon_soft: cfg.epsilon_soft, factors, scale };

        let mut next = h.clone();
        let mut warnings = Vec::new();
        let mut soft = spec.value_of(&next);
        for &b in &blocks {
            let out = minimize_block(&next, b, &spec, cfg)?;
            warnings.extend(out.warning);
            soft = out.value;
            next = out.integrals;
        }
        let nd = discrete_cost(&next, cost)?;
        let prev = metric(cfg.objective, &cur);
        let new = metric(cfg.objective, &nd);
        let mut rec = IterationRecord {
            iteration,
            g_m: nd.round.g_m,
            g_soft: soft,
            lambda: nd.plan.lambda,
            l_d,
            m_final: nd.plan.m_final,
            w_soft,
            accepted: new <= prev,
            warnings,
        };
        if !rec.accepted {
            history.iterations.push(rec);
            history.termination = Termination::CostIncreased;
            break;
        }
        let converged = (prev - new) / prev.abs().max(f64::MIN_POSITIVE) < cfg.delta_th;
        rec.accepted = true;
        history.iterations.push(rec);
        h = next;
        cur = nd;
        if converged {
            history.termination = Termination::Converged;
            break;
        }
    }
    history.final_g_m = cur.round.g_m;
    history.final_lambda = cur.plan.lambda;
    Ok((h, history))
}
