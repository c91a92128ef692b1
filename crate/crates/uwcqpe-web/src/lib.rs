//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Each operation has a plain Rust form returning JSON (used by the tests)
//! and a `#[wasm_bindgen]` wrapper that turns errors into JS exceptions.

use num_complex::Complex64;
use serde::Serialize;
use uwcqpe::costmodel::{self, CostConfig};
use uwcqpe::integrals::parse_fcidump;
use uwcqpe::pauli_lcu::{extract_coefficients, jw_matrix, CoefficientTable, PauliString, PauliTerm};
use uwcqpe::rpesim::{self, CircuitBackend, CircuitRound};
use uwcqpe::smm;
use uwcqpe::{Error, Result};
use wasm_bindgen::prelude::*;

const PPP4: &str = include_str!("../../uwcqpe/fixtures/ppp4_mo.fcidump");
pub const MAX_POINTS: usize = 200;
pub const MAX_SHOTS: u64 = 50_000;
/// Cap on simulated rotations per damping request (Σ_r shots·r), about two
/// seconds in a browser.
pub const MAX_DAMPING_WORK: u64 = 25_000_000;

fn log_grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
        return Err(Error::Domain(format!("need 0 < lo <= hi, got [{lo}, {hi}]")));
    }
    if !(1..=MAX_POINTS).contains(&points) {
        return Err(Error::Domain(format!("points must be in 1..={MAX_POINTS}")));
    }
    if points == 1 {
        return Ok(vec![lo]);
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..points).map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp()).collect())
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("serializable")
}

#[derive(Serialize)]
struct CostPoint {
    epsilon: f64,
    xi: f64,
    delta: f64,
    #[serde(rename = "M")]
    m_final: u32,
    #[serde(rename = "G_total")]
    g_total: f64,
    #[serde(rename = "baseline_G_total")]
    baseline_g_total: f64,
}

#[derive(Serialize)]
struct CostSweep {
    lambda: f64,
    n_terms: usize,
    points: Vec<CostPoint>,
}

/// The bundled 4-site PPP Hamiltonian as a sorted coefficient table.
pub fn demo_table() -> CoefficientTable {
    extract_coefficients(&parse_fcidump(PPP4).expect("bundled fixture parses")).prepare_sorted()
}

/// Total gate count of the bundled Hamiltonian as `param` ("epsilon" or "xi")
/// sweeps a log grid, holding the other at its given value.
pub fn cost_sweep_json(param: &str, lo: f64, hi: f64, points: usize, epsilon: f64, xi: f64) -> Result<String> {
    let table = demo_table();
    let mut out = Vec::with_capacity(points);
    for v in log_grid(lo, hi, points)? {
        let cfg = match param {
            "epsilon" => CostConfig { epsilon: v, xi, ..Default::default() },
            "xi" => CostConfig { epsilon, xi: v, ..Default::default() },
            other => return Err(Error::Config(format!("unknown sweep parameter {other:?}"))),
        };
        let b = costmodel::total_cost(&table, &cfg)?;
        out.push(CostPoint {
            epsilon: cfg.epsilon,
            xi: cfg.xi,
            delta: b.delta,
            m_final: b.m_final,
            g_total: b.g_total,
            baseline_g_total: b.baseline_g_total,
        });
    }
    Ok(to_json(&CostSweep { lambda: table.l1_norm(), n_terms: table.len(), points: out }))
}

#[derive(Serialize)]
struct DampingPoint {
    r: u64,
    exact: f64,
    gaussian: f64,
    sampled: Option<f64>,
    sampled_se: Option<f64>,
}

#[derive(Serialize)]
struct DampingCurve {
    tau: f64,
    lambda: f64,
    ground_energy: f64,
    points: Vec<DampingPoint>,
}

/// Two-qubit toy Hamiltonian used by the damping demo.
pub fn toy_table() -> CoefficientTable {
    let terms = [("ZI", 0.6), ("IZ", -0.4), ("XX", 0.3), ("YY", 0.2), ("ZZ", 0.1), ("XI", -0.05)]
        .iter()
        .map(|&(l, c)| PauliTerm { pauli: PauliString::from_label(l).expect("valid label"), coefficient: c })
        .collect();
    CoefficientTable::new(2, 0.0, terms).expect("valid table").prepare_sorted()
}

/// Magnitude of the mean qDRIFT amplitude on the toy ground state after `r`
/// fully randomized steps of angle `tau`, for `r = 1..=r_max`.
///
/// `exact` is the closed form, `gaussian` its small-τ limit, and `sampled`
/// (when `shots > 0`) the mean over simulated circuits.
pub fn qdrift_damping_json(tau: f64, r_max: u64, shots: u64, seed: u64) -> Result<String> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::Domain("tau must be positive".into()));
    }
    if !(1..=MAX_POINTS as u64).contains(&r_max) {
        return Err(Error::Domain(format!("r_max must be in 1..={MAX_POINTS}")));
    }
    if shots > MAX_SHOTS {
        return Err(Error::Domain(format!("at most {MAX_SHOTS} shots per point")));
    }
    if shots * r_max * (r_max + 1) / 2 > MAX_DAMPING_WORK {
        return Err(Error::Domain("too many shots for this r_max; lower one of them".into()));
    }
    let table = toy_table();
    let lambda = table.l1_norm();
    let h = jw_matrix(&table)?;
    let all: Vec<usize> = (0..h.nrows()).collect();
    let psi = rpesim::mixed_eigenstate(&h, &all, 1.0)?;
    let e0: f64 = (0..h.nrows())
        .flat_map(|i| (0..h.ncols()).map(move |j| (i, j)))
        .map(|(i, j)| (psi[i].conj() * h[(i, j)] * psi[j]).re)
        .sum();
    let x = e0 / lambda;

    let mut points = Vec::with_capacity(r_max as usize);
    for r in 1..=r_max {
        let rf = r as f64;
        let exact = ((1.0 + tau * tau * x * x) / (1.0 + tau * tau)).powf(rf / 2.0);
        let gaussian = (-0.5 * rf * tau * tau * (1.0 - x * x)).exp();
        let (sampled, sampled_se) = if shots == 0 {
            (None, None)
        } else {
            let b = CircuitBackend::new(&table, psi.clone(), tau * rf / lambda, vec![CircuitRound { l_d: 0, g_rand: r }])?;
            let mut sum = Complex64::new(0.0, 0.0);
            let mut sq = 0.0;
            for s in 0..shots {
                let z = b.amplitude(0, &mut rpesim::shot_rng(seed, r as u32, s))?;
                sum += z;
                sq += z.norm_sqr();
            }
            let n = shots as f64;
            let mean = sum / n;
            let var = if shots > 1 { (sq - n * mean.norm_sqr()) / (n - 1.0) } else { 0.0 };
            (Some(mean.norm()), Some((var.max(0.0) / n).sqrt()))
        };
        points.push(DampingPoint { r, exact, gaussian, sampled, sampled_se });
    }
    Ok(to_json(&DampingCurve { tau, lambda, ground_energy: e0, points }))
}

#[derive(Serialize)]
struct Layout {
    #[serde(rename = "N_L")]
    n_l: u64,
    #[serde(rename = "N_patch")]
    n_patch: u64,
    d: u32,
    clifford_error: f64,
    physical_qubits_per_qpu: u64,
    qpu_parallelism_k_star: u64,
}

/// Code distance and qubit count for `n_qubits` system qubits running a
/// circuit of `c_total` SMM clocks.
pub fn smm_layout_json(n_qubits: usize, c_total: f64, p_ph: f64, q_budget: u64, d_max: u32) -> Result<String> {
    let n_l = smm::logical_qubits(n_qubits);
    let n_patch = smm::patches(n_l);
    let d = smm::choose_distance(n_patch, c_total, p_ph, d_max)?;
    let q = smm::physical_qubits(n_patch, d);
    Ok(to_json(&Layout {
        n_l,
        n_patch,
        d,
        clifford_error: smm::clifford_error(p_ph, d)?,
        physical_qubits_per_qpu: q,
        qpu_parallelism_k_star: q_budget / q,
    }))
}

fn js<T>(r: Result<T>) -> std::result::Result<T, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn cost_sweep(param: &str, lo: f64, hi: f64, points: usize, epsilon: f64, xi: f64) -> std::result::Result<String, JsError> {
    js(cost_sweep_json(param, lo, hi, points, epsilon, xi))
}

#[wasm_bindgen]
pub fn qdrift_damping(tau: f64, r_max: u32, shots: u32, seed: u32) -> std::result::Result<String, JsError> {
    js(qdrift_damping_json(tau, r_max.into(), shots.into(), seed.into()))
}

#[wasm_bindgen]
pub fn smm_layout(n_qubits: usize, c_total: f64, p_ph: f64, q_budget: f64, d_max: u32) -> std::result::Result<String, JsError> {
    js(smm_layout_json(n_qubits, c_total, p_ph, q_budget as u64, d_max))
}
