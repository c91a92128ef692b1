//! Robust phase estimation on small dense problems.
//!
//! Three signal sources drive the same round loop: the exact spectral
//! signal (infinite-sample), Bernoulli-sampled Hadamard tests on that
//! signal, and statevector runs of the partially randomized product formula
//! where every shot draws a fresh qDRIFT realization.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::costmodel::{self, CostConfig, SortedMagnitudes};
use crate::pauli_lcu::{CoefficientTable, PauliString};
use crate::{par, Error, Result};

/// Dense spectral backends (`2^14` amplitudes).
pub const MAX_SPECTRAL_QUBITS: usize = 14;
pub const MAX_CIRCUIT_QUBITS: usize = 12;
/// `|Z̄_m|` below this leaves the phase undefined.
pub const PHASE_FLOOR: f64 = 1e-6;
pub const DEFAULT_MARGIN: f64 = 0.05;

const NORM_TOL: f64 = 1e-12;

/// `min_n |a − b + 2πn|`.
pub fn modular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

/// Representative in `(−π, π]`.
pub fn wrap_angle(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y <= -PI {
        y + 2.0 * PI
    } else {
        y
    }
}

/// Candidate `(phase + 2πk)/2^m`, `k ∈ 0..2^m`, closest to `prev` in the 2π-modular sense.
pub fn candidate_update(phase: f64, m: u32, prev: f64) -> f64 {
    let t = 2f64.powi(m as i32);
    let base = phase / t;
    let spacing = 2.0 * PI / t;
    let k0 = ((prev - base) / spacing).round();
    let mut best = f64::NAN;
    let mut best_d = f64::INFINITY;
    // The modular nearest sits at k0 (mod 2^m); neighbours guard against rounding at ties.
    for dk in [-1.0, 0.0, 1.0] {
        let k = (k0 + dk).rem_euclid(t);
        let c = base + k * spacing;
        let d = modular_distance(c, prev);
        if d < best_d - 1e-15 {
            best_d = d;
            best = c;
        }
    }
    best
}

/// `E = shift + scale·ϑ` between physical energies and RPE phases.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyMap {
    pub shift: f64,
    pub scale: f64,
}

impl EnergyMap {
    pub const IDENTITY: EnergyMap = EnergyMap { shift: 0.0, scale: 1.0 };

    /// Map `[lo, hi]` into `|ϑ| ≤ π(1 − margin)`; identity when it already fits.
    pub fn fit(lo: f64, hi: f64, margin: f64) -> Result<Self> {
        if !(lo <= hi) || !(0.0..1.0).contains(&margin) {
            return Err(Error::Domain("invalid energy window".into()));
        }
        let limit = PI * (1.0 - margin);
        if lo.abs() <= limit && hi.abs() <= limit {
            return Ok(Self::IDENTITY);
        }
        let shift = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        Ok(Self { shift, scale: (half / limit).max(f64::MIN_POSITIVE) })
    }

    pub fn to_phase(&self, e: f64) -> f64 {
        (e - self.shift) / self.scale
    }

    pub fn to_energy(&self, theta: f64) -> f64 {
        self.shift + self.scale * theta
    }
}

/// Gershgorin interval containing the spectrum of a Hermitian matrix.
pub fn gershgorin_bounds(h: &DMatrix<Complex64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..h.nrows() {
        let r: f64 = (0..h.ncols()).filter(|&j| j != i).map(|j| h[(i, j)].norm()).sum();
        lo = lo.min(h[(i, i)].re - r);
        hi = hi.max(h[(i, i)].re + r);
    }
    (lo, hi)
}

fn check_hermitian(h: &DMatrix<Complex64>) -> Result<()> {
    if h.nrows() != h.ncols() {
        return Err(Error::Domain("Hamiltonian must be square".into()));
    }
    let dev = (h - h.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if dev > NORM_TOL * h.iter().map(|z| z.norm()).fold(1.0, f64::max) {
        return Err(Error::Domain(format!("Hamiltonian is not Hermitian (deviation {dev:e})")));
    }
    Ok(())
}

fn check_state(psi: &[Complex64], dim: usize) -> Result<()> {
    if psi.len() != dim {
        return Err(Error::Domain(format!("state has {} amplitudes, expected {dim}", psi.len())));
    }
    let norm: f64 = psi.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(Error::Domain(format!("state norm {norm} differs from 1")));
    }
    Ok(())
}

fn dense_size_guard(dim: usize, max_qubits: usize) -> Result<()> {
    if !dim.is_power_of_two() || dim > 1 << max_qubits {
        return Err(Error::Domain(format!("dense simulation limited to {max_qubits} qubits (dimension {dim})")));
    }
    Ok(())
}

/// `g(t) = Σ p_k e^{−itE_k}` with phases already mapped into `(−π, π)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralSignal {
    energies: Vec<f64>,
    weights: Vec<f64>,
    map: EnergyMap,
}

impl SpectralSignal {
    pub fn from_parts(energies: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if energies.len() != weights.len() || energies.is_empty() {
            return Err(Error::Domain("energies and weights must be non-empty and equally long".into()));
        }
        if weights.iter().any(|w| !(*w >= 0.0)) || (weights.iter().sum::<f64>() - 1.0).abs() > NORM_TOL {
            return Err(Error::Domain("weights must be a probability vector".into()));
        }
        Ok(Self { energies, weights, map: EnergyMap::IDENTITY })
    }

    /// Eigendecomposition of `h` and overlaps with `psi`, mapped with `map`.
    pub fn from_matrix(h: &DMatrix<Complex64>, psi: &[Complex64], map: EnergyMap) -> Result<Self> {
        check_hermitian(h)?;
        dense_size_guard(h.nrows(), MAX_SPECTRAL_QUBITS)?;
        check_state(psi, h.nrows())?;
        let eig = h.clone().symmetric_eigen();
        let mut energies = Vec::with_capacity(h.nrows());
        let mut weights = Vec::with_capacity(h.nrows());
        for k in 0..h.nrows() {
            let col = eig.eigenvectors.column(k);
            let ov: Complex64 = col.iter().zip(psi).map(|(v, p)| v.conj() * p).sum();
            energies.push(map.to_phase(eig.eigenvalues[k]));
            weights.push(ov.norm_sqr());
        }
        Ok(Self { energies, weights, map })
    }

    /// As [`Self::from_matrix`] with the map fitted to the Gershgorin interval.
    pub fn from_matrix_auto(h: &DMatrix<Complex64>, psi: &[Complex64], margin: f64) -> Result<Self> {
        let (lo, hi) = gershgorin_bounds(h);
        Self::from_matrix(h, psi, EnergyMap::fit(lo, hi, margin)?)
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn map(&self) -> EnergyMap {
        self.map
    }

    /// Phase of the component with the largest weight (lowest energy on ties).
    pub fn dominant_phase(&self) -> f64 {
        let mut best = 0;
        for k in 1..self.energies.len() {
            let (w, wb) = (self.weights[k], self.weights[best]);
            if w > wb + 1e-15 || ((w - wb).abs() <= 1e-15 && self.energies[k] < self.energies[best]) {
                best = k;
            }
        }
        self.energies[best]
    }

    pub fn signal(&self, t: f64) -> Complex64 {
        self.energies.iter().zip(&self.weights).map(|(e, p)| Complex64::from_polar(*p, -t * e)).sum()
    }

    /// Every phase shifted by `c`.
    pub fn shifted(&self, c: f64) -> Self {
        Self { energies: self.energies.iter().map(|e| e + c).collect(), ..self.clone() }
    }
}

/// `√p0·|E₀⟩ + √(1−p0)·|E₁⟩` from the two lowest eigenvectors of `h`
/// restricted to the basis states `sector`.
pub fn mixed_eigenstate(h: &DMatrix<Complex64>, sector: &[usize], p0: f64) -> Result<Vec<Complex64>> {
    check_hermitian(h)?;
    if !(0.0..=1.0).contains(&p0) {
        return Err(Error::Domain("overlap must lie in [0, 1]".into()));
    }
    if sector.len() < 2 && p0 < 1.0 {
        return Err(Error::Domain("sector has no excited state to mix in".into()));
    }
    let sub = DMatrix::from_fn(sector.len(), sector.len(), |i, j| h[(sector[i], sector[j])]);
    let eig = sub.symmetric_eigen();
    let mut order: Vec<usize> = (0..sector.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut psi = vec![Complex64::new(0.0, 0.0); h.nrows()];
    for (i, &b) in sector.iter().enumerate() {
        psi[b] = eig.eigenvectors[(i, order[0])] * p0.sqrt();
        if p0 < 1.0 {
            psi[b] += eig.eigenvectors[(i, order[1])] * (1.0 - p0).sqrt();
        }
    }
    Ok(psi)
}

/// Basis states of `2n` spin orbitals (blocked order) with the given occupations.
pub fn sector_basis(n_orbitals: usize, n_alpha: usize, n_beta: usize) -> Vec<usize> {
    let up = (1usize << n_orbitals) - 1;
    (0..1usize << (2 * n_orbitals))
        .filter(|b| (b & up).count_ones() as usize == n_alpha && (b >> n_orbitals).count_ones() as usize == n_beta)
        .collect()
}

/// Partition and randomized budget used in one RPE round.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitRound {
    pub l_d: usize,
    pub g_rand: u64,
}

#[derive(Clone, Debug)]
struct PreparedRound {
    l_d: usize,
    g_rand: u64,
    lambda_r: f64,
    cdf: Vec<f64>,
}

/// Statevector model of `S₂(δ)^{2^m}` with a qDRIFT middle block.
#[derive(Clone, Debug)]
pub struct CircuitBackend {
    n_qubits: usize,
    terms: Vec<(PauliString, f64)>,
    constant: f64,
    delta: f64,
    psi: Vec<Complex64>,
    rounds: Vec<PreparedRound>,
}

impl CircuitBackend {
    pub fn new(table: &CoefficientTable, psi: Vec<Complex64>, delta: f64, rounds: Vec<CircuitRound>) -> Result<Self> {
        if !table.is_sorted() {
            return Err(Error::Domain("circuit backend needs a sorted coefficient table".into()));
        }
        if table.n_qubits() > MAX_CIRCUIT_QUBITS {
            return Err(Error::Domain(format!(
                "circuit simulation limited to {MAX_CIRCUIT_QUBITS} qubits, got {}",
                table.n_qubits()
            )));
        }
        if !(delta > 0.0) {
            return Err(Error::Domain("Trotter step must be positive".into()));
        }
        check_state(&psi, 1 << table.n_qubits())?;
        let terms: Vec<(PauliString, f64)> = table.terms().iter().map(|t| (t.pauli, t.coefficient)).collect();
        let rounds = rounds
            .into_iter()
            .map(|r| {
                if r.l_d > terms.len() {
                    return Err(Error::Domain(format!("L_D={} exceeds {} terms", r.l_d, terms.len())));
                }
                let mut acc = 0.0;
                let cdf: Vec<f64> = terms[r.l_d..]
                    .iter()
                    .map(|(_, c)| {
                        acc += c.abs();
                        acc
                    })
                    .collect();
                Ok(PreparedRound { l_d: r.l_d, g_rand: r.g_rand, lambda_r: acc, cdf })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { n_qubits: table.n_qubits(), terms, constant: table.constant(), delta, psi, rounds })
    }

    /// Partitions and budgets from the cost model for rounds `0..=m_final`.
    pub fn from_cost_model(
        table: &CoefficientTable,
        psi: Vec<Complex64>,
        delta: f64,
        m_final: u32,
        cost: &CostConfig,
    ) -> Result<Self> {
        let mags = SortedMagnitudes::from_table(table)?;
        let rounds = (0..=m_final)
            .map(|m| {
                let r = costmodel::round_cost_sorted(&mags, m, delta, cost);
                CircuitRound { l_d: r.l_d, g_rand: r.g_rand }
            })
            .collect();
        Self::new(table, psi, delta, rounds)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn n_rounds(&self) -> usize {
        self.rounds.len()
    }

    /// Phases are `δ·(E − constant)`.
    pub fn map(&self) -> EnergyMap {
        EnergyMap { shift: self.constant, scale: 1.0 / self.delta }
    }

    pub fn partition(&self, m: u32) -> Option<CircuitRound> {
        self.rounds.get(m as usize).map(|r| CircuitRound { l_d: r.l_d, g_rand: r.g_rand })
    }

    /// Effective qDRIFT timestep `τ = λ_R·2^m·δ / G_rand` (zero without a randomized block).
    pub fn tau(&self, m: u32) -> f64 {
        match self.rounds.get(m as usize) {
            Some(r) if r.g_rand > 0 && r.lambda_r > 0.0 => r.lambda_r * 2f64.powi(m as i32) * self.delta / r.g_rand as f64,
            _ => 0.0,
        }
    }

    /// `⟨ψ|W|ψ⟩` for one sampled realization of the round-`m` circuit.
    pub fn amplitude(&self, m: u32, rng: &mut impl Rng) -> Result<Complex64> {
        let r = self
            .rounds
            .get(m as usize)
            .ok_or_else(|| Error::Domain(format!("no circuit partition for round {m}")))?;
        let steps = 1u64 << m;
        let phi = -self.tau(m).atan();
        let (base, rem) = (r.g_rand / steps, r.g_rand % steps);
        let det = &self.terms[..r.l_d];
        let rand = &self.terms[r.l_d..];
        let mut v = self.psi.clone();
        for s in 0..steps {
            for (p, c) in det {
                p.rotate(-0.5 * self.delta * c, &mut v);
            }
            let count = base + u64::from(s >= steps - rem);
            if r.lambda_r > 0.0 {
                for _ in 0..count {
                    let u = rng.gen::<f64>() * r.lambda_r;
                    let k = r.cdf.partition_point(|&c| c <= u).min(rand.len() - 1);
                    let (p, c) = &rand[k];
                    p.rotate(phi * c.signum(), &mut v);
                }
            }
            for (p, c) in det.iter().rev() {
                p.rotate(-0.5 * self.delta * c, &mut v);
            }
        }
        Ok(self.psi.iter().zip(&v).map(|(a, b)| a.conj() * b).sum())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RpeMode {
    Exact,
    Sampled,
    Circuit,
}

#[derive(Clone, Debug)]
pub enum SignalBackend {
    /// Infinite-sample mode: `Z̄_m = g(2^m)`.
    Exact(SpectralSignal),
    SampledExact(SpectralSignal),
    Circuit(CircuitBackend),
}

impl SignalBackend {
    pub fn mode(&self) -> RpeMode {
        match self {
            SignalBackend::Exact(_) => RpeMode::Exact,
            SignalBackend::SampledExact(_) => RpeMode::Sampled,
            SignalBackend::Circuit(_) => RpeMode::Circuit,
        }
    }

    pub fn map(&self) -> EnergyMap {
        match self {
            SignalBackend::Exact(s) | SignalBackend::SampledExact(s) => s.map(),
            SignalBackend::Circuit(c) => c.map(),
        }
    }
}

/// Independent stream for shot `shot` of round `m`.
pub fn shot_rng(seed: u64, m: u32, shot: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream((u64::from(m) << 40) | shot);
    r
}

/// Hadamard-test estimate from `n_shots/2` real-part and `n_shots/2` imaginary-part shots.
/// `amplitude` gives the per-shot expectation `⟨ψ|W|ψ⟩`.
pub fn hadamard_shots<F>(amplitude: F, n_shots: u64, seed: u64, m: u32) -> Result<Complex64>
where
    F: Fn(&mut ChaCha8Rng) -> Result<Complex64> + Sync,
{
    if n_shots == 0 || n_shots % 2 == 1 {
        return Err(Error::Domain(format!("shot count must be even and positive, got {n_shots}")));
    }
    let half = n_shots / 2;
    let outcomes: Vec<Result<(bool, bool)>> = par::map_indexed(n_shots as usize, |i| {
        let mut rng = shot_rng(seed, m, i as u64);
        let a = amplitude(&mut rng)?;
        let imag = i as u64 >= half;
        let p = 0.5 * (1.0 + if imag { a.im } else { a.re });
        Ok((imag, rng.gen::<f64>() < p))
    });
    let mut plus = [0i64; 2];
    for o in outcomes {
        let (imag, up) = o?;
        if up {
            plus[imag as usize] += 1;
        }
    }
    let mean = |k: i64| (2 * k - half as i64) as f64 / half as f64;
    Ok(Complex64::new(mean(plus[0]), mean(plus[1])))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RpeConfig {
    pub xi: f64,
    pub eta: f64,
    pub alpha_hoeffding: f64,
    pub m_final: u32,
    pub seed: u64,
}

impl Default for RpeConfig {
    fn default() -> Self {
        Self { xi: 0.1, eta: 0.95, alpha_hoeffding: 10.0, m_final: 6, seed: 0 }
    }
}

impl RpeConfig {
    fn schedule(&self) -> Result<Vec<u64>> {
        let c = CostConfig { xi: self.xi, eta: self.eta, alpha_hoeffding: self.alpha_hoeffding, ..CostConfig::default() };
        c.validate()?;
        costmodel::sample_schedule(&c, self.m_final)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub m: u32,
    pub t_m: u64,
    #[serde(rename = "N_m")]
    pub n_m: u64,
    pub z_re: f64,
    pub z_im: f64,
    pub theta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RpeRun {
    pub mode: RpeMode,
    pub config: RpeConfig,
    pub rounds: Vec<RoundRecord>,
    /// Final candidate `ϑ_M` as selected.
    pub theta_star: f64,
    pub energy_map: EnergyMap,
    /// `shift + scale·wrap(ϑ*)`.
    pub energy: f64,
}

/// Run rounds `0..=M`; ϑ tracks `−arg Z̄_m / 2^m` since `g(t) ∝ e^{−itE}`.
pub fn rpe_run(backend: &SignalBackend, cfg: &RpeConfig) -> Result<RpeRun> {
    let schedule = cfg.schedule()?;
    if let SignalBackend::Circuit(c) = backend {
        if c.n_rounds() <= cfg.m_final as usize {
            return Err(Error::Config(format!("circuit has {} rounds, RPE needs {}", c.n_rounds(), cfg.m_final + 1)));
        }
    }
    let mut prev = 0.0;
    let mut rounds = Vec::with_capacity(schedule.len());
    for (m, &n_m) in schedule.iter().enumerate() {
        let m = m as u32;
        let t = 2f64.powi(m as i32);
        let z = match backend {
            SignalBackend::Exact(s) => s.signal(t),
            SignalBackend::SampledExact(s) => {
                let g = s.signal(t);
                hadamard_shots(|_| Ok(g), n_m, cfg.seed, m)?
            }
            SignalBackend::Circuit(c) => hadamard_shots(|rng| c.amplitude(m, rng), n_m, cfg.seed, m)?,
        };
        if z.norm() < PHASE_FLOOR {
            return Err(Error::RoundFailure { round: m as usize, msg: format!("|Z̄| = {:e} leaves the phase undefined", z.norm()) });
        }
        prev = candidate_update(-z.arg(), m, prev);
        rounds.push(RoundRecord { m, t_m: 1 << m, n_m, z_re: z.re, z_im: z.im, theta: prev });
    }
    let map = backend.map();
    Ok(RpeRun {
        mode: backend.mode(),
        config: cfg.clone(),
        rounds,
        theta_star: prev,
        energy_map: map,
        energy: map.to_energy(wrap_angle(prev)),
    })
}
