//! Spectrum-preserving transforms of electron integrals: orbital rotations,
//! particle-number BLISS, spin-extended BLISS, and the Cholesky-basis
//! starting points.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::integrals::{ElectronIntegrals, Representation, Tensor4};
use crate::pauli_lcu::{l1_of, monomials::IntegralGrad};
use crate::{par, Error, Result};

pub const CHOLESKY_TOL: f64 = 1e-8;

/// Number of independent entries of a symmetric `n × n` matrix.
pub fn tri_len(n: usize) -> usize {
    n * (n + 1) / 2
}

fn symmetric_from_tri(n: usize, v: &[f64]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    let mut k = 0;
    for p in 0..n {
        for q in p..n {
            m[(p, q)] = v[k];
            m[(q, p)] = v[k];
            k += 1;
        }
    }
    m
}

fn tri_fold(d: &DMatrix<f64>, out: &mut Vec<f64>) {
    let n = d.nrows();
    for p in 0..n {
        for q in p..n {
            out.push(if p == q { d[(p, p)] } else { d[(p, q)] + d[(q, p)] });
        }
    }
}

fn check_symmetric(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if (m - m.transpose()).amax() > 1e-12 {
        return Err(Error::Domain(format!("{what} is not symmetric")));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Orbital rotations

/// Skew-symmetric `K` with `K[p,q] = κ` for `p < q`, row-major over the upper triangle.
pub fn skew_from_kappa(n: usize, kappa: &[f64]) -> Result<DMatrix<f64>> {
    if kappa.len() != n * n.saturating_sub(1) / 2 {
        return Err(Error::Domain(format!("expected {} rotation parameters, got {}", n * n.saturating_sub(1) / 2, kappa.len())));
    }
    if kappa.iter().any(|k| !k.is_finite()) {
        return Err(Error::Domain("non-finite rotation parameter".into()));
    }
    let mut k = DMatrix::zeros(n, n);
    let mut i = 0;
    for p in 0..n {
        for q in p + 1..n {
            k[(p, q)] = kappa[i];
            k[(q, p)] = -kappa[i];
            i += 1;
        }
    }
    Ok(k)
}

/// Unitary diagonalization `iK = V diag(w) V†`.
struct SkewEigen {
    v: DMatrix<Complex64>,
    w: Vec<f64>,
}

impl SkewEigen {
    fn new(k: &DMatrix<f64>) -> Self {
        let ik = k.map(|x| Complex64::new(0.0, x));
        let eig = ik.symmetric_eigen();
        Self { v: eig.eigenvectors, w: eig.eigenvalues.iter().copied().collect() }
    }

    /// `exp(-K) = V diag(e^{i w}) V†`.
    fn exp_neg(&self) -> DMatrix<f64> {
        let n = self.w.len();
        let d = DMatrix::from_fn(n, n, |a, b| if a == b { Complex64::from_polar(1.0, self.w[a]) } else { Complex64::new(0.0, 0.0) });
        (&self.v * d * self.v.adjoint()).map(|z| z.re)
    }

    /// Gradient with respect to `A = -K` of `⟨Ū, exp(A)⟩` (Daleckii–Krein form).
    fn exp_pullback(&self, u_bar: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.w.len();
        let ub = u_bar.map(|x| Complex64::new(x, 0.0));
        let b = self.v.adjoint() * ub * &self.v;
        let phi = DMatrix::from_fn(n, n, |a, c| {
            let (wa, wc) = (self.w[a], self.w[c]);
            let half = 0.5 * (wa - wc);
            let sinc = if half.abs() < 1e-8 { 1.0 - half * half / 6.0 } else { half.sin() / half };
            Complex64::from_polar(sinc, 0.5 * (wa + wc))
        });
        let m = b.component_mul(&phi.map(|z| z.conj()));
        (&self.v * m * self.v.adjoint()).map(|z| z.re)
    }
}

/// `U = exp(-K(κ))`, orthogonal to machine precision.
pub fn rotation_from_kappa(n: usize, kappa: &[f64]) -> Result<DMatrix<f64>> {
    let k = skew_from_kappa(n, kappa)?;
    Ok(SkewEigen::new(&k).exp_neg())
}

/// Rotate every block by an orthogonal `u`: `h' = Uᵀ h U`, `g'` on all four indices.
pub fn rotate_integrals(x: &ElectronIntegrals, u: &DMatrix<f64>) -> Result<ElectronIntegrals> {
    let n = x.n_orbitals;
    if u.nrows() != n || u.ncols() != n {
        return Err(Error::Domain("rotation has the wrong shape".into()));
    }
    let dev = (u.transpose() * u - DMatrix::<f64>::identity(n, n)).amax();
    if !(dev <= 1e-10) {
        return Err(Error::Domain(format!("rotation is not orthogonal (deviation {dev:e})")));
    }
    let rot_h = |h: &DMatrix<f64>| u.transpose() * h * u;
    let repr = match &x.repr {
        Representation::Restricted { h, g } => Representation::Restricted { h: rot_h(h), g: g.rotate(u) },
        Representation::SpinResolved { h, g_same, g_mixed } => Representation::SpinResolved {
            h: [rot_h(&h[0]), rot_h(&h[1])],
            g_same: [g_same[0].rotate(u), g_same[1].rotate(u)],
            g_mixed: g_mixed.rotate(u),
        },
    };
    Ok(ElectronIntegrals { repr, ..x.clone() })
}

pub fn apply_orbital_rotation(x: &ElectronIntegrals, kappa: &[f64]) -> Result<ElectronIntegrals> {
    let u = rotation_from_kappa(x.n_orbitals, kappa)?;
    rotate_integrals(x, &u)
}

/// `∂/∂U` of `⟨ḡ', rotate(g, U)⟩`.
fn rotate_pullback_g(g: &Tensor4, g_bar: &Tensor4, u: &DMatrix<f64>) -> DMatrix<f64> {
    let n = g.dim();
    let mut out = DMatrix::zeros(n, n);
    for axis in 0..4 {
        let mut t = g.clone();
        for other in 0..4 {
            if other != axis {
                t = t.transform_axis(other, u);
            }
        }
        // out[a, b] += Σ over the other three indices of t[.., a, ..] · ḡ'[.., b, ..].
        let stride = n.pow(3 - axis as u32);
        let block = stride * n;
        let (td, gd) = (t.data(), g_bar.data());
        for outer in (0..td.len()).step_by(block) {
            for inner in 0..stride {
                for a in 0..n {
                    let ta = td[outer + a * stride + inner];
                    if ta == 0.0 {
                        continue;
                    }
                    for b in 0..n {
                        out[(a, b)] += ta * gd[outer + b * stride + inner];
                    }
                }
            }
        }
    }
    out
}

fn rotate_pullback_h(h: &DMatrix<f64>, h_bar: &DMatrix<f64>, u: &DMatrix<f64>) -> DMatrix<f64> {
    h * u * h_bar.transpose() + h.transpose() * u * h_bar
}

// ---------------------------------------------------------------------------
// BLISS

#[derive(Clone, Debug, PartialEq)]
pub struct BlissParams {
    pub mu1: f64,
    pub mu2: f64,
    pub xi: DMatrix<f64>,
}

impl BlissParams {
    pub fn zeros(n: usize) -> Self {
        Self { mu1: 0.0, mu2: 0.0, xi: DMatrix::zeros(n, n) }
    }

    pub fn n_params(n: usize) -> usize {
        2 + tri_len(n)
    }

    pub fn from_vec(n: usize, v: &[f64]) -> Result<Self> {
        if v.len() != Self::n_params(n) {
            return Err(Error::Domain(format!("expected {} BLISS parameters, got {}", Self::n_params(n), v.len())));
        }
        Ok(Self { mu1: v[0], mu2: v[1], xi: symmetric_from_tri(n, &v[2..]) })
    }
}

fn shift_g(g: &mut Tensor4, diag: f64, a: &DMatrix<f64>, b: &DMatrix<f64>) {
    // g[p,q,r,s] += diag·δpq·δrs + a[p,q]·δrs + b[r,s]·δpq
    let n = g.dim();
    for p in 0..n {
        for q in 0..n {
            for r in 0..n {
                g.add(p, q, r, r, a[(p, q)]);
                g.add(r, r, p, q, b[(p, q)]);
            }
        }
        for r in 0..n {
            g.add(p, p, r, r, diag);
        }
    }
}

/// Subtract the particle-number operator combination.
pub fn apply_bliss(x: &ElectronIntegrals, params: &BlissParams) -> Result<ElectronIntegrals> {
    let n = x.n_orbitals;
    check_symmetric(&params.xi, "BLISS ξ")?;
    let ne = x.n_electrons() as f64;
    let id = DMatrix::<f64>::identity(n, n);
    let dh = &params.xi * (ne - 1.0) - &id * (params.mu1 + params.mu2);
    let neg_xi = -&params.xi;
    let update = |g: &mut Tensor4| shift_g(g, -2.0 * params.mu2, &neg_xi, &neg_xi);
    let mut out = x.clone();
    match &mut out.repr {
        Representation::Restricted { h, g } => {
            *h += &dh;
            update(g);
        }
        Representation::SpinResolved { h, g_same, g_mixed } => {
            for hs in h.iter_mut() {
                *hs += &dh;
            }
            for gs in g_same.iter_mut() {
                update(gs);
            }
            update(g_mixed);
        }
    }
    out.core_energy += params.mu1 * ne + params.mu2 * ne * ne;
    Ok(out)
}

// ---------------------------------------------------------------------------
// Spin-extended BLISS

#[derive(Clone, Debug, PartialEq)]
pub struct SpinBlissParams {
    pub nu: [f64; 3],
    pub zeta: [DMatrix<f64>; 3],
}

impl SpinBlissParams {
    pub fn zeros(n: usize) -> Self {
        Self { nu: [0.0; 3], zeta: [DMatrix::zeros(n, n), DMatrix::zeros(n, n), DMatrix::zeros(n, n)] }
    }

    pub fn n_params(n: usize) -> usize {
        3 + 3 * tri_len(n)
    }

    pub fn from_vec(n: usize, v: &[f64]) -> Result<Self> {
        if v.len() != Self::n_params(n) {
            return Err(Error::Domain(format!("expected {} spin-BLISS parameters, got {}", Self::n_params(n), v.len())));
        }
        let t = tri_len(n);
        let z = |j: usize| symmetric_from_tri(n, &v[3 + j * t..3 + (j + 1) * t]);
        Ok(Self { nu: [v[0], v[1], v[2]], zeta: [z(0), z(1), z(2)] })
    }
}

const SIGMA: [f64; 2] = [1.0, -1.0];

/// Spin sign pairs of the stored blocks: ↑↑, ↓↓, ↑↓.
const BLOCK_SPINS: [(f64, f64); 3] = [(1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)];

/// Subtract the spin-resolved symmetry operator; the result is always spin-resolved.
pub fn apply_spin_bliss(x: &ElectronIntegrals, params: &SpinBlissParams) -> Result<ElectronIntegrals> {
    for (j, z) in params.zeta.iter().enumerate() {
        check_symmetric(z, &format!("spin-BLISS ζ{}", j + 1))?;
    }
    let n = x.n_orbitals;
    let ne = x.n_electrons() as f64;
    let sz = x.s_z();
    let [nu1, nu2, nu3] = params.nu;
    let [z1, z2, z3] = &params.zeta;
    let id = DMatrix::<f64>::identity(n, n);
    let mut out = x.to_spin_resolved();
    let Representation::SpinResolved { h, g_same, g_mixed } = &mut out.repr else { unreachable!() };
    for (s, hs) in h.iter_mut().enumerate() {
        let sg = SIGMA[s];
        *hs += &id * (-0.5 * nu1 * sg) + z1 * (sz - 0.5 * sg) + z2 * (sg * (ne - 1.0)) + z3 * (sg * sz - 0.5);
    }
    let blocks: [&mut Tensor4; 3] = {
        let [a, b] = g_same;
        [a, b, g_mixed]
    };
    for (g, &(sg, tg)) in blocks.into_iter().zip(&BLOCK_SPINS) {
        let diag = -0.5 * (nu2 * sg * tg + nu3 * (sg + tg));
        let a = -(z1 * (0.5 * tg) + z2 * sg + z3 * (0.5 * sg * tg));
        let b = -(z1 * (0.5 * sg) + z2 * tg + z3 * (0.5 * sg * tg));
        shift_g(g, diag, &a, &b);
    }
    out.core_energy += nu1 * sz + nu2 * (sz * sz - ne / 4.0) + nu3 * sz * (ne - 1.0);
    Ok(out)
}

// ---------------------------------------------------------------------------
// Parameterized blocks used by the optimizer

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Block {
    OrbitalRotation,
    Bliss,
    SpinBliss,
}

impl Block {
    pub fn n_params(self, n: usize) -> usize {
        match self {
            Block::OrbitalRotation => n * n.saturating_sub(1) / 2,
            Block::Bliss => BlissParams::n_params(n),
            Block::SpinBliss => SpinBlissParams::n_params(n),
        }
    }

    pub fn apply(self, x: &ElectronIntegrals, theta: &[f64]) -> Result<ElectronIntegrals> {
        let n = x.n_orbitals;
        match self {
            Block::OrbitalRotation => apply_orbital_rotation(x, theta),
            Block::Bliss => apply_bliss(x, &BlissParams::from_vec(n, theta)?),
            Block::SpinBliss => apply_spin_bliss(x, &SpinBlissParams::from_vec(n, theta)?),
        }
    }

    /// Vector–Jacobian product: given `∂f/∂(output integrals)`, return `∂f/∂θ` at `theta`.
    pub fn pullback(self, x: &ElectronIntegrals, theta: &[f64], bar: &IntegralGrad) -> Result<Vec<f64>> {
        let n = x.n_orbitals;
        match self {
            Block::OrbitalRotation => {
                let k = skew_from_kappa(n, theta)?;
                let eig = SkewEigen::new(&k);
                let u = eig.exp_neg();
                let v = x.view();
                let mut u_bar = DMatrix::zeros(n, n);
                if x.is_restricted() {
                    let h_bar = &bar.h[0] + &bar.h[1];
                    let mut g_bar = bar.g_same[0].clone();
                    g_bar.scaled_add(1.0, &bar.g_same[1]);
                    g_bar.scaled_add(1.0, &bar.g_mixed);
                    u_bar += rotate_pullback_h(v.h[0], &h_bar, &u);
                    u_bar += rotate_pullback_g(v.g_mixed, &g_bar, &u);
                } else {
                    for s in 0..2 {
                        u_bar += rotate_pullback_h(v.h[s], &bar.h[s], &u);
                        u_bar += rotate_pullback_g(v.g_same[s], &bar.g_same[s], &u);
                    }
                    u_bar += rotate_pullback_g(v.g_mixed, &bar.g_mixed, &u);
                }
                let a_bar = eig.exp_pullback(&u_bar);
                let mut out = Vec::with_capacity(self.n_params(n));
                for p in 0..n {
                    for q in p + 1..n {
                        out.push(-(a_bar[(p, q)] - a_bar[(q, p)]));
                    }
                }
                Ok(out)
            }
            Block::Bliss => {
                let ne = x.n_electrons() as f64;
                let h_bar = &bar.h[0] + &bar.h[1];
                let gs = [&bar.g_same[0], &bar.g_same[1], &bar.g_mixed];
                let mut d_mu2_g = 0.0;
                let mut a = DMatrix::zeros(n, n);
                for g in gs {
                    let (ga, gb, gc) = pair_traces(g);
                    d_mu2_g += gc;
                    a += ga + gb;
                }
                let mut out = vec![-h_bar.trace(), -h_bar.trace() - 2.0 * d_mu2_g];
                tri_fold(&(h_bar * (ne - 1.0) - a), &mut out);
                Ok(out)
            }
            Block::SpinBliss => {
                let ne = x.n_electrons() as f64;
                let sz = x.s_z();
                let mut d_nu = [0.0; 3];
                let mut d_z = [DMatrix::zeros(n, n), DMatrix::zeros(n, n), DMatrix::zeros(n, n)];
                for s in 0..2 {
                    let sg = SIGMA[s];
                    let hb = &bar.h[s];
                    d_nu[0] += -0.5 * sg * hb.trace();
                    d_z[0] += hb * (sz - 0.5 * sg);
                    d_z[1] += hb * (sg * (ne - 1.0));
                    d_z[2] += hb * (sg * sz - 0.5);
                }
                let gs = [&bar.g_same[0], &bar.g_same[1], &bar.g_mixed];
                for (g, &(sg, tg)) in gs.into_iter().zip(&BLOCK_SPINS) {
                    let (ga, gb, gc) = pair_traces(g);
                    d_nu[1] += -0.5 * sg * tg * gc;
                    d_nu[2] += -0.5 * (sg + tg) * gc;
                    d_z[0] -= &ga * (0.5 * tg) + &gb * (0.5 * sg);
                    d_z[1] -= &ga * sg + &gb * tg;
                    d_z[2] -= (&ga + &gb) * (0.5 * sg * tg);
                }
                let mut out = d_nu.to_vec();
                for z in &d_z {
                    tri_fold(z, &mut out);
                }
                Ok(out)
            }
        }
    }
}

/// `(Σ_r ḡ[a,b,r,r], Σ_r ḡ[r,r,a,b], Σ_{p,r} ḡ[p,p,r,r])`.
fn pair_traces(g: &Tensor4) -> (DMatrix<f64>, DMatrix<f64>, f64) {
    let n = g.dim();
    let mut a = DMatrix::zeros(n, n);
    let mut b = DMatrix::zeros(n, n);
    for p in 0..n {
        for q in 0..n {
            for r in 0..n {
                a[(p, q)] += g.get(p, q, r, r);
                b[(p, q)] += g.get(r, r, p, q);
            }
        }
    }
    let c = a.trace();
    (a, b, c)
}

// ---------------------------------------------------------------------------
// Cholesky-basis initialization

#[derive(Clone, Debug)]
pub struct CholeskyFactorization {
    /// `L^(t)` as symmetric `N × N` matrices.
    pub vectors: Vec<DMatrix<f64>>,
    /// Eigenvectors `U^(t)` (columns) and eigenvalues `W^(t)` of each `L^(t)`.
    pub eigen: Vec<(DMatrix<f64>, Vec<f64>)>,
}

impl CholeskyFactorization {
    pub fn rank(&self) -> usize {
        self.vectors.len()
    }
}

/// Pivoted Cholesky of `g` viewed as an `N² × N²` matrix, stopped once the residual diagonal is within `tol`.
pub fn pivoted_cholesky(g: &Tensor4, tol: f64) -> Result<CholeskyFactorization> {
    let n = g.dim();
    let m = n * n;
    let entry = |i: usize, j: usize| g.data()[i * m + j];
    let mut diag: Vec<f64> = (0..m).map(|i| entry(i, i)).collect();
    let mut cols: Vec<Vec<f64>> = Vec::new();
    loop {
        if let Some((i, &d)) = diag.iter().enumerate().find(|(_, &d)| d < -tol) {
            return Err(Error::NotPsd(format!("residual diagonal {d:e} at index {i}")));
        }
        let (piv, &dmax) = diag
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty tensor");
        if dmax <= tol || cols.len() >= m {
            break;
        }
        let scale = dmax.sqrt();
        let col: Vec<f64> = (0..m)
            .map(|i| (entry(i, piv) - cols.iter().map(|c| c[i] * c[piv]).sum::<f64>()) / scale)
            .collect();
        for (d, c) in diag.iter_mut().zip(&col) {
            *d -= c * c;
        }
        diag[piv] = 0.0;
        cols.push(col);
    }
    let vectors: Vec<DMatrix<f64>> = cols
        .iter()
        .map(|c| {
            let l = DMatrix::from_row_slice(n, n, c);
            (&l + l.transpose()) * 0.5
        })
        .collect();
    let eigen = vectors
        .iter()
        .map(|l| {
            let e = l.clone().symmetric_eigen();
            (e.eigenvectors, e.eigenvalues.iter().copied().collect())
        })
        .collect();
    Ok(CholeskyFactorization { vectors, eigen })
}

#[derive(Clone, Debug)]
pub struct Candidate {
    pub integrals: ElectronIntegrals,
    pub rotation: DMatrix<f64>,
    pub lambda: f64,
}

/// Identity basis followed by the eigenbasis of every Cholesky vector.
pub fn cholesky_basis_candidates(x: &ElectronIntegrals, tol: f64) -> Result<Vec<Candidate>> {
    let Representation::Restricted { g, .. } = &x.repr else {
        return Err(Error::Unsupported("Cholesky initialization requires restricted integrals".into()));
    };
    let n = x.n_orbitals;
    let chol = pivoted_cholesky(g, tol)?;
    let mut rotations = vec![DMatrix::<f64>::identity(n, n)];
    rotations.extend(chol.eigen.into_iter().map(|(u, _)| u));
    let built: Vec<Result<Candidate>> = par::map_indexed(rotations.len(), |i| {
        let integrals = if i == 0 { x.clone() } else { rotate_integrals(x, &rotations[i])? };
        let lambda = l1_of(&integrals);
        Ok(Candidate { integrals, rotation: rotations[i].clone(), lambda })
    });
    built.into_iter().collect()
}

/// Index of the smallest `λ`; ties go to the earliest candidate.
pub fn select_min_l1(lambdas: &[f64]) -> Result<usize> {
    if lambdas.is_empty() {
        return Err(Error::Domain("no candidates".into()));
    }
    let mut best = 0;
    for (i, &l) in lambdas.iter().enumerate().skip(1) {
        if l < lambdas[best] {
            best = i;
        }
    }
    Ok(best)
}
