//! Active-space electron integrals in chemist ordering.
//!
//! The restricted form stores one `h` and one `g`. The spin-resolved form
//! stores `h↑`, `h↓`, the same-spin blocks `g↑↑`, `g↓↓` and the mixed block
//! `g↑↓`. The `g↓↑` block is never stored. It is implied by
//! `g↓↑[p,q,r,s] = g↑↓[r,s,p,q]`.

mod fcidump;

pub use fcidump::{format_fcidump, parse_fcidump, read_fcidump, write_fcidump};

use nalgebra::DMatrix;

use crate::{Error, Result};

/// Tolerance for the symmetry invariants checked by [`ElectronIntegrals::validate`].
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Dense rank-4 tensor, row-major over `(p, q, r, s)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor4 {
    n: usize,
    data: Vec<f64>,
}

impl Tensor4 {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n * n * n] }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize, usize, usize) -> f64) -> Self {
        let mut t = Self::zeros(n);
        for p in 0..n {
            for q in 0..n {
                for r in 0..n {
                    for s in 0..n {
                        t.data[((p * n + q) * n + r) * n + s] = f(p, q, r, s);
                    }
                }
            }
        }
        t
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn idx(&self, p: usize, q: usize, r: usize, s: usize) -> usize {
        ((p * self.n + q) * self.n + r) * self.n + s
    }

    #[inline]
    pub fn get(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        self.data[self.idx(p, q, r, s)]
    }

    #[inline]
    pub fn set(&mut self, p: usize, q: usize, r: usize, s: usize, v: f64) {
        let i = self.idx(p, q, r, s);
        self.data[i] = v;
    }

    #[inline]
    pub fn add(&mut self, p: usize, q: usize, r: usize, s: usize, v: f64) {
        let i = self.idx(p, q, r, s);
        self.data[i] += v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn max_abs_diff(&self, other: &Tensor4) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn scaled_add(&mut self, alpha: f64, other: &Tensor4) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
    }

    /// Contract index `axis` with `u`: `out[.., b, ..] = Σ_a u[a, b] · self[.., a, ..]`.
    pub fn transform_axis(&self, axis: usize, u: &DMatrix<f64>) -> Tensor4 {
        let n = self.n;
        let stride = n.pow(3 - axis as u32);
        let block = stride * n;
        let mut out = Tensor4::zeros(n);
        for outer in (0..self.data.len()).step_by(block) {
            for inner in 0..stride {
                for b in 0..n {
                    let mut acc = 0.0;
                    for a in 0..n {
                        acc += u[(a, b)] * self.data[outer + a * stride + inner];
                    }
                    out.data[outer + b * stride + inner] = acc;
                }
            }
        }
        out
    }

    /// `g'[p,q,r,s] = Σ u[i,p] u[j,q] u[k,r] u[l,s] g[i,j,k,l]`.
    pub fn rotate(&self, u: &DMatrix<f64>) -> Tensor4 {
        self.transform_axis(0, u)
            .transform_axis(1, u)
            .transform_axis(2, u)
            .transform_axis(3, u)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Representation {
    Restricted {
        h: DMatrix<f64>,
        g: Tensor4,
    },
    SpinResolved {
        h: [DMatrix<f64>; 2],
        g_same: [Tensor4; 2],
        g_mixed: Tensor4,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ElectronIntegrals {
    pub n_orbitals: usize,
    pub n_alpha: usize,
    pub n_beta: usize,
    pub core_energy: f64,
    pub repr: Representation,
}

/// Borrowed spin-block view shared by both representations.
///
/// For restricted integrals every slot points at the same `h` or `g`.
#[derive(Clone, Copy)]
pub struct SpinView<'a> {
    pub h: [&'a DMatrix<f64>; 2],
    pub g_same: [&'a Tensor4; 2],
    pub g_mixed: &'a Tensor4,
}

impl<'a> SpinView<'a> {
    pub fn n(&self) -> usize {
        self.h[0].nrows()
    }

    /// Mixed-spin block seen from spin `sigma` first: `g^{σσ̄}[p,q,r,s]`.
    #[inline]
    pub fn g_cross(&self, sigma: usize, p: usize, q: usize, r: usize, s: usize) -> f64 {
        if sigma == 0 {
            self.g_mixed.get(p, q, r, s)
        } else {
            self.g_mixed.get(r, s, p, q)
        }
    }
}

impl ElectronIntegrals {
    pub fn restricted(
        n_alpha: usize,
        n_beta: usize,
        core_energy: f64,
        h: DMatrix<f64>,
        g: Tensor4,
    ) -> Result<Self> {
        let x = Self {
            n_orbitals: h.nrows(),
            n_alpha,
            n_beta,
            core_energy,
            repr: Representation::Restricted { h, g },
        };
        x.validate()?;
        Ok(x)
    }

    pub fn zeros(n: usize, n_alpha: usize, n_beta: usize) -> Self {
        Self {
            n_orbitals: n,
            n_alpha,
            n_beta,
            core_energy: 0.0,
            repr: Representation::Restricted { h: DMatrix::zeros(n, n), g: Tensor4::zeros(n) },
        }
    }

    pub fn n_electrons(&self) -> usize {
        self.n_alpha + self.n_beta
    }

    pub fn s_z(&self) -> f64 {
        (self.n_alpha as f64 - self.n_beta as f64) / 2.0
    }

    pub fn n_qubits(&self) -> usize {
        2 * self.n_orbitals
    }

    pub fn is_restricted(&self) -> bool {
        matches!(self.repr, Representation::Restricted { .. })
    }

    pub fn view(&self) -> SpinView<'_> {
        match &self.repr {
            Representation::Restricted { h, g } => SpinView { h: [h, h], g_same: [g, g], g_mixed: g },
            Representation::SpinResolved { h, g_same, g_mixed } => SpinView {
                h: [&h[0], &h[1]],
                g_same: [&g_same[0], &g_same[1]],
                g_mixed,
            },
        }
    }

    /// Promote to the spin-resolved form by copying blocks.
    pub fn to_spin_resolved(&self) -> Self {
        let repr = match &self.repr {
            Representation::Restricted { h, g } => Representation::SpinResolved {
                h: [h.clone(), h.clone()],
                g_same: [g.clone(), g.clone()],
                g_mixed: g.clone(),
            },
            r @ Representation::SpinResolved { .. } => r.clone(),
        };
        Self { repr, ..self.clone() }
    }

    /// Check the index-range and symmetry invariants.
    pub fn validate(&self) -> Result<()> {
        let n = self.n_orbitals;
        if self.n_alpha > n || self.n_beta > n {
            return Err(Error::Domain(format!(
                "electron counts ({}, {}) exceed {} orbitals",
                self.n_alpha, self.n_beta, n
            )));
        }
        if !self.core_energy.is_finite() {
            return Err(Error::Domain("core energy is not finite".into()));
        }
        let view = self.view();
        for h in view.h {
            if h.nrows() != n || h.ncols() != n {
                return Err(Error::Domain("one-body matrix has wrong shape".into()));
            }
            check_symmetric(h)?;
        }
        for g in view.g_same {
            if g.dim() != n {
                return Err(Error::Domain("two-body tensor has wrong shape".into()));
            }
        }
        match &self.repr {
            Representation::Restricted { g, .. } => check_eightfold(g)?,
            Representation::SpinResolved { g_same, g_mixed, .. } => {
                for g in g_same {
                    check_pair_swap(g)?;
                    check_index_pairs(g)?;
                }
                check_index_pairs(g_mixed)?;
            }
        }
        Ok(())
    }
}

fn check_symmetric(h: &DMatrix<f64>) -> Result<()> {
    let n = h.nrows();
    for p in 0..n {
        for q in 0..p {
            let d = (h[(p, q)] - h[(q, p)]).abs();
            if !(d <= SYMMETRY_TOL) {
                return Err(Error::Symmetry(format!("h[{p},{q}] != h[{q},{p}] (diff {d:e})")));
            }
        }
    }
    Ok(())
}

fn check_with(g: &Tensor4, what: &str, perm: impl Fn(usize, usize, usize, usize) -> (usize, usize, usize, usize)) -> Result<()> {
    let n = g.dim();
    for p in 0..n {
        for q in 0..n {
            for r in 0..n {
                for s in 0..n {
                    let (a, b, c, d) = perm(p, q, r, s);
                    let diff = (g.get(p, q, r, s) - g.get(a, b, c, d)).abs();
                    if !(diff <= SYMMETRY_TOL) {
                        return Err(Error::Symmetry(format!(
                            "{what}: g[{p},{q},{r},{s}] differs by {diff:e}"
                        )));
                    }
                }
            }
        }
    }
    Ok(())
}

fn check_pair_swap(g: &Tensor4) -> Result<()> {
    check_with(g, "pair swap", |p, q, r, s| (r, s, p, q))
}

fn check_index_pairs(g: &Tensor4) -> Result<()> {
    check_with(g, "p<->q", |p, q, r, s| (q, p, r, s))?;
    check_with(g, "r<->s", |p, q, r, s| (p, q, s, r))
}

fn check_eightfold(g: &Tensor4) -> Result<()> {
    check_index_pairs(g)?;
    check_pair_swap(g)
}

/// `k[p,q] = h[p,q] - ½ Σ_r g[p,r,r,q]`, per spin.
pub fn effective_one_body(x: &ElectronIntegrals) -> [DMatrix<f64>; 2] {
    let v = x.view();
    let n = x.n_orbitals;
    let k = |sigma: usize| {
        DMatrix::from_fn(n, n, |p, q| {
            v.h[sigma][(p, q)] - 0.5 * (0..n).map(|r| v.g_same[sigma].get(p, r, r, q)).sum::<f64>()
        })
    };
    [k(0), k(1)]
}

/// The 8 chemist-ordering images of `(p, q, r, s)`.
pub fn eightfold_images(p: usize, q: usize, r: usize, s: usize) -> [(usize, usize, usize, usize); 8] {
    [
        (p, q, r, s),
        (q, p, r, s),
        (p, q, s, r),
        (q, p, s, r),
        (r, s, p, q),
        (s, r, p, q),
        (r, s, q, p),
        (s, r, q, p),
    ]
}
