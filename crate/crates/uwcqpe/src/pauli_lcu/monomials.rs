// Majorana monomials of the electronic Hamiltonian in a fixed enumeration
// order. Values are real multipliers such that the Pauli coefficient is
// `sign · value`; the sign depends only on the Jordan–Wigner image.
//
// Order: one-body (σ, p, q) for σ = ↑, ↓; same-spin (σ, p > r, s > q);
// mixed (p, q, r, s).

use nalgebra::DMatrix;

use super::pauli::{Bits, PauliString};
use crate::integrals::{SpinView, Tensor4};

pub fn count(n: usize) -> usize {
    let pairs = n * n.saturating_sub(1) / 2;
    2 * n * n + 2 * pairs * pairs + n.pow(4)
}

fn one_body_coeff(v: &SpinView<'_>, sigma: usize, p: usize, q: usize) -> f64 {
    let n = v.n();
    let gs = v.g_same[sigma];
    let mut t = v.h[sigma][(p, q)];
    for r in 0..n {
        t += 0.5 * (gs.get(p, q, r, r) - gs.get(p, r, r, q)) + 0.5 * v.g_cross(sigma, p, q, r, r);
    }
    0.5 * t
}

/// All monomial values, zeros included, in enumeration order.
pub fn values(v: &SpinView<'_>) -> Vec<f64> {
    let n = v.n();
    let mut out = Vec::with_capacity(count(n));
    for sigma in 0..2 {
        for p in 0..n {
            for q in 0..n {
                out.push(one_body_coeff(v, sigma, p, q));
            }
        }
    }
    for sigma in 0..2 {
        let g = v.g_same[sigma];
        for p in 0..n {
            for r in 0..p {
                for q in 0..n {
                    for s in q + 1..n {
                        out.push(0.25 * (g.get(p, q, r, s) - g.get(p, s, r, q)));
                    }
                }
            }
        }
    }
    let data = v.g_mixed.data();
    out.extend(data.iter().map(|x| 0.25 * x));
    out
}

/// Scalar part of the Hamiltonian under the Majorana expansion.
pub fn constant(v: &SpinView<'_>, core: f64) -> f64 {
    let n = v.n();
    let mut c = core;
    for sigma in 0..2 {
        let g = v.g_same[sigma];
        for p in 0..n {
            let mut k = v.h[sigma][(p, p)];
            for r in 0..n {
                k -= 0.5 * g.get(p, r, r, p);
            }
            c += 0.5 * k;
            for r in 0..n {
                c += 0.125 * (g.get(p, p, r, r) + g.get(p, r, p, r));
            }
        }
    }
    for p in 0..n {
        for r in 0..n {
            c += 0.25 * v.g_mixed.get(p, p, r, r);
        }
    }
    c
}

/// Gradient buffers with the same layout as the integrals a view reads.
#[derive(Clone, Debug)]
pub struct IntegralGrad {
    pub h: [DMatrix<f64>; 2],
    pub g_same: [Tensor4; 2],
    pub g_mixed: Tensor4,
}

impl IntegralGrad {
    pub fn zeros(n: usize) -> Self {
        Self {
            h: [DMatrix::zeros(n, n), DMatrix::zeros(n, n)],
            g_same: [Tensor4::zeros(n), Tensor4::zeros(n)],
            g_mixed: Tensor4::zeros(n),
        }
    }
}

/// Pull a gradient over monomial values back onto the integral entries.
pub fn adjoint(n: usize, bar: &[f64]) -> IntegralGrad {
    assert_eq!(bar.len(), count(n));
    let mut out = IntegralGrad::zeros(n);
    let mut it = bar.iter();
    for sigma in 0..2 {
        for p in 0..n {
            for q in 0..n {
                let b = 0.5 * *it.next().unwrap();
                if b == 0.0 {
                    continue;
                }
                out.h[sigma][(p, q)] += b;
                for r in 0..n {
                    out.g_same[sigma].add(p, q, r, r, 0.5 * b);
                    out.g_same[sigma].add(p, r, r, q, -0.5 * b);
                    if sigma == 0 {
                        out.g_mixed.add(p, q, r, r, 0.5 * b);
                    } else {
                        out.g_mixed.add(r, r, p, q, 0.5 * b);
                    }
                }
            }
        }
    }
    for sigma in 0..2 {
        for p in 0..n {
            for r in 0..p {
                for q in 0..n {
                    for s in q + 1..n {
                        let b = 0.25 * *it.next().unwrap();
                        out.g_same[sigma].add(p, q, r, s, b);
                        out.g_same[sigma].add(p, s, r, q, -b);
                    }
                }
            }
        }
    }
    for (dst, b) in out.g_mixed.data_mut().iter_mut().zip(it) {
        *dst += 0.25 * b;
    }
    out
}

struct Majoranas {
    gamma: Vec<PauliString>,
    gamma_bar: Vec<PauliString>,
}

impl Majoranas {
    fn new(n_modes: usize) -> Self {
        let gamma = (0..n_modes).map(|j| PauliString { x: Bits::single(j), z: Bits::low(j) }).collect();
        let gamma_bar = (0..n_modes).map(|j| PauliString { x: Bits::single(j), z: Bits::low(j + 1) }).collect();
        Self { gamma, gamma_bar }
    }
}

fn product(ops: &[PauliString]) -> (PauliString, u8) {
    let mut acc = PauliString::default();
    let mut k = 0u8;
    for op in ops {
        let (next, dk) = acc.mul(op);
        acc = next;
        k = (k + dk) % 4;
    }
    (acc, k)
}

fn real_sign(k: u8) -> f64 {
    match k % 4 {
        0 => 1.0,
        2 => -1.0,
        _ => unreachable!("Majorana monomial with imaginary Pauli coefficient"),
    }
}

/// Jordan–Wigner images of every monomial, in enumeration order, with signs.
pub fn paulis(n: usize) -> Vec<(PauliString, f64)> {
    let m = Majoranas::new(2 * n);
    let mode = |sigma: usize, p: usize| p + sigma * n;
    let mut out = Vec::with_capacity(count(n));
    for sigma in 0..2 {
        for p in 0..n {
            for q in 0..n {
                let (ps, k) = product(&[m.gamma[mode(sigma, p)], m.gamma_bar[mode(sigma, q)]]);
                out.push((ps, real_sign(k + 1)));
            }
        }
    }
    for sigma in 0..2 {
        for p in 0..n {
            for r in 0..p {
                for q in 0..n {
                    for s in q + 1..n {
                        let (ps, k) = product(&[
                            m.gamma[mode(sigma, p)],
                            m.gamma[mode(sigma, r)],
                            m.gamma_bar[mode(sigma, q)],
                            m.gamma_bar[mode(sigma, s)],
                        ]);
                        out.push((ps, real_sign(k)));
                    }
                }
            }
        }
    }
    for p in 0..n {
        for q in 0..n {
            for r in 0..n {
                for s in 0..n {
                    let (ps, k) = product(&[
                        m.gamma[mode(0, p)],
                        m.gamma[mode(1, r)],
                        m.gamma_bar[mode(0, q)],
                        m.gamma_bar[mode(1, s)],
                    ]);
                    out.push((ps, real_sign(k)));
                }
            }
        }
    }
    out
}
