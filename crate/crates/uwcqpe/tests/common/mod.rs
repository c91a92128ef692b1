// Independent oracles shared by the integration tests: a second-quantized
// Hamiltonian built directly from creation/annihilation operators and
// sector-resolved dense diagonalization.
#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uwcqpe::integrals::{ElectronIntegrals, Representation, Tensor4};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_symmetric(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    for p in 0..n {
        for q in 0..=p {
            let v = scale * rng.gen_range(-1.0..1.0);
            m[(p, q)] = v;
            m[(q, p)] = v;
        }
    }
    m
}

/// Positive semidefinite 8-fold symmetric tensor as a sum of symmetric outer products.
pub fn random_psd_eri(rng: &mut ChaCha8Rng, n: usize, rank: usize, scale: f64) -> Tensor4 {
    let vecs: Vec<DMatrix<f64>> = (0..rank).map(|_| random_symmetric(rng, n, scale)).collect();
    Tensor4::from_fn(n, |p, q, r, s| vecs.iter().map(|l| l[(p, q)] * l[(r, s)]).sum())
}

pub fn random_integrals(seed: u64, n: usize, n_alpha: usize, n_beta: usize) -> ElectronIntegrals {
    let mut r = rng(seed);
    let h = random_symmetric(&mut r, n, 1.0);
    let g = random_psd_eri(&mut r, n, n * n, 0.3);
    let core = r.gen_range(-1.0..1.0);
    ElectronIntegrals::restricted(n_alpha, n_beta, core, h, g).unwrap()
}

fn annihilate(j: usize, b: usize) -> Option<(usize, f64)> {
    if b >> j & 1 == 0 {
        return None;
    }
    let sign = if (b & ((1 << j) - 1)).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
    Some((b ^ (1 << j), sign))
}

fn create(j: usize, b: usize) -> Option<(usize, f64)> {
    if b >> j & 1 == 1 {
        return None;
    }
    let sign = if (b & ((1 << j) - 1)).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
    Some((b | (1 << j), sign))
}

/// Apply a product of ladder operators, rightmost first. `(mode, dagger)`.
fn ladder(ops: &[(usize, bool)], b: usize) -> Option<(usize, f64)> {
    let mut state = b;
    let mut sign = 1.0;
    for &(j, dag) in ops.iter().rev() {
        let (next, s) = if dag { create(j, state)? } else { annihilate(j, state)? };
        state = next;
        sign *= s;
    }
    Some((state, sign))
}

/// H = core + Σ h^σ_pq a†_pσ a_qσ + ½ Σ g^{στ}_pqrs a†_pσ a†_rτ a_sτ a_qσ, blocked spin order.
pub fn fock_matrix(x: &ElectronIntegrals) -> DMatrix<f64> {
    let n = x.n_orbitals;
    let dim = 1usize << (2 * n);
    let mode = |sigma: usize, p: usize| p + sigma * n;
    let (h, g): (Vec<&DMatrix<f64>>, Box<dyn Fn(usize, usize, usize, usize, usize, usize) -> f64>) = match &x.repr {
        Representation::Restricted { h, g } => (vec![h, h], Box::new(move |_, _, p, q, r, s| g.get(p, q, r, s))),
        Representation::SpinResolved { h, g_same, g_mixed } => (
            vec![&h[0], &h[1]],
            Box::new(move |a, b, p, q, r, s| match (a, b) {
                (0, 0) => g_same[0].get(p, q, r, s),
                (1, 1) => g_same[1].get(p, q, r, s),
                (0, 1) => g_mixed.get(p, q, r, s),
                _ => g_mixed.get(r, s, p, q),
            }),
        ),
    };
    let mut m = DMatrix::zeros(dim, dim);
    for b in 0..dim {
        m[(b, b)] += x.core_energy;
        for sigma in 0..2 {
            for p in 0..n {
                for q in 0..n {
                    let c = h[sigma][(p, q)];
                    if c == 0.0 {
                        continue;
                    }
                    if let Some((row, s)) = ladder(&[(mode(sigma, p), true), (mode(sigma, q), false)], b) {
                        m[(row, b)] += c * s;
                    }
                }
            }
        }
        for sigma in 0..2 {
            for tau in 0..2 {
                for p in 0..n {
                    for q in 0..n {
                        for r in 0..n {
                            for s in 0..n {
                                let c = g(sigma, tau, p, q, r, s);
                                if c == 0.0 {
                                    continue;
                                }
                                let ops = [
                                    (mode(sigma, p), true),
                                    (mode(tau, r), true),
                                    (mode(tau, s), false),
                                    (mode(sigma, q), false),
                                ];
                                if let Some((row, sg)) = ladder(&ops, b) {
                                    m[(row, b)] += 0.5 * c * sg;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    m
}

/// Basis states with `n_alpha` up electrons and `n_beta` down electrons.
pub fn sector_states(n: usize, n_alpha: usize, n_beta: usize) -> Vec<usize> {
    let up_mask = (1usize << n) - 1;
    (0..1usize << (2 * n))
        .filter(|b| (b & up_mask).count_ones() as usize == n_alpha && (b >> n).count_ones() as usize == n_beta)
        .collect()
}

pub fn sorted_eigenvalues_real(m: DMatrix<f64>) -> Vec<f64> {
    let mut e: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}

pub fn sorted_eigenvalues_complex(m: DMatrix<Complex64>) -> Vec<f64> {
    let mut e: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}

pub fn submatrix<T: nalgebra::Scalar + Copy>(m: &DMatrix<T>, idx: &[usize]) -> DMatrix<T> {
    DMatrix::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])])
}

/// Spectrum of a Hamiltonian restricted to a spin sector. Panics if the
/// matrix couples the sector to its complement.
pub fn sector_spectrum_complex(m: &DMatrix<Complex64>, n: usize, n_alpha: usize, n_beta: usize) -> Vec<f64> {
    let idx = sector_states(n, n_alpha, n_beta);
    let inside: std::collections::HashSet<usize> = idx.iter().copied().collect();
    for &j in &idx {
        for i in 0..m.nrows() {
            if !inside.contains(&i) {
                assert!(m[(i, j)].norm() < 1e-10, "matrix leaks out of sector ({n_alpha},{n_beta})");
            }
        }
    }
    sorted_eigenvalues_complex(submatrix(m, &idx))
}

/// Full spectrum assembled from every (n_alpha, n_beta) sector.
pub fn full_spectrum_by_sectors(m: &DMatrix<Complex64>, n: usize) -> Vec<f64> {
    let mut all = Vec::new();
    for a in 0..=n {
        for b in 0..=n {
            all.extend(sector_spectrum_complex(m, n, a, b));
        }
    }
    all.sort_by(f64::total_cmp);
    all
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Table with one Z-type string per coefficient on 9 qubits (up to 511 terms).
pub fn table_from_coeffs(coeffs: &[f64]) -> uwcqpe::pauli_lcu::CoefficientTable {
    use uwcqpe::pauli_lcu::{Bits, CoefficientTable, PauliString, PauliTerm};
    let terms = coeffs
        .iter()
        .enumerate()
        .map(|(k, &c)| {
            let mut w = [0u64; 4];
            w[0] = k as u64 + 1;
            PauliTerm { pauli: PauliString { x: Bits::ZERO, z: Bits(w) }, coefficient: c }
        })
        .collect();
    CoefficientTable::new(9, 0.0, terms).unwrap()
}
