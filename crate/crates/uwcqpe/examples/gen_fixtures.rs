//! Writes the bundled 4-orbital fixtures: a Pariser–Parr–Pople chain with
//! Ohno-screened repulsion, rotated into a dense orbital basis.
//!
//! cargo run -p uwcqpe --example gen_fixtures -- crates/uwcqpe/fixtures

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uwcqpe::integrals::{write_fcidump, ElectronIntegrals, Tensor4};
use uwcqpe::transforms::{rotate_integrals, rotation_from_kappa};

const BOHR_PER_ANGSTROM: f64 = 1.889_726_125;

fn ppp_chain(n_alpha: usize, n_beta: usize) -> ElectronIntegrals {
    // Butadiene-like chain: alternating short/long bonds, in Hartree and bohr.
    let bonds = [1.35, 1.46, 1.35];
    let hop = [-0.0919, -0.0809, -0.0919];
    let u = 0.4091;
    let n = 4;
    let mut x = vec![0.0];
    for b in bonds {
        x.push(x.last().unwrap() + b * BOHR_PER_ANGSTROM);
    }
    let v = |i: usize, j: usize| {
        let r: f64 = x[i] - x[j];
        1.0 / (1.0 / (u * u) + r * r).sqrt()
    };
    let mut h = DMatrix::zeros(n, n);
    for (i, t) in hop.iter().enumerate() {
        h[(i, i + 1)] = *t;
        h[(i + 1, i)] = *t;
    }
    let mut core = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                h[(i, i)] -= v(i, j);
                if i < j {
                    core += v(i, j);
                }
            }
        }
    }
    let g = Tensor4::from_fn(n, |p, q, r, s| if p == q && r == s { v(p, r) } else { 0.0 });
    ElectronIntegrals::restricted(n_alpha, n_beta, core, h, g).expect("valid model")
}

fn dense_basis(x: &ElectronIntegrals, seed: u64) -> ElectronIntegrals {
    let n = x.n_orbitals;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kappa: Vec<f64> = (0..n * (n - 1) / 2).map(|_| rng.gen_range(-0.8..0.8)).collect();
    let u = rotation_from_kappa(n, &kappa).expect("rotation");
    rotate_integrals(x, &u).expect("orthogonal")
}

fn main() {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "crates/uwcqpe/fixtures".into());
    std::fs::create_dir_all(&dir).expect("create fixture dir");
    let out = [("ppp4_mo.fcidump", 2, 2, 11), ("ppp4_mo_doublet.fcidump", 2, 1, 12)];
    for (name, na, nb, seed) in out {
        let x = dense_basis(&ppp_chain(na, nb), seed);
        let path = format!("{dir}/{name}");
        write_fcidump(&x, &path).expect("write fixture");
        println!("{path}");
    }
}
