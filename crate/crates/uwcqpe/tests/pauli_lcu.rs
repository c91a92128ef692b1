mod common;

use common::*;
use nalgebra::DMatrix;
use proptest::prelude::*;
use uwcqpe::integrals::{parse_fcidump, ElectronIntegrals, Tensor4};
use uwcqpe::pauli_lcu::{extract_coefficients, Bits, jw_matrix, CoefficientTable, PauliString, PauliTerm};

fn one_orbital(h: f64, g: f64) -> ElectronIntegrals {
    let mut t = Tensor4::zeros(1);
    t.set(0, 0, 0, 0, g);
    ElectronIntegrals::restricted(1, 1, 0.0, DMatrix::from_element(1, 1, h), t).unwrap()
}

fn term(label: &str, c: f64) -> PauliTerm {
    PauliTerm { pauli: PauliString::from_label(label).unwrap(), coefficient: c }
}

fn coefficient_of(table: &CoefficientTable, label: &str) -> f64 {
    let p = PauliString::from_label(label).unwrap();
    table.terms().iter().find(|t| t.pauli == p).map_or(0.0, |t| t.coefficient)
}

#[test]
fn one_orbital_coefficients_follow_number_operator_expansion() {
    // H = h(n↑ + n↓) + g n↑n↓ with n = (1 − Z)/2.
    let (h, g) = (0.5, 0.25);
    let t = extract_coefficients(&one_orbital(h, g));
    assert_eq!(t.len(), 3);
    assert!((coefficient_of(&t, "ZI") - (-h / 2.0 - g / 4.0)).abs() < 1e-14);
    assert!((coefficient_of(&t, "IZ") - (-h / 2.0 - g / 4.0)).abs() < 1e-14);
    assert!((coefficient_of(&t, "ZZ") - g / 4.0).abs() < 1e-14);
    assert!((t.constant() - (h + g / 4.0)).abs() < 1e-14);
    assert!((t.l1_norm() - 0.6875).abs() < 1e-14);
}

#[test]
fn one_orbital_spectrum() {
    let (h, g) = (0.5, 0.25);
    let t = extract_coefficients(&one_orbital(h, g));
    let e = sorted_eigenvalues_complex(jw_matrix(&t).unwrap());
    assert!(max_abs_diff(&e, &[0.0, h, h, 2.0 * h + g]) < 1e-12);
}

#[test]
fn zero_integrals_give_empty_table() {
    let t = extract_coefficients(&ElectronIntegrals::zeros(3, 1, 1));
    assert!(t.is_empty());
    assert_eq!(t.constant(), 0.0);
}

#[test]
fn extraction_matches_second_quantized_operator() {
    for seed in 0..24u64 {
        let n = 2 + (seed % 2) as usize;
        let x = random_integrals(seed, n, 1, 1);
        let dense = jw_matrix(&extract_coefficients(&x)).unwrap();
        let fock = fock_matrix(&x);
        let mut worst: f64 = 0.0;
        for i in 0..dense.nrows() {
            for j in 0..dense.ncols() {
                worst = worst.max((dense[(i, j)] - fock[(i, j)]).norm());
            }
        }
        assert!(worst < 1e-10, "seed {seed}: deviation {worst:e}");
    }
}

#[test]
fn spin_resolved_extraction_matches_second_quantized_operator() {
    use uwcqpe::integrals::Representation;
    for seed in 0..6u64 {
        let n = 2;
        let mut r = rng(100 + seed);
        let h = [random_symmetric(&mut r, n, 1.0), random_symmetric(&mut r, n, 1.0)];
        let g_same = [random_psd_eri(&mut r, n, 3, 0.4), random_psd_eri(&mut r, n, 3, 0.4)];
        // Mixed block with only p<->q and r<->s symmetry.
        let a = random_symmetric(&mut r, n, 0.5);
        let b = random_symmetric(&mut r, n, 0.5);
        let g_mixed = Tensor4::from_fn(n, |p, q, rr, s| a[(p, q)] * b[(rr, s)] + 0.1 * a[(rr, s)]);
        let x = ElectronIntegrals {
            n_orbitals: n,
            n_alpha: 1,
            n_beta: 1,
            core_energy: 0.3,
            repr: Representation::SpinResolved { h, g_same, g_mixed },
        };
        x.validate().unwrap();
        let dense = jw_matrix(&extract_coefficients(&x)).unwrap();
        let fock = fock_matrix(&x);
        let worst = (0..dense.nrows())
            .flat_map(|i| (0..dense.ncols()).map(move |j| (i, j)))
            .map(|(i, j)| (dense[(i, j)] - fock[(i, j)]).norm())
            .fold(0.0, f64::max);
        assert!(worst < 1e-10, "seed {seed}: deviation {worst:e}");
    }
}

#[test]
fn l1_examples() {
    let t = CoefficientTable::new(1, 0.0, vec![term("Z", 0.5)]).unwrap();
    assert_eq!(t.l1_norm(), 0.5);
    let t = CoefficientTable::new(2, 3.0, vec![term("ZI", 0.3), term("IZ", -0.2)]).unwrap();
    assert!((t.l1_norm() - 0.5).abs() < 1e-15);
}

#[test]
fn sorting_and_ties() {
    let t = CoefficientTable::new(2, 0.0, vec![term("XI", 0.1), term("ZI", -0.5), term("IZ", 0.3)]).unwrap();
    let s = t.prepare_sorted();
    let mags: Vec<f64> = s.terms().iter().map(|t| t.coefficient.abs()).collect();
    assert_eq!(mags, vec![0.5, 0.3, 0.1]);
    assert_eq!(s.prepare_sorted(), s);

    let a = PauliString::from_label("ZI").unwrap();
    let b = PauliString::from_label("IZ").unwrap();
    assert!(a < b);
    let t = CoefficientTable::new(2, 0.0, vec![term("IZ", 0.2), term("ZI", -0.2)]).unwrap();
    let s = t.prepare_sorted();
    assert_eq!(s.terms()[0].pauli, a);
}

#[test]
fn truncation_examples() {
    let labels = ["ZIIII", "IZIII", "IIZII", "IIIZI", "IIIIZ"];
    let coeffs = [0.5, 0.3, 0.1, 0.05, 0.04];
    let terms = labels.iter().zip(coeffs).map(|(l, c)| term(l, c)).collect();
    let t = CoefficientTable::new(5, 0.0, terms).unwrap().prepare_sorted();
    let cut = t.truncate_tail(0.1).unwrap();
    assert_eq!(cut.magnitudes(), vec![0.5, 0.3, 0.1]);
    assert!((cut.l1_norm() - 0.9).abs() < 1e-15);
    assert_eq!(t.truncate_tail(0.0).unwrap().len(), 5);
    assert!(t.truncate_tail(t.l1_norm() + 1e-9).unwrap().is_empty());
}

#[test]
fn dense_single_z() {
    let t = CoefficientTable::new(2, 0.0, vec![term("ZI", 1.0)]).unwrap();
    let m = jw_matrix(&t).unwrap();
    let diag: Vec<f64> = (0..4).map(|i| m[(i, i)].re).collect();
    assert_eq!(diag, vec![1.0, -1.0, 1.0, -1.0]);
}

#[test]
fn dense_size_guard() {
    let t = CoefficientTable::new(15, 0.0, vec![]).unwrap();
    assert!(jw_matrix(&t).is_err());
}

#[test]
fn csv_round_trip() {
    let x = random_integrals(7, 3, 2, 1);
    let t = extract_coefficients(&x);
    let back = CoefficientTable::from_csv(&t.to_csv()).unwrap();
    assert_eq!(back, t);
}

#[test]
fn core_shift_moves_only_constant() {
    let mut x = random_integrals(3, 2, 1, 1);
    let a = extract_coefficients(&x);
    x.core_energy += 1.25;
    let b = extract_coefficients(&x);
    assert_eq!(a.terms(), b.terms());
    assert!((b.constant() - a.constant() - 1.25).abs() < 1e-14);
}

#[test]
fn restricted_multiset_symmetric_under_spin_exchange() {
    let x = random_integrals(11, 3, 1, 1);
    let t = extract_coefficients(&x);
    // Terms acting only on the up block mirror those acting only on the down block.
    let n = 3;
    let up: Vec<f64> = t
        .terms()
        .iter()
        .filter(|t| t.pauli.x.width() <= n && t.pauli.z.width() <= n)
        .map(|t| t.coefficient.abs())
        .collect();
    let low = Bits::low(n);
    let down_only = |t: &&PauliTerm| t.pauli.x.and(low).is_zero() && t.pauli.z.and(low).is_zero();
    let down: Vec<f64> = t.terms().iter().filter(down_only).map(|t| t.coefficient.abs()).collect();
    let mut up = up;
    let mut down = down;
    up.sort_by(f64::total_cmp);
    down.sort_by(f64::total_cmp);
    assert_eq!(up.len(), down.len());
    assert!(max_abs_diff(&up, &down) < 1e-14);
}

#[test]
fn fcidump_fixture_extracts() {
    let x = parse_fcidump("NORB=1, NELEC=2, MS2=0\n0.5 1 1 0 0\n0.25 1 1 1 1\n-1.0 0 0 0 0\n").unwrap();
    let t = extract_coefficients(&x);
    assert_eq!(t.len(), 3);
    assert!((t.l1_norm() - 0.6875).abs() < 1e-14);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn dense_matrix_is_hermitian(coeffs in prop::collection::vec(-1.0f64..1.0, 1..12), seed in 0u64..1000) {
        use rand::Rng;
        let mut r = rng(seed);
        let terms: Vec<PauliTerm> = coeffs
            .iter()
            .map(|&c| {
                let label: String = (0..4).map(|_| ['I', 'X', 'Y', 'Z'][r.gen_range(0..4)]).collect();
                term(&label, c)
            })
            .collect();
        let t = CoefficientTable::new(4, 0.1, terms).unwrap();
        let m = jw_matrix(&t).unwrap();
        let worst = (0..16)
            .flat_map(|i| (0..16).map(move |j| (i, j)))
            .map(|(i, j)| (m[(i, j)] - m[(j, i)].conj()).norm())
            .fold(0.0, f64::max);
        prop_assert!(worst < 1e-12);
    }

    #[test]
    fn cached_l1_matches_fresh_sum(seed in 0u64..500) {
        let x = random_integrals(seed, 2, 1, 1);
        let t = extract_coefficients(&x);
        let fresh: f64 = t.terms().iter().map(|t| t.coefficient.abs()).sum();
        prop_assert!((t.l1_norm() - fresh).abs() < 1e-12);
    }

    #[test]
    fn l1_invariant_under_orbital_relabeling(seed in 0u64..200) {
        let x = random_integrals(seed, 3, 1, 1);
        let perm = [2usize, 0, 1];
        let (h, g) = match &x.repr {
            uwcqpe::integrals::Representation::Restricted { h, g } => (h, g),
            _ => unreachable!(),
        };
        let h2 = DMatrix::from_fn(3, 3, |p, q| h[(perm[p], perm[q])]);
        let g2 = Tensor4::from_fn(3, |p, q, r, s| g.get(perm[p], perm[q], perm[r], perm[s]));
        let y = ElectronIntegrals::restricted(1, 1, x.core_energy, h2, g2).unwrap();
        let (a, b) = (extract_coefficients(&x), extract_coefficients(&y));
        prop_assert!((a.l1_norm() - b.l1_norm()).abs() < 1e-12);
        let mut ma = a.magnitudes();
        let mut mb = b.magnitudes();
        ma.sort_by(f64::total_cmp);
        mb.sort_by(f64::total_cmp);
        prop_assert_eq!(ma.len(), mb.len());
    }
}
