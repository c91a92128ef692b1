mod common;

use common::*;
use nalgebra::DMatrix;
use proptest::prelude::*;
use uwcqpe::integrals::*;
use uwcqpe::Error;

fn max_entry_diff(a: &ElectronIntegrals, b: &ElectronIntegrals) -> f64 {
    let (Representation::Restricted { h: ha, g: ga }, Representation::Restricted { h: hb, g: gb }) = (&a.repr, &b.repr) else {
        panic!("restricted inputs expected");
    };
    let dh = (ha - hb).abs().max();
    dh.max(ga.max_abs_diff(gb)).max((a.core_energy - b.core_energy).abs())
}

#[test]
fn three_line_fixture() {
    let x = parse_fcidump("NORB=1, NELEC=2, MS2=0\n0.5 1 1 0 0\n0.25 1 1 1 1\n-1.0 0 0 0 0\n").unwrap();
    assert_eq!((x.n_orbitals, x.n_alpha, x.n_beta), (1, 1, 1));
    let Representation::Restricted { h, g } = &x.repr else { panic!() };
    assert_eq!(h[(0, 0)], 0.5);
    assert_eq!(g.get(0, 0, 0, 0), 0.25);
    assert_eq!(x.core_energy, -1.0);
    let back = parse_fcidump(&format_fcidump(&x).unwrap()).unwrap();
    assert_eq!(back, x);
}

#[test]
fn namelist_header_and_empty_body() {
    let x = parse_fcidump(" &FCI NORB=3,NELEC=3,MS2=1,\n  ORBSYM=1,1,1,\n  ISYM=1,\n &END\n").unwrap();
    assert_eq!((x.n_orbitals, x.n_alpha, x.n_beta), (3, 2, 1));
    assert_eq!(x.core_energy, 0.0);
    assert_eq!(x, ElectronIntegrals::zeros(3, 2, 1));
    let text = format_fcidump(&x).unwrap();
    let body: Vec<&str> = text.lines().skip_while(|l| !l.contains("&END")).skip(1).collect();
    assert_eq!(body.len(), 1);
    assert!(body[0].trim().ends_with("0    0    0    0"));
}

#[test]
fn symmetry_completion() {
    let x = parse_fcidump("NORB=2, NELEC=2, MS2=0\n0.3 1 2 0 0\n0.7 2 1 1 1\n").unwrap();
    let Representation::Restricted { h, g } = &x.repr else { panic!() };
    assert_eq!(h[(0, 1)], 0.3);
    assert_eq!(h[(1, 0)], 0.3);
    for (p, q, r, s) in eightfold_images(1, 0, 0, 0) {
        assert_eq!(g.get(p, q, r, s), 0.7);
    }
    // Idempotent: re-parsing the completed tensor changes nothing.
    let again = parse_fcidump(&format_fcidump(&x).unwrap()).unwrap();
    assert_eq!(again, x);
    // Explicit consistent duplicates are accepted.
    assert!(parse_fcidump("NORB=2, NELEC=2, MS2=0\n0.3 1 2 0 0\n0.3 2 1 0 0\n").is_ok());
}

#[test]
fn parse_errors() {
    assert!(matches!(parse_fcidump("NELEC=2, MS2=0\n"), Err(Error::Parse { .. })));
    assert!(matches!(parse_fcidump("NORB=2, NELEC=2, MS2=0\n0.3 1 3 0 0\n"), Err(Error::Parse { line: 2, .. })));
    assert!(parse_fcidump("NORB=2, NELEC=2, MS2=0\n0.3 1 2 0 0\n0.4 2 1 0 0\n").is_err());
    assert!(matches!(parse_fcidump("NORB=2, NELEC=2, MS2=0\n0.1 1 1 0 0\nabc 1 2 0 0\n"), Err(Error::Parse { line: 3, .. })));
    assert!(parse_fcidump("NORB=2, NELEC=2, MS2=0\n! comment\n1.5E-01 1 1 0 0\n").is_ok());
    assert!(matches!(read_fcidump("/nonexistent/file.fcidump"), Err(Error::Io(_))));
}

#[test]
fn writer_rejects_spin_resolved() {
    let x = random_integrals(3, 2, 1, 1).to_spin_resolved();
    assert!(matches!(format_fcidump(&x), Err(Error::Unsupported(_))));
}

#[test]
fn write_parse_round_trip_100_seeds() {
    for seed in 0..100u64 {
        let n = 2 + (seed % 4) as usize;
        let x = random_integrals(seed, n, 1, 1);
        let y = parse_fcidump(&format_fcidump(&x).unwrap()).unwrap();
        let d = max_entry_diff(&x, &y);
        assert!(d < 1e-12, "seed {seed}: {d:e}");
    }
}

#[test]
fn file_round_trip() {
    let dir = std::env::temp_dir().join(format!("uwcqpe-int-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("x.fcidump");
    let x = random_integrals(9, 3, 2, 1);
    write_fcidump(&x, &path).unwrap();
    let y = read_fcidump(&path).unwrap();
    assert!(max_entry_diff(&x, &y) < 1e-12);
    assert_eq!((y.n_alpha, y.n_beta), (2, 1));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn effective_one_body_examples() {
    let x = parse_fcidump("NORB=1, NELEC=2, MS2=0\n0.5 1 1 0 0\n0.25 1 1 1 1\n").unwrap();
    let k = effective_one_body(&x);
    assert!((k[0][(0, 0)] - 0.375).abs() < 1e-15);
    assert_eq!(k[0], k[1]);

    let mut r = rng(5);
    let h = random_symmetric(&mut r, 3, 1.0);
    let z = ElectronIntegrals::restricted(1, 1, 0.0, h.clone(), Tensor4::zeros(3)).unwrap();
    assert_eq!(effective_one_body(&z)[0], h);

    let x = random_integrals(17, 4, 2, 2);
    let Representation::Restricted { h, g } = &x.repr else { panic!() };
    let mut oracle = DMatrix::zeros(4, 4);
    for p in 0..4 {
        for q in 0..4 {
            let mut acc = h[(p, q)];
            for r in 0..4 {
                acc -= 0.5 * g.get(p, r, r, q);
            }
            oracle[(p, q)] = acc;
        }
    }
    assert!((effective_one_body(&x)[0].clone() - oracle).abs().max() < 1e-13);
}

#[test]
fn validation_rejects_broken_symmetry() {
    let mut g = Tensor4::zeros(2);
    g.set(0, 1, 0, 0, 0.2);
    assert!(matches!(ElectronIntegrals::restricted(1, 1, 0.0, DMatrix::zeros(2, 2), g), Err(Error::Symmetry(_))));
    let mut h = DMatrix::zeros(2, 2);
    h[(0, 1)] = 0.1;
    assert!(ElectronIntegrals::restricted(1, 1, 0.0, h, Tensor4::zeros(2)).is_err());
    assert!(ElectronIntegrals::restricted(3, 1, 0.0, DMatrix::zeros(2, 2), Tensor4::zeros(2)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn effective_one_body_is_linear(s1 in 0u64..1000, s2 in 0u64..1000, a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let x = random_integrals(s1, 3, 1, 1);
        let y = random_integrals(s2 + 5000, 3, 1, 1);
        let (Representation::Restricted { h: hx, g: gx }, Representation::Restricted { h: hy, g: gy }) = (&x.repr, &y.repr) else { unreachable!() };
        let h = hx * a + hy * b;
        let mut g = gx.clone();
        for v in g.data_mut() { *v *= a; }
        g.scaled_add(b, gy);
        let z = ElectronIntegrals::restricted(1, 1, 0.0, h, g).unwrap();
        let lhs = effective_one_body(&z)[0].clone();
        let rhs = effective_one_body(&x)[0].clone() * a + effective_one_body(&y)[0].clone() * b;
        prop_assert!((lhs - rhs).abs().max() < 1e-12);
    }
}
