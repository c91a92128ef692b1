mod common;

use std::f64::consts::E;

use proptest::prelude::*;
use rand::Rng;
use uwcqpe::costmodel::{self, CostConfig, RoundCost, SortedMagnitudes};
use uwcqpe::integrals::read_fcidump;
use uwcqpe::pauli_lcu::extract_coefficients;
use uwcqpe::smm::*;
use uwcqpe::Error;

fn csv_curve(setting: &str, p_ph: f64, rows: &[(f64, f64, f64)]) -> String {
    rows.iter().map(|(t, a, c)| format!("{setting},{p_ph:e},{t:e},{a:e},{c:e}\n")).collect()
}

fn calibration(body: &str) -> uwcqpe::Result<SmmCalibration> {
    SmmCalibration::from_csv(&format!("setting,p_ph,theta,alpha_rus,c_smm_clocks\n{body}"), "test")
}

fn flat(p_phs: &[f64], alpha: f64, clocks: f64) -> SmmCalibration {
    let knots = [1e-12, 1e-6, 1e-2, 10.0];
    let rows: Vec<_> = knots.iter().map(|&t| (t, alpha, clocks)).collect();
    let mut body = String::new();
    for s in ["accuracy", "speed"] {
        for &p in p_phs {
            body += &csv_curve(s, p, &rows);
        }
    }
    calibration(&body).unwrap()
}

// α = 3 − 0.2·ln θ, C = 10 + ln θ: linear in log θ.
fn linear_curve() -> CalibrationCurve {
    let rows: Vec<_> = [1e-6, 1e-4, 1e-3, 3e-2, 0.5].iter().map(|&t: &f64| (t, 3.0 - 0.2 * t.ln(), 30.0 + t.ln())).collect();
    calibration(&csv_curve("accuracy", 1e-3, &rows)).unwrap().curve(Setting::Accuracy, 1e-3).unwrap().clone()
}

fn fixture_table(name: &str) -> uwcqpe::pauli_lcu::CoefficientTable {
    let x = read_fcidump(format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap();
    extract_coefficients(&x).prepare_sorted()
}

#[test]
fn interpolation_exact_at_knots_and_linear_between() {
    let c = linear_curve();
    for s in c.samples() {
        let (a, k) = c.eval(s.theta, false).unwrap();
        assert_eq!((a, k), (s.alpha_rus, s.c_smm));
    }
    for &t in &[2e-6, 5.5e-5, 0.0123, 0.4] {
        let (a, k) = c.eval(t, false).unwrap();
        assert!((a - (3.0 - 0.2 * t.ln())).abs() < 1e-9);
        assert!((k - (30.0 + t.ln())).abs() < 1e-9);
        assert_eq!(c.eval(-t, false).unwrap(), (a, k));
    }
    assert!(matches!(c.eval(1e-7, false), Err(Error::Calibration(_))));
    assert!(matches!(c.eval(0.9, false), Err(Error::Calibration(_))));
    assert_eq!(c.eval(0.9, true).unwrap(), c.eval(0.5, false).unwrap());
    assert_eq!(c.eval(1e-9, true).unwrap(), c.eval(1e-6, false).unwrap());
}

#[test]
fn calibration_parse_errors() {
    let good = [(1e-4, 2.0, 5.0), (1e-3, 1.9, 6.0), (1e-2, 1.8, 7.0), (1e-1, 1.7, 9.0)];
    assert!(calibration(&csv_curve("speed", 1e-3, &good)).is_ok());
    let mut shuffled = good;
    shuffled.swap(1, 2);
    assert!(calibration(&csv_curve("speed", 1e-3, &shuffled)).is_err());
    assert!(calibration(&csv_curve("balanced", 1e-3, &good)).is_err());
    assert!(calibration(&csv_curve("speed", 1e-3, &good[..3])).is_err());
    let split = csv_curve("speed", 1e-3, &good[..2]) + &csv_curve("accuracy", 1e-3, &good) + &csv_curve("speed", 1e-3, &good[2..]);
    assert!(calibration(&split).is_err());
    assert!(SmmCalibration::from_csv(&format!("setting,p,theta,alpha,c\n{}", csv_curve("speed", 1e-3, &good)), "x").is_err());
    let negative = [(1e-4, 2.0, 5.0), (1e-3, -1.9, 6.0), (1e-2, 1.8, 7.0), (1e-1, 1.7, 9.0)];
    assert!(calibration(&csv_curve("speed", 1e-3, &negative)).is_err());
    let cal = calibration(&csv_curve("speed", 1e-3, &good)).unwrap();
    assert!(cal.curve(Setting::Accuracy, 1e-3).is_err());
    assert!(cal.curve(Setting::Speed, 2e-3).is_err());
}

#[test]
fn bundled_calibration_shapes() {
    let cal = SmmCalibration::synthetic_default();
    assert_eq!(cal.curves().len(), 6);
    for c in cal.curves() {
        let s = c.samples();
        assert!(s.first().unwrap().alpha_rus > s.last().unwrap().alpha_rus || c.setting == Setting::Speed);
        assert!(s.windows(2).all(|w| w[1].c_smm >= w[0].c_smm));
    }
}

#[test]
fn angle_multisets() {
    let t = common::table_from_coeffs(&[0.9, -0.4, 0.1]).prepare_sorted();
    let mags = SortedMagnitudes::from_table(&t).unwrap();
    let delta = 0.05;
    let round = RoundCost { m: 1, t_m: 2, n_m: 0, l_d: 3, lambda_r: 0.0, g_det: 6, g_rand: 0, g_m: 6 };
    let a = rotation_angle_multiset(&mags, &round, delta);
    assert_eq!(a.len(), 3);
    for (e, c) in a.iter().zip([0.9, 0.4, 0.1]) {
        assert!((e.theta - c * delta / 2.0).abs() < 1e-15);
        assert_eq!(e.count, 2);
    }
    let round = RoundCost { m: 1, t_m: 2, n_m: 0, l_d: 3, lambda_r: 0.2, g_det: 6, g_rand: 4, g_m: 10 };
    let a = rotation_angle_multiset(&mags, &round, delta);
    assert_eq!(a.len(), 4);
    assert!((a[3].theta - (1.0f64 / (2.0 * 0.2 * delta * 2.0)).atan()).abs() < 1e-15);
    assert_eq!(total_count(&a), 10);

    let cfg = CostConfig::default();
    let r = costmodel::round_cost(&t, 0, 0.2, &cfg).unwrap();
    let r0 = RoundCost { l_d: 0, lambda_r: mags.lambda(), g_det: 0, g_rand: 7, g_m: 7, ..r };
    let a = rotation_angle_multiset(&mags, &r0, 0.2);
    assert_eq!(a, vec![AngleCount { theta: random_angle(mags.lambda(), 0.2, 0), count: 7 }]);
}

#[test]
fn multiset_total_matches_gate_count_on_fixtures() {
    let cfg = CostConfig::default();
    for name in ["ppp4_mo.fcidump", "ppp4_mo_doublet.fcidump"] {
        let t = fixture_table(name);
        let b = costmodel::total_cost(&t, &cfg).unwrap();
        let mags = SortedMagnitudes::from_table(&t).unwrap();
        for r in &b.rounds {
            assert_eq!(total_count(&rotation_angle_multiset(&mags, r, b.delta)), r.g_m);
        }
    }
}

#[test]
fn logical_error_arithmetic() {
    let cal = flat(&[1e-3], 2.0, 5.0);
    let c = cal.curve(Setting::Accuracy, 1e-3).unwrap();
    assert_eq!(total_logical_error(&[], c, 1e-3, false).unwrap(), 0.0);
    let one = [AngleCount { theta: 1e-3, count: 1000 }];
    assert!((total_logical_error(&one, c, 1e-3, false).unwrap() - 2e-3).abs() < 1e-15);
    assert!((total_clocks(&one, c, false).unwrap() - 5000.0).abs() < 1e-9);
    let doubled = [AngleCount { theta: 1e-3, count: 2000 }];
    assert!((total_logical_error(&doubled, c, 1e-3, false).unwrap() - 4e-3).abs() < 1e-15);
    assert!(total_logical_error(&[AngleCount { theta: 30.0, count: 1 }], c, 1e-3, false).is_err());
}

#[test]
fn pec_overhead_values() {
    assert_eq!(pec_overhead(0.0), 1.0);
    assert!((pec_overhead(0.25) - E).abs() < 1e-15);
    // P_total = 1.01 from the iron-sulfur logical table.
    let g = pec_overhead(1.01);
    assert!((g - 4.04f64.exp()).abs() < 1e-12);
    assert!((g - 56.9).abs() < 0.1, "{g}");
}

#[test]
fn clifford_error_values() {
    assert!((clifford_error(1e-3, 21).unwrap() / 1e-12 - 1.0).abs() < 1e-9);
    for d in (3..=51).step_by(2) {
        assert!((clifford_error(1e-2, d).unwrap() - 0.1).abs() < 1e-15);
        if d > 3 {
            assert!(clifford_error(5e-3, d).unwrap() < clifford_error(5e-3, d - 2).unwrap());
        }
    }
    assert!(clifford_error(1e-3, 20).is_err());
    assert!(clifford_error(1e-3, 1).is_err());
    assert!(clifford_error(0.02, 5).is_err());
}

fn brute_distance(n_patch: u64, c_total: f64, p_ph: f64) -> Option<u32> {
    (3..=51u32).step_by(2).find(|&d| {
        let pl = 0.1 * (100.0 * p_ph).powf((d as f64 + 1.0) / 2.0);
        1.0 / pl >= 100.0 * d as f64 * n_patch as f64 * c_total
    })
}

#[test]
fn tiny_circuit_distance() {
    // 1/p_L(3) = 1e3 against 100·3·10·10 = 3e4: d = 3 fails; d = 5 gives 1e4 vs 5e4, d = 7 gives 1e5 vs 7e4.
    assert_eq!(choose_distance(10, 10.0, 1e-3, 51).unwrap(), 7);
    assert_eq!(brute_distance(10, 10.0, 1e-3), Some(7));
    assert_eq!(choose_distance(1, 1.0, 1e-4, 51).unwrap(), 3);
    assert!(matches!(choose_distance(1000, 1e20, 9e-3, 51), Err(Error::Infeasible(_))));
    assert!(choose_distance(10, 0.0, 1e-3, 51).is_err());
}

#[test]
fn distance_sweep_minimal_and_monotone() {
    let mut rng = common::rng(2026);
    let mut feasible = 0;
    for _ in 0..1000 {
        let n_patch = rng.gen_range(10..600u64);
        let c_total = 10f64.powf(rng.gen_range(0.0..12.0));
        let p_ph = 10f64.powf(rng.gen_range(-5.0..-2.3));
        let d = choose_distance(n_patch, c_total, p_ph, 51);
        assert_eq!(d.as_ref().ok().copied(), brute_distance(n_patch, c_total, p_ph));
        let Ok(d) = d else { continue };
        feasible += 1;
        assert!(distance_condition(n_patch, c_total, p_ph, d).unwrap());
        if d > 3 {
            assert!(!distance_condition(n_patch, c_total, p_ph, d - 2).unwrap());
        }
        for (c2, p2) in [(c_total * 3.0, p_ph), (c_total, p_ph * 1.5)] {
            if let Ok(d2) = choose_distance(n_patch, c2, p2, 51) {
                assert!(d2 >= d);
            }
        }
    }
    assert!(feasible > 900);
}

#[test]
fn published_qubit_counts() {
    assert_eq!(patches_and_qubits(63, 21), (160, 141_120));
    assert_eq!(patches_and_qubits(41, 19), (112, 80_864));
    assert_eq!(patches_and_qubits(109, 25), (259, 323_750));
    assert_eq!(logical_qubits(2 * 31), 63);
    assert_eq!(parallelism(500_000, 141_120, 9.0).unwrap().0, 3);
    assert_eq!(parallelism(500_000, 80_864, 9.0).unwrap().0, 6);
    assert_eq!(parallelism(141_120, 141_120, 9.0).unwrap(), (1, 9.0));
    assert!(matches!(parallelism(100, 141_120, 9.0), Err(Error::Infeasible(_))));
    // Perfect square 8·N_L needs no rounding.
    assert_eq!(patches(2), 4 + 4 + 11);
}

#[test]
fn runtime_arithmetic() {
    let one = [RoundRuntimeInput { c_total: 1e6, d: 21, n_m: 1, gamma_sq: 1.0 }];
    let r = runtimes(&one, 1.0, E);
    assert!((r.t_max_us * 1e-6 - 21.0).abs() < 1e-12);
    assert!((r.t_total_us - E * 21e6).abs() < 1e-3);
    let a = [
        RoundRuntimeInput { c_total: 300.0, d: 5, n_m: 40, gamma_sq: 1.1 },
        RoundRuntimeInput { c_total: 900.0, d: 7, n_m: 10, gamma_sq: 1.3 },
    ];
    let b: Vec<_> = a.iter().map(|r| RoundRuntimeInput { n_m: 2 * r.n_m, ..*r }).collect();
    assert!((runtimes(&b, 1.0, E).t_total_us - 2.0 * runtimes(&a, 1.0, E).t_total_us).abs() < 1e-6);
    // With a unit repetition factor the total is the plain weighted sum.
    let plain = 1.1 * 40.0 * 300.0 * 5.0 + 1.3 * 10.0 * 900.0 * 7.0;
    assert!((runtimes(&a, 1.0, 1.0).t_total_us - plain).abs() < 1e-9);
}

#[test]
fn flat_calibration_hand_oracle() {
    let t = common::table_from_coeffs(&[0.9, -0.4, 0.1]).prepare_sorted();
    let cost = CostConfig::default();
    let cal = flat(&[1e-3], 1.0, 1.0);
    let cfg = SmmConfig { setting: SettingChoice::Accuracy, ..Default::default() };
    let rep = estimate(&t, &cost, &cal, &cfg).unwrap();

    let b = costmodel::total_cost(&t, &cost).unwrap();
    let delta = b.delta;
    let n_l = 10u64;
    let n_patch = 2 * n_l + 9 + 11;
    assert_eq!(rep.n_patch, n_patch);
    let mags = [0.9, 0.4, 0.1];
    let mut t_total = 0.0;
    for (r, got) in b.rounds.iter().zip(&rep.rounds) {
        let reps = 2f64.powi(r.m as i32);
        let det: f64 = mags[..r.l_d].iter().map(|c| c * delta / 2.0 * reps).sum();
        let phi = if r.g_rand > 0 { (1.0 / (2.0 * r.lambda_r * delta * reps)).atan() } else { 0.0 };
        let p_total = 1e-3 * (det + phi * r.g_rand as f64);
        let c_total = r.g_m as f64;
        let d = brute_distance(n_patch, c_total, 1e-3).unwrap();
        assert!((got.p_total - p_total).abs() < 1e-12 * p_total.max(1.0));
        assert_eq!(got.c_total, c_total);
        assert_eq!(got.d, d);
        t_total += E * (4.0 * p_total).exp() * r.n_m as f64 * c_total * d as f64;
    }
    assert!((rep.time_to_solution_single_qpu_s - t_total * 1e-6).abs() < 1e-9 * t_total * 1e-6);
    let last = rep.rounds.last().unwrap();
    assert_eq!(rep.physical_qubits_per_qpu, n_patch * 2 * (last.d as u64).pow(2));
    assert_eq!(rep.g_m, b.rounds.last().unwrap().g_m);
    assert!((rep.time_to_solution_k_star_qpus_days * rep.qpu_parallelism_k_star as f64 - rep.time_to_solution_single_qpu_days).abs()
        < 1e-12 * rep.time_to_solution_single_qpu_days);
}

#[test]
fn auto_picks_faster_setting_and_reports_invariants() {
    let t = fixture_table("ppp4_mo.fcidump");
    let cost = CostConfig::default();
    let cal = SmmCalibration::synthetic_default();
    let run = |s| estimate(&t, &cost, &cal, &SmmConfig { setting: s, ..Default::default() }).unwrap();
    let acc = run(SettingChoice::Accuracy);
    let spd = run(SettingChoice::Speed);
    let auto = run(SettingChoice::Auto);
    let best = acc.time_to_solution_single_qpu_s.min(spd.time_to_solution_single_qpu_s);
    assert_eq!(auto.time_to_solution_single_qpu_s, best);
    assert_eq!(auto.settings_considered.len(), 2);
    for rep in [&acc, &spd, &auto] {
        assert_eq!(rep.physical_qubits_per_qpu, rep.n_patch * 2 * (rep.d as u64).pow(2));
        let tp = rep.time_to_solution_k_star_qpus_days * rep.qpu_parallelism_k_star as f64;
        assert!((tp - rep.time_to_solution_single_qpu_days).abs() <= 1e-12 * tp);
        assert_eq!(rep.n_l, 9);
        assert_eq!(rep.calibration_provenance, "bundled synthetic calibration");
    }
    // Final-round dominance of the time-to-solution.
    let last = auto.rounds.last().unwrap();
    let share = E * last.gamma_sq * last.n_m as f64 * last.t_m_us * 1e-6 / auto.time_to_solution_single_qpu_s;
    assert!(share >= 0.5, "{share}");
    assert!(auto.theta_bar_l > 0.0);
}

#[test]
fn report_json_round_trip_and_determinism() {
    let t = fixture_table("ppp4_mo_doublet.fcidump");
    let cost = CostConfig::default();
    let cal = SmmCalibration::synthetic_default();
    let rep = estimate(&t, &cost, &cal, &SmmConfig::default()).unwrap();
    let s = serde_json::to_string(&rep).unwrap();
    let back: ResourceReport = serde_json::from_str(&s).unwrap();
    assert_eq!(serde_json::to_string(&back).unwrap(), s);
    let again = serde_json::to_string(&estimate(&t, &cost, &cal, &SmmConfig::default()).unwrap()).unwrap();
    assert_eq!(again, s);
    let v: serde_json::Value = serde_json::from_str(&s).unwrap();
    for key in ["L_D", "lambda_R", "N_L", "G_M", "smm_priority", "theta_bar_l", "P_total", "physical_qubits_per_qpu",
        "maximum_per_shot_runtime_s", "time_to_solution_single_qpu_s", "qpu_parallelism_k_star", "time_to_solution_k_star_qpus_days"]
    {
        assert!(v.get(key).is_some(), "{key}");
    }
    assert_eq!(ResourceReport::table_header().split(',').count(), rep.table_row().split(',').count());
}

#[test]
fn lower_physical_error_never_costs_more() {
    let t = fixture_table("ppp4_mo.fcidump");
    let cost = CostConfig::default();
    let cal = flat(&[1e-4, 5e-4, 1e-3, 3e-3], 3.0, 12.0);
    let mut prev: Option<ResourceReport> = None;
    for p in [3e-3, 1e-3, 5e-4, 1e-4] {
        let rep = estimate(&t, &cost, &cal, &SmmConfig { p_ph: p, ..Default::default() }).unwrap();
        if let Some(q) = prev {
            assert!(rep.d <= q.d);
            assert!(rep.p_total <= q.p_total);
            assert!(rep.time_to_solution_single_qpu_s <= q.time_to_solution_single_qpu_s);
        }
        prev = Some(rep);
    }
}

#[test]
fn estimate_guards() {
    let t = common::table_from_coeffs(&[0.9, -0.4, 0.1]).prepare_sorted();
    let cal = flat(&[1e-3], 1.0, 1.0);
    let cost = CostConfig::default();
    assert!(estimate(&t, &cost, &cal, &SmmConfig { p_ph: 0.02, ..Default::default() }).is_err());
    assert!(estimate(&t, &cost, &cal, &SmmConfig { p_ph: 2e-3, ..Default::default() }).is_err());
    assert!(estimate(&t, &CostConfig { c_gate: 2.0, ..cost.clone() }, &cal, &SmmConfig::default()).is_err());
    let over = estimate(&t, &cost, &cal, &SmmConfig { q_budget: 100, setting: SettingChoice::Speed, ..Default::default() });
    assert!(matches!(over, Err(Error::Infeasible(_))));
    let narrow = calibration(&csv_curve("accuracy", 1e-3, &[(1e-2, 1.0, 1.0), (1e-1, 1.0, 1.0), (0.5, 1.0, 1.0), (1.0, 1.0, 1.0)])).unwrap();
    let cfg = SmmConfig { setting: SettingChoice::Accuracy, ..Default::default() };
    assert!(matches!(estimate(&t, &cost, &narrow, &cfg), Err(Error::Calibration(_))));
    assert!(estimate(&t, &cost, &narrow, &SmmConfig { clamp_calibration: true, ..cfg }).is_ok());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn totals_additive(a in prop::collection::vec((1e-5f64..1.5, 1u64..1000), 0..20), b in prop::collection::vec((1e-5f64..1.5, 1u64..1000), 0..20)) {
        let cal = SmmCalibration::synthetic_default();
        let c = cal.curve(Setting::Speed, 5e-4).unwrap();
        let to = |v: &[(f64, u64)]| v.iter().map(|&(theta, count)| AngleCount { theta, count }).collect::<Vec<_>>();
        let (a, b) = (to(&a), to(&b));
        let ab: Vec<_> = a.iter().chain(&b).copied().collect();
        let pe = |x: &[AngleCount]| total_logical_error(x, c, 5e-4, false).unwrap();
        let ck = |x: &[AngleCount]| total_clocks(x, c, false).unwrap();
        prop_assert!((pe(&ab) - pe(&a) - pe(&b)).abs() <= 1e-12 * pe(&ab).max(1e-300));
        prop_assert!((ck(&ab) - ck(&a) - ck(&b)).abs() <= 1e-12 * ck(&ab).max(1.0));
    }

    #[test]
    fn pchip_preserves_monotone_data(steps in prop::collection::vec((0.1f64..2.0, 0.0f64..3.0), 4..12), q in 0.0f64..1.0) {
        let mut x = vec![0.0];
        let mut y = vec![1.0];
        for (dx, dy) in &steps {
            x.push(x.last().unwrap() + dx);
            y.push(y.last().unwrap() + dy);
        }
        let p = Pchip::new(x.clone(), y.clone()).unwrap();
        let (lo, hi) = p.domain();
        let n = 200;
        let mut prev = p.eval(lo);
        for k in 1..=n {
            let t = lo + (hi - lo) * (k as f64 - q) / n as f64;
            let v = p.eval(t.max(lo));
            prop_assert!(v >= prev - 1e-12);
            prop_assert!(v >= y[0] - 1e-12 && v <= y[y.len() - 1] + 1e-12);
            prev = v;
        }
    }
}
