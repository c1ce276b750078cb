use qdesign::criteria::{self, Criterion, VERDICT_TOL};
use qdesign::designs::ProjectiveDesign;
use qdesign::harness::{self, DesignSuite, ThresholdResult, DEFAULT_SEED, DEFAULT_TOL, LUR_PURE_LOOS};
use qdesign::states::{self, BellKind, DensityMatrix};

fn suite() -> DesignSuite {
    DesignSuite::with_defaults(DEFAULT_SEED).unwrap()
}

fn margin(suite: &DesignSuite, row: &ThresholdResult, rho: &DensityMatrix, kind: Option<BellKind>) -> f64 {
    if row.criterion == LUR_PURE_LOOS {
        let loos = harness::pure_state_loos(kind.unwrap()).unwrap();
        return criteria::lur_with_loos(rho, &loos).unwrap().margin;
    }
    let c: Criterion = row.criterion.parse().unwrap();
    suite.evaluate(c, rho).unwrap().margin
}

fn certify<F: Fn(f64) -> DensityMatrix>(suite: &DesignSuite, row: &ThresholdResult, family: F, kind: Option<BellKind>) {
    if row.never_detected {
        assert_eq!(row.threshold, 1.0);
        return;
    }
    let below = (row.threshold - row.bracket_width).max(0.0);
    let above = (row.threshold + row.bracket_width).min(1.0);
    assert!(row.bracket_width <= DEFAULT_TOL);
    assert!(margin(suite, row, &family(below), kind) <= VERDICT_TOL, "{row:?}");
    assert!(margin(suite, row, &family(above), kind) > VERDICT_TOL, "{row:?}");
}

fn pair_gap(rows: &[ThresholdResult], family: &str, a: &str, b: &str) -> f64 {
    let get = |c: &str| rows.iter().find(|r| r.family == family && r.criterion == c).unwrap().threshold;
    (get(a) - get(b)).abs()
}

#[test]
fn table1_thresholds_are_certified() {
    let suite = suite();
    let rows = harness::table1(&suite, DEFAULT_TOL).unwrap();
    assert_eq!(rows.len(), 4 * 8);
    for kind in BellKind::ALL {
        for row in rows.iter().filter(|r| r.family == kind.name()) {
            certify(&suite, row, |p| states::noisy_two_qubit(kind, p).unwrap(), Some(kind));
        }
        assert!(pair_gap(&rows, kind.name(), "ESIC", "E2D") <= 2.0 * DEFAULT_TOL);
        assert!(pair_gap(&rows, kind.name(), "LSIC", "L2D") <= 2.0 * DEFAULT_TOL);
        let ppt = rows.iter().find(|r| r.family == kind.name() && r.criterion == "PPT").unwrap();
        assert!(ppt.threshold < 1e-4);
    }
}

#[test]
fn table3_thresholds_are_certified() {
    let suite = suite();
    let rows = harness::table3(&suite, DEFAULT_TOL).unwrap();
    let be = states::bennett_upb_state();
    for row in &rows {
        certify(&suite, row, |p| states::mix_with_white_noise(&be, p).unwrap(), None);
    }
    assert!(rows.iter().find(|r| r.criterion == "PPT").unwrap().never_detected);
    assert!(pair_gap(&rows, "bennett_upb_noise", "ESIC", "E2D") <= 2.0 * DEFAULT_TOL);
}

#[test]
fn horodecki_ordering_on_a_coarse_grid() {
    let suite = suite();
    let rows = harness::horodecki_curves(&[0.25, 0.75], DEFAULT_TOL, &suite).unwrap();
    for x in [0.25, 0.75] {
        let at = |c: &str| rows.iter().find(|r| r.parameter == Some(x) && r.criterion == c).unwrap().threshold;
        assert!(at("ESIC") <= at("LUR") + 2.0 * DEFAULT_TOL);
        assert!(at("LUR") <= at("CCNR") + 2.0 * DEFAULT_TOL);
    }
    let base = states::horodecki_state(0.25).unwrap();
    for row in rows.iter().filter(|r| r.parameter == Some(0.25)) {
        certify(&suite, row, |p| states::mix_with_white_noise(&base, p).unwrap(), None);
    }
}

#[test]
fn chessboard_sweep_reproducible() {
    let suite = suite();
    let a = harness::chessboard_sweep(500, 3, &suite).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let b = pool.install(|| harness::chessboard_sweep(500, 3, &suite)).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.detected(Criterion::Ppt), Some(0));
    assert!(a.max_linear_equivalence_gap.unwrap() <= 1e-6);
}

#[test]
fn verify_all_is_deterministic_and_flags_bad_designs() {
    let first = harness::verify_all(5, &[]);
    assert!(first.passed, "{}", first.render());
    assert_eq!(first.render(), harness::verify_all(5, &[]).render());

    let sic = qdesign::designs::build_sic(2).unwrap();
    let mut vectors = sic.vectors().to_vec();
    vectors[1][0] *= 1.5;
    let broken = ProjectiveDesign::new(2, sic.kind(), vectors).unwrap();
    let report = harness::verify_all(5, &[("broken.json".into(), broken)]);
    assert!(!report.passed);
    let bad = report.checks.iter().find(|c| !c.passed).unwrap();
    assert_eq!(bad.name, "design broken.json");
    assert!(bad.detail.contains("unit_norm"));
}
