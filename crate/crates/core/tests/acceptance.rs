//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Set `QDESIGN_ACCEPTANCE_QUICK=1` for the reduced random sweep (2 000
//! samples, ±4 pp) instead of 50 000 samples at ±2 pp.

use std::process::ExitCode;
use std::time::Instant;

use qdesign::criteria::{Criterion, VERDICT_TOL};
use qdesign::harness::{self, DesignSuite, SweepSummary, ThresholdResult, DEFAULT_SEED, DEFAULT_TOL, LUR_PURE_LOOS};
use qdesign::matcore::BipartiteDims;

struct Outcome {
    passed: bool,
    lines: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Self {
            passed: true,
            lines: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, line: String) {
        self.passed &= ok;
        self.lines.push(format!("    {} {line}", if ok { "ok  " } else { "MISS" }));
    }
}

fn find<'a>(rows: &'a [ThresholdResult], family: &str, criterion: &str) -> &'a ThresholdResult {
    rows.iter()
        .find(|r| r.family == family && r.criterion == criterion)
        .unwrap_or_else(|| panic!("no row for {family}/{criterion}"))
}

/// `None` means the criterion is expected never to fire on the family.
fn expect_threshold(out: &mut Outcome, row: &ThresholdResult, expected: Option<f64>, tol: f64) {
    match expected {
        Some(e) => out.check(
            !row.never_detected && (row.threshold - e).abs() <= tol,
            format!("{} {}: {:.4} vs {e:.4} (±{tol})", row.family, row.criterion, row.threshold),
        ),
        None => out.check(
            row.never_detected,
            format!("{} {}: never detected = {} (threshold {:.4})", row.family, row.criterion, row.never_detected, row.threshold),
        ),
    }
}

fn pct(s: &SweepSummary, c: Criterion) -> f64 {
    100.0 * s.fraction(c).expect("criterion evaluated")
}

fn criterion1(suite: &DesignSuite) -> Outcome {
    let mut out = Outcome::new();
    let start = Instant::now();
    let rows = harness::table1(suite, DEFAULT_TOL).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let cols: [(&str, [Option<f64>; 6]); 4] = [
        ("psi_minus", [Some(0.2918), Some(0.2678), Some(0.2678), Some(0.2501), Some(0.2501), Some(0.2501)]),
        ("psi_plus", [Some(0.2918), Some(0.2678), Some(0.2678), Some(0.2779), None, None]),
        ("phi_minus", [Some(0.2164), Some(0.2053), Some(0.2053), Some(0.2028), None, None]),
        ("phi_plus", [Some(0.2164), Some(0.2053), Some(0.2053), Some(0.2028), None, None]),
    ];
    let names = ["CCNR", "ESIC", "E2D", "LUR", "LSIC", "L2D"];
    for (family, expected) in cols {
        for (name, e) in names.iter().zip(expected) {
            expect_threshold(&mut out, find(&rows, family, name), e, 0.005);
        }
        let alt = find(&rows, family, LUR_PURE_LOOS);
        out.lines.push(format!("    info {family} {LUR_PURE_LOOS}: {:.4}", alt.threshold));
    }
    out.check(elapsed < 30.0, format!("runtime {elapsed:.1} s (< 30 s)"));
    out
}

fn criterion2(suite: &DesignSuite) -> Outcome {
    let mut out = Outcome::new();
    let start = Instant::now();
    let rows = harness::table3(suite, DEFAULT_TOL).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    for (name, e) in [("CCNR", Some(0.8897)), ("ESIC", Some(0.8844)), ("E2D", Some(0.8844)), ("LUR", Some(0.8885)), ("LSIC", None), ("L2D", None)] {
        expect_threshold(&mut out, find(&rows, "bennett_upb_noise", name), e, 0.005);
    }
    out.check(elapsed < 120.0, format!("runtime {elapsed:.1} s (< 120 s)"));
    out
}

fn sweep_size() -> (usize, f64) {
    if std::env::var_os("QDESIGN_ACCEPTANCE_QUICK").is_some() {
        (2_000, 4.0)
    } else {
        (50_000, 2.0)
    }
}

fn criterion3(suite: &DesignSuite) -> Outcome {
    let mut out = Outcome::new();
    let (n, pp) = sweep_size();
    let start = Instant::now();
    let s = harness::table2(suite, n, DEFAULT_SEED).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    for (c, e) in [(Criterion::Ccnr, 86.39), (Criterion::Esic, 88.52), (Criterion::Lur, 87.48), (Criterion::Lsic, 3.86)] {
        let got = pct(&s, c);
        out.check((got - e).abs() <= pp, format!("{c}: {got:.2}% vs {e:.2}% (±{pp} pp, {n} samples)"));
    }
    for (c, missed) in &s.lsic_not_detected_by {
        out.check(*missed == 0, format!("LSIC-detected states missed by {c}: {missed}"));
    }
    out.check(elapsed < 600.0, format!("runtime {elapsed:.1} s (< 600 s)"));
    out
}

fn criterion4(suite: &DesignSuite) -> Outcome {
    let mut out = Outcome::new();
    let (n, pp) = sweep_size();
    let s = harness::table4(suite, n, DEFAULT_SEED).unwrap();
    for (c, e) in [(Criterion::Ccnr, 38.13), (Criterion::Esic, 41.62), (Criterion::E2d, 41.62)] {
        let got = pct(&s, c);
        out.check((got - e).abs() <= pp, format!("{c}: {got:.2}% vs {e:.2}% (±{pp} pp, {n} samples)"));
    }
    out
}

fn criterion5(suite: &DesignSuite) -> Outcome {
    let mut out = Outcome::new();
    let s = harness::chessboard_sweep(50_000, DEFAULT_SEED, suite).unwrap();
    let ppt = pct(&s, Criterion::Ppt);
    out.check(ppt < 0.1, format!("PPT fraction {ppt:.3}% (< 0.1%)"));
    let gap = s.max_linear_equivalence_gap.unwrap();
    out.check(gap <= 1e-6, format!("max |ESIC − E2D| value gap {gap:.2e} (≤ 1e-6)"));
    let esic = pct(&s, Criterion::Esic);
    let lur_gap = esic - pct(&s, Criterion::Lur);
    out.check((0.2..=3.0).contains(&lur_gap), format!("ESIC − LUR {lur_gap:.2} pp (in [0.2, 3])"));
    let ccnr_gap = esic - pct(&s, Criterion::Ccnr);
    out.check((0.5..=4.0).contains(&ccnr_gap), format!("ESIC − CCNR {ccnr_gap:.2} pp (in [0.5, 4])"));
    for c in [Criterion::Lsic, Criterion::L2d] {
        let f = pct(&s, c);
        out.check(f < 0.5, format!("{c} fraction {f:.3}% (< 0.5%)"));
    }
    out.lines.push(format!("    info ESIC {esic:.2}%, LUR {:.2}%, CCNR {:.2}%", pct(&s, Criterion::Lur), pct(&s, Criterion::Ccnr)));
    out
}

fn criterion6(suite: &DesignSuite) -> Outcome {
    let mut out = Outcome::new();
    let tol = DEFAULT_TOL;
    let rows = harness::horodecki_curves(&harness::default_horodecki_grid(), tol, suite).unwrap();
    for x in harness::default_horodecki_grid() {
        let at = |c: &str| rows.iter().find(|r| r.parameter == Some(x) && r.criterion == c).unwrap();
        let (esic, e2d, lur, ccnr, ppt) = (at("ESIC"), at("E2D"), at("LUR"), at("CCNR"), at("PPT"));
        out.check(
            esic.threshold <= lur.threshold + 2.0 * tol && lur.threshold <= ccnr.threshold + 2.0 * tol,
            format!("x={x}: ESIC {:.4} ≤ LUR {:.4} ≤ CCNR {:.4}", esic.threshold, lur.threshold, ccnr.threshold),
        );
        out.check(
            (esic.threshold - e2d.threshold).abs() <= 2.0 * tol,
            format!("x={x}: |ESIC − E2D| = {:.1e}", (esic.threshold - e2d.threshold).abs()),
        );
        out.check(ppt.never_detected, format!("x={x}: PPT never detected = {}", ppt.never_detected));
    }
    out
}

fn criterion7() -> Outcome {
    let mut out = Outcome::new();
    for qubit_n in [7usize, 9] {
        let suite = DesignSuite::new(qubit_n, 18, DEFAULT_SEED).unwrap();
        let (lin, nonlin) = harness::equivalence_gaps(&suite, BipartiteDims { a: 2, b: 2 }, 500, DEFAULT_SEED, 1 << 50).unwrap();
        out.check(lin <= 1e-6 && nonlin <= 1e-6, format!("2x2, N={qubit_n}, 500 states: |E2D − ESIC| {lin:.1e}, |L2D − LSIC| {nonlin:.1e}"));
        if qubit_n == 7 {
            let (lin, nonlin) = harness::equivalence_gaps(&suite, BipartiteDims { a: 3, b: 3 }, 200, DEFAULT_SEED, 1 << 51).unwrap();
            out.check(lin <= 1e-6 && nonlin <= 1e-6, format!("3x3, N=18, 200 states: |E2D − ESIC| {lin:.1e}, |L2D − LSIC| {nonlin:.1e}"));
        }
    }
    out
}

fn criterion8(suite: &DesignSuite) -> Outcome {
    let mut out = Outcome::new();
    for c in harness::identity_suite(suite, DEFAULT_SEED) {
        out.check(c.passed, format!("{}: {}", c.name, c.detail));
    }
    out
}

fn criterion9(suite: &DesignSuite) -> Outcome {
    let mut out = Outcome::new();
    for dims in [BipartiteDims { a: 2, b: 2 }, BipartiteDims { a: 2, b: 3 }, BipartiteDims { a: 3, b: 3 }] {
        let (m, c) = harness::separable_max_margin(suite, dims, 1000, DEFAULT_SEED, 1 << 52).unwrap();
        out.check(m <= VERDICT_TOL, format!("{dims}, 1000 mixtures: largest margin {m:.2e} ({c})"));
    }
    out
}

fn main() -> ExitCode {
    let suite = DesignSuite::with_defaults(DEFAULT_SEED).expect("design suite");
    let criteria: [(&str, Box<dyn Fn() -> Outcome + '_>); 9] = [
        ("1 noisy Bell thresholds", Box::new(|| criterion1(&suite))),
        ("2 UPB bound entangled thresholds", Box::new(|| criterion2(&suite))),
        ("3 two-qubit NPT sweep", Box::new(|| criterion3(&suite))),
        ("4 qubit-qutrit NPT sweep", Box::new(|| criterion4(&suite))),
        ("5 chessboard sweep", Box::new(|| criterion5(&suite))),
        ("6 Horodecki threshold ordering", Box::new(|| criterion6(&suite))),
        ("7 design equivalence", Box::new(criterion7)),
        ("8 identity suite", Box::new(|| criterion8(&suite))),
        ("9 separable negative controls", Box::new(|| criterion9(&suite))),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let out = run();
        println!("{} criterion {name} ({:.1} s)", if out.passed { "PASS" } else { "FAIL" }, start.elapsed().as_secs_f64());
        for line in &out.lines {
            println!("{line}");
        }
        failed += usize::from(!out.passed);
    }
    println!("acceptance: {} of 9 criteria passed", 9 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
