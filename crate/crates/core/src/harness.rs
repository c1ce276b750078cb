//! Threshold searches, seeded Monte Carlo sweeps and the reports behind
//! the command-line tool.
//!
//! Sweeps give sample `i` its own [`RngStream`] `(master_seed, i)` and
//! aggregate counts in index order, so a summary depends only on the seed
//! and the sample count, never on the number of worker threads.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::criteria::{self, Criterion, CriterionReport, SchmidtDecomposition, VERDICT_TOL};
use crate::designs::{
    self, build_sic, normalize_design, optimize_design, superimpose, verify_design, DesignCertificate, NormalizedDesign,
    ProjectiveDesign, DEFAULT_MAX_ITERS,
};
use crate::error::{Error, Result};
use crate::matcore::{self, BipartiteDims, ComplexMatrix};
use crate::states::{self, BellKind, DensityMatrix, RngStream};

pub const DEFAULT_TOL: f64 = 1e-5;
pub const COARSE_STEP: f64 = 0.01;
pub const DEFAULT_SEED: u64 = 1729;
pub const DEFAULT_SAMPLES: usize = 50_000;
pub const DEFAULT_QUBIT_DESIGN_N: usize = 7;
pub const DEFAULT_QUTRIT_DESIGN_N: usize = 18;

/// Offset mixed into the master seed for design construction so design
/// streams never coincide with sample streams.
const DESIGN_SEED_MASK: u64 = 0x9E37_79B9_7F4A_7C15;

/// SIC POVMs and the larger 2-designs used for E2D/L2D, with certificates.
#[derive(Clone, Debug)]
pub struct DesignSuite {
    sic2: NormalizedDesign,
    sic3: NormalizedDesign,
    design2: NormalizedDesign,
    design3: NormalizedDesign,
    certificates: Vec<DesignCertificate>,
}

impl DesignSuite {
    /// Builds the suite. The qubit design is optimized; the qutrit design is
    /// a SIC superimposed with a randomly rotated copy when `qutrit_n = 18`
    /// and optimized otherwise.
    pub fn new(qubit_n: usize, qutrit_n: usize, seed: u64) -> Result<Self> {
        let design_seed = seed ^ DESIGN_SEED_MASK;
        let sic2 = build_sic(2)?;
        let sic3 = build_sic(3)?;
        let design2 = optimize_design(2, qubit_n, design_seed, DEFAULT_MAX_ITERS)?;
        let design3 = if qutrit_n == 18 {
            let rotation = states::random_unitary(3, &mut RngStream::new(design_seed, u64::MAX));
            superimpose(&sic3, &sic3, &rotation)?
        } else {
            optimize_design(3, qutrit_n, design_seed, DEFAULT_MAX_ITERS)?
        };
        let all = [&sic2, &sic3, &design2, &design3];
        let certificates: Vec<DesignCertificate> = all.iter().map(|p| verify_design(p)).collect();
        if let Some(bad) = certificates.iter().find(|c| !c.passed) {
            return Err(Error::InvalidDesign(format!(
                "{} design (d={}, N={}) failed certification: {}",
                bad.kind,
                bad.dim,
                bad.n,
                bad.failures.join("; ")
            )));
        }
        Ok(Self {
            sic2: normalize_design(&sic2),
            sic3: normalize_design(&sic3),
            design2: normalize_design(&design2),
            design3: normalize_design(&design3),
            certificates,
        })
    }

    pub fn with_defaults(seed: u64) -> Result<Self> {
        Self::new(DEFAULT_QUBIT_DESIGN_N, DEFAULT_QUTRIT_DESIGN_N, seed)
    }

    pub fn sic(&self, d: usize) -> Result<&NormalizedDesign> {
        match d {
            2 => Ok(&self.sic2),
            3 => Ok(&self.sic3),
            _ => Err(Error::UnsupportedDimension(d)),
        }
    }

    pub fn design(&self, d: usize) -> Result<&NormalizedDesign> {
        match d {
            2 => Ok(&self.design2),
            3 => Ok(&self.design3),
            _ => Err(Error::UnsupportedDimension(d)),
        }
    }

    pub fn certificates(&self) -> &[DesignCertificate] {
        &self.certificates
    }

    pub fn evaluate(&self, criterion: Criterion, rho: &DensityMatrix) -> Result<CriterionReport> {
        let dims = rho.dims();
        match criterion {
            Criterion::Ppt => criteria::ppt(rho),
            Criterion::Ccnr => criteria::ccnr(rho),
            Criterion::Esic => criteria::linear_design_value(rho, self.sic(dims.a)?, self.sic(dims.b)?),
            Criterion::E2d => criteria::linear_design_value(rho, self.design(dims.a)?, self.design(dims.b)?),
            Criterion::Lur => criteria::lur(rho),
            Criterion::Lsic => criteria::nonlinear_design_value(rho, self.sic(dims.a)?),
            Criterion::L2d => criteria::nonlinear_design_value(rho, self.design(dims.a)?),
        }
    }
}

/// Outcome of a threshold search over the mixing weight `p ∈ [0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub family: String,
    pub criterion: String,
    /// Family parameter other than `p`, e.g. the Horodecki `x`.
    pub parameter: Option<f64>,
    pub threshold: f64,
    pub bracket_width: f64,
    pub never_detected: bool,
    pub multiple_crossings: bool,
}

/// Locates the smallest `p` at which `margin(family(p))` turns positive.
///
/// A coarse scan at step [`COARSE_STEP`] finds the first sign change, then
/// bisection shrinks the bracket below `tol`. "Positive" means above
/// [`VERDICT_TOL`], matching the verdict rule. When the margin never turns
/// positive the result is `1.0` with `never_detected` set. Further sign
/// changes after the first are reported through `multiple_crossings`.
pub fn find_threshold<F, M>(family: F, margin: M, tol: f64) -> Result<(f64, f64, bool, bool)>
where
    F: Fn(f64) -> Result<DensityMatrix>,
    M: Fn(&DensityMatrix) -> Result<f64>,
{
    if !(tol > 0.0) {
        return Err(Error::OutOfRange(format!("bisection tolerance {tol} must be positive")));
    }
    let detected = |p: f64| -> Result<bool> { Ok(margin(&family(p)?)? > VERDICT_TOL) };
    let steps = (1.0 / COARSE_STEP).round() as usize;
    let grid: Vec<f64> = (0..=steps).map(|i| (i as f64 * COARSE_STEP).min(1.0)).collect();
    let flags = grid.iter().map(|&p| detected(p)).collect::<Result<Vec<bool>>>()?;

    let crossings: Vec<usize> = (0..steps).filter(|&i| !flags[i] && flags[i + 1]).collect();
    let multiple = crossings.len() > 1 || (flags[0] && !crossings.is_empty());
    let Some(&first) = crossings.first() else {
        return Ok(if flags[0] { (0.0, 0.0, false, false) } else { (1.0, 0.0, true, false) });
    };
    let (mut lo, mut hi) = (grid[first], grid[first + 1]);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if detected(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((0.5 * (lo + hi), hi - lo, false, multiple))
}

fn threshold_for<F, M>(family: &str, criterion: &str, parameter: Option<f64>, gen: F, margin: M, tol: f64) -> Result<ThresholdResult>
where
    F: Fn(f64) -> Result<DensityMatrix>,
    M: Fn(&DensityMatrix) -> Result<f64>,
{
    let (threshold, bracket_width, never_detected, multiple_crossings) = find_threshold(gen, margin, tol)?;
    Ok(ThresholdResult {
        family: family.to_string(),
        criterion: criterion.to_string(),
        parameter,
        threshold,
        bracket_width,
        never_detected,
        multiple_crossings,
    })
}

/// Label used for LUR evaluated with the LOOs of the pure Bell state.
pub const LUR_PURE_LOOS: &str = "LUR[pure-state LOOs]";

/// Threshold searches over `p|ψ⟩⟨ψ| + (1−p)ρ_s` for the four Bell states.
///
/// Besides the seven criteria, each family gets an LUR row that uses the
/// Schmidt LOOs of the pure Bell state instead of those of `ρ(p)`.
pub fn table1(suite: &DesignSuite, tol: f64) -> Result<Vec<ThresholdResult>> {
    let mut out = Vec::new();
    for kind in BellKind::ALL {
        let gen = move |p: f64| states::noisy_two_qubit(kind, p);
        for c in Criterion::ALL {
            out.push(threshold_for(kind.name(), c.name(), None, gen, |rho| Ok(suite.evaluate(c, rho)?.margin), tol)?);
        }
        let loos = criteria::operator_schmidt(&states::bell_state(kind))?;
        out.push(threshold_for(
            kind.name(),
            LUR_PURE_LOOS,
            None,
            gen,
            |rho| Ok(criteria::lur_with_loos(rho, &loos)?.margin),
            tol,
        )?);
    }
    Ok(out)
}

/// Threshold searches over the UPB bound entangled state mixed with white noise.
pub fn table3(suite: &DesignSuite, tol: f64) -> Result<Vec<ThresholdResult>> {
    let be = states::bennett_upb_state();
    let gen = |p: f64| states::mix_with_white_noise(&be, p);
    Criterion::ALL
        .iter()
        .map(|&c| threshold_for("bennett_upb_noise", c.name(), None, gen, |rho| Ok(suite.evaluate(c, rho)?.margin), tol))
        .collect()
}

pub const HORODECKI_CRITERIA: [Criterion; 5] = [Criterion::Ppt, Criterion::Ccnr, Criterion::Esic, Criterion::E2d, Criterion::Lur];

pub fn default_horodecki_grid() -> Vec<f64> {
    (1..=9).map(|k| k as f64 / 10.0).collect()
}

/// Detection thresholds in `p` for `p·ρ_x + (1−p)·1/9` across an `x` grid.
pub fn horodecki_curves(grid: &[f64], tol: f64, suite: &DesignSuite) -> Result<Vec<ThresholdResult>> {
    let mut out = Vec::new();
    for &x in grid {
        let base = states::horodecki_state(x)?;
        let gen = |p: f64| states::mix_with_white_noise(&base, p);
        for c in HORODECKI_CRITERIA {
            out.push(threshold_for("horodecki_noise", c.name(), Some(x), gen, |rho| Ok(suite.evaluate(c, rho)?.margin), tol)?);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionCount {
    pub criterion: Criterion,
    pub detected: usize,
    pub fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub family: String,
    pub sample_count: usize,
    pub master_seed: u64,
    pub counts: Vec<CriterionCount>,
    /// Random draws needed to obtain the samples (NPT rejection), if any.
    pub draws: Option<u64>,
    /// For each criterion, the number of LSIC-detected samples it misses.
    pub lsic_not_detected_by: Vec<(Criterion, usize)>,
    /// Largest per-sample value gaps |ESIC − E2D| and |LSIC − L2D| when both are evaluated.
    pub max_linear_equivalence_gap: Option<f64>,
    pub max_nonlinear_equivalence_gap: Option<f64>,
}

impl SweepSummary {
    pub fn fraction(&self, c: Criterion) -> Option<f64> {
        self.counts.iter().find(|k| k.criterion == c).map(|k| k.fraction)
    }

    pub fn detected(&self, c: Criterion) -> Option<usize> {
        self.counts.iter().find(|k| k.criterion == c).map(|k| k.detected)
    }
}

fn summarize(family: String, master_seed: u64, criteria: &[Criterion], rows: Vec<(Vec<CriterionReport>, u64)>) -> SweepSummary {
    let n = rows.len();
    let idx = |c: Criterion| criteria.iter().position(|&k| k == c);
    let counts = criteria
        .iter()
        .enumerate()
        .map(|(j, &c)| {
            let detected = rows.iter().filter(|(r, _)| r[j].entangled).count();
            CriterionCount {
                criterion: c,
                detected,
                fraction: detected as f64 / n as f64,
            }
        })
        .collect();
    let lsic_not_detected_by = match idx(Criterion::Lsic) {
        Some(l) => criteria
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != l)
            .map(|(j, &c)| (c, rows.iter().filter(|(r, _)| r[l].entangled && !r[j].entangled).count()))
            .collect(),
        None => Vec::new(),
    };
    let gap = |a: Criterion, b: Criterion| -> Option<f64> {
        let (i, j) = (idx(a)?, idx(b)?);
        Some(rows.iter().map(|(r, _)| (r[i].value - r[j].value).abs()).fold(0.0, f64::max))
    };
    let draws: u64 = rows.iter().map(|(_, d)| d).sum();
    SweepSummary {
        family,
        sample_count: n,
        master_seed,
        counts,
        draws: Some(draws),
        lsic_not_detected_by,
        max_linear_equivalence_gap: gap(Criterion::Esic, Criterion::E2d),
        max_nonlinear_equivalence_gap: gap(Criterion::Lsic, Criterion::L2d),
    }
}

fn check_sweep_args(sample_count: usize, dims: BipartiteDims, criteria: &[Criterion]) -> Result<()> {
    if sample_count == 0 {
        return Err(Error::OutOfRange("sample count must be at least 1".into()));
    }
    if let Some(c) = criteria.iter().find(|c| c.requires_balanced() && !dims.is_balanced()) {
        return Err(Error::NotApplicable(format!("{c} requires balanced dimensions, got {dims}")));
    }
    Ok(())
}

/// Evaluates `criteria` on `sample_count` random NPT states of `dims`.
pub fn random_sweep(
    dims: BipartiteDims,
    sample_count: usize,
    master_seed: u64,
    criteria: &[Criterion],
    suite: &DesignSuite,
) -> Result<SweepSummary> {
    check_sweep_args(sample_count, dims, criteria)?;
    let rows = (0..sample_count as u64)
        .into_par_iter()
        .map(|i| {
            let mut stream = RngStream::new(master_seed, i);
            let (rho, draws) = states::random_npt_sample_counted(dims, &mut stream);
            let reports = criteria.iter().map(|&c| suite.evaluate(c, &rho)).collect::<Result<Vec<_>>>()?;
            Ok((reports, draws))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(format!("random_npt_{dims}"), master_seed, criteria, rows))
}

/// Evaluates every criterion on random chessboard states.
pub fn chessboard_sweep(sample_count: usize, master_seed: u64, suite: &DesignSuite) -> Result<SweepSummary> {
    let criteria = Criterion::ALL;
    check_sweep_args(sample_count, BipartiteDims { a: 3, b: 3 }, &criteria)?;
    let rows = (0..sample_count as u64)
        .into_par_iter()
        .map(|i| {
            let mut stream = RngStream::new(master_seed, i);
            let rho = states::chessboard_state(states::chessboard_parameters(&mut stream))?;
            let reports = criteria.iter().map(|&c| suite.evaluate(c, &rho)).collect::<Result<Vec<_>>>()?;
            Ok((reports, 1))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut summary = summarize("chessboard".to_string(), master_seed, &criteria, rows);
    summary.draws = None;
    Ok(summary)
}

pub const TABLE2_CRITERIA: [Criterion; 7] = Criterion::ALL;
pub const TABLE4_CRITERIA: [Criterion; 4] = [Criterion::Ppt, Criterion::Ccnr, Criterion::Esic, Criterion::E2d];

pub fn table2(suite: &DesignSuite, samples: usize, seed: u64) -> Result<SweepSummary> {
    random_sweep(BipartiteDims { a: 2, b: 2 }, samples, seed, &TABLE2_CRITERIA, suite)
}

pub fn table4(suite: &DesignSuite, samples: usize, seed: u64) -> Result<SweepSummary> {
    random_sweep(BipartiteDims { a: 2, b: 3 }, samples, seed, &TABLE4_CRITERIA, suite)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Tolerances {
    pub verdict_tol: f64,
    pub bisection_tol: f64,
    pub coarse_step: f64,
    pub hermitian_tol: f64,
    pub state_tol: f64,
    pub sic_moment_tol: f64,
    pub optimized_moment_tol: f64,
}

impl Tolerances {
    pub fn current(bisection_tol: f64) -> Self {
        Self {
            verdict_tol: VERDICT_TOL,
            bisection_tol,
            coarse_step: COARSE_STEP,
            hermitian_tol: matcore::HERMITIAN_TOL,
            state_tol: states::STATE_TOL,
            sic_moment_tol: designs::SIC_MOMENT_TOL,
            optimized_moment_tol: designs::OPTIMIZED_MOMENT_TOL,
        }
    }
}

/// Everything a CLI run produced, with the inputs needed to reproduce it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub master_seed: u64,
    pub samples: Option<usize>,
    pub tolerances: Tolerances,
    pub designs: Vec<DesignCertificate>,
    pub thresholds: Vec<ThresholdResult>,
    pub sweeps: Vec<SweepSummary>,
}

impl RunReport {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Serialization(e.to_string()))
    }

    /// One CSV block per result kind, each with its own header line.
    pub fn to_csv(&self) -> String {
        let mut out = Vec::new();
        if !self.thresholds.is_empty() {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(["family", "parameter", "criterion", "threshold", "bracket_width", "never_detected", "multiple_crossings"])
                .unwrap();
            for t in &self.thresholds {
                w.write_record([
                    t.family.clone(),
                    t.parameter.map(|x| x.to_string()).unwrap_or_default(),
                    t.criterion.clone(),
                    format!("{:.6}", t.threshold),
                    format!("{:.3e}", t.bracket_width),
                    t.never_detected.to_string(),
                    t.multiple_crossings.to_string(),
                ])
                .unwrap();
            }
            w.flush().unwrap();
        }
        if !self.sweeps.is_empty() {
            if !out.is_empty() {
                out.push(b'\n');
            }
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(["family", "criterion", "detected", "sample_count", "fraction", "master_seed"]).unwrap();
            for s in &self.sweeps {
                for c in &s.counts {
                    w.write_record([
                        s.family.clone(),
                        c.criterion.to_string(),
                        c.detected.to_string(),
                        s.sample_count.to_string(),
                        format!("{:.6}", c.fraction),
                        s.master_seed.to_string(),
                    ])
                    .unwrap();
                }
            }
            w.flush().unwrap();
        }
        String::from_utf8(out).expect("CSV output is UTF-8")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub master_seed: u64,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl VerifyReport {
    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let _ = writeln!(out, "[{}] {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        }
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        let _ = writeln!(out, "{} checks, {} failed (seed {})", self.checks.len(), failed, self.master_seed);
        out
    }
}

struct Checks(Vec<Check>);

impl Checks {
    fn push(&mut self, name: impl Into<String>, passed: bool, detail: String) {
        self.0.push(Check {
            name: name.into(),
            passed,
            detail,
        });
    }

    fn max_err(&mut self, name: &str, err: Result<f64>, tol: f64) {
        match err {
            Ok(e) => self.push(name, e <= tol, format!("max error {e:.3e} (tolerance {tol:.0e})")),
            Err(e) => self.push(name, false, format!("error: {e}")),
        }
    }
}

fn certify(checks: &mut Checks, label: &str, p: Result<ProjectiveDesign>) {
    match p {
        Ok(p) => {
            let cert = verify_design(&p);
            let detail = if cert.passed {
                format!(
                    "moment residual {:.3e}, frame gap {:.3e}, unit-norm deviation {:.3e}",
                    cert.moment_residual, cert.frame_potential_gap, cert.unit_norm_deviation
                )
            } else {
                cert.failures.join("; ")
            };
            checks.push(format!("design {label}"), cert.passed, detail);
        }
        Err(e) => checks.push(format!("design {label}"), false, format!("error: {e}")),
    }
}

/// Runs the invariant suite: design certification, probability and
/// completeness identities, equivalence sweeps and separable negative
/// controls. `extra_designs` are certified as well (e.g. imported files).
pub fn verify_all(master_seed: u64, extra_designs: &[(String, ProjectiveDesign)]) -> VerifyReport {
    let mut checks = Checks(Vec::new());
    let design_seed = master_seed ^ DESIGN_SEED_MASK;

    certify(&mut checks, "sic d=2", build_sic(2));
    certify(&mut checks, "sic d=3", build_sic(3));
    for (d, n) in [(2usize, 4usize), (2, 7), (2, 9), (3, 9), (3, 18)] {
        certify(&mut checks, &format!("optimized d={d} N={n}"), optimize_design(d, n, design_seed, DEFAULT_MAX_ITERS));
    }
    for (label, p) in extra_designs {
        certify(&mut checks, label, Ok(p.clone()));
    }

    let suite = match DesignSuite::with_defaults(master_seed) {
        Ok(s) => s,
        Err(e) => {
            checks.push("design suite", false, format!("error: {e}"));
            return finish(master_seed, checks);
        }
    };
    checks.0.extend(identity_suite(&suite, master_seed));
    equivalence_checks(&mut checks, &suite, master_seed, 100, 50);
    negative_controls(&mut checks, &suite, master_seed, 200);
    finish(master_seed, checks)
}

fn finish(master_seed: u64, checks: Checks) -> VerifyReport {
    let passed = checks.0.iter().all(|c| c.passed);
    VerifyReport {
        master_seed,
        checks: checks.0,
        passed,
    }
}

/// Probability, completeness, variance, CCNR and reconstruction identities
/// on seeded random states for both qubit and qutrit designs of `suite`.
pub fn identity_suite(suite: &DesignSuite, seed: u64) -> Vec<Check> {
    let mut checks = Checks(Vec::new());
    let base = 1u64 << 40;
    for d in [2usize, 3] {
        let designs = [suite.sic(d).unwrap(), suite.design(d).unwrap()];
        for nd in designs {
            let tag = format!("d={d} N={}", nd.n());
            let target = ComplexMatrix::identity(d).scale((d as f64 + 1.0) / 2.0);
            checks.max_err(&format!("square completeness {tag}"), Ok(nd.square_sum().max_abs_diff(&target)), 1e-8);
            let psym = designs::symmetric_projector(d);
            checks.max_err(&format!("tensor square = P_sym {tag}"), Ok(nd.tensor_square_sum().max_abs_diff(&psym)), 1e-8);

            let mut stream = RngStream::new(seed, base + d as u64);
            let mut prob_err: Result<f64> = Ok(0.0);
            let mut var_err: Result<f64> = Ok(0.0);
            let mut bound_violation: Result<f64> = Ok(0.0);
            for i in 0..200 {
                let rho = if i % 2 == 0 {
                    states::random_local_state(d, &mut stream)
                } else {
                    ComplexMatrix::projector(&states::random_pure_state(d, &mut stream))
                };
                let purity = rho.trace_product(&rho).re;
                let step = designs::design_probabilities(&rho, nd).map(|p| {
                    let s: f64 = p.iter().map(|x| x * x).sum();
                    (s - (1.0 + purity) / 2.0).abs()
                });
                prob_err = fold_max(prob_err, step);
                let var = criteria::variance_sum(&rho, nd);
                let floor = (d as f64 - 1.0) / 2.0;
                bound_violation = fold_max(bound_violation, var.clone().map(|v| (floor - v).max(0.0)));
                if i % 2 == 1 {
                    var_err = fold_max(var_err, var.map(|v| (v - floor).abs()));
                }
            }
            checks.max_err(&format!("sum p_k^2 = (1 + tr rho^2)/2 {tag}"), prob_err, 1e-8);
            checks.max_err(&format!("variance bound {tag}"), bound_violation, 1e-9);
            checks.max_err(&format!("variance equality at pure states {tag}"), var_err, 1e-8);
        }
    }

    for (dims, label) in [(BipartiteDims { a: 2, b: 2 }, "2x2"), (BipartiteDims { a: 2, b: 3 }, "2x3"), (BipartiteDims { a: 3, b: 3 }, "3x3")] {
        let mut stream = RngStream::new(seed, base + 10 + dims.total() as u64);
        let mut err: Result<f64> = Ok(0.0);
        for _ in 0..100 {
            let rho = states::random_density_matrix(dims, &mut stream);
            let step = criteria::ccnr(&rho).and_then(|c| {
                let s = criteria::operator_schmidt(&rho)?;
                Ok((c.value - s.lambdas.iter().sum::<f64>()).abs())
            });
            err = fold_max(err, step);
        }
        checks.max_err(&format!("CCNR trace norm = sum of Schmidt coefficients {label}"), err, 1e-9);
    }

    let sic3 = build_sic(3).unwrap();
    let rotation = states::random_unitary(3, &mut RngStream::new(seed ^ DESIGN_SEED_MASK, u64::MAX));
    let sup = superimpose(&sic3, &sic3, &rotation).unwrap();
    for (p, label) in [(build_sic(2).unwrap(), "d=2 N=4"), (sup, "d=3 N=18")] {
        let mut stream = RngStream::new(seed, base + 20 + p.n() as u64);
        let mut err: Result<f64> = Ok(0.0);
        for _ in 0..100 {
            let rho = states::random_local_state(p.dim(), &mut stream);
            let step = designs::povm_probabilities(&rho, &p)
                .and_then(|probs| designs::reconstruct_state(&probs, &p))
                .map(|back| back.max_abs_diff(&rho));
            err = fold_max(err, step);
        }
        checks.max_err(&format!("state reconstruction round trip {label}"), err, 1e-8);
    }
    checks.0
}

fn fold_max(acc: Result<f64>, step: Result<f64>) -> Result<f64> {
    Ok(acc?.max(step?))
}

/// Largest per-state gaps |E2D − ESIC| and |L2D − LSIC| over random states.
pub fn equivalence_gaps(suite: &DesignSuite, dims: BipartiteDims, count: usize, seed: u64, stream_base: u64) -> Result<(f64, f64)> {
    let mut linear: f64 = 0.0;
    let mut nonlinear: f64 = 0.0;
    for i in 0..count as u64 {
        let rho = states::random_density_matrix(dims, &mut RngStream::new(seed, stream_base + i));
        let esic = suite.evaluate(Criterion::Esic, &rho)?.value;
        let e2d = suite.evaluate(Criterion::E2d, &rho)?.value;
        linear = linear.max((esic - e2d).abs());
        if dims.is_balanced() {
            let lsic = suite.evaluate(Criterion::Lsic, &rho)?.value;
            let l2d = suite.evaluate(Criterion::L2d, &rho)?.value;
            nonlinear = nonlinear.max((lsic - l2d).abs());
        }
    }
    Ok((linear, nonlinear))
}

fn equivalence_checks(checks: &mut Checks, suite: &DesignSuite, seed: u64, qubit_count: usize, qutrit_count: usize) {
    let base = 1u64 << 41;
    for (dims, count) in [(BipartiteDims { a: 2, b: 2 }, qubit_count), (BipartiteDims { a: 3, b: 3 }, qutrit_count)] {
        match equivalence_gaps(suite, dims, count, seed, base + dims.total() as u64 * 1_000_000) {
            Ok((lin, nonlin)) => {
                checks.push(format!("E2D = ESIC {dims}"), lin <= 1e-6, format!("max gap {lin:.3e} over {count} states"));
                checks.push(format!("L2D = LSIC {dims}"), nonlin <= 1e-6, format!("max gap {nonlin:.3e} over {count} states"));
            }
            Err(e) => checks.push(format!("equivalence {dims}"), false, format!("error: {e}")),
        }
    }
}

/// Largest margin any criterion reports on random separable mixtures.
pub fn separable_max_margin(suite: &DesignSuite, dims: BipartiteDims, count: usize, seed: u64, stream_base: u64) -> Result<(f64, Criterion)> {
    let mut worst = (f64::NEG_INFINITY, Criterion::Ppt);
    for i in 0..count as u64 {
        let mut stream = RngStream::new(seed, stream_base + i);
        let terms = 1 + (stream.uniform() * 8.0) as usize;
        let rho = states::random_separable_state(dims, terms.min(8), &mut stream);
        for c in Criterion::ALL {
            if c.requires_balanced() && !dims.is_balanced() {
                continue;
            }
            let m = suite.evaluate(c, &rho)?.margin;
            if m > worst.0 {
                worst = (m, c);
            }
        }
    }
    Ok(worst)
}

fn negative_controls(checks: &mut Checks, suite: &DesignSuite, seed: u64, count: usize) {
    let base = 1u64 << 42;
    for dims in [BipartiteDims { a: 2, b: 2 }, BipartiteDims { a: 2, b: 3 }, BipartiteDims { a: 3, b: 3 }] {
        match separable_max_margin(suite, dims, count, seed, base + dims.total() as u64 * 1_000_000) {
            Ok((m, c)) => checks.push(
                format!("separable negative control {dims}"),
                m <= VERDICT_TOL,
                format!("largest margin {m:.3e} ({c}) over {count} mixtures"),
            ),
            Err(e) => checks.push(format!("separable negative control {dims}"), false, format!("error: {e}")),
        }
    }
}

/// LOOs of the pure state, exposed for callers that want the alternative LUR variant.
pub fn pure_state_loos(kind: BellKind) -> Result<SchmidtDecomposition> {
    criteria::operator_schmidt(&states::bell_state(kind))
}
