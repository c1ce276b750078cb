//! Separability criteria and the operator Schmidt decomposition.
//!
//! Linear criteria report `value − bound` as their margin (bound 1 for the
//! trace-norm tests, 0 for PPT); the nonlinear variance tests have bound 0
//! and margin `−value`. A state is flagged entangled when the margin exceeds
//! [`VERDICT_TOL`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::designs::{DesignKind, NormalizedDesign};
use crate::error::{Error, Result};
use crate::matcore::{
    self, complete_orthonormal, expectation_product, kron, kron_vec, BipartiteDims, ComplexMatrix, Subsystem, C64,
};
use crate::states::DensityMatrix;

pub const VERDICT_TOL: f64 = 1e-9;

/// Largest imaginary part tolerated in a correlation `tr(ρ Π_i ⊗ Π_j)`.
pub const CORRELATION_IMAG_TOL: f64 = 1e-8;

/// Schmidt coefficients at or below this are treated as zero and their
/// operators are replaced by a canonical completion.
pub const SCHMIDT_RANK_TOL: f64 = 1e-12;

const SCHMIDT_RESIDUAL_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Criterion {
    #[serde(rename = "PPT")]
    Ppt,
    #[serde(rename = "CCNR")]
    Ccnr,
    #[serde(rename = "ESIC")]
    Esic,
    #[serde(rename = "E2D")]
    E2d,
    #[serde(rename = "LUR")]
    Lur,
    #[serde(rename = "LSIC")]
    Lsic,
    #[serde(rename = "L2D")]
    L2d,
}

impl Criterion {
    pub const ALL: [Criterion; 7] = [
        Criterion::Ppt,
        Criterion::Ccnr,
        Criterion::Esic,
        Criterion::E2d,
        Criterion::Lur,
        Criterion::Lsic,
        Criterion::L2d,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Criterion::Ppt => "PPT",
            Criterion::Ccnr => "CCNR",
            Criterion::Esic => "ESIC",
            Criterion::E2d => "E2D",
            Criterion::Lur => "LUR",
            Criterion::Lsic => "LSIC",
            Criterion::L2d => "L2D",
        }
    }

    pub fn is_nonlinear(self) -> bool {
        matches!(self, Criterion::Lur | Criterion::Lsic | Criterion::L2d)
    }

    /// LUR, LSIC and L2D need `d_A = d_B`.
    pub fn requires_balanced(self) -> bool {
        self.is_nonlinear()
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Criterion {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Criterion::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::OutOfRange(format!("unknown criterion {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub criterion: Criterion,
    pub value: f64,
    pub bound: f64,
    pub entangled: bool,
    pub margin: f64,
}

impl CriterionReport {
    fn linear(criterion: Criterion, value: f64, bound: f64) -> Self {
        let margin = value - bound;
        Self {
            criterion,
            value,
            bound,
            entangled: margin > VERDICT_TOL,
            margin,
        }
    }

    fn nonlinear(criterion: Criterion, value: f64) -> Self {
        let margin = -value;
        Self {
            criterion,
            value,
            bound: 0.0,
            entangled: margin > VERDICT_TOL,
            margin,
        }
    }
}

/// Orthonormal Hermitian basis of `d × d` matrices: diagonal units first,
/// then for each `i < j` the symmetric and antisymmetric pair combinations.
pub fn hermitian_basis(d: usize) -> Vec<ComplexMatrix> {
    let mut basis = Vec::with_capacity(d * d);
    for i in 0..d {
        let mut m = ComplexMatrix::zeros(d, d);
        m[(i, i)] = C64::new(1.0, 0.0);
        basis.push(m);
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..d {
        for j in i + 1..d {
            let mut s = ComplexMatrix::zeros(d, d);
            s[(i, j)] = C64::new(h, 0.0);
            s[(j, i)] = C64::new(h, 0.0);
            basis.push(s);
            let mut a = ComplexMatrix::zeros(d, d);
            a[(i, j)] = C64::new(0.0, -h);
            a[(j, i)] = C64::new(0.0, h);
            basis.push(a);
        }
    }
    basis
}

/// `ρ = Σ_k λ_k G_k^A ⊗ G_k^B` with orthonormal Hermitian `G`.
///
/// `ops_a` has `d_A²` entries and `ops_b` has `d_B²`; the first
/// `lambdas.len() = min(d_A², d_B²)` of each are paired.
#[derive(Clone, Debug)]
pub struct SchmidtDecomposition {
    pub lambdas: Vec<f64>,
    pub ops_a: Vec<ComplexMatrix>,
    pub ops_b: Vec<ComplexMatrix>,
}

impl SchmidtDecomposition {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let da = self.ops_a[0].rows();
        let db = self.ops_b[0].rows();
        let mut acc = ComplexMatrix::zeros(da * db, da * db);
        for ((l, a), b) in self.lambdas.iter().zip(&self.ops_a).zip(&self.ops_b) {
            acc = &acc + &kron(a, b).scale(*l);
        }
        acc
    }
}

/// Real coefficients `r_ab = tr(ρ g_a ⊗ h_b)` in the canonical Hermitian bases.
fn hermitian_coefficients(rho: &DensityMatrix, ga: &[ComplexMatrix], gb: &[ComplexMatrix]) -> Result<ComplexMatrix> {
    let dims = rho.dims();
    let mut r = ComplexMatrix::zeros(ga.len(), gb.len());
    for (a, x) in ga.iter().enumerate() {
        for (b, y) in gb.iter().enumerate() {
            let z = expectation_product(rho.matrix(), dims, x, y);
            if z.im.abs() > CORRELATION_IMAG_TOL {
                return Err(Error::ImaginaryResidue(z.im));
            }
            r[(a, b)] = C64::new(z.re, 0.0);
        }
    }
    Ok(r)
}

fn combine(coeffs: &[C64], basis: &[ComplexMatrix]) -> ComplexMatrix {
    let d = basis[0].rows();
    coeffs
        .iter()
        .zip(basis)
        .fold(ComplexMatrix::zeros(d, d), |acc, (c, g)| &acc + &g.scale(c.re))
}

/// Operator Schmidt decomposition via the SVD of the realignment written in
/// the canonical Hermitian bases, where it is a real matrix. Directions with
/// vanishing Schmidt coefficient are completed on each side by Gram–Schmidt
/// over the canonical basis.
pub fn operator_schmidt(rho: &DensityMatrix) -> Result<SchmidtDecomposition> {
    let dims = rho.dims();
    let ga = hermitian_basis(dims.a);
    let gb = hermitian_basis(dims.b);
    let r = hermitian_coefficients(rho, &ga, &gb)?;
    let svd = matcore::svd(&r)?;

    let keep = svd.singular_values.iter().take_while(|&&s| s > SCHMIDT_RANK_TOL).count();
    let real_col = |m: &ComplexMatrix, j: usize| -> Vec<C64> { m.column(j).iter().map(|z| C64::new(z.re, 0.0)).collect() };
    let mut left: Vec<Vec<C64>> = (0..keep).map(|j| real_col(&svd.u, j)).collect();
    let mut right: Vec<Vec<C64>> = (0..keep).map(|j| real_col(&svd.v, j)).collect();
    let na = ga.len();
    let nb = gb.len();
    left.extend(complete_orthonormal(&left, na, na - keep));
    right.extend(complete_orthonormal(&right, nb, nb - keep));

    let decomposition = SchmidtDecomposition {
        lambdas: svd.singular_values.clone(),
        ops_a: left.iter().map(|c| combine(c, &ga)).collect(),
        ops_b: right.iter().map(|c| combine(c, &gb)).collect(),
    };
    let residual = decomposition.reconstruct().max_abs_diff(rho.matrix());
    if residual > SCHMIDT_RESIDUAL_TOL {
        return Err(Error::SchmidtResidual(residual));
    }
    Ok(decomposition)
}

pub fn ppt(rho: &DensityMatrix) -> Result<CriterionReport> {
    let min = matcore::min_eigenvalue(&rho.partial_transpose())?;
    Ok(CriterionReport::linear(Criterion::Ppt, -min, 0.0))
}

pub fn ccnr(rho: &DensityMatrix) -> Result<CriterionReport> {
    let r = matcore::realign(rho.matrix(), rho.dims())?;
    Ok(CriterionReport::linear(Criterion::Ccnr, matcore::trace_norm(&r)?, 1.0))
}

fn check_design_dim(nd: &NormalizedDesign, d: usize, side: &str) -> Result<()> {
    if nd.dim() != d {
        return Err(Error::DimensionMismatch(format!(
            "design in dimension {} applied to subsystem {side} of dimension {d}",
            nd.dim()
        )));
    }
    Ok(())
}

/// `[C]_ij = tr(ρ Π_i^A ⊗ Π_j^B)`.
pub fn correlation_matrix(rho: &DensityMatrix, nd_a: &NormalizedDesign, nd_b: &NormalizedDesign) -> Result<ComplexMatrix> {
    let dims = rho.dims();
    check_design_dim(nd_a, dims.a, "A")?;
    check_design_dim(nd_b, dims.b, "B")?;
    let scale = nd_a.scale() * nd_b.scale();
    let m = rho.matrix();
    let mut c = ComplexMatrix::zeros(nd_a.n(), nd_b.n());
    for (i, u) in nd_a.vectors().iter().enumerate() {
        for (j, v) in nd_b.vectors().iter().enumerate() {
            let w = kron_vec(u, v);
            let z: C64 = w.iter().zip(m.apply(&w)).map(|(a, b)| a.conj() * b).sum::<C64>() * scale;
            if z.im.abs() > CORRELATION_IMAG_TOL {
                return Err(Error::ImaginaryResidue(z.im));
            }
            c[(i, j)] = C64::new(z.re, 0.0);
        }
    }
    Ok(c)
}

fn design_tag(sic: Criterion, general: Criterion, designs: &[&NormalizedDesign]) -> Criterion {
    if designs.iter().all(|d| d.kind() == DesignKind::Sic) {
        sic
    } else {
        general
    }
}

/// Trace norm of the design correlation matrix. Reported as ESIC when both
/// designs are SICs and as E2D otherwise.
pub fn linear_design_value(rho: &DensityMatrix, nd_a: &NormalizedDesign, nd_b: &NormalizedDesign) -> Result<CriterionReport> {
    let c = correlation_matrix(rho, nd_a, nd_b)?;
    let tag = design_tag(Criterion::Esic, Criterion::E2d, &[nd_a, nd_b]);
    Ok(CriterionReport::linear(tag, matcore::trace_norm(&c)?, 1.0))
}

fn require_balanced(dims: BipartiteDims, what: &str) -> Result<()> {
    if !dims.is_balanced() {
        return Err(Error::NotApplicable(format!("{what} requires balanced dimensions, got {dims}")));
    }
    Ok(())
}

/// Local-uncertainty test with the Schmidt LOOs of `rho` itself.
pub fn lur(rho: &DensityMatrix) -> Result<CriterionReport> {
    require_balanced(rho.dims(), "LUR")?;
    lur_with_loos(rho, &operator_schmidt(rho)?)
}

/// `1 − Σ_k ⟨G_k^A ⊗ G_k^B⟩ − ½ Σ_k ⟨G_k^A ⊗ 1 − 1 ⊗ G_k^B⟩²` for given LOOs.
pub fn lur_with_loos(rho: &DensityMatrix, loos: &SchmidtDecomposition) -> Result<CriterionReport> {
    let dims = rho.dims();
    require_balanced(dims, "LUR")?;
    let d2 = dims.a * dims.a;
    if loos.ops_a.len() != d2 || loos.ops_b.len() != d2 || loos.ops_a[0].rows() != dims.a {
        return Err(Error::DimensionMismatch(format!(
            "{} + {} observables for a {dims} system",
            loos.ops_a.len(),
            loos.ops_b.len()
        )));
    }
    let ra = rho.marginal(Subsystem::A);
    let rb = rho.marginal(Subsystem::B);
    let mut correlation = 0.0;
    let mut quadratic = 0.0;
    for (ga, gb) in loos.ops_a.iter().zip(&loos.ops_b) {
        correlation += expectation_product(rho.matrix(), dims, ga, gb).re;
        let diff = ra.trace_product(ga).re - rb.trace_product(gb).re;
        quadratic += diff * diff;
    }
    Ok(CriterionReport::nonlinear(Criterion::Lur, 1.0 - correlation - 0.5 * quadratic))
}

/// `1 + Σ_k ⟨Π_k ⊗ Π_k⟩ − ½ Σ_k (⟨Π_k⟩_A + ⟨Π_k⟩_B)²` with the same design on
/// both sides. Reported as LSIC for a SIC and L2D otherwise.
pub fn nonlinear_design_value(rho: &DensityMatrix, nd: &NormalizedDesign) -> Result<CriterionReport> {
    let dims = rho.dims();
    require_balanced(dims, "LSIC/L2D")?;
    check_design_dim(nd, dims.a, "A")?;
    let m = rho.matrix();
    let ra = rho.marginal(Subsystem::A);
    let rb = rho.marginal(Subsystem::B);
    let s = nd.scale();
    let mut value = 1.0;
    for v in nd.vectors() {
        let w = kron_vec(v, v);
        let joint: C64 = w.iter().zip(m.apply(&w)).map(|(a, b)| a.conj() * b).sum::<C64>() * (s * s);
        if joint.im.abs() > CORRELATION_IMAG_TOL {
            return Err(Error::ImaginaryResidue(joint.im));
        }
        let a: f64 = v.iter().zip(ra.apply(v)).map(|(x, y)| (x.conj() * y).re).sum::<f64>() * s;
        let b: f64 = v.iter().zip(rb.apply(v)).map(|(x, y)| (x.conj() * y).re).sum::<f64>() * s;
        value += joint.re - 0.5 * (a + b) * (a + b);
    }
    let tag = design_tag(Criterion::Lsic, Criterion::L2d, &[nd]);
    Ok(CriterionReport::nonlinear(tag, value))
}

/// `Σ_k [tr(ρ Π_k²) − tr(ρ Π_k)²]` for a single-system state.
pub fn variance_sum(rho: &ComplexMatrix, nd: &NormalizedDesign) -> Result<f64> {
    let probs = crate::designs::design_probabilities(rho, nd)?;
    // Π_k² = scale·Π_k for rank-one Π_k.
    Ok(probs.iter().map(|p| nd.scale() * p - p * p).sum())
}
