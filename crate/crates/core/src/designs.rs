//! Equal-weight projective 2-designs: SIC POVMs, numerically optimized
//! designs and unions of rotated designs.
//!
//! A set of unit vectors `{φ_k}` in `C^d` is a 2-design when its second
//! moment `(1/N) Σ_k (|φ_k⟩⟨φ_k|)^{⊗2}` equals the Haar average
//! `2·P_sym/(d(d+1))`. Equivalently the frame potential
//! `Σ_{ij} |⟨φ_i|φ_j⟩|⁴` attains its lower bound `2N²/(d(d+1))`.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{kron, ComplexMatrix, C64};
use crate::states::RngStream;

/// Unit-norm tolerance for design vectors.
pub const UNIT_NORM_TOL: f64 = 1e-10;
/// Second-moment tolerance for analytic SICs.
pub const SIC_MOMENT_TOL: f64 = 1e-8;
/// Second-moment tolerance for optimized or superimposed designs.
pub const OPTIMIZED_MOMENT_TOL: f64 = 1e-6;
/// Relative frame-potential gap at which the optimizer declares convergence.
pub const FRAME_GAP_TOL: f64 = 1e-12;
/// Unitarity tolerance for superposition rotations.
pub const UNITARY_TOL: f64 = 1e-10;

pub const DEFAULT_MAX_ITERS: usize = 50_000;
pub const MAX_RESTARTS: u64 = 20;

// Hand-off from gradient descent to Levenberg–Marquardt.
const DESCENT_HANDOFF_GAP: f64 = 1e-8;
const LM_MAX_ITERS: usize = 300;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignKind {
    Sic,
    Optimized,
    Superimposed,
}

impl DesignKind {
    pub fn moment_tolerance(self) -> f64 {
        match self {
            DesignKind::Sic => SIC_MOMENT_TOL,
            DesignKind::Optimized | DesignKind::Superimposed => OPTIMIZED_MOMENT_TOL,
        }
    }
}

impl fmt::Display for DesignKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DesignKind::Sic => "sic",
            DesignKind::Optimized => "optimized",
            DesignKind::Superimposed => "superimposed",
        })
    }
}

/// An equal-weight set of unit vectors in `C^dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectiveDesign {
    dim: usize,
    kind: DesignKind,
    vectors: Vec<Vec<C64>>,
}

impl ProjectiveDesign {
    pub fn new(dim: usize, kind: DesignKind, vectors: Vec<Vec<C64>>) -> Result<Self> {
        if dim < 2 {
            return Err(Error::UnsupportedDimension(dim));
        }
        if vectors.is_empty() {
            return Err(Error::InvalidDesign("no vectors".into()));
        }
        if let Some(bad) = vectors.iter().position(|v| v.len() != dim) {
            return Err(Error::InvalidDesign(format!(
                "vector {bad} has length {} in dimension {dim}",
                vectors[bad].len()
            )));
        }
        Ok(Self { dim, kind, vectors })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.vectors.len()
    }

    pub fn kind(&self) -> DesignKind {
        self.kind
    }

    pub fn vectors(&self) -> &[Vec<C64>] {
        &self.vectors
    }

    /// `|⟨φ_i|φ_j⟩|²` for all pairs.
    pub fn overlaps(&self) -> Vec<Vec<f64>> {
        self.vectors
            .iter()
            .map(|a| self.vectors.iter().map(|b| inner(a, b).norm_sqr()).collect())
            .collect()
    }

    pub fn frame_potential(&self) -> f64 {
        frame_potential(&self.vectors)
    }

    pub fn frame_bound(&self) -> f64 {
        frame_bound(self.dim, self.n())
    }

    /// Frobenius distance of the second moment from the Haar average.
    pub fn moment_residual(&self) -> f64 {
        moment_residual(&self.vectors, self.dim)
    }

    pub fn to_json(&self) -> Result<String> {
        let file = DesignFile {
            dim: self.dim,
            n: self.n(),
            kind: self.kind,
            vectors: self.vectors.iter().map(|v| v.iter().map(|z| [z.re, z.im]).collect()).collect(),
        };
        serde_json::to_string_pretty(&file).map_err(|e| Error::Serialization(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: DesignFile = serde_json::from_str(text).map_err(|e| Error::Serialization(e.to_string()))?;
        if file.n != file.vectors.len() {
            return Err(Error::InvalidDesign(format!(
                "header says n = {} but {} vectors are present",
                file.n,
                file.vectors.len()
            )));
        }
        let vectors = file
            .vectors
            .into_iter()
            .map(|v| v.into_iter().map(|[re, im]| C64::new(re, im)).collect())
            .collect();
        Self::new(file.dim, file.kind, vectors)
    }
}

#[derive(Serialize, Deserialize)]
struct DesignFile {
    dim: usize,
    n: usize,
    kind: DesignKind,
    vectors: Vec<Vec<[f64; 2]>>,
}

fn inner(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

fn normalized(v: &[C64]) -> Vec<C64> {
    let n = inner(v, v).re.sqrt();
    v.iter().map(|x| x / n).collect()
}

pub fn frame_bound(dim: usize, n: usize) -> f64 {
    2.0 * (n * n) as f64 / (dim * (dim + 1)) as f64
}

fn frame_potential(vectors: &[Vec<C64>]) -> f64 {
    let mut fp = 0.0;
    for (i, a) in vectors.iter().enumerate() {
        fp += inner(a, a).norm_sqr().powi(2);
        for b in &vectors[i + 1..] {
            fp += 2.0 * inner(a, b).norm_sqr().powi(2);
        }
    }
    fp
}

/// Entries of `(1/N) Σ_k (|φ_k⟩⟨φ_k|)^{⊗2} − (1 + SWAP)/(d(d+1))`, row-major over `d² × d²`.
fn moment_deviation(vectors: &[Vec<C64>], d: usize) -> Vec<C64> {
    let d2 = d * d;
    let mut s = vec![C64::new(0.0, 0.0); d2 * d2];
    let w = 1.0 / vectors.len() as f64;
    for v in vectors {
        let vv: Vec<C64> = (0..d2).map(|r| v[r / d] * v[r % d]).collect();
        for r in 0..d2 {
            let a = vv[r] * w;
            for c in 0..d2 {
                s[r * d2 + c] += a * vv[c].conj();
            }
        }
    }
    let haar = 1.0 / (d * (d + 1)) as f64;
    for r in 0..d2 {
        let swapped = (r % d) * d + r / d;
        s[r * d2 + r] -= haar;
        s[r * d2 + swapped] -= haar;
    }
    s
}

fn moment_residual(vectors: &[Vec<C64>], d: usize) -> f64 {
    moment_deviation(vectors, d).iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// SIC POVM vectors for `d ∈ {2, 3}`.
///
/// `d = 2` is the tetrahedron with Bloch vectors `(1,1,1)`, `(1,−1,−1)`,
/// `(−1,1,−1)`, `(−1,−1,1)` over `√3`; `d = 3` is the Weyl–Heisenberg orbit
/// `X^j Z^k |f⟩` of `|f⟩ = (0, 1, −1)/√2`.
pub fn build_sic(d: usize) -> Result<ProjectiveDesign> {
    let vectors = match d {
        2 => {
            let s = 1.0 / 3.0f64.sqrt();
            [[1.0, 1.0, 1.0], [1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]]
                .iter()
                .map(|n| bloch_to_ket(n[0] * s, n[1] * s, n[2] * s))
                .collect()
        }
        3 => {
            let h = std::f64::consts::FRAC_1_SQRT_2;
            let fiducial = [C64::new(0.0, 0.0), C64::new(h, 0.0), C64::new(-h, 0.0)];
            let omega = C64::from_polar(1.0, 2.0 * PI / 3.0);
            let mut out = Vec::with_capacity(9);
            for j in 0..3 {
                for k in 0..3 {
                    // (X^j Z^k f)_m = ω^{k(m−j)} f_{m−j}
                    let v = (0..3)
                        .map(|m| {
                            let src = (m + 3 - j) % 3;
                            fiducial[src] * omega.powu((k * src) as u32)
                        })
                        .collect();
                    out.push(v);
                }
            }
            out
        }
        _ => return Err(Error::UnsupportedDimension(d)),
    };
    ProjectiveDesign::new(d, DesignKind::Sic, vectors)
}

fn bloch_to_ket(x: f64, y: f64, z: f64) -> Vec<C64> {
    let n = (2.0 * (1.0 + z)).sqrt();
    vec![C64::new((1.0 + z) / n, 0.0), C64::new(x / n, y / n)]
}

/// Minimizes the frame potential over `n` unit vectors in `C^d`.
///
/// Each restart draws a random start from stream `(seed, restart)`, runs
/// projected gradient descent with Armijo backtracking on the product of unit
/// spheres, then polishes with Levenberg–Marquardt on the second-moment
/// residual. Returns the first restart whose relative frame-potential gap is
/// at most [`FRAME_GAP_TOL`].
pub fn optimize_design(d: usize, n: usize, seed: u64, max_iters: usize) -> Result<ProjectiveDesign> {
    if d < 2 {
        return Err(Error::UnsupportedDimension(d));
    }
    if n < d * d {
        return Err(Error::InvalidDesign(format!("a 2-design in dimension {d} needs at least {} vectors, got {n}", d * d)));
    }
    let bound = frame_bound(d, n);
    let mut best_gap = f64::INFINITY;
    for restart in 0..MAX_RESTARTS {
        let mut stream = RngStream::new(seed, restart);
        let start: Vec<Vec<C64>> = (0..n)
            .map(|_| normalized(&(0..d).map(|_| stream.complex_normal()).collect::<Vec<_>>()))
            .collect();
        let descended = gradient_descent(start, bound, max_iters);
        let polished = levenberg_marquardt(descended, d);
        let gap = (frame_potential(&polished) - bound) / bound;
        if gap <= FRAME_GAP_TOL {
            return ProjectiveDesign::new(d, DesignKind::Optimized, polished);
        }
        best_gap = best_gap.min(gap);
    }
    Err(Error::DesignNotConverged { best_gap })
}

fn frame_gradient(v: &[Vec<C64>]) -> Vec<Vec<C64>> {
    let n = v.len();
    let gram: Vec<Vec<C64>> = v.iter().map(|a| v.iter().map(|b| inner(a, b)).collect()).collect();
    (0..n)
        .map(|i| {
            let d = v[i].len();
            let mut g = vec![C64::new(0.0, 0.0); d];
            for j in 0..n {
                let coef = gram[j][i] * gram[i][j].norm_sqr() * 4.0;
                for (x, y) in g.iter_mut().zip(&v[j]) {
                    *x += coef * y;
                }
            }
            let radial = inner(&v[i], &g).re;
            for (x, y) in g.iter_mut().zip(&v[i]) {
                *x -= y * radial;
            }
            g
        })
        .collect()
}

fn gradient_descent(mut v: Vec<Vec<C64>>, bound: f64, max_iters: usize) -> Vec<Vec<C64>> {
    let mut f = frame_potential(&v);
    let mut step = 0.1;
    for _ in 0..max_iters {
        if (f - bound) / bound <= DESCENT_HANDOFF_GAP {
            break;
        }
        let g = frame_gradient(&v);
        let g2: f64 = g.iter().flatten().map(|x| x.norm_sqr()).sum();
        if g2 == 0.0 {
            break;
        }
        loop {
            let trial: Vec<Vec<C64>> = v
                .iter()
                .zip(&g)
                .map(|(a, ga)| normalized(&a.iter().zip(ga).map(|(x, y)| x - y * step).collect::<Vec<_>>()))
                .collect();
            let ft = frame_potential(&trial);
            if ft <= f - 1e-4 * step * g2 || step < 1e-14 {
                if ft < f {
                    v = trial;
                    f = ft;
                }
                break;
            }
            step *= 0.5;
        }
        if step < 1e-14 {
            break;
        }
        step *= 1.5;
    }
    v
}

fn unpack(x: &[f64], n: usize, d: usize) -> Vec<Vec<C64>> {
    (0..n)
        .map(|k| normalized(&(0..d).map(|a| C64::new(x[k * d + a], x[n * d + k * d + a])).collect::<Vec<_>>()))
        .collect()
}

fn residual_vector(x: &[f64], n: usize, d: usize) -> Vec<f64> {
    let dev = moment_deviation(&unpack(x, n, d), d);
    dev.iter().map(|z| z.re).chain(dev.iter().map(|z| z.im)).collect()
}

fn levenberg_marquardt(start: Vec<Vec<C64>>, d: usize) -> Vec<Vec<C64>> {
    let n = start.len();
    let m = 2 * n * d;
    let mut x = vec![0.0; m];
    for (k, v) in start.iter().enumerate() {
        for a in 0..d {
            x[k * d + a] = v[a].re;
            x[n * d + k * d + a] = v[a].im;
        }
    }
    let mut r = residual_vector(&x, n, d);
    let mut cost: f64 = r.iter().map(|e| e * e).sum();
    let mut mu = 1e-3;
    let h = 1e-7;
    for _ in 0..LM_MAX_ITERS {
        if cost.sqrt() <= 1e-14 {
            break;
        }
        // Central-difference Jacobian, stored column by column.
        let jac: Vec<Vec<f64>> = (0..m)
            .map(|k| {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[k] += h;
                xm[k] -= h;
                let rp = residual_vector(&xp, n, d);
                let rm = residual_vector(&xm, n, d);
                rp.iter().zip(&rm).map(|(a, b)| (a - b) / (2.0 * h)).collect()
            })
            .collect();
        let mut jtj = vec![0.0; m * m];
        for a in 0..m {
            for b in a..m {
                let s: f64 = jac[a].iter().zip(&jac[b]).map(|(p, q)| p * q).sum();
                jtj[a * m + b] = s;
                jtj[b * m + a] = s;
            }
        }
        let jtr: Vec<f64> = jac.iter().map(|col| -col.iter().zip(&r).map(|(p, q)| p * q).sum::<f64>()).collect();
        let mut accepted = false;
        while mu < 1e10 {
            let mut a = jtj.clone();
            for i in 0..m {
                a[i * m + i] += mu;
            }
            if let Some(dx) = cholesky_solve(&a, &jtr, m) {
                let xt: Vec<f64> = x.iter().zip(&dx).map(|(p, q)| p + q).collect();
                let rt = residual_vector(&xt, n, d);
                let ct: f64 = rt.iter().map(|e| e * e).sum();
                if ct < cost {
                    x = xt;
                    r = rt;
                    cost = ct;
                    mu = (mu / 3.0).max(1e-12);
                    accepted = true;
                    break;
                }
            }
            mu *= 4.0;
        }
        if !accepted {
            break;
        }
    }
    unpack(&x, n, d)
}

/// Solves `a·x = b` for symmetric positive definite `a` (row-major `m × m`).
fn cholesky_solve(a: &[f64], b: &[f64], m: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i * m + k] * l[j * m + k]).sum();
            if i == j {
                let diag = a[i * m + i] - s;
                if diag <= 0.0 {
                    return None;
                }
                l[i * m + i] = diag.sqrt();
            } else {
                l[i * m + j] = (a[i * m + j] - s) / l[j * m + j];
            }
        }
    }
    let mut y = vec![0.0; m];
    for i in 0..m {
        let s: f64 = (0..i).map(|k| l[i * m + k] * y[k]).sum();
        y[i] = (b[i] - s) / l[i * m + i];
    }
    let mut x = vec![0.0; m];
    for i in (0..m).rev() {
        let s: f64 = (i + 1..m).map(|k| l[k * m + i] * x[k]).sum();
        x[i] = (y[i] - s) / l[i * m + i];
    }
    Some(x)
}

/// Union of `a` and `rotation·b`.
pub fn superimpose(a: &ProjectiveDesign, b: &ProjectiveDesign, rotation: &ComplexMatrix) -> Result<ProjectiveDesign> {
    if a.dim != b.dim || rotation.rows() != a.dim || rotation.cols() != a.dim {
        return Err(Error::DimensionMismatch(format!(
            "designs in dimensions {} and {} with a {}x{} rotation",
            a.dim,
            b.dim,
            rotation.rows(),
            rotation.cols()
        )));
    }
    let defect = rotation.unitarity_defect();
    if defect > UNITARY_TOL {
        return Err(Error::NotUnitary(defect));
    }
    let mut vectors = a.vectors.clone();
    vectors.extend(b.vectors.iter().map(|v| rotation.apply(v)));
    ProjectiveDesign::new(a.dim, DesignKind::Superimposed, vectors)
}

/// Certification of a design against its kind's tolerances.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignCertificate {
    pub dim: usize,
    pub n: usize,
    pub kind: DesignKind,
    pub moment_residual: f64,
    pub moment_tolerance: f64,
    pub frame_potential: f64,
    pub frame_bound: f64,
    /// `(frame_potential − frame_bound) / frame_bound`.
    pub frame_potential_gap: f64,
    pub unit_norm_deviation: f64,
    pub passed: bool,
    /// Names of the violated invariants.
    pub failures: Vec<String>,
}

pub fn verify_design(p: &ProjectiveDesign) -> DesignCertificate {
    let unit_norm_deviation = p.vectors.iter().map(|v| (inner(v, v).re.sqrt() - 1.0).abs()).fold(0.0, f64::max);
    let moment_residual = p.moment_residual();
    let frame_potential = p.frame_potential();
    let frame_bound = p.frame_bound();
    let frame_potential_gap = (frame_potential - frame_bound) / frame_bound;
    let moment_tolerance = p.kind.moment_tolerance();
    // The gap is n²·‖residual‖²/bound for unit vectors; allow the gap implied by the moment tolerance.
    let gap_tolerance = moment_tolerance * moment_tolerance * (p.dim * (p.dim + 1)) as f64 / 2.0 + 1e-13;

    let mut failures = Vec::new();
    if !(unit_norm_deviation <= UNIT_NORM_TOL) {
        failures.push(format!("unit_norm: deviation {unit_norm_deviation:e} > {UNIT_NORM_TOL:e}"));
    }
    if !(moment_residual <= moment_tolerance) {
        failures.push(format!("second_moment: residual {moment_residual:e} > {moment_tolerance:e}"));
    }
    if !(frame_potential_gap.abs() <= gap_tolerance) {
        failures.push(format!("frame_potential: relative gap {frame_potential_gap:e} > {gap_tolerance:e}"));
    }
    DesignCertificate {
        dim: p.dim,
        n: p.n(),
        kind: p.kind,
        moment_residual,
        moment_tolerance,
        frame_potential,
        frame_bound,
        frame_potential_gap,
        unit_norm_deviation,
        passed: failures.is_empty(),
        failures,
    }
}

/// The operators `Π_k = √(d(d+1)/(2N))·|φ_k⟩⟨φ_k|` for a design.
#[derive(Clone, Debug)]
pub struct NormalizedDesign {
    dim: usize,
    kind: DesignKind,
    scale: f64,
    vectors: Vec<Vec<C64>>,
    elements: Vec<ComplexMatrix>,
}

impl NormalizedDesign {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[ComplexMatrix] {
        &self.elements
    }

    /// `√(d(d+1)/(2N))`.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn kind(&self) -> DesignKind {
        self.kind
    }

    pub(crate) fn vectors(&self) -> &[Vec<C64>] {
        &self.vectors
    }

    /// `Σ_k Π_k²`.
    pub fn square_sum(&self) -> ComplexMatrix {
        self.elements
            .iter()
            .fold(ComplexMatrix::zeros(self.dim, self.dim), |acc, e| &acc + &(e * e))
    }

    /// `Σ_k Π_k ⊗ Π_k`.
    pub fn tensor_square_sum(&self) -> ComplexMatrix {
        let d2 = self.dim * self.dim;
        self.elements
            .iter()
            .fold(ComplexMatrix::zeros(d2, d2), |acc, e| &acc + &kron(e, e))
    }
}

pub fn normalize_design(p: &ProjectiveDesign) -> NormalizedDesign {
    let d = p.dim as f64;
    let scale = (d * (d + 1.0) / (2.0 * p.n() as f64)).sqrt();
    NormalizedDesign {
        dim: p.dim,
        kind: p.kind,
        scale,
        vectors: p.vectors.clone(),
        elements: p.vectors.iter().map(|v| ComplexMatrix::projector(v).scale(scale)).collect(),
    }
}

/// Projector onto the symmetric subspace of `C^d ⊗ C^d`.
pub fn symmetric_projector(d: usize) -> ComplexMatrix {
    let d2 = d * d;
    let mut p = ComplexMatrix::zeros(d2, d2);
    for r in 0..d2 {
        let swapped = (r % d) * d + r / d;
        p[(r, r)] += C64::new(0.5, 0.0);
        p[(r, swapped)] += C64::new(0.5, 0.0);
    }
    p
}

const IMAG_TOL: f64 = 1e-10;

/// `p_k = tr(ρ Π_k)` for a single-system state `rho`.
pub fn design_probabilities(rho: &ComplexMatrix, nd: &NormalizedDesign) -> Result<Vec<f64>> {
    if rho.rows() != nd.dim || rho.cols() != nd.dim {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} state for a design in dimension {}",
            rho.rows(),
            rho.cols(),
            nd.dim
        )));
    }
    nd.vectors
        .iter()
        .map(|v| {
            let z = inner(v, &rho.apply(v)) * nd.scale;
            if z.im.abs() > IMAG_TOL {
                Err(Error::ImaginaryResidue(z.im))
            } else {
                Ok(z.re)
            }
        })
        .collect()
}

/// Born probabilities of the POVM `{(d/N)|φ_k⟩⟨φ_k|}`.
pub fn povm_probabilities(rho: &ComplexMatrix, p: &ProjectiveDesign) -> Result<Vec<f64>> {
    if rho.rows() != p.dim || rho.cols() != p.dim {
        return Err(Error::DimensionMismatch(format!("{}x{} state for dimension {}", rho.rows(), rho.cols(), p.dim)));
    }
    let w = p.dim as f64 / p.n() as f64;
    Ok(p.vectors.iter().map(|v| inner(v, &rho.apply(v)).re * w).collect())
}

/// `ρ = (d+1)(N/d) Σ_k p̃_k Π̃_k − 1` with `Π̃_k = (d/N)|φ_k⟩⟨φ_k|`.
pub fn reconstruct_state(probs: &[f64], p: &ProjectiveDesign) -> Result<ComplexMatrix> {
    if probs.len() != p.n() {
        return Err(Error::DimensionMismatch(format!("{} probabilities for {} outcomes", probs.len(), p.n())));
    }
    let d = p.dim as f64;
    let mut rho = ComplexMatrix::identity(p.dim).scale(-1.0);
    for (prob, v) in probs.iter().zip(&p.vectors) {
        rho = &rho + &ComplexMatrix::projector(v).scale((d + 1.0) * prob);
    }
    Ok(rho)
}
