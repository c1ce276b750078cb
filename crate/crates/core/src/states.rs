//! State families and seeded random ensembles.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{
    self, kron, kron_vec, partial_trace, partial_transpose, BipartiteDims, ComplexMatrix, Subsystem, C64,
};

/// Tolerance for the Hermiticity, trace and positivity checks on density matrices.
pub const STATE_TOL: f64 = 1e-10;

/// Smallest admissible `|v5|`, `|v6|` for chessboard states.
pub const CHESSBOARD_EPS: f64 = 1e-6;

/// Standard deviation of the chessboard parameter distribution.
pub const CHESSBOARD_SIGMA: f64 = 2.0;

/// Random draws below this PT eigenvalue count as NPT.
pub const NPT_TOL: f64 = 1e-12;

/// A bipartite density matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
    dims: BipartiteDims,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity (all to [`STATE_TOL`]).
    pub fn new(matrix: ComplexMatrix, dims: BipartiteDims) -> Result<Self> {
        let d = dims.total();
        if matrix.rows() != d || matrix.cols() != d {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix for a {dims} system",
                matrix.rows(),
                matrix.cols()
            )));
        }
        if !matrix.is_finite() {
            return Err(Error::InvalidState("non-finite entries".into()));
        }
        let herm = matrix.hermiticity_defect();
        if herm > STATE_TOL {
            return Err(Error::InvalidState(format!("Hermiticity defect {herm:e}")));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace {tr}")));
        }
        let min = matcore::min_eigenvalue(&matrix)?;
        if min < -STATE_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(Self { matrix, dims })
    }

    pub fn from_pure(psi: &[C64], dims: BipartiteDims) -> Result<Self> {
        let n: f64 = psi.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        let unit: Vec<C64> = psi.iter().map(|x| x / n).collect();
        Self::new(ComplexMatrix::projector(&unit), dims)
    }

    /// Product state `rho_a ⊗ rho_b` of two single-system density matrices.
    pub fn product(rho_a: &ComplexMatrix, rho_b: &ComplexMatrix) -> Result<Self> {
        let dims = BipartiteDims::new(rho_a.rows(), rho_b.rows())?;
        Self::new(kron(rho_a, rho_b), dims)
    }

    pub fn maximally_mixed(dims: BipartiteDims) -> Self {
        let d = dims.total();
        Self {
            matrix: ComplexMatrix::identity(d).scale(1.0 / d as f64),
            dims,
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dims(&self) -> BipartiteDims {
        self.dims
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn purity(&self) -> f64 {
        self.matrix.trace_product(&self.matrix).re
    }

    pub fn marginal(&self, keep: Subsystem) -> ComplexMatrix {
        partial_trace(&self.matrix, self.dims, keep).expect("dims validated at construction")
    }

    pub fn partial_transpose(&self) -> ComplexMatrix {
        partial_transpose(&self.matrix, self.dims).expect("dims validated at construction")
    }

    /// `w·self + (1-w)·other`.
    pub fn mix(&self, other: &Self, w: f64) -> Result<Self> {
        if self.dims != other.dims {
            return Err(Error::DimensionMismatch(format!("{} vs {}", self.dims, other.dims)));
        }
        check_weight(w)?;
        Self::new(&self.matrix.scale(w) + &other.matrix.scale(1.0 - w), self.dims)
    }

    /// Applies `u_a ⊗ u_b`.
    pub fn local_unitary(&self, u_a: &ComplexMatrix, u_b: &ComplexMatrix) -> Result<Self> {
        let u = kron(u_a, u_b);
        Self::new(&(&u * &self.matrix) * &u.dagger(), self.dims)
    }
}

fn check_weight(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::OutOfRange(format!("mixing weight {p} outside [0, 1]")));
    }
    Ok(())
}

/// Deterministic random stream addressed by `(master_seed, stream_index)`.
///
/// Every index selects an independent ChaCha20 stream, so work split by
/// index gives the same draws whatever order or thread it runs on.
#[derive(Clone, Debug)]
pub struct RngStream {
    master_seed: u64,
    stream_index: u64,
    rng: ChaCha20Rng,
    spare: Option<f64>,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(master_seed);
        rng.set_stream(stream_index);
        Self {
            master_seed,
            stream_index,
            rng,
            spare: None,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_index(&self) -> u64 {
        self.stream_index
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }

    /// Standard normal via Box–Muller.
    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (2.0 * PI * u2).sin_cos();
        self.spare = Some(r * s);
        r * c
    }

    pub fn normal(&mut self, mean: f64, sigma: f64) -> f64 {
        mean + sigma * self.standard_normal()
    }

    pub fn complex_normal(&mut self) -> C64 {
        let re = self.standard_normal();
        C64::new(re, self.standard_normal())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BellKind {
    PsiMinus,
    PsiPlus,
    PhiMinus,
    PhiPlus,
}

impl BellKind {
    pub const ALL: [BellKind; 4] = [BellKind::PsiMinus, BellKind::PsiPlus, BellKind::PhiMinus, BellKind::PhiPlus];

    pub fn vector(self) -> Vec<C64> {
        let s = FRAC_1_SQRT_2;
        let z = 0.0;
        let v = match self {
            BellKind::PsiMinus => [z, s, -s, z],
            BellKind::PsiPlus => [z, s, s, z],
            BellKind::PhiMinus => [s, z, z, -s],
            BellKind::PhiPlus => [s, z, z, s],
        };
        v.iter().map(|&x| C64::new(x, 0.0)).collect()
    }

    pub fn name(self) -> &'static str {
        match self {
            BellKind::PsiMinus => "psi_minus",
            BellKind::PsiPlus => "psi_plus",
            BellKind::PhiMinus => "phi_minus",
            BellKind::PhiPlus => "phi_plus",
        }
    }
}

fn qubits() -> BipartiteDims {
    BipartiteDims { a: 2, b: 2 }
}

fn qutrits() -> BipartiteDims {
    BipartiteDims { a: 3, b: 3 }
}

pub fn bell_state(kind: BellKind) -> DensityMatrix {
    DensityMatrix {
        matrix: ComplexMatrix::projector(&kind.vector()),
        dims: qubits(),
    }
}

/// `(2/3)|00⟩⟨00| + (1/3)|01⟩⟨01|`.
pub fn separable_noise() -> DensityMatrix {
    DensityMatrix {
        matrix: ComplexMatrix::diag_real(&[2.0 / 3.0, 1.0 / 3.0, 0.0, 0.0]),
        dims: qubits(),
    }
}

/// `p|ψ⟩⟨ψ| + (1-p)ρ_s` for a Bell state `ψ` and the separable noise above.
pub fn noisy_two_qubit(kind: BellKind, p: f64) -> Result<DensityMatrix> {
    check_weight(p)?;
    bell_state(kind).mix(&separable_noise(), p)
}

fn ket(entries: &[f64]) -> Vec<C64> {
    entries.iter().map(|&x| C64::new(x, 0.0)).collect()
}

/// The five orthogonal product vectors of the tiles unextendible product basis.
pub fn upb_vectors() -> [Vec<C64>; 5] {
    let s = FRAC_1_SQRT_2;
    let k0 = ket(&[1.0, 0.0, 0.0]);
    let k2 = ket(&[0.0, 0.0, 1.0]);
    let m01 = ket(&[s, -s, 0.0]);
    let m12 = ket(&[0.0, s, -s]);
    let t = 1.0 / 3.0f64.sqrt();
    let all = ket(&[t, t, t]);
    [
        kron_vec(&k0, &m01),
        kron_vec(&m01, &k2),
        kron_vec(&k2, &m12),
        kron_vec(&m12, &k0),
        kron_vec(&all, &all),
    ]
}

/// `(1/4)(1 - Σ|ψ_i⟩⟨ψ_i|)` over the UPB vectors; a rank-4 PPT entangled state.
pub fn bennett_upb_state() -> DensityMatrix {
    let mut m = ComplexMatrix::identity(9);
    for v in upb_vectors() {
        m = &m - &ComplexMatrix::projector(&v);
    }
    DensityMatrix {
        matrix: m.scale(0.25),
        dims: qutrits(),
    }
}

/// `p·ρ + (1-p)·1/d`.
pub fn mix_with_white_noise(rho: &DensityMatrix, p: f64) -> Result<DensityMatrix> {
    check_weight(p)?;
    rho.mix(&DensityMatrix::maximally_mixed(rho.dims), p)
}

/// The four unnormalized chessboard vectors for parameters `v = (v1, …, v6)`.
pub fn chessboard_vectors(v: [f64; 6]) -> Result<[Vec<C64>; 4]> {
    let [v1, v2, v3, v4, v5, v6] = v;
    if !(v5.abs() >= CHESSBOARD_EPS && v6.abs() >= CHESSBOARD_EPS) {
        return Err(Error::DegenerateParameters(CHESSBOARD_EPS));
    }
    Ok([
        ket(&[v5, 0.0, v1 * v3 / v6, 0.0, v6, 0.0, 0.0, 0.0, 0.0]),
        ket(&[0.0, v1, 0.0, v2, 0.0, v3, 0.0, 0.0, 0.0]),
        ket(&[v6, 0.0, 0.0, 0.0, -v5, 0.0, v1 * v4 / v5, 0.0, 0.0]),
        ket(&[0.0, v2, 0.0, -v1, 0.0, 0.0, 0.0, v4, 0.0]),
    ])
}

pub fn chessboard_state(v: [f64; 6]) -> Result<DensityMatrix> {
    let vectors = chessboard_vectors(v)?;
    let mut m = ComplexMatrix::zeros(9, 9);
    for vec in &vectors {
        m = &m + &ComplexMatrix::projector(vec);
    }
    let norm = m.trace().re;
    DensityMatrix::new(m.scale(1.0 / norm), qutrits())
}

/// Six independent `N(0, 2²)` draws, redrawn until `|v5|, |v6| ≥ ε`.
pub fn chessboard_parameters(stream: &mut RngStream) -> [f64; 6] {
    loop {
        let mut v = [0.0; 6];
        for x in v.iter_mut() {
            *x = stream.normal(0.0, CHESSBOARD_SIGMA);
        }
        if v[4].abs() >= CHESSBOARD_EPS && v[5].abs() >= CHESSBOARD_EPS {
            return v;
        }
    }
}

/// Horodecki's 3×3 PPT entangled family, `0 < x < 1`.
pub fn horodecki_state(x: f64) -> Result<DensityMatrix> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::OutOfRange(format!("Horodecki parameter {x} outside (0, 1)")));
    }
    let mut m = [[0.0f64; 9]; 9];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = x;
    }
    for i in [0, 4, 8] {
        for j in [0, 4, 8] {
            m[i][j] = x;
        }
    }
    m[6][6] = (1.0 + x) / 2.0;
    m[8][8] = (1.0 + x) / 2.0;
    let off = (1.0 - x * x).sqrt() / 2.0;
    m[6][8] = off;
    m[8][6] = off;
    let flat: Vec<f64> = m.iter().flatten().map(|&e| e / (8.0 * x + 1.0)).collect();
    DensityMatrix::new(ComplexMatrix::from_real(9, 9, &flat)?, qutrits())
}

/// `G·G†/tr(G·G†)` for a square complex Ginibre matrix `G` (Hilbert–Schmidt measure).
pub fn random_density_matrix(dims: BipartiteDims, stream: &mut RngStream) -> DensityMatrix {
    let d = dims.total();
    let g = ComplexMatrix::from_fn(d, d, |_, _| stream.complex_normal());
    let w = &g * &g.dagger();
    let tr = w.trace().re;
    DensityMatrix {
        matrix: w.scale(1.0 / tr),
        dims,
    }
}

/// Rejection-samples [`random_density_matrix`] until the state is NPT.
/// Returns the state together with the number of draws it took.
pub fn random_npt_sample_counted(dims: BipartiteDims, stream: &mut RngStream) -> (DensityMatrix, u64) {
    let mut attempts = 0;
    loop {
        attempts += 1;
        let rho = random_density_matrix(dims, stream);
        let min = matcore::min_eigenvalue(&rho.partial_transpose()).expect("partial transpose is Hermitian");
        if min < -NPT_TOL {
            return (rho, attempts);
        }
    }
}

pub fn random_npt_sample(dims: BipartiteDims, stream: &mut RngStream) -> DensityMatrix {
    random_npt_sample_counted(dims, stream).0
}

/// Haar-random pure state of dimension `d`.
pub fn random_pure_state(d: usize, stream: &mut RngStream) -> Vec<C64> {
    let v: Vec<C64> = (0..d).map(|_| stream.complex_normal()).collect();
    let n = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

/// Haar-random unitary: Gram–Schmidt on the columns of a Ginibre matrix.
pub fn random_unitary(d: usize, stream: &mut RngStream) -> ComplexMatrix {
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(d);
    for _ in 0..d {
        let mut v: Vec<C64> = (0..d).map(|_| stream.complex_normal()).collect();
        for _ in 0..2 {
            for c in &cols {
                let ip: C64 = c.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (x, y) in v.iter_mut().zip(c) {
                    *x -= ip * y;
                }
            }
        }
        let n = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        cols.push(v.into_iter().map(|x| x / n).collect());
    }
    ComplexMatrix::from_fn(d, d, |i, j| cols[j][i])
}

/// Random single-system density matrix (Hilbert–Schmidt measure).
pub fn random_local_state(d: usize, stream: &mut RngStream) -> ComplexMatrix {
    let g = ComplexMatrix::from_fn(d, d, |_, _| stream.complex_normal());
    let w = &g * &g.dagger();
    let tr = w.trace().re;
    w.scale(1.0 / tr)
}

/// Convex mixture of `terms` product states with random weights; each
/// factor is pure or Hilbert–Schmidt mixed at random.
pub fn random_separable_state(dims: BipartiteDims, terms: usize, stream: &mut RngStream) -> DensityMatrix {
    let mut acc = ComplexMatrix::zeros(dims.total(), dims.total());
    let mut total = 0.0;
    for _ in 0..terms.max(1) {
        let w = stream.uniform() + 1e-3;
        let local = |d: usize, s: &mut RngStream| {
            if s.uniform() < 0.5 {
                ComplexMatrix::projector(&random_pure_state(d, s))
            } else {
                random_local_state(d, s)
            }
        };
        let a = local(dims.a, stream);
        let b = local(dims.b, stream);
        acc = &acc + &kron(&a, &b).scale(w);
        total += w;
    }
    DensityMatrix {
        matrix: acc.scale(1.0 / total),
        dims,
    }
}
