//! Dense complex matrix kernels.
//!
//! Storage is row-major. A bipartite index `(i, k)` with `i` on subsystem A
//! and `k` on subsystem B maps to the flat index `i * d_B + k`.
//!
//! Decompositions are one-sided (SVD) and two-sided (Hermitian eigen) cyclic
//! Jacobi iterations. The matrices used here are at most a few dozen rows, so
//! Jacobi's accuracy matters more than its asymptotic cost.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Max-entry deviation from Hermiticity accepted by eigen routines.
pub const HERMITIAN_TOL: f64 = 1e-10;

const JACOBI_EPS: f64 = 1e-15;
const JACOBI_MAX_SWEEPS: usize = 80;

#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row-major entries.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        Self::from_vec(rows, cols, data.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn diag_real(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &x) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(x, 0.0);
        }
        m
    }

    /// `|u⟩⟨v|`.
    pub fn outer(u: &[C64], v: &[C64]) -> Self {
        Self::from_fn(u.len(), v.len(), |i, j| u[i] * v[j].conj())
    }

    /// `|u⟩⟨u|`.
    pub fn projector(u: &[C64]) -> Self {
        Self::outer(u, u)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn dagger(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, s: f64) -> Self {
        self.scale_complex(C64::new(s, 0.0))
    }

    pub fn scale_complex(&self, s: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x * s).collect(),
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest entrywise modulus of `self - self†`.
    pub fn hermiticity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Largest entrywise modulus of `self·self† - 1`.
    pub fn unitarity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        (self * &self.dagger()).max_abs_diff(&Self::identity(self.rows))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.re.is_finite() && x.im.is_finite())
    }

    /// `self · v` for a column vector `v`.
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `tr(self · x)`.
    pub fn trace_product(&self, x: &Self) -> C64 {
        assert_eq!((self.rows, self.cols), (x.cols, x.rows));
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..self.rows {
            for j in 0..self.cols {
                acc += self[(i, j)] * x[(j, i)];
            }
        }
        acc
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, rhs.rows, "matrix product shape mismatch");
        let mut out = ComplexMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs[(k, j)];
                }
            }
        }
        out
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Local dimensions of a bipartite system.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BipartiteDims {
    pub a: usize,
    pub b: usize,
}

impl BipartiteDims {
    pub fn new(a: usize, b: usize) -> Result<Self> {
        if a < 2 || b < 2 {
            return Err(Error::DimensionMismatch(format!(
                "local dimensions must be at least 2, got {a}x{b}"
            )));
        }
        Ok(Self { a, b })
    }

    pub fn total(&self) -> usize {
        self.a * self.b
    }

    pub fn is_balanced(&self) -> bool {
        self.a == self.b
    }

    fn check(&self, m: &ComplexMatrix) -> Result<()> {
        let d = self.total();
        if m.rows() != d || m.cols() != d {
            return Err(Error::DimensionMismatch(format!(
                "expected {d}x{d} operator for {}x{} system, got {}x{}",
                self.a,
                self.b,
                m.rows(),
                m.cols()
            )));
        }
        Ok(())
    }
}

impl fmt::Display for BipartiteDims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.a, self.b)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (br, bc) = (b.rows(), b.cols());
    ComplexMatrix::from_fn(a.rows() * br, a.cols() * bc, |r, c| {
        a[(r / br, c / bc)] * b[(r % br, c % bc)]
    })
}

pub fn kron_vec(u: &[C64], v: &[C64]) -> Vec<C64> {
    u.iter().flat_map(|&x| v.iter().map(move |&y| x * y)).collect()
}

pub fn partial_trace(rho: &ComplexMatrix, dims: BipartiteDims, keep: Subsystem) -> Result<ComplexMatrix> {
    dims.check(rho)?;
    let (da, db) = (dims.a, dims.b);
    Ok(match keep {
        Subsystem::A => ComplexMatrix::from_fn(da, da, |i, j| {
            (0..db).map(|k| rho[(i * db + k, j * db + k)]).sum()
        }),
        Subsystem::B => ComplexMatrix::from_fn(db, db, |k, l| {
            (0..da).map(|i| rho[(i * db + k, i * db + l)]).sum()
        }),
    })
}

/// Transpose on subsystem B.
pub fn partial_transpose(rho: &ComplexMatrix, dims: BipartiteDims) -> Result<ComplexMatrix> {
    dims.check(rho)?;
    let db = dims.b;
    Ok(ComplexMatrix::from_fn(rho.rows(), rho.cols(), |r, c| {
        let (i, k) = (r / db, r % db);
        let (j, l) = (c / db, c % db);
        rho[(i * db + l, j * db + k)]
    }))
}

/// Realignment `R[(i,j),(k,l)] = ρ[(i,k),(j,l)]`, a `d_A² × d_B²` matrix.
pub fn realign(rho: &ComplexMatrix, dims: BipartiteDims) -> Result<ComplexMatrix> {
    dims.check(rho)?;
    let (da, db) = (dims.a, dims.b);
    Ok(ComplexMatrix::from_fn(da * da, db * db, |r, c| {
        let (i, j) = (r / da, r % da);
        let (k, l) = (c / db, c % db);
        rho[(i * db + k, j * db + l)]
    }))
}

/// Inverse of [`realign`].
pub fn unrealign(r: &ComplexMatrix, dims: BipartiteDims) -> Result<ComplexMatrix> {
    let (da, db) = (dims.a, dims.b);
    if r.rows() != da * da || r.cols() != db * db {
        return Err(Error::DimensionMismatch(format!(
            "expected {}x{} realigned matrix, got {}x{}",
            da * da,
            db * db,
            r.rows(),
            r.cols()
        )));
    }
    let d = dims.total();
    Ok(ComplexMatrix::from_fn(d, d, |row, col| {
        let (i, k) = (row / db, row % db);
        let (j, l) = (col / db, col % db);
        r[(i * da + j, k * db + l)]
    }))
}

/// `tr(ρ (x ⊗ y))` without forming the Kronecker product.
pub fn expectation_product(
    rho: &ComplexMatrix,
    dims: BipartiteDims,
    x: &ComplexMatrix,
    y: &ComplexMatrix,
) -> C64 {
    let (da, db) = (dims.a, dims.b);
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..da {
        for j in 0..da {
            let xji = x[(j, i)];
            if xji == C64::new(0.0, 0.0) {
                continue;
            }
            let mut inner = C64::new(0.0, 0.0);
            for k in 0..db {
                for l in 0..db {
                    inner += rho[(i * db + k, j * db + l)] * y[(l, k)];
                }
            }
            acc += xji * inner;
        }
    }
    acc
}

/// Thin singular value decomposition `m = u · diag(s) · v†`.
///
/// `u` is `rows × k` and `v` is `cols × k` with `k = min(rows, cols)`;
/// singular values are descending. Columns of `u` belonging to vanishing
/// singular values are completed to an orthonormal set.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: ComplexMatrix,
    pub singular_values: Vec<f64>,
    pub v: ComplexMatrix,
}

pub fn svd(m: &ComplexMatrix) -> Result<Svd> {
    if m.rows() < m.cols() {
        let t = jacobi_svd(&m.dagger())?;
        return Ok(Svd {
            u: t.v,
            singular_values: t.singular_values,
            v: t.u,
        });
    }
    jacobi_svd(m)
}

fn norm_sqr(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum()
}

fn inner(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

fn jacobi_svd(m: &ComplexMatrix) -> Result<Svd> {
    let (rows, cols) = (m.rows(), m.cols());
    debug_assert!(rows >= cols);
    let mut w: Vec<Vec<C64>> = (0..cols).map(|j| m.column(j)).collect();
    let mut v: Vec<Vec<C64>> = (0..cols)
        .map(|j| {
            let mut e = vec![C64::new(0.0, 0.0); cols];
            e[j] = C64::new(1.0, 0.0);
            e
        })
        .collect();

    // Columns below this norm are numerically zero and are not rotated further.
    let negligible = m.frobenius_norm() * f64::EPSILON * 1e-2;
    let negligible_sqr = negligible * negligible;
    let mut converged = cols < 2;
    let mut residual = 0.0;
    for _ in 0..JACOBI_MAX_SWEEPS {
        residual = 0.0f64;
        for p in 0..cols {
            for q in p + 1..cols {
                let alpha = norm_sqr(&w[p]);
                let beta = norm_sqr(&w[q]);
                let gamma = inner(&w[p], &w[q]);
                let g = gamma.norm();
                let scale = (alpha * beta).sqrt();
                if g == 0.0 || g <= JACOBI_EPS * scale || alpha.min(beta) <= negligible_sqr {
                    continue;
                }
                residual = residual.max(g / scale);
                // Rotate column q so that ⟨w_p|w_q⟩ becomes real and positive.
                let phase = (gamma / g).conj();
                for x in w[q].iter_mut() {
                    *x *= phase;
                }
                for x in v[q].iter_mut() {
                    *x *= phase;
                }
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut w, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        if residual <= JACOBI_EPS {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            routine: "svd",
            sweeps: JACOBI_MAX_SWEEPS,
            residual,
        });
    }

    let mut order: Vec<(f64, usize)> = w.iter().enumerate().map(|(j, c)| (norm_sqr(c).sqrt(), j)).collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let s_max = order.first().map_or(0.0, |o| o.0);
    let cutoff = s_max * rows as f64 * f64::EPSILON;

    let mut u_cols: Vec<Vec<C64>> = Vec::with_capacity(cols);
    let mut missing = 0;
    let mut singular_values = Vec::with_capacity(cols);
    let mut v_cols = Vec::with_capacity(cols);
    for &(s, j) in &order {
        singular_values.push(s);
        v_cols.push(v[j].clone());
        if s > cutoff && s > 0.0 {
            u_cols.push(w[j].iter().map(|x| x / s).collect());
        } else {
            missing += 1;
        }
    }
    let completed = complete_orthonormal(&u_cols, rows, missing);
    u_cols.extend(completed);

    Ok(Svd {
        u: columns_to_matrix(&u_cols, rows),
        singular_values,
        v: columns_to_matrix(&v_cols, cols),
    })
}

fn rotate(cols: &mut [Vec<C64>], p: usize, q: usize, c: f64, s: f64) {
    let (head, tail) = cols.split_at_mut(q);
    let (a, b) = (&mut head[p], &mut tail[0]);
    for (x, y) in a.iter_mut().zip(b.iter_mut()) {
        let (xp, yq) = (*x, *y);
        *x = xp * c - yq * s;
        *y = xp * s + yq * c;
    }
}

fn columns_to_matrix(cols: &[Vec<C64>], rows: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols.len(), |i, j| cols[j][i])
}

/// Extends an orthonormal set with `count` further unit vectors drawn from
/// the canonical basis by Gram–Schmidt. At each step the canonical vector
/// with the largest residual wins (lowest index on ties), so the result is
/// deterministic.
pub fn complete_orthonormal(existing: &[Vec<C64>], dim: usize, count: usize) -> Vec<Vec<C64>> {
    let mut basis: Vec<Vec<C64>> = existing.to_vec();
    let mut added = Vec::with_capacity(count);
    for _ in 0..count {
        let mut best: Option<(f64, Vec<C64>)> = None;
        for e in 0..dim {
            let mut r = vec![C64::new(0.0, 0.0); dim];
            r[e] = C64::new(1.0, 0.0);
            for _ in 0..2 {
                for b in &basis {
                    let c = inner(b, &r);
                    for (x, y) in r.iter_mut().zip(b) {
                        *x -= c * y;
                    }
                }
            }
            let n = norm_sqr(&r).sqrt();
            if best.as_ref().map_or(true, |(bn, _)| n > *bn + 1e-12) {
                best = Some((n, r));
            }
        }
        let (n, r) = best.expect("completion requested beyond the space dimension");
        let r: Vec<C64> = r.into_iter().map(|x| x / n).collect();
        basis.push(r.clone());
        added.push(r);
    }
    added
}

pub fn singular_values(m: &ComplexMatrix) -> Result<Vec<f64>> {
    Ok(svd(m)?.singular_values)
}

pub fn trace_norm(m: &ComplexMatrix) -> Result<f64> {
    Ok(singular_values(m)?.iter().sum())
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(h: &ComplexMatrix) -> Result<Vec<f64>> {
    let defect = h.hermiticity_defect();
    if defect > HERMITIAN_TOL {
        return Err(Error::NotHermitian(defect));
    }
    let n = h.rows();
    let mut a = h.clone();
    // Symmetrize so the iteration sees an exactly Hermitian input.
    for i in 0..n {
        a[(i, i)] = C64::new(a[(i, i)].re, 0.0);
        for j in i + 1..n {
            let avg = (a[(i, j)] + a[(j, i)].conj()) * 0.5;
            a[(i, j)] = avg;
            a[(j, i)] = avg.conj();
        }
    }
    let scale = a.frobenius_norm().max(f64::MIN_POSITIVE);
    let mut converged = n < 2;
    let mut off = 0.0;
    for _ in 0..JACOBI_MAX_SWEEPS {
        off = 0.0f64;
        for i in 0..n {
            for j in i + 1..n {
                off += a[(i, j)].norm_sqr();
            }
        }
        off = off.sqrt();
        if off <= JACOBI_EPS * scale {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let hpq = a[(p, q)];
                let g = hpq.norm();
                if g <= JACOBI_EPS * scale * 1e-3 {
                    continue;
                }
                let e = hpq / g;
                let theta = (a[(q, q)].re - a[(p, p)].re) / (2.0 * g);
                let t = if theta == 0.0 {
                    1.0
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // J = [[c, s], [-s·e*, c·e*]] on the (p, q) plane; a ← J† a J.
                let jqp = -e.conj() * s;
                let jqq = e.conj() * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * c + akq * jqp;
                    a[(k, q)] = akp * s + akq * jqq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = apk * c + aqk * jqp.conj();
                    a[(q, k)] = apk * s + aqk * jqq.conj();
                }
                a[(p, q)] = C64::new(0.0, 0.0);
                a[(q, p)] = C64::new(0.0, 0.0);
                a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            routine: "hermitian_eigenvalues",
            sweeps: JACOBI_MAX_SWEEPS,
            residual: off,
        });
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    eig.sort_by(f64::total_cmp);
    Ok(eig)
}

pub fn min_eigenvalue(h: &ComplexMatrix) -> Result<f64> {
    Ok(hermitian_eigenvalues(h)?[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn pauli_x() -> ComplexMatrix {
        ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap()
    }

    fn phi_plus() -> ComplexMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        ComplexMatrix::projector(&[c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0)])
    }

    fn d22() -> BipartiteDims {
        BipartiteDims::new(2, 2).unwrap()
    }

    #[test]
    fn kron_identity_and_projectors() {
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(kron(&i2, &i2), ComplexMatrix::identity(4));
        let p = kron(&ComplexMatrix::diag_real(&[1.0, 0.0]), &ComplexMatrix::diag_real(&[0.0, 1.0]));
        assert_eq!(p, ComplexMatrix::diag_real(&[0.0, 1.0, 0.0, 0.0]));
    }

    #[test]
    fn kron_bit_flip() {
        let xx = kron(&pauli_x(), &pauli_x());
        let ket00 = [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)];
        assert_eq!(xx.apply(&ket00), vec![c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
    }

    #[test]
    fn bell_marginal_is_maximally_mixed() {
        let ra = partial_trace(&phi_plus(), d22(), Subsystem::A).unwrap();
        assert!(ra.max_abs_diff(&ComplexMatrix::identity(2).scale(0.5)) < 1e-15);
    }

    #[test]
    fn separable_noise_marginal() {
        // (2/3)|00⟩⟨00| + (1/3)|01⟩⟨01|; tracing out A leaves diag(2/3, 1/3).
        let rs = ComplexMatrix::diag_real(&[2.0 / 3.0, 1.0 / 3.0, 0.0, 0.0]);
        let rb = partial_trace(&rs, d22(), Subsystem::B).unwrap();
        assert!(rb.max_abs_diff(&ComplexMatrix::diag_real(&[2.0 / 3.0, 1.0 / 3.0])) < 1e-15);
        let ra = partial_trace(&rs, d22(), Subsystem::A).unwrap();
        assert!(ra.max_abs_diff(&ComplexMatrix::diag_real(&[1.0, 0.0])) < 1e-15);
    }

    #[test]
    fn product_state_partial_ops() {
        let a = ComplexMatrix::from_vec(2, 2, vec![c(0.6, 0.0), c(0.1, 0.2), c(0.1, -0.2), c(0.4, 0.0)]).unwrap();
        let b = ComplexMatrix::from_vec(3, 3, (0..9).map(|k| c(k as f64, (k * k) as f64 * 0.1)).collect()).unwrap();
        let dims = BipartiteDims::new(2, 3).unwrap();
        let ab = kron(&a, &b);
        let tb = b.trace();
        let ra = partial_trace(&ab, dims, Subsystem::A).unwrap();
        assert!(ra.max_abs_diff(&a.scale_complex(tb)) < 1e-12);
        let pt = partial_transpose(&ab, dims).unwrap();
        assert!(pt.max_abs_diff(&kron(&a, &b.transpose())) < 1e-15);
        assert!(partial_transpose(&pt, dims).unwrap().max_abs_diff(&ab) < 1e-15);
    }

    #[test]
    fn bell_partial_transpose_spectrum() {
        let pt = partial_transpose(&phi_plus(), d22()).unwrap();
        let eig = hermitian_eigenvalues(&pt).unwrap();
        for (x, y) in eig.iter().zip([-0.5, 0.5, 0.5, 0.5]) {
            assert!((x - y).abs() < 1e-12, "{eig:?}");
        }
        assert!((min_eigenvalue(&pt).unwrap() + 0.5).abs() < 1e-12);
    }

    #[test]
    fn realignment_trace_norms() {
        let mixed = ComplexMatrix::identity(4).scale(0.25);
        assert!((trace_norm(&realign(&mixed, d22()).unwrap()).unwrap() - 0.5).abs() < 1e-12);
        assert!((trace_norm(&realign(&phi_plus(), d22()).unwrap()).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn realign_product_is_rank_one() {
        let a = ComplexMatrix::from_vec(2, 2, vec![c(0.7, 0.0), c(0.2, 0.1), c(0.2, -0.1), c(0.3, 0.0)]).unwrap();
        let b = ComplexMatrix::diag_real(&[0.5, 0.25, 0.25]);
        let dims = BipartiteDims::new(2, 3).unwrap();
        let r = realign(&kron(&a, &b), dims).unwrap();
        assert_eq!((r.rows(), r.cols()), (4, 9));
        let s = singular_values(&r).unwrap();
        assert!(s[1..].iter().all(|&x| x < 1e-14), "{s:?}");
        assert!((s[0] - a.frobenius_norm() * b.frobenius_norm()).abs() < 1e-14);
        assert!(unrealign(&r, dims).unwrap().max_abs_diff(&kron(&a, &b)) == 0.0);
    }

    #[test]
    fn singular_value_examples() {
        assert_eq!(singular_values(&ComplexMatrix::identity(3)).unwrap(), vec![1.0, 1.0, 1.0]);
        let s = singular_values(&ComplexMatrix::diag_real(&[3.0, -2.0])).unwrap();
        assert!((s[0] - 3.0).abs() < 1e-15 && (s[1] - 2.0).abs() < 1e-15);
        let u = [c(1.0, 0.0), c(2.0, 1.0), c(0.0, -1.0)];
        let v = [c(0.5, 0.5), c(-1.0, 0.0)];
        let s = singular_values(&ComplexMatrix::outer(&u, &v)).unwrap();
        let expected = norm_sqr(&u).sqrt() * norm_sqr(&v).sqrt();
        assert_eq!(s.len(), 2);
        assert!((s[0] - expected).abs() < 1e-14 && s[1] < 1e-14);
    }

    #[test]
    fn svd_reconstructs_and_completes() {
        // rank-deficient wide matrix exercises the completion branch via the transpose path
        let m = ComplexMatrix::from_fn(3, 5, |i, j| c((i + j) as f64, (i * j) as f64 * 0.5) * if i == 2 { 0.0 } else { 1.0 });
        let d = svd(&m).unwrap();
        let sig = ComplexMatrix::diag_real(&d.singular_values);
        let back = &(&d.u * &sig) * &d.v.dagger();
        assert!(back.max_abs_diff(&m) < 1e-12);
        let uu = &d.u.dagger() * &d.u;
        assert!(uu.max_abs_diff(&ComplexMatrix::identity(3)) < 1e-12);
        let vv = &d.v.dagger() * &d.v;
        assert!(vv.max_abs_diff(&ComplexMatrix::identity(3)) < 1e-12);
    }

    #[test]
    fn unitary_trace_norm() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let h = ComplexMatrix::from_vec(2, 2, vec![c(s, 0.0), c(0.0, s), c(0.0, s), c(s, 0.0)]).unwrap();
        assert!(h.unitarity_defect() < 1e-15);
        assert!((trace_norm(&h).unwrap() - 2.0).abs() < 1e-14);
        assert!((trace_norm(&ComplexMatrix::identity(5)).unwrap() - 5.0).abs() < 1e-14);
    }

    #[test]
    fn min_eigenvalue_examples() {
        assert!((min_eigenvalue(&ComplexMatrix::identity(3).scale(1.0 / 3.0)).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(min_eigenvalue(&ComplexMatrix::diag_real(&[0.7, 0.3, 0.0, 0.0])).unwrap(), 0.0);
    }

    #[test]
    fn non_hermitian_rejected() {
        let m = ComplexMatrix::from_real(2, 2, &[1.0, 1.0, 0.0, 1.0]).unwrap();
        assert!(matches!(min_eigenvalue(&m), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn dimension_errors() {
        let m = ComplexMatrix::identity(5);
        assert!(matches!(partial_trace(&m, d22(), Subsystem::A), Err(Error::DimensionMismatch(_))));
        assert!(partial_transpose(&m, d22()).is_err());
        assert!(realign(&m, d22()).is_err());
        assert!(BipartiteDims::new(1, 4).is_err());
        assert!(ComplexMatrix::from_real(2, 2, &[1.0]).is_err());
    }

    #[test]
    fn expectation_product_matches_kron() {
        let dims = BipartiteDims::new(2, 3).unwrap();
        let rho = ComplexMatrix::from_fn(6, 6, |i, j| c((i * 7 + j) as f64 * 0.01, (i as f64 - j as f64) * 0.02));
        let x = ComplexMatrix::from_fn(2, 2, |i, j| c(i as f64 + 0.5, j as f64 - 0.25));
        let y = ComplexMatrix::from_fn(3, 3, |i, j| c((i * j) as f64, 1.0 - i as f64));
        let direct = rho.trace_product(&kron(&x, &y));
        assert!((expectation_product(&rho, dims, &x, &y) - direct).norm() < 1e-13);
    }
}
