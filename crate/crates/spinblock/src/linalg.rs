//! Dense complex linear algebra sized for small spin registers.
//!
//! Everything here works on [`ComplexMatrix`], a row-major dense matrix of
//! [`C64`]. The spectral routines are a cyclic complex Jacobi solver for
//! Hermitian matrices and a unitary solver built on top of it.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64 as C64;
use thiserror::Error;

/// Hermiticity / unitarity tolerance used by the precondition checks.
pub const STRUCTURE_TOL: f64 = 1e-10;

/// Sweep cap for the Jacobi iteration.
const MAX_SWEEPS: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not Hermitian (max |H - H^dagger| = {0:.3e})")]
    NotHermitian(f64),
    #[error("matrix is not unitary (max |U^dagger U - I| = {0:.3e})")]
    NotUnitary(f64),
    #[error("Jacobi iteration did not converge after {sweeps} sweeps (off-diagonal norm {off:.3e})")]
    NoConvergence { sweeps: usize, off: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite entry produced by {0}")]
    NonFinite(&'static str),
}

/// Row-major dense complex matrix.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                let z = self[(r, c)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self { rows, cols, data: vec![C64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    /// Build from row-major entries. Panics if the length is wrong.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        assert_eq!(data.len(), rows * cols, "entry count must equal rows * cols");
        Self { rows, cols, data }
    }

    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Self {
        Self::from_vec(rows, cols, data.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn from_diag(diag: &[C64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
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

    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    pub fn diag(&self) -> Vec<C64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn column(&self, c: usize) -> Vec<C64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out[(c, r)] = self[(r, c)].conj();
            }
        }
        out
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&z| z * s).collect() }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn trace(&self) -> C64 {
        self.diag().into_iter().sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Max-entry distance to another matrix of the same shape.
    pub fn max_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data.iter().zip(&other.data).fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }

    pub fn hermiticity_error(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst: f64 = 0.0;
        for r in 0..self.rows {
            for c in r..self.cols {
                worst = worst.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        worst
    }

    pub fn unitarity_error(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        self.adjoint().matmul(self).max_diff(&Self::identity(self.rows))
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, rhs.cols);
        let n = rhs.cols;
        for r in 0..self.rows {
            let out_row = &mut out.data[r * n..(r + 1) * n];
            for k in 0..self.cols {
                let a = self.data[r * self.cols + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let rhs_row = &rhs.data[k * n..(k + 1) * n];
                for (o, &b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|r| self.data[r * self.cols..(r + 1) * self.cols].iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `self * rho * self^dagger`.
    pub fn conjugate(&self, rho: &Self) -> Self {
        self.matmul(rho).matmul(&self.adjoint())
    }

    pub fn commutator(&self, other: &Self) -> Self {
        &self.matmul(other) - &other.matmul(self)
    }

    /// Integer matrix power by repeated squaring.
    pub fn powi(&self, mut n: u32) -> Self {
        assert!(self.is_square());
        let mut base = self.clone();
        let mut acc = Self::identity(self.rows);
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.matmul(&base);
            }
            n >>= 1;
            if n > 0 {
                base = base.matmul(&base);
            }
        }
        acc
    }

    /// Copy of the sub-block `rows r0..r0+nr`, `cols c0..c0+nc`.
    pub fn block(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> Self {
        let mut out = Self::zeros(nr, nc);
        for r in 0..nr {
            for c in 0..nc {
                out[(r, c)] = self[(r0 + r, c0 + c)];
            }
        }
        out
    }

    /// Symmetrise to remove rounding drift: `(A + A^dagger)/2`.
    pub fn hermitian_part(&self) -> Self {
        (self + &self.adjoint()).scale_real(0.5)
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.cols + c]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "add shape mismatch");
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
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "sub shape mismatch");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

impl std::ops::AddAssign<&ComplexMatrix> for ComplexMatrix {
    fn add_assign(&mut self, rhs: &ComplexMatrix) {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "add shape mismatch");
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }
}

/// Eigenvalues with eigenvectors stored as the columns of a matrix.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<C64>,
    pub eigenvectors: ComplexMatrix,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `V diag(lambda) V^dagger`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let v = &self.eigenvectors;
        let mut vd = v.clone();
        for r in 0..v.rows() {
            for c in 0..v.cols() {
                vd[(r, c)] *= self.eigenvalues[c];
            }
        }
        vd.matmul(&v.adjoint())
    }

    /// Real parts, for decompositions of Hermitian input.
    pub fn real_eigenvalues(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|z| z.re).collect()
    }

    /// Arguments of the eigenvalues mapped into (-pi, pi].
    pub fn eigenphases(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|z| wrap_phase(z.arg())).collect()
    }
}

/// Map an angle into (-pi, pi].
pub fn wrap_phase(x: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let mut y = x.rem_euclid(TAU);
    if y > PI {
        y -= TAU;
    }
    if y <= -PI {
        y += TAU;
    }
    y
}

/// Diagonalise a Hermitian matrix by cyclic complex Jacobi rotations.
///
/// Eigenvalues come back ascending with matching orthonormal columns.
pub fn hermitian_eigensolve(h: &ComplexMatrix) -> Result<EigenDecomposition, LinalgError> {
    if !h.is_square() {
        return Err(LinalgError::DimensionMismatch(format!("{}x{} is not square", h.rows(), h.cols())));
    }
    let herr = h.hermiticity_error();
    if herr > STRUCTURE_TOL * h.max_abs().max(1.0) {
        return Err(LinalgError::NotHermitian(herr));
    }
    let (vals, vecs) = jacobi(h.hermitian_part())?;
    Ok(EigenDecomposition { eigenvalues: vals.into_iter().map(|x| C64::new(x, 0.0)).collect(), eigenvectors: vecs })
}

fn off_diagonal_norm(a: &ComplexMatrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for r in 0..n {
        for c in 0..n {
            if r != c {
                s += a[(r, c)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

fn jacobi(mut a: ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix), LinalgError> {
    let n = a.rows();
    let mut v = ComplexMatrix::identity(n);
    let tol = 1e-12 * a.frobenius_norm().max(1.0);
    let mut converged = n == 1;
    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(&a) < tol {
            converged = true;
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let r = apq.norm();
                if r < 1e-300 {
                    continue;
                }
                let phase = apq / r;
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let theta = (aqq - app) / (2.0 * r);
                let t = theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // G = [[c, s], [-s e^{-i a}, c e^{-i a}]] acting on columns p, q.
                let g_pp = C64::new(c, 0.0);
                let g_pq = C64::new(s, 0.0);
                let g_qp = -phase.conj() * s;
                let g_qq = phase.conj() * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * g_pp + akq * g_qp;
                    a[(k, q)] = akp * g_pq + akq * g_qq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = g_pp.conj() * apk + g_qp.conj() * aqk;
                    a[(q, k)] = g_pq.conj() * apk + g_qq.conj() * aqk;
                }
                a[(p, q)] = C64::new(0.0, 0.0);
                a[(q, p)] = C64::new(0.0, 0.0);
                a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * g_pp + vkq * g_qp;
                    v[(k, q)] = vkp * g_pq + vkq * g_qq;
                }
            }
        }
    }
    if !converged {
        let off = off_diagonal_norm(&a);
        if off >= tol {
            return Err(LinalgError::NoConvergence { sweeps: MAX_SWEEPS, off });
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let vals: Vec<f64> = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut vecs = ComplexMatrix::zeros(n, n);
    for (new_c, &old_c) in order.iter().enumerate() {
        for r in 0..n {
            vecs[(r, new_c)] = v[(r, old_c)];
        }
    }
    if !vals.iter().all(|x| x.is_finite()) || !vecs.is_finite() {
        return Err(LinalgError::NonFinite("hermitian_eigensolve"));
    }
    Ok((vals, vecs))
}

/// Mixing angle for the first Hermitian combination in [`unitary_eigensolve`].
/// A generic angle avoids the systematic degeneracy between phases `phi` and `-phi`
/// that the plain real part `(U + U^dagger)/2` has.
const MIX_ANGLE: f64 = 0.977_123;

/// Eigenvalues closer than this (relative) are treated as one cluster.
const CLUSTER_TOL: f64 = 1e-6;

/// Diagonalise a unitary by joint diagonalisation of two commuting Hermitian parts.
///
/// With `H1 = (U + U^dagger)/2` and `H2 = (U - U^dagger)/(2i)`, the solver
/// diagonalises `K = H1 cos a + H2 sin a`, then resolves each degenerate cluster
/// of `K` with the orthogonal combination `-H1 sin a + H2 cos a`. Eigenvalues
/// are Rayleigh quotients projected onto the unit circle and come back sorted by
/// eigenphase in (-pi, pi].
pub fn unitary_eigensolve(u: &ComplexMatrix) -> Result<EigenDecomposition, LinalgError> {
    if !u.is_square() {
        return Err(LinalgError::DimensionMismatch(format!("{}x{} is not square", u.rows(), u.cols())));
    }
    let uerr = u.unitarity_error();
    if uerr > STRUCTURE_TOL {
        return Err(LinalgError::NotUnitary(uerr));
    }
    let n = u.rows();
    let ud = u.adjoint();
    let h1 = (u + &ud).scale_real(0.5);
    let h2 = (u - &ud).scale(C64::new(0.0, -0.5));
    let (ca, sa) = (MIX_ANGLE.cos(), MIX_ANGLE.sin());
    let k = &h1.scale_real(ca) + &h2.scale_real(sa);
    let m = &h1.scale_real(-sa) + &h2.scale_real(ca);
    let (kvals, kvecs) = jacobi(k.hermitian_part())?;

    let mut vecs = ComplexMatrix::zeros(n, n);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (kvals[end] - kvals[end - 1]).abs() < CLUSTER_TOL {
            end += 1;
        }
        let width = end - start;
        if width == 1 {
            for r in 0..n {
                vecs[(r, start)] = kvecs[(r, start)];
            }
        } else {
            let basis = kvecs.block(0, start, n, width);
            let restricted = basis.adjoint().matmul(&m).matmul(&basis).hermitian_part();
            let (_, sub) = jacobi(restricted)?;
            let rotated = basis.matmul(&sub);
            for r in 0..n {
                for c in 0..width {
                    vecs[(r, start + c)] = rotated[(r, c)];
                }
            }
        }
        start = end;
    }

    let uv = u.matmul(&vecs);
    let mut pairs: Vec<(C64, usize)> = (0..n)
        .map(|c| {
            let lam: C64 = (0..n).map(|r| vecs[(r, c)].conj() * uv[(r, c)]).sum();
            (lam / lam.norm(), c)
        })
        .collect();
    pairs.sort_by(|a, b| wrap_phase(a.0.arg()).total_cmp(&wrap_phase(b.0.arg())));
    let mut sorted = ComplexMatrix::zeros(n, n);
    for (new_c, &(_, old_c)) in pairs.iter().enumerate() {
        for r in 0..n {
            sorted[(r, new_c)] = vecs[(r, old_c)];
        }
    }
    let eigenvalues: Vec<C64> = pairs.into_iter().map(|(l, _)| l).collect();
    if !eigenvalues.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        return Err(LinalgError::NonFinite("unitary_eigensolve"));
    }
    Ok(EigenDecomposition { eigenvalues, eigenvectors: sorted })
}

/// `exp(-i H t)` through the eigendecomposition of `H`.
pub fn matrix_exponential_hermitian(h: &ComplexMatrix, t: f64) -> Result<ComplexMatrix, LinalgError> {
    let eig = hermitian_eigensolve(h)?;
    Ok(exp_from_eigen(&eig, t))
}

/// `exp(-i H t)` from a precomputed Hermitian decomposition.
pub fn exp_from_eigen(eig: &EigenDecomposition, t: f64) -> ComplexMatrix {
    let phases: Vec<C64> = eig.eigenvalues.iter().map(|l| C64::new(0.0, -l.re * t).exp()).collect();
    EigenDecomposition { eigenvalues: phases, eigenvectors: eig.eigenvectors.clone() }.reconstruct()
}

/// Kronecker product `A (x) B`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (ar, ac, br, bc) = (a.rows(), a.cols(), b.rows(), b.cols());
    let mut out = ComplexMatrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[(i, j)];
            if aij.re == 0.0 && aij.im == 0.0 {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Trace out factor `traced_index` of a density matrix on `subsystem_dims`.
pub fn partial_trace(
    rho: &ComplexMatrix,
    subsystem_dims: &[usize],
    traced_index: usize,
) -> Result<ComplexMatrix, LinalgError> {
    if subsystem_dims.is_empty() || subsystem_dims.contains(&0) {
        return Err(LinalgError::DimensionMismatch("subsystem dims must be non-empty and positive".into()));
    }
    if traced_index >= subsystem_dims.len() {
        return Err(LinalgError::DimensionMismatch(format!(
            "traced index {traced_index} out of range for {} subsystems",
            subsystem_dims.len()
        )));
    }
    let total: usize = subsystem_dims.iter().product();
    if !rho.is_square() || rho.rows() != total {
        return Err(LinalgError::DimensionMismatch(format!(
            "rho is {}x{}, subsystem product is {total}",
            rho.rows(),
            rho.cols()
        )));
    }
    if subsystem_dims.len() == 1 {
        return Ok(ComplexMatrix::from_vec(1, 1, vec![rho.trace()]));
    }
    let before: usize = subsystem_dims[..traced_index].iter().product();
    let mid = subsystem_dims[traced_index];
    let after: usize = subsystem_dims[traced_index + 1..].iter().product();
    let kept = before * after;
    let mut out = ComplexMatrix::zeros(kept, kept);
    for a1 in 0..before {
        for b1 in 0..after {
            let row = a1 * after + b1;
            for a2 in 0..before {
                for b2 in 0..after {
                    let col = a2 * after + b2;
                    let mut s = C64::new(0.0, 0.0);
                    for m in 0..mid {
                        s += rho[((a1 * mid + m) * after + b1, (a2 * mid + m) * after + b2)];
                    }
                    out[(row, col)] = s;
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn pauli_x_spectrum() {
        let sx = ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let e = hermitian_eigensolve(&sx).unwrap();
        let v = e.real_eigenvalues();
        assert!((v[0] + 1.0).abs() < 1e-14 && (v[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn identity_is_its_own_eigenbasis() {
        let e = hermitian_eigensolve(&ComplexMatrix::identity(8)).unwrap();
        assert!(e.real_eigenvalues().iter().all(|&x| (x - 1.0).abs() < 1e-15));
        assert!(e.eigenvectors.max_diff(&ComplexMatrix::identity(8)) < 1e-15);
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = ComplexMatrix::from_vec(2, 2, vec![c(0., 0.), c(1., 0.), c(0., 0.), c(0., 0.)]);
        assert!(matches!(hermitian_eigensolve(&m), Err(LinalgError::NotHermitian(_))));
    }

    #[test]
    fn diagonal_unitary_phases() {
        let u = ComplexMatrix::from_diag(&[c(1., 0.), c(0., 1.), c(-1., 0.)]);
        let ph = unitary_eigensolve(&u).unwrap().eigenphases();
        assert!(ph[0].abs() < 1e-14);
        assert!((ph[1] - PI / 2.0).abs() < 1e-14);
        assert!((ph[2] - PI).abs() < 1e-14);
    }

    #[test]
    fn rejects_non_unitary() {
        let m = ComplexMatrix::identity(3).scale_real(1.1);
        assert!(matches!(unitary_eigensolve(&m), Err(LinalgError::NotUnitary(_))));
    }

    #[test]
    fn larmor_period_gives_minus_identity() {
        let w = 2.3;
        let iz = ComplexMatrix::from_real(2, 2, &[0.5, 0.0, 0.0, -0.5]);
        let u = matrix_exponential_hermitian(&iz.scale_real(w), 2.0 * PI / w).unwrap();
        assert!(u.max_diff(&ComplexMatrix::identity(2).scale_real(-1.0)) < 1e-12);
    }

    #[test]
    fn zero_hamiltonian_gives_identity() {
        let u = matrix_exponential_hermitian(&ComplexMatrix::zeros(4, 4), 17.0).unwrap();
        assert!(u.max_diff(&ComplexMatrix::identity(4)) < 1e-15);
    }

    #[test]
    fn kron_of_pauli_z() {
        let sz = ComplexMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let k = kron(&sz, &ComplexMatrix::identity(2));
        let want = ComplexMatrix::from_real(4, 4, &[1., 0., 0., 0., 0., 1., 0., 0., 0., 0., -1., 0., 0., 0., 0., -1.]);
        assert_eq!(k, want);
        assert_eq!(kron(&ComplexMatrix::identity(2), &ComplexMatrix::identity(2)), ComplexMatrix::identity(4));
    }

    #[test]
    fn bell_state_reduces_to_maximally_mixed() {
        let s = 0.5f64.sqrt();
        let psi = [c(s, 0.), c(0., 0.), c(0., 0.), c(s, 0.)];
        let mut rho = ComplexMatrix::zeros(4, 4);
        for i in 0..4 {
            for j in 0..4 {
                rho[(i, j)] = psi[i] * psi[j].conj();
            }
        }
        let half = ComplexMatrix::identity(2).scale_real(0.5);
        for idx in 0..2 {
            assert!(partial_trace(&rho, &[2, 2], idx).unwrap().max_diff(&half) < 1e-15);
        }
    }

    #[test]
    fn partial_trace_rejects_bad_dims() {
        let rho = ComplexMatrix::identity(4);
        assert!(partial_trace(&rho, &[2, 3], 0).is_err());
        assert!(partial_trace(&rho, &[2, 2], 2).is_err());
    }

    #[test]
    fn wrap_phase_range() {
        assert_eq!(wrap_phase(-PI), PI);
        assert!((wrap_phase(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_phase(0.5 - 4.0 * PI) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn powi_matches_repeated_product() {
        let m = ComplexMatrix::from_vec(2, 2, vec![c(0.3, 0.1), c(-0.2, 0.4), c(0.5, 0.0), c(0.1, -0.7)]);
        let direct = m.matmul(&m).matmul(&m).matmul(&m).matmul(&m);
        assert!(m.powi(5).max_diff(&direct) < 1e-14);
        assert_eq!(m.powi(0), ComplexMatrix::identity(2));
    }
}
