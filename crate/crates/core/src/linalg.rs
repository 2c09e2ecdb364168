//! Dense complex linear algebra for small matrices (dimension up to a few dozen).
//!
//! Everything here is row-major and allocation-light. The spectral routines are
//! Jacobi methods, which are slow asymptotically but accurate and deterministic at
//! the sizes this crate works with.

use std::fmt;
use std::ops::{Index, IndexMut, Mul};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Unitarity tolerance used for gate validation.
pub const TOL_UNITARY: f64 = 1e-10;
/// Reconstruction tolerance for derived gates (square roots and products).
pub const TOL_RECON: f64 = 1e-9;

/// Eigenphases this close to -pi are treated as +pi.
const PHASE_SNAP: f64 = 1e-9;
const JACOBI_MAX_SWEEPS: usize = 100;
/// Mixing coefficient for the Hermitian pencil `H1 + c*H2` used to diagonalize a
/// normal matrix. Any value that avoids accidental degeneracies works.
const PENCIL_MIX: f64 = 0.577_215_664_901_532_9;
const PENCIL_MIX_REFINE: f64 = -1.324_717_957_244_746;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    /// Builds a matrix from row-major entries.
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(Error::BadDimensions {
                rows,
                cols,
                got: data.len(),
            });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { ONE } else { ZERO })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_diagonal(diag: &[Complex64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| if i == j { diag[i] } else { ZERO })
    }

    /// A single column vector.
    pub fn column_vector(v: &[Complex64]) -> Self {
        Self {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
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

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, k: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * k).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                let orow = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (o, b) in orow.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.cols, v.len(), "vector length differs from column count");
        let mut out = vec![ZERO; self.rows];
        mul_vec_into(&self.data, self.cols, v, &mut out);
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `‖self − other‖_F`.
    pub fn distance(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn is_diagonal(&self, tol: f64) -> bool {
        (0..self.rows).all(|i| (0..self.cols).all(|j| i == j || self[(i, j)].norm() <= tol))
    }

    pub fn kron(&self, other: &Self) -> Self {
        kron(self, other)
    }
}

/// Row-major matrix times vector into a caller-owned buffer.
pub(crate) fn mul_vec_into(data: &[Complex64], cols: usize, v: &[Complex64], out: &mut [Complex64]) {
    for (o, row) in out.iter_mut().zip(data.chunks_exact(cols)) {
        let mut acc = ZERO;
        for (a, b) in row.iter().zip(v) {
            acc += a * b;
        }
        *o = acc;
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for z in self.row(i) {
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Kronecker product; entry `(i*b.rows + k, j*b.cols + l)` is `a(i,j)*b(k,l)`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix::from_fn(a.rows * b.rows, a.cols * b.cols, |r, c| {
        a[(r / b.rows, c / b.cols)] * b[(r % b.rows, c % b.cols)]
    })
}

/// Kronecker product of two vectors, first factor major.
pub fn kron_vec(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for x in a {
        for y in b {
            out.push(x * y);
        }
    }
    out
}

pub fn is_unitary(u: &ComplexMatrix, tol: f64) -> bool {
    u.is_square() && unitarity_deviation(u) <= tol
}

/// `‖u†u − I‖_F`.
pub fn unitarity_deviation(u: &ComplexMatrix) -> f64 {
    let g = u.adjoint().matmul(u);
    g.distance(&ComplexMatrix::identity(u.cols))
}

#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<Complex64>,
    /// Columns are orthonormal eigenvectors, in the same order as `eigenvalues`.
    pub eigenvectors: ComplexMatrix,
}

impl SpectralDecomposition {
    /// `V · diag(f(λ)) · V†`.
    pub fn map_eigenvalues(&self, f: impl Fn(Complex64) -> Complex64) -> ComplexMatrix {
        let v = &self.eigenvectors;
        let n = v.rows;
        let mapped: Vec<Complex64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        ComplexMatrix::from_fn(n, n, |i, j| {
            (0..n).map(|k| v[(i, k)] * mapped[k] * v[(j, k)].conj()).sum()
        })
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.map_eigenvalues(|l| l)
    }
}

/// Phase angle in `(−π, π]`, with values within `PHASE_SNAP` of −π mapped to π.
pub fn principal_phase(z: Complex64) -> f64 {
    let theta = z.arg();
    if theta <= -std::f64::consts::PI + PHASE_SNAP {
        std::f64::consts::PI
    } else {
        theta
    }
}

/// 2×2 Hermitian Jacobi rotation zeroing the off-diagonal element `apq` of
/// `[[app, apq], [conj(apq), aqq]]`. Returns the unitary `G` as
/// `(g_pp, g_pq, g_qp, g_qq)` such that `G† A G` is diagonal.
fn jacobi_rotation(app: f64, aqq: f64, apq: Complex64) -> (Complex64, Complex64, Complex64, Complex64) {
    let mag = apq.norm();
    let phase = Complex64::from_polar(1.0, -apq.arg());
    let tau = (aqq - app) / (2.0 * mag);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    (
        Complex64::new(c, 0.0),
        Complex64::new(s, 0.0),
        phase * (-s),
        phase * c,
    )
}

/// Eigen-decomposition of a Hermitian matrix by cyclic complex Jacobi.
/// Eigenvalues are returned in the order the sweep leaves them (unsorted).
pub(crate) fn hermitian_eig(h: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    let n = h.rows;
    let mut a = h.clone();
    // enforce exact Hermiticity
    for i in 0..n {
        a[(i, i)] = Complex64::new(a[(i, i)].re, 0.0);
        for j in i + 1..n {
            let avg = (a[(i, j)] + a[(j, i)].conj()) * 0.5;
            a[(i, j)] = avg;
            a[(j, i)] = avg.conj();
        }
    }
    let mut v = ComplexMatrix::identity(n);
    let scale = a.frobenius_norm().max(f64::MIN_POSITIVE);

    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|(i, j)| i != j)
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            let eigenvalues = (0..n).map(|i| a[(i, i)].re).collect();
            return Ok((eigenvalues, v));
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq.norm() <= 1e-300 {
                    continue;
                }
                let (gpp, gpq, gqp, gqq) = jacobi_rotation(a[(p, p)].re, a[(q, q)].re, apq);
                // A <- A G
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * gpp + akq * gqp;
                    a[(k, q)] = akp * gpq + akq * gqq;
                }
                // A <- G† A
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = gpp.conj() * apk + gqp.conj() * aqk;
                    a[(q, k)] = gpq.conj() * apk + gqq.conj() * aqk;
                }
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
                a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * gpp + vkq * gqp;
                    v[(k, q)] = vkp * gpq + vkq * gqq;
                }
            }
        }
    }
    Err(Error::NoConvergence {
        routine: "hermitian Jacobi",
        iterations: JACOBI_MAX_SWEEPS,
    })
}

/// Splits a normal matrix into commuting Hermitian parts and diagonalizes the
/// pencil `re + mix*im`.
fn pencil_eigenvectors(u: &ComplexMatrix, mix: f64) -> Result<(Vec<f64>, ComplexMatrix)> {
    let ua = u.adjoint();
    let re = u.add(&ua).scale(Complex64::new(0.5, 0.0));
    // (U − U†)/(2i)
    let im = u.sub(&ua).scale(Complex64::new(0.0, -0.5));
    hermitian_eig(&re.add(&im.scale(Complex64::new(mix, 0.0))))
}

/// Spectral decomposition of a normal matrix.
///
/// Eigenpairs are sorted by principal phase, then modulus, then the index of the
/// first maximal-magnitude eigenvector component.
pub fn eig_normal(u: &ComplexMatrix, tol: f64) -> Result<SpectralDecomposition> {
    if !u.is_square() {
        return Err(Error::NotSquare {
            rows: u.rows,
            cols: u.cols,
        });
    }
    let n = u.rows;
    let ua = u.adjoint();
    let deviation = u.matmul(&ua).distance(&ua.matmul(u));
    if deviation > tol {
        return Err(Error::NotNormal { deviation, tol });
    }

    let (pencil_vals, mut v) = pencil_eigenvectors(u, PENCIL_MIX)?;

    // Eigenvalues of the pencil that (nearly) coincide may hide distinct
    // eigenvalues of `u`; rediagonalize `u` restricted to each such cluster.
    let scale = u.frobenius_norm().max(1.0);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| pencil_vals[a].total_cmp(&pencil_vals[b]));
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for &idx in &order {
        match clusters.last_mut() {
            Some(c) if (pencil_vals[idx] - pencil_vals[*c.last().unwrap()]).abs() <= 1e-6 * scale => {
                c.push(idx)
            }
            _ => clusters.push(vec![idx]),
        }
    }
    for cluster in clusters.iter().filter(|c| c.len() > 1) {
        let k = cluster.len();
        let basis = ComplexMatrix::from_fn(n, k, |i, j| v[(i, cluster[j])]);
        let block = basis.adjoint().matmul(u).matmul(&basis);
        let (_, w) = pencil_eigenvectors(&block, PENCIL_MIX_REFINE)?;
        let rotated = basis.matmul(&w);
        for (j, &col) in cluster.iter().enumerate() {
            for i in 0..n {
                v[(i, col)] = rotated[(i, j)];
            }
        }
    }

    let uv = u.matmul(&v);
    let eigenvalues: Vec<Complex64> = (0..n)
        .map(|k| (0..n).map(|i| v[(i, k)].conj() * uv[(i, k)]).sum())
        .collect();

    let lead_index = |k: usize| -> usize {
        let mut best = 0;
        let mut best_mag = -1.0;
        for i in 0..n {
            let mag = v[(i, k)].norm();
            // treat near-equal magnitudes as ties so ordering is insensitive to rounding
            if mag > best_mag + 1e-12 {
                best = i;
                best_mag = mag;
            }
        }
        best
    };
    let mut perm: Vec<usize> = (0..n).collect();
    perm.sort_by(|&a, &b| {
        principal_phase(eigenvalues[a])
            .total_cmp(&principal_phase(eigenvalues[b]))
            .then(eigenvalues[a].norm().total_cmp(&eigenvalues[b].norm()))
            .then(lead_index(a).cmp(&lead_index(b)))
            .then(a.cmp(&b))
    });

    let decomposition = SpectralDecomposition {
        eigenvalues: perm.iter().map(|&k| eigenvalues[k]).collect(),
        eigenvectors: ComplexMatrix::from_fn(n, n, |i, j| v[(i, perm[j])]),
    };

    let recon = decomposition.reconstruct().distance(u);
    let ortho = unitarity_deviation(&decomposition.eigenvectors);
    if recon > 1e-10 * scale || ortho > 1e-10 {
        return Err(Error::NoConvergence {
            routine: "normal eigendecomposition",
            iterations: JACOBI_MAX_SWEEPS,
        });
    }
    Ok(decomposition)
}

/// Principal square root of a unitary: each eigenphase `θ ∈ (−π, π]` is halved.
pub fn principal_sqrt_unitary(u: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !u.is_square() {
        return Err(Error::NotSquare {
            rows: u.rows,
            cols: u.cols,
        });
    }
    let deviation = unitarity_deviation(u);
    if deviation > TOL_UNITARY {
        return Err(Error::NotUnitary {
            deviation,
            tol: TOL_UNITARY,
        });
    }
    let spectral = eig_normal(u, TOL_UNITARY)?;
    Ok(spectral.map_eigenvalues(|l| Complex64::from_polar(1.0, principal_phase(l) / 2.0)))
}

/// Singular values in descending order, by one-sided (Hestenes) Jacobi.
///
/// One-sided Jacobi keeps high relative accuracy for tiny singular values, which
/// matters because the second Schmidt coefficient of a product state is the
/// quantity being tested against zero.
pub fn singular_values(m: &ComplexMatrix) -> Result<Vec<f64>> {
    // work on whichever orientation has no more columns than rows
    let a = if m.cols > m.rows { m.adjoint() } else { m.clone() };
    let (rows, cols) = (a.rows, a.cols);
    // column-major copy so column pairs are contiguous
    let mut colv: Vec<Vec<Complex64>> = (0..cols).map(|j| a.column(j)).collect();

    let mut converged = false;
    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let alpha: f64 = colv[p].iter().map(|z| z.norm_sqr()).sum();
                let beta: f64 = colv[q].iter().map(|z| z.norm_sqr()).sum();
                let gamma: Complex64 = colv[p].iter().zip(&colv[q]).map(|(x, y)| x.conj() * y).sum();
                if gamma.norm() <= 1e-15 * (alpha * beta).sqrt() || gamma.norm() <= 1e-300 {
                    continue;
                }
                rotated = true;
                let (gpp, gpq, gqp, gqq) = jacobi_rotation(alpha, beta, gamma);
                for i in 0..rows {
                    let x = colv[p][i];
                    let y = colv[q][i];
                    colv[p][i] = x * gpp + y * gqp;
                    colv[q][i] = x * gpq + y * gqq;
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            routine: "one-sided Jacobi SVD",
            iterations: JACOBI_MAX_SWEEPS,
        });
    }
    let mut values: Vec<f64> = colv
        .iter()
        .map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .collect();
    values.sort_by(|a, b| b.total_cmp(a));
    Ok(values)
}
