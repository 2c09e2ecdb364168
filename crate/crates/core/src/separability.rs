//! Kronecker-separability residuals.
//!
//! A bipartite pure state is a product state exactly when its coefficient matrix
//! has rank one, i.e. when every 2×2 minor vanishes. The residual reported here is
//! the sum of the moduli of all `C(m,2)·C(n,2)` minors, enumerated in
//! lexicographic order of `(i1, i2, j1, j2)`. The same test applied to the
//! realigned matrix of an operator decides whether it factors as `A ⊗ B`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::UnitaryGate;
use crate::linalg::{kron_vec, ComplexMatrix};
use crate::states::{coefficient_matrix, schmidt_coefficients, BipartiteShape, PureState};

/// Default residual tolerance for unit-norm states.
pub const TOL_SEPARABLE: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Minor {
    pub rows: (usize, usize),
    pub cols: (usize, usize),
    pub value: Complex64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub total: f64,
    pub max_minor: f64,
    pub minors: Vec<Minor>,
    pub minor_count: usize,
}

/// All 2×2 minors of a matrix.
pub fn minor_residual(m: &ComplexMatrix) -> ResidualReport {
    let (rows, cols) = (m.rows(), m.cols());
    let mut minors = Vec::with_capacity(rows * rows.saturating_sub(1) * cols * cols.saturating_sub(1) / 4);
    for i1 in 0..rows {
        for i2 in i1 + 1..rows {
            for j1 in 0..cols {
                for j2 in j1 + 1..cols {
                    let value = m[(i1, j1)] * m[(i2, j2)] - m[(i1, j2)] * m[(i2, j1)];
                    minors.push(Minor {
                        rows: (i1, i2),
                        cols: (j1, j2),
                        value,
                    });
                }
            }
        }
    }
    let total = minors.iter().map(|x| x.value.norm()).sum();
    let max_minor = minors.iter().map(|x| x.value.norm()).fold(0.0, f64::max);
    ResidualReport {
        total,
        max_minor,
        minor_count: minors.len(),
        minors,
    }
}

/// Residual total of a row-major `rows×cols` coefficient array, without
/// materializing the minors. Same enumeration as [`minor_residual`].
pub(crate) fn residual_total(data: &[Complex64], rows: usize, cols: usize) -> f64 {
    let mut total = 0.0;
    for i1 in 0..rows {
        let r1 = &data[i1 * cols..(i1 + 1) * cols];
        for i2 in i1 + 1..rows {
            let r2 = &data[i2 * cols..(i2 + 1) * cols];
            for j1 in 0..cols {
                for j2 in j1 + 1..cols {
                    total += (r1[j1] * r2[j2] - r1[j2] * r2[j1]).norm();
                }
            }
        }
    }
    total
}

pub fn state_kron_residual(s: &PureState, shape: BipartiteShape) -> Result<ResidualReport> {
    Ok(minor_residual(&coefficient_matrix(s, shape)?))
}

/// Dual-criterion product test: minor residual `≤ tol` and second Schmidt
/// coefficient `≤ √tol`. The two must agree.
pub fn is_separable_state(s: &PureState, shape: BipartiteShape, tol: f64) -> Result<bool> {
    let residual = state_kron_residual(s, shape)?.total;
    let sigma2 = schmidt_coefficients(s, shape)?.get(1).copied().unwrap_or(0.0);
    let by_minors = residual <= tol;
    let by_schmidt = sigma2 <= tol.sqrt();
    if by_minors != by_schmidt {
        return Err(Error::OracleDisagreement { residual, sigma2, tol });
    }
    Ok(by_minors)
}

/// A bipartition of a multipartite system: `side_a` lists qudit positions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitMask {
    dims: Vec<usize>,
    side_a: Vec<usize>,
}

impl SplitMask {
    pub fn new(dims: Vec<usize>, mut side_a: Vec<usize>) -> Result<Self> {
        side_a.sort_unstable();
        side_a.dedup();
        if side_a.is_empty() || side_a.len() >= dims.len() {
            return Err(Error::InvalidSplit("side A must be a nonempty proper subset".into()));
        }
        if let Some(&p) = side_a.iter().find(|&&p| p >= dims.len()) {
            return Err(Error::InvalidSplit(format!("position {p} out of range")));
        }
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidSplit("qudit dimensions must be positive".into()));
        }
        Ok(Self { dims, side_a })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn side_a(&self) -> &[usize] {
        &self.side_a
    }

    pub fn side_b(&self) -> Vec<usize> {
        (0..self.dims.len()).filter(|p| !self.side_a.contains(p)).collect()
    }

    /// Dimensions `(∏ side A, ∏ side B)`.
    pub fn block_dims(&self) -> (usize, usize) {
        let a = self.side_a.iter().map(|&p| self.dims[p]).product();
        let b = self.side_b().iter().map(|&p| self.dims[p]).product();
        (a, b)
    }

    /// Human-readable label such as `A|BC`.
    pub fn label(&self) -> String {
        let name = |p: usize| char::from(b'A' + (p as u8 % 26));
        let a: String = self.side_a.iter().map(|&p| name(p)).collect();
        let b: String = self.side_b().into_iter().map(name).collect();
        format!("{a}|{b}")
    }
}

/// Reorders amplitudes so that side A is the major index (positions ascending
/// within each side) and returns the resulting `(∏A)×(∏B)` coefficient matrix.
pub fn split_coefficient_matrix(s: &PureState, split: &SplitMask) -> Result<ComplexMatrix> {
    let dims = split.dims();
    let total: usize = dims.iter().product();
    if total != s.dim() {
        return Err(Error::ShapeMismatch(format!(
            "split dims {dims:?} multiply to {total}, state has dimension {}",
            s.dim()
        )));
    }
    let (rows, cols) = split.block_dims();
    let side_a = split.side_a();
    let side_b = split.side_b();
    let mut out = ComplexMatrix::zeros(rows, cols);
    let mut digits = vec![0usize; dims.len()];
    for (flat, amp) in s.amplitudes().iter().enumerate() {
        // mixed-radix digits, first position most significant
        let mut rem = flat;
        for p in (0..dims.len()).rev() {
            digits[p] = rem % dims[p];
            rem /= dims[p];
        }
        let r = side_a.iter().fold(0, |acc, &p| acc * dims[p] + digits[p]);
        let c = side_b.iter().fold(0, |acc, &p| acc * dims[p] + digits[p]);
        out[(r, c)] = *amp;
    }
    Ok(out)
}

pub fn multipartite_split_residual(s: &PureState, split: &SplitMask) -> Result<ResidualReport> {
    Ok(minor_residual(&split_coefficient_matrix(s, split)?))
}

/// Realigned operator: `R((i1,i2),(j1,j2)) = U(i1·n+j1, i2·n+j2)`. `U = A⊗B`
/// exactly when `R` has rank one.
pub fn realign(u: &ComplexMatrix, shape: BipartiteShape) -> Result<ComplexMatrix> {
    let (m, n) = (shape.m, shape.n);
    if !u.is_square() || u.rows() != m * n {
        return Err(Error::ShapeMismatch(format!(
            "operator of size {}x{} does not match shape {shape}",
            u.rows(),
            u.cols()
        )));
    }
    Ok(ComplexMatrix::from_fn(m * m, n * n, |r, c| {
        let (i1, i2) = (r / m, r % m);
        let (j1, j2) = (c / n, c % n);
        u[(i1 * n + j1, i2 * n + j2)]
    }))
}

pub fn operator_kron_residual(u: &UnitaryGate, shape: BipartiteShape) -> Result<ResidualReport> {
    Ok(minor_residual(&realign(u.matrix(), shape)?))
}

/// Literal bilinear-form check of `N = N_A ⊗ N_B`.
///
/// With `γ(p,q,r,s) = (p⊗r)† N (q⊗s)` evaluated on canonical basis vectors, sums
/// `|γ(p1,q1,r1,s1)·γ(p2,q2,r2,s2) − γ(p1,q1,r2,s2)·γ(p2,q2,r1,s1)|` over all
/// ordered choices. Cost grows as `(m²n²)²`; intended for small dimensions.
pub fn gamma_condition_residual(n_matrix: &ComplexMatrix, shape: BipartiteShape) -> Result<f64> {
    let (m, n) = (shape.m, shape.n);
    let dim = m * n;
    if !n_matrix.is_square() || n_matrix.rows() != dim {
        return Err(Error::ShapeMismatch(format!(
            "matrix of size {}x{} does not match shape {shape}",
            n_matrix.rows(),
            n_matrix.cols()
        )));
    }
    let basis = |d: usize, k: usize| -> Vec<Complex64> {
        let mut v = vec![Complex64::new(0.0, 0.0); d];
        v[k] = Complex64::new(1.0, 0.0);
        v
    };
    let gamma = |p: &[Complex64], q: &[Complex64], r: &[Complex64], s: &[Complex64]| -> Complex64 {
        let left = kron_vec(p, r);
        let right = n_matrix.mul_vec(&kron_vec(q, s));
        left.iter().zip(&right).map(|(a, b)| a.conj() * b).sum()
    };
    // table[(p, q)][(r, s)] over basis indices
    let mut table = vec![Complex64::new(0.0, 0.0); m * m * n * n];
    for p in 0..m {
        for q in 0..m {
            for r in 0..n {
                for s in 0..n {
                    table[(p * m + q) * n * n + r * n + s] =
                        gamma(&basis(m, p), &basis(m, q), &basis(n, r), &basis(n, s));
                }
            }
        }
    }
    let mut total = 0.0;
    let (pq_count, rs_count) = (m * m, n * n);
    for pq1 in 0..pq_count {
        for pq2 in 0..pq_count {
            for rs1 in 0..rs_count {
                for rs2 in 0..rs_count {
                    let lhs = table[pq1 * rs_count + rs1] * table[pq2 * rs_count + rs2];
                    let rhs = table[pq1 * rs_count + rs2] * table[pq2 * rs_count + rs1];
                    total += (lhs - rhs).norm();
                }
            }
        }
    }
    Ok(total)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum FilterOutcome {
    Pass,
    Fail { column: usize, residual: f64 },
}

impl FilterOutcome {
    pub fn passed(&self) -> bool {
        matches!(self, FilterOutcome::Pass)
    }
}

/// A universal entangler cannot map a basis product state to a product state, so
/// any column with residual `≤ tol` rejects the gate. Reports the first such column.
pub fn column_separability_filter(u: &UnitaryGate, shape: BipartiteShape, tol: f64) -> Result<FilterOutcome> {
    if u.dim() != shape.dim() {
        return Err(Error::ShapeMismatch(format!(
            "gate dimension {} does not match shape {shape}",
            u.dim()
        )));
    }
    for col in 0..u.dim() {
        let v = u.matrix().column(col);
        let residual = residual_total(&v, shape.m, shape.n);
        if residual <= tol {
            return Ok(FilterOutcome::Fail { column: col, residual });
        }
    }
    Ok(FilterOutcome::Pass)
}

/// The three-qutrit state `(|000⟩ − |011⟩ − |112⟩ + |120⟩ − |202⟩ + |221⟩)/√6`.
pub fn kappa_state() -> PureState {
    let terms: [(usize, usize, usize, f64); 6] = [
        (0, 0, 0, 1.0),
        (0, 1, 1, -1.0),
        (1, 1, 2, -1.0),
        (1, 2, 0, 1.0),
        (2, 0, 2, -1.0),
        (2, 2, 1, 1.0),
    ];
    let amp = 1.0 / 6f64.sqrt();
    let mut v = vec![Complex64::new(0.0, 0.0); 27];
    for (a, b, c, sign) in terms {
        v[a * 9 + b * 3 + c] = Complex64::new(sign * amp, 0.0);
    }
    PureState::new(v).expect("kappa is normalized")
}
