//! Pure states, coefficient matrices, Schmidt spectra and von Neumann entanglement.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::UnitaryGate;
use crate::linalg::{kron_vec, singular_values, ComplexMatrix};

/// Norm tolerance for validated states.
pub const TOL_NORM: f64 = 1e-10;
/// Schmidt coefficients below this are treated as exactly zero in the entropy.
const SCHMIDT_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BipartiteShape {
    pub m: usize,
    pub n: usize,
}

impl BipartiteShape {
    pub fn new(m: usize, n: usize) -> Result<Self> {
        if m < 2 || n < 2 {
            return Err(Error::InvalidShape { m, n });
        }
        Ok(Self { m, n })
    }

    pub fn dim(&self) -> usize {
        self.m * self.n
    }

    fn check(&self, dim: usize) -> Result<()> {
        if self.dim() != dim {
            return Err(Error::ShapeMismatch(format!(
                "shape {}x{} does not match dimension {dim}",
                self.m, self.n
            )));
        }
        Ok(())
    }
}

impl std::fmt::Display for BipartiteShape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}", self.m, self.n)
    }
}

/// A unit-norm amplitude vector.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    amplitudes: Vec<Complex64>,
}

impl PureState {
    /// Wraps amplitudes that must already have unit norm.
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm = vec_norm(&amplitudes);
        if amplitudes.is_empty() || (norm - 1.0).abs() > TOL_NORM || !norm.is_finite() {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self { amplitudes })
    }

    /// Normalizes arbitrary nonzero amplitudes.
    pub fn normalized(mut amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm = vec_norm(&amplitudes);
        if amplitudes.is_empty() || norm == 0.0 || !norm.is_finite() {
            return Err(Error::NotNormalized { norm });
        }
        for a in &mut amplitudes {
            *a /= norm;
        }
        Ok(Self { amplitudes })
    }

    /// Canonical basis vector `e_k`.
    pub fn basis(dim: usize, k: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[k] = Complex64::new(1.0, 0.0);
        Self { amplitudes }
    }

    pub(crate) fn from_raw(amplitudes: Vec<Complex64>) -> Self {
        Self { amplitudes }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        vec_norm(&self.amplitudes)
    }

    pub fn with_global_phase(&self, phi: f64) -> Self {
        let p = Complex64::from_polar(1.0, phi);
        Self::from_raw(self.amplitudes.iter().map(|a| a * p).collect())
    }
}

pub(crate) fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProductState {
    pub factor_a: PureState,
    pub factor_b: PureState,
}

impl ProductState {
    pub fn new(factor_a: PureState, factor_b: PureState) -> Self {
        Self { factor_a, factor_b }
    }

    pub fn shape(&self) -> Result<BipartiteShape> {
        BipartiteShape::new(self.factor_a.dim(), self.factor_b.dim())
    }

    /// The joint state `a ⊗ b`.
    pub fn flatten(&self) -> PureState {
        PureState::from_raw(kron_vec(self.factor_a.amplitudes(), self.factor_b.amplitudes()))
    }
}

/// Reshapes a state into its `m×n` coefficient matrix, first factor major.
pub fn coefficient_matrix(s: &PureState, shape: BipartiteShape) -> Result<ComplexMatrix> {
    shape.check(s.dim())?;
    ComplexMatrix::new(shape.m, shape.n, s.amplitudes.clone())
}

/// Inverse of [`coefficient_matrix`].
pub fn flatten_matrix(m: &ComplexMatrix) -> Result<PureState> {
    PureState::new(m.as_slice().to_vec())
}

/// Schmidt coefficients (descending), i.e. the singular values of the coefficient matrix.
pub fn schmidt_coefficients(s: &PureState, shape: BipartiteShape) -> Result<Vec<f64>> {
    singular_values(&coefficient_matrix(s, shape)?)
}

/// Von Neumann entropy of either reduced state, in units of `log_base`.
pub fn entanglement_entropy(s: &PureState, shape: BipartiteShape, log_base: f64) -> Result<f64> {
    let sigma = schmidt_coefficients(s, shape)?;
    Ok(entropy_from_schmidt(&sigma, log_base))
}

/// `−Σ σ² log σ²` with `0·log 0 = 0`.
pub fn entropy_from_schmidt(sigma: &[f64], log_base: f64) -> f64 {
    let nats: f64 = sigma
        .iter()
        .filter(|&&s| s > SCHMIDT_FLOOR)
        .map(|&s| {
            let p = s * s;
            -p * p.ln()
        })
        .sum();
    // rounding can push a pure product state a hair below zero
    (nats / log_base.ln()).max(0.0)
}

pub fn apply_gate(u: &UnitaryGate, s: &PureState) -> Result<PureState> {
    if u.dim() != s.dim() {
        return Err(Error::ShapeMismatch(format!(
            "gate of dimension {} applied to state of dimension {}",
            u.dim(),
            s.dim()
        )));
    }
    Ok(PureState::from_raw(u.matrix().mul_vec(s.amplitudes())))
}
