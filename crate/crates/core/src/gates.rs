//! Gate constructors: generalized Pauli shift/clock, Fourier, the 12×12 U_H
//! sign matrix, and the square-root candidates.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{principal_sqrt_unitary, unitarity_deviation, ComplexMatrix, TOL_UNITARY};
use crate::states::BipartiteShape;

/// Branch convention recorded in the provenance of every square-root gate.
pub const SQRT_BRANCH: &str = "principal: eigenphase theta in (-pi, pi] -> theta/2; adjoint root = (sqrt U)^dagger";

/// Names accepted by [`builtin`].
pub const BUILTIN_NAMES: &[&str] = &[
    "UH", "X12", "Z12", "Y12", "F12", "X16", "Z16", "Y16", "F16", "SQRT_X12", "SQRT_Z12", "SQRT_F12",
    "SQRT_X16", "SQRT_Z16", "SQRT_F16", "UE1", "UE2", "UE3", "UE4",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateSource {
    Builtin,
    File,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub expression: String,
    pub sqrt_branch: Option<String>,
    pub source: GateSource,
}

#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryGate {
    matrix: ComplexMatrix,
    label: String,
    shape: Option<BipartiteShape>,
    provenance: Provenance,
}

impl UnitaryGate {
    /// Wraps a matrix, checking unitarity at [`TOL_UNITARY`] and the shape against the dimension.
    pub fn new(
        matrix: ComplexMatrix,
        label: impl Into<String>,
        shape: Option<BipartiteShape>,
        provenance: Provenance,
    ) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::NotSquare {
                rows: matrix.rows(),
                cols: matrix.cols(),
            });
        }
        let deviation = unitarity_deviation(&matrix);
        if deviation > TOL_UNITARY {
            return Err(Error::NotUnitary {
                deviation,
                tol: TOL_UNITARY,
            });
        }
        if let Some(s) = shape {
            if s.dim() != matrix.rows() {
                return Err(Error::ShapeMismatch(format!(
                    "shape {s} does not match gate dimension {}",
                    matrix.rows()
                )));
            }
        }
        Ok(Self {
            matrix,
            label: label.into(),
            shape,
            provenance,
        })
    }

    /// A builtin-sourced gate whose expression is its label.
    pub fn from_matrix(matrix: ComplexMatrix, label: &str, shape: Option<BipartiteShape>) -> Result<Self> {
        let provenance = Provenance {
            expression: label.to_string(),
            sqrt_branch: None,
            source: GateSource::Builtin,
        };
        Self::new(matrix, label, shape, provenance)
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn shape(&self) -> Option<BipartiteShape> {
        self.shape
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Explicit shape if given, otherwise the gate's own annotation.
    pub fn resolve_shape(&self, explicit: Option<BipartiteShape>) -> Result<BipartiteShape> {
        explicit.or(self.shape).ok_or(Error::ShapeUnknown(self.dim()))
    }

    pub fn adjoint(&self) -> Self {
        Self {
            matrix: self.matrix.adjoint(),
            label: format!("{}^dagger", self.label),
            shape: self.shape,
            provenance: Provenance {
                expression: format!("({})^dagger", self.provenance.expression),
                ..self.provenance.clone()
            },
        }
    }
}

/// The bipartite split used for a gate dimension when none is given.
pub fn default_shape(d: usize) -> Option<BipartiteShape> {
    match d {
        12 => Some(BipartiteShape { m: 3, n: 4 }),
        16 => Some(BipartiteShape { m: 4, n: 4 }),
        _ => None,
    }
}

fn root_of_unity(k: usize, d: usize) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * ((k % d) as f64) / d as f64)
}

fn builtin_gate(matrix: ComplexMatrix, label: String, d: usize) -> UnitaryGate {
    UnitaryGate::from_matrix(matrix, &label, default_shape(d)).expect("builtin constructor yields a unitary")
}

pub fn identity(d: usize) -> UnitaryGate {
    builtin_gate(ComplexMatrix::identity(d), format!("I{d}"), d)
}

/// `X_d|k⟩ = |k+1 mod d⟩`.
pub fn shift_x(d: usize) -> UnitaryGate {
    assert!(d >= 2, "shift needs d >= 2");
    let m = ComplexMatrix::from_fn(d, d, |r, c| {
        if r == (c + 1) % d {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    builtin_gate(m, format!("X{d}"), d)
}

/// `Z_d|k⟩ = e^{2πik/d}|k⟩`.
pub fn clock_z(d: usize) -> UnitaryGate {
    assert!(d >= 2, "clock needs d >= 2");
    let diag: Vec<Complex64> = (0..d).map(|k| root_of_unity(k, d)).collect();
    builtin_gate(ComplexMatrix::from_diagonal(&diag), format!("Z{d}"), d)
}

/// `Y_d = i X_d Z_d`.
pub fn pauli_y(d: usize) -> UnitaryGate {
    let xz = shift_x(d).matrix().matmul(clock_z(d).matrix());
    builtin_gate(xz.scale(Complex64::new(0.0, 1.0)), format!("Y{d}"), d)
}

/// `F_d(m, n) = e^{2πimn/d}/√d`.
pub fn fourier(d: usize) -> UnitaryGate {
    assert!(d >= 2, "Fourier needs d >= 2");
    let norm = 1.0 / (d as f64).sqrt();
    let m = ComplexMatrix::from_fn(d, d, |r, c| root_of_unity(r * c, d) * norm);
    builtin_gate(m, format!("F{d}"), d)
}

/// Sign pattern of U_H, row by row; every entry is ±12^{-1/2}.
const UH_SIGNS: [&str; 12] = [
    "+-----------",
    "++-+---+++-+",
    "+++-+---+++-",
    "+-++-+---+++",
    "++-++-+---++",
    "+++-++-+---+",
    "++++-++-+---",
    "+-+++-++-+--",
    "+--+++-++-+-",
    "+---+++-++-+",
    "++---+++-++-",
    "+-+---+++-++",
];

/// The 12×12 U_H gate on C³⊗C⁴. Fails only if the embedded sign table is not unitary.
pub fn hadamard_uh() -> Result<UnitaryGate> {
    let amp = 1.0 / 12f64.sqrt();
    let rows: Vec<&[u8]> = UH_SIGNS.iter().map(|r| r.as_bytes()).collect();
    let m = ComplexMatrix::from_fn(12, 12, |r, c| {
        let sign = if rows[r][c] == b'+' { 1.0 } else { -1.0 };
        Complex64::new(sign * amp, 0.0)
    });
    let deviation = unitarity_deviation(&m);
    if deviation > TOL_UNITARY {
        return Err(Error::TranscriptionError { deviation });
    }
    UnitaryGate::from_matrix(m, "UH", default_shape(12))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Candidate {
    UE1,
    UE2,
    UE3,
    UE4,
}

impl Candidate {
    pub const ALL: [Candidate; 4] = [Candidate::UE1, Candidate::UE2, Candidate::UE3, Candidate::UE4];

    pub fn dim(self) -> usize {
        match self {
            Candidate::UE1 | Candidate::UE3 => 12,
            Candidate::UE2 | Candidate::UE4 => 16,
        }
    }
}

/// Universal-entangler candidates: `√Y_d` (UE1, UE2) and `(√X_d)†·F_d·√X_d` (UE3, UE4).
pub fn candidate(name: Candidate) -> Result<UnitaryGate> {
    let d = name.dim();
    let (matrix, expression) = match name {
        Candidate::UE1 | Candidate::UE2 => (
            principal_sqrt_unitary(pauli_y(d).matrix())?,
            format!("sqrt(Y{d})"),
        ),
        Candidate::UE3 | Candidate::UE4 => {
            let root = principal_sqrt_unitary(shift_x(d).matrix())?;
            let m = root.adjoint().matmul(fourier(d).matrix()).matmul(&root);
            (m, format!("sqrt(X{d})^dagger * F{d} * sqrt(X{d})"))
        }
    };
    let provenance = Provenance {
        expression,
        sqrt_branch: Some(SQRT_BRANCH.to_string()),
        source: GateSource::Builtin,
    };
    UnitaryGate::new(matrix, format!("{name:?}"), default_shape(d), provenance)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SqrtBase {
    X,
    Z,
    F,
}

/// Principal square root of `X_d`, `Z_d` or `F_d`.
pub fn sqrt_gate(base: SqrtBase, d: usize, shape: Option<BipartiteShape>) -> Result<UnitaryGate> {
    let shape = shape.or_else(|| default_shape(d)).ok_or(Error::ShapeUnknown(d))?;
    let gate = match base {
        SqrtBase::X => shift_x(d),
        SqrtBase::Z => clock_z(d),
        SqrtBase::F => fourier(d),
    };
    let provenance = Provenance {
        expression: format!("sqrt({})", gate.label()),
        sqrt_branch: Some(SQRT_BRANCH.to_string()),
        source: GateSource::Builtin,
    };
    let root = principal_sqrt_unitary(gate.matrix())?;
    UnitaryGate::new(root, format!("SQRT_{base:?}{d}"), Some(shape), provenance)
}

/// Looks up one of [`BUILTIN_NAMES`] (case-insensitive).
pub fn builtin(name: &str) -> Result<UnitaryGate> {
    let upper = name.to_ascii_uppercase();
    let gate = match upper.as_str() {
        "UH" => hadamard_uh()?,
        "UE1" => candidate(Candidate::UE1)?,
        "UE2" => candidate(Candidate::UE2)?,
        "UE3" => candidate(Candidate::UE3)?,
        "UE4" => candidate(Candidate::UE4)?,
        other => {
            let (body, is_sqrt) = match other.strip_prefix("SQRT_") {
                Some(rest) => (rest, true),
                None => (other, false),
            };
            let mut chars = body.chars();
            let kind = chars.next().ok_or_else(|| Error::UnknownGate(name.to_string()))?;
            let d: usize = chars
                .as_str()
                .parse()
                .ok()
                .filter(|d| *d == 12 || *d == 16)
                .ok_or_else(|| Error::UnknownGate(name.to_string()))?;
            match (kind, is_sqrt) {
                ('X', false) => shift_x(d),
                ('Z', false) => clock_z(d),
                ('Y', false) => pauli_y(d),
                ('F', false) => fourier(d),
                ('X', true) => sqrt_gate(SqrtBase::X, d, None)?,
                ('Z', true) => sqrt_gate(SqrtBase::Z, d, None)?,
                ('F', true) => sqrt_gate(SqrtBase::F, d, None)?,
                _ => return Err(Error::UnknownGate(name.to_string())),
            }
        }
    };
    Ok(gate)
}
