#![allow(dead_code)]

use num_complex::Complex64;
use qudit_entangler::linalg::ComplexMatrix;
use qudit_entangler::sampling::{haar_state, random_product_state, StreamKey};
use qudit_entangler::{BipartiteShape, PureState};

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn shape(m: usize, n: usize) -> BipartiteShape {
    BipartiteShape::new(m, n).unwrap()
}

pub fn random_product(shape: BipartiteShape, seed: u64, i: u64) -> PureState {
    random_product_state(shape, StreamKey::new(seed, i)).flatten()
}

pub fn random_global(dim: usize, seed: u64, i: u64) -> PureState {
    haar_state(dim, StreamKey::new(seed, i))
}

pub fn projector(s: &PureState) -> ComplexMatrix {
    let a = s.amplitudes();
    ComplexMatrix::from_fn(a.len(), a.len(), |i, j| a[i] * a[j].conj())
}
