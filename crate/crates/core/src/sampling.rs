//! Seeded Haar sampling of states and unitaries.
//!
//! Every draw is keyed by a [`StreamKey`]. The key seeds a ChaCha8 generator
//! and selects its stream, so distinct stream indices never share state and
//! any sample can be regenerated without replaying earlier ones.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::gates::UnitaryGate;
use crate::linalg::ComplexMatrix;
use crate::states::{vec_norm, BipartiteShape, ProductState, PureState};

/// Generator identity recorded alongside results.
pub const GENERATOR: &str = "chacha8-stream/box-muller/v1";

const UNDERFLOW_NORM: f64 = 1e-150;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StreamKey {
    pub master_seed: u64,
    pub stream_index: u64,
}

impl StreamKey {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        Self {
            master_seed,
            stream_index,
        }
    }

    /// A child key; children of distinct parents are distinct.
    pub fn child(&self, index: u64) -> Self {
        Self {
            master_seed: splitmix64(self.master_seed ^ splitmix64(self.stream_index.wrapping_add(0x5851_f42d_4c95_7f2d))),
            stream_index: index,
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_index);
        rng
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Standard complex Gaussian (unit total variance) by Box–Muller.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    // u1 in (0, 1] so the log is finite
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen::<f64>();
    let r = (-u1.ln()).sqrt();
    Complex64::from_polar(r, 2.0 * PI * u2)
}

fn gaussian_vector<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Vec<Complex64> {
    (0..d).map(|_| complex_gaussian(rng)).collect()
}

/// Haar-random pure state of dimension `d`.
pub fn haar_state(d: usize, key: StreamKey) -> PureState {
    assert!(d >= 1);
    let mut rng = key.rng();
    loop {
        let v = gaussian_vector(&mut rng, d);
        let norm = vec_norm(&v);
        if norm > UNDERFLOW_NORM {
            return PureState::normalized(v).expect("norm is positive");
        }
    }
}

/// Independent Haar factors on each subsystem.
pub fn random_product_state(shape: BipartiteShape, key: StreamKey) -> ProductState {
    ProductState::new(haar_state(shape.m, key.child(0)), haar_state(shape.n, key.child(1)))
}

/// Haar-random unitary: Gram–Schmidt on a complex Ginibre matrix, which yields
/// the QR factor with a positive real triangular diagonal.
pub fn haar_unitary(d: usize, key: StreamKey) -> UnitaryGate {
    assert!(d >= 1);
    let mut rng = key.rng();
    loop {
        let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(d);
        let mut degenerate = false;
        for _ in 0..d {
            let mut v = gaussian_vector(&mut rng, d);
            // two passes of modified Gram–Schmidt
            for _ in 0..2 {
                for q in &cols {
                    let proj: Complex64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                    for (x, qa) in v.iter_mut().zip(q) {
                        *x -= proj * qa;
                    }
                }
            }
            let norm = vec_norm(&v);
            if norm <= 1e-8 {
                degenerate = true;
                break;
            }
            v.iter_mut().for_each(|x| *x /= norm);
            cols.push(v);
        }
        if degenerate {
            continue;
        }
        let m = ComplexMatrix::from_fn(d, d, |i, j| cols[j][i]);
        let label = format!("haar{d}[{}:{}]", key.master_seed, key.stream_index);
        return UnitaryGate::from_matrix(m, &label, crate::gates::default_shape(d))
            .expect("Gram-Schmidt output is unitary");
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{is_unitary, TOL_UNITARY};
    use crate::separability::state_kron_residual;
    use crate::states::entanglement_entropy;

    #[test]
    fn haar_state_is_normalized_and_deterministic() {
        let k = StreamKey::new(7, 3);
        let s = haar_state(12, k);
        assert!((s.norm() - 1.0).abs() < 1e-12);
        assert_eq!(s, haar_state(12, k));
        assert_ne!(s, haar_state(12, StreamKey::new(7, 4)));
        assert_ne!(s, haar_state(12, StreamKey::new(8, 3)));
    }

    #[test]
    fn product_states() {
        let shape = BipartiteShape::new(3, 4).unwrap();
        let a = random_product_state(shape, StreamKey::new(1, 0));
        let b = random_product_state(shape, StreamKey::new(1, 1));
        assert_ne!(a, b);
        let flat = a.flatten();
        assert!(state_kron_residual(&flat, shape).unwrap().total < 1e-12);
        assert!(entanglement_entropy(&flat, shape, std::f64::consts::E).unwrap() < 1e-10);
    }

    #[test]
    fn child_keys_differ() {
        let k = StreamKey::new(5, 9);
        assert_ne!(k.child(0), k.child(1));
        assert_ne!(k.child(0), StreamKey::new(5, 10).child(0));
    }

    #[test]
    fn haar_unitary_is_unitary_and_deterministic() {
        for d in [1, 2, 4, 12, 16] {
            let u = haar_unitary(d, StreamKey::new(11, d as u64));
            assert!(is_unitary(u.matrix(), TOL_UNITARY), "d = {d}");
        }
        let k = StreamKey::new(3, 3);
        assert_eq!(haar_unitary(4, k).matrix(), haar_unitary(4, k).matrix());
    }
}
