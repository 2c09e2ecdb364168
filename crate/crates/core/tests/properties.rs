mod common;

use std::f64::consts::{E, LN_2};

use common::{random_global, random_product, shape};
use proptest::prelude::*;
use qudit_entangler::gates::{builtin, BUILTIN_NAMES};
use qudit_entangler::linalg::{kron, ComplexMatrix};
use qudit_entangler::report::{gate_from_str, gate_to_string};
use qudit_entangler::sampling::{haar_unitary, StreamKey};
use qudit_entangler::states::{apply_gate, entanglement_entropy};
use qudit_entangler::UnitaryGate;

fn unitary(d: usize, seed: u64) -> ComplexMatrix {
    haar_unitary(d, StreamKey::new(seed, d as u64)).matrix().clone()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kron_mixed_product(seed in any::<u64>()) {
        let (a, b) = (unitary(3, seed), unitary(4, seed ^ 1));
        let (cm, dm) = (unitary(3, seed ^ 2), unitary(4, seed ^ 3));
        let lhs = kron(&a, &b).matmul(&kron(&cm, &dm));
        let rhs = kron(&a.matmul(&cm), &b.matmul(&dm));
        prop_assert!(lhs.distance(&rhs) < 1e-12);
    }

    #[test]
    fn local_unitaries_preserve_entropy(seed in any::<u64>(), index in 0u64..1000) {
        let sh = shape(3, 4);
        let s = random_global(12, seed, index);
        let local = UnitaryGate::from_matrix(kron(&unitary(3, seed), &unitary(4, seed ^ 7)), "local", Some(sh)).unwrap();
        let before = entanglement_entropy(&s, sh, E).unwrap();
        let after = entanglement_entropy(&apply_gate(&local, &s).unwrap(), sh, E).unwrap();
        prop_assert!((before - after).abs() < 1e-10);
    }

    #[test]
    fn global_phase_changes_nothing(seed in any::<u64>(), phi in -10.0f64..10.0) {
        let sh = shape(4, 4);
        let s = random_global(16, seed, 0);
        let t = s.with_global_phase(phi);
        let d = (entanglement_entropy(&s, sh, E).unwrap() - entanglement_entropy(&t, sh, E).unwrap()).abs();
        prop_assert!(d < 1e-12);
    }

    #[test]
    fn bits_are_nats_over_ln2(seed in any::<u64>()) {
        let sh = shape(3, 4);
        let s = random_global(12, seed, 1);
        let nats = entanglement_entropy(&s, sh, E).unwrap();
        let bits = entanglement_entropy(&s, sh, 2.0).unwrap();
        prop_assert!((bits - nats / LN_2).abs() < 1e-12);
        prop_assert!(nats <= 3f64.ln() + 1e-12);
    }

    #[test]
    fn product_inputs_to_identity_stay_product(seed in any::<u64>()) {
        let sh = shape(4, 4);
        let s = random_product(sh, seed, 2);
        prop_assert!(entanglement_entropy(&s, sh, E).unwrap() < 1e-10);
    }

    #[test]
    fn gate_file_round_trip(index in 0usize..BUILTIN_NAMES.len()) {
        let g = builtin(BUILTIN_NAMES[index]).unwrap();
        let sh = g.shape().unwrap();
        let text = gate_to_string(&g, sh).unwrap();
        let back = gate_from_str(&text).unwrap();
        prop_assert_eq!(back.matrix(), g.matrix());
        prop_assert_eq!(gate_to_string(&back, sh).unwrap(), text);
    }

    #[test]
    fn haar_gate_file_round_trip(seed in any::<u64>()) {
        let g = haar_unitary(12, StreamKey::new(seed, 0));
        let text = gate_to_string(&g, shape(3, 4)).unwrap();
        let back = gate_from_str(&text).unwrap();
        for (x, y) in back.matrix().as_slice().iter().zip(g.matrix().as_slice()) {
            prop_assert_eq!(x.re.to_bits(), y.re.to_bits());
            prop_assert_eq!(x.im.to_bits(), y.im.to_bits());
        }
    }
}
