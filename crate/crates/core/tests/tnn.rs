use dtr_core::data::{gen_random_mask, synth_low_tubal_rank};
use dtr_core::tensor::{slice_svd, ComplexTensor};
use dtr_core::tnn::{svt_slices, tensor_nuclear_norm, tnn_admm_complete, AdmmParams};
use dtr_core::DenseTensor;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random(shape: (usize, usize, usize), seed: u64) -> DenseTensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DenseTensor::from_fn(shape, |_, _, _| rng.random_range(-1.0..1.0))
}

fn complex_distance(a: &ComplexTensor, b: &ComplexTensor) -> f64 {
    a.sub(b).unwrap().frobenius_norm()
}

fn instance(seed: u64) -> (DenseTensor, DenseTensor, DenseTensor) {
    let x = synth_low_tubal_rank((20, 20, 5), 2, seed).unwrap();
    let m = gen_random_mask((20, 20, 5), 0.5, seed).unwrap();
    let o = x.zip_map(&m, |a, b| a * b).unwrap();
    (x, m, o)
}

#[test]
fn zero_threshold_is_identity() {
    let c = random((5, 4, 3), 1).to_complex();
    let out = svt_slices(&c, 0.0).unwrap();
    assert!(complex_distance(&out, &c) <= 1e-9);
}

#[test]
fn diagonal_slice_is_shrunk() {
    let c = DenseTensor::from_fn((2, 2, 1), |i, j, _| match (i, j) {
        (0, 0) => 3.0,
        (1, 1) => 1.0,
        _ => 0.0,
    })
    .to_complex();
    let out = svt_slices(&c, 2.0).unwrap();
    let want = DenseTensor::from_fn((2, 2, 1), |i, j, _| if (i, j) == (0, 0) { 1.0 } else { 0.0 }).to_complex();
    assert!(complex_distance(&out, &want) <= 1e-12);
}

#[test]
fn singular_values_are_soft_thresholded() {
    for seed in 0..5 {
        let c = random((4, 4, 1), seed).to_complex();
        let tau = 0.4;
        let before = &slice_svd(&c).unwrap()[0].sigma;
        let after = &slice_svd(&svt_slices(&c, tau).unwrap()).unwrap()[0].sigma;
        for (s, t) in before.iter().zip(after) {
            assert!((t - (s - tau).max(0.0)).abs() <= 1e-10, "{s} -> {t}");
        }
    }
}

proptest! {
    #[test]
    fn svt_is_non_expansive(seed in 0u64..10_000, tau in 0.0f64..2.0, n1 in 1usize..6, n2 in 1usize..6, n3 in 1usize..5) {
        let a = random((n1, n2, n3), seed).to_complex();
        let b = random((n1, n2, n3), seed + 1).to_complex();
        let lhs = complex_distance(&svt_slices(&a, tau).unwrap(), &svt_slices(&b, tau).unwrap());
        prop_assert!(lhs <= complex_distance(&a, &b) * (1.0 + 1e-12) + 1e-12);
    }
}

#[test]
fn full_mask_returns_the_observation() {
    let o = random((6, 5, 3), 2).map(f64::abs);
    let m = DenseTensor::filled((6, 5, 3), 1.0);
    let out = tnn_admm_complete(&o, &m, &AdmmParams::default()).unwrap();
    assert_eq!(out.x, o);
}

#[test]
fn zero_observation_returns_zero() {
    let m = gen_random_mask((8, 8, 4), 0.5, 3).unwrap();
    let out = tnn_admm_complete(&DenseTensor::zeros((8, 8, 4)), &m, &AdmmParams::default()).unwrap();
    assert_eq!(out.x, DenseTensor::zeros((8, 8, 4)));
}

#[test]
fn observed_entries_are_kept_bitwise() {
    let (_, m, o) = instance(4);
    let params = AdmmParams { max_iter: 25, ..AdmmParams::default() };
    let out = tnn_admm_complete(&o, &m, &params).unwrap();
    assert!(!out.converged);
    assert_eq!(out.iterations, 25);
    for ((x, ob), w) in out.x.as_slice().iter().zip(o.as_slice()).zip(m.as_slice()) {
        if *w == 1.0 {
            assert_eq!(x.to_bits(), ob.to_bits());
        }
    }
}

#[test]
fn low_tubal_rank_is_recovered_from_half_the_entries() {
    for seed in 0..3 {
        let (x, m, o) = instance(seed);
        let out = tnn_admm_complete(&o, &m, &AdmmParams::default()).unwrap();
        assert!(out.converged);
        assert!(out.iterations <= 500);
        assert!(out.x.relative_error(&x).unwrap() <= 1e-2);
        let final_tnn = *out.tnn_history.last().unwrap();
        assert!((final_tnn - tensor_nuclear_norm(&out.x).unwrap()).abs() <= 1e-3 * final_tnn);
    }
}

#[test]
fn tnn_of_the_svt_iterate_does_not_increase_early() {
    for seed in 0..3 {
        let (_, m, o) = instance(seed);
        let out = tnn_admm_complete(&o, &m, &AdmmParams::default()).unwrap();
        let h = &out.tnn_history[..10];
        for w in h.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "seed {seed}: TNN rose from {} to {} in {h:?}", w[0], w[1]);
        }
    }
}

#[test]
fn rejects_mismatched_and_non_binary_inputs() {
    let o = DenseTensor::zeros((4, 4, 2));
    assert!(tnn_admm_complete(&o, &DenseTensor::filled((4, 4, 3), 1.0), &AdmmParams::default()).is_err());
    assert!(tnn_admm_complete(&o, &DenseTensor::filled((4, 4, 2), 0.5), &AdmmParams::default()).is_err());
    assert!(svt_slices(&o.to_complex(), -1.0).is_err());
}
