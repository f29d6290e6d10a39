use dtr_core::nets::{
    dtr_forward, init_noise, Activation, FaceWiseFactorConfig, FacewiseDomain, FacewiseGenerator, Fcn, FcnConfig,
    Identity, InverseDft, Module, ParamGroup, ParameterStore, Representation, UNet, UNetConfig,
};
use dtr_core::tensor::{dft_mode3, t_product, ComplexTensor};
use dtr_core::{DenseTensor, Shape};
use proptest::prelude::*;

fn facewise(n1: usize, n2: usize, inner: &[usize], n3: usize, domain: FacewiseDomain) -> FaceWiseFactorConfig {
    FaceWiseFactorConfig {
        ranks: FaceWiseFactorConfig::chain(n1, n2, inner),
        slices: n3,
        activation: Activation::default(),
        domain,
    }
}

/// Spatial-domain factors recovered from packed Fourier-side parameters.
fn spatial(packed: &DenseTensor) -> DenseTensor {
    let c = ComplexTensor::from_packed(packed).unwrap();
    let (re, im) = dtr_core::tensor::idft_mode3(&c).split_real();
    assert!(im < 1e-12, "Fourier factor lost Hermitian symmetry: {im}");
    re
}

#[test]
fn fourier_factorization_with_inverse_dft_is_a_t_product() {
    for seed in 0..5 {
        let (n1, n2, n3, r) = (8, 8, 4, 3);
        let mut store = ParameterStore::new(seed);
        let g = FacewiseGenerator::build(facewise(n1, n2, &[r], n3, FacewiseDomain::Fourier), &mut store).unwrap();
        let x = dtr_forward(&g.identity_input(), &g, &InverseDft::new(n3), &store).unwrap();
        let b = spatial(store.get(g.weights()[0]));
        let a = spatial(store.get(g.weights()[1]));
        assert_eq!(a.shape(), Shape::new(n1, r, n3));
        assert_eq!(b.shape(), Shape::new(r, n2, n3));
        let oracle = t_product(&a, &b).unwrap();
        assert!(x.relative_error(&oracle).unwrap() <= 1e-8);
    }
}

#[test]
fn fourier_factorization_matches_the_dft_of_its_spatial_factors() {
    let mut store = ParameterStore::new(9);
    let g = FacewiseGenerator::build(facewise(5, 6, &[2], 3, FacewiseDomain::Fourier), &mut store).unwrap();
    let b = spatial(store.get(g.weights()[0]));
    assert!(dft_mode3(&b).to_packed().sub(store.get(g.weights()[0])).unwrap().max_abs() < 1e-12);
}

#[test]
fn facewise_slices_are_separable() {
    let (n1, n2, n3) = (6, 5, 4);
    let mut store = ParameterStore::new(3);
    let g = FacewiseGenerator::build(facewise(n1, n2, &[3, 4], n3, FacewiseDomain::Real), &mut store).unwrap();
    let z = g.identity_input();
    let base = dtr_forward(&z, &g, &Identity, &store).unwrap();
    for m in 0..3 {
        for j in 0..n3 {
            let mut perturbed = store.clone();
            let id = g.weights()[m];
            for v in perturbed.get_mut(id).frontal_mut(j) {
                *v += 0.37;
            }
            let out = dtr_forward(&z, &g, &Identity, &perturbed).unwrap();
            for k in 0..n3 {
                if k != j {
                    assert_eq!(out.frontal(k), base.frontal(k), "W{} slice {j} leaked into slice {k}", m + 1);
                }
            }
            assert_ne!(out.frontal(j), base.frontal(j));
        }
    }
}

#[test]
fn unet_parameter_count_audit() {
    let (k, base, c) = (3usize, 32usize, 80usize);
    let conv = |c_in: usize, c_out: usize, k: usize| k * k * c_in * c_out + c_out;
    let expected = conv(c, base, k)
        + conv(base, 2 * base, k)
        + conv(2 * base + base, base, k)
        + conv(base + c, base, k)
        + conv(base, c, 1);
    assert_eq!(expected, 104_176);
    let mut store = ParameterStore::new(0);
    UNet::build(UNetConfig::default(), c, &mut store).unwrap();
    assert_eq!(store.scalar_count(ParamGroup::Generator), expected);
    assert_eq!(store.scalar_count(ParamGroup::Transform), 0);
}

#[test]
fn dtr_parameters_split_between_groups() {
    let mut store = ParameterStore::new(1);
    let g = UNet::build(UNetConfig { base_channels: 4, ..Default::default() }, 6, &mut store).unwrap();
    let f = Fcn::build(&FcnConfig::default(), 6, 5, &mut store).unwrap();
    assert_eq!(store.scalar_count(ParamGroup::Transform), (6 * 6 + 6) + (5 * 6 + 5));
    let rep = Representation::new(init_noise((8, 8, 6), 2), Box::new(g), Box::new(f)).unwrap();
    assert_eq!(rep.evaluate(&store).unwrap().shape(), Shape::new(8, 8, 5));
}

#[test]
fn padding_is_applied_for_indivisible_dims() {
    let mut store = ParameterStore::new(1);
    let g = UNet::build(UNetConfig { base_channels: 2, ..Default::default() }, 3, &mut store).unwrap();
    let rep = Representation::new(init_noise((7, 10, 3), 0), Box::new(g), Box::new(Identity)).unwrap();
    assert_eq!(rep.noise().shape(), Shape::new(8, 12, 3));
    assert_eq!(rep.evaluate(&store).unwrap().shape(), Shape::new(7, 10, 3));
}

#[test]
fn forward_is_deterministic_per_seed() {
    let build = |seed| {
        let mut store = ParameterStore::new(seed);
        let g = UNet::build(UNetConfig { base_channels: 4, ..Default::default() }, 4, &mut store).unwrap();
        let f = Fcn::build(&FcnConfig::default(), 4, 4, &mut store).unwrap();
        let rep = Representation::new(init_noise((8, 8, 4), seed), Box::new(g), Box::new(f)).unwrap();
        rep.evaluate(&store).unwrap()
    };
    assert_eq!(build(5), build(5));
    assert_ne!(build(5), build(6));
}

#[test]
fn identity_transform_returns_the_latent() {
    let mut store = ParameterStore::new(2);
    let g = FacewiseGenerator::build(facewise(4, 3, &[2, 2], 2, FacewiseDomain::Real), &mut store).unwrap();
    let z = g.identity_input();
    let rep = Representation::new(z.clone(), Box::new(Identity), Box::new(Identity)).unwrap();
    assert_eq!(rep.evaluate(&store).unwrap(), z);
    let mut tape = dtr_core::autodiff::Tape::new();
    let bound = store.bind(&mut tape);
    let zv = tape.constant(z.clone());
    let latent = g.forward(&mut tape, &bound, zv).unwrap();
    assert_eq!(&dtr_forward(&z, &g, &Identity, &store).unwrap(), tape.value(latent));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn unet_preserves_shape(depth in 1usize..=3, base in 1usize..=4, kernel in prop::sample::select(vec![1usize, 3, 5]),
                            c in 1usize..=4, a in 1usize..=2, b in 1usize..=2, seed in 0u64..100) {
        let mut store = ParameterStore::new(seed);
        let net = UNet::build(UNetConfig { depth, base_channels: base, kernel, activation: Activation::default() }, c, &mut store).unwrap();
        let m = 1 << depth;
        let shape = Shape::new(a * m, b * m, c);
        prop_assert_eq!(net.output_shape(shape).unwrap(), shape);
        let out = dtr_forward(&init_noise(shape, seed), &net, &Identity, &store).unwrap();
        prop_assert_eq!(out.shape(), shape);
    }

    #[test]
    fn fcn_maps_tube_width(layers in 1usize..=3, n1 in 1usize..=5, n2 in 1usize..=5, input in 1usize..=6, output in 1usize..=6) {
        let mut store = ParameterStore::new(0);
        let f = Fcn::build(&FcnConfig { layers, ..Default::default() }, input, output, &mut store).unwrap();
        let out = dtr_forward(&init_noise((n1, n2, input), 1), &Identity, &f, &store).unwrap();
        prop_assert_eq!(out.shape(), Shape::new(n1, n2, output));
    }

    #[test]
    fn facewise_output_is_n1_by_n2(n1 in 1usize..=6, n2 in 1usize..=6, inner in prop::collection::vec(1usize..=4, 1..=3),
                                   n3 in 1usize..=3, fourier in any::<bool>()) {
        let domain = if fourier { FacewiseDomain::Fourier } else { FacewiseDomain::Real };
        let mut store = ParameterStore::new(0);
        let g = FacewiseGenerator::build(facewise(n1, n2, &inner, n3, domain), &mut store).unwrap();
        let out = dtr_forward(&g.identity_input(), &g, &Identity, &store).unwrap();
        let depth = if fourier { 2 * n3 } else { n3 };
        prop_assert_eq!(out.shape(), Shape::new(n1, n2, depth));
        for (m, &id) in g.weights().iter().enumerate() {
            let r = &g.config().ranks;
            prop_assert_eq!(store.get(id).shape(), Shape::new(r[m + 1], r[m], depth));
        }
    }
}
