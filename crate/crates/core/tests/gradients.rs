use dtr_core::autodiff::{grad_check, Conv2dSpec, Tape, Var};
use dtr_core::{DenseTensor, Result, Shape};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const H: f64 = 1e-5;
const TOL: f64 = 1e-4;

fn random(rng: &mut ChaCha8Rng, shape: impl Into<Shape>) -> DenseTensor {
    DenseTensor::from_fn(shape, |_, _, _| rng.random_range(-1.0..1.0))
}

/// Keeps values away from the leaky ReLU kink so central differences stay smooth.
fn away_from_zero(rng: &mut ChaCha8Rng, shape: impl Into<Shape>) -> DenseTensor {
    DenseTensor::from_fn(shape, |_, _, _| {
        let v: f64 = rng.random_range(0.1..1.0);
        if rng.random_bool(0.5) {
            v
        } else {
            -v
        }
    })
}

fn dims(rng: &mut ChaCha8Rng) -> Shape {
    Shape::new(rng.random_range(1..=8), rng.random_range(1..=8), rng.random_range(1..=4))
}

/// Projects a tensor to a scalar through a fixed random weighting so every
/// output entry contributes a distinct gradient.
fn project(tape: &mut Tape, x: Var, seed: u64) -> Result<Var> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = tape.constant(random(&mut rng, tape.shape(x)));
    let p = tape.hadamard(x, w)?;
    let s = tape.sigmoid(p);
    Ok(tape.reduce_sum_squares(s))
}

fn check<F>(name: &str, leaves: &[DenseTensor], builder: F)
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    let report = grad_check(builder, leaves, H, TOL).unwrap();
    assert!(report.passed(), "{name}: worst relative error {}", report.worst());
}

#[test]
fn elementwise_primitives() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for trial in 0..5 {
        let s = dims(&mut rng);
        let a = random(&mut rng, s);
        let b = random(&mut rng, s);
        check("add", &[a.clone(), b.clone()], |t, v| {
            let y = t.add(v[0], v[1])?;
            project(t, y, trial)
        });
        check("sub", &[a.clone(), b.clone()], |t, v| {
            let y = t.sub(v[0], v[1])?;
            project(t, y, trial)
        });
        check("scalar_mul", std::slice::from_ref(&a), |t, v| {
            let y = t.scalar_mul(v[0], -1.7);
            project(t, y, trial)
        });
        check("hadamard", &[a.clone(), b.clone()], |t, v| {
            let y = t.hadamard(v[0], v[1])?;
            project(t, y, trial)
        });
        check("sigmoid", std::slice::from_ref(&a), |t, v| {
            let y = t.sigmoid(v[0]);
            project(t, y, trial)
        });
        check("reduce_sum_squares", std::slice::from_ref(&a), |t, v| Ok(t.reduce_sum_squares(v[0])));
        let c = away_from_zero(&mut rng, s);
        check("leaky_relu", &[c], |t, v| {
            let y = t.leaky_relu(v[0], 0.2);
            project(t, y, trial)
        });
    }
}

#[test]
fn conv2d_with_bias_and_stride() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for (k, stride) in [(3, 1), (3, 2), (1, 1), (5, 2)] {
        for _ in 0..2 {
            let (n1, n2) = (rng.random_range(k..=8), rng.random_range(k..=8));
            let (c_in, c_out) = (rng.random_range(1..=4), rng.random_range(1..=4));
            let spec = Conv2dSpec::new(k, stride, k / 2);
            let x = random(&mut rng, (n1, n2, c_in));
            let kernel = random(&mut rng, spec.kernel_shape(c_in, c_out));
            let bias = random(&mut rng, (1, 1, c_out));
            check("conv2d", &[x, kernel, bias], |t, v| {
                let y = t.conv2d(v[0], v[1], Some(v[2]), spec)?;
                project(t, y, 7)
            });
        }
    }
}

#[test]
fn resampling_and_channel_primitives() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..4 {
        let s = dims(&mut rng);
        let a = random(&mut rng, s);
        let extra = rng.random_range(1..=4);
        let b = random(&mut rng, (s.n1, s.n2, extra));
        check("upsample_nearest", std::slice::from_ref(&a), |t, v| {
            let y = t.upsample_nearest(v[0]);
            project(t, y, 1)
        });
        check("channel_concat", &[a.clone(), b.clone()], |t, v| {
            let y = t.channel_concat(&[v[0], v[1]])?;
            project(t, y, 2)
        });
        let start = rng.random_range(0..s.n3);
        let len = rng.random_range(1..=s.n3 - start);
        check("channel_slice", std::slice::from_ref(&a), |t, v| {
            let y = t.channel_slice(v[0], start, len)?;
            project(t, y, 3)
        });
        let (o1, o2) = (rng.random_range(0..s.n1), rng.random_range(0..s.n2));
        let (l1, l2) = (rng.random_range(1..=s.n1 - o1), rng.random_range(1..=s.n2 - o2));
        check("crop", std::slice::from_ref(&a), |t, v| {
            let y = t.crop(v[0], o1, o2, l1, l2)?;
            project(t, y, 4)
        });
    }
}

#[test]
fn tube_and_slice_products() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..5 {
        let s = dims(&mut rng);
        let c_out = rng.random_range(1..=4);
        let x = random(&mut rng, s);
        let w = random(&mut rng, (c_out, s.n3, 1));
        let b = random(&mut rng, (1, 1, c_out));
        check("mode3_linear", &[x.clone(), w.clone(), b], |t, v| {
            let y = t.mode3_linear(v[0], v[1], Some(v[2]))?;
            project(t, y, 5)
        });
        check("mode3_linear without bias", &[x, w], |t, v| {
            let y = t.mode3_linear(v[0], v[1], None)?;
            project(t, y, 6)
        });
        let (m, k, n, n3) =
            (rng.random_range(1..=8), rng.random_range(1..=8), rng.random_range(1..=8), rng.random_range(1..=4));
        let l = random(&mut rng, (m, k, n3));
        let r = random(&mut rng, (k, n, n3));
        check("facewise_matmul", &[l, r], |t, v| {
            let y = t.facewise_matmul(v[0], v[1])?;
            project(t, y, 8)
        });
    }
}

#[test]
fn masked_squared_error() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..5 {
        let s = dims(&mut rng);
        let x = random(&mut rng, s);
        let o = random(&mut rng, s);
        let m = DenseTensor::from_fn(s, |_, _, _| if rng.random_bool(0.5) { 1.0 } else { 0.0 });
        check("masked_sq_error", &[x], |t, v| t.masked_sq_error(v[0], &o, &m));
    }
}

#[test]
fn backward_is_linear_in_the_loss() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let x = random(&mut rng, (4, 3, 2));
    let w = random(&mut rng, (3, 2, 1));
    let grads_for = |scale: f64| {
        let mut t = Tape::new();
        let xv = t.leaf(x.clone());
        let wv = t.leaf(w.clone());
        let y = t.mode3_linear(xv, wv, None).unwrap();
        let s = t.reduce_sum_squares(y);
        let loss = t.scalar_mul(s, scale);
        let g = t.backward(loss).unwrap();
        (g.grad(xv), g.grad(wv))
    };
    let (gx, gw) = grads_for(1.0);
    for scale in [2.0, 0.25, -4.0] {
        let (sx, sw) = grads_for(scale);
        assert_eq!(sx, gx.scale(scale));
        assert_eq!(sw, gw.scale(scale));
    }
}

#[test]
fn backward_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let x = random(&mut rng, (6, 6, 2));
    let spec = Conv2dSpec::new(3, 2, 1);
    let k = random(&mut rng, spec.kernel_shape(2, 3));
    let run = || {
        let mut t = Tape::new();
        let xv = t.leaf(x.clone());
        let kv = t.leaf(k.clone());
        let y = t.conv2d(xv, kv, None, spec).unwrap();
        let u = t.upsample_nearest(y);
        let l = t.reduce_sum_squares(u);
        let g = t.backward(l).unwrap();
        (t.value(l).clone(), g.grad(xv), g.grad(kv))
    };
    assert_eq!(run(), run());
}
