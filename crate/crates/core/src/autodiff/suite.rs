use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{grad_check, Conv2dSpec, Tape, Var};
use crate::error::Result;
use crate::tensor::{DenseTensor, Shape};

/// Result of checking one primitive on one random instance.
#[derive(Clone, Debug)]
pub struct PrimitiveCheck {
    pub primitive: &'static str,
    pub shape: Shape,
    pub worst: f64,
    pub passed: bool,
}

fn uniform(rng: &mut ChaCha8Rng, shape: impl Into<Shape>) -> DenseTensor {
    DenseTensor::from_fn(shape, |_, _, _| rng.random_range(-1.0..1.0))
}

/// Magnitudes in `[0.1, 1)` with random signs, clear of the leaky ReLU kink.
fn off_kink(rng: &mut ChaCha8Rng, shape: impl Into<Shape>) -> DenseTensor {
    DenseTensor::from_fn(shape, |_, _, _| {
        let v: f64 = rng.random_range(0.1..1.0);
        if rng.random_bool(0.5) {
            v
        } else {
            -v
        }
    })
}

/// Reduces an output to a scalar through a fixed random weighting and a
/// sigmoid so each output entry gets a distinct upstream gradient.
fn readout(tape: &mut Tape, y: Var, weights: &DenseTensor) -> Result<Var> {
    let w = tape.constant(weights.clone());
    let p = tape.hadamard(y, w)?;
    let s = tape.sigmoid(p);
    Ok(tape.reduce_sum_squares(s))
}

type Builder = Box<dyn Fn(&mut Tape, &[Var]) -> Result<Var>>;

/// Central-difference checks of every differentiable primitive on random
/// shapes up to `8 x 8 x 4`, `rounds` instances each.
pub fn primitive_suite(seed: u64, rounds: usize, h: f64, tol: f64) -> Result<Vec<PrimitiveCheck>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for _ in 0..rounds {
        let s = Shape::new(rng.random_range(1..=8), rng.random_range(1..=8), rng.random_range(1..=4));
        let a = uniform(&mut rng, s);
        let b = uniform(&mut rng, s);
        let extra = rng.random_range(1..=4);
        let c = uniform(&mut rng, (s.n1, s.n2, extra));

        let k = [1usize, 3, 5][rng.random_range(0..3)];
        let stride = rng.random_range(1..=2);
        let (n1, n2) = (rng.random_range(k..=8), rng.random_range(k..=8));
        let (c_in, c_out) = (rng.random_range(1..=4), rng.random_range(1..=4));
        let spec = Conv2dSpec::new(k, stride, k / 2);
        let conv_x = uniform(&mut rng, (n1, n2, c_in));
        let kernel = uniform(&mut rng, spec.kernel_shape(c_in, c_out));
        let conv_b = uniform(&mut rng, (1, 1, c_out));

        let tube_out = rng.random_range(1..=4);
        let lin_w = uniform(&mut rng, (tube_out, s.n3, 1));
        let lin_b = uniform(&mut rng, (1, 1, tube_out));

        let (m, inner, n) = (rng.random_range(1..=8), rng.random_range(1..=8), rng.random_range(1..=8));
        let fl = uniform(&mut rng, (m, inner, s.n3));
        let fr = uniform(&mut rng, (inner, n, s.n3));

        let start = rng.random_range(0..s.n3);
        let len = rng.random_range(1..=s.n3 - start);
        let (o1, o2) = (rng.random_range(0..s.n1), rng.random_range(0..s.n2));
        let (l1, l2) = (rng.random_range(1..=s.n1 - o1), rng.random_range(1..=s.n2 - o2));
        let mask = DenseTensor::from_fn(s, |_, _, _| if rng.random_bool(0.5) { 1.0 } else { 0.0 });
        let kinked = off_kink(&mut rng, s);

        // readout weights sized for each primitive's output
        let mut w = |shape: Shape| uniform(&mut rng, shape);
        let ws = w(s);
        let w_conv = w(Shape::new((n1 + 2 * (k / 2) - k) / stride + 1, (n2 + 2 * (k / 2) - k) / stride + 1, c_out));
        let w_up = w(Shape::new(2 * s.n1, 2 * s.n2, s.n3));
        let w_cat = w(Shape::new(s.n1, s.n2, s.n3 + extra));
        let w_slice = w(Shape::new(s.n1, s.n2, len));
        let w_crop = w(Shape::new(l1, l2, s.n3));
        let w_lin = w(Shape::new(s.n1, s.n2, tube_out));
        let w_face = w(Shape::new(m, n, s.n3));

        let cases: Vec<(&'static str, Shape, Vec<DenseTensor>, Builder)> = vec![
            ("add", s, vec![a.clone(), b.clone()], {
                let ws = ws.clone();
                Box::new(move |t, v| {
                    let y = t.add(v[0], v[1])?;
                    readout(t, y, &ws)
                })
            }),
            ("sub", s, vec![a.clone(), b.clone()], {
                let ws = ws.clone();
                Box::new(move |t, v| {
                    let y = t.sub(v[0], v[1])?;
                    readout(t, y, &ws)
                })
            }),
            ("scalar_mul", s, vec![a.clone()], {
                let ws = ws.clone();
                Box::new(move |t, v| {
                    let y = t.scalar_mul(v[0], -1.3);
                    readout(t, y, &ws)
                })
            }),
            ("hadamard", s, vec![a.clone(), b.clone()], {
                let ws = ws.clone();
                Box::new(move |t, v| {
                    let y = t.hadamard(v[0], v[1])?;
                    readout(t, y, &ws)
                })
            }),
            ("sigmoid", s, vec![a.clone()], {
                let ws = ws.clone();
                Box::new(move |t, v| {
                    let y = t.sigmoid(v[0]);
                    readout(t, y, &ws)
                })
            }),
            ("leaky_relu", s, vec![kinked], {
                let ws = ws.clone();
                Box::new(move |t, v| {
                    let y = t.leaky_relu(v[0], 0.2);
                    readout(t, y, &ws)
                })
            }),
            ("reduce_sum_squares", s, vec![a.clone()], Box::new(|t, v| Ok(t.reduce_sum_squares(v[0])))),
            ("conv2d", Shape::new(n1, n2, c_in), vec![conv_x, kernel, conv_b], {
                Box::new(move |t, v| {
                    let y = t.conv2d(v[0], v[1], Some(v[2]), spec)?;
                    readout(t, y, &w_conv)
                })
            }),
            ("upsample_nearest", s, vec![a.clone()], {
                Box::new(move |t, v| {
                    let y = t.upsample_nearest(v[0]);
                    readout(t, y, &w_up)
                })
            }),
            ("channel_concat", s, vec![a.clone(), c], {
                Box::new(move |t, v| {
                    let y = t.channel_concat(&[v[0], v[1]])?;
                    readout(t, y, &w_cat)
                })
            }),
            ("channel_slice", s, vec![a.clone()], {
                Box::new(move |t, v| {
                    let y = t.channel_slice(v[0], start, len)?;
                    readout(t, y, &w_slice)
                })
            }),
            ("crop", s, vec![a.clone()], {
                Box::new(move |t, v| {
                    let y = t.crop(v[0], o1, o2, l1, l2)?;
                    readout(t, y, &w_crop)
                })
            }),
            ("mode3_linear", s, vec![a.clone(), lin_w, lin_b], {
                Box::new(move |t, v| {
                    let y = t.mode3_linear(v[0], v[1], Some(v[2]))?;
                    readout(t, y, &w_lin)
                })
            }),
            ("facewise_matmul", Shape::new(m, n, s.n3), vec![fl, fr], {
                Box::new(move |t, v| {
                    let y = t.facewise_matmul(v[0], v[1])?;
                    readout(t, y, &w_face)
                })
            }),
            ("masked_sq_error", s, vec![a], {
                let obs = b;
                Box::new(move |t, v| t.masked_sq_error(v[0], &obs, &mask))
            }),
        ];
        for (primitive, shape, leaves, builder) in cases {
            let report = grad_check(builder, &leaves, h, tol)?;
            out.push(PrimitiveCheck { primitive, shape, worst: report.worst(), passed: report.passed() });
        }
    }
    Ok(out)
}
