use super::{Tape, Var};
use crate::error::{Error, Result};
use crate::tensor::DenseTensor;

/// Outcome of [`grad_check`].
#[derive(Clone, Debug)]
pub struct GradCheckReport {
    /// Largest `|analytic - numeric| / max(1, |analytic|)` per leaf.
    pub max_rel_error: Vec<f64>,
    pub tol: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.max_rel_error.iter().all(|&e| e <= self.tol)
    }

    pub fn worst(&self) -> f64 {
        self.max_rel_error.iter().fold(0.0f64, |m, &e| m.max(e))
    }
}

fn evaluate<F>(builder: &F, leaves: &[DenseTensor]) -> Result<f64>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    let mut tape = Tape::new();
    let vars: Vec<Var> = leaves.iter().map(|l| tape.leaf(l.clone())).collect();
    let out = builder(&mut tape, &vars)?;
    Ok(tape.value(out).as_slice()[0])
}

/// Compares reverse-mode gradients of the scalar graph produced by `builder`
/// against central differences with step `h`.
///
/// A tolerance miss is reported through [`GradCheckReport::passed`], not as an
/// error.
pub fn grad_check<F>(builder: F, leaves: &[DenseTensor], h: f64, tol: f64) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    if h <= 0.0 {
        return Err(Error::Contract(format!("finite-difference step must be positive, got {h}")));
    }
    if leaves.is_empty() {
        return Ok(GradCheckReport { max_rel_error: vec![], tol });
    }
    let mut tape = Tape::new();
    let vars: Vec<Var> = leaves.iter().map(|l| tape.leaf(l.clone())).collect();
    let loss = builder(&mut tape, &vars)?;
    let grads = tape.backward(loss)?;

    let mut probe = leaves.to_vec();
    let mut max_rel_error = Vec::with_capacity(leaves.len());
    for (li, &var) in vars.iter().enumerate() {
        let analytic = grads.grad(var);
        let mut worst = 0.0f64;
        for e in 0..leaves[li].len() {
            let orig = leaves[li].as_slice()[e];
            probe[li].as_mut_slice()[e] = orig + h;
            let plus = evaluate(&builder, &probe)?;
            probe[li].as_mut_slice()[e] = orig - h;
            let minus = evaluate(&builder, &probe)?;
            probe[li].as_mut_slice()[e] = orig;
            let numeric = (plus - minus) / (2.0 * h);
            let a = analytic.as_slice()[e];
            worst = worst.max((a - numeric).abs() / a.abs().max(1.0));
        }
        max_rel_error.push(worst);
    }
    Ok(GradCheckReport { max_rel_error, tol })
}
