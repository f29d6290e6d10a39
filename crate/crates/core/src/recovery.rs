//! Unsupervised recovery: fit `X = f(g(Z))` to the observed entries with Adam.

use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::autodiff::Tape;
use crate::data::ensure_binary;
use crate::error::{dim_err, Error, Result};
use crate::metrics::{self, Aggregation, MetricsReport};
use crate::nets::{
    init_noise, Activation, FaceWiseFactorConfig, FacewiseDomain, FacewiseGenerator, Fcn, FcnConfig, Identity,
    InverseDft, ParameterStore, Representation, UNet, UNetConfig,
};
use crate::optim::{AdamConfig, AdamState};
use crate::tensor::{DenseTensor, Shape};

/// Representation family and its architecture block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum VariantConfig {
    /// U-Net generator on noise, FCN transform.
    Dtr {
        #[serde(default)]
        unet: UNetConfig,
        #[serde(default)]
        fcn: FcnConfig,
    },
    /// Two-factor face-wise generator of inner rank `rank` over `n̂3` slices,
    /// FCN transform.
    HlrtfLike {
        rank: usize,
        #[serde(default)]
        fcn: FcnConfig,
    },
    /// Two complex Fourier-side factors of inner rank `rank` followed by the
    /// inverse DFT.
    TubalFactorization { rank: usize },
    /// Face-wise generator with inner ranks `ranks` (`L = ranks.len() + 1`),
    /// identity transform.
    DeepFacewise {
        ranks: Vec<usize>,
        #[serde(default)]
        activation: Activation,
    },
}

impl VariantConfig {
    pub fn name(&self) -> &'static str {
        match self {
            VariantConfig::Dtr { .. } => "dtr",
            VariantConfig::HlrtfLike { .. } => "hlrtf_like",
            VariantConfig::TubalFactorization { .. } => "tubal_factorization",
            VariantConfig::DeepFacewise { .. } => "deep_facewise",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveryConfig {
    #[serde(flatten)]
    pub variant: VariantConfig,
    pub iterations: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Latent slice count `n̂3` for the variants with a transform network;
    /// `None` means `n3`.
    #[serde(default)]
    pub latent_slices: Option<usize>,
    /// Log the loss every this many iterations (the first and last are
    /// always logged).
    pub log_every: usize,
}

impl RecoveryConfig {
    pub fn new(variant: VariantConfig) -> Self {
        RecoveryConfig { variant, iterations: 2000, learning_rate: 1e-3, seed: 0, latent_slices: None, log_every: 10 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 || self.log_every == 0 {
            return Err(Error::Config("iterations and log_every must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        if self.latent_slices == Some(0) {
            return Err(Error::Config("latent slice count must be positive".into()));
        }
        match &self.variant {
            VariantConfig::HlrtfLike { rank: 0, .. } | VariantConfig::TubalFactorization { rank: 0 } => {
                Err(Error::Config("factor rank must be positive".into()))
            }
            VariantConfig::DeepFacewise { ranks, .. } if ranks.is_empty() || ranks.contains(&0) => {
                Err(Error::Config(format!("deep face-wise needs positive inner ranks, got {ranks:?}")))
            }
            _ => Ok(()),
        }
    }
}

/// A representation with its freshly initialized parameters.
pub struct Assembled {
    pub representation: Representation,
    pub store: ParameterStore,
}

/// Builds `(Z, g, f)` for `shape = n1 x n2 x n3` and initializes parameters
/// from `cfg.seed`.
pub fn assemble_variant(cfg: &RecoveryConfig, shape: Shape) -> Result<Assembled> {
    cfg.validate()?;
    shape.validate()?;
    let mut store = ParameterStore::new(cfg.seed);
    let latent = cfg.latent_slices.unwrap_or(shape.n3);
    let facewise =
        |ranks: Vec<usize>, slices, activation, domain| FaceWiseFactorConfig { ranks, slices, activation, domain };
    let representation = match &cfg.variant {
        VariantConfig::Dtr { unet, fcn } => {
            let g = UNet::build(*unet, latent, &mut store)?;
            let f = Fcn::build(fcn, latent, shape.n3, &mut store)?;
            Representation::new(init_noise((shape.n1, shape.n2, latent), cfg.seed), Box::new(g), Box::new(f))?
        }
        VariantConfig::HlrtfLike { rank, fcn } => {
            let ranks = FaceWiseFactorConfig::chain(shape.n1, shape.n2, &[*rank]);
            let g = FacewiseGenerator::build(
                facewise(ranks, latent, Activation::Identity, FacewiseDomain::Real),
                &mut store,
            )?;
            let f = Fcn::build(fcn, latent, shape.n3, &mut store)?;
            Representation::new(g.identity_input(), Box::new(g), Box::new(f))?
        }
        VariantConfig::TubalFactorization { rank } => {
            let ranks = FaceWiseFactorConfig::chain(shape.n1, shape.n2, &[*rank]);
            let g = FacewiseGenerator::build(
                facewise(ranks, shape.n3, Activation::Identity, FacewiseDomain::Fourier),
                &mut store,
            )?;
            Representation::new(g.identity_input(), Box::new(g), Box::new(InverseDft::new(shape.n3)))?
        }
        VariantConfig::DeepFacewise { ranks, activation } => {
            let chain = FaceWiseFactorConfig::chain(shape.n1, shape.n2, ranks);
            let g = FacewiseGenerator::build(facewise(chain, shape.n3, *activation, FacewiseDomain::Real), &mut store)?;
            Representation::new(g.identity_input(), Box::new(g), Box::new(Identity))?
        }
    };
    if representation.output_shape() != shape {
        return dim_err(format!("assembled representation yields {}, expected {shape}", representation.output_shape()));
    }
    Ok(Assembled { representation, store })
}

/// Outcome of one optimization step.
#[derive(Clone, Debug)]
pub struct StepReport {
    /// Loss before the update.
    pub loss: f64,
    /// Gradient of the loss with respect to `X` before the update.
    pub x_grad: DenseTensor,
}

/// An optimization in progress.
pub struct Session<'a> {
    assembled: Assembled,
    adam: AdamState,
    observed: &'a DenseTensor,
    mask: &'a DenseTensor,
    steps: usize,
}

fn check_inputs(o: &DenseTensor, m: &DenseTensor) -> Result<()> {
    if o.shape() != m.shape() {
        return dim_err(format!("observation {} vs mask {}", o.shape(), m.shape()));
    }
    ensure_binary(m)?;
    if let Some(i) = o.as_slice().iter().zip(m.as_slice()).position(|(&v, &w)| w == 1.0 && !(0.0..=1.0).contains(&v)) {
        return Err(Error::Contract(format!("observed entry {i} is {} (expected values in [0, 1])", o.as_slice()[i])));
    }
    Ok(())
}

impl<'a> Session<'a> {
    pub fn new(o: &'a DenseTensor, m: &'a DenseTensor, cfg: &RecoveryConfig) -> Result<Self> {
        check_inputs(o, m)?;
        let assembled = assemble_variant(cfg, o.shape())?;
        let adam = AdamState::new(AdamConfig::with_learning_rate(cfg.learning_rate), assembled.store.values());
        Ok(Session { assembled, adam, observed: o, mask: m, steps: 0 })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn store(&self) -> &ParameterStore {
        &self.assembled.store
    }

    /// Current `X`.
    pub fn current(&self) -> Result<DenseTensor> {
        self.assembled.representation.evaluate(&self.assembled.store)
    }

    /// One Adam step on `||m ⊙ (X - o)||_F^2`.
    pub fn step(&mut self) -> Result<StepReport> {
        let mut tape = Tape::new();
        let bound = self.assembled.store.bind(&mut tape);
        let x = self.assembled.representation.forward(&mut tape, &bound)?;
        let loss_var = tape.masked_sq_error(x, self.observed, self.mask)?;
        let loss = tape.value(loss_var).as_slice()[0];
        if !loss.is_finite() {
            return Err(Error::Numerical(format!("loss became {loss} at iteration {}", self.steps + 1)));
        }
        let mut grads = tape.backward(loss_var)?;
        let param_grads: Vec<DenseTensor> = bound.vars().iter().map(|&v| grads.take(v)).collect();
        let x_grad = grads.take(x);
        self.adam.step(self.assembled.store.values_mut(), &param_grads)?;
        self.steps += 1;
        Ok(StepReport { loss, x_grad })
    }
}

#[derive(Clone, Debug)]
pub struct RecoveryResult {
    pub x: DenseTensor,
    /// `(iteration, loss)` with 1-based iterations; the loss is the one
    /// evaluated at the start of that iteration.
    pub losses: Vec<(usize, f64)>,
    pub seconds: f64,
    pub metrics: Option<MetricsReport>,
}

/// Runs `cfg.iterations` Adam steps and returns the final `X`.
pub fn recover(o: &DenseTensor, m: &DenseTensor, cfg: &RecoveryConfig) -> Result<RecoveryResult> {
    let start = Instant::now();
    let mut session = Session::new(o, m, cfg)?;
    let mut losses = Vec::new();
    for it in 1..=cfg.iterations {
        let report = session.step()?;
        if it == 1 || it % cfg.log_every == 0 || it == cfg.iterations {
            losses.push((it, report.loss));
        }
    }
    let x = session.current()?;
    if !x.is_finite() {
        return Err(Error::Numerical("recovered tensor is not finite".into()));
    }
    Ok(RecoveryResult { x, losses, seconds: start.elapsed().as_secs_f64(), metrics: None })
}

/// [`recover`] followed by PSNR/SSIM against `truth`.
pub fn recover_and_score(
    o: &DenseTensor,
    m: &DenseTensor,
    cfg: &RecoveryConfig,
    truth: &DenseTensor,
    aggregation: Aggregation,
) -> Result<RecoveryResult> {
    let mut result = recover(o, m, cfg)?;
    result.metrics = Some(metrics::evaluate(&result.x, truth, aggregation)?);
    Ok(result)
}

/// Writes `iteration,loss` rows.
pub fn write_loss_csv(losses: &[(usize, f64)], mut w: impl Write) -> Result<()> {
    writeln!(w, "iteration,loss")?;
    for (it, loss) in losses {
        writeln!(w, "{it},{loss}")?;
    }
    Ok(())
}
