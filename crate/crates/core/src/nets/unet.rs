use serde::{Deserialize, Serialize};

use super::{Activation, Bound, Module, ParamGroup, ParamId, ParameterStore};
use crate::autodiff::{Conv2dSpec, Tape, Var};
use crate::error::{dim_err, Error, Result};
use crate::tensor::Shape;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UNetConfig {
    /// Number of encoder/decoder scales.
    pub depth: usize,
    pub base_channels: usize,
    /// Odd spatial kernel size of the 3x3-style convolutions.
    pub kernel: usize,
    #[serde(default)]
    pub activation: Activation,
}

impl Default for UNetConfig {
    fn default() -> Self {
        UNetConfig { depth: 2, base_channels: 32, kernel: 3, activation: Activation::default() }
    }
}

struct ConvLayer {
    kernel: ParamId,
    bias: ParamId,
    spec: Conv2dSpec,
}

impl ConvLayer {
    fn new(store: &mut ParameterStore, name: &str, spec: Conv2dSpec, c_in: usize, c_out: usize) -> Result<Self> {
        let fan_in = spec.kernel * spec.kernel * c_in;
        let kernel = store.add_he_uniform(
            format!("{name}.kernel"),
            ParamGroup::Generator,
            spec.kernel_shape(c_in, c_out),
            fan_in,
        )?;
        let bias =
            store.add(format!("{name}.bias"), ParamGroup::Generator, crate::DenseTensor::zeros((1, 1, c_out)))?;
        Ok(ConvLayer { kernel, bias, spec })
    }

    fn forward(&self, tape: &mut Tape, p: &Bound, x: Var) -> Result<Var> {
        tape.conv2d(x, p.var(self.kernel), Some(p.var(self.bias)), self.spec)
    }
}

/// Encoder-decoder with channel-concatenated skip connections.
///
/// Scale `l` (1-based) of the encoder is a stride-2 convolution to
/// `base * 2^(l-1)` channels followed by the activation. The decoder mirrors
/// it: nearest-neighbour upsampling, concatenation with the encoder features
/// of the same resolution (the network input at the finest scale), a stride-1
/// convolution and the activation. A final 1x1 convolution maps `base`
/// channels back to the input channel count.
pub struct UNet {
    config: UNetConfig,
    channels: usize,
    encoder: Vec<ConvLayer>,
    decoder: Vec<ConvLayer>,
    head: ConvLayer,
}

impl UNet {
    /// Registers all parameters under the generator group.
    pub fn build(config: UNetConfig, channels: usize, store: &mut ParameterStore) -> Result<Self> {
        if config.depth == 0 || config.base_channels == 0 || channels == 0 {
            return Err(Error::Config("U-Net depth, width and channels must be positive".into()));
        }
        if config.kernel.is_multiple_of(2) {
            return Err(Error::Config(format!("U-Net kernel must be odd, got {}", config.kernel)));
        }
        let k = config.kernel;
        let width = |l: usize| if l == 0 { channels } else { config.base_channels << (l - 1) };
        let mut encoder = Vec::with_capacity(config.depth);
        for l in 1..=config.depth {
            let spec = Conv2dSpec::new(k, 2, k / 2);
            encoder.push(ConvLayer::new(store, &format!("unet.enc{l}"), spec, width(l - 1), width(l))?);
        }
        let mut decoder = Vec::with_capacity(config.depth);
        let mut below = width(config.depth);
        for l in (0..config.depth).rev() {
            let out = if l == 0 { config.base_channels } else { width(l) };
            let spec = Conv2dSpec::new(k, 1, k / 2);
            decoder.push(ConvLayer::new(store, &format!("unet.dec{l}"), spec, below + width(l), out)?);
            below = out;
        }
        let head = ConvLayer::new(store, "unet.head", Conv2dSpec::new(1, 1, 0), config.base_channels, channels)?;
        Ok(UNet { config, channels, encoder, decoder, head })
    }

    pub fn config(&self) -> &UNetConfig {
        &self.config
    }
}

impl Module for UNet {
    fn forward(&self, tape: &mut Tape, p: &Bound, input: Var) -> Result<Var> {
        self.output_shape(tape.shape(input))?;
        let act = self.config.activation;
        let mut skips = vec![input];
        let mut h = input;
        for layer in &self.encoder {
            let c = layer.forward(tape, p, h)?;
            h = act.apply(tape, c);
            skips.push(h);
        }
        skips.pop();
        for layer in &self.decoder {
            let up = tape.upsample_nearest(h);
            let skip = skips.pop().expect("one skip per scale");
            let cat = tape.channel_concat(&[up, skip])?;
            let c = layer.forward(tape, p, cat)?;
            h = act.apply(tape, c);
        }
        self.head.forward(tape, p, h)
    }

    fn output_shape(&self, input: Shape) -> Result<Shape> {
        let m = self.spatial_multiple();
        if input.n3 != self.channels || !input.n1.is_multiple_of(m) || !input.n2.is_multiple_of(m) {
            return dim_err(format!(
                "U-Net with {} channels and depth {} cannot take {input}",
                self.channels, self.config.depth
            ));
        }
        Ok(input)
    }

    fn spatial_multiple(&self) -> usize {
        1 << self.config.depth
    }
}
