use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use dtr_core::data::MaskMode;
use dtr_core::metrics::Aggregation;

#[derive(Parser, Debug)]
#[command(name = "dtr", version, about = "Tensor completion with transform-based tensor representations")]
pub struct Cli {
    /// Plain-text `key=value` file (one pair per line, `#` comments) supplying
    /// flags for the subcommand; explicit flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Command {
    /// Write a synthetic volume.
    Synth(SynthArgs),
    /// Write a binary sampling mask.
    Mask(MaskArgs),
    /// Complete a partially observed tensor.
    Recover(RecoverArgs),
    /// PSNR and SSIM between two tensors.
    Metrics(MetricsArgs),
    /// Finite-difference check of every autodiff primitive.
    Gradcheck(GradcheckArgs),
    /// Write three bands as a PPM image.
    Export(ExportArgs),
    /// Sweep variants, sampling rates and mask modes on a synthetic volume.
    Bench(BenchArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

/// Tensor dims written `n1xn2xn3` or `n1xn2xn3xn4`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Dims(pub Vec<usize>);

impl FromStr for Dims {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let dims = s
            .split('x')
            .map(|p| p.trim().parse::<usize>().map_err(|e| format!("bad dimension {p:?}: {e}")))
            .collect::<Result<Vec<_>, _>>()?;
        if !(3..=4).contains(&dims.len()) || dims.contains(&0) {
            return Err(format!("expected 3 or 4 positive dims like 16x16x8, got {s:?}"));
        }
        Ok(Dims(dims))
    }
}

impl TryFrom<String> for Dims {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<Dims> for String {
    fn from(d: Dims) -> String {
        d.to_string()
    }
}

impl fmt::Display for Dims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(usize::to_string).collect();
        f.write_str(&parts.join("x"))
    }
}

impl Dims {
    /// Order-3 shape, merging the last two dims of an order-4 shape.
    pub fn folded(&self) -> (usize, usize, usize) {
        match self.0[..] {
            [a, b, c] => (a, b, c),
            [a, b, c, d] => (a, b, c * d),
            _ => unreachable!("validated on parse"),
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthKind {
    /// Smooth blobs with smooth spectra, normalized band by band.
    Smooth,
    /// Exact low tubal rank (`--rank`), scaled into `[0, 1]`.
    #[value(name = "low_tubal_rank", alias = "low-tubal-rank")]
    LowTubalRank,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskModeArg {
    Random,
    Tube,
}

impl From<MaskModeArg> for MaskMode {
    fn from(m: MaskModeArg) -> Self {
        match m {
            MaskModeArg::Random => MaskMode::Random,
            MaskModeArg::Tube => MaskMode::Tube,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantArg {
    Dtr,
    #[value(name = "hlrtf_like", alias = "hlrtf-like")]
    HlrtfLike,
    #[value(name = "tubal_factorization", alias = "tubal-factorization")]
    TubalFactorization,
    #[value(name = "deep_facewise", alias = "deep-facewise")]
    DeepFacewise,
    /// TNN completion by ADMM.
    Tnn,
}

impl VariantArg {
    pub fn name(self) -> &'static str {
        match self {
            VariantArg::Dtr => "dtr",
            VariantArg::HlrtfLike => "hlrtf_like",
            VariantArg::TubalFactorization => "tubal_factorization",
            VariantArg::DeepFacewise => "deep_facewise",
            VariantArg::Tnn => "tnn",
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregationArg {
    #[value(name = "band_mean", alias = "band-mean")]
    BandMean,
    Volume,
}

impl From<AggregationArg> for Aggregation {
    fn from(a: AggregationArg) -> Self {
        match a {
            AggregationArg::BandMean => Aggregation::BandMean,
            AggregationArg::Volume => Aggregation::Volume,
        }
    }
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
#[command(args_override_self = true)]
pub struct SynthArgs {
    #[arg(long, value_enum, default_value = "smooth")]
    pub kind: SynthKind,
    #[arg(long)]
    pub dims: Dims,
    /// Tubal rank for `low_tubal_rank`.
    #[arg(long, default_value_t = 3)]
    pub rank: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Manifest path (default: next to the output).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
#[command(args_override_self = true)]
pub struct MaskArgs {
    #[arg(long, value_enum, default_value = "random")]
    pub mode: MaskModeArg,
    /// Sampling rate in (0, 1].
    #[arg(long)]
    pub sr: f64,
    #[arg(long)]
    pub dims: Dims,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
#[command(args_override_self = true)]
pub struct RecoverArgs {
    #[arg(long, value_enum, default_value = "dtr")]
    pub variant: VariantArg,
    /// Observed tensor (values in [0, 1]).
    #[arg(long)]
    pub input: PathBuf,
    /// Binary mask of the same dims.
    #[arg(long)]
    pub mask: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Adam iterations.
    #[arg(long, default_value_t = 2000)]
    pub iters: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10)]
    pub log_every: usize,
    /// Latent slice count (default: n3).
    #[arg(long)]
    pub latent: Option<usize>,
    /// U-Net scales.
    #[arg(long, default_value_t = 2)]
    pub depth: usize,
    #[arg(long, default_value_t = 32)]
    pub base_channels: usize,
    #[arg(long, default_value_t = 3)]
    pub kernel: usize,
    /// Linear layers of the tube-wise transform.
    #[arg(long, default_value_t = 2)]
    pub fcn_layers: usize,
    #[arg(long, default_value_t = 0.01)]
    pub leaky_slope: f64,
    /// Inner rank of the two-factor variants.
    #[arg(long, default_value_t = 3)]
    pub rank: usize,
    /// Inner ranks of `deep_facewise` (default: `rank,rank`).
    #[arg(long, value_delimiter = ',')]
    pub ranks: Vec<usize>,
    #[arg(long, default_value_t = 1e-2)]
    pub admm_rho: f64,
    #[arg(long, default_value_t = 1.05)]
    pub admm_mu: f64,
    #[arg(long, default_value_t = 1e10)]
    pub admm_rho_max: f64,
    #[arg(long, default_value_t = 500)]
    pub admm_max_iter: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub admm_tol: f64,
    /// Loss CSV path (default: `<out stem>.loss.csv`).
    #[arg(long)]
    pub loss_csv: Option<PathBuf>,
    /// Ground truth for reporting PSNR/SSIM.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "band_mean")]
    pub aggregation: AggregationArg,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
#[command(args_override_self = true)]
pub struct MetricsArgs {
    #[arg(long)]
    pub a: PathBuf,
    /// Reference tensor.
    #[arg(long)]
    pub b: PathBuf,
    #[arg(long, value_enum, default_value = "band_mean")]
    pub aggregation: AggregationArg,
    /// Print `band,psnr,ssim` CSV on stdout.
    #[arg(long)]
    pub csv: bool,
    /// Also write the CSV to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
#[command(args_override_self = true)]
pub struct GradcheckArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Random instances per primitive.
    #[arg(long, default_value_t = 3)]
    pub rounds: usize,
    #[arg(long, default_value_t = 1e-5)]
    pub h: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
    #[arg(long)]
    pub csv: bool,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
#[command(args_override_self = true)]
pub struct ExportArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Zero-based band indices for red, green and blue.
    #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
    pub bands: Vec<usize>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
#[command(args_override_self = true)]
pub struct BenchArgs {
    #[arg(long, value_enum, value_delimiter = ',', default_value = "dtr,tubal_factorization,tnn")]
    pub variants: Vec<VariantArg>,
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.2,0.3")]
    pub srs: Vec<f64>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "random,tube")]
    pub masks: Vec<MaskModeArg>,
    #[arg(long, default_value = "32x32x8")]
    pub dims: Dims,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 2000)]
    pub iters: usize,
    /// Learning rate of the network variants.
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    /// Learning rate of `tubal_factorization`.
    #[arg(long, default_value_t = 5e-2)]
    pub factor_lr: f64,
    #[arg(long, default_value_t = 3)]
    pub rank: usize,
    /// Leave the `seconds` column empty so reruns are byte-identical.
    #[arg(long)]
    pub no_timing: bool,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
#[command(args_override_self = true)]
pub struct ReplayArgs {
    /// Manifest written by an earlier run.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Write outputs into this directory (same file names) instead of their
    /// recorded paths.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}
