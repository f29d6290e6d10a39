use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use dtr_core::autodiff::primitive_suite;
use dtr_core::data::{
    export_image, gen_mask, read_dtt, save_stored, synth_low_tubal_rank, synth_smooth, Stored, Tensor4,
};
use dtr_core::metrics::{self, Aggregation, MetricsReport};
use dtr_core::nets::{Activation, FcnConfig, UNetConfig};
use dtr_core::recovery::{recover, write_loss_csv, RecoveryConfig, VariantConfig};
use dtr_core::tnn::{tnn_admm_complete, AdmmParams};
use dtr_core::DenseTensor;

use crate::args::*;
use crate::Failure;

/// Files a run read and wrote.
#[derive(Default)]
pub struct Touched {
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
}

/// `Inf`, `-Inf` and `NaN` spelled out; finite values in shortest
/// round-trip form.
pub fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "Inf" } else { "-Inf" }.into()
    } else {
        format!("{v}")
    }
}

/// `dir/stem.suffix` next to `path`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn load(path: &Path, touched: &mut Touched) -> Result<Stored, Failure> {
    touched.inputs.push(path.to_path_buf());
    read_dtt(path).map_err(|e| Failure::from_core(e, Some(path)))
}

fn write_text(path: &Path, text: &str, touched: &mut Touched) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    touched.outputs.push(path.to_path_buf());
    Ok(())
}

fn store(t: &Stored, path: &Path, touched: &mut Touched) -> Result<(), Failure> {
    save_stored(t, path).map_err(|e| Failure::from_core(e, Some(path)))?;
    touched.outputs.push(path.to_path_buf());
    Ok(())
}

/// Wraps an order-3 result back into the layout described by `dims`.
fn reshape_like(t: DenseTensor, dims: &[usize]) -> Result<Stored, Failure> {
    match *dims {
        [_, _, n3, n4] => Ok(Stored::Order4(Tensor4::unfold(&t, n3, n4)?)),
        _ => Ok(Stored::Order3(t)),
    }
}

fn stored_dims(s: &Stored) -> Vec<usize> {
    match s {
        Stored::Order3(t) => {
            let sh = t.shape();
            vec![sh.n1, sh.n2, sh.n3]
        }
        Stored::Order4(t) => t.dims.to_vec(),
    }
}

pub fn synth(a: &SynthArgs) -> Result<Touched, Failure> {
    let shape = a.dims.folded();
    let t = match a.kind {
        SynthKind::Smooth => synth_smooth(shape, a.seed)?,
        SynthKind::LowTubalRank => synth_low_tubal_rank(shape, a.rank, a.seed)?,
    };
    let mut touched = Touched::default();
    store(&reshape_like(t, &a.dims.0)?, &a.out, &mut touched)?;
    println!("wrote {} ({})", a.out.display(), a.dims);
    Ok(touched)
}

pub fn mask(a: &MaskArgs) -> Result<Touched, Failure> {
    let m = gen_mask(a.mode.into(), a.dims.folded(), a.sr, a.seed)?;
    let observed = m.as_slice().iter().filter(|&&v| v == 1.0).count();
    let (n1, n2, _) = a.dims.folded();
    let tubes = (0..n1 * n2).filter(|&p| m.frontal(0)[p] == 1.0).count();
    let mut touched = Touched::default();
    store(&reshape_like(m, &a.dims.0)?, &a.out, &mut touched)?;
    println!("observed_entries,{observed}");
    if a.mode == MaskModeArg::Tube {
        println!("observed_tubes,{tubes}");
    }
    Ok(touched)
}

pub fn recovery_config(variant: VariantArg, a: &RecoverArgs) -> Result<RecoveryConfig, Failure> {
    let activation = Activation::LeakyRelu { slope: a.leaky_slope };
    let fcn = FcnConfig { layers: a.fcn_layers, hidden: None, activation };
    let v = match variant {
        VariantArg::Dtr => VariantConfig::Dtr {
            unet: UNetConfig { depth: a.depth, base_channels: a.base_channels, kernel: a.kernel, activation },
            fcn,
        },
        VariantArg::HlrtfLike => VariantConfig::HlrtfLike { rank: a.rank, fcn },
        VariantArg::TubalFactorization => VariantConfig::TubalFactorization { rank: a.rank },
        VariantArg::DeepFacewise => VariantConfig::DeepFacewise {
            ranks: if a.ranks.is_empty() { vec![a.rank; 2] } else { a.ranks.clone() },
            activation,
        },
        VariantArg::Tnn => return Err(Failure::Usage("tnn is not a network variant".into())),
    };
    let cfg = RecoveryConfig {
        variant: v,
        iterations: a.iters,
        learning_rate: a.lr,
        seed: a.seed,
        latent_slices: a.latent,
        log_every: a.log_every,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn admm_params(a: &RecoverArgs) -> AdmmParams {
    AdmmParams { rho: a.admm_rho, mu: a.admm_mu, rho_max: a.admm_rho_max, max_iter: a.admm_max_iter, tol: a.admm_tol }
}

/// Completed tensor and its `(iteration, value)` trace.
fn complete(
    variant: VariantArg,
    o: &DenseTensor,
    m: &DenseTensor,
    a: &RecoverArgs,
) -> Result<(DenseTensor, Vec<(usize, f64)>), Failure> {
    if variant == VariantArg::Tnn {
        let out = tnn_admm_complete(o, m, &admm_params(a))?;
        if !out.converged {
            eprintln!("warning: ADMM stopped at {} iterations before reaching tolerance", out.iterations);
        }
        let trace = out.tnn_history.iter().enumerate().map(|(i, &v)| (i + 1, v)).collect();
        Ok((out.x, trace))
    } else {
        let res = recover(o, m, &recovery_config(variant, a)?)?;
        Ok((res.x, res.losses))
    }
}

pub fn recover_cmd(a: &RecoverArgs) -> Result<Touched, Failure> {
    let mut touched = Touched::default();
    let o_stored = load(&a.input, &mut touched)?;
    let m_stored = load(&a.mask, &mut touched)?;
    let dims = stored_dims(&o_stored);
    if stored_dims(&m_stored) != dims {
        return Err(Failure::Numeric(format!(
            "input dims {dims:?} differ from mask dims {:?}",
            stored_dims(&m_stored)
        )));
    }
    let (o, m) = (o_stored.into_order3(), m_stored.into_order3());
    let (x, trace) = complete(a.variant, &o, &m, a)?;

    let mut csv = Vec::new();
    write_loss_csv(&trace, &mut csv)?;
    let loss_path = a.loss_csv.clone().unwrap_or_else(|| sibling(&a.out, "loss.csv"));
    write_text(&loss_path, &String::from_utf8(csv).expect("ascii"), &mut touched)?;

    if let Some(truth_path) = &a.truth {
        let truth = load(truth_path, &mut touched)?.into_order3();
        let report = metrics::evaluate(&x, &truth, a.aggregation.into())?;
        println!("psnr,{}", fmt_num(report.mean_psnr));
        println!("ssim,{}", fmt_num(report.mean_ssim));
    }
    store(&reshape_like(x, &dims)?, &a.out, &mut touched)?;
    if let Some((it, v)) = trace.last() {
        println!("final_iteration,{it}");
        println!("final_loss,{}", fmt_num(*v));
    }
    Ok(touched)
}

pub fn metrics_csv(report: &MetricsReport) -> String {
    let mut s = String::from("band,psnr,ssim\n");
    for (k, (p, q)) in report.psnr.iter().zip(&report.ssim).enumerate() {
        let _ = writeln!(s, "{k},{},{}", fmt_num(*p), fmt_num(*q));
    }
    let _ = writeln!(s, "mean,{},{}", fmt_num(report.mean_psnr), fmt_num(report.mean_ssim));
    s
}

pub fn metrics_cmd(a: &MetricsArgs) -> Result<Touched, Failure> {
    let mut touched = Touched::default();
    let x = load(&a.a, &mut touched)?.into_order3();
    let r = load(&a.b, &mut touched)?.into_order3();
    let report = metrics::evaluate(&x, &r, a.aggregation.into())?;
    let csv = metrics_csv(&report);
    if a.csv {
        print!("{csv}");
    } else {
        let agg = match report.aggregation {
            Aggregation::BandMean => "band mean",
            Aggregation::Volume => "volume",
        };
        println!("PSNR {} dB ({agg})", fmt_num(report.mean_psnr));
        println!("SSIM {}", fmt_num(report.mean_ssim));
    }
    if let Some(out) = &a.out {
        write_text(out, &csv, &mut touched)?;
    }
    Ok(touched)
}

pub fn gradcheck(a: &GradcheckArgs) -> Result<Touched, Failure> {
    let checks = primitive_suite(a.seed, a.rounds, a.h, a.tol)?;
    let failed = checks.iter().filter(|c| !c.passed).count();
    if a.csv {
        println!("primitive,shape,worst,passed");
    }
    for c in &checks {
        if a.csv {
            println!("{},{},{},{}", c.primitive, c.shape, fmt_num(c.worst), c.passed);
        } else {
            println!(
                "{:<20} {:<10} worst {:.3e} {}",
                c.primitive,
                c.shape.to_string(),
                c.worst,
                if c.passed { "ok" } else { "FAIL" }
            );
        }
    }
    if failed > 0 {
        return Err(Failure::Numeric(format!(
            "{failed} of {} gradient checks exceeded tolerance {}",
            checks.len(),
            a.tol
        )));
    }
    Ok(Touched::default())
}

pub fn export(a: &ExportArgs) -> Result<Touched, Failure> {
    let bands: [usize; 3] = a
        .bands
        .clone()
        .try_into()
        .map_err(|b: Vec<usize>| Failure::Usage(format!("--bands needs exactly 3 indices, got {}", b.len())))?;
    let mut touched = Touched::default();
    let t = load(&a.input, &mut touched)?.into_order3();
    export_image(&t, bands, &a.out).map_err(|e| Failure::from_core(e, Some(&a.out)))?;
    touched.outputs.push(a.out.clone());
    Ok(touched)
}

pub fn bench(a: &BenchArgs) -> Result<Touched, Failure> {
    let shape = a.dims.folded();
    let truth = synth_smooth(shape, a.seed)?;
    let mut csv = String::from("variant,mask,sr,psnr,ssim,seconds\n");
    for &variant in &a.variants {
        for &mode in &a.masks {
            for &sr in &a.srs {
                let m = gen_mask(mode.into(), shape, sr, a.seed)?;
                let o = truth.zip_map(&m, |x, w| x * w)?;
                let start = std::time::Instant::now();
                let x = if variant == VariantArg::Tnn {
                    tnn_admm_complete(&o, &m, &AdmmParams::default())?.x
                } else {
                    let lr = if variant == VariantArg::TubalFactorization { a.factor_lr } else { a.lr };
                    let args = bench_recover_args(a, lr);
                    recover(&o, &m, &recovery_config(variant, &args)?)?.x
                };
                let seconds = start.elapsed().as_secs_f64();
                let r = metrics::evaluate(&x, &truth, Aggregation::BandMean)?;
                let secs = if a.no_timing { String::new() } else { format!("{seconds:.3}") };
                let mode_name = dtr_core::data::MaskMode::from(mode).to_string();
                let row = format!(
                    "{},{mode_name},{sr},{},{},{secs}\n",
                    variant.name(),
                    fmt_num(r.mean_psnr),
                    fmt_num(r.mean_ssim)
                );
                print!("{row}");
                csv.push_str(&row);
            }
        }
    }
    let mut touched = Touched::default();
    write_text(&a.out, &csv, &mut touched)?;
    Ok(touched)
}

fn bench_recover_args(a: &BenchArgs, lr: f64) -> RecoverArgs {
    RecoverArgs {
        variant: VariantArg::Dtr,
        input: PathBuf::new(),
        mask: PathBuf::new(),
        out: PathBuf::new(),
        iters: a.iters,
        lr,
        seed: a.seed,
        log_every: a.iters,
        latent: None,
        depth: 2,
        base_channels: 32,
        kernel: 3,
        fcn_layers: 2,
        leaky_slope: dtr_core::autodiff::DEFAULT_LEAKY_SLOPE,
        rank: a.rank,
        ranks: vec![],
        admm_rho: 1e-2,
        admm_mu: 1.05,
        admm_rho_max: 1e10,
        admm_max_iter: 500,
        admm_tol: 1e-6,
        loss_csv: None,
        truth: None,
        aggregation: AggregationArg::BandMean,
        manifest: None,
    }
}
