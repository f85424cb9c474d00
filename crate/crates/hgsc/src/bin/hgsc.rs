//! Command-line interface: encode, decode, metrics, rate-distortion
//! sweeps and synthetic scene generation.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hgsc::container::{self, EncodeConfig, Preset};
use hgsc::lod::GroupBits;
use hgsc::metrics::{psnr, ssim, write_rd_csv};
use hgsc::prune::{importance_cdf, importance_report, opacity_only_report, write_cdf_csv};
use hgsc::render::render;
use hgsc::synth::{synth_cloud, synth_rig, SynthConfig};

#[derive(Parser)]
#[command(name = "hgsc", about = "Hierarchical 3D Gaussian Splatting codec", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compress a 3DGS PLY into an .hgsc bitstream.
    Encode(EncodeArgs),
    /// Decompress an .hgsc bitstream back into a PLY.
    Decode(DecodeArgs),
    /// Render two PLYs over a camera rig and report PSNR/SSIM.
    Metrics(MetricsArgs),
    /// Sweep encoder configs and write a rate-distortion CSV.
    Rd(RdArgs),
    /// Generate a synthetic scene (and camera rigs) for experiments.
    Synth(SynthArgs),
}

#[derive(Args)]
struct CodingParams {
    /// Percentage of lowest-importance Gaussians to prune.
    #[arg(long, default_value_t = 60.0)]
    tau: f64,
    /// Exponent on the normalized volume in the local significance.
    #[arg(long, default_value_t = 0.1)]
    beta: f64,
    /// Octree depth d; positions quantize to a 2^d grid.
    #[arg(long, default_value_t = 12)]
    octree_depth: u8,
    /// Fraction of primitives kept as anchors.
    #[arg(long, default_value_t = 0.10)]
    anchors: f64,
    /// Comma-separated LoD fractions (with anchors they must sum to 1).
    #[arg(long, default_value = "0.30,0.60")]
    lods: String,
    /// Nearest anchors used for LoD prediction.
    #[arg(long, default_value_t = 3)]
    k: usize,
    /// KD block capacity for the partition.
    #[arg(long, default_value_t = 2048)]
    max_leaf: usize,
    /// Rate preset fixing the residual bit depths (low or high).
    #[arg(long, default_value = "high")]
    preset: String,
    /// Override: luma residual bits.
    #[arg(long)]
    qbits_y: Option<u8>,
    /// Override: chroma residual bits.
    #[arg(long)]
    qbits_uv: Option<u8>,
    /// Override: scale residual bits.
    #[arg(long)]
    qbits_scale: Option<u8>,
    /// Override: rotation residual bits.
    #[arg(long)]
    qbits_rot: Option<u8>,
    /// Override: opacity residual bits.
    #[arg(long)]
    qbits_opacity: Option<u8>,
    /// Skip pruning entirely.
    #[arg(long)]
    ablate_no_prune: bool,
    /// Keep SH coefficients in RGB.
    #[arg(long)]
    ablate_no_yuv: bool,
    /// Prune on base opacity alone instead of rendered importance.
    #[arg(long)]
    ablate_prune_opacity_only: bool,
}

impl CodingParams {
    fn to_config(&self) -> Result<EncodeConfig, String> {
        let preset = match self.preset.as_str() {
            "low" => Preset::Low,
            "high" => Preset::High,
            other => return Err(format!("unknown preset '{other}' (expected low or high)")),
        };
        let mut bits: GroupBits = preset.bits();
        for (slot, val) in [
            self.qbits_y,
            self.qbits_uv,
            self.qbits_scale,
            self.qbits_rot,
            self.qbits_opacity,
        ]
        .iter()
        .enumerate()
        {
            if let Some(v) = val {
                if *v == 0 || *v > 31 {
                    return Err(format!("bit depth {v} out of range 1..=31"));
                }
                bits[slot] = *v;
            }
        }
        let lod_fracs: Result<Vec<f64>, _> =
            self.lods.split(',').map(str::trim).map(str::parse::<f64>).collect();
        let lod_fracs = lod_fracs.map_err(|e| format!("bad --lods: {e}"))?;
        Ok(EncodeConfig {
            tau_percent: self.tau,
            beta: self.beta,
            octree_depth: self.octree_depth,
            anchor_frac: self.anchors,
            lod_fracs,
            max_leaf: self.max_leaf,
            k: self.k,
            bits,
            no_prune: self.ablate_no_prune,
            prune_opacity_only: self.ablate_prune_opacity_only,
            no_yuv: self.ablate_no_yuv,
            ..Default::default()
        })
    }
}

#[derive(Args)]
struct EncodeArgs {
    /// Input 3DGS PLY.
    #[arg(long)]
    input: PathBuf,
    /// Output bitstream path.
    #[arg(long)]
    output: PathBuf,
    /// Camera rig JSON (required unless pruning is disabled or opacity-only).
    #[arg(long)]
    cameras: Option<PathBuf>,
    #[command(flatten)]
    params: CodingParams,
    /// Write encoder stats as JSON.
    #[arg(long)]
    stats: Option<PathBuf>,
    /// Write the cumulative importance curve as CSV before pruning.
    #[arg(long)]
    cdf_out: Option<PathBuf>,
    /// Which score the CDF uses: combined (I) or global (I_g).
    #[arg(long, default_value = "combined")]
    cdf_source: String,
}

#[derive(Args)]
struct DecodeArgs {
    /// Input .hgsc bitstream.
    #[arg(long)]
    input: PathBuf,
    /// Output PLY path.
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct MetricsArgs {
    /// Decoded (or any) PLY under test.
    #[arg(long)]
    input: PathBuf,
    /// Reference PLY.
    #[arg(long)]
    reference: PathBuf,
    /// Camera rig JSON to render both clouds over.
    #[arg(long)]
    cameras: PathBuf,
    /// Optional directory for side-by-side PNG renders.
    #[arg(long)]
    render_dir: Option<PathBuf>,
}

#[derive(Args)]
struct RdArgs {
    /// Input 3DGS PLY.
    #[arg(long)]
    input: PathBuf,
    /// Camera rig used for pruning.
    #[arg(long)]
    cameras: PathBuf,
    /// Held-out rig for quality evaluation (defaults to --cameras).
    #[arg(long)]
    eval_cameras: Option<PathBuf>,
    /// Comma-separated configs: low, high, or qN (N = luma bits).
    #[arg(long, default_value = "low,high")]
    configs: String,
    /// Output CSV path.
    #[arg(long)]
    output: PathBuf,
    #[command(flatten)]
    params: CodingParams,
}

#[derive(Args)]
struct SynthArgs {
    /// Number of Gaussians.
    #[arg(long, default_value_t = 50_000)]
    count: usize,
    /// SH degree of the generated cloud (0..=3).
    #[arg(long, default_value_t = 2)]
    sh_degree: u8,
    /// RNG seed.
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Draw the seed from OS entropy instead of --seed.
    #[arg(long)]
    seedless: bool,
    /// Output PLY path.
    #[arg(long)]
    output: PathBuf,
    /// Write a surrounding camera rig here.
    #[arg(long)]
    cameras_out: Option<PathBuf>,
    /// Write a rotated held-out rig here.
    #[arg(long)]
    eval_cameras_out: Option<PathBuf>,
    /// Cameras per generated rig.
    #[arg(long, default_value_t = 12)]
    views: usize,
    /// Image size of the rig cameras (square).
    #[arg(long, default_value_t = 256)]
    view_size: u32,
}

fn run() -> Result<(), String> {
    match Cli::parse().command {
        Command::Encode(args) => {
            let config = args.params.to_config()?;
            if let Some(cdf_path) = &args.cdf_out {
                let cloud = hgsc::load_ply(&args.input).map_err(|e| e.to_string())?;
                let report = if config.prune_opacity_only {
                    opacity_only_report(&cloud)
                } else {
                    let cams = args
                        .cameras
                        .as_ref()
                        .ok_or("--cdf-out needs --cameras unless opacity-only")?;
                    let cams = hgsc::load_camera_rig(cams).map_err(|e| e.to_string())?;
                    importance_report(&cloud, &cams, config.beta).map_err(|e| e.to_string())?
                };
                let scores = match args.cdf_source.as_str() {
                    "combined" => &report.combined,
                    "global" => &report.global_scores,
                    other => return Err(format!("unknown --cdf-source '{other}'")),
                };
                let curve = importance_cdf(scores).map_err(|e| e.to_string())?;
                write_cdf_csv(&curve, cdf_path).map_err(|e| e.to_string())?;
                println!("importance CDF written to {}", cdf_path.display());
            }
            let stats = container::encode_file(
                &args.input,
                args.cameras.as_deref(),
                &config,
                &args.output,
            )
            .map_err(|e| e.to_string())?;
            println!(
                "encoded {} -> {} primitives ({} voxels), {} bytes in {:.2}s",
                stats.input_primitives,
                stats.surviving_primitives,
                stats.voxel_primitives,
                stats.total_bytes,
                stats.encode_seconds
            );
            println!(
                "  sections: header {} B, geometry {} B, anchors {} B ({} anchors), lods {:?} B {:?}",
                stats.header_bytes,
                stats.geometry_bytes,
                stats.anchor_bytes,
                stats.anchor_count,
                stats.lod_bytes,
                stats.lod_counts
            );
            if let Some(stats_path) = &args.stats {
                let json = serde_json::to_string_pretty(&stats).map_err(|e| e.to_string())?;
                std::fs::write(stats_path, json).map_err(|e| e.to_string())?;
            }
            Ok(())
        }
        Command::Decode(args) => {
            let result = container::decode_file(&args.input, &args.output).map_err(|e| e.to_string())?;
            println!(
                "decoded {} primitives in {:.2}s -> {}",
                result.cloud.len(),
                result.decode_seconds,
                args.output.display()
            );
            Ok(())
        }
        Command::Metrics(args) => {
            let test = hgsc::load_ply(&args.input).map_err(|e| e.to_string())?;
            let reference = hgsc::load_ply(&args.reference).map_err(|e| e.to_string())?;
            let cams = hgsc::load_camera_rig(&args.cameras).map_err(|e| e.to_string())?;
            if cams.is_empty() {
                return Err("camera rig is empty".into());
            }
            if let Some(dir) = &args.render_dir {
                std::fs::create_dir_all(dir).map_err(|e| e.to_string())?;
            }
            let (mut psnr_sum, mut ssim_sum) = (0.0, 0.0);
            for (i, cam) in cams.iter().enumerate() {
                let ref_img = render(&reference, cam, false).image;
                let test_img = render(&test, cam, false).image;
                let p = psnr(&ref_img, &test_img).map_err(|e| e.to_string())?;
                let s = ssim(&ref_img, &test_img).map_err(|e| e.to_string())?;
                println!("view {i}: psnr {p:.2} dB, ssim {s:.4}");
                psnr_sum += p;
                ssim_sum += s;
                if let Some(dir) = &args.render_dir {
                    test_img
                        .save_png(dir.join(format!("view{i:02}_test.png")))
                        .map_err(|e| e.to_string())?;
                    ref_img
                        .save_png(dir.join(format!("view{i:02}_ref.png")))
                        .map_err(|e| e.to_string())?;
                }
            }
            println!(
                "mean: psnr {:.2} dB, ssim {:.4} over {} views",
                psnr_sum / cams.len() as f64,
                ssim_sum / cams.len() as f64,
                cams.len()
            );
            Ok(())
        }
        Command::Rd(args) => {
            let cloud = hgsc::load_ply(&args.input).map_err(|e| e.to_string())?;
            let prune_cams = hgsc::load_camera_rig(&args.cameras).map_err(|e| e.to_string())?;
            let eval_cams = match &args.eval_cameras {
                Some(path) => hgsc::load_camera_rig(path).map_err(|e| e.to_string())?,
                None => prune_cams.clone(),
            };
            let base = args.params.to_config()?;
            let configs: Vec<(String, EncodeConfig)> = args
                .configs
                .split(',')
                .map(str::trim)
                .map(|label| {
                    let mut config = base.clone();
                    match label {
                        "low" => config.bits = Preset::Low.bits(),
                        "high" => config.bits = Preset::High.bits(),
                        other => {
                            let n: u8 = other
                                .strip_prefix('q')
                                .and_then(|s| s.parse().ok())
                                .ok_or(format!("unknown config '{other}'"))?;
                            if !(3..=31).contains(&n) {
                                return Err(format!("config '{other}' out of range q3..q31"));
                            }
                            config.bits = [n, n.saturating_sub(2).max(2), n, n, n];
                        }
                    }
                    Ok((label.to_string(), config))
                })
                .collect::<Result<_, String>>()?;
            let points = container::rd_sweep(&cloud, &prune_cams, &eval_cams, &configs)
                .map_err(|e| e.to_string())?;
            for p in &points {
                println!(
                    "{}: {} bytes, psnr {:.2} dB, ssim {:.4}, enc {:.2}s, dec {:.2}s",
                    p.label, p.size_bytes, p.psnr_db, p.ssim, p.encode_seconds, p.decode_seconds
                );
            }
            write_rd_csv(&points, &args.output).map_err(|e| e.to_string())?;
            println!("rd curve written to {}", args.output.display());
            Ok(())
        }
        Command::Synth(args) => {
            let seed = if args.seedless {
                rand::random()
            } else {
                args.seed
            };
            let cloud = synth_cloud(&SynthConfig {
                count: args.count,
                sh_degree: args.sh_degree,
                seed,
            });
            hgsc::save_ply(&cloud, &args.output).map_err(|e| e.to_string())?;
            println!(
                "wrote {} synthetic primitives (sh degree {}, seed {seed}) to {}",
                cloud.len(),
                args.sh_degree,
                args.output.display()
            );
            if let Some(path) = &args.cameras_out {
                let rig = synth_rig(args.views, args.view_size, args.view_size, 0.0);
                hgsc::save_camera_rig(&rig, path).map_err(|e| e.to_string())?;
                println!("wrote {}-camera rig to {}", args.views, path.display());
            }
            if let Some(path) = &args.eval_cameras_out {
                let rig = synth_rig(args.views, args.view_size, args.view_size, 0.39);
                hgsc::save_camera_rig(&rig, path).map_err(|e| e.to_string())?;
                println!("wrote {}-camera held-out rig to {}", args.views, path.display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
