use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;

use motionlabel::body_model::build_template;
use motionlabel::objectives::LossWeights;
use motionlabel::pipeline::{cmd_labels, cmd_losses, cmd_metrics, cmd_prepare, cmd_template, LossInputs, PipelineConfig, PipelineError};
use motionlabel::render::CameraKind;
use motionlabel::sequence::{synthetic_motion, write_sequence, Domain, SyntheticMotion};
use motionlabel::transfer_prep::{AlignmentMode, Stage};

const EXIT_CODES: &str = "Exit codes:
  0  success
  2  configuration error (bad flags, config file, missing inputs)
  3  data error (malformed or inconsistent files)
  4  numerical failure (eigensolver did not converge)";

#[derive(Parser)]
#[command(name = "motionlabel", version, about = "Label images and data preparation for human motion transfer", after_help = EXIT_CODES)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags that override the config file.
#[derive(Args)]
struct ConfigArgs {
    /// Pipeline config (TOML).
    #[arg(short, long)]
    config: PathBuf,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores). Never changes output bytes.
    #[arg(long)]
    threads: Option<usize>,
    /// Odd temporal smoothing window.
    #[arg(long)]
    smoothing_window: Option<usize>,
    #[arg(long)]
    smooth_poses: Option<bool>,
    /// per-video or per-frame.
    #[arg(long, value_parser = kebab::<AlignmentMode>)]
    alignment: Option<AlignmentMode>,
    /// weak-perspective or pinhole.
    #[arg(long, value_parser = kebab::<CameraKind>)]
    camera: Option<CameraKind>,
    #[arg(long)]
    width: Option<u32>,
    #[arg(long)]
    height: Option<u32>,
}

impl ConfigArgs {
    fn load(&self) -> Result<PipelineConfig, PipelineError> {
        let mut cfg = PipelineConfig::load(&self.config)?;
        if let Some(v) = &self.output_dir {
            cfg.output_dir = v.clone();
        }
        macro_rules! set {
            ($($flag:ident => $($field:ident).+),*) => {$(
                if let Some(v) = self.$flag {
                    cfg.$($field).+ = v;
                }
            )*};
        }
        set!(seed => seed, threads => threads, smoothing_window => smoothing_window, smooth_poses => smooth_poses,
             alignment => alignment, camera => camera.kind, width => camera.width, height => camera.height);
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write the template mesh (OBJ) and its BTPL/1 sidecar.
    Template(ConfigArgs),
    /// Render LBL1 label images, PNG previews and a frame-pair index.
    Labels {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long)]
        subject: String,
        /// Drive the subject's shape with this subject's motion.
        #[arg(long)]
        pose_source: Option<String>,
    },
    /// Write a PAIR/1 plan; for train-de and transfer also aligned and blended frames.
    Prepare {
        #[command(flatten)]
        config: ConfigArgs,
        /// pretrain-mt, train-de or transfer.
        #[arg(long)]
        stage: Stage,
        /// Source-domain subject (default: first in config).
        #[arg(long)]
        source: Option<String>,
        /// Target-domain subject (default: first in config).
        #[arg(long)]
        target: Option<String>,
    },
    /// SSIM and pixel L1 between two images or two directories (paired by file name).
    Metrics { a: PathBuf, b: PathBuf },
    /// Evaluate objectives on LBL1 tensors.
    Losses {
        /// Discriminator probabilities on real inputs.
        #[arg(long)]
        real: Option<PathBuf>,
        /// Discriminator probabilities on generated inputs.
        #[arg(long)]
        fake: Option<PathBuf>,
        /// Feature stack: concatenated LBL1 records, one per layer.
        #[arg(long)]
        features_a: Option<PathBuf>,
        #[arg(long)]
        features_b: Option<PathBuf>,
        #[arg(long, default_value_t = LossWeights::default().lambda_p)]
        lambda_p: f64,
        #[arg(long, default_value_t = LossWeights::default().lambda_fm)]
        lambda_fm: f64,
    },
    /// Write a synthetic MSEQ/1 motion.
    Motion {
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        subject: String,
        #[arg(long, value_parser = kebab::<Domain>)]
        domain: Domain,
        /// Comma-separated shape coefficients (default: zeros).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        beta: Vec<f64>,
        #[arg(long, default_value_t = SyntheticMotion::default().frames)]
        frames: usize,
        #[arg(long, default_value_t = SyntheticMotion::default().frame_rate)]
        frame_rate: f64,
        #[arg(long, default_value_t = SyntheticMotion::default().tempo)]
        tempo: f64,
        #[arg(long, default_value_t = SyntheticMotion::default().amplitude)]
        amplitude: f64,
        #[arg(long, default_value_t = 0.0)]
        phase: f64,
        /// Take the template from this config instead of the defaults.
        #[arg(short, long)]
        config: Option<PathBuf>,
    },
}

fn kebab<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

fn print_json<T: Serialize>(value: &T) -> Result<(), PipelineError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| PipelineError::Data(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn show(path: &Path) {
    println!("{}", path.display());
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    match cli.command {
        Command::Template(args) => {
            let out = cmd_template(&args.load()?)?;
            show(&out.obj);
            show(&out.sidecar);
        }
        Command::Labels {
            config,
            subject,
            pose_source,
        } => {
            let out = cmd_labels(&config.load()?, &subject, pose_source.as_deref())?;
            println!("{} label images in {}", out.label_files.len(), out.dir.display());
            show(&out.index);
        }
        Command::Prepare {
            config,
            stage,
            source,
            target,
        } => {
            let out = cmd_prepare(&config.load()?, stage, source.as_deref(), target.as_deref())?;
            show(&out.plan);
            show(&out.manifest);
        }
        Command::Metrics { a, b } => print_json(&cmd_metrics(&a, &b)?)?,
        Command::Losses {
            real,
            fake,
            features_a,
            features_b,
            lambda_p,
            lambda_fm,
        } => {
            let weights = LossWeights::new(lambda_p, lambda_fm).map_err(|e| PipelineError::Config(e.to_string()))?;
            let inputs = LossInputs {
                real_scores: real,
                fake_scores: fake,
                features_a,
                features_b,
            };
            print_json(&cmd_losses(&inputs, &weights)?)?;
        }
        Command::Motion {
            output,
            subject,
            domain,
            beta,
            frames,
            frame_rate,
            tempo,
            amplitude,
            phase,
            config,
        } => {
            let template_cfg = match config {
                Some(p) => PipelineConfig::load(&p)?.template,
                None => Default::default(),
            };
            let template = build_template(&template_cfg)?;
            let beta = if beta.is_empty() { vec![0.0; template.shape_count()] } else { beta };
            if frames == 0 || !(frame_rate > 0.0) {
                return Err(PipelineError::Config("frames and frame rate must be positive".into()));
            }
            let spec = SyntheticMotion {
                frames,
                frame_rate,
                tempo,
                amplitude,
                phase,
            };
            let seq = synthetic_motion(&template, &subject, domain, beta, &spec);
            seq.validate()?;
            if let Some(dir) = output.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            write_sequence(&output, &seq)?;
            show(&output);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("motionlabel: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
