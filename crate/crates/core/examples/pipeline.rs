//! Runs every batch command on two synthetic subjects in a scratch
//! directory: template, labels (including a shape/pose recombination),
//! the three preparation stages and a metrics report.
//!
//! cargo run --example pipeline [out_dir]

use std::path::PathBuf;
use std::time::Instant;

use motionlabel::body_model::{build_template, TemplateConfig};
use motionlabel::pipeline::{cmd_labels, cmd_metrics, cmd_prepare, cmd_template, PipelineConfig};
use motionlabel::sequence::{synthetic_motion, write_sequence, Domain, SyntheticMotion};
use motionlabel::transfer_prep::Stage;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("motionlabel-pipeline"));
    std::fs::create_dir_all(&root)?;
    let template = build_template(&TemplateConfig::default())?;
    let dancer = SyntheticMotion {
        frames: 20,
        ..SyntheticMotion::default()
    };
    let actor = SyntheticMotion {
        frames: 16,
        tempo: 1.2,
        amplitude: 0.3,
        phase: 2.0,
        ..SyntheticMotion::default()
    };
    write_sequence(
        &root.join("dancer.mseq.json"),
        &synthetic_motion(&template, "dancer", Domain::Source, vec![0.3, -0.4], &dancer),
    )?;
    write_sequence(
        &root.join("actor.mseq.json"),
        &synthetic_motion(&template, "actor", Domain::Target, vec![-0.2, 0.5], &actor),
    )?;

    let config = r#"
output_dir = "out"
seed = 11

[camera]
width = 192
height = 192

[[subjects]]
id = "dancer"
domain = "source"
motion = "dancer.mseq.json"

[[subjects]]
id = "actor"
domain = "target"
motion = "actor.mseq.json"
"#;
    let cfg = PipelineConfig::from_toml(config, &root)?;
    let start = Instant::now();
    cmd_template(&cfg)?;
    for (subject, pose) in [("dancer", None), ("actor", None), ("actor", Some("dancer"))] {
        let out = cmd_labels(&cfg, subject, pose)?;
        println!("labels: {} frames in {}", out.label_files.len(), out.dir.display());
    }
    for stage in [Stage::PretrainMt, Stage::TrainDe, Stage::Transfer] {
        let out = cmd_prepare(&cfg, stage, None, None)?;
        println!("prepare {stage:?}: {}", out.manifest.display());
    }
    let blended = cfg.output_dir.join("prepare/train-de/blended");
    let report = cmd_metrics(&blended, &blended)?;
    println!("self-comparison of {} blends: mean SSIM {}", report.frames.len(), report.mean_ssim);
    println!("total {:.2?}", start.elapsed());
    Ok(())
}
