//! Skins a jittery motion and compares per-vertex path length before and
//! after temporal smoothing.
//!
//! cargo run --example smoothing

use motionlabel::body_model::{build_template, TemplateConfig};
use motionlabel::mesh::Vec3;
use motionlabel::sequence::{pose_sequence_to_meshes, smooth_vertices, synthetic_motion, total_variation, Domain, SyntheticMotion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let template = build_template(&TemplateConfig::default())?;
    let mut motion = synthetic_motion(&template, "jitter", Domain::Source, vec![0.0; 2], &SyntheticMotion::default());
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for frame in &mut motion.frames {
        for r in &mut frame.theta {
            *r += Vec3::new(rng.gen_range(-0.05..0.05), rng.gen_range(-0.05..0.05), rng.gen_range(-0.05..0.05));
        }
    }
    let raw = pose_sequence_to_meshes(&template, &motion.shape(), &motion)?;
    let wrist = raw.frames()[0]
        .vertices
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.x.total_cmp(&b.1.x))
        .map(|(i, _)| i)
        .unwrap();
    println!("window  path length of the left fingertip vertex");
    for window in [1, 3, 5, 9, 15] {
        let smoothed = smooth_vertices(&raw, window)?;
        println!("{window:>6}  {:.4}", total_variation(&smoothed, wrist));
    }
    Ok(())
}
