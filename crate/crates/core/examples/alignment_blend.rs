//! Aligns a short, stocky subject to a tall one by projected bounding box,
//! warps the rendering and blends it with the target.
//!
//! cargo run --example alignment_blend [out_dir]

use std::path::PathBuf;

use motionlabel::body_model::{apply_shape, build_template, recombine, ShapeParams, TemplateConfig};
use motionlabel::intrinsic::intrinsic_colors;
use motionlabel::pipeline::{reference_camera, CameraConfig};
use motionlabel::render::{rasterize_mesh, write_png};
use motionlabel::transfer_prep::{blend_mean, compute_alignment, projected_bbox, warp_image};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("motionlabel-align"));
    std::fs::create_dir_all(&out)?;
    let template = build_template(&TemplateConfig::default())?;
    let camera = reference_camera(&template, &CameraConfig::default())?;
    let pose = template.rest_pose();

    let short = ShapeParams::new(vec![-0.8, 0.6]);
    let tall = ShapeParams::new(vec![0.7, -0.3]);
    let render = |beta: &ShapeParams| -> Result<_, Box<dyn std::error::Error>> {
        let (_, colors) = intrinsic_colors(&apply_shape(&template, beta)?)?;
        let mesh = recombine(&template, beta, &pose)?;
        Ok((rasterize_mesh(&mesh, &colors, &camera)?, mesh))
    };
    let (src_img, src_mesh) = render(&short)?;
    let (tgt_img, tgt_mesh) = render(&tall)?;

    let t = compute_alignment(&src_mesh, &tgt_mesh, &camera)?;
    let (sb, tb) = (
        projected_bbox(&src_mesh, &camera).unwrap(),
        projected_bbox(&tgt_mesh, &camera).unwrap(),
    );
    println!("source bbox height {:.2}px, target {:.2}px", sb.height(), tb.height());
    println!("transform: scale {:.4}, translation ({:.2}, {:.2})", t.scale, t.tx, t.ty);
    println!("inverse scale x scale = {}", t.inverse().scale * t.scale);

    let warped = warp_image(&src_img, &t)?;
    write_png(&out.join("source.png"), &src_img)?;
    write_png(&out.join("target.png"), &tgt_img)?;
    write_png(&out.join("aligned.png"), &warped)?;
    write_png(&out.join("blended.png"), &blend_mean(&warped, &tgt_img)?)?;
    println!("wrote {}", out.display());
    Ok(())
}
