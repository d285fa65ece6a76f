//! Renders one 6-channel label image: the z-buffered, intrinsically colored
//! mesh next to the 2D skeleton figure.
//!
//! cargo run --example render_label [out_dir]

use std::path::PathBuf;

use motionlabel::body_model::{build_template, joint_positions, recombine, ShapeParams, TemplateConfig};
use motionlabel::intrinsic::intrinsic_colors;
use motionlabel::pipeline::{reference_camera, CameraConfig};
use motionlabel::render::{make_label_image, project_vertices, rasterize_mesh, render_skeleton, write_lbl1, write_png, SkeletonFigureSpec};
use motionlabel::sequence::{synthetic_motion, Domain, SyntheticMotion};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("motionlabel-label"));
    std::fs::create_dir_all(&out)?;
    let template = build_template(&TemplateConfig::default())?;
    let beta = ShapeParams::new(vec![0.2, -0.2]);
    let motion = synthetic_motion(&template, "demo", Domain::Source, beta.beta.clone(), &SyntheticMotion::default());
    let theta = &motion.frames[12];

    let (_, colors) = intrinsic_colors(&motionlabel::body_model::apply_shape(&template, &beta)?)?;
    let camera = reference_camera(&template, &CameraConfig::default())?;
    let mesh = recombine(&template, &beta, theta)?;
    let mesh_img = rasterize_mesh(&mesh, &colors, &camera)?;

    let figure = SkeletonFigureSpec::for_template(&template, 4.0, 3.0);
    let joints = project_vertices(&camera, &joint_positions(&template, &beta, theta)?);
    let pose_img = render_skeleton(&joints, &figure, camera.width, camera.height)?;

    let label = make_label_image(&mesh_img, &pose_img)?;
    let covered = mesh_img.depth.as_ref().unwrap().iter().filter(|d| d.is_finite()).count();
    println!("{}x{} label, {} body pixels", label.width(), label.height(), covered);
    write_lbl1(&out.join("label.lbl1"), label.raster())?;
    write_png(&out.join("mesh.png"), &label.mesh_part())?;
    write_png(&out.join("pose.png"), &label.pose_part())?;
    println!("wrote {}", out.display());
    Ok(())
}
