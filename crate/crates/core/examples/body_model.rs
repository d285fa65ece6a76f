//! Builds the procedural template, reshapes and poses it, and writes both
//! the template assets and the posed mesh as OBJ.
//!
//! cargo run --example body_model [out_dir]

use std::path::PathBuf;

use motionlabel::body_model::{build_template, read_template, recombine, write_template, PoseParams, ShapeParams, TemplateConfig};
use motionlabel::mesh::{write_obj, Vec3};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("motionlabel-body"));
    std::fs::create_dir_all(&out)?;

    let template = build_template(&TemplateConfig::default())?;
    let report = template.topology_report();
    println!(
        "template: {} vertices, {} faces, {} joints, {} shape directions, genus {}",
        template.vertex_count(),
        template.faces().len(),
        template.joint_count(),
        template.shape_count(),
        report.genus()
    );

    let (obj, sidecar) = (out.join("template.obj"), out.join("template.btpl.json"));
    write_template(&template, &obj, &sidecar)?;
    assert_eq!(read_template(&obj, &sidecar)?, template);

    let tall = ShapeParams::new(vec![0.5, 0.3]);
    let mut pose = PoseParams::identity(template.joint_count());
    pose.theta[template.joint_index("left_shoulder").unwrap()] = Vec3::new(0.0, 0.0, -1.1);
    pose.theta[template.joint_index("right_elbow").unwrap()] = Vec3::new(0.0, 1.2, 0.0);
    pose.theta[template.joint_index("left_knee").unwrap()] = Vec3::new(0.9, 0.0, 0.0);
    let posed = recombine(&template, &tall, &pose)?;
    std::fs::write(out.join("posed.obj"), write_obj(&posed.vertices, &posed.faces))?;
    println!("wrote {}", out.display());
    Ok(())
}
