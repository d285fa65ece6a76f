//! Smallest non-trivial Laplace-Beltrami eigenpairs of the template, mapped
//! to RGB and cached in an EIGB/1 sidecar.
//!
//! cargo run --example intrinsic_colors [out_dir]

use std::path::PathBuf;
use std::time::Instant;

use motionlabel::body_model::{apply_shape, build_template, TemplateConfig};
use motionlabel::intrinsic::{intrinsic_colors, load_or_compute};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("motionlabel-intrinsic"));
    std::fs::create_dir_all(&out)?;
    let template = build_template(&TemplateConfig::default())?;
    let rest = apply_shape(&template, &template.zero_shape())?;

    let start = Instant::now();
    let (basis, colors) = intrinsic_colors(&rest)?;
    let d = &basis.diagnostics;
    println!(
        "{} vertices: eigenvalues {:?} via {:?} in {} iterations, max residual {:.1e}, {:.2?}",
        rest.vertex_count(),
        basis.eigenvalues,
        d.method,
        d.iterations,
        d.max_residual,
        start.elapsed()
    );
    for i in 0..basis.len() {
        for j in 0..basis.len() {
            print!("{:+.2e} ", basis.mass_inner(i, j));
        }
        println!();
    }

    // Colored point cloud for inspection in any OBJ viewer that reads vertex colors.
    let mut obj = String::new();
    for (v, c) in rest.vertices.iter().zip(&colors.colors) {
        obj += &format!("v {} {} {} {} {} {}\n", v.x, v.y, v.z, c[0], c[1], c[2]);
    }
    for f in rest.faces.iter() {
        obj += &format!("f {} {} {}\n", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    std::fs::write(out.join("colored.obj"), obj)?;

    let cache = out.join("rest.eigb");
    let _ = std::fs::remove_file(&cache);
    load_or_compute(&cache, &rest)?;
    let start = Instant::now();
    let cached = load_or_compute(&cache, &rest)?;
    assert_eq!(cached.colors, colors);
    println!("cache reload {:.2?}; wrote {}", start.elapsed(), out.display());
    Ok(())
}
