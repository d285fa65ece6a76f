//! Hard-edged 2D pose figure: capsule limbs, then joint discs on top.

use super::camera::ProjectedPoint;
use super::{RasterImage, RenderError};
use crate::body_model::BodyTemplate;

/// Fixed limb/joint palette (8-bit sRGB values, used as-is in [0, 1] space).
pub const PALETTE: [[u8; 3]; 20] = [
    [230, 25, 75],
    [60, 180, 75],
    [255, 225, 25],
    [0, 130, 200],
    [245, 130, 48],
    [145, 30, 180],
    [70, 240, 240],
    [240, 50, 230],
    [210, 245, 60],
    [250, 190, 212],
    [0, 128, 128],
    [220, 190, 255],
    [170, 110, 40],
    [255, 250, 200],
    [128, 0, 0],
    [170, 255, 195],
    [128, 128, 0],
    [255, 215, 180],
    [0, 0, 128],
    [128, 128, 128],
];

pub fn palette_color(i: usize) -> [f64; 3] {
    PALETTE[i % PALETTE.len()].map(|c| c as f64 / 255.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonFigureSpec {
    pub limbs: Vec<(usize, usize)>,
    pub limb_colors: Vec<[f64; 3]>,
    pub joint_colors: Vec<[f64; 3]>,
    /// Full capsule width in pixels.
    pub thickness: f64,
    pub joint_radius: f64,
}

impl SkeletonFigureSpec {
    /// One limb per bone in joint order; limb `i` and joint `j` take palette
    /// entries `i` and `j`.
    pub fn for_template(template: &BodyTemplate, thickness: f64, joint_radius: f64) -> Self {
        let limbs = template.bones();
        Self {
            limb_colors: (0..limbs.len()).map(palette_color).collect(),
            joint_colors: (0..template.joint_count()).map(palette_color).collect(),
            limbs,
            thickness,
            joint_radius,
        }
    }

    pub fn validate(&self, joint_count: usize) -> Result<(), RenderError> {
        if !(self.thickness >= 1.0) || !(self.joint_radius >= 0.0) {
            return Err(RenderError::InvalidSkeleton(format!(
                "thickness {} must be >= 1 and radius {} >= 0",
                self.thickness, self.joint_radius
            )));
        }
        if self.limb_colors.len() != self.limbs.len() {
            return Err(RenderError::InvalidSkeleton("one color per limb required".into()));
        }
        if self.joint_colors.len() != joint_count {
            return Err(RenderError::InvalidSkeleton(format!(
                "{} joint colors for {joint_count} joints",
                self.joint_colors.len()
            )));
        }
        if let Some(&(a, b)) = self.limbs.iter().find(|(a, b)| *a >= joint_count || *b >= joint_count) {
            return Err(RenderError::InvalidSkeleton(format!("limb ({a}, {b}) out of range")));
        }
        Ok(())
    }
}

/// Squared distance from `p` to segment `ab`.
pub fn segment_distance_sq(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len_sq = d[0] * d[0] + d[1] * d[1];
    let t = if len_sq > 0.0 {
        (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len_sq).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let q = [a[0] + t * d[0] - p[0], a[1] + t * d[1] - p[1]];
    q[0] * q[0] + q[1] * q[1]
}

fn paint_where(img: &mut RasterImage, bounds: [f64; 4], color: [f64; 3], inside: impl Fn([f64; 2]) -> bool) {
    let [x0, x1, y0, y1] = bounds;
    let w = img.width as f64;
    let h = img.height as f64;
    let i0 = (x0 - 0.5).ceil().max(0.0);
    let i1 = (x1 - 0.5).floor().min(w - 1.0);
    let j0 = (y0 - 0.5).ceil().max(0.0);
    let j1 = (y1 - 0.5).floor().min(h - 1.0);
    if !(i0 <= i1 && j0 <= j1) {
        return;
    }
    for j in j0 as usize..=j1 as usize {
        for i in i0 as usize..=i1 as usize {
            if inside([i as f64 + 0.5, j as f64 + 0.5]) {
                img.pixel_mut(i, j).copy_from_slice(&color);
            }
        }
    }
}

/// Draws limbs in list order, then joints. Clipped joints and limbs touching
/// them are skipped.
pub fn render_skeleton(joints: &[ProjectedPoint], spec: &SkeletonFigureSpec, width: u32, height: u32) -> Result<RasterImage, RenderError> {
    spec.validate(joints.len())?;
    let mut img = RasterImage::new(width, height, 3);
    let r = spec.thickness / 2.0;
    let r_sq = r * r;
    for (&(a, b), &color) in spec.limbs.iter().zip(&spec.limb_colors) {
        let (pa, pb) = (joints[a], joints[b]);
        if pa.clipped || pb.clipped {
            continue;
        }
        let (a, b) = ([pa.x, pa.y], [pb.x, pb.y]);
        let bounds = [a[0].min(b[0]) - r, a[0].max(b[0]) + r, a[1].min(b[1]) - r, a[1].max(b[1]) + r];
        paint_where(&mut img, bounds, color, |p| segment_distance_sq(p, a, b) <= r_sq);
    }
    let jr = spec.joint_radius;
    for (p, &color) in joints.iter().zip(&spec.joint_colors) {
        if p.clipped {
            continue;
        }
        let c = [p.x, p.y];
        paint_where(&mut img, [c[0] - jr, c[0] + jr, c[1] - jr, c[1] + jr], color, |q| {
            let d = [q[0] - c[0], q[1] - c[1]];
            d[0] * d[0] + d[1] * d[1] <= jr * jr
        });
    }
    Ok(img)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(x: f64, y: f64) -> ProjectedPoint {
        ProjectedPoint {
            x,
            y,
            depth: 1.0,
            clipped: false,
        }
    }

    #[test]
    fn lone_joint_is_a_disc() {
        let spec = SkeletonFigureSpec {
            limbs: vec![],
            limb_colors: vec![],
            joint_colors: vec![palette_color(0)],
            thickness: 1.0,
            joint_radius: 3.0,
        };
        let img = render_skeleton(&[at(16.0, 16.0)], &spec, 32, 32).unwrap();
        for j in 0..32 {
            for i in 0..32 {
                let (dx, dy) = (i as f64 + 0.5 - 16.0, j as f64 + 0.5 - 16.0);
                let expect = if dx * dx + dy * dy <= 9.0 { palette_color(0) } else { [0.0; 3] };
                assert_eq!(img.pixel(i, j), &expect);
            }
        }
    }

    #[test]
    fn horizontal_limb_covers_its_band() {
        let spec = SkeletonFigureSpec {
            limbs: vec![(0, 1)],
            limb_colors: vec![palette_color(3)],
            joint_colors: vec![[0.0; 3]; 2],
            thickness: 3.0,
            joint_radius: 0.0,
        };
        let (a, b) = ([10.0, 20.0], [50.0, 20.0]);
        let img = render_skeleton(&[at(a[0], a[1]), at(b[0], b[1])], &spec, 64, 40).unwrap();
        for j in 0..40 {
            for i in 0..64 {
                let p = [i as f64 + 0.5, j as f64 + 0.5];
                let on = segment_distance_sq(p, a, b) <= 1.5 * 1.5;
                // Zero-radius joint discs only touch centers exactly on a joint.
                let disc = p == a || p == b;
                if !disc {
                    assert_eq!(img.pixel(i, j) == palette_color(3), on, "pixel {i},{j}");
                }
            }
        }
    }

    #[test]
    fn later_limbs_overdraw_earlier() {
        let spec = SkeletonFigureSpec {
            limbs: vec![(0, 1), (1, 0)],
            limb_colors: vec![palette_color(1), palette_color(2)],
            joint_colors: vec![palette_color(5); 2],
            thickness: 2.0,
            joint_radius: 1.0,
        };
        let img = render_skeleton(&[at(2.0, 5.0), at(20.0, 5.0)], &spec, 24, 10).unwrap();
        assert_eq!(img.pixel(10, 4), &palette_color(2));
        assert_eq!(img.pixel(1, 4), &palette_color(5));
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut spec = SkeletonFigureSpec {
            limbs: vec![(0, 3)],
            limb_colors: vec![[1.0; 3]],
            joint_colors: vec![[1.0; 3]; 2],
            thickness: 2.0,
            joint_radius: 1.0,
        };
        assert!(render_skeleton(&[at(0.0, 0.0), at(1.0, 1.0)], &spec, 4, 4).is_err());
        spec.limbs = vec![(0, 1)];
        spec.thickness = 0.5;
        assert!(render_skeleton(&[at(0.0, 0.0), at(1.0, 1.0)], &spec, 4, 4).is_err());
    }
}
