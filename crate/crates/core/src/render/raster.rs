//! Z-buffered triangle fill at pixel centers.
//!
//! A pixel `(i, j)` is sampled at `(i + 0.5, j + 0.5)`. Coverage uses edge
//! functions with a top-left rule so a center lying exactly on an edge shared
//! by two triangles is claimed by exactly one of them. Depth ties keep the
//! earlier triangle.

use rayon::prelude::*;

use super::camera::{project_vertices, Camera, ProjectedPoint};
use super::{RasterImage, RenderError};
use crate::body_model::PosedMesh;
use crate::intrinsic::IntrinsicColorMap;
use crate::mesh::Face;

/// `(b - a) x (p - a)`, positive when `p` is on the inner side of a
/// positively wound triangle.
#[inline]
pub fn edge_function(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
}

/// Whether an edge `a -> b` of a positively wound triangle owns centers lying
/// exactly on it.
#[inline]
pub fn is_top_left(a: [f64; 2], b: [f64; 2]) -> bool {
    let dx = b[0] - a[0];
    let dy = b[1] - a[1];
    (dy == 0.0 && dx > 0.0) || dy < 0.0
}

/// A triangle prepared for filling: positively wound, with per-vertex depth
/// and color.
#[derive(Debug, Clone)]
pub struct TriangleSetup {
    pub xy: [[f64; 2]; 3],
    pub depth: [f64; 3],
    pub color: [[f64; 3]; 3],
    pub area: f64,
    rows: (usize, usize),
    cols: (usize, usize),
}

impl TriangleSetup {
    /// `None` for zero-area triangles, clipped vertices, and triangles that
    /// cover no pixel center inside the image bounds.
    pub fn new(points: [ProjectedPoint; 3], color: [[f64; 3]; 3], width: u32, height: u32) -> Option<Self> {
        if points.iter().any(|p| p.clipped) {
            return None;
        }
        let mut xy = points.map(|p| [p.x, p.y]);
        let mut depth = points.map(|p| p.depth);
        let mut color = color;
        let mut area = edge_function(xy[0], xy[1], xy[2]);
        if area == 0.0 || !area.is_finite() {
            return None;
        }
        if area < 0.0 {
            xy.swap(1, 2);
            depth.swap(1, 2);
            color.swap(1, 2);
            area = -area;
        }
        let min_x = xy.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
        let max_x = xy.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
        let min_y = xy.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min);
        let max_y = xy.iter().map(|p| p[1]).fold(f64::NEG_INFINITY, f64::max);
        let cols = center_range(min_x, max_x, width)?;
        let rows = center_range(min_y, max_y, height)?;
        Some(Self {
            xy,
            depth,
            color,
            area,
            rows,
            cols,
        })
    }

    /// Barycentric weights of `p` if covered under the fill rule.
    #[inline]
    pub fn cover(&self, p: [f64; 2]) -> Option<[f64; 3]> {
        let [v0, v1, v2] = self.xy;
        let w = [edge_function(v1, v2, p), edge_function(v2, v0, p), edge_function(v0, v1, p)];
        let edges = [(v1, v2), (v2, v0), (v0, v1)];
        for k in 0..3 {
            if w[k] < 0.0 || (w[k] == 0.0 && !is_top_left(edges[k].0, edges[k].1)) {
                return None;
            }
        }
        Some([w[0] / self.area, w[1] / self.area, w[2] / self.area])
    }

    /// Interpolated depth and color; perspective-correct when `perspective`.
    #[inline]
    pub fn shade(&self, b: [f64; 3], perspective: bool) -> (f64, [f64; 3]) {
        let mut rgb = [0.0; 3];
        if perspective {
            let q = [b[0] / self.depth[0], b[1] / self.depth[1], b[2] / self.depth[2]];
            let z = 1.0 / (q[0] + q[1] + q[2]);
            for (c, out) in rgb.iter_mut().enumerate() {
                let s = q[0] * self.color[0][c] + q[1] * self.color[1][c] + q[2] * self.color[2][c];
                *out = (s * z).clamp(0.0, 1.0);
            }
            (z, rgb)
        } else {
            let z = b[0] * self.depth[0] + b[1] * self.depth[1] + b[2] * self.depth[2];
            for (c, out) in rgb.iter_mut().enumerate() {
                let s = b[0] * self.color[0][c] + b[1] * self.color[1][c] + b[2] * self.color[2][c];
                *out = s.clamp(0.0, 1.0);
            }
            (z, rgb)
        }
    }
}

/// Indices `i` with `lo <= i + 0.5 <= hi`, clamped to `[0, n)`.
fn center_range(lo: f64, hi: f64, n: u32) -> Option<(usize, usize)> {
    let first = (lo - 0.5).ceil().max(0.0);
    let last = (hi - 0.5).floor().min(n as f64 - 1.0);
    if !(first <= last) {
        return None;
    }
    Some((first as usize, last as usize))
}

/// Fills projected triangles into a 3-channel image with a depth buffer.
/// Triangles are considered in slice order; rows are filled in parallel.
pub fn rasterize_triangles(
    points: &[ProjectedPoint],
    faces: &[Face],
    colors: &[[f64; 3]],
    width: u32,
    height: u32,
    perspective: bool,
) -> RasterImage {
    let tris: Vec<TriangleSetup> = faces
        .iter()
        .filter_map(|f| {
            TriangleSetup::new(
                [points[f[0]], points[f[1]], points[f[2]]],
                [colors[f[0]], colors[f[1]], colors[f[2]]],
                width,
                height,
            )
        })
        .collect();

    let w = width as usize;
    let mut image = RasterImage::new(width, height, 3);
    let mut depth = vec![f64::INFINITY; w * height as usize];
    image
        .data
        .par_chunks_mut(3 * w)
        .zip(depth.par_chunks_mut(w))
        .enumerate()
        .for_each(|(j, (row, zrow))| {
            let py = j as f64 + 0.5;
            for t in tris.iter().filter(|t| t.rows.0 <= j && j <= t.rows.1) {
                for i in t.cols.0..=t.cols.1 {
                    let Some(b) = t.cover([i as f64 + 0.5, py]) else { continue };
                    let (z, rgb) = t.shade(b, perspective);
                    if z < zrow[i] {
                        zrow[i] = z;
                        row[3 * i..3 * i + 3].copy_from_slice(&rgb);
                    }
                }
            }
        });
    image.depth = Some(depth);
    image
}

/// Projects and z-buffers an intrinsically colored mesh.
pub fn rasterize_mesh(mesh: &PosedMesh, colors: &IntrinsicColorMap, camera: &Camera) -> Result<RasterImage, RenderError> {
    if colors.len() != mesh.vertices.len() {
        return Err(RenderError::SizeMismatch(format!(
            "{} colors for {} vertices",
            colors.len(),
            mesh.vertices.len()
        )));
    }
    camera.validate()?;
    let points = project_vertices(camera, &mesh.vertices);
    Ok(rasterize_triangles(
        &points,
        &mesh.faces,
        &colors.colors,
        camera.width,
        camera.height,
        camera.is_perspective(),
    ))
}
