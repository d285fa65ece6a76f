//! Reference implementations used as test oracles. They are written for
//! clarity, not speed, and share no code with the library beyond its data
//! types.
#![allow(dead_code)]

use motionlabel::mesh::{Face, Vec3};
use motionlabel::render::ProjectedPoint;

/// Row-major dense symmetric matrix.
#[derive(Debug, Clone)]
pub struct Dense {
    pub n: usize,
    pub a: Vec<f64>,
}

impl Dense {
    pub fn zeros(n: usize) -> Self {
        Self { n, a: vec![0.0; n * n] }
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        self.a[i * self.n + j] += v;
    }
}

fn angle_between(u: Vec3, v: Vec3) -> f64 {
    (u.dot(&v) / (u.norm() * v.norm())).clamp(-1.0, 1.0).acos()
}

/// Cotangent Laplacian assembled from corner angles, and lumped mass as a
/// third of each incident triangle's area.
pub fn cot_laplacian_dense(vertices: &[Vec3], faces: &[Face]) -> (Dense, Vec<f64>) {
    let n = vertices.len();
    let mut l = Dense::zeros(n);
    let mut mass = vec![0.0; n];
    for f in faces {
        for corner in 0..3 {
            let (o, a, b) = (f[corner], f[(corner + 1) % 3], f[(corner + 2) % 3]);
            let angle = angle_between(vertices[a] - vertices[o], vertices[b] - vertices[o]);
            let w = 0.5 / angle.tan();
            l.add(a, b, -w);
            l.add(b, a, -w);
            l.add(a, a, w);
            l.add(b, b, w);
        }
        let area = 0.5 * (vertices[f[1]] - vertices[f[0]]).cross(&(vertices[f[2]] - vertices[f[0]])).norm();
        for &v in f {
            mass[v] += area / 3.0;
        }
    }
    (l, mass)
}

/// Cyclic Jacobi eigen-decomposition. Returns ascending eigenvalues and the
/// matching eigenvectors.
pub fn jacobi_eigen(m: &Dense) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = m.n;
    let mut a = m.a.clone();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum();
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    if k != p && k != q {
                        let (akp, akq) = (a[k * n + p], a[k * n + q]);
                        a[k * n + p] = c * akp - s * akq;
                        a[p * n + k] = a[k * n + p];
                        a[k * n + q] = s * akp + c * akq;
                        a[q * n + k] = a[k * n + q];
                    }
                }
                a[p * n + p] -= t * apq;
                a[q * n + q] += t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for k in 0..n {
                    let (vkp, vkq) = (v[k * n + p], v[k * n + q]);
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].total_cmp(&a[j * n + j]));
    let values = order.iter().map(|&i| a[i * n + i]).collect();
    let vectors = order.iter().map(|&i| (0..n).map(|k| v[k * n + i]).collect()).collect();
    (values, vectors)
}

/// `M^-1/2 L M^-1/2` for diagonal `M`.
pub fn symmetric_reduction(l: &Dense, mass: &[f64]) -> Dense {
    let mut out = l.clone();
    for i in 0..l.n {
        for j in 0..l.n {
            out.a[i * l.n + j] /= (mass[i] * mass[j]).sqrt();
        }
    }
    out
}

/// The `k` generalized eigenvalues after the zero mode, via Jacobi.
pub fn jacobi_generalized(l: &Dense, mass: &[f64], k: usize) -> Vec<f64> {
    let (values, _) = jacobi_eigen(&symmetric_reduction(l, mass));
    values[1..=k].to_vec()
}

/// The same through nalgebra's dense symmetric solver.
pub fn nalgebra_generalized(l: &Dense, mass: &[f64], k: usize) -> Vec<f64> {
    let r = symmetric_reduction(l, mass);
    let m = nalgebra::DMatrix::from_row_slice(r.n, r.n, &r.a);
    let mut values: Vec<f64> = nalgebra::SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    values[1..=k].to_vec()
}

pub fn max_relative_error(got: &[f64], want: &[f64]) -> f64 {
    assert_eq!(got.len(), want.len());
    got.iter().zip(want).map(|(g, w)| ((g - w) / w).abs()).fold(0.0, f64::max)
}

/// One candidate fragment at a pixel center.
#[derive(Debug, Clone, Copy)]
pub struct Fragment {
    pub triangle: usize,
    pub depth: f64,
    pub rgb: [f64; 3],
}

fn edge(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
}

fn owns_boundary(a: [f64; 2], b: [f64; 2]) -> bool {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    dy < 0.0 || (dy == 0.0 && dx > 0.0)
}

/// Every triangle covering the center of pixel `(i, j)`, in face order.
///
/// Triangles are taken counter-clockwise in the image's y-down frame
/// (positive edge-function area) by exchanging the last two corners when
/// needed; a center exactly on an edge counts only for top and left edges.
pub fn fragments_at(
    points: &[ProjectedPoint],
    faces: &[Face],
    colors: &[[f64; 3]],
    perspective: bool,
    i: usize,
    j: usize,
) -> Vec<Fragment> {
    let p = [i as f64 + 0.5, j as f64 + 0.5];
    let mut out = Vec::new();
    for (t, f) in faces.iter().enumerate() {
        let mut idx = *f;
        if idx.iter().any(|&v| points[v].clipped) {
            continue;
        }
        let pos = |v: usize| [points[v].x, points[v].y];
        let mut area = edge(pos(idx[0]), pos(idx[1]), pos(idx[2]));
        if area < 0.0 {
            idx.swap(1, 2);
            area = -area;
        }
        if area == 0.0 || !area.is_finite() {
            continue;
        }
        let (a, b, c) = (pos(idx[0]), pos(idx[1]), pos(idx[2]));
        let w = [edge(b, c, p), edge(c, a, p), edge(a, b, p)];
        let owners = [owns_boundary(b, c), owns_boundary(c, a), owns_boundary(a, b)];
        if (0..3).any(|k| w[k] < 0.0 || (w[k] == 0.0 && !owners[k])) {
            continue;
        }
        let bary = [w[0] / area, w[1] / area, w[2] / area];
        let z = idx.map(|v| points[v].depth);
        let col = idx.map(|v| colors[v]);
        let (depth, rgb) = if perspective {
            let q = [bary[0] / z[0], bary[1] / z[1], bary[2] / z[2]];
            let depth = 1.0 / (q[0] + q[1] + q[2]);
            let rgb = [0, 1, 2].map(|ch| ((q[0] * col[0][ch] + q[1] * col[1][ch] + q[2] * col[2][ch]) * depth).clamp(0.0, 1.0));
            (depth, rgb)
        } else {
            let depth = bary[0] * z[0] + bary[1] * z[1] + bary[2] * z[2];
            let rgb = [0, 1, 2].map(|ch| (bary[0] * col[0][ch] + bary[1] * col[1][ch] + bary[2] * col[2][ch]).clamp(0.0, 1.0));
            (depth, rgb)
        };
        out.push(Fragment { triangle: t, depth, rgb });
    }
    out
}

/// Nearest fragment per pixel, earlier triangles winning ties.
pub fn winner(fragments: &[Fragment]) -> Option<Fragment> {
    let mut best: Option<Fragment> = None;
    for f in fragments {
        if best.is_none_or(|b| f.depth < b.depth) {
            best = Some(*f);
        }
    }
    best
}

/// Brute-force z-buffer: HWC color and per-pixel depth (+inf when empty).
pub fn raster_oracle(
    points: &[ProjectedPoint],
    faces: &[Face],
    colors: &[[f64; 3]],
    width: u32,
    height: u32,
    perspective: bool,
) -> (Vec<f64>, Vec<f64>) {
    let (w, h) = (width as usize, height as usize);
    let mut rgb = vec![0.0; 3 * w * h];
    let mut depth = vec![f64::INFINITY; w * h];
    for j in 0..h {
        for i in 0..w {
            if let Some(f) = winner(&fragments_at(points, faces, colors, perspective, i, j)) {
                depth[j * w + i] = f.depth;
                rgb[3 * (j * w + i)..3 * (j * w + i) + 3].copy_from_slice(&f.rgb);
            }
        }
    }
    (rgb, depth)
}

pub fn bits(values: &[f64]) -> Vec<u64> {
    values.iter().map(|v| v.to_bits()).collect()
}

/// SSIM computed window by window with explicit 2D Gaussian weights and
/// two-pass moments.
pub fn ssim_oracle(a: &[f64], b: &[f64], width: usize, height: usize, channels: usize) -> f64 {
    let gray = |img: &[f64]| -> Vec<f64> {
        (0..width * height)
            .map(|p| (0..channels).map(|c| img[p * channels + c]).sum::<f64>() / channels as f64)
            .collect()
    };
    let (ga, gb) = (gray(a), gray(b));
    let (size, sigma) = (11usize, 1.5f64);
    let r = (size / 2) as f64;
    let mut weights = vec![0.0; size * size];
    for y in 0..size {
        for x in 0..size {
            let (dx, dy) = (x as f64 - r, y as f64 - r);
            weights[y * size + x] = (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp();
        }
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    let (c1, c2) = (0.01f64.powi(2), 0.03f64.powi(2));

    let mut sum = 0.0;
    let mut count = 0;
    for y0 in 0..=height - size {
        for x0 in 0..=width - size {
            let px = |img: &[f64], x: usize, y: usize| img[(y0 + y) * width + x0 + x];
            let (mut ma, mut mb) = (0.0, 0.0);
            for y in 0..size {
                for x in 0..size {
                    ma += weights[y * size + x] * px(&ga, x, y);
                    mb += weights[y * size + x] * px(&gb, x, y);
                }
            }
            let (mut va, mut vb, mut cov) = (0.0, 0.0, 0.0);
            for y in 0..size {
                for x in 0..size {
                    let w = weights[y * size + x];
                    let (da, db) = (px(&ga, x, y) - ma, px(&gb, x, y) - mb);
                    va += w * da * da;
                    vb += w * db * db;
                    cov += w * da * db;
                }
            }
            sum += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            count += 1;
        }
    }
    sum / count as f64
}
