//! Label-image rendering: the z-buffered projection of the intrinsically
//! colored mesh, the 2D skeleton figure, and their 6-channel stack.

mod camera;
mod raster;
mod skeleton;

use std::fs;
use std::io::Cursor;
use std::path::Path;

use thiserror::Error;

use crate::format::{ByteReader, FormatError};

pub use camera::{project_vertices, Camera, CameraKind, ProjectedPoint, Projection, NEAR_PLANE};
pub use raster::{edge_function, is_top_left, rasterize_mesh, rasterize_triangles, TriangleSetup};
pub use skeleton::{palette_color, render_skeleton, segment_distance_sq, SkeletonFigureSpec, PALETTE};

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("invalid camera: {0}")]
    InvalidCamera(String),
    #[error("invalid skeleton figure: {0}")]
    InvalidSkeleton(String),
    #[error("size mismatch: {0}")]
    SizeMismatch(String),
    #[error(transparent)]
    Format(#[from] FormatError),
}

/// Row-major, channel-interleaved float image with an optional depth buffer
/// (`+inf` where nothing was drawn).
#[derive(Debug, Clone, PartialEq)]
pub struct RasterImage {
    pub width: u32,
    pub height: u32,
    pub channels: usize,
    pub data: Vec<f64>,
    pub depth: Option<Vec<f64>>,
}

impl RasterImage {
    pub fn new(width: u32, height: u32, channels: usize) -> Self {
        Self {
            width,
            height,
            channels,
            data: vec![0.0; width as usize * height as usize * channels],
            depth: None,
        }
    }

    pub fn filled(width: u32, height: u32, channels: usize, value: f64) -> Self {
        let mut img = Self::new(width, height, channels);
        img.data.iter_mut().for_each(|v| *v = value);
        img
    }

    #[inline]
    fn offset(&self, x: usize, y: usize) -> usize {
        (y * self.width as usize + x) * self.channels
    }

    pub fn pixel(&self, x: usize, y: usize) -> &[f64] {
        let o = self.offset(x, y);
        &self.data[o..o + self.channels]
    }

    pub fn pixel_mut(&mut self, x: usize, y: usize) -> &mut [f64] {
        let o = self.offset(x, y);
        let c = self.channels;
        &mut self.data[o..o + c]
    }

    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[self.offset(x, y) + c]
    }

    pub fn same_shape(&self, other: &RasterImage) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    /// Channel-mean intensity plane.
    pub fn grayscale(&self) -> Vec<f64> {
        self.data
            .chunks_exact(self.channels)
            .map(|px| px.iter().sum::<f64>() / self.channels as f64)
            .collect()
    }

    /// Channels `range` as a new image (no depth).
    pub fn select_channels(&self, first: usize, count: usize) -> RasterImage {
        let mut out = RasterImage::new(self.width, self.height, count);
        for (dst, src) in out.data.chunks_exact_mut(count).zip(self.data.chunks_exact(self.channels)) {
            dst.copy_from_slice(&src[first..first + count]);
        }
        out
    }
}

/// 8-bit RGB PNG: each value `v` becomes `floor(v * 255 + 0.5)`.
pub fn encode_png(img: &RasterImage) -> Result<Vec<u8>, FormatError> {
    if img.channels != 3 {
        return Err(FormatError::Png(format!("PNG export needs 3 channels, image has {}", img.channels)));
    }
    let bytes: Vec<u8> = img.data.iter().map(|v| (v * 255.0 + 0.5).floor().clamp(0.0, 255.0) as u8).collect();
    let buffer = image::RgbImage::from_raw(img.width, img.height, bytes).expect("buffer sized to image");
    let mut out = Cursor::new(Vec::new());
    buffer
        .write_to(&mut out, image::ImageFormat::Png)
        .map_err(|e| FormatError::Png(e.to_string()))?;
    Ok(out.into_inner())
}

pub fn decode_png(bytes: &[u8]) -> Result<RasterImage, FormatError> {
    let decoded = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)
        .map_err(|e| FormatError::Png(e.to_string()))?
        .to_rgb8();
    let (w, h) = decoded.dimensions();
    Ok(RasterImage {
        width: w,
        height: h,
        channels: 3,
        data: decoded.into_raw().into_iter().map(|b| b as f64 / 255.0).collect(),
        depth: None,
    })
}

pub fn write_png(path: &Path, img: &RasterImage) -> Result<(), FormatError> {
    fs::write(path, encode_png(img)?)?;
    Ok(())
}

pub fn read_png(path: &Path) -> Result<RasterImage, FormatError> {
    decode_png(&fs::read(path)?)
}

pub const LBL1_MAGIC: &[u8; 4] = b"LBL1";

/// `LBL1` tensor: magic, u32 LE width, height, channels, then planar f32 LE
/// (channel-major, then rows, then columns).
pub fn encode_lbl1(img: &RasterImage) -> Vec<u8> {
    let (w, h, c) = (img.width as usize, img.height as usize, img.channels);
    let mut out = Vec::with_capacity(16 + 4 * w * h * c);
    out.extend_from_slice(LBL1_MAGIC);
    for v in [img.width, img.height, c as u32] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for ch in 0..c {
        for px in img.data.chunks_exact(c) {
            out.extend_from_slice(&(px[ch] as f32).to_le_bytes());
        }
    }
    out
}

pub fn decode_lbl1(bytes: &[u8]) -> Result<RasterImage, FormatError> {
    let mut r = ByteReader::new(bytes);
    let magic = r.take(4)?;
    if magic != LBL1_MAGIC {
        return Err(FormatError::SchemaVersion {
            expected: "LBL1".into(),
            found: String::from_utf8_lossy(magic).into_owned(),
        });
    }
    let (w, h, c) = (r.u32()?, r.u32()?, r.u32()? as usize);
    let plane = w as usize * h as usize;
    if bytes.len() - 16 != 4 * plane * c {
        return Err(FormatError::Binary(format!(
            "{w}x{h}x{c} tensor needs {} payload bytes, found {}",
            4 * plane * c,
            bytes.len() - 16
        )));
    }
    let mut img = RasterImage::new(w, h, c);
    for ch in 0..c {
        for p in 0..plane {
            let v = r.f32()? as f64;
            if !v.is_finite() {
                return Err(FormatError::Binary(format!("non-finite value in channel {ch}")));
            }
            img.data[p * c + ch] = v;
        }
    }
    r.finish()?;
    Ok(img)
}

pub fn write_lbl1(path: &Path, img: &RasterImage) -> Result<(), FormatError> {
    fs::write(path, encode_lbl1(img))?;
    Ok(())
}

pub fn read_lbl1(path: &Path) -> Result<RasterImage, FormatError> {
    decode_lbl1(&fs::read(path)?)
}

/// Six channels: mesh projection (0-2) then pose figure (3-5).
#[derive(Debug, Clone, PartialEq)]
pub struct LabelImage {
    image: RasterImage,
}

impl LabelImage {
    pub fn zeros(width: u32, height: u32) -> Self {
        Self {
            image: RasterImage::new(width, height, 6),
        }
    }

    pub fn from_raster(image: RasterImage) -> Result<Self, RenderError> {
        if image.channels != 6 {
            return Err(RenderError::SizeMismatch(format!(
                "label image needs 6 channels, got {}",
                image.channels
            )));
        }
        Ok(Self { image })
    }

    pub fn raster(&self) -> &RasterImage {
        &self.image
    }

    pub fn into_raster(self) -> RasterImage {
        self.image
    }

    pub fn width(&self) -> u32 {
        self.image.width
    }

    pub fn height(&self) -> u32 {
        self.image.height
    }

    pub fn mesh_part(&self) -> RasterImage {
        self.image.select_channels(0, 3)
    }

    pub fn pose_part(&self) -> RasterImage {
        self.image.select_channels(3, 3)
    }
}

pub fn make_label_image(mesh_img: &RasterImage, pose_img: &RasterImage) -> Result<LabelImage, RenderError> {
    if mesh_img.channels != 3 || pose_img.channels != 3 {
        return Err(RenderError::SizeMismatch(format!(
            "both halves need 3 channels, got {} and {}",
            mesh_img.channels, pose_img.channels
        )));
    }
    if mesh_img.width != pose_img.width || mesh_img.height != pose_img.height {
        return Err(RenderError::SizeMismatch(format!(
            "{}x{} mesh image vs {}x{} pose image",
            mesh_img.width, mesh_img.height, pose_img.width, pose_img.height
        )));
    }
    let mut image = RasterImage::new(mesh_img.width, mesh_img.height, 6);
    for ((dst, a), b) in image
        .data
        .chunks_exact_mut(6)
        .zip(mesh_img.data.chunks_exact(3))
        .zip(pose_img.data.chunks_exact(3))
    {
        dst[..3].copy_from_slice(a);
        dst[3..].copy_from_slice(b);
    }
    Ok(LabelImage { image })
}
