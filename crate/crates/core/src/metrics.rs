//! Structural similarity over valid (unpadded) Gaussian windows, plus mean
//! absolute pixel difference.

use thiserror::Error;

use crate::render::RasterImage;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("images differ in shape: {0}")]
    ShapeMismatch(String),
    #[error("{width}x{height} image is smaller than the {window}x{window} window")]
    TooSmall { width: u32, height: u32, window: usize },
    #[error("invalid SSIM configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsimConfig {
    pub window: usize,
    pub sigma: f64,
    pub k1: f64,
    pub k2: f64,
    pub dynamic_range: f64,
}

impl Default for SsimConfig {
    fn default() -> Self {
        Self {
            window: 11,
            sigma: 1.5,
            k1: 0.01,
            k2: 0.03,
            dynamic_range: 1.0,
        }
    }
}

impl SsimConfig {
    fn validate(&self) -> Result<(), MetricsError> {
        let ok = self.window >= 1
            && self.window % 2 == 1
            && [self.sigma, self.k1, self.k2, self.dynamic_range]
                .iter()
                .all(|v| *v > 0.0 && v.is_finite());
        if !ok {
            return Err(MetricsError::InvalidConfig(format!("{self:?}")));
        }
        Ok(())
    }

    /// Normalized 1D Gaussian taps; the 2D window is their outer product.
    pub fn kernel(&self) -> Vec<f64> {
        let r = (self.window / 2) as f64;
        let raw: Vec<f64> = (0..self.window)
            .map(|i| {
                let d = i as f64 - r;
                (-(d * d) / (2.0 * self.sigma * self.sigma)).exp()
            })
            .collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|v| v / total).collect()
    }
}

/// Valid-mode separable filtering of a `w x h` plane.
fn filter_valid(plane: &[f64], w: usize, h: usize, k: &[f64]) -> Vec<f64> {
    let n = k.len();
    let (ow, oh) = (w - n + 1, h - n + 1);
    let mut rows = vec![0.0; ow * h];
    for y in 0..h {
        for x in 0..ow {
            rows[y * ow + x] = (0..n).map(|t| k[t] * plane[y * w + x + t]).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = (0..n).map(|t| k[t] * rows[(y + t) * ow + x]).sum();
        }
    }
    out
}

/// Per-window SSIM values (row-major over valid window positions).
pub fn ssim_map(a: &RasterImage, b: &RasterImage, cfg: &SsimConfig) -> Result<Vec<f64>, MetricsError> {
    cfg.validate()?;
    if !a.same_shape(b) {
        return Err(MetricsError::ShapeMismatch(format!(
            "{}x{}x{} vs {}x{}x{}",
            a.width, a.height, a.channels, b.width, b.height, b.channels
        )));
    }
    if (a.width as usize) < cfg.window || (a.height as usize) < cfg.window {
        return Err(MetricsError::TooSmall {
            width: a.width,
            height: a.height,
            window: cfg.window,
        });
    }
    let (w, h) = (a.width as usize, a.height as usize);
    let ga = a.grayscale();
    let gb = b.grayscale();
    let k = cfg.kernel();
    let sq = |p: &[f64]| p.iter().map(|v| v * v).collect::<Vec<_>>();
    let prod: Vec<f64> = ga.iter().zip(&gb).map(|(x, y)| x * y).collect();
    let mu_a = filter_valid(&ga, w, h, &k);
    let mu_b = filter_valid(&gb, w, h, &k);
    let ea2 = filter_valid(&sq(&ga), w, h, &k);
    let eb2 = filter_valid(&sq(&gb), w, h, &k);
    let eab = filter_valid(&prod, w, h, &k);
    let c1 = (cfg.k1 * cfg.dynamic_range).powi(2);
    let c2 = (cfg.k2 * cfg.dynamic_range).powi(2);
    Ok((0..mu_a.len())
        .map(|i| ssim_index(mu_a[i], mu_b[i], ea2[i], eb2[i], eab[i], c1, c2))
        .collect())
}

/// SSIM from window moments.
#[inline]
pub fn ssim_index(mu_a: f64, mu_b: f64, ea2: f64, eb2: f64, eab: f64, c1: f64, c2: f64) -> f64 {
    let var_a = ea2 - mu_a * mu_a;
    let var_b = eb2 - mu_b * mu_b;
    let cov = eab - mu_a * mu_b;
    ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) / ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2))
}

/// Mean SSIM over valid windows of the channel-mean intensity.
pub fn ssim(a: &RasterImage, b: &RasterImage, cfg: &SsimConfig) -> Result<f64, MetricsError> {
    let map = ssim_map(a, b, cfg)?;
    Ok(map.iter().sum::<f64>() / map.len() as f64)
}

/// Mean absolute difference over all pixels and channels.
pub fn pixel_l1(a: &RasterImage, b: &RasterImage) -> Result<f64, MetricsError> {
    if !a.same_shape(b) {
        return Err(MetricsError::ShapeMismatch(format!(
            "{}x{}x{} vs {}x{}x{}",
            a.width, a.height, a.channels, b.width, b.height, b.channels
        )));
    }
    Ok(a.data.iter().zip(&b.data).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.data.len() as f64)
}
