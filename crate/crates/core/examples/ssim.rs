//! SSIM and pixel L1 of a textured image against noisier copies of itself.
//!
//! cargo run --example ssim

use motionlabel::metrics::{pixel_l1, ssim, SsimConfig};
use motionlabel::render::RasterImage;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (w, h) = (64u32, 48u32);
    let mut clean = RasterImage::new(w, h, 3);
    for y in 0..h as usize {
        for x in 0..w as usize {
            let v = 0.5 + 0.25 * ((x as f64) * 0.3).sin() + 0.2 * ((y as f64) * 0.2).cos();
            clean.pixel_mut(x, y).copy_from_slice(&[v, 0.8 * v, 1.0 - v]);
        }
    }
    let cfg = SsimConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let noise: Vec<f64> = (0..clean.data.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    println!("noise   ssim     l1");
    for amp in [0.0, 0.02, 0.05, 0.1, 0.2, 0.4] {
        let mut noisy = clean.clone();
        for (v, n) in noisy.data.iter_mut().zip(&noise) {
            *v += amp * n;
        }
        println!("{amp:<6}  {:.5}  {:.4}", ssim(&clean, &noisy, &cfg)?, pixel_l1(&clean, &noisy)?);
    }
    Ok(())
}
