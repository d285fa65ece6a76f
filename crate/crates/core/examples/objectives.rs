//! Adversarial, perceptual and feature-matching objective values on small
//! hand-made inputs.
//!
//! cargo run --example objectives

use motionlabel::objectives::{
    de_full_objective, feature_matching, feature_matching_multiscale, gan_objective, mt_full_objective, perceptual_l1, DeTerms,
    FeatureStack, LossWeights, MtTerms, ScoreBatch,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let undecided = ScoreBatch::new(vec![0.5; 4], vec![0.5; 4])?;
    let confident = ScoreBatch::new(vec![0.95, 0.9], vec![0.05, 0.1])?;
    println!("gan objective, undecided discriminator: {:.6}", gan_objective(&undecided));
    println!("gan objective, confident discriminator: {:.6}", gan_objective(&confident));

    let real = FeatureStack::new(vec![vec![1.0, 2.0], vec![0.0, 0.0, 0.0, 4.0]])?;
    let fake = FeatureStack::new(vec![vec![0.0, 3.0], vec![0.0, 0.0, 0.0, 0.0]])?;
    println!("perceptual L1: {}", perceptual_l1(&real, &fake)?);
    println!("feature matching: {}", feature_matching(&real, &fake)?);
    println!(
        "feature matching over 3 discriminator scales: {}",
        feature_matching_multiscale(&[real.clone(), real.clone(), real.clone()], &[fake.clone(), fake.clone(), fake])?
    );

    let w = LossWeights::default();
    let unit = MtTerms {
        gan_s: 0.0,
        gan_t: 0.0,
        perceptual: 1.0,
        fm_s: 1.0,
        fm_t: 1.0,
    };
    println!("lambda_p = {}, lambda_fm = {}", w.lambda_p, w.lambda_fm);
    println!("motion-transfer objective on unit terms: {}", mt_full_objective(&unit, &w));
    let de = DeTerms {
        gan: -1.0,
        perceptual: 0.2,
        fm: 0.1,
    };
    println!("detail-enhancement objective: {}", de_full_objective(&de, &w));
    Ok(())
}
