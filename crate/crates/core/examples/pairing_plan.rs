//! Pairing plans for the three training and inference stages.
//!
//! cargo run --example pairing_plan

use motionlabel::transfer_prep::{make_pairing_plan, plan_to_string, Stage};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let source: Vec<String> = (0..4).map(|t| format!("dancer/frame_{t:05}")).collect();
    let target: Vec<String> = (0..3).map(|t| format!("actor/frame_{t:05}")).collect();
    for stage in [Stage::PretrainMt, Stage::TrainDe, Stage::Transfer] {
        let plan = make_pairing_plan(stage, &source, &target, 42)?;
        println!("== {stage:?}: {} records", plan.records.len());
        for r in &plan.records {
            println!(
                "  appearance {:<22} pose {:<22} {:?} ground truth {}",
                r.appearance.frame,
                r.pose.frame,
                r.role,
                r.ground_truth.as_ref().map_or("-", |g| g.frame.as_str())
            );
        }
    }
    print!(
        "{}",
        plan_to_string(&make_pairing_plan(Stage::Transfer, &source[..1], &target[..1], 0)?)?
    );
    Ok(())
}
