pub mod body_model;
pub mod format;
pub mod intrinsic;
pub mod mesh;
pub mod metrics;
pub mod objectives;
pub mod pipeline;
pub mod render;
pub mod sequence;
pub mod transfer_prep;
