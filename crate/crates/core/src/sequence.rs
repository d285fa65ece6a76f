//! Motion sequences, per-frame skinning, temporal smoothing and adjacent
//! label pairs.

use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::body_model::{skin, BodyTemplate, ModelError, PoseParams, PosedMesh, ShapeParams};
use crate::format::{from_document, read_text, to_document, FormatError};
use crate::mesh::Vec3;
use crate::render::LabelImage;

pub const MSEQ_FORMAT: &str = "MSEQ/1";

#[derive(Debug, Error)]
pub enum SequenceError {
    #[error("sequence has no frames")]
    Empty,
    #[error("frame {frame} has {found} joints, expected {expected}")]
    JointCount { frame: usize, expected: usize, found: usize },
    #[error("invalid sequence: {0}")]
    Invalid(String),
    #[error("smoothing window {window} must be odd and within [1, {max}]")]
    InvalidWindow { window: usize, max: usize },
    #[error("frame {0} does not share the sequence connectivity")]
    Connectivity(usize),
    #[error("label image {index} is {found:?}, expected {expected:?}")]
    LabelSize {
        index: usize,
        expected: (u32, u32),
        found: (u32, u32),
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Format(#[from] FormatError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Source,
    Target,
}

impl Domain {
    pub fn other(self) -> Self {
        match self {
            Domain::Source => Domain::Target,
            Domain::Target => Domain::Source,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MotionSequence {
    pub subject: String,
    pub domain: Domain,
    pub frame_rate: f64,
    pub beta: Vec<f64>,
    pub frames: Vec<PoseParams>,
}

impl MotionSequence {
    pub fn validate(&self) -> Result<(), SequenceError> {
        let first = self.frames.first().ok_or(SequenceError::Empty)?;
        let joints = first.theta.len();
        for (i, f) in self.frames.iter().enumerate() {
            if f.theta.len() != joints {
                return Err(SequenceError::JointCount {
                    frame: i,
                    expected: joints,
                    found: f.theta.len(),
                });
            }
            let finite = f
                .theta
                .iter()
                .chain(std::iter::once(&f.root_translation))
                .all(|v| v.iter().all(|c| c.is_finite()));
            if !finite {
                return Err(SequenceError::Invalid(format!("frame {i} has a non-finite value")));
            }
        }
        if !(self.frame_rate > 0.0) || !self.frame_rate.is_finite() {
            return Err(SequenceError::Invalid(format!("frame rate {} must be positive", self.frame_rate)));
        }
        if !self.beta.iter().all(|b| b.is_finite()) {
            return Err(SequenceError::Invalid("non-finite shape coefficient".into()));
        }
        Ok(())
    }

    pub fn joint_count(&self) -> usize {
        self.frames.first().map_or(0, |f| f.theta.len())
    }

    pub fn shape(&self) -> ShapeParams {
        ShapeParams::new(self.beta.clone())
    }
}

#[derive(Serialize, Deserialize)]
struct MseqDocument {
    format: String,
    subject: String,
    domain: Domain,
    frame_rate: f64,
    shape_count: usize,
    joint_count: usize,
    beta: Vec<f64>,
    frames: Vec<MseqFrame>,
}

#[derive(Serialize, Deserialize)]
struct MseqFrame {
    theta: Vec<[f64; 3]>,
    root_translation: [f64; 3],
}

pub fn sequence_to_string(seq: &MotionSequence) -> Result<String, SequenceError> {
    seq.validate()?;
    let arr = |v: &Vec3| [v.x, v.y, v.z];
    let doc = MseqDocument {
        format: MSEQ_FORMAT.into(),
        subject: seq.subject.clone(),
        domain: seq.domain,
        frame_rate: seq.frame_rate,
        shape_count: seq.beta.len(),
        joint_count: seq.joint_count(),
        beta: seq.beta.clone(),
        frames: seq
            .frames
            .iter()
            .map(|f| MseqFrame {
                theta: f.theta.iter().map(arr).collect(),
                root_translation: arr(&f.root_translation),
            })
            .collect(),
    };
    Ok(to_document(&doc)?)
}

pub fn sequence_from_string(text: &str) -> Result<MotionSequence, SequenceError> {
    let doc: MseqDocument = from_document(text, MSEQ_FORMAT)?;
    if doc.beta.len() != doc.shape_count {
        return Err(SequenceError::Invalid(format!(
            "shape_count {} but {} coefficients",
            doc.shape_count,
            doc.beta.len()
        )));
    }
    let v = |a: [f64; 3]| Vec3::new(a[0], a[1], a[2]);
    let seq = MotionSequence {
        subject: doc.subject,
        domain: doc.domain,
        frame_rate: doc.frame_rate,
        beta: doc.beta,
        frames: doc
            .frames
            .into_iter()
            .map(|f| PoseParams {
                theta: f.theta.into_iter().map(v).collect(),
                root_translation: v(f.root_translation),
            })
            .collect(),
    };
    seq.validate()?;
    if seq.joint_count() != doc.joint_count {
        return Err(SequenceError::Invalid(format!(
            "joint_count {} but frames carry {}",
            doc.joint_count,
            seq.joint_count()
        )));
    }
    Ok(seq)
}

pub fn write_sequence(path: &Path, seq: &MotionSequence) -> Result<(), SequenceError> {
    std::fs::write(path, sequence_to_string(seq)?).map_err(FormatError::from)?;
    Ok(())
}

pub fn read_sequence(path: &Path) -> Result<MotionSequence, SequenceError> {
    sequence_from_string(&read_text(path)?)
}

/// Posed meshes over one shared connectivity.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshSequence {
    frames: Vec<PosedMesh>,
}

impl MeshSequence {
    pub fn new(frames: Vec<PosedMesh>) -> Result<Self, SequenceError> {
        let first = frames.first().ok_or(SequenceError::Empty)?;
        for (i, f) in frames.iter().enumerate() {
            let same = Arc::ptr_eq(&f.faces, &first.faces) || f.faces == first.faces;
            if !same || f.vertices.len() != first.vertices.len() {
                return Err(SequenceError::Connectivity(i));
            }
        }
        Ok(Self { frames })
    }

    pub fn frames(&self) -> &[PosedMesh] {
        &self.frames
    }

    pub fn into_frames(self) -> Vec<PosedMesh> {
        self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

/// Skins every frame with the same shape.
pub fn pose_sequence_to_meshes(template: &BodyTemplate, beta: &ShapeParams, seq: &MotionSequence) -> Result<MeshSequence, SequenceError> {
    seq.validate()?;
    let frames = seq
        .frames
        .par_iter()
        .map(|theta| skin(template, beta, theta))
        .collect::<Result<Vec<_>, _>>()?;
    MeshSequence::new(frames)
}

fn check_window(window: usize, frames: usize) -> Result<usize, SequenceError> {
    let max = 2 * frames - 1;
    if window % 2 == 0 || window == 0 || window > max {
        return Err(SequenceError::InvalidWindow { window, max });
    }
    Ok((window - 1) / 2)
}

/// Centered moving average of `values[t]` over `[t - h, t + h]`, truncated
/// at the ends. Written as center plus mean deviation so constant inputs
/// come back bit-exact.
fn moving_average(values: &[Vec3], half: usize) -> Vec<Vec3> {
    let n = values.len();
    (0..n)
        .map(|t| {
            let lo = t.saturating_sub(half);
            let hi = (t + half).min(n - 1);
            let center = values[t];
            let mut dev = Vec3::zeros();
            for v in &values[lo..=hi] {
                dev += v - center;
            }
            center + dev / (hi - lo + 1) as f64
        })
        .collect()
}

/// Smooths each point track across frames (`frames[t][i]` is point `i` at
/// time `t`). All frames must hold the same number of points.
pub fn smooth_points(frames: &[Vec<Vec3>], window: usize) -> Result<Vec<Vec<Vec3>>, SequenceError> {
    let first = frames.first().ok_or(SequenceError::Empty)?;
    let half = check_window(window, frames.len())?;
    if let Some(t) = frames.iter().position(|f| f.len() != first.len()) {
        return Err(SequenceError::Connectivity(t));
    }
    if half == 0 {
        return Ok(frames.to_vec());
    }
    let tracks: Vec<Vec<Vec3>> = (0..first.len())
        .into_par_iter()
        .map(|i| {
            let track: Vec<Vec3> = frames.iter().map(|f| f[i]).collect();
            moving_average(&track, half)
        })
        .collect();
    Ok((0..frames.len()).map(|t| tracks.iter().map(|track| track[t]).collect()).collect())
}

/// Per-vertex temporal smoothing; `window = 1` is the identity.
pub fn smooth_vertices(seq: &MeshSequence, window: usize) -> Result<MeshSequence, SequenceError> {
    let positions: Vec<Vec<Vec3>> = seq.frames.iter().map(|f| f.vertices.clone()).collect();
    let smoothed = smooth_points(&positions, window)?;
    let frames = smoothed
        .into_iter()
        .zip(&seq.frames)
        .map(|(v, f)| PosedMesh::new(v, Arc::clone(&f.faces)))
        .collect();
    MeshSequence::new(frames)
}

/// Largest valid window not above `window` for a sequence of `frames`.
pub fn clamp_window(window: usize, frames: usize) -> usize {
    let w = window.clamp(1, 2 * frames.max(1) - 1);
    if w % 2 == 0 {
        w - 1
    } else {
        w
    }
}

/// The same moving average applied to axis-angle components and root
/// translation instead of vertices.
pub fn smooth_poses(seq: &MotionSequence, window: usize) -> Result<MotionSequence, SequenceError> {
    seq.validate()?;
    let half = check_window(window, seq.frames.len())?;
    let mut out = seq.clone();
    for j in 0..seq.joint_count() {
        let track: Vec<Vec3> = seq.frames.iter().map(|f| f.theta[j]).collect();
        for (f, v) in out.frames.iter_mut().zip(moving_average(&track, half)) {
            f.theta[j] = v;
        }
    }
    let roots: Vec<Vec3> = seq.frames.iter().map(|f| f.root_translation).collect();
    for (f, v) in out.frames.iter_mut().zip(moving_average(&roots, half)) {
        f.root_translation = v;
    }
    Ok(out)
}

/// `Σ_t ||v_{t+1} - v_t||` for one vertex.
pub fn total_variation(seq: &MeshSequence, vertex: usize) -> f64 {
    seq.frames
        .windows(2)
        .map(|w| (w[1].vertices[vertex] - w[0].vertices[vertex]).norm())
        .sum()
}

/// Parameters of a deterministic periodic dance used for demos and tests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticMotion {
    pub frames: usize,
    pub frame_rate: f64,
    /// Cycles per second.
    pub tempo: f64,
    /// Radians of limb swing.
    pub amplitude: f64,
    pub phase: f64,
}

impl Default for SyntheticMotion {
    fn default() -> Self {
        Self {
            frames: 60,
            frame_rate: 30.0,
            tempo: 0.8,
            amplitude: 0.45,
            phase: 0.0,
        }
    }
}

/// Arms lowered from the T-pose and swinging, elbows and knees flexing,
/// hips stepping in antiphase and a small lateral sway of the root.
pub fn synthetic_motion(template: &BodyTemplate, subject: &str, domain: Domain, beta: Vec<f64>, spec: &SyntheticMotion) -> MotionSequence {
    let j = |name: &str| template.joint_index(name);
    let frames = (0..spec.frames)
        .map(|t| {
            let w = std::f64::consts::TAU * spec.tempo * t as f64 / spec.frame_rate + spec.phase;
            let (s, c) = (w.sin(), w.cos());
            let a = spec.amplitude;
            let mut pose = PoseParams::identity(template.joint_count());
            let mut set = |name: &str, v: Vec3| {
                if let Some(i) = j(name) {
                    pose.theta[i] = v;
                }
            };
            set("left_shoulder", Vec3::new(a * s, 0.0, -1.2 - 0.3 * a * c));
            set("right_shoulder", Vec3::new(-a * s, 0.0, 1.2 + 0.3 * a * c));
            set("left_elbow", Vec3::new(0.0, 0.6 * a * (1.0 + s), 0.0));
            set("right_elbow", Vec3::new(0.0, -0.6 * a * (1.0 - s), 0.0));
            set("left_hip", Vec3::new(-a * s, 0.0, 0.0));
            set("right_hip", Vec3::new(a * s, 0.0, 0.0));
            set("left_knee", Vec3::new(0.8 * a * (1.0 + s), 0.0, 0.0));
            set("right_knee", Vec3::new(0.8 * a * (1.0 - s), 0.0, 0.0));
            set("spine", Vec3::new(0.0, 0.3 * a * s, 0.0));
            set("neck", Vec3::new(0.0, -0.2 * a * s, 0.0));
            pose.root_translation = Vec3::new(0.05 * c, 0.0, 0.0);
            pose
        })
        .collect();
    MotionSequence {
        subject: subject.to_string(),
        domain,
        frame_rate: spec.frame_rate,
        beta,
        frames,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FramePair {
    pub current: LabelImage,
    pub previous: LabelImage,
}

/// Pairs each label with its predecessor; the first frame's predecessor is
/// all zeros.
pub fn label_pairs(labels: &[LabelImage]) -> Result<Vec<FramePair>, SequenceError> {
    let first = labels.first().ok_or(SequenceError::Empty)?;
    let size = (first.width(), first.height());
    for (i, l) in labels.iter().enumerate() {
        if (l.width(), l.height()) != size {
            return Err(SequenceError::LabelSize {
                index: i,
                expected: size,
                found: (l.width(), l.height()),
            });
        }
    }
    Ok(labels
        .iter()
        .enumerate()
        .map(|(t, l)| FramePair {
            current: l.clone(),
            previous: if t == 0 {
                LabelImage::zeros(size.0, size.1)
            } else {
                labels[t - 1].clone()
            },
        })
        .collect())
}
