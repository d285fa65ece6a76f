//! Cross-domain preparation: source-to-target alignment, bilinear warping,
//! mean blending, and the pairing plans for each training stage.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::body_model::PosedMesh;
use crate::format::{from_document, read_text, to_document, FormatError};
use crate::render::{project_vertices, Camera, RasterImage, RenderError};
use crate::sequence::Domain;

pub const PAIR_FORMAT: &str = "PAIR/1";

#[derive(Debug, Error)]
pub enum PrepError {
    #[error("projected {which} bounding box is {height:.3} px tall; need at least 1 px")]
    DegenerateBox { which: &'static str, height: f64 },
    #[error("{0:?} domain has no frames")]
    EmptyDomain(Domain),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid transform: {0}")]
    InvalidTransform(String),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error(transparent)]
    Format(#[from] FormatError),
}

/// `p -> scale * p + (tx, ty)` in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityTransform2D {
    pub scale: f64,
    pub tx: f64,
    pub ty: f64,
}

impl SimilarityTransform2D {
    pub const IDENTITY: Self = Self {
        scale: 1.0,
        tx: 0.0,
        ty: 0.0,
    };

    pub fn validate(&self) -> Result<(), PrepError> {
        if !(self.scale > 0.0) || ![self.scale, self.tx, self.ty].iter().all(|v| v.is_finite()) {
            return Err(PrepError::InvalidTransform(format!("{self:?}")));
        }
        Ok(())
    }

    pub fn apply(&self, p: [f64; 2]) -> [f64; 2] {
        [self.scale * p[0] + self.tx, self.scale * p[1] + self.ty]
    }

    pub fn inverse(&self) -> Self {
        Self {
            scale: 1.0 / self.scale,
            tx: -self.tx / self.scale,
            ty: -self.ty / self.scale,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox2D {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl BoundingBox2D {
    pub fn of_points(points: impl IntoIterator<Item = [f64; 2]>) -> Option<Self> {
        let mut it = points.into_iter();
        let first = it.next()?;
        Some(it.fold(Self { min: first, max: first }, |b, p| Self {
            min: [b.min[0].min(p[0]), b.min[1].min(p[1])],
            max: [b.max[0].max(p[0]), b.max[1].max(p[1])],
        }))
    }

    pub fn height(&self) -> f64 {
        self.max[1] - self.min[1]
    }

    /// Bottom-center in image coordinates (rows grow downward).
    pub fn anchor(&self) -> [f64; 2] {
        [0.5 * (self.min[0] + self.max[0]), self.max[1]]
    }
}

pub fn projected_bbox(mesh: &PosedMesh, camera: &Camera) -> Option<BoundingBox2D> {
    BoundingBox2D::of_points(
        project_vertices(camera, &mesh.vertices)
            .into_iter()
            .filter(|p| !p.clipped)
            .map(|p| [p.x, p.y]),
    )
}

/// Scale matching bounding-box heights, translation mapping the source's
/// bottom-center anchor onto the target's.
pub fn compute_alignment(source: &PosedMesh, target: &PosedMesh, camera: &Camera) -> Result<SimilarityTransform2D, PrepError> {
    camera.validate()?;
    let boxes = [
        ("source", projected_bbox(source, camera)),
        ("target", projected_bbox(target, camera)),
    ];
    let mut found = [None; 2];
    for (slot, (which, b)) in found.iter_mut().zip(boxes) {
        let height = b.map_or(0.0, |b| b.height());
        if !(height >= 1.0) {
            return Err(PrepError::DegenerateBox { which, height });
        }
        *slot = b;
    }
    let (s_box, t_box) = (found[0].unwrap(), found[1].unwrap());
    let scale = t_box.height() / s_box.height();
    let (a_s, a_t) = (s_box.anchor(), t_box.anchor());
    Ok(SimilarityTransform2D {
        scale,
        tx: a_t[0] - scale * a_s[0],
        ty: a_t[1] - scale * a_s[1],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlignmentMode {
    #[default]
    PerVideo,
    PerFrame,
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// One transform per source frame. Source frame `t` is measured against
/// target frame `t mod len(targets)`; per-video mode replaces every
/// transform by the component-wise median.
pub fn align_sequences(
    sources: &[PosedMesh],
    targets: &[PosedMesh],
    camera: &Camera,
    mode: AlignmentMode,
) -> Result<Vec<SimilarityTransform2D>, PrepError> {
    if sources.is_empty() {
        return Err(PrepError::EmptyDomain(Domain::Source));
    }
    if targets.is_empty() {
        return Err(PrepError::EmptyDomain(Domain::Target));
    }
    let per_frame = sources
        .iter()
        .enumerate()
        .map(|(t, s)| compute_alignment(s, &targets[t % targets.len()], camera))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(match mode {
        AlignmentMode::PerFrame => per_frame,
        AlignmentMode::PerVideo => {
            let mut s: Vec<f64> = per_frame.iter().map(|x| x.scale).collect();
            let mut tx: Vec<f64> = per_frame.iter().map(|x| x.tx).collect();
            let mut ty: Vec<f64> = per_frame.iter().map(|x| x.ty).collect();
            let m = SimilarityTransform2D {
                scale: median(&mut s),
                tx: median(&mut tx),
                ty: median(&mut ty),
            };
            vec![m; per_frame.len()]
        }
    })
}

/// Inverse-mapped bilinear resampling; samples outside the input are black.
pub fn warp_image(img: &RasterImage, transform: &SimilarityTransform2D) -> Result<RasterImage, PrepError> {
    transform.validate()?;
    let (w, h, c) = (img.width as i64, img.height as i64, img.channels);
    let mut out = RasterImage::new(img.width, img.height, c);
    let zero = vec![0.0; c];
    let fetch = |x: i64, y: i64| -> &[f64] {
        if x < 0 || y < 0 || x >= w || y >= h {
            &zero
        } else {
            img.pixel(x as usize, y as usize)
        }
    };
    for j in 0..h {
        for i in 0..w {
            // Pixel centers map to centers: sample position in index space.
            let p = [
                (i as f64 + 0.5 - transform.tx) / transform.scale - 0.5,
                (j as f64 + 0.5 - transform.ty) / transform.scale - 0.5,
            ];
            let (x0, y0) = (p[0].floor(), p[1].floor());
            let (fx, fy) = (p[0] - x0, p[1] - y0);
            let (x0, y0) = (x0 as i64, y0 as i64);
            let (a, b, cc, d) = (fetch(x0, y0), fetch(x0 + 1, y0), fetch(x0, y0 + 1), fetch(x0 + 1, y0 + 1));
            let dst = out.pixel_mut(i as usize, j as usize);
            for k in 0..c {
                let top = a[k] * (1.0 - fx) + b[k] * fx;
                let bottom = cc[k] * (1.0 - fx) + d[k] * fx;
                dst[k] = top * (1.0 - fy) + bottom * fy;
            }
        }
    }
    Ok(out)
}

/// Per-pixel, per-channel arithmetic mean.
pub fn blend_mean(a: &RasterImage, b: &RasterImage) -> Result<RasterImage, PrepError> {
    if !a.same_shape(b) {
        return Err(PrepError::ShapeMismatch(format!(
            "{}x{}x{} vs {}x{}x{}",
            a.width, a.height, a.channels, b.width, b.height, b.channels
        )));
    }
    let mut out = RasterImage::new(a.width, a.height, a.channels);
    for ((o, x), y) in out.data.iter_mut().zip(&a.data).zip(&b.data) {
        *o = (x + y) * 0.5;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    PretrainMt,
    TrainDe,
    Transfer,
}

impl std::str::FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pretrain-mt" => Ok(Stage::PretrainMt),
            "train-de" => Ok(Stage::TrainDe),
            "transfer" => Ok(Stage::Transfer),
            other => Err(format!("unknown stage {other:?} (pretrain-mt, train-de, transfer)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameRef {
    pub domain: Domain,
    pub frame: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputRole {
    /// The output should reproduce `ground_truth`.
    Reconstruction,
    /// Cross-domain output with nothing to compare against.
    Transfer,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairingRecord {
    pub appearance: FrameRef,
    pub pose: FrameRef,
    pub role: OutputRole,
    pub ground_truth: Option<FrameRef>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairingPlan {
    pub stage: Stage,
    pub seed: u64,
    pub records: Vec<PairingRecord>,
}

/// The fixed appearance frame for each domain. Draws happen in a fixed order
/// (source, then target) so every stage built from one seed agrees.
pub fn fixed_appearance_frames(source_ids: &[String], target_ids: &[String], seed: u64) -> Result<[String; 2], PrepError> {
    if source_ids.is_empty() {
        return Err(PrepError::EmptyDomain(Domain::Source));
    }
    if target_ids.is_empty() {
        return Err(PrepError::EmptyDomain(Domain::Target));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = rng.gen_range(0..source_ids.len());
    let t = rng.gen_range(0..target_ids.len());
    Ok([source_ids[s].clone(), target_ids[t].clone()])
}

pub fn make_pairing_plan(stage: Stage, source_ids: &[String], target_ids: &[String], seed: u64) -> Result<PairingPlan, PrepError> {
    let [app_s, app_t] = fixed_appearance_frames(source_ids, target_ids, seed)?;
    let fref = |domain, frame: &str| FrameRef {
        domain,
        frame: frame.to_string(),
    };
    let reconstruct = |app: FrameRef, pose: FrameRef| PairingRecord {
        appearance: app,
        ground_truth: Some(pose.clone()),
        pose,
        role: OutputRole::Reconstruction,
    };
    let records = match stage {
        Stage::PretrainMt => {
            let mut r: Vec<PairingRecord> = source_ids
                .iter()
                .map(|id| reconstruct(fref(Domain::Source, &app_s), fref(Domain::Source, id)))
                .collect();
            r.extend(
                target_ids
                    .iter()
                    .map(|id| reconstruct(fref(Domain::Target, &app_t), fref(Domain::Target, id))),
            );
            r
        }
        Stage::TrainDe => target_ids
            .iter()
            .map(|id| reconstruct(fref(Domain::Source, &app_s), fref(Domain::Target, id)))
            .collect(),
        Stage::Transfer => source_ids
            .iter()
            .map(|id| PairingRecord {
                appearance: fref(Domain::Target, &app_t),
                pose: fref(Domain::Source, id),
                role: OutputRole::Transfer,
                ground_truth: None,
            })
            .collect(),
    };
    Ok(PairingPlan { stage, seed, records })
}

#[derive(Serialize, Deserialize)]
struct PairDocument {
    format: String,
    stage: Stage,
    seed: u64,
    record_count: usize,
    records: Vec<PairingRecord>,
}

pub fn plan_to_string(plan: &PairingPlan) -> Result<String, FormatError> {
    to_document(&PairDocument {
        format: PAIR_FORMAT.into(),
        stage: plan.stage,
        seed: plan.seed,
        record_count: plan.records.len(),
        records: plan.records.clone(),
    })
}

pub fn plan_from_string(text: &str) -> Result<PairingPlan, FormatError> {
    let doc: PairDocument = from_document(text, PAIR_FORMAT)?;
    if doc.record_count != doc.records.len() {
        return Err(FormatError::Inconsistent(format!(
            "record_count {} but {} records",
            doc.record_count,
            doc.records.len()
        )));
    }
    Ok(PairingPlan {
        stage: doc.stage,
        seed: doc.seed,
        records: doc.records,
    })
}

pub fn write_plan(path: &Path, plan: &PairingPlan) -> Result<(), FormatError> {
    std::fs::write(path, plan_to_string(plan)?)?;
    Ok(())
}

pub fn read_plan(path: &Path) -> Result<PairingPlan, FormatError> {
    plan_from_string(&read_text(path)?)
}
