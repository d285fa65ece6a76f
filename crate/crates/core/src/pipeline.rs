//! Batch commands behind the `motionlabel` binary. Each command reads a TOML
//! [`PipelineConfig`], writes only under its output directory, and produces
//! identical bytes for identical inputs regardless of thread count.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::body_model::{
    apply_shape, build_template, joint_positions, write_template, BodyTemplate, ModelError, PosedMesh, ShapeParams, TemplateConfig,
};
use crate::format::{sha256_hex, to_document, FormatError};
use crate::intrinsic::{load_or_compute, IntrinsicError};
use crate::metrics::{pixel_l1, ssim, MetricsError, SsimConfig};
use crate::objectives::{feature_matching, gan_objective, perceptual_l1, FeatureStack, LossWeights, ObjectiveError, ScoreBatch};
use crate::render::{
    decode_lbl1, encode_lbl1, encode_png, make_label_image, project_vertices, rasterize_mesh, read_png, render_skeleton, Camera,
    CameraKind, RasterImage, RenderError, SkeletonFigureSpec,
};
use crate::sequence::{
    clamp_window, pose_sequence_to_meshes, read_sequence, smooth_points, smooth_poses, smooth_vertices, Domain, MotionSequence,
    SequenceError,
};
use crate::transfer_prep::{
    align_sequences, blend_mean, make_pairing_plan, plan_to_string, warp_image, AlignmentMode, FrameRef, PrepError, Stage,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl PipelineError {
    /// 2 config, 3 data, 4 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 2,
            PipelineError::Data(_) => 3,
            PipelineError::Numerical(_) => 4,
        }
    }
}

impl From<FormatError> for PipelineError {
    fn from(e: FormatError) -> Self {
        PipelineError::Data(e.to_string())
    }
}

impl From<std::io::Error> for PipelineError {
    fn from(e: std::io::Error) -> Self {
        PipelineError::Data(e.to_string())
    }
}

impl From<ModelError> for PipelineError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::InvalidConfig(_) | ModelError::Topology(_) => PipelineError::Config(e.to_string()),
            _ => PipelineError::Data(e.to_string()),
        }
    }
}

impl From<IntrinsicError> for PipelineError {
    fn from(e: IntrinsicError) -> Self {
        match e {
            IntrinsicError::NonConvergence { .. }
            | IntrinsicError::Factorization { .. }
            | IntrinsicError::TooFewModes { .. }
            | IntrinsicError::ConstantEigenvector { .. } => PipelineError::Numerical(e.to_string()),
            _ => PipelineError::Data(e.to_string()),
        }
    }
}

impl From<SequenceError> for PipelineError {
    fn from(e: SequenceError) -> Self {
        match e {
            SequenceError::InvalidWindow { .. } => PipelineError::Config(e.to_string()),
            SequenceError::Model(m) => m.into(),
            _ => PipelineError::Data(e.to_string()),
        }
    }
}

impl From<RenderError> for PipelineError {
    fn from(e: RenderError) -> Self {
        match e {
            RenderError::InvalidCamera(_) | RenderError::InvalidSkeleton(_) => PipelineError::Config(e.to_string()),
            _ => PipelineError::Data(e.to_string()),
        }
    }
}

impl From<PrepError> for PipelineError {
    fn from(e: PrepError) -> Self {
        match e {
            PrepError::EmptyDomain(_) => PipelineError::Config(e.to_string()),
            _ => PipelineError::Data(e.to_string()),
        }
    }
}

impl From<MetricsError> for PipelineError {
    fn from(e: MetricsError) -> Self {
        PipelineError::Data(e.to_string())
    }
}

impl From<ObjectiveError> for PipelineError {
    fn from(e: ObjectiveError) -> Self {
        PipelineError::Data(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubjectConfig {
    pub id: String,
    pub domain: Domain,
    /// `MSEQ/1` file.
    pub motion: PathBuf,
    /// Overrides the shape stored in the motion file.
    #[serde(default)]
    pub beta: Option<Vec<f64>>,
    /// Directory of real frames (`*.png`, sorted by name). Without it,
    /// `prepare` uses the mesh previews written by `labels`.
    #[serde(default)]
    pub frames: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraConfig {
    pub kind: CameraKind,
    pub width: u32,
    pub height: u32,
    /// Fraction of the image height spanned by the rest-pose body.
    pub fill: f64,
}

impl Default for CameraConfig {
    fn default() -> Self {
        Self {
            kind: CameraKind::WeakPerspective,
            width: 256,
            height: 256,
            fill: 0.85,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FigureConfig {
    pub limb_thickness: f64,
    pub joint_radius: f64,
}

impl Default for FigureConfig {
    fn default() -> Self {
        Self {
            limb_thickness: 4.0,
            joint_radius: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub output_dir: PathBuf,
    pub seed: u64,
    /// Worker threads; 0 lets the runtime choose.
    pub threads: usize,
    pub smoothing_window: usize,
    /// Smooth axis-angle parameters before skinning as well.
    pub smooth_poses: bool,
    pub alignment: AlignmentMode,
    pub template: TemplateConfig,
    pub camera: CameraConfig,
    pub figure: FigureConfig,
    pub subjects: Vec<SubjectConfig>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            output_dir: PathBuf::from("out"),
            seed: 0,
            threads: 0,
            smoothing_window: 5,
            smooth_poses: false,
            alignment: AlignmentMode::PerVideo,
            template: TemplateConfig::default(),
            camera: CameraConfig::default(),
            figure: FigureConfig::default(),
            subjects: Vec::new(),
        }
    }
}

impl PipelineConfig {
    /// Parses TOML and resolves relative paths against `base`.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self, PipelineError> {
        let mut cfg: PipelineConfig = toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut cfg.output_dir);
        for s in &mut cfg.subjects {
            resolve(&mut s.motion);
            if let Some(f) = &mut s.frames {
                resolve(f);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = fs::read_to_string(path).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml(&text, &base)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let mut seen = HashSet::new();
        for s in &self.subjects {
            if s.id.is_empty() || s.id.contains(['/', '\\']) || !seen.insert(&s.id) {
                return Err(PipelineError::Config(format!(
                    "subject id {:?} is empty, contains a path separator, or repeats",
                    s.id
                )));
            }
            if !s.motion.is_file() {
                return Err(PipelineError::Config(format!(
                    "subject {}: motion file {} not found",
                    s.id,
                    s.motion.display()
                )));
            }
            if let Some(f) = &s.frames {
                if !f.is_dir() {
                    return Err(PipelineError::Config(format!(
                        "subject {}: frames directory {} not found",
                        s.id,
                        f.display()
                    )));
                }
            }
        }
        let c = &self.camera;
        if c.width == 0 || c.height == 0 || !(c.fill > 0.0) {
            return Err(PipelineError::Config(format!(
                "camera {}x{} fill {} is invalid",
                c.width, c.height, c.fill
            )));
        }
        if self.smoothing_window == 0 || self.smoothing_window % 2 == 0 {
            return Err(PipelineError::Config(format!(
                "smoothing_window {} must be odd",
                self.smoothing_window
            )));
        }
        Ok(())
    }

    pub fn subject(&self, id: &str) -> Result<&SubjectConfig, PipelineError> {
        self.subjects
            .iter()
            .find(|s| s.id == id)
            .ok_or_else(|| PipelineError::Config(format!("no subject {id:?} in config")))
    }

    pub fn template_dir(&self) -> PathBuf {
        self.output_dir.join("template")
    }

    pub fn cache_path(&self, subject: &str) -> PathBuf {
        self.output_dir.join("cache").join(format!("{subject}.eigb"))
    }

    pub fn labels_dir(&self, run: &str) -> PathBuf {
        self.output_dir.join("labels").join(run)
    }
}

/// Runs `f` on a pool of `threads` workers (0 = runtime default).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T, PipelineError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| PipelineError::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// The camera shared by every command: frames the zero-shape rest mesh so
/// subjects and domains are rendered in one coordinate system.
pub fn reference_camera(template: &BodyTemplate, cfg: &CameraConfig) -> Result<Camera, PipelineError> {
    let rest = template.rest_vertices();
    let lo = rest.iter().fold(rest[0], |a, v| a.inf(v));
    let hi = rest.iter().fold(rest[0], |a, v| a.sup(v));
    let extent = (hi.y - lo.y).max(hi.x - lo.x);
    Ok(Camera::front_view(
        cfg.kind,
        cfg.width,
        cfg.height,
        (lo + hi) * 0.5,
        extent,
        cfg.fill,
    )?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemplateOutputs {
    pub obj: PathBuf,
    pub sidecar: PathBuf,
}

pub fn cmd_template(cfg: &PipelineConfig) -> Result<TemplateOutputs, PipelineError> {
    let template = build_template(&cfg.template)?;
    let dir = cfg.template_dir();
    fs::create_dir_all(&dir)?;
    let out = TemplateOutputs {
        obj: dir.join("template.obj"),
        sidecar: dir.join("template.btpl.json"),
    };
    write_template(&template, &out.obj, &out.sidecar)?;
    Ok(out)
}

fn subject_shape(template: &BodyTemplate, subject: &SubjectConfig, motion: &MotionSequence) -> Result<ShapeParams, PipelineError> {
    let beta = subject.beta.clone().unwrap_or_else(|| motion.beta.clone());
    let shape = ShapeParams::new(beta);
    apply_shape(template, &shape).map_err(|e| PipelineError::Config(format!("subject {}: {e}", subject.id)))?;
    Ok(shape)
}

/// Smoothed meshes and joints for `shape` driven by `motion`.
pub struct SubjectFrames {
    pub meshes: Vec<PosedMesh>,
    pub joints: Vec<Vec<crate::mesh::Vec3>>,
}

pub fn animate(
    cfg: &PipelineConfig,
    template: &BodyTemplate,
    shape: &ShapeParams,
    motion: &MotionSequence,
) -> Result<SubjectFrames, PipelineError> {
    let window = clamp_window(cfg.smoothing_window, motion.frames.len());
    let motion = if cfg.smooth_poses {
        smooth_poses(motion, window)?
    } else {
        motion.clone()
    };
    let meshes = smooth_vertices(&pose_sequence_to_meshes(template, shape, &motion)?, window)?.into_frames();
    let joints = motion
        .frames
        .par_iter()
        .map(|theta| joint_positions(template, shape, theta))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SubjectFrames {
        meshes,
        joints: smooth_points(&joints, window)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairIndexRecord {
    pub frame: usize,
    pub current: String,
    /// `None` means an all-zero label image.
    pub previous: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairIndex {
    pub run: String,
    pub shape_subject: String,
    pub pose_subject: String,
    pub width: u32,
    pub height: u32,
    pub pairs: Vec<PairIndexRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelsOutputs {
    pub dir: PathBuf,
    pub label_files: Vec<PathBuf>,
    pub index: PathBuf,
}

pub fn frame_name(t: usize) -> String {
    format!("frame_{t:05}")
}

/// Renders label images for `subject_id`, posed by `pose_source` when given
/// (shape of the subject, pose of the other).
pub fn cmd_labels(cfg: &PipelineConfig, subject_id: &str, pose_source: Option<&str>) -> Result<LabelsOutputs, PipelineError> {
    let subject = cfg.subject(subject_id)?;
    let pose_subject = cfg.subject(pose_source.unwrap_or(subject_id))?;
    let template = build_template(&cfg.template)?;
    let own_motion = read_sequence(&subject.motion)?;
    let motion = if pose_subject.id == subject.id {
        own_motion.clone()
    } else {
        read_sequence(&pose_subject.motion)?
    };
    if motion.joint_count() != template.joint_count() {
        return Err(PipelineError::Data(format!(
            "motion {} has {} joints, template has {}",
            pose_subject.motion.display(),
            motion.joint_count(),
            template.joint_count()
        )));
    }
    let shape = subject_shape(&template, subject, &own_motion)?;
    let camera = reference_camera(&template, &cfg.camera)?;
    let figure = SkeletonFigureSpec::for_template(&template, cfg.figure.limb_thickness, cfg.figure.joint_radius);
    figure.validate(template.joint_count())?;

    let run = match pose_source {
        Some(p) if p != subject_id => format!("{subject_id}_posed_by_{p}"),
        _ => subject_id.to_string(),
    };
    let dir = cfg.labels_dir(&run);
    let preview = dir.join("preview");
    fs::create_dir_all(&preview)?;
    fs::create_dir_all(cfg.output_dir.join("cache"))?;

    with_threads(cfg.threads, || -> Result<LabelsOutputs, PipelineError> {
        let rest = apply_shape(&template, &shape)?;
        let colors = load_or_compute(&cfg.cache_path(subject_id), &rest)?.colors;
        let frames = animate(cfg, &template, &shape, &motion)?;
        let label_files = frames
            .meshes
            .par_iter()
            .zip(frames.joints.par_iter())
            .enumerate()
            .map(|(t, (mesh, joints))| -> Result<PathBuf, PipelineError> {
                let mesh_img = rasterize_mesh(mesh, &colors, &camera)?;
                let pose_img = render_skeleton(&project_vertices(&camera, joints), &figure, camera.width, camera.height)?;
                let label = make_label_image(&mesh_img, &pose_img)?;
                let name = frame_name(t);
                let path = dir.join(format!("{name}.lbl1"));
                fs::write(&path, encode_lbl1(label.raster()))?;
                fs::write(preview.join(format!("{name}_mesh.png")), encode_png(&mesh_img)?)?;
                fs::write(preview.join(format!("{name}_pose.png")), encode_png(&pose_img)?)?;
                Ok(path)
            })
            .collect::<Result<Vec<_>, _>>()?;

        let file = |p: &PathBuf| p.file_name().unwrap().to_string_lossy().into_owned();
        let index = PairIndex {
            run: run.clone(),
            shape_subject: subject.id.clone(),
            pose_subject: pose_subject.id.clone(),
            width: camera.width,
            height: camera.height,
            pairs: label_files
                .iter()
                .enumerate()
                .map(|(t, p)| PairIndexRecord {
                    frame: t,
                    current: file(p),
                    previous: t.checked_sub(1).map(|s| file(&label_files[s])),
                })
                .collect(),
        };
        let index_path = dir.join("pairs.json");
        fs::write(&index_path, serde_json::to_string_pretty(&index).map_err(FormatError::from)? + "\n")?;
        Ok(LabelsOutputs {
            dir: dir.clone(),
            label_files,
            index: index_path,
        })
    })?
}

fn list_pngs(dir: &Path) -> Result<Vec<PathBuf>, PipelineError> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("png")))
        .collect();
    files.sort();
    Ok(files)
}

/// Real frames of a subject, or its mesh previews when it has none.
fn subject_frame_files(cfg: &PipelineConfig, subject: &SubjectConfig) -> Result<Vec<PathBuf>, PipelineError> {
    let files = match &subject.frames {
        Some(dir) => list_pngs(dir)?,
        None => {
            let preview = cfg.labels_dir(&subject.id).join("preview");
            if !preview.is_dir() {
                return Err(PipelineError::Data(format!(
                    "subject {} has no frames directory and no label previews; run `labels` first",
                    subject.id
                )));
            }
            list_pngs(&preview)?
                .into_iter()
                .filter(|p| p.to_string_lossy().ends_with("_mesh.png"))
                .collect()
        }
    };
    if files.is_empty() {
        return Err(PipelineError::Data(format!("subject {} has no frames", subject.id)));
    }
    Ok(files)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlendRecord {
    pub output: String,
    /// The warped source-domain parent, then the target-domain parent.
    pub parents: [FrameRef; 2],
    pub scale: f64,
    pub tx: f64,
    pub ty: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrepareManifest {
    pub stage: Stage,
    pub source_subject: String,
    pub target_subject: String,
    pub plan: String,
    pub blends: Vec<BlendRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrepareOutputs {
    pub dir: PathBuf,
    pub plan: PathBuf,
    pub manifest: PathBuf,
}

fn first_in_domain(cfg: &PipelineConfig, domain: Domain) -> Result<&SubjectConfig, PipelineError> {
    cfg.subjects
        .iter()
        .find(|s| s.domain == domain)
        .ok_or_else(|| PipelineError::Config(format!("no {domain:?} subject in config")))
}

/// Writes the pairing plan for `stage`; for the cross-domain stages also
/// aligns source frames to the target and writes their mean blends.
///
/// Frame `t` of the source subject is warped onto frame `t` of the target
/// (indices wrap on the shorter side) and averaged with it.
pub fn cmd_prepare(
    cfg: &PipelineConfig,
    stage: Stage,
    source: Option<&str>,
    target: Option<&str>,
) -> Result<PrepareOutputs, PipelineError> {
    let src = match source {
        Some(id) => cfg.subject(id)?,
        None => first_in_domain(cfg, Domain::Source)?,
    };
    let tgt = match target {
        Some(id) => cfg.subject(id)?,
        None => first_in_domain(cfg, Domain::Target)?,
    };
    let src_files = subject_frame_files(cfg, src)?;
    let tgt_files = subject_frame_files(cfg, tgt)?;
    let ids = |s: &SubjectConfig, n: usize| (0..n).map(|t| format!("{}/{}", s.id, frame_name(t))).collect::<Vec<_>>();
    let (src_ids, tgt_ids) = (ids(src, src_files.len()), ids(tgt, tgt_files.len()));
    let plan = make_pairing_plan(stage, &src_ids, &tgt_ids, cfg.seed)?;

    let stage_name = match stage {
        Stage::PretrainMt => "pretrain-mt",
        Stage::TrainDe => "train-de",
        Stage::Transfer => "transfer",
    };
    let dir = cfg.output_dir.join("prepare").join(stage_name);
    fs::create_dir_all(&dir)?;
    let plan_path = dir.join("plan.pair.json");
    fs::write(&plan_path, plan_to_string(&plan)?)?;

    let blends = if stage == Stage::PretrainMt {
        Vec::new()
    } else {
        let template = build_template(&cfg.template)?;
        let camera = reference_camera(&template, &cfg.camera)?;
        let src_motion = read_sequence(&src.motion)?;
        let tgt_motion = read_sequence(&tgt.motion)?;
        let src_shape = subject_shape(&template, src, &src_motion)?;
        let tgt_shape = subject_shape(&template, tgt, &tgt_motion)?;
        let n = src_files.len().max(tgt_files.len());
        let aligned_dir = dir.join("aligned");
        let blended_dir = dir.join("blended");
        fs::create_dir_all(&aligned_dir)?;
        fs::create_dir_all(&blended_dir)?;

        with_threads(cfg.threads, || -> Result<Vec<BlendRecord>, PipelineError> {
            let src_meshes = animate(cfg, &template, &src_shape, &src_motion)?.meshes;
            let tgt_meshes = animate(cfg, &template, &tgt_shape, &tgt_motion)?.meshes;
            let pick = |m: &[PosedMesh], t: usize| m[t % m.len()].clone();
            let sources: Vec<PosedMesh> = (0..n).map(|t| pick(&src_meshes, t)).collect();
            let targets: Vec<PosedMesh> = (0..n).map(|t| pick(&tgt_meshes, t)).collect();
            let transforms = align_sequences(&sources, &targets, &camera, cfg.alignment)?;
            (0..n)
                .into_par_iter()
                .map(|t| -> Result<BlendRecord, PipelineError> {
                    let (si, ti) = (t % src_files.len(), t % tgt_files.len());
                    let a = read_png(&src_files[si])?;
                    let b = read_png(&tgt_files[ti])?;
                    let warped = warp_image(&a, &transforms[t])?;
                    let blended = blend_mean(&warped, &b)?;
                    let name = format!("{}.png", frame_name(t));
                    fs::write(aligned_dir.join(&name), encode_png(&warped)?)?;
                    fs::write(blended_dir.join(&name), encode_png(&blended)?)?;
                    Ok(BlendRecord {
                        output: format!("blended/{name}"),
                        parents: [
                            FrameRef {
                                domain: Domain::Source,
                                frame: src_ids[si].clone(),
                            },
                            FrameRef {
                                domain: Domain::Target,
                                frame: tgt_ids[ti].clone(),
                            },
                        ],
                        scale: transforms[t].scale,
                        tx: transforms[t].tx,
                        ty: transforms[t].ty,
                    })
                })
                .collect()
        })??
    };

    let manifest = PrepareManifest {
        stage,
        source_subject: src.id.clone(),
        target_subject: tgt.id.clone(),
        plan: "plan.pair.json".into(),
        blends,
    };
    let manifest_path = dir.join("manifest.json");
    fs::write(&manifest_path, to_document(&manifest)?)?;
    Ok(PrepareOutputs {
        dir,
        plan: plan_path,
        manifest: manifest_path,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameMetric {
    pub name: String,
    pub ssim: f64,
    pub l1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub frames: Vec<FrameMetric>,
    pub mean_ssim: f64,
    pub min_ssim: f64,
    pub mean_l1: f64,
}

fn read_image(path: &Path) -> Result<RasterImage, PipelineError> {
    match path.extension().and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case("png") => Ok(read_png(path)?),
        Some("lbl1") => Ok(decode_lbl1(&fs::read(path)?)?),
        _ => Err(PipelineError::Data(format!("{}: expected .png or .lbl1", path.display()))),
    }
}

fn image_files(path: &Path) -> Result<BTreeMap<String, PathBuf>, PipelineError> {
    if path.is_file() {
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        return Ok(BTreeMap::from([(name, path.to_path_buf())]));
    }
    if !path.is_dir() {
        return Err(PipelineError::Data(format!("{} does not exist", path.display())));
    }
    Ok(fs::read_dir(path)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| e.eq_ignore_ascii_case("png") || e == "lbl1")
        })
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), p))
        .collect())
}

/// SSIM and pixel L1 between two images, or two directories paired by file
/// name.
pub fn cmd_metrics(a: &Path, b: &Path) -> Result<MetricsReport, PipelineError> {
    let fa = image_files(a)?;
    let fb = image_files(b)?;
    let pairs: Vec<(String, PathBuf, PathBuf)> = if a.is_file() && b.is_file() {
        let (na, pa) = fa.into_iter().next().unwrap();
        vec![(na, pa, fb.into_values().next().unwrap())]
    } else {
        if fa.keys().ne(fb.keys()) {
            let only_a: Vec<_> = fa.keys().filter(|k| !fb.contains_key(*k)).collect();
            let only_b: Vec<_> = fb.keys().filter(|k| !fa.contains_key(*k)).collect();
            return Err(PipelineError::Data(format!(
                "file sets differ: only in A {only_a:?}, only in B {only_b:?}"
            )));
        }
        fa.into_iter().map(|(k, pa)| (k.clone(), pa, fb[&k].clone())).collect()
    };
    if pairs.is_empty() {
        return Err(PipelineError::Data("no images to compare".into()));
    }
    let cfg = SsimConfig::default();
    let frames = pairs
        .par_iter()
        .map(|(name, pa, pb)| -> Result<FrameMetric, PipelineError> {
            let (x, y) = (read_image(pa)?, read_image(pb)?);
            Ok(FrameMetric {
                name: name.clone(),
                ssim: ssim(&x, &y, &cfg)?,
                l1: pixel_l1(&x, &y)?,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let n = frames.len() as f64;
    Ok(MetricsReport {
        mean_ssim: frames.iter().map(|f| f.ssim).sum::<f64>() / n,
        min_ssim: frames.iter().map(|f| f.ssim).fold(f64::INFINITY, f64::min),
        mean_l1: frames.iter().map(|f| f.l1).sum::<f64>() / n,
        frames,
    })
}

/// Splits a byte stream of concatenated `LBL1` records.
pub fn decode_lbl1_records(bytes: &[u8]) -> Result<Vec<RasterImage>, FormatError> {
    let mut out = Vec::new();
    let mut rest = bytes;
    while !rest.is_empty() {
        if rest.len() < 16 {
            return Err(FormatError::Binary(format!("{} stray bytes after last record", rest.len())));
        }
        let dim = |o: usize| u32::from_le_bytes(rest[o..o + 4].try_into().unwrap()) as usize;
        let len = 16 + 4 * dim(4) * dim(8) * dim(12);
        if rest.len() < len {
            return Err(FormatError::Binary("truncated record".into()));
        }
        out.push(decode_lbl1(&rest[..len])?);
        rest = &rest[len..];
    }
    Ok(out)
}

/// Every value of a tensor, in plane order.
fn planar_values(img: &RasterImage) -> Vec<f64> {
    (0..img.channels)
        .flat_map(|c| img.data.iter().skip(c).step_by(img.channels).copied())
        .collect()
}

fn read_stack(path: &Path) -> Result<FeatureStack, PipelineError> {
    let layers = decode_lbl1_records(&fs::read(path)?)?.iter().map(planar_values).collect();
    Ok(FeatureStack::new(layers)?)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LossInputs {
    pub real_scores: Option<PathBuf>,
    pub fake_scores: Option<PathBuf>,
    pub features_a: Option<PathBuf>,
    pub features_b: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub lambda_p: f64,
    pub lambda_fm: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gan: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub perceptual_l1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub feature_matching: Option<f64>,
}

/// Objective values from tensors on disk: scores are any single `LBL1`
/// record (all values, plane order); a feature stack is a file of
/// concatenated `LBL1` records, one per layer.
pub fn cmd_losses(inputs: &LossInputs, weights: &LossWeights) -> Result<LossReport, PipelineError> {
    let mut report = LossReport {
        lambda_p: weights.lambda_p,
        lambda_fm: weights.lambda_fm,
        gan: None,
        perceptual_l1: None,
        feature_matching: None,
    };
    match (&inputs.real_scores, &inputs.fake_scores) {
        (Some(r), Some(f)) => {
            let real = planar_values(&decode_lbl1(&fs::read(r)?)?);
            let fake = planar_values(&decode_lbl1(&fs::read(f)?)?);
            report.gan = Some(gan_objective(&ScoreBatch::new(real, fake)?));
        }
        (None, None) => {}
        _ => return Err(PipelineError::Config("real and fake scores must be given together".into())),
    }
    match (&inputs.features_a, &inputs.features_b) {
        (Some(a), Some(b)) => {
            let (sa, sb) = (read_stack(a)?, read_stack(b)?);
            report.perceptual_l1 = Some(perceptual_l1(&sa, &sb)?);
            report.feature_matching = Some(feature_matching(&sa, &sb)?);
        }
        (None, None) => {}
        _ => return Err(PipelineError::Config("both feature stacks must be given together".into())),
    }
    if report.gan.is_none() && report.perceptual_l1.is_none() {
        return Err(PipelineError::Config(
            "nothing to evaluate: pass scores and/or feature stacks".into(),
        ));
    }
    Ok(report)
}

/// SHA-256 of every file under `dir`, keyed by relative path.
pub fn digest_tree(dir: &Path) -> Result<BTreeMap<String, String>, PipelineError> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d)? {
            let p = entry?.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().replace('\\', "/");
                out.insert(rel, sha256_hex(&fs::read(&p)?));
            }
        }
    }
    Ok(out)
}
