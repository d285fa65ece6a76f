//! Parametric humanoid body: rest mesh, joint tree, skin weights and shape
//! blendshapes, driven by shape coefficients and per-joint axis-angle pose.

mod io;
mod skinning;
mod template;

use std::sync::Arc;

use thiserror::Error;

use crate::mesh::{validate_closed_manifold, Face, MeshReport, TopologyError, Vec3};

pub use io::{read_template, template_from_strings, template_to_strings, write_template, BTPL_FORMAT};
pub use skinning::{apply_shape, axis_angle_to_matrix, joint_positions, recombine, skin};
pub use template::{build_template, ShapeDirectionKind, TemplateConfig};

pub(crate) const WEIGHT_SUM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid template config: {0}")]
    InvalidConfig(String),
    #[error("template geometry is not a closed manifold: {0}")]
    Topology(#[from] TopologyError),
    #[error("invalid template: {0}")]
    InvalidTemplate(String),
    #[error("{what}: expected {expected}, found {found}")]
    DimensionMismatch { what: &'static str, expected: usize, found: usize },
    #[error("{0} contains a non-finite value")]
    NonFinite(&'static str),
}

/// A named per-vertex displacement field.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeDirection {
    pub name: String,
    pub offsets: Vec<Vec3>,
}

/// Rest-pose body mesh with skeleton, skin weights and shape blendshapes.
///
/// Joints are stored parent-before-child with the root at index 0.
#[derive(Debug, Clone, PartialEq)]
pub struct BodyTemplate {
    rest_vertices: Vec<Vec3>,
    faces: Arc<Vec<Face>>,
    joint_names: Vec<String>,
    joints_rest: Vec<Vec3>,
    joint_parents: Vec<Option<usize>>,
    skin_weights: Vec<Vec<(usize, f64)>>,
    shape_dirs: Vec<ShapeDirection>,
}

impl BodyTemplate {
    /// Assembles a template, checking every structural invariant.
    pub fn new(
        rest_vertices: Vec<Vec3>,
        faces: Vec<Face>,
        joint_names: Vec<String>,
        joints_rest: Vec<Vec3>,
        joint_parents: Vec<Option<usize>>,
        skin_weights: Vec<Vec<(usize, f64)>>,
        shape_dirs: Vec<ShapeDirection>,
    ) -> Result<Self, ModelError> {
        let v = rest_vertices.len();
        let j = joints_rest.len();
        if rest_vertices.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(ModelError::NonFinite("rest vertices"));
        }
        validate_closed_manifold(&faces, v)?;

        if j == 0 {
            return Err(ModelError::InvalidTemplate("no joints".into()));
        }
        if joint_parents.len() != j {
            return Err(ModelError::DimensionMismatch {
                what: "joint parents",
                expected: j,
                found: joint_parents.len(),
            });
        }
        if joint_names.len() != j {
            return Err(ModelError::DimensionMismatch {
                what: "joint names",
                expected: j,
                found: joint_names.len(),
            });
        }
        if joint_parents[0].is_some() {
            return Err(ModelError::InvalidTemplate("joint 0 must be the root".into()));
        }
        for (i, parent) in joint_parents.iter().enumerate().skip(1) {
            match parent {
                None => return Err(ModelError::InvalidTemplate(format!("joint {i} is a second root"))),
                Some(p) if *p >= i => {
                    return Err(ModelError::InvalidTemplate(format!(
                        "joint {i} has parent {p}; parents must precede children"
                    )))
                }
                _ => {}
            }
        }

        if skin_weights.len() != v {
            return Err(ModelError::DimensionMismatch {
                what: "skin weight rows",
                expected: v,
                found: skin_weights.len(),
            });
        }
        for (vi, row) in skin_weights.iter().enumerate() {
            let mut sum = 0.0;
            for &(joint, w) in row {
                if joint >= j {
                    return Err(ModelError::InvalidTemplate(format!("vertex {vi} weights unknown joint {joint}")));
                }
                if !(w >= 0.0) || !w.is_finite() {
                    return Err(ModelError::InvalidTemplate(format!("vertex {vi} has invalid weight {w}")));
                }
                sum += w;
            }
            if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
                return Err(ModelError::InvalidTemplate(format!("vertex {vi} weights sum to {sum}")));
            }
        }

        for dir in &shape_dirs {
            if dir.offsets.len() != v {
                return Err(ModelError::DimensionMismatch {
                    what: "shape direction offsets",
                    expected: v,
                    found: dir.offsets.len(),
                });
            }
            if dir.offsets.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
                return Err(ModelError::NonFinite("shape direction"));
            }
        }

        Ok(Self {
            rest_vertices,
            faces: Arc::new(faces),
            joint_names,
            joints_rest,
            joint_parents,
            skin_weights,
            shape_dirs,
        })
    }

    pub fn rest_vertices(&self) -> &[Vec3] {
        &self.rest_vertices
    }

    pub fn faces(&self) -> &Arc<Vec<Face>> {
        &self.faces
    }

    pub fn joint_names(&self) -> &[String] {
        &self.joint_names
    }

    pub fn joints_rest(&self) -> &[Vec3] {
        &self.joints_rest
    }

    pub fn joint_parents(&self) -> &[Option<usize>] {
        &self.joint_parents
    }

    pub fn skin_weights(&self) -> &[Vec<(usize, f64)>] {
        &self.skin_weights
    }

    pub fn shape_dirs(&self) -> &[ShapeDirection] {
        &self.shape_dirs
    }

    pub fn vertex_count(&self) -> usize {
        self.rest_vertices.len()
    }

    pub fn joint_count(&self) -> usize {
        self.joints_rest.len()
    }

    pub fn shape_count(&self) -> usize {
        self.shape_dirs.len()
    }

    pub fn joint_index(&self, name: &str) -> Option<usize> {
        self.joint_names.iter().position(|n| n == name)
    }

    /// Parent-child joint pairs in joint order; the natural limb list for a
    /// skeleton figure.
    pub fn bones(&self) -> Vec<(usize, usize)> {
        self.joint_parents
            .iter()
            .enumerate()
            .filter_map(|(child, parent)| parent.map(|p| (p, child)))
            .collect()
    }

    pub fn topology_report(&self) -> MeshReport {
        validate_closed_manifold(&self.faces, self.rest_vertices.len()).expect("validated at construction")
    }

    /// Zero shape coefficients of the right length.
    pub fn zero_shape(&self) -> ShapeParams {
        ShapeParams::zeros(self.shape_count())
    }

    /// Identity pose with zero root translation.
    pub fn rest_pose(&self) -> PoseParams {
        PoseParams::identity(self.joint_count())
    }
}

/// Shape coefficients, one per blendshape.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeParams {
    pub beta: Vec<f64>,
}

impl ShapeParams {
    pub fn new(beta: Vec<f64>) -> Self {
        Self { beta }
    }

    pub fn zeros(k: usize) -> Self {
        Self { beta: vec![0.0; k] }
    }

    pub(crate) fn check(&self, template: &BodyTemplate) -> Result<(), ModelError> {
        if self.beta.len() != template.shape_count() {
            return Err(ModelError::DimensionMismatch {
                what: "shape coefficients",
                expected: template.shape_count(),
                found: self.beta.len(),
            });
        }
        if !self.beta.iter().all(|b| b.is_finite()) {
            return Err(ModelError::NonFinite("shape coefficients"));
        }
        Ok(())
    }
}

/// Per-joint axis-angle rotations (radians) plus a root translation (meters).
#[derive(Debug, Clone, PartialEq)]
pub struct PoseParams {
    pub theta: Vec<Vec3>,
    pub root_translation: Vec3,
}

impl PoseParams {
    pub fn identity(joints: usize) -> Self {
        Self {
            theta: vec![Vec3::zeros(); joints],
            root_translation: Vec3::zeros(),
        }
    }

    pub(crate) fn check(&self, template: &BodyTemplate) -> Result<(), ModelError> {
        if self.theta.len() != template.joint_count() {
            return Err(ModelError::DimensionMismatch {
                what: "pose joints",
                expected: template.joint_count(),
                found: self.theta.len(),
            });
        }
        let finite = self.theta.iter().all(|t| t.iter().all(|c| c.is_finite())) && self.root_translation.iter().all(|c| c.is_finite());
        if !finite {
            return Err(ModelError::NonFinite("pose parameters"));
        }
        Ok(())
    }
}

/// Deformed vertex positions over the template's (shared) connectivity.
#[derive(Debug, Clone, PartialEq)]
pub struct PosedMesh {
    pub vertices: Vec<Vec3>,
    pub faces: Arc<Vec<Face>>,
}

impl PosedMesh {
    pub fn new(vertices: Vec<Vec3>, faces: Arc<Vec<Face>>) -> Self {
        Self { vertices, faces }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    /// Returns a copy with every vertex scaled about the origin.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            vertices: self.vertices.iter().map(|v| v * s).collect(),
            faces: Arc::clone(&self.faces),
        }
    }
}
