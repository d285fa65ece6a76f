use nalgebra::Matrix3;

use super::{BodyTemplate, ModelError, PoseParams, PosedMesh, ShapeParams};
use crate::mesh::Vec3;

/// Rodrigues' formula. Rotation vectors shorter than 1e-12 map to identity.
pub fn axis_angle_to_matrix(rotvec: &Vec3) -> Matrix3<f64> {
    let angle = rotvec.norm();
    if angle < 1e-12 {
        return Matrix3::identity();
    }
    let k = rotvec / angle;
    let cross = Matrix3::new(0.0, -k.z, k.y, k.z, 0.0, -k.x, -k.y, k.x, 0.0);
    let (s, c) = angle.sin_cos();
    Matrix3::identity() + cross * s + cross * cross * (1.0 - c)
}

/// rest + sum_k beta_k * dir_k, connectivity shared with the template.
pub fn apply_shape(template: &BodyTemplate, beta: &ShapeParams) -> Result<PosedMesh, ModelError> {
    beta.check(template)?;
    let mut vertices = template.rest_vertices.clone();
    for (coef, dir) in beta.beta.iter().zip(&template.shape_dirs) {
        if *coef == 0.0 {
            continue;
        }
        for (v, d) in vertices.iter_mut().zip(&dir.offsets) {
            *v += d * *coef;
        }
    }
    Ok(PosedMesh::new(vertices, template.faces.clone()))
}

/// World rotation and world position per joint (root translation excluded).
struct JointFrames {
    rotations: Vec<Matrix3<f64>>,
    positions: Vec<Vec3>,
}

fn forward_kinematics(template: &BodyTemplate, theta: &PoseParams) -> JointFrames {
    let n = template.joint_count();
    let mut rotations = Vec::with_capacity(n);
    let mut positions = Vec::with_capacity(n);
    for j in 0..n {
        let local = axis_angle_to_matrix(&theta.theta[j]);
        match template.joint_parents[j] {
            None => {
                rotations.push(local);
                positions.push(template.joints_rest[j]);
            }
            Some(p) => {
                let offset = template.joints_rest[j] - template.joints_rest[p];
                let pos = positions[p] + rotations[p] * offset;
                rotations.push(rotations[p] * local);
                positions.push(pos);
            }
        }
    }
    JointFrames { rotations, positions }
}

/// Linear blend skinning of the shaped mesh.
pub fn skin(template: &BodyTemplate, beta: &ShapeParams, theta: &PoseParams) -> Result<PosedMesh, ModelError> {
    theta.check(template)?;
    let shaped = apply_shape(template, beta)?;
    let frames = forward_kinematics(template, theta);

    let vertices = shaped
        .vertices
        .iter()
        .zip(&template.skin_weights)
        .map(|(v, weights)| {
            let mut acc = Vec3::zeros();
            for &(j, w) in weights {
                let moved = frames.rotations[j] * (v - template.joints_rest[j]) + frames.positions[j];
                acc += moved * w;
            }
            acc + theta.root_translation
        })
        .collect();
    Ok(PosedMesh::new(vertices, shaped.faces))
}

/// Pose from one subject, shape from another.
pub fn recombine(template: &BodyTemplate, beta_target: &ShapeParams, theta_source: &PoseParams) -> Result<PosedMesh, ModelError> {
    skin(template, beta_target, theta_source)
}

/// Posed joint locations. Shape does not move joints, so `beta` is only
/// validated.
pub fn joint_positions(template: &BodyTemplate, beta: &ShapeParams, theta: &PoseParams) -> Result<Vec<Vec3>, ModelError> {
    beta.check(template)?;
    theta.check(template)?;
    let frames = forward_kinematics(template, theta);
    Ok(frames.positions.into_iter().map(|p| p + theta.root_translation).collect())
}
