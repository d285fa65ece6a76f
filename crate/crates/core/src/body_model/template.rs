//! Procedural low-poly humanoid in a T-pose.
//!
//! The body is a union of axis-aligned boxes (torso, neck, head, two arms
//! ending in mitten hands, two legs) voxelized on a rectilinear grid whose
//! lines include every box boundary. The boundary quads of the occupied
//! cells form a closed genus-0 cage, which is triangulated and refined with
//! Loop subdivision. Skin weights come from each vertex's position along
//! its kinematic chain, with a linear blend band past every joint.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{BodyTemplate, ModelError, ShapeDirection};
use crate::mesh::{loop_subdivide, validate_closed_manifold, Face, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShapeDirectionKind {
    /// Vertical stretch about the floor, 10% per unit coefficient.
    Height,
    /// Radial inflation of arms and legs about their bone axes.
    LimbThickness,
    /// Lateral widening of the trunk.
    TorsoWidth,
}

impl ShapeDirectionKind {
    fn name(self) -> &'static str {
        match self {
            ShapeDirectionKind::Height => "height",
            ShapeDirectionKind::LimbThickness => "limb-thickness",
            ShapeDirectionKind::TorsoWidth => "torso-width",
        }
    }
}

/// Body proportions in meters. `y` is up, `+x` is the subject's left and
/// `+z` points forward; the soles rest on `y = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TemplateConfig {
    pub torso_height: f64,
    pub torso_width: f64,
    pub torso_depth: f64,
    pub neck_length: f64,
    pub neck_width: f64,
    pub head_height: f64,
    pub head_width: f64,
    pub head_depth: f64,
    pub upper_arm_length: f64,
    pub forearm_length: f64,
    pub hand_length: f64,
    pub arm_thickness: f64,
    /// Distance from the top of the torso to the top of the arms.
    pub shoulder_drop: f64,
    pub thigh_length: f64,
    pub shin_length: f64,
    pub ankle_height: f64,
    pub leg_width: f64,
    pub leg_depth: f64,
    pub leg_gap: f64,
    /// Target edge length of the voxel cage.
    pub cell_size: f64,
    pub subdivision: u32,
    /// Length of the skin-weight transition past each joint.
    pub blend_width: f64,
    pub shape_directions: Vec<ShapeDirectionKind>,
}

impl Default for TemplateConfig {
    fn default() -> Self {
        Self {
            torso_height: 0.58,
            torso_width: 0.36,
            torso_depth: 0.22,
            neck_length: 0.08,
            neck_width: 0.11,
            head_height: 0.23,
            head_width: 0.18,
            head_depth: 0.2,
            upper_arm_length: 0.3,
            forearm_length: 0.26,
            hand_length: 0.18,
            arm_thickness: 0.09,
            shoulder_drop: 0.02,
            thigh_length: 0.42,
            shin_length: 0.38,
            ankle_height: 0.07,
            leg_width: 0.13,
            leg_depth: 0.14,
            leg_gap: 0.06,
            cell_size: 0.09,
            subdivision: 0,
            blend_width: 0.06,
            shape_directions: vec![ShapeDirectionKind::Height, ShapeDirectionKind::LimbThickness],
        }
    }
}

const JOINTS: [(&str, Option<usize>); 17] = [
    ("pelvis", None),
    ("spine", Some(0)),
    ("chest", Some(1)),
    ("neck", Some(2)),
    ("head", Some(3)),
    ("left_shoulder", Some(2)),
    ("left_elbow", Some(5)),
    ("left_wrist", Some(6)),
    ("right_shoulder", Some(2)),
    ("right_elbow", Some(8)),
    ("right_wrist", Some(9)),
    ("left_hip", Some(0)),
    ("left_knee", Some(11)),
    ("left_ankle", Some(12)),
    ("right_hip", Some(0)),
    ("right_knee", Some(14)),
    ("right_ankle", Some(15)),
];

const PELVIS: usize = 0;
const SPINE: usize = 1;
const CHEST: usize = 2;
const NECK: usize = 3;
const HEAD: usize = 4;
const LEFT_ARM: [usize; 3] = [5, 6, 7];
const RIGHT_ARM: [usize; 3] = [8, 9, 10];
const LEFT_LEG: [usize; 3] = [11, 12, 13];
const RIGHT_LEG: [usize; 3] = [14, 15, 16];

/// Per-unit-coefficient magnitude of every generated blendshape.
const SHAPE_RATE: f64 = 0.1;

#[derive(Debug, Clone, Copy)]
struct Aabb {
    min: [f64; 3],
    max: [f64; 3],
}

impl Aabb {
    fn contains(&self, p: [f64; 3]) -> bool {
        (0..3).all(|a| p[a] > self.min[a] && p[a] < self.max[a])
    }
}

/// Derived landmark coordinates shared by geometry, joints and weights.
struct Layout {
    hip_y: f64,
    knee_y: f64,
    spine_y: f64,
    chest_y: f64,
    neck_y: f64,
    head_y: f64,
    head_top: f64,
    torso_half_w: f64,
    elbow_x: f64,
    wrist_x: f64,
    hand_tip_x: f64,
    arm_y: f64,
    leg_x: f64,
    ankle_y: f64,
    blend: f64,
}

impl Layout {
    fn new(c: &TemplateConfig) -> Self {
        let hip_y = c.ankle_height + c.shin_length + c.thigh_length;
        let neck_y = hip_y + c.torso_height;
        let torso_half_w = 0.5 * c.torso_width;
        let elbow_x = torso_half_w + c.upper_arm_length;
        let wrist_x = elbow_x + c.forearm_length;
        Self {
            hip_y,
            knee_y: hip_y - c.thigh_length,
            spine_y: hip_y + 0.3 * c.torso_height,
            chest_y: hip_y + 0.62 * c.torso_height,
            neck_y,
            head_y: neck_y + c.neck_length,
            head_top: neck_y + c.neck_length + c.head_height,
            torso_half_w,
            elbow_x,
            wrist_x,
            hand_tip_x: wrist_x + c.hand_length,
            arm_y: neck_y - c.shoulder_drop - 0.5 * c.arm_thickness,
            leg_x: 0.5 * c.leg_gap + 0.5 * c.leg_width,
            ankle_y: c.ankle_height,
            blend: c.blend_width,
        }
    }

    fn boxes(&self, c: &TemplateConfig) -> Vec<Aabb> {
        let hw = self.torso_half_w;
        let arm_top = self.neck_y - c.shoulder_drop;
        let arm_bottom = arm_top - c.arm_thickness;
        let mut boxes = vec![
            Aabb {
                min: [-hw, self.hip_y, -0.5 * c.torso_depth],
                max: [hw, self.neck_y, 0.5 * c.torso_depth],
            },
            Aabb {
                min: [-0.5 * c.neck_width, self.neck_y, -0.5 * c.neck_width],
                max: [0.5 * c.neck_width, self.head_y, 0.5 * c.neck_width],
            },
            Aabb {
                min: [-0.5 * c.head_width, self.head_y, -0.5 * c.head_depth],
                max: [0.5 * c.head_width, self.head_top, 0.5 * c.head_depth],
            },
        ];
        for side in [1.0, -1.0] {
            let (a, b) = (side * hw, side * self.hand_tip_x);
            boxes.push(Aabb {
                min: [a.min(b), arm_bottom, -0.5 * c.arm_thickness],
                max: [a.max(b), arm_top, 0.5 * c.arm_thickness],
            });
            let (a, b) = (side * 0.5 * c.leg_gap, side * (0.5 * c.leg_gap + c.leg_width));
            boxes.push(Aabb {
                min: [a.min(b), 0.0, -0.5 * c.leg_depth],
                max: [a.max(b), self.hip_y, 0.5 * c.leg_depth],
            });
        }
        boxes
    }

    fn joints(&self) -> Vec<Vec3> {
        let mut j = vec![Vec3::zeros(); JOINTS.len()];
        j[PELVIS] = Vec3::new(0.0, self.hip_y, 0.0);
        j[SPINE] = Vec3::new(0.0, self.spine_y, 0.0);
        j[CHEST] = Vec3::new(0.0, self.chest_y, 0.0);
        j[NECK] = Vec3::new(0.0, self.neck_y, 0.0);
        j[HEAD] = Vec3::new(0.0, self.head_y, 0.0);
        for (side, arm, leg) in [(1.0, LEFT_ARM, LEFT_LEG), (-1.0, RIGHT_ARM, RIGHT_LEG)] {
            j[arm[0]] = Vec3::new(side * self.torso_half_w, self.arm_y, 0.0);
            j[arm[1]] = Vec3::new(side * self.elbow_x, self.arm_y, 0.0);
            j[arm[2]] = Vec3::new(side * self.wrist_x, self.arm_y, 0.0);
            j[leg[0]] = Vec3::new(side * self.leg_x, self.hip_y, 0.0);
            j[leg[1]] = Vec3::new(side * self.leg_x, self.knee_y, 0.0);
            j[leg[2]] = Vec3::new(side * self.leg_x, self.ankle_y, 0.0);
        }
        j
    }

    /// Far end of the bone owned by each limb joint (None for trunk joints).
    fn limb_segment_end(&self, joint: usize, joints: &[Vec3]) -> Option<Vec3> {
        let side = if LEFT_ARM.contains(&joint) || LEFT_LEG.contains(&joint) {
            1.0
        } else {
            -1.0
        };
        match joint {
            5 | 6 | 8 | 9 | 11 | 12 | 14 | 15 => Some(joints[joint + 1]),
            7 | 10 => Some(Vec3::new(side * self.hand_tip_x, self.arm_y, 0.0)),
            13 | 16 => Some(Vec3::new(side * self.leg_x, 0.0, 0.0)),
            _ => None,
        }
    }

    /// Chain of joints and the coordinate along it at which each successive
    /// joint takes over, for the body region containing `p`.
    fn chain_weights(&self, p: &Vec3) -> Vec<(usize, f64)> {
        let (chain, bounds, s): (&[usize], Vec<f64>, f64) = if p.y < self.hip_y {
            let leg = if p.x >= 0.0 { LEFT_LEG } else { RIGHT_LEG };
            let depth = self.hip_y - p.y;
            (
                &[PELVIS, leg[0], leg[1], leg[2]][..],
                vec![0.0, self.hip_y - self.knee_y, self.hip_y - self.ankle_y],
                depth,
            )
        } else if p.x.abs() >= self.torso_half_w {
            let arm = if p.x >= 0.0 { LEFT_ARM } else { RIGHT_ARM };
            (
                &[CHEST, arm[0], arm[1], arm[2]][..],
                vec![self.torso_half_w, self.elbow_x, self.wrist_x],
                p.x.abs(),
            )
        } else {
            (
                &[PELVIS, SPINE, CHEST, NECK, HEAD][..],
                vec![self.spine_y, self.chest_y, self.neck_y, self.head_y],
                p.y,
            )
        };
        blend_along_chain(chain, &bounds, s, self.blend)
    }
}

/// Joint `chain[k]` owns coordinates at or past `bounds[k - 1]`; within
/// `blend` of that boundary the weight ramps linearly from its parent.
fn blend_along_chain(chain: &[usize], bounds: &[f64], s: f64, blend: f64) -> Vec<(usize, f64)> {
    let k = bounds.iter().take_while(|&&b| s >= b).count();
    if k == 0 {
        return vec![(chain[0], 1.0)];
    }
    let into = s - bounds[k - 1];
    if blend > 0.0 && into < blend {
        let t = into / blend;
        if t == 0.0 {
            return vec![(chain[k - 1], 1.0)];
        }
        return vec![(chain[k - 1], 1.0 - t), (chain[k], t)];
    }
    vec![(chain[k], 1.0)]
}

fn validate_config(c: &TemplateConfig) -> Result<(), ModelError> {
    let positive = [
        ("torso_height", c.torso_height),
        ("torso_width", c.torso_width),
        ("torso_depth", c.torso_depth),
        ("neck_length", c.neck_length),
        ("neck_width", c.neck_width),
        ("head_height", c.head_height),
        ("head_width", c.head_width),
        ("head_depth", c.head_depth),
        ("upper_arm_length", c.upper_arm_length),
        ("forearm_length", c.forearm_length),
        ("hand_length", c.hand_length),
        ("arm_thickness", c.arm_thickness),
        ("thigh_length", c.thigh_length),
        ("shin_length", c.shin_length),
        ("ankle_height", c.ankle_height),
        ("leg_width", c.leg_width),
        ("leg_depth", c.leg_depth),
        ("cell_size", c.cell_size),
    ];
    for (name, value) in positive {
        if !(value > 0.0) || !value.is_finite() {
            return Err(ModelError::InvalidConfig(format!(
                "{name} must be positive and finite, got {value}"
            )));
        }
    }
    for (name, value) in [("leg_gap", c.leg_gap), ("blend_width", c.blend_width)] {
        if !(value >= 0.0) || !value.is_finite() {
            return Err(ModelError::InvalidConfig(format!(
                "{name} must be non-negative and finite, got {value}"
            )));
        }
    }
    if !c.shoulder_drop.is_finite() {
        return Err(ModelError::InvalidConfig("shoulder_drop must be finite".into()));
    }
    if c.head_width > c.torso_width || c.neck_width > c.torso_width {
        return Err(ModelError::InvalidConfig("head and neck must not be wider than the torso".into()));
    }
    if c.subdivision > 4 {
        return Err(ModelError::InvalidConfig(format!(
            "subdivision level {} is above the supported maximum of 4",
            c.subdivision
        )));
    }
    Ok(())
}

/// Sorted, deduplicated breakpoints, each interval split into cells no
/// longer than `cell`.
fn grid_lines(mut breaks: Vec<f64>, cell: f64) -> Vec<f64> {
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    let mut lines = Vec::new();
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let n = ((b - a) / cell - 1e-9).ceil().max(1.0) as usize;
        for i in 0..n {
            lines.push(a + (b - a) * i as f64 / n as f64);
        }
    }
    lines.push(*breaks.last().unwrap());
    lines
}

/// Boundary surface of the occupied voxels as outward-wound triangles.
fn voxel_surface(xs: &[f64], ys: &[f64], zs: &[f64], boxes: &[Aabb]) -> (Vec<Vec3>, Vec<Face>) {
    let (nx, ny, nz) = (xs.len() - 1, ys.len() - 1, zs.len() - 1);
    let mut occupied = vec![false; nx * ny * nz];
    let idx = |i: usize, j: usize, k: usize| (i * ny + j) * nz + k;
    for i in 0..nx {
        for j in 0..ny {
            for k in 0..nz {
                let center = [0.5 * (xs[i] + xs[i + 1]), 0.5 * (ys[j] + ys[j + 1]), 0.5 * (zs[k] + zs[k + 1])];
                occupied[idx(i, j, k)] = boxes.iter().any(|b| b.contains(center));
            }
        }
    }
    let filled = |i: isize, j: isize, k: isize| -> bool {
        if i < 0 || j < 0 || k < 0 || i >= nx as isize || j >= ny as isize || k >= nz as isize {
            return false;
        }
        occupied[idx(i as usize, j as usize, k as usize)]
    };

    let mut lookup: HashMap<(usize, usize, usize), usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    let mut vertex = |g: (usize, usize, usize), vertices: &mut Vec<Vec3>| -> usize {
        *lookup.entry(g).or_insert_with(|| {
            vertices.push(Vec3::new(xs[g.0], ys[g.1], zs[g.2]));
            vertices.len() - 1
        })
    };

    for i in 0..nx {
        for j in 0..ny {
            for k in 0..nz {
                if !occupied[idx(i, j, k)] {
                    continue;
                }
                let (ii, jj, kk) = (i as isize, j as isize, k as isize);
                // Corners listed counter-clockwise seen from outside.
                let mut quads: Vec<[(usize, usize, usize); 4]> = Vec::new();
                if !filled(ii + 1, jj, kk) {
                    quads.push([(i + 1, j, k), (i + 1, j + 1, k), (i + 1, j + 1, k + 1), (i + 1, j, k + 1)]);
                }
                if !filled(ii - 1, jj, kk) {
                    quads.push([(i, j, k + 1), (i, j + 1, k + 1), (i, j + 1, k), (i, j, k)]);
                }
                if !filled(ii, jj + 1, kk) {
                    quads.push([(i, j + 1, k), (i, j + 1, k + 1), (i + 1, j + 1, k + 1), (i + 1, j + 1, k)]);
                }
                if !filled(ii, jj - 1, kk) {
                    quads.push([(i + 1, j, k), (i + 1, j, k + 1), (i, j, k + 1), (i, j, k)]);
                }
                if !filled(ii, jj, kk + 1) {
                    quads.push([(i, j, k + 1), (i + 1, j, k + 1), (i + 1, j + 1, k + 1), (i, j + 1, k + 1)]);
                }
                if !filled(ii, jj, kk - 1) {
                    quads.push([(i, j + 1, k), (i + 1, j + 1, k), (i + 1, j, k), (i, j, k)]);
                }
                for q in quads {
                    let c = q.map(|g| vertex(g, &mut vertices));
                    faces.push([c[0], c[1], c[2]]);
                    faces.push([c[0], c[2], c[3]]);
                }
            }
        }
    }
    (vertices, faces)
}

/// Builds the humanoid template. Deterministic for a fixed config.
pub fn build_template(config: &TemplateConfig) -> Result<BodyTemplate, ModelError> {
    validate_config(config)?;
    let layout = Layout::new(config);
    let boxes = layout.boxes(config);

    let mut xb = vec![0.0];
    let mut yb = vec![0.0, layout.hip_y, layout.neck_y, layout.head_y, layout.head_top];
    let mut zb = vec![0.0];
    for b in &boxes {
        xb.extend_from_slice(&[b.min[0], b.max[0]]);
        yb.extend_from_slice(&[b.min[1], b.max[1]]);
        zb.extend_from_slice(&[b.min[2], b.max[2]]);
    }
    let xs = grid_lines(xb, config.cell_size);
    let ys = grid_lines(yb, config.cell_size);
    let zs = grid_lines(zb, config.cell_size);

    let (mut vertices, mut faces) = voxel_surface(&xs, &ys, &zs, &boxes);
    validate_closed_manifold(&faces, vertices.len())?;
    for _ in 0..config.subdivision {
        (vertices, faces) = loop_subdivide(&vertices, &faces);
    }

    let joints = layout.joints();
    let weights: Vec<Vec<(usize, f64)>> = vertices.iter().map(|p| layout.chain_weights(p)).collect();

    let shape_dirs = config
        .shape_directions
        .iter()
        .map(|&kind| ShapeDirection {
            name: kind.name().to_string(),
            offsets: vertices
                .iter()
                .zip(&weights)
                .map(|(p, w)| shape_offset(kind, p, w, &layout, &joints))
                .collect(),
        })
        .collect();

    BodyTemplate::new(
        vertices,
        faces,
        JOINTS.iter().map(|(n, _)| n.to_string()).collect(),
        joints,
        JOINTS.iter().map(|(_, p)| *p).collect(),
        weights,
        shape_dirs,
    )
}

fn shape_offset(kind: ShapeDirectionKind, p: &Vec3, weights: &[(usize, f64)], layout: &Layout, joints: &[Vec3]) -> Vec3 {
    match kind {
        ShapeDirectionKind::Height => Vec3::new(0.0, SHAPE_RATE * p.y, 0.0),
        ShapeDirectionKind::LimbThickness => {
            let mut d = Vec3::zeros();
            for &(j, w) in weights {
                if let Some(end) = layout.limb_segment_end(j, joints) {
                    let axis = (end - joints[j]).normalize();
                    let rel = p - joints[j];
                    d += (rel - axis * rel.dot(&axis)) * (w * SHAPE_RATE);
                }
            }
            d
        }
        ShapeDirectionKind::TorsoWidth => {
            let trunk: f64 = weights
                .iter()
                .filter(|(j, _)| matches!(*j, PELVIS | SPINE | CHEST))
                .map(|(_, w)| w)
                .sum();
            Vec3::new(SHAPE_RATE * p.x * trunk, 0.0, 0.0)
        }
    }
}
