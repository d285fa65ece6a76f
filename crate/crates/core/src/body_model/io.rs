//! Template import/export: geometry as OBJ, everything else in a `BTPL/1`
//! JSON sidecar.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BodyTemplate, ShapeDirection};
use crate::format::{from_document, to_document, FormatError};
use crate::mesh::{read_obj, write_obj, Vec3};

pub const BTPL_FORMAT: &str = "BTPL/1";

#[derive(Serialize, Deserialize)]
struct BtplDocument {
    format: String,
    vertex_count: usize,
    face_count: usize,
    joints: Vec<JointRecord>,
    skin_weights: Vec<Vec<(usize, f64)>>,
    shape_dirs: Vec<ShapeDirRecord>,
}

#[derive(Serialize, Deserialize)]
struct JointRecord {
    name: String,
    parent: Option<usize>,
    rest: [f64; 3],
}

#[derive(Serialize, Deserialize)]
struct ShapeDirRecord {
    name: String,
    offsets: Vec<[f64; 3]>,
}

fn arr(v: &Vec3) -> [f64; 3] {
    [v.x, v.y, v.z]
}

/// Returns (OBJ text, BTPL/1 sidecar text).
pub fn template_to_strings(template: &BodyTemplate) -> Result<(String, String), FormatError> {
    let obj = write_obj(template.rest_vertices(), template.faces());
    let doc = BtplDocument {
        format: BTPL_FORMAT.to_string(),
        vertex_count: template.vertex_count(),
        face_count: template.faces().len(),
        joints: (0..template.joint_count())
            .map(|j| JointRecord {
                name: template.joint_names()[j].clone(),
                parent: template.joint_parents()[j],
                rest: arr(&template.joints_rest()[j]),
            })
            .collect(),
        skin_weights: template.skin_weights().to_vec(),
        shape_dirs: template
            .shape_dirs()
            .iter()
            .map(|d| ShapeDirRecord {
                name: d.name.clone(),
                offsets: d.offsets.iter().map(arr).collect(),
            })
            .collect(),
    };
    Ok((obj, to_document(&doc)?))
}

pub fn template_from_strings(obj: &str, sidecar: &str) -> Result<BodyTemplate, FormatError> {
    let doc: BtplDocument = from_document(sidecar, BTPL_FORMAT)?;
    let (vertices, faces) = read_obj(obj.as_bytes())?;
    if vertices.len() != doc.vertex_count || faces.len() != doc.face_count {
        return Err(FormatError::Inconsistent(format!(
            "sidecar describes {} vertices / {} faces, OBJ has {} / {}",
            doc.vertex_count,
            doc.face_count,
            vertices.len(),
            faces.len()
        )));
    }
    let to_vec = |a: [f64; 3]| Vec3::new(a[0], a[1], a[2]);
    BodyTemplate::new(
        vertices,
        faces,
        doc.joints.iter().map(|j| j.name.clone()).collect(),
        doc.joints.iter().map(|j| to_vec(j.rest)).collect(),
        doc.joints.iter().map(|j| j.parent).collect(),
        doc.skin_weights,
        doc.shape_dirs
            .into_iter()
            .map(|d| ShapeDirection {
                name: d.name,
                offsets: d.offsets.into_iter().map(to_vec).collect(),
            })
            .collect(),
    )
    .map_err(|e| FormatError::Inconsistent(e.to_string()))
}

pub fn write_template(template: &BodyTemplate, obj_path: &Path, sidecar_path: &Path) -> Result<(), FormatError> {
    let (obj, sidecar) = template_to_strings(template)?;
    fs::write(obj_path, obj)?;
    fs::write(sidecar_path, sidecar)?;
    Ok(())
}

pub fn read_template(obj_path: &Path, sidecar_path: &Path) -> Result<BodyTemplate, FormatError> {
    let obj = fs::read_to_string(obj_path)?;
    let sidecar = fs::read_to_string(sidecar_path)?;
    template_from_strings(&obj, &sidecar)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body_model::{build_template, TemplateConfig};

    #[test]
    fn round_trip_is_bit_identical() {
        let t = build_template(&TemplateConfig::default()).unwrap();
        let (obj, side) = template_to_strings(&t).unwrap();
        let back = template_from_strings(&obj, &side).unwrap();
        assert_eq!(back, t);
        let (obj2, side2) = template_to_strings(&back).unwrap();
        assert_eq!(obj, obj2);
        assert_eq!(side, side2);
    }

    #[test]
    fn wrong_version_is_a_schema_error() {
        let t = build_template(&TemplateConfig::default()).unwrap();
        let (obj, side) = template_to_strings(&t).unwrap();
        let corrupted = side.replacen("BTPL/1", "BTPL/9", 1);
        match template_from_strings(&obj, &corrupted) {
            Err(FormatError::SchemaVersion { found, .. }) => assert_eq!(found, "BTPL/9"),
            other => panic!("unexpected {other:?}"),
        }
        match template_from_strings(&obj, "garbage") {
            Err(FormatError::SchemaVersion { .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn mismatched_obj_is_rejected() {
        let t = build_template(&TemplateConfig::default()).unwrap();
        let (_, side) = template_to_strings(&t).unwrap();
        let (v, f) = crate::mesh::icosphere(1);
        let err = template_from_strings(&write_obj(&v, &f), &side).unwrap_err();
        assert!(matches!(err, FormatError::Inconsistent(_)));
    }
}
