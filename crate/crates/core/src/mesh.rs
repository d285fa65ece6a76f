//! Triangle-mesh topology: closed-manifold validation, Loop subdivision and
//! minimal Wavefront OBJ import/export.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read};

use nalgebra::Vector3;
use thiserror::Error;

use crate::format::FormatError;

pub type Vec3 = Vector3<f64>;
pub type Face = [usize; 3];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TopologyError {
    #[error("face {face} references vertex {index} but the mesh has {vertex_count} vertices")]
    IndexOutOfRange { face: usize, index: usize, vertex_count: usize },
    #[error("face {face} repeats a vertex")]
    RepeatedVertex { face: usize },
    #[error("edge ({a}, {b}) is used by {faces} face(s); a closed manifold needs exactly 2")]
    NonManifoldEdge { a: usize, b: usize, faces: usize },
    #[error("edge ({a}, {b}) is traversed twice in the same direction (inconsistent orientation)")]
    InconsistentOrientation { a: usize, b: usize },
    #[error("vertex {vertex} has a non-disk neighborhood ({fans} face fans)")]
    NonManifoldVertex { vertex: usize, fans: usize },
    #[error("vertex {vertex} is not referenced by any face")]
    IsolatedVertex { vertex: usize },
    #[error("mesh has {components} connected components, expected 1")]
    Disconnected { components: usize },
    #[error("triangle {face} is degenerate (area {area:e})")]
    DegenerateTriangle { face: usize, area: f64 },
    #[error("mesh has no faces")]
    Empty,
}

/// Summary of a validated closed, connected, 2-manifold triangle mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MeshReport {
    pub vertices: usize,
    pub edges: usize,
    pub faces: usize,
    /// V - E + F
    pub euler_characteristic: i64,
}

impl MeshReport {
    pub fn genus(&self) -> i64 {
        (2 - self.euler_characteristic) / 2
    }
}

#[inline]
fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Directed edge -> face index. Fails on out-of-range indices, repeated
/// corners, or an edge traversed twice in the same direction.
fn directed_edges(faces: &[Face], vertex_count: usize) -> Result<HashMap<(usize, usize), usize>, TopologyError> {
    let mut directed = HashMap::with_capacity(faces.len() * 3);
    for (fi, f) in faces.iter().enumerate() {
        for &idx in f {
            if idx >= vertex_count {
                return Err(TopologyError::IndexOutOfRange {
                    face: fi,
                    index: idx,
                    vertex_count,
                });
            }
        }
        if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
            return Err(TopologyError::RepeatedVertex { face: fi });
        }
        for c in 0..3 {
            let (a, b) = (f[c], f[(c + 1) % 3]);
            if directed.insert((a, b), fi).is_some() {
                return Err(TopologyError::InconsistentOrientation { a, b });
            }
        }
    }
    Ok(directed)
}

/// Checks that `faces` describe a closed, consistently oriented, connected
/// 2-manifold over `vertex_count` vertices.
pub fn validate_closed_manifold(faces: &[Face], vertex_count: usize) -> Result<MeshReport, TopologyError> {
    if faces.is_empty() {
        return Err(TopologyError::Empty);
    }

    // Edge valence first so that T-junction style errors report the edge.
    let mut valence: HashMap<(usize, usize), usize> = HashMap::with_capacity(faces.len() * 3 / 2);
    let mut edge_order = Vec::with_capacity(faces.len() * 3 / 2);
    for f in faces {
        for c in 0..3 {
            let key = edge_key(f[c], f[(c + 1) % 3]);
            let count = valence.entry(key).or_insert(0);
            if *count == 0 {
                edge_order.push(key);
            }
            *count += 1;
        }
    }
    for key in &edge_order {
        let n = valence[key];
        if n != 2 {
            return Err(TopologyError::NonManifoldEdge {
                a: key.0,
                b: key.1,
                faces: n,
            });
        }
    }

    let directed = directed_edges(faces, vertex_count)?;

    // Each vertex must carry exactly one fan of faces.
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); vertex_count];
    for (fi, f) in faces.iter().enumerate() {
        for &v in f {
            incident[v].push(fi);
        }
    }
    for (v, fs) in incident.iter().enumerate() {
        if fs.is_empty() {
            return Err(TopologyError::IsolatedVertex { vertex: v });
        }
        // Walk around v: the face across edge (v, prev) continues the fan,
        // since that neighbor traverses (v, prev) in its own winding.
        let mut seen = vec![false; fs.len()];
        let mut fans = 0usize;
        while let Some(start_slot) = seen.iter().position(|s| !s) {
            fans += 1;
            let start = fs[start_slot];
            let mut current = start;
            loop {
                let slot = fs.iter().position(|&x| x == current).unwrap();
                seen[slot] = true;
                let f = faces[current];
                let c = f.iter().position(|&x| x == v).unwrap();
                let prev = f[(c + 2) % 3];
                current = directed[&(v, prev)];
                if current == start {
                    break;
                }
            }
        }
        if fans != 1 {
            return Err(TopologyError::NonManifoldVertex { vertex: v, fans });
        }
    }

    let components = count_components(faces, vertex_count);
    if components != 1 {
        return Err(TopologyError::Disconnected { components });
    }

    let edges = edge_order.len();
    Ok(MeshReport {
        vertices: vertex_count,
        edges,
        faces: faces.len(),
        euler_characteristic: vertex_count as i64 - edges as i64 + faces.len() as i64,
    })
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Number of vertex-connected components among referenced vertices.
pub fn count_components(faces: &[Face], vertex_count: usize) -> usize {
    let mut parent: Vec<usize> = (0..vertex_count).collect();
    let mut used = vec![false; vertex_count];
    for f in faces {
        for c in 0..3 {
            used[f[c]] = true;
            let a = find(&mut parent, f[c]);
            let b = find(&mut parent, f[(c + 1) % 3]);
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    (0..vertex_count).filter(|&v| used[v] && find(&mut parent, v) == v).count()
}

pub fn triangle_area(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    0.5 * (b - a).cross(&(c - a)).norm()
}

/// One level of Loop subdivision on a closed triangle mesh.
///
/// Original vertices keep their indices; new edge vertices follow in order
/// of first appearance while scanning faces. Every face becomes four.
pub fn loop_subdivide(vertices: &[Vec3], faces: &[Face]) -> (Vec<Vec3>, Vec<Face>) {
    let n = vertices.len();
    let mut edge_vertex: HashMap<(usize, usize), usize> = HashMap::with_capacity(faces.len() * 3 / 2);
    let mut edge_list: Vec<(usize, usize)> = Vec::with_capacity(faces.len() * 3 / 2);
    let mut opposite: HashMap<(usize, usize), [usize; 2]> = HashMap::with_capacity(faces.len() * 3 / 2);

    for f in faces {
        for c in 0..3 {
            let (a, b, o) = (f[c], f[(c + 1) % 3], f[(c + 2) % 3]);
            let key = edge_key(a, b);
            if !edge_vertex.contains_key(&key) {
                edge_vertex.insert(key, n + edge_list.len());
                edge_list.push(key);
                opposite.insert(key, [o, usize::MAX]);
            } else {
                opposite.get_mut(&key).unwrap()[1] = o;
            }
        }
    }

    // One-ring neighbors in deterministic (first-seen) order.
    let mut ring: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(a, b) in &edge_list {
        ring[a].push(b);
        ring[b].push(a);
    }

    let mut out = Vec::with_capacity(n + edge_list.len());
    for (v, p) in vertices.iter().enumerate() {
        let k = ring[v].len() as f64;
        let inner = 3.0 / 8.0 + 0.25 * (2.0 * std::f64::consts::PI / k).cos();
        let beta = (5.0 / 8.0 - inner * inner) / k;
        let mut sum = Vec3::zeros();
        for &u in &ring[v] {
            sum += vertices[u];
        }
        out.push(p * (1.0 - k * beta) + sum * beta);
    }
    for key in &edge_list {
        let [o1, o2] = opposite[key];
        let (a, b) = *key;
        let mut p = (vertices[a] + vertices[b]) * (3.0 / 8.0);
        if o2 == usize::MAX {
            p = (vertices[a] + vertices[b]) * 0.5;
        } else {
            p += (vertices[o1] + vertices[o2]) * (1.0 / 8.0);
        }
        out.push(p);
    }

    let mut new_faces = Vec::with_capacity(faces.len() * 4);
    for f in faces {
        let ab = edge_vertex[&edge_key(f[0], f[1])];
        let bc = edge_vertex[&edge_key(f[1], f[2])];
        let ca = edge_vertex[&edge_key(f[2], f[0])];
        new_faces.push([f[0], ab, ca]);
        new_faces.push([ab, f[1], bc]);
        new_faces.push([ca, bc, f[2]]);
        new_faces.push([ab, bc, ca]);
    }
    (out, new_faces)
}

/// Geodesic-free icosphere: an icosahedron refined `levels` times with
/// midpoint subdivision and re-projection onto the unit sphere.
pub fn icosphere(levels: usize) -> (Vec<Vec3>, Vec<Face>) {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vec3> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z).normalize())
    .collect();
    let mut faces: Vec<Face> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..levels {
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        let mut mid = |a: usize, b: usize, vs: &mut Vec<Vec3>| -> usize {
            *midpoint.entry(edge_key(a, b)).or_insert_with(|| {
                vs.push(((vs[a] + vs[b]) * 0.5).normalize());
                vs.len() - 1
            })
        };
        for f in &faces {
            let ab = mid(f[0], f[1], &mut vertices);
            let bc = mid(f[1], f[2], &mut vertices);
            let ca = mid(f[2], f[0], &mut vertices);
            next.push([f[0], ab, ca]);
            next.push([ab, f[1], bc]);
            next.push([ca, bc, f[2]]);
            next.push([ab, bc, ca]);
        }
        faces = next;
    }
    (vertices, faces)
}

/// Regular tetrahedron with unit edge length, outward-oriented faces.
pub fn regular_tetrahedron() -> (Vec<Vec3>, Vec<Face>) {
    let s = 1.0 / (2.0 * 2f64.sqrt());
    let vertices = vec![Vec3::new(s, s, s), Vec3::new(s, -s, -s), Vec3::new(-s, s, -s), Vec3::new(-s, -s, s)];
    let faces = vec![[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]];
    (vertices, faces)
}

/// Serializes vertices and faces as Wavefront OBJ (1-based indices).
pub fn write_obj(vertices: &[Vec3], faces: &[Face]) -> String {
    let mut out = String::with_capacity(vertices.len() * 40 + faces.len() * 20);
    for v in vertices {
        let _ = writeln!(out, "v {} {} {}", v.x, v.y, v.z);
    }
    for f in faces {
        let _ = writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    out
}

/// Reads `v` and `f` records from OBJ text. Polygons are fan-triangulated;
/// `v/vt/vn` index forms and negative (relative) indices are accepted.
pub fn read_obj<R: Read>(reader: R) -> Result<(Vec<Vec3>, Vec<Face>), FormatError> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (lineno, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let mut xyz = [0.0; 3];
                for slot in &mut xyz {
                    let tok = tokens
                        .next()
                        .ok_or_else(|| FormatError::parse(lineno + 1, "vertex needs 3 coordinates"))?;
                    *slot = tok.parse().map_err(|_| FormatError::parse(lineno + 1, "bad vertex coordinate"))?;
                }
                vertices.push(Vec3::new(xyz[0], xyz[1], xyz[2]));
            }
            Some("f") => {
                let mut poly = Vec::new();
                for tok in tokens {
                    let idx_str = tok.split('/').next().unwrap_or("");
                    let idx: i64 = idx_str.parse().map_err(|_| FormatError::parse(lineno + 1, "bad face index"))?;
                    let resolved = if idx > 0 { idx - 1 } else { vertices.len() as i64 + idx };
                    if resolved < 0 {
                        return Err(FormatError::parse(lineno + 1, "face index out of range"));
                    }
                    poly.push(resolved as usize);
                }
                if poly.len() < 3 {
                    return Err(FormatError::parse(lineno + 1, "face needs at least 3 vertices"));
                }
                for i in 1..poly.len() - 1 {
                    faces.push([poly[0], poly[i], poly[i + 1]]);
                }
            }
            _ => {}
        }
    }
    Ok((vertices, faces))
}
