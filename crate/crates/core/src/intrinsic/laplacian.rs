use std::collections::HashMap;

use crate::body_model::PosedMesh;
use crate::mesh::{triangle_area, validate_closed_manifold, TopologyError, Vec3};

/// Triangles at or below this area (m^2) are rejected.
pub const MIN_TRIANGLE_AREA: f64 = 1e-12;

/// Symmetric matrix in compressed-row form with both triangles stored.
///
/// Columns within a row are strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymmetricMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSymmetricMatrix {
    /// Builds from upper-triangle entries `(i, j, v)` with `i <= j`; each
    /// off-diagonal value is mirrored. Duplicate coordinates are summed.
    pub fn from_upper_triplets(dim: usize, entries: &[(usize, usize, f64)]) -> Self {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); dim];
        for &(i, j, v) in entries {
            assert!(i <= j && j < dim, "entry ({i}, {j}) outside upper triangle of {dim}");
            rows[i].push((j, v));
            if i != j {
                rows[j].push((i, v));
            }
        }
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            let mut last: Option<usize> = None;
            for (c, v) in row {
                if last == Some(c) {
                    *values.last_mut().unwrap() += v;
                } else {
                    cols.push(c);
                    values.push(v);
                    last = Some(c);
                }
            }
            row_ptr.push(cols.len());
        }
        Self {
            dim,
            row_ptr,
            cols,
            values,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `(col, value)` pairs of one row in column order.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[range.clone()].iter().copied().zip(self.values[range].iter().copied())
    }

    /// All stored `(row, col, value)` entries, row-major.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.dim).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[range.clone()].binary_search(&j) {
            Ok(k) => self.values[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.row(i).map(|(j, v)| v * x[j]).sum();
        }
    }

    pub fn is_symmetric(&self) -> bool {
        self.entries().all(|(i, j, v)| self.get(j, i) == v)
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.dim, self.dim);
        for (i, j, v) in self.entries() {
            m[(i, j)] = v;
        }
        m
    }
}

fn cot(apex: &Vec3, a: &Vec3, b: &Vec3) -> f64 {
    let u = a - apex;
    let v = b - apex;
    u.dot(&v) / u.cross(&v).norm()
}

/// Cotangent Laplacian (positive semi-definite sign convention) and
/// barycentric lumped vertex areas.
///
/// Off-diagonal `L[i][j] = -(cot a + cot b) / 2` over the angles opposite
/// edge `(i, j)`; the diagonal is minus the sum of its row's off-diagonals.
pub fn cotangent_laplacian(mesh: &PosedMesh) -> Result<(SparseSymmetricMatrix, Vec<f64>), TopologyError> {
    let n = mesh.vertices.len();
    validate_closed_manifold(&mesh.faces, n)?;

    let mut mass = vec![0.0; n];
    let mut weights: HashMap<(usize, usize), f64> = HashMap::with_capacity(mesh.faces.len() * 3 / 2);
    let mut order: Vec<(usize, usize)> = Vec::with_capacity(mesh.faces.len() * 3 / 2);
    for (fi, f) in mesh.faces.iter().enumerate() {
        let p = [mesh.vertices[f[0]], mesh.vertices[f[1]], mesh.vertices[f[2]]];
        let area = triangle_area(&p[0], &p[1], &p[2]);
        if !(area > MIN_TRIANGLE_AREA) {
            return Err(TopologyError::DegenerateTriangle { face: fi, area });
        }
        for c in 0..3 {
            mass[f[c]] += area / 3.0;
            let (i, j) = (f[(c + 1) % 3], f[(c + 2) % 3]);
            let key = if i < j { (i, j) } else { (j, i) };
            let half_cot = 0.5 * cot(&p[c], &p[(c + 1) % 3], &p[(c + 2) % 3]);
            match weights.get_mut(&key) {
                Some(w) => *w += half_cot,
                None => {
                    weights.insert(key, half_cot);
                    order.push(key);
                }
            }
        }
    }

    order.sort_unstable();
    let mut diag = vec![0.0; n];
    let mut entries = Vec::with_capacity(order.len() + n);
    for key in &order {
        let w = weights[key];
        entries.push((key.0, key.1, -w));
    }
    // Diagonal accumulated in the same column order the rows are stored in.
    let mut by_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for &(i, j, v) in &entries {
        by_row[i].push((j, v));
        by_row[j].push((i, v));
    }
    for (i, row) in by_row.iter_mut().enumerate() {
        row.sort_by_key(|&(c, _)| c);
        diag[i] = -row.iter().map(|&(_, v)| v).sum::<f64>();
    }
    for (i, d) in diag.into_iter().enumerate() {
        entries.push((i, i, d));
    }
    Ok((SparseSymmetricMatrix::from_upper_triplets(n, &entries), mass))
}
