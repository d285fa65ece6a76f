//! Envelope (skyline) Cholesky factorization of a sparse SPD matrix under a
//! reverse Cuthill-McKee ordering. Mesh Laplacians reordered this way have a
//! narrow profile, so dense row segments are cheap to store and factor.

use std::collections::VecDeque;

use super::laplacian::SparseSymmetricMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct NotPositiveDefinite {
    pub pivot: usize,
    pub value: f64,
}

/// `perm[new] = old`.
pub fn reverse_cuthill_mckee(matrix: &SparseSymmetricMatrix) -> Vec<usize> {
    let n = matrix.dim();
    let degree: Vec<usize> = (0..n).map(|i| matrix.row(i).filter(|&(j, _)| j != i).count()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);

    let bfs_levels = |start: usize| -> (usize, usize) {
        // (eccentricity, a farthest node of minimum degree)
        let mut dist = vec![usize::MAX; n];
        let mut queue = VecDeque::from([start]);
        dist[start] = 0;
        let mut far = start;
        while let Some(u) = queue.pop_front() {
            let better = dist[u] > dist[far] || (dist[u] == dist[far] && degree[u] < degree[far]);
            if better {
                far = u;
            }
            for (v, _) in matrix.row(u) {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        (dist[far], far)
    };

    while order.len() < n {
        // Lowest-degree unvisited node, then walk to a pseudo-peripheral one.
        let mut start = (0..n).filter(|&i| !visited[i]).min_by_key(|&i| (degree[i], i)).unwrap();
        let (mut ecc, mut far) = bfs_levels(start);
        for _ in 0..8 {
            let (e2, f2) = bfs_levels(far);
            if e2 <= ecc {
                break;
            }
            start = far;
            ecc = e2;
            far = f2;
        }

        let begin = order.len();
        visited[start] = true;
        order.push(start);
        let mut head = begin;
        while head < order.len() {
            let u = order[head];
            head += 1;
            let mut next: Vec<usize> = matrix.row(u).map(|(v, _)| v).filter(|&v| !visited[v]).collect();
            next.sort_by_key(|&v| (degree[v], v));
            for v in next {
                visited[v] = true;
                order.push(v);
            }
        }
    }
    order.reverse();
    order
}

/// Lower-triangular factor `L` with `P A P^T = L L^T`.
#[derive(Debug, Clone)]
pub struct EnvelopeCholesky {
    perm: Vec<usize>,
    /// First stored column of each (permuted) row.
    first: Vec<usize>,
    /// Offset of each row's segment in `values`.
    start: Vec<usize>,
    values: Vec<f64>,
}

impl EnvelopeCholesky {
    pub fn factor(matrix: &SparseSymmetricMatrix) -> Result<Self, NotPositiveDefinite> {
        let n = matrix.dim();
        let perm = reverse_cuthill_mckee(matrix);
        let mut inverse = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inverse[old] = new;
        }

        let mut first = vec![0; n];
        for (i, f) in first.iter_mut().enumerate() {
            *f = matrix.row(perm[i]).map(|(j, _)| inverse[j]).filter(|&j| j <= i).min().unwrap_or(i);
        }
        let mut start = Vec::with_capacity(n + 1);
        let mut total = 0;
        for i in 0..n {
            start.push(total);
            total += i - first[i] + 1;
        }
        start.push(total);
        let mut values = vec![0.0; total];
        for i in 0..n {
            for (j, v) in matrix.row(perm[i]) {
                let jj = inverse[j];
                if jj <= i {
                    values[start[i] + jj - first[i]] = v;
                }
            }
        }

        for i in 0..n {
            let fi = first[i];
            for j in fi..i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let mut sum = values[start[i] + j - fi];
                for k in k0..j {
                    sum -= values[start[i] + k - fi] * values[start[j] + k - fj];
                }
                values[start[i] + j - fi] = sum / values[start[j] + j - fj];
            }
            let mut d = values[start[i] + i - fi];
            for k in fi..i {
                let l = values[start[i] + k - fi];
                d -= l * l;
            }
            if !(d > 0.0) {
                return Err(NotPositiveDefinite { pivot: perm[i], value: d });
            }
            values[start[i] + i - fi] = d.sqrt();
        }

        Ok(Self {
            perm,
            first,
            start,
            values,
        })
    }

    pub fn profile_len(&self) -> usize {
        self.values.len()
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.perm.len();
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.values[self.start[i]..self.start[i + 1]];
            let mut sum = y[i];
            for k in fi..i {
                sum -= row[k - fi] * y[k];
            }
            y[i] = sum / row[i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = &self.values[self.start[i]..self.start[i + 1]];
            y[i] /= row[i - fi];
            let yi = y[i];
            for k in fi..i {
                y[k] -= row[k - fi] * yi;
            }
        }
        for (new, &old) in self.perm.iter().enumerate() {
            b[old] = y[new];
        }
    }
}
