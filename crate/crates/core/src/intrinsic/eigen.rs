//! Smallest non-trivial eigenpairs of `L phi = lambda M phi` for a mesh
//! Laplacian `L` and diagonal lumped mass `M`.
//!
//! Small problems are solved densely through the symmetric reduction
//! `M^-1/2 L M^-1/2`. Larger ones use shift-invert subspace iteration with a
//! Rayleigh-Ritz step on `L`, working in the `M` inner product with the
//! constant mode deflated. A block method is used so repeated eigenvalues
//! (e.g. the three l = 1 modes of a sphere) converge together.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::cholesky::EnvelopeCholesky;
use super::laplacian::SparseSymmetricMatrix;
use super::IntrinsicError;

/// Problems with at most this many vertices are solved densely.
pub const DENSE_LIMIT: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverMethod {
    Dense,
    ShiftInvertSubspace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodChoice {
    /// Dense up to [`DENSE_LIMIT`] vertices, iterative above.
    Auto,
    Dense,
    Iterative,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub method: MethodChoice,
    /// Convergence threshold on `||L phi - lambda M phi|| / ||M phi||`.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            method: MethodChoice::Auto,
            tolerance: 1e-9,
            max_iterations: 400,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenDiagnostics {
    pub method: SolverMethod,
    pub iterations: usize,
    /// Largest relative residual over the returned pairs.
    pub max_residual: f64,
    /// Index pairs (into the returned modes, plus the next one) whose
    /// eigenvalues agree to within 1e-9 relative; their vectors are an
    /// arbitrary basis of the shared eigenspace.
    pub near_degenerate: Vec<(usize, usize)>,
}

/// Eigenvalues ascending, eigenvectors `M`-orthonormal and sign-normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenBasis {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<Vec<f64>>,
    pub mass: Vec<f64>,
    pub diagnostics: EigenDiagnostics,
}

impl EigenBasis {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn mass_inner(&self, a: usize, b: usize) -> f64 {
        mass_dot(&self.mass, &self.eigenvectors[a], &self.eigenvectors[b])
    }
}

fn mass_dot(mass: &[f64], a: &[f64], b: &[f64]) -> f64 {
    mass.iter().zip(a).zip(b).map(|((m, x), y)| m * x * y).sum()
}

/// Flips `v` so its largest-magnitude entry (lowest index on ties) is positive.
pub fn normalize_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

/// `||L x - lambda M x|| / ||M x||`
pub fn relative_residual(l: &SparseSymmetricMatrix, mass: &[f64], lambda: f64, x: &[f64]) -> f64 {
    let mut lx = vec![0.0; x.len()];
    l.mul_vec(x, &mut lx);
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..x.len() {
        let mx = mass[i] * x[i];
        let r = lx[i] - lambda * mx;
        num += r * r;
        den += mx * mx;
    }
    (num / den).sqrt()
}

fn near_degenerate_pairs(values: &[f64]) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for i in 0..values.len() {
        for j in i + 1..values.len() {
            if (values[i] - values[j]).abs() < 1e-9 * values[j].abs() {
                pairs.push((i, j));
            }
        }
    }
    pairs
}

/// The `k` smallest eigenpairs above the constant mode.
pub fn smallest_nontrivial_eigvecs(l: &SparseSymmetricMatrix, mass: &[f64], k: usize) -> Result<EigenBasis, IntrinsicError> {
    smallest_nontrivial_eigvecs_with(l, mass, k, &SolverOptions::default())
}

pub fn smallest_nontrivial_eigvecs_with(
    l: &SparseSymmetricMatrix,
    mass: &[f64],
    k: usize,
    options: &SolverOptions,
) -> Result<EigenBasis, IntrinsicError> {
    let n = l.dim();
    if mass.len() != n {
        return Err(IntrinsicError::InvalidMass(format!(
            "{} mass entries for a {n}x{n} operator",
            mass.len()
        )));
    }
    if let Some(i) = mass.iter().position(|m| !(*m > 0.0) || !m.is_finite()) {
        return Err(IntrinsicError::InvalidMass(format!("vertex {i} has mass {}", mass[i])));
    }
    if k == 0 || n < k + 1 {
        return Err(IntrinsicError::TooFewModes {
            requested: k,
            available: n.saturating_sub(1),
        });
    }

    let dense = match options.method {
        MethodChoice::Auto => n <= DENSE_LIMIT,
        MethodChoice::Dense => true,
        MethodChoice::Iterative => false,
    };
    // Iterative solve needs a block larger than k inside the n - 1
    // non-trivial dimensions.
    let (values, mut vectors, mut diagnostics, next_value) = if dense || n <= k + 2 {
        solve_dense(l, mass, k)?
    } else {
        solve_subspace(l, mass, k, options)?
    };

    for v in vectors.iter_mut() {
        normalize_sign(v);
    }
    let mut probe = values.clone();
    if let Some(next) = next_value {
        probe.push(next);
    }
    diagnostics.near_degenerate = near_degenerate_pairs(&probe);
    diagnostics.max_residual = values
        .iter()
        .zip(&vectors)
        .map(|(lam, v)| relative_residual(l, mass, *lam, v))
        .fold(0.0, f64::max);

    Ok(EigenBasis {
        eigenvalues: values,
        eigenvectors: vectors,
        mass: mass.to_vec(),
        diagnostics,
    })
}

type Solution = (Vec<f64>, Vec<Vec<f64>>, EigenDiagnostics, Option<f64>);

fn zero_mode_check(first_nontrivial: f64, largest: f64, k: usize, n: usize) -> Result<(), IntrinsicError> {
    // A second (near) zero eigenvalue means a disconnected operator.
    if !(first_nontrivial > 1e-10 * largest.abs().max(1.0)) {
        return Err(IntrinsicError::TooFewModes {
            requested: k,
            available: n.saturating_sub(2),
        });
    }
    Ok(())
}

/// Eigenvectors of a symmetric matrix with each eigenvalue recomputed as its
/// column's Rayleigh quotient. nalgebra occasionally returns columns paired
/// with another column's eigenvalue; the vectors themselves are sound.
fn symmetric_eigen(a: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(a.clone());
    let values = (0..a.ncols())
        .map(|c| {
            let v = eig.eigenvectors.column(c);
            v.dot(&(&a * v)) / v.norm_squared()
        })
        .collect();
    (values, eig.eigenvectors)
}

fn solve_dense(l: &SparseSymmetricMatrix, mass: &[f64], k: usize) -> Result<Solution, IntrinsicError> {
    let n = l.dim();
    let inv_sqrt: Vec<f64> = mass.iter().map(|m| 1.0 / m.sqrt()).collect();
    let mut a = DMatrix::zeros(n, n);
    for (i, j, v) in l.entries() {
        a[(i, j)] = v * inv_sqrt[i] * inv_sqrt[j];
    }
    let (rayleigh, eigenvectors) = symmetric_eigen(a);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| rayleigh[x].total_cmp(&rayleigh[y]).then(x.cmp(&y)));

    let largest = rayleigh[order[n - 1]];
    zero_mode_check(rayleigh[order[1]], largest, k, n)?;

    let values: Vec<f64> = order[1..=k].iter().map(|&c| rayleigh[c]).collect();
    let vectors = order[1..=k]
        .iter()
        .map(|&c| (0..n).map(|i| eigenvectors[(i, c)] * inv_sqrt[i]).collect())
        .collect();
    let next = order.get(k + 1).map(|&c| rayleigh[c]);
    let diagnostics = EigenDiagnostics {
        method: SolverMethod::Dense,
        iterations: 1,
        max_residual: 0.0,
        near_degenerate: Vec::new(),
    };
    Ok((values, vectors, diagnostics, next))
}

/// `M`-orthonormalizes `block` against `basis` (already orthonormal) and
/// itself, two passes of modified Gram-Schmidt.
fn mass_orthonormalize(mass: &[f64], constant: &[f64], block: &mut [Vec<f64>], rng: &mut ChaCha8Rng) {
    let n = mass.len();
    for c in 0..block.len() {
        let mut attempts = 0;
        loop {
            for _ in 0..2 {
                let proj = mass_dot(mass, constant, &block[c]);
                for i in 0..n {
                    block[c][i] -= proj * constant[i];
                }
                for p in 0..c {
                    let (done, rest) = block.split_at_mut(c);
                    let proj = mass_dot(mass, &done[p], &rest[0]);
                    for i in 0..n {
                        rest[0][i] -= proj * done[p][i];
                    }
                }
            }
            let norm = mass_dot(mass, &block[c], &block[c]).sqrt();
            if norm > 1e-10 || attempts > 3 {
                for x in block[c].iter_mut() {
                    *x /= norm;
                }
                break;
            }
            // Column collapsed into the span of the others; reseed it.
            attempts += 1;
            for x in block[c].iter_mut() {
                *x = rng.gen_range(-1.0..1.0);
            }
        }
    }
}

fn solve_subspace(l: &SparseSymmetricMatrix, mass: &[f64], k: usize, options: &SolverOptions) -> Result<Solution, IntrinsicError> {
    let n = l.dim();
    let block = (2 * k + 4).min(n - 1);

    // Shift below zero so L - sigma M is positive definite.
    let trace_l: f64 = (0..n).map(|i| l.get(i, i)).sum();
    let total_mass: f64 = mass.iter().sum();
    let shift = 1e-4 * trace_l / total_mass;
    let mut shifted_entries = Vec::with_capacity(l.nnz());
    for (i, j, v) in l.entries() {
        if i < j {
            shifted_entries.push((i, j, v));
        } else if i == j {
            shifted_entries.push((i, i, v + shift * mass[i]));
        }
    }
    let shifted = SparseSymmetricMatrix::from_upper_triplets(n, &shifted_entries);
    let chol = EnvelopeCholesky::factor(&shifted).map_err(|e| IntrinsicError::Factorization {
        pivot: e.pivot,
        value: e.value,
    })?;

    let constant: Vec<f64> = vec![1.0 / total_mass.sqrt(); n];
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_e16e);
    let mut x: Vec<Vec<f64>> = (0..block).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    mass_orthonormalize(mass, &constant, &mut x, &mut rng);

    let mut lx = vec![0.0; n];
    let mut last_residual = f64::INFINITY;
    for iteration in 1..=options.max_iterations {
        // Y = (L - sigma M)^-1 M X
        let mut y: Vec<Vec<f64>> = x
            .iter()
            .map(|col| {
                let mut rhs: Vec<f64> = col.iter().zip(mass).map(|(v, m)| v * m).collect();
                chol.solve_in_place(&mut rhs);
                rhs
            })
            .collect();
        mass_orthonormalize(mass, &constant, &mut y, &mut rng);

        // Rayleigh-Ritz on L within span(Y).
        let ly: Vec<Vec<f64>> = y
            .iter()
            .map(|col| {
                l.mul_vec(col, &mut lx);
                lx.clone()
            })
            .collect();
        let mut h = DMatrix::zeros(block, block);
        for a in 0..block {
            for b in a..block {
                let v: f64 = y[a].iter().zip(&ly[b]).map(|(p, q)| p * q).sum();
                let w: f64 = y[b].iter().zip(&ly[a]).map(|(p, q)| p * q).sum();
                h[(a, b)] = 0.5 * (v + w);
                h[(b, a)] = h[(a, b)];
            }
        }
        let (h_values, h_vectors) = symmetric_eigen(h);
        let mut order: Vec<usize> = (0..block).collect();
        order.sort_by(|&p, &q| h_values[p].total_cmp(&h_values[q]).then(p.cmp(&q)));

        x = order
            .iter()
            .map(|&c| {
                let mut col = vec![0.0; n];
                for (r, yr) in y.iter().enumerate() {
                    let coef = h_vectors[(r, c)];
                    for i in 0..n {
                        col[i] += coef * yr[i];
                    }
                }
                col
            })
            .collect();
        let ritz: Vec<f64> = order.iter().map(|&c| h_values[c]).collect();

        let residual = (0..k).map(|i| relative_residual(l, mass, ritz[i], &x[i])).fold(0.0, f64::max);
        last_residual = residual;
        if residual < options.tolerance {
            zero_mode_check(ritz[0], ritz[block - 1], k, n)?;
            let diagnostics = EigenDiagnostics {
                method: SolverMethod::ShiftInvertSubspace,
                iterations: iteration,
                max_residual: residual,
                near_degenerate: Vec::new(),
            };
            let next = ritz.get(k).copied();
            x.truncate(k);
            return Ok((ritz[..k].to_vec(), x, diagnostics, next));
        }
    }

    Err(IntrinsicError::NonConvergence {
        iterations: options.max_iterations,
        residual: last_residual,
        tolerance: options.tolerance,
    })
}
