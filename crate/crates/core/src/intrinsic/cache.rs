//! `EIGB/1`: binary cache of a subject's eigenbasis and colors, keyed by a
//! digest of the mesh it was computed on.
//!
//! Layout (little-endian): magic `EIGB`, u32 version, u32 V, u32 k,
//! 32-byte SHA-256 mesh fingerprint, u32 method (0 dense, 1 iterative),
//! u32 iterations, f64 max residual, u32 P followed by P (u32, u32)
//! near-degenerate pairs, k f64 eigenvalues, V f64 masses, k x V f64
//! eigenvectors, V x 3 f64 colors.

use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::{eigvecs_to_colors, intrinsic_colors, EigenBasis, EigenDiagnostics, IntrinsicColorMap, IntrinsicError, SolverMethod};
use crate::body_model::PosedMesh;
use crate::format::{ByteReader, FormatError};

pub const EIGB_MAGIC: &[u8; 4] = b"EIGB";
pub const EIGB_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct EigenCache {
    pub fingerprint: [u8; 32],
    pub basis: EigenBasis,
    pub colors: IntrinsicColorMap,
}

/// SHA-256 over vertex coordinates (f64 LE) and face indices (u32 LE).
pub fn mesh_fingerprint(mesh: &PosedMesh) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update((mesh.vertices.len() as u64).to_le_bytes());
    for v in &mesh.vertices {
        for c in [v.x, v.y, v.z] {
            h.update(c.to_le_bytes());
        }
    }
    h.update((mesh.faces.len() as u64).to_le_bytes());
    for f in mesh.faces.iter() {
        for &i in f {
            h.update((i as u32).to_le_bytes());
        }
    }
    h.finalize().into()
}

pub fn encode_eigb(cache: &EigenCache) -> Vec<u8> {
    let basis = &cache.basis;
    let n = basis.mass.len();
    let k = basis.eigenvalues.len();
    let mut out = Vec::with_capacity(64 + 8 * (k + n + k * n + 3 * n));
    out.extend_from_slice(EIGB_MAGIC);
    out.extend_from_slice(&EIGB_VERSION.to_le_bytes());
    out.extend_from_slice(&(n as u32).to_le_bytes());
    out.extend_from_slice(&(k as u32).to_le_bytes());
    out.extend_from_slice(&cache.fingerprint);
    let d = &basis.diagnostics;
    let method: u32 = match d.method {
        SolverMethod::Dense => 0,
        SolverMethod::ShiftInvertSubspace => 1,
    };
    out.extend_from_slice(&method.to_le_bytes());
    out.extend_from_slice(&(d.iterations as u32).to_le_bytes());
    out.extend_from_slice(&d.max_residual.to_le_bytes());
    out.extend_from_slice(&(d.near_degenerate.len() as u32).to_le_bytes());
    for &(a, b) in &d.near_degenerate {
        out.extend_from_slice(&(a as u32).to_le_bytes());
        out.extend_from_slice(&(b as u32).to_le_bytes());
    }
    for x in basis
        .eigenvalues
        .iter()
        .chain(&basis.mass)
        .chain(basis.eigenvectors.iter().flatten())
        .chain(cache.colors.colors.iter().flatten())
    {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out
}

pub fn decode_eigb(bytes: &[u8]) -> Result<EigenCache, FormatError> {
    let mut r = ByteReader::new(bytes);
    let magic = r.take(4)?;
    if magic != EIGB_MAGIC {
        return Err(FormatError::SchemaVersion {
            expected: "EIGB/1".into(),
            found: String::from_utf8_lossy(magic).into_owned(),
        });
    }
    let version = r.u32()?;
    if version != EIGB_VERSION {
        return Err(FormatError::SchemaVersion {
            expected: "EIGB/1".into(),
            found: format!("EIGB/{version}"),
        });
    }
    let n = r.u32()? as usize;
    let k = r.u32()? as usize;
    let fingerprint: [u8; 32] = r.take(32)?.try_into().unwrap();
    let method = match r.u32()? {
        0 => SolverMethod::Dense,
        1 => SolverMethod::ShiftInvertSubspace,
        other => return Err(FormatError::Binary(format!("unknown solver method {other}"))),
    };
    let iterations = r.u32()? as usize;
    let max_residual = r.f64()?;
    let pairs = r.u32()? as usize;
    let mut near_degenerate = Vec::with_capacity(pairs.min(64));
    for _ in 0..pairs {
        near_degenerate.push((r.u32()? as usize, r.u32()? as usize));
    }
    let expected = 8 * (k + n + k * n + 3 * n);
    if bytes.len().saturating_sub(r.position()) != expected {
        return Err(FormatError::Binary(format!(
            "payload for V={n}, k={k} needs {expected} bytes, found {}",
            bytes.len().saturating_sub(r.position())
        )));
    }
    let mut read_vec = |len: usize| -> Result<Vec<f64>, FormatError> { (0..len).map(|_| r.f64()).collect() };
    let eigenvalues = read_vec(k)?;
    let mass = read_vec(n)?;
    let eigenvectors = (0..k).map(|_| read_vec(n)).collect::<Result<Vec<_>, _>>()?;
    let flat = read_vec(3 * n)?;
    r.finish()?;
    let colors = flat.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
    Ok(EigenCache {
        fingerprint,
        basis: EigenBasis {
            eigenvalues,
            eigenvectors,
            mass,
            diagnostics: EigenDiagnostics {
                method,
                iterations,
                max_residual,
                near_degenerate,
            },
        },
        colors: IntrinsicColorMap { colors },
    })
}

pub fn write_eigb(path: &Path, cache: &EigenCache) -> Result<(), FormatError> {
    fs::write(path, encode_eigb(cache))?;
    Ok(())
}

pub fn read_eigb(path: &Path) -> Result<EigenCache, FormatError> {
    decode_eigb(&fs::read(path)?)
}

/// Reuses the cache at `path` when its fingerprint matches `mesh`; otherwise
/// computes the basis and (re)writes the cache.
pub fn load_or_compute(path: &Path, mesh: &PosedMesh) -> Result<EigenCache, IntrinsicError> {
    let fingerprint = mesh_fingerprint(mesh);
    if path.exists() {
        if let Ok(cache) = read_eigb(path) {
            if cache.fingerprint == fingerprint && cache.basis.mass.len() == mesh.vertices.len() {
                return Ok(cache);
            }
        }
    }
    let (basis, colors) = intrinsic_colors(mesh)?;
    let cache = EigenCache {
        fingerprint,
        basis,
        colors,
    };
    write_eigb(path, &cache)?;
    Ok(cache)
}

impl EigenCache {
    /// Recomputes colors from the stored basis; used to validate a cache.
    pub fn colors_consistent(&self) -> bool {
        eigvecs_to_colors(&self.basis).map(|c| c == self.colors).unwrap_or(false)
    }
}
