//! Small shared helpers: atomic writes, exact float parsing, deterministic
//! parallel map, content digests.

use std::path::Path;

use rayon::prelude::*;

use crate::error::PipelineError;

/// Parse a float written by `format!("{x}")`; round-trips bit-exactly.
pub fn parse_f64(s: &str) -> Result<f64, String> {
    s.parse::<f64>().map_err(|e| format!("bad float {s:?}: {e}"))
}

/// Write via a sibling temp file and rename, so readers never observe a
/// half-written artifact.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
    let io_err = |e: std::io::Error| PipelineError::Io(path.display().to_string(), e.to_string());
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(io_err)?;
        }
    }
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes).map_err(io_err)?;
    std::fs::rename(&tmp, path).map_err(io_err)
}

/// Parallel map that preserves input order in its output, so downstream
/// sequential reductions are bit-deterministic regardless of scheduling.
pub fn par_map_ordered<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    items.par_iter().map(|t| f(t)).collect()
}

/// SHA-256 hex digest of a byte slice.
pub fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    let mut h = Sha256::new();
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Latin-hypercube style sample of `n` points in the box
/// `[lo, hi] x [lo, hi]`: each axis is split into `n` strata, every stratum
/// used exactly once per axis, with seeded jitter inside the stratum.
pub fn latin_hypercube_2d(n: usize, lo: f64, hi: f64, seed: u64) -> Vec<[f64; 2]> {
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    let mut strata_x: Vec<usize> = (0..n).collect();
    let mut strata_y: Vec<usize> = (0..n).collect();
    strata_x.shuffle(&mut rng);
    strata_y.shuffle(&mut rng);
    let w = (hi - lo) / n as f64;
    (0..n)
        .map(|k| {
            let jx: f64 = rng.gen();
            let jy: f64 = rng.gen();
            [
                lo + (strata_x[k] as f64 + jx) * w,
                lo + (strata_y[k] as f64 + jy) * w,
            ]
        })
        .collect()
}
